use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{affine_rate_arrival, EventKind, PdmpPath, PdmpState, Potential, Recorder};
use crate::{Error, Result};

const BOUND_SLACK: f64 = 1e-9;

/// Law of refreshed velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityLaw {
    #[default]
    UnitSphere,
    Gaussian,
}

impl VelocityLaw {
    pub fn draw<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Vec<f64> {
        loop {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            if *self == VelocityLaw::Gaussian {
                return v;
            }
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|c| *c /= norm);
                return v;
            }
        }
    }
}

/// `v − 2 (v·g)/|g|² g`, or [`Error::ZeroGradient`] when `g = 0`.
pub fn reflect_velocity(v: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    let gg: f64 = g.iter().map(|c| c * c).sum();
    if gg == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let vg: f64 = v.iter().zip(g).map(|(a, b)| a * b).sum();
    let c = 2.0 * vg / gg;
    Ok(v.iter().zip(g).map(|(a, b)| a - c * b).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bouncy particle sampler: bounces at rate `(v·∇U)₊`, refreshments at a
/// constant rate. A bounce where `∇U = 0` is recorded as a refreshment.
pub fn bps_simulate<P, R>(
    target: &P,
    refresh_rate: f64,
    law: VelocityLaw,
    z0: &PdmpState,
    horizon: f64,
    rng: &mut R,
) -> Result<PdmpPath>
where
    P: Potential + ?Sized,
    R: Rng + ?Sized,
{
    let d = target.dim();
    z0.check_dims(d)?;
    let vnorm = dot(&z0.v, &z0.v).sqrt();
    if !(vnorm > 0.0) || !vnorm.is_finite() {
        return Err(Error::InvalidArgument("velocity must have positive finite norm".into()));
    }
    if !(refresh_rate > 0.0) || !refresh_rate.is_finite() {
        return Err(Error::InvalidArgument(format!("refresh rate must be positive, got {refresh_rate}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let hessian = target.hessian();
    if hessian.is_none() && target.gradient_bounds(&z0.x, &z0.v).is_none() {
        return Err(Error::InvalidArgument("target declares neither an affine gradient nor rate bounds".into()));
    }
    let mut rec = Recorder::new(z0);
    let mut x = z0.x.clone();
    let mut v = z0.v.clone();
    let mut g = vec![0.0; d];
    let mut t = 0.0;
    loop {
        target.gradient(&x, &mut g);
        let e: f64 = rng.sample(Exp1);
        let (tau_b, bound) = match hessian {
            Some(h) => {
                let hv: Vec<f64> = (0..d).map(|i| dot(&h[i * d..(i + 1) * d], &v)).collect();
                (affine_rate_arrival(dot(&v, &g), dot(&v, &hv), e), 0.0)
            }
            None => {
                let bounds = target.gradient_bounds(&x, &v).expect("checked above");
                let (a, b) = bounds
                    .iter()
                    .zip(&v)
                    .fold((0.0, 0.0), |(a, b), ((ai, bi), vi)| (a + vi.abs() * ai, b + vi.abs() * bi));
                let tau = affine_rate_arrival(a, b, e);
                (tau, a + b * tau)
            }
        };
        let tau_r = rng.sample::<f64, _>(Exp1) / refresh_rate;
        let tau = tau_b.min(tau_r);
        if !(t + tau < horizon) {
            break;
        }
        t += tau;
        rec.position_at(t, &mut x);
        if tau_r <= tau_b {
            v = law.draw(d, rng);
            rec.event(t, &x, &v, EventKind::Refresh);
            continue;
        }
        target.gradient(&x, &mut g);
        if hessian.is_none() {
            let rate = dot(&v, &g).max(0.0);
            if rate > bound * (1.0 + BOUND_SLACK) + BOUND_SLACK {
                return Err(Error::ThinningBoundViolated { rate, bound, time: t });
            }
            if !(rng.random::<f64>() * bound < rate) {
                continue;
            }
        }
        match reflect_velocity(&v, &g) {
            Ok(w) => {
                v = w;
                rec.event(t, &x, &v, EventKind::Bounce);
            }
            Err(Error::ZeroGradient) => {
                v = law.draw(d, rng);
                rec.event(t, &x, &v, EventKind::Refresh);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rec.finish(horizon))
}
