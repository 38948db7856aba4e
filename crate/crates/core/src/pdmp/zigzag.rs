use rand::Rng;
use rand_distr::Exp1;

use super::{affine_rate_arrival, EventKind, PdmpPath, PdmpState, Potential, Recorder};
use crate::{Error, Result};

const BOUND_SLACK: f64 = 1e-9;

/// Zig-Zag process with rates `λ_i(x, v) = (v_i ∂_i U(x))₊` on `[0, horizon]`.
pub fn zigzag_simulate<P, R>(target: &P, z0: &PdmpState, horizon: f64, rng: &mut R) -> Result<PdmpPath>
where
    P: Potential + ?Sized,
    R: Rng + ?Sized,
{
    let d = target.dim();
    z0.check_dims(d)?;
    if z0.v.iter().any(|v| v.abs() != 1.0) {
        return Err(Error::InvalidArgument("Zig-Zag velocities must be +1 or -1".into()));
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
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        match hessian {
            Some(h) => {
                for i in 0..d {
                    let hv: f64 = (0..d).map(|j| h[i * d + j] * v[j]).sum();
                    let e: f64 = rng.sample(Exp1);
                    let tau = affine_rate_arrival(v[i] * g[i], v[i] * hv, e);
                    if tau < best.0 {
                        best = (tau, i, 0.0);
                    }
                }
            }
            None => {
                let bounds = target.gradient_bounds(&x, &v).expect("checked above");
                for (i, (a, b)) in bounds.into_iter().enumerate() {
                    let e: f64 = rng.sample(Exp1);
                    let tau = affine_rate_arrival(a, b, e);
                    if tau < best.0 {
                        best = (tau, i, a + b * tau);
                    }
                }
            }
        }
        let (tau, i, bound) = best;
        if !(t + tau < horizon) {
            break;
        }
        t += tau;
        rec.position_at(t, &mut x);
        if hessian.is_some() {
            v[i] = -v[i];
            rec.event(t, &x, &v, EventKind::Flip(i));
            continue;
        }
        target.gradient(&x, &mut g);
        let rate = (v[i] * g[i]).max(0.0);
        if rate > bound * (1.0 + BOUND_SLACK) + BOUND_SLACK {
            return Err(Error::ThinningBoundViolated { rate, bound, time: t });
        }
        if rng.random::<f64>() * bound < rate {
            v[i] = -v[i];
            rec.event(t, &x, &v, EventKind::Flip(i));
        }
    }
    Ok(rec.finish(horizon))
}
