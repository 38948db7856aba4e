//! Piecewise-deterministic samplers: Zig-Zag and the bouncy particle sampler.
//!
//! Both processes move in straight lines, `dX/dt = V`, and change velocity
//! only at random events. Paths are stored event-sparse: the position and
//! velocity at every event, plus the event kind. Downstream estimators
//! integrate along the exact segments.
//!
//! Event times are drawn by exact inversion of the integrated rate when the
//! target declares an affine gradient (Gaussian targets) and otherwise by
//! Poisson thinning against declared affine dominating rates. A sampled true
//! rate above its bound is an error.

mod bps;
mod path;
mod targets;
mod zigzag;

pub use bps::{bps_simulate, reflect_velocity, VelocityLaw};
pub use path::{EventKind, PdmpPath};
pub use targets::{check_gradient, CustomTarget, GaussianTarget, Potential, SechTarget};
pub use zigzag::zigzag_simulate;

use crate::trajectory::{integrate_functional, Functional, Trajectory};
use crate::{Error, Result};

/// Position and velocity `(x, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdmpState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PdmpState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        Self { x, v }
    }

    fn check_dims(&self, d: usize) -> Result<()> {
        if self.x.len() != d || self.v.len() != d {
            return Err(Error::InvalidArgument(format!(
                "state has dimensions ({}, {}), target has {d}",
                self.x.len(),
                self.v.len()
            )));
        }
        if self.x.iter().chain(&self.v).any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("state must be finite".into()));
        }
        Ok(())
    }
}

/// Smallest `τ ≥ 0` with `∫₀^τ (a + b s)₊ ds = e`, or `+∞` if the rate
/// integrates to less than `e`.
pub fn affine_rate_arrival(a: f64, b: f64, e: f64) -> f64 {
    if b == 0.0 {
        return if a > 0.0 { e / a } else { f64::INFINITY };
    }
    if b > 0.0 {
        if a >= 0.0 {
            2.0 * e / (a + (a * a + 2.0 * b * e).sqrt())
        } else {
            -a / b + (2.0 * e / b).sqrt()
        }
    } else {
        if a <= 0.0 {
            return f64::INFINITY;
        }
        let disc = a * a + 2.0 * b * e;
        if disc <= 0.0 {
            f64::INFINITY
        } else {
            2.0 * e / (a + disc.sqrt())
        }
    }
}

/// `μ̂_T(f) = (1/T) ∫₀^T f(X_s, V_s) ds`.
pub fn ergodic_average(path: &PdmpPath, f: &Functional) -> Result<f64> {
    let t = path.horizon();
    let traj = Trajectory::Pdmp(path.clone());
    Ok(integrate_functional(&traj, f, 0.0, t)? / t)
}

/// Shared bookkeeping: every position is computed from the last recorded
/// event, so recorded endpoints satisfy `x_{k+1} = x_k + v_k (t_{k+1} - t_k)`
/// exactly.
pub(crate) struct Recorder {
    d: usize,
    times: Vec<f64>,
    positions: Vec<f64>,
    velocities: Vec<f64>,
    kinds: Vec<EventKind>,
}

impl Recorder {
    pub(crate) fn new(z0: &PdmpState) -> Self {
        Self {
            d: z0.x.len(),
            times: vec![0.0],
            positions: z0.x.clone(),
            velocities: z0.v.clone(),
            kinds: vec![EventKind::Start],
        }
    }

    pub(crate) fn position_at(&self, t: f64, out: &mut [f64]) {
        let k = self.times.len() - 1;
        let dt = t - self.times[k];
        let x = &self.positions[k * self.d..(k + 1) * self.d];
        let v = &self.velocities[k * self.d..(k + 1) * self.d];
        for i in 0..self.d {
            out[i] = x[i] + v[i] * dt;
        }
    }

    pub(crate) fn event(&mut self, t: f64, x: &[f64], v: &[f64], kind: EventKind) {
        self.times.push(t);
        self.positions.extend_from_slice(x);
        self.velocities.extend_from_slice(v);
        self.kinds.push(kind);
    }

    pub(crate) fn finish(mut self, horizon: f64) -> PdmpPath {
        let mut x = vec![0.0; self.d];
        self.position_at(horizon, &mut x);
        let k = self.times.len() - 1;
        let v = self.velocities[k * self.d..(k + 1) * self.d].to_vec();
        self.event(horizon, &x, &v, EventKind::End);
        PdmpPath::from_raw(self.d, self.times, self.positions, self.velocities, self.kinds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn integrated(a: f64, b: f64, tau: f64) -> f64 {
        crate::quadrature::integrate(|s| (a + b * s).max(0.0), 0.0, tau, crate::quadrature::Tolerance::default())
            .unwrap()
    }

    #[test]
    fn arrival_inverts_integrated_rate() {
        for (a, b, e) in [(1.0, 0.0, 0.7), (0.0, 1.0, 2.0), (0.5, 2.0, 0.3), (-1.0, 2.0, 1.1), (2.0, -1.0, 1.5)] {
            let tau = affine_rate_arrival(a, b, e);
            assert!(tau.is_finite());
            assert_abs_diff_eq!(integrated(a, b, tau), e, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(affine_rate_arrival(0.0, 1.0, 2.0), 2.0, epsilon = 1e-15);
        assert!(affine_rate_arrival(2.0, -1.0, 2.5).is_infinite());
        assert!(affine_rate_arrival(-1.0, 0.0, 0.1).is_infinite());
        assert!(affine_rate_arrival(-1.0, -1.0, 0.1).is_infinite());
    }

    #[test]
    fn ergodic_average_closed_form() {
        let p = PdmpPath::from_parts(1, vec![0.0, 2.0], vec![1.0, -1.0], vec![-1.0, -1.0], vec![EventKind::Start, EventKind::End])
            .unwrap();
        assert_abs_diff_eq!(ergodic_average(&p, &Functional::coordinate(0)).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ergodic_average(&p, &Functional::Constant(2.5)).unwrap(), 2.5, epsilon = 1e-15);
    }
}
