//! Unified trajectories and exact additive functionals `∫ f(X_s) ds`.
//!
//! Three path shapes are supported: jump paths (piecewise constant), PDMP
//! paths (piecewise linear in position, constant velocity per segment) and
//! grid paths from diffusion schemes. [`CumulativeIntegral`] precomputes the
//! running integral at every breakpoint so that any `∫_a^b f` costs one
//! binary search and one partial-piece evaluation.
//!
//! Integration is exact on jump paths, exact for polynomials of degree ≤ 5 on
//! PDMP segments (three-point Gauss–Legendre), and trapezoidal on grid paths.

use std::fmt;
use std::sync::Arc;

use crate::ctmc::JumpPath;
use crate::diffusion::GridPath;
use crate::pdmp::PdmpPath;
use crate::quadrature::{GL3_NODES, GL3_WEIGHTS};
use crate::{Error, Result};

pub const MAX_EXACT_DEGREE: usize = 5;

/// A path on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Jump(JumpPath),
    Pdmp(PdmpPath),
    Grid(GridPath),
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        match self {
            Trajectory::Jump(p) => p.horizon(),
            Trajectory::Pdmp(p) => p.horizon(),
            Trajectory::Grid(p) => p.horizon(),
        }
    }
}

impl From<JumpPath> for Trajectory {
    fn from(p: JumpPath) -> Self {
        Trajectory::Jump(p)
    }
}

impl From<PdmpPath> for Trajectory {
    fn from(p: PdmpPath) -> Self {
        Trajectory::Pdmp(p)
    }
}

impl From<GridPath> for Trajectory {
    fn from(p: GridPath) -> Self {
        Trajectory::Grid(p)
    }
}

pub type PointFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A test function `f` evaluated along a trajectory.
#[derive(Clone)]
pub enum Functional {
    /// `f ≡ c` on any path.
    Constant(f64),
    /// A value per state of a finite chain.
    State(Vec<f64>),
    /// `Σ_k c_k x_i^k` in position coordinate `coord` (degree ≤ 5).
    Polynomial { coord: usize, coeffs: Vec<f64> },
    /// Arbitrary `f(x, v)`; grid paths pass an empty velocity.
    Custom(PointFn),
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Constant(c) => write!(f, "Constant({c})"),
            Functional::State(v) => f.debug_tuple("State").field(v).finish(),
            Functional::Polynomial { coord, coeffs } => {
                f.debug_struct("Polynomial").field("coord", coord).field("coeffs", coeffs).finish()
            }
            Functional::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Functional {
    /// Indicator of a set of states in an `n`-state chain.
    pub fn indicator(n: usize, states: &[usize]) -> Self {
        let mut v = vec![0.0; n];
        for &s in states {
            v[s] = 1.0;
        }
        Functional::State(v)
    }

    /// `f(x) = x_coord`.
    pub fn coordinate(coord: usize) -> Self {
        Functional::Polynomial { coord, coeffs: vec![0.0, 1.0] }
    }

    /// `f(x) = x_coord^k`.
    pub fn monomial(coord: usize, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Functional::Polynomial { coord, coeffs }
    }

    pub fn custom<F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Functional::Custom(Arc::new(f))
    }

    /// `scale · f + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        match self {
            Functional::Constant(c) => Functional::Constant(scale * c + shift),
            Functional::State(v) => Functional::State(v.iter().map(|x| scale * x + shift).collect()),
            Functional::Polynomial { coord, coeffs } => {
                let mut c: Vec<f64> = coeffs.iter().map(|x| scale * x).collect();
                if c.is_empty() {
                    c.push(0.0);
                }
                c[0] += shift;
                Functional::Polynomial { coord: *coord, coeffs: c }
            }
            Functional::Custom(g) => {
                let g = Arc::clone(g);
                Functional::custom(move |x, v| scale * g(x, v) + shift)
            }
        }
    }

    /// Value at a point of a continuous-state path.
    pub fn eval_point(&self, x: &[f64], v: &[f64]) -> f64 {
        match self {
            Functional::Constant(c) => *c,
            Functional::State(_) => f64::NAN,
            Functional::Polynomial { coord, coeffs } => horner(coeffs, x[*coord]),
            Functional::Custom(g) => g(x, v),
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

enum Pieces<'a> {
    /// Constant rate on each piece.
    Constant(Vec<f64>),
    /// Integrand values at the nodes, interpolated linearly.
    Linear(Vec<f64>),
    /// Linear flow of a PDMP segment.
    Flow { path: &'a PdmpPath, f: &'a Functional },
}

/// Running integral `F(t) = ∫₀^t f(X_s) ds` with exact values at breakpoints.
pub struct CumulativeIntegral<'a> {
    times: Vec<f64>,
    cum: Vec<f64>,
    pieces: Pieces<'a>,
}

impl<'a> CumulativeIntegral<'a> {
    pub fn new(traj: &'a Trajectory, f: &'a Functional) -> Result<Self> {
        match traj {
            Trajectory::Jump(p) => {
                let rates: Vec<f64> = match f {
                    Functional::Constant(c) => vec![*c; p.len()],
                    Functional::State(vals) => {
                        let mut r = Vec::with_capacity(p.len());
                        for &s in p.states() {
                            r.push(*vals.get(s).ok_or(Error::IncompatibleFunctional(
                                "state functional shorter than the state space",
                            ))?);
                        }
                        r
                    }
                    _ => return Err(Error::IncompatibleFunctional("jump paths need a state or constant functional")),
                };
                let mut times = p.starts().to_vec();
                times.push(p.horizon());
                let mut cum = Vec::with_capacity(times.len());
                cum.push(0.0);
                let mut acc = 0.0;
                for (k, r) in rates.iter().enumerate() {
                    acc += r * (times[k + 1] - times[k]);
                    cum.push(acc);
                }
                Ok(Self { times, cum, pieces: Pieces::Constant(rates) })
            }
            Trajectory::Grid(g) => {
                let vals: Vec<f64> = match f {
                    Functional::Constant(c) => vec![*c; g.values().len()],
                    Functional::Polynomial { coord, coeffs } => {
                        if *coord != 0 {
                            return Err(Error::IncompatibleFunctional("grid paths are one-dimensional"));
                        }
                        g.values().iter().map(|x| horner(coeffs, *x)).collect()
                    }
                    Functional::Custom(h) => g.values().iter().map(|x| h(std::slice::from_ref(x), &[])).collect(),
                    Functional::State(_) => {
                        return Err(Error::IncompatibleFunctional("state functionals need a jump path"))
                    }
                };
                let times: Vec<f64> = (0..vals.len()).map(|k| g.time(k)).collect();
                let mut cum = Vec::with_capacity(vals.len());
                cum.push(0.0);
                let mut acc = 0.0;
                for k in 1..vals.len() {
                    acc += 0.5 * (vals[k - 1] + vals[k]) * (times[k] - times[k - 1]);
                    cum.push(acc);
                }
                Ok(Self { times, cum, pieces: Pieces::Linear(vals) })
            }
            Trajectory::Pdmp(p) => {
                match f {
                    Functional::State(_) => {
                        return Err(Error::IncompatibleFunctional("state functionals need a jump path"))
                    }
                    Functional::Polynomial { coord, coeffs } => {
                        if *coord >= p.dim() {
                            return Err(Error::IncompatibleFunctional("polynomial coordinate exceeds dimension"));
                        }
                        if coeffs.len() > MAX_EXACT_DEGREE + 1 {
                            return Err(Error::IncompatibleFunctional("polynomial degree above 5"));
                        }
                    }
                    _ => {}
                }
                let mut this = Self { times: p.times().to_vec(), cum: Vec::new(), pieces: Pieces::Flow { path: p, f } };
                let mut cum = Vec::with_capacity(this.times.len());
                cum.push(0.0);
                let mut acc = 0.0;
                for k in 0..this.times.len() - 1 {
                    acc += this.partial(k, this.times[k + 1] - this.times[k]);
                    cum.push(acc);
                }
                this.cum = cum;
                Ok(this)
            }
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Breakpoints `0 = t_0 < … < t_m = T`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `F(t_k)` at the breakpoints.
    pub fn values(&self) -> &[f64] {
        &self.cum
    }

    /// `∫` over the first `s` time units of piece `k`.
    fn partial(&self, k: usize, s: f64) -> f64 {
        match &self.pieces {
            Pieces::Constant(r) => r[k] * s,
            Pieces::Linear(vals) => {
                let dt = self.times[k + 1] - self.times[k];
                let slope = (vals[k + 1] - vals[k]) / dt;
                vals[k] * s + 0.5 * slope * s * s
            }
            Pieces::Flow { path, f } => {
                let (x0, v) = path.segment(k);
                let half = 0.5 * s;
                let mut x = vec![0.0; x0.len()];
                let mut acc = 0.0;
                for (node, w) in GL3_NODES.iter().zip(GL3_WEIGHTS) {
                    let tau = half * (1.0 + node);
                    for i in 0..x.len() {
                        x[i] = x0[i] + v[i] * tau;
                    }
                    acc += w * f.eval_point(&x, v);
                }
                acc * half
            }
        }
    }

    /// `F(t)` for `t ∈ [0, T]`.
    pub fn at(&self, t: f64) -> Result<f64> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t <= horizon) {
            return Err(Error::OutOfRange { a: t, b: t, horizon });
        }
        let k = self.times.partition_point(|s| *s <= t);
        if k == self.times.len() {
            return Ok(*self.cum.last().unwrap());
        }
        let k = k - 1;
        let s = t - self.times[k];
        if s == 0.0 {
            return Ok(self.cum[k]);
        }
        Ok(self.cum[k] + self.partial(k, s))
    }

    /// `∫_a^b f(X_s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let horizon = self.horizon();
        if !(0.0 <= a && a <= b && b <= horizon) {
            return Err(Error::OutOfRange { a, b, horizon });
        }
        Ok(self.at(b)? - self.at(a)?)
    }
}

/// `∫_a^b f(X_s) ds` along `traj`.
pub fn integrate_functional(traj: &Trajectory, f: &Functional, a: f64, b: f64) -> Result<f64> {
    CumulativeIntegral::new(traj, f)?.integral(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdmp::{EventKind, PdmpPath};
    use approx::assert_abs_diff_eq;

    fn jump() -> Trajectory {
        JumpPath::new(vec![0, 1, 0], vec![0.0, 2.0, 2.5], 4.0).unwrap().into()
    }

    #[test]
    fn jump_path_integrals() {
        let t = jump();
        let f = Functional::indicator(2, &[0]);
        assert_abs_diff_eq!(integrate_functional(&t, &f, 0.0, 2.0).unwrap(), 2.0);
        assert_abs_diff_eq!(integrate_functional(&t, &f, 1.0, 3.0).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(integrate_functional(&t, &f, 0.0, 4.0).unwrap(), 3.5, epsilon = 1e-15);
        assert!(matches!(integrate_functional(&t, &f, 0.0, 4.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(integrate_functional(&t, &f, 2.0, 1.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(
            integrate_functional(&t, &Functional::coordinate(0), 0.0, 1.0),
            Err(Error::IncompatibleFunctional(_))
        ));
    }

    #[test]
    fn linear_segment_integral() {
        let path = PdmpPath::from_parts(
            1,
            vec![0.0, 3.0],
            vec![0.5, 0.5 + 1.5 * 3.0],
            vec![1.5, 1.5],
            vec![EventKind::Start, EventKind::End],
        )
        .unwrap();
        let t: Trajectory = path.into();
        let got = integrate_functional(&t, &Functional::coordinate(0), 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(got, 0.5 * 2.0 + 1.5 * 4.0 / 2.0, epsilon = 1e-14);
        // x^4 is integrated exactly: ∫_0^2 (0.5 + 1.5 s)^4 ds
        let exact = ((0.5f64 + 3.0).powi(5) - 0.5f64.powi(5)) / (5.0 * 1.5);
        let got = integrate_functional(&t, &Functional::monomial(0, 4), 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(got, exact, epsilon = 1e-11);
    }

    #[test]
    fn additivity_on_jump_path() {
        let t = jump();
        let f = Functional::State(vec![0.3, -1.7]);
        let c = CumulativeIntegral::new(&t, &f).unwrap();
        for (a, b, e) in [(0.0, 1.0, 3.7), (0.4, 2.2, 2.6), (1.9, 2.5, 4.0)] {
            let lhs = c.integral(a, e).unwrap();
            let rhs = c.integral(a, b).unwrap() + c.integral(b, e).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn affine_transform() {
        let f = Functional::State(vec![1.0, 2.0]).affine(3.0, -1.0);
        match f {
            Functional::State(v) => assert_eq!(v, vec![2.0, 5.0]),
            _ => unreachable!(),
        }
        let p = Functional::coordinate(0).affine(2.0, 1.0);
        assert_eq!(p.eval_point(&[3.0], &[]), 7.0);
        let c = Functional::custom(|x, _| x[0] * x[0]).affine(2.0, 1.0);
        assert_eq!(c.eval_point(&[3.0], &[]), 19.0);
    }
}
