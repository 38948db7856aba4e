//! One-dimensional diffusions `dX = b(X) dt + σ(X) dW`.
//!
//! Exact Ornstein–Uhlenbeck sampling, an Euler–Maruyama scheme, and the
//! scale and speed transforms that govern recurrence and the invariant law.
//! Speed densities use the derivative form `m(u) = 1/(s'(u) σ²(u))`, which
//! reproduces the stationary density of the OU process.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::quadrature::{integrate, integrate_real_line, integrate_to_infinity, Tolerance};
use crate::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const DEFAULT_BLOWUP_GUARD: f64 = 1e8;

/// Drift, volatility, state-space bounds and the reference point of the
/// scale integral.
#[derive(Clone)]
pub struct SdeModel {
    drift: ScalarFn,
    vol: ScalarFn,
    lower: f64,
    upper: f64,
    x_ref: f64,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("x_ref", &self.x_ref)
            .finish_non_exhaustive()
    }
}

impl SdeModel {
    /// Checks `σ > 0` and finiteness of `b`, `σ` on a probe grid of the
    /// state space.
    pub fn new<B, S>(drift: B, vol: S, lower: f64, upper: f64, x_ref: f64) -> Result<Self>
    where
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lower < upper) || !(x_ref > lower && x_ref < upper) {
            return Err(Error::InvalidModel(format!("need lower < x_ref < upper, got {lower} < {x_ref} < {upper}")));
        }
        let m = Self { drift: Arc::new(drift), vol: Arc::new(vol), lower, upper, x_ref };
        for p in m.probe_grid() {
            let s = (m.vol)(p);
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidModel(format!("volatility {s} at {p} is not positive")));
            }
            if !(m.drift)(p).is_finite() {
                return Err(Error::InvalidModel(format!("drift not finite at {p}")));
            }
        }
        Ok(m)
    }

    /// A model whose volatility may vanish. Only path simulation is
    /// meaningful; scale and speed computations will fail where `σ = 0`.
    pub fn degenerate<B, S>(drift: B, vol: S) -> Self
    where
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { drift: Arc::new(drift), vol: Arc::new(vol), lower: f64::NEG_INFINITY, upper: f64::INFINITY, x_ref: 0.0 }
    }

    /// `dX = -θ X dt + σ dW`.
    pub fn ornstein_uhlenbeck(theta: f64, sigma: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::InvalidModel(format!("theta must be positive, got {theta}")));
        }
        Self::new(move |x| -theta * x, move |_| sigma, f64::NEG_INFINITY, f64::INFINITY, 0.0)
    }

    /// `dX = σ dW`.
    pub fn brownian(sigma: f64) -> Result<Self> {
        Self::new(|_| 0.0, move |_| sigma, f64::NEG_INFINITY, f64::INFINITY, 0.0)
    }

    /// `dX = (X − X³) dt + σ dW`.
    pub fn double_well(sigma: f64) -> Result<Self> {
        Self::new(|x| x - x * x * x, move |_| sigma, f64::NEG_INFINITY, f64::INFINITY, 0.0)
    }

    /// `dX = κ X dt + σ dW` with `κ > 0`; transient.
    pub fn repelling(kappa: f64, sigma: f64) -> Result<Self> {
        Self::new(move |x| kappa * x, move |_| sigma, f64::NEG_INFINITY, f64::INFINITY, 0.0)
    }

    pub fn with_reference(mut self, x_ref: f64) -> Result<Self> {
        if !(x_ref > self.lower && x_ref < self.upper) {
            return Err(Error::InvalidArgument(format!("reference point {x_ref} outside the state space")));
        }
        self.x_ref = x_ref;
        Ok(self)
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    pub fn vol(&self, x: f64) -> f64 {
        (self.vol)(x)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn x_ref(&self) -> f64 {
        self.x_ref
    }

    fn probe_grid(&self) -> Vec<f64> {
        let mut pts = vec![self.x_ref];
        for k in -3..=3 {
            let h = 10f64.powi(k);
            pts.push(self.x_ref - h);
            pts.push(self.x_ref + h);
        }
        if self.lower.is_finite() && self.upper.is_finite() {
            pts.extend((1..100).map(|i| self.lower + (self.upper - self.lower) * i as f64 / 100.0));
        }
        pts.retain(|p| *p > self.lower && *p < self.upper);
        pts
    }

    fn check_inside(&self, u: f64) -> Result<()> {
        if !(u > self.lower && u < self.upper) {
            return Err(Error::InvalidArgument(format!("{u} outside the state space ({}, {})", self.lower, self.upper)));
        }
        Ok(())
    }

    /// `∫_{x_ref}^z 2 b(y)/σ²(y) dy`.
    fn log_density_integral(&self, z: f64) -> Result<f64> {
        integrate(
            |y| {
                let s = self.vol(y);
                2.0 * self.drift(y) / (s * s)
            },
            self.x_ref,
            z,
            Tolerance { rel: 1e-12, abs: 1e-14, max_intervals: 2000 },
        )
    }

    /// Scale density `s'(z) = exp(−∫_{x_ref}^z 2b/σ²)`.
    pub fn scale_density(&self, z: f64) -> Result<f64> {
        let v = (-self.log_density_integral(z)?).exp();
        if !v.is_finite() {
            return Err(Error::QuadratureFailure(format!("scale density overflows at {z}")));
        }
        Ok(v)
    }
}

/// Nested adaptive quadrature for the scale function
/// `s(u) = ∫_{x_ref}^u exp[−∫_{x_ref}^z 2b/σ²] dz`, relative tolerance `1e-8`
/// or better.
pub fn scale_function(model: &SdeModel, u: f64) -> Result<f64> {
    model.check_inside(u)?;
    let mut failure = None;
    let v = integrate(
        |z| match model.scale_density(z) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        model.x_ref,
        u,
        Tolerance { rel: 1e-10, abs: 0.0, max_intervals: 2000 },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    v
}

/// Speed density `m(u) = exp(∫_{x_ref}^u 2b/σ²) / σ²(u)`.
pub fn speed_density(model: &SdeModel, u: f64) -> Result<f64> {
    model.check_inside(u)?;
    let s = model.vol(u);
    let v = model.log_density_integral(u)?.exp() / (s * s);
    if !v.is_finite() {
        return Err(Error::QuadratureFailure(format!("speed density not finite at {u}")));
    }
    Ok(v)
}

/// `∫ m(u) du` over the state space; finite iff the diffusion is positive
/// recurrent.
pub fn speed_measure_total(model: &SdeModel) -> Result<f64> {
    let tol = Tolerance { rel: 1e-10, abs: 1e-300, max_intervals: 4000 };
    let m = |u: f64| speed_density(model, u).unwrap_or(f64::NAN);
    match (model.lower.is_finite(), model.upper.is_finite()) {
        (false, false) => integrate_real_line(m, tol),
        (true, true) => integrate(m, model.lower, model.upper, tol),
        (true, false) => integrate_to_infinity(m, model.lower, tol),
        (false, true) => integrate_to_infinity(|t| m(-t), -model.upper, tol),
    }
}

/// Side of the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Lower,
    Upper,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RecurrenceVerdict {
    DivergesBothTails,
    InconclusiveTail(Side),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport {
    /// `(u, s(u))` at each probe.
    pub points: Vec<(f64, f64)>,
    pub verdict: RecurrenceVerdict,
}

/// Tail heuristic for `s(±∞) = ±∞`: a side counts as divergent when `|s|`
/// grows across the two outermost probes and the scale density does not
/// decay there. No limit is claimed.
pub fn recurrence_check(model: &SdeModel, probes: &[f64]) -> Result<RecurrenceReport> {
    if probes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("probe grid must be strictly increasing".into()));
    }
    let below: Vec<f64> = probes.iter().copied().filter(|p| *p < model.x_ref).collect();
    let above: Vec<f64> = probes.iter().copied().filter(|p| *p > model.x_ref).collect();
    if below.len() < 2 || above.len() < 2 {
        return Err(Error::InvalidArgument("probe grid must reach both tails with two points each".into()));
    }
    let mut points = Vec::with_capacity(probes.len());
    for &p in probes {
        let s = scale_function(model, p)?;
        if !s.is_finite() {
            return Err(Error::QuadratureFailure(format!("scale function not finite at {p}")));
        }
        points.push((p, s));
    }
    let diverges = |inner: f64, outer: f64| -> Result<bool> {
        let s_in = scale_function(model, inner)?.abs();
        let s_out = scale_function(model, outer)?.abs();
        let d_in = model.scale_density(inner)?;
        let d_out = model.scale_density(outer)?;
        Ok(s_out > s_in && d_out >= d_in * (1.0 - 1e-9))
    };
    let low = diverges(below[1], below[0])?;
    let high = diverges(above[above.len() - 2], above[above.len() - 1])?;
    let verdict = match (low, high) {
        (true, true) => RecurrenceVerdict::DivergesBothTails,
        (false, true) => RecurrenceVerdict::InconclusiveTail(Side::Lower),
        (true, false) => RecurrenceVerdict::InconclusiveTail(Side::Upper),
        (false, false) => RecurrenceVerdict::InconclusiveTail(Side::Both),
    };
    Ok(RecurrenceReport { points, verdict })
}

/// Values on the grid `kΔ`, `k = 0..m`, with horizon `mΔ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    step: f64,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid path needs a positive step and >= 2 finite values".into()));
        }
        Ok(Self { step, values })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// CSV with columns `t, x`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x"])?;
        for (k, x) in self.values.iter().enumerate() {
            w.write_record([self.time(k).to_string(), x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn grid_steps(horizon: f64, delta: f64) -> Result<usize> {
    if !(delta > 0.0) || !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("need T > 0 and delta > 0, got T = {horizon}, delta = {delta}")));
    }
    let m = (horizon / delta).round();
    if m < 1.0 || m > 1e10 {
        return Err(Error::InvalidArgument(format!("T/delta = {m} steps is out of range")));
    }
    Ok(m as usize)
}

/// Exact OU transition `X_{t+Δ} | X_t = x ~ N(x e^{−θΔ}, σ²(1 − e^{−2θΔ})/(2θ))`.
pub fn ou_simulate_exact<R: Rng + ?Sized>(
    theta: f64,
    sigma: f64,
    x0: f64,
    horizon: f64,
    delta: f64,
    rng: &mut R,
) -> Result<GridPath> {
    if !(theta > 0.0 && sigma > 0.0) || !x0.is_finite() {
        return Err(Error::InvalidArgument("need theta > 0, sigma > 0 and finite x0".into()));
    }
    let m = grid_steps(horizon, delta)?;
    let (a, sd) = ou_transition(theta, sigma, delta);
    let mut values = Vec::with_capacity(m + 1);
    let mut x = x0;
    values.push(x);
    for _ in 0..m {
        let z: f64 = rng.sample(StandardNormal);
        x = a * x + sd * z;
        values.push(x);
    }
    GridPath::new(delta, values)
}

/// Mean factor `e^{−θΔ}` and standard deviation of one exact OU step.
pub fn ou_transition(theta: f64, sigma: f64, delta: f64) -> (f64, f64) {
    let a = (-theta * delta).exp();
    let var = sigma * sigma * (-(-2.0 * theta * delta).exp_m1()) / (2.0 * theta);
    (a, var.sqrt())
}

/// Draw from the OU stationary law `N(0, σ²/(2θ))`.
pub fn ou_stationary_draw<R: Rng + ?Sized>(theta: f64, sigma: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sigma / (2.0 * theta).sqrt()
}

/// `X_{k+1} = X_k + b(X_k)Δ + σ(X_k)√Δ ξ_k`, failing once `|X_k|` exceeds `1e8`.
pub fn euler_maruyama<R: Rng + ?Sized>(model: &SdeModel, x0: f64, horizon: f64, delta: f64, rng: &mut R) -> Result<GridPath> {
    euler_maruyama_guarded(model, x0, horizon, delta, DEFAULT_BLOWUP_GUARD, rng)
}

pub fn euler_maruyama_guarded<R: Rng + ?Sized>(
    model: &SdeModel,
    x0: f64,
    horizon: f64,
    delta: f64,
    guard: f64,
    rng: &mut R,
) -> Result<GridPath> {
    let m = grid_steps(horizon, delta)?;
    let sq = delta.sqrt();
    let mut values = Vec::with_capacity(m + 1);
    let mut x = x0;
    values.push(x);
    for step in 1..=m {
        let z: f64 = rng.sample(StandardNormal);
        x = x + model.drift(x) * delta + model.vol(x) * sq * z;
        if !(x.abs() <= guard) {
            return Err(Error::NumericalBlowup { value: x, step });
        }
        values.push(x);
    }
    GridPath::new(delta, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    /// `∫₀^u e^{z²/2} dz` by its power series.
    fn ou_scale_series(u: f64) -> f64 {
        let mut term = u;
        let mut sum = 0.0;
        for k in 0..200 {
            sum += term / (2 * k + 1) as f64;
            term *= u * u / (2.0 * (k + 1) as f64);
        }
        sum
    }

    #[test]
    fn scale_function_examples() {
        let bm = SdeModel::brownian(1.0).unwrap();
        for u in [-3.0, 0.0, 0.5, 7.0] {
            assert_relative_eq!(scale_function(&bm, u).unwrap(), u, max_relative = 1e-12);
        }
        let ou = SdeModel::ornstein_uhlenbeck(1.0, 2f64.sqrt()).unwrap();
        for u in [-4.0, -1.0, 0.3, 2.0, 5.0] {
            assert_relative_eq!(scale_function(&ou, u).unwrap(), ou_scale_series(u), max_relative = 1e-8);
        }
        assert_eq!(scale_function(&ou, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn scale_function_reference_shift() {
        let dw = SdeModel::double_well(1.0).unwrap();
        let a = dw.clone();
        let b = dw.with_reference(0.7).unwrap();
        let s_ab = scale_function(&a, 0.7).unwrap();
        let slope = a.scale_density(0.7).unwrap();
        for u in [-1.2, 0.1, 0.7, 1.5] {
            let lhs = scale_function(&a, u).unwrap() - s_ab;
            let rhs = slope * scale_function(&b, u).unwrap();
            assert!((lhs - rhs).abs() < 1e-7, "{u}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn speed_density_examples() {
        let bm = SdeModel::brownian(1.0).unwrap();
        assert_relative_eq!(speed_density(&bm, 12.0).unwrap(), 1.0, max_relative = 1e-12);
        let ou = SdeModel::ornstein_uhlenbeck(1.0, 2f64.sqrt()).unwrap();
        let total = speed_measure_total(&ou).unwrap();
        let at0 = speed_density(&ou, 0.0).unwrap() / total;
        assert!((at0 - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6);
        for u in [-2.0, 1.0, 3.0] {
            let n = (-u * u / 2.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert!((speed_density(&ou, u).unwrap() / total - n).abs() < 1e-6);
        }
    }

    #[test]
    fn recurrence_verdicts() {
        let probes = [-8.0, -4.0, -1.0, 1.0, 4.0, 8.0];
        let v = |m: SdeModel| recurrence_check(&m, &probes).unwrap().verdict;
        assert_eq!(v(SdeModel::brownian(1.0).unwrap()), RecurrenceVerdict::DivergesBothTails);
        assert_eq!(v(SdeModel::ornstein_uhlenbeck(1.0, 2f64.sqrt()).unwrap()), RecurrenceVerdict::DivergesBothTails);
        assert_eq!(
            v(SdeModel::repelling(1.0, 2f64.sqrt()).unwrap()),
            RecurrenceVerdict::InconclusiveTail(Side::Both)
        );
        assert!(recurrence_check(&SdeModel::brownian(1.0).unwrap(), &[1.0, 2.0, 3.0]).is_err());
        let far = [-60.0, -50.0, 50.0, 60.0];
        let ou = SdeModel::ornstein_uhlenbeck(1.0, 2f64.sqrt()).unwrap();
        assert!(matches!(recurrence_check(&ou, &far), Err(Error::QuadratureFailure(_))));
    }

    #[test]
    fn ellipticity_checked() {
        assert!(SdeModel::new(|_| 0.0, |x: f64| x, f64::NEG_INFINITY, f64::INFINITY, 0.0).is_err());
        assert!(SdeModel::new(|_| 0.0, |_| 1.0, 1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn exact_ou_large_step_variance() {
        let (a, sd) = ou_transition(1.0, 2f64.sqrt(), 1e3);
        assert_eq!(a, 0.0);
        assert_eq!(sd * sd, 1.0);
        let p = ou_simulate_exact(1.0, 1.0, 0.0, 10.0, 0.1, &mut stream(1, 0)).unwrap();
        let q = ou_simulate_exact(1.0, 1.0, 0.0, 10.0, 0.1, &mut stream(1, 0)).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.values().len(), 101);
        assert!((p.horizon() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn euler_brownian_increments() {
        let bm = SdeModel::brownian(1.0).unwrap();
        let delta = 0.01;
        let p = euler_maruyama(&bm, 0.0, 1e5 * delta, delta, &mut stream(6, 0)).unwrap();
        let inc: Vec<f64> = p.values().windows(2).map(|w| w[1] - w[0]).collect();
        let var = crate::stats::sample_variance(&inc);
        // Var of the sample variance of n normals: 2Δ²/(n−1).
        let se = (2.0 / (inc.len() as f64 - 1.0)).sqrt() * delta;
        assert!((var - delta).abs() < 3.0 * se, "{var}");
    }

    #[test]
    fn euler_ode_limit_and_blowup() {
        let ode = SdeModel::degenerate(|x| -x, |_| 0.0);
        let p = euler_maruyama(&ode, 1.0, 1.0, 1e-4, &mut stream(1, 0)).unwrap();
        assert!((p.values().last().unwrap() - (-1.0f64).exp()).abs() < 1e-4);
        let blow = SdeModel::degenerate(|x| x * x, |_| 0.0);
        assert!(matches!(
            euler_maruyama(&blow, 1.0, 10.0, 0.01, &mut stream(1, 0)),
            Err(Error::NumericalBlowup { .. })
        ));
    }

    #[test]
    fn euler_matches_exact_ou_terminal_mean() {
        let ou = SdeModel::ornstein_uhlenbeck(1.0, 2f64.sqrt()).unwrap();
        let reps = 1000;
        let mut em = Vec::with_capacity(reps);
        for i in 0..reps {
            let p = euler_maruyama(&ou, 2.0, 1.0, 1e-3, &mut stream(21, i as u64)).unwrap();
            em.push(*p.values().last().unwrap());
        }
        let mean = crate::stats::mean(&em);
        let exact_mean = 2.0 * (-1.0f64).exp();
        let exact_sd = (1.0 - (-2.0f64).exp()).sqrt();
        let se = exact_sd / (reps as f64).sqrt();
        assert!((mean - exact_mean).abs() < 3.0 * se, "{mean} vs {exact_mean}");
    }
}
