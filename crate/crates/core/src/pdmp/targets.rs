use std::sync::Arc;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Target `π(dx) ∝ e^{-U(x)} dx` given through its potential `U`.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn energy(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], grad: &mut [f64]);

    /// Row-major constant Hessian when `∇U` is affine. Event times are then
    /// sampled by exact inversion.
    fn hessian(&self) -> Option<&[f64]> {
        None
    }

    /// Per-coordinate `(a_i, b_i)` with `|∂_i U(x + v s)| ≤ a_i + b_i s` for
    /// all `s ≥ 0`; used for thinning when no Hessian is declared.
    fn gradient_bounds(&self, _x: &[f64], _v: &[f64]) -> Option<Vec<(f64, f64)>> {
        None
    }
}

/// Gaussian target `U(x) = ½ (x − m)ᵀ P (x − m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTarget {
    mean: Vec<f64>,
    precision: Vec<f64>,
}

impl GaussianTarget {
    pub fn new(mean: Vec<f64>, precision: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || precision.len() != d * d {
            return Err(Error::InvalidArgument("precision must be d x d".into()));
        }
        let p = DMatrix::from_row_slice(d, d, &precision);
        if (&p - p.transpose()).amax() > 1e-12 * p.amax().max(1.0) {
            return Err(Error::InvalidArgument("precision must be symmetric".into()));
        }
        if p.cholesky().is_none() {
            return Err(Error::InvalidArgument("precision must be positive definite".into()));
        }
        Ok(Self { mean, precision })
    }

    pub fn isotropic(d: usize, variance: f64) -> Result<Self> {
        Self::diagonal(vec![variance; d])
    }

    pub fn diagonal(variances: Vec<f64>) -> Result<Self> {
        if variances.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("variances must be positive".into()));
        }
        let d = variances.len();
        let mut p = vec![0.0; d * d];
        for (i, v) in variances.iter().enumerate() {
            p[i * d + i] = 1.0 / v;
        }
        Self::new(vec![0.0; d], p)
    }

    pub fn standard(d: usize) -> Self {
        Self::isotropic(d, 1.0).expect("unit variances are valid")
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

impl Potential for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut g = vec![0.0; d];
        self.gradient(x, &mut g);
        0.5 * (0..d).map(|i| (x[i] - self.mean[i]) * g[i]).sum::<f64>()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            let row = &self.precision[i * d..(i + 1) * d];
            grad[i] = (0..d).map(|j| row[j] * (x[j] - self.mean[j])).sum();
        }
    }

    fn hessian(&self) -> Option<&[f64]> {
        Some(&self.precision)
    }
}

/// Product of hyperbolic-secant densities, `U(x) = Σ log cosh(x_i / s_i)`.
///
/// The gradient `tanh(x_i/s_i)/s_i` is bounded by `1/s_i`, which gives
/// constant thinning bounds. Each coordinate has variance `π² s_i² / 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct SechTarget {
    scales: Vec<f64>,
}

impl SechTarget {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("scales must be positive".into()));
        }
        Ok(Self { scales })
    }

    pub fn standard(d: usize) -> Self {
        Self { scales: vec![1.0; d] }
    }

    pub fn variance(&self, i: usize) -> f64 {
        std::f64::consts::PI.powi(2) * self.scales[i].powi(2) / 4.0
    }
}

fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Potential for SechTarget {
    fn dim(&self) -> usize {
        self.scales.len()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.scales).map(|(x, s)| log_cosh(x / s)).sum()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        for i in 0..x.len() {
            grad[i] = (x[i] / self.scales[i]).tanh() / self.scales[i];
        }
    }

    fn gradient_bounds(&self, _x: &[f64], _v: &[f64]) -> Option<Vec<(f64, f64)>> {
        Some(self.scales.iter().map(|s| (1.0 / s, 0.0)).collect())
    }
}

type EnergyFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type BoundsFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<(f64, f64)> + Send + Sync>;

/// A potential assembled from closures.
#[derive(Clone)]
pub struct CustomTarget {
    d: usize,
    energy: EnergyFn,
    gradient: GradFn,
    bounds: Option<BoundsFn>,
}

impl CustomTarget {
    pub fn new<E, G>(d: usize, energy: E, gradient: G) -> Self
    where
        E: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { d, energy: Arc::new(energy), gradient: Arc::new(gradient), bounds: None }
    }

    pub fn with_bounds<B>(mut self, bounds: B) -> Self
    where
        B: Fn(&[f64], &[f64]) -> Vec<(f64, f64)> + Send + Sync + 'static,
    {
        self.bounds = Some(Arc::new(bounds));
        self
    }
}

impl Potential for CustomTarget {
    fn dim(&self) -> usize {
        self.d
    }

    fn energy(&self, x: &[f64]) -> f64 {
        (self.energy)(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (self.gradient)(x, grad)
    }

    fn gradient_bounds(&self, x: &[f64], v: &[f64]) -> Option<Vec<(f64, f64)>> {
        self.bounds.as_ref().map(|b| b(x, v))
    }
}

/// Compares `∇U` with central differences of `U` at each probe. Returns the
/// largest scaled discrepancy, or [`Error::GradientMismatch`] above `1e-5`.
pub fn check_gradient<P: Potential + ?Sized>(target: &P, probes: &[Vec<f64>]) -> Result<f64> {
    let d = target.dim();
    let mut g = vec![0.0; d];
    let mut worst = 0.0f64;
    for x in probes {
        if x.len() != d {
            return Err(Error::InvalidArgument("probe dimension mismatch".into()));
        }
        target.gradient(x, &mut g);
        let mut y = x.clone();
        for i in 0..d {
            let h = 1e-5 * x[i].abs().max(1.0);
            y[i] = x[i] + h;
            let up = target.energy(&y);
            y[i] = x[i] - h;
            let down = target.energy(&y);
            y[i] = x[i];
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
        }
    }
    if worst > 1e-5 {
        return Err(Error::GradientMismatch(worst));
    }
    Ok(worst)
}
