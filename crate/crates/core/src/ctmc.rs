//! Exact finite-state continuous-time Markov chain machinery.
//!
//! These routines are the ground truth the simulators are checked against:
//! stationary law, transition and resolvent kernels, the time-average
//! variance constant via the Poisson equation, α-mixing coefficients and the
//! total-variation ergodicity profile. Path simulation lives here as well.
//!
//! `P_t = e^{tQ}` is evaluated by uniformization: with `Λ ≥ max_x |Q_xx|` and
//! `P̃ = I + Q/Λ`, `P_t = Σ_k Pois(k; Λt) P̃^k`. Every partial sum is a convex
//! combination of stochastic matrices, so rows stay stochastic up to the
//! truncated Poisson tail (≤ 1e-14). Long horizons are split into `2^m`
//! equal pieces and recombined by squaring, which keeps the number of
//! series terms bounded.

use std::io::Write;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;
const UNIFORMIZATION_TAIL: f64 = 1e-14;
/// Largest `Λt` summed directly before splitting the horizon.
const MAX_DIRECT_RATE_TIME: f64 = 40.0;
const MAX_SERIES_TERMS: usize = 20_000;
pub const MAX_MIXING_STATES: usize = 12;

/// A probability vector: non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument("probability entries must be finite and >= 0".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {s}")));
        }
        Ok(Self(p))
    }

    pub fn point_mass(n: usize, state: usize) -> Self {
        let mut p = vec![0.0; n];
        p[state] = 1.0;
        Self(p)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `Σ_x p(x) f(x)`.
    pub fn expect(&self, f: &[f64]) -> f64 {
        self.0.iter().zip(f).map(|(p, v)| p * v).sum()
    }

    /// Draw a state index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.0, rng)
    }
}

impl Deref for ProbVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last
}

/// A row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    /// Validates rows as probability vectors within `tol`.
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidArgument("stochastic matrix must be square".into()));
        }
        for i in 0..m.nrows() {
            let row = m.row(i);
            if row.iter().any(|x| !x.is_finite() || *x < -tol) {
                return Err(Error::InvalidArgument(format!("row {i} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self(m))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// On-disk description of a chain: `n`, row-major generator `q`, optional labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// An irreducible finite-state CTMC given by its generator.
#[derive(Debug, Clone)]
pub struct CtmcModel {
    q: DMatrix<f64>,
    labels: Option<Vec<String>>,
    exit_rates: Vec<f64>,
    uniform_rate: f64,
}

impl CtmcModel {
    /// Validates the generator and irreducibility. A reducible generator makes
    /// the balance equations `πQ = 0, Σπ = 1` singular and is reported as
    /// [`Error::SingularSystem`].
    pub fn new(q: DMatrix<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n {
            return Err(Error::InvalidModel("generator must be square".into()));
        }
        if n < 2 {
            return Err(Error::InvalidModel("need at least two states".into()));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidModel(format!("{} labels for {n} states", l.len())));
            }
        }
        let scale = q.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                let v = q[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidModel(format!("Q[{i},{j}] is not finite")));
                }
                if i != j && v < 0.0 {
                    return Err(Error::InvalidModel(format!("negative rate Q[{i},{j}] = {v}")));
                }
                s += v;
            }
            if s.abs() > ROW_SUM_TOL * scale {
                return Err(Error::InvalidModel(format!("row {i} sums to {s}")));
            }
        }
        if !strongly_connected(&q) {
            return Err(Error::SingularSystem("generator is reducible".into()));
        }
        let exit_rates: Vec<f64> = (0..n).map(|i| -q[(i, i)]).collect();
        let uniform_rate = exit_rates.iter().cloned().fold(0.0, f64::max);
        Ok(Self { q, labels, exit_rates, uniform_rate })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if flat.len() != n * n {
            return Err(Error::InvalidModel("generator rows must have length n".into()));
        }
        Self::new(DMatrix::from_row_slice(n, n, &flat), None)
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        if spec.q.len() != spec.n * spec.n {
            return Err(Error::InvalidModel(format!(
                "q has {} entries, expected n^2 = {}",
                spec.q.len(),
                spec.n * spec.n
            )));
        }
        Self::new(DMatrix::from_row_slice(spec.n, spec.n, &spec.q), spec.labels.clone())
    }

    pub fn to_spec(&self) -> ModelSpec {
        let n = self.n();
        let q = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.q[(i, j)]).collect();
        ModelSpec { n, q, labels: self.labels.clone() }
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit_rates[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Detailed balance `π_x Q_xy = π_y Q_yx` within `1e-10`.
    pub fn is_reversible(&self) -> Result<bool> {
        let pi = stationary_distribution(self)?;
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                let lhs = pi[i] * self.q[(i, j)];
                let rhs = pi[j] * self.q[(j, i)];
                if (lhs - rhs).abs() > 1e-10 * (1.0 + lhs.abs()) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn uniformized(&self) -> (f64, DMatrix<f64>) {
        let lam = self.uniform_rate;
        let p = DMatrix::identity(self.n(), self.n()) + &self.q / lam;
        (lam, p)
    }

    /// Row `x` of `P_t`.
    pub fn transition_row(&self, x: usize, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
        }
        let (lam, p) = self.uniformized();
        if lam * t > MAX_DIRECT_RATE_TIME {
            return Ok(transition_matrix(self, t)?.row(x));
        }
        let weights = poisson_weights(lam * t)?;
        let n = self.n();
        let mut v = DVector::zeros(n);
        v[x] = 1.0;
        let mut acc = v.scale(weights[0]);
        for &w in &weights[1..] {
            v = p.tr_mul(&v);
            acc.axpy(w, &v, 1.0);
        }
        Ok(acc.iter().copied().collect())
    }

    /// `P_t(x, y)`.
    pub fn transition_prob(&self, x: usize, y: usize, t: f64) -> Result<f64> {
        Ok(self.transition_row(x, t)?[y])
    }

    fn jump_target<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let n = self.n();
        let total = self.exit_rates[x];
        let mut u = rng.random::<f64>() * total;
        let mut last = x;
        for j in 0..n {
            if j == x {
                continue;
            }
            let r = self.q[(x, j)];
            if r <= 0.0 {
                continue;
            }
            last = j;
            if u < r {
                return j;
            }
            u -= r;
        }
        last
    }
}

fn strongly_connected(q: &DMatrix<f64>) -> bool {
    let n = q.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let r = if forward { q[(i, j)] } else { q[(j, i)] };
                if j != i && r > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Poisson(`mean`) weights `w_0..w_K` with the remaining tail mass below `1e-14`.
fn poisson_weights(mean: f64) -> Result<Vec<f64>> {
    let mut w = vec![(-mean).exp()];
    let mut k = 0usize;
    loop {
        let next = w[k] * mean / (k + 1) as f64;
        // For k + 2 > mean the tail past k is dominated by a geometric series.
        if (k + 2) as f64 > mean {
            let bound = next / (1.0 - mean / (k + 2) as f64);
            if bound <= UNIFORMIZATION_TAIL {
                return Ok(w);
            }
        }
        w.push(next);
        k += 1;
        if k > MAX_SERIES_TERMS {
            return Err(Error::NonConvergence(format!(
                "uniformization tail above {UNIFORMIZATION_TAIL:e} after {MAX_SERIES_TERMS} terms"
            )));
        }
    }
}

/// Stationary law from `πQ = 0`, `Σπ = 1`.
pub fn stationary_distribution(model: &CtmcModel) -> Result<ProbVector> {
    let n = model.n();
    let mut a = model.q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularSystem("balance equations are singular".into()))?;
    let scale = model.uniform_rate.max(1.0);
    let resid = model.q.tr_mul(&pi).amax();
    if resid > 1e-10 * scale {
        return Err(Error::SingularSystem(format!("balance residual {resid:e}")));
    }
    let mut p: Vec<f64> = pi.iter().copied().collect();
    for v in p.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-12 {
                return Err(Error::SingularSystem(format!("negative stationary mass {v}")));
            }
            *v = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    ProbVector::new(p)
}

/// `P_t = e^{tQ}` by uniformization.
pub fn transition_matrix(model: &CtmcModel, t: f64) -> Result<StochasticMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    let n = model.n();
    let (lam, p) = model.uniformized();
    let mut halvings = 0u32;
    let mut h = t;
    while lam * h > MAX_DIRECT_RATE_TIME {
        h *= 0.5;
        halvings += 1;
    }
    let weights = poisson_weights(lam * h)?;
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut acc = term.scale(weights[0]);
    for &w in &weights[1..] {
        term = &term * &p;
        acc += term.scale(w);
    }
    for _ in 0..halvings {
        acc = &acc * &acc;
    }
    StochasticMatrix::new(acc, 1e-10)
}

/// Resolvent kernel `U = ∫₀^∞ P_t e^{-t} dt = (I - Q)^{-1}`.
pub fn resolvent(model: &CtmcModel) -> Result<StochasticMatrix> {
    let n = model.n();
    let a = DMatrix::<f64>::identity(n, n) - &model.q;
    let u = a
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("I - Q is not invertible".into()))?;
    StochasticMatrix::new(u, 1e-10)
}

/// Solution `ĥ` of the Poisson equation `-Q ĥ = f - π(f)` normalised by `π(ĥ) = 0`.
pub fn poisson_solution(model: &CtmcModel, f: &[f64]) -> Result<Vec<f64>> {
    let n = model.n();
    if f.len() != n {
        return Err(Error::InvalidArgument(format!("functional has {} entries for {n} states", f.len())));
    }
    let pi = stationary_distribution(model)?;
    let mean = pi.expect(f);
    // −Q stacked on the constraint row π.
    let mut a = DMatrix::<f64>::zeros(n + 1, n);
    let mut b = DVector::<f64>::zeros(n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = -model.q[(i, j)];
        }
        b[i] = f[i] - mean;
        a[(n, i)] = pi[i];
    }
    let h = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::SingularSystem(e.to_string()))?;
    let resid = (&a * &h - &b).amax();
    let scale = b.amax().max(1e-300) + model.uniform_rate * h.amax();
    if resid > 1e-9 * scale.max(1.0) {
        return Err(Error::SingularSystem(format!("Poisson equation residual {resid:e}")));
    }
    Ok(h.iter().copied().collect())
}

/// Time-average variance constant `σ²_f = 2 Σ_x π_x f̄(x) ĥ(x)`.
pub fn asymptotic_variance_exact(model: &CtmcModel, f: &[f64]) -> Result<f64> {
    let h = poisson_solution(model, f)?;
    let pi = stationary_distribution(model)?;
    let mean = pi.expect(f);
    let s: f64 = (0..model.n()).map(|x| pi[x] * (f[x] - mean) * h[x]).sum();
    Ok((2.0 * s).max(0.0))
}

/// Exact α-mixing coefficient of the stationary chain at lag `s`,
/// `sup_{A,B} |P(X₀∈A, X_s∈B) − π(A)π(B)|`.
///
/// Every event `A` of the past is enumerated; for fixed `A` the supremum over
/// `B` is attained by the set of states with positive excess mass, so the
/// result equals the full `2ⁿ × 2ⁿ` search.
pub fn alpha_mixing_exact(model: &CtmcModel, s: f64) -> Result<f64> {
    let n = model.n();
    if n > MAX_MIXING_STATES {
        return Err(Error::TooManyStates { n, max: MAX_MIXING_STATES });
    }
    let pi = stationary_distribution(model)?;
    let p = transition_matrix(model, s)?;
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| pi[i] * (p.get(i, j) - pi[j])).collect())
        .collect();
    let mut c = vec![0.0f64; n];
    let mut best = 0.0f64;
    // Gray-code walk over the subsets A.
    let mut prev_gray = 0usize;
    for k in 1..(1usize << n) {
        let gray = k ^ (k >> 1);
        let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
        let sign = if gray & (1 << flipped) != 0 { 1.0 } else { -1.0 };
        for j in 0..n {
            c[j] += sign * d[flipped][j];
        }
        prev_gray = gray;
        let pos: f64 = c.iter().filter(|v| **v > 0.0).sum();
        let neg: f64 = -c.iter().filter(|v| **v < 0.0).sum::<f64>();
        best = best.max(pos).max(neg);
    }
    Ok(best)
}

/// Covariance inequality `|Cov| ≤ 8 α^{1/r} ‖X‖_p ‖Y‖_q` with `1/p + 1/q + 1/r = 1`.
/// Infinite `p` or `q` are allowed.
pub fn davydov_bound_check(cov: f64, alpha: f64, normp: f64, normq: f64, p: f64, q: f64) -> Result<bool> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::InvalidExponents { p, q });
    }
    let inv = 1.0 / p + 1.0 / q;
    if inv >= 1.0 {
        return Err(Error::InvalidExponents { p, q });
    }
    let r = 1.0 / (1.0 - inv);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(cov.abs() <= davydov_bound(alpha, normp, normq, r))
}

pub fn davydov_bound(alpha: f64, normp: f64, normq: f64, r: f64) -> f64 {
    8.0 * alpha.powf(1.0 / r) * normp * normq
}

/// `Ψ̂(t_j) = max_x ‖P_{t_j}(x,·) − π‖_TV` (factor-½ convention) on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityProfile {
    pub times: Vec<f64>,
    pub psi_hat: Vec<f64>,
}

impl ErgodicityProfile {
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.psi_hat.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "psi_hat"])?;
        for (t, p) in self.times.iter().zip(&self.psi_hat) {
            w.write_record([t.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn tv_ergodicity_profile(model: &CtmcModel, grid: &[f64]) -> Result<ErgodicityProfile> {
    if grid.iter().any(|t| !(*t >= 0.0)) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("grid must be sorted and non-negative".into()));
    }
    let pi = stationary_distribution(model)?;
    let mut psi_hat = Vec::with_capacity(grid.len());
    for &t in grid {
        let p = transition_matrix(model, t)?;
        let worst = (0..model.n()).map(|x| tv_distance(&p.row(x), &pi)).fold(0.0, f64::max);
        psi_hat.push(worst.min(1.0));
    }
    Ok(ErgodicityProfile { times: grid.to_vec(), psi_hat })
}

/// A right-continuous jump path: state `states[i]` holds on `[starts[i], starts[i+1])`
/// and the last state holds until the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath {
    states: Vec<usize>,
    starts: Vec<f64>,
    horizon: f64,
}

impl JumpPath {
    /// Checks the tiling invariants: first start at 0, strictly increasing
    /// starts below the horizon, consecutive states distinct.
    pub fn new(states: Vec<usize>, starts: Vec<f64>, horizon: f64) -> Result<Self> {
        if states.is_empty() || states.len() != starts.len() {
            return Err(Error::InvalidArgument("jump path needs matching states and start times".into()));
        }
        if starts[0] != 0.0 || !(horizon > 0.0) {
            return Err(Error::InvalidArgument("jump path must start at 0 with positive horizon".into()));
        }
        if starts.windows(2).any(|w| !(w[1] > w[0])) || *starts.last().unwrap() >= horizon {
            return Err(Error::InvalidArgument("start times must increase strictly below the horizon".into()));
        }
        if states.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("consecutive states must differ".into()));
        }
        Ok(Self { states, starts, horizon })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn end_of(&self, i: usize) -> f64 {
        self.starts.get(i + 1).copied().unwrap_or(self.horizon)
    }

    /// `(state, start, duration)` for each holding interval.
    pub fn intervals(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.len()).map(move |i| (self.states[i], self.starts[i], self.end_of(i) - self.starts[i]))
    }

    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        let k = self.starts.partition_point(|s| *s <= t);
        self.states[k.saturating_sub(1)]
    }

    pub fn final_state(&self) -> usize {
        *self.states.last().unwrap()
    }

    /// Fraction of `[0, T]` spent in each of `n` states.
    pub fn occupation_fractions(&self, n: usize) -> Vec<f64> {
        let mut occ = vec![0.0; n];
        for (s, _, d) in self.intervals() {
            occ[s] += d;
        }
        occ.iter_mut().for_each(|v| *v /= self.horizon);
        occ
    }
}

/// Incremental construction of a [`JumpPath`] from consecutive fragments.
#[derive(Debug, Clone, Default)]
pub struct JumpPathBuilder {
    states: Vec<usize>,
    starts: Vec<f64>,
}

impl JumpPathBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Enter `state` at time `t`; a repeated state extends the current interval.
    pub fn push(&mut self, state: usize, t: f64) {
        if self.states.last() == Some(&state) {
            return;
        }
        if let Some(&last) = self.starts.last() {
            if t <= last {
                // zero-length interval: overwrite
                self.states.pop();
                self.starts.pop();
                if self.states.last() == Some(&state) {
                    return;
                }
            }
        }
        self.states.push(state);
        self.starts.push(t);
    }

    /// Append a fragment defined on `[0, fragment.horizon]` at `offset`.
    pub fn append(&mut self, fragment: &JumpPath, offset: f64) {
        for (s, start, _) in fragment.intervals() {
            self.push(s, offset + start);
        }
    }

    /// Close the path at `horizon`, dropping intervals that start at or after it.
    pub fn finish(mut self, horizon: f64) -> Result<JumpPath> {
        while self.starts.len() > 1 && *self.starts.last().unwrap() >= horizon {
            self.starts.pop();
            self.states.pop();
        }
        JumpPath::new(self.states, self.starts, horizon)
    }
}

/// Gillespie simulation of the chain from `x0` on `[0, horizon]`.
pub fn simulate_ctmc<R: Rng + ?Sized>(model: &CtmcModel, x0: usize, horizon: f64, rng: &mut R) -> Result<JumpPath> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if x0 >= model.n() {
        return Err(Error::InvalidArgument(format!("initial state {x0} out of range")));
    }
    let mut states = vec![x0];
    let mut starts = vec![0.0];
    let mut t = 0.0;
    let mut x = x0;
    loop {
        let hold: f64 = rng.sample::<f64, _>(Exp1) / model.exit_rates[x];
        t += hold;
        if t >= horizon {
            break;
        }
        x = model.jump_target(x, rng);
        states.push(x);
        starts.push(t);
    }
    Ok(JumpPath { states, starts, horizon })
}
