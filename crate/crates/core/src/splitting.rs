//! Continuous-time Nummelin splitting on a finite CTMC.
//!
//! The process is observed at the jump times `T_n` of an independent rate-one
//! Poisson process, giving the resolvent chain with kernel
//! `U = ∫₀^∞ P_t e^{-t} dt`. A minorisation `U(x,·) ≥ α ν(·)` on a small set
//! `C` splits `U` into a regeneration part and the residual kernel
//! `W = (U − αν)/(1 − α)`. At each `T_n` a uniform mark `u_n` decides whether
//! the next resolvent state is drawn from `ν` (an atom hit when `x ∈ C` and
//! `u_n ≤ α`), from `W`, or from `U`. Given the current and next states, the
//! gap `σ_{n+1}` has density `p_t(x,x') e^{-t}/U(x,x')` and the path in
//! between is a CTMC bridge.
//!
//! Regeneration epochs `R_n` are the sampling times right after an atom hit.
//! Cycles `[R_{n-1}, R_n]` are identically distributed for `n ≥ 2` and
//! one-dependent.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::ctmc::{resolvent, sample_index, simulate_ctmc, CtmcModel, JumpPath, JumpPathBuilder, ProbVector, StochasticMatrix};
use crate::stats::{autocorrelation, mean, normal_quantile};
use crate::trajectory::{CumulativeIntegral, Functional, Trajectory};
use crate::{Error, Result};

pub const DEFAULT_MAX_ATTEMPTS: u64 = 1_000_000;
const CERT_TOL: f64 = 1e-12;

/// Small set `C`, constant `α ∈ (0, 1)` and measure `ν` supported in `C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorisationCert {
    small_set: Vec<usize>,
    alpha: f64,
    nu: ProbVector,
}

impl MinorisationCert {
    pub fn new(small_set: Vec<usize>, alpha: f64, nu: ProbVector) -> Result<Self> {
        let n = nu.len();
        let mut c = small_set;
        c.sort_unstable();
        c.dedup();
        if c.is_empty() || c.iter().any(|&x| x >= n) {
            return Err(Error::InvalidArgument("small set must be a non-empty set of states".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::DegenerateSmallSet(alpha));
        }
        if (0..n).any(|y| nu[y] > 0.0 && c.binary_search(&y).is_err()) {
            return Err(Error::InvalidArgument("nu must be supported in the small set".into()));
        }
        Ok(Self { small_set: c, alpha, nu })
    }

    pub fn small_set(&self) -> &[usize] {
        &self.small_set
    }

    pub fn contains(&self, x: usize) -> bool {
        self.small_set.binary_search(&x).is_ok()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nu(&self) -> &ProbVector {
        &self.nu
    }

    /// Smallest slack `U(x,y) − α ν(y)` over `x ∈ C`; an error below `−1e-12`.
    pub fn verify(&self, u: &StochasticMatrix) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for &x in &self.small_set {
            for y in 0..u.n() {
                let slack = u.get(x, y) - self.alpha * self.nu[y];
                if slack < -CERT_TOL {
                    return Err(Error::NegativeResidual { row: x, col: y, value: slack });
                }
                worst = worst.min(slack);
            }
        }
        Ok(worst)
    }
}

/// `ν ∝ min_{x∈C} U(x, ·)` on `C`, `α = Σ_{y∈C} min_{x∈C} U(x, y)`.
pub fn build_minorisation(model: &CtmcModel, small_set: &[usize]) -> Result<MinorisationCert> {
    let n = model.n();
    if small_set.is_empty() || small_set.iter().any(|&x| x >= n) {
        return Err(Error::InvalidArgument("small set must be a non-empty set of states".into()));
    }
    let u = resolvent(model)?;
    let mut c = small_set.to_vec();
    c.sort_unstable();
    c.dedup();
    let mut m = vec![0.0; n];
    for &y in &c {
        m[y] = c.iter().map(|&x| u.get(x, y)).fold(f64::INFINITY, f64::min);
    }
    let alpha: f64 = m.iter().sum();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DegenerateSmallSet(alpha));
    }
    let nu: Vec<f64> = m.iter().map(|v| v / alpha).collect();
    let s: f64 = nu.iter().sum();
    let nu = ProbVector::new(nu.iter().map(|v| v / s).collect())?;
    let cert = MinorisationCert::new(c, alpha, nu)?;
    cert.verify(&u)?;
    Ok(cert)
}

/// Resolvent together with the residual rows on the small set.
#[derive(Debug, Clone)]
pub struct SplitKernel {
    cert: MinorisationCert,
    u: StochasticMatrix,
    residual: Vec<Option<Vec<f64>>>,
}

/// `W(x, ·) = (U(x, ·) − αν)/(1 − α)` for `x ∈ C`.
pub fn residual_kernel(cert: &MinorisationCert, u: &StochasticMatrix) -> Result<SplitKernel> {
    let n = u.n();
    if cert.nu.len() != n {
        return Err(Error::InvalidArgument("certificate and resolvent sizes differ".into()));
    }
    let a = cert.alpha;
    let mut residual = vec![None; n];
    for &x in &cert.small_set {
        let mut row = Vec::with_capacity(n);
        for y in 0..n {
            let w = (u.get(x, y) - a * cert.nu[y]) / (1.0 - a);
            if w < -CERT_TOL {
                return Err(Error::NegativeResidual { row: x, col: y, value: w });
            }
            row.push(w.max(0.0));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("residual row {x} sums to {s}")));
        }
        residual[x] = Some(row);
    }
    Ok(SplitKernel { cert: cert.clone(), u: u.clone(), residual })
}

impl SplitKernel {
    pub fn cert(&self) -> &MinorisationCert {
        &self.cert
    }

    pub fn resolvent(&self) -> &StochasticMatrix {
        &self.u
    }

    /// `W(x, ·)` for `x ∈ C`.
    pub fn residual_row(&self, x: usize) -> Option<&[f64]> {
        self.residual.get(x).and_then(|r| r.as_deref())
    }

    /// `max_{x∈C, y} |αν(y) + (1−α)W(x,y) − U(x,y)|`.
    pub fn reconstruction_error(&self) -> f64 {
        let a = self.cert.alpha;
        let mut worst = 0.0f64;
        for &x in &self.cert.small_set {
            let w = self.residual_row(x).expect("rows exist on C");
            for (y, wy) in w.iter().enumerate() {
                worst = worst.max((a * self.cert.nu[y] + (1.0 - a) * wy - self.u.get(x, y)).abs());
            }
        }
        worst
    }

    /// Next resolvent state from the split kernel given the mark `u`.
    /// Returns the state and whether the draw came from `ν`.
    pub fn next_state<R: Rng + ?Sized>(&self, x: usize, mark: f64, rng: &mut R) -> (usize, bool) {
        match self.residual_row(x) {
            Some(w) if mark <= self.cert.alpha => {
                let _ = w;
                (self.cert.nu.sample(rng), true)
            }
            Some(w) => (sample_index(w, rng), false),
            None => (sample_index(&self.u.row(x), rng), false),
        }
    }
}

/// Gap to the next sampling time given its endpoints: density
/// `p_t(x, x') e^{-t}/U(x, x')`, sampled by rejection from `Exp(1)`.
pub fn sample_sampling_time<R: Rng + ?Sized>(
    x: usize,
    xp: usize,
    model: &CtmcModel,
    u: &StochasticMatrix,
    rng: &mut R,
    max_attempts: u64,
) -> Result<f64> {
    if !(u.get(x, xp) > 0.0) {
        return Err(Error::InvalidArgument(format!("U({x}, {xp}) must be positive")));
    }
    for _ in 0..max_attempts {
        let t: f64 = rng.sample(Exp1);
        let p = model.transition_prob(x, xp, t)?;
        if p > 1.0 + 1e-12 {
            return Err(Error::EnvelopeViolation(p));
        }
        if rng.random::<f64>() < p {
            return Ok(t);
        }
    }
    Err(Error::RejectionBudgetExceeded(max_attempts))
}

/// CTMC bridge from `x` to `xp` over `[0, t]` by forward simulation and
/// acceptance on the endpoint.
pub fn sample_bridge<R: Rng + ?Sized>(
    x: usize,
    xp: usize,
    t: f64,
    model: &CtmcModel,
    rng: &mut R,
    max_attempts: u64,
) -> Result<JumpPath> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("bridge duration must be positive, got {t}")));
    }
    if xp >= model.n() {
        return Err(Error::InvalidArgument(format!("state {xp} out of range")));
    }
    for _ in 0..max_attempts {
        let p = simulate_ctmc(model, x, t, rng)?;
        if p.final_state() == xp {
            return Ok(p);
        }
    }
    Err(Error::RejectionBudgetExceeded(max_attempts))
}

/// Which atom hits start a new regeneration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum RegenerationRule {
    /// `S_{n+1} = inf{T_m > R_n : atom}`; the hit at a regeneration epoch
    /// itself is skipped.
    #[default]
    AfterRegeneration,
    /// `S_{n+1} = inf{T_m ≥ R_n : atom}`; every atom hit regenerates.
    EveryAtomVisit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitOptions {
    pub rule: RegenerationRule,
    pub max_attempts: u64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self { rule: RegenerationRule::default(), max_attempts: DEFAULT_MAX_ATTEMPTS }
    }
}

/// The split process observed at its sampling times, with the filled-in path.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitChainPath {
    /// `T_0 = 0 < T_1 < …`, all below the horizon.
    pub sampling_times: Vec<f64>,
    /// `Z¹_{T_n}`.
    pub states: Vec<usize>,
    /// `Z²_{T_n}`, the uniform marks.
    pub marks: Vec<f64>,
    /// `Z³_{T_n}`, the next resolvent state.
    pub next_states: Vec<usize>,
    /// Atom hit at `T_n`: `Z¹ ∈ C` and mark `≤ α`.
    pub atom: Vec<bool>,
    /// `Z¹` on `[0, T]`.
    pub path: JumpPath,
}

impl SplitChainPath {
    pub fn horizon(&self) -> f64 {
        self.path.horizon()
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory::Jump(self.path.clone())
    }

    /// Inter-sampling gaps `T_{n+1} − T_n` between recorded sampling times.
    pub fn gaps(&self) -> Vec<f64> {
        self.sampling_times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Atom hits `S_n` and regeneration epochs `R_n` (`n ≥ 1`, `R_0 = 0`) with
/// `R_n ≤ T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegenerationLog {
    pub rule: RegenerationRule,
    pub atom_hits: Vec<f64>,
    pub regenerations: Vec<f64>,
    pub horizon: f64,
}

impl RegenerationLog {
    pub fn from_split_chain(chain: &SplitChainPath, rule: RegenerationRule) -> Self {
        let mut atom_hits = Vec::new();
        let mut regenerations = Vec::new();
        let mut last_r = 0.0;
        let times = &chain.sampling_times;
        for m in 0..times.len().saturating_sub(1) {
            if !chain.atom[m] {
                continue;
            }
            let eligible = match rule {
                RegenerationRule::AfterRegeneration => times[m] > last_r,
                RegenerationRule::EveryAtomVisit => times[m] >= last_r,
            };
            if eligible {
                atom_hits.push(times[m]);
                regenerations.push(times[m + 1]);
                last_r = times[m + 1];
            }
        }
        Self { rule, atom_hits, regenerations, horizon: chain.horizon() }
    }

    pub fn n_cycles(&self) -> usize {
        self.regenerations.len()
    }

    /// `ρ_n = R_n − R_{n−1}`, starting with the initial cycle.
    pub fn cycle_lengths(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.regenerations
            .iter()
            .map(|&r| {
                let d = r - prev;
                prev = r;
                d
            })
            .collect()
    }

    /// CSV with columns `n, S_n, R_n, rho_n, xi_n, first_cycle_flag`.
    pub fn write_csv<W: Write>(&self, cycles: Option<&CycleFunctionals>, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "S_n", "R_n", "rho_n", "xi_n", "first_cycle_flag"])?;
        let rho = self.cycle_lengths();
        for i in 0..self.n_cycles() {
            let xi = cycles.and_then(|c| c.xi.get(i)).map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                (i + 1).to_string(),
                self.atom_hits[i].to_string(),
                self.regenerations[i].to_string(),
                rho[i].to_string(),
                xi,
                u8::from(i == 0).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the split chain from `x0` on `[0, horizon]`.
pub fn simulate_split_chain<R: Rng + ?Sized>(
    model: &CtmcModel,
    kernel: &SplitKernel,
    x0: usize,
    horizon: f64,
    rng: &mut R,
    opts: SplitOptions,
) -> Result<(SplitChainPath, RegenerationLog)> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if x0 >= model.n() || kernel.u.n() != model.n() {
        return Err(Error::InvalidArgument("initial state or kernel size does not match the model".into()));
    }
    let alpha = kernel.cert.alpha;
    let mut sampling_times = vec![0.0];
    let mut states = vec![x0];
    let mut marks = Vec::new();
    let mut next_states = Vec::new();
    let mut atom = Vec::new();
    let mut builder = JumpPathBuilder::new();
    builder.push(x0, 0.0);
    let mut t = 0.0;
    let mut x = x0;
    loop {
        let mark: f64 = rng.random();
        let (xp, _) = kernel.next_state(x, mark, rng);
        marks.push(mark);
        next_states.push(xp);
        atom.push(kernel.cert.contains(x) && mark <= alpha);
        let gap = sample_sampling_time(x, xp, model, &kernel.u, rng, opts.max_attempts)?;
        let bridge = sample_bridge(x, xp, gap, model, rng, opts.max_attempts)?;
        builder.append(&bridge, t);
        t += gap;
        x = xp;
        if t >= horizon {
            break;
        }
        builder.push(x, t);
        sampling_times.push(t);
        states.push(x);
    }
    let path = builder.finish(horizon)?;
    let chain = SplitChainPath { sampling_times, states, marks, next_states, atom, path };
    let log = RegenerationLog::from_split_chain(&chain, opts.rule);
    Ok((chain, log))
}

/// Exact mean cycle length `ϱ = E(R_{n+1} − R_n)` of the split chain.
///
/// Given the resolvent states `(x, x′)` at consecutive sampling times the gap
/// has mean `(U²)(x, x′)/U(x, x′)`, because `∫ t e^{−t} P_t dt = U²`. With
/// `h(x)` the expected time from a sampling epoch in `x` to the regeneration
/// after the next atom hit, `h` solves a linear system and `ϱ` is its
/// `ν`-average. Under [`RegenerationRule::AfterRegeneration`] the step taken
/// at the regeneration epoch itself cannot end the cycle.
pub fn expected_cycle_length(kernel: &SplitKernel, rule: RegenerationRule) -> Result<f64> {
    let u = kernel.u.matrix();
    let n = u.nrows();
    let u2 = u * u;
    let gap = |x: usize, y: usize| if u[(x, y)] > 0.0 { u2[(x, y)] / u[(x, y)] } else { 0.0 };
    let alpha = kernel.cert.alpha;
    let nu = &kernel.cert.nu;
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for x in 0..n {
        let (hit, next): (f64, Vec<f64>) = match kernel.residual_row(x) {
            Some(w) => (alpha, w.to_vec()),
            None => (0.0, kernel.u.row(x)),
        };
        let atom_gap: f64 = (0..n).map(|y| nu[y] * gap(x, y)).sum();
        let move_gap: f64 = (0..n).map(|y| next[y] * gap(x, y)).sum();
        rhs[x] = hit * atom_gap + (1.0 - hit) * move_gap;
        for y in 0..n {
            a[(x, y)] -= (1.0 - hit) * next[y];
        }
    }
    let h = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("cycle-length system is singular".into()))?;
    Ok(match rule {
        RegenerationRule::EveryAtomVisit => (0..n).map(|y| nu[y] * h[y]).sum(),
        // one unconditioned step (mean gap 1) before atom hits count again
        RegenerationRule::AfterRegeneration => {
            (0..n).map(|y| nu[y] * (1.0 + (0..n).map(|x| u[(y, x)] * h[x]).sum::<f64>())).sum()
        }
    })
}

/// `Z¹_{R_n}` for each regeneration epoch.
pub fn regeneration_states(log: &RegenerationLog, chain: &SplitChainPath) -> Vec<usize> {
    log.regenerations.iter().map(|&r| chain.path.state_at(r)).collect()
}

/// Cycle integrals `ξ_n = ∫_{R_{n−1}}^{R_n} f` for all complete cycles,
/// including the initial one, and the tail `∫_{R_N}^T f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleFunctionals {
    pub xi: Vec<f64>,
    pub rho: Vec<f64>,
    pub remainder: f64,
}

impl CycleFunctionals {
    /// Cycles `n ≥ 2`, identically distributed under the split construction.
    pub fn stationary_xi(&self) -> &[f64] {
        &self.xi[1..]
    }

    pub fn stationary_rho(&self) -> &[f64] {
        &self.rho[1..]
    }
}

pub fn cycle_functionals(log: &RegenerationLog, chain: &SplitChainPath, f: &Functional) -> Result<CycleFunctionals> {
    let n = log.n_cycles();
    if n < 2 {
        return Err(Error::InsufficientCycles { needed: 2, have: n });
    }
    let traj = Trajectory::Jump(chain.path.clone());
    let cum = CumulativeIntegral::new(&traj, f)?;
    let mut xi = Vec::with_capacity(n);
    let mut prev = 0.0;
    let mut f_prev = 0.0;
    for &r in &log.regenerations {
        let fr = cum.at(r)?;
        xi.push(fr - f_prev);
        f_prev = fr;
        prev = r;
    }
    let _ = prev;
    let remainder = cum.at(cum.horizon())? - f_prev;
    Ok(CycleFunctionals { xi, rho: log.cycle_lengths(), remainder })
}

/// Regenerative estimates from the stationary cycles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegenerativeEstimate {
    pub n_cycles: usize,
    /// Mean cycle length `ϱ̂`.
    pub rho_hat: f64,
    /// Standard error of `ϱ̂` allowing for lag-one dependence.
    pub rho_se: f64,
    /// Ratio estimate `Σξ/Σρ` of the stationary mean.
    pub mean_hat: f64,
    /// `Var(ξ) + 2 Cov(ξ_n, ξ_{n+1})` of the raw cycle integrals.
    pub sigma2_xi: f64,
    /// The same for `ξ_n − μ̂ ρ_n`.
    pub sigma2_xi_centered: f64,
    /// `σ̂²_ξ/ϱ̂` computed from the centered cycles.
    pub tavc: f64,
}

pub const MIN_STATIONARY_CYCLES: usize = 10;

/// Lag-one-corrected variance `γ₀ + 2γ₁` with sample mean centering.
fn one_dependent_variance(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let m = mean(z);
    let g0: f64 = z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let g1: f64 = z.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / n;
    g0 + 2.0 * g1
}

pub fn regenerative_estimates(cycles: &CycleFunctionals) -> Result<RegenerativeEstimate> {
    let xi = cycles.stationary_xi();
    let rho = cycles.stationary_rho();
    if xi.len() < MIN_STATIONARY_CYCLES {
        return Err(Error::InsufficientCycles { needed: MIN_STATIONARY_CYCLES + 1, have: cycles.xi.len() });
    }
    let n = xi.len();
    let rho_hat = mean(rho);
    let rho_se = (one_dependent_variance(rho).max(0.0) / n as f64).sqrt();
    let mean_hat = xi.iter().sum::<f64>() / rho.iter().sum::<f64>();
    let sigma2_xi = one_dependent_variance(xi).max(0.0);
    let z: Vec<f64> = xi.iter().zip(rho).map(|(x, r)| x - mean_hat * r).collect();
    // Σz = 0 by construction of μ̂, so no further centering.
    let g0: f64 = z.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let g1: f64 = z.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / n as f64;
    let sigma2_xi_centered = (g0 + 2.0 * g1).max(0.0);
    Ok(RegenerativeEstimate {
        n_cycles: n,
        rho_hat,
        rho_se,
        mean_hat,
        sigma2_xi,
        sigma2_xi_centered,
        tavc: sigma2_xi_centered / rho_hat,
    })
}

/// Empirical moments `mean(ρ^q)` of the stationary cycle lengths.
pub fn cycle_moments(cycles: &CycleFunctionals, orders: &[i32]) -> Vec<f64> {
    let rho = cycles.stationary_rho();
    orders.iter().map(|&q| mean(&rho.iter().map(|r| r.powi(q)).collect::<Vec<_>>())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagCorrelation {
    pub lag: usize,
    pub acf: f64,
    pub half_width: f64,
    /// `None` for lag one, which is reported without a verdict.
    pub inside: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneDependenceReport {
    pub n: usize,
    pub lags: Vec<LagCorrelation>,
    pub passes: bool,
}

pub const MIN_DEPENDENCE_CYCLES: usize = 100;

/// Sample autocorrelations at lags 1..5 against the 99.9% white-noise band
/// `±z_{0.9995}/√N`. Lags two and above must fall inside.
pub fn one_dependence_test(xi: &[f64]) -> Result<OneDependenceReport> {
    let n = xi.len();
    if n < MIN_DEPENDENCE_CYCLES {
        return Err(Error::InsufficientCycles { needed: MIN_DEPENDENCE_CYCLES, have: n });
    }
    let half_width = normal_quantile(1.0 - 0.0005) / (n as f64).sqrt();
    let lags: Vec<LagCorrelation> = (1..=5)
        .map(|lag| {
            let acf = autocorrelation(xi, lag);
            let inside = (lag >= 2).then(|| acf.abs() <= half_width);
            LagCorrelation { lag, acf, half_width, inside }
        })
        .collect();
    let passes = lags.iter().all(|l| l.inside != Some(false));
    Ok(OneDependenceReport { n, lags, passes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::{chi_square_gof, ks_test};
    use approx::assert_abs_diff_eq;

    fn two_state() -> CtmcModel {
        CtmcModel::from_rows(&[&[-1.0, 1.0], &[2.0, -2.0]]).unwrap()
    }

    #[test]
    fn minorisation_examples() {
        let m = two_state();
        let c = build_minorisation(&m, &[0]).unwrap();
        assert_abs_diff_eq!(c.alpha(), 0.75, epsilon = 1e-14);
        assert_eq!(&c.nu()[..], &[1.0, 0.0]);
        let full = build_minorisation(&m, &[0, 1]).unwrap();
        assert_abs_diff_eq!(full.alpha(), 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(full.nu()[0], 2.0 / 3.0, epsilon = 1e-14);
        let u = resolvent(&m).unwrap();
        assert!(full.verify(&u).unwrap() >= -1e-12);
        assert!(build_minorisation(&m, &[]).is_err());
    }

    #[test]
    fn cycle_length_closed_forms() {
        let m = two_state();
        let cert = build_minorisation(&m, &[0]).unwrap();
        let k = residual_kernel(&cert, &resolvent(&m).unwrap()).unwrap();
        assert_abs_diff_eq!(expected_cycle_length(&k, RegenerationRule::EveryAtomVisit).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(expected_cycle_length(&k, RegenerationRule::AfterRegeneration).unwrap(), 3.5, epsilon = 1e-12);
    }

    #[test]
    fn residual_examples() {
        let m = two_state();
        let u = resolvent(&m).unwrap();
        let k = residual_kernel(&build_minorisation(&m, &[0]).unwrap(), &u).unwrap();
        let w = k.residual_row(0).unwrap();
        assert_abs_diff_eq!(w[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 1.0, epsilon = 1e-14);
        assert!(k.reconstruction_error() <= 1e-12);
        let tiny = MinorisationCert::new(vec![0], 1e-15, ProbVector::point_mass(2, 0)).unwrap();
        let k = residual_kernel(&tiny, &u).unwrap();
        assert_abs_diff_eq!(k.residual_row(0).unwrap()[0], 0.75, epsilon = 1e-14);
        let bad = MinorisationCert::new(vec![0], 0.9, ProbVector::point_mass(2, 0)).unwrap();
        assert!(matches!(residual_kernel(&bad, &u), Err(Error::NegativeResidual { .. })));
        assert!(matches!(
            MinorisationCert::new(vec![0], 1.0, ProbVector::point_mass(2, 0)),
            Err(Error::DegenerateSmallSet(_))
        ));
    }

    #[test]
    fn sampling_time_law() {
        let m = two_state();
        let u = resolvent(&m).unwrap();
        let mut rng = stream(31, 0);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| sample_sampling_time(0, 1, &m, &u, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap())
            .collect();
        // p_t(0,1) = (1 − e^{−3t})/3, so the tilted CDF has a closed form.
        let norm = u.get(0, 1);
        let cdf = |t: f64| ((1.0 - (-t).exp()) - (1.0 - (-4.0 * t).exp()) / 4.0) / 3.0 / norm;
        assert_abs_diff_eq!(cdf(f64::INFINITY), 1.0, epsilon = 1e-14);
        let ks = ks_test(&draws, cdf).unwrap();
        assert!(ks.passes(1e-3), "{ks:?}");
    }

    #[test]
    fn bridge_midpoint_law() {
        let m = two_state();
        let mut rng = stream(32, 0);
        let mut counts = [0u64; 2];
        for _ in 0..10_000 {
            let b = sample_bridge(0, 1, 1.0, &m, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
            assert_eq!(b.final_state(), 1);
            counts[b.state_at(0.5)] += 1;
        }
        let p = |x, y, t| m.transition_prob(x, y, t).unwrap();
        let probs: Vec<f64> = (0..2).map(|y| p(0, y, 0.5) * p(y, 1, 0.5) / p(0, 1, 1.0)).collect();
        let chi = chi_square_gof(&counts, &probs).unwrap();
        assert!(chi.passes(1e-3), "{chi:?}");
    }

    #[test]
    fn split_chain_invariants() {
        let m = two_state();
        let u = resolvent(&m).unwrap();
        let k = residual_kernel(&build_minorisation(&m, &[0]).unwrap(), &u).unwrap();
        let (chain, log) = simulate_split_chain(&m, &k, 1, 2000.0, &mut stream(33, 0), SplitOptions::default()).unwrap();
        for (n, &t) in chain.sampling_times.iter().enumerate() {
            assert_eq!(chain.path.state_at(t), chain.states[n]);
            if n + 1 < chain.sampling_times.len() {
                assert_eq!(chain.states[n + 1], chain.next_states[n]);
            }
            assert_eq!(chain.atom[n], chain.states[n] == 0 && chain.marks[n] <= 0.75);
        }
        for i in 0..log.n_cycles() {
            let s = log.atom_hits[i];
            let pos = chain.sampling_times.iter().position(|&t| t == s).unwrap();
            assert_eq!(log.regenerations[i], chain.sampling_times[pos + 1]);
            if i + 1 < log.n_cycles() {
                assert!(log.atom_hits[i + 1] > log.regenerations[i]);
            }
        }
        let f = Functional::indicator(2, &[0]);
        let cyc = cycle_functionals(&log, &chain, &f).unwrap();
        let total: f64 = cyc.xi.iter().sum::<f64>() + cyc.remainder;
        let direct = crate::integrate_functional(&chain.trajectory(), &f, 0.0, 2000.0).unwrap();
        assert!((total - direct).abs() < 1e-9);
        let ones = cycle_functionals(&log, &chain, &Functional::Constant(1.0)).unwrap();
        for (a, b) in ones.xi.iter().zip(&ones.rho) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_functional_has_zero_variance() {
        let cyc = CycleFunctionals { xi: vec![0.0; 20], rho: (0..20).map(|i| 1.0 + i as f64 * 0.1).collect(), remainder: 0.0 };
        let est = regenerative_estimates(&cyc).unwrap();
        assert_eq!(est.sigma2_xi, 0.0);
        assert_eq!(est.tavc, 0.0);
        let short = CycleFunctionals { xi: vec![0.0; 5], rho: vec![1.0; 5], remainder: 0.0 };
        assert!(matches!(regenerative_estimates(&short), Err(Error::InsufficientCycles { .. })));
    }

    #[test]
    fn one_dependence_null_and_power() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = stream(34, 0);
        let iid: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(one_dependence_test(&iid).unwrap().passes);
        let mut ar = vec![0.0f64; 5000];
        for i in 1..ar.len() {
            let e: f64 = StandardNormal.sample(&mut rng);
            ar[i] = 0.6 * ar[i - 1] + e;
        }
        let rep = one_dependence_test(&ar).unwrap();
        assert!(!rep.passes);
        assert_eq!(rep.lags[1].inside, Some(false));
        assert!(one_dependence_test(&iid[..50]).is_err());
    }
}
