use serde::Serialize;

use super::batch::BatchSchedule;
use crate::{Error, Result};

/// `ψ_T = max{T^{1/(2q)} log T, T^{1/(2+δ)} log² T}`.
pub fn psi_rate(t: f64, q: f64, delta: f64) -> Result<f64> {
    if !(t > 1.0 && q > 0.0 && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("need T > 1, q > 0, delta > 0 (T = {t}, q = {q}, delta = {delta})")));
    }
    let l = t.ln();
    Ok((t.powf(1.0 / (2.0 * q)) * l).max(t.powf(1.0 / (2.0 + delta)) * l * l))
}

/// `λ = min(δ/(2δ+4), λ′)`.
pub fn lambda_exponent(delta: f64, lambda_prime: f64) -> f64 {
    (delta / (2.0 * delta + 4.0)).min(lambda_prime)
}

/// Approximation rate `T^{1/2 − λ}` of the strong invariance principle.
pub fn sip_rate(t: f64, lambda: f64) -> f64 {
    t.powf(0.5 - lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRow {
    pub t: f64,
    pub ell: f64,
    pub k: usize,
    pub ell_over_t: f64,
    pub psi: f64,
    /// `ψ_T² log T / ℓ_T`, which must vanish.
    pub bias_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub exponent: f64,
    pub lambda: f64,
    pub rows: Vec<ScheduleRow>,
    /// `k_T` and `ℓ_T` grow along the grid while `ℓ_T/T` shrinks.
    pub growth_ok: bool,
    /// `ℓ_T` increasing and `ℓ_T/T` decreasing.
    pub monotone_ok: bool,
    /// `Σ k_n^{-c} < ∞` holds for every `c` above this value, `1/(1 − a)`.
    pub summability_exponent: f64,
    /// `ψ_T² log T / ℓ_T` decreases along the grid.
    pub bias_trend_decreasing: bool,
    /// `a > 1 − 2λ`: strong and mean-square consistency.
    pub consistency_region: bool,
    /// `a > 1 − λ`: the batch-means CLT condition `ℓ⁻¹ ψ (T log T)^{1/2} → 0`.
    pub clt_region: bool,
    pub passes: bool,
}

/// Diagnostics of a power-rule schedule on a grid of horizons.
pub fn validate_batch_schedule(schedule: &BatchSchedule, grid: &[f64]) -> Result<ScheduleReport> {
    let a = schedule
        .exponent()
        .ok_or_else(|| Error::InvalidArgument("schedule validation needs a power rule".into()))?;
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= 1.0 {
        return Err(Error::InvalidArgument("grid must be increasing with T > 1 and at least two points".into()));
    }
    let lambda = lambda_exponent(schedule.delta, schedule.lambda_prime);
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        let ell = schedule.batch_length(t)?;
        let psi = sip_rate(t, lambda);
        rows.push(ScheduleRow {
            t,
            ell,
            k: (t / ell).floor() as usize,
            ell_over_t: ell / t,
            psi,
            bias_term: psi * psi * t.ln() / ell,
        });
    }
    let increasing = |f: &dyn Fn(&ScheduleRow) -> f64| rows.windows(2).all(|w| f(&w[1]) > f(&w[0]));
    let decreasing = |f: &dyn Fn(&ScheduleRow) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let ell_up = increasing(&|r| r.ell);
    let k_up = increasing(&|r| r.k as f64);
    let ratio_down = decreasing(&|r| r.ell_over_t);
    let bias_down = decreasing(&|r| r.bias_term);
    let consistency_region = a > 1.0 - 2.0 * lambda;
    let growth_ok = ell_up && k_up && ratio_down;
    let monotone_ok = ell_up && ratio_down;
    Ok(ScheduleReport {
        exponent: a,
        lambda,
        rows,
        growth_ok,
        monotone_ok,
        summability_exponent: 1.0 / (1.0 - a),
        bias_trend_decreasing: bias_down,
        consistency_region,
        clt_region: a > 1.0 - lambda,
        passes: growth_ok && monotone_ok && bias_down && consistency_region,
    })
}
