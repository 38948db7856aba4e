use serde::Serialize;

use crate::stats::mean;
use crate::trajectory::{CumulativeIntegral, Functional, Trajectory};
use crate::{Error, Result};

/// How the batch length grows with the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BatchRule {
    /// `ℓ_T = ⌈T^a⌉`, `0 < a < 1`.
    Power { exponent: f64 },
    /// `(T_i, ℓ_i)` pairs sorted by `T_i`; `ℓ_T` is taken from the largest `T_i ≤ T`.
    Table(Vec<(f64, f64)>),
}

/// Batch-length rule with the rate parameters `q`, `δ`, `λ′` used by the
/// schedule diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSchedule {
    pub rule: BatchRule,
    pub q: f64,
    pub delta: f64,
    pub lambda_prime: f64,
}

impl BatchSchedule {
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent < 1.0) {
            return Err(Error::InvalidArgument(format!("batch exponent must lie in (0, 1), got {exponent}")));
        }
        Ok(Self { rule: BatchRule::Power { exponent }, q: 4.0, delta: 2.0, lambda_prime: 0.24 })
    }

    pub fn table(mut entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|(t, l)| !(*t > 0.0 && *l > 0.0)) {
            return Err(Error::InvalidArgument("batch table needs positive (T, ell) pairs".into()));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { rule: BatchRule::Table(entries), q: 4.0, delta: 2.0, lambda_prime: 0.24 })
    }

    pub fn with_rates(mut self, q: f64, delta: f64, lambda_prime: f64) -> Result<Self> {
        if !(q > 0.0 && delta > 0.0 && lambda_prime > 0.0 && lambda_prime < 0.5) {
            return Err(Error::InvalidArgument("need q > 0, delta > 0 and lambda' in (0, 1/2)".into()));
        }
        self.q = q;
        self.delta = delta;
        self.lambda_prime = lambda_prime;
        Ok(self)
    }

    pub fn exponent(&self) -> Option<f64> {
        match self.rule {
            BatchRule::Power { exponent } => Some(exponent),
            BatchRule::Table(_) => None,
        }
    }

    /// `ℓ_T`.
    pub fn batch_length(&self, horizon: f64) -> Result<f64> {
        match &self.rule {
            BatchRule::Power { exponent } => {
                let p = horizon.powf(*exponent);
                // T^a that is an integer up to rounding should not be bumped up.
                let r = p.round();
                Ok(if (p - r).abs() <= 1e-9 * r.max(1.0) { r } else { p.ceil() })
            }
            BatchRule::Table(entries) => entries
                .iter()
                .rev()
                .find(|(t, _)| *t <= horizon)
                .map(|(_, l)| *l)
                .ok_or_else(|| Error::InvalidArgument(format!("batch table has no entry for T = {horizon}"))),
        }
    }

    /// `k_T = ⌊T/ℓ_T⌋`.
    pub fn batch_count(&self, horizon: f64) -> Result<usize> {
        Ok((horizon / self.batch_length(horizon)?).floor() as usize)
    }
}

/// Batch length, count, batch means and the variance estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchMeansEstimate {
    pub ell: f64,
    pub k: usize,
    pub means: Vec<f64>,
    pub sigma2: f64,
    /// `∫` over the discarded trailing partial batch.
    pub tail: f64,
}

/// `ℓ Σ (Z̄_i − mean Z̄)² / denom`.
fn scaled_spread(means: &[f64], ell: f64, denom: f64) -> f64 {
    let m = mean(means);
    ell * means.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / denom
}

/// `σ̂²_T = ℓ/(k−1) Σ_i (Z̄_i − Z̄)²` over `k = ⌊T/ℓ⌋` full batches.
pub fn batch_means(traj: &Trajectory, f: &Functional, schedule: &BatchSchedule) -> Result<BatchMeansEstimate> {
    let cum = CumulativeIntegral::new(traj, f)?;
    let ell = schedule.batch_length(traj.horizon())?;
    batch_means_cumulative(&cum, ell)
}

pub fn batch_means_cumulative(cum: &CumulativeIntegral<'_>, ell: f64) -> Result<BatchMeansEstimate> {
    let horizon = cum.horizon();
    if !(ell > 0.0) {
        return Err(Error::InvalidArgument(format!("batch length must be positive, got {ell}")));
    }
    let k = (horizon / ell).floor() as usize;
    if k < 2 {
        return Err(Error::TooFewBatches(k));
    }
    let mut means = Vec::with_capacity(k);
    let mut prev = 0.0;
    for i in 1..=k {
        let v = cum.at(i as f64 * ell)?;
        means.push((v - prev) / ell);
        prev = v;
    }
    let tail = cum.at(horizon)? - prev;
    let sigma2 = scaled_spread(&means, ell, (k - 1) as f64);
    Ok(BatchMeansEstimate { ell, k, means, sigma2, tail })
}

/// Overlapping batch means over windows `[jδ, jδ + ℓ] ⊂ [0, T]`, normalised
/// by `m − mℓ/T′` where `m` is the window count and `T′ = (m−1)δ + ℓ` the
/// covered span. Window means are centred at their average. With `δ = ℓ`
/// the non-overlapping batches are used directly, so the result is exactly
/// [`batch_means`].
pub fn overlapping_batch_means(traj: &Trajectory, f: &Functional, ell: f64, stride: f64) -> Result<BatchMeansEstimate> {
    if !(ell > 0.0 && stride > 0.0 && stride <= ell) {
        return Err(Error::InvalidArgument(format!("need 0 < stride <= ell, got stride {stride}, ell {ell}")));
    }
    let cum = CumulativeIntegral::new(traj, f)?;
    if stride == ell {
        return batch_means_cumulative(&cum, ell);
    }
    let horizon = cum.horizon();
    if horizon < 2.0 * ell {
        return Err(Error::TooFewBatches((horizon / ell).floor() as usize));
    }
    let m = ((horizon - ell) / stride).floor() as usize + 1;
    let mut means = Vec::with_capacity(m);
    for j in 0..m {
        let start = j as f64 * stride;
        means.push((cum.at(start + ell)? - cum.at(start)?) / ell);
    }
    let span = (m - 1) as f64 * stride + ell;
    let denom = m as f64 - m as f64 * ell / span;
    let tail = cum.at(horizon)? - cum.at(span)?;
    let sigma2 = scaled_spread(&means, ell, denom);
    Ok(BatchMeansEstimate { ell, k: m, means, sigma2, tail })
}
