use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::batch::{batch_means, BatchSchedule};
use crate::rng::{SimRng, Streams};
use crate::stats::{ks_test, mean, normal_cdf, sample_variance, KsResult};
use crate::trajectory::{Functional, Trajectory};
use crate::{Error, Result};

pub const MIN_MSE_REPLICATES: usize = 100;
pub const MIN_CLT_REPLICATES: usize = 200;
const BOOTSTRAP_RESAMPLES: usize = 2000;

/// Runs `job(i, rng_i)` for `i in 0..reps` in parallel, replicate `i` on
/// stream `i`. Results come back in replicate order.
pub fn run_replicates<T, F>(streams: &Streams, reps: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> Result<T> + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(i as u64);
            job(i, &mut rng).map_err(|e| Error::Replicate { index: i, source: Box::new(e) })
        })
        .collect()
}

/// One replicate of a batch-means experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub t: f64,
    pub ell: f64,
    pub k: usize,
    pub sigma2_hat: f64,
}

/// CSV with columns `replicate, T, ell, k, sigma2_hat, oracle_sigma2, seed`.
pub fn write_replicate_csv<W: Write>(rows: &[ReplicateRow], oracle_sigma2: f64, master_seed: u64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replicate", "T", "ell", "k", "sigma2_hat", "oracle_sigma2", "seed"])?;
    for r in rows {
        w.write_record([
            r.replicate.to_string(),
            r.t.to_string(),
            r.ell.to_string(),
            r.k.to_string(),
            r.sigma2_hat.to_string(),
            oracle_sigma2.to_string(),
            master_seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseReport {
    pub rows: Vec<ReplicateRow>,
    pub oracle_sigma2: f64,
    pub mse: f64,
    /// Percentile bootstrap 95% interval for the MSE.
    pub mse_ci: (f64, f64),
    /// Leading term `2σ⁴ℓ/T`.
    pub predicted: f64,
    /// `mse / predicted`; absent when the prediction is zero.
    pub ratio: Option<f64>,
    pub mean_sigma2: f64,
    /// Normal 95% interval for `E σ̂²`.
    pub mean_ci: (f64, f64),
}

/// Replicates batch means on independent trajectories and compares the
/// empirical MSE against `2σ⁴ℓ_T/T`. The oracle `σ²` is supplied, never
/// estimated here.
pub fn mse_experiment<S>(
    sim_factory: S,
    f: &Functional,
    schedule: &BatchSchedule,
    horizon: f64,
    reps: usize,
    streams: &Streams,
    oracle_sigma2: f64,
) -> Result<MseReport>
where
    S: Fn(f64, &mut SimRng) -> Result<Trajectory> + Sync,
{
    if reps < MIN_MSE_REPLICATES {
        return Err(Error::InsufficientReplicates { needed: MIN_MSE_REPLICATES, have: reps });
    }
    let rows = run_replicates(streams, reps, |i, rng| {
        let traj = sim_factory(horizon, rng)?;
        let est = batch_means(&traj, f, schedule)?;
        Ok(ReplicateRow { replicate: i, t: traj.horizon(), ell: est.ell, k: est.k, sigma2_hat: est.sigma2 })
    })?;
    let sq: Vec<f64> = rows.iter().map(|r| (r.sigma2_hat - oracle_sigma2).powi(2)).collect();
    let mse = mean(&sq);
    let mut boot_rng = streams.fork(0xb007).stream(0);
    let mut boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..reps).map(|_| sq[boot_rng.random_range(0..reps)]).sum::<f64>() / reps as f64)
        .collect();
    boots.sort_by(f64::total_cmp);
    let mse_ci = (boots[(0.025 * BOOTSTRAP_RESAMPLES as f64) as usize], boots[(0.975 * BOOTSTRAP_RESAMPLES as f64) as usize - 1]);
    let ell = rows[0].ell;
    let predicted = 2.0 * oracle_sigma2 * oracle_sigma2 * ell / horizon;
    let est: Vec<f64> = rows.iter().map(|r| r.sigma2_hat).collect();
    let mean_sigma2 = mean(&est);
    let se = (sample_variance(&est) / reps as f64).sqrt();
    Ok(MseReport {
        oracle_sigma2,
        mse,
        mse_ci,
        predicted,
        ratio: (predicted > 0.0).then(|| mse / predicted),
        mean_sigma2,
        mean_ci: (mean_sigma2 - 1.96 * se, mean_sigma2 + 1.96 * se),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmCltReport {
    pub n: usize,
    pub ks: KsResult,
    /// Sample variance of `√k(σ̂² − σ²)` divided by `2σ⁴`.
    pub variance_ratio: f64,
    /// Mean of the standardised values.
    pub standardized_mean: f64,
}

/// Checks `√k(σ̂² − σ²) ≈ N(0, 2σ⁴)` across replicates.
pub fn bm_clt_check(estimates: &[f64], sigma2: f64, k: usize) -> Result<BmCltReport> {
    if estimates.len() < MIN_CLT_REPLICATES {
        return Err(Error::InsufficientReplicates { needed: MIN_CLT_REPLICATES, have: estimates.len() });
    }
    if !(sigma2 > 0.0) || k < 2 {
        return Err(Error::InvalidArgument("need sigma2 > 0 and k >= 2".into()));
    }
    let scale = (2.0 * sigma2 * sigma2).sqrt();
    let z: Vec<f64> = estimates.iter().map(|s| (k as f64).sqrt() * (s - sigma2) / scale).collect();
    Ok(BmCltReport {
        n: z.len(),
        ks: ks_test(&z, normal_cdf)?,
        variance_ratio: sample_variance(&z),
        standardized_mean: mean(&z),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub n: usize,
    pub ks: KsResult,
    pub mean: f64,
    pub variance: f64,
}

/// Checks `√T(μ̂_T − μ)/σ ≈ N(0, 1)`; `averages` are the unscaled `√T(μ̂_T − μ)`.
pub fn clt_normality_check(averages: &[f64], sigma2: f64) -> Result<NormalityReport> {
    if averages.len() < MIN_CLT_REPLICATES {
        return Err(Error::InsufficientReplicates { needed: MIN_CLT_REPLICATES, have: averages.len() });
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument("sigma2 must be positive".into()));
    }
    let s = sigma2.sqrt();
    let z: Vec<f64> = averages.iter().map(|a| a / s).collect();
    Ok(NormalityReport { n: z.len(), ks: ks_test(&z, normal_cdf)?, mean: mean(&z), variance: sample_variance(&z) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal, StudentT};

    #[test]
    fn replicates_are_ordered_and_deterministic() {
        let s = Streams::new(9);
        let a = run_replicates(&s, 64, |i, rng| Ok((i, rng.random::<u64>()))).unwrap();
        let b = run_replicates(&s, 64, |i, rng| Ok((i, rng.random::<u64>()))).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, (j, _))| i == *j));
        let err = run_replicates(&s, 8, |i, _| if i == 5 { Err(Error::ZeroGradient) } else { Ok(i) });
        assert!(matches!(err, Err(Error::Replicate { index: 5, .. })));
    }

    #[test]
    fn null_calibration_and_power() {
        let sigma2 = 2.0;
        let k = 40;
        let mut rng = Streams::new(3).stream(0);
        let law = Normal::new(sigma2, (2.0 * sigma2 * sigma2 / k as f64).sqrt()).unwrap();
        let est: Vec<f64> = (0..1000).map(|_| law.sample(&mut rng)).collect();
        let r = bm_clt_check(&est, sigma2, k).unwrap();
        assert!(r.ks.passes(1e-3) && (r.variance_ratio - 1.0).abs() < 0.15);
        let t = StudentT::new(1.5).unwrap();
        let heavy: Vec<f64> = (0..1000).map(|_| sigma2 + t.sample(&mut rng)).collect();
        assert!(!bm_clt_check(&heavy, sigma2, k).unwrap().ks.passes(1e-3));
        assert!(bm_clt_check(&est[..100], sigma2, k).is_err());
        let avg: Vec<f64> = (0..500).map(|_| Normal::new(0.0, 0.5f64.sqrt()).unwrap().sample(&mut rng)).collect();
        assert!(clt_normality_check(&avg, 0.5).unwrap().ks.passes(1e-3));
    }

    #[test]
    fn degenerate_functional_has_zero_mse() {
        let m = crate::ctmc::CtmcModel::from_rows(&[&[-1.0, 1.0], &[2.0, -2.0]]).unwrap();
        let r = mse_experiment(
            |t, rng| Ok(crate::ctmc::simulate_ctmc(&m, 0, t, rng)?.into()),
            &Functional::Constant(0.0),
            &BatchSchedule::power(0.5).unwrap(),
            1000.0,
            100,
            &Streams::new(1),
            0.0,
        )
        .unwrap();
        assert_eq!(r.mse, 0.0);
        assert_eq!(r.ratio, None);
    }
}
