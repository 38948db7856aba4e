use crate::config::Kind;
use crate::error::CliError;

/// Inputs, oracle and pass criteria of an experiment kind.
pub fn describe(kind: &str) -> Result<String, CliError> {
    let k = Kind::parse(kind).ok_or_else(|| CliError::UnknownKind(kind.to_string()))?;
    Ok(text(k).trim_start().to_string())
}

fn text(kind: Kind) -> &'static str {
    match kind {
        Kind::Occupation => {
            r#"
occupation: time-occupation fractions of a finite CTMC.
  inputs : [model] type = "ctmc" (generator or file), horizon T, reps
  oracle : stationary law pi from the generator; per-state variance
           sigma^2 of the indicator from the Poisson equation
  checks : occupation-vs-pi  |mean fraction - pi(x)| <= se_band * sqrt(sigma^2_x / (T reps))
  output : occupation.csv (replicate, state, fraction, pi)
"#
        }
        Kind::BatchMeans => {
            r#"
batch-means: non-overlapping batch-means estimate of the time-average
variance constant, one trajectory per replicate.
  inputs : model (ctmc | ou | zigzag | bps | brownian), [functional],
           [schedule] exponent a (ell_T = ceil(T^a)) or table, horizon, reps
  oracle : sigma^2 exact for CTMCs (Poisson equation) and for OU with
           f(x) = x (sigma^2/theta^2); otherwise [oracle] sigma2
  checks : schedule-assumptions  growth and monotonicity of ell_T and T/ell_T on
                                 T/100, T/10, T; exponent inside the consistency
                                 region a > 1 - 2 lambda (bias trend reported)
           oracle-agreement      reps >= 2: oracle within se_band standard
                                 errors of the replicate mean;
                                 reps = 1: relative error <= tolerance
  output : replicates.csv (replicate, T, ell, k, sigma2_hat, oracle_sigma2, seed)
           ending in a `summary` row with the replicate mean, summary.json
           (mean, standard error, oracle), schedule.csv
"#
        }
        Kind::Mse => {
            r#"
mse: empirical mean squared error of batch means against its leading term
2 sigma^4 ell / T (written 2σ⁴ℓ/T).
  inputs : model, [functional], [schedule], horizon, reps >= 100
  oracle : injected sigma^2 (exact where available), never estimated
  checks : mse-ratio  MSE / (2σ⁴ℓ/T) within checks.mse_ratio (default [0.7, 1.4])
  output : replicates.csv, mse.json (MSE with bootstrap interval, ratio)
"#
        }
        Kind::BmClt => {
            r#"
bm-clt: central limit theorem for batch means,
sqrt(k)(sigma2_hat - sigma^2) ~ N(0, 2 sigma^4).
  inputs : model, [functional], [schedule], horizon, reps >= 200
  oracle : injected sigma^2
  checks : ks              Kolmogorov-Smirnov p-value > checks.level (default 1e-3)
           variance-ratio  sample variance / 2σ⁴ within checks.variance_ratio
                           (default [0.8, 1.25])
  output : replicates.csv, clt.json
"#
        }
        Kind::SplittingVerify => {
            r#"
splitting-verify: split-chain regeneration diagnostics for a finite CTMC.
  inputs : [model] type = "ctmc", [splitting] small_set, rule
           (after-regeneration | every-atom-visit), horizon, [functional]
  oracle : minorisation U >= alpha nu on C from the resolvent U = (I - Q)^-1;
           exact mean cycle length from a linear solve
  checks : kernel-reconstruction  alpha nu + (1 - alpha) W = U on C (1e-12)
           regeneration-law       Z_{R_n} ~ nu (chi-square at checks.level, or
                                  support check when nu is a point mass)
           one-dependence         lag 2..5 cycle autocorrelations inside the
                                  99.9% band
           rho                    rho_hat within se_band standard errors of the
                                  exact mean cycle length
  output : cycles.csv (n, S_n, R_n, rho_n, xi_n, first_cycle_flag),
           regenerative.json (rho_hat, sigma2_xi / rho_hat, exact sigma^2)
"#
        }
        Kind::Fluctuation => {
            r#"
fluctuation: windowed increment suprema
sup_{t <= T - a_T} sup_{u <= a_T} |int_t^{t+u} (f - mu)| scaled by
beta_T = (2 a_T [log(T/a_T) + log log T])^(-1/2).
  inputs : model brownian (grid step) or ctmc/ou/zigzag/bps, [functional],
           [fluctuation] window_exponent b (a_T = T^b), refine, constant
  oracle : Brownian: the normalised supremum is close to 1 for large T.
           Otherwise the statistic is bounded by bound_factor * sqrt(sigma^2)
           with sigma^2 exact, injected, or from the split chain
  checks : brownian-max  max over paths within checks.brownian_max (default [0.8, 1.1])
           soft-bound    every replicate <= checks.bound_factor * sqrt(sigma^2)
  output : fluctuation.csv
"#
        }
        Kind::DiffusionRegularity => {
            r#"
diffusion-regularity: scale function s, speed density m = 1/(s' sigma^2) and a
recurrence diagnostic for a one-dimensional SDE.
  inputs : [model] type = "sde", builtin (ou | double-well | brownian | repelling),
           [diffusion] probes, expect_recurrent, expect_finite_speed
  oracle : closed-form drift and volatility of the built-in
  checks : recurrence       verdict matches expect_recurrent
           speed-measure    total speed measure finite iff expect_finite_speed
                            (only when that field is set)
  output : regularity.csv (u, scale, speed_density), recurrence.json
"#
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_kinds_describe() {
        for k in Kind::NAMES {
            assert!(describe(k).unwrap().starts_with(k));
        }
        assert!(describe("mse").unwrap().contains("2σ⁴ℓ/T"));
        assert!(describe("fluctuation").unwrap().contains("beta_T = (2 a_T [log(T/a_T) + log log T])^(-1/2)"));
        assert!(matches!(describe("bogus"), Err(CliError::UnknownKind(_))));
    }
}
