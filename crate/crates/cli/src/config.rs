//! Experiment configuration: a TOML document with a few flat sections.
//! See `docs/config.md` for the schema.

use std::path::{Path, PathBuf};

use regensim::analysis::BatchSchedule;
use regensim::ctmc::{CtmcModel, ModelSpec};
use regensim::splitting::RegenerationRule;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    Occupation,
    BatchMeans,
    Mse,
    BmClt,
    SplittingVerify,
    Fluctuation,
    DiffusionRegularity,
}

impl Kind {
    pub const NAMES: [&'static str; 7] =
        ["occupation", "batch-means", "mse", "bm-clt", "splitting-verify", "fluctuation", "diffusion-regularity"];

    pub fn parse(name: &str) -> Option<Kind> {
        Some(match name {
            "occupation" => Kind::Occupation,
            "batch-means" => Kind::BatchMeans,
            "mse" => Kind::Mse,
            "bm-clt" => Kind::BmClt,
            "splitting-verify" => Kind::SplittingVerify,
            "fluctuation" => Kind::Fluctuation,
            "diffusion-regularity" => Kind::DiffusionRegularity,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Occupation => "occupation",
            Kind::BatchMeans => "batch-means",
            Kind::Mse => "mse",
            Kind::BmClt => "bm-clt",
            Kind::SplittingVerify => "splitting-verify",
            Kind::Fluctuation => "fluctuation",
            Kind::DiffusionRegularity => "diffusion-regularity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    pub seed: u64,
    pub horizon: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub model: ModelConfig,
    #[serde(default)]
    pub functional: Option<FunctionalConfig>,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub splitting: SplittingConfig,
    #[serde(default)]
    pub fluctuation: FluctuationConfig,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
}

fn default_reps() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Finite CTMC given inline or by a JSON model file.
    Ctmc {
        #[serde(default)]
        generator: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        file: Option<PathBuf>,
        #[serde(default)]
        labels: Option<Vec<String>>,
        /// Initial state; drawn from π when absent.
        #[serde(default)]
        x0: Option<usize>,
    },
    /// Exact Ornstein–Uhlenbeck on a grid.
    Ou {
        #[serde(default = "one")]
        theta: f64,
        #[serde(default = "sqrt2")]
        sigma: f64,
        #[serde(default = "tenth")]
        step: f64,
    },
    /// Zig-Zag on an isotropic Gaussian target.
    Zigzag {
        #[serde(default = "one_usize")]
        dim: usize,
        #[serde(default = "one")]
        variance: f64,
    },
    /// Bouncy particle sampler on an isotropic Gaussian target.
    Bps {
        #[serde(default = "one_usize")]
        dim: usize,
        #[serde(default = "one")]
        variance: f64,
        #[serde(default = "one")]
        refresh_rate: f64,
    },
    /// Standard Brownian motion on a grid.
    Brownian {
        #[serde(default = "one")]
        step: f64,
    },
    /// One-dimensional built-in SDE for regularity diagnostics.
    Sde {
        builtin: String,
        #[serde(default = "one")]
        theta: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default = "one")]
        kappa: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn sqrt2() -> f64 {
    std::f64::consts::SQRT_2
}
fn tenth() -> f64 {
    0.1
}
fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionalConfig {
    Indicator { states: Vec<usize> },
    State { values: Vec<f64> },
    Coordinate {
        #[serde(default)]
        coord: usize,
    },
    Monomial {
        #[serde(default)]
        coord: usize,
        power: usize,
    },
    Constant { value: f64 },
    SquaredNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// `ℓ_T = ⌈T^a⌉`.
    #[serde(default)]
    pub exponent: Option<f64>,
    /// `[[T, ℓ], …]`.
    #[serde(default)]
    pub table: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub lambda_prime: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Variance constant; computed exactly when the model allows it.
    #[serde(default)]
    pub sigma2: Option<f64>,
    /// Stationary mean of the functional.
    #[serde(default)]
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingConfig {
    #[serde(default = "default_small_set")]
    pub small_set: Vec<usize>,
    #[serde(default = "default_rule")]
    pub rule: String,
}

fn default_small_set() -> Vec<usize> {
    vec![0]
}
fn default_rule() -> String {
    "after-regeneration".into()
}

impl Default for SplittingConfig {
    fn default() -> Self {
        Self { small_set: default_small_set(), rule: default_rule() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuationConfig {
    /// `a_T = T^b`.
    #[serde(default = "default_window_exponent")]
    pub window_exponent: f64,
    /// Midpoint refinement for Brownian paths.
    #[serde(default)]
    pub refine: bool,
    /// Source of the variance constant in the bound: `exact`, `oracle` or `splitting`.
    #[serde(default = "default_constant")]
    pub constant: String,
}

fn default_window_exponent() -> f64 {
    0.8
}
fn default_constant() -> String {
    "splitting".into()
}

impl Default for FluctuationConfig {
    fn default() -> Self {
        Self { window_exponent: default_window_exponent(), refine: false, constant: default_constant() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    #[serde(default = "default_probes")]
    pub probes: Vec<f64>,
    #[serde(default = "default_true")]
    pub expect_recurrent: bool,
    /// Whether `∫ m` should be finite (positive recurrence); unchecked when absent.
    #[serde(default)]
    pub expect_finite_speed: Option<bool>,
}

fn default_probes() -> Vec<f64> {
    vec![-8.0, -4.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0, 8.0]
}
fn default_true() -> bool {
    true
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self { probes: default_probes(), expect_recurrent: true, expect_finite_speed: None }
    }
}

/// Pass criteria; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    /// Relative tolerance for single-replicate oracle comparisons.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Width of standard-error bands.
    #[serde(default = "default_se_band")]
    pub se_band: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_mse_bounds")]
    pub mse_ratio: [f64; 2],
    #[serde(default = "default_variance_bounds")]
    pub variance_ratio: [f64; 2],
    #[serde(default = "default_brownian_bounds")]
    pub brownian_max: [f64; 2],
    #[serde(default = "default_bound_factor")]
    pub bound_factor: f64,
}

fn default_tolerance() -> f64 {
    0.1
}
fn default_se_band() -> f64 {
    3.0
}
fn default_level() -> f64 {
    1e-3
}
fn default_mse_bounds() -> [f64; 2] {
    [0.7, 1.4]
}
fn default_variance_bounds() -> [f64; 2] {
    [0.8, 1.25]
}
fn default_brownian_bounds() -> [f64; 2] {
    [0.8, 1.1]
}
fn default_bound_factor() -> f64 {
    1.2
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            se_band: default_se_band(),
            level: default_level(),
            mse_ratio: default_mse_bounds(),
            variance_ratio: default_variance_bounds(),
            brownian_max: default_brownian_bounds(),
            bound_factor: default_bound_factor(),
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML, reporting the dotted path of the offending field.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::config("<document>", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { "<document>".to_string() } else { path }, e.inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn kind(&self) -> Result<Kind, CliError> {
        Kind::parse(&self.kind).ok_or_else(|| {
            CliError::config("kind", format!("unknown kind `{}`, expected one of {}", self.kind, Kind::NAMES.join(", ")))
        })
    }

    /// Field-level checks that do not need the model to be built.
    pub fn validate(&self) -> Result<Kind, CliError> {
        let kind = self.kind()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(CliError::config("horizon", format!("must be positive and finite, got {}", self.horizon)));
        }
        if self.reps < 1 {
            return Err(CliError::config("reps", "must be at least 1"));
        }
        if let Some(s) = &self.schedule {
            s.build()?;
        }
        RegenerationRule::parse_config(&self.splitting.rule)?;
        let c = &self.checks;
        for (name, [lo, hi]) in [("checks.mse_ratio", c.mse_ratio), ("checks.variance_ratio", c.variance_ratio), ("checks.brownian_max", c.brownian_max)] {
            if !(lo <= hi) {
                return Err(CliError::config(name, format!("lower bound {lo} exceeds upper bound {hi}")));
            }
        }
        if !(c.level > 0.0 && c.level < 1.0) {
            return Err(CliError::config("checks.level", format!("must lie in (0, 1), got {}", c.level)));
        }
        let b = self.fluctuation.window_exponent;
        if !(b > 0.0 && b <= 1.0) {
            return Err(CliError::config("fluctuation.window_exponent", format!("must lie in (0, 1], got {b}")));
        }
        if !["exact", "oracle", "splitting"].contains(&self.fluctuation.constant.as_str()) {
            return Err(CliError::config(
                "fluctuation.constant",
                format!("expected exact, oracle or splitting, got `{}`", self.fluctuation.constant),
            ));
        }
        Ok(kind)
    }

    pub fn schedule(&self) -> Result<BatchSchedule, CliError> {
        self.schedule.as_ref().ok_or_else(|| CliError::config("schedule", "required for this kind"))?.build()
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<BatchSchedule, CliError> {
        let base = match (&self.exponent, &self.table) {
            (Some(a), None) => {
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(CliError::config("schedule.exponent", format!("must lie in (0, 1), got {a}")));
                }
                BatchSchedule::power(*a).map_err(|e| CliError::config("schedule.exponent", e.to_string()))?
            }
            (None, Some(t)) => BatchSchedule::table(t.iter().map(|r| (r[0], r[1])).collect())
                .map_err(|e| CliError::config("schedule.table", e.to_string()))?,
            (Some(_), Some(_)) => return Err(CliError::config("schedule", "give either exponent or table, not both")),
            (None, None) => return Err(CliError::config("schedule", "needs exponent or table")),
        };
        if self.q.is_some() || self.delta.is_some() || self.lambda_prime.is_some() {
            let q = self.q.unwrap_or(base.q);
            let d = self.delta.unwrap_or(base.delta);
            let l = self.lambda_prime.unwrap_or(base.lambda_prime);
            return base.with_rates(q, d, l).map_err(|e| CliError::config("schedule", e.to_string()));
        }
        Ok(base)
    }
}

pub(crate) trait ParseRule: Sized {
    fn parse_config(s: &str) -> Result<Self, CliError>;
}

impl ParseRule for RegenerationRule {
    fn parse_config(s: &str) -> Result<Self, CliError> {
        match s {
            "after-regeneration" => Ok(RegenerationRule::AfterRegeneration),
            "every-atom-visit" => Ok(RegenerationRule::EveryAtomVisit),
            other => Err(CliError::config(
                "splitting.rule",
                format!("expected after-regeneration or every-atom-visit, got `{other}`"),
            )),
        }
    }
}

/// Builds the CTMC of a `ctmc` model section; `base` resolves relative file paths.
pub fn build_ctmc(
    generator: &Option<Vec<Vec<f64>>>,
    file: &Option<PathBuf>,
    labels: &Option<Vec<String>>,
    base: &Path,
) -> Result<CtmcModel, CliError> {
    let spec = match (generator, file) {
        (Some(rows), None) => {
            let n = rows.len();
            if let Some(i) = rows.iter().position(|r| r.len() != n) {
                return Err(CliError::config(format!("model.generator[{i}]"), format!("row length must be {n}")));
            }
            ModelSpec { n, q: rows.concat(), labels: labels.clone() }
        }
        (None, Some(f)) => {
            let p = if f.is_absolute() { f.clone() } else { base.join(f) };
            let text = std::fs::read_to_string(&p).map_err(|e| CliError::config("model.file", format!("{}: {e}", p.display())))?;
            let mut spec: ModelSpec =
                serde_json::from_str(&text).map_err(|e| CliError::config("model.file", format!("{}: {e}", p.display())))?;
            if labels.is_some() {
                spec.labels = labels.clone();
            }
            spec
        }
        _ => return Err(CliError::config("model", "ctmc needs exactly one of `generator` or `file`")),
    };
    CtmcModel::from_spec(&spec).map_err(|e| CliError::config("model.generator", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
kind = "batch-means"
seed = 7
horizon = 1e4
reps = 4

[model]
type = "ctmc"
generator = [[-1.0, 1.0], [2.0, -2.0]]

[functional]
name = "indicator"
states = [0]

[schedule]
exponent = 0.6
"#;

    #[test]
    fn parses_a_full_document() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.validate().unwrap(), Kind::BatchMeans);
        assert_eq!(c.functional, Some(FunctionalConfig::Indicator { states: vec![0] }));
        assert_eq!(c.checks, ChecksConfig::default());
    }

    #[test]
    fn bad_exponent_names_the_field() {
        let c = ExperimentConfig::from_toml(&BASE.replace("exponent = 0.6", "exponent = 1.5")).unwrap();
        match c.validate() {
            Err(CliError::Config { path, message }) => {
                assert_eq!(path, "schedule.exponent");
                assert!(message.contains("1.5"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_and_types_report_paths() {
        let e = ExperimentConfig::from_toml(&BASE.replace("reps = 4", "reps = \"four\"")).unwrap_err();
        assert!(matches!(&e, CliError::Config { path, .. } if path == "reps"), "{e}");
        let e = ExperimentConfig::from_toml(&BASE.replace("exponent = 0.6", "exponent = 0.6\nbogus = 1")).unwrap_err();
        assert!(matches!(&e, CliError::Config { path, .. } if path.starts_with("schedule")), "{e}");
        let e = ExperimentConfig::from_toml(&BASE.replace("horizon = 1e4\n", "")).unwrap_err();
        assert!(e.to_string().contains("horizon"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_kind_is_a_config_error() {
        let c = ExperimentConfig::from_toml(&BASE.replace("batch-means", "nope")).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config { path, .. }) if path == "kind"));
    }

    #[test]
    fn ragged_generator_rejected() {
        let e = build_ctmc(&Some(vec![vec![-1.0, 1.0], vec![2.0]]), &None, &None, Path::new(".")).unwrap_err();
        assert!(matches!(e, CliError::Config { path, .. } if path == "model.generator[1]"));
    }
}
