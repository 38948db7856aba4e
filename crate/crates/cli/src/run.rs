//! One experiment per invocation: build the model, run the replicates, write
//! the CSV/JSON artifacts and a manifest with a pass flag per check.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use regensim::analysis::{
    batch_means, bm_clt_check, brownian_increment_check, fluctuation_statistic, mse_experiment, run_replicates,
    validate_batch_schedule, write_replicate_csv, ReplicateRow, MIN_CLT_REPLICATES, MIN_MSE_REPLICATES,
};
use regensim::ctmc::{asymptotic_variance_exact, simulate_ctmc, stationary_distribution, CtmcModel, ProbVector};
use regensim::diffusion::{
    ou_simulate_exact, ou_stationary_draw, recurrence_check, scale_function, speed_density, speed_measure_total, GridPath,
    RecurrenceVerdict, SdeModel,
};
use regensim::pdmp::{bps_simulate, zigzag_simulate, GaussianTarget, PdmpState, VelocityLaw};
use regensim::splitting::{
    build_minorisation, cycle_functionals, expected_cycle_length, one_dependence_test, regeneration_states,
    regenerative_estimates, residual_kernel, simulate_split_chain, RegenerationRule, SplitOptions,
};
use regensim::stats::{chi_square_gof, mean, sample_variance};
use regensim::{Functional, SimRng, Streams, Trajectory};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{build_ctmc, ExperimentConfig, FunctionalConfig, Kind, ModelConfig, ParseRule};
use crate::error::CliError;

/// Stream family used for the split chain behind the fluctuation constant.
const SPLIT_CONSTANT_TAG: u64 = 0x5917;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces the configured master seed.
    pub seed: Option<u64>,
    /// Size of the replicate pool; rayon's default when absent.
    pub threads: Option<usize>,
    /// Output directory; wins over the configured one.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub replicate: usize,
    pub master_seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Written as `manifest.json` next to the artifacts. Carries no timestamps,
/// so reruns with the same config and seed produce the same file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    /// SHA-256 of the effective config (seed override applied, `out` cleared) as JSON.
    pub config_sha256: String,
    pub master_seed: u64,
    pub replicate_streams: Vec<StreamRecord>,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Loads `config_path`, runs the experiment and returns the manifest and the
/// output directory.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<(RunManifest, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let base = match config_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let out_dir = match (&opts.out, &cfg.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) if o.is_absolute() => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("runs").join(format!("{}-{}", cfg.kind, cfg.seed)),
    };
    run_config(&cfg, &base, &out_dir, opts.threads).map(|m| (m, out_dir))
}

/// Runs an already parsed config; `base` resolves relative model files.
pub fn run_config(
    cfg: &ExperimentConfig,
    base: &Path,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<RunManifest, CliError> {
    let kind = cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::config("--threads", "must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::config("--threads", e.to_string()))?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;

    let mut ctx = Ctx {
        cfg,
        base,
        out: out_dir,
        streams: Streams::new(cfg.seed),
        artifacts: Vec::new(),
        checks: Vec::new(),
        streams_used: 0,
    };
    pool.install(|| execute(kind, &mut ctx))?;

    let mut hashed = cfg.clone();
    hashed.out = None;
    let json = serde_json::to_string(&hashed).expect("config serializes");
    let manifest = RunManifest {
        tool: "regensim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: kind.name().into(),
        config_sha256: sha256_hex(json.as_bytes()),
        master_seed: cfg.seed,
        replicate_streams: (0..ctx.streams_used)
            .map(|i| StreamRecord { replicate: i, master_seed: cfg.seed, stream: i as u64 })
            .collect(),
        passed: ctx.checks.iter().all(|c| c.passed),
        artifacts: ctx.artifacts,
        checks: ctx.checks,
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    base: &'a Path,
    out: &'a Path,
    streams: Streams,
    artifacts: Vec<Artifact>,
    checks: Vec<Check>,
    streams_used: usize,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.artifacts.push(Artifact { path: name.into(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
        self.write(name, text.as_bytes())
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }
}

fn execute(kind: Kind, ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    let sim = Sim::build(&ctx.cfg.model, ctx.base)?;
    if kind == Kind::DiffusionRegularity {
        return match &sim {
            Sim::Sde(model) => diffusion_regularity(ctx, model),
            _ => Err(CliError::config("model.type", "diffusion-regularity needs an sde model")),
        };
    }
    if matches!(sim, Sim::Sde(_)) {
        return Err(CliError::config("model.type", format!("{} needs a simulated model, not sde", kind.name())));
    }
    let f = build_functional(ctx.cfg.functional.as_ref(), &sim)?;
    let oracle = Oracle::resolve(ctx.cfg, &sim, &f)?;
    match kind {
        Kind::Occupation => occupation(ctx, &sim),
        Kind::BatchMeans => batch_means_run(ctx, &sim, &f, &oracle),
        Kind::Mse => mse_run(ctx, &sim, &f, &oracle),
        Kind::BmClt => bm_clt_run(ctx, &sim, &f, &oracle),
        Kind::SplittingVerify => splitting_verify(ctx, &sim, &f),
        Kind::Fluctuation => fluctuation_run(ctx, &sim, &f, &oracle),
        Kind::DiffusionRegularity => unreachable!(),
    }
}

enum Sim {
    Ctmc { model: CtmcModel, pi: ProbVector, x0: Option<usize> },
    Ou { theta: f64, sigma: f64, step: f64 },
    Zigzag { target: GaussianTarget, variance: f64 },
    Bps { target: GaussianTarget, variance: f64, refresh_rate: f64 },
    Brownian { step: f64 },
    Sde(SdeModel),
}

fn positive(path: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(path, format!("must be positive and finite, got {v}")))
    }
}

impl Sim {
    fn build(model: &ModelConfig, base: &Path) -> Result<Sim, CliError> {
        let gaussian = |dim: usize, variance: f64| -> Result<GaussianTarget, CliError> {
            if dim == 0 {
                return Err(CliError::config("model.dim", "must be at least 1"));
            }
            positive("model.variance", variance)?;
            GaussianTarget::isotropic(dim, variance).map_err(|e| CliError::config("model", e.to_string()))
        };
        Ok(match model {
            ModelConfig::Ctmc { generator, file, labels, x0 } => {
                let model = build_ctmc(generator, file, labels, base)?;
                if let Some(x) = x0 {
                    if *x >= model.n() {
                        return Err(CliError::config("model.x0", format!("state {x} outside 0..{}", model.n())));
                    }
                }
                let pi = stationary_distribution(&model).map_err(|e| CliError::config("model.generator", e.to_string()))?;
                Sim::Ctmc { model, pi, x0: *x0 }
            }
            ModelConfig::Ou { theta, sigma, step } => Sim::Ou {
                theta: positive("model.theta", *theta)?,
                sigma: positive("model.sigma", *sigma)?,
                step: positive("model.step", *step)?,
            },
            ModelConfig::Zigzag { dim, variance } => Sim::Zigzag { target: gaussian(*dim, *variance)?, variance: *variance },
            ModelConfig::Bps { dim, variance, refresh_rate } => Sim::Bps {
                target: gaussian(*dim, *variance)?,
                variance: *variance,
                refresh_rate: positive("model.refresh_rate", *refresh_rate)?,
            },
            ModelConfig::Brownian { step } => Sim::Brownian { step: positive("model.step", *step)? },
            ModelConfig::Sde { builtin, theta, sigma, kappa } => {
                let sigma = positive("model.sigma", *sigma)?;
                let m = match builtin.as_str() {
                    "ou" => SdeModel::ornstein_uhlenbeck(positive("model.theta", *theta)?, sigma),
                    "double-well" => SdeModel::double_well(sigma),
                    "brownian" => SdeModel::brownian(sigma),
                    "repelling" => SdeModel::repelling(positive("model.kappa", *kappa)?, sigma),
                    other => {
                        return Err(CliError::config(
                            "model.builtin",
                            format!("unknown built-in `{other}`, expected ou, double-well, brownian or repelling"),
                        ))
                    }
                };
                Sim::Sde(m.map_err(|e| CliError::config("model", e.to_string()))?)
            }
        })
    }

    /// Position dimension of continuous models; `None` for CTMCs.
    fn dim(&self) -> Option<usize> {
        match self {
            Sim::Ctmc { .. } => None,
            Sim::Zigzag { target, .. } | Sim::Bps { target, .. } => Some(regensim::pdmp::Potential::dim(target)),
            _ => Some(1),
        }
    }

    /// One path on `[0, horizon]` started in stationarity unless a CTMC `x0` is set.
    fn simulate(&self, horizon: f64, rng: &mut SimRng) -> regensim::Result<Trajectory> {
        let gaussian_start = |d: usize, variance: f64, rng: &mut SimRng| -> Vec<f64> {
            VelocityLaw::Gaussian.draw(d, rng).into_iter().map(|z| z * variance.sqrt()).collect()
        };
        Ok(match self {
            Sim::Ctmc { model, pi, x0 } => {
                let x = x0.unwrap_or_else(|| pi.sample(rng));
                simulate_ctmc(model, x, horizon, rng)?.into()
            }
            Sim::Ou { theta, sigma, step } => {
                let x0 = ou_stationary_draw(*theta, *sigma, rng);
                ou_simulate_exact(*theta, *sigma, x0, horizon, *step, rng)?.into()
            }
            Sim::Zigzag { target, variance } => {
                let d = regensim::pdmp::Potential::dim(target);
                let x = gaussian_start(d, *variance, rng);
                let v = VelocityLaw::Gaussian.draw(d, rng).into_iter().map(|z| if z < 0.0 { -1.0 } else { 1.0 }).collect();
                zigzag_simulate(target, &PdmpState::new(x, v), horizon, rng)?.into()
            }
            Sim::Bps { target, variance, refresh_rate } => {
                let d = regensim::pdmp::Potential::dim(target);
                let x = gaussian_start(d, *variance, rng);
                let v = VelocityLaw::UnitSphere.draw(d, rng);
                bps_simulate(target, *refresh_rate, VelocityLaw::UnitSphere, &PdmpState::new(x, v), horizon, rng)?.into()
            }
            Sim::Brownian { step } => {
                let m = (horizon / step).round() as usize;
                let mut w = Vec::with_capacity(m + 1);
                w.push(0.0);
                for z in VelocityLaw::Gaussian.draw(m, rng) {
                    w.push(w[w.len() - 1] + step.sqrt() * z);
                }
                GridPath::new(*step, w)?.into()
            }
            Sim::Sde(_) => {
                return Err(regensim::Error::InvalidArgument("sde models are analysed, not simulated".into()));
            }
        })
    }
}

fn build_functional(spec: Option<&FunctionalConfig>, sim: &Sim) -> Result<Functional, CliError> {
    let n = match sim {
        Sim::Ctmc { model, .. } => Some(model.n()),
        _ => None,
    };
    let need_states = |name: &str| {
        n.ok_or_else(|| CliError::config("functional.name", format!("`{name}` needs a ctmc model")))
    };
    let need_coord = |coord: usize| -> Result<(), CliError> {
        match sim.dim() {
            None => Err(CliError::config("functional.name", "position functionals need a continuous model")),
            Some(d) if coord >= d => Err(CliError::config("functional.coord", format!("coordinate {coord} outside 0..{d}"))),
            Some(_) => Ok(()),
        }
    };
    let default = FunctionalConfig::Indicator { states: vec![0] };
    let default_cont = FunctionalConfig::Coordinate { coord: 0 };
    let spec = spec.unwrap_or(if n.is_some() { &default } else { &default_cont });
    Ok(match spec {
        FunctionalConfig::Indicator { states } => {
            let n = need_states("indicator")?;
            if let Some(s) = states.iter().find(|s| **s >= n) {
                return Err(CliError::config("functional.states", format!("state {s} outside 0..{n}")));
            }
            Functional::indicator(n, states)
        }
        FunctionalConfig::State { values } => {
            let n = need_states("state")?;
            if values.len() != n {
                return Err(CliError::config("functional.values", format!("need {n} values, got {}", values.len())));
            }
            Functional::State(values.clone())
        }
        FunctionalConfig::Coordinate { coord } => {
            need_coord(*coord)?;
            Functional::coordinate(*coord)
        }
        FunctionalConfig::Monomial { coord, power } => {
            need_coord(*coord)?;
            if *power > regensim::trajectory::MAX_EXACT_DEGREE {
                return Err(CliError::config(
                    "functional.power",
                    format!("degree {power} exceeds {}", regensim::trajectory::MAX_EXACT_DEGREE),
                ));
            }
            Functional::monomial(*coord, *power)
        }
        FunctionalConfig::Constant { value } => Functional::Constant(*value),
        FunctionalConfig::SquaredNorm => {
            need_coord(0)?;
            Functional::custom(|x, _| x.iter().map(|c| c * c).sum())
        }
    })
}

/// Stationary mean and variance constant of the functional, with their origin.
#[derive(Debug, Clone, Serialize)]
struct Oracle {
    sigma2: Option<f64>,
    mean: Option<f64>,
    source: &'static str,
}

impl Oracle {
    fn resolve(cfg: &ExperimentConfig, sim: &Sim, f: &Functional) -> Result<Oracle, CliError> {
        let is_x0 = matches!(f, Functional::Polynomial { coord: 0, coeffs } if coeffs[..] == [0.0, 1.0]);
        let is_coordinate = matches!(f, Functional::Polynomial { coeffs, .. } if coeffs[..] == [0.0, 1.0]);
        Ok(match (sim, f) {
            (Sim::Ctmc { model, pi, .. }, Functional::State(v)) => {
                Oracle { sigma2: Some(asymptotic_variance_exact(model, v)?), mean: Some(pi.expect(v)), source: "exact" }
            }
            (Sim::Ou { theta, sigma, .. }, _) if is_x0 => {
                Oracle { sigma2: Some(sigma * sigma / (theta * theta)), mean: Some(0.0), source: "exact" }
            }
            (_, Functional::Constant(c)) => Oracle { sigma2: Some(0.0), mean: Some(*c), source: "exact" },
            _ => {
                let symmetric = matches!(sim, Sim::Ou { .. } | Sim::Zigzag { .. } | Sim::Bps { .. }) && is_coordinate;
                let squared = match (sim, cfg.functional.as_ref()) {
                    (Sim::Zigzag { target, variance } | Sim::Bps { target, variance, .. }, Some(FunctionalConfig::SquaredNorm)) => {
                        Some(regensim::pdmp::Potential::dim(target) as f64 * variance)
                    }
                    (Sim::Ou { theta, sigma, .. }, Some(FunctionalConfig::SquaredNorm)) => Some(sigma * sigma / (2.0 * theta)),
                    _ => None,
                };
                let mean = cfg.oracle.mean.or(if symmetric { Some(0.0) } else { squared });
                Oracle { sigma2: cfg.oracle.sigma2, mean, source: "config" }
            }
        })
    }

    fn require_sigma2(&self) -> Result<f64, CliError> {
        self.sigma2.ok_or_else(|| CliError::config("oracle.sigma2", "no exact variance for this model; set oracle.sigma2"))
    }
}

fn require_ctmc<'s>(sim: &'s Sim, kind: &str) -> Result<(&'s CtmcModel, &'s ProbVector, Option<usize>), CliError> {
    match sim {
        Sim::Ctmc { model, pi, x0 } => Ok((model, pi, *x0)),
        _ => Err(CliError::config("model.type", format!("{kind} needs a ctmc model"))),
    }
}

fn occupation(ctx: &mut Ctx<'_>, sim: &Sim) -> Result<(), CliError> {
    let (model, pi, _) = require_ctmc(sim, "occupation")?;
    let (n, horizon, reps) = (model.n(), ctx.cfg.horizon, ctx.cfg.reps);
    let fractions = run_replicates(&ctx.streams, reps, |_, rng| match sim.simulate(horizon, rng)? {
        Trajectory::Jump(p) => Ok(p.occupation_fractions(n)),
        _ => unreachable!("ctmc paths are jump paths"),
    })?;
    ctx.streams_used = reps;
    let mut csv = String::from("replicate,state,fraction,pi\n");
    for (i, fr) in fractions.iter().enumerate() {
        for (x, v) in fr.iter().enumerate() {
            writeln!(csv, "{i},{x},{v},{}", pi[x]).unwrap();
        }
    }
    ctx.write("occupation.csv", csv.as_bytes())?;
    let band = ctx.cfg.checks.se_band;
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for x in 0..n {
        let m = mean(&fractions.iter().map(|fr| fr[x]).collect::<Vec<_>>());
        let var = asymptotic_variance_exact(model, &Functional::indicator(n, &[x]).state_values())?;
        let se = (var.max(0.0) / (horizon * reps as f64)).sqrt();
        let diff = (m - pi[x]).abs();
        passed &= diff <= band * se + 1e-12;
        if se > 0.0 {
            worst = worst.max(diff / se);
        }
    }
    ctx.check("occupation-vs-pi", passed, format!("largest |mean - pi| / se = {worst:.3}, band {band}"));
    Ok(())
}

trait StateValues {
    fn state_values(self) -> Vec<f64>;
}

impl StateValues for Functional {
    fn state_values(self) -> Vec<f64> {
        match self {
            Functional::State(v) => v,
            _ => unreachable!("indicator functionals are state functionals"),
        }
    }
}

fn replicate_rows(ctx: &mut Ctx<'_>, sim: &Sim, f: &Functional) -> Result<Vec<ReplicateRow>, CliError> {
    let schedule = ctx.cfg.schedule()?;
    let (horizon, reps) = (ctx.cfg.horizon, ctx.cfg.reps);
    let rows = run_replicates(&ctx.streams, reps, |i, rng| {
        let traj = sim.simulate(horizon, rng)?;
        let est = batch_means(&traj, f, &schedule)?;
        Ok(ReplicateRow { replicate: i, t: traj.horizon(), ell: est.ell, k: est.k, sigma2_hat: est.sigma2 })
    })?;
    ctx.streams_used = reps;
    Ok(rows)
}

fn replicate_csv(rows: &[ReplicateRow], oracle: Option<f64>, seed: u64) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_replicate_csv(rows, oracle.unwrap_or(f64::NAN), seed, &mut buf)?;
    Ok(buf)
}

fn batch_means_run(ctx: &mut Ctx<'_>, sim: &Sim, f: &Functional, oracle: &Oracle) -> Result<(), CliError> {
    let rows = replicate_rows(ctx, sim, f)?;
    let est: Vec<f64> = rows.iter().map(|r| r.sigma2_hat).collect();
    let m = mean(&est);
    let se = if est.len() > 1 { (sample_variance(&est) / est.len() as f64).sqrt() } else { f64::NAN };
    let seed = ctx.cfg.seed;
    let mut csv = replicate_csv(&rows, oracle.sigma2, seed)?;
    let first = &rows[0];
    let o = oracle.sigma2.unwrap_or(f64::NAN);
    csv.extend_from_slice(format!("summary,{},{},{},{m},{o},{seed}\n", first.t, first.ell, first.k).as_bytes());
    ctx.write("replicates.csv", &csv)?;
    ctx.write_json(
        "summary.json",
        &serde_json::json!({
            "reps": rows.len(),
            "mean_sigma2_hat": m,
            "standard_error": se,
            "oracle": oracle,
            "relative_error": oracle.sigma2.map(|o| (m - o) / o),
        }),
    )?;

    if let Some(o) = oracle.sigma2 {
        let (passed, detail) = if rows.len() >= 2 {
            let band = ctx.cfg.checks.se_band;
            ((m - o).abs() <= band * se, format!("mean {m:.6} vs oracle {o:.6}, se {se:.3e}, band {band}"))
        } else {
            let tol = ctx.cfg.checks.tolerance;
            let rel = ((m - o) / o).abs();
            (rel <= tol, format!("estimate {m:.6} vs oracle {o:.6}, relative error {rel:.4}, tolerance {tol}"))
        };
        ctx.check("oracle-agreement", passed, detail);
    }

    let schedule = ctx.cfg.schedule()?;
    if schedule.exponent().is_some() {
        let t = ctx.cfg.horizon;
        let grid: Vec<f64> = [t / 100.0, t / 10.0, t].into_iter().filter(|g| *g > 1.0).collect();
        if grid.len() >= 2 {
            let rep = validate_batch_schedule(&schedule, &grid)?;
            let mut csv = String::from("T,ell,k,ell_over_T,psi,bias_term\n");
            for r in &rep.rows {
                writeln!(csv, "{},{},{},{},{},{}", r.t, r.ell, r.k, r.ell_over_t, r.psi, r.bias_term).unwrap();
            }
            ctx.write("schedule.csv", csv.as_bytes())?;
            let passed = rep.growth_ok && rep.monotone_ok && rep.consistency_region;
            ctx.check(
                "schedule-assumptions",
                passed,
                format!(
                    "growth {}, monotone {}, bias trend decreasing {}, consistency region {}, clt region {}",
                    rep.growth_ok, rep.monotone_ok, rep.bias_trend_decreasing, rep.consistency_region, rep.clt_region
                ),
            );
        }
    }
    Ok(())
}

fn mse_run(ctx: &mut Ctx<'_>, sim: &Sim, f: &Functional, oracle: &Oracle) -> Result<(), CliError> {
    if ctx.cfg.reps < MIN_MSE_REPLICATES {
        return Err(CliError::config("reps", format!("mse needs at least {MIN_MSE_REPLICATES} replicates")));
    }
    let sigma2 = oracle.require_sigma2()?;
    let schedule = ctx.cfg.schedule()?;
    let report = mse_experiment(
        |h, rng| sim.simulate(h, rng),
        f,
        &schedule,
        ctx.cfg.horizon,
        ctx.cfg.reps,
        &ctx.streams,
        sigma2,
    )?;
    ctx.streams_used = ctx.cfg.reps;
    let csv = replicate_csv(&report.rows, Some(sigma2), ctx.cfg.seed)?;
    ctx.write("replicates.csv", &csv)?;
    ctx.write_json(
        "mse.json",
        &serde_json::json!({
            "oracle_sigma2": sigma2,
            "oracle_source": oracle.source,
            "ell": report.rows[0].ell,
            "k": report.rows[0].k,
            "mse": report.mse,
            "mse_ci": report.mse_ci,
            "predicted": report.predicted,
            "ratio": report.ratio,
            "mean_sigma2": report.mean_sigma2,
            "mean_ci": report.mean_ci,
        }),
    )?;
    let [lo, hi] = ctx.cfg.checks.mse_ratio;
    let passed = report.ratio.is_some_and(|r| r >= lo && r <= hi);
    let shown = report.ratio.map_or("undefined".to_string(), |r| format!("{r:.4}"));
    ctx.check("mse-ratio", passed, format!("MSE / (2σ⁴ℓ/T) = {shown}, accepted [{lo}, {hi}]"));
    Ok(())
}

fn bm_clt_run(ctx: &mut Ctx<'_>, sim: &Sim, f: &Functional, oracle: &Oracle) -> Result<(), CliError> {
    if ctx.cfg.reps < MIN_CLT_REPLICATES {
        return Err(CliError::config("reps", format!("bm-clt needs at least {MIN_CLT_REPLICATES} replicates")));
    }
    let sigma2 = oracle.require_sigma2()?;
    let rows = replicate_rows(ctx, sim, f)?;
    let est: Vec<f64> = rows.iter().map(|r| r.sigma2_hat).collect();
    let report = bm_clt_check(&est, sigma2, rows[0].k)?;
    let csv = replicate_csv(&rows, Some(sigma2), ctx.cfg.seed)?;
    ctx.write("replicates.csv", &csv)?;
    ctx.write_json("clt.json", &report)?;
    let level = ctx.cfg.checks.level;
    ctx.check(
        "ks",
        report.ks.passes(level),
        format!("D = {:.4}, p = {:.4}, level {level}", report.ks.statistic, report.ks.p_value),
    );
    let [lo, hi] = ctx.cfg.checks.variance_ratio;
    ctx.check(
        "variance-ratio",
        report.variance_ratio >= lo && report.variance_ratio <= hi,
        format!("sample variance / 2σ⁴ = {:.4}, accepted [{lo}, {hi}]", report.variance_ratio),
    );
    Ok(())
}

struct SplitRun {
    kernel: regensim::splitting::SplitKernel,
    chain: regensim::splitting::SplitChainPath,
    log: regensim::splitting::RegenerationLog,
    rule: RegenerationRule,
}

fn split_chain(ctx: &Ctx<'_>, sim: &Sim, streams: &Streams) -> Result<SplitRun, CliError> {
    let (model, pi, x0) = require_ctmc(sim, "splitting")?;
    let small = &ctx.cfg.splitting.small_set;
    if let Some(s) = small.iter().find(|s| **s >= model.n()) {
        return Err(CliError::config("splitting.small_set", format!("state {s} outside 0..{}", model.n())));
    }
    let rule = RegenerationRule::parse_config(&ctx.cfg.splitting.rule)?;
    let cert = build_minorisation(model, small).map_err(|e| CliError::config("splitting.small_set", e.to_string()))?;
    let u = regensim::ctmc::resolvent(model)?;
    let kernel = residual_kernel(&cert, &u)?;
    let mut rng = streams.stream(0);
    let x = x0.unwrap_or_else(|| pi.sample(&mut rng));
    let opts = SplitOptions { rule, ..SplitOptions::default() };
    let (chain, log) = simulate_split_chain(model, &kernel, x, ctx.cfg.horizon, &mut rng, opts)?;
    Ok(SplitRun { kernel, chain, log, rule })
}

fn splitting_verify(ctx: &mut Ctx<'_>, sim: &Sim, f: &Functional) -> Result<(), CliError> {
    let (model, pi, _) = require_ctmc(sim, "splitting-verify")?;
    let streams = ctx.streams.clone();
    let run = split_chain(ctx, sim, &streams)?;
    ctx.streams_used = 1;
    let level = ctx.cfg.checks.level;
    let band = ctx.cfg.checks.se_band;

    let err = run.kernel.reconstruction_error();
    ctx.check("kernel-reconstruction", err <= 1e-12, format!("max |alpha nu + (1 - alpha) W - U| on C = {err:.3e}"));

    let nu = run.kernel.cert().nu();
    let n = model.n();
    let mut counts = vec![0u64; n];
    for s in regeneration_states(&run.log, &run.chain) {
        counts[s] += 1;
    }
    let support: Vec<usize> = (0..n).filter(|&x| nu[x] > 0.0).collect();
    let (passed, detail) = if support.len() >= 2 {
        let chi = chi_square_gof(&counts, &nu[..])?;
        (chi.passes(level), format!("chi-square {:.3} on {} dof, p = {:.4}, level {level}", chi.statistic, chi.dof, chi.p_value))
    } else {
        let outside: u64 = (0..n).filter(|x| nu[*x] == 0.0).map(|x| counts[x]).sum();
        (outside == 0, format!("nu is a point mass at {}; {outside} regenerations elsewhere", support[0]))
    };
    ctx.check("regeneration-law", passed, detail);

    let cycles = cycle_functionals(&run.log, &run.chain, f)?;
    let dep = one_dependence_test(cycles.stationary_xi())?;
    let lags: Vec<String> = dep.lags.iter().map(|l| format!("{}:{:+.4}", l.lag, l.acf)).collect();
    ctx.check(
        "one-dependence",
        dep.passes,
        format!("acf {} with half-width {:.4} over {} cycles", lags.join(" "), dep.lags[0].half_width, dep.n),
    );

    let est = regenerative_estimates(&cycles)?;
    let exact_rho = expected_cycle_length(&run.kernel, run.rule)?;
    ctx.check(
        "rho",
        (est.rho_hat - exact_rho).abs() <= band * est.rho_se,
        format!("rho_hat {:.5} (se {:.2e}) vs exact {exact_rho:.5}, band {band}", est.rho_hat, est.rho_se),
    );

    let mut csv = Vec::new();
    run.log.write_csv(Some(&cycles), &mut csv)?;
    ctx.write("cycles.csv", &csv)?;
    let exact_sigma2 = match f {
        Functional::State(v) => Some(asymptotic_variance_exact(model, v)?),
        _ => None,
    };
    let exact_mean = match f {
        Functional::State(v) => Some(pi.expect(v)),
        _ => None,
    };
    ctx.write_json(
        "regenerative.json",
        &serde_json::json!({
            "rule": run.rule,
            "alpha": run.kernel.cert().alpha(),
            "nu": &nu[..],
            "estimates": est,
            "exact_rho": exact_rho,
            "exact_sigma2": exact_sigma2,
            "exact_mean": exact_mean,
        }),
    )?;
    Ok(())
}

fn fluctuation_run(ctx: &mut Ctx<'_>, sim: &Sim, f: &Functional, oracle: &Oracle) -> Result<(), CliError> {
    let horizon = ctx.cfg.horizon;
    let reps = ctx.cfg.reps;
    let a_t = horizon.powf(ctx.cfg.fluctuation.window_exponent);
    if let Sim::Brownian { step } = sim {
        let rep = brownian_increment_check(horizon, a_t, reps, *step, ctx.cfg.fluctuation.refine, &ctx.streams)?;
        ctx.streams_used = reps;
        let mut csv = String::from("replicate,a_T,value,refined\n");
        for (i, v) in rep.values.iter().enumerate() {
            let r = rep.refined.as_ref().map(|r| r[i].to_string()).unwrap_or_default();
            writeln!(csv, "{i},{a_t},{v},{r}").unwrap();
        }
        ctx.write("fluctuation.csv", csv.as_bytes())?;
        let [lo, hi] = ctx.cfg.checks.brownian_max;
        let change = rep.max_refinement_change.map_or(String::new(), |c| format!(", refinement change {c:.4}"));
        ctx.check(
            "brownian-max",
            rep.max >= lo && rep.max <= hi,
            format!("max over {reps} paths = {:.4}, accepted [{lo}, {hi}]{change}", rep.max),
        );
        return Ok(());
    }

    let mu = oracle.mean.ok_or_else(|| CliError::config("oracle.mean", "stationary mean unknown; set oracle.mean"))?;
    let (sigma2, source) = match ctx.cfg.fluctuation.constant.as_str() {
        "exact" if oracle.source == "exact" => (oracle.require_sigma2()?, "exact".to_string()),
        "exact" => return Err(CliError::config("fluctuation.constant", "no exact variance for this model")),
        "oracle" => (
            ctx.cfg.oracle.sigma2.ok_or_else(|| CliError::config("oracle.sigma2", "required by fluctuation.constant"))?,
            "oracle".to_string(),
        ),
        _ => {
            if !matches!(sim, Sim::Ctmc { .. }) {
                return Err(CliError::config("fluctuation.constant", "splitting constant needs a ctmc model"));
            }
            let streams = ctx.streams.fork(SPLIT_CONSTANT_TAG);
            let run = split_chain(ctx, sim, &streams)?;
            let est = regenerative_estimates(&cycle_functionals(&run.log, &run.chain, f)?)?;
            (est.tavc, format!("splitting over {} cycles", est.n_cycles))
        }
    };
    let stats = run_replicates(&ctx.streams, reps, |_, rng| {
        let traj = sim.simulate(horizon, rng)?;
        fluctuation_statistic(&traj, f, a_t, mu)
    })?;
    ctx.streams_used = reps;
    let bound = ctx.cfg.checks.bound_factor * sigma2.sqrt();
    let mut csv = String::from("replicate,a_T,beta_T,raw_sup,value,bound\n");
    for (i, s) in stats.iter().enumerate() {
        writeln!(csv, "{i},{},{},{},{},{bound}", s.a_t, s.beta_t, s.raw_sup, s.value).unwrap();
    }
    ctx.write("fluctuation.csv", csv.as_bytes())?;
    let worst = stats.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
    ctx.check(
        "soft-bound",
        worst <= bound,
        format!("largest statistic {worst:.4} vs bound {bound:.4} (sigma^2 = {sigma2:.5} from {source})"),
    );
    Ok(())
}

fn diffusion_regularity(ctx: &mut Ctx<'_>, model: &SdeModel) -> Result<(), CliError> {
    let probes = &ctx.cfg.diffusion.probes;
    let rep = recurrence_check(model, probes).map_err(|e| CliError::config("diffusion.probes", e.to_string()))?;
    let (lo, hi) = (probes[0], probes[probes.len() - 1]);
    let mut csv = String::from("u,scale,speed_density\n");
    for i in 0..=40 {
        let u = lo + (hi - lo) * i as f64 / 40.0;
        writeln!(csv, "{u},{},{}", scale_function(model, u)?, speed_density(model, u)?).unwrap();
    }
    ctx.write("regularity.csv", csv.as_bytes())?;
    let recurrent = rep.verdict == RecurrenceVerdict::DivergesBothTails;
    let expected = ctx.cfg.diffusion.expect_recurrent;
    ctx.check("recurrence", recurrent == expected, format!("verdict {:?}, expected recurrent {expected}", rep.verdict));
    let total = speed_measure_total(model);
    let finite = matches!(total, Ok(v) if v.is_finite());
    let shown = match &total {
        Ok(v) => format!("{v}"),
        Err(e) => format!("not finite ({e})"),
    };
    if let Some(want) = ctx.cfg.diffusion.expect_finite_speed {
        ctx.check("speed-measure", finite == want, format!("total speed measure {shown}, expected finite {want}"));
    }
    ctx.write_json(
        "recurrence.json",
        &serde_json::json!({ "verdict": rep.verdict, "points": rep.points, "speed_total": total.ok() }),
    )?;
    Ok(())
}
