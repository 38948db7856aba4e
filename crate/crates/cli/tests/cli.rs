use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use regensim_cli::RunManifest;
use tempfile::TempDir;

fn regensim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regensim")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_to(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    regensim(&args)
}

fn manifest(out: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

const OU_BATCH: &str = r#"
kind = "batch-means"
seed = 5
horizon = 2000.0
reps = 8

[model]
type = "ou"
step = 0.1

[schedule]
exponent = 0.5
"#;

const SPLIT: &str = r#"
kind = "splitting-verify"
seed = 21
horizon = 2e4

[model]
type = "ctmc"
generator = [[-1.0, 1.0], [2.0, -2.0]]
x0 = 0
"#;

#[test]
fn describe_texts_and_unknown_kind() {
    let out = regensim(&["describe", "mse"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("2σ⁴ℓ/T"));
    let out = regensim(&["describe", "fluctuation"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("beta_T = (2 a_T [log(T/a_T) + log log T])^(-1/2)"));
    let out = regensim(&["describe", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment kind `bogus`"));
}

#[test]
fn version_prints_the_package_version() {
    let out = regensim(&["version"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("regensim {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn invalid_exponent_is_a_config_error_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &OU_BATCH.replace("exponent = 0.5", "exponent = 1.5"));
    let out = run_to(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schedule.exponent") && err.contains("1.5"), "{err}");
    assert!(!dir.path().join("out").join("manifest.json").exists());
}

#[test]
fn unknown_field_and_missing_horizon_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "a.toml", &OU_BATCH.replace("step = 0.1", "step = 0.1\nstepp = 2"));
    let out = run_to(&cfg, &dir.path().join("a"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stepp"));
    let cfg = write_config(dir.path(), "b.toml", &OU_BATCH.replace("horizon = 2000.0\n", ""));
    let out = run_to(&cfg, &dir.path().join("b"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn splitting_verify_manifest_lists_its_checks() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "split.toml", SPLIT);
    let out_dir = dir.path().join("out");
    let out = run_to(&cfg, &out_dir, &[]);
    let m = manifest(&out_dir);
    let names: Vec<&str> = m.checks.iter().map(|c| c.name.as_str()).collect();
    for want in ["kernel-reconstruction", "regeneration-law", "one-dependence", "rho"] {
        assert!(names.contains(&want), "{names:?}");
    }
    assert_eq!(out.status.code(), Some(if m.passed { 0 } else { 1 }));
    assert_eq!(m.kind, "splitting-verify");
    assert_eq!(m.replicate_streams.len(), 1);
    let cycles = fs::read_to_string(out_dir.join("cycles.csv")).unwrap();
    assert!(cycles.starts_with("n,S_n,R_n,rho_n,xi_n,first_cycle_flag\n"));
    for a in &m.artifacts {
        let bytes = fs::read(out_dir.join(&a.path)).unwrap();
        assert_eq!(regensim_cli::run::sha256_hex(&bytes), a.sha256);
    }
}

#[test]
fn batch_means_csv_has_replicates_and_a_summary_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "ou.toml", OU_BATCH);
    let out_dir = dir.path().join("out");
    run_to(&cfg, &out_dir, &[]);
    let text = fs::read_to_string(out_dir.join("replicates.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "replicate,T,ell,k,sigma2_hat,oracle_sigma2,seed");
    assert_eq!(lines.len(), 1 + 8 + 1);
    let col = |l: &str, i: usize| l.split(',').nth(i).unwrap().to_string();
    let est: Vec<f64> = lines[1..9].iter().map(|l| col(l, 4).parse().unwrap()).collect();
    let summary = lines[9];
    assert_eq!(col(summary, 0), "summary");
    let m: f64 = col(summary, 4).parse().unwrap();
    assert!((m - est.iter().sum::<f64>() / 8.0).abs() < 1e-12);
    // σ²/θ² with the default θ = 1, σ = √2.
    assert!((col(summary, 5).parse::<f64>().unwrap() - 2.0).abs() < 1e-12);
    let man = manifest(&out_dir);
    assert!(man.checks.iter().any(|c| c.name == "oracle-agreement"));
    assert_eq!(man.replicate_streams.len(), 8);
    assert!(man.replicate_streams.iter().enumerate().all(|(i, s)| s.stream == i as u64 && s.master_seed == 5));
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "ou.toml", OU_BATCH);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_to(&cfg, &a, &["--threads", "1"]);
    run_to(&cfg, &b, &["--threads", "4"]);
    assert_eq!(read_all(&a), read_all(&b));
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "ou.toml", OU_BATCH);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_to(&cfg, &a, &[]);
    run_to(&cfg, &b, &["--seed", "99"]);
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!((ma.master_seed, mb.master_seed), (5, 99));
    assert_ne!(ma.config_sha256, mb.config_sha256);
    assert_ne!(fs::read(a.join("replicates.csv")).unwrap(), fs::read(b.join("replicates.csv")).unwrap());
}

#[test]
fn model_files_resolve_relative_to_the_config() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("models")).unwrap();
    fs::write(dir.path().join("models/m.json"), r#"{"n": 2, "q": [-1.0, 1.0, 2.0, -2.0], "labels": null}"#).unwrap();
    let cfg = write_config(
        dir.path(),
        "occ.toml",
        "kind = \"occupation\"\nseed = 3\nhorizon = 2e3\nreps = 4\n[model]\ntype = \"ctmc\"\nfile = \"models/m.json\"\n",
    );
    let out_dir = dir.path().join("out");
    let out = run_to(&cfg, &out_dir, &[]);
    assert!(out.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(out_dir.join("occupation.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 2);
}

#[test]
fn failed_check_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bm.toml",
        "kind = \"fluctuation\"\nseed = 1\nhorizon = 1e3\nreps = 2\n[model]\ntype = \"brownian\"\n[checks]\nbrownian_max = [0.0, 0.01]\n",
    );
    let out_dir = dir.path().join("out");
    let out = run_to(&cfg, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!manifest(&out_dir).passed);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL brownian-max"));
}

#[test]
fn runtime_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    // beta_T is undefined for T <= e.
    let cfg = write_config(
        dir.path(),
        "short.toml",
        "kind = \"fluctuation\"\nseed = 1\nhorizon = 2.0\n[model]\ntype = \"brownian\"\nstep = 0.5\n",
    );
    let out = run_to(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn shipped_example_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for e in fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            let cfg = regensim_cli::ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            seen += 1;
        }
    }
    assert!(seen >= 7);
}
