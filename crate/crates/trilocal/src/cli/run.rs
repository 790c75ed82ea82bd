//! Job execution: dispatch, result files, and manifests.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::analysis::{
    cross_smooth, fit_exit_params, nn_vs_oracle, response_sample, sweep, ExitOutcome,
    OracleOptions, SweepOptions, SweepPoint, SweepResult,
};
use crate::qdist::Distribution;
use crate::seed::derive_seed;
use crate::trainer::{checkpoint_to_json, fit_model, load_model, Party, TrainConfig};

use super::config::{CommandKind, RunConfig};
use super::CliError;

/// What a finished job reports back to `main`.
#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Result files written (relative to the output location).
    pub outputs: Vec<PathBuf>,
    /// Grid points that carried a failure flag.
    pub failed_points: usize,
}

/// Writes through a temp file and renames, so concurrent jobs never observe
/// a half-written result.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn check_overwrite(paths: &[PathBuf], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    for p in paths {
        if p.exists() {
            return Err(CliError::WouldOverwrite { path: p.clone() });
        }
    }
    Ok(())
}

/// On failure, completed result files are kept under a `.partial` suffix.
fn mark_partial(written: &[PathBuf]) {
    for p in written {
        if p.exists() {
            let mut partial = p.clone().into_os_string();
            partial.push(".partial");
            let _ = std::fs::rename(p, PathBuf::from(partial));
        }
    }
}

struct ManifestWriter<'a> {
    cfg: &'a RunConfig,
    started: Instant,
}

impl<'a> ManifestWriter<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Self { cfg, started: Instant::now() }
    }

    fn write(
        &self,
        path: &Path,
        outputs: &[PathBuf],
        status: &str,
        extra: serde_json::Value,
    ) -> Result<(), CliError> {
        let manifest = json!({
            "command": self.cfg.command.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.cfg.seed,
            "resolved_config": self.cfg,
            "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "elapsed_seconds": self.started.elapsed().as_secs_f64(),
            "status": status,
            "details": extra,
        });
        write_atomic(path, &serde_json::to_string_pretty(&manifest).expect("manifest json"))
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let out = cfg.out.clone().expect("validated");
    std::fs::create_dir_all(&out)?;
    Ok(out)
}

/// Runs a resolved job, writing result files plus an adjacent manifest.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    match cfg.command {
        CommandKind::GenTarget => run_gen_target(cfg),
        CommandKind::Train => run_train(cfg),
        CommandKind::Sweep => run_sweep(cfg),
        CommandKind::FitExit => run_fit_exit(cfg),
        CommandKind::Oracle => run_oracle(cfg),
        CommandKind::Responses => run_responses(cfg),
    }
}

fn run_gen_target(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let manifest = ManifestWriter::new(cfg);
    let out = cfg.out.clone().expect("validated");
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let manifest_path = manifest_path_for(&out);
    check_overwrite(&[out.clone(), manifest_path.clone()], cfg.force)?;
    let spec = cfg.family.expect("validated");
    let target = spec.target(cfg.param.expect("validated"))?;
    let body = if out.extension().is_some_and(|e| e == "json") {
        target.to_json()
    } else {
        target.to_csv()
    };
    write_atomic(&out, &body)?;
    manifest.write(&manifest_path, &[out.clone()], "ok", json!({}))?;
    Ok(RunSummary { outputs: vec![out], failed_points: 0 })
}

fn manifest_path_for(result: &Path) -> PathBuf {
    let mut name = result.file_name().expect("result file name").to_os_string();
    name.push(".manifest.json");
    result.with_file_name(name)
}

fn run_train(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let manifest = ManifestWriter::new(cfg);
    let dir = out_dir(cfg)?;
    let model_path = dir.join("model.json");
    let report_path = dir.join("report.json");
    let manifest_path = dir.join("manifest.json");
    check_overwrite(&[model_path.clone(), report_path.clone()], cfg.force)?;

    let spec = cfg.family.expect("validated");
    let target = spec.target(cfg.param.expect("validated"))?;
    let written: Vec<PathBuf> = Vec::new();
    let outcome = match fit_model(&target, &cfg.train, None) {
        Ok(o) => o,
        Err(e) => {
            mark_partial(&written);
            manifest.write(&manifest_path, &written, &format!("failed: {e}"), json!({}))?;
            return Err(e.into());
        }
    };
    write_atomic(&model_path, &checkpoint_to_json(&outcome.model, &cfg.train))?;
    let report = json!({
        "family": spec,
        "param": cfg.param,
        "distance": outcome.distance,
        "chosen": format!("{:?}", outcome.chosen),
        "candidates": outcome.candidates,
    });
    write_atomic(&report_path, &serde_json::to_string_pretty(&report).expect("report json"))?;
    let outputs = vec![model_path, report_path];
    manifest.write(&manifest_path, &outputs, "ok", json!({ "distance": outcome.distance }))?;
    eprintln!("trained: d_M = {:.6} ({:?})", outcome.distance, outcome.chosen);
    Ok(RunSummary { outputs, failed_points: 0 })
}

fn sweep_csv(points: &[SweepPoint], model_files: &[Option<String>]) -> String {
    let mut out = String::from("param,raw_distance,smoothed_distance,model_file\n");
    for p in points {
        let model_file = p
            .assigned_model
            .and_then(|i| model_files[i].as_deref())
            .unwrap_or("");
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.param,
            fmt_distance(p.raw_distance),
            fmt_distance(p.smoothed_distance),
            model_file
        ));
    }
    out
}

fn fmt_distance(d: f64) -> String {
    if d.is_finite() {
        format!("{d:.16e}")
    } else {
        "nan".to_string()
    }
}

fn run_sweep(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let manifest = ManifestWriter::new(cfg);
    let dir = out_dir(cfg)?;
    let csv_path = dir.join("sweep.csv");
    let models_dir = dir.join("models");
    let manifest_path = dir.join("manifest.json");
    check_overwrite(&[csv_path.clone()], cfg.force)?;
    std::fs::create_dir_all(&models_dir)?;

    let spec = cfg.family.expect("validated");
    let grid = cfg.grid.clone().expect("validated");
    let train = TrainConfig { rng_seed: cfg.seed, ..cfg.train.clone() };
    let opts = SweepOptions { descending_pass: cfg.warm_both, verbose: true };

    let mut written = Vec::new();
    let result: Result<SweepResult, CliError> = (|| {
        let s = sweep(&spec, &grid, &train, &opts)?;
        Ok(cross_smooth(&s)?)
    })();
    let smoothed = match result {
        Ok(s) => s,
        Err(e) => {
            mark_partial(&written);
            manifest.write(&manifest_path, &written, &format!("failed: {e}"), json!({}))?;
            return Err(e);
        }
    };

    // Per-point checkpoints; the CSV references each point's assigned model.
    let mut model_files: Vec<Option<String>> = vec![None; smoothed.points.len()];
    for (i, point) in smoothed.points.iter().enumerate() {
        if let Some(model) = &point.model {
            let rel = format!("models/point_{i:03}.json");
            let path = dir.join(&rel);
            write_atomic(&path, &checkpoint_to_json(model, &train))?;
            written.push(path);
            model_files[i] = Some(rel);
        }
    }
    write_atomic(&csv_path, &sweep_csv(&smoothed.points, &model_files))?;
    written.push(csv_path.clone());

    let failed_points = smoothed.points.iter().filter(|p| p.failure.is_some()).count();
    let status = if failed_points == 0 {
        "ok".to_string()
    } else {
        format!("{failed_points} points failed")
    };
    manifest.write(
        &manifest_path,
        &written,
        &status,
        json!({
            "grid": grid,
            "failed_points": failed_points,
        }),
    )?;
    Ok(RunSummary { outputs: written, failed_points })
}

/// Rebuilds the sweep summary from a completed sweep directory: parameters
/// and smoothed distances from the CSV, targets regenerated from the family
/// in the manifest.
fn load_sweep_dir(dir: &Path) -> Result<SweepResult, CliError> {
    let manifest_text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| {
        CliError::Invalid {
            message: format!("cannot read sweep manifest in {}: {e}", dir.display()),
        }
    })?;
    let manifest: serde_json::Value = serde_json::from_str(&manifest_text)?;
    let resolved = manifest
        .get("resolved_config")
        .ok_or_else(|| CliError::Invalid { message: "manifest lacks resolved_config".into() })?;
    let sweep_cfg: RunConfig = serde_json::from_value(resolved.clone())?;
    let spec = sweep_cfg
        .family
        .ok_or_else(|| CliError::Invalid { message: "sweep manifest lacks a family".into() })?;

    let csv = std::fs::read_to_string(dir.join("sweep.csv"))?;
    let mut points = Vec::new();
    for (i, line) in csv.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::Invalid {
                message: format!("sweep.csv line {}: expected 4 fields", i + 1),
            });
        }
        let param: f64 = fields[0].parse().map_err(|_| CliError::Invalid {
            message: format!("sweep.csv line {}: bad param `{}`", i + 1, fields[0]),
        })?;
        let parse_d = |s: &str| -> f64 { s.parse().unwrap_or(f64::NAN) };
        let raw = parse_d(fields[1]);
        let smoothed = parse_d(fields[2]);
        let target = spec.target(param)?;
        points.push(SweepPoint {
            param,
            target,
            raw_distance: raw,
            smoothed_distance: smoothed,
            assigned_model: None,
            model: None,
            steps: 0,
            failure: if smoothed.is_finite() { None } else { Some("failed point".into()) },
        });
    }
    Ok(SweepResult { family: spec, config: sweep_cfg.train, points })
}

fn run_fit_exit(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let manifest = ManifestWriter::new(cfg);
    let dir = cfg.out.clone().expect("validated");
    let fit_path = dir.join("exit_fit.json");
    let manifest_path = dir.join("exit_fit.manifest.json");
    check_overwrite(&[fit_path.clone()], cfg.force)?;

    let sweep_result = load_sweep_dir(&dir)?;
    let outcome = fit_exit_params(&sweep_result)?;
    let sidecar = json!({
        "fit": outcome,
        "lattice": {
            "v_star_points": crate::analysis::EXIT_FIT_VSTAR_POINTS,
            "theta_degrees": [
                crate::analysis::EXIT_FIT_THETA_MIN_DEG,
                crate::analysis::EXIT_FIT_THETA_MAX_DEG
            ],
        },
        "no_exit_threshold": crate::analysis::NO_EXIT_THRESHOLD,
    });
    write_atomic(&fit_path, &serde_json::to_string_pretty(&sidecar).expect("sidecar json"))?;
    match outcome {
        ExitOutcome::Detected(fit) => eprintln!(
            "exit fit: v* = {:.4}, theta = {:.1} deg (residual {:.3e})",
            fit.v_star_hat, fit.theta_hat_degrees, fit.residual
        ),
        ExitOutcome::NoExit { max_smoothed } => {
            eprintln!("no exit detected (max smoothed distance {max_smoothed:.4})")
        }
    }
    manifest.write(&manifest_path, std::slice::from_ref(&fit_path), "ok", json!({}))?;
    Ok(RunSummary { outputs: vec![fit_path], failed_points: 0 })
}

fn run_oracle(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let manifest = ManifestWriter::new(cfg);
    let dir = out_dir(cfg)?;
    let report_path = dir.join("oracle_report.json");
    let manifest_path = dir.join("manifest.json");
    check_overwrite(&[report_path.clone()], cfg.force)?;

    let target_path = cfg.target_path.clone().expect("validated");
    let target = Distribution::read_file(&target_path)?;
    let opts = OracleOptions {
        hidden_cardinality: cfg.hidden_cardinality,
        starts: cfg.oracle_starts,
        seed: derive_seed(cfg.seed, 0x07ac1e),
        ..OracleOptions::default()
    };
    let train = TrainConfig { rng_seed: cfg.seed, ..cfg.train.clone() };
    let (report, _fit, oracle) = nn_vs_oracle(&target, &train, &opts)?;
    let body = json!({
        "target": target_path.display().to_string(),
        "report": report,
        "classical_model": oracle.model,
    });
    write_atomic(&report_path, &serde_json::to_string_pretty(&body).expect("report json"))?;
    eprintln!(
        "oracle: d_oracle = {:.6}, d_M = {:.6}, gap = {:+.6}",
        report.oracle_distance, report.nn_distance, report.gap
    );
    manifest.write(
        &manifest_path,
        std::slice::from_ref(&report_path),
        "ok",
        json!({ "oracle_distance": report.oracle_distance, "nn_distance": report.nn_distance }),
    )?;
    Ok(RunSummary { outputs: vec![report_path], failed_points: 0 })
}

fn run_responses(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let manifest = ManifestWriter::new(cfg);
    let dir = out_dir(cfg)?;
    let party = Party::from_name(&cfg.party).expect("validated");
    let csv_path = dir.join(format!("responses_{}.csv", party.name()));
    let svg_path = dir.join(format!("responses_{}.svg", party.name()));
    let manifest_path = dir.join("manifest.json");
    let mut planned = vec![csv_path.clone()];
    if cfg.svg {
        planned.push(svg_path.clone());
    }
    check_overwrite(&planned, cfg.force)?;

    let checkpoint = load_model(&cfg.model_path.clone().expect("validated"))?;
    let sample = response_sample(
        &checkpoint.model,
        party,
        cfg.resolution,
        cfg.samples_per_point,
        derive_seed(cfg.seed, 0x5e5),
    )?;
    write_atomic(&csv_path, &sample.to_csv())?;
    let mut outputs = vec![csv_path];
    if cfg.svg {
        write_atomic(&svg_path, &sample.to_svg())?;
        outputs.push(svg_path);
    }
    manifest.write(&manifest_path, &outputs, "ok", json!({}))?;
    Ok(RunSummary { outputs, failed_points: 0 })
}
