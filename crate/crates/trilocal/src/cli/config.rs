//! Command-line and config-file parsing.
//!
//! Flags override config-file values, which override defaults. The config
//! file is plain `key=value` lines using the long flag names.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::qdist::{Family, FamilySpec};
use crate::trainer::{Loss, TrainConfig};

use super::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "trilocal",
    version,
    about = "Decide learnability-based membership in the local set of the triangle network"
)]
struct CliArgs {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Write a target distribution of one of the built-in families.
    GenTarget(JobArgs),
    /// Fit the constrained network to one target distribution.
    Train(JobArgs),
    /// Fit every point of a parameter grid and cross-smooth the results.
    Sweep(JobArgs),
    /// Estimate the exit point and angle from a completed sweep directory.
    FitExit(JobArgs),
    /// Compare the network fit against the exact binary-output search.
    Oracle(JobArgs),
    /// Sample a trained party's response function over the latent square.
    Responses(JobArgs),
}

#[derive(Debug, Clone, Default, Args)]
struct JobArgs {
    /// Family name: fritz-visibility, elegant-visibility, elegant-detector,
    /// renou-scan, renou-visibility, renou-detector; or a base name
    /// (fritz/elegant/renou) combined with --noise.
    #[arg(long)]
    family: Option<String>,
    /// Noise model for a base family name: none, visibility, detector.
    #[arg(long)]
    noise: Option<String>,
    /// Curve parameter for single-target commands.
    #[arg(long)]
    v: Option<f64>,
    /// Renou measurement parameter u^2 in [0.5, 1].
    #[arg(long)]
    u2: Option<f64>,
    /// Grid as start:stop:step (end-inclusive) or a comma-separated list.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    eval_batch_size: Option<usize>,
    /// Training loss: kl, mse, or mae.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all processors).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file (gen-target) or directory (other commands).
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
    /// Overwrite existing result files.
    #[arg(long)]
    force: bool,
    /// Plain-text key=value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Binary-output target CSV/JSON for the oracle command.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Model checkpoint for the responses command.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Party for the responses command: A, B, or C.
    #[arg(long)]
    party: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    samples_per_point: Option<usize>,
    /// Also render the response scatter as SVG.
    #[arg(long)]
    svg: bool,
    /// Add a decreasing-order warm-start pass to sweeps.
    #[arg(long)]
    warm_both: bool,
    /// Hidden-variable cardinality for the oracle (1..=6).
    #[arg(long)]
    hidden_cardinality: Option<usize>,
    /// Multistart count for the oracle search.
    #[arg(long)]
    oracle_starts: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    GenTarget,
    Train,
    Sweep,
    FitExit,
    Oracle,
    Responses,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::GenTarget => "gen-target",
            CommandKind::Train => "train",
            CommandKind::Sweep => "sweep",
            CommandKind::FitExit => "fit-exit",
            CommandKind::Oracle => "oracle",
            CommandKind::Responses => "responses",
        }
    }
}

/// Fully resolved job description; everything needed to re-run the job.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub family: Option<FamilySpec>,
    pub param: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub train: TrainConfig,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub force: bool,
    pub target_path: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub party: String,
    pub resolution: usize,
    pub samples_per_point: usize,
    pub svg: bool,
    pub warm_both: bool,
    pub hidden_cardinality: usize,
    pub oracle_starts: usize,
}

/// Parses argv (including the binary name) into a resolved [`RunConfig`].
pub fn parse_args<I, S>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = CliArgs::try_parse_from(argv).map_err(CliError::Usage)?;
    let (command, mut args) = match cli.command {
        CommandArgs::GenTarget(a) => (CommandKind::GenTarget, a),
        CommandArgs::Train(a) => (CommandKind::Train, a),
        CommandArgs::Sweep(a) => (CommandKind::Sweep, a),
        CommandArgs::FitExit(a) => (CommandKind::FitExit, a),
        CommandArgs::Oracle(a) => (CommandKind::Oracle, a),
        CommandArgs::Responses(a) => (CommandKind::Responses, a),
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid {
            message: format!("cannot read config file {}: {e}", path.display()),
        })?;
        let file_args = parse_config_file(&text)?;
        merge_defaults(&mut args, file_args);
    }
    resolve(command, args)
}

/// `key=value` lines; `#` starts a comment. Keys are the long flag names.
fn parse_config_file(text: &str) -> Result<JobArgs, CliError> {
    let mut out = JobArgs::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Invalid {
                message: format!("config line {}: expected key=value, found `{line}`", lineno + 1),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| CliError::Invalid {
            message: format!("config line {}: bad {what} `{value}`", lineno + 1),
        };
        match key {
            "family" => out.family = Some(value.to_string()),
            "noise" => out.noise = Some(value.to_string()),
            "v" => out.v = Some(value.parse().map_err(|_| bad("number"))?),
            "u2" => out.u2 = Some(value.parse().map_err(|_| bad("number"))?),
            "grid" => out.grid = Some(value.to_string()),
            "batch-size" => out.batch_size = Some(value.parse().map_err(|_| bad("count"))?),
            "depth" => out.depth = Some(value.parse().map_err(|_| bad("count"))?),
            "width" => out.width = Some(value.parse().map_err(|_| bad("count"))?),
            "steps" => out.steps = Some(value.parse().map_err(|_| bad("count"))?),
            "restarts" => out.restarts = Some(value.parse().map_err(|_| bad("count"))?),
            "eval-batch-size" => {
                out.eval_batch_size = Some(value.parse().map_err(|_| bad("count"))?)
            }
            "loss" => out.loss = Some(value.to_string()),
            "seed" => out.seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "jobs" => out.jobs = Some(value.parse().map_err(|_| bad("count"))?),
            "out" => out.out = Some(PathBuf::from(value)),
            "force" => out.force = value.parse().map_err(|_| bad("bool"))?,
            "target" => out.target = Some(PathBuf::from(value)),
            "model" => out.model = Some(PathBuf::from(value)),
            "party" => out.party = Some(value.to_string()),
            "resolution" => out.resolution = Some(value.parse().map_err(|_| bad("count"))?),
            "samples-per-point" => {
                out.samples_per_point = Some(value.parse().map_err(|_| bad("count"))?)
            }
            "svg" => out.svg = value.parse().map_err(|_| bad("bool"))?,
            "warm-both" => out.warm_both = value.parse().map_err(|_| bad("bool"))?,
            "hidden-cardinality" => {
                out.hidden_cardinality = Some(value.parse().map_err(|_| bad("count"))?)
            }
            "oracle-starts" => {
                out.oracle_starts = Some(value.parse().map_err(|_| bad("count"))?)
            }
            _ => {
                return Err(CliError::Invalid {
                    message: format!("config line {}: unknown key `{key}`", lineno + 1),
                })
            }
        }
    }
    Ok(out)
}

/// Fills unset flags from config-file values.
fn merge_defaults(args: &mut JobArgs, file: JobArgs) {
    macro_rules! fill {
        ($($field:ident),*) => {
            $(if args.$field.is_none() { args.$field = file.$field; })*
        };
    }
    fill!(
        family, noise, v, u2, grid, batch_size, depth, width, steps, restarts, eval_batch_size,
        loss, seed, jobs, out, target, model, party, resolution, samples_per_point,
        hidden_cardinality, oracle_starts
    );
    args.force |= file.force;
    args.svg |= file.svg;
    args.warm_both |= file.warm_both;
}

fn resolve_family(args: &JobArgs) -> Result<Option<FamilySpec>, CliError> {
    let Some(name) = &args.family else { return Ok(None) };
    let family = match (Family::from_cli_name(name), args.noise.as_deref()) {
        (Some(f), None) => f,
        (Some(f), Some(noise)) => {
            return Err(CliError::Invalid {
                message: format!(
                    "family `{}` already names a noise model; drop --noise {noise}",
                    f.cli_name()
                ),
            })
        }
        (None, noise) => match (name.as_str(), noise) {
            ("fritz", None | Some("visibility")) => Family::FritzVisibility,
            ("elegant", Some("visibility")) => Family::ElegantVisibility,
            ("elegant", Some("detector")) => Family::ElegantDetector,
            ("renou", Some("none")) | ("renou", None) => Family::RenouScan,
            ("renou", Some("visibility")) => Family::RenouVisibility,
            ("renou", Some("detector")) => Family::RenouDetector,
            (_, Some(n)) if !["none", "visibility", "detector"].contains(&n) => {
                return Err(CliError::Invalid {
                    message: format!("unknown noise model `{n}`"),
                })
            }
            _ => {
                return Err(CliError::Invalid {
                    message: format!("unknown family `{name}`"),
                })
            }
        },
    };
    FamilySpec::new(family, args.u2)
        .map(Some)
        .map_err(|e| CliError::Invalid { message: e.to_string() })
}

/// Grid text to a strictly increasing list. `start:stop:step` is
/// end-inclusive whenever `stop` lands within 1e-9 of a step multiple, and
/// points snap to the step's decimal precision.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |message: String| CliError::Invalid { message };
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("grid `{text}` must be start:stop:step")));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.trim().parse().map_err(|_| bad(format!("bad grid number `{s}`")))
        };
        let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if step <= 0.0 || stop < start {
            return Err(bad(format!("grid `{text}` must increase with positive step")));
        }
        let decimals = parts[2].trim().split('.').nth(1).map_or(0, str::len) as i32;
        let snap = 10f64.powi(decimals.min(12));
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| {
                let p = start + i as f64 * step;
                let snapped = (p * snap).round() / snap;
                if (snapped - p).abs() < 1e-9 {
                    snapped
                } else {
                    p
                }
            })
            .collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad(format!("bad grid number `{s}`"))))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(bad("empty grid".into()));
    }
    for pair in values.windows(2) {
        if pair[1] <= pair[0] {
            return Err(bad(format!("grid is not strictly increasing at {}", pair[1])));
        }
    }
    Ok(values)
}

fn resolve(command: CommandKind, args: JobArgs) -> Result<RunConfig, CliError> {
    let family = resolve_family(&args)?;
    let seed = args.seed.unwrap_or(0);
    let defaults = TrainConfig::default();
    let train = TrainConfig {
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        depth: args.depth.unwrap_or(defaults.depth),
        width: args.width.unwrap_or(defaults.width),
        training_steps: args.steps.unwrap_or(defaults.training_steps),
        restarts: args.restarts.unwrap_or(defaults.restarts),
        eval_batch_size: args.eval_batch_size.unwrap_or(defaults.eval_batch_size),
        loss: match args.loss.as_deref() {
            None => defaults.loss,
            Some(name) => Loss::from_name(name).ok_or_else(|| CliError::Invalid {
                message: format!("unknown loss `{name}`"),
            })?,
        },
        rng_seed: seed,
        ..defaults
    };
    train.validate().map_err(|e| CliError::Invalid { message: e.to_string() })?;

    let grid = match &args.grid {
        Some(text) => {
            let grid = parse_grid(text)?;
            if let Some(spec) = &family {
                let (lo, hi) = spec.param_range();
                for &g in &grid {
                    if g < lo - 1e-12 || g > hi + 1e-12 {
                        return Err(CliError::Invalid {
                            message: format!(
                                "grid value {g} outside family range [{lo}, {hi}]"
                            ),
                        });
                    }
                }
            }
            Some(grid)
        }
        None => None,
    };

    // Single-target parameter: --v, or --u2 when the curve coordinate is u^2.
    let param = match (&family, args.v, args.u2) {
        (Some(spec), Some(v), _) => {
            let (lo, hi) = spec.param_range();
            if spec.family == Family::RenouScan {
                return Err(CliError::Invalid {
                    message: "renou-scan is parameterized by --u2, not --v".into(),
                });
            }
            if !(lo..=hi).contains(&v) {
                return Err(CliError::Invalid {
                    message: format!("--v {v} outside family range [{lo}, {hi}]"),
                });
            }
            Some(v)
        }
        (Some(spec), None, Some(u2)) if spec.family == Family::RenouScan => {
            if !(0.5..=1.0).contains(&u2) {
                return Err(CliError::Invalid {
                    message: format!("--u2 {u2} outside family range [0.5, 1]"),
                });
            }
            Some(u2)
        }
        _ => None,
    };

    let party = args.party.clone().unwrap_or_else(|| "B".to_string());
    if crate::trainer::Party::from_name(&party).is_none() {
        return Err(CliError::Invalid { message: format!("unknown party `{party}`") });
    }
    let hidden_cardinality = args.hidden_cardinality.unwrap_or(6);
    if !(1..=6).contains(&hidden_cardinality) {
        return Err(CliError::Invalid {
            message: format!("--hidden-cardinality {hidden_cardinality} outside 1..=6"),
        });
    }

    let cfg = RunConfig {
        command,
        family,
        param,
        grid,
        train,
        seed,
        jobs: args.jobs,
        out: args.out,
        force: args.force,
        target_path: args.target,
        model_path: args.model,
        party,
        resolution: args.resolution.unwrap_or(50),
        samples_per_point: args.samples_per_point.unwrap_or(30),
        svg: args.svg,
        warm_both: args.warm_both,
        hidden_cardinality,
        oracle_starts: args.oracle_starts.unwrap_or(20),
    };
    validate_for_command(&cfg)?;
    Ok(cfg)
}

fn validate_for_command(cfg: &RunConfig) -> Result<(), CliError> {
    let need = |cond: bool, message: &str| {
        if cond {
            Ok(())
        } else {
            Err(CliError::Invalid { message: message.to_string() })
        }
    };
    need(cfg.out.is_some(), "--out is required")?;
    match cfg.command {
        CommandKind::GenTarget | CommandKind::Train => {
            need(cfg.family.is_some(), "--family is required")?;
            need(
                cfg.param.is_some(),
                "a curve parameter is required: --v (or --u2 for renou-scan)",
            )?;
        }
        CommandKind::Sweep => {
            need(cfg.family.is_some(), "--family is required")?;
            need(cfg.grid.is_some(), "--grid is required")?;
        }
        CommandKind::FitExit => {}
        CommandKind::Oracle => {
            need(cfg.target_path.is_some(), "--target is required")?;
        }
        CommandKind::Responses => {
            need(cfg.model_path.is_some(), "--model is required")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(words: &str) -> Result<RunConfig, CliError> {
        parse_args(std::iter::once("trilocal").chain(words.split_whitespace()))
    }

    #[test]
    fn grid_expansion_counts_points() {
        let cfg = parse("sweep --family fritz-visibility --grid 0:1:0.05 -o out").unwrap();
        let grid = cfg.grid.unwrap();
        assert_eq!(grid.len(), 21);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[20], 1.0);
        assert_eq!(grid[3], 0.15);
    }

    #[test]
    fn grid_below_family_range_is_rejected() {
        let err = parse("sweep --family renou-scan --grid 0.4:1:0.01 -o out").unwrap_err();
        assert!(err.to_string().contains("0.4"), "{err}");
        assert!(err.to_string().contains("[0.5, 1]"), "{err}");
    }

    #[test]
    fn parsing_is_deterministic() {
        let a = parse("train --family elegant-detector --v 0.9 --seed 7 -o out").unwrap();
        let b = parse("train --family elegant-detector --v 0.9 --seed 7 -o out").unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert_eq!(a.train.rng_seed, 7);
    }

    #[test]
    fn unknown_flags_are_rejected() {
        assert!(parse("train --family fritz-visibility --v 0.5 --frobnicate -o out").is_err());
    }

    #[test]
    fn unknown_family_names_the_token() {
        let err = parse("gen-target --family fritzz --v 0.5 -o t.csv").unwrap_err();
        assert!(err.to_string().contains("fritzz"));
    }

    #[test]
    fn base_family_plus_noise_combines() {
        let cfg = parse("gen-target --family elegant --noise detector --v 0.9 -o t.csv").unwrap();
        assert_eq!(cfg.family.unwrap().family, Family::ElegantDetector);
        let cfg = parse("gen-target --family renou --u2 0.85 -o t.csv").unwrap();
        assert_eq!(cfg.family.unwrap().family, Family::RenouScan);
    }

    #[test]
    fn renou_scan_takes_u2_as_parameter() {
        let cfg = parse("gen-target --family renou-scan --u2 0.85 -o t.csv").unwrap();
        assert_eq!(cfg.param, Some(0.85));
        assert!(parse("gen-target --family renou-scan --v 0.85 -o t.csv").is_err());
    }

    #[test]
    fn explicit_grid_lists_parse() {
        let grid = parse_grid("0.1, 0.25, 0.5").unwrap();
        assert_eq!(grid, vec![0.1, 0.25, 0.5]);
        assert!(parse_grid("0.5,0.5").is_err());
        assert!(parse_grid("0.5,0.2").is_err());
    }

    #[test]
    fn config_file_fills_unset_flags_only() {
        let dir = std::env::temp_dir().join(format!("trilocal-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("job.conf");
        std::fs::write(&path, "seed=9\nwidth=12\n# comment\nfamily=fritz-visibility\n").unwrap();
        let cfg = parse(&format!(
            "train --v 0.5 --width 20 -o out --config {}",
            path.display()
        ))
        .unwrap();
        assert_eq!(cfg.train.width, 20); // flag wins
        assert_eq!(cfg.seed, 9); // file fills the gap
        assert_eq!(cfg.family.unwrap().family, Family::FritzVisibility);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn out_of_range_point_parameter_is_rejected() {
        let err = parse("train --family fritz-visibility --v 1.2 -o out").unwrap_err();
        assert!(err.to_string().contains("1.2"));
    }
}
