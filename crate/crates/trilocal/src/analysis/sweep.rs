//! Noise sweeps over a distribution family and cross-model smoothing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::qdist::{Distribution, FamilySpec};
use crate::seed::derive_seed;
use crate::trainer::{fit_model, model_distribution, LatentBatch, TrainConfig, TriangleModel};

use super::metrics::euclidean_distance;
use super::AnalysisError;

/// One grid point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub param: f64,
    pub target: Distribution,
    /// Best evaluation distance over this point's own training runs.
    pub raw_distance: f64,
    /// Distance after cross-model smoothing; never exceeds `raw_distance`.
    pub smoothed_distance: f64,
    /// Index of the sweep point whose model realizes `smoothed_distance`.
    pub assigned_model: Option<usize>,
    pub model: Option<TriangleModel>,
    pub steps: usize,
    pub failure: Option<String>,
}

impl SweepPoint {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none() && self.model.is_some()
    }
}

/// A fitted family scan: per grid point the exact target, the learned model,
/// and raw/smoothed distances.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub family: FamilySpec,
    pub config: TrainConfig,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Run a second warm-start pass in decreasing parameter order as well.
    pub descending_pass: bool,
    /// Per-point progress lines on stderr.
    pub verbose: bool,
}

fn validate_grid(family: &FamilySpec, grid: &[f64]) -> Result<(), AnalysisError> {
    if grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    let (lo, hi) = family.param_range();
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(AnalysisError::GridNotIncreasing { at: pair[1] });
        }
    }
    for &v in grid {
        if v < lo - 1e-12 || v > hi + 1e-12 {
            return Err(AnalysisError::GridOutOfRange { value: v, lo, hi });
        }
    }
    Ok(())
}

/// Fits the family at every grid point: a first pass of independent fits in
/// parallel, then a sequential warm-start pass in increasing parameter order
/// (optionally a decreasing one too), keeping the pointwise best.
pub fn sweep(
    family: &FamilySpec,
    grid: &[f64],
    cfg: &TrainConfig,
    opts: &SweepOptions,
) -> Result<SweepResult, AnalysisError> {
    validate_grid(family, grid)?;
    cfg.validate()?;

    let targets: Vec<Result<Distribution, _>> =
        grid.iter().map(|&v| family.target(v)).collect();

    let mut points: Vec<SweepPoint> = grid
        .par_iter()
        .zip(&targets)
        .enumerate()
        .map(|(i, (&param, target))| {
            let target = match target {
                Ok(t) => t.clone(),
                Err(e) => {
                    return SweepPoint {
                        param,
                        target: Distribution::uniform(4),
                        raw_distance: f64::NAN,
                        smoothed_distance: f64::NAN,
                        assigned_model: None,
                        model: None,
                        steps: 0,
                        failure: Some(e.to_string()),
                    }
                }
            };
            let point_cfg =
                TrainConfig { rng_seed: derive_seed(cfg.rng_seed, i as u64), ..cfg.clone() };
            match fit_model(&target, &point_cfg, None) {
                Ok(out) => {
                    if opts.verbose {
                        eprintln!(
                            "point {param:.4}: d_raw={:.6} ({:?}, {} runs)",
                            out.distance,
                            out.chosen,
                            out.candidates.len()
                        );
                    }
                    SweepPoint {
                        param,
                        target,
                        raw_distance: out.distance,
                        smoothed_distance: out.distance,
                        assigned_model: Some(i),
                        model: Some(out.model),
                        steps: out.candidates.iter().map(|c| c.steps).sum(),
                        failure: None,
                    }
                }
                Err(e) => {
                    eprintln!("point {param:.4}: failed: {e}");
                    SweepPoint {
                        param,
                        target,
                        raw_distance: f64::NAN,
                        smoothed_distance: f64::NAN,
                        assigned_model: None,
                        model: None,
                        steps: 0,
                        failure: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();

    warm_pass(&mut points, cfg, opts, false);
    if opts.descending_pass {
        warm_pass(&mut points, cfg, opts, true);
    }

    Ok(SweepResult { family: *family, config: cfg.clone(), points })
}

/// Sequential warm-start pass: each point retrains once from its neighbor's
/// current best model, keeping the better of the two fits.
fn warm_pass(points: &mut [SweepPoint], cfg: &TrainConfig, opts: &SweepOptions, descending: bool) {
    let n = points.len();
    let order: Vec<usize> = if descending { (0..n).rev().collect() } else { (0..n).collect() };
    for w in order.windows(2) {
        let (from, to) = (w[0], w[1]);
        if points[to].failure.is_some() {
            continue;
        }
        let Some(warm) = points[from].model.clone() else { continue };
        let warm_cfg = TrainConfig {
            rng_seed: derive_seed(
                derive_seed(cfg.rng_seed, to as u64),
                if descending { 2 } else { 1 },
            ),
            restarts: 0,
            ..cfg.clone()
        };
        match fit_model(&points[to].target, &warm_cfg, Some(&warm)) {
            Ok(out) => {
                if out.distance < points[to].raw_distance || !points[to].raw_distance.is_finite()
                {
                    if opts.verbose {
                        eprintln!(
                            "point {:.4}: warm pass improved {:.6} -> {:.6}",
                            points[to].param, points[to].raw_distance, out.distance
                        );
                    }
                    points[to].raw_distance = out.distance;
                    points[to].smoothed_distance = out.distance;
                    points[to].model = Some(out.model);
                }
            }
            Err(e) => {
                eprintln!("point {:.4}: warm pass failed: {e}", points[to].param);
            }
        }
    }
}

/// Re-evaluates every learned model against every target in the sweep and
/// assigns each point the model that comes closest, using the shared fixed
/// evaluation batch. The smoothed distance is a minimum over a set that
/// contains each point's own model, so it never exceeds the raw distance.
pub fn cross_smooth(s: &SweepResult) -> Result<SweepResult, AnalysisError> {
    let mut out = s.clone();
    let mut eval_rng = ChaCha8Rng::seed_from_u64(s.config.eval_seed);
    let eval_batch = LatentBatch::sample(s.config.eval_batch_size, &mut eval_rng);

    // One evaluation distribution per available model.
    let evals: Vec<Option<Distribution>> = s
        .points
        .par_iter()
        .map(|p| match &p.model {
            Some(model) => model_distribution(model, &eval_batch).ok(),
            None => {
                eprintln!("point {:.4}: no model, skipped in smoothing", p.param);
                None
            }
        })
        .collect();

    for (i, point) in out.points.iter_mut().enumerate() {
        if point.failure.is_some() {
            continue;
        }
        let mut best = (point.raw_distance, point.assigned_model);
        for (j, eval) in evals.iter().enumerate() {
            let Some(eval) = eval else { continue };
            let d = euclidean_distance(&point.target, eval)?;
            if d < best.0 {
                best = (d, Some(j));
            }
        }
        point.smoothed_distance = best.0;
        point.assigned_model = best.1;
        let _ = i;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdist::Family;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            batch_size: 200,
            depth: 1,
            width: 6,
            training_steps: 120,
            restarts: 1,
            eval_batch_size: 1000,
            rng_seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn grid_validation_rejects_bad_grids() {
        let spec = FamilySpec::new(Family::RenouScan, None).unwrap();
        let cfg = tiny_cfg();
        let opts = SweepOptions::default();
        assert!(matches!(
            sweep(&spec, &[0.4, 0.6], &cfg, &opts),
            Err(AnalysisError::GridOutOfRange { .. })
        ));
        assert!(matches!(
            sweep(&spec, &[0.7, 0.7], &cfg, &opts),
            Err(AnalysisError::GridNotIncreasing { .. })
        ));
        assert!(matches!(sweep(&spec, &[], &cfg, &opts), Err(AnalysisError::EmptyGrid)));
    }

    #[test]
    fn single_point_sweep_equals_direct_fit() {
        let spec = FamilySpec::new(Family::FritzVisibility, None).unwrap();
        let cfg = tiny_cfg();
        let s = sweep(&spec, &[0.3], &cfg, &SweepOptions::default()).unwrap();
        assert_eq!(s.points.len(), 1);

        let target = spec.target(0.3).unwrap();
        let point_cfg = TrainConfig { rng_seed: derive_seed(cfg.rng_seed, 0), ..cfg };
        let direct = fit_model(&target, &point_cfg, None).unwrap();
        // The sweep's warm pass has nothing to chain from a single point.
        assert_eq!(s.points[0].raw_distance, direct.distance);
    }

    #[test]
    fn smoothing_never_increases_distance_and_is_noop_on_singletons() {
        let spec = FamilySpec::new(Family::FritzVisibility, None).unwrap();
        let cfg = tiny_cfg();
        let s = sweep(&spec, &[0.2, 0.8], &cfg, &SweepOptions::default()).unwrap();
        let smoothed = cross_smooth(&s).unwrap();
        for (orig, sm) in s.points.iter().zip(&smoothed.points) {
            assert!(sm.smoothed_distance <= orig.raw_distance + 1e-15);
        }

        let single = sweep(&spec, &[0.5], &cfg, &SweepOptions::default()).unwrap();
        let single_smoothed = cross_smooth(&single).unwrap();
        assert_eq!(
            single.points[0].raw_distance,
            single_smoothed.points[0].smoothed_distance
        );
        assert_eq!(single_smoothed.points[0].assigned_model, Some(0));
    }
}
