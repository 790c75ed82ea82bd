use std::time::Instant;
use trilocal::qdist::*;
use trilocal::trainer::{fit_model, TrainConfig};

#[test]
fn bench_restart_flow() {
    // A: stuck flat point with full restarts.
    let t0 = Instant::now();
    let target = fritz_family(0.3).unwrap();
    let cfg = TrainConfig { restarts: 4, rng_seed: 7, ..TrainConfig::default() };
    let out = fit_model(&target, &cfg, None).unwrap();
    let ds: Vec<String> = out.candidates.iter().map(|c| format!("{:.4}@{}", c.eval_distance, c.steps)).collect();
    println!("FLOW fritz(0.3) restarts4: best={:.5} [{}] ({:.0}s)", out.distance, ds.join(" "), t0.elapsed().as_secs_f64());

    // B: warm chain: does a converged neighbor solve it?
    let t0 = Instant::now();
    let neighbor = fritz_family(0.5).unwrap();
    let nfit = fit_model(&neighbor, &TrainConfig { restarts: 2, rng_seed: 11, ..TrainConfig::default() }, None).unwrap();
    println!("FLOW fritz(0.5) anchor: {:.5} ({:.0}s)", nfit.distance, t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let warm_cfg = TrainConfig { restarts: 0, rng_seed: 13, ..TrainConfig::default() };
    let wfit = fit_model(&target, &warm_cfg, Some(&nfit.model)).unwrap();
    println!("FLOW fritz(0.3) warm-from-0.5: {:.5}@{} ({:.0}s)", wfit.distance, wfit.candidates[0].steps, t0.elapsed().as_secs_f64());

    // C: hard renou endpoint with restarts + longer budget.
    let t0 = Instant::now();
    let renou_lo = renou_family(0.5, RenouNoise::None, 0.0).unwrap();
    let cfg = TrainConfig { restarts: 4, rng_seed: 21, training_steps: 4000, eval_batch_size: 1_000_000, ..TrainConfig::default() };
    let out = fit_model(&renou_lo, &cfg, None).unwrap();
    let ds: Vec<String> = out.candidates.iter().map(|c| format!("{:.4}@{}", c.eval_distance, c.steps)).collect();
    println!("FLOW renou(0.5) restarts4 s4000: best={:.5} [{}] ({:.0}s)", out.distance, ds.join(" "), t0.elapsed().as_secs_f64());

    // D: renou precision endpoint, longer budget.
    let t0 = Instant::now();
    let renou_hi = renou_family(1.0, RenouNoise::None, 0.0).unwrap();
    let cfg = TrainConfig { restarts: 2, rng_seed: 23, training_steps: 5000, eval_batch_size: 1_000_000, ..TrainConfig::default() };
    let out = fit_model(&renou_hi, &cfg, None).unwrap();
    let ds: Vec<String> = out.candidates.iter().map(|c| format!("{:.4}@{}", c.eval_distance, c.steps)).collect();
    println!("FLOW renou(1.0) restarts2 s5000: best={:.5} [{}] ({:.0}s)", out.distance, ds.join(" "), t0.elapsed().as_secs_f64());
}
