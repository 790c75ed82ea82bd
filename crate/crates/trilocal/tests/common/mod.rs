//! Helpers shared by the integration suites.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use trilocal::qdist::Distribution;
use trilocal::trainer::{
    model_gradients, GradWorkspace, Loss, Party, TriangleGrads, TriangleModel,
};

/// Strictly positive random target distribution.
pub fn random_target(o: usize, rng: &mut ChaCha8Rng) -> Distribution {
    let n = o * o * o;
    let mut probs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    Distribution::new(o, probs).unwrap()
}

pub fn loss_value(
    model: &TriangleModel,
    target: &Distribution,
    batch: &trilocal::trainer::LatentBatch,
    loss: Loss,
) -> f64 {
    let mut ws = GradWorkspace::new(model, batch.len());
    let mut grads = TriangleGrads::zeros_like(model);
    model_gradients(model, target, batch, loss, &mut ws, &mut grads).unwrap()
}

/// Compares backpropagation to central finite differences (step 1e-5) on
/// every parameter, at relative tolerance 1e-4. Parameters where the
/// finite-difference quotient itself is inconsistent across step sizes
/// (rectifier kinks) are skipped; at most 2% may be.
pub fn check_gradients(
    model: &mut TriangleModel,
    target: &Distribution,
    batch: &trilocal::trainer::LatentBatch,
    loss: Loss,
) {
    let mut ws = GradWorkspace::new(model, batch.len());
    let mut grads = TriangleGrads::zeros_like(model);
    model_gradients(model, target, batch, loss, &mut ws, &mut grads).unwrap();
    let h = 1e-5;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for party in [Party::A, Party::B, Party::C] {
        let analytic = match party {
            Party::A => grads.a.clone(),
            Party::B => grads.b.clone(),
            Party::C => grads.c.clone(),
        };
        let nlayers = model.net(party).weights().len();
        for l in 0..nlayers {
            for is_bias in [false, true] {
                let count = if is_bias {
                    model.net(party).biases()[l].len()
                } else {
                    model.net(party).weights()[l].len()
                };
                for idx in 0..count {
                    let read = |m: &mut TriangleModel| -> f64 {
                        let net = m.net_mut(party);
                        if is_bias {
                            net.biases_mut()[l][idx]
                        } else {
                            net.weights_mut()[l][idx]
                        }
                    };
                    let write = |m: &mut TriangleModel, v: f64| {
                        let net = m.net_mut(party);
                        if is_bias {
                            net.biases_mut()[l][idx] = v;
                        } else {
                            net.weights_mut()[l][idx] = v;
                        }
                    };
                    let orig = read(model);
                    let central = |m: &mut TriangleModel, step: f64| {
                        write(m, orig + step);
                        let plus = loss_value(m, target, batch, loss);
                        write(m, orig - step);
                        let minus = loss_value(m, target, batch, loss);
                        write(m, orig);
                        (plus - minus) / (2.0 * step)
                    };
                    let fd = central(model, h);
                    let an =
                        if is_bias { analytic.biases[l][idx] } else { analytic.weights[l][idx] };
                    let denom = an.abs().max(fd.abs());
                    if denom < 1e-8 {
                        continue;
                    }
                    let rel = (an - fd).abs() / denom;
                    if rel >= 1e-4 {
                        let fd_small = central(model, h / 10.0);
                        let fd_rel =
                            (fd - fd_small).abs() / fd.abs().max(fd_small.abs()).max(1e-8);
                        if fd_rel > 1e-3 {
                            skipped += 1;
                            continue;
                        }
                    }
                    assert!(
                        rel < 1e-4,
                        "party {party:?} layer {l} bias={is_bias} idx={idx}: \
                         analytic {an} vs fd {fd} (rel {rel})"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 50, "too few informative parameters checked: {checked}");
    assert!(
        skipped * 50 <= checked,
        "kink skips ({skipped}) exceed 2% of checked parameters ({checked})"
    );
}

/// Random model with biases perturbed off the rectifier kinks; see the
/// gradient-check notes.
pub fn random_smooth_model(
    o: usize,
    depth: usize,
    width: usize,
    activation: trilocal::trainer::Activation,
    rng: &mut ChaCha8Rng,
) -> TriangleModel {
    let mut model = TriangleModel::random(o, depth, width, activation, rng);
    for party in [Party::A, Party::B, Party::C] {
        for b in model.net_mut(party).biases_mut() {
            for v in b.iter_mut() {
                *v = 0.2 * rng.gen::<f64>() - 0.1;
            }
        }
    }
    model
}
