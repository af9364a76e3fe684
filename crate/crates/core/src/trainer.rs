//! Mini-batch SGD with softmax cross-entropy, optionally with the
//! non-negative and sparse (NS) constraint on hidden layers.
//!
//! The NS constraint covers every weight matrix and bias feeding a hidden
//! layer, `W^(1..L-2)` and `b^(1..L-2)`; the output layer is unconstrained.
//! It is applied as a projection onto `>= 0` after each step, and the L1
//! penalty contributes `λ·sign(W)` with `sign(0) = 0`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{argmax, axpy, Matrix};
use crate::netcore::{ActivationSpec, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub architecture: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l1_penalty: f64,
    pub nonneg: bool,
    pub seed: u64,
    /// Half-width of the uniform init; `None` uses `sqrt(6/(n_l+n_{l+1}))`
    /// per layer.
    pub init_scale: Option<f64>,
}

impl TrainConfig {
    pub fn new(architecture: Vec<usize>) -> Self {
        TrainConfig {
            architecture,
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.05,
            l1_penalty: 0.0,
            nonneg: false,
            seed: 0,
            init_scale: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Domain(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch size must be at least 1".into()));
        }
        if !(self.l1_penalty >= 0.0 && self.l1_penalty.is_finite()) {
            return Err(Error::Domain(format!(
                "l1 penalty must be >= 0, got {}",
                self.l1_penalty
            )));
        }
        if let Some(s) = self.init_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Domain(format!(
                    "init scale must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Parameter-shaped gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net
                .weights()
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: net.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for w in &mut self.weights {
            w.map_inplace(|v| *v *= s);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Initial bias of every hidden neuron; keeps ReLU units alive early on.
pub const HIDDEN_BIAS_INIT: f64 = 0.1;

/// Initial network: uniform weights, [`HIDDEN_BIAS_INIT`] hidden biases and
/// zero output biases. Under `nonneg` the hidden-feeding weights are drawn
/// from `[0, s]` instead of `[-s, s]`.
pub fn init_network(cfg: &TrainConfig, rng: &mut impl Rng) -> Result<Network> {
    cfg.validate()?;
    let arch = &cfg.architecture;
    let transitions = arch.len().saturating_sub(1);
    let mut weights = Vec::with_capacity(transitions);
    let mut biases = Vec::with_capacity(transitions);
    for (l, w) in arch.windows(2).enumerate() {
        let s = cfg
            .init_scale
            .unwrap_or_else(|| (6.0 / (w[0] + w[1]) as f64).sqrt());
        let lo = if cfg.nonneg && l + 1 < transitions {
            0.0
        } else {
            -s
        };
        let data = (0..w[0] * w[1]).map(|_| rng.gen_range(lo..=s)).collect();
        weights.push(Matrix::from_row_major(w[1], w[0], data).expect("sized buffer"));
        let b0 = if l + 1 < transitions {
            HIDDEN_BIAS_INIT
        } else {
            0.0
        };
        biases.push(vec![b0; w[1]]);
    }
    Network::new(arch.clone(), weights, biases, ActivationSpec::relu())
}

fn check_data(net: &Network, data: &Dataset) -> Result<()> {
    if data.dim() != net.input_dim() {
        return Err(Error::dim("training instance", net.input_dim(), data.dim()));
    }
    let classes = net.output_dim();
    if let Some(i) = data.labels().iter().position(|&l| l as usize >= classes) {
        return Err(Error::Training {
            epoch: 0,
            reason: format!(
                "label {} of instance {i} outside 0..{classes}",
                data.label(i)
            ),
        });
    }
    Ok(())
}

/// `-ln softmax(z)[y]`, computed in log-sum-exp form.
fn cross_entropy(z: &[f64], y: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - z[y]
}

/// Mean cross-entropy over `indices` (no penalty term).
pub fn mean_loss(net: &Network, data: &Dataset, indices: &[usize]) -> Result<f64> {
    check_data(net, data)?;
    let mut total = 0.0;
    for &i in indices {
        let trace = net.forward(data.row(i))?;
        total += cross_entropy(trace.logits(), data.label(i) as usize);
    }
    Ok(total / indices.len().max(1) as f64)
}

pub fn accuracy(net: &Network, data: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for (x, &y) in data.rows().zip(data.labels()) {
        let trace = net.forward(x)?;
        correct += usize::from(argmax(trace.logits()) == y as usize);
    }
    Ok(correct as f64 / data.len().max(1) as f64)
}

/// Mean cross-entropy and its gradient over the instances at `indices`,
/// accumulated in index order.
pub fn batch_gradient(
    net: &Network,
    data: &Dataset,
    indices: &[usize],
) -> Result<(f64, Gradients)> {
    check_data(net, data)?;
    let act = net.activation();
    let mut grads = Gradients::zeros_like(net);
    let mut loss = 0.0;
    let transitions = net.weights().len();
    for &i in indices {
        let trace = net.forward(data.row(i))?;
        let y = data.label(i) as usize;
        loss += cross_entropy(trace.logits(), y);
        let mut delta = trace.output.clone();
        delta[y] -= 1.0;
        for l in (0..transitions).rev() {
            let a = &trace.post_activations[l];
            let gw = &mut grads.weights[l];
            for (r, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, a, gw.row_mut(r));
                }
            }
            axpy(1.0, &delta, &mut grads.biases[l]);
            if l == 0 {
                break;
            }
            let back = net.weights()[l].transpose_matvec(&delta);
            let z = &trace.pre_activations[l - 1];
            delta = back
                .iter()
                .zip(z)
                .map(|(g, &zi)| g * act.piece(act.state_of(zi)).slope)
                .collect();
        }
    }
    let n = indices.len().max(1) as f64;
    grads.scale(1.0 / n);
    Ok((loss / n, grads))
}

/// One projected SGD step, including the L1 subgradient on hidden-feeding
/// weights.
pub fn sgd_step(net: &mut Network, grads: &Gradients, cfg: &TrainConfig) {
    let lr = cfg.learning_rate;
    let (weights, biases) = net.params_mut();
    let hidden = weights.len() - 1;
    for (l, (w, g)) in weights.iter_mut().zip(&grads.weights).enumerate() {
        let constrained = l < hidden;
        for (v, &gv) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
            let mut step = gv;
            if constrained && cfg.l1_penalty > 0.0 && *v != 0.0 {
                step += cfg.l1_penalty * v.signum();
            }
            *v -= lr * step;
            if constrained && cfg.nonneg && *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    for (l, (b, g)) in biases.iter_mut().zip(&grads.biases).enumerate() {
        for (v, &gv) in b.iter_mut().zip(g) {
            *v -= lr * gv;
            if l < hidden && cfg.nonneg && *v < 0.0 {
                *v = 0.0;
            }
        }
    }
}

/// Per-epoch summary; `losses[0]` is the loss before training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub losses: Vec<f64>,
}

pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<Network> {
    train_with_history(data, cfg).map(|(net, _)| net)
}

pub fn train_with_history(data: &Dataset, cfg: &TrainConfig) -> Result<(Network, TrainHistory)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = init_network(cfg, &mut rng)?;
    check_data(&net, data)?;
    let all: Vec<usize> = (0..data.len()).collect();
    let mut losses = vec![mean_loss(&net, data, &all)?];
    let mut order = all;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) = batch_gradient(&net, data, batch)?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    reason: format!("loss became {loss}"),
                });
            }
            sgd_step(&mut net, &grads, cfg);
            if net.weights().iter().any(|w| !w.is_finite()) {
                return Err(Error::Training {
                    epoch,
                    reason: "non-finite weights".into(),
                });
            }
            total += loss * batch.len() as f64;
        }
        let mean = total / data.len().max(1) as f64;
        log::debug!("epoch {epoch}: mean batch loss {mean:.6}");
        losses.push(mean);
    }
    Ok((net, TrainHistory { losses }))
}

/// Maximum relative error between analytic and central-difference
/// gradients (`h = 1e-5`) over up to 50 randomly chosen parameters.
///
/// Parameters whose ±h perturbation changes any instance's configuration
/// are skipped, as are those with any hidden `|z| < 1e-3` at the base point.
pub fn gradient_check(net: &Network, data: &Dataset, indices: &[usize], seed: u64) -> Result<f64> {
    const H: f64 = 1e-5;
    const SAMPLES: usize = 50;
    let (_, grads) = batch_gradient(net, data, indices)?;
    let base_confs: Vec<_> = indices
        .iter()
        .map(|&i| net.conf(data.row(i)))
        .collect::<Result<_>>()?;
    for &i in indices {
        let trace = net.forward(data.row(i))?;
        let hidden = &trace.pre_activations[..trace.pre_activations.len() - 1];
        if hidden.iter().flatten().any(|z| z.abs() < 1e-3) {
            return Err(Error::Domain(format!(
                "instance {i} sits within 1e-3 of an activation boundary"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transitions = net.weights().len();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..SAMPLES * 20 {
        if checked == SAMPLES {
            break;
        }
        let l = rng.gen_range(0..transitions);
        let is_bias = rng.gen_bool(0.2);
        let len = if is_bias {
            net.biases()[l].len()
        } else {
            net.weights()[l].as_slice().len()
        };
        let k = rng.gen_range(0..len);
        let analytic = if is_bias {
            grads.biases[l][k]
        } else {
            grads.weights[l].as_slice()[k]
        };
        let perturbed = |delta: f64| -> Result<Network> {
            let mut p = net.clone();
            let (w, b) = p.params_mut();
            if is_bias {
                b[l][k] += delta;
            } else {
                w[l].as_mut_slice()[k] += delta;
            }
            Ok(p)
        };
        let plus = perturbed(H)?;
        let minus = perturbed(-H)?;
        let stable = indices.iter().zip(&base_confs).all(|(&i, c)| {
            plus.conf(data.row(i)).ok().as_ref() == Some(c)
                && minus.conf(data.row(i)).ok().as_ref() == Some(c)
        });
        if !stable {
            continue;
        }
        let numeric =
            (mean_loss(&plus, data, indices)? - mean_loss(&minus, data, indices)?) / (2.0 * H);
        let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6);
        worst = worst.max(rel);
        checked += 1;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{gen_syn, Split};

    fn xor() -> Dataset {
        Dataset::from_rows(
            &[
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            vec![0, 1, 1, 0],
            Split::Train,
        )
        .unwrap()
    }

    fn xor_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 5000,
            batch_size: 4,
            learning_rate: 0.5,
            seed: 7,
            ..TrainConfig::new(vec![2, 4, 2, 2])
        }
    }

    #[test]
    fn xor_is_learned() {
        let (net, hist) = train_with_history(&xor(), &xor_cfg()).unwrap();
        assert_eq!(accuracy(&net, &xor()).unwrap(), 1.0);
        assert!(hist.losses.last().unwrap() < &hist.losses[0]);
    }

    #[test]
    fn zero_epochs_returns_initial_network() {
        let cfg = TrainConfig {
            epochs: 0,
            ..xor_cfg()
        };
        let net = train(&xor(), &cfg).unwrap();
        let init = init_network(&cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(net, init);
    }

    #[test]
    fn training_is_reproducible() {
        let data = gen_syn(300, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            seed: 11,
            ..TrainConfig::new(vec![2, 4, 16, 2, 2])
        };
        assert_eq!(
            train(&data, &cfg).unwrap().to_json(),
            train(&data, &cfg).unwrap().to_json()
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = gen_syn(40, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::random(&[2, 5, 4, 2], ActivationSpec::relu(), &mut rng).unwrap();
        let idx: Vec<usize> = (0..data.len())
            .filter(|&i| {
                let t = net.forward(data.row(i)).unwrap();
                t.pre_activations[..2]
                    .iter()
                    .flatten()
                    .all(|z| z.abs() > 1e-3)
            })
            .collect();
        let err = gradient_check(&net, &data, &idx, 3).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn zero_rate_step_leaves_parameters() {
        let data = xor();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Network::random(&[2, 3, 2], ActivationSpec::relu(), &mut rng).unwrap();
        let before = net.clone();
        let (_, g) = batch_gradient(&net, &data, &[0, 1, 2, 3]).unwrap();
        let mut cfg = TrainConfig::new(vec![2, 3, 2]);
        cfg.learning_rate = 0.0;
        sgd_step(&mut net, &g, &cfg);
        assert_eq!(net, before);
    }

    #[test]
    fn duplicated_instance_batch_averages() {
        let data = gen_syn(10, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Network::random(&[2, 4, 2], ActivationSpec::relu(), &mut rng).unwrap();
        let (l1, g1) = batch_gradient(&net, &data, &[3]).unwrap();
        let (l2, g2) = batch_gradient(&net, &data, &[3, 3]).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn nonneg_projection_and_sparsity() {
        let data = gen_syn(500, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 20,
            nonneg: true,
            l1_penalty: 0.05,
            learning_rate: 0.05,
            seed: 1,
            ..TrainConfig::new(vec![2, 8, 8, 2])
        };
        let net = train(&data, &cfg).unwrap();
        for l in 0..2 {
            assert!(net.weights()[l].as_slice().iter().all(|&v| v >= 0.0));
            assert!(net.biases()[l].iter().all(|&v| v >= 0.0));
        }
        let zeros = net.weights()[1]
            .as_slice()
            .iter()
            .filter(|&&v| v == 0.0)
            .count();
        assert!(zeros > 0);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let data = xor();
        let mut cfg = xor_cfg();
        cfg.architecture = vec![3, 4, 2];
        assert!(matches!(train(&data, &cfg), Err(Error::Dimension { .. })));
        let bad = Dataset::from_rows(&[vec![0.0, 0.0]], vec![2], Split::Train).unwrap();
        assert!(matches!(
            train(&bad, &xor_cfg()),
            Err(Error::Training { .. })
        ));
        let mut cfg = xor_cfg();
        cfg.learning_rate = 0.0;
        assert!(train(&data, &cfg).is_err());
        let mut cfg = xor_cfg();
        cfg.batch_size = 0;
        assert!(train(&data, &cfg).is_err());
    }

    #[test]
    fn divergence_reports_epoch() {
        let data = gen_syn(50, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 1e200,
            ..TrainConfig::new(vec![2, 4, 2])
        };
        assert!(matches!(train(&data, &cfg), Err(Error::Training { epoch, .. }) if epoch >= 1));
    }
}
