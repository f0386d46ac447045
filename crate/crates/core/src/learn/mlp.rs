//! Single-hidden-layer perceptron with logistic activations, trained by
//! full-batch gradient descent on cross-entropy plus an L2 weight penalty
//! (biases unpenalized). Hidden size and decay are tuned on an inner
//! validation split, then the winner is retrained on all rows.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{require_both_classes, TrainError};
use crate::features::Dataset;
use crate::rng::{derive, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_grid: Vec<usize>,
    pub decay_grid: Vec<f64>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_grid: vec![3, 5, 7, 9],
            decay_grid: vec![0.0, 1e-3, 1e-2, 1e-1],
            epochs: 2000,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

/// Network parameters; also doubles as the gradient container (same shape).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNet {
    /// hidden × input weights.
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    /// output weights, one per hidden unit.
    pub w2: Vec<f64>,
    pub b2: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl MlpNet {
    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut weight = || rng.random_range(-0.5..0.5);
        MlpNet {
            w1: (0..hidden).map(|_| (0..input).map(|_| weight()).collect()).collect(),
            b1: (0..hidden).map(|_| weight()).collect(),
            w2: (0..hidden).map(|_| weight()).collect(),
            b2: weight(),
        }
    }

    fn zeros_like(&self) -> Self {
        MlpNet {
            w1: self.w1.iter().map(|r| vec![0.0; r.len()]).collect(),
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: 0.0,
        }
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(w, b)| sigmoid(w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b))
            .collect()
    }

    /// Output activation — the predicted positive probability.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let h = self.hidden_activations(x);
        sigmoid(self.w2.iter().zip(&h).map(|(w, hi)| w * hi).sum::<f64>() + self.b2)
    }

    /// Mean cross-entropy over the batch plus `decay`·‖weights‖² (biases
    /// excluded).
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[u8], decay: f64) -> f64 {
        let n = xs.len() as f64;
        let data_term: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| {
                let p = self.predict(x).clamp(1e-12, 1.0 - 1e-12);
                let y = f64::from(y);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / n;
        let penalty: f64 = self
            .w1
            .iter()
            .flatten()
            .chain(&self.w2)
            .map(|w| w * w)
            .sum();
        data_term + decay * penalty
    }

    /// Analytic gradient of [`Self::loss`] by backpropagation.
    pub fn grad(&self, xs: &[Vec<f64>], ys: &[u8], decay: f64) -> MlpNet {
        let n = xs.len() as f64;
        let mut g = self.zeros_like();
        for (x, &y) in xs.iter().zip(ys) {
            let h = self.hidden_activations(x);
            let out = sigmoid(
                self.w2.iter().zip(&h).map(|(w, hi)| w * hi).sum::<f64>() + self.b2,
            );
            let delta_out = (out - f64::from(y)) / n;
            g.b2 += delta_out;
            for (j, &hj) in h.iter().enumerate() {
                g.w2[j] += delta_out * hj;
                let delta_j = delta_out * self.w2[j] * hj * (1.0 - hj);
                g.b1[j] += delta_j;
                for (gi, xi) in g.w1[j].iter_mut().zip(x) {
                    *gi += delta_j * xi;
                }
            }
        }
        for (gw, w) in g.w1.iter_mut().flatten().zip(self.w1.iter().flatten()) {
            *gw += 2.0 * decay * w;
        }
        for (gw, w) in g.w2.iter_mut().zip(&self.w2) {
            *gw += 2.0 * decay * w;
        }
        g
    }

    fn step(&mut self, g: &MlpNet, lr: f64) {
        for (w, gw) in self.w1.iter_mut().flatten().zip(g.w1.iter().flatten()) {
            *w -= lr * gw;
        }
        for (b, gb) in self.b1.iter_mut().zip(&g.b1) {
            *b -= lr * gb;
        }
        for (w, gw) in self.w2.iter_mut().zip(&g.w2) {
            *w -= lr * gw;
        }
        self.b2 -= lr * g.b2;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub net: MlpNet,
    pub hidden: usize,
    pub decay: f64,
    pub feature_names: Vec<String>,
}

impl MlpModel {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.net.predict(x)
    }
}

fn fit_net(
    input: usize,
    hidden: usize,
    decay: f64,
    xs: &[Vec<f64>],
    ys: &[u8],
    params: &MlpParams,
    seed: u64,
) -> Result<MlpNet, TrainError> {
    let mut rng = rng(seed);
    let mut net = MlpNet::init(input, hidden, &mut rng);
    for _ in 0..params.epochs {
        let loss = net.loss(xs, ys, decay);
        if !loss.is_finite() {
            return Err(TrainError::Diverged { loss });
        }
        let g = net.grad(xs, ys, decay);
        net.step(&g, params.learning_rate);
    }
    let final_loss = net.loss(xs, ys, decay);
    if !final_loss.is_finite() {
        return Err(TrainError::Diverged { loss: final_loss });
    }
    Ok(net)
}

/// Tunes (hidden, decay) over the grids on an article-grouped inner
/// validation split (one third of the stories), then retrains the winning
/// configuration on every labeled row.
pub fn train_mlp(data: &Dataset, params: &MlpParams) -> Result<MlpModel, TrainError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut stories = Vec::new();
    for row in &data.rows {
        match row.label {
            Some(l) => {
                xs.push(row.values.clone());
                ys.push(u8::from(l != 0));
                stories.push(row.story_id.clone());
            }
            None => {
                return Err(TrainError::UnlabeledRow {
                    story_id: row.story_id.clone(),
                    location: row.location.clone(),
                })
            }
        }
    }
    if xs.len() < 2 {
        return Err(TrainError::TooFewRows {
            needed: 2,
            got: xs.len(),
        });
    }
    let input = xs[0].len();
    if input == 0 {
        return Err(TrainError::NoFeatures);
    }
    require_both_classes(&ys)?;

    // Hold out a third of the stories (not rows) for tuning.
    let mut distinct: Vec<&String> = Vec::new();
    for s in &stories {
        if distinct.last() != Some(&s) && !distinct.contains(&s) {
            distinct.push(s);
        }
    }
    let mut shuffled = distinct.clone();
    shuffled.shuffle(&mut rng(derive(params.seed, 0)));
    let n_val = shuffled.len().div_ceil(3);
    let val_stories: Vec<&String> = shuffled.into_iter().take(n_val).collect();
    let (mut train_idx, mut val_idx): (Vec<usize>, Vec<usize>) =
        (0..xs.len()).partition(|&i| !val_stories.contains(&&stories[i]));
    // Degenerate splits (a single story, or one class held out entirely)
    // fall back to tuning on the training rows themselves.
    let train_ys: Vec<u8> = train_idx.iter().map(|&i| ys[i]).collect();
    if train_idx.is_empty() || val_idx.is_empty() || require_both_classes(&train_ys).is_err() {
        train_idx = (0..xs.len()).collect();
        val_idx = (0..xs.len()).collect();
    }
    let take = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            idx.iter().map(|&i| xs[i].clone()).collect(),
            idx.iter().map(|&i| ys[i]).collect(),
        )
    };
    let (train_x, train_y) = take(&train_idx);
    let (val_x, val_y) = take(&val_idx);

    let mut best: Option<(f64, usize, f64, u64)> = None;
    let mut grid_idx = 0u64;
    for &hidden in &params.hidden_grid {
        for &decay in &params.decay_grid {
            grid_idx += 1;
            let seed = derive(params.seed, grid_idx);
            let net = fit_net(input, hidden, decay, &train_x, &train_y, params, seed)?;
            let acc = val_x
                .iter()
                .zip(&val_y)
                .filter(|(x, y)| u8::from(net.predict(x) >= 0.5) == **y)
                .count() as f64
                / val_x.len() as f64;
            if best.is_none_or(|(a, _, _, _)| acc > a) {
                best = Some((acc, hidden, decay, seed));
            }
        }
    }
    let (_, hidden, decay, seed) = best.expect("non-empty tuning grids");
    let net = fit_net(input, hidden, decay, &xs, &ys, params, seed)?;
    Ok(MlpModel {
        net,
        hidden,
        decay,
        feature_names: data.feature_names.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{dataset, separable_blobs};
    use super::*;

    fn small_params(seed: u64) -> MlpParams {
        MlpParams {
            hidden_grid: vec![4],
            decay_grid: vec![0.0],
            epochs: 4000,
            learning_rate: 2.0,
            seed,
        }
    }

    #[test]
    fn learns_the_and_function() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = vec![0u8, 0, 0, 1];
        let model = train_mlp(&dataset(&x, &y), &small_params(42)).unwrap();
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(u8::from(model.predict_proba(row) >= 0.5), *label);
        }
    }

    #[test]
    fn zero_network_outputs_one_half() {
        let net = MlpNet {
            w1: vec![vec![0.0, 0.0]; 3],
            b1: vec![0.0; 3],
            w2: vec![0.0; 3],
            b2: 0.0,
        };
        assert_eq!(net.predict(&[0.3, 0.9]), 0.5);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = crate::rng::rng(123);
        let xs: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..5).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let ys: Vec<u8> = (0..8).map(|i| u8::from(i % 2 == 0)).collect();
        let decay = 0.01;
        let net = MlpNet::init(5, 4, &mut rng);
        let g = net.grad(&xs, &ys, decay);
        let eps = 1e-5;
        let mut worst = 0.0f64;
        let mut check = |analytic: f64, perturb: &mut dyn FnMut(&mut MlpNet, f64)| {
            let mut plus = net.clone();
            perturb(&mut plus, eps);
            let mut minus = net.clone();
            perturb(&mut minus, -eps);
            let fd = (plus.loss(&xs, &ys, decay) - minus.loss(&xs, &ys, decay)) / (2.0 * eps);
            let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-8);
            worst = worst.max(rel);
        };
        for j in 0..4 {
            for i in 0..5 {
                check(g.w1[j][i], &mut |n, e| n.w1[j][i] += e);
            }
            check(g.b1[j], &mut |n, e| n.b1[j] += e);
            check(g.w2[j], &mut |n, e| n.w2[j] += e);
        }
        check(g.b2, &mut |n, e| n.b2 += e);
        assert!(worst < 1e-4, "max relative gradient error {worst}");
    }

    #[test]
    fn heavy_decay_shrinks_weights_toward_prior_prediction() {
        let (x, y) = separable_blobs(20, 31);
        let data = dataset(&x, &y);
        let free = train_mlp(
            &data,
            &MlpParams {
                hidden_grid: vec![4],
                decay_grid: vec![0.0],
                epochs: 1500,
                learning_rate: 0.5,
                seed: 7,
            },
        )
        .unwrap();
        // Decay must stay below 1/learning_rate or the penalty term itself
        // makes full-batch descent oscillate and blow up.
        let shrunk = train_mlp(
            &data,
            &MlpParams {
                hidden_grid: vec![4],
                decay_grid: vec![1.0],
                epochs: 1500,
                learning_rate: 0.5,
                seed: 7,
            },
        )
        .unwrap();
        let norm = |m: &MlpModel| -> f64 {
            m.net.w1.iter().flatten().chain(&m.net.w2).map(|w| w * w).sum()
        };
        assert!(norm(&shrunk) < norm(&free) / 10.0);
        // With weights crushed, every prediction sits near the label prior.
        let prior = y.iter().map(|&l| f64::from(l)).sum::<f64>() / y.len() as f64;
        for row in &x {
            assert!((shrunk.predict_proba(row) - prior).abs() < 0.1);
        }
    }

    #[test]
    fn training_is_deterministic_and_grid_members_are_returned() {
        let (x, y) = separable_blobs(10, 13);
        let data = dataset(&x, &y);
        let params = MlpParams {
            hidden_grid: vec![3, 5],
            decay_grid: vec![0.0, 1e-2],
            epochs: 300,
            learning_rate: 0.5,
            seed: 2,
        };
        let a = train_mlp(&data, &params).unwrap();
        let b = train_mlp(&data, &params).unwrap();
        assert_eq!(a, b);
        assert!(params.hidden_grid.contains(&a.hidden));
        assert!(params.decay_grid.contains(&a.decay));
    }

    #[test]
    fn absurd_learning_rate_with_decay_reports_divergence() {
        let (x, y) = separable_blobs(10, 1);
        let data = dataset(&x, &y);
        let err = train_mlp(
            &data,
            &MlpParams {
                hidden_grid: vec![3],
                decay_grid: vec![0.1],
                epochs: 50,
                learning_rate: 1e200,
                seed: 3,
            },
        )
        .unwrap_err();
        assert!(matches!(err, TrainError::Diverged { .. }));
    }
}
