//! RBF-kernel support vector machine trained by sequential minimal
//! optimization (SMO), with Platt-scaled probability output.
//!
//! The solver is deterministic without any seed: working pairs are chosen by
//! the largest-error-difference heuristic with circular scans as fallback.

use serde::{Deserialize, Serialize};

use super::{labeled_xy, require_both_classes, TrainError};
use crate::features::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Box constraint on the dual multipliers.
    pub c: f64,
    /// RBF width; `None` means 1/p.
    pub gamma: Option<f64>,
    /// KKT tolerance for convergence.
    pub tol: f64,
    /// Maximum optimization sweeps before giving up.
    pub max_passes: u32,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// Training-row index of each support vector.
    pub support_idx: Vec<usize>,
    /// α·y per support vector, each within [−C, C].
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    /// Platt sigmoid: P(y=1|f) = 1/(1+exp(a·f+b)).
    pub platt_a: f64,
    pub platt_b: f64,
    pub feature_names: Vec<String>,
}

fn rbf(gamma: f64, u: &[f64], v: &[f64]) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

fn stable_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SvmModel {
    /// Uncalibrated decision value Σ coefᵢ K(svᵢ, x) + bias.
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * rbf(self.gamma, sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Platt-calibrated probability of the positive class.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        stable_sigmoid(-(self.platt_a * self.decision_value(x) + self.platt_b))
    }
}

struct Smo<'a> {
    k: Vec<Vec<f64>>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    b: f64,
    c: f64,
    tol: f64,
    x: &'a [Vec<f64>],
    /// Dual objective after every successful pair update (for diagnostics).
    trace: Option<Vec<f64>>,
}

impl<'a> Smo<'a> {
    fn decision(&self, i: usize) -> f64 {
        let mut f = self.b;
        for (j, &a) in self.alpha.iter().enumerate() {
            if a > 0.0 {
                f += a * self.y[j] * self.k[i][j];
            }
        }
        f
    }

    fn error(&self, i: usize) -> f64 {
        self.decision(i) - self.y[i]
    }

    fn dual_objective(&self) -> f64 {
        let mut obj = self.alpha.iter().sum::<f64>();
        for i in 0..self.alpha.len() {
            if self.alpha[i] == 0.0 {
                continue;
            }
            for j in 0..self.alpha.len() {
                if self.alpha[j] != 0.0 {
                    obj -= 0.5 * self.alpha[i] * self.alpha[j] * self.y[i] * self.y[j]
                        * self.k[i][j];
                }
            }
        }
        obj
    }

    fn is_non_bound(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    /// KKT violation magnitude at point `i` (0 when satisfied).
    fn violation(&self, i: usize) -> f64 {
        let r = self.error(i) * self.y[i];
        let mut v: f64 = 0.0;
        if self.alpha[i] < self.c {
            v = v.max(-r);
        }
        if self.alpha[i] > 0.0 {
            v = v.max(r);
        }
        v.max(0.0)
    }

    fn max_violation(&self) -> f64 {
        (0..self.alpha.len())
            .map(|i| self.violation(i))
            .fold(0.0, f64::max)
    }

    fn examine(&mut self, i: usize) -> bool {
        if self.violation(i) <= self.tol {
            return false;
        }
        let e_i = self.error(i);
        // Heuristic 1: the non-bound point with the largest |E_i − E_j|.
        let mut best: Option<(f64, usize)> = None;
        for j in 0..self.alpha.len() {
            if j != i && self.is_non_bound(j) {
                let gap = (e_i - self.error(j)).abs();
                if best.is_none_or(|(g, _)| gap > g) {
                    best = Some((gap, j));
                }
            }
        }
        if let Some((_, j)) = best {
            if self.take_step(i, j) {
                return true;
            }
        }
        // Heuristic 2 then 3: circular scans (non-bound first, then all),
        // starting right after i — deterministic replacement for the
        // random start position.
        let n = self.alpha.len();
        for offset in 1..n {
            let j = (i + offset) % n;
            if self.is_non_bound(j) && self.take_step(i, j) {
                return true;
            }
        }
        for offset in 1..n {
            let j = (i + offset) % n;
            if self.take_step(i, j) {
                return true;
            }
        }
        false
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (a_i, a_j) = (self.alpha[i], self.alpha[j]);
        let (y_i, y_j) = (self.y[i], self.y[j]);
        let s = y_i * y_j;
        let (low, high) = if (y_i - y_j).abs() > f64::EPSILON {
            ((a_j - a_i).max(0.0), (self.c + a_j - a_i).min(self.c))
        } else {
            ((a_i + a_j - self.c).max(0.0), (a_i + a_j).min(self.c))
        };
        if low >= high {
            return false;
        }
        let e_i = self.error(i);
        let e_j = self.error(j);
        let (k_ii, k_jj, k_ij) = (self.k[i][i], self.k[j][j], self.k[i][j]);
        let eta = k_ii + k_jj - 2.0 * k_ij;

        let a_j_new = if eta > 0.0 {
            (a_j + y_j * (e_i - e_j) / eta).clamp(low, high)
        } else {
            // Flat or concave direction (duplicate points): evaluate the
            // objective at both clip ends and move to the better one.
            let f_i = y_i * (e_i + self.b) - a_i * k_ii - s * a_j * k_ij;
            let f_j = y_j * (e_j + self.b) - s * a_i * k_ij - a_j * k_jj;
            let l_i = a_i + s * (a_j - low);
            let h_i = a_i + s * (a_j - high);
            let obj_low = l_i * f_i + low * f_j + 0.5 * l_i * l_i * k_ii
                + 0.5 * low * low * k_jj
                + s * low * l_i * k_ij;
            let obj_high = h_i * f_i + high * f_j + 0.5 * h_i * h_i * k_ii
                + 0.5 * high * high * k_jj
                + s * high * h_i * k_ij;
            if obj_low < obj_high - 1e-12 {
                low
            } else if obj_low > obj_high + 1e-12 {
                high
            } else {
                return false;
            }
        };
        if (a_j_new - a_j).abs() < 1e-12 * (a_j_new + a_j + 1e-12) {
            return false;
        }
        let a_i_new = a_i + s * (a_j - a_j_new);

        let b1 = self.b - e_i - y_i * (a_i_new - a_i) * k_ii - y_j * (a_j_new - a_j) * k_ij;
        let b2 = self.b - e_j - y_i * (a_i_new - a_i) * k_ij - y_j * (a_j_new - a_j) * k_jj;
        self.b = if a_i_new > 0.0 && a_i_new < self.c {
            b1
        } else if a_j_new > 0.0 && a_j_new < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        self.alpha[i] = a_i_new;
        self.alpha[j] = a_j_new;
        if self.trace.is_some() {
            let objective = self.dual_objective();
            if let Some(trace) = self.trace.as_mut() {
                trace.push(objective);
            }
        }
        true
    }
}

pub fn train_svm_rbf(data: &Dataset, params: &SvmParams) -> Result<SvmModel, TrainError> {
    train_svm_traced(data, params, false).map(|(m, _)| m)
}

/// Like [`train_svm_rbf`] but also returns the dual-objective trajectory,
/// one entry per successful pair update.
pub fn train_svm_traced(
    data: &Dataset,
    params: &SvmParams,
    trace: bool,
) -> Result<(SvmModel, Vec<f64>), TrainError> {
    let (x, y01) = labeled_xy(data)?;
    if x.len() < 2 {
        return Err(TrainError::TooFewRows {
            needed: 2,
            got: x.len(),
        });
    }
    require_both_classes(&y01)?;
    let p = x[0].len();
    if p == 0 {
        return Err(TrainError::NoFeatures);
    }
    let gamma = params.gamma.unwrap_or(1.0 / p as f64);
    let n = x.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| rbf(gamma, &x[i], &x[j])).collect())
        .collect();
    let y: Vec<f64> = y01.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();

    let mut smo = Smo {
        k,
        y,
        alpha: vec![0.0; n],
        b: 0.0,
        c: params.c,
        tol: params.tol,
        x: &x,
        trace: trace.then(Vec::new),
    };

    // Platt's outer loop: full sweeps alternate with non-bound-only sweeps
    // until a full sweep changes nothing.
    let mut sweeps = 0u32;
    let mut examine_all = true;
    let mut num_changed = 1usize;
    while num_changed > 0 || examine_all {
        sweeps += 1;
        if sweeps > params.max_passes {
            return Err(TrainError::NonConvergence {
                passes: params.max_passes,
                violation: smo.max_violation(),
            });
        }
        num_changed = 0;
        for i in 0..n {
            if examine_all || smo.is_non_bound(i) {
                num_changed += usize::from(smo.examine(i));
            }
        }
        if examine_all {
            examine_all = false;
        } else if num_changed == 0 {
            examine_all = true;
        }
    }

    let mut support_vectors = Vec::new();
    let mut support_idx = Vec::new();
    let mut coefficients = Vec::new();
    for (i, &a) in smo.alpha.iter().enumerate() {
        if a > 1e-10 {
            support_vectors.push(smo.x[i].clone());
            support_idx.push(i);
            coefficients.push(a * smo.y[i]);
        }
    }
    let mut model = SvmModel {
        support_vectors,
        support_idx,
        coefficients,
        bias: smo.b,
        gamma,
        c: params.c,
        platt_a: 0.0,
        platt_b: 0.0,
        feature_names: data.feature_names.clone(),
    };
    let decisions: Vec<f64> = x.iter().map(|r| model.decision_value(r)).collect();
    (model.platt_a, model.platt_b) = fit_platt(&decisions, &y01);
    let trace = smo.trace.take().unwrap_or_default();
    Ok((model, trace))
}

/// Largest KKT violation of a trained model measured against its own
/// training data; ≤ tol at convergence.
pub fn max_kkt_violation(model: &SvmModel, x: &[Vec<f64>], y01: &[u8]) -> f64 {
    let mut alpha = vec![0.0; x.len()];
    for (k, &i) in model.support_idx.iter().enumerate() {
        alpha[i] = model.coefficients[k].abs();
    }
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let y = if y01[i] == 1 { 1.0 } else { -1.0 };
        let r = (model.decision_value(&x[i]) - y) * y;
        let mut v: f64 = 0.0;
        if alpha[i] < model.c {
            v = v.max(-r);
        }
        if alpha[i] > 0.0 {
            v = v.max(r);
        }
        worst = worst.max(v);
    }
    worst
}

/// Newton fit of the Platt sigmoid on (decision value, label) pairs, using
/// the regularized targets (N₊+1)/(N₊+2) and 1/(N₋+2).
fn fit_platt(f: &[f64], y01: &[u8]) -> (f64, f64) {
    let prior1 = y01.iter().filter(|&&l| l == 1).count() as f64;
    let prior0 = y01.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y01
        .iter()
        .map(|&l| if l == 1 { hi } else { lo })
        .collect();

    let fval = |a: f64, b: f64| -> f64 {
        f.iter()
            .zip(&t)
            .map(|(&fi, &ti)| {
                let fapb = a * fi + b;
                if fapb >= 0.0 {
                    ti * fapb + (1.0 + (-fapb).exp()).ln()
                } else {
                    (ti - 1.0) * fapb + (1.0 + fapb.exp()).ln()
                }
            })
            .sum()
    };

    let sigma = 1e-12;
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fv = fval(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21) = (sigma, sigma, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&fi, &ti) in f.iter().zip(&t) {
            let fapb = a * fi + b;
            let p = if fapb >= 0.0 {
                let e = (-fapb).exp();
                e / (1.0 + e)
            } else {
                1.0 / (1.0 + fapb.exp())
            };
            let d2 = p * (1.0 - p);
            h11 += fi * fi * d2;
            h22 += d2;
            h21 += fi * d2;
            let d1 = ti - p;
            g1 += fi * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut stepped = false;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = fval(na, nb);
            if nf < fv + 1e-4 * step * gd {
                a = na;
                b = nb;
                fv = nf;
                stepped = true;
                break;
            }
            step /= 2.0;
        }
        if !stepped {
            break;
        }
    }
    (a, b)
}
