//! Shallow classifiers over logical-operator counts, used to find easy neutrals.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::generator::Statement;
use crate::logic::{Label, OperatorCounts};

pub const N_FEATURES: usize = 2 * OperatorCounts::NAMES.len() + 1;

/// Feature order: premise operator counts, hypothesis operator counts, premise count.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "premise_forall",
    "premise_exists",
    "premise_not",
    "premise_and",
    "premise_or",
    "premise_implies",
    "premise_iff",
    "premise_xor",
    "premise_eq",
    "hypothesis_forall",
    "hypothesis_exists",
    "hypothesis_not",
    "hypothesis_and",
    "hypothesis_or",
    "hypothesis_implies",
    "hypothesis_iff",
    "hypothesis_xor",
    "hypothesis_eq",
    "n_premises",
];

pub fn features(premises: &[Statement], hypothesis: &Statement) -> Vec<f64> {
    let mut x = vec![0.0; N_FEATURES];
    let k = OperatorCounts::NAMES.len();
    for p in premises {
        for (i, c) in p.operators.0.iter().enumerate() {
            x[i] += f64::from(*c);
        }
    }
    for (i, c) in hypothesis.operators.0.iter().enumerate() {
        x[k + i] = f64::from(*c);
    }
    x[N_FEATURES - 1] = premises.len() as f64;
    x
}

pub trait Classifier: Send + Sync {
    /// Probabilities in [`Label::ALL`] order.
    fn predict_proba(&self, x: &[f64]) -> [f64; 3];

    fn predict(&self, x: &[f64]) -> Label {
        let p = self.predict_proba(x);
        let mut best = 0;
        for k in 1..3 {
            if p[k] > p[best] {
                best = k;
            }
        }
        Label::ALL[best]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    #[default]
    Gbm,
    Logistic,
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gbm" => Ok(ClassifierKind::Gbm),
            "logistic" => Ok(ClassifierKind::Logistic),
            _ => Err(format!("unknown classifier `{s}` (expected gbm or logistic)")),
        }
    }
}

pub fn train_classifier(
    kind: ClassifierKind,
    xs: &[Vec<f64>],
    ys: &[Label],
) -> Result<Box<dyn Classifier>, PipelineError> {
    for l in Label::ALL {
        if !ys.contains(&l) {
            return Err(PipelineError::DegenerateLabels(l.as_str()));
        }
    }
    Ok(match kind {
        ClassifierKind::Gbm => Box::new(GbmClassifier::fit(xs, ys, &GbmParams::default())),
        ClassifierKind::Logistic => Box::new(LogisticClassifier::fit(xs, ys)),
    })
}

fn softmax(f: [f64; 3]) -> [f64; 3] {
    let m = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = f.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl Default for GbmParams {
    fn default() -> Self {
        GbmParams {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
enum Tree {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Tree>,
        right: Box<Tree>,
    },
}

impl Tree {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Tree::Leaf(v) => *v,
            Tree::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.eval(x)
                } else {
                    right.eval(x)
                }
            }
        }
    }
}

/// Gradient-boosted regression trees on multinomial deviance: one tree per
/// class per round, fit to the negative gradient by squared error, with
/// Newton-step leaf values. Starts from the log class priors.
#[derive(Debug, Clone)]
pub struct GbmClassifier {
    init: [f64; 3],
    learning_rate: f64,
    rounds: Vec<[Tree; 3]>,
}

struct Fit<'a> {
    xs: &'a [Vec<f64>],
    residual: &'a [f64],
    hessian: &'a [f64],
}

impl Fit<'_> {
    fn grow(&self, idx: &mut [usize], depth: usize) -> Tree {
        if depth == 0 || idx.len() < 2 {
            return self.leaf(idx);
        }
        let Some((feature, threshold)) = self.best_split(idx) else {
            return self.leaf(idx);
        };
        let mut cut = 0;
        for i in 0..idx.len() {
            if self.xs[idx[i]][feature] <= threshold {
                idx.swap(i, cut);
                cut += 1;
            }
        }
        let (l, r) = idx.split_at_mut(cut);
        Tree::Split {
            feature,
            threshold,
            left: Box::new(self.grow(l, depth - 1)),
            right: Box::new(self.grow(r, depth - 1)),
        }
    }

    fn leaf(&self, idx: &[usize]) -> Tree {
        let num: f64 = idx.iter().map(|&i| self.residual[i]).sum();
        let den: f64 = idx.iter().map(|&i| self.hessian[i]).sum();
        let k = 3.0;
        Tree::Leaf(if den.abs() < 1e-150 {
            0.0
        } else {
            (k - 1.0) / k * num / den
        })
    }

    /// Split maximizing the reduction in squared error.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.residual[i]).sum();
        let base = total * total / n;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for f in 0..self.xs[0].len() {
            order.sort_by(|&a, &b| self.xs[a][f].total_cmp(&self.xs[b][f]));
            let mut left = 0.0;
            for j in 0..order.len() - 1 {
                left += self.residual[order[j]];
                let (a, b) = (self.xs[order[j]][f], self.xs[order[j + 1]][f]);
                if a == b {
                    continue;
                }
                let nl = (j + 1) as f64;
                let right = total - left;
                let gain = left * left / nl + right * right / (n - nl) - base;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, (a + b) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl GbmClassifier {
    pub fn fit(xs: &[Vec<f64>], ys: &[Label], params: &GbmParams) -> GbmClassifier {
        let n = xs.len();
        let mut prior = [0.0; 3];
        for y in ys {
            prior[y.index()] += 1.0 / n as f64;
        }
        let init = prior.map(|p: f64| p.max(1e-12).ln());
        let mut raw = vec![init; n];
        let mut model = GbmClassifier {
            init,
            learning_rate: params.learning_rate,
            rounds: Vec::with_capacity(params.rounds),
        };
        let mut residual = vec![0.0; n];
        let mut hessian = vec![0.0; n];
        for _ in 0..params.rounds {
            let probs: Vec<[f64; 3]> = raw.iter().map(|f| softmax(*f)).collect();
            let trees: [Tree; 3] = std::array::from_fn(|k| {
                for i in 0..n {
                    let y = if ys[i].index() == k { 1.0 } else { 0.0 };
                    residual[i] = y - probs[i][k];
                    let r = residual[i].abs();
                    hessian[i] = r * (1.0 - r);
                }
                let fit = Fit {
                    xs,
                    residual: &residual,
                    hessian: &hessian,
                };
                let mut idx: Vec<usize> = (0..n).collect();
                fit.grow(&mut idx, params.max_depth)
            });
            for (i, f) in raw.iter_mut().enumerate() {
                for k in 0..3 {
                    f[k] += params.learning_rate * trees[k].eval(&xs[i]);
                }
            }
            model.rounds.push(trees);
        }
        model
    }

    fn raw(&self, x: &[f64], rounds: usize) -> [f64; 3] {
        let mut f = self.init;
        for trees in &self.rounds[..rounds] {
            for k in 0..3 {
                f[k] += self.learning_rate * trees[k].eval(x);
            }
        }
        f
    }

    /// Probabilities after the first `rounds` boosting rounds.
    pub fn staged_proba(&self, x: &[f64], rounds: usize) -> [f64; 3] {
        softmax(self.raw(x, rounds.min(self.rounds.len())))
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }
}

impl Classifier for GbmClassifier {
    fn predict_proba(&self, x: &[f64]) -> [f64; 3] {
        softmax(self.raw(x, self.rounds.len()))
    }
}

/// Multinomial logistic regression on standardized features, batch gradient
/// descent with a small L2 penalty.
#[derive(Debug, Clone)]
pub struct LogisticClassifier {
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: [Vec<f64>; 3],
    bias: [f64; 3],
}

impl LogisticClassifier {
    const ITERATIONS: usize = 500;
    const STEP: f64 = 0.5;
    const L2: f64 = 1e-4;

    pub fn fit(xs: &[Vec<f64>], ys: &[Label]) -> LogisticClassifier {
        let n = xs.len() as f64;
        let d = xs[0].len();
        let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
        let scale: Vec<f64> = (0..d)
            .map(|j| {
                let var = xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut model = LogisticClassifier {
            mean,
            scale,
            weights: std::array::from_fn(|_| vec![0.0; d]),
            bias: [0.0; 3],
        };
        let zs: Vec<Vec<f64>> = xs.iter().map(|x| model.standardize(x)).collect();
        for _ in 0..Self::ITERATIONS {
            let mut gw: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; d]);
            let mut gb = [0.0; 3];
            for (z, y) in zs.iter().zip(ys) {
                let p = model.proba_z(z);
                for k in 0..3 {
                    let err = p[k] - if y.index() == k { 1.0 } else { 0.0 };
                    gb[k] += err;
                    for j in 0..d {
                        gw[k][j] += err * z[j];
                    }
                }
            }
            for k in 0..3 {
                model.bias[k] -= Self::STEP * gb[k] / n;
                for j in 0..d {
                    model.weights[k][j] -= Self::STEP * (gw[k][j] / n + Self::L2 * model.weights[k][j]);
                }
            }
        }
        model
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| (v - self.mean[j]) / self.scale[j])
            .collect()
    }

    fn proba_z(&self, z: &[f64]) -> [f64; 3] {
        softmax(std::array::from_fn(|k| {
            self.bias[k] + self.weights[k].iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
        }))
    }
}

impl Classifier for LogisticClassifier {
    fn predict_proba(&self, x: &[f64]) -> [f64; 3] {
        self.proba_z(&self.standardize(x))
    }
}
