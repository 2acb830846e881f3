//! Gradient-boosted regression trees with second-order split scoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::windows::{FeatureSpec, Scaling, SupervisedSet, WindowModel};
use crate::data::Climatology;
use crate::error::{Error, Result};
use crate::preprocess::TransformChain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum gain a split must exceed.
    pub gamma: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_trees: 200,
            learning_rate: 0.01,
            max_depth: 3,
            gamma: 0.0,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::BadHyperparameter(format!(
                "learning rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::BadHyperparameter("max_depth must be >= 1".into()));
        }
        if self.gamma < 0.0 || self.lambda < 0.0 || self.min_child_weight < 0.0 {
            return Err(Error::BadHyperparameter(
                "gamma, lambda and min_child_weight must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        weight: f64,
    },
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in an arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { weight } => return weight,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { weight } => Some(*weight),
            Node::Split { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base: f64,
    pub params: GbtParams,
    pub trees: Vec<Tree>,
    pub spec: FeatureSpec,
    pub scaling: Scaling,
    pub chain: TransformChain,
    pub climatology: Option<Climatology>,
}

impl GbtModel {
    /// `base + eta * sum of tree outputs`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base + self.params.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// Prediction using only the first `k` trees.
    pub fn predict_with(&self, x: &[f64], k: usize) -> f64 {
        self.base + self.params.learning_rate * self.trees[..k].iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn mse(&self, data: &SupervisedSet) -> f64 {
        data.x
            .iter()
            .zip(&data.y)
            .map(|(x, y)| (self.predict(x) - y).powi(2))
            .sum::<f64>()
            / data.len() as f64
    }
}

impl WindowModel for GbtModel {
    fn name(&self) -> &str {
        "XGBoost"
    }
    fn spec(&self) -> &FeatureSpec {
        &self.spec
    }
    fn scaling(&self) -> &Scaling {
        &self.scaling
    }
    fn chain(&self) -> &TransformChain {
        &self.chain
    }
    fn climatology(&self) -> Option<&Climatology> {
        self.climatology.as_ref()
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict(x)
    }
}

struct SplitChoice {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

fn best_split_for_feature(
    x: &[Vec<f64>],
    grad: &[f64],
    rows: &[usize],
    feature: usize,
    p: &GbtParams,
) -> Option<SplitChoice> {
    let mut sorted: Vec<usize> = rows.to_vec();
    sorted.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
    let g_total: f64 = rows.iter().map(|&i| grad[i]).sum();
    let h_total = rows.len() as f64;
    let parent = score(g_total, h_total, p.lambda);
    let mut best: Option<SplitChoice> = None;
    let (mut gl, mut hl) = (0.0, 0.0);
    for k in 0..sorted.len() - 1 {
        gl += grad[sorted[k]];
        hl += 1.0;
        let (lo, hi) = (x[sorted[k]][feature], x[sorted[k + 1]][feature]);
        if lo == hi {
            continue;
        }
        let (gr, hr) = (g_total - gl, h_total - hl);
        if hl < p.min_child_weight || hr < p.min_child_weight {
            continue;
        }
        let gain = 0.5 * (score(gl, hl, p.lambda) + score(gr, hr, p.lambda) - parent) - p.gamma;
        if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(SplitChoice {
                gain,
                feature,
                threshold: lo + (hi - lo) / 2.0,
            });
        }
    }
    best
}

fn grow(x: &[Vec<f64>], grad: &[f64], rows: Vec<usize>, depth: usize, p: &GbtParams, nodes: &mut Vec<Node>) -> usize {
    let at = nodes.len();
    let g: f64 = rows.iter().map(|&i| grad[i]).sum();
    let leaf = Node::Leaf {
        weight: -g / (rows.len() as f64 + p.lambda),
    };
    nodes.push(leaf);
    if depth >= p.max_depth || rows.len() < 2 {
        return at;
    }
    let n_features = x[rows[0]].len();
    let candidates: Vec<Option<SplitChoice>> = (0..n_features)
        .into_par_iter()
        .map(|f| best_split_for_feature(x, grad, &rows, f, p))
        .collect();
    // strict improvement keeps the lowest feature index on ties
    let mut best: Option<SplitChoice> = None;
    for c in candidates.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| c.gain > b.gain) {
            best = Some(c);
        }
    }
    let Some(split) = best else {
        return at;
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&i| x[i][split.feature] < split.threshold);
    let left = grow(x, grad, left_rows, depth + 1, p, nodes);
    let right = grow(x, grad, right_rows, depth + 1, p, nodes);
    nodes[at] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    at
}

/// Boosts `params.n_trees` trees on squared error. Each tree is grown by
/// exact greedy search over sorted feature values with gradients
/// `y_hat - y` and unit hessians; leaves take the Newton weight
/// `-G / (H + lambda)`.
pub fn gbt_fit(data: &SupervisedSet, params: &GbtParams) -> Result<GbtModel> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = data.len();
    let base = data.y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let grad: Vec<f64> = pred.iter().zip(&data.y).map(|(p, y)| p - y).collect();
        let mut nodes = Vec::new();
        grow(&data.x, &grad, (0..n).collect(), 0, params, &mut nodes);
        let tree = Tree { nodes };
        for (p, x) in pred.iter_mut().zip(&data.x) {
            *p += params.learning_rate * tree.predict(x);
        }
        trees.push(tree);
    }
    Ok(GbtModel {
        base,
        params: *params,
        trees,
        spec: data.spec.clone(),
        scaling: data.scaling.clone(),
        chain: data.chain.clone(),
        climatology: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Day, Series};
    use crate::ml_models::windows::{make_windows, one_step_predictions, recursive_forecast};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stump_data() -> SupervisedSet {
        let x: Vec<Vec<f64>> = (-10..10).map(|i| vec![i as f64 + 0.5]).collect();
        let y = x.iter().map(|r| if r[0] < 0.0 { -1.0 } else { 1.0 }).collect();
        SupervisedSet::from_rows(x, y, 0).unwrap()
    }

    fn stump_params() -> GbtParams {
        GbtParams {
            n_trees: 1,
            learning_rate: 1.0,
            max_depth: 1,
            gamma: 0.0,
            lambda: 0.0,
            min_child_weight: 1.0,
        }
    }

    #[test]
    fn stump_recovers_leaf_weights() {
        let data = stump_data();
        let m = gbt_fit(&data, &stump_params()).unwrap();
        assert_eq!(m.base, 0.0);
        let mut leaves: Vec<f64> = m.trees[0].leaves().collect();
        leaves.sort_by(f64::total_cmp);
        assert_eq!(leaves, vec![-1.0, 1.0]);
        assert_eq!(m.mse(&data), 0.0);
    }

    #[test]
    fn huge_lambda_collapses_to_base() {
        let data = stump_data();
        let p = GbtParams {
            lambda: 1e15,
            n_trees: 5,
            ..stump_params()
        };
        let m = gbt_fit(&data, &p).unwrap();
        for x in &data.x {
            assert!((m.predict(x) - m.base).abs() < 1e-12);
        }
    }

    fn noisy_set(seed: u64, n: usize) -> SupervisedSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let y = x
            .iter()
            .map(|r| (6.0 * r[0]).sin() + r[1] * r[2] + 0.1 * rng.random::<f64>())
            .collect();
        SupervisedSet::from_rows(x, y, 0).unwrap()
    }

    #[test]
    fn training_loss_never_increases() {
        let data = noisy_set(3, 200);
        let p = GbtParams {
            n_trees: 500,
            learning_rate: 0.1,
            ..Default::default()
        };
        let m = gbt_fit(&data, &p).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=m.trees.len() {
            let mse = data
                .x
                .iter()
                .zip(&data.y)
                .map(|(x, y)| (m.predict_with(x, k) - y).powi(2))
                .sum::<f64>();
            assert!(mse <= prev + 1e-12, "tree {k}");
            prev = mse;
        }
        assert!(m.trees.iter().all(|t| t.depth() <= 3 && t.leaves().count() >= 1));
    }

    #[test]
    fn prediction_is_base_plus_scaled_leaf_sum() {
        let data = noisy_set(4, 80);
        let m = gbt_fit(
            &data,
            &GbtParams {
                n_trees: 10,
                learning_rate: 0.3,
                ..Default::default()
            },
        )
        .unwrap();
        let x = &data.x[5];
        let mut by_hand = m.base;
        for t in &m.trees {
            let mut at = 0;
            while let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = t.nodes[at]
            {
                at = if x[feature] < threshold { left } else { right };
            }
            if let Node::Leaf { weight } = t.nodes[at] {
                by_hand += 0.3 * weight;
            }
        }
        assert!((m.predict(x) - by_hand).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let data = noisy_set(5, 120);
        let a = gbt_fit(&data, &GbtParams::default()).unwrap();
        let b = gbt_fit(&data, &GbtParams::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn hyperparameter_checks() {
        let data = stump_data();
        for bad in [
            GbtParams {
                learning_rate: 0.0,
                ..Default::default()
            },
            GbtParams {
                learning_rate: 1.5,
                ..Default::default()
            },
            GbtParams {
                max_depth: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(gbt_fit(&data, &bad), Err(Error::BadHyperparameter(_))));
        }
        let empty = SupervisedSet::from_rows(vec![], vec![], 0).unwrap();
        assert_eq!(gbt_fit(&empty, &GbtParams::default()).unwrap_err(), Error::EmptyData);
    }

    fn sine_series(n: usize) -> Series {
        let y: Vec<f64> = (0..n)
            .map(|t| 100.0 + 20.0 * (2.0 * std::f64::consts::PI * t as f64 / 12.0).sin())
            .collect();
        Series::from_values("y", "MWh", Day::from_ymd(2022, 1, 1).unwrap(), &y).unwrap()
    }

    #[test]
    fn stump_forecast_takes_two_values() {
        let s = sine_series(100);
        let set = make_windows(&s, 3, None, false).unwrap();
        let m = gbt_fit(
            &set,
            &GbtParams {
                n_trees: 1,
                max_depth: 1,
                learning_rate: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let fc = recursive_forecast(&m, &s, 20, None).unwrap();
        let mut distinct = fc.original.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        assert!(distinct.len() <= 2);
        let once = recursive_forecast(&m, &s, 1, None).unwrap();
        assert_eq!(once.original[0], fc.original[0]);
    }

    #[test]
    fn sine_wave_with_shipped_settings() {
        let s = sine_series(360);
        let train = s.slice(0..300).unwrap();
        let set = make_windows(&train, 12, None, false).unwrap();
        let m = gbt_fit(&set, &GbtParams::default()).unwrap();
        let preds = one_step_predictions(&m, &s, None, 300).unwrap();
        let actual = s.dense().unwrap();
        let mape = preds
            .iter()
            .zip(&actual[300..])
            .map(|(p, a)| ((a - p) / a).abs())
            .sum::<f64>()
            / 60.0
            * 100.0;
        assert!(mape < 10.0, "mape {mape}");
    }
}
