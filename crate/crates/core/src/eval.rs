//! Error metrics, temporal splits, expanding-window folds and grid search.

use std::collections::BTreeMap;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Day, ExogMatrix, Series};
use crate::error::{Error, Result};
use crate::family::{Family, ModelSpec};
use crate::preprocess::TransformChain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Original,
    Transformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Percent; `None` when some actual value is zero.
    pub mape: Option<f64>,
    /// `100 - mape`; `None` exactly when `mape` is.
    pub mapa: Option<f64>,
    pub n: usize,
    pub scale: Scale,
}

impl Metrics {
    pub fn mape_undefined(&self) -> bool {
        self.mape.is_none()
    }

    /// The requested metric; an undefined MAPE scores `+inf`.
    pub fn get(&self, id: MetricId) -> f64 {
        match id {
            MetricId::Mse => self.mse,
            MetricId::Rmse => self.rmse,
            MetricId::Mae => self.mae,
            MetricId::Mape => self.mape.unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricId {
    #[default]
    Mse,
    Rmse,
    Mae,
    Mape,
}

impl FromStr for MetricId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(MetricId::Mse),
            "rmse" => Ok(MetricId::Rmse),
            "mae" => Ok(MetricId::Mae),
            "mape" => Ok(MetricId::Mape),
            _ => Err(Error::Config(format!("unknown metric {s:?}"))),
        }
    }
}

/// MSE, RMSE, MAE, MAPE and MAPA of `predicted` against `actual`.
pub fn compute_metrics(actual: &[f64], predicted: &[f64], scale: Scale) -> Result<Metrics> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = actual.len() as f64;
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut pct = 0.0;
    let mut zero_actual = false;
    for (a, p) in actual.iter().zip(predicted) {
        let e = a - p;
        sq += e * e;
        abs += e.abs();
        if *a == 0.0 {
            zero_actual = true;
        } else {
            pct += (e / a).abs();
        }
    }
    let mse = sq / n;
    let mape = (!zero_actual).then(|| 100.0 * pct / n);
    Ok(Metrics {
        mse,
        rmse: mse.sqrt(),
        mae: abs / n,
        mape,
        mapa: mape.map(|m| 100.0 - m),
        n: actual.len(),
        scale,
    })
}

/// `train` holds the days strictly before `split`, `test` the rest.
pub fn train_test_split(s: &Series, split: Day) -> Result<(Series, Series)> {
    match s.index_of(split) {
        Some(i) if i > 0 => Ok((s.slice(0..i)?, s.slice(i..s.len())?)),
        _ => Err(Error::SplitOutOfRange(split.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Range<usize>,
    pub validate: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

/// `k` expanding-window folds: equal validation blocks after `min_train`
/// (the remainder joins the last block), each trained on everything
/// before it.
pub fn expanding_folds(n: usize, k: usize, min_train: usize) -> Result<FoldPlan> {
    if k == 0 || min_train == 0 || n < min_train + k {
        return Err(Error::TooShort(format!(
            "{n} observations cannot hold {k} folds after {min_train} training points"
        )));
    }
    let block = (n - min_train) / k;
    let folds = (0..k)
        .map(|i| {
            let start = min_train + i * block;
            let end = if i + 1 == k { n } else { start + block };
            Fold {
                train: 0..start,
                validate: start..end,
            }
        })
        .collect();
    Ok(FoldPlan { folds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub params: BTreeMap<String, f64>,
    #[serde(with = "nonfinite::vec")]
    pub fold_scores: Vec<f64>,
    /// Mean validation score; `+inf` if any fold failed.
    #[serde(with = "nonfinite")]
    pub mean: f64,
    pub n_params: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub family: Family,
    pub metric: MetricId,
    /// Every configuration in grid order.
    pub entries: Vec<GridEntry>,
    pub best: usize,
    /// How ties on the mean score were resolved.
    pub tie_break: Vec<String>,
}

impl GridResult {
    pub fn best_entry(&self) -> &GridEntry {
        &self.entries[self.best]
    }
}

/// Cartesian product of `grid` in key order, the last key varying fastest.
pub fn expand_grid(grid: &BTreeMap<String, Vec<f64>>) -> Result<Vec<BTreeMap<String, f64>>> {
    if grid.is_empty() || grid.values().any(Vec::is_empty) {
        return Err(Error::EmptyGrid);
    }
    let mut configs = vec![BTreeMap::new()];
    for (k, values) in grid {
        configs = configs
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut next = c.clone();
                    next.insert(k.clone(), *v);
                    next
                })
            })
            .collect();
    }
    Ok(configs)
}

fn score_config(
    spec: &ModelSpec,
    s: &Series,
    exog: Option<&ExogMatrix>,
    plan: &FoldPlan,
    metric: MetricId,
) -> Result<Vec<f64>> {
    let y = s.dense()?;
    plan.folds
        .iter()
        .map(|fold| {
            let train = s.slice(fold.train.clone())?;
            let train_exog = exog.map(|x| x.slice(fold.train.clone()));
            let model = spec.fit(&train, train_exog.as_ref(), &TransformChain::new())?;
            let seen = s.slice(0..fold.validate.end)?;
            let seen_exog = exog.map(|x| x.slice(0..fold.validate.end));
            let pred = model.one_step(&seen, seen_exog.as_ref(), fold.validate.start)?;
            let m = compute_metrics(&y[fold.validate.clone()], &pred, Scale::Transformed)?;
            Ok(m.get(metric))
        })
        .collect()
}

/// Scores every configuration in `grid` by its mean one-step validation
/// metric over `plan`. Configurations that fail on any fold score `+inf`.
/// The best is the smallest mean, then the fewest parameters, then the
/// earliest in grid order.
pub fn grid_search(
    family: Family,
    grid: &BTreeMap<String, Vec<f64>>,
    s: &Series,
    exog: Option<&ExogMatrix>,
    plan: &FoldPlan,
    metric: MetricId,
) -> Result<GridResult> {
    let configs = expand_grid(grid)?;
    let n_exog = exog.map_or(0, ExogMatrix::ncols);
    let entries: Vec<GridEntry> = configs
        .into_par_iter()
        .map(|params| {
            let spec = ModelSpec::from_params(family, &params);
            let n_params = spec.as_ref().map_or(usize::MAX, |sp| sp.n_params(n_exog));
            match spec.and_then(|sp| score_config(&sp, s, exog, plan, metric)) {
                Ok(fold_scores) => GridEntry {
                    mean: fold_scores.iter().sum::<f64>() / fold_scores.len() as f64,
                    params,
                    fold_scores,
                    n_params,
                    error: None,
                },
                Err(e) => GridEntry {
                    params,
                    fold_scores: vec![],
                    mean: f64::INFINITY,
                    n_params,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut best = 0;
    let mut tie_break = Vec::new();
    for (i, e) in entries.iter().enumerate().skip(1) {
        let b = &entries[best];
        if e.mean < b.mean {
            best = i;
        } else if e.mean == b.mean {
            if e.n_params < b.n_params {
                tie_break.push(format!("config {i} ties config {best}; fewer parameters wins"));
                best = i;
            } else {
                tie_break.push(format!("config {i} ties config {best}; earlier config kept"));
            }
        }
    }
    Ok(GridResult {
        family,
        metric,
        entries,
        best,
        tie_break,
    })
}

/// JSON has no infinities; they travel as the strings `"inf"`/`"-inf"`.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Text("nan".into())
        } else if v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(|_| E::custom(format!("bad number {t:?}"))),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|x| to_repr(*x)).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }
}
