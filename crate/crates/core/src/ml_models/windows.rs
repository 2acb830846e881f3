//! Supervised lag windows shared by the LSTM and the boosted trees.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::{Climatology, Day, ExogMatrix, Series};
use crate::error::{Error, Result};
use crate::forecast::Forecast;
use crate::preprocess::TransformChain;

/// Min/max scaling onto `[0, 1]`; a constant feature maps to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: f64,
    pub max: f64,
}

impl Scaler {
    pub const IDENTITY: Scaler = Scaler { min: 0.0, max: 1.0 };

    pub fn fit(values: impl IntoIterator<Item = f64>) -> Scaler {
        let (min, max) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Scaler { min, max }
    }

    fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn apply(&self, v: f64) -> f64 {
        if self.range() > 0.0 {
            (v - self.min) / self.range()
        } else {
            0.0
        }
    }

    pub fn invert(&self, v: f64) -> f64 {
        self.min + v * self.range()
    }
}

/// How a sample's features are laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Number of lagged target values, oldest first.
    pub window: usize,
    pub exog_names: Vec<String>,
    /// Day-of-week one-hot and month sine/cosine of the target day.
    pub calendar: bool,
}

impl FeatureSpec {
    pub fn n_extras(&self) -> usize {
        self.exog_names.len() + if self.calendar { 9 } else { 0 }
    }

    pub fn n_features(&self) -> usize {
        self.window + self.n_extras()
    }

    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = (1..=self.window).rev().map(|k| format!("lag_{k}")).collect();
        out.extend(self.exog_names.iter().cloned());
        if self.calendar {
            out.extend((0..7).map(|d| format!("dow_{d}")));
            out.push("month_sin".into());
            out.push("month_cos".into());
        }
        out
    }

    /// Day offset of each feature relative to the target; `None` for
    /// features known in advance for the target day itself (weather inputs
    /// and calendar terms).
    pub fn offsets(&self) -> Vec<Option<i64>> {
        let mut out: Vec<Option<i64>> = (1..=self.window as i64).rev().map(|k| Some(-k)).collect();
        out.extend(std::iter::repeat_n(None, self.n_extras()));
        out
    }

    fn raw_extras(&self, day: Day, exog_row: Option<&[f64]>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_extras());
        if let Some(r) = exog_row {
            out.extend_from_slice(r);
        }
        if self.calendar {
            let dow = day.weekday();
            out.extend((0..7).map(|d| if d == dow { 1.0 } else { 0.0 }));
            let angle = 2.0 * PI * (day.month() as f64 - 1.0) / 12.0;
            out.push(angle.sin());
            out.push(angle.cos());
        }
        out
    }
}

/// Normalization constants: one scaler for the target and its lags, one
/// per extra feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub target: Scaler,
    pub extras: Vec<Scaler>,
}

impl Scaling {
    fn identity(n_extras: usize) -> Scaling {
        Scaling {
            target: Scaler::IDENTITY,
            extras: vec![Scaler::IDENTITY; n_extras],
        }
    }

    /// Normalized feature row from raw lags and raw extras.
    pub fn features(&self, lags: &[f64], extras: &[f64]) -> Vec<f64> {
        lags.iter()
            .map(|v| self.target.apply(*v))
            .chain(extras.iter().zip(&self.extras).map(|(v, s)| s.apply(*v)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedSet {
    /// Normalized feature rows: the lag window, then the extras.
    pub x: Vec<Vec<f64>>,
    /// Normalized targets.
    pub y: Vec<f64>,
    pub target_dates: Vec<Day>,
    pub spec: FeatureSpec,
    pub scaling: Scaling,
    pub chain: TransformChain,
}

impl SupervisedSet {
    /// Wraps ready-made rows without scaling; the first `window` columns
    /// are lags and the rest are extras.
    pub fn from_rows(x: Vec<Vec<f64>>, y: Vec<f64>, window: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(y.len(), x.len()));
        }
        let k = x.first().map_or(0, Vec::len);
        if x.iter().any(|r| r.len() != k) || (!x.is_empty() && window > k) {
            return Err(Error::ShapeMismatch("rows differ in length".into()));
        }
        let spec = FeatureSpec {
            window,
            exog_names: (window..k).map(|j| format!("x{j}")).collect(),
            calendar: false,
        };
        Ok(SupervisedSet {
            target_dates: (0..x.len() as i64).map(Day).collect(),
            x,
            y,
            scaling: Scaling::identity(k.saturating_sub(window)),
            spec,
            chain: TransformChain::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.spec.names()
    }
}

/// Builds samples `[y_i .. y_{i+w-1}] (+ extras for day i+w) -> y_{i+w}`
/// and fits min/max scaling on exactly these samples.
pub fn make_windows(s: &Series, window: usize, exog: Option<&ExogMatrix>, calendar: bool) -> Result<SupervisedSet> {
    let y = s.dense()?;
    if window == 0 {
        return Err(Error::BadHyperparameter("window must be >= 1".into()));
    }
    if y.len() <= window {
        return Err(Error::TooShort(format!("{} values for a window of {window}", y.len())));
    }
    if let Some(x) = exog {
        x.check_aligned(s)?;
    }
    let spec = FeatureSpec {
        window,
        exog_names: exog.map_or_else(Vec::new, |x| x.names().to_vec()),
        calendar,
    };
    let n = y.len() - window;
    let target_dates: Vec<Day> = (0..n).map(|i| s.date_at(i + window)).collect();
    let raw_extras: Vec<Vec<f64>> = (0..n)
        .map(|i| spec.raw_extras(target_dates[i], exog.map(|x| x.row(i + window))))
        .collect();
    let scaling = Scaling {
        target: Scaler::fit(y.iter().copied()),
        extras: (0..spec.n_extras())
            .map(|j| Scaler::fit(raw_extras.iter().map(|r| r[j])))
            .collect(),
    };
    let x = (0..n)
        .map(|i| scaling.features(&y[i..i + window], &raw_extras[i]))
        .collect();
    let targets = y[window..].iter().map(|v| scaling.target.apply(*v)).collect();
    Ok(SupervisedSet {
        x,
        y: targets,
        target_dates,
        spec,
        scaling,
        chain: TransformChain::new(),
    })
}

/// A trained model over normalized window features.
pub trait WindowModel {
    fn name(&self) -> &str;
    fn spec(&self) -> &FeatureSpec;
    fn scaling(&self) -> &Scaling;
    fn chain(&self) -> &TransformChain;
    fn climatology(&self) -> Option<&Climatology>;
    /// Normalized prediction for one normalized feature row.
    fn predict_row(&self, x: &[f64]) -> f64;
}

/// Recursive multi-step forecast: each prediction joins the lag window for
/// the next step. Future weather comes from `future_exog` or, failing
/// that, from the model's climatology.
pub fn recursive_forecast<M: WindowModel + ?Sized>(
    model: &M,
    history: &Series,
    horizon: usize,
    future_exog: Option<&ExogMatrix>,
) -> Result<Forecast> {
    let spec = model.spec();
    let y = history.dense()?;
    if y.len() < spec.window {
        return Err(Error::TooShort(format!(
            "{} values cannot seed a window of {}",
            y.len(),
            spec.window
        )));
    }
    let origin = history.end();
    let k = spec.exog_names.len();
    let future_rows: Option<Vec<Vec<f64>>> = if k == 0 {
        None
    } else {
        match (future_exog, model.climatology()) {
            (Some(x), _) if x.nrows() >= horizon && x.ncols() == k => Some(x.rows()[..horizon].to_vec()),
            (None, Some(c)) => Some(c.rows_from(origin.offset(1), horizon).rows().to_vec()),
            _ => return Err(Error::MissingFutureExog(horizon)),
        }
    };
    let mut lags = y[y.len() - spec.window..].to_vec();
    let mut transformed = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let day = origin.offset(h as i64 + 1);
        let extras = spec.raw_extras(day, future_rows.as_ref().map(|r| r[h].as_slice()));
        let x = model.scaling().features(&lags, &extras);
        let pred = model.scaling().target.invert(model.predict_row(&x));
        transformed.push(pred);
        if spec.window > 0 {
            lags.remove(0);
            lags.push(pred);
        }
    }
    Ok(Forecast {
        model: model.name().to_string(),
        origin,
        original: model.chain().invert(&transformed)?,
        transformed,
    })
}

/// One-step predictions of `s[t]` for `t` in `from..s.len()`, each from the
/// observed window before `t` (and the exogenous row for day `t`).
pub fn one_step_predictions<M: WindowModel + ?Sized>(
    model: &M,
    s: &Series,
    exog: Option<&ExogMatrix>,
    from: usize,
) -> Result<Vec<f64>> {
    let spec = model.spec();
    let y = s.dense()?;
    if from < spec.window {
        return Err(Error::TooShort(format!(
            "one-step predictions start at index {} or later",
            spec.window
        )));
    }
    let k = spec.exog_names.len();
    if k > 0 {
        match exog {
            Some(x) => x.check_aligned(s)?,
            None => return Err(Error::MissingFutureExog(y.len() - from)),
        }
    }
    Ok((from..y.len())
        .map(|t| {
            let extras = spec.raw_extras(s.date_at(t), exog.filter(|_| k > 0).map(|x| x.row(t)));
            let x = model.scaling().features(&y[t - spec.window..t], &extras);
            model.scaling().target.invert(model.predict_row(&x))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: &[f64]) -> Series {
        Series::from_values("load", "MWh", Day::from_ymd(2023, 1, 2).unwrap(), v).unwrap()
    }

    #[test]
    fn two_samples_from_four_values() {
        let set = make_windows(&series(&[1.0, 2.0, 3.0, 4.0]), 2, None, false).unwrap();
        assert_eq!(set.len(), 2);
        let raw = |v: f64| set.scaling.target.invert(v);
        let rows: Vec<(Vec<f64>, f64)> = set
            .x
            .iter()
            .zip(&set.y)
            .map(|(x, y)| (x.iter().map(|v| raw(*v)).collect(), raw(*y)))
            .collect();
        assert_eq!(rows, vec![(vec![1.0, 2.0], 3.0), (vec![2.0, 3.0], 4.0)]);
    }

    #[test]
    fn longest_window_gives_one_sample() {
        let set = make_windows(&series(&[5.0, 1.0, 4.0, 2.0, 8.0]), 4, None, true).unwrap();
        assert_eq!(set.len(), 1);
        assert!(matches!(
            make_windows(&series(&[5.0, 1.0]), 2, None, false),
            Err(Error::TooShort(_))
        ));
    }

    #[test]
    fn load_extremes_map_to_unit_interval() {
        let set = make_windows(&series(&[1000.0, 200.0, 2106.0]), 1, None, false).unwrap();
        assert_eq!(set.y, vec![0.0, 1.0]);
        assert_eq!(set.scaling.target.invert(1.0), 2106.0);
    }

    #[test]
    fn features_lie_in_unit_interval_and_precede_target() {
        let y: Vec<f64> = (0..60).map(|t| 100.0 + (t as f64 * 0.7).sin() * 30.0).collect();
        let s = series(&y);
        let exog = ExogMatrix::new(
            s.start(),
            vec!["temperature".into()],
            (0..60).map(|t| vec![20.0 + (t % 9) as f64]).collect(),
        )
        .unwrap();
        let set = make_windows(&s, 7, Some(&exog), true).unwrap();
        assert_eq!(set.feature_names().len(), 7 + 1 + 9);
        for (row, day) in set.x.iter().zip(&set.target_dates) {
            assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            for off in set.spec.offsets().iter().flatten() {
                assert!(day.offset(*off) < *day);
            }
        }
        assert!(set.y.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let s = Scaler::fit([3.0, 3.0]);
        assert_eq!(s.apply(3.0), 0.0);
        assert_eq!(s.invert(0.0), 3.0);
    }
}
