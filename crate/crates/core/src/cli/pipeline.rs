//! The end-to-end runs behind each subcommand, free of any file handling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{CompareSetup, Preprocess, RunConfig, Selection};
use crate::data::{Climatology, Column, Dataset, Day, ExogMatrix, Series, Target};
use crate::diagnostics::{acf, adf_test, pacf, AdfResult, CorrelogramPoint, Regression};
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, expanding_folds, grid_search, GridResult, Metrics, Scale};
use crate::family::{FittedModel, ModelSpec};
use crate::forecast::{horizon_until, Forecast};
use crate::preprocess::{difference_values, TransformChain};
use crate::stat_models::{auto_arima, Candidate, FitOptions};

/// Weather columns offered to every model that takes regressors.
pub const EXOG_COLUMNS: [Column; 2] = [Column::Temperature, Column::Humidity];

/// A target series ready for modelling.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Original units, gaps filled when interpolation is on.
    pub original: Series,
    /// Modelling scale.
    pub transformed: Series,
    pub chain: TransformChain,
    pub exog: ExogMatrix,
}

/// Applies `pp` to the target. Smoothing only touches the first `n_train`
/// values so no later observation shapes the training data.
pub fn prepare(ds: &Dataset, target: Target, pp: &Preprocess, n_train: usize) -> Result<Prepared> {
    let mut chain = TransformChain::new();
    let mut s = ds.series(target.column());
    if pp.interpolate {
        s = chain.interpolate(&s)?;
    }
    let original = s.clone();
    if let Some(sg) = pp.savgol {
        let smoothed = chain.smooth(&s.slice(0..n_train)?, sg.window, sg.polyorder)?.dense()?;
        let mut values = s.dense()?;
        values[..n_train].copy_from_slice(&smoothed);
        s = s.with_values(&values)?;
    }
    if pp.log {
        s = chain.log(&s)?;
    }
    Ok(Prepared {
        original,
        transformed: s,
        chain,
        exog: ExogMatrix::from_dataset(ds, &EXOG_COLUMNS)?,
    })
}

fn split_index(ds: &Dataset, split: Day) -> Result<usize> {
    let i = split.0 - ds.start().0;
    if i <= 0 || i >= ds.len() as i64 {
        return Err(Error::SplitOutOfRange(split.to_string()));
    }
    Ok(i as usize)
}

/// Short human-readable model name.
pub fn model_label(m: &FittedModel) -> String {
    match m {
        FittedModel::Arima(f) => f.label(),
        FittedModel::Ses { .. } => "SES".into(),
        FittedModel::Gbt(_) => "XGBoost".into(),
        FittedModel::Lstm(_) => "LSTM".into(),
        FittedModel::Naive { .. } => "Naive".into(),
    }
}

/// Key fitted quantities for the fit report.
pub fn model_summary(m: &FittedModel) -> serde_json::Value {
    match m {
        FittedModel::Arima(f) => json!({
            "order": f.order,
            "ar": f.ar,
            "ma": f.ma,
            "seasonal_ar": f.seasonal_ar,
            "seasonal_ma": f.seasonal_ma,
            "intercept": f.intercept,
            "exog": f.exog_names.iter().zip(&f.exog_coef).collect::<Vec<_>>(),
            "sigma2": f.sigma2,
            "loglik": f.loglik,
            "aic": f.aic,
            "bic": f.bic,
            "n_eff": f.n_eff,
            "roots": f.roots,
        }),
        FittedModel::Ses { fit, .. } => json!({"alpha": fit.alpha, "level": fit.level}),
        FittedModel::Gbt(g) => json!({
            "params": g.params,
            "base": g.base,
            "features": g.spec.names(),
            "leaves": g.trees.iter().map(|t| t.leaves().count()).sum::<usize>(),
        }),
        FittedModel::Lstm(l) => json!({
            "hidden": l.params.hidden,
            "features": l.spec.names(),
            "n_params": l.params.n_params(),
            "train": l.train,
            "final_loss": l.loss_trace.last(),
        }),
        FittedModel::Naive { last, .. } => json!({"last": last}),
    }
}

/// The fitted model plus what is needed to rebuild its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub label: String,
    pub target: Target,
    pub preprocess: Preprocess,
    pub train_start: Day,
    pub train_end: Day,
    pub exog_columns: Vec<Column>,
    pub model: FittedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub target: Target,
    pub train_start: Day,
    pub train_end: Day,
    pub n_train: usize,
    pub summary: serde_json::Value,
    /// One-step fit over the training span, modelling scale.
    pub in_sample: Option<Metrics>,
    pub auto: Option<Vec<Candidate>>,
    pub grid: Option<GridResult>,
}

fn with_seed(spec: ModelSpec, seed: Option<u64>) -> ModelSpec {
    match (spec, seed) {
        (
            ModelSpec::Lstm {
                hidden,
                window,
                calendar,
                exog,
                mut train,
            },
            Some(seed),
        ) => {
            train.seed = seed;
            ModelSpec::Lstm {
                hidden,
                window,
                calendar,
                exog,
                train,
            }
        }
        (spec, _) => spec,
    }
}

/// Fits the configured model on the days before the split (or on all days).
pub fn fit_run(ds: &Dataset, cfg: &RunConfig) -> Result<(ModelArtifact, FitReport)> {
    let n_train = cfg.split.map(|d| split_index(ds, d)).transpose()?.unwrap_or(ds.len());
    let prep = prepare(ds, cfg.target, &cfg.preprocess, n_train)?;
    let train = prep.transformed.slice(0..n_train)?;
    let train_exog = prep.exog.slice(0..n_train);
    let mut auto = None;
    let mut grid = None;
    let model = match &cfg.selection {
        Selection::Fixed { model } => with_seed(model.clone(), cfg.seed).fit(&train, Some(&train_exog), &prep.chain)?,
        Selection::Auto {
            criterion,
            bounds,
            exog,
        } => {
            let x = exog.then_some(&train_exog);
            let mut found = auto_arima(&train, *bounds, *criterion, x, &FitOptions::default())?;
            found.fit.chain = prep.chain.clone();
            auto = Some(found.log);
            FittedModel::Arima(found.fit)
        }
        Selection::Grid {
            family,
            grid: g,
            folds,
            metric,
        } => {
            let plan = expanding_folds(n_train, *folds, n_train / 2)?;
            let result = grid_search(*family, g, &train, Some(&train_exog), &plan, *metric)?;
            let best = result.best_entry();
            if let Some(e) = &best.error {
                return Err(Error::Config(format!(
                    "every grid configuration failed; first best error: {e}"
                )));
            }
            let spec = with_seed(ModelSpec::from_params(*family, &best.params)?, cfg.seed);
            grid = Some(result);
            spec.fit(&train, Some(&train_exog), &prep.chain)?
        }
    };
    let y = train.dense()?;
    let from = model.warmup().max(1);
    let in_sample = if from < n_train {
        model
            .one_step(&train, Some(&train_exog), from)
            .and_then(|p| compute_metrics(&y[from..], &p, Scale::Transformed))
            .ok()
    } else {
        None
    };
    let label = model_label(&model);
    let report = FitReport {
        model: label.clone(),
        target: cfg.target,
        train_start: train.start(),
        train_end: train.end(),
        n_train,
        summary: model_summary(&model),
        in_sample,
        auto,
        grid,
    };
    let artifact = ModelArtifact {
        label,
        target: cfg.target,
        preprocess: cfg.preprocess.clone(),
        train_start: train.start(),
        train_end: train.end(),
        exog_columns: EXOG_COLUMNS.to_vec(),
        model,
    };
    Ok((artifact, report))
}

/// Held-out one-step accuracy on both scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub target: Target,
    pub split: Day,
    pub n_test: usize,
    pub original: Metrics,
    pub transformed: Metrics,
}

fn one_step_metrics(model: &FittedModel, prep: &Prepared, from: usize) -> Result<(Metrics, Metrics)> {
    let pred_t = model.one_step(&prep.transformed, Some(&prep.exog), from)?;
    let actual_t = &prep.transformed.dense()?[from..];
    let pred_o = prep.chain.invert(&pred_t)?;
    let actual_o = &prep.original.dense()?[from..];
    Ok((
        compute_metrics(actual_o, &pred_o, Scale::Original)?,
        compute_metrics(actual_t, &pred_t, Scale::Transformed)?,
    ))
}

/// Scores the artifact's one-step predictions from `split` (default: the
/// day after training ended) to the end of `ds`.
pub fn evaluate_run(ds: &Dataset, artifact: &ModelArtifact, split: Option<Day>) -> Result<EvaluationReport> {
    let split = split.unwrap_or(artifact.train_end.offset(1));
    if split <= artifact.train_end {
        return Err(Error::Config(format!(
            "split {split} is not after the end of training ({})",
            artifact.train_end
        )));
    }
    let from = split_index(ds, split)?;
    let n_train = split_index(ds, artifact.train_end.offset(1))?;
    let prep = prepare(ds, artifact.target, &artifact.preprocess, n_train)?;
    let (original, transformed) = one_step_metrics(&artifact.model, &prep, from)?;
    Ok(EvaluationReport {
        model: artifact.label.clone(),
        target: artifact.target,
        split,
        n_test: ds.len() - from,
        original,
        transformed,
    })
}

/// Forecast from the end of training through `until`, with the observed
/// history (original units) it continues.
pub fn forecast_run(ds: &Dataset, artifact: &ModelArtifact, until: Day) -> Result<(Series, Forecast)> {
    let n_hist = split_index(ds, artifact.train_end.offset(1)).or_else(|e| {
        if artifact.train_end == ds.end() {
            Ok(ds.len())
        } else {
            Err(e)
        }
    })?;
    let h = horizon_until(artifact.train_end, until);
    if h == 0 {
        return Err(Error::Config(format!(
            "horizon end {until} is not after the end of training ({})",
            artifact.train_end
        )));
    }
    let prep = prepare(ds, artifact.target, &artifact.preprocess, n_hist)?;
    let history = prep.transformed.slice(0..n_hist)?;
    let future = if artifact.model.uses_exog() {
        let clim = Climatology::fit(&prep.exog.slice(0..n_hist))?;
        let rows = (0..h)
            .map(|i| match n_hist + i < ds.len() {
                true => prep.exog.row(n_hist + i).to_vec(),
                false => clim.row_for(artifact.train_end.offset(1 + i as i64)).to_vec(),
            })
            .collect();
        Some(ExogMatrix::new(
            artifact.train_end.offset(1),
            prep.exog.names().to_vec(),
            rows,
        )?)
    } else {
        None
    };
    let mut fc = artifact.model.forecast(&history, h, future.as_ref())?;
    fc.model = artifact.label.clone();
    Ok((prep.original.slice(0..n_hist)?, fc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub model: String,
    /// Label of the fitted model, e.g. its order.
    pub fitted: Option<String>,
    pub original: Option<Metrics>,
    pub transformed: Option<Metrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub target: Target,
    pub split: Day,
    pub n_train: usize,
    pub n_test: usize,
    pub preprocess: Preprocess,
    /// Sorted by model name.
    pub rows: Vec<CompareRow>,
}

/// Fits every model of `setup` on the days before the split and scores its
/// one-step predictions on the rest. A model that fails keeps its row with
/// the error.
pub fn compare_run(ds: &Dataset, setup: &CompareSetup) -> Result<CompareReport> {
    let n_train = split_index(ds, setup.split)?;
    let prep = prepare(ds, setup.target, &setup.preprocess, n_train)?;
    let train = prep.transformed.slice(0..n_train)?;
    let train_exog = prep.exog.slice(0..n_train);
    let mut rows: Vec<CompareRow> = setup
        .models
        .par_iter()
        .map(|(name, spec)| {
            let outcome = spec.fit(&train, Some(&train_exog), &prep.chain).and_then(|m| {
                let (o, t) = one_step_metrics(&m, &prep, n_train)?;
                Ok((model_label(&m), o, t))
            });
            match outcome {
                Ok((fitted, o, t)) => CompareRow {
                    model: name.clone(),
                    fitted: Some(fitted),
                    original: Some(o),
                    transformed: Some(t),
                    error: None,
                },
                Err(e) => CompareRow {
                    model: name.clone(),
                    fitted: None,
                    original: None,
                    transformed: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| a.model.cmp(&b.model));
    Ok(CompareReport {
        target: setup.target,
        split: setup.split,
        n_train,
        n_test: ds.len() - n_train,
        preprocess: setup.preprocess.clone(),
        rows,
    })
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Aligned text table of original-scale metrics.
pub fn compare_table(report: &CompareReport) -> String {
    let header = ["Model", "MSE", "RMSE", "MAE", "MAPE (%)"];
    let mut cells: Vec<[String; 5]> = vec![header.map(String::from)];
    for r in &report.rows {
        let m = r.original.as_ref();
        cells.push([
            r.model.clone(),
            fmt_metric(m.map(|m| m.mse)),
            fmt_metric(m.map(|m| m.rmse)),
            fmt_metric(m.map(|m| m.mae)),
            fmt_metric(m.and_then(|m| m.mape)),
        ]);
    }
    let widths: Vec<usize> = (0..5)
        .map(|j| cells.iter().map(|c| c[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = format!(
        "{} forecasting, test from {} ({} days)\n",
        report.target, report.split, report.n_test
    );
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, c)| match j {
                0 => format!("{c:<w$}", w = widths[j]),
                _ => format!("{c:>w$}", w = widths[j]),
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    for r in report.rows.iter().filter(|r| r.error.is_some()) {
        out.push_str(&format!("{}: {}\n", r.model, r.error.as_deref().unwrap_or_default()));
    }
    out
}

/// Five-number summary plus mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Describe {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Describe {
    /// Sample statistics; quantiles interpolate linearly between order
    /// statistics.
    pub fn of(x: &[f64]) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::TooShort("need at least two values".into()));
        }
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let mut s = x.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (n - 1.0);
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
        };
        Ok(Describe {
            count: x.len(),
            mean,
            std,
            min: s[0],
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            max: s[s.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiagnostics {
    pub adf: AdfResult,
    pub acf: Vec<CorrelogramPoint>,
    pub pacf: Vec<CorrelogramPoint>,
}

impl SeriesDiagnostics {
    pub fn of(x: &[f64], max_lag: usize) -> Result<Self> {
        Ok(SeriesDiagnostics {
            adf: adf_test(x, Regression::ConstantTrend, None)?,
            acf: acf(x, max_lag)?,
            pacf: pacf(x, max_lag)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub target: Target,
    pub preprocess: Preprocess,
    /// Original units.
    pub describe: Describe,
    /// The modelling-scale series.
    pub levels: SeriesDiagnostics,
    pub d: usize,
    pub seasonal_d: usize,
    pub period: usize,
    /// After `d` ordinary and `seasonal_d` seasonal differences.
    pub differenced: SeriesDiagnostics,
}

pub fn diagnose_run(
    ds: &Dataset,
    target: Target,
    pp: &Preprocess,
    max_lag: usize,
    (d, seasonal_d, period): (usize, usize, usize),
) -> Result<DiagnosticsReport> {
    let prep = prepare(ds, target, pp, ds.len())?;
    let y = prep.transformed.dense()?;
    let w = difference_values(&y, d, seasonal_d, period)?;
    Ok(DiagnosticsReport {
        target,
        preprocess: pp.clone(),
        describe: Describe::of(&prep.original.dense()?)?,
        levels: SeriesDiagnostics::of(&y, max_lag)?,
        d,
        seasonal_d,
        period,
        differenced: SeriesDiagnostics::of(&w, max_lag)?,
    })
}
