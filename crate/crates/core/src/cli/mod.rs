//! Command-line front end: `synth`, `diagnose`, `fit`, `forecast`,
//! `evaluate` and `compare`.

pub mod config;
pub mod output;
pub mod pipeline;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{parse_dataset, Dataset, Day, Target};
use crate::error::{Error, Result};
use crate::eval::MetricId;
use crate::family::{Family, ModelSpec};
use crate::stat_models::{Criterion, SearchBounds};
use crate::synth::{generate_synthetic, SynthConfig};

use config::{parse_list, parse_param, Preprocess, Preset, RunConfig, Savgol, Selection, PRESET_HIDDEN};
use output::{correlogram_svg, forecast_svg, write_atomic, write_json};
use pipeline::ModelArtifact;

pub const OUT_DIR_ENV: &str = "LOADCAST_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "loadcast", version, about = "Daily electricity forecasting toolkit")]
struct Cli {
    /// Print nothing on success.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutDir {
    /// Directory for emitted files.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct PreprocessFlags {
    /// Leave gaps in place instead of interpolating them.
    #[arg(long)]
    no_interpolate: bool,
    /// Savitzky–Golay smoothing of the training span, as WINDOW,POLYORDER.
    #[arg(long, value_name = "W,P")]
    savgol: Option<String>,
    /// Model ln(1 + y) instead of y.
    #[arg(long)]
    log: bool,
}

impl PreprocessFlags {
    fn apply(&self, mut pp: Preprocess) -> Result<Preprocess> {
        if self.no_interpolate {
            pp.interpolate = false;
        }
        if let Some(s) = &self.savgol {
            pp.savgol = Some(s.parse::<Savgol>()?);
        }
        if self.log {
            pp.log = true;
        }
        Ok(pp)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Synth {
        /// JSON generator config; unset fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        start: Option<Day>,
        #[arg(long)]
        end: Option<Day>,
        /// Output CSV (default: synth.csv in the output directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        out_dir: OutDir,
    },
    /// Stationarity test and correlograms before and after differencing.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "load")]
        target: Target,
        #[arg(long, default_value_t = 40)]
        max_lag: usize,
        #[arg(long, default_value_t = 1)]
        diff: usize,
        #[arg(long, default_value_t = 0)]
        seasonal_diff: usize,
        #[arg(long, default_value_t = 7)]
        period: usize,
        #[command(flatten)]
        preprocess: PreprocessFlags,
        #[command(flatten)]
        out_dir: OutDir,
    },
    /// Fit a model and write its artifact and report.
    Fit(FitArgs),
    /// Forecast from a fitted artifact through a horizon end date.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "2025-12-31")]
        until: Day,
        #[command(flatten)]
        out_dir: OutDir,
    },
    /// Held-out one-step metrics of a fitted artifact on both scales.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// First test day (default: the day after training ended).
        #[arg(long)]
        split: Option<Day>,
        #[command(flatten)]
        out_dir: OutDir,
    },
    /// Fit every model family and tabulate held-out metrics.
    Compare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "paper-load")]
        preset: Preset,
        #[arg(long)]
        split: Option<Day>,
        /// LSTM hidden units.
        #[arg(long, default_value_t = PRESET_HIDDEN)]
        hidden: usize,
        /// LSTM training epochs.
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out_dir: OutDir,
    },
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("mode").args(["auto", "grid", "family"]))]
struct FitArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    target: Option<Target>,
    /// Fixed model family: arima, ses, xgboost, lstm or naive.
    #[arg(long)]
    family: Option<Family>,
    /// ARIMA order p,d,q.
    #[arg(long, value_name = "P,D,Q")]
    order: Option<String>,
    /// Seasonal order P,D,Q,s.
    #[arg(long, value_name = "P,D,Q,S")]
    seasonal: Option<String>,
    /// Use temperature and humidity as regressors.
    #[arg(long)]
    exog: bool,
    /// Extra hyperparameter, KEY=VALUE; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Select the ARIMA order automatically.
    #[arg(long)]
    auto: bool,
    #[arg(long, default_value = "aic")]
    criterion: Criterion,
    /// Also search seasonal orders up to 1 with this period.
    #[arg(long)]
    seasonal_period: Option<usize>,
    /// Grid search over a JSON object of parameter lists.
    #[arg(long, requires = "grid_family")]
    grid: Option<PathBuf>,
    /// Family searched by --grid.
    #[arg(long)]
    grid_family: Option<Family>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value = "mse")]
    metric: MetricId,
    /// First test day; training stops the day before.
    #[arg(long)]
    split: Option<Day>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    preprocess: PreprocessFlags,
    #[command(flatten)]
    out_dir: OutDir,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status: 0 success, 1 usage error, 2 runtime error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let quiet = cli.quiet;
    match dispatch(cli.command) {
        Ok(lines) => {
            if !quiet {
                for l in lines {
                    println!("{l}");
                }
            }
            0
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nUsage: loadcast <COMMAND> [OPTIONS]; see loadcast --help");
            1
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&read_text(path)?)
}

fn read_artifact(path: &Path) -> Result<ModelArtifact> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn wrote(path: &Path) -> String {
    format!("wrote {}", path.display())
}

fn dispatch(cmd: Command) -> std::result::Result<Vec<String>, Failure> {
    match cmd {
        Command::Synth {
            config,
            seed,
            start,
            end,
            out,
            out_dir,
        } => {
            let mut cfg = match config {
                Some(p) => serde_json::from_str(&read_text(&p)?).map_err(|e| Error::BadConfig(e.to_string()))?,
                None => SynthConfig::default(),
            };
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.start = start.unwrap_or(cfg.start);
            cfg.end = end.unwrap_or(cfg.end);
            let ds = generate_synthetic(&cfg)?;
            let path = out.unwrap_or_else(|| out_dir.out_dir.join("synth.csv"));
            write_atomic(&path, ds.to_csv().as_bytes())?;
            Ok(vec![wrote(&path)])
        }
        Command::Diagnose {
            input,
            target,
            max_lag,
            diff,
            seasonal_diff,
            period,
            preprocess,
            out_dir,
        } => {
            let ds = read_dataset(&input)?;
            let pp = preprocess.apply(Preprocess::default())?;
            let report = pipeline::diagnose_run(&ds, target, &pp, max_lag, (diff, seasonal_diff, period))?;
            let json = out_dir.out_dir.join("diagnostics.json");
            let svg = out_dir.out_dir.join("correlogram.svg");
            write_json(&json, &report)?;
            let title = format!("{target} correlogram");
            write_atomic(
                &svg,
                correlogram_svg(&title, &report.levels.acf, &report.levels.pacf).as_bytes(),
            )?;
            Ok(vec![
                format!(
                    "ADF p-value {:.4} on levels, {:.4} after differencing",
                    report.levels.adf.p_value, report.differenced.adf.p_value
                ),
                wrote(&json),
                wrote(&svg),
            ])
        }
        Command::Fit(args) => fit(args),
        Command::Forecast {
            model,
            input,
            until,
            out_dir,
        } => {
            let artifact = read_artifact(&model)?;
            let ds = read_dataset(&input)?;
            let (history, fc) = pipeline::forecast_run(&ds, &artifact, until)?;
            let csv = out_dir.out_dir.join("forecast.csv");
            let svg = out_dir.out_dir.join("forecast.svg");
            write_atomic(&csv, fc.to_csv().as_bytes())?;
            let title = format!("{} {} forecast", artifact.label, artifact.target);
            let plot = forecast_svg(&title, history.start(), &history.dense()?, fc.origin, &fc.original);
            write_atomic(&svg, plot.as_bytes())?;
            Ok(vec![
                format!("{} days through {until}", fc.horizon()),
                wrote(&csv),
                wrote(&svg),
            ])
        }
        Command::Evaluate {
            model,
            input,
            split,
            out_dir,
        } => {
            let artifact = read_artifact(&model)?;
            let ds = read_dataset(&input)?;
            let report = pipeline::evaluate_run(&ds, &artifact, split)?;
            let path = out_dir.out_dir.join("metrics.json");
            write_json(&path, &report)?;
            let mape = report
                .original
                .mape
                .map_or("undefined".to_string(), |m| format!("{m:.4}%"));
            Ok(vec![
                format!(
                    "{}: RMSE {:.4}, MAPE {mape} over {} days",
                    report.model, report.original.rmse, report.n_test
                ),
                wrote(&path),
            ])
        }
        Command::Compare {
            input,
            preset,
            split,
            hidden,
            epochs,
            seed,
            out_dir,
        } => {
            let ds = read_dataset(&input)?;
            let mut setup = preset.setup(hidden, seed);
            setup.split = split.unwrap_or(setup.split);
            if let Some(n) = epochs {
                for (_, spec) in setup.models.iter_mut() {
                    if let ModelSpec::Lstm { train, .. } = spec {
                        train.epochs = n;
                    }
                }
            }
            let report = pipeline::compare_run(&ds, &setup)?;
            let table = pipeline::compare_table(&report);
            let json = out_dir.out_dir.join("compare.json");
            let txt = out_dir.out_dir.join("compare.txt");
            write_json(&json, &report)?;
            write_atomic(&txt, table.as_bytes())?;
            Ok(vec![table.trim_end().to_string(), wrote(&json), wrote(&txt)])
        }
    }
}

fn fixed_spec(args: &FitArgs) -> Result<ModelSpec> {
    let family = args.family.unwrap_or(Family::Arima);
    let mut params = BTreeMap::new();
    if let Some(o) = &args.order {
        for (k, v) in ["p", "d", "q"].into_iter().zip(parse_list(o, 3)?) {
            params.insert(k.to_string(), v as f64);
        }
    }
    if let Some(s) = &args.seasonal {
        for (k, v) in ["P", "D", "Q", "s"].into_iter().zip(parse_list(s, 4)?) {
            params.insert(k.to_string(), v as f64);
        }
    }
    if args.exog {
        params.insert("exog".to_string(), 1.0);
    }
    for p in &args.params {
        let (k, v) = parse_param(p)?;
        params.insert(k, v);
    }
    ModelSpec::from_params(family, &params)
}

fn fit(args: FitArgs) -> std::result::Result<Vec<String>, Failure> {
    let base = args
        .config
        .as_deref()
        .map(|p| read_text(p).and_then(|t| RunConfig::from_json(&t)))
        .transpose()?;
    let flag_selection = if args.auto {
        let mut bounds = SearchBounds::default();
        if let Some(s) = args.seasonal_period {
            bounds.period = s;
            bounds.max_sp = 1;
            bounds.max_sd = 1;
            bounds.max_sq = 1;
        }
        Some(Selection::Auto {
            criterion: args.criterion,
            bounds,
            exog: args.exog,
        })
    } else if let Some(path) = &args.grid {
        let grid: BTreeMap<String, Vec<f64>> =
            serde_json::from_str(&read_text(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Some(Selection::Grid {
            family: args.grid_family.expect("required by clap"),
            grid,
            folds: args.folds,
            metric: args.metric,
        })
    } else if args.family.is_some() || args.order.is_some() || !args.params.is_empty() {
        Some(Selection::Fixed {
            model: fixed_spec(&args)?,
        })
    } else {
        None
    };
    let mut cfg = match (base, flag_selection) {
        (Some(mut c), Some(sel)) => {
            c.selection = sel;
            c
        }
        (Some(c), None) => c,
        (None, Some(sel)) => RunConfig {
            input: None,
            target: Target::Load,
            preprocess: Preprocess::default(),
            selection: sel,
            split: None,
            horizon_end: None,
            out_dir: None,
            seed: None,
        },
        (None, None) => {
            return Err(Failure::Usage(
                "fit needs a model: --family/--order, --auto, --grid or --config".into(),
            ))
        }
    };
    cfg.input = args.input.clone().or(cfg.input);
    cfg.target = args.target.unwrap_or(cfg.target);
    cfg.preprocess = args.preprocess.apply(cfg.preprocess)?;
    cfg.split = args.split.or(cfg.split);
    cfg.seed = args.seed.or(cfg.seed);
    let out_dir = match (&cfg.out_dir, std::env::var_os(OUT_DIR_ENV)) {
        // an explicit flag or the environment beats the config file
        (Some(dir), None) if args.out_dir.out_dir == Path::new(".") => dir.clone(),
        _ => args.out_dir.out_dir.clone(),
    };
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| Failure::Usage("fit needs --input or an input in the config".into()))?;
    let ds = read_dataset(&input)?;
    let (artifact, report) = pipeline::fit_run(&ds, &cfg)?;
    let model = out_dir.join("model.json");
    let rep = out_dir.join("fit_report.json");
    write_json(&model, &artifact)?;
    write_json(&rep, &report)?;
    Ok(vec![
        format!("{} on {} through {}", report.model, report.target, report.train_end),
        wrote(&model),
        wrote(&rep),
    ])
}
