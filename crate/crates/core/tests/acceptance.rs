//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines always reach the terminal. Exits
//! non-zero when a criterion fails, except for criteria listed in
//! `KNOWN_BLOCKERS`, whose lines still print FAIL.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use loadcast::cli::pipeline::{CompareReport, DiagnosticsReport};
use loadcast::diagnostics::{adf_test, Regression};
use loadcast::eval::{compute_metrics, Scale};
use loadcast::ml_models::{
    gbt_fit, lstm_cell_step, make_windows, mse_gradient, mse_loss, GbtParams, LstmParams, Scaler, SupervisedSet,
};
use loadcast::preprocess::{difference, invert_difference, log_transform, savgol_values, TransformChain};
use loadcast::stat_models::{auto_arima, fit_arima, ArimaOrder, Criterion, FitOptions, SearchBounds};
use loadcast::synth::{generate_synthetic, SynthConfig};
use loadcast::{Column, Day, Series};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// The printed hand value for the scalar cell is off by 1.3e-4; see the
/// README. The line still reports FAIL against it.
const KNOWN_BLOCKERS: [u32; 1] = [2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn series(v: &[f64]) -> Series {
    Series::from_values("y", "MWh", Day(0), v).unwrap()
}

fn cumsum(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn lstm_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let p = LstmParams::init(3, 1, 0, &mut rng);
    let x: Vec<Vec<f64>> = (0..8).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
    let y: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
    let (_, analytic) = mse_gradient(&p, &x, &y);
    let base = p.to_flat();
    let mut probe = p.clone();
    let mut worst: f64 = 0.0;
    for k in 0..base.len() {
        let mut at = |delta: f64| {
            let mut v = base.clone();
            v[k] += delta;
            probe.set_flat(&v);
            mse_loss(&probe, &x, &y)
        };
        let numeric = (at(1e-5) - at(-1e-5)) / 2e-5;
        let scale = numeric.abs().max(analytic[k].abs());
        let rel = if scale < 1e-8 {
            0.0
        } else {
            (numeric - analytic[k]).abs() / scale
        };
        worst = worst.max(rel);
    }
    outcome(
        worst < 1e-4,
        format!("{} partials, worst relative error {worst:.2e} (limit 1e-4)", base.len()),
    )
}

fn lstm_hand_oracle() -> Outcome {
    let mut p = LstmParams::zeros(1, 1, 0);
    for w in [&mut p.w_f, &mut p.w_i, &mut p.w_c, &mut p.w_o] {
        w.iter_mut().for_each(|v| *v = 0.5);
    }
    let (h, c) = lstm_cell_step(&p, &[1.0], &[0.0], &[0.0]).unwrap();
    let gate = 1.0 / (1.0 + (-0.5f64).exp());
    let oracle = gate * (gate * 0.5f64.tanh()).tanh();
    // the cell itself must agree with the independent evaluation
    assert!((h[0] - oracle).abs() < 1e-12, "cell {} vs oracle {oracle}", h[0]);
    let printed = 0.17440;
    outcome(
        (h[0] - printed).abs() < 1e-5,
        format!(
            "h = {:.6}, c = {:.6}; printed 0.17440 differs by {:.1e}; independent scalar oracle {oracle:.6} matched to {:.1e}",
            h[0],
            c[0],
            (h[0] - printed).abs(),
            (h[0] - oracle).abs()
        ),
    )
}

fn arma(seed: u64, n: usize, phi: &[f64], theta: &[f64]) -> Vec<f64> {
    let burn = 200;
    let e = noise(seed, n + burn);
    let mut u = vec![0.0; e.len()];
    for t in 0..e.len() {
        let mut v = e[t];
        for (j, a) in phi.iter().enumerate() {
            if t > j {
                v += a * u[t - j - 1];
            }
        }
        for (j, b) in theta.iter().enumerate() {
            if t > j {
                v += b * e[t - j - 1];
            }
        }
        u[t] = v;
    }
    u[burn..].to_vec()
}

fn arima_recovery() -> Outcome {
    let seeds: Vec<u64> = (0..20).collect();
    let opts = FitOptions::default();
    let ar_hits = seeds
        .par_iter()
        .filter(|&&s| {
            let y = arma(1000 + s, 2000, &[0.7], &[]);
            fit_arima(&series(&y), ArimaOrder::new(1, 0, 0), None, &opts).is_ok_and(|f| (f.ar[0] - 0.7).abs() <= 0.05)
        })
        .count();
    let ma_hits = seeds
        .par_iter()
        .filter(|&&s| {
            let y = arma(2000 + s, 2000, &[], &[0.5]);
            fit_arima(&series(&y), ArimaOrder::new(0, 0, 1), None, &opts).is_ok_and(|f| (f.ma[0] - 0.5).abs() <= 0.07)
        })
        .count();
    let auto_hits = seeds
        .par_iter()
        .filter(|&&s| {
            let y = cumsum(&arma(3000 + s, 3000, &[0.5, -0.3], &[0.4, 0.2]));
            let s = series(&y);
            let Ok(found) = auto_arima(&s, SearchBounds::default(), Criterion::Aic, None, &opts) else {
                return false;
            };
            let forced_opts = FitOptions {
                conditioning: found.fit.conditioning,
                ..opts.clone()
            };
            let Ok(forced) = fit_arima(&s, ArimaOrder::new(2, 1, 2), None, &forced_opts) else {
                return found.fit.order.d == 1;
            };
            found.fit.order.d == 1 && found.fit.aic <= forced.aic + 0.01
        })
        .count();
    outcome(
        ar_hits >= 18 && ma_hits >= 18 && auto_hits >= 18,
        format!("AR(1) {ar_hits}/20, MA(1) {ma_hits}/20, auto ARIMA(2,1,2) {auto_hits}/20 (need 18 each)"),
    )
}

fn adf_discrimination() -> Outcome {
    let flagged = |x: &[f64]| adf_test(x, Regression::Constant, None).unwrap().stationary;
    let mut rw_ns = 0;
    let mut wn_s = 0;
    let mut drw_s = 0;
    for seed in 0..100 {
        let e = noise(5000 + seed, 500);
        let rw = cumsum(&e);
        rw_ns += usize::from(!flagged(&rw));
        wn_s += usize::from(flagged(&noise(6000 + seed, 500)));
        let d: Vec<f64> = rw.windows(2).map(|w| w[1] - w[0]).collect();
        drw_s += usize::from(flagged(&d));
    }
    outcome(
        rw_ns >= 95 && wn_s >= 95 && drw_s >= 95,
        format!(
            "constant-only regression: random walk non-stationary {rw_ns}/100, white noise stationary {wn_s}/100, differenced walk stationary {drw_s}/100 (need 95)"
        ),
    )
}

fn savgol_polynomials() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for window in [3, 5, 7, 9, 11, 15, 21, 31] {
        for polyorder in 0..window.min(7) {
            for degree in 0..=polyorder {
                let coef: Vec<f64> = (0..=degree).map(|_| rng.random_range(-2.0..2.0)).collect();
                let x: Vec<f64> = (0..90)
                    .map(|t| {
                        let u = t as f64 / 10.0 - 4.0;
                        coef.iter().rev().fold(0.0, |acc, c| acc * u + c)
                    })
                    .collect();
                let y = savgol_values(&x, window, polyorder).unwrap();
                let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
                worst = worst.max(err);
                cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("{cases} (window, polyorder, degree) cases, worst relative error {worst:.2e} (limit 1e-9)"),
    )
}

fn metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst_rmse: f64 = 0.0;
    let mut worst_mapa: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..50);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..10.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let m = compute_metrics(&a, &p, Scale::Original).unwrap();
        worst_rmse = worst_rmse.max((m.rmse * m.rmse - m.mse).abs());
        worst_mapa = worst_mapa.max((m.mapa.unwrap() - (100.0 - m.mape.unwrap())).abs());
    }
    let hand = compute_metrics(&[1.0, 3.0], &[0.0, 2.0], Scale::Original).unwrap();
    let hand_err = (hand.mape.unwrap() - 200.0 / 3.0).abs();
    outcome(
        worst_rmse <= 1e-12 && worst_mapa <= 1e-12 && hand_err <= 1e-10,
        format!(
            "1000 pairs: |rmse^2 - mse| <= {worst_rmse:.1e}, |mapa - (100 - mape)| <= {worst_mapa:.1e}; hand MAPE {:.10} (error {hand_err:.1e})",
            hand.mape.unwrap()
        ),
    )
}

fn gbt_objective() -> Outcome {
    let x: Vec<Vec<f64>> = (-10..10).map(|i| vec![i as f64 + 0.5]).collect();
    let y = x.iter().map(|r| if r[0] < 0.0 { -1.0 } else { 1.0 }).collect();
    let stump = gbt_fit(
        &SupervisedSet::from_rows(x, y, 0).unwrap(),
        &GbtParams {
            n_trees: 1,
            learning_rate: 1.0,
            max_depth: 1,
            gamma: 0.0,
            lambda: 0.0,
            min_child_weight: 1.0,
        },
    )
    .unwrap();
    let mut leaves: Vec<f64> = stump.trees[0].leaves().collect();
    leaves.sort_by(f64::total_cmp);
    let stump_ok = leaves == [-1.0, 1.0];

    let ds = generate_synthetic(&SynthConfig::default()).unwrap();
    let data = make_windows(&ds.series(Column::Load), 7, None, true).unwrap();
    let params = GbtParams {
        n_trees: 500,
        learning_rate: 0.1,
        gamma: 0.0,
        ..GbtParams::default()
    };
    let m = gbt_fit(&data, &params).unwrap();
    let mut pred = vec![m.base; data.len()];
    let mse = |pred: &[f64]| pred.iter().zip(&data.y).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / pred.len() as f64;
    let mut prev = mse(&pred);
    let mut increases = 0;
    for t in &m.trees {
        for (p, x) in pred.iter_mut().zip(&data.x) {
            *p += params.learning_rate * t.predict(x);
        }
        let cur = mse(&pred);
        increases += usize::from(cur > prev + 1e-15 * prev.max(1.0));
        prev = cur;
    }
    outcome(
        stump_ok && increases == 0,
        format!("stump leaves {leaves:?}; training MSE over 500 trees rose {increases} times, final {prev:.3e}"),
    )
}

fn transform_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let mut worst: f64 = 0.0;
    let mut diff_cases = 0;
    for k in 0..100 {
        let n = rng.random_range(80..200);
        // load-like levels: a random walk around 1500
        let mut level = 1500.0;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                level += rng.random_range(-25.0..25.0);
                level
            })
            .collect();
        let s = series(&x);

        let mut chain = TransformChain::new();
        let logged = chain.log(&s).unwrap();
        let back = chain.invert(&logged.dense().unwrap()).unwrap();
        let direct = log_transform(&s).unwrap().dense().unwrap();
        worst = worst.max(back.iter().zip(&x).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max));
        worst = worst.max(
            direct
                .iter()
                .zip(logged.dense().unwrap())
                .map(|(a, b)| rel(*a, b))
                .fold(0.0, f64::max),
        );

        let scaler = Scaler::fit(x.iter().copied());
        worst = worst.max(
            x.iter()
                .map(|v| rel(scaler.invert(scaler.apply(*v)), *v))
                .fold(0.0, f64::max),
        );

        let period = [2, 7, 12][k % 3];
        for d in 0..=2 {
            for sd in 0..=2 {
                let full = difference(&x, d, sd, period).unwrap();
                let rebuilt = full.reconstruct().unwrap();
                worst = worst.max(rebuilt.iter().zip(&x).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max));
                // extend a prefix with the differences of the rest
                let cut = n - 20;
                let head = difference(&x[..cut], d, sd, period).unwrap();
                let future = &full.values[full.values.len() - 20..];
                let ext = invert_difference(&head, future).unwrap();
                worst = worst.max(ext.iter().zip(&x[cut..]).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max));
                diff_cases += 1;
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("100 series (log, min-max, {diff_cases} differencing cases over s in 2, 7, 12), worst relative error {worst:.2e}"),
    )
}

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["loadcast", "--quiet"];
    argv.extend_from_slice(args);
    loadcast::cli::run(argv)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn end_to_end(dir: &Path) -> Outcome {
    let t0 = Instant::now();
    let data = dir.join("synth.csv");
    let out = dir.join("compare");
    let diag = dir.join("diagnose");
    let status = [
        cli(&["synth", "--seed", "42", "--out", path(&data)]),
        cli(&[
            "compare",
            "--preset",
            "paper-load",
            "--input",
            path(&data),
            "--out-dir",
            path(&out),
        ]),
        cli(&[
            "diagnose",
            "--input",
            path(&data),
            "--target",
            "load",
            "--out-dir",
            path(&diag),
        ]),
    ];
    let secs = t0.elapsed().as_secs_f64();
    if status.iter().any(|s| *s != 0) {
        return outcome(false, format!("cli exit codes {status:?}"));
    }
    let report: CompareReport = serde_json::from_str(&fs::read_to_string(out.join("compare.json")).unwrap()).unwrap();
    let diagnostics: DiagnosticsReport =
        serde_json::from_str(&fs::read_to_string(diag.join("diagnostics.json")).unwrap()).unwrap();
    let mape: BTreeMap<&str, Option<f64>> = report
        .rows
        .iter()
        .map(|r| (r.model.as_str(), r.original.as_ref().and_then(|m| m.mape)))
        .collect();
    let families = ["ARIMA", "Dynamic ARIMA", "LSTM", "SARIMA", "SES", "XGBoost"];
    let all_ran = families.iter().all(|f| mape.get(f).is_some_and(Option::is_some));
    let get = |f: &str| mape.get(f).copied().flatten().unwrap_or(f64::NAN);
    let (lstm, ses, naive) = (get("LSTM"), get("SES"), get("Naive"));
    let adf_ok = !diagnostics.levels.adf.stationary && diagnostics.differenced.adf.stationary;
    outcome(
        all_ran && lstm < ses && lstm < naive && adf_ok && secs < 600.0,
        format!(
            "six families ran: {all_ran}; load MAPE LSTM {lstm:.3}% vs SES {ses:.3}% and naive {naive:.3}%; ADF p {:.3} before, {:.3} after differencing; {secs:.0} s",
            diagnostics.levels.adf.p_value, diagnostics.differenced.adf.p_value
        ),
    )
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> bool {
    names.iter().all(|n| {
        fs::read(a.join(n))
            .ok()
            .is_some_and(|x| Some(x) == fs::read(b.join(n)).ok())
    })
}

fn determinism(dir: &Path) -> Outcome {
    let data = dir.join("synth.csv");
    let runs: Vec<(bool, bool, bool)> = (0..2)
        .map(|i| {
            let run = dir.join(format!("run{i}"));
            let d = run.join("d.csv");
            let synth = cli(&["synth", "--seed", "42", "--out", path(&d)]) == 0;
            let fit = cli(&[
                "fit",
                "--input",
                path(&data),
                "--family",
                "lstm",
                "--param",
                "hidden=8",
                "--param",
                "epochs=20",
                "--exog",
                "--split",
                "2023-05-01",
                "--seed",
                "7",
                "--out-dir",
                path(&run),
            ]) == 0
                && cli(&[
                    "fit",
                    "--input",
                    path(&data),
                    "--auto",
                    "--split",
                    "2023-05-01",
                    "--out-dir",
                    path(&run.join("auto")),
                ]) == 0;
            let compare = cli(&[
                "compare",
                "--preset",
                "paper-load",
                "--input",
                path(&data),
                "--out-dir",
                path(&run),
            ]) == 0;
            (synth, fit, compare)
        })
        .collect();
    let ran = runs.iter().all(|(a, b, c)| *a && *b && *c);
    let (r0, r1) = (dir.join("run0"), dir.join("run1"));
    let synth_same = same_files(&r0, &r1, &["d.csv"]) && fs::read(r0.join("d.csv")).ok() == fs::read(&data).ok();
    let fit_same = same_files(&r0, &r1, &["model.json", "fit_report.json"])
        && same_files(&r0.join("auto"), &r1.join("auto"), &["model.json", "fit_report.json"]);
    let compare_same = same_files(&r0, &r1, &["compare.json", "compare.txt"]);
    outcome(
        ran && synth_same && fit_same && compare_same,
        format!(
            "byte-identical reruns: synth {synth_same}, fit (LSTM and auto ARIMA) {fit_same}, compare {compare_same}"
        ),
    )
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(u32, &str, Check)> = vec![
        (1, "LSTM gradient correctness", Box::new(lstm_gradient)),
        (2, "LSTM cell hand value", Box::new(lstm_hand_oracle)),
        (3, "ARIMA parameter recovery", Box::new(arima_recovery)),
        (4, "ADF discrimination", Box::new(adf_discrimination)),
        (
            5,
            "Savitzky-Golay polynomial reproduction",
            Box::new(savgol_polynomials),
        ),
        (6, "metric identities", Box::new(metric_identities)),
        (7, "GBT objective consistency", Box::new(gbt_objective)),
        (8, "transform round trips", Box::new(transform_round_trips)),
        (9, "end-to-end reproduction", Box::new(|| end_to_end(dir.path()))),
        (10, "determinism", Box::new(|| determinism(dir.path()))),
    ];
    // optional criterion numbers on the command line select a subset
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, check) in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.0)) {
        let t0 = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_BLOCKERS.contains(n) {
            " [known blocker]"
        } else {
            ""
        };
        println!(
            "criterion {n:>2} {verdict}{note} {name}: {} ({:.1} s)",
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        if !o.pass && !KNOWN_BLOCKERS.contains(n) {
            failed.push(*n);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
