//! Seeded synthetic daily electricity data.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Day};
use crate::error::{Error, Result};

const YEAR: f64 = 365.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub start: Day,
    /// Inclusive.
    pub end: Day,
    pub seed: u64,

    pub load_base: f64,
    pub load_annual_amplitude: f64,
    /// Day of year at which the annual load cycle peaks.
    pub load_peak_day: f64,
    /// Monday-first offsets added to the load; shifted to zero mean.
    pub weekly_pattern: [f64; 7],
    /// Extra load per degree above the mean temperature.
    pub cooling_per_degree: f64,
    pub ar_phi: f64,
    pub ar_sigma: f64,

    pub temp_mean: f64,
    pub temp_amplitude: f64,
    pub temp_peak_day: f64,
    pub temp_sigma: f64,

    pub humidity_mean: f64,
    pub humidity_amplitude: f64,
    pub humidity_sigma: f64,

    pub capacity_base: f64,
    /// Capacity added per year over the span.
    pub capacity_growth: f64,
    /// Share of the seasonal load cycle that capacity follows.
    pub capacity_tracking: f64,
    pub capacity_sigma: f64,
    /// Daily probability of an outage.
    pub outage_rate: f64,
    /// Mean outage depth (exponential).
    pub outage_mean: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            start: Day::from_ymd(2022, 1, 1).expect("valid date"),
            end: Day::from_ymd(2023, 12, 31).expect("valid date"),
            seed: 42,
            load_base: 1390.0,
            load_annual_amplitude: 170.0,
            load_peak_day: 220.0,
            weekly_pattern: [25.0, 30.0, 30.0, 25.0, 10.0, -45.0, -75.0],
            cooling_per_degree: 6.0,
            ar_phi: 0.99,
            ar_sigma: 22.0,
            temp_mean: 24.28,
            temp_amplitude: 8.0,
            temp_peak_day: 215.0,
            temp_sigma: 2.2,
            humidity_mean: 72.0,
            humidity_amplitude: 6.0,
            humidity_sigma: 11.0,
            capacity_base: 1435.0,
            capacity_growth: 30.0,
            capacity_tracking: 0.9,
            capacity_sigma: 55.0,
            outage_rate: 0.04,
            outage_mean: 180.0,
        }
    }
}

impl SynthConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadConfig(m.to_string()));
        if self.end <= self.start {
            return bad("end must be after start");
        }
        let non_negative = [
            self.load_annual_amplitude,
            self.cooling_per_degree,
            self.ar_sigma,
            self.temp_amplitude,
            self.temp_sigma,
            self.humidity_amplitude,
            self.humidity_sigma,
            self.capacity_sigma,
            self.outage_mean,
        ];
        if non_negative.iter().any(|v| !(*v >= 0.0)) {
            return bad("amplitudes, noise levels and outage depth must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.outage_rate) {
            return bad("outage rate must lie in [0, 1]");
        }
        if !(self.ar_phi.abs() < 1.0) {
            return bad("AR coefficient must satisfy |phi| < 1");
        }
        Ok(())
    }
}

fn cycle(day: Day, peak: f64) -> f64 {
    (2.0 * PI * (day.ordinal() as f64 - peak) / YEAR).cos()
}

/// Generates the five daily columns from `cfg`.
///
/// Load is a base level plus an annual cycle, a weekly pattern, cooling
/// demand above the mean temperature and persistent AR(1) noise.
/// Generation is a slowly growing capacity that partly tracks the seasonal
/// load, with noise and occasional exponential outage dips. Deficit is the
/// unmet load.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = (cfg.end.0 - cfg.start.0 + 1) as usize;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let outage = (cfg.outage_mean > 0.0).then(|| Exp::new(1.0 / cfg.outage_mean).expect("positive rate"));
    let week_mean = cfg.weekly_pattern.iter().sum::<f64>() / 7.0;
    let ar_sd = cfg.ar_sigma / (1.0 - cfg.ar_phi * cfg.ar_phi).sqrt();
    let mut ar = ar_sd * std_normal.sample(&mut rng);

    let mut cols: [Vec<Option<f64>>; 5] = Default::default();
    for t in 0..n {
        let day = cfg.start.offset(t as i64);
        let temp = cfg.temp_mean
            + cfg.temp_amplitude * cycle(day, cfg.temp_peak_day)
            + cfg.temp_sigma * std_normal.sample(&mut rng);
        let humidity = (cfg.humidity_mean
            + cfg.humidity_amplitude * cycle(day, cfg.temp_peak_day + YEAR / 2.0)
            + cfg.humidity_sigma * std_normal.sample(&mut rng))
        .clamp(5.0, 100.0);
        if t > 0 {
            ar = cfg.ar_phi * ar + cfg.ar_sigma * std_normal.sample(&mut rng);
        }
        let seasonal = cfg.load_annual_amplitude * cycle(day, cfg.load_peak_day);
        let load = cfg.load_base
            + seasonal
            + (cfg.weekly_pattern[day.weekday()] - week_mean)
            + cfg.cooling_per_degree * (temp - cfg.temp_mean).max(0.0)
            + ar;
        let dip = match outage {
            Some(d) if rng.random::<f64>() < cfg.outage_rate => d.sample(&mut rng),
            _ => 0.0,
        };
        let generation = cfg.capacity_base
            + cfg.capacity_growth * t as f64 / YEAR
            + cfg.capacity_tracking * seasonal
            + cfg.capacity_sigma * std_normal.sample(&mut rng)
            - dip;
        let generation = generation.max(0.0);
        let load = load.max(0.0);
        cols[0].push(Some(load));
        cols[1].push(Some(generation));
        cols[2].push(Some((load - generation).max(0.0)));
        cols[3].push(Some(temp));
        cols[4].push(Some(humidity));
    }
    Dataset::new(cfg.start, cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;

    fn dense(ds: &Dataset, c: Column) -> Vec<f64> {
        ds.series(c).dense().unwrap()
    }

    #[test]
    fn degenerate_config_is_constant() {
        let cfg = SynthConfig {
            load_base: 1426.0,
            load_annual_amplitude: 0.0,
            weekly_pattern: [0.0; 7],
            cooling_per_degree: 0.0,
            ar_sigma: 0.0,
            outage_rate: 0.0,
            capacity_sigma: 0.0,
            capacity_growth: 0.0,
            ..SynthConfig::default()
        };
        let ds = generate_synthetic(&cfg).unwrap();
        assert!(dense(&ds, Column::Load).iter().all(|v| *v == 1426.0));
        assert!(dense(&ds, Column::Deficit).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn default_matches_load_neighbourhood() {
        let ds = generate_synthetic(&SynthConfig::default()).unwrap();
        let load = dense(&ds, Column::Load);
        let n = load.len() as f64;
        let mean = load.iter().sum::<f64>() / n;
        let sd = (load.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - 1426.0).abs() <= 50.0, "mean {mean}");
        assert!((sd - 233.0).abs() <= 60.0, "sd {sd}");
        assert_eq!(ds.len(), 730);
    }

    #[test]
    fn deficit_identity() {
        let ds = generate_synthetic(&SynthConfig {
            seed: 7,
            ..Default::default()
        })
        .unwrap();
        let (l, g, d) = (
            dense(&ds, Column::Load),
            dense(&ds, Column::Generation),
            dense(&ds, Column::Deficit),
        );
        for i in 0..l.len() {
            assert_eq!(d[i], (l[i] - g[i]).max(0.0));
            assert!(d[i] >= 0.0);
            if d[i] > 0.0 {
                assert!(l[i] > g[i]);
            }
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate_synthetic(&SynthConfig::default()).unwrap().to_csv();
        let b = generate_synthetic(&SynthConfig::default()).unwrap().to_csv();
        assert_eq!(a, b);
        let c = generate_synthetic(&SynthConfig {
            seed: 43,
            ..Default::default()
        })
        .unwrap()
        .to_csv();
        assert_ne!(a, c);
    }

    #[test]
    fn load_needs_one_difference() {
        use crate::diagnostics::{adf_test, Regression};
        let mut ok = 0;
        for seed in 0..20 {
            let ds = generate_synthetic(&SynthConfig {
                seed,
                ..Default::default()
            })
            .unwrap();
            let load = dense(&ds, Column::Load);
            let diff: Vec<f64> = load.windows(2).map(|w| w[1] - w[0]).collect();
            let before = adf_test(&load, Regression::ConstantTrend, None).unwrap();
            let after = adf_test(&diff, Regression::ConstantTrend, None).unwrap();
            ok += usize::from(!before.stationary && after.stationary);
        }
        assert!(ok >= 18, "{ok}/20");
    }

    #[test]
    fn rejects_bad_configs() {
        let base = SynthConfig::default();
        for cfg in [
            SynthConfig {
                end: base.start,
                ..base.clone()
            },
            SynthConfig {
                outage_rate: 1.5,
                ..base.clone()
            },
            SynthConfig {
                ar_sigma: -1.0,
                ..base.clone()
            },
            SynthConfig {
                ar_phi: 1.0,
                ..base.clone()
            },
        ] {
            assert!(matches!(generate_synthetic(&cfg), Err(Error::BadConfig(_))));
        }
    }

    #[test]
    fn config_json_fills_defaults() {
        let cfg: SynthConfig = serde_json::from_str(r#"{"seed": 5, "start": "2021-03-01"}"#).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.start, Day::from_ymd(2021, 3, 1).unwrap());
        assert_eq!(cfg.load_base, SynthConfig::default().load_base);
    }
}
