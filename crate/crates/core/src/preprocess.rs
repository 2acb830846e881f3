//! Cleaning chain (gap interpolation, Savitzky–Golay smoothing, log
//! variance stabilization) and the ordinary/seasonal differencing operators
//! with their exact inverses.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Series;
use crate::error::{Error, Result};

/// Linear interpolation between the nearest observed neighbours; leading
/// and trailing gaps take the nearest observed value.
pub fn interpolate_missing(s: &Series) -> Result<Series> {
    let v = s.values();
    let known: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_some()).collect();
    let (&first, &last) = match (known.first(), known.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::AllMissing),
    };
    let mut out: Vec<f64> = v.iter().map(|x| x.unwrap_or(f64::NAN)).collect();
    for x in &mut out[..first] {
        *x = v[first].unwrap();
    }
    for x in &mut out[last + 1..] {
        *x = v[last].unwrap();
    }
    for pair in known.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (ya, yb) = (v[a].unwrap(), v[b].unwrap());
        for (i, x) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let t = (i - a) as f64 / (b - a) as f64;
            *x = ya + t * (yb - ya);
        }
    }
    s.with_values(&out)
}

/// Savitzky–Golay smoothing: every point is replaced by the value at that
/// point of the degree-`polyorder` least-squares polynomial fitted over a
/// `window`-long stretch. Interior points use the centred window; near the
/// edges the window is shifted to stay inside the series, so the fit is
/// asymmetric but keeps its full length.
pub fn savgol_smooth(s: &Series, window: usize, polyorder: usize) -> Result<Series> {
    let x = s.dense()?;
    s.with_values(&savgol_values(&x, window, polyorder)?)
}

pub fn savgol_values(x: &[f64], window: usize, polyorder: usize) -> Result<Vec<f64>> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::BadOrder(format!("window {window} must be odd and >= 3")));
    }
    if polyorder >= window {
        return Err(Error::BadOrder(format!(
            "polyorder {polyorder} must be below window {window}"
        )));
    }
    let n = x.len();
    if window > n {
        return Err(Error::WindowTooLarge { window, len: n });
    }
    let half = window / 2;
    // weights depend only on the evaluation position inside the window
    let weights: Vec<Vec<f64>> = (0..window).map(|pos| savgol_weights(window, polyorder, pos)).collect();
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - window);
            let w = &weights[i - start];
            w.iter().zip(&x[start..start + window]).map(|(a, b)| a * b).sum()
        })
        .collect())
}

/// Weights `c` with `sum c_j x_j` equal to the fitted polynomial evaluated at
/// window position `pos`.
fn savgol_weights(window: usize, polyorder: usize, pos: usize) -> Vec<f64> {
    let scale = (window / 2).max(1) as f64;
    let a = DMatrix::from_fn(window, polyorder + 1, |j, p| {
        ((j as f64 - pos as f64) / scale).powi(p as i32)
    });
    // With abscissae centred on `pos` the fitted value there is the constant
    // coefficient: row 0 of R^-1 Q'.
    let qr = a.qr();
    let rinv = qr
        .r()
        .try_inverse()
        .expect("Vandermonde of distinct nodes has full rank");
    let pinv = rinv * qr.q().transpose();
    pinv.row(0).iter().copied().collect()
}

/// Elementwise `ln(1 + y)`.
pub fn log_transform(s: &Series) -> Result<Series> {
    let x = s.dense()?;
    let out = x
        .iter()
        .map(|&y| {
            if y + LOG_OFFSET > 0.0 {
                Ok((y + LOG_OFFSET).ln())
            } else {
                Err(Error::NonPositiveAfterOffset(y))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    s.with_values(&out)
}

/// Inverse of [`log_transform`]; the chain must record a log step.
pub fn invert_log(s: &Series, chain: &TransformChain) -> Result<Series> {
    let offset = chain.log_offset().ok_or(Error::NoLogStep)?;
    let x = s.dense()?;
    s.with_values(&x.iter().map(|z| z.exp() - offset).collect::<Vec<_>>())
}

pub const LOG_OFFSET: f64 = 1.0;

/// One recorded preprocessing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    Interpolate,
    Savgol { window: usize, polyorder: usize },
    Log { offset: f64 },
    Difference { context: DiffContext },
}

/// The ordered record of transforms applied to a series, sufficient to map
/// model outputs back to original units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformChain {
    steps: Vec<Step>,
}

impl TransformChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn log_offset(&self) -> Option<f64> {
        self.steps.iter().find_map(|s| match s {
            Step::Log { offset } => Some(*offset),
            _ => None,
        })
    }

    pub fn interpolate(&mut self, s: &Series) -> Result<Series> {
        let out = interpolate_missing(s)?;
        self.push(Step::Interpolate);
        Ok(out)
    }

    pub fn smooth(&mut self, s: &Series, window: usize, polyorder: usize) -> Result<Series> {
        let out = savgol_smooth(s, window, polyorder)?;
        self.push(Step::Savgol { window, polyorder });
        Ok(out)
    }

    pub fn log(&mut self, s: &Series) -> Result<Series> {
        let out = log_transform(s)?;
        self.push(Step::Log { offset: LOG_OFFSET });
        Ok(out)
    }

    /// Maps transformed-scale values to original units. Interpolation and
    /// smoothing have no inverse and pass values through.
    pub fn invert(&self, values: &[f64]) -> Result<Vec<f64>> {
        let mut out = values.to_vec();
        for step in self.steps.iter().rev() {
            match step {
                Step::Interpolate | Step::Savgol { .. } => {}
                Step::Log { offset } => out.iter_mut().for_each(|z| *z = z.exp() - offset),
                Step::Difference { context } => out = integrate(context, &out)?,
            }
        }
        Ok(out)
    }
}

/// Values preceding a block of differences at every differencing level: the
/// `lag` most recent values of each intermediate series, in forward-stage
/// order (seasonal stages first, then ordinary ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffContext {
    pub d: usize,
    pub seasonal_d: usize,
    pub period: usize,
    pub levels: Vec<Vec<f64>>,
}

impl DiffContext {
    pub fn new(d: usize, seasonal_d: usize, period: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        let ctx = DiffContext {
            d,
            seasonal_d,
            period,
            levels,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    /// The lag of each forward stage.
    pub fn lags(&self) -> Vec<usize> {
        stage_lags(self.d, self.seasonal_d, self.period)
    }

    fn validate(&self) -> Result<()> {
        let lags = self.lags();
        if self.period == 0 {
            return Err(Error::HeadMismatch("period must be >= 1".into()));
        }
        if lags.len() != self.levels.len() || lags.iter().zip(&self.levels).any(|(l, v)| *l != v.len()) {
            return Err(Error::HeadMismatch(format!(
                "d={} D={} s={} needs level lengths {:?}, found {:?}",
                self.d,
                self.seasonal_d,
                self.period,
                lags,
                self.levels.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }
}

fn stage_lags(d: usize, seasonal_d: usize, period: usize) -> Vec<usize> {
    std::iter::repeat_n(period, seasonal_d)
        .chain(std::iter::repeat_n(1, d))
        .collect()
}

/// Output of [`difference`]: `(1-B)^d (1-B^s)^D y` with the context needed
/// to rebuild the input from its head or to extend it past its tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferencedSeries {
    pub values: Vec<f64>,
    pub head: DiffContext,
    pub tail: DiffContext,
}

impl DifferencedSeries {
    /// Rebuilds the undifferenced input exactly.
    pub fn reconstruct(&self) -> Result<Vec<f64>> {
        self.head.validate()?;
        let lags = self.head.lags();
        let mut cur = self.values.clone();
        for (lag, head) in lags.iter().zip(&self.head.levels).rev() {
            let mut level = head.clone();
            level.extend(integrate_stage(head, *lag, &cur));
            cur = level;
        }
        Ok(cur)
    }
}

/// Applies `(1-B^s)^D` then `(1-B)^d`.
pub fn difference(x: &[f64], d: usize, seasonal_d: usize, period: usize) -> Result<DifferencedSeries> {
    if period == 0 {
        return Err(Error::BadOrder("seasonal period must be >= 1".into()));
    }
    let lags = stage_lags(d, seasonal_d, period);
    let consumed: usize = lags.iter().sum();
    if x.len() <= consumed {
        return Err(Error::TooShort(format!(
            "length {} must exceed d + D*s = {consumed}",
            x.len()
        )));
    }
    let mut head = Vec::with_capacity(lags.len());
    let mut tail = Vec::with_capacity(lags.len());
    let mut cur = x.to_vec();
    for &lag in &lags {
        head.push(cur[..lag].to_vec());
        tail.push(cur[cur.len() - lag..].to_vec());
        cur = (lag..cur.len()).map(|t| cur[t] - cur[t - lag]).collect();
    }
    Ok(DifferencedSeries {
        values: cur,
        head: DiffContext {
            d,
            seasonal_d,
            period,
            levels: head,
        },
        tail: DiffContext {
            d,
            seasonal_d,
            period,
            levels: tail,
        },
    })
}

/// Differenced values only.
pub fn difference_values(x: &[f64], d: usize, seasonal_d: usize, period: usize) -> Result<Vec<f64>> {
    difference(x, d, seasonal_d, period).map(|ds| ds.values)
}

/// Continues the series past the end of `ds` given future differenced values.
pub fn invert_difference(ds: &DifferencedSeries, future_diffs: &[f64]) -> Result<Vec<f64>> {
    integrate(&ds.tail, future_diffs)
}

/// Cumulative inversion of `diffs` through every differencing stage, starting
/// from the values in `ctx`.
pub fn integrate(ctx: &DiffContext, diffs: &[f64]) -> Result<Vec<f64>> {
    ctx.validate()?;
    let mut cur = diffs.to_vec();
    for (lag, level) in ctx.lags().iter().zip(&ctx.levels).rev() {
        cur = integrate_stage(level, *lag, &cur);
    }
    Ok(cur)
}

fn integrate_stage(context: &[f64], lag: usize, diffs: &[f64]) -> Vec<f64> {
    let mut buf = context.to_vec();
    buf.reserve(diffs.len());
    for &dv in diffs {
        let prev = buf[buf.len() - lag];
        buf.push(dv + prev);
    }
    buf.split_off(lag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Day;

    fn series(v: &[Option<f64>]) -> Series {
        Series::new("x", "MWh", Day(0), v.to_vec()).unwrap()
    }

    fn dense(v: &[f64]) -> Series {
        Series::from_values("x", "MWh", Day(0), v).unwrap()
    }

    #[test]
    fn interpolation_examples() {
        let out = interpolate_missing(&series(&[Some(1.0), None, Some(3.0)])).unwrap();
        assert_eq!(out.dense().unwrap(), vec![1.0, 2.0, 3.0]);
        let out = interpolate_missing(&series(&[None, Some(5.0), None])).unwrap();
        assert_eq!(out.dense().unwrap(), vec![5.0, 5.0, 5.0]);
        let out = interpolate_missing(&series(&[Some(0.0), None, None, Some(9.0)])).unwrap();
        assert_eq!(out.dense().unwrap(), vec![0.0, 3.0, 6.0, 9.0]);
        assert_eq!(interpolate_missing(&series(&[None, None])), Err(Error::AllMissing));
    }

    #[test]
    fn savgol_reproduces_quadratic() {
        let x: Vec<f64> = (0..=10).map(|t| (t * t) as f64).collect();
        let out = savgol_smooth(&dense(&x), 5, 2).unwrap().dense().unwrap();
        for (a, b) in x.iter().zip(&out) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn savgol_constant_unchanged() {
        let out = savgol_smooth(&dense(&[7.0; 5]), 3, 1).unwrap().dense().unwrap();
        for v in out {
            assert!((v - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn savgol_attenuates_spike() {
        // 5-point quadratic least squares at t = -2..2, evaluated at 0.
        // Normal equations for c0 + c2 t^2 (c1 decouples by symmetry):
        //   5 c0 + 10 c2 = sum y,  10 c0 + 34 c2 = sum t^2 y.
        let y = [0.0, 0.0, 10.0, 0.0, 0.0];
        let t = [-2.0f64, -1.0, 0.0, 1.0, 2.0];
        let sy: f64 = y.iter().sum();
        let st2y: f64 = t.iter().zip(&y).map(|(t, y)| t * t * y).sum();
        let c0 = (34.0 * sy - 10.0 * st2y) / (5.0 * 34.0 - 10.0 * 10.0);
        let out = savgol_smooth(&dense(&y), 5, 2).unwrap().dense().unwrap();
        assert!((out[2] - c0).abs() < 1e-12);
        assert!((c0 - 170.0 / 35.0).abs() < 1e-12);
        assert!(out[2] < 10.0);
    }

    #[test]
    fn savgol_errors() {
        let s = dense(&[1.0, 2.0, 3.0]);
        assert!(matches!(savgol_smooth(&s, 5, 2), Err(Error::WindowTooLarge { .. })));
        assert!(matches!(savgol_smooth(&s, 3, 3), Err(Error::BadOrder(_))));
        assert!(matches!(savgol_smooth(&s, 2, 1), Err(Error::BadOrder(_))));
    }

    #[test]
    fn log_examples() {
        let out = log_transform(&dense(&[0.0, std::f64::consts::E - 1.0, 1442.0])).unwrap();
        let v = out.dense().unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 1.0).abs() < 1e-15);
        // ln(1443) = ln(3) + ln(13) + ln(37)
        let oracle = 3f64.ln() + 13f64.ln() + 37f64.ln();
        assert!((v[2] - oracle).abs() < 1e-12);
        assert!((v[2] - 7.274_479_558).abs() < 1e-8);
        assert!(matches!(
            log_transform(&dense(&[-1.0])),
            Err(Error::NonPositiveAfterOffset(_))
        ));
    }

    #[test]
    fn invert_log_examples() {
        let mut chain = TransformChain::new();
        let raw = dense(&[1442.0, 200.0, 2106.0]);
        let logged = chain.log(&raw).unwrap();
        let back = invert_log(&logged, &chain).unwrap().dense().unwrap();
        for (a, b) in back.iter().zip(raw.dense().unwrap()) {
            assert!(((a - b) / b).abs() < 1e-9);
        }
        let one = invert_log(&dense(&[1.0]), &chain).unwrap().dense().unwrap();
        assert!((one[0] - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert_eq!(invert_log(&dense(&[0.0]), &chain).unwrap().dense().unwrap(), vec![0.0]);
        assert_eq!(
            invert_log(&dense(&[0.0]), &TransformChain::new()),
            Err(Error::NoLogStep)
        );
    }

    #[test]
    fn difference_examples() {
        assert_eq!(
            difference_values(&[1.0, 2.0, 3.0, 4.0, 5.0], 1, 0, 1).unwrap(),
            vec![1.0; 4]
        );
        assert_eq!(
            difference_values(&[3.0, 1.0, 4.0, 1.0, 5.0], 0, 1, 2).unwrap(),
            vec![1.0, 0.0, 1.0]
        );
        let x = [2.0, 7.0, 1.0];
        assert_eq!(difference_values(&x, 0, 0, 1).unwrap(), x.to_vec());
        assert!(matches!(difference(&x, 1, 1, 2), Err(Error::TooShort(_))));
    }

    #[test]
    fn integrate_examples() {
        let ctx = DiffContext::new(1, 0, 1, vec![vec![5.0]]).unwrap();
        assert_eq!(integrate(&ctx, &[1.0, 1.0]).unwrap(), vec![6.0, 7.0]);
        let ctx = DiffContext::new(0, 1, 2, vec![vec![10.0, 20.0]]).unwrap();
        assert_eq!(integrate(&ctx, &[3.0, 4.0]).unwrap(), vec![13.0, 24.0]);
        assert!(matches!(
            DiffContext::new(1, 0, 1, vec![vec![1.0, 2.0]]),
            Err(Error::HeadMismatch(_))
        ));
    }

    #[test]
    fn difference_round_trip_is_exact() {
        let x = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0];
        let ds = difference(&x, 1, 1, 2).unwrap();
        assert_eq!(ds.values.len(), x.len() - 1 - 2);
        assert_eq!(ds.reconstruct().unwrap(), x.to_vec());
    }

    #[test]
    fn forecast_extension_matches_full_difference() {
        let x: Vec<f64> = (0..30).map(|t| ((t * 7) % 11) as f64 + t as f64).collect();
        let full = difference(&x, 1, 1, 7).unwrap();
        let head = difference(&x[..20], 1, 1, 7).unwrap();
        let future = &full.values[full.values.len() - 10..];
        assert_eq!(invert_difference(&head, future).unwrap(), x[20..].to_vec());
    }

    #[test]
    fn chain_inverts_log() {
        let mut chain = TransformChain::new();
        let s = dense(&[0.0, 3.0, 10.0]);
        let filled = chain.interpolate(&s).unwrap();
        let z = chain.log(&filled).unwrap();
        assert_eq!(chain.steps().len(), 2);
        let back = chain.invert(&z.dense().unwrap()).unwrap();
        for (a, b) in back.iter().zip([0.0, 3.0, 10.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
