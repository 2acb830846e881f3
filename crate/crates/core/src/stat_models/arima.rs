//! ARIMA, seasonal ARIMA and regression-with-ARIMA-errors (ARIMAX) fitted
//! by conditional sum of squares.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Day, ExogMatrix, Series};
use crate::error::{Error, Result};
use crate::forecast::Forecast;
use crate::linalg;
use crate::optim::{self, Tolerance};
use crate::preprocess::{difference, difference_values, integrate, DiffContext, TransformChain};

/// `(p, d, q)(P, D, Q, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    #[serde(default)]
    pub sp: usize,
    #[serde(default)]
    pub sd: usize,
    #[serde(default)]
    pub sq: usize,
    #[serde(default = "one")]
    pub period: usize,
}

fn one() -> usize {
    1
}

impl Default for ArimaOrder {
    fn default() -> Self {
        ArimaOrder::new(0, 0, 0)
    }
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        ArimaOrder {
            p,
            d,
            q,
            sp: 0,
            sd: 0,
            sq: 0,
            period: 1,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub const fn seasonal(p: usize, d: usize, q: usize, sp: usize, sd: usize, sq: usize, period: usize) -> Self {
        ArimaOrder {
            p,
            d,
            q,
            sp,
            sd,
            sq,
            period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::BadOrder("seasonal period must be >= 1".into()));
        }
        if self.period == 1 && (self.sp + self.sd + self.sq) > 0 {
            return Err(Error::BadOrder("seasonal terms need a period > 1".into()));
        }
        Ok(())
    }

    pub fn is_seasonal(&self) -> bool {
        self.sp + self.sd + self.sq > 0
    }

    /// Largest AR lag of the expanded operator.
    pub fn ar_lags(&self) -> usize {
        self.p + self.sp * self.period
    }

    pub fn ma_lags(&self) -> usize {
        self.q + self.sq * self.period
    }

    /// Observations consumed by differencing.
    pub fn diff_lags(&self) -> usize {
        self.d + self.sd * self.period
    }

    pub fn n_coefficients(&self) -> usize {
        self.p + self.q + self.sp + self.sq
    }
}

impl fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)?;
        if self.is_seasonal() {
            write!(f, "({},{},{},{})", self.sp, self.sd, self.sq, self.period)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Enforcement {
    /// Penalize roots near or inside the unit circle in the objective.
    #[default]
    Soft,
    /// As `Soft`, and reject fits that end on the penalty boundary, which
    /// means the unconstrained optimum lies outside the region.
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// `None`: include a mean term only when the model is undifferenced.
    pub intercept: Option<bool>,
    pub enforcement: Enforcement,
    pub max_iter: usize,
    /// Minimum number of leading differenced observations held back as
    /// conditioning values. Fits compared by a criterion should share it so
    /// that their likelihoods cover the same sample.
    #[serde(default)]
    pub conditioning: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            intercept: None,
            enforcement: Enforcement::Soft,
            max_iter: 500,
            conditioning: 0,
        }
    }
}

/// Smallest root modulus of each lag polynomial (`None` when the
/// polynomial is absent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootCheck {
    pub ar: Option<f64>,
    pub ma: Option<f64>,
    pub seasonal_ar: Option<f64>,
    pub seasonal_ma: Option<f64>,
}

impl RootCheck {
    pub fn min_modulus(&self) -> Option<f64> {
        [self.ar, self.ma, self.seasonal_ar, self.seasonal_ma]
            .into_iter()
            .flatten()
            .reduce(f64::min)
    }

    /// True when no root is near the boundary of the penalty region.
    pub fn clear_of_boundary(&self) -> bool {
        self.min_modulus().is_none_or(|m| m > ROOT_MARGIN + BOUNDARY_SLACK)
    }
}

const ROOT_MARGIN: f64 = 1.001;
const ROOT_PENALTY: f64 = 1e6;
const BOUNDARY_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ForecastState {
    diff_tail: DiffContext,
    /// Last `ar_lags` values of the regression error.
    u_tail: Vec<f64>,
    /// Last `ma_lags` one-step residuals.
    e_tail: Vec<f64>,
    /// Last `diff_lags` raw exogenous rows.
    exog_tail: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaFit {
    pub order: ArimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    pub intercept: Option<f64>,
    pub exog_names: Vec<String>,
    pub exog_coef: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_eff: usize,
    /// Leading differenced observations used only as conditioning values.
    pub conditioning: usize,
    pub k_params: usize,
    pub residuals: Vec<f64>,
    pub roots: RootCheck,
    pub converged: bool,
    pub chain: TransformChain,
    pub origin: Day,
    state: ForecastState,
}

/// `(aic, bic)` from a log-likelihood, parameter count and sample size.
pub fn information_criteria(loglik: f64, k_params: usize, n_eff: usize) -> (f64, f64) {
    let k = k_params as f64;
    (-2.0 * loglik + 2.0 * k, -2.0 * loglik + k * (n_eff.max(1) as f64).ln())
}

/// Gaussian log-likelihood concentrated on sigma^2 = SSE / n.
pub fn css_loglik(sse: f64, n_eff: usize) -> f64 {
    let n = n_eff as f64;
    -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (sse / n).ln() + 1.0)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a_1..a_r` with `(1 - sum phi_i B^i)(1 - sum Phi_j B^{sj}) = 1 - sum a_k B^k`.
pub(crate) fn expand_ar(phi: &[f64], sphi: &[f64], period: usize) -> Vec<f64> {
    let mut base = vec![1.0];
    base.extend(phi.iter().map(|v| -v));
    let mut seas = vec![0.0; sphi.len() * period + 1];
    seas[0] = 1.0;
    for (j, v) in sphi.iter().enumerate() {
        seas[(j + 1) * period] = -v;
    }
    poly_mul(&base, &seas)[1..].iter().map(|c| -c).collect()
}

/// `b_1..b_m` with `(1 + sum theta_i B^i)(1 + sum Theta_j B^{sj}) = 1 + sum b_k B^k`.
pub(crate) fn expand_ma(theta: &[f64], stheta: &[f64], period: usize) -> Vec<f64> {
    let mut base = vec![1.0];
    base.extend_from_slice(theta);
    let mut seas = vec![0.0; stheta.len() * period + 1];
    seas[0] = 1.0;
    for (j, v) in stheta.iter().enumerate() {
        seas[(j + 1) * period] = *v;
    }
    poly_mul(&base, &seas)[1..].to_vec()
}

/// Smallest modulus among the roots of `1 - c_1 z - ... - c_k z^k`.
pub(crate) fn min_root_modulus(c: &[f64]) -> Option<f64> {
    let k = c.iter().rposition(|v| *v != 0.0)? + 1;
    if k == 1 {
        return Some(1.0 / c[0].abs());
    }
    // roots are reciprocals of the companion-matrix eigenvalues
    let companion = DMatrix::from_fn(k, k, |i, j| {
        if i == 0 {
            c[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let largest = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Some(if largest == 0.0 { f64::INFINITY } else { 1.0 / largest })
}

fn root_check(c: &Coefs) -> RootCheck {
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    RootCheck {
        ar: min_root_modulus(&c.ar),
        ma: min_root_modulus(&neg(&c.ma)),
        seasonal_ar: min_root_modulus(&c.sar),
        seasonal_ma: min_root_modulus(&neg(&c.sma)),
    }
}

#[derive(Debug, Clone)]
struct Coefs {
    ar: Vec<f64>,
    ma: Vec<f64>,
    sar: Vec<f64>,
    sma: Vec<f64>,
    mu: Option<f64>,
    beta: Vec<f64>,
}

impl Coefs {
    fn from_fit(fit: &ArimaFit) -> Coefs {
        Coefs {
            ar: fit.ar.clone(),
            ma: fit.ma.clone(),
            sar: fit.seasonal_ar.clone(),
            sma: fit.seasonal_ma.clone(),
            mu: fit.intercept,
            beta: fit.exog_coef.clone(),
        }
    }

    fn regression_error(&self, w: &[f64], xd: Option<&[Vec<f64>]>) -> Vec<f64> {
        let mu = self.mu.unwrap_or(0.0);
        w.iter()
            .enumerate()
            .map(|(t, v)| {
                let xb: f64 = xd.map_or(0.0, |x| x[t].iter().zip(&self.beta).map(|(a, b)| a * b).sum());
                v - mu - xb
            })
            .collect()
    }
}

/// One-step residuals of the ARMA recursion over `u`; entries before
/// `start` (at least `a.len()`) are the zero pre-sample residuals.
fn css_residuals(u: &[f64], a: &[f64], b: &[f64], start: usize) -> Vec<f64> {
    let r = start.max(a.len());
    let mut e = vec![0.0; u.len()];
    for t in r..u.len() {
        let mut pred = 0.0;
        for (i, ai) in a.iter().enumerate() {
            pred += ai * u[t - 1 - i];
        }
        for (j, bj) in b.iter().enumerate() {
            if t > j {
                pred += bj * e[t - 1 - j];
            }
        }
        e[t] = u[t] - pred;
    }
    e
}

struct Layout {
    order: ArimaOrder,
    intercept: bool,
    k_exog: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.order.n_coefficients() + self.intercept as usize + self.k_exog
    }

    fn unpack(&self, x: &[f64]) -> Coefs {
        let o = &self.order;
        let mut it = x.iter().copied();
        let mut take = |n: usize| it.by_ref().take(n).collect::<Vec<_>>();
        let ar = take(o.p);
        let ma = take(o.q);
        let sar = take(o.sp);
        let sma = take(o.sq);
        let mu = if self.intercept { Some(take(1)[0]) } else { None };
        let beta = take(self.k_exog);
        Coefs {
            ar,
            ma,
            sar,
            sma,
            mu,
            beta,
        }
    }
}

fn differenced_exog(exog: &ExogMatrix, order: &ArimaOrder) -> Result<Vec<Vec<f64>>> {
    let cols = (0..exog.ncols())
        .map(|j| difference_values(&exog.column(j), order.d, order.sd, order.period))
        .collect::<Result<Vec<_>>>()?;
    let m = cols.first().map_or(0, Vec::len);
    Ok((0..m).map(|t| cols.iter().map(|c| c[t]).collect()).collect())
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Fits `order` to `s` by conditional sum of squares.
///
/// The series is differenced, the mean and exogenous effects are removed
/// (regression with ARMA errors, all coefficients estimated jointly) and
/// one-step residuals are run through the expanded ARMA recursion with
/// zero pre-sample residuals. Coefficients minimize the SSE: a Nelder–Mead
/// simplex from AR/MA = 0.1 and an OLS start for the regression part,
/// polished by BFGS with central-difference gradients.
pub fn fit_arima(s: &Series, order: ArimaOrder, exog: Option<&ExogMatrix>, opts: &FitOptions) -> Result<ArimaFit> {
    order.validate()?;
    let y = s.dense()?;
    let ds = difference(&y, order.d, order.sd, order.period)?;
    let w = &ds.values;
    let xd = match exog {
        Some(x) => {
            x.check_aligned(s)?;
            Some(differenced_exog(x, &order)?)
        }
        None => None,
    };
    let k_exog = exog.map_or(0, ExogMatrix::ncols);
    let intercept = opts.intercept.unwrap_or(order.d + order.sd == 0);
    let layout = Layout {
        order,
        intercept,
        k_exog,
    };
    let r = order.ar_lags().max(opts.conditioning);
    let k_params = layout.len() + 1;
    if w.len() <= r || w.len() - r < 10 * k_params {
        return Err(Error::TooShort(format!(
            "{} usable observations for {k_params} parameters (need 10 per parameter)",
            w.len().saturating_sub(r)
        )));
    }
    let n_eff = w.len() - r;

    // starting values and coordinate scales
    let sd_w = std_dev(w).max(1e-8);
    let mut x0 = vec![0.1; order.n_coefficients()];
    let mut scale = vec![1.0; order.n_coefficients()];
    if intercept || k_exog > 0 {
        let cols = intercept as usize + k_exog;
        let design = DMatrix::from_fn(w.len(), cols, |t, j| {
            if intercept && j == 0 {
                1.0
            } else {
                xd.as_ref().unwrap()[t][j - intercept as usize]
            }
        });
        let beta = match linalg::lstsq(&design, w) {
            Some(b) => b,
            None if k_exog > 0 => return Err(Error::SingularExog),
            None => vec![w.iter().sum::<f64>() / w.len() as f64],
        };
        if k_exog > 0 {
            let xd = xd.as_ref().unwrap();
            for j in 0..k_exog {
                let col: Vec<f64> = xd.iter().map(|r| r[j]).collect();
                if std_dev(&col) < 1e-12 && !intercept {
                    // a constant column is only identifiable without an intercept
                } else if std_dev(&col) < 1e-12 {
                    return Err(Error::SingularExog);
                }
            }
        }
        for (j, b) in beta.iter().enumerate() {
            x0.push(*b);
            let sx = if intercept && j == 0 {
                1.0
            } else {
                let col: Vec<f64> = xd.as_ref().unwrap().iter().map(|r| r[j - intercept as usize]).collect();
                std_dev(&col).max(1e-8)
            };
            scale.push(sd_w / sx);
        }
    }

    let objective = |z: &[f64]| -> f64 {
        let x: Vec<f64> = z.iter().zip(&scale).map(|(a, b)| a * b).collect();
        let c = layout.unpack(&x);
        let a = expand_ar(&c.ar, &c.sar, order.period);
        let b = expand_ma(&c.ma, &c.sma, order.period);
        let u = c.regression_error(w, xd.as_deref());
        let e = css_residuals(&u, &a, &b, r);
        let sse: f64 = e[r..].iter().map(|v| v * v).sum();
        let overshoot: f64 = {
            let roots = root_check(&c);
            [roots.ar, roots.ma, roots.seasonal_ar, roots.seasonal_ma]
                .into_iter()
                .flatten()
                .map(|m| (ROOT_MARGIN - m).max(0.0))
                .sum()
        };
        let f = (sse / n_eff as f64).ln() + ROOT_PENALTY * overshoot;
        if f.is_finite() {
            f
        } else {
            1e10
        }
    };

    let z0: Vec<f64> = x0.iter().zip(&scale).map(|(a, b)| a / b).collect();
    let tol = Tolerance {
        rel: 1e-9,
        max_iter: opts.max_iter,
    };
    let simplex = optim::nelder_mead(objective, &z0, &vec![0.1; z0.len()], tol);
    let polished = optim::bfgs(objective, &simplex.x, tol);
    let best = if polished.f <= simplex.f { &polished } else { &simplex };
    let converged = polished.converged || simplex.converged;

    let x: Vec<f64> = best.x.iter().zip(&scale).map(|(a, b)| a * b).collect();
    let coefs = layout.unpack(&x);
    let roots = root_check(&coefs);
    if opts.enforcement == Enforcement::Hard && !roots.clear_of_boundary() {
        return Err(Error::NonInvertible(roots.min_modulus().unwrap_or(0.0)));
    }
    let a = expand_ar(&coefs.ar, &coefs.sar, order.period);
    let b = expand_ma(&coefs.ma, &coefs.sma, order.period);
    let u = coefs.regression_error(w, xd.as_deref());
    let e = css_residuals(&u, &a, &b, r);
    let residuals = e[r..].to_vec();
    let sse: f64 = residuals.iter().map(|v| v * v).sum();
    if !(sse > 0.0 && sse.is_finite()) {
        return Err(Error::NoConvergence);
    }
    let loglik = css_loglik(sse, n_eff);
    let (aic, bic) = information_criteria(loglik, k_params, n_eff);
    let exog_tail = exog.map_or_else(Vec::new, |x| x.rows()[x.nrows() - order.diff_lags()..].to_vec());
    let state = ForecastState {
        diff_tail: ds.tail.clone(),
        u_tail: u[u.len() - a.len()..].to_vec(),
        e_tail: e[e.len() - b.len().min(e.len())..].to_vec(),
        exog_tail,
    };
    Ok(ArimaFit {
        order,
        ar: coefs.ar,
        ma: coefs.ma,
        seasonal_ar: coefs.sar,
        seasonal_ma: coefs.sma,
        intercept: coefs.mu,
        exog_names: exog.map_or_else(Vec::new, |x| x.names().to_vec()),
        exog_coef: coefs.beta,
        sigma2: sse / n_eff as f64,
        loglik,
        aic,
        bic,
        n_eff,
        conditioning: r,
        k_params,
        residuals,
        roots,
        converged,
        chain: TransformChain::new(),
        origin: s.end(),
        state,
    })
}

impl ArimaFit {
    pub fn label(&self) -> String {
        let base = if self.order.is_seasonal() { "SARIMA" } else { "ARIMA" };
        let x = if self.exog_names.is_empty() { "" } else { "X" };
        format!("{base}{x}{}", self.order)
    }

    pub fn uses_exog(&self) -> bool {
        !self.exog_names.is_empty()
    }

    pub fn sse(&self) -> f64 {
        self.residuals.iter().map(|v| v * v).sum()
    }

    /// Re-runs the fitted recursion over `y` (same scale as the training
    /// data) and returns the one-step residuals after the conditioning lags.
    pub fn residuals_for(&self, y: &[f64], exog: Option<&ExogMatrix>) -> Result<Vec<f64>> {
        let e = self.full_residuals(y, exog)?;
        Ok(e[self.conditioning..].to_vec())
    }

    fn full_residuals(&self, y: &[f64], exog: Option<&ExogMatrix>) -> Result<Vec<f64>> {
        let o = &self.order;
        let w = difference_values(y, o.d, o.sd, o.period)?;
        let xd = match (self.uses_exog(), exog) {
            (true, Some(x)) => {
                if x.nrows() != y.len() {
                    return Err(Error::ShapeMismatch("exogenous rows must match the series".into()));
                }
                Some(differenced_exog(x, o)?)
            }
            (true, None) => return Err(Error::MissingFutureExog(y.len())),
            (false, _) => None,
        };
        let c = Coefs::from_fit(self);
        let u = c.regression_error(&w, xd.as_deref());
        if u.len() <= self.conditioning {
            return Err(Error::TooShort("series shorter than the conditioning lags".into()));
        }
        Ok(css_residuals(
            &u,
            &expand_ar(&c.ar, &c.sar, o.period),
            &expand_ma(&c.ma, &c.sma, o.period),
            self.conditioning,
        ))
    }

    /// Observations needed before the first one-step prediction.
    pub fn warmup(&self) -> usize {
        self.order.diff_lags() + self.conditioning
    }

    /// One-step-ahead predictions of `y[t]` for `t` in `from..y.len()`, each
    /// using the fitted coefficients and the observed history before `t`.
    pub fn one_step_predictions(&self, y: &[f64], exog: Option<&ExogMatrix>, from: usize) -> Result<Vec<f64>> {
        if from < self.warmup() {
            return Err(Error::TooShort(format!(
                "one-step predictions start at index {} or later",
                self.warmup()
            )));
        }
        let e = self.full_residuals(y, exog)?;
        let lag = self.order.diff_lags();
        Ok((from..y.len()).map(|t| y[t] - e[t - lag]).collect())
    }

    /// Recursive multi-step forecast from the end of the training data.
    pub fn forecast(&self, horizon: usize, future_exog: Option<&ExogMatrix>) -> Result<Forecast> {
        let o = &self.order;
        let xd_future = if self.uses_exog() {
            let fx = future_exog.ok_or(Error::MissingFutureExog(horizon))?;
            if fx.nrows() != horizon || fx.ncols() != self.exog_names.len() {
                return Err(Error::MissingFutureExog(horizon));
            }
            let mut rows = self.state.exog_tail.clone();
            rows.extend(fx.rows().iter().cloned());
            let joined = ExogMatrix::new(self.origin, self.exog_names.clone(), rows)?;
            Some(differenced_exog(&joined, o)?)
        } else {
            None
        };
        let a = expand_ar(&self.ar, &self.seasonal_ar, o.period);
        let b = expand_ma(&self.ma, &self.seasonal_ma, o.period);
        let mut u = self.state.u_tail.clone();
        let mut e = self.state.e_tail.clone();
        // pad so that u[len - 1 - i] and e[len - 1 - j] are always defined
        let (u0, e0) = (u.len(), e.len());
        let mut w_future = Vec::with_capacity(horizon);
        for h in 0..horizon {
            let mut pred = 0.0;
            for (i, ai) in a.iter().enumerate() {
                pred += ai * u[u.len() - 1 - i];
            }
            for (j, bj) in b.iter().enumerate() {
                if e.len() > j {
                    pred += bj * e[e.len() - 1 - j];
                }
            }
            u.push(pred);
            e.push(0.0);
            let xb: f64 = xd_future
                .as_ref()
                .map_or(0.0, |x| x[h].iter().zip(&self.exog_coef).map(|(a, b)| a * b).sum());
            w_future.push(pred + self.intercept.unwrap_or(0.0) + xb);
        }
        debug_assert_eq!(u.len() - u0, e.len() - e0);
        let transformed = integrate(&self.state.diff_tail, &w_future)?;
        let original = self.chain.invert(&transformed)?;
        Ok(Forecast {
            model: self.label(),
            origin: self.origin,
            original,
            transformed,
        })
    }
}

/// Free-function form of [`ArimaFit::forecast`].
pub fn forecast_arima(fit: &ArimaFit, horizon: usize, future_exog: Option<&ExogMatrix>) -> Result<Forecast> {
    fit.forecast(horizon, future_exog)
}
