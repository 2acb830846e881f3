//! Single-layer LSTM regressor trained by backpropagation through time.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{clip_global_norm, Adam, AdamConfig};
use super::windows::{FeatureSpec, Scaling, SupervisedSet, WindowModel};
use crate::data::Climatology;
use crate::error::{Error, Result};
use crate::preprocess::TransformChain;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Cell weights acting on `[h_{t-1}, x_t]` plus a dense output head
/// `y = v . relu(h_T) + u . extras + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub hidden: usize,
    pub input: usize,
    /// Per-sample features fed straight to the head.
    pub extras: usize,
    /// `H x (H + m)`, row-major.
    pub w_f: Vec<f64>,
    pub w_i: Vec<f64>,
    pub w_c: Vec<f64>,
    pub w_o: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
    pub head_w: Vec<f64>,
    pub extra_w: Vec<f64>,
    pub head_b: f64,
}

impl LstmParams {
    pub fn zeros(hidden: usize, input: usize, extras: usize) -> Self {
        let wn = hidden * (hidden + input);
        LstmParams {
            hidden,
            input,
            extras,
            w_f: vec![0.0; wn],
            w_i: vec![0.0; wn],
            w_c: vec![0.0; wn],
            w_o: vec![0.0; wn],
            b_f: vec![0.0; hidden],
            b_i: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
            head_w: vec![0.0; hidden],
            extra_w: vec![0.0; extras],
            head_b: 0.0,
        }
    }

    /// Every weight and bias drawn from `U[-1/sqrt(H), 1/sqrt(H)]`.
    pub fn init(hidden: usize, input: usize, extras: usize, rng: &mut impl Rng) -> Self {
        let mut p = LstmParams::zeros(hidden, input, extras);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut flat = p.to_flat();
        flat.iter_mut().for_each(|v| *v = rng.random_range(-bound..=bound));
        p.set_flat(&flat);
        p
    }

    fn blocks(&self) -> [&Vec<f64>; 10] {
        [
            &self.w_f,
            &self.w_i,
            &self.w_c,
            &self.w_o,
            &self.b_f,
            &self.b_i,
            &self.b_c,
            &self.b_o,
            &self.head_w,
            &self.extra_w,
        ]
    }

    fn blocks_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.w_f,
            &mut self.w_i,
            &mut self.w_c,
            &mut self.w_o,
            &mut self.b_f,
            &mut self.b_i,
            &mut self.b_c,
            &mut self.b_o,
            &mut self.head_w,
            &mut self.extra_w,
        ]
    }

    pub fn n_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum::<usize>() + 1
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for b in self.blocks() {
            out.extend_from_slice(b);
        }
        out.push(self.head_b);
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut at = 0;
        for b in self.blocks_mut() {
            let n = b.len();
            b.copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        self.head_b = flat[at];
    }

    fn check(&self, x: &[f64], h: &[f64], c: &[f64]) -> Result<()> {
        let hn = self.hidden;
        let wn = hn * (hn + self.input);
        let weights_ok = [&self.w_f, &self.w_i, &self.w_c, &self.w_o]
            .iter()
            .all(|w| w.len() == wn);
        let biases_ok = [&self.b_f, &self.b_i, &self.b_c, &self.b_o]
            .iter()
            .all(|b| b.len() == hn);
        if !weights_ok || !biases_ok || x.len() != self.input || h.len() != hn || c.len() != hn {
            return Err(Error::ShapeMismatch(format!(
                "cell expects H={hn}, m={}; got x={}, h={}, c={}",
                self.input,
                x.len(),
                h.len(),
                c.len()
            )));
        }
        Ok(())
    }
}

fn affine(w: &[f64], b: &[f64], z: &[f64]) -> Vec<f64> {
    let k = z.len();
    b.iter()
        .enumerate()
        .map(|(r, bias)| bias + w[r * k..(r + 1) * k].iter().zip(z).map(|(a, x)| a * x).sum::<f64>())
        .collect()
}

struct StepCache {
    z: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn step(p: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, StepCache) {
    let mut z = Vec::with_capacity(h_prev.len() + x.len());
    z.extend_from_slice(h_prev);
    z.extend_from_slice(x);
    let f: Vec<f64> = affine(&p.w_f, &p.b_f, &z).into_iter().map(sigmoid).collect();
    let i: Vec<f64> = affine(&p.w_i, &p.b_i, &z).into_iter().map(sigmoid).collect();
    let g: Vec<f64> = affine(&p.w_c, &p.b_c, &z).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = affine(&p.w_o, &p.b_o, &z).into_iter().map(sigmoid).collect();
    let c: Vec<f64> = (0..p.hidden).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..p.hidden).map(|k| o[k] * tanh_c[k]).collect();
    let cache = StepCache {
        z,
        f,
        i,
        g,
        o,
        c_prev: c_prev.to_vec(),
        tanh_c,
    };
    (h, c, cache)
}

/// One cell update: forget, input, candidate and output gates, then the
/// new cell and hidden states.
pub fn lstm_cell_step(p: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    p.check(x, h_prev, c_prev)?;
    let (h, c, _) = step(p, x, h_prev, c_prev);
    Ok((h, c))
}

/// Splits a feature row into the per-step sequence and the head extras.
fn split_row<'a>(p: &LstmParams, row: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    row.split_at(row.len() - p.extras)
}

fn forward(p: &LstmParams, row: &[f64]) -> (f64, Vec<f64>, Vec<StepCache>) {
    let (seq, extras) = split_row(p, row);
    let mut h = vec![0.0; p.hidden];
    let mut c = vec![0.0; p.hidden];
    let mut caches = Vec::with_capacity(seq.len() / p.input.max(1));
    for x in seq.chunks(p.input) {
        let (hn, cn, cache) = step(p, x, &h, &c);
        h = hn;
        c = cn;
        caches.push(cache);
    }
    let y = p.head_b
        + h.iter().zip(&p.head_w).map(|(a, w)| a.max(0.0) * w).sum::<f64>()
        + extras.iter().zip(&p.extra_w).map(|(a, w)| a * w).sum::<f64>();
    (y, h, caches)
}

/// Prediction for one feature row.
pub fn predict(p: &LstmParams, row: &[f64]) -> f64 {
    forward(p, row).0
}

/// Adds the gradient of `scale * (y_hat - y)^2` for one sample into `grad`
/// and returns the squared error.
fn backward(p: &LstmParams, row: &[f64], target: f64, scale: f64, grad: &mut LstmParams) -> f64 {
    let hn = p.hidden;
    let k = hn + p.input;
    let (y_hat, h_last, caches) = forward(p, row);
    let (_, extras) = split_row(p, row);
    let err = y_hat - target;
    let dy = 2.0 * err * scale;
    grad.head_b += dy;
    for (g, e) in grad.extra_w.iter_mut().zip(extras) {
        *g += dy * e;
    }
    let mut dh: Vec<f64> = (0..hn)
        .map(|j| {
            grad.head_w[j] += dy * h_last[j].max(0.0);
            if h_last[j] > 0.0 {
                dy * p.head_w[j]
            } else {
                0.0
            }
        })
        .collect();
    let mut dc_next = vec![0.0; hn];
    for cache in caches.iter().rev() {
        let mut da = [vec![0.0; hn], vec![0.0; hn], vec![0.0; hn], vec![0.0; hn]];
        for j in 0..hn {
            let (f, i, g, o, t) = (cache.f[j], cache.i[j], cache.g[j], cache.o[j], cache.tanh_c[j]);
            let d_o = dh[j] * t;
            let dc = dc_next[j] + dh[j] * o * (1.0 - t * t);
            da[0][j] = dc * cache.c_prev[j] * f * (1.0 - f);
            da[1][j] = dc * g * i * (1.0 - i);
            da[2][j] = dc * i * (1.0 - g * g);
            da[3][j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        let mut dz = vec![0.0; k];
        let weights = [&p.w_f, &p.w_i, &p.w_c, &p.w_o];
        let [gw_f, gw_i, gw_c, gw_o, gb_f, gb_i, gb_c, gb_o, ..] = grad.blocks_mut();
        let gw = [gw_f, gw_i, gw_c, gw_o];
        let gb = [gb_f, gb_i, gb_c, gb_o];
        for gate in 0..4 {
            for j in 0..hn {
                let a = da[gate][j];
                if a == 0.0 {
                    continue;
                }
                gb[gate][j] += a;
                let w_row = &weights[gate][j * k..(j + 1) * k];
                let g_row = &mut gw[gate][j * k..(j + 1) * k];
                for col in 0..k {
                    g_row[col] += a * cache.z[col];
                    dz[col] += a * w_row[col];
                }
            }
        }
        dh = dz[..hn].to_vec();
    }
    err * err
}

/// Mean squared error of `p` over rows `x` with targets `y`.
pub fn mse_loss(p: &LstmParams, x: &[Vec<f64>], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(r, t)| (predict(p, r) - t).powi(2)).sum::<f64>() / y.len() as f64
}

/// Mean squared error and its exact gradient (flattened in
/// [`LstmParams::to_flat`] order). Samples are processed in parallel and
/// summed in index order.
pub fn mse_gradient(p: &LstmParams, x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>) {
    let scale = 1.0 / y.len() as f64;
    let parts: Vec<(f64, Vec<f64>)> = x
        .par_iter()
        .zip(y.par_iter())
        .map(|(r, t)| {
            let mut g = LstmParams::zeros(p.hidden, p.input, p.extras);
            let se = backward(p, r, *t, scale, &mut g);
            (se, g.to_flat())
        })
        .collect();
    let mut total = vec![0.0; p.n_params()];
    let mut loss = 0.0;
    for (se, g) in parts {
        loss += se;
        for (a, b) in total.iter_mut().zip(&g) {
            *a += b;
        }
    }
    (loss * scale, total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Samples per Adam update; 0 uses the whole training set.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            adam: AdamConfig::default(),
            clip_norm: 5.0,
            seed: 42,
        }
    }
}

impl TrainConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.adam.step > 0.0) {
            return Err(Error::BadHyperparameter("Adam step size must be > 0".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::BadHyperparameter("clip norm must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::BadHyperparameter("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub params: LstmParams,
    pub spec: FeatureSpec,
    pub scaling: Scaling,
    pub chain: TransformChain,
    pub climatology: Option<Climatology>,
    pub train: TrainConfig,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

impl LstmModel {
    pub fn mse(&self, data: &SupervisedSet) -> f64 {
        mse_loss(&self.params, &data.x, &data.y)
    }
}

impl WindowModel for LstmModel {
    fn name(&self) -> &str {
        "LSTM"
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
        predict(&self.params, x)
    }
}

/// Trains an LSTM with `hidden` units on the lag windows of `data`; the
/// extras go straight to the output head.
pub fn lstm_fit(data: &SupervisedSet, hidden: usize, cfg: &TrainConfig) -> Result<LstmModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if hidden == 0 {
        return Err(Error::BadHyperparameter("hidden size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = LstmParams::init(hidden, 1, data.spec.n_extras(), &mut rng);
    let mut flat = params.to_flat();
    let mut adam = Adam::new(cfg.adam, flat.len());
    let n = data.len();
    let batch = if cfg.batch_size == 0 { n } else { cfg.batch_size.min(n) };
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for idx in order.chunks(batch) {
            let xs: Vec<Vec<f64>> = idx.iter().map(|&i| data.x[i].clone()).collect();
            let ys: Vec<f64> = idx.iter().map(|&i| data.y[i]).collect();
            let (loss, mut grad) = mse_gradient(&params, &xs, &ys);
            epoch_loss += loss * idx.len() as f64;
            clip_global_norm(&mut grad, cfg.clip_norm);
            adam.update(&mut flat, &grad);
            params.set_flat(&flat);
        }
        let epoch_loss = epoch_loss / n as f64;
        trace.push(epoch_loss);
        if !epoch_loss.is_finite() || flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch, trace });
        }
    }
    Ok(LstmModel {
        params,
        spec: data.spec.clone(),
        scaling: data.scaling.clone(),
        chain: data.chain.clone(),
        climatology: None,
        train: cfg.clone(),
        loss_trace: trace,
    })
}
