//! Restricted Boltzmann machine baseline.
//!
//! Energy of a joint configuration (no intra-layer couplings):
//!
//! ```text
//! E(v, h) = -(v' W h + b' v + c' h),    P(v, h) = exp(-E(v, h)) / Z
//! ```
//!
//! Visible units are logistic. Hidden units are either linear with unit
//! Gaussian noise (the default) or binary logistic. The exact quantities
//! (`partition_function`, `log_likelihood`, `exact_gradient`) assume binary
//! units on both sides and enumerate the visible layer, summing the hidden
//! layer analytically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::RngStream;

/// Maximum `nv + nh` accepted by `partition_function` / `log_likelihood`.
pub const MAX_ENUMERATION_UNITS: usize = 20;
/// Maximum `nv + nh` accepted by `exact_gradient`.
pub const MAX_GRADIENT_UNITS: usize = 16;

const INIT_STREAM: u64 = 0;
const EVAL_STREAM_BASE: u64 = 1 << 32;

fn train_stream(epoch: usize) -> u64 {
    1 + epoch as u64
}

/// Stream used for the reconstruction-error evaluation; index 0 is the
/// pre-training evaluation, `1 + e` the one after epoch `e`.
fn eval_stream(index: usize) -> u64 {
    EVAL_STREAM_BASE + index as u64
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `log(1 + exp(x))` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenKind {
    /// Hidden mean `W'v + c`, sample `mean + N(0, 1)`.
    #[default]
    LinearGaussian,
    /// Hidden mean `sigmoid(W'v + c)`, sample Bernoulli(mean).
    BinarySigmoid,
}

/// What the negative phase uses for the reconstructed visible layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeVisible {
    /// Visible probabilities.
    #[default]
    Mean,
    /// Bernoulli samples of the visible probabilities.
    Sample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbmParams {
    /// `nv x nh` couplings.
    pub weights: Matrix,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
}

impl RbmParams {
    pub fn new(weights: Matrix, visible_bias: Vec<f64>, hidden_bias: Vec<f64>) -> Result<Self> {
        let p = Self {
            weights,
            visible_bias,
            hidden_bias,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(nv: usize, nh: usize) -> Result<Self> {
        Self::new(Matrix::zeros(nv, nh)?, vec![0.0; nv], vec![0.0; nh])
    }

    /// Weights `N(0, sigma^2)`, biases zero.
    pub fn random(nv: usize, nh: usize, sigma: f64, rng: &mut RngStream) -> Result<Self> {
        let var = sigma * sigma;
        let mut draw_err = None;
        let weights = Matrix::from_fn(nv, nh, |_, _| match rng.draw_gaussian(0.0, var) {
            Ok(x) => x,
            Err(e) => {
                draw_err.get_or_insert(e);
                0.0
            }
        })?;
        if let Some(e) = draw_err {
            return Err(e);
        }
        Self::new(weights, vec![0.0; nv], vec![0.0; nh])
    }

    pub fn num_visible(&self) -> usize {
        self.weights.rows()
    }

    pub fn num_hidden(&self) -> usize {
        self.weights.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let (nv, nh) = self.weights.shape();
        if self.visible_bias.len() != nv || self.hidden_bias.len() != nh {
            return Err(Error::ShapeMismatch {
                left: (nv, nh),
                right: (self.visible_bias.len(), self.hidden_bias.len()),
            });
        }
        if !self.weights.all_finite() {
            return Err(Error::NonFinite(0));
        }
        let biases = self.visible_bias.iter().chain(&self.hidden_bias);
        if let Some(i) = biases.into_iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(())
    }

    /// `c + W'v`.
    pub fn hidden_input(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_visible(v)?;
        let mut act = self.hidden_bias.clone();
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                for (a, w) in act.iter_mut().zip(self.weights.row(i)) {
                    *a += vi * w;
                }
            }
        }
        Ok(act)
    }

    /// `b + W h`.
    pub fn visible_input(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check_hidden(h)?;
        Ok((0..self.num_visible())
            .map(|i| {
                self.visible_bias[i]
                    + self
                        .weights
                        .row(i)
                        .iter()
                        .zip(h)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            })
            .collect())
    }

    fn check_visible(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.num_visible() {
            return Err(Error::ShapeMismatch {
                left: (self.num_visible(), 1),
                right: (v.len(), 1),
            });
        }
        Ok(())
    }

    fn check_hidden(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.num_hidden() {
            return Err(Error::ShapeMismatch {
                left: (self.num_hidden(), 1),
                right: (h.len(), 1),
            });
        }
        Ok(())
    }

    /// `-log sum_h exp(-E(v, h))` for binary hidden units.
    pub fn free_energy(&self, v: &[f64]) -> Result<f64> {
        let act = self.hidden_input(v)?;
        let vis: f64 = v.iter().zip(&self.visible_bias).map(|(a, b)| a * b).sum();
        Ok(-(vis + act.iter().map(|&x| softplus(x)).sum::<f64>()))
    }
}

/// `E(x) = -(x'Ux + b'x)` for a general quadratic energy.
pub fn energy_general(x: &[f64], u: &Matrix, b: &[f64]) -> Result<f64> {
    let n = x.len();
    if u.shape() != (n, n) || b.len() != n {
        return Err(Error::ShapeMismatch {
            left: (n, n),
            right: u.shape(),
        });
    }
    let mut quad = 0.0;
    for i in 0..n {
        quad += x[i] * u.row(i).iter().zip(x).map(|(a, y)| a * y).sum::<f64>();
    }
    let lin: f64 = b.iter().zip(x).map(|(a, y)| a * y).sum();
    Ok(-(quad + lin))
}

/// `E(v, h) = -(v'Wh + b'v + c'h)`.
pub fn energy(v: &[f64], h: &[f64], params: &RbmParams) -> Result<f64> {
    params.check_visible(v)?;
    params.check_hidden(h)?;
    let act = params.hidden_input(v)?;
    // act = c + W'v, so h'act = v'Wh + c'h
    let vh_c: f64 = act.iter().zip(h).map(|(a, x)| a * x).sum();
    let bv: f64 = params.visible_bias.iter().zip(v).map(|(a, x)| a * x).sum();
    Ok(-(vh_c + bv))
}

fn check_tractable(params: &RbmParams, limit: usize) -> Result<()> {
    let units = params.num_visible() + params.num_hidden();
    if units > limit {
        return Err(Error::Intractable { units, limit });
    }
    Ok(())
}

fn binary_vector(bits: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| ((bits >> i) & 1) as f64).collect()
}

fn check_binary_rows(data: &Matrix) -> Result<()> {
    match data
        .as_slice()
        .iter()
        .position(|&x| x != 0.0 && x != 1.0)
    {
        Some(i) => Err(Error::InvalidRange(format!(
            "exact computations need binary visible data; entry {i} is {}",
            data.as_slice()[i]
        ))),
        None => Ok(()),
    }
}

/// `log Z` for binary visible and hidden units.
pub fn log_partition_function(params: &RbmParams) -> Result<f64> {
    check_tractable(params, MAX_ENUMERATION_UNITS)?;
    let nv = params.num_visible();
    let neg_free: Vec<f64> = (0..1usize << nv)
        .map(|bits| params.free_energy(&binary_vector(bits, nv)).map(|f| -f))
        .collect::<Result<_>>()?;
    Ok(log_sum_exp(&neg_free))
}

/// `Z = sum over binary (v, h) of exp(-E(v, h))`.
pub fn partition_function(params: &RbmParams) -> Result<f64> {
    let z = log_partition_function(params)?.exp();
    if !z.is_finite() {
        return Err(Error::NonFinite(0));
    }
    Ok(z)
}

/// `sum_t log P(v_t)` with the hidden layer marginalized.
pub fn log_likelihood(params: &RbmParams, data: &Matrix) -> Result<f64> {
    check_tractable(params, MAX_ENUMERATION_UNITS)?;
    if data.cols() != params.num_visible() {
        return Err(Error::ShapeMismatch {
            left: (data.rows(), params.num_visible()),
            right: data.shape(),
        });
    }
    check_binary_rows(data)?;
    let log_z = log_partition_function(params)?;
    let mut total = 0.0;
    for t in 0..data.rows() {
        total += -params.free_energy(data.row(t))? - log_z;
    }
    Ok(total)
}

/// Hidden conditional. `rng = None` is the zero-noise hook: the sample equals the mean.
pub fn hidden_given_visible(
    params: &RbmParams,
    v: &[f64],
    kind: HiddenKind,
    rng: Option<&mut RngStream>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let act = params.hidden_input(v)?;
    let mean: Vec<f64> = match kind {
        HiddenKind::LinearGaussian => act,
        HiddenKind::BinarySigmoid => act.into_iter().map(sigmoid).collect(),
    };
    let sample = match rng {
        None => mean.clone(),
        Some(rng) => match kind {
            HiddenKind::LinearGaussian => mean
                .iter()
                .map(|&m| rng.draw_gaussian(m, 1.0))
                .collect::<Result<_>>()?,
            HiddenKind::BinarySigmoid => mean
                .iter()
                .map(|&p| if rng.draw_bernoulli(p) { 1.0 } else { 0.0 })
                .collect(),
        },
    };
    Ok((mean, sample))
}

/// Visible conditional: mean `sigmoid(Wh + b)`, Bernoulli sample.
/// `rng = None` returns the mean as the sample.
pub fn visible_given_hidden(
    params: &RbmParams,
    h: &[f64],
    rng: Option<&mut RngStream>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mean: Vec<f64> = params.visible_input(h)?.into_iter().map(sigmoid).collect();
    let sample = match rng {
        None => mean.clone(),
        Some(rng) => mean
            .iter()
            .map(|&p| if rng.draw_bernoulli(p) { 1.0 } else { 0.0 })
            .collect(),
    };
    Ok((mean, sample))
}

/// Gradient of the log-likelihood (or a CD estimate of it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub d_weights: Matrix,
    pub d_visible_bias: Vec<f64>,
    pub d_hidden_bias: Vec<f64>,
}

impl Gradient {
    pub fn zeros(nv: usize, nh: usize) -> Result<Self> {
        Ok(Self {
            d_weights: Matrix::zeros(nv, nh)?,
            d_visible_bias: vec![0.0; nv],
            d_hidden_bias: vec![0.0; nh],
        })
    }

    /// All components concatenated: weights (row-major), visible, hidden.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.d_weights.as_slice().to_vec();
        out.extend_from_slice(&self.d_visible_bias);
        out.extend_from_slice(&self.d_hidden_bias);
        out
    }

    /// Accumulates `scale * v h'` into the weights and `scale * v`, `scale * h` into the biases.
    fn add_outer(&mut self, v: &[f64], h: &[f64], scale: f64) {
        let nh = h.len();
        let w = self.d_weights.values_mut();
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                for (j, &hj) in h.iter().enumerate() {
                    w[i * nh + j] += scale * vi * hj;
                }
            }
        }
        for (a, &x) in self.d_visible_bias.iter_mut().zip(v) {
            *a += scale * x;
        }
        for (a, &x) in self.d_hidden_bias.iter_mut().zip(h) {
            *a += scale * x;
        }
    }
}

/// Exact gradient of the mean log-likelihood `(1/T) sum_t log P(v_t)`
/// (data term minus model term), binary units on both layers.
pub fn exact_gradient(params: &RbmParams, data: &Matrix) -> Result<Gradient> {
    check_tractable(params, MAX_GRADIENT_UNITS)?;
    if data.cols() != params.num_visible() {
        return Err(Error::ShapeMismatch {
            left: (data.rows(), params.num_visible()),
            right: data.shape(),
        });
    }
    check_binary_rows(data)?;
    let (nv, nh) = params.weights.shape();
    let mut grad = Gradient::zeros(nv, nh)?;

    let t = data.rows() as f64;
    for r in 0..data.rows() {
        let v = data.row(r);
        let (h, _) = hidden_given_visible(params, v, HiddenKind::BinarySigmoid, None)?;
        grad.add_outer(v, &h, 1.0 / t);
    }

    let log_z = log_partition_function(params)?;
    for bits in 0..1usize << nv {
        let v = binary_vector(bits, nv);
        let p = (-params.free_energy(&v)? - log_z).exp();
        let (h, _) = hidden_given_visible(params, &v, HiddenKind::BinarySigmoid, None)?;
        grad.add_outer(&v, &h, -p);
    }
    Ok(grad)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbmTrainConfig {
    pub num_hidden: usize,
    pub cd_k: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Momentum for the first `momentum_switch_epoch` epochs.
    pub momentum: f64,
    /// Momentum afterwards.
    pub final_momentum: f64,
    pub momentum_switch_epoch: usize,
    pub weight_decay: f64,
    /// 1 = standard CD from the data; more = that many persistent chains.
    pub num_chains: usize,
    pub hidden_unit_kind: HiddenKind,
    pub negative_visible: NegativeVisible,
    pub init_weight_sigma: f64,
    /// Rows per mini-batch; 0 = the whole data set.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for RbmTrainConfig {
    fn default() -> Self {
        Self {
            num_hidden: 500,
            cd_k: 1,
            epochs: 10,
            learning_rate: 0.001,
            momentum: 0.5,
            final_momentum: 0.9,
            momentum_switch_epoch: 5,
            weight_decay: 0.0002,
            num_chains: 1,
            hidden_unit_kind: HiddenKind::LinearGaussian,
            negative_visible: NegativeVisible::Mean,
            init_weight_sigma: 0.1,
            batch_size: 100,
            seed: 0,
        }
    }
}

impl RbmTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.num_hidden < 1 {
            return bad("num_hidden must be >= 1");
        }
        if self.cd_k < 1 {
            return bad("cd_k must be >= 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if self.num_chains < 1 {
            return bad("num_chains must be >= 1");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be finite and >= 0");
        }
        for m in [self.momentum, self.final_momentum] {
            if !(0.0..1.0).contains(&m) {
                return bad("momentum must lie in [0, 1)");
            }
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be >= 0");
        }
        if !(self.init_weight_sigma > 0.0) {
            return bad("init_weight_sigma must be > 0");
        }
        Ok(())
    }

    pub fn momentum_at(&self, epoch: usize) -> f64 {
        if epoch < self.momentum_switch_epoch {
            self.momentum
        } else {
            self.final_momentum
        }
    }
}

/// Mutable training state carried between `cd_update` calls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdState {
    pub velocity: Gradient,
    /// Persistent negative chains (visible states), used when `num_chains > 1`.
    pub chains: Vec<Vec<f64>>,
    /// Current epoch, selects the momentum.
    pub epoch: usize,
}

impl CdState {
    pub fn new(params: &RbmParams) -> Result<Self> {
        Ok(Self {
            velocity: Gradient::zeros(params.num_visible(), params.num_hidden())?,
            chains: Vec::new(),
            epoch: 0,
        })
    }
}

/// Runs `steps` Gibbs steps starting from hidden sample `h`, returning the
/// final visible state and its hidden mean.
fn run_chain(
    params: &RbmParams,
    mut h: Vec<f64>,
    steps: usize,
    cfg: &RbmTrainConfig,
    rng: &mut Option<&mut RngStream>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = Vec::new();
    for step in 0..steps {
        let (v_mean, v_sample) = visible_given_hidden(params, &h, rng.as_deref_mut())?;
        v = match cfg.negative_visible {
            NegativeVisible::Mean => v_mean,
            NegativeVisible::Sample => v_sample,
        };
        if step + 1 < steps {
            h = hidden_given_visible(params, &v, cfg.hidden_unit_kind, rng.as_deref_mut())?.1;
        }
    }
    let (h_mean, _) = hidden_given_visible(params, &v, cfg.hidden_unit_kind, None)?;
    Ok((v, h_mean))
}

/// One contrastive-divergence update on `batch` (rows are visible vectors).
///
/// Positive statistics use the hidden means given the data. With
/// `num_chains == 1` every batch row starts its own CD-k chain from the
/// positive-phase hidden sample; otherwise `num_chains` persistent chains
/// stored in `state` are advanced `cd_k` steps each. The update is
///
/// ```text
/// vel = momentum * vel + lr * ((pos - neg) - decay * W)     (no decay on biases)
/// ```
///
/// `rng = None` runs every conditional at its mean.
pub fn cd_update(
    params: &mut RbmParams,
    batch: &Matrix,
    cfg: &RbmTrainConfig,
    state: &mut CdState,
    mut rng: Option<&mut RngStream>,
) -> Result<()> {
    if batch.cols() != params.num_visible() {
        return Err(Error::ShapeMismatch {
            left: (batch.rows(), params.num_visible()),
            right: batch.shape(),
        });
    }
    let (nv, nh) = params.weights.shape();
    let n = batch.rows() as f64;
    let mut grad = Gradient::zeros(nv, nh)?;

    let mut positive_samples = Vec::with_capacity(batch.rows());
    for r in 0..batch.rows() {
        let v0 = batch.row(r);
        let (h_mean, h_sample) =
            hidden_given_visible(params, v0, cfg.hidden_unit_kind, rng.as_deref_mut())?;
        grad.add_outer(v0, &h_mean, 1.0 / n);
        positive_samples.push(h_sample);
    }

    if cfg.num_chains == 1 {
        for h0 in positive_samples {
            let (v, h) = run_chain(params, h0, cfg.cd_k, cfg, &mut rng)?;
            grad.add_outer(&v, &h, -1.0 / n);
        }
    } else {
        if state.chains.len() != cfg.num_chains {
            state.chains = (0..cfg.num_chains)
                .map(|m| batch.row(m % batch.rows()).to_vec())
                .collect();
        }
        let m = cfg.num_chains as f64;
        for chain in state.chains.iter_mut() {
            let (_, h0) =
                hidden_given_visible(params, chain, cfg.hidden_unit_kind, rng.as_deref_mut())?;
            let (v, h) = run_chain(params, h0, cfg.cd_k, cfg, &mut rng)?;
            grad.add_outer(&v, &h, -1.0 / m);
            *chain = v;
        }
    }

    let momentum = cfg.momentum_at(state.epoch);
    let lr = cfg.learning_rate;
    {
        let w = params.weights.as_slice().to_vec();
        let vel = state.velocity.d_weights.values_mut();
        for ((vw, g), wv) in vel.iter_mut().zip(grad.d_weights.as_slice()).zip(&w) {
            *vw = momentum * *vw + lr * (g - cfg.weight_decay * wv);
        }
    }
    for (vb, g) in state
        .velocity
        .d_visible_bias
        .iter_mut()
        .zip(&grad.d_visible_bias)
    {
        *vb = momentum * *vb + lr * g;
    }
    for (vc, g) in state
        .velocity
        .d_hidden_bias
        .iter_mut()
        .zip(&grad.d_hidden_bias)
    {
        *vc = momentum * *vc + lr * g;
    }

    for (w, dv) in params
        .weights
        .values_mut()
        .iter_mut()
        .zip(state.velocity.d_weights.as_slice())
    {
        *w += dv;
    }
    for (b, dv) in params.visible_bias.iter_mut().zip(&state.velocity.d_visible_bias) {
        *b += dv;
    }
    for (c, dv) in params.hidden_bias.iter_mut().zip(&state.velocity.d_hidden_bias) {
        *c += dv;
    }
    params.validate()
}

/// One up-down pass per row: hidden sample, then visible means.
pub fn reconstruct(
    params: &RbmParams,
    data: &Matrix,
    kind: HiddenKind,
    rng: &mut RngStream,
) -> Result<Matrix> {
    if data.cols() != params.num_visible() {
        return Err(Error::ShapeMismatch {
            left: (data.rows(), params.num_visible()),
            right: data.shape(),
        });
    }
    let mut out = Vec::with_capacity(data.len());
    for r in 0..data.rows() {
        let (_, h) = hidden_given_visible(params, data.row(r), kind, Some(rng))?;
        let (v_mean, _) = visible_given_hidden(params, &h, None)?;
        out.extend(v_mean);
    }
    Matrix::new(data.rows(), data.cols(), out)
}

/// Summed squared difference between the data and its one-pass reconstruction.
pub fn rbm_reconstruction_error(
    params: &RbmParams,
    data: &Matrix,
    kind: HiddenKind,
    rng: &mut RngStream,
) -> Result<f64> {
    let recon = reconstruct(params, data, kind, rng)?;
    crate::metrics::metric_sse(data, &recon)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedRbm {
    pub params: RbmParams,
    /// Reconstruction error before any update.
    pub initial_error: f64,
    /// Reconstruction error after each epoch.
    pub error_history: Vec<f64>,
}

impl TrainedRbm {
    /// Reconstruction of `data` with the stream used for the final history entry.
    pub fn final_reconstruction(&self, data: &Matrix, cfg: &RbmTrainConfig) -> Result<Matrix> {
        let mut rng = RngStream::new(cfg.seed, eval_stream(self.error_history.len()));
        reconstruct(&self.params, data, cfg.hidden_unit_kind, &mut rng)
    }
}

/// Trains on the rows of `data` (values in `[0, 1]`).
pub fn train_rbm(data: &Matrix, cfg: &RbmTrainConfig) -> Result<TrainedRbm> {
    cfg.validate()?;
    if let Some((index, &value)) = data
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::OutOfRange { index, value });
    }
    let nv = data.cols();
    let mut params = RbmParams::random(
        nv,
        cfg.num_hidden,
        cfg.init_weight_sigma,
        &mut RngStream::new(cfg.seed, INIT_STREAM),
    )?;
    let initial_error = rbm_reconstruction_error(
        &params,
        data,
        cfg.hidden_unit_kind,
        &mut RngStream::new(cfg.seed, eval_stream(0)),
    )?;

    let batch_size = if cfg.batch_size == 0 {
        data.rows()
    } else {
        cfg.batch_size.min(data.rows())
    };
    let batches: Vec<Matrix> = (0..data.rows())
        .step_by(batch_size)
        .map(|start| {
            let end = (start + batch_size).min(data.rows());
            Matrix::new(
                end - start,
                nv,
                data.as_slice()[start * nv..end * nv].to_vec(),
            )
        })
        .collect::<Result<_>>()?;

    let mut state = CdState::new(&params)?;
    let mut error_history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        state.epoch = epoch;
        let mut rng = RngStream::new(cfg.seed, train_stream(epoch));
        for batch in &batches {
            cd_update(&mut params, batch, cfg, &mut state, Some(&mut rng))?;
        }
        let mut eval = RngStream::new(cfg.seed, eval_stream(epoch + 1));
        error_history.push(rbm_reconstruction_error(
            &params,
            data,
            cfg.hidden_unit_kind,
            &mut eval,
        )?);
    }
    Ok(TrainedRbm {
        params,
        initial_error,
        error_history,
    })
}

const SNAPSHOT_FORMAT: &str = "rbm-params-v1";
const SNAPSHOT_MAGIC: &[u8; 4] = b"RBMP";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    nv: usize,
    nh: usize,
    weights: Vec<f64>,
    visible_bias: Vec<f64>,
    hidden_bias: Vec<f64>,
}

impl RbmParams {
    /// Flat JSON snapshot: `{format, nv, nh, weights (row-major), visible_bias, hidden_bias}`.
    pub fn to_json(&self) -> Result<String> {
        let snap = Snapshot {
            format: SNAPSHOT_FORMAT.into(),
            nv: self.num_visible(),
            nh: self.num_hidden(),
            weights: self.weights.as_slice().to_vec(),
            visible_bias: self.visible_bias.clone(),
            hidden_bias: self.hidden_bias.clone(),
        };
        serde_json::to_string_pretty(&snap).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(Error::UnsupportedFormat(snap.format));
        }
        Self::new(
            Matrix::new(snap.nv, snap.nh, snap.weights)?,
            snap.visible_bias,
            snap.hidden_bias,
        )
    }

    /// Flat little-endian binary snapshot:
    /// `b"RBMP"`, `u32` version, `u64 nv`, `u64 nh`, then `nv*nh` weights
    /// (row-major), `nv` visible biases and `nh` hidden biases as `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (nv, nh) = self.weights.shape();
        let mut out = Vec::with_capacity(24 + 8 * (nv * nh + nv + nh));
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&(nv as u64).to_le_bytes());
        out.extend_from_slice(&(nh as u64).to_le_bytes());
        let values = self
            .weights
            .as_slice()
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias);
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let truncated = || Error::Parse("truncated RBM snapshot".into());
        if bytes.len() < 24 {
            return Err(truncated());
        }
        if &bytes[..4] != SNAPSHOT_MAGIC {
            return Err(Error::UnsupportedFormat("bad snapshot magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != SNAPSHOT_VERSION {
            return Err(Error::UnsupportedFormat(format!("snapshot version {version}")));
        }
        let nv = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let nh = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
        let count = nv
            .checked_mul(nh)
            .and_then(|w| w.checked_add(nv + nh))
            .ok_or_else(truncated)?;
        let payload = &bytes[24..];
        if payload.len() != count * 8 {
            return Err(truncated());
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let (w, rest) = values.split_at(nv * nh);
        let (vb, hb) = rest.split_at(nv);
        Self::new(Matrix::new(nv, nh, w.to_vec())?, vb.to_vec(), hb.to_vec())
    }
}
