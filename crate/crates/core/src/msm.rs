//! Mode Synthesizing Machine.
//!
//! The machine has no learned parameters. A run consists of
//!
//! 1. an affine stage `y = 0.2 (1 + x) + 0.5 (1 - x)` mapping `[0, 1]` onto `[0.4, 0.7]`,
//! 2. a modified-ReLU activation of the whole stage-1 matrix ([`crate::mrelu`]),
//! 3. mean/std of the input (or of the activations, see [`StatsSource`]),
//! 4. `epochs` synthesis passes. Each pass works column by column: the
//!    column's quantized mode is found, a candidate column of random units
//!    `mean + std * u` with `u ~ U{0..row}` (1-based row) is drawn, the mode
//!    is written over every position where it occurs, the column is
//!    permuted by a Fisher-Yates pass, and the signed (`err_first`) and
//!    absolute (`err_second`) differences against the activations are
//!    stored. The summed absolute error of the pass is appended to
//!    `error_history`.
//!
//! Errors are recomputed from scratch every epoch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::Metric;
use crate::mrelu::{self, CutoffMode, MreluConfig, NoiseMode};
use crate::rng::RngStream;
use crate::stats::{self, DataStats, DivisorConvention, DEFAULT_QUANT_DECIMALS};

/// Stream id used for the stage-2 activation noise.
pub const STAGE2_STREAM: u64 = 0;

/// Stream id used by synthesis epoch `epoch` (0-based).
pub fn epoch_stream(epoch: usize) -> u64 {
    1 + epoch as u64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MsmNoise {
    #[default]
    SampleStats,
    Zero,
}

impl From<MsmNoise> for NoiseMode {
    fn from(n: MsmNoise) -> Self {
        match n {
            MsmNoise::SampleStats => NoiseMode::SampleStats,
            MsmNoise::Zero => NoiseMode::Zero,
        }
    }
}

/// Which matrix the random-unit mean and std are taken from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsSource {
    #[default]
    RawInput,
    Stage2Activations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsmConfig {
    pub epochs: usize,
    pub quant_decimals: u32,
    pub noise_mode: MsmNoise,
    pub stats_source: StatsSource,
    pub sparsity_exponent: u32,
    pub divisor: DivisorConvention,
    pub seed: u64,
}

impl Default for MsmConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            quant_decimals: DEFAULT_QUANT_DECIMALS,
            noise_mode: MsmNoise::SampleStats,
            stats_source: StatsSource::RawInput,
            sparsity_exponent: 1,
            divisor: DivisorConvention::Sample,
            seed: 0,
        }
    }
}

impl MsmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.quant_decimals > stats::MAX_QUANT_DECIMALS {
            return Err(Error::InvalidConfig(format!(
                "quant_decimals {} > {}",
                self.quant_decimals,
                stats::MAX_QUANT_DECIMALS
            )));
        }
        self.mrelu_config().validate()
    }

    pub fn mrelu_config(&self) -> MreluConfig {
        MreluConfig {
            sparsity_exponent: self.sparsity_exponent,
            noise_mode: self.noise_mode.into(),
            cutoff_mode: CutoffMode::SampleMean,
            divisor: self.divisor,
        }
    }
}

/// Working state of one MSM run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsmState {
    pub input: Matrix,
    pub stage1: Option<Matrix>,
    pub stage2: Option<Matrix>,
    pub stats: Option<DataStats>,
    pub reconstruction: Option<Matrix>,
    pub err_first: Option<Matrix>,
    pub err_second: Option<Matrix>,
    pub error_history: Vec<f64>,
}

impl MsmState {
    pub fn new(input: Matrix) -> Self {
        Self {
            input,
            stage1: None,
            stage2: None,
            stats: None,
            reconstruction: None,
            err_first: None,
            err_second: None,
            error_history: Vec::new(),
        }
    }

    pub fn stage2(&self) -> Result<&Matrix> {
        self.stage2
            .as_ref()
            .ok_or(Error::StateNotInitialized("stage2 activations"))
    }

    pub fn reconstruction(&self) -> Result<&Matrix> {
        self.reconstruction
            .as_ref()
            .ok_or(Error::StateNotInitialized("no synthesis epoch has run"))
    }
}

fn check_unit_interval(m: &Matrix) -> Result<()> {
    match m
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        Some((index, &value)) => Err(Error::OutOfRange { index, value }),
        None => Ok(()),
    }
}

/// Stage 1: `0.2 (1 + x) + 0.5 (1 - x)`, i.e. `0.7 - 0.3 x`.
pub fn linearize_stage1(input: &Matrix) -> Result<Matrix> {
    check_unit_interval(input)?;
    input.map(|x| 0.2 * (1.0 + x) + 0.5 * (1.0 - x))
}

/// Inverse of stage 1, `x = (0.7 - y) / 0.3`. Used only for display.
pub fn stage1_inverse(m: &Matrix) -> Result<Matrix> {
    m.map(|y| (0.7 - y) / 0.3)
}

/// Stage 2: modified ReLU over the whole stage-1 matrix (row-major draw order).
pub fn activate_stage2(stage1: &Matrix, cfg: &MsmConfig, rng: &mut RngStream) -> Result<Matrix> {
    let out = mrelu::mrelu(stage1.as_slice(), &cfg.mrelu_config(), rng)?;
    Matrix::new(stage1.rows(), stage1.cols(), out)
}

/// One synthesis pass over every column, in ascending column order.
pub fn synthesize_epoch(state: &mut MsmState, cfg: &MsmConfig, rng: &mut RngStream) -> Result<()> {
    let stage2 = state.stage2()?;
    let data_stats = state
        .stats
        .ok_or(Error::StateNotInitialized("data statistics"))?;
    let (rows, cols) = stage2.shape();

    let mut recon = stage2.clone();
    let mut err_first = Matrix::zeros(rows, cols)?;
    let mut err_second = Matrix::zeros(rows, cols)?;
    let mut total = 0.0;

    for co in 0..cols {
        let target = stage2.column(co);
        let mode = stats::mode_with_indices(&target, cfg.quant_decimals)?;

        let mut candidate = Vec::with_capacity(rows);
        for ro in 1..=rows {
            let u = rng.draw_uniform_int(0, ro as i64)?;
            candidate.push(data_stats.mean + data_stats.std * u as f64);
        }
        for &i in &mode.indices {
            candidate[i] = mode.representative;
        }
        rng.shuffle_in_place(&mut candidate);

        for (r, (&c, &t)) in candidate.iter().zip(&target).enumerate() {
            let diff = c - t;
            err_first.set(r, co, diff);
            err_second.set(r, co, diff.abs());
            total += diff.abs();
        }
        recon.set_column(co, &candidate)?;
    }

    state.reconstruction = Some(recon);
    state.err_first = Some(err_first);
    state.err_second = Some(err_second);
    state.error_history.push(total);
    Ok(())
}

/// Full run: stage 1, stage 2, statistics, then `cfg.epochs` synthesis passes.
pub fn train(input: &Matrix, cfg: &MsmConfig) -> Result<MsmState> {
    cfg.validate()?;
    let mut state = MsmState::new(input.clone());
    let stage1 = linearize_stage1(input)?;
    let stage2 = activate_stage2(&stage1, cfg, &mut RngStream::new(cfg.seed, STAGE2_STREAM))?;
    let source = match cfg.stats_source {
        StatsSource::RawInput => input,
        StatsSource::Stage2Activations => &stage2,
    };
    state.stats = Some(stats::stats_lenient(source.as_slice(), cfg.divisor)?);
    state.stage1 = Some(stage1);
    state.stage2 = Some(stage2);

    for epoch in 0..cfg.epochs {
        let mut rng = RngStream::new(cfg.seed, epoch_stream(epoch));
        synthesize_epoch(&mut state, cfg, &mut rng)?;
    }
    Ok(state)
}

/// Metric between the last reconstruction and the stage-2 activations.
pub fn reconstruction_error(state: &MsmState, metric: Metric) -> Result<f64> {
    metric.eval(state.reconstruction()?, state.stage2()?)
}
