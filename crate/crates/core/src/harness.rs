//! Reconstruction experiments: single glyph (approach one) and a
//! concatenated glyph sequence (approach two), each run for the MSM and the
//! RBM at a set of CD levels with at least two seeded trials.
//!
//! CD level `L` means `cd_k = L` Gibbs steps for the RBM and `L` synthesis
//! epochs for the MSM; every row records which mapping it used.
//!
//! Reports serialize to canonical JSON: keys sorted, integers verbatim,
//! floats in scientific notation with 17 significant digits.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::dataio::{self, DialectSample, ImageFormat, ImageGray, Polarity};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{metric_mae, metric_sse};
use crate::msm::{self, MsmConfig};
use crate::rbm::{self, RbmTrainConfig};
use crate::rng::ALGORITHM_ID;

/// Trials per cell must be at least this many.
pub const MIN_TRIALS: usize = 2;
pub const SCHEMA_ID: &str = "msm-experiment-report/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Rbm,
    Msm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdMapping {
    GibbsSteps,
    Epochs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialArtifact {
    pub trial: usize,
    pub reconstruction_csv: String,
    pub target_csv: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: ModelKind,
    pub cd_level: usize,
    pub cd_mapping: CdMapping,
    /// Mean of `per_trial_sse`; `None` if every trial failed.
    pub metric_sse: Option<f64>,
    /// Mean of `per_trial_mae`; `None` if every trial failed.
    pub metric_mae: Option<f64>,
    /// Requested trials.
    pub trials: usize,
    pub per_trial_sse: Vec<f64>,
    pub per_trial_mae: Vec<f64>,
    pub per_trial_seeds: Vec<u64>,
    pub seed: u64,
    pub runtime_ms: u64,
    pub errors: Vec<String>,
    pub artifacts: Vec<TrialArtifact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub approach: Approach,
    pub input: InputSummary,
    pub rows: Vec<ReportRow>,
    pub config_echo: Value,
    pub artifact_paths: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    /// Template: `epochs` and `seed` are set per level and trial.
    pub msm: MsmConfig,
    /// Template: `cd_k` and `seed` are set per level and trial.
    pub rbm: RbmTrainConfig,
    pub roi_threshold: f64,
    pub polarity: Polarity,
    /// Where reconstructions are written; `None` disables dumps.
    #[serde(skip)]
    pub dump_dir: Option<PathBuf>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            msm: MsmConfig::default(),
            rbm: RbmTrainConfig {
                num_hidden: 64,
                ..RbmTrainConfig::default()
            },
            roi_threshold: dataio::DEFAULT_THRESHOLD,
            polarity: Polarity::DarkOnLight,
            dump_dir: None,
        }
    }
}

impl HarnessConfig {
    /// Hidden-layer size used in the published protocol.
    pub fn with_full_size_rbm(mut self) -> Self {
        self.rbm.num_hidden = 500;
        self
    }
}

fn normalize_levels(cd_levels: &[usize]) -> Result<Vec<usize>> {
    let levels: BTreeSet<usize> = cd_levels.iter().copied().collect();
    if levels.is_empty() {
        return Err(Error::InvalidConfig("at least one CD level is required".into()));
    }
    if levels.contains(&0) {
        return Err(Error::InvalidConfig("CD levels must be >= 1".into()));
    }
    Ok(levels.into_iter().collect())
}

struct TrialOutput {
    reconstruction: Matrix,
    target: Matrix,
    display: Vec<(&'static str, ImageGray)>,
}

fn run_msm_trial(data: &Matrix, cfg: &MsmConfig) -> Result<TrialOutput> {
    let state = msm::train(data, cfg)?;
    let reconstruction = state.reconstruction()?.clone();
    let target = state.stage2()?.clone();
    let inverse = msm::stage1_inverse(&reconstruction)?.map(|x| x.clamp(0.0, 1.0))?;
    Ok(TrialOutput {
        display: vec![
            ("recon", dataio::matrix_to_display_image(&reconstruction)),
            ("recon_inverse", ImageGray::from_matrix(&inverse)?),
        ],
        reconstruction,
        target,
    })
}

fn run_rbm_trial(data: &Matrix, cfg: &RbmTrainConfig) -> Result<TrialOutput> {
    let trained = rbm::train_rbm(data, cfg)?;
    let reconstruction = trained.final_reconstruction(data, cfg)?;
    Ok(TrialOutput {
        display: vec![("recon", ImageGray::from_matrix(&reconstruction)?)],
        reconstruction,
        target: data.clone(),
    })
}

fn approach_tag(a: Approach) -> &'static str {
    match a {
        Approach::One => "approach1",
        Approach::Two => "approach2",
    }
}

fn model_tag(m: ModelKind) -> &'static str {
    match m {
        ModelKind::Rbm => "rbm",
        ModelKind::Msm => "msm",
    }
}

fn run_protocol(
    approach: Approach,
    image: &ImageGray,
    labels: Vec<String>,
    cd_levels: &[usize],
    trials: usize,
    seed: u64,
    cfg: &HarnessConfig,
) -> Result<ExperimentReport> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidConfig(format!(
            "trials must be >= {MIN_TRIALS}, got {trials}"
        )));
    }
    let levels = normalize_levels(cd_levels)?;
    cfg.msm.validate()?;
    cfg.rbm.validate()?;
    let data = image.to_matrix();

    let mut artifact_paths = Vec::new();
    let prefix = approach_tag(approach);
    if let Some(dir) = &cfg.dump_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(format!("{prefix}_input.pgm"));
        dataio::save_image(image, &path, ImageFormat::PgmBinary)?;
        artifact_paths.push(path.display().to_string());
    }

    let mut rows = Vec::new();
    for model in [ModelKind::Rbm, ModelKind::Msm] {
        for &level in &levels {
            let started = Instant::now();
            let mut row = ReportRow {
                model,
                cd_level: level,
                cd_mapping: match model {
                    ModelKind::Rbm => CdMapping::GibbsSteps,
                    ModelKind::Msm => CdMapping::Epochs,
                },
                metric_sse: None,
                metric_mae: None,
                trials,
                per_trial_sse: Vec::new(),
                per_trial_mae: Vec::new(),
                per_trial_seeds: Vec::new(),
                seed,
                runtime_ms: 0,
                errors: Vec::new(),
                artifacts: Vec::new(),
            };
            for trial in 0..trials {
                let trial_seed = seed.wrapping_add(trial as u64);
                let outcome = match model {
                    ModelKind::Rbm => run_rbm_trial(
                        &data,
                        &RbmTrainConfig {
                            cd_k: level,
                            seed: trial_seed,
                            ..cfg.rbm.clone()
                        },
                    ),
                    ModelKind::Msm => run_msm_trial(
                        &data,
                        &MsmConfig {
                            epochs: level,
                            seed: trial_seed,
                            ..cfg.msm.clone()
                        },
                    ),
                };
                let out = match outcome.and_then(|o| {
                    let sse = metric_sse(&o.reconstruction, &o.target)?;
                    let mae = metric_mae(&o.reconstruction, &o.target)?;
                    Ok((o, sse, mae))
                }) {
                    Ok(v) => v,
                    Err(e) => {
                        row.errors.push(format!("trial {trial}: {e}"));
                        continue;
                    }
                };
                let (o, sse, mae) = out;
                row.per_trial_sse.push(sse);
                row.per_trial_mae.push(mae);
                row.per_trial_seeds.push(trial_seed);

                if let Some(dir) = &cfg.dump_dir {
                    let stem = format!("{prefix}_{}_cd{level}_t{trial}", model_tag(model));
                    let recon_csv = dir.join(format!("{stem}_recon.csv"));
                    let target_csv = dir.join(format!("{stem}_target.csv"));
                    dataio::write_matrix_csv(&o.reconstruction, &recon_csv)?;
                    dataio::write_matrix_csv(&o.target, &target_csv)?;
                    for (suffix, img) in &o.display {
                        let p = dir.join(format!("{stem}_{suffix}.pgm"));
                        dataio::save_image(img, &p, ImageFormat::PgmBinary)?;
                        artifact_paths.push(p.display().to_string());
                    }
                    artifact_paths.push(recon_csv.display().to_string());
                    artifact_paths.push(target_csv.display().to_string());
                    row.artifacts.push(TrialArtifact {
                        trial,
                        reconstruction_csv: recon_csv.display().to_string(),
                        target_csv: target_csv.display().to_string(),
                    });
                }
            }
            if !row.per_trial_sse.is_empty() {
                let n = row.per_trial_sse.len() as f64;
                row.metric_sse = Some(row.per_trial_sse.iter().sum::<f64>() / n);
                row.metric_mae = Some(row.per_trial_mae.iter().sum::<f64>() / n);
            }
            row.runtime_ms = started.elapsed().as_millis() as u64;
            rows.push(row);
        }
    }

    let config_echo = serde_json::json!({
        "msm": cfg.msm,
        "rbm": cfg.rbm,
        "roi_threshold": cfg.roi_threshold,
        "polarity": cfg.polarity,
        "cd_levels": levels,
        "trials": trials,
        "seed": seed,
        "rng_algorithm": ALGORITHM_ID,
        "trial_seed_rule": "seed + trial_index",
        "rbm_data_layout": "image rows are training cases",
        "msm_target": "stage2 activations",
        "rbm_target": "input pixels",
    });

    Ok(ExperimentReport {
        schema: SCHEMA_ID.into(),
        approach,
        input: InputSummary {
            width: image.width(),
            height: image.height(),
            labels,
        },
        rows,
        config_echo,
        artifact_paths,
    })
}

/// Single glyph: crop to its region of interest, then run both models.
pub fn run_approach1(
    input: &DialectSample,
    cd_levels: &[usize],
    trials: usize,
    seed: u64,
    cfg: &HarnessConfig,
) -> Result<ExperimentReport> {
    let roi = dataio::roi_extract(&input.image, cfg.roi_threshold, cfg.polarity)?;
    run_protocol(
        Approach::One,
        &roi,
        vec![input.label.clone()],
        cd_levels,
        trials,
        seed,
        cfg,
    )
}

/// Several glyphs: crop each, concatenate left to right, then run both models.
pub fn run_approach2(
    inputs: &[DialectSample],
    cd_levels: &[usize],
    trials: usize,
    seed: u64,
    cfg: &HarnessConfig,
) -> Result<ExperimentReport> {
    if inputs.len() < 2 {
        return Err(Error::InsufficientSamples(inputs.len()));
    }
    let cropped: Vec<DialectSample> = inputs
        .iter()
        .map(|s| {
            Ok(DialectSample {
                image: dataio::roi_extract(&s.image, cfg.roi_threshold, cfg.polarity)?,
                ..s.clone()
            })
        })
        .collect::<Result<_>>()?;
    let mixed = dataio::concat_sequence(&cropped)?;
    run_protocol(
        Approach::Two,
        &mixed,
        inputs.iter().map(|s| s.label.clone()).collect(),
        cd_levels,
        trials,
        seed,
        cfg,
    )
}

fn check_finite(report: &ExperimentReport) -> Result<()> {
    for (i, row) in report.rows.iter().enumerate() {
        let aggregates = [("metric_sse", row.metric_sse), ("metric_mae", row.metric_mae)];
        for (name, v) in aggregates {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(Error::NonFiniteMetric(format!("rows[{i}].{name}")));
            }
        }
        for (name, vals) in [("per_trial_sse", &row.per_trial_sse), ("per_trial_mae", &row.per_trial_mae)] {
            if let Some(j) = vals.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteMetric(format!("rows[{i}].{name}[{j}]")));
            }
        }
    }
    Ok(())
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").expect("write to String");
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").expect("write to String");
            } else {
                let f = n.as_f64().expect("serde_json numbers are u64, i64 or f64");
                write!(out, "{f:.16e}").expect("write to String");
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings always serialize"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("strings always serialize"));
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
    }
}

/// Canonical JSON text of a report. Refuses non-finite metrics.
pub fn to_canonical_json(report: &ExperimentReport) -> Result<String> {
    check_finite(report)?;
    let value = serde_json::to_value(report).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = String::new();
    write_canonical(&value, &mut out);
    out.push('\n');
    Ok(out)
}

/// SHA-256 of the canonical JSON with every `runtime_ms` zeroed.
pub fn determinism_digest(report: &ExperimentReport) -> Result<String> {
    let mut r = report.clone();
    for row in &mut r.rows {
        row.runtime_ms = 0;
    }
    let text = to_canonical_json(&r)?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn emit_report(report: &ExperimentReport, out_path: &Path) -> Result<()> {
    let text = to_canonical_json(report)?;
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(out_path, text).map_err(|e| Error::io(out_path, e))
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
}

/// JSON Schema the canonical report conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Clone, Debug, PartialEq)]
pub struct AuditFinding {
    pub row: usize,
    pub trial: usize,
    pub message: String,
}

/// Recomputes every persisted trial's metrics from its CSV dumps and checks
/// them against the report (absolute tolerance `tol`), as well as the
/// row aggregates against the per-trial values.
pub fn audit_report(report: &ExperimentReport, tol: f64) -> Result<Vec<AuditFinding>> {
    let mut findings = Vec::new();
    for (i, row) in report.rows.iter().enumerate() {
        if !row.per_trial_sse.is_empty() {
            let n = row.per_trial_sse.len() as f64;
            let sse = row.per_trial_sse.iter().sum::<f64>() / n;
            let mae = row.per_trial_mae.iter().sum::<f64>() / n;
            let agg_ok = row.metric_sse.is_some_and(|x| (x - sse).abs() <= 1e-12 * x.abs().max(1.0))
                && row.metric_mae.is_some_and(|x| (x - mae).abs() <= 1e-12 * x.abs().max(1.0));
            if !agg_ok {
                findings.push(AuditFinding {
                    row: i,
                    trial: usize::MAX,
                    message: "aggregate differs from per-trial mean".into(),
                });
            }
        }
        for (k, art) in row.artifacts.iter().enumerate() {
            let recon = dataio::read_matrix_csv(Path::new(&art.reconstruction_csv))?;
            let target = dataio::read_matrix_csv(Path::new(&art.target_csv))?;
            let sse = metric_sse(&recon, &target)?;
            let mae = metric_mae(&recon, &target)?;
            if (sse - row.per_trial_sse[k]).abs() > tol || (mae - row.per_trial_mae[k]).abs() > tol {
                findings.push(AuditFinding {
                    row: i,
                    trial: art.trial,
                    message: format!(
                        "recomputed sse {sse} / mae {mae} vs reported {} / {}",
                        row.per_trial_sse[k], row.per_trial_mae[k]
                    ),
                });
            }
        }
    }
    Ok(findings)
}
