use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use msm_core::dataio::{self, DialectSample, ImageFormat, Polarity};
use msm_core::harness::{self, HarnessConfig};
use msm_core::metrics::Metric;
use msm_core::msm::{self, MsmConfig, MsmNoise};
use msm_core::rbm::{self, HiddenKind, RbmTrainConfig};
use msm_core::{verify, Error, Result};

#[derive(Parser)]
#[command(name = "msm", version, about = "Mode synthesizing machine and RBM reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    DarkOnLight,
    LightOnDark,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Self {
        match p {
            PolarityArg::DarkOnLight => Polarity::DarkOnLight,
            PolarityArg::LightOnDark => Polarity::LightOnDark,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    SampleStats,
    Zero,
}

impl From<NoiseArg> for MsmNoise {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::SampleStats => MsmNoise::SampleStats,
            NoiseArg::Zero => MsmNoise::Zero,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum HiddenArg {
    LinearGaussian,
    BinarySigmoid,
}

impl From<HiddenArg> for HiddenKind {
    fn from(h: HiddenArg) -> Self {
        match h {
            HiddenArg::LinearGaussian => HiddenKind::LinearGaussian,
            HiddenArg::BinarySigmoid => HiddenKind::BinarySigmoid,
        }
    }
}

#[derive(clap::Args)]
struct ExperimentArgs {
    /// CD levels (RBM Gibbs steps / MSM epochs).
    #[arg(long, value_delimiter = ',', default_value = "1,500")]
    cd: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory for reconstruction CSVs and display images.
    #[arg(long)]
    dump_images: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    /// RBM training epochs per trial.
    #[arg(long, default_value_t = 1)]
    rbm_epochs: usize,
    #[arg(long, value_enum, default_value = "sample-stats")]
    msm_noise: NoiseArg,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "dark-on-light")]
    polarity: PolarityArg,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic stroke glyphs as binary PGM files.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 28)]
        side: usize,
        #[arg(long, default_value_t = 2)]
        min_strokes: usize,
        #[arg(long, default_value_t = 5)]
        max_strokes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Crop an image to its foreground bounding box.
    Roi {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "dark-on-light")]
        polarity: PolarityArg,
    },
    /// Train the MSM on one image.
    TrainMsm {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        epochs: usize,
        #[arg(long, default_value_t = 2)]
        quant_decimals: u32,
        #[arg(long, value_enum, default_value = "sample-stats")]
        noise: NoiseArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an RBM on the rows of one image.
    TrainRbm {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 500)]
        hidden: usize,
        #[arg(long, default_value_t = 1)]
        cd_k: usize,
        #[arg(long, default_value_t = 1)]
        epochs: usize,
        #[arg(long, default_value_t = 0.001)]
        lr: f64,
        #[arg(long, default_value_t = 0.5)]
        momentum: f64,
        #[arg(long, default_value_t = 0.0002)]
        decay: f64,
        #[arg(long, value_enum, default_value = "linear-gaussian")]
        hidden_kind: HiddenArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Single-glyph experiment.
    Approach1 {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Concatenated multi-glyph experiment.
    Approach2 {
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Run the oracle self-checks.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes") + "\n"
}

fn sample_from(path: &Path) -> Result<DialectSample> {
    let image = dataio::load_image_auto(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "input".into());
    DialectSample::new(label, image, path.display().to_string())
}

fn harness_config(exp: &ExperimentArgs) -> HarnessConfig {
    let mut cfg = HarnessConfig {
        roi_threshold: exp.threshold,
        polarity: exp.polarity.into(),
        dump_dir: exp.dump_images.clone(),
        ..HarnessConfig::default()
    };
    cfg.rbm.num_hidden = exp.hidden;
    cfg.rbm.epochs = exp.rbm_epochs;
    cfg.msm.noise_mode = exp.msm_noise.into();
    cfg
}

fn finish_report(report: &harness::ExperimentReport, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            harness::emit_report(report, p)?;
            eprintln!("digest {}", harness::determinism_digest(report)?);
        }
        None => print!("{}", harness::to_canonical_json(report)?),
    }
    for row in &report.rows {
        for e in &row.errors {
            eprintln!("warning: {:?} cd {}: {e}", row.model, row.cd_level);
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Gen {
            seed,
            count,
            side,
            min_strokes,
            max_strokes,
            out,
        } => {
            let glyphs = dataio::synth_glyphs(seed, count, side, (min_strokes, max_strokes))?;
            create_dir(&out)?;
            for g in &glyphs {
                let path = out.join(format!("{}.pgm", g.label));
                dataio::save_image(&g.image, &path, ImageFormat::PgmBinary)?;
                println!("{}", path.display());
            }
        }
        Command::Roi {
            input,
            out,
            threshold,
            polarity,
        } => {
            let image = dataio::load_image_auto(&input)?;
            let roi = dataio::roi_extract(&image, threshold, polarity.into())?;
            dataio::save_image(&roi, &out, ImageFormat::from_path(&out)?)?;
            println!("{}x{}", roi.width(), roi.height());
        }
        Command::TrainMsm {
            input,
            epochs,
            quant_decimals,
            noise,
            seed,
            out,
        } => {
            let data = dataio::load_image_auto(&input)?.to_matrix();
            let cfg = MsmConfig {
                epochs,
                quant_decimals,
                noise_mode: noise.into(),
                seed,
                ..MsmConfig::default()
            };
            let state = msm::train(&data, &cfg)?;
            create_dir(&out)?;
            dataio::write_matrix_csv(state.reconstruction()?, &out.join("reconstruction.csv"))?;
            dataio::write_matrix_csv(state.stage2()?, &out.join("stage2.csv"))?;
            let summary = serde_json::json!({
                "config": cfg,
                "error_history": state.error_history,
                "sse": msm::reconstruction_error(&state, Metric::Sse)?,
                "mae": msm::reconstruction_error(&state, Metric::Mae)?,
            });
            write_text(&out.join("summary.json"), &pretty(&summary))?;
            print!("{}", pretty(&summary));
        }
        Command::TrainRbm {
            input,
            hidden,
            cd_k,
            epochs,
            lr,
            momentum,
            decay,
            hidden_kind,
            seed,
            out,
        } => {
            let data = dataio::load_image_auto(&input)?.to_matrix();
            let cfg = RbmTrainConfig {
                num_hidden: hidden,
                cd_k,
                epochs,
                learning_rate: lr,
                momentum,
                weight_decay: decay,
                hidden_unit_kind: hidden_kind.into(),
                seed,
                ..RbmTrainConfig::default()
            };
            let trained = rbm::train_rbm(&data, &cfg)?;
            let recon = trained.final_reconstruction(&data, &cfg)?;
            create_dir(&out)?;
            write_text(&out.join("params.json"), &trained.params.to_json()?)?;
            dataio::write_matrix_csv(&recon, &out.join("reconstruction.csv"))?;
            let summary = serde_json::json!({
                "config": cfg,
                "initial_error": trained.initial_error,
                "error_history": trained.error_history,
                "sse": msm_core::metrics::metric_sse(&recon, &data)?,
                "mae": msm_core::metrics::metric_mae(&recon, &data)?,
            });
            write_text(&out.join("summary.json"), &pretty(&summary))?;
            print!("{}", pretty(&summary));
        }
        Command::Approach1 { input, exp } => {
            let sample = sample_from(&input)?;
            let report = harness::run_approach1(&sample, &exp.cd, exp.trials, exp.seed, &harness_config(&exp))?;
            finish_report(&report, exp.report.as_deref())?;
        }
        Command::Approach2 { inputs, exp } => {
            let samples = inputs.iter().map(|p| sample_from(p)).collect::<Result<Vec<_>>>()?;
            let report = harness::run_approach2(&samples, &exp.cd, exp.trials, exp.seed, &harness_config(&exp))?;
            finish_report(&report, exp.report.as_deref())?;
        }
        Command::Verify => {
            let outcomes = verify::run_all();
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            if outcomes.iter().any(|o| !o.passed) {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
