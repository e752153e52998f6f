//! Acceptance suite: one PASS/FAIL line per criterion, then a single assert.

use std::time::{Duration, Instant};

use msm_core::dataio::{self, DialectSample, ImageFormat, ImageGray, Polarity};
use msm_core::harness::{self, HarnessConfig};
use msm_core::matrix::Matrix;
use msm_core::msm::{self, MsmConfig, MsmNoise};
use msm_core::rbm::{self, CdState, HiddenKind, NegativeVisible, RbmParams, RbmTrainConfig};
use msm_core::rng::RngStream;
use msm_core::verify;

const GLYPH_SEED: u64 = 2024;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed < Duration::from_secs(limit_s)
}

fn rbm_exactness() -> Outcome {
    let t = Instant::now();
    let c = verify::check_rbm_exactness(100, 2024);
    let el = t.elapsed();
    outcome(c.passed && within(el, 30), format!("{}, {:.2?}", c.detail, el))
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn cd_sanity() -> Outcome {
    let t = Instant::now();
    let cfg = RbmTrainConfig {
        num_hidden: 2,
        cd_k: 10_000,
        learning_rate: 1.0,
        momentum: 0.0,
        final_momentum: 0.0,
        weight_decay: 0.0,
        hidden_unit_kind: HiddenKind::BinarySigmoid,
        negative_visible: NegativeVisible::Sample,
        ..RbmTrainConfig::default()
    };
    let repeats = 10;
    let mut worst = f64::INFINITY;
    for seed in 0..20u64 {
        let mut rng = RngStream::new(seed, 0);
        let w = Matrix::from_fn(3, 2, |_, _| rng.draw_gaussian(0.0, 1.0).unwrap()).unwrap();
        let b = (0..3).map(|_| rng.draw_gaussian(0.0, 1.0).unwrap()).collect();
        let c = (0..2).map(|_| rng.draw_gaussian(0.0, 1.0).unwrap()).collect();
        let params = RbmParams::new(w, b, c).unwrap();
        let data = Matrix::from_fn(4, 3, |_, _| if rng.draw_bernoulli(0.5) { 1.0 } else { 0.0 }).unwrap();
        let exact = rbm::exact_gradient(&params, &data).unwrap().flatten();

        // with lr 1 and no momentum or decay the velocity is the CD estimate
        let mut sum = vec![0.0; exact.len()];
        let mut chain_rng = RngStream::new(seed, 1);
        for _ in 0..repeats {
            let mut p = params.clone();
            let mut state = CdState::new(&p).unwrap();
            rbm::cd_update(&mut p, &data, &cfg, &mut state, Some(&mut chain_rng)).unwrap();
            for (s, d) in sum.iter_mut().zip(state.velocity.flatten()) {
                *s += d;
            }
        }
        worst = worst.min(cosine(&sum, &exact));
    }
    let el = t.elapsed();
    outcome(worst > 0.5 && within(el, 120), format!("min cosine {worst:.4} over 20 seeds, {el:.2?}"))
}

fn msm_fixed_point() -> Outcome {
    let sizes = [(1, 1), (1, 64), (64, 1), (2, 3), (7, 5), (28, 28), (64, 64)];
    let mut failed = Vec::new();
    let mut cases = 0;
    for epochs in [1, 3, 20] {
        let c = verify::check_msm_fixed_point(&sizes, epochs);
        cases += 1;
        if !c.passed {
            failed.push(format!("epochs {epochs}: {}", c.detail));
        }
    }
    match failed.first() {
        None => outcome(true, format!("{} sizes x 4 values x 2 noise modes x {cases} epoch counts", sizes.len())),
        Some(f) => outcome(false, f.clone()),
    }
}

fn msm_oracle() -> Outcome {
    let c = verify::check_msm_oracle(50, 4242);
    outcome(c.passed, c.detail)
}

fn mode_oracle() -> Outcome {
    let c = verify::check_mode_exhaustive(8);
    outcome(c.passed, c.detail)
}

fn unit_identities() -> Outcome {
    let c = verify::check_unit_identities(10_000);
    outcome(c.passed, c.detail)
}

fn glyph_fixture() -> Vec<DialectSample> {
    dataio::synth_glyphs(GLYPH_SEED, 10, 28, (2, 5)).unwrap()
}

fn msm_beats_rbm() -> Outcome {
    let t = Instant::now();
    let glyphs = glyph_fixture();
    let mut wins = 0;
    let mut noisy_wins = 0;
    for g in &glyphs {
        let mut cfg = HarnessConfig::default();
        cfg.rbm.epochs = 1;
        cfg.msm.noise_mode = MsmNoise::Zero;
        let report = harness::run_approach1(g, &[1], 2, 0, &cfg).unwrap();
        let rbm_mae = report.rows[0].metric_mae.unwrap();
        let msm_mae = report.rows[1].metric_mae.unwrap();
        if msm_mae < rbm_mae {
            wins += 1;
        }

        cfg.msm.noise_mode = MsmNoise::SampleStats;
        let noisy = harness::run_approach1(g, &[1], 2, 0, &cfg).unwrap();
        if noisy.rows[1].metric_mae.unwrap() < noisy.rows[0].metric_mae.unwrap() {
            noisy_wins += 1;
        }
    }
    let el = t.elapsed();
    outcome(
        wins >= 8 && within(el, 120),
        format!("zero-noise MSM lower MAE on {wins}/10 glyphs (sample-stats noise: {noisy_wins}/10), {el:.2?}"),
    )
}

fn histories_finite() -> Outcome {
    let mut bad = Vec::new();
    let mut entries = 0;
    for (i, g) in glyph_fixture().iter().take(4).enumerate() {
        let data = dataio::roi_extract(&g.image, 0.5, Polarity::DarkOnLight).unwrap().to_matrix();
        for noise in [MsmNoise::Zero, MsmNoise::SampleStats] {
            let cfg = MsmConfig {
                epochs: 50,
                noise_mode: noise,
                seed: i as u64,
                ..MsmConfig::default()
            };
            let state = msm::train(&data, &cfg).unwrap();
            entries += state.error_history.len();
            if !state.error_history.iter().all(|e| e.is_finite() && *e >= 0.0) {
                bad.push(format!("glyph {i} {noise:?}"));
            }
        }
        let rcfg = RbmTrainConfig {
            num_hidden: 16,
            epochs: 5,
            seed: i as u64,
            ..RbmTrainConfig::default()
        };
        let trained = rbm::train_rbm(&data, &rcfg).unwrap();
        entries += trained.error_history.len();
        if !trained.error_history.iter().all(|e| e.is_finite() && *e >= 0.0) {
            bad.push(format!("glyph {i} rbm"));
        }
    }
    outcome(bad.is_empty(), format!("{entries} history entries checked; bad: {bad:?}"))
}

fn determinism() -> Outcome {
    let glyphs = glyph_fixture();
    let cfg = HarnessConfig::default();
    let run = || {
        let reports = [
            harness::run_approach1(&glyphs[0], &[1, 500], 2, 17, &cfg).unwrap(),
            harness::run_approach2(&glyphs[..3], &[1, 500], 2, 17, &cfg).unwrap(),
        ];
        reports.map(|mut r| {
            let digest = harness::determinism_digest(&r).unwrap();
            for row in &mut r.rows {
                row.runtime_ms = 0;
            }
            (digest, harness::to_canonical_json(&r).unwrap())
        })
    };
    let first = run();
    let second = run();
    outcome(
        first == second,
        format!("approach1 {} / approach2 {}", &first[0].0[..16], &first[1].0[..16]),
    )
}

fn data_pipeline() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = RngStream::new(10, 0);
    for k in 0..50 {
        let (w, h) = (1 + rng.draw_index(30).unwrap(), 1 + rng.draw_index(30).unwrap());
        let pixels = (0..w * h).map(|_| rng.draw_index(256).unwrap() as f64 / 255.0).collect();
        let img = ImageGray::new(w, h, pixels).unwrap();
        for fmt in [ImageFormat::PgmAscii, ImageFormat::PgmBinary, ImageFormat::Csv] {
            let back = match fmt {
                ImageFormat::Csv => {
                    let text = String::from_utf8(dataio::encode_image(&img, fmt)).unwrap();
                    ImageGray::from_matrix(&dataio::parse_csv_matrix(&text).unwrap()).unwrap()
                }
                _ => dataio::parse_pgm(&dataio::encode_image(&img, fmt)).unwrap(),
            };
            if back != img {
                problems.push(format!("image {k} {fmt:?}"));
            }
        }
        let m = Matrix::from_fn(h, w, |_, _| rng.draw_gaussian(0.0, 1e3).unwrap()).unwrap();
        let back = dataio::parse_csv_matrix(&dataio::format_csv_matrix(&m)).unwrap();
        if m.as_slice().iter().zip(back.as_slice()).any(|(a, b)| a.to_bits() != b.to_bits()) {
            problems.push(format!("matrix {k} csv"));
        }
    }
    let glyphs = dataio::synth_glyphs(GLYPH_SEED, 1000, 28, (1, 5)).unwrap();
    for g in &glyphs {
        let once = dataio::roi_extract(&g.image, 0.5, Polarity::DarkOnLight).unwrap();
        if dataio::roi_extract(&once, 0.5, Polarity::DarkOnLight).unwrap() != once {
            problems.push(format!("roi {}", g.label));
        }
    }
    outcome(
        problems.is_empty(),
        format!("150 image round trips, 50 CSV matrices, 1000 ROI checks; problems: {problems:?}"),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("1 rbm exactness", rbm_exactness),
        ("2 cd sanity", cd_sanity),
        ("3 msm fixed point", msm_fixed_point),
        ("4 msm oracle equivalence", msm_oracle),
        ("5 mode oracle", mode_oracle),
        ("6 stage-1 / mrelu identities", unit_identities),
        ("7 msm vs rbm ordering", msm_beats_rbm),
        ("8 finite error histories", histories_finite),
        ("9 report determinism", determinism),
        ("10 data pipeline", data_pipeline),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let o = run();
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
