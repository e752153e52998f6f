//! Self-check suite comparing the library against [`crate::oracle`].
//! Backs the `verify` CLI subcommand.

use crate::matrix::Matrix;
use crate::msm::{self, MsmConfig, MsmNoise, MsmState};
use crate::oracle;
use crate::rbm::{self, RbmParams};
use crate::rng::RngStream;
use crate::stats::{self, DataStats, DivisorConvention};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, failures: Vec<String>, cases: usize) -> Self {
        let passed = failures.is_empty();
        let detail = if passed {
            format!("{cases} cases")
        } else {
            format!("{} of {cases} cases failed; first: {}", failures.len(), failures[0])
        };
        Self {
            name,
            passed,
            detail,
        }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Random binary-binary RBM with `nv + nh <= max_units` and `N(0, 1)` parameters.
pub fn random_small_rbm(rng: &mut RngStream, max_units: usize) -> RbmParams {
    let nv = 1 + rng.draw_index(max_units - 1).expect("max_units >= 2");
    let nh = 1 + rng.draw_index(max_units - nv).expect("room for a hidden unit");
    let weights = Matrix::from_fn(nv, nh, |_, _| rng.draw_gaussian(0.0, 1.0).expect("var 1")).expect("finite");
    let vb = (0..nv).map(|_| rng.draw_gaussian(0.0, 1.0).expect("var 1")).collect();
    let hb = (0..nh).map(|_| rng.draw_gaussian(0.0, 1.0).expect("var 1")).collect();
    RbmParams::new(weights, vb, hb).expect("consistent")
}

/// Random binary data set with 1..=5 rows.
pub fn random_binary_data(rng: &mut RngStream, nv: usize) -> Matrix {
    let rows = 1 + rng.draw_index(5).expect("n >= 1");
    Matrix::from_fn(rows, nv, |_, _| if rng.draw_bernoulli(0.5) { 1.0 } else { 0.0 }).expect("finite")
}

/// Partition function, log-likelihood and gradient against enumeration and
/// central differences on `instances` random RBMs with at most 8 units.
pub fn check_rbm_exactness(instances: usize, seed: u64) -> CheckOutcome {
    let mut rng = RngStream::new(seed, 0);
    let mut failures = Vec::new();
    for k in 0..instances {
        let p = random_small_rbm(&mut rng, 8);
        let data = random_binary_data(&mut rng, p.num_visible());

        let z = rbm::partition_function(&p).expect("tractable");
        let z_ref = oracle::joint_log_partition(&p).exp();
        if !rel_close(z, z_ref, 1e-10) {
            failures.push(format!("instance {k}: Z {z} vs {z_ref}"));
        }
        let ll = rbm::log_likelihood(&p, &data).expect("tractable");
        let ll_ref = oracle::joint_log_likelihood(&p, &data);
        if !rel_close(ll, ll_ref, 1e-10) {
            failures.push(format!("instance {k}: log-likelihood {ll} vs {ll_ref}"));
        }
        let g = rbm::exact_gradient(&p, &data).expect("tractable").flatten();
        let fd = oracle::finite_difference_gradient(&p, &data, 1e-5);
        if let Some((i, (a, b))) = g
            .iter()
            .zip(&fd)
            .enumerate()
            .find(|(_, (a, b))| (*a - *b).abs() > 1e-6)
        {
            failures.push(format!("instance {k}: gradient[{i}] {a} vs finite difference {b}"));
        }
    }
    CheckOutcome::new("rbm exactness", failures, instances)
}

/// Every sequence of length `1..=max_len` over a 4-value alphabet.
pub fn check_mode_exhaustive(max_len: usize) -> CheckOutcome {
    const ALPHABET: [f64; 4] = [0.25, -1.0, 0.5, 0.125];
    let mut failures = Vec::new();
    let mut cases = 0;
    for len in 1..=max_len {
        let mut seq = vec![0usize; len];
        loop {
            let v: Vec<f64> = seq.iter().map(|&s| ALPHABET[s]).collect();
            let got = stats::mode_with_indices(&v, 2).expect("non-empty");
            let (value, indices, raw) = oracle::brute_mode(&v, 2);
            if got.mode_value != value || got.indices != indices || got.representative != raw {
                failures.push(format!("{v:?}"));
            }
            cases += 1;
            // odometer increment
            let mut pos = 0;
            while pos < len && seq[pos] == ALPHABET.len() - 1 {
                seq[pos] = 0;
                pos += 1;
            }
            if pos == len {
                break;
            }
            seq[pos] += 1;
        }
    }
    CheckOutcome::new("mode exhaustive", failures, cases)
}

/// `synthesize_epoch` against the straight-line oracle on random 8x4 inputs.
pub fn check_msm_oracle(instances: usize, seed: u64) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut data_rng = RngStream::new(seed, 1);
    for k in 0..instances {
        let input = Matrix::from_fn(8, 4, |_, _| data_rng.draw_unit()).expect("finite");
        let cfg = MsmConfig {
            seed: seed.wrapping_add(k as u64),
            ..MsmConfig::default()
        };
        let stage1 = msm::linearize_stage1(&input).expect("in range");
        let stage2 = msm::activate_stage2(&stage1, &cfg, &mut RngStream::new(cfg.seed, 0)).expect("valid");
        let st = stats::stats(input.as_slice(), DivisorConvention::Sample).expect("len >= 2");
        let mut state = MsmState::new(input);
        state.stage1 = Some(stage1);
        state.stage2 = Some(stage2.clone());
        state.stats = Some(st);

        msm::synthesize_epoch(&mut state, &cfg, &mut RngStream::new(cfg.seed, 1)).expect("populated");
        let reference =
            oracle::msm_epoch_reference(&stage2, st.mean, st.std, cfg.quant_decimals, &mut RngStream::new(cfg.seed, 1));
        let same = state.reconstruction.as_ref() == Some(&reference.reconstruction)
            && state.err_first.as_ref() == Some(&reference.err_first)
            && state.err_second.as_ref() == Some(&reference.err_second)
            && state.error_history.last().map(|x| x.to_bits()) == Some(reference.total_error.to_bits());
        if !same {
            failures.push(format!("instance {k}"));
        }
    }
    CheckOutcome::new("msm straight-line oracle", failures, instances)
}

/// Constant inputs are reproduced exactly by the MSM under both noise modes.
pub fn check_msm_fixed_point(sizes: &[(usize, usize)], epochs: usize) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    for &(r, c) in sizes {
        for value in [0.0, 0.37, 0.5, 1.0] {
            for noise in [MsmNoise::Zero, MsmNoise::SampleStats] {
                let cfg = MsmConfig {
                    epochs,
                    noise_mode: noise,
                    seed: 7,
                    ..MsmConfig::default()
                };
                let input = Matrix::filled(r, c, value).expect("finite");
                let state = msm::train(&input, &cfg).expect("valid");
                if state.error_history.iter().any(|&e| e != 0.0) {
                    failures.push(format!("{r}x{c} value {value} {noise:?}"));
                }
                cases += 1;
            }
        }
    }
    CheckOutcome::new("msm constant fixed point", failures, cases)
}

/// Stage-1 map on a grid and the zero-noise modified-ReLU examples.
pub fn check_unit_identities(grid: usize) -> CheckOutcome {
    use crate::mrelu::{mrelu, MreluConfig, NoiseMode};
    let mut failures = Vec::new();
    let xs: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let m = Matrix::new(1, grid, xs.clone()).expect("finite");
    let y = msm::linearize_stage1(&m).expect("in range");
    for (x, y) in xs.iter().zip(y.as_slice()) {
        if (y - (0.7 - 0.3 * x)).abs() > 1e-12 {
            failures.push(format!("stage1({x}) = {y}"));
        }
    }
    let mut rng = RngStream::new(0, 0);
    for (n, want) in [(1, [6.0, 8.0, 10.0]), (2, [36.0, 64.0, 100.0])] {
        let cfg = MreluConfig {
            sparsity_exponent: n,
            noise_mode: NoiseMode::Zero,
            ..MreluConfig::default()
        };
        let got = mrelu(&[2.0, 4.0, 6.0], &cfg, &mut rng).expect("valid");
        if got != want {
            failures.push(format!("mrelu n={n}: {got:?}"));
        }
    }
    CheckOutcome::new("stage1 / mrelu identities", failures, grid + 2)
}

/// Summary statistics helper shared by the CLI.
pub fn describe(stats: &DataStats) -> String {
    format!("mean {:.6} std {:.6}", stats.mean, stats.std)
}

/// Runs the whole suite with the default sizes.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        check_rbm_exactness(100, 2024),
        check_mode_exhaustive(8),
        check_msm_oracle(50, 77),
        check_msm_fixed_point(&[(1, 1), (3, 5), (16, 16), (64, 64)], 3),
        check_unit_identities(10_000),
    ]
}
