use msm_core::matrix::Matrix;
use msm_core::oracle;
use msm_core::rbm::*;
use msm_core::rng::RngStream;
use msm_core::verify::{random_binary_data, random_small_rbm};
use msm_core::Error;

fn random_params(nv: usize, nh: usize, seed: u64) -> RbmParams {
    let mut rng = RngStream::new(seed, 0);
    let w = Matrix::from_fn(nv, nh, |_, _| rng.draw_gaussian(0.0, 1.0).unwrap()).unwrap();
    let b = (0..nv).map(|_| rng.draw_gaussian(0.0, 1.0).unwrap()).collect();
    let c = (0..nh).map(|_| rng.draw_gaussian(0.0, 1.0).unwrap()).collect();
    RbmParams::new(w, b, c).unwrap()
}

#[test]
fn energy_examples() {
    let p = RbmParams::new(
        Matrix::new(2, 1, vec![0.5, -0.3]).unwrap(),
        vec![0.1, 0.2],
        vec![0.0],
    )
    .unwrap();
    assert!((energy(&[1.0, 0.0], &[1.0], &p).unwrap() + 0.6).abs() < 1e-15);
    assert_eq!(energy(&[0.0, 0.0], &[0.0], &p).unwrap(), 0.0);
    assert!(matches!(energy(&[1.0], &[1.0], &p), Err(Error::ShapeMismatch { .. })));
}

#[test]
fn energies_match_loop_oracles() {
    let mut rng = RngStream::new(3, 0);
    for seed in 0..20 {
        let p = random_params(4, 3, seed);
        let v: Vec<f64> = (0..4).map(|_| rng.draw_unit()).collect();
        let h: Vec<f64> = (0..3).map(|_| rng.draw_gaussian(0.0, 1.0).unwrap()).collect();
        let e = energy(&v, &h, &p).unwrap();
        assert!((e - oracle::naive_energy(&v, &h, &p)).abs() < 1e-12);

        let u = Matrix::from_fn(4, 4, |_, _| rng.draw_gaussian(0.0, 1.0).unwrap()).unwrap();
        let b: Vec<f64> = (0..4).map(|_| rng.draw_unit()).collect();
        let eg = energy_general(&v, &u, &b).unwrap();
        assert!((eg - oracle::naive_quadratic_energy(&v, &u, &b)).abs() < 1e-12);
    }
}

#[test]
fn bipartite_energy_is_a_quadratic_form() {
    let mut p = random_params(3, 2, 9);
    p.hidden_bias = vec![0.0; 2];
    let n = 5;
    let u = Matrix::from_fn(n, n, |i, j| match (i < 3, j < 3) {
        (true, false) => p.weights.get(i, j - 3) / 2.0,
        (false, true) => p.weights.get(j, i - 3) / 2.0,
        _ => 0.0,
    })
    .unwrap();
    let mut bias = p.visible_bias.clone();
    bias.extend([0.0, 0.0]);
    let v = [1.0, 0.0, 1.0];
    let h = [0.3, -1.2];
    let x: Vec<f64> = v.iter().chain(&h).copied().collect();
    let a = energy(&v, &h, &p).unwrap();
    let b = energy_general(&x, &u, &bias).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn partition_function_examples() {
    let z = partition_function(&RbmParams::zeros(1, 1).unwrap()).unwrap();
    assert!((z - 4.0).abs() < 1e-12);
    let p = random_params(2, 2, 4);
    let z = partition_function(&p).unwrap();
    let z_ref = oracle::joint_log_partition(&p).exp();
    assert!((z - z_ref).abs() <= 1e-10 * z_ref);
    let min_energy = (0..4)
        .flat_map(|vm| (0..4).map(move |hm| (vm, hm)))
        .map(|(vm, hm)| {
            let v = [(vm & 1) as f64, (vm >> 1 & 1) as f64];
            let h = [(hm & 1) as f64, (hm >> 1 & 1) as f64];
            energy(&v, &h, &p).unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(z >= (-min_energy).exp());
    assert!(matches!(
        partition_function(&RbmParams::zeros(12, 9).unwrap()),
        Err(Error::Intractable { .. })
    ));
}

#[test]
fn log_likelihood_examples() {
    let p = RbmParams::zeros(1, 1).unwrap();
    let ll = log_likelihood(&p, &Matrix::new(1, 1, vec![1.0]).unwrap()).unwrap();
    assert!((ll - 0.5f64.ln()).abs() < 1e-12);

    let p = random_params(3, 2, 6);
    let total: f64 = (0..8)
        .map(|m| {
            let v = Matrix::new(1, 3, (0..3).map(|i| (m >> i & 1) as f64).collect()).unwrap();
            log_likelihood(&p, &v).unwrap().exp()
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn exact_gradient_examples() {
    let g = exact_gradient(&RbmParams::zeros(1, 1).unwrap(), &Matrix::new(1, 1, vec![1.0]).unwrap()).unwrap();
    assert!((g.d_weights.get(0, 0) - 0.25).abs() < 1e-12);

    let data = Matrix::new(2, 3, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
    let g = exact_gradient(&RbmParams::zeros(3, 2).unwrap(), &data).unwrap();
    assert!(g.d_visible_bias.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn exact_quantities_match_enumeration_oracles() {
    let mut rng = RngStream::new(77, 0);
    for k in 0..30 {
        let p = random_small_rbm(&mut rng, 8);
        let data = random_binary_data(&mut rng, p.num_visible());
        let ll = log_likelihood(&p, &data).unwrap();
        let ll_ref = oracle::joint_log_likelihood(&p, &data);
        assert!((ll - ll_ref).abs() <= 1e-10 * ll_ref.abs(), "instance {k}");
        let g = exact_gradient(&p, &data).unwrap().flatten();
        let fd = oracle::finite_difference_gradient(&p, &data, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6, "instance {k}: {a} vs {b}");
        }
    }
}

#[test]
fn conditionals_match_loop_oracles() {
    let p = random_params(5, 3, 12);
    let v = [1.0, 0.0, 0.5, 1.0, 0.25];
    let (mean, _) = hidden_given_visible(&p, &v, HiddenKind::LinearGaussian, None).unwrap();
    let naive = oracle::naive_hidden_input(&p, &v);
    for (a, b) in mean.iter().zip(&naive) {
        assert!((a - b).abs() < 1e-12);
    }
    let (mean, _) = hidden_given_visible(&p, &v, HiddenKind::BinarySigmoid, None).unwrap();
    // each unit computed on its own
    for (j, &m_j) in mean.iter().enumerate() {
        let mut single = p.clone();
        single.weights = Matrix::from_fn(5, 1, |i, _| p.weights.get(i, j)).unwrap();
        single.hidden_bias = vec![p.hidden_bias[j]];
        let (m, _) = hidden_given_visible(&single, &v, HiddenKind::BinarySigmoid, None).unwrap();
        assert_eq!(m[0], m_j);
    }
    let h = [0.2, -1.0, 1.0];
    let (vm, vs) = visible_given_hidden(&p, &h, Some(&mut RngStream::new(0, 0))).unwrap();
    for (a, b) in vm.iter().zip(oracle::naive_visible_input(&p, &h)) {
        assert!((a - sigmoid(b)).abs() < 1e-12);
    }
    assert!(vs.iter().all(|&x| x == 0.0 || x == 1.0));
}

#[test]
fn conditional_examples_on_zero_params() {
    let p = RbmParams::zeros(3, 2).unwrap();
    let (m, s) = hidden_given_visible(&p, &[1.0, 0.0, 1.0], HiddenKind::BinarySigmoid, Some(&mut RngStream::new(1, 0))).unwrap();
    assert_eq!(m, vec![0.5, 0.5]);
    assert!(s.iter().all(|&x| x == 0.0 || x == 1.0));
    let (m, s) = hidden_given_visible(&p, &[1.0, 0.0, 1.0], HiddenKind::LinearGaussian, None).unwrap();
    assert_eq!((m, s), (vec![0.0, 0.0], vec![0.0, 0.0]));
    let (vm, _) = visible_given_hidden(&p, &[0.3, 0.1], None).unwrap();
    assert_eq!(vm, vec![0.5; 3]);
    let mut q = p.clone();
    q.visible_bias = vec![-1.0, 0.0, 2.0];
    let (vm, _) = visible_given_hidden(&q, &[0.0, 0.0], None).unwrap();
    assert_eq!(vm, vec![sigmoid(-1.0), 0.5, sigmoid(2.0)]);
}

#[test]
fn hand_traced_cd1_step() {
    let mut p = RbmParams::new(
        Matrix::new(2, 1, vec![0.5, -0.3]).unwrap(),
        vec![0.1, 0.2],
        vec![0.05],
    )
    .unwrap();
    let cfg = RbmTrainConfig {
        num_hidden: 1,
        learning_rate: 0.1,
        weight_decay: 0.01,
        hidden_unit_kind: HiddenKind::BinarySigmoid,
        ..RbmTrainConfig::default()
    };
    let mut state = CdState::new(&p).unwrap();
    let batch = Matrix::new(1, 2, vec![1.0, 0.0]).unwrap();
    cd_update(&mut p, &batch, &cfg, &mut state, None).unwrap();
    // traced by hand: h0 = s(c + W'v0), v1 = s(W h0 + b), h1 = s(c + W'v1)
    let expected_w = [0.5297607610509776, -0.3273340410744492];
    let expected_b = [0.13972186133836056, 0.1497560188690639];
    let expected_c = 0.058413854753539024;
    for (a, b) in p.weights.as_slice().iter().zip(expected_w) {
        assert!((a - b).abs() < 1e-10);
    }
    for (a, b) in p.visible_bias.iter().zip(expected_b) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((p.hidden_bias[0] - expected_c).abs() < 1e-10);
}

#[test]
fn zero_learning_rate_leaves_params() {
    let data = Matrix::new(2, 3, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
    let mut p = random_params(3, 2, 1);
    let before = p.clone();
    let cfg = RbmTrainConfig { num_hidden: 2, learning_rate: 0.0, ..RbmTrainConfig::default() };
    let mut state = CdState::new(&p).unwrap();
    cd_update(&mut p, &data, &cfg, &mut state, Some(&mut RngStream::new(0, 0))).unwrap();
    assert_eq!(p, before);
}

#[test]
fn copying_rbm_reconstructs_almost_exactly() {
    // hidden j mirrors visible j with overwhelming weights
    let p = RbmParams::new(
        Matrix::new(2, 2, vec![40.0, 0.0, 0.0, 40.0]).unwrap(),
        vec![-20.0, -20.0],
        vec![-20.0, -20.0],
    )
    .unwrap();
    let data = Matrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let err = rbm_reconstruction_error(&p, &data, HiddenKind::BinarySigmoid, &mut RngStream::new(1, 0)).unwrap();
    assert!(err < 1e-3, "{err}");
}

#[test]
fn zero_rbm_error_is_a_quarter_per_pixel() {
    let p = RbmParams::zeros(6, 4).unwrap();
    let mut rng = RngStream::new(2, 0);
    let mut total = 0.0;
    let seeds = 100;
    for seed in 0..seeds {
        let data = Matrix::from_fn(5, 6, |_, _| if rng.draw_bernoulli(0.5) { 1.0 } else { 0.0 }).unwrap();
        let e = rbm_reconstruction_error(&p, &data, HiddenKind::BinarySigmoid, &mut RngStream::new(seed, 0)).unwrap();
        assert!(e >= 0.0);
        total += e;
    }
    let per_pixel = total / (seeds as f64 * 30.0);
    assert!((per_pixel - 0.25).abs() <= 0.025, "{per_pixel}");
}

#[test]
fn training_reduces_error_on_repeated_glyph() {
    // a dark "X" on a light 6x6 background, flattened to one row
    let glyph: Vec<f64> = (0..36)
        .map(|k| if k / 6 == k % 6 || k / 6 + k % 6 == 5 { 0.0 } else { 1.0 })
        .collect();
    let data = Matrix::from_fn(10, 36, |_, j| glyph[j]).unwrap();
    let improved = (0..20)
        .filter(|&seed| {
            let cfg = RbmTrainConfig { num_hidden: 16, cd_k: 1, epochs: 200, seed, ..RbmTrainConfig::default() };
            let t = train_rbm(&data, &cfg).unwrap();
            assert!(t.error_history.iter().all(|e| e.is_finite() && *e >= 0.0));
            *t.error_history.last().unwrap() < t.initial_error
        })
        .count();
    assert!(improved >= 18, "{improved}/20");
}

#[test]
fn training_is_deterministic() {
    let data = Matrix::new(3, 4, vec![1.0, 0.0, 0.5, 0.2, 0.0, 1.0, 1.0, 0.9, 0.3, 0.3, 0.3, 0.3]).unwrap();
    for chains in [1, 3] {
        let cfg = RbmTrainConfig { num_hidden: 5, epochs: 7, num_chains: chains, seed: 4, ..RbmTrainConfig::default() };
        let a = train_rbm(&data, &cfg).unwrap();
        assert_eq!(a, train_rbm(&data, &cfg).unwrap());
        assert_eq!(a.error_history.len(), 7);
    }
}
