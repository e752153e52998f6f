//! Brute-force reference computations.
//!
//! Nothing here calls the optimized routines it is compared against: modes
//! are counted pairwise, RBM quantities enumerate the full joint state space
//! with explicit triple loops, and the MSM epoch is a straight-line
//! re-execution of the column procedure. These are slow on purpose and only
//! meant for small inputs.

#![allow(clippy::needless_range_loop)]

use crate::matrix::Matrix;
use crate::rbm::RbmParams;
use crate::rng::RngStream;

/// Half-away-from-zero rounding to `decimals` places, normalized so that
/// `-0.0` and `0.0` compare equal.
fn quantize(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let q = (x * scale).round() / scale;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Mode by counting every distinct quantized value; ties go to the smallest.
/// Returns `(mode_value, indices, raw value at first index)`.
pub fn brute_mode(v: &[f64], decimals: u32) -> (f64, Vec<usize>, f64) {
    assert!(!v.is_empty(), "brute_mode on empty input");
    let q: Vec<f64> = v.iter().map(|&x| quantize(x, decimals)).collect();
    let mut best_value = f64::NAN;
    let mut best_count = 0usize;
    for &candidate in &q {
        let count = q.iter().filter(|&&x| x == candidate).count();
        if count > best_count || (count == best_count && candidate < best_value) {
            best_value = candidate;
            best_count = count;
        }
    }
    let indices: Vec<usize> = (0..q.len()).filter(|&i| q[i] == best_value).collect();
    let representative = v[indices[0]];
    (best_value, indices, representative)
}

pub fn naive_sse(a: &Matrix, b: &Matrix) -> f64 {
    let mut total = 0.0;
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            let d = a.get(r, c) - b.get(r, c);
            total += d * d;
        }
    }
    total
}

pub fn naive_mae(a: &Matrix, b: &Matrix) -> f64 {
    let mut total = 0.0;
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            total += (a.get(r, c) - b.get(r, c)).abs();
        }
    }
    total / (a.rows() * a.cols()) as f64
}

/// `-(x'Ux + b'x)` by double loop.
pub fn naive_quadratic_energy(x: &[f64], u: &Matrix, b: &[f64]) -> f64 {
    let mut e = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            e += x[i] * u.get(i, j) * x[j];
        }
        e += b[i] * x[i];
    }
    -e
}

/// `-(v'Wh + b'v + c'h)` by explicit loops.
pub fn naive_energy(v: &[f64], h: &[f64], p: &RbmParams) -> f64 {
    let mut e = 0.0;
    for i in 0..v.len() {
        for j in 0..h.len() {
            e += v[i] * p.weights.get(i, j) * h[j];
        }
    }
    for i in 0..v.len() {
        e += p.visible_bias[i] * v[i];
    }
    for j in 0..h.len() {
        e += p.hidden_bias[j] * h[j];
    }
    -e
}

/// `c_j + sum_i v_i W_ij` by loop.
pub fn naive_hidden_input(p: &RbmParams, v: &[f64]) -> Vec<f64> {
    (0..p.num_hidden())
        .map(|j| {
            let mut a = p.hidden_bias[j];
            for (i, &vi) in v.iter().enumerate() {
                a += vi * p.weights.get(i, j);
            }
            a
        })
        .collect()
}

/// `b_i + sum_j W_ij h_j` by loop.
pub fn naive_visible_input(p: &RbmParams, h: &[f64]) -> Vec<f64> {
    (0..p.num_visible())
        .map(|i| {
            let mut a = p.visible_bias[i];
            for (j, &hj) in h.iter().enumerate() {
                a += p.weights.get(i, j) * hj;
            }
            a
        })
        .collect()
}

fn bits(mask: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| if mask & (1 << i) != 0 { 1.0 } else { 0.0 }).collect()
}

fn lse(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log Z` summing `exp(-E)` over all `2^(nv+nh)` joint binary states.
pub fn joint_log_partition(p: &RbmParams) -> f64 {
    let (nv, nh) = (p.num_visible(), p.num_hidden());
    let mut terms = Vec::with_capacity(1 << (nv + nh));
    for vm in 0..1usize << nv {
        let v = bits(vm, nv);
        for hm in 0..1usize << nh {
            terms.push(-naive_energy(&v, &bits(hm, nh), p));
        }
    }
    lse(&terms)
}

/// `sum_t log sum_h exp(-E(v_t, h)) - T log Z`, by enumeration.
pub fn joint_log_likelihood(p: &RbmParams, data: &Matrix) -> f64 {
    let nh = p.num_hidden();
    let log_z = joint_log_partition(p);
    let mut total = 0.0;
    for t in 0..data.rows() {
        let v = data.row(t);
        let terms: Vec<f64> = (0..1usize << nh)
            .map(|hm| -naive_energy(v, &bits(hm, nh), p))
            .collect();
        total += lse(&terms) - log_z;
    }
    total
}

/// Central differences of the mean log-likelihood, one parameter at a time.
/// Order: weights row-major, visible biases, hidden biases.
pub fn finite_difference_gradient(p: &RbmParams, data: &Matrix, step: f64) -> Vec<f64> {
    let t = data.rows() as f64;
    let objective = |q: &RbmParams| joint_log_likelihood(q, data) / t;
    let (nv, nh) = (p.num_visible(), p.num_hidden());
    let mut out = Vec::with_capacity(nv * nh + nv + nh);
    let perturbed = |k: usize, delta: f64| -> RbmParams {
        let mut q = p.clone();
        if k < nv * nh {
            let (i, j) = (k / nh, k % nh);
            let w = q.weights.get(i, j);
            q.weights.set(i, j, w + delta);
        } else if k < nv * nh + nv {
            q.visible_bias[k - nv * nh] += delta;
        } else {
            q.hidden_bias[k - nv * nh - nv] += delta;
        }
        q
    };
    for k in 0..nv * nh + nv + nh {
        let up = objective(&perturbed(k, step));
        let down = objective(&perturbed(k, -step));
        out.push((up - down) / (2.0 * step));
    }
    out
}

/// Output of one straight-line MSM epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct MsmEpochReference {
    pub reconstruction: Matrix,
    pub err_first: Matrix,
    pub err_second: Matrix,
    pub total_error: f64,
}

/// Re-executes one MSM synthesis epoch on `stage2` column by column:
/// mode, random units `mean + std * U{0..ro}`, mode insertion, bottom-up
/// swap pass with `draw_index(ro)`, then the two error fields.
pub fn msm_epoch_reference(
    stage2: &Matrix,
    mean: f64,
    std: f64,
    decimals: u32,
    rng: &mut RngStream,
) -> MsmEpochReference {
    let rows = stage2.rows();
    let cols = stage2.cols();
    let mut recon = vec![0.0; rows * cols];
    let mut e1 = vec![0.0; rows * cols];
    let mut e2 = vec![0.0; rows * cols];
    let mut total = 0.0;

    for co in 0..cols {
        let mut column = Vec::new();
        for ro in 0..rows {
            column.push(stage2.get(ro, co));
        }
        let (_, mode_indices, mode_raw) = brute_mode(&column, decimals);

        let mut m_rand = vec![0.0; rows];
        for ro in 1..=rows {
            let u = rng.draw_uniform_int(0, ro as i64).expect("valid range");
            m_rand[ro - 1] = mean + std * (u as f64);
        }
        for &idx in &mode_indices {
            m_rand[idx] = mode_raw;
        }
        let mut ro = rows;
        while ro >= 1 {
            let q = rng.draw_index(ro).expect("ro >= 1");
            m_rand.swap(ro - 1, q);
            ro -= 1;
        }
        for ro in 0..rows {
            let k = ro * cols + co;
            recon[k] = m_rand[ro];
            e1[k] = m_rand[ro] - column[ro];
            e2[k] = (m_rand[ro] - column[ro]).abs();
            total += e2[k];
        }
    }
    MsmEpochReference {
        reconstruction: Matrix::new(rows, cols, recon).expect("finite"),
        err_first: Matrix::new(rows, cols, e1).expect("finite"),
        err_second: Matrix::new(rows, cols, e2).expect("finite"),
        total_error: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_mode_matches_hand_examples() {
        let (m, idx, raw) = brute_mode(&[0.21, 0.52, 0.49, 0.87], 1);
        assert_eq!((m, idx, raw), (0.5, vec![1, 2], 0.52));
        let (m, idx, _) = brute_mode(&[2.0, 1.0, 2.0, 1.0], 0);
        assert_eq!((m, idx), (1.0, vec![1, 3]));
    }

    #[test]
    fn joint_partition_of_zero_rbm() {
        let p = RbmParams::zeros(1, 1).unwrap();
        assert!((joint_log_partition(&p).exp() - 4.0).abs() < 1e-12);
    }
}
