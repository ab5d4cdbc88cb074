//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use imbench::matrix::Matrix;
use imbench::nn::{init_network, Activation, Mlp};
use imbench::tabular::Dataset;
use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn oracle_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Relative error with a floor on the denominator so that two tiny values
/// compare absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-5)
}

pub struct RandomNet {
    pub net: Mlp,
    pub input: Matrix,
    /// Fixed output weights; the scalar loss is `sum(output * probe)`.
    pub probe: Matrix,
}

pub fn random_net(seed: u64) -> RandomNet {
    let mut rng = oracle_rng(seed);
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(1..=5)];
    for _ in 0..depth {
        sizes.push(rng.random_range(1..=5));
    }
    let shape: Vec<(usize, usize)> = sizes.windows(2).map(|w| (w[0], w[1])).collect();
    let pool = [Activation::Relu, Activation::Sigmoid, Activation::Tanh, Activation::Identity];
    let acts: Vec<Activation> = (0..depth).map(|_| pool[rng.random_range(0..pool.len())]).collect();
    let dropout = if rng.random_bool(0.5) { 0.3 } else { 0.0 };
    let mut net = init_network(&shape, &acts, dropout, rng.random()).unwrap();
    for layer in &mut net.layers {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    let batch = rng.random_range(1..=4);
    let input = Matrix::from_vec(
        batch,
        sizes[0],
        (0..batch * sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect(),
    );
    let out = *sizes.last().unwrap();
    let probe = Matrix::from_vec(
        batch,
        out,
        (0..batch * out).map(|_| rng.random_range(-1.0..1.0)).collect(),
    );
    RandomNet { net, input, probe }
}

fn probe_loss(net: &Mlp, input: &Matrix, probe: &Matrix, dropout_seed: u64) -> f64 {
    let (out, _) = net.forward(input, true, dropout_seed).unwrap();
    out.as_slice().iter().zip(probe.as_slice()).map(|(o, p)| o * p).sum()
}

/// Worst relative error between backprop and central differences over every
/// parameter and input entry. Dropout masks are pinned by reusing the seed.
pub fn gradient_check(case: &RandomNet, dropout_seed: u64) -> f64 {
    const H: f64 = 1e-5;
    let RandomNet { net, input, probe } = case;
    let (_, cache) = net.forward(input, true, dropout_seed).unwrap();
    let bp = net.backward(&cache, probe).unwrap();
    let analytic: Vec<Vec<f64>> = bp.grads.slices().iter().map(|s| s.to_vec()).collect();

    let mut worst: f64 = 0.0;
    let mut work = net.clone();
    for (slot, grads) in analytic.iter().enumerate() {
        for (i, &g) in grads.iter().enumerate() {
            let orig = work.param_slices()[slot][i];
            work.param_slices_mut()[slot][i] = orig + H;
            let up = probe_loss(&work, input, probe, dropout_seed);
            work.param_slices_mut()[slot][i] = orig - H;
            let down = probe_loss(&work, input, probe, dropout_seed);
            work.param_slices_mut()[slot][i] = orig;
            worst = worst.max(rel_err(g, (up - down) / (2.0 * H)));
        }
    }
    let mut x = input.clone();
    for i in 0..x.as_slice().len() {
        let orig = x.as_slice()[i];
        x.as_mut_slice()[i] = orig + H;
        let up = probe_loss(net, &x, probe, dropout_seed);
        x.as_mut_slice()[i] = orig - H;
        let down = probe_loss(net, &x, probe, dropout_seed);
        x.as_mut_slice()[i] = orig;
        worst = worst.max(rel_err(bp.input_grad.as_slice()[i], (up - down) / (2.0 * H)));
    }
    worst
}

/// Brute-force k nearest rows to `rows[q]` (excluding `q`): full sort by
/// (squared distance, index).
pub fn brute_knn(rows: &[Vec<f64>], q: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != q)
        .map(|(i, r)| {
            let s: f64 = r.iter().zip(&rows[q]).map(|(a, b)| (a - b) * (a - b)).sum();
            (s, i)
        })
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn rows_of(d: &Dataset) -> Vec<Vec<f64>> {
    d.features().iter_rows().map(<[f64]>::to_vec).collect()
}

/// ADASYN per-minority-row counts from first principles: majority counts
/// among the k nearest rows, then largest-remainder rounding of
/// `G * m_i / sum(m)` in exact rationals. Ties on the remainder go to the
/// earlier row. `None` when every count is zero.
pub fn adasyn_counts_oracle(d: &Dataset, k: usize) -> Option<Vec<usize>> {
    let labels = d.labels();
    let ones = labels.iter().filter(|&&l| l == 1).count();
    let zeros = labels.len() - ones;
    let minority = if ones <= zeros { 1 } else { 0 };
    let g = ones.abs_diff(zeros);
    let rows = rows_of(d);
    let k = k.min(rows.len() - 1);
    let m: Vec<usize> = (0..rows.len())
        .filter(|&i| labels[i] == minority)
        .map(|i| brute_knn(&rows, i, k).into_iter().filter(|&j| labels[j] != minority).count())
        .collect();
    let s: usize = m.iter().sum();
    if s == 0 {
        return None;
    }
    let mut counts: Vec<usize> = m.iter().map(|&mi| g * mi / s).collect();
    let mut left = g - counts.iter().sum::<usize>();
    let mut rem: Vec<(usize, usize)> = m.iter().enumerate().map(|(i, &mi)| (g * mi % s, i)).collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in &rem {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    Some(counts)
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 == 0.0 {
        0.0
    } else {
        (p.iter().zip(a).zip(&ab).map(|((p, a), d)| (p - a) * d).sum::<f64>() / len2).clamp(0.0, 1.0)
    };
    p.iter()
        .zip(a)
        .zip(&ab)
        .map(|((p, a), d)| (p - (a + t * d)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Random imbalanced dataset with `n_min < n_maj` rows of `d` features.
pub fn random_dataset(seed: u64, n_min: usize, n_maj: usize, d: usize) -> Dataset {
    let mut rng = oracle_rng(seed);
    let n = n_min + n_maj;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = u8::from(i < n_min);
        let shift = if label == 1 { 0.3 } else { 0.0 };
        data.extend((0..d).map(|_| rng.random_range(0.0..0.7) + shift));
        labels.push(label);
    }
    Dataset::unnamed(Matrix::from_vec(n, d, data), labels).unwrap()
}

/// One line per criterion on the real stdout, so it shows even when the
/// test passes and output is captured.
pub fn verdict(id: &str, title: &str, ok: bool, detail: &str) {
    use std::io::Write;
    let tag = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "\n[{tag}] criterion {id}: {title} ({detail})");
    let _ = out.flush();
}
