//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pfstab::hmm::{DiscreteHmm, LinearGaussianModel};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The two-state, two-symbol model used throughout the experiments.
pub fn two_state() -> DiscreteHmm<f64> {
    DiscreteHmm::from_rows(
        &[vec![0.9, 0.1], vec![0.2, 0.8]],
        &[vec![0.8, 0.2], vec![0.3, 0.7]],
        &[0.5, 0.5],
    )
    .unwrap()
}

fn random_stochastic_row(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Random finite model with `m` states and `k` symbols, every entry positive.
pub fn random_discrete(rng: &mut ChaCha8Rng, m: usize, k: usize) -> DiscreteHmm<f64> {
    let q: Vec<Vec<f64>> = (0..m).map(|_| random_stochastic_row(rng, m, 0.05)).collect();
    let g: Vec<Vec<f64>> = (0..m).map(|_| random_stochastic_row(rng, k, 0.05)).collect();
    let chi = random_stochastic_row(rng, m, 0.05);
    DiscreteHmm::from_rows(&q, &g, &chi).unwrap()
}

pub fn random_symbols(rng: &mut ChaCha8Rng, k: usize, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Exact flow by summing over every state path.
pub struct Enumerated {
    pub predictors: Vec<Vec<f64>>,
    pub filters: Vec<Vec<f64>>,
    pub likelihood: f64,
}

/// Unnormalized weight of each `x_k`: sum over `x_{0:k-1}` of
/// `chi(x_0) prod_{j<k} g(x_j, y_j) q(x_j, x_{j+1})`.
fn path_weights(model: &DiscreteHmm<f64>, y: &[usize], k: usize) -> Vec<f64> {
    let m = model.states();
    let (q, g, chi) = (model.transition(), model.emission(), model.initial());
    let mut out = vec![0.0; m];
    let paths = m.pow(k as u32 + 1);
    for code in 0..paths {
        let mut c = code;
        let xs: Vec<usize> = (0..=k)
            .map(|_| {
                let x = c % m;
                c /= m;
                x
            })
            .collect();
        let mut w = chi[xs[0]];
        for j in 0..k {
            w *= g[(xs[j], y[j])] * q[(xs[j], xs[j + 1])];
        }
        out[xs[k]] += w;
    }
    out
}

pub fn enumerate_paths(model: &DiscreteHmm<f64>, y: &[usize]) -> Enumerated {
    let g = model.emission();
    let mut predictors = Vec::new();
    let mut filters = Vec::new();
    let mut likelihood = 1.0;
    for k in 0..=y.len() {
        let w = path_weights(model, y, k);
        let total: f64 = w.iter().sum();
        if k == y.len() {
            likelihood = total;
        }
        predictors.push(w.iter().map(|v| v / total).collect::<Vec<_>>());
        if k < y.len() {
            let f: Vec<f64> = w.iter().enumerate().map(|(x, v)| v * g[(x, y[k])]).collect();
            let s: f64 = f.iter().sum();
            filters.push(f.into_iter().map(|v| v / s).collect());
        }
    }
    Enumerated {
        predictors,
        filters,
        likelihood,
    }
}

/// `sigma^2<y_{0:n-1}>(h)` straight from its definition, with plain matrix products
/// for the kernels `L_{k:n-1}` and the predictors from path enumeration.
pub fn sigma2_oracle(model: &DiscreteHmm<f64>, y: &[usize], h: &[f64]) -> f64 {
    let n = y.len();
    let m = model.states();
    let exact = enumerate_paths(model, y);
    let pi_n_h: f64 = exact.predictors[n].iter().zip(h).map(|(p, v)| p * v).sum();
    let centered: Vec<f64> = h.iter().map(|v| v - pi_n_h).collect();
    let mut total = 0.0;
    for k in 0..=n {
        // L_{k:n-1} as an m x m matrix: prod_{j=k}^{n-1} diag(g(., y_j)) Q
        let mut l = DMatrix::<f64>::identity(m, m);
        for &yj in &y[k..n] {
            let dg = DMatrix::from_diagonal(&DVector::from_fn(m, |x, _| model.emission()[(x, yj)]));
            l = l * dg * model.transition();
        }
        let lh = &l * DVector::from_column_slice(&centered);
        let l1 = &l * DVector::from_element(m, 1.0);
        let pi_k = &exact.predictors[k];
        let norm: f64 = pi_k.iter().zip(l1.iter()).map(|(p, v)| p * v).sum();
        total += pi_k.iter().zip(lh.iter()).map(|(p, v)| p * (v / norm).powi(2)).sum::<f64>();
    }
    total
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0))
}

/// Random stable model with full-rank noises, `d_u = d_x`.
pub fn random_lgss(rng: &mut ChaCha8Rng, dx: usize, dy: usize) -> LinearGaussianModel<f64> {
    let mut a = random_matrix(rng, dx, dx, 1.0);
    let radius = a.clone().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if radius > 0.95 {
        a *= 0.95 / radius;
    }
    let r = random_matrix(rng, dx, dx, 1.0) + DMatrix::identity(dx, dx) * 0.5;
    let b = random_matrix(rng, dy, dx, 1.5);
    let s = random_matrix(rng, dy, dy, 0.3) + DMatrix::identity(dy, dy) * (0.5 + rng.random::<f64>());
    let mean = DVector::from_fn(dx, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let f = random_matrix(rng, dx, dx, 1.0);
    let cov = &f * f.transpose() + DMatrix::identity(dx, dx) * 0.1;
    LinearGaussianModel::new(a, r, b, s, mean, cov).unwrap()
}

pub fn simulate_lgss_obs(model: &LinearGaussianModel<f64>, n: usize, seed: u64) -> Vec<DVector<f64>> {
    pfstab::hmm::simulate_hmm(model, n, seed).unwrap().observations
}

/// Rank by Gauss-Jordan elimination with partial pivoting; pivots below
/// `tol * max|entry|` count as zero.
pub fn rref_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.amax();
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (p, pv) = (rank..rows)
            .map(|r| (r, a[(r, c)].abs()))
            .fold((rank, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pv <= tol * scale {
            continue;
        }
        a.swap_rows(rank, p);
        let piv = a[(rank, c)];
        for r in 0..rows {
            if r != rank {
                let factor = a[(r, c)] / piv;
                for j in c..cols {
                    let v = a[(rank, j)];
                    a[(r, j)] -= factor * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn gaussian_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
