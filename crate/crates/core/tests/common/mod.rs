#![allow(dead_code)]

use mdmlink::matrix::CMatrix;
use mdmlink::sim::{preset, ExperimentSpec, FrontEnd};
use mdmlink::{Constellation, C64};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Gauss-Hermite nodes and weights for `∫ f(x) e^{-x²} dx` (Golub-Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let j = DMatrix::from_fn(n, n, |r, c| {
        if r + 1 == c || c + 1 == r {
            (r.max(c) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Bit-metric GMI of `c` on a circular AWGN channel at `snr_db` (signal
/// energy over total complex noise variance), integrated numerically.
pub fn gmi_oracle(c: &Constellation, snr_db: f64, nodes: usize) -> f64 {
    let pts = c.points();
    let m = c.bits_per_symbol();
    let es = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
    let var = es / 10f64.powf(snr_db / 10.0);
    let s = var.sqrt();
    let (z, w) = gauss_hermite(nodes);
    let mut loss = 0.0;
    let mut metric = vec![0.0; pts.len()];
    for (i, x) in pts.iter().enumerate() {
        for (a, wa) in z.iter().zip(&w) {
            for (b, wb) in z.iter().zip(&w) {
                let y = x + C64::new(s * a, s * b);
                for (j, p) in pts.iter().enumerate() {
                    metric[j] = -(y - p).norm_sqr() / var;
                }
                let all = log_sum_exp(&metric);
                let mut sum = 0.0;
                for bit in 0..m {
                    let own = c.label_bit(i, bit);
                    let same: Vec<f64> = (0..pts.len())
                        .filter(|&j| c.label_bit(j, bit) == own)
                        .map(|j| metric[j])
                        .collect();
                    sum += all - log_sum_exp(&same);
                }
                loss += wa * wb / std::f64::consts::PI * sum;
            }
        }
    }
    m as f64 - loss / (pts.len() as f64 * std::f64::consts::LN_2)
}

/// Uniform random bits mapped onto `c`, plus circular Gaussian noise.
pub fn awgn_stream(c: &Constellation, snr_db: f64, n: usize, seed: u64) -> (Vec<C64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = c.bits_per_symbol();
    let bits: Vec<u8> = (0..n * m).map(|_| rng.random_range(0..2u8)).collect();
    let tx = c.map(&bits).unwrap();
    let es = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.len() as f64;
    let s = (es / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let rx = tx
        .iter()
        .map(|x| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            x + C64::new(s * re, s * im)
        })
        .collect();
    (rx, bits)
}

/// Eigenvalues of a Hermitian matrix through its real symmetric embedding
/// `[[A, -B], [B, A]]`, whose spectrum is that of `A + jB` doubled.
fn hermitian_eigs_embedded(h: &CMatrix) -> Vec<f64> {
    let n = h.nrows();
    let r = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let v = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// MDL by dense eigendecomposition at every grid point and explicit
/// averaging of the sorted eigenvalues.
pub fn mdl_oracle(h: &[CMatrix]) -> f64 {
    let cols = h[0].ncols();
    let mut acc = vec![0.0; cols];
    for m in h {
        let g = m.adjoint() * m;
        for (a, e) in acc.iter_mut().zip(hermitian_eigs_embedded(&g)) {
            *a += e / h.len() as f64;
        }
    }
    let max = acc.iter().copied().fold(f64::MIN, f64::max);
    let min = acc.iter().copied().fold(f64::MAX, f64::min);
    10.0 * (max / min).log10()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// A short, fast variant of a preset for end-to-end tests.
pub fn small_spec(name: &str) -> ExperimentSpec {
    let mut s = preset(name).unwrap();
    s.tx.n_symbols = 16384;
    s.eq.n_train = 6000;
    s.rx.front_end = FrontEnd::Coherent;
    s.n_captures = 1;
    s.sweep = vec![6.0];
    s
}
