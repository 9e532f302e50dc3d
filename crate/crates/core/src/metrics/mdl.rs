//! Mode-dependent loss from channel responses or equalizer taps.

use crate::dsp::TapTensor;
use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigenvalues, CMatrix};
use crate::sigkit::{fft, C64};

/// Relative eigenvalue floor below which a matrix is treated as singular.
const RANK_EPS: f64 = 1e-13;

/// Index-wise frequency average of the sorted eigenvalues of `HᴴH`.
pub fn averaged_eigenvalues(h: &[CMatrix]) -> Result<Vec<f64>> {
    let first = h
        .first()
        .ok_or_else(|| crate::error::invalid("compute_mdl needs at least one frequency point"))?;
    let (rows, cols) = first.shape();
    if cols > rows {
        return Err(crate::error::invalid(format!(
            "transfer matrix is {rows}x{cols}; needs cols <= rows"
        )));
    }
    let mut acc = vec![0.0; cols];
    for m in h {
        if m.shape() != (rows, cols) {
            return Err(crate::error::invalid("inconsistent matrix shapes across frequency"));
        }
        let ev = hermitian_eigenvalues(&(m.adjoint() * m));
        for (a, e) in acc.iter_mut().zip(ev) {
            *a += e;
        }
    }
    let n = h.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

fn ratio_db(avg: &[f64], context: &str) -> Result<f64> {
    let max = avg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = avg.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= max * RANK_EPS {
        return Err(Error::RankDeficient {
            context: context.to_string(),
        });
    }
    Ok(10.0 * (max / min).log10())
}

/// MDL in dB: ratio of the largest to smallest frequency-averaged eigenvalue
/// of `Hᴴ(f)H(f)`.
pub fn compute_mdl(h: &[CMatrix]) -> Result<f64> {
    ratio_db(&averaged_eigenvalues(h)?, "channel transfer matrix")
}

/// Frequency response of the taps: one `outputs × inputs` matrix per FFT bin,
/// restricted to bins with |f| <= `band_fraction`/2 of the tap rate.
pub fn tap_response(taps: &TapTensor, band_fraction: f64) -> Vec<CMatrix> {
    let (n_out, n_in, len) = taps.shape();
    let nfft = (2 * len).next_power_of_two().max(64);
    let mut per_pair: Vec<Vec<C64>> = Vec::with_capacity(n_out * n_in);
    for o in 0..n_out {
        for i in 0..n_in {
            let mut buf = vec![C64::new(0.0, 0.0); nfft];
            buf[..len].copy_from_slice(taps.taps(o, i));
            fft::forward(&mut buf);
            per_pair.push(buf);
        }
    }
    (0..nfft)
        .filter(|&k| fft::bin_frequency(k, nfft, 1.0).abs() <= band_fraction / 2.0 + 1e-12)
        .map(|k| CMatrix::from_fn(n_out, n_in, |o, i| per_pair[o * n_in + i][k]))
        .collect()
}

/// MDL of the channel seen through converged equalizer taps. The equalizer
/// approximates the channel inverse, so the channel eigenvalues are the
/// reciprocals of the eigenvalues of `W(f)W(f)ᴴ`. Only bins inside
/// `band_fraction` of the tap-rate spectrum (the signal band) are averaged.
pub fn mdl_from_taps(taps: &TapTensor, band_fraction: f64) -> Result<f64> {
    let w = tap_response(taps, band_fraction);
    let cols = taps.shape().0;
    let mut acc = vec![0.0; cols];
    for m in &w {
        let ev = hermitian_eigenvalues(&(m * m.adjoint()));
        let max = ev.iter().copied().fold(0.0, f64::max);
        if ev[0] <= max * RANK_EPS {
            return Err(Error::RankDeficient {
                context: "equalizer response not invertible".into(),
            });
        }
        let mut inv: Vec<f64> = ev.iter().map(|e| 1.0 / e).collect();
        inv.sort_by(|a, b| a.total_cmp(b));
        for (a, e) in acc.iter_mut().zip(inv) {
            *a += e;
        }
    }
    ratio_db(&acc, "equalizer-derived transfer matrix")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_zero_db() {
        let h = vec![CMatrix::identity(4, 4); 8];
        assert!(compute_mdl(&h).unwrap().abs() < 1e-12);
    }

    #[test]
    fn diag_2_1_is_6_02_db() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 0)] = C64::new(2.0, 0.0);
        let v = compute_mdl(&[m]).unwrap();
        assert!((v - 10.0 * 4f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn singular_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(1, 1)] = C64::new(0.0, 0.0);
        assert!(matches!(compute_mdl(&[m]), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn wide_matrix_rejected() {
        let m = CMatrix::identity(2, 3);
        assert!(compute_mdl(&[m]).is_err());
    }

    #[test]
    fn identity_taps_zero_db() {
        let t = TapTensor::center_identity(4, 4, 11);
        assert!(mdl_from_taps(&t, 0.5).unwrap().abs() < 1e-12);
    }
}
