//! Discrete Hilbert transform via FFT.

use super::{fft, C64};
use crate::error::{invalid, Result};

/// Multiplies the spectrum by `-j·sgn(f)` with the DC and Nyquist bins zeroed.
/// Requires an even length of at least 2.
pub fn hilbert_transform(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 || n % 2 != 0 {
        return Err(invalid(format!(
            "Hilbert transform needs an even length >= 2, got {n}"
        )));
    }
    let mut buf: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft::forward(&mut buf);
    let half = n / 2;
    buf[0] = C64::new(0.0, 0.0);
    buf[half] = C64::new(0.0, 0.0);
    for v in &mut buf[1..half] {
        *v = C64::new(v.im, -v.re);
    }
    for v in &mut buf[half + 1..] {
        *v = C64::new(-v.im, v.re);
    }
    fft::inverse(&mut buf);
    Ok(buf.into_iter().map(|v| v.re).collect())
}
