//! Thin FFT helpers over `rustfft` with a per-thread planner cache.

use std::cell::RefCell;

use rustfft::FftPlanner;

use super::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward FFT (no scaling).
pub fn forward(buf: &mut [C64]) {
    if buf.is_empty() {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// In-place inverse FFT, scaled by 1/N so that `inverse(forward(x)) == x`.
pub fn inverse(buf: &mut [C64]) {
    if buf.is_empty() {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Signed frequency (Hz) of FFT bin `k` for an `n`-point transform at `fs`.
pub fn bin_frequency(k: usize, n: usize, fs: f64) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k < n_f / 2.0 || (n % 2 == 1 && k <= (n_f - 1.0) / 2.0) {
        k * fs / n_f
    } else {
        (k - n_f) * fs / n_f
    }
}

/// Zero every bin whose |frequency| exceeds `cutoff_hz`.
pub fn brickwall_lowpass(x: &mut [C64], fs: f64, cutoff_hz: f64) {
    let n = x.len();
    forward(x);
    for (k, v) in x.iter_mut().enumerate() {
        if bin_frequency(k, n, fs).abs() > cutoff_hz {
            *v = C64::new(0.0, 0.0);
        }
    }
    inverse(x);
}
