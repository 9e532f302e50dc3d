//! Rational-ratio polyphase resampling.

use std::f64::consts::PI;

use super::{ComplexFrame, C64};
use crate::error::{invalid, Result};

/// Stopband attenuation target of the anti-alias prototype, in dB.
const STOPBAND_DB: f64 = 80.0;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser-windowed sinc prototype at the upsampled rate. The passband extends
/// to 0.45 and the stopband starts at 0.55 of the lower sample rate.
fn prototype(p: usize, q: usize) -> Vec<f64> {
    let r = p.max(q) as f64;
    let cutoff = 0.5 / r; // cycles per upsampled sample
    let transition = 0.1 / r;
    let beta = 0.1102 * (STOPBAND_DB - 8.7);
    let order = ((STOPBAND_DB - 8.0) / (2.285 * 2.0 * PI * transition)).ceil() as usize;
    let n = order + 1 + (order % 2); // odd length, integer group delay
    let c = (n - 1) as f64 / 2.0;
    let i0b = bessel_i0(beta);
    (0..n)
        .map(|k| {
            let t = k as f64 - c;
            let x = 2.0 * cutoff * t;
            let sinc = if x.abs() < 1e-15 { 1.0 } else { (PI * x).sin() / (PI * x) };
            let w = bessel_i0(beta * (1.0 - (t / c).powi(2)).max(0.0).sqrt()) / i0b;
            2.0 * cutoff * sinc * w * p as f64
        })
        .collect()
}

/// Resample by `p/q`. The input is treated as one period of a periodic
/// signal, so output sample `m` is the band-limited value at input time
/// `m·q/p` with no edge transient. Output length is `floor(len·p/q)`.
pub fn resample(x: &ComplexFrame, p: usize, q: usize) -> Result<ComplexFrame> {
    if p == 0 || q == 0 {
        return Err(invalid("resampling factors must be >= 1"));
    }
    let g = gcd(p, q);
    let (p, q) = (p / g, q / g);
    if p == 1 && q == 1 {
        return Ok(x.clone());
    }
    let h = prototype(p, q);
    let c = (h.len() - 1) / 2;
    let n_in = x.len();
    let n_out = n_in * p / q;
    if n_out == 0 {
        return Err(invalid("resampled frame would be empty"));
    }
    // polyphase banks: bank[φ][r] = h[φ + p·r]
    let banks: Vec<Vec<f64>> = (0..p)
        .map(|phi| h.iter().skip(phi).step_by(p).copied().collect())
        .collect();
    let channels = x
        .channels()
        .iter()
        .map(|ch| {
            (0..n_out)
                .map(|m| {
                    let u = m * q + c;
                    let phi = u % p;
                    let i0 = (u / p) as isize;
                    let mut acc = C64::new(0.0, 0.0);
                    for (r, &t) in banks[phi].iter().enumerate() {
                        let idx = (i0 - r as isize).rem_euclid(n_in as isize) as usize;
                        acc += ch[idx] * t;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut out = x.with_channels(channels)?;
    out.set_sample_rate(x.sample_rate() * p as f64 / q as f64);
    Ok(out)
}

/// Best rational approximation `p/q` of `ratio` with `q <= max_den`.
pub fn rational_approx(ratio: f64, max_den: usize) -> (usize, usize) {
    let mut best = (ratio.round().max(1.0) as usize, 1);
    let mut best_err = (ratio - best.0 as f64).abs();
    for q in 1..=max_den {
        let p = (ratio * q as f64).round().max(1.0) as usize;
        let err = (ratio - p as f64 / q as f64).abs();
        if err < best_err - 1e-15 {
            best = (p, q);
            best_err = err;
        }
    }
    let g = gcd(best.0, best.1);
    (best.0 / g, best.1 / g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigkit::fft;

    fn tone(n: usize, fs: f64, f: f64) -> ComplexFrame {
        let v = (0..n)
            .map(|k| C64::from_polar(1.0, 2.0 * PI * f * k as f64 / fs))
            .collect();
        ComplexFrame::new(vec![v], fs).unwrap()
    }

    #[test]
    fn unity_ratio_is_identity() {
        let x = tone(100, 1e9, 1e8);
        let y = resample(&x, 3, 3).unwrap();
        assert_eq!(x.channel(0), y.channel(0));
    }

    #[test]
    fn tone_survives_100_to_80() {
        // 5 GHz tone on a bin-aligned grid at both rates
        let fs = 100e9;
        let n = 4000;
        let x = tone(n, fs, 5e9);
        let y = resample(&x, 4, 5).unwrap();
        assert_eq!(y.len(), 3200);
        assert!((y.sample_rate() - 80e9).abs() < 1.0);
        let mut spec = y.channel(0).to_vec();
        fft::forward(&mut spec);
        let (peak_bin, peak) = spec
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.norm()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let f_peak = fft::bin_frequency(peak_bin, y.len(), y.sample_rate());
        assert!((f_peak - 5e9).abs() < 1.0);
        let amp_db = 20.0 * (peak / y.len() as f64).log10();
        assert!(amp_db.abs() < 0.1, "amplitude error {amp_db} dB");
    }

    #[test]
    fn passband_edge_flat() {
        let fs = 80e9;
        let n = 1600;
        // 0.45 × 80 GHz = 36 GHz, bin aligned
        let x = tone(n, fs, 36e9);
        let y = resample(&x, 2, 1).unwrap();
        let mid = &y.channel(0)[100..y.len() - 100];
        let rms = (mid.iter().map(|v| v.norm_sqr()).sum::<f64>() / mid.len() as f64).sqrt();
        assert!((20.0 * rms.log10()).abs() < 0.1);
    }

    #[test]
    fn up_down_round_trip() {
        // band-limited random multitone
        let n = 3000;
        let fs = 1.0;
        let mut v = vec![C64::new(0.0, 0.0); n];
        for k in 1..40usize {
            let f = k as f64 * 0.01;
            for (i, s) in v.iter_mut().enumerate() {
                *s += C64::from_polar(1.0 / k as f64, 2.0 * PI * f * i as f64 / fs + k as f64);
            }
        }
        let x = ComplexFrame::new(vec![v], fs).unwrap();
        let up = resample(&x, 3, 1).unwrap();
        let back = resample(&up, 1, 3).unwrap();
        let err = x
            .channel(0)
            .iter()
            .zip(back.channel(0))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!(err.sqrt() < 1e-3, "rms {}", err.sqrt());
    }

    #[test]
    fn rational_approximations() {
        assert_eq!(rational_approx(80e9 / 99.99e9, 16), (4, 5));
        assert_eq!(rational_approx(66.66e9 / 79.992e9, 16), (5, 6));
        assert_eq!(rational_approx(2.0, 16), (2, 1));
    }
}
