//! FIR filtering of complex frames with real taps.

use super::{fft, ComplexFrame, C64};
use crate::error::{invalid, Result};

/// Above this many multiply-accumulates the FFT path is used.
const FFT_THRESHOLD: usize = 1 << 18;

/// Linear convolution with "same" alignment: output length equals input
/// length and the `(L-1)/2` sample group delay is removed.
pub fn fir_filter(x: &ComplexFrame, taps: &[f64]) -> Result<ComplexFrame> {
    if taps.is_empty() {
        return Err(invalid("empty tap sequence"));
    }
    let channels = x
        .channels()
        .iter()
        .map(|ch| filter_same(ch, taps))
        .collect();
    x.with_channels(channels)
}

/// Circular convolution with the same centering as [`fir_filter`].
pub fn fir_filter_circular(x: &ComplexFrame, taps: &[f64]) -> Result<ComplexFrame> {
    if taps.is_empty() {
        return Err(invalid("empty tap sequence"));
    }
    let n = x.len();
    let resp = circular_response(taps, n);
    let channels = x
        .channels()
        .iter()
        .map(|ch| {
            let mut buf = ch.clone();
            fft::forward(&mut buf);
            buf.iter_mut().zip(&resp).for_each(|(v, h)| *v *= h);
            fft::inverse(&mut buf);
            buf
        })
        .collect();
    x.with_channels(channels)
}

/// Frequency response (length `n`) of the centred taps as a circular filter.
pub fn circular_response(taps: &[f64], n: usize) -> Vec<C64> {
    let c = (taps.len() - 1) / 2;
    let mut h = vec![C64::new(0.0, 0.0); n];
    for (k, &t) in taps.iter().enumerate() {
        let idx = (k as isize - c as isize).rem_euclid(n as isize) as usize;
        h[idx] += t;
    }
    fft::forward(&mut h);
    h
}

/// "Same"-aligned linear convolution of one channel.
pub fn filter_same(x: &[C64], taps: &[f64]) -> Vec<C64> {
    if x.len() * taps.len() > FFT_THRESHOLD {
        filter_same_fft(x, taps)
    } else {
        filter_same_direct(x, taps)
    }
}

fn filter_same_direct(x: &[C64], taps: &[f64]) -> Vec<C64> {
    let n = x.len() as isize;
    let c = ((taps.len() - 1) / 2) as isize;
    (0..n)
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, &t) in taps.iter().enumerate() {
                let j = i + c - k as isize;
                if j >= 0 && j < n {
                    acc += x[j as usize] * t;
                }
            }
            acc
        })
        .collect()
}

fn filter_same_fft(x: &[C64], taps: &[f64]) -> Vec<C64> {
    let full = x.len() + taps.len() - 1;
    let nfft = full.next_power_of_two();
    let mut a = vec![C64::new(0.0, 0.0); nfft];
    a[..x.len()].copy_from_slice(x);
    let mut b = vec![C64::new(0.0, 0.0); nfft];
    for (k, &t) in taps.iter().enumerate() {
        b[k] = C64::new(t, 0.0);
    }
    fft::forward(&mut a);
    fft::forward(&mut b);
    a.iter_mut().zip(&b).for_each(|(u, v)| *u *= v);
    fft::inverse(&mut a);
    let c = (taps.len() - 1) / 2;
    a[c..c + x.len()].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    /// Textbook O(N·L) convolution, kept separate from the implementation.
    fn oracle(x: &[C64], h: &[f64]) -> Vec<C64> {
        let full: Vec<C64> = (0..x.len() + h.len() - 1)
            .map(|n| {
                (0..h.len())
                    .filter(|&k| n >= k && n - k < x.len())
                    .map(|k| x[n - k] * h[k])
                    .sum()
            })
            .collect();
        let c = (h.len() - 1) / 2;
        full[c..c + x.len()].to_vec()
    }

    #[test]
    fn unit_tap_is_identity() {
        let x = ComplexFrame::new(vec![random(50, 1)], 1.0).unwrap();
        let y = fir_filter(&x, &[1.0]).unwrap();
        assert_eq!(x.channel(0), y.channel(0));
    }

    #[test]
    fn impulse_echoes_taps() {
        let mut v = vec![C64::new(0.0, 0.0); 40];
        v[20] = C64::new(1.0, 0.0);
        let taps = [0.1, -0.4, 1.0, 0.3, 0.2];
        let y = fir_filter(&ComplexFrame::new(vec![v], 1.0).unwrap(), &taps).unwrap();
        for (k, &t) in taps.iter().enumerate() {
            assert!((y.channel(0)[18 + k].re - t).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_direct_oracle_both_paths() {
        let h: Vec<f64> = (0..65).map(|k| ((k as f64) * 0.37).sin()).collect();
        for n in [300, 20_000] {
            let x = random(n, n as u64);
            let want = oracle(&x, &h);
            let got = filter_same(&x, &h);
            let err = want
                .iter()
                .zip(&got)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "n={n} err={err}");
        }
    }

    #[test]
    fn empty_taps_rejected() {
        let x = ComplexFrame::new(vec![random(4, 0)], 1.0).unwrap();
        assert!(fir_filter(&x, &[]).is_err());
    }

    #[test]
    fn circular_matches_wrapped_oracle() {
        let x = random(64, 3);
        let h = [0.5, 0.25, -0.125];
        let y = fir_filter_circular(&ComplexFrame::new(vec![x.clone()], 1.0).unwrap(), &h).unwrap();
        for i in 0..64 {
            let want: C64 = (0..3)
                .map(|k| x[(i + 1 + 64 - k) % 64] * h[k])
                .sum();
            assert!((y.channel(0)[i] - want).norm() < 1e-12);
        }
    }
}
