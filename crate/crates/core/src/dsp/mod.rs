//! Receiver DSP after the front-end: dispersion compensation, matched
//! filtering, frequency-offset recovery, timing and MIMO equalization.

mod equalizer;
mod taps;

pub use equalizer::{apply_taps, mimo_equalize, mimo_equalize_from, EqualizerOutput, EqualizerParams};
pub use taps::{TapRecord, TapTensor};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sigkit::{self, fft, resample::rational_approx, ComplexFrame, RrcSpec, C64};
use crate::txchain::Reference;

/// Which modes are transmitted and which are fed to the equalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RxSelection {
    pub transmitted_modes: usize,
    pub received_modes: usize,
}

impl RxSelection {
    pub fn validate(&self, available: usize) -> Result<()> {
        if self.transmitted_modes == 0 || self.received_modes < self.transmitted_modes {
            return Err(invalid(format!(
                "need 1 <= transmitted ({}) <= received ({}) modes",
                self.transmitted_modes, self.received_modes
            )));
        }
        if self.received_modes > available {
            return Err(invalid(format!(
                "{} receivers requested but only {available} modes available",
                self.received_modes
            )));
        }
        Ok(())
    }
}

/// Keep the first `sel.received_modes` modes (two polarizations each).
pub fn select_receivers(x: &ComplexFrame, sel: RxSelection) -> Result<ComplexFrame> {
    sel.validate(x.n_channels() / 2)?;
    let idx: Vec<usize> = (0..2 * sel.received_modes).collect();
    x.select(&idx)
}

/// Undo a known accumulated dispersion `β2·L` (s²).
pub fn compensate_dispersion(x: &ComplexFrame, beta2_l: f64) -> Result<ComplexFrame> {
    if beta2_l == 0.0 {
        return Ok(x.clone());
    }
    let n = x.len();
    let fs = x.sample_rate();
    let phase: Vec<C64> = (0..n)
        .map(|k| {
            let w = 2.0 * PI * fft::bin_frequency(k, n, fs);
            C64::from_polar(1.0, -0.5 * beta2_l * w * w)
        })
        .collect();
    let channels = x
        .channels()
        .iter()
        .map(|c| {
            let mut buf = c.clone();
            fft::forward(&mut buf);
            buf.iter_mut().zip(&phase).for_each(|(v, p)| *v *= p);
            fft::inverse(&mut buf);
            buf
        })
        .collect();
    x.with_channels(channels)
}

/// Resample to two samples per symbol and trim to an even length.
pub fn to_two_sps(x: &ComplexFrame, baud: f64) -> Result<ComplexFrame> {
    let (p, q) = rational_approx(2.0 * baud / x.sample_rate(), 64);
    let y = sigkit::resample(x, p, q)?;
    let even = y.len() & !1;
    if even == y.len() {
        return Ok(y);
    }
    let channels = y.channels().iter().map(|c| c[..even].to_vec()).collect();
    y.with_channels(channels)
}

/// Circular RRC matched filter at two samples per symbol.
pub fn matched_filter(x: &ComplexFrame, rrc: &RrcSpec) -> Result<ComplexFrame> {
    let spec = RrcSpec {
        samples_per_symbol: 2,
        ..*rrc
    };
    let taps = sigkit::design_rrc(&spec)?;
    sigkit::fir_filter_circular(x, &taps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub hz: f64,
    /// |Σ z| / Σ |z| over the phase-increment terms, in [0, 1].
    pub confidence: f64,
}

/// Phase-increment accumulation for one block length. Returns the summed
/// increment and the summed magnitudes.
fn block_increments(x: &ComplexFrame, refs: &[Reference], block: usize, max_lag: usize) -> (C64, f64) {
    let n_sym = (x.len() / 2).min(refs[0].symbols.len());
    let n_blocks = n_sym / block;
    let lags: Vec<isize> = (-(max_lag as isize)..=max_lag as isize).collect();
    let mut acc = C64::new(0.0, 0.0);
    let mut mag = 0.0;
    let mut prev = vec![C64::new(0.0, 0.0); lags.len()];
    let mut cur = vec![C64::new(0.0, 0.0); lags.len()];
    for r in 0..x.n_channels() {
        let y = x.channel(r);
        for t in refs {
            for b in 0..n_blocks {
                for (li, &lag) in lags.iter().enumerate() {
                    let mut c = C64::new(0.0, 0.0);
                    for n in b * block..(b + 1) * block {
                        let k = (n as isize + lag).rem_euclid(n_sym as isize) as usize;
                        c += y[2 * k] * t.symbols[n].conj();
                    }
                    cur[li] = c;
                }
                if b > 0 {
                    for (c, p) in cur.iter().zip(&prev) {
                        let z = c * p.conj();
                        acc += z;
                        mag += z.norm();
                    }
                }
                std::mem::swap(&mut prev, &mut cur);
            }
        }
    }
    (acc, mag)
}

/// Data-aided frequency-offset estimate from a 2-sps frame.
///
/// Each receiver channel is correlated blockwise against each reference over
/// a few symbol lags; the phase advance between consecutive blocks,
/// accumulated over all pairs, gives the offset. A coarse pass with `block`
/// symbols sets the unambiguous range (±baud/(2·block)); a second pass with
/// 16× longer blocks on the coarsely corrected signal refines it.
pub fn estimate_frequency_offset(
    x: &ComplexFrame,
    refs: &[Reference],
    baud: f64,
    block: usize,
    max_lag: usize,
) -> Result<FrequencyEstimate> {
    if refs.is_empty() || block == 0 {
        return Err(invalid("frequency estimation needs references and block > 0"));
    }
    let n_sym = (x.len() / 2).min(refs[0].symbols.len());
    if n_sym / block < 2 {
        return Err(invalid("frame too short for frequency estimation"));
    }
    let (acc, mag) = block_increments(x, refs, block, max_lag);
    let coarse = acc.arg() * baud / (2.0 * PI * block as f64);
    let mut hz = coarse;
    let mut confidence = if mag > 0.0 { acc.norm() / mag } else { 0.0 };
    let fine_block = 16 * block;
    if n_sym / fine_block >= 4 {
        let y = x.frequency_shift(-coarse);
        let (acc, mag) = block_increments(&y, refs, fine_block, max_lag);
        hz += acc.arg() * baud / (2.0 * PI * fine_block as f64);
        confidence = if mag > 0.0 { acc.norm() / mag } else { 0.0 };
    }
    Ok(FrequencyEstimate { hz, confidence })
}

/// Remove a frequency offset estimated by [`estimate_frequency_offset`].
pub fn compensate_frequency_offset(x: &ComplexFrame, hz: f64) -> ComplexFrame {
    x.frequency_shift(-hz)
}

/// Common symbol lag of a 2-sps frame relative to the references: the
/// energy-weighted centroid, over lags in `[-max_lag, max_lag]`, of the
/// summed correlation energy between every channel and every reference.
/// With modal delay spread the centroid keeps the whole impulse response
/// centred in the equalizer window.
pub fn align_timing(x: &ComplexFrame, refs: &[Reference], max_lag: usize, span: usize) -> Result<isize> {
    if refs.is_empty() {
        return Err(invalid("timing alignment needs references"));
    }
    let n_sym = (x.len() / 2).min(refs[0].symbols.len());
    let span = span.min(n_sym);
    let mut profile = Vec::with_capacity(2 * max_lag + 1);
    for lag in -(max_lag as isize)..=max_lag as isize {
        let mut energy = 0.0;
        for r in 0..x.n_channels() {
            let y = x.channel(r);
            for t in refs {
                let mut c = C64::new(0.0, 0.0);
                for n in 0..span {
                    let k = (n as isize + lag).rem_euclid(n_sym as isize) as usize;
                    c += y[2 * k] * t.symbols[n].conj();
                }
                energy += c.norm_sqr();
            }
        }
        profile.push((lag, energy));
    }
    // unrelated data correlates to ~span·P per pair; keep what rises above it
    let p_rx: f64 = (0..x.n_channels()).map(|r| sigkit::mean_power(x.channel(r))).sum();
    let p_ref = sigkit::mean_power(&refs[0].symbols);
    let floor = 4.0 * span as f64 * p_rx * p_ref * refs.len() as f64;
    let (num, den) = profile
        .iter()
        .map(|&(l, e)| (l, (e - floor).max(0.0)))
        .fold((0.0, 0.0), |(n, d), (l, e)| (n + l as f64 * e, d + e));
    if den == 0.0 {
        return Ok(0);
    }
    Ok((num / den).round() as isize)
}

/// Cyclically advance a 2-sps frame by `lag` symbols.
pub fn shift_symbols(x: &ComplexFrame, lag: isize) -> Result<ComplexFrame> {
    let n = x.len() as isize;
    let k = (2 * lag).rem_euclid(n) as usize;
    let channels = x
        .channels()
        .iter()
        .map(|c| {
            let mut v = c.clone();
            v.rotate_left(k);
            v
        })
        .collect();
    x.with_channels(channels)
}

/// Resolve the quarter-turn ambiguity of blind phase search against known
/// data: each block of `block` symbols is rotated by the multiple of π/2
/// that best matches `reference`. Returns the number of blocks whose
/// rotation differs from the previous block (cycle slips).
pub fn correct_cycle_slips(symbols: &mut [C64], reference: &[C64], block: usize) -> usize {
    let quarter = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, -1.0),
    ];
    let mut slips = 0;
    let mut last = 0;
    let n = symbols.len().min(reference.len());
    for (b, (ys, rs)) in symbols[..n]
        .chunks_mut(block.max(1))
        .zip(reference[..n].chunks(block.max(1)))
        .enumerate()
    {
        let best = (0..4)
            .min_by(|&a, &b| {
                let err = |k: usize| -> f64 { ys.iter().zip(rs).map(|(y, r)| (y * quarter[k] - r).norm_sqr()).sum() };
                err(a).total_cmp(&err(b))
            })
            .unwrap_or(0);
        if b > 0 && best != last {
            slips += 1;
        }
        last = best;
        ys.iter_mut().for_each(|y| *y *= quarter[best]);
    }
    slips
}

/// Symbol EVM of a single-channel field against its reference, after
/// matched filtering at 2 sps and a least-squares complex gain.
pub fn loopback_evm(
    field: &ComplexFrame,
    reference: &[C64],
    baud: f64,
    rrc: &RrcSpec,
    skip: usize,
) -> Result<f64> {
    let y = matched_filter(&to_two_sps(field, baud)?, rrc)?;
    let n = (y.len() / 2).min(reference.len());
    if n <= 2 * skip {
        return Err(invalid("frame too short for EVM"));
    }
    let rx: Vec<C64> = (skip..n - skip).map(|k| y.channel(0)[2 * k]).collect();
    Ok(sigkit::evm(&rx, &reference[skip..n - skip]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txchain::{build_tributary, TxConfig};

    fn small_tx() -> TxConfig {
        TxConfig {
            n_symbols: 4096,
            ..TxConfig::default()
        }
    }

    #[test]
    fn tx_loopback_evm_is_tiny() {
        let cfg = small_tx();
        let t = build_tributary(&cfg, 3).unwrap();
        let evm = loopback_evm(&t.frame, &t.reference.symbols, cfg.baud, &cfg.rrc, 0).unwrap();
        // truncated RRC pair leaves an ISI floor near -54 dB
        assert!(evm < 3e-3, "{evm}");
    }

    #[test]
    fn dispersion_roundtrip() {
        let cfg = small_tx();
        let t = build_tributary(&cfg, 4).unwrap();
        let b = 2.6e-24;
        let d = compensate_dispersion(&t.frame, -b).unwrap();
        let back = compensate_dispersion(&d, b).unwrap();
        for (a, b) in back.channel(0).iter().zip(t.frame.channel(0)) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn frequency_estimate_recovers_offset() {
        let cfg = small_tx();
        let t = build_tributary(&cfg, 5).unwrap();
        let two = matched_filter(&to_two_sps(&t.frame, cfg.baud).unwrap(), &cfg.rrc).unwrap();
        for f in [0.0, 40e6, -100e6, 200e6] {
            let shifted = two.frequency_shift(f);
            let est = estimate_frequency_offset(&shifted, &[t.reference.clone()], cfg.baud, 32, 0).unwrap();
            assert!((est.hz - f).abs() < 1e5, "{f}: {}", est.hz);
            assert!(est.confidence > 0.9);
        }
    }

    #[test]
    fn timing_finds_lag() {
        let cfg = small_tx();
        let t = build_tributary(&cfg, 6).unwrap();
        let two = matched_filter(&to_two_sps(&t.frame, cfg.baud).unwrap(), &cfg.rrc).unwrap();
        let late = shift_symbols(&two, -7).unwrap();
        let lag = align_timing(&late, &[t.reference.clone()], 10, 1024).unwrap();
        assert_eq!(lag, 7);
    }

    #[test]
    fn slip_correction_undoes_quarter_turns() {
        let r: Vec<C64> = (0..4000).map(|k| C64::from_polar(1.0, 0.3 + k as f64 * 0.7)).collect();
        let mut y = r.clone();
        y[1000..].iter_mut().for_each(|v| *v *= C64::new(0.0, 1.0));
        y[3000..].iter_mut().for_each(|v| *v *= C64::new(-1.0, 0.0));
        assert_eq!(correct_cycle_slips(&mut y, &r, 500), 2);
        for (a, b) in y.iter().zip(&r) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn selection_bounds() {
        assert!(RxSelection { transmitted_modes: 3, received_modes: 2 }.validate(6).is_err());
        assert!(RxSelection { transmitted_modes: 3, received_modes: 7 }.validate(6).is_err());
        assert!(RxSelection { transmitted_modes: 3, received_modes: 6 }.validate(6).is_ok());
    }
}
