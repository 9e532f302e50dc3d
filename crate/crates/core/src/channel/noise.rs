use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LinkConfig;
use crate::error::Result;
use crate::sigkit::{fft, ComplexFrame, C64};

const PLANCK: f64 = 6.626_070_15e-34;

pub(super) struct InverseSnr {
    pub ase: f64,
    pub ceiling: f64,
    pub nli: f64,
}

/// Inverse-SNR contributions per receiver channel (reference bandwidth).
pub(super) fn inverse_snr_terms(
    cfg: &LinkConfig,
    launch_power_dbm: f64,
    n_channels: usize,
) -> InverseSnr {
    let p_mw = 10f64.powf(launch_power_dbm / 10.0);
    let ase_mw = 10f64.powf(cfg.amp_noise_figure_db / 10.0)
        * PLANCK
        * cfg.carrier_hz
        * cfg.noise_ref_bandwidth_hz
        * 10f64.powf(cfg.span_loss_db / 10.0)
        * 1e3;
    let per_channel = p_mw / n_channels as f64;
    let ase = ase_mw / per_channel;
    let (ceiling, nli) = match cfg.snr_ceiling_db {
        Some(c) => {
            let floor = 10f64.powf(-c / 10.0);
            let nli = cfg
                .nli_onset_dbm
                .map(|onset| floor * 10f64.powf((launch_power_dbm - onset) / 5.0))
                .unwrap_or(0.0);
            (floor, nli)
        }
        None => (0.0, 0.0),
    };
    InverseSnr { ase, ceiling, nli }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseReport {
    /// Model SNR per channel in the reference bandwidth.
    pub snr_db: f64,
    /// Noise variance per channel in the reference bandwidth (frame units).
    pub variance_ref_bw: f64,
    /// Total added noise variance per channel (frame units).
    pub variance_total: f64,
}

/// Add circular complex Gaussian noise, band-limited to the optical filter
/// width, to every channel. The frame's total power represents the launch
/// power; the noise level follows from the amplifier noise figure, span loss
/// and the optional transceiver ceiling and nonlinear terms.
pub fn add_noise(
    x: &ComplexFrame,
    launch_power_dbm: f64,
    cfg: &LinkConfig,
    seed: u64,
) -> Result<(ComplexFrame, NoiseReport)> {
    let n_ch = x.n_channels();
    let per_channel_power = x.total_power() / n_ch as f64;
    let inv = inverse_snr_terms(cfg, launch_power_dbm, n_ch);
    let inv_snr = inv.ase + inv.ceiling + inv.nli;
    let var_ref = per_channel_power * inv_snr;
    let fs = x.sample_rate();
    let len = x.len();
    let filter_bw = cfg.optical_filter_bw_hz.min(fs);
    let var_total = var_ref * filter_bw / cfg.noise_ref_bandwidth_hz;
    let band_limited = cfg.optical_filter_bw_hz < fs;
    let in_band = if band_limited {
        (0..len)
            .filter(|&k| fft::bin_frequency(k, len, fs).abs() <= cfg.optical_filter_bw_hz / 2.0)
            .count()
    } else {
        len
    };
    let white_var = if in_band > 0 {
        var_total * len as f64 / in_band as f64
    } else {
        0.0
    };
    let sigma = (white_var / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = x
        .channels()
        .iter()
        .map(|c| {
            let mut n: Vec<C64> = (0..len)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re * sigma, im * sigma)
                })
                .collect();
            if band_limited {
                fft::brickwall_lowpass(&mut n, fs, cfg.optical_filter_bw_hz / 2.0);
            }
            c.iter().zip(n).map(|(s, v)| s + v).collect()
        })
        .collect();
    Ok((
        x.with_channels(channels)?,
        NoiseReport {
            snr_db: -10.0 * inv_snr.log10(),
            variance_ref_bw: var_ref,
            variance_total: var_total,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> ComplexFrame {
        let v: Vec<C64> = (0..8192)
            .map(|k| C64::from_polar(1.0, 0.001 * (k * k) as f64))
            .collect();
        ComplexFrame::new(vec![v.clone(), v], 99.99e9).unwrap()
    }

    fn measured_snr_db(x: &ComplexFrame, y: &ComplexFrame, cfg: &LinkConfig) -> f64 {
        let noise: f64 = x
            .channels()
            .iter()
            .zip(y.channels())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (v - u).norm_sqr()))
            .sum::<f64>()
            / (x.len() * x.n_channels()) as f64;
        let in_ref = noise * cfg.noise_ref_bandwidth_hz / cfg.optical_filter_bw_hz;
        10.0 * (x.total_power() / x.n_channels() as f64 / in_ref).log10()
    }

    #[test]
    fn snr_tracks_launch_power() {
        let cfg = LinkConfig {
            snr_ceiling_db: None,
            ..LinkConfig::default()
        };
        let x = frame();
        let (y0, _) = add_noise(&x, 0.0, &cfg, 1).unwrap();
        let (y1, _) = add_noise(&x, 10.0, &cfg, 2).unwrap();
        let d = measured_snr_db(&x, &y1, &cfg) - measured_snr_db(&x, &y0, &cfg);
        assert!((d - 10.0).abs() < 0.1, "{d}");
    }

    #[test]
    fn ceiling_caps_snr() {
        let cfg = LinkConfig {
            snr_ceiling_db: Some(20.0),
            ..LinkConfig::default()
        };
        for p in [0.0, 20.0, 40.0] {
            assert!(cfg.snr_db(p, 12) < 20.0);
        }
    }

    #[test]
    fn snr_rises_then_falls_with_nli() {
        let cfg = LinkConfig::default();
        let s: Vec<f64> = (-6..=20).map(|p| cfg.snr_db(p as f64, 12)).collect();
        let peak = s.iter().cloned().fold(f64::MIN, f64::max);
        assert!(s[0] < peak && *s.last().unwrap() < peak);
    }
}
