//! Kramers-Kronig receiver front-end.
//!
//! A local-oscillator tone offset by `lo_offset_hz` is added to the received
//! field, the sum is square-law detected and AC coupled, and the ADC samples
//! it behind a brick-wall analog bandwidth. With a restored DC bias the
//! photocurrent `I` belongs to a minimum-phase field whose phase is the
//! Hilbert transform of `½·ln I`, so the complex field is recovered from
//! intensity alone.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sigkit::{self, fft, hilbert_transform, resample::rational_approx, ComplexFrame, C64};

/// How the DC bias of the AC-coupled photocurrent is restored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BiasSearch {
    /// Absolute bias value in photocurrent units.
    Fixed { value: f64 },
    /// Golden-section search between `lo`·d and `hi`·d, where d is the
    /// nominal DC estimated from the photocurrent variance and CSPR.
    GoldenSection { lo: f64, hi: f64, tolerance: f64 },
    /// Moment estimate: the variance relation with the field kurtosis
    /// re-measured on the reconstruction `iterations` times.
    Moment { iterations: usize },
}

impl Default for BiasSearch {
    fn default() -> Self {
        BiasSearch::Moment { iterations: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KkConfig {
    pub lo_offset_hz: f64,
    pub cspr_db: f64,
    pub adc_rate_hz: f64,
    pub analog_bandwidth_hz: f64,
    /// Upsampling factor ahead of the sqrt/log/Hilbert steps, realized as
    /// a rational ratio with denominator at most 16.
    pub internal_upsampling: f64,
    /// One-sided signal bandwidth kept after downconversion.
    pub signal_bandwidth_hz: f64,
    pub bias: BiasSearch,
    /// Photocurrent samples used for the bias search.
    pub bias_segment: usize,
    /// Residual LO frequency offset injected ahead of detection.
    pub residual_offset_hz: f64,
    /// When set, biased samples below `floor·bias` are clamped instead of
    /// failing the reconstruction (used by the full receive chain).
    pub clamp_floor: Option<f64>,
}

impl Default for KkConfig {
    fn default() -> Self {
        Self {
            lo_offset_hz: 18.5e9,
            cspr_db: 10.0,
            adc_rate_hz: 80e9,
            analog_bandwidth_hz: 36e9,
            internal_upsampling: 2.0,
            signal_bandwidth_hz: 16.9e9,
            bias: BiasSearch::default(),
            bias_segment: 16384,
            residual_offset_hz: 25e6,
            clamp_floor: Some(1e-6),
        }
    }
}

impl KkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo_offset_hz > self.signal_bandwidth_hz) {
            return Err(invalid(
                "lo_offset_hz must exceed the one-sided signal bandwidth",
            ));
        }
        if !(self.cspr_db >= 0.0) {
            return Err(invalid("cspr_db must be >= 0"));
        }
        if !(self.adc_rate_hz > 0.0) || !(self.analog_bandwidth_hz > 0.0) {
            return Err(invalid("ADC rate and analog bandwidth must be positive"));
        }
        if !(self.internal_upsampling >= 1.0) {
            return Err(invalid("internal_upsampling must be >= 1"));
        }
        if let BiasSearch::GoldenSection { lo, hi, tolerance } = self.bias {
            if !(lo > 0.0 && hi > lo && tolerance > 0.0) {
                return Err(invalid("bias search needs 0 < lo < hi and tolerance > 0"));
            }
        }
        if self.bias_segment < 64 {
            return Err(invalid("bias_segment must be >= 64"));
        }
        Ok(())
    }
}

/// AC-coupled photocurrent samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Photocurrent {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    /// LO amplitude used for detection.
    pub lo_amplitude: f64,
    /// Mean removed by AC coupling (the ideal bias).
    pub removed_dc: f64,
}

/// `|E + A·e^{j2π f_off t}|²` minus its time average. `A` follows from the
/// configured CSPR relative to the measured signal power.
pub fn photodetect(x: &ComplexFrame, cfg: &KkConfig) -> Result<Photocurrent> {
    if x.n_channels() != 1 {
        return Err(invalid("photodetect takes a single-channel frame"));
    }
    let e = x.channel(0);
    let p = sigkit::mean_power(e);
    let a = (p * 10f64.powf(cfg.cspr_db / 10.0)).sqrt();
    let w = 2.0 * PI * cfg.lo_offset_hz / x.sample_rate();
    let mut i: Vec<f64> = e
        .iter()
        .enumerate()
        .map(|(n, &v)| (v + C64::from_polar(a, w * n as f64)).norm_sqr())
        .collect();
    let dc = i.iter().sum::<f64>() / i.len() as f64;
    i.iter_mut().for_each(|v| *v -= dc);
    Ok(Photocurrent {
        samples: i,
        sample_rate: x.sample_rate(),
        lo_amplitude: a,
        removed_dc: dc,
    })
}

/// Brick-wall analog bandwidth limit.
pub fn analog_filter(i: &Photocurrent, bandwidth_hz: f64) -> Photocurrent {
    let mut buf: Vec<C64> = i.samples.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft::brickwall_lowpass(&mut buf, i.sample_rate, bandwidth_hz);
    Photocurrent {
        samples: buf.into_iter().map(|v| v.re).collect(),
        ..i.clone()
    }
}

/// Minimum-phase field `√I·exp(j·H{½ ln I})` for a strictly positive,
/// even-length intensity.
pub fn kk_field(intensity: &[f64]) -> Result<Vec<C64>> {
    let half_log: Vec<f64> = intensity.iter().map(|&v| 0.5 * v.ln()).collect();
    let phase = hilbert_transform(&half_log)?;
    Ok(intensity
        .iter()
        .zip(phase)
        .map(|(&v, ph)| C64::from_polar(v.sqrt(), ph))
        .collect())
}

fn upsample_real(x: &[f64], fs: f64, p: usize, q: usize) -> Result<Vec<f64>> {
    if p == q {
        return Ok(x.to_vec());
    }
    let frame = ComplexFrame::new(vec![x.iter().map(|&v| C64::new(v, 0.0)).collect()], fs)?;
    let up = sigkit::resample(&frame, p, q)?;
    Ok(up.channel(0).iter().map(|v| v.re).collect())
}

/// KK reconstruction up to (and including) downconversion, at the internal
/// rate. Returns the baseband field before the final low-pass.
///
/// `|E + A·e^{jωt}|²` equals `|A + E*·e^{jωt}|²`, so the minimum-phase field
/// recovered here carries the conjugate of the signal.
fn reconstruct_baseband(
    i_ac: &[f64],
    fs: f64,
    bias: f64,
    cfg: &KkConfig,
    clamp: Option<f64>,
) -> Result<(Vec<C64>, f64)> {
    let (p, q) = rational_approx(cfg.internal_upsampling, 16);
    let fs_int = fs * p as f64 / q as f64;
    let mut intensity: Vec<f64> = upsample_real(i_ac, fs, p, q)?
        .into_iter()
        .map(|v| v + bias)
        .collect();
    let violations = intensity.iter().filter(|&&v| !(v > 0.0)).count();
    if violations > 0 {
        match clamp {
            Some(floor) if bias > 0.0 => {
                let f = floor * bias;
                intensity.iter_mut().for_each(|v| *v = v.max(f));
            }
            _ => {
                return Err(Error::ReconstructDomain {
                    violations,
                    total: intensity.len(),
                })
            }
        }
    }
    let odd = intensity.len() % 2 == 1;
    if odd {
        intensity.push(*intensity.last().unwrap());
    }
    let mut field = kk_field(&intensity)?;
    if odd {
        field.pop();
    }
    let mean: C64 = field.iter().sum::<C64>() / field.len() as f64;
    let w = -2.0 * PI * cfg.lo_offset_hz / fs_int;
    for (n, v) in field.iter_mut().enumerate() {
        *v = (*v - mean) * C64::from_polar(1.0, w * n as f64);
    }
    Ok((field, fs_int))
}

fn finish(field: Vec<C64>, fs_int: f64, cfg: &KkConfig) -> Result<ComplexFrame> {
    let mut field: Vec<C64> = field.into_iter().map(|v| v.conj()).collect();
    fft::brickwall_lowpass(&mut field, fs_int, cfg.signal_bandwidth_hz);
    let frame = ComplexFrame::new(vec![field], fs_int)?;
    let (p, q) = rational_approx(cfg.internal_upsampling, 16);
    sigkit::resample(&frame, q, p)
}

/// Recover the baseband field from an AC-coupled photocurrent sampled at `fs`
/// using DC `bias`. Fails if any biased sample is not strictly positive.
pub fn kk_reconstruct(i_ac: &[f64], fs: f64, bias: f64, cfg: &KkConfig) -> Result<ComplexFrame> {
    let (field, fs_int) = reconstruct_baseband(i_ac, fs, bias, cfg, None)?;
    finish(field, fs_int, cfg)
}

/// As [`kk_reconstruct`], but clamps nonpositive samples when
/// `cfg.clamp_floor` is set. Returns the frame and the clamped sample count.
pub fn kk_reconstruct_clamped(
    i_ac: &[f64],
    fs: f64,
    bias: f64,
    cfg: &KkConfig,
) -> Result<(ComplexFrame, usize)> {
    let violations = i_ac.iter().filter(|&&v| !(v + bias > 0.0)).count();
    let (field, fs_int) = reconstruct_baseband(i_ac, fs, bias, cfg, cfg.clamp_floor)?;
    Ok((finish(field, fs_int, cfg)?, violations))
}

/// Nominal DC of the photocurrent from its AC variance and the configured
/// CSPR: `var ≈ P²(2c + 1)` and `DC = (c + 1)·P` with `c` the linear CSPR.
pub fn nominal_dc(i_ac: &[f64], cfg: &KkConfig) -> f64 {
    dc_from_moments(i_ac, cfg, 2.0)
}

/// `var = P²(2c + κ - 1)` for a circular field with `E|E|⁴ = κP²`.
fn dc_from_moments(i_ac: &[f64], cfg: &KkConfig, kurtosis: f64) -> f64 {
    let n = i_ac.len() as f64;
    let mean = i_ac.iter().sum::<f64>() / n;
    let var = i_ac.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let c = 10f64.powf(cfg.cspr_db / 10.0);
    let p = (var / (2.0 * c + kurtosis - 1.0).max(f64::MIN_POSITIVE)).sqrt();
    (c + 1.0) * p
}

/// Bias from the photocurrent moments, refining the field kurtosis on the
/// reconstructed segment. Starts from the Gaussian value `κ = 2`.
pub fn moment_dc(i_ac: &[f64], fs: f64, cfg: &KkConfig, iterations: usize) -> Result<f64> {
    let mut d = nominal_dc(i_ac, cfg);
    for _ in 0..iterations {
        let (mut field, fs_int) = reconstruct_baseband(i_ac, fs, d, cfg, Some(1e-6))?;
        fft::brickwall_lowpass(&mut field, fs_int, cfg.signal_bandwidth_hz);
        let m2 = field.iter().map(|v| v.norm_sqr()).sum::<f64>() / field.len() as f64;
        let m4 = field.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() / field.len() as f64;
        if !(m2 > 0.0) {
            break;
        }
        d = dc_from_moments(i_ac, cfg, m4 / (m2 * m2));
    }
    Ok(d)
}

/// Blind bias quality: negative out-of-band energy ratio (dB) of the
/// reconstructed baseband field. A wrong bias leaves residual signal-signal
/// beat products that spill outside the signal band.
pub fn leakage_quality(i_ac: &[f64], fs: f64, bias: f64, cfg: &KkConfig) -> f64 {
    let Ok((field, fs_int)) = reconstruct_baseband(i_ac, fs, bias, cfg, None) else {
        return f64::NEG_INFINITY;
    };
    let n = field.len();
    let mut buf: Vec<C64> = field
        .iter()
        .enumerate()
        .map(|(k, v)| v * (0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()))
        .collect();
    fft::forward(&mut buf);
    let (mut inside, mut outside) = (0.0, 0.0);
    for (k, v) in buf.iter().enumerate() {
        if fft::bin_frequency(k, n, fs_int).abs() <= cfg.signal_bandwidth_hz {
            inside += v.norm_sqr();
        } else {
            outside += v.norm_sqr();
        }
    }
    -10.0 * (outside / inside).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasResult {
    pub bias: f64,
    pub quality: f64,
    pub evaluations: usize,
}

/// Golden-section search for the bias maximizing `quality` over
/// `[lo, hi]·nominal_dc`. The lower end is raised to the smallest bias that
/// keeps every sample positive.
pub fn optimize_dc_bias<F>(i_ac: &[f64], cfg: &KkConfig, mut quality: F) -> Result<BiasResult>
where
    F: FnMut(f64) -> f64,
{
    let (lo_rel, hi_rel, tol_rel) = match cfg.bias {
        BiasSearch::GoldenSection { lo, hi, tolerance } => (lo, hi, tolerance),
        BiasSearch::Fixed { value } => {
            let q = quality(value);
            return Ok(BiasResult {
                bias: value,
                quality: q,
                evaluations: 1,
            });
        }
        BiasSearch::Moment { .. } => {
            return Err(invalid("moment bias has no search; use moment_dc"));
        }
    };
    let d = nominal_dc(i_ac, cfg);
    let min_pos = -i_ac.iter().copied().fold(f64::INFINITY, f64::min);
    let mut a = lo_rel * d;
    let mut b = hi_rel * d;
    let floor = min_pos.max(0.0) * (1.0 + 1e-6) + f64::MIN_POSITIVE;
    if b <= floor {
        return Err(Error::BiasSearch { lo: a, hi: b });
    }
    a = a.max(floor);
    let tol = tol_rel * d;
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut e = a + invphi * (b - a);
    let mut fc = quality(c);
    let mut fe = quality(e);
    let mut evals = 2;
    while (b - a).abs() > tol {
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - invphi * (b - a);
            fc = quality(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + invphi * (b - a);
            fe = quality(e);
        }
        evals += 1;
    }
    let (bias, q) = if fc > fe { (c, fc) } else { (e, fe) };
    Ok(BiasResult {
        bias,
        quality: q,
        evaluations: evals,
    })
}

/// Output of the front-end for one receiver channel.
#[derive(Debug, Clone)]
pub struct KkChannel {
    pub frame: ComplexFrame,
    pub bias: BiasResult,
    pub clamped_samples: usize,
}

/// Full front-end for one tributary: resample to the ADC grid, inject the
/// residual LO offset, detect, band-limit, restore the bias, reconstruct.
pub fn receive_tributary(x: &ComplexFrame, cfg: &KkConfig) -> Result<KkChannel> {
    cfg.validate()?;
    let (p, q) = rational_approx(cfg.adc_rate_hz / x.sample_rate(), 16);
    let mut at_adc = sigkit::resample(x, p, q)?;
    if cfg.residual_offset_hz != 0.0 {
        at_adc = at_adc.frequency_shift(cfg.residual_offset_hz);
    }
    let i = analog_filter(&photodetect(&at_adc, cfg)?, cfg.analog_bandwidth_hz);
    let fs = i.sample_rate;
    let seg_len = cfg.bias_segment.min(i.samples.len()) & !1;
    let seg = &i.samples[..seg_len];
    let bias = match cfg.bias {
        BiasSearch::Moment { iterations } => BiasResult {
            bias: moment_dc(seg, fs, cfg, iterations)?,
            quality: f64::NAN,
            evaluations: iterations + 1,
        },
        _ => optimize_dc_bias(seg, cfg, |b| leakage_quality(seg, fs, b, cfg))?,
    };
    let (mut frame, clamped) = kk_reconstruct_clamped(&i.samples, fs, bias.bias, cfg)?;
    frame.set_center_offset(at_adc.center_offset());
    Ok(KkChannel {
        frame,
        bias,
        clamped_samples: clamped,
    })
}

/// Run [`receive_tributary`] over every channel of `x`.
pub fn receive_frame(x: &ComplexFrame, cfg: &KkConfig) -> Result<(ComplexFrame, Vec<KkChannel>)> {
    let per: Vec<KkChannel> = (0..x.n_channels())
        .map(|c| receive_tributary(&x.select(&[c])?, cfg))
        .collect::<Result<_>>()?;
    let channels: Vec<Vec<C64>> = per.iter().map(|k| k.frame.channel(0).to_vec()).collect();
    let mut frame = ComplexFrame::new(channels, per[0].frame.sample_rate())?;
    frame.set_center_offset(per[0].frame.center_offset());
    Ok((frame, per))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> KkConfig {
        KkConfig {
            residual_offset_hz: 0.0,
            ..KkConfig::default()
        }
    }

    #[test]
    fn zero_field_gives_zero_current() {
        let x = ComplexFrame::new(vec![vec![C64::new(0.0, 0.0); 256]], 80e9).unwrap();
        let i = photodetect(&x, &cfg()).unwrap();
        assert!(i.samples.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn ac_coupled_mean_is_zero() {
        let v: Vec<C64> = (0..1000)
            .map(|n| C64::from_polar(1.0 + 0.3 * (n as f64 * 0.1).sin(), n as f64 * 0.05))
            .collect();
        let x = ComplexFrame::new(vec![v], 80e9).unwrap();
        let i = photodetect(&x, &cfg()).unwrap();
        let mean = i.samples.iter().sum::<f64>() / i.samples.len() as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn field_identity() {
        let i: Vec<f64> = (0..512)
            .map(|n| 2.0 + (n as f64 * 0.07).sin() + 0.5 * (n as f64 * 0.31).cos())
            .collect();
        let f = kk_field(&i).unwrap();
        for (a, b) in f.iter().zip(&i) {
            assert!((a.norm_sqr() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn strict_reconstruction_rejects_nonpositive() {
        let i = vec![-1.0, 0.5, 0.2, -0.3];
        match kk_reconstruct(&i, 80e9, 0.1, &cfg()) {
            Err(Error::ReconstructDomain { violations, .. }) => assert!(violations > 0),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn pure_lo_reconstructs_to_nothing() {
        let x = ComplexFrame::new(vec![vec![C64::new(1e-9, 0.0); 2048]], 80e9).unwrap();
        let c = KkConfig { cspr_db: 60.0, ..cfg() };
        let i = photodetect(&x, &c).unwrap();
        let lo_power = i.lo_amplitude.powi(2);
        let y = kk_reconstruct(&i.samples, 80e9, i.removed_dc, &c).unwrap();
        let p = sigkit::mean_power(y.channel(0));
        assert!(10.0 * (p / lo_power).log10() < -40.0);
    }

    #[test]
    fn golden_section_finds_peak() {
        let c = KkConfig {
            bias: BiasSearch::GoldenSection {
                lo: 0.2,
                hi: 3.0,
                tolerance: 1e-3,
            },
            ..cfg()
        };
        // synthetic current with known nominal DC
        let i: Vec<f64> = (0..4096).map(|n| (n as f64 * 0.37).sin()).collect();
        let d = nominal_dc(&i, &c);
        let target = 1.3 * d;
        let r = optimize_dc_bias(&i, &c, |b| -(b - target).powi(2)).unwrap();
        assert!((r.bias - target).abs() <= 1e-3 * d);
        assert!(r.evaluations <= 35, "{}", r.evaluations);
    }

    #[test]
    fn bias_search_without_positive_bias_fails() {
        let c = KkConfig {
            bias: BiasSearch::GoldenSection {
                lo: 0.01,
                hi: 0.02,
                tolerance: 1e-3,
            },
            ..cfg()
        };
        let mut i: Vec<f64> = (0..4096).map(|n| 0.01 * (n as f64 * 0.37).sin()).collect();
        i[7] = -1e6;
        assert!(matches!(
            optimize_dc_bias(&i, &c, |_| 0.0),
            Err(Error::BiasSearch { .. })
        ));
    }

    #[test]
    fn moment_bias_tracks_true_dc() {
        let tx = crate::txchain::TxConfig {
            n_symbols: 8192,
            ..Default::default()
        };
        let t = crate::txchain::build_tributary(&tx, 5).unwrap();
        let c = KkConfig {
            cspr_db: 12.0,
            ..cfg()
        };
        let i = photodetect(&t.frame, &c).unwrap();
        let fs = i.sample_rate;
        let coarse = nominal_dc(&i.samples, &c) / i.removed_dc;
        let fine = moment_dc(&i.samples, fs, &c, 2).unwrap() / i.removed_dc;
        assert!((fine - 1.0).abs() < 2e-3, "{fine}");
        assert!((fine - 1.0).abs() < (coarse - 1.0).abs());
    }

    #[test]
    fn downconverted_tone_lands_at_dc() {
        let n = 4096;
        let fs = 80e9;
        let x = ComplexFrame::new(vec![vec![C64::new(0.5, 0.0); n]], fs).unwrap();
        let c = cfg();
        let i = photodetect(&x, &c).unwrap();
        let y = kk_reconstruct(&i.samples, fs, i.removed_dc, &c).unwrap();
        let mut s = y.channel(0).to_vec();
        fft::forward(&mut s);
        let peak = s
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        let f = fft::bin_frequency(peak, n, fs);
        assert!(f.abs() <= fs / n as f64);
    }
}
