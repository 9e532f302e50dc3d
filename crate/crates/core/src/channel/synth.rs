use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::LinkConfig;
use crate::error::{invalid, Error, Result};
use crate::matrix::{unitary_exp, CMatrix, MatrixRecord};
use crate::metrics::compute_mdl;
use crate::sigkit::{fft, ComplexFrame, C64};

const MDL_TOLERANCE_DB: f64 = 0.01;
const MAX_GAIN_SPREAD: f64 = 20.0;

/// Frequency-flat part of a section plus its per-group delays.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    /// `diag(gains) · mixing`.
    pub matrix: CMatrix,
    /// Delay of each channel in seconds (relative to the mean).
    pub channel_delays_s: Vec<f64>,
}

/// Immutable channel: sections, common dispersion and the composite response
/// on an `n_freq` grid (FFT bin order, excluding the common CD phase).
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    dim: usize,
    sample_rate: f64,
    sections: Vec<Section>,
    beta2_l_s2: f64,
    gain: f64,
    grid_hz: Vec<f64>,
    response: Vec<CMatrix>,
    mdl_band_hz: Option<f64>,
    gain_spread: f64,
}

struct Draws {
    mixing: Vec<CMatrix>,
    log_gains: Vec<Vec<f64>>,
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary via QR with phase correction.
fn haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let d = r[(c, c)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..n {
            q[(row, c)] *= ph;
        }
    }
    q
}

fn draw_sections(cfg: &LinkConfig) -> Draws {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = cfg.dim();
    let groups = cfg.channel_groups();
    let n_groups = cfg.n_groups();
    let members: Vec<Vec<usize>> = (0..n_groups)
        .map(|g| (0..dim).filter(|&c| groups[c] == g).collect())
        .collect();
    let xt = 10f64.powf(cfg.inter_group_xt_db / 10.0);

    let mut mixing = Vec::with_capacity(cfg.n_sections);
    let mut log_gains = Vec::with_capacity(cfg.n_sections);
    for _ in 0..cfg.n_sections {
        let mut block = CMatrix::zeros(dim, dim);
        for m in &members {
            let u = if cfg.intra_group_mixing {
                haar_unitary(m.len(), &mut rng)
            } else {
                CMatrix::identity(m.len(), m.len())
            };
            for (a, &ra) in m.iter().enumerate() {
                for (b, &cb) in m.iter().enumerate() {
                    block[(ra, cb)] = u[(a, b)];
                }
            }
        }
        let mut k = CMatrix::zeros(dim, dim);
        for g in 0..n_groups.saturating_sub(1) {
            let scale = (xt / members[g + 1].len() as f64).sqrt();
            for &i in &members[g] {
                for &j in &members[g + 1] {
                    let v = complex_gaussian(&mut rng) * scale;
                    if xt > 0.0 {
                        k[(i, j)] = v;
                        k[(j, i)] = v.conj();
                    }
                }
            }
        }
        let leak = unitary_exp(&k);
        mixing.push(leak * block);
        let g: Vec<f64> = (0..cfg.n_modes_link)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        log_gains.push(g.iter().map(|v| v - mean).collect());
    }
    Draws { mixing, log_gains }
}

fn build_sections(cfg: &LinkConfig, draws: &Draws, spread: f64) -> Vec<Section> {
    let groups = cfg.channel_groups();
    let sec_km = cfg.length_km / cfg.n_sections as f64;
    let per_channel: Vec<f64> = groups.iter().map(|&g| cfg.dmgd_ps_per_km[g]).collect();
    let mean = per_channel.iter().sum::<f64>() / per_channel.len() as f64;
    let delays: Vec<f64> = per_channel
        .iter()
        .map(|d| (d - mean) * sec_km * 1e-12)
        .collect();
    draws
        .mixing
        .iter()
        .zip(&draws.log_gains)
        .map(|(u, lg)| {
            let mut m = u.clone();
            for r in 0..m.nrows() {
                let g = (spread * lg[r / 2]).exp();
                for c in 0..m.ncols() {
                    m[(r, c)] *= g;
                }
            }
            Section {
                matrix: m,
                channel_delays_s: delays.clone(),
            }
        })
        .collect()
}

fn composite(sections: &[Section], grid: &[f64]) -> Vec<CMatrix> {
    let dim = sections[0].matrix.nrows();
    grid.iter()
        .map(|&f| {
            let mut acc = CMatrix::identity(dim, dim);
            for s in sections {
                acc = &s.matrix * acc;
                for (r, &tau) in s.channel_delays_s.iter().enumerate() {
                    if tau != 0.0 {
                        let ph = C64::from_polar(1.0, -2.0 * PI * f * tau);
                        for c in 0..dim {
                            acc[(r, c)] *= ph;
                        }
                    }
                }
            }
            acc
        })
        .collect()
}

fn band_indices(grid: &[f64], band: Option<f64>) -> Vec<usize> {
    match band {
        Some(b) => (0..grid.len()).filter(|&k| grid[k].abs() <= b / 2.0).collect(),
        None => (0..grid.len()).collect(),
    }
}

fn mdl_in_band(sections: &[Section], grid: &[f64], band: &[usize]) -> Result<f64> {
    let g: Vec<f64> = band.iter().map(|&k| grid[k]).collect();
    compute_mdl(&composite(sections, &g))
}

impl ChannelRealization {
    fn assemble(
        cfg: &LinkConfig,
        sections: Vec<Section>,
        gain_spread: f64,
        normalize: Option<f64>,
    ) -> Self {
        let grid: Vec<f64> = (0..cfg.n_freq)
            .map(|k| fft::bin_frequency(k, cfg.n_freq, cfg.sample_rate_hz))
            .collect();
        let response = composite(&sections, &grid);
        let gain = normalize.unwrap_or_else(|| {
            let mean_eig = response
                .iter()
                .map(|h| h.iter().map(|v| v.norm_sqr()).sum::<f64>())
                .sum::<f64>()
                / (response.len() * cfg.dim()) as f64;
            mean_eig.sqrt().recip()
        });
        let response = response
            .into_iter()
            .map(|h| h * C64::new(gain, 0.0))
            .collect();
        let beta2_l_s2 = cfg.cd_ps2_per_km * 1e-24 * cfg.length_km;
        Self {
            dim: cfg.dim(),
            sample_rate: cfg.sample_rate_hz,
            sections,
            beta2_l_s2,
            gain,
            grid_hz: grid,
            response,
            mdl_band_hz: cfg.mdl_band_hz,
            gain_spread,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Accumulated group-velocity dispersion `β2·L` in s².
    pub fn beta2_l(&self) -> f64 {
        self.beta2_l_s2
    }

    /// Scalar applied so the mean of `trace(HᴴH)/2N` over the grid is one.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Standard deviation (natural-log units) of the per-section mode gains.
    pub fn gain_spread(&self) -> f64 {
        self.gain_spread
    }

    pub fn grid_hz(&self) -> &[f64] {
        &self.grid_hz
    }

    /// Composite response on the grid (FFT bin order, no CD phase).
    pub fn response(&self) -> &[CMatrix] {
        &self.response
    }

    /// Grid responses inside the MDL calibration band.
    pub fn in_band_response(&self) -> Vec<CMatrix> {
        band_indices(&self.grid_hz, self.mdl_band_hz)
            .into_iter()
            .map(|k| self.response[k].clone())
            .collect()
    }

    /// MDL of the full link, evaluated in the calibration band.
    pub fn mdl_db(&self) -> Result<f64> {
        compute_mdl(&self.in_band_response())
    }

    /// Columns `cols` of the in-band response (launch subset).
    pub fn in_band_columns(&self, cols: usize) -> Vec<CMatrix> {
        self.in_band_response()
            .into_iter()
            .map(|h| h.columns(0, cols).into_owned())
            .collect()
    }

    /// Time-domain impulse responses (`n_freq` taps, circular, per pair).
    fn impulse_responses(&self) -> Vec<Vec<C64>> {
        let n = self.grid_hz.len();
        let mut out = Vec::with_capacity(self.dim * self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let mut buf: Vec<C64> = self.response.iter().map(|h| h[(r, c)]).collect();
                fft::inverse(&mut buf);
                debug_assert_eq!(buf.len(), n);
                out.push(buf);
            }
        }
        out
    }

    /// Apply the channel in the frequency domain. `x` is zero-padded with
    /// `pad_modes` silent modes (two channels each) at the end.
    pub fn apply(&self, x: &ComplexFrame, pad_modes: usize) -> Result<ComplexFrame> {
        apply_channel(x, self, pad_modes)
    }

    pub fn to_record(&self) -> ChannelRecord {
        ChannelRecord {
            format: "mdmlink.channel.v1".into(),
            dim: self.dim,
            sample_rate_hz: self.sample_rate,
            beta2_l_s2: self.beta2_l_s2,
            gain: self.gain,
            gain_spread: self.gain_spread,
            n_freq: self.grid_hz.len(),
            mdl_band_hz: self.mdl_band_hz,
            sections: self
                .sections
                .iter()
                .map(|s| SectionRecord {
                    matrix: MatrixRecord::from(&s.matrix),
                    channel_delays_s: s.channel_delays_s.clone(),
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &ChannelRecord) -> Result<Self> {
        if rec.sections.is_empty() {
            return Err(invalid("channel record has no sections"));
        }
        let sections = rec
            .sections
            .iter()
            .map(|s| {
                Ok(Section {
                    matrix: DMatrix::try_from(&s.matrix)?,
                    channel_delays_s: s.channel_delays_s.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cfg = LinkConfig {
            n_modes_link: rec.dim / 2,
            sample_rate_hz: rec.sample_rate_hz,
            n_freq: rec.n_freq,
            mdl_band_hz: rec.mdl_band_hz,
            ..LinkConfig::default()
        };
        let mut ch = Self::assemble(&cfg, sections, rec.gain_spread, Some(rec.gain));
        ch.beta2_l_s2 = rec.beta2_l_s2;
        Ok(ch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRecord {
    pub matrix: MatrixRecord,
    pub channel_delays_s: Vec<f64>,
}

/// Structured-text (JSON) form of a channel realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub format: String,
    pub dim: usize,
    pub sample_rate_hz: f64,
    pub beta2_l_s2: f64,
    pub gain: f64,
    pub gain_spread: f64,
    pub n_freq: usize,
    pub mdl_band_hz: Option<f64>,
    pub sections: Vec<SectionRecord>,
}

/// Draw a channel and scale its per-mode gain spread until the realized MDL
/// equals `cfg.target_mdl_db` (bisection, 0.01 dB tolerance).
pub fn synthesize_channel(cfg: &LinkConfig) -> Result<ChannelRealization> {
    cfg.validate()?;
    let draws = draw_sections(cfg);
    let grid: Vec<f64> = (0..cfg.n_freq)
        .map(|k| fft::bin_frequency(k, cfg.n_freq, cfg.sample_rate_hz))
        .collect();
    let band = band_indices(&grid, cfg.mdl_band_hz);
    if band.is_empty() {
        return Err(invalid("MDL calibration band contains no grid points"));
    }
    let target = cfg.target_mdl_db;
    let mdl_at = |spread: f64| mdl_in_band(&build_sections(cfg, &draws, spread), &grid, &band);

    let spread = if target == 0.0 {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = 0.02;
        let mut v_hi = mdl_at(hi)?;
        while v_hi < target {
            lo = hi;
            hi *= 2.0;
            if hi > MAX_GAIN_SPREAD {
                return Err(Error::MdlCalibration {
                    target_db: target,
                    achieved_db: v_hi,
                });
            }
            v_hi = mdl_at(hi)?;
        }
        let mut mid = hi;
        let mut v = v_hi;
        for _ in 0..80 {
            if (v - target).abs() <= MDL_TOLERANCE_DB {
                break;
            }
            mid = 0.5 * (lo + hi);
            v = mdl_at(mid)?;
            if v < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (v - target).abs() > MDL_TOLERANCE_DB {
            return Err(Error::MdlCalibration {
                target_db: target,
                achieved_db: v,
            });
        }
        mid
    };
    Ok(ChannelRealization::assemble(
        cfg,
        build_sections(cfg, &draws, spread),
        spread,
        None,
    ))
}

/// See [`ChannelRealization::apply`].
pub fn apply_channel(
    x: &ComplexFrame,
    ch: &ChannelRealization,
    pad_modes: usize,
) -> Result<ComplexFrame> {
    let n_in = x.n_channels() + 2 * pad_modes;
    if n_in != ch.dim {
        return Err(Error::DimensionMismatch {
            expected: ch.dim,
            got: n_in,
        });
    }
    if ((x.sample_rate() - ch.sample_rate) / ch.sample_rate).abs() > 1e-9 {
        return Err(invalid(format!(
            "frame sample rate {} does not match channel grid rate {}",
            x.sample_rate(),
            ch.sample_rate
        )));
    }
    let len = x.len();
    let n_freq = ch.grid_hz.len();
    if len < n_freq {
        return Err(invalid(format!(
            "frame length {len} shorter than channel grid {n_freq}"
        )));
    }
    let spectra: Vec<Vec<C64>> = x
        .channels()
        .iter()
        .map(|c| {
            let mut b = c.clone();
            fft::forward(&mut b);
            b
        })
        .collect();
    let h = ch.impulse_responses();
    let cd: Vec<C64> = (0..len)
        .map(|k| {
            let w = 2.0 * PI * fft::bin_frequency(k, len, x.sample_rate());
            C64::from_polar(1.0, 0.5 * ch.beta2_l_s2 * w * w)
        })
        .collect();
    let half = n_freq / 2;
    let mut out = Vec::with_capacity(ch.dim);
    let mut hf = vec![C64::new(0.0, 0.0); len];
    for r in 0..ch.dim {
        let mut acc = vec![C64::new(0.0, 0.0); len];
        for (c, xs) in spectra.iter().enumerate() {
            let taps = &h[r * ch.dim + c];
            hf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            hf[..half].copy_from_slice(&taps[..half]);
            hf[len - (n_freq - half)..].copy_from_slice(&taps[half..]);
            fft::forward(&mut hf);
            for ((a, hv), xv) in acc.iter_mut().zip(&hf).zip(xs) {
                *a += hv * xv;
            }
        }
        for (a, c) in acc.iter_mut().zip(&cd) {
            *a *= c;
        }
        fft::inverse(&mut acc);
        out.push(acc);
    }
    x.with_channels(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::unitarity_error;

    fn quick(target: f64) -> LinkConfig {
        LinkConfig {
            n_sections: 10,
            n_freq: 64,
            target_mdl_db: target,
            ..LinkConfig::default()
        }
    }

    #[test]
    fn zero_mdl_is_unitary_everywhere() {
        let ch = synthesize_channel(&quick(0.0)).unwrap();
        for h in ch.response() {
            assert!(unitarity_error(h) < 1e-9);
        }
    }

    #[test]
    fn calibrates_target() {
        let ch = synthesize_channel(&quick(6.0)).unwrap();
        assert!((ch.mdl_db().unwrap() - 6.0).abs() < 0.1);
    }

    #[test]
    fn single_flat_section_is_constant() {
        let cfg = LinkConfig {
            n_sections: 1,
            dmgd_ps_per_km: vec![0.0; 3],
            cd_ps2_per_km: 0.0,
            ..quick(3.0)
        };
        let ch = synthesize_channel(&cfg).unwrap();
        let h0 = &ch.response()[0];
        for h in ch.response() {
            assert!((h - h0).norm() < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let a = synthesize_channel(&quick(4.0)).unwrap();
        let b = synthesize_channel(&quick(4.0)).unwrap();
        assert_eq!(a.to_record(), b.to_record());
    }

    #[test]
    fn record_round_trip_preserves_response() {
        let a = synthesize_channel(&quick(4.0)).unwrap();
        let text = serde_json::to_string(&a.to_record()).unwrap();
        let rec: ChannelRecord = serde_json::from_str(&text).unwrap();
        let b = ChannelRealization::from_record(&rec).unwrap();
        for (x, y) in a.response().iter().zip(b.response()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let ch = synthesize_channel(&quick(0.0)).unwrap();
        let x = ComplexFrame::new(vec![vec![C64::new(1.0, 0.0); 128]; 5], 99.99e9).unwrap();
        assert!(matches!(
            apply_channel(&x, &ch, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
