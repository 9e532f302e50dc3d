//! Multi-mode transmitter: PRBS bits → 8QAM → RRC-shaped oversampled
//! baseband → per-mode decorrelation delays.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sigkit::{self, fft, ComplexFrame, Constellation, RrcSpec, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Spatial modes in fixed rank order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    LP01,
    LP11a,
    LP11b,
    LP21a,
    LP21b,
    LP02,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::LP01,
        Mode::LP11a,
        Mode::LP11b,
        Mode::LP21a,
        Mode::LP21b,
        Mode::LP02,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::LP01 => "LP01",
            Mode::LP11a => "LP11a",
            Mode::LP11b => "LP11b",
            Mode::LP21a => "LP21a",
            Mode::LP21b => "LP21b",
            Mode::LP02 => "LP02",
        }
    }

    /// Mode group (0-based): LP01 | LP11a,b | LP21a,b, LP02.
    pub fn group(self) -> usize {
        match self {
            Mode::LP01 => 0,
            Mode::LP11a | Mode::LP11b => 1,
            _ => 2,
        }
    }
}

/// Real, strictly positive amplitude response versus |f|, linearly
/// interpolated and held constant beyond the last point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCurve {
    pub freqs_hz: Vec<f64>,
    pub gains: Vec<f64>,
}

impl FrequencyCurve {
    pub fn flat() -> Self {
        Self {
            freqs_hz: vec![0.0],
            gains: vec![1.0],
        }
    }

    /// Inverse magnitude of a first-order low-pass, sampled up to `f_max`.
    pub fn inverse_first_order_lowpass(cutoff_hz: f64, f_max: f64, points: usize) -> Self {
        let freqs_hz: Vec<f64> = (0..points)
            .map(|k| f_max * k as f64 / (points - 1) as f64)
            .collect();
        let gains = freqs_hz
            .iter()
            .map(|f| (1.0 + (f / cutoff_hz).powi(2)).sqrt())
            .collect();
        Self { freqs_hz, gains }
    }

    pub fn validate(&self) -> Result<()> {
        if self.freqs_hz.is_empty() || self.freqs_hz.len() != self.gains.len() {
            return Err(invalid("frequency curve needs matching, non-empty freqs/gains"));
        }
        if self.freqs_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("frequency curve points must be strictly increasing"));
        }
        if self.gains.iter().any(|&g| !(g > 0.0)) {
            return Err(invalid("frequency response must be strictly positive"));
        }
        Ok(())
    }

    pub fn gain_at(&self, f: f64) -> f64 {
        let f = f.abs();
        let fs = &self.freqs_hz;
        if f <= fs[0] {
            return self.gains[0];
        }
        if f >= fs[fs.len() - 1] {
            return self.gains[fs.len() - 1];
        }
        let i = fs.partition_point(|&x| x <= f) - 1;
        let t = (f - fs[i]) / (fs[i + 1] - fs[i]);
        self.gains[i] * (1.0 - t) + self.gains[i + 1] * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TxConfig {
    pub baud: f64,
    pub samples_per_symbol: usize,
    pub n_symbols: usize,
    pub rrc: RrcSpec,
    pub active_modes: Vec<Mode>,
    /// Per-mode decorrelation fiber length in metres, indexed by mode rank.
    pub decorrelation_delays_m: Vec<f64>,
    pub group_index: f64,
    pub pre_emphasis: Option<FrequencyCurve>,
    pub prbs_degree: u32,
    pub seed: u64,
}

impl Default for TxConfig {
    fn default() -> Self {
        Self {
            baud: 33.33e9,
            samples_per_symbol: 3,
            n_symbols: 1 << 16,
            rrc: RrcSpec::default(),
            active_modes: Mode::ALL.to_vec(),
            decorrelation_delays_m: vec![0.0, 20.0, 30.0, 50.0, 60.0, 80.0],
            group_index: 1.468,
            pre_emphasis: None,
            prbs_degree: 23,
            seed: 1,
        }
    }
}

impl TxConfig {
    pub fn sample_rate(&self) -> f64 {
        self.baud * self.samples_per_symbol as f64
    }

    /// Hard violations only; unusual-but-allowed settings come from [`Self::warnings`].
    pub fn validate(&self) -> Result<()> {
        if !(self.baud > 0.0) {
            return Err(invalid("baud must be positive"));
        }
        if self.samples_per_symbol < 2 {
            return Err(invalid("samples_per_symbol must be >= 2"));
        }
        if self.n_symbols == 0 {
            return Err(invalid("n_symbols must be positive"));
        }
        if self.rrc.samples_per_symbol != self.samples_per_symbol {
            return Err(invalid("rrc.samples_per_symbol must equal samples_per_symbol"));
        }
        self.rrc.validate()?;
        if self.active_modes.is_empty() {
            return Err(invalid("at least one active mode required"));
        }
        if self.decorrelation_delays_m.len() != Mode::ALL.len() {
            return Err(invalid("decorrelation_delays_m needs one entry per mode (6)"));
        }
        if self.decorrelation_delays_m.iter().any(|&d| d < 0.0) {
            return Err(invalid("decorrelation delays must be nonnegative"));
        }
        if let Some(pe) = &self.pre_emphasis {
            pe.validate()?;
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let n = self.active_modes.len();
        if n != 3 && n != 6 {
            w.push(format!("{n} active modes: only 3 and 6 match the reference experiments"));
        }
        let mut sorted = self.sorted_modes();
        sorted.dedup();
        if sorted != Mode::ALL[..sorted.len()] {
            w.push("active modes are not a prefix of the mode ranking".into());
        }
        w
    }

    /// Active modes, deduplicated, in rank order.
    pub fn sorted_modes(&self) -> Vec<Mode> {
        let mut m = self.active_modes.clone();
        m.sort();
        m.dedup();
        m
    }

    /// Cyclic delay of a mode, rounded to a whole number of symbols.
    pub fn delay_symbols(&self, mode: Mode) -> usize {
        let t = self.decorrelation_delays_m[mode.index()] * self.group_index / SPEED_OF_LIGHT;
        let sym = (t * self.baud).round() as usize;
        sym % self.n_symbols
    }
}

/// Known transmitted data for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub symbols: Vec<C64>,
    pub bits: Vec<u8>,
}

impl Reference {
    /// Cyclic shift by `k` symbols (`out[n] = in[n - k]`).
    pub fn rotated(&self, k: usize, m: usize) -> Self {
        let n = self.symbols.len();
        let k = k % n;
        let mut symbols = self.symbols.clone();
        symbols.rotate_right(k);
        let mut bits = self.bits.clone();
        bits.rotate_right(k * m);
        Self { symbols, bits }
    }

    /// Drop to the first `n` symbols.
    pub fn truncated(&self, n: usize, m: usize) -> Self {
        Self {
            symbols: self.symbols[..n].to_vec(),
            bits: self.bits[..n * m].to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tributary {
    pub frame: ComplexFrame,
    pub reference: Reference,
}

/// Derive a nonzero LFSR seed from a 64-bit seed.
fn lfsr_seed(seed: u64, degree: u32) -> u32 {
    let mask = (1u64 << degree) - 1;
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    let s = z & mask;
    if s == 0 {
        1
    } else {
        s as u32
    }
}

/// One RRC-shaped, oversampled 8QAM tributary with its reference data.
/// Shaping is circular so the frame is exactly one period.
pub fn build_tributary(cfg: &TxConfig, tributary_seed: u64) -> Result<Tributary> {
    cfg.validate()?;
    let c = Constellation::star_8qam();
    let m = c.bits_per_symbol();
    let bits = sigkit::generate_prbs(
        cfg.prbs_degree,
        cfg.n_symbols * m,
        lfsr_seed(tributary_seed, cfg.prbs_degree),
    )?;
    let symbols = c.map(&bits)?;
    let sps = cfg.samples_per_symbol;
    let mut up = vec![C64::new(0.0, 0.0); cfg.n_symbols * sps];
    for (k, &s) in symbols.iter().enumerate() {
        up[k * sps] = s;
    }
    let frame = ComplexFrame::new(vec![up], cfg.sample_rate())?;
    let taps = sigkit::design_rrc(&cfg.rrc)?;
    let shaped = sigkit::fir_filter_circular(&frame, &taps)?;
    let p = shaped.channel_powers()[0];
    let mut frame = shaped.scaled(p.sqrt().recip());
    if let Some(curve) = &cfg.pre_emphasis {
        frame = apply_pre_emphasis(&frame, curve)?;
    }
    Ok(Tributary {
        frame,
        reference: Reference { symbols, bits },
    })
}

/// Transmitted multi-mode frame: channel `2i + pol` carries polarization `pol`
/// of the `i`-th active mode (rank order).
#[derive(Debug, Clone)]
pub struct SpatialFrame {
    pub frame: ComplexFrame,
    pub references: Vec<Reference>,
    pub modes: Vec<Mode>,
    pub delays_symbols: Vec<usize>,
}

pub fn assemble_spatial_frame(cfg: &TxConfig) -> Result<SpatialFrame> {
    cfg.validate()?;
    let m = Constellation::star_8qam().bits_per_symbol();
    let pols = [
        build_tributary(cfg, cfg.seed.wrapping_mul(2))?,
        build_tributary(cfg, cfg.seed.wrapping_mul(2).wrapping_add(1))?,
    ];
    let modes = cfg.sorted_modes();
    let sps = cfg.samples_per_symbol;
    let mut channels = Vec::with_capacity(2 * modes.len());
    let mut references = Vec::with_capacity(2 * modes.len());
    let mut delays = Vec::with_capacity(modes.len());
    for &mode in &modes {
        let d = cfg.delay_symbols(mode);
        delays.push(d);
        for trib in &pols {
            let mut ch = trib.frame.channel(0).to_vec();
            ch.rotate_right(d * sps);
            channels.push(ch);
            references.push(trib.reference.rotated(d, m));
        }
    }
    Ok(SpatialFrame {
        frame: ComplexFrame::new(channels, cfg.sample_rate())?,
        references,
        modes,
        delays_symbols: delays,
    })
}

/// Multiply each channel's spectrum by `curve` and restore its energy.
pub fn apply_pre_emphasis(x: &ComplexFrame, curve: &FrequencyCurve) -> Result<ComplexFrame> {
    curve.validate()?;
    let n = x.len();
    let fs = x.sample_rate();
    let gains: Vec<f64> = (0..n)
        .map(|k| curve.gain_at(fft::bin_frequency(k, n, fs)))
        .collect();
    let channels = x
        .channels()
        .iter()
        .map(|ch| {
            let e_in: f64 = ch.iter().map(|v| v.norm_sqr()).sum();
            let mut buf = ch.clone();
            fft::forward(&mut buf);
            buf.iter_mut().zip(&gains).for_each(|(v, g)| *v *= g);
            fft::inverse(&mut buf);
            let e_out: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
            if e_out > 0.0 {
                let k = (e_in / e_out).sqrt();
                buf.iter_mut().for_each(|v| *v *= k);
            }
            buf
        })
        .collect();
    x.with_channels(channels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TxConfig {
        TxConfig {
            n_symbols: 4096,
            rrc: RrcSpec {
                span_symbols: 64,
                ..RrcSpec::default()
            },
            ..TxConfig::default()
        }
    }

    #[test]
    fn default_frame_length() {
        let cfg = TxConfig::default();
        let t = build_tributary(&cfg, 7).unwrap();
        assert_eq!(t.frame.len(), (1 << 16) * 3);
        assert_eq!(t.reference.symbols.len(), 1 << 16);
        assert_eq!(t.reference.bits.len(), 3 << 16);
    }

    #[test]
    fn deterministic() {
        let a = build_tributary(&small(), 3).unwrap();
        let b = build_tributary(&small(), 3).unwrap();
        assert_eq!(a.frame, b.frame);
        let c = build_tributary(&small(), 4).unwrap();
        assert_ne!(a.frame, c.frame);
    }

    #[test]
    fn unit_power_per_channel() {
        for modes in [Mode::ALL[..3].to_vec(), Mode::ALL.to_vec()] {
            let cfg = TxConfig {
                active_modes: modes.clone(),
                ..small()
            };
            let sf = assemble_spatial_frame(&cfg).unwrap();
            assert_eq!(sf.frame.n_channels(), 2 * modes.len());
            for p in sf.frame.channel_powers() {
                assert!((p - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_delays_give_identical_modes() {
        let cfg = TxConfig {
            decorrelation_delays_m: vec![0.0; 6],
            ..small()
        };
        let sf = assemble_spatial_frame(&cfg).unwrap();
        for i in 1..6 {
            assert_eq!(sf.frame.channel(0), sf.frame.channel(2 * i));
            assert_eq!(sf.frame.channel(1), sf.frame.channel(2 * i + 1));
        }
    }

    #[test]
    fn twenty_metres_is_about_9790_samples() {
        let cfg = TxConfig::default();
        let d = cfg.delay_symbols(Mode::LP11a) * cfg.samples_per_symbol;
        assert!((d as f64 - 9790.0).abs() < 5.0, "{d}");
    }

    #[test]
    fn flat_pre_emphasis_is_identity() {
        let t = build_tributary(&small(), 1).unwrap();
        let y = apply_pre_emphasis(&t.frame, &FrequencyCurve::flat()).unwrap();
        let err = t
            .frame
            .channel(0)
            .iter()
            .zip(y.channel(0))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn nonpositive_response_rejected() {
        let t = build_tributary(&small(), 1).unwrap();
        let bad = FrequencyCurve {
            freqs_hz: vec![0.0, 1e9],
            gains: vec![1.0, 0.0],
        };
        assert!(apply_pre_emphasis(&t.frame, &bad).is_err());
    }

    #[test]
    fn warns_on_odd_mode_counts() {
        let cfg = TxConfig {
            active_modes: vec![Mode::LP01, Mode::LP11a],
            ..TxConfig::default()
        };
        assert!(!cfg.warnings().is_empty());
        assert!(TxConfig::default().warnings().is_empty());
    }
}
