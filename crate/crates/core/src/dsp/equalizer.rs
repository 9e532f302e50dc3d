use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::TapTensor;
use crate::error::{invalid, Error, Result};
use crate::sigkit::{ComplexFrame, Constellation, C64};
use crate::txchain::Reference;

/// Filter length the step sizes are quoted for.
const REFERENCE_TAPS: f64 = 51.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqualizerParams {
    /// Taps per input/output pair at T/2 spacing (odd).
    pub n_taps: usize,
    /// Step sizes are quoted for a 51-tap filter and scaled by
    /// `51 / n_taps`, so the LMS misadjustment does not grow with length.
    pub mu_train: f64,
    pub mu_dd: f64,
    pub n_train: usize,
    pub bps_phases: usize,
    pub bps_window: usize,
    /// Output/input power ratio that counts as divergence...
    pub divergence_ratio: f64,
    /// ...when sustained for this many symbols.
    pub divergence_span: usize,
}

impl Default for EqualizerParams {
    fn default() -> Self {
        Self {
            n_taps: 51,
            mu_train: 1e-3,
            mu_dd: 1e-4,
            n_train: 20_000,
            bps_phases: 32,
            bps_window: 256,
            divergence_ratio: 10.0,
            divergence_span: 1000,
        }
    }
}

impl EqualizerParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 || self.n_taps % 2 == 0 {
            return Err(invalid("n_taps must be odd"));
        }
        if !(self.mu_train > 0.0) || !(self.mu_dd >= 0.0) {
            return Err(invalid("step sizes must be positive"));
        }
        if self.bps_phases == 0 || self.bps_window == 0 {
            return Err(invalid("BPS needs at least one phase and a non-empty window"));
        }
        if !(self.divergence_ratio > 1.0) || self.divergence_span == 0 {
            return Err(invalid("divergence guard needs ratio > 1 and span > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EqualizerOutput {
    /// `symbols[o][k]` estimates reference symbol `start + k`.
    pub symbols: Vec<Vec<C64>>,
    pub start: usize,
    pub taps: TapTensor,
    /// Mean |e|² over outputs for every processed symbol.
    pub error_trace: Vec<f64>,
    /// Carrier phase per output and symbol.
    pub phases: Vec<Vec<f64>>,
    /// Common scale applied to the inputs before filtering.
    pub input_scale: f64,
}

/// Cyclically padded copy of each input so symbol `n` sees samples
/// `pad[2n .. 2n + len]` centred on sample `2n`.
fn padded_inputs(x: &ComplexFrame, len: usize, scale: f64) -> Vec<Vec<C64>> {
    let n = x.len();
    let c = len / 2;
    x.channels()
        .iter()
        .map(|ch| {
            (0..n + len)
                .map(|j| ch[(j + n - c % n) % n] * scale)
                .collect()
        })
        .collect()
}

fn common_scale(x: &ComplexFrame) -> f64 {
    let p = x.total_power() / x.n_channels() as f64;
    if p > 0.0 {
        p.sqrt().recip()
    } else {
        1.0
    }
}

/// Sliding-window blind phase search for one output stream.
struct Bps {
    rot: Vec<C64>,
    theta: Vec<f64>,
    hist: Vec<f64>,
    sums: Vec<f64>,
    pos: usize,
    window: usize,
    phase: f64,
}

impl Bps {
    fn new(phases: usize, window: usize) -> Self {
        let theta: Vec<f64> = (0..phases)
            .map(|b| -FRAC_PI_4 + b as f64 * FRAC_PI_2 / phases as f64)
            .collect();
        Self {
            rot: theta.iter().map(|&t| C64::from_polar(1.0, -t)).collect(),
            theta,
            hist: vec![0.0; phases * window],
            sums: vec![0.0; phases],
            pos: 0,
            window,
            phase: 0.0,
        }
    }

    fn update(&mut self, z: C64, c: &Constellation) -> f64 {
        let nb = self.rot.len();
        let slot = &mut self.hist[self.pos * nb..(self.pos + 1) * nb];
        let mut best = (0, f64::INFINITY);
        for b in 0..nb {
            let d = c.min_distance_sqr(z * self.rot[b]);
            self.sums[b] += d - slot[b];
            slot[b] = d;
            if self.sums[b] < best.1 {
                best = (b, self.sums[b]);
            }
        }
        self.pos = (self.pos + 1) % self.window;
        let raw = self.theta[best.0];
        self.phase = raw + FRAC_PI_2 * ((self.phase - raw) / FRAC_PI_2).round();
        self.phase
    }
}

/// Adaptive MIMO equalization starting from centre-identity taps.
/// See [`mimo_equalize_from`].
pub fn mimo_equalize(
    x: &ComplexFrame,
    refs: &[Reference],
    params: &EqualizerParams,
    c: &Constellation,
) -> Result<EqualizerOutput> {
    let init = TapTensor::center_identity(refs.len(), x.n_channels(), params.n_taps);
    mimo_equalize_from(x, refs, params, c, init)
}

/// Butterfly LMS equalizer over a 2-sps frame with one output per reference.
///
/// Taps are trained on the first `n_train` symbols against `refs` and then
/// switch to decision-directed updates. Each output carries its own blind
/// phase search inside the loop; the error is formed after derotation and
/// rotated back for the tap update.
pub fn mimo_equalize_from(
    x: &ComplexFrame,
    refs: &[Reference],
    params: &EqualizerParams,
    c: &Constellation,
    init: TapTensor,
) -> Result<EqualizerOutput> {
    params.validate()?;
    let n_out = refs.len();
    let n_in = x.n_channels();
    let len = params.n_taps;
    if n_out == 0 || n_out > n_in {
        return Err(invalid(format!(
            "{n_out} outputs from {n_in} inputs: need 1 <= outputs <= inputs"
        )));
    }
    if init.shape() != (n_out, n_in, len) {
        return Err(invalid("initial taps do not match equalizer shape"));
    }
    let n_sym = (x.len() / 2).min(refs.iter().map(|r| r.symbols.len()).min().unwrap_or(0));
    if n_sym <= params.n_train {
        return Err(invalid(format!(
            "{n_sym} symbols available but {} needed for training",
            params.n_train
        )));
    }
    let scale = common_scale(x);
    let xp = padded_inputs(x, len, scale);
    let mut w = init;
    let mut bps: Vec<Bps> = (0..n_out)
        .map(|_| Bps::new(params.bps_phases, params.bps_window))
        .collect();
    let mut symbols = vec![Vec::with_capacity(n_sym - params.n_train); n_out];
    let mut phases = vec![Vec::with_capacity(n_sym); n_out];
    let mut trace = Vec::with_capacity(n_sym);
    let mut window = vec![C64::new(0.0, 0.0); n_in * len];
    let mut power_ema = 1.0;
    let mut over = 0usize;
    for n in 0..n_sym {
        for (i, ch) in xp.iter().enumerate() {
            window[i * len..(i + 1) * len].copy_from_slice(&ch[2 * n..2 * n + len]);
        }
        let training = n < params.n_train;
        let mu = if training { params.mu_train } else { params.mu_dd } * REFERENCE_TAPS / len as f64;
        let mut err_acc = 0.0;
        let mut pow_acc = 0.0;
        for o in 0..n_out {
            let row = w.row_mut(o);
            let z: C64 = row.iter().zip(&window).map(|(a, b)| a * b).sum();
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Diverged {
                    symbol: n,
                    power_ratio: f64::INFINITY,
                    taps: Box::new(w),
                });
            }
            let phi = bps[o].update(z, c);
            let rot = C64::from_polar(1.0, phi);
            let y = z * rot.conj();
            let target = if training {
                refs[o].symbols[n]
            } else {
                c.decide(y)
            };
            let e = target - y;
            let g = e * rot * mu;
            for (a, b) in row.iter_mut().zip(&window) {
                *a += g * b.conj();
            }
            if !training {
                symbols[o].push(y);
            }
            phases[o].push(phi);
            err_acc += e.norm_sqr();
            pow_acc += z.norm_sqr();
        }
        trace.push(err_acc / n_out as f64);
        power_ema += (pow_acc / n_out as f64 - power_ema) / 64.0;
        if power_ema > params.divergence_ratio {
            over += 1;
            if over >= params.divergence_span {
                return Err(Error::Diverged {
                    symbol: n,
                    power_ratio: power_ema,
                    taps: Box::new(w),
                });
            }
        } else {
            over = 0;
        }
    }
    if !w.is_finite() {
        return Err(Error::Diverged {
            symbol: n_sym,
            power_ratio: f64::INFINITY,
            taps: Box::new(w),
        });
    }
    Ok(EqualizerOutput {
        symbols,
        start: params.n_train,
        taps: w,
        error_trace: trace,
        phases,
        input_scale: scale,
    })
}

/// Filter a 2-sps frame with fixed taps and per-output blind phase search.
/// Returns one derotated symbol stream per output, starting at symbol 0.
pub fn apply_taps(
    x: &ComplexFrame,
    taps: &TapTensor,
    params: &EqualizerParams,
    c: &Constellation,
) -> Result<Vec<Vec<C64>>> {
    let (n_out, n_in, len) = taps.shape();
    if n_in != x.n_channels() {
        return Err(Error::DimensionMismatch {
            expected: n_in,
            got: x.n_channels(),
        });
    }
    let n_sym = x.len() / 2;
    let xp = padded_inputs(x, len, common_scale(x));
    let mut out = vec![Vec::with_capacity(n_sym); n_out];
    let mut window = vec![C64::new(0.0, 0.0); n_in * len];
    for o in 0..n_out {
        let mut bps = Bps::new(params.bps_phases, params.bps_window);
        let row = taps.row(o);
        for n in 0..n_sym {
            for (i, ch) in xp.iter().enumerate() {
                window[i * len..(i + 1) * len].copy_from_slice(&ch[2 * n..2 * n + len]);
            }
            let z: C64 = row.iter().zip(&window).map(|(a, b)| a * b).sum();
            let phi = bps.update(z, c);
            out[o].push(z * C64::from_polar(1.0, -phi));
        }
    }
    Ok(out)
}
