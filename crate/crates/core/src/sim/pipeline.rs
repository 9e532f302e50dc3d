use serde::{Deserialize, Serialize};

use super::config::{ExperimentSpec, FrontEnd};
use super::run::derive_seed;
use crate::channel::{add_noise, synthesize_channel, ChannelRealization, NoiseReport};
use crate::dsp::{self, RxSelection, TapTensor};
use crate::error::{Error, Result};
use crate::kk;
use crate::metrics::{compute_gmi, crosstalk_matrices, hard_ber, mdl_from_taps, MetricsReport, MISALIGNED_BER};
use crate::sigkit::{self, resample::rational_approx, ComplexFrame, Constellation};
use crate::txchain::{assemble_spatial_frame, Reference, SpatialFrame};

pub(crate) const AXIS_TX: u64 = 1;
pub(crate) const AXIS_CHANNEL: u64 = 2;
pub(crate) const AXIS_NOISE: u64 = 3;

/// Everything shared by all sweep points of one experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub tx: SpatialFrame,
    pub channel: ChannelRealization,
    /// Noiseless channel output, one channel per link mode and polarization.
    pub received: ComplexFrame,
    pub tx_seed: u64,
    pub channel_seed: u64,
}

/// Build the transmitted frame, draw the channel and propagate.
pub fn prepare(spec: &ExperimentSpec) -> Result<Prepared> {
    let tx_seed = derive_seed(spec.seed, AXIS_TX, 0);
    let channel_seed = derive_seed(spec.seed, AXIS_CHANNEL, 0);
    let tx_cfg = crate::txchain::TxConfig {
        seed: tx_seed,
        ..spec.tx.clone()
    };
    let link = crate::channel::LinkConfig {
        seed: channel_seed,
        ..spec.link.clone()
    };
    let tx = assemble_spatial_frame(&tx_cfg)?;
    let channel = synthesize_channel(&link)?;
    let pad = link.n_modes_link - tx.modes.len();
    let received = channel.apply(&tx.frame, pad)?;
    Ok(Prepared {
        tx,
        channel,
        received,
        tx_seed,
        channel_seed,
    })
}

/// Result of one receiver subset at one sweep point.
#[derive(Debug, Clone)]
pub struct SubsetOutput {
    pub k_rx: usize,
    pub result: std::result::Result<(MetricsReport, TapTensor), String>,
}

/// Diagnostics and per-subset results of one (power, capture) point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub noise_seed: u64,
    pub snr_db: f64,
    pub fo_hz: f64,
    pub fo_confidence: f64,
    pub timing_lag: isize,
    pub kk_bias: Vec<f64>,
    pub kk_clamped_samples: usize,
}

#[derive(Debug, Clone)]
pub struct PointOutput {
    pub diagnostics: PointDiagnostics,
    pub subsets: Vec<SubsetOutput>,
}

pub(crate) fn noise_seed(base: u64, power_dbm: f64, capture: usize) -> u64 {
    derive_seed(derive_seed(base, AXIS_NOISE, power_dbm.to_bits()), AXIS_NOISE, capture as u64)
}

fn front_end(x: &ComplexFrame, spec: &ExperimentSpec) -> Result<(ComplexFrame, Vec<f64>, usize)> {
    match spec.rx.front_end {
        FrontEnd::KramersKronig => {
            let (frame, per) = kk::receive_frame(x, &spec.kk)?;
            let bias = per.iter().map(|c| c.bias.bias).collect();
            let clamped = per.iter().map(|c| c.clamped_samples).sum();
            Ok((frame, bias, clamped))
        }
        FrontEnd::Coherent => {
            let (p, q) = rational_approx(spec.kk.adc_rate_hz / x.sample_rate(), 16);
            let y = sigkit::resample(x, p, q)?.frequency_shift(spec.kk.residual_offset_hz);
            Ok((y, Vec::new(), 0))
        }
    }
}

fn truncated_frame(x: &ComplexFrame, n_sym: usize) -> Result<ComplexFrame> {
    let n = (2 * n_sym).min(x.len());
    x.with_channels(x.channels().iter().map(|c| c[..n].to_vec()).collect())
}

/// Run noise loading, detection, DSP and metrics for one launch power and
/// capture. Per-subset failures are returned inside [`SubsetOutput`].
pub fn run_point(
    spec: &ExperimentSpec,
    prep: &Prepared,
    power_dbm: f64,
    capture: usize,
) -> Result<PointOutput> {
    let seed = noise_seed(spec.seed, power_dbm, capture);
    let (noisy, noise): (ComplexFrame, NoiseReport) = add_noise(&prep.received, power_dbm, &spec.link, seed)?;
    let (detected, kk_bias, clamped) = front_end(&noisy, spec)?;
    let cd = dsp::compensate_dispersion(&detected, prep.channel.beta2_l())?;
    let mut x = dsp::matched_filter(&dsp::to_two_sps(&cd, spec.tx.baud)?, &spec.tx.rrc)?;

    let refs = &prep.tx.references;
    let span = spec.rx.estimation_span.min(x.len() / 2);
    let short_refs: Vec<Reference> = refs.iter().map(|r| r.truncated(span, 3)).collect();
    let fo = dsp::estimate_frequency_offset(
        &truncated_frame(&x, span)?,
        &short_refs,
        spec.tx.baud,
        spec.rx.fo_block,
        spec.rx.fo_max_lag,
    )?;
    x = dsp::compensate_frequency_offset(&x, fo.hz);
    let lag = dsp::align_timing(&x, refs, spec.rx.timing_max_lag, span.min(4096))?;
    if lag != 0 {
        x = dsp::shift_symbols(&x, lag)?;
    }

    let c = Constellation::star_8qam();
    let m = c.bits_per_symbol();
    let n_tx = prep.tx.modes.len();
    let subsets = spec
        .subsets()
        .into_iter()
        .map(|k| SubsetOutput {
            k_rx: k,
            result: evaluate_subset(spec, &x, refs, n_tx, k, &c, m).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(PointOutput {
        diagnostics: PointDiagnostics {
            noise_seed: seed,
            snr_db: noise.snr_db,
            fo_hz: fo.hz,
            fo_confidence: fo.confidence,
            timing_lag: lag,
            kk_bias,
            kk_clamped_samples: clamped,
        },
        subsets,
    })
}

fn evaluate_subset(
    spec: &ExperimentSpec,
    x: &ComplexFrame,
    refs: &[Reference],
    n_tx: usize,
    k: usize,
    c: &Constellation,
    m: usize,
) -> Result<(MetricsReport, TapTensor)> {
    let sel = RxSelection {
        transmitted_modes: n_tx,
        received_modes: k,
    };
    let rx = dsp::select_receivers(x, sel)?;
    let mut out = dsp::mimo_equalize(&rx, refs, &spec.eq, c)?;
    let n_sym = out.start + out.symbols[0].len();
    let n_eval = n_sym.saturating_sub(out.start + spec.rx.guard_symbols);
    let mut slips = 0;
    if spec.rx.slip_block > 0 {
        for (s, r) in out.symbols.iter_mut().zip(refs) {
            slips += dsp::correct_cycle_slips(&mut s[..n_eval], &r.symbols[out.start..], spec.rx.slip_block);
        }
    }
    let gmi: Vec<f64> = out
        .symbols
        .iter()
        .zip(refs)
        .map(|(s, r)| {
            let bits = &r.bits[out.start * m..(out.start + n_eval) * m];
            let ber = hard_ber(&s[..n_eval], bits, c);
            if ber > MISALIGNED_BER {
                return Err(Error::Misaligned { ber });
            }
            compute_gmi(&s[..n_eval], bits, c)
        })
        .collect::<Result<_>>()?;
    let mdl = mdl_from_taps(&out.taps, spec.rx.tap_band_fraction).ok();
    let xt = crosstalk_matrices(&out.taps, &spec.link.mode_group_map);
    let mut report = MetricsReport::from_streams(gmi, spec.tx.baud, m, &spec.fec, mdl, Some(xt));
    report.cycle_slips = slips;
    Ok((report, out.taps))
}
