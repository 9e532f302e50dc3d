//! Linear few-mode-fiber link model.
//!
//! The link is a cascade of sections, each a random mode-mixing unitary
//! (strong within a mode group, weak leakage between adjacent groups),
//! followed by per-mode gain offsets and per-group delays. Chromatic
//! dispersion is common to all modes and applied once. The per-mode gain
//! spread is scaled until the realized MDL matches the configured target.

mod noise;
mod synth;

pub use noise::{add_noise, NoiseReport};
pub use synth::{synthesize_channel, ChannelRealization, ChannelRecord, Section};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Spatial modes guided by the link; the channel dimension is twice this.
    pub n_modes_link: usize,
    pub n_sections: usize,
    pub target_mdl_db: f64,
    /// Mode group of each spatial mode (rank order).
    pub mode_group_map: Vec<usize>,
    /// Full random mixing inside each group at every section.
    pub intra_group_mixing: bool,
    /// Power coupled per section between adjacent groups; `-inf` disables it.
    pub inter_group_xt_db: f64,
    /// Differential group delay per mode group.
    pub dmgd_ps_per_km: Vec<f64>,
    pub cd_ps2_per_km: f64,
    pub length_km: f64,
    pub span_loss_db: f64,
    pub amp_noise_figure_db: f64,
    /// Transceiver SNR ceiling; `None` disables both ceiling and NLI terms.
    pub snr_ceiling_db: Option<f64>,
    /// Launch power at which the nonlinear noise term equals the ceiling term.
    pub nli_onset_dbm: Option<f64>,
    pub optical_filter_bw_hz: f64,
    pub noise_ref_bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    /// Frequency grid points of the composite response.
    pub n_freq: usize,
    /// Band (two-sided width, Hz) over which MDL is calibrated; `None` = full grid.
    pub mdl_band_hz: Option<f64>,
    pub seed: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            n_modes_link: 6,
            n_sections: 100,
            target_mdl_db: 11.0,
            mode_group_map: vec![0, 1, 1, 2, 2, 2],
            intra_group_mixing: true,
            inter_group_xt_db: -12.0,
            dmgd_ps_per_km: vec![0.0, 1.0, 2.0],
            cd_ps2_per_km: 20.0,
            length_km: 130.0,
            span_loss_db: 25.0,
            amp_noise_figure_db: 5.0,
            snr_ceiling_db: Some(18.0),
            nli_onset_dbm: Some(14.0),
            optical_filter_bw_hz: 36e9,
            noise_ref_bandwidth_hz: 33.33e9,
            carrier_hz: 193.4e12,
            sample_rate_hz: 99.99e9,
            n_freq: 256,
            mdl_band_hz: Some(33.33e9),
            seed: 1,
        }
    }
}

impl LinkConfig {
    pub fn dim(&self) -> usize {
        2 * self.n_modes_link
    }

    pub fn n_groups(&self) -> usize {
        self.mode_group_map.iter().copied().max().map_or(0, |g| g + 1)
    }

    /// Group of each of the `2N` channels.
    pub fn channel_groups(&self) -> Vec<usize> {
        self.mode_group_map
            .iter()
            .flat_map(|&g| [g, g])
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes_link == 0 {
            return Err(invalid("n_modes_link must be positive"));
        }
        if self.n_sections == 0 {
            return Err(invalid("n_sections must be >= 1"));
        }
        if !(self.target_mdl_db >= 0.0) {
            return Err(invalid("target_mdl_db must be >= 0"));
        }
        if self.mode_group_map.len() != self.n_modes_link {
            return Err(invalid("mode_group_map needs one entry per link mode"));
        }
        let g = self.n_groups();
        if (0..g).any(|k| !self.mode_group_map.contains(&k)) {
            return Err(invalid("mode groups must be numbered 0..G without gaps"));
        }
        if self.dmgd_ps_per_km.len() != g {
            return Err(invalid(format!("dmgd_ps_per_km needs {g} entries (one per group)")));
        }
        if !(self.length_km > 0.0) {
            return Err(invalid("length_km must be positive"));
        }
        if !(self.sample_rate_hz > 0.0) || !(self.noise_ref_bandwidth_hz > 0.0) {
            return Err(invalid("rates and bandwidths must be positive"));
        }
        if !(self.optical_filter_bw_hz > 0.0) {
            return Err(invalid("optical_filter_bw_hz must be positive"));
        }
        if self.n_freq < 8 || !self.n_freq.is_power_of_two() {
            return Err(invalid("n_freq must be a power of two >= 8"));
        }
        if self.inter_group_xt_db.is_nan() || self.inter_group_xt_db > 0.0 {
            return Err(invalid("inter_group_xt_db must be <= 0 dB"));
        }
        Ok(())
    }

    /// Per-channel SNR (dB, in the noise reference bandwidth) at the receiver
    /// for `n_channels` receiver channels sharing `launch_power_dbm`.
    pub fn snr_db(&self, launch_power_dbm: f64, n_channels: usize) -> f64 {
        let inv = noise::inverse_snr_terms(self, launch_power_dbm, n_channels);
        -10.0 * (inv.ase + inv.ceiling + inv.nli).log10()
    }
}
