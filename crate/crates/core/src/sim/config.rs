use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::LinkConfig;
use crate::dsp::EqualizerParams;
use crate::kk::{BiasSearch, KkConfig};
use crate::metrics::FecModel;
use crate::txchain::{Mode, TxConfig};

/// How received fields reach the DSP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrontEnd {
    /// LO + photodiode + KK reconstruction per channel.
    KramersKronig,
    /// Ideal coherent detection (field passed through at the ADC rate).
    Coherent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RxDspConfig {
    pub front_end: FrontEnd,
    /// Block length (symbols) of the data-aided frequency estimator.
    pub fo_block: usize,
    /// Symbol lags correlated by the frequency estimator.
    pub fo_max_lag: usize,
    /// Symbols used for frequency and timing estimation.
    pub estimation_span: usize,
    pub timing_max_lag: usize,
    /// Fraction of the tap-rate spectrum used for tap-derived MDL.
    pub tap_band_fraction: f64,
    /// Symbols dropped at the end of each frame before GMI.
    pub guard_symbols: usize,
    /// Block length for data-aided quarter-turn slip removal; 0 disables it.
    pub slip_block: usize,
}

impl Default for RxDspConfig {
    fn default() -> Self {
        Self {
            front_end: FrontEnd::KramersKronig,
            fo_block: 32,
            fo_max_lag: 4,
            estimation_span: 1 << 16,
            timing_max_lag: 16,
            tap_band_fraction: 0.5,
            guard_symbols: 64,
            slip_block: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Preset the file was layered on (informational once resolved).
    pub preset: Option<String>,
    pub tx: TxConfig,
    pub link: LinkConfig,
    pub kk: KkConfig,
    pub eq: EqualizerParams,
    pub fec: FecModel,
    pub rx: RxDspConfig,
    /// Total launch powers (dBm).
    pub sweep: Vec<f64>,
    /// Numbers of received modes to evaluate; empty means "as many as transmitted".
    pub rx_subsets: Vec<usize>,
    pub n_captures: usize,
    /// Base seed; transmitter, channel and per-capture noise seeds derive from it.
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "paper6".into(),
            preset: None,
            tx: TxConfig::default(),
            link: LinkConfig::default(),
            kk: KkConfig::default(),
            eq: EqualizerParams::default(),
            fec: FecModel::default(),
            rx: RxDspConfig::default(),
            sweep: (0..=10).map(|k| -6.0 + 2.0 * k as f64).collect(),
            rx_subsets: Vec::new(),
            n_captures: 5,
            seed: 1,
            output_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn transmitted_modes(&self) -> usize {
        self.tx.sorted_modes().len()
    }

    /// Receiver subsets to evaluate, defaulting to the transmitted count.
    pub fn subsets(&self) -> Vec<usize> {
        if self.rx_subsets.is_empty() {
            vec![self.transmitted_modes()]
        } else {
            self.rx_subsets.clone()
        }
    }

    /// Every violation, each tagged with its field path.
    pub fn check(&self) -> Vec<ConfigIssue> {
        let mut v = Vec::new();
        let mut bad = |path: &str, msg: String| v.push(ConfigIssue::new(path, msg));
        let tx = &self.tx;
        if !(tx.baud > 0.0) {
            bad("tx.baud", format!("must be positive, got {}", tx.baud));
        }
        if tx.samples_per_symbol < 2 {
            bad("tx.samples_per_symbol", "must be >= 2".into());
        }
        if tx.n_symbols < 1024 {
            bad("tx.n_symbols", format!("must be >= 1024, got {}", tx.n_symbols));
        }
        if !(0.0..=1.0).contains(&tx.rrc.roll_off) {
            bad("tx.rrc.roll_off", format!("must lie in [0, 1], got {}", tx.rrc.roll_off));
        }
        if tx.rrc.span_symbols == 0 {
            bad("tx.rrc.span_symbols", "must be positive".into());
        }
        if tx.rrc.samples_per_symbol != tx.samples_per_symbol {
            bad(
                "tx.rrc.samples_per_symbol",
                format!("must equal tx.samples_per_symbol ({})", tx.samples_per_symbol),
            );
        }
        if tx.active_modes.is_empty() {
            bad("tx.active_modes", "needs at least one mode".into());
        }
        if tx.decorrelation_delays_m.len() != Mode::ALL.len() {
            bad("tx.decorrelation_delays_m", "needs one entry per mode (6)".into());
        }
        if !(2..=31).contains(&tx.prbs_degree) {
            bad("tx.prbs_degree", format!("must lie in [2, 31], got {}", tx.prbs_degree));
        }
        if let Some(pe) = &tx.pre_emphasis {
            if let Err(e) = pe.validate() {
                bad("tx.pre_emphasis", e.to_string());
            }
        }

        let link = &self.link;
        if let Err(e) = link.validate() {
            bad("link", e.to_string());
        }
        if link.n_modes_link < self.transmitted_modes() {
            bad(
                "link.n_modes_link",
                format!("{} modes cannot carry {} transmitted modes", link.n_modes_link, self.transmitted_modes()),
            );
        }
        if ((link.sample_rate_hz - tx.sample_rate()) / tx.sample_rate()).abs() > 1e-9 {
            bad(
                "link.sample_rate_hz",
                format!("must equal tx.baud * tx.samples_per_symbol ({})", tx.sample_rate()),
            );
        }

        if let Err(e) = self.kk.validate() {
            bad("kk", e.to_string());
        }
        if let BiasSearch::Fixed { value } = self.kk.bias {
            if !(value > 0.0) {
                bad("kk.bias.value", "must be positive".into());
            }
        }
        if let Err(e) = self.eq.validate() {
            bad("eq", e.to_string());
        }
        if self.eq.n_train + self.rx.guard_symbols >= tx.n_symbols {
            bad("eq.n_train", "training must leave symbols for evaluation".into());
        }
        if !(self.fec.code_rate > 0.0 && self.fec.code_rate < 1.0) {
            bad("fec.code_rate", format!("must lie in (0, 1), got {}", self.fec.code_rate));
        }
        if !(self.fec.ngmi_threshold > 0.0 && self.fec.ngmi_threshold <= 1.0) {
            bad("fec.ngmi_threshold", "must lie in (0, 1]".into());
        }
        if self.rx.fo_block == 0 {
            bad("rx.fo_block", "must be positive".into());
        }
        if !(self.rx.tap_band_fraction > 0.0 && self.rx.tap_band_fraction <= 1.0) {
            bad("rx.tap_band_fraction", "must lie in (0, 1]".into());
        }
        if self.sweep.is_empty() {
            bad("sweep", "needs at least one launch power".into());
        }
        if self.sweep.iter().any(|p| !p.is_finite()) {
            bad("sweep", "launch powers must be finite".into());
        }
        for (i, &k) in self.rx_subsets.iter().enumerate() {
            if k < self.transmitted_modes() || k > link.n_modes_link {
                bad(
                    &format!("rx_subsets[{i}]"),
                    format!(
                        "{k} receivers outside [{}, {}] (transmitted modes .. link modes)",
                        self.transmitted_modes(),
                        link.n_modes_link
                    ),
                );
            }
        }
        if self.n_captures == 0 {
            bad("n_captures", "must be >= 1".into());
        }
        v
    }
}

/// One configuration problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
    /// 1-based line and column for syntax errors.
    pub location: Option<(usize, usize)>,
}

impl ConfigIssue {
    fn new(path: &str, message: String) -> Self {
        Self {
            path: path.into(),
            message,
            location: None,
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((l, c)) => write!(f, "line {l}, column {c}: {}", self.message),
            None if self.path.is_empty() => write!(f, "{}", self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &["paper6", "paper3", "paper3-calibrated"]
}

/// Named starting configurations.
///
/// - `paper6`: six modes transmitted and received, 11-dB MDL link.
/// - `paper3`: the three lowest modes transmitted, 3 to 6 receivers.
/// - `paper3-calibrated`: `paper3` with weaker inter-group coupling, sized
///   so that extra receivers buy roughly 0.75 bit of GMI at low power.
pub fn preset(name: &str) -> Option<ExperimentSpec> {
    let base = ExperimentSpec::default();
    match name {
        "paper6" => Some(base),
        "paper3" => {
            let mut s = base;
            s.name = "paper3".into();
            s.tx.active_modes = Mode::ALL[..3].to_vec();
            s.link.target_mdl_db = 5.5;
            s.rx_subsets = vec![3, 4, 5, 6];
            Some(s)
        }
        "paper3-calibrated" => {
            let mut s = preset("paper3")?;
            s.name = "paper3-calibrated".into();
            s.link.inter_group_xt_db = -21.0;
            Some(s)
        }
        _ => None,
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map(|s| s.chars().count()).unwrap_or(0) + 1;
    (line, col)
}

/// Parse a TOML experiment description layered over its `preset` (default
/// `paper6`) and report every violation found.
pub fn validate_spec(text: &str) -> Result<ExperimentSpec, Vec<ConfigIssue>> {
    let user: toml::Table = toml::from_str(text).map_err(|e| {
        vec![ConfigIssue {
            path: String::new(),
            message: e.message().trim().to_string(),
            location: e.span().map(|s| line_col(text, s.start)),
        }]
    })?;
    let preset_name = match user.get("preset") {
        None => "paper6".to_string(),
        Some(toml::Value::String(s)) => s.clone(),
        Some(_) => return Err(vec![ConfigIssue::new("preset", "must be a string".into())]),
    };
    let base = preset(&preset_name).ok_or_else(|| {
        vec![ConfigIssue::new(
            "preset",
            format!("unknown preset '{preset_name}' (known: {})", preset_names().join(", ")),
        )]
    })?;
    let mut table = toml::Table::try_from(&base).map_err(|e| vec![ConfigIssue::new("", e.to_string())])?;
    merge(&mut table, user);
    table.insert("preset".into(), toml::Value::String(preset_name));
    let spec: ExperimentSpec = table.try_into().map_err(|e: toml::de::Error| {
        vec![ConfigIssue::new("", e.message().trim().to_string())]
    })?;
    let issues = spec.check();
    if issues.is_empty() {
        Ok(spec)
    } else {
        Err(issues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_paper6() {
        let s = validate_spec("").unwrap();
        assert_eq!(s.transmitted_modes(), 6);
        assert_eq!(s.sweep.len(), 11);
        assert_eq!(s.n_captures, 5);
        assert_eq!(s.link.target_mdl_db, 11.0);
    }

    #[test]
    fn roll_off_out_of_range_names_field() {
        let err = validate_spec("[tx.rrc]\nroll_off = 1.5\n").unwrap_err();
        assert!(err.iter().any(|i| i.path == "tx.rrc.roll_off" && i.message.contains("[0, 1]")));
    }

    #[test]
    fn rx_subset_beyond_link_rejected() {
        let err = validate_spec("rx_subsets = [7]\n").unwrap_err();
        assert!(err.iter().any(|i| i.path == "rx_subsets[0]"));
    }

    #[test]
    fn every_violation_reported() {
        let err = validate_spec("n_captures = 0\nsweep = []\n[tx.rrc]\nroll_off = -1.0\n").unwrap_err();
        let paths: Vec<_> = err.iter().map(|i| i.path.as_str()).collect();
        assert!(paths.contains(&"n_captures"));
        assert!(paths.contains(&"sweep"));
        assert!(paths.contains(&"tx.rrc.roll_off"));
    }

    #[test]
    fn syntax_error_has_location() {
        let err = validate_spec("seed = 1\nsweep = [1, \n").unwrap_err();
        assert_eq!(err.len(), 1);
        assert!(err[0].location.is_some());
    }

    #[test]
    fn preset_layering() {
        let s = validate_spec("preset = \"paper3\"\nn_captures = 2\n").unwrap();
        assert_eq!(s.transmitted_modes(), 3);
        assert_eq!(s.subsets(), vec![3, 4, 5, 6]);
        assert_eq!(s.n_captures, 2);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(validate_spec("[tx]\nbaudrate = 3\n").is_err());
    }

    #[test]
    fn presets_resolve() {
        for name in preset_names() {
            let s = preset(name).unwrap();
            assert!(s.check().is_empty(), "{name}: {:?}", s.check());
        }
    }
}
