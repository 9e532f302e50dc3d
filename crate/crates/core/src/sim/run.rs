use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentSpec;
use super::pipeline::{prepare, run_point, PointDiagnostics};
use crate::error::{Error, Result};
use crate::metrics::{average_captures, MetricsReport};
use crate::txchain::Mode;

/// Deterministic seed for one axis of the experiment (splitmix64 mix).
pub fn derive_seed(base: u64, axis: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(axis.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    /// Keep converged taps for every point.
    pub keep_taps: bool,
}

/// One (power, receiver subset, capture) evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResult {
    pub power_dbm: f64,
    pub k_rx: usize,
    pub capture: usize,
    pub seed: u64,
    pub diagnostics: Option<PointDiagnostics>,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
}

/// Capture average at one (power, receiver subset).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AveragedResult {
    pub power_dbm: f64,
    pub k_rx: usize,
    pub report: Option<MetricsReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapDump {
    pub power_dbm: f64,
    pub k_rx: usize,
    pub capture: usize,
    pub taps: crate::dsp::TapRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultSet {
    pub spec: ExperimentSpec,
    pub tx_seed: u64,
    pub channel_seed: u64,
    pub channel_mdl_db: f64,
    /// Link modes in rank order.
    pub mode_names: Vec<String>,
    pub points: Vec<PointResult>,
    pub averages: Vec<AveragedResult>,
    #[serde(skip)]
    pub taps: Vec<TapDump>,
    #[serde(skip)]
    pub channel: Option<crate::channel::ChannelRecord>,
}

impl ResultSet {
    pub fn failures(&self) -> impl Iterator<Item = &PointResult> {
        self.points.iter().filter(|p| p.error.is_some())
    }

    pub fn average(&self, power_dbm: f64, k_rx: usize) -> Option<&MetricsReport> {
        self.averages
            .iter()
            .find(|a| a.power_dbm == power_dbm && a.k_rx == k_rx)
            .and_then(|a| a.report.as_ref())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = if path.is_dir() { path.join("results.json") } else { path.to_path_buf() };
        Ok(serde_json::from_str(&fs::read_to_string(file)?)?)
    }
}

/// Run every (power, capture) point of the sweep on a worker pool. Stage
/// failures are recorded per point; only setup failures (transmitter or
/// channel synthesis) abort the run.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ResultSet> {
    let issues = spec.check();
    if !issues.is_empty() {
        let msg: Vec<String> = issues.iter().map(ToString::to_string).collect();
        return Err(Error::Config(msg.join("; ")));
    }
    let prep = prepare(spec)?;
    let grid: Vec<(f64, usize)> = spec
        .sweep
        .iter()
        .flat_map(|&p| (0..spec.n_captures).map(move |c| (p, c)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let outputs: Vec<_> = pool.install(|| {
        grid.par_iter()
            .map(|&(p, c)| (p, c, run_point(spec, &prep, p, c)))
            .collect()
    });

    let subsets = spec.subsets();
    let mut points = Vec::new();
    let mut taps = Vec::new();
    for (power, capture, out) in outputs {
        let seed = super::pipeline::noise_seed(spec.seed, power, capture);
        match out {
            Ok(o) => {
                for s in o.subsets {
                    let (report, error) = match s.result {
                        Ok((r, t)) => {
                            if opts.keep_taps {
                                taps.push(TapDump {
                                    power_dbm: power,
                                    k_rx: s.k_rx,
                                    capture,
                                    taps: t.to_record(),
                                });
                            }
                            (Some(r), None)
                        }
                        Err(e) => (None, Some(e)),
                    };
                    points.push(PointResult {
                        power_dbm: power,
                        k_rx: s.k_rx,
                        capture,
                        seed,
                        diagnostics: Some(o.diagnostics.clone()),
                        report,
                        error,
                    });
                }
            }
            Err(e) => {
                for &k in &subsets {
                    points.push(PointResult {
                        power_dbm: power,
                        k_rx: k,
                        capture,
                        seed,
                        diagnostics: None,
                        report: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }
    points.sort_by(|a, b| {
        a.power_dbm
            .total_cmp(&b.power_dbm)
            .then(a.k_rx.cmp(&b.k_rx))
            .then(a.capture.cmp(&b.capture))
    });

    let mut averages = Vec::new();
    for &power in &spec.sweep {
        for &k in &subsets {
            let ok: Vec<MetricsReport> = points
                .iter()
                .filter(|p| p.power_dbm == power && p.k_rx == k)
                .filter_map(|p| p.report.clone())
                .collect();
            averages.push(AveragedResult {
                power_dbm: power,
                k_rx: k,
                report: if ok.is_empty() { None } else { average_captures(&ok, &spec.fec).ok() },
            });
        }
    }
    averages.sort_by(|a, b| a.power_dbm.total_cmp(&b.power_dbm).then(a.k_rx.cmp(&b.k_rx)));

    Ok(ResultSet {
        spec: spec.clone(),
        tx_seed: prep.tx_seed,
        channel_seed: prep.channel_seed,
        channel_mdl_db: prep.channel.mdl_db()?,
        mode_names: Mode::ALL[..spec.link.n_modes_link.min(Mode::ALL.len())]
            .iter()
            .map(|m| m.name().to_string())
            .collect(),
        points,
        averages,
        taps,
        channel: Some(prep.channel.to_record()),
    })
}

/// Write `results.csv`, `results.json`, the resolved config, a failure
/// summary and, when requested, channel and tap matrices. Returns the paths.
pub fn write_results(rs: &ResultSet, dir: &Path, dump_matrices: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let csv_path = dir.join("results.csv");
    super::export::write_tidy(rs, &csv_path, |_| true)?;
    written.push(csv_path);

    let json_path = dir.join("results.json");
    fs::write(&json_path, serde_json::to_string_pretty(rs)?)?;
    written.push(json_path);

    let cfg_path = dir.join("resolved_config.toml");
    let resolved = toml::to_string(&rs.spec).map_err(|e| Error::Serde(e.to_string()))?;
    fs::write(
        &cfg_path,
        format!(
            "# seeds: base {} transmitter {} channel {}\n{resolved}",
            rs.spec.seed, rs.tx_seed, rs.channel_seed
        ),
    )?;
    written.push(cfg_path);

    let fail_path = dir.join("failures.json");
    let failures: Vec<&PointResult> = rs.failures().collect();
    fs::write(&fail_path, serde_json::to_string_pretty(&failures)?)?;
    written.push(fail_path);

    if dump_matrices {
        let mdir = dir.join("matrices");
        fs::create_dir_all(&mdir)?;
        if let Some(ch) = &rs.channel {
            let p = mdir.join("channel.json");
            fs::write(&p, serde_json::to_string(ch)?)?;
            written.push(p);
        }
        for t in &rs.taps {
            let p = mdir.join(format!("taps_p{}_k{}_c{}.json", t.power_dbm, t.k_rx, t.capture));
            fs::write(&p, serde_json::to_string(&t.taps)?)?;
            written.push(p);
        }
    }
    Ok(written)
}
