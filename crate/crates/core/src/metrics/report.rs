use serde::{Deserialize, Serialize};

use super::crosstalk::CrosstalkMatrices;
use super::rate::{net_rate, FecModel};
use crate::error::{invalid, Result};

/// Figures of merit for one capture (or an average of captures).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub gmi_per_stream: Vec<f64>,
    pub gmi_per_mode: Vec<f64>,
    pub ngmi: f64,
    pub line_rate_gbps: f64,
    pub net_rate_gbps: f64,
    pub below_threshold: bool,
    pub mdl_db: Option<f64>,
    pub crosstalk: Option<CrosstalkMatrices>,
    pub n_captures: usize,
    /// Quarter-turn phase slips removed before GMI evaluation.
    #[serde(default)]
    pub cycle_slips: usize,
}

impl MetricsReport {
    /// Assemble from per-stream GMI (two polarization streams per mode).
    pub fn from_streams(
        gmi_per_stream: Vec<f64>,
        baud: f64,
        m: usize,
        fec: &FecModel,
        mdl_db: Option<f64>,
        crosstalk: Option<CrosstalkMatrices>,
    ) -> Self {
        let gmi_per_mode: Vec<f64> = gmi_per_stream
            .chunks(2)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let rate = net_rate(&gmi_per_mode, baud, fec, gmi_per_stream.len(), m);
        Self {
            gmi_per_stream,
            gmi_per_mode,
            ngmi: rate.ngmi,
            line_rate_gbps: rate.line_rate_gbps,
            net_rate_gbps: rate.net_rate_gbps,
            below_threshold: rate.below_threshold,
            mdl_db,
            crosstalk,
            n_captures: 1,
            cycle_slips: 0,
        }
    }

    pub fn mean_gmi(&self) -> f64 {
        self.gmi_per_mode.iter().sum::<f64>() / self.gmi_per_mode.len().max(1) as f64
    }
}

fn mean_of(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn mean_matrix<'a>(ms: impl Iterator<Item = &'a Vec<Vec<f64>>>) -> Vec<Vec<f64>> {
    let ms: Vec<_> = ms.collect();
    let k = ms.len() as f64;
    let mut out = ms[0].clone();
    for m in &ms[1..] {
        for (ro, ri) in out.iter_mut().zip(m.iter()) {
            for (a, b) in ro.iter_mut().zip(ri) {
                *a += b;
            }
        }
    }
    out.iter_mut().flatten().for_each(|v| *v /= k);
    out
}

/// Average captures taken with one configuration: arithmetic means of the
/// GMI, NGMI and MDL, crosstalk averaged in linear units. The FEC decision is
/// re-evaluated on the mean NGMI.
pub fn average_captures(reports: &[MetricsReport], fec: &FecModel) -> Result<MetricsReport> {
    let first = reports.first().ok_or_else(|| invalid("no captures to average"))?;
    let shape = |r: &MetricsReport| {
        (
            r.gmi_per_stream.len(),
            r.mdl_db.is_some(),
            r.crosstalk
                .as_ref()
                .map(|x| (x.spatial_linear.len(), x.spatial_linear.first().map(Vec::len))),
        )
    };
    if reports.iter().any(|r| shape(r) != shape(first) || r.line_rate_gbps != first.line_rate_gbps) {
        return Err(invalid("captures come from different configurations"));
    }
    let n = first.gmi_per_stream.len();
    let gmi_per_stream: Vec<f64> = (0..n)
        .map(|k| mean_of(reports.iter().map(|r| r.gmi_per_stream[k])))
        .collect();
    let gmi_per_mode: Vec<f64> = (0..first.gmi_per_mode.len())
        .map(|k| mean_of(reports.iter().map(|r| r.gmi_per_mode[k])))
        .collect();
    let ngmi = mean_of(reports.iter().map(|r| r.ngmi));
    let ok = ngmi >= fec.ngmi_threshold;
    let mdl_db = first
        .mdl_db
        .map(|_| mean_of(reports.iter().filter_map(|r| r.mdl_db)));
    let crosstalk = first.crosstalk.as_ref().map(|x| {
        let spatial = mean_matrix(reports.iter().filter_map(|r| r.crosstalk.as_ref()).map(|c| &c.spatial_linear));
        let group = mean_matrix(reports.iter().filter_map(|r| r.crosstalk.as_ref()).map(|c| &c.group_linear));
        CrosstalkMatrices {
            spatial_linear: spatial,
            group_linear: group,
            rx_groups: x.rx_groups.clone(),
            tx_groups: x.tx_groups.clone(),
        }
    });
    Ok(MetricsReport {
        gmi_per_stream,
        gmi_per_mode,
        ngmi,
        line_rate_gbps: first.line_rate_gbps,
        net_rate_gbps: if ok { first.line_rate_gbps * fec.code_rate } else { 0.0 },
        below_threshold: !ok,
        mdl_db,
        crosstalk,
        n_captures: reports.iter().map(|r| r.n_captures).sum(),
        cycle_slips: reports.iter().map(|r| r.cycle_slips).sum(),
    })
}
