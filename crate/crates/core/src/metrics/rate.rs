use serde::{Deserialize, Serialize};

/// Soft-decision FEC characterised by its code rate and the NGMI it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FecModel {
    pub code_rate: f64,
    pub ngmi_threshold: f64,
}

impl Default for FecModel {
    fn default() -> Self {
        Self {
            code_rate: 0.8402,
            ngmi_threshold: 0.8798,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub line_rate_gbps: f64,
    pub ngmi: f64,
    pub net_rate_gbps: f64,
    pub below_threshold: bool,
}

/// Line and post-FEC net rate for `n_streams` tributaries at `baud` carrying
/// `m` bits per symbol. The net rate is zero when the mean NGMI misses the
/// FEC threshold.
pub fn net_rate(gmi_per_mode: &[f64], baud: f64, fec: &FecModel, n_streams: usize, m: usize) -> RateReport {
    let line = n_streams as f64 * baud * m as f64 / 1e9;
    let mean = if gmi_per_mode.is_empty() {
        0.0
    } else {
        gmi_per_mode.iter().sum::<f64>() / gmi_per_mode.len() as f64
    };
    let ngmi = mean / m as f64;
    let ok = ngmi >= fec.ngmi_threshold;
    RateReport {
        line_rate_gbps: line,
        ngmi,
        net_rate_gbps: if ok { line * fec.code_rate } else { 0.0 },
        below_threshold: !ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_mode_rates() {
        let r = net_rate(&[2.7; 6], 33.33e9, &FecModel::default(), 12, 3);
        assert!((r.line_rate_gbps - 1199.88).abs() < 1e-6);
        assert!((r.net_rate_gbps - 1008.1).abs() < 0.1);
        assert!(!r.below_threshold);
        let r3 = net_rate(&[2.7; 3], 33.33e9, &FecModel::default(), 6, 3);
        assert!((r3.line_rate_gbps - 599.94).abs() < 1e-6);
        assert!((r3.net_rate_gbps - 504.07).abs() < 0.01);
    }

    #[test]
    fn below_threshold_is_zero() {
        let r = net_rate(&[2.0; 6], 33.33e9, &FecModel::default(), 12, 3);
        assert_eq!(r.net_rate_gbps, 0.0);
        assert!(r.below_threshold);
    }
}
