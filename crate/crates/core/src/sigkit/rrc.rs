//! Root-raised-cosine pulse design.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RrcSpec {
    pub roll_off: f64,
    pub span_symbols: usize,
    pub samples_per_symbol: usize,
}

impl Default for RrcSpec {
    fn default() -> Self {
        Self {
            roll_off: 0.01,
            span_symbols: 256,
            samples_per_symbol: 3,
        }
    }
}

impl RrcSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.roll_off) {
            return Err(invalid(format!("roll_off {} outside [0, 1]", self.roll_off)));
        }
        if self.span_symbols == 0 || self.span_symbols % 2 != 0 {
            return Err(invalid(format!(
                "span_symbols {} must be even and positive",
                self.span_symbols
            )));
        }
        if self.samples_per_symbol < 2 {
            return Err(invalid("samples_per_symbol must be at least 2"));
        }
        Ok(())
    }
}

/// Continuous RRC impulse response at `t` symbol periods (unnormalized).
fn rrc_at(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && (1.0 - (4.0 * beta * t).powi(2)).abs() < 1e-10 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// Symmetric, unit-energy RRC taps spanning `span_symbols` symbols
/// (`span_symbols * samples_per_symbol + 1` taps).
pub fn design_rrc(spec: &RrcSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let sps = spec.samples_per_symbol as f64;
    let n = spec.span_symbols * spec.samples_per_symbol + 1;
    let center = (n / 2) as f64;
    let mut taps: Vec<f64> = (0..n)
        .map(|k| rrc_at((k as f64 - center) / sps, spec.roll_off))
        .collect();
    // mirror to make symmetry exact in floating point
    for k in 0..n / 2 {
        let v = 0.5 * (taps[k] + taps[n - 1 - k]);
        taps[k] = v;
        taps[n - 1 - k] = v;
    }
    let norm = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| *t /= norm);
    Ok(taps)
}

/// RRC amplitude response at frequency `f` (in units of the symbol rate),
/// normalized to 1 at DC.
pub fn rrc_frequency_response(f: f64, beta: f64) -> f64 {
    let f = f.abs();
    let f1 = (1.0 - beta) / 2.0;
    let f2 = (1.0 + beta) / 2.0;
    if f <= f1 {
        1.0
    } else if f > f2 {
        0.0
    } else {
        (0.5 * (1.0 + (PI / beta * (f - f1)).cos())).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(beta: f64, span: usize, sps: usize) -> RrcSpec {
        RrcSpec {
            roll_off: beta,
            span_symbols: span,
            samples_per_symbol: sps,
        }
    }

    #[test]
    fn unit_energy_and_symmetric() {
        for beta in [0.0, 0.01, 0.25, 0.5, 1.0] {
            let h = design_rrc(&spec(beta, 32, 4)).unwrap();
            let e: f64 = h.iter().map(|t| t * t).sum();
            assert!((e - 1.0).abs() < 1e-12);
            let rev: Vec<f64> = h.iter().rev().copied().collect();
            assert_eq!(h, rev);
        }
    }

    #[test]
    fn zero_rolloff_is_truncated_sinc() {
        let s = spec(0.0, 16, 4);
        let h = design_rrc(&s).unwrap();
        let c = h.len() / 2;
        let scale = h[c];
        for (k, &v) in h.iter().enumerate() {
            let t = (k as f64 - c as f64) / 4.0;
            let sinc = if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
            assert!((v / scale - sinc).abs() < 1e-12, "tap {k}");
        }
    }

    #[test]
    fn singular_point_is_continuous() {
        let beta = 0.25;
        let t0 = 1.0 / (4.0 * beta);
        let at = rrc_at(t0, beta);
        let near = rrc_at(t0 + 1e-7, beta);
        assert!((at - near).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(design_rrc(&spec(1.5, 16, 4)).is_err());
        assert!(design_rrc(&spec(0.1, 15, 4)).is_err());
        assert!(design_rrc(&spec(0.1, 16, 1)).is_err());
    }
}
