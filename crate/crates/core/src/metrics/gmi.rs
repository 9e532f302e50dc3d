use crate::error::{invalid, Result};
use crate::sigkit::{Constellation, C64};

/// Hard-decision BER above which a stream is taken to be misaligned with
/// its reference.
pub const MISALIGNED_BER: f64 = 0.4;

/// Fraction of bit errors after hard nearest-point decisions.
pub fn hard_ber(rx: &[C64], ref_bits: &[u8], c: &Constellation) -> f64 {
    let m = c.bits_per_symbol();
    let bits = c.demap_hard(rx);
    let n = bits.len().min(ref_bits.len()).min(rx.len() * m);
    if n == 0 {
        return 0.0;
    }
    let errors = bits[..n]
        .iter()
        .zip(&ref_bits[..n])
        .filter(|(a, b)| a != b)
        .count();
    errors as f64 / n as f64
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Generalized mutual information (bits/symbol) of a received stream against
/// its reference bits, using a bit-wise decoder matched to a circular
/// Gaussian channel whose variance is measured from the data.
pub fn compute_gmi(rx: &[C64], ref_bits: &[u8], c: &Constellation) -> Result<f64> {
    let m = c.bits_per_symbol();
    if rx.is_empty() || ref_bits.len() != rx.len() * m {
        return Err(invalid(format!(
            "{} symbols need {} reference bits, got {}",
            rx.len(),
            rx.len() * m,
            ref_bits.len()
        )));
    }
    let tx = c.map(ref_bits)?;
    let var = rx.iter().zip(&tx).map(|(y, x)| (y - x).norm_sqr()).sum::<f64>() / rx.len() as f64;
    let var = var.max(1e-12);
    let points = c.points();
    let mut loss = 0.0;
    let mut metric = vec![0.0; points.len()];
    for (k, y) in rx.iter().enumerate() {
        for (j, p) in points.iter().enumerate() {
            metric[j] = -(y - p).norm_sqr() / var;
        }
        let all = log_sum_exp(metric.iter().copied());
        for b in 0..m {
            let bit = ref_bits[k * m + b];
            let same = log_sum_exp(
                metric
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| c.label_bit(*j, b) == bit)
                    .map(|(_, v)| *v),
            );
            loss += all - same;
        }
    }
    let gmi = m as f64 - loss / (rx.len() as f64 * std::f64::consts::LN_2);
    Ok(gmi.clamp(0.0, m as f64))
}
