use serde::{Deserialize, Serialize};

use crate::dsp::TapTensor;

/// Floor for dB crosstalk entries.
pub const XT_FLOOR_DB: f64 = -60.0;

/// Transfer matrices derived from equalizer taps. Rows are received modes
/// (equalizer inputs), columns transmitted modes (equalizer outputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkMatrices {
    pub spatial_linear: Vec<Vec<f64>>,
    pub group_linear: Vec<Vec<f64>>,
    /// Group index of each row / column of `group_linear`.
    pub rx_groups: Vec<usize>,
    pub tx_groups: Vec<usize>,
}

fn to_db(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let max = m.iter().flatten().copied().fold(0.0, f64::max);
    m.iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if max > 0.0 && v > 0.0 {
                        (10.0 * (v / max).log10()).max(XT_FLOOR_DB)
                    } else {
                        XT_FLOOR_DB
                    }
                })
                .collect()
        })
        .collect()
}

impl CrosstalkMatrices {
    pub fn spatial_db(&self) -> Vec<Vec<f64>> {
        to_db(&self.spatial_linear)
    }

    pub fn group_db(&self) -> Vec<Vec<f64>> {
        to_db(&self.group_linear)
    }

    /// Regroup from an averaged spatial matrix.
    pub(crate) fn from_spatial(spatial: Vec<Vec<f64>>, group_map: &[usize]) -> Self {
        let n_rx = spatial.len();
        let n_tx = spatial.first().map(Vec::len).unwrap_or(0);
        let distinct = |n: usize| {
            let mut g: Vec<usize> = group_map[..n].to_vec();
            g.sort_unstable();
            g.dedup();
            g
        };
        let rx_groups = distinct(n_rx);
        let tx_groups = distinct(n_tx);
        let group_linear = rx_groups
            .iter()
            .map(|&gr| {
                tx_groups
                    .iter()
                    .map(|&gt| {
                        let (mut s, mut k) = (0.0, 0);
                        for (r, row) in spatial.iter().enumerate() {
                            for (t, v) in row.iter().enumerate() {
                                if group_map[r] == gr && group_map[t] == gt {
                                    s += v;
                                    k += 1;
                                }
                            }
                        }
                        s / k as f64
                    })
                    .collect()
            })
            .collect();
        Self {
            spatial_linear: spatial,
            group_linear,
            rx_groups,
            tx_groups,
        }
    }
}

/// Spatial and mode-group transfer matrices from time-domain taps.
///
/// For every tap pair the absolute values are summed over delay and
/// squared; the four polarization combinations of a mode pair are averaged,
/// then entries are averaged inside each mode-group block. `group_map`
/// gives the group of each mode in rank order.
pub fn crosstalk_matrices(taps: &TapTensor, group_map: &[usize]) -> CrosstalkMatrices {
    let (n_out, n_in, _) = taps.shape();
    let n_tx = n_out / 2;
    let n_rx = n_in / 2;
    assert!(
        group_map.len() >= n_rx,
        "group map covers {} modes, taps need {n_rx}",
        group_map.len()
    );
    let spatial: Vec<Vec<f64>> = (0..n_rx)
        .map(|r| {
            (0..n_tx)
                .map(|t| {
                    let mut acc = 0.0;
                    for po in 0..2 {
                        for pi in 0..2 {
                            let s: f64 = taps.taps(2 * t + po, 2 * r + pi).iter().map(|v| v.norm()).sum();
                            acc += s * s;
                        }
                    }
                    acc / 4.0
                })
                .collect()
        })
        .collect();
    CrosstalkMatrices::from_spatial(spatial, group_map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigkit::C64;

    const GROUPS: [usize; 6] = [0, 1, 1, 2, 2, 2];

    #[test]
    fn identity_taps_are_diagonal() {
        let t = TapTensor::center_identity(12, 12, 5);
        let xt = crosstalk_matrices(&t, &GROUPS);
        let db = xt.spatial_db();
        for (r, row) in db.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if r == c {
                    assert!(v.abs() < 1e-12);
                } else {
                    assert_eq!(*v, XT_FLOOR_DB);
                }
            }
        }
    }

    #[test]
    fn block_diagonal_by_group() {
        let mut t = TapTensor::zeros(12, 12, 3);
        for o in 0..12 {
            for i in 0..12 {
                if GROUPS[o / 2] == GROUPS[i / 2] {
                    t.taps_mut(o, i)[1] = C64::new(0.5, 0.1);
                }
            }
        }
        let g = crosstalk_matrices(&t, &GROUPS).group_db();
        assert_eq!(g.len(), 3);
        for (r, row) in g.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if r == c {
                    assert!(v.abs() < 1e-9);
                } else {
                    assert_eq!(*v, XT_FLOOR_DB);
                }
            }
        }
    }

    #[test]
    fn polarization_rotation_stays_diagonal() {
        let mut t = TapTensor::zeros(12, 12, 3);
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        for m in 0..6 {
            t.taps_mut(2 * m, 2 * m)[1] = C64::new(c, 0.0);
            t.taps_mut(2 * m, 2 * m + 1)[1] = C64::new(-s, 0.0);
            t.taps_mut(2 * m + 1, 2 * m)[1] = C64::new(s, 0.0);
            t.taps_mut(2 * m + 1, 2 * m + 1)[1] = C64::new(c, 0.0);
        }
        let db = crosstalk_matrices(&t, &GROUPS).spatial_db();
        for r in 0..6 {
            for col in 0..6 {
                if r != col {
                    assert!(db[r][col] < -30.0);
                }
            }
        }
    }

    #[test]
    fn three_by_six_shape() {
        let t = TapTensor::center_identity(6, 12, 3);
        let xt = crosstalk_matrices(&t, &GROUPS);
        assert_eq!(xt.spatial_linear.len(), 6);
        assert_eq!(xt.spatial_linear[0].len(), 3);
        assert_eq!(xt.rx_groups, vec![0, 1, 2]);
        assert_eq!(xt.tx_groups, vec![0, 1]);
    }
}
