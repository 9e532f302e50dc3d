//! Symbol alphabets with bit labels.

use serde::{Deserialize, Serialize};

use super::C64;
use crate::error::{invalid, Result};

/// A unit-energy symbol alphabet with one `m`-bit label per point.
///
/// `labels[i]` is the label of `points[i]`; labels are a permutation of
/// `0..2^m`. Bit `b` of a label (MSB first) is the `b`-th bit of the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    points: Vec<C64>,
    labels: Vec<u32>,
    m: u32,
    #[serde(skip)]
    by_label: Vec<usize>,
}

impl Constellation {
    /// Build from raw points and labels. Points are rescaled to unit mean power.
    pub fn new(points: Vec<C64>, labels: Vec<u32>) -> Result<Self> {
        let n = points.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(invalid(format!("constellation size {n} is not a power of two")));
        }
        if labels.len() != n {
            return Err(invalid("one label per point required"));
        }
        let m = n.trailing_zeros();
        let mut seen = vec![false; n];
        for &l in &labels {
            let l = l as usize;
            if l >= n || seen[l] {
                return Err(invalid("labels must be a permutation of 0..2^m"));
            }
            seen[l] = true;
        }
        let power = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / n as f64;
        if !(power > 0.0) {
            return Err(invalid("constellation has zero energy"));
        }
        let scale = power.sqrt().recip();
        let points: Vec<C64> = points.into_iter().map(|p| p * scale).collect();
        let mut by_label = vec![0; n];
        for (i, &l) in labels.iter().enumerate() {
            by_label[l as usize] = i;
        }
        Ok(Self {
            points,
            labels,
            m,
            by_label,
        })
    }

    /// Circular (4,4) star 8QAM: inner points at (±1, ±1), outer points on the
    /// axes at ±(1+√3), which makes every nearest-neighbour distance equal.
    /// Labels minimise the summed Hamming distance over nearest-neighbour pairs.
    pub fn star_8qam() -> Self {
        let r = 1.0 + 3f64.sqrt();
        let points = vec![
            C64::new(1.0, 1.0),
            C64::new(-1.0, 1.0),
            C64::new(-1.0, -1.0),
            C64::new(1.0, -1.0),
            C64::new(r, 0.0),
            C64::new(0.0, r),
            C64::new(-r, 0.0),
            C64::new(0.0, -r),
        ];
        let labels = min_penalty_labels(&points);
        Self::new(points, labels).expect("static 8QAM definition is valid")
    }

    /// Gray-labelled QPSK, handy for small tests.
    pub fn qpsk() -> Self {
        let points = vec![
            C64::new(1.0, 1.0),
            C64::new(-1.0, 1.0),
            C64::new(-1.0, -1.0),
            C64::new(1.0, -1.0),
        ];
        Self::new(points, vec![0, 1, 3, 2]).expect("static QPSK definition is valid")
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m as usize
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn lookup(&self) -> Vec<usize> {
        if self.by_label.len() == self.points.len() {
            return self.by_label.clone();
        }
        let mut by_label = vec![0; self.points.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            by_label[l as usize] = i;
        }
        by_label
    }

    /// Point carrying `label`.
    pub fn point_for_label(&self, label: u32) -> C64 {
        let idx = if self.by_label.len() == self.points.len() {
            self.by_label[label as usize]
        } else {
            self.lookup()[label as usize]
        };
        self.points[idx]
    }

    /// Map an MSB-first bit stream onto symbols.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let m = self.bits_per_symbol();
        if bits.len() % m != 0 {
            return Err(invalid(format!(
                "bit length {} is not a multiple of {m}",
                bits.len()
            )));
        }
        let by_label = self.lookup();
        Ok(bits
            .chunks_exact(m)
            .map(|g| {
                let label = g.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
                self.points[by_label[label]]
            })
            .collect())
    }

    /// Index of the point nearest to `y`.
    pub fn nearest(&self, y: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Squared distance from `y` to its nearest point.
    pub fn min_distance_sqr(&self, y: C64) -> f64 {
        self.points
            .iter()
            .map(|p| (y - p).norm_sqr())
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum-distance hard decision.
    pub fn decide(&self, y: C64) -> C64 {
        self.points[self.nearest(y)]
    }

    /// Hard-decision demapping back to MSB-first bits.
    pub fn demap_hard(&self, symbols: &[C64]) -> Vec<u8> {
        let m = self.m;
        let mut out = Vec::with_capacity(symbols.len() * m as usize);
        for &y in symbols {
            let label = self.labels[self.nearest(y)];
            for b in (0..m).rev() {
                out.push(((label >> b) & 1) as u8);
            }
        }
        out
    }

    /// Bit `b` (MSB first) of the label of point `i`.
    pub fn label_bit(&self, i: usize, b: usize) -> u8 {
        ((self.labels[i] >> (self.m as usize - 1 - b)) & 1) as u8
    }
}

/// Exhaustive search for the labeling with the lowest total Hamming distance
/// across nearest-neighbour pairs. Ties resolve to the lexicographically first
/// permutation.
fn min_penalty_labels(points: &[C64]) -> Vec<u32> {
    let n = points.len();
    let mut dmin = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            dmin = dmin.min((points[i] - points[j]).norm());
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| (points[i] - points[j]).norm() <= dmin * (1.0 + 1e-9))
        .collect();

    let mut perm: Vec<u32> = (0..n as u32).collect();
    let mut best = perm.clone();
    let mut best_cost = u32::MAX;
    loop {
        let cost: u32 = pairs
            .iter()
            .map(|&(i, j)| (perm[i] ^ perm[j]).count_ones())
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best = perm.clone();
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best
}

fn next_permutation(v: &mut [u32]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
