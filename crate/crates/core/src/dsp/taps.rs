use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::{CMatrix, MatrixRecord};
use crate::sigkit::C64;

/// FIR tap tensor of a MIMO equalizer: `outputs × inputs × len`.
#[derive(Debug, Clone, PartialEq)]
pub struct TapTensor {
    n_out: usize,
    n_in: usize,
    len: usize,
    data: Vec<C64>,
}

impl TapTensor {
    pub fn zeros(n_out: usize, n_in: usize, len: usize) -> Self {
        Self {
            n_out,
            n_in,
            len,
            data: vec![C64::new(0.0, 0.0); n_out * n_in * len],
        }
    }

    /// Unit centre tap on the diagonal `o == i`.
    pub fn center_identity(n_out: usize, n_in: usize, len: usize) -> Self {
        let mut t = Self::zeros(n_out, n_in, len);
        for o in 0..n_out.min(n_in) {
            t.taps_mut(o, o)[len / 2] = C64::new(1.0, 0.0);
        }
        t
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_out, self.n_in, self.len)
    }

    pub fn taps(&self, o: usize, i: usize) -> &[C64] {
        let s = (o * self.n_in + i) * self.len;
        &self.data[s..s + self.len]
    }

    pub fn taps_mut(&mut self, o: usize, i: usize) -> &mut [C64] {
        let s = (o * self.n_in + i) * self.len;
        &mut self.data[s..s + self.len]
    }

    /// Taps for output `o`, laid out input-major.
    pub(crate) fn row(&self, o: usize) -> &[C64] {
        let w = self.n_in * self.len;
        &self.data[o * w..(o + 1) * w]
    }

    pub(crate) fn row_mut(&mut self, o: usize) -> &mut [C64] {
        let w = self.n_in * self.len;
        &mut self.data[o * w..(o + 1) * w]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Matrix of taps at delay index `l`.
    pub fn tap_matrix(&self, l: usize) -> CMatrix {
        CMatrix::from_fn(self.n_out, self.n_in, |o, i| self.taps(o, i)[l])
    }

    pub fn to_record(&self) -> TapRecord {
        TapRecord {
            format: TapRecord::FORMAT.into(),
            outputs: self.n_out,
            inputs: self.n_in,
            len: self.len,
            taps: (0..self.len).map(|l| MatrixRecord::from(&self.tap_matrix(l))).collect(),
        }
    }

    pub fn from_record(rec: &TapRecord) -> Result<Self> {
        if rec.taps.len() != rec.len {
            return Err(invalid("tap record length mismatch"));
        }
        let mut t = Self::zeros(rec.outputs, rec.inputs, rec.len);
        for (l, m) in rec.taps.iter().enumerate() {
            let m = CMatrix::try_from(m)?;
            if m.nrows() != rec.outputs || m.ncols() != rec.inputs {
                return Err(invalid("tap matrix shape mismatch"));
            }
            for o in 0..rec.outputs {
                for i in 0..rec.inputs {
                    t.taps_mut(o, i)[l] = m[(o, i)];
                }
            }
        }
        Ok(t)
    }
}

/// JSON form of a [`TapTensor`]: one matrix per delay index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapRecord {
    pub format: String,
    pub outputs: usize,
    pub inputs: usize,
    pub len: usize,
    pub taps: Vec<MatrixRecord>,
}

impl TapRecord {
    pub const FORMAT: &'static str = "mdmlink.taps.v1";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_roundtrip() {
        let mut t = TapTensor::center_identity(2, 4, 5);
        t.taps_mut(1, 3)[2] = C64::new(0.25, -0.5);
        let json = serde_json::to_string(&t.to_record()).unwrap();
        let back = TapTensor::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn identity_layout() {
        let t = TapTensor::center_identity(3, 3, 7);
        assert_eq!(t.taps(1, 1)[3], C64::new(1.0, 0.0));
        assert_eq!(t.taps(1, 0)[3], C64::new(0.0, 0.0));
        assert_eq!(t.row(2).len(), 21);
    }
}
