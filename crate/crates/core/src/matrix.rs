//! Dense complex matrices and their structured-text (JSON) form.
//!
//! Matrices serialize as `{"rows": R, "cols": C, "data": [[re, im], ...]}`
//! with `data` in row-major order.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sigkit::C64;

pub type CMatrix = DMatrix<C64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixRecord {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                data.push([v.re, v.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<&MatrixRecord> for CMatrix {
    type Error = crate::Error;

    fn try_from(rec: &MatrixRecord) -> Result<Self> {
        if rec.data.len() != rec.rows * rec.cols {
            return Err(invalid(format!(
                "matrix record has {} entries, expected {}x{}",
                rec.data.len(),
                rec.rows,
                rec.cols
            )));
        }
        Ok(CMatrix::from_row_iterator(
            rec.rows,
            rec.cols,
            rec.data.iter().map(|&[re, im]| C64::new(re, im)),
        ))
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigen-decomposition `V·diag(λ)·Vᴴ` of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `exp(j·K)` for Hermitian `K` (a unitary matrix).
pub fn unitary_exp(k: &CMatrix) -> CMatrix {
    let (lam, v) = hermitian_eigen(k);
    let n = lam.len();
    let mut scaled = v.clone();
    for c in 0..n {
        let ph = C64::from_polar(1.0, lam[c]);
        for r in 0..n {
            scaled[(r, c)] *= ph;
        }
    }
    &scaled * v.adjoint()
}

/// Frobenius norm of `Mᴴ·M − I`.
pub fn unitarity_error(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    let id = CMatrix::identity(g.nrows(), g.ncols());
    (g - id).norm()
}
