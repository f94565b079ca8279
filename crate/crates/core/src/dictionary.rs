//! Per-group PCA dictionary.
//!
//! The basis is the set of left singular vectors of the raw (uncentered)
//! group matrix, obtained from the eigen-decomposition of `G·Gᵀ`. Directions
//! with numerically zero energy are replaced by a canonical completion so the
//! basis is always a full `m × m` orthonormal matrix.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::matrix::{axpy, dot, Matrix};

/// Eigenvalues below this fraction of the largest one are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupDictionary {
    /// `m × m`, orthonormal columns (atoms) ordered by decreasing energy.
    pub basis: Matrix,
    /// Length `m`, non-negative, non-increasing.
    pub singular_values: Vec<f64>,
    /// Number of atoms carrying non-zero energy.
    pub rank: usize,
}

pub fn learn_pca(data: &Matrix) -> Result<GroupDictionary> {
    let m = data.rows();
    if m == 0 || data.cols() == 0 {
        return Err(Error::Shape(format!("empty {}x{} group", m, data.cols())));
    }
    if !data.is_finite() {
        return Err(Error::Data("group contains non-finite entries".into()));
    }

    let eig = symmetric_eigen(&data.gram())?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let rank = if top > 0.0 {
        eig.values
            .iter()
            .take_while(|&&v| v > top * RANK_TOLERANCE)
            .count()
    } else {
        0
    };

    let mut atoms: Vec<Vec<f64>> = (0..rank).map(|k| eig.vectors.column(k).to_vec()).collect();
    complete_basis(&mut atoms, m);
    for atom in &mut atoms {
        orient(atom);
    }

    let mut singular_values: Vec<f64> = eig
        .values
        .iter()
        .take(rank)
        .map(|&v| libm::sqrt(v.max(0.0)))
        .collect();
    singular_values.resize(m, 0.0);

    let basis = Matrix::from_fn(m, m, |r, c| atoms[c][r]);
    Ok(GroupDictionary {
        basis,
        singular_values,
        rank,
    })
}

/// Extends `atoms` to an orthonormal basis of `ℝ^m` with canonical vectors,
/// always taking the one with the largest component outside the current span.
fn complete_basis(atoms: &mut Vec<Vec<f64>>, m: usize) {
    // residual[k] = ‖(I − QQᵀ) e_k‖²
    let mut residual: Vec<f64> = (0..m)
        .map(|k| 1.0 - atoms.iter().map(|a| a[k] * a[k]).sum::<f64>())
        .collect();
    let mut used = alloc::vec![false; m];
    while atoms.len() < m {
        let k = (0..m)
            .filter(|&k| !used[k])
            .max_by(|&a, &b| residual[a].total_cmp(&residual[b]).then(b.cmp(&a)))
            .expect("fewer atoms than dimensions implies a free canonical vector");
        used[k] = true;
        let mut v = alloc::vec![0.0; m];
        v[k] = 1.0;
        for _ in 0..2 {
            for a in atoms.iter() {
                let proj = dot(a, &v);
                axpy(-proj, a, &mut v);
            }
        }
        let norm = libm::sqrt(dot(&v, &v));
        if !(norm > 1e-8) {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        for (r, x) in residual.iter_mut().zip(&v) {
            *r -= x * x;
        }
        atoms.push(v);
    }
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if libm::fabs(*x) > libm::fabs(v[best]) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

impl GroupDictionary {
    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// `Dᵀ · data`
    pub fn to_coeffs(&self, data: &Matrix) -> Result<Matrix> {
        self.basis.tr_mul(data)
    }

    /// `D · coeffs`
    pub fn from_coeffs(&self, coeffs: &Matrix) -> Result<Matrix> {
        self.basis.mul(coeffs)
    }
}
