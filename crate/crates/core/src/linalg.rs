//! Dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen, SVD};

use crate::{Error, Result, C64};

/// Largest tolerated `|A − A†|` entry before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Default absolute singular-value floor of [`pseudo_inverse`].
pub const DEFAULT_SINGULAR_FLOOR: f64 = 1e-9;

/// Condition number beyond which a least-squares system is declared singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Largest entry of `|A − A†|`.
pub fn hermitian_deviation(a: &DMatrix<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Real eigenvalues of a Hermitian matrix in descending order.
///
/// The input is symmetrized before decomposition.
pub fn hermitian_eigenvalues(a: &DMatrix<C64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(alloc::format!(
            "eigenvalues of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let deviation = hermitian_deviation(a);
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok(ev)
}

/// Least-squares inverse `M` of a real matrix `G`, with `M·G = I` on the retained subspace.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    /// Singular values of `G`, descending.
    pub singular_values: Vec<f64>,
    /// Number of singular values at or above the floor.
    pub rank: usize,
}

impl PseudoInverse {
    /// `σ_max / σ_min` of `G` (infinite when `σ_min = 0`).
    pub fn condition(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }

    /// Condition number of the normal matrix `GᵀG`.
    pub fn normal_condition(&self) -> f64 {
        let c = self.condition();
        c * c
    }
}

/// `M = (GᵀG)⁻¹Gᵀ` through the SVD of `G`.
///
/// Singular directions with `σ < floor` are dropped.
pub fn pseudo_inverse(g: &DMatrix<f64>, floor: f64) -> PseudoInverse {
    let (rows, cols) = g.shape();
    if rows == 0 || cols == 0 {
        return PseudoInverse {
            matrix: DMatrix::zeros(cols, rows),
            singular_values: Vec::new(),
            rank: 0,
        };
    }
    let svd = SVD::new(g.clone(), true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let k = svd.singular_values.len();
    let mut matrix = DMatrix::<f64>::zeros(cols, rows);
    let mut rank = 0;
    for i in 0..k {
        let s = svd.singular_values[i];
        if s < floor || s == 0.0 {
            continue;
        }
        rank += 1;
        let vi = v_t.row(i).transpose();
        let ui = u.column(i);
        matrix += (vi * ui.transpose()) / s;
    }
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|x, y| y.total_cmp(x));
    PseudoInverse {
        matrix,
        singular_values,
        rank,
    }
}

/// Singular values of a real matrix, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}
