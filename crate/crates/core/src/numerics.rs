//! Dense linear-algebra substrate.
//!
//! Everything here is a pure function of its inputs. Singular value
//! decompositions are delegated to `nalgebra`; this module adds the rank
//! conventions used across the crate (a singular value is treated as zero
//! when it is at most [`RANK_TOL`] times the largest one) and a few
//! composite operations built on top of them.

use nalgebra::{Cholesky, DMatrix, DVector, SVD};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Singular spectrum of a matrix together with its numerical rank.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Sorted non-increasing, length `min(rows, cols)`.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub sigma_max: f64,
    /// Smallest singular value above the rank threshold; `0.0` for the zero matrix.
    pub sigma_min_nonzero: f64,
}

impl SpectralData {
    /// Builds the record from values already sorted non-increasing.
    pub fn from_sorted(singular_values: Vec<f64>) -> Self {
        let sigma_max = singular_values.first().copied().unwrap_or(0.0);
        let cutoff = RANK_TOL * sigma_max;
        let rank = singular_values
            .iter()
            .take_while(|&&s| s > cutoff && s > 0.0)
            .count();
        let sigma_min_nonzero = if rank == 0 { 0.0 } else { singular_values[rank - 1] };
        SpectralData {
            singular_values,
            rank,
            sigma_max,
            sigma_min_nonzero,
        }
    }

    /// `sigma_max / sigma_min_nonzero`, or `1.0` for the zero matrix.
    pub fn condition_number(&self) -> f64 {
        if self.rank == 0 {
            1.0
        } else {
            self.sigma_max / self.sigma_min_nonzero
        }
    }
}

pub fn check_finite(m: &Matrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidShape(format!(
            "matrix must be non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("matrix has non-finite entries".into()))
    }
}

fn check_finite_vec(v: &Vector) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("vector has non-finite entries".into()))
    }
}

/// Thin SVD with singular triplets sorted by non-increasing singular value.
/// Returns `(u, s, v)` with `M = u * diag(s) * v^T`.
fn sorted_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let k = order.len();
    let u_sorted = Matrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
    let v_sorted = Matrix::from_fn(v_t.ncols(), k, |i, j| v_t[(order[j], i)]);
    let s_sorted = order.iter().map(|&j| s[j]).collect();
    (u_sorted, s_sorted, v_sorted)
}

pub fn singular_values(m: &Matrix) -> Result<SpectralData> {
    check_finite(m)?;
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(SpectralData::from_sorted(s))
}

/// Orthonormal basis (as columns) of `{v : |Mv| <= tol * sigma_max(M) * |v|}`.
///
/// A trivial null space yields a matrix with zero columns.
pub fn null_space_basis(m: &Matrix, tol: f64) -> Result<Matrix> {
    check_finite(m)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let cols = m.ncols();
    // Pad short-and-wide inputs with zero rows so the SVD returns a full V.
    let padded;
    let square = if m.nrows() < cols {
        padded = {
            let mut p = Matrix::zeros(cols, cols);
            p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
            p
        };
        &padded
    } else {
        m
    };
    let (_, s, v) = sorted_svd(square);
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let cutoff = tol * sigma_max;
    let keep: Vec<usize> = (0..cols).filter(|&j| s[j] <= cutoff).collect();
    Ok(Matrix::from_fn(cols, keep.len(), |i, j| v[(i, keep[j])]))
}

/// Moore-Penrose pseudoinverse with the crate-wide rank threshold.
pub fn pseudoinverse(m: &Matrix) -> Result<Matrix> {
    check_finite(m)?;
    let (u, s, v) = sorted_svd(m);
    let cutoff = RANK_TOL * s.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(m.ncols(), m.nrows());
    for (j, &sj) in s.iter().enumerate() {
        if sj > cutoff && sj > 0.0 {
            out += (v.column(j) / sj) * u.column(j).transpose();
        }
    }
    Ok(out)
}

/// Minimum-norm least-squares solution `A^+ b`.
pub fn min_norm_solution(a: &Matrix, b: &Vector) -> Result<Vector> {
    if b.len() != a.nrows() {
        return Err(Error::InvalidShape(format!(
            "rhs has length {} but matrix has {} rows",
            b.len(),
            a.nrows()
        )));
    }
    check_finite_vec(b)?;
    Ok(pseudoinverse(a)? * b)
}

/// Solves `A x = b` for symmetric positive definite `A` by Cholesky.
pub fn solve_spd(a: &Matrix, b: &Vector) -> Result<Vector> {
    check_finite(a)?;
    check_finite_vec(b)?;
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::InvalidShape(format!(
            "expected square system with matching rhs, got {}x{} and {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-8 * scale {
                return Err(Error::InvalidInput("matrix is not symmetric".into()));
            }
        }
    }
    let chol = Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(b))
}
