//! Analysis operators `D : R^d -> R^n` and cosparsity bookkeeping.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::numerics::{self, Matrix, SpectralData, Vector};
use crate::seeding;

/// Default relative zero-test used by [`cosparsity`].
pub const COSPARSITY_TOL: f64 = 1e-9;

const PARSEVAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Identity,
    FiniteDiff1d,
    FiniteDiff2d { height: usize, width: usize },
    RandomParseval { seed: u64 },
    Custom,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Identity => write!(f, "identity"),
            OperatorKind::FiniteDiff1d => write!(f, "fd1d"),
            OperatorKind::FiniteDiff2d { height, width } => write!(f, "fd2d_{height}x{width}"),
            OperatorKind::RandomParseval { .. } => write!(f, "parseval"),
            OperatorKind::Custom => write!(f, "custom"),
        }
    }
}

/// An analysis operator with cached spectral data.
#[derive(Debug, Clone)]
pub struct AnalysisOperator {
    matrix: Matrix,
    spectral: SpectralData,
    kappa: f64,
    full_column_rank: bool,
    parseval: bool,
    kind: OperatorKind,
    // Nonzero pattern per row; finite differences have two entries per row.
    sparse_rows: Vec<Vec<(usize, f64)>>,
    // D^T, kept for dense operators where GEMM beats the row loop.
    dense_transpose: Option<Matrix>,
}

impl AnalysisOperator {
    pub fn new(matrix: Matrix, kind: OperatorKind) -> Result<Self> {
        let spectral = numerics::singular_values(&matrix)?;
        Self::with_spectral(matrix, kind, spectral)
    }

    // `spectral` must be the singular spectrum of `matrix`.
    fn with_spectral(matrix: Matrix, kind: OperatorKind, spectral: SpectralData) -> Result<Self> {
        numerics::check_finite(&matrix)?;
        if spectral.rank == 0 {
            return Err(Error::InvalidInput("analysis operator is the zero matrix".into()));
        }
        let d = matrix.ncols();
        // D^T D = I exactly when all d singular values are one.
        let parseval = spectral.singular_values.len() == d
            && spectral.singular_values.iter().all(|s| (s * s - 1.0).abs() <= PARSEVAL_TOL);
        let sparse_rows = (0..matrix.nrows())
            .map(|i| {
                (0..d)
                    .filter_map(|j| {
                        let v = matrix[(i, j)];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect::<Vec<Vec<_>>>();
        let nnz: usize = sparse_rows.iter().map(Vec::len).sum();
        let dense_transpose = (nnz * 4 > matrix.len()).then(|| matrix.transpose());
        Ok(AnalysisOperator {
            dense_transpose,
            kappa: spectral.condition_number(),
            full_column_rank: spectral.rank == d,
            parseval,
            spectral,
            matrix,
            kind,
            sparse_rows,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn full_column_rank(&self) -> bool {
        self.full_column_rank
    }

    pub fn parseval(&self) -> bool {
        self.parseval
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Number of analysis coefficients `n`.
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Signal dimension `d`.
    pub fn d(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn sigma_max(&self) -> f64 {
        self.spectral.sigma_max
    }

    pub fn sigma_min(&self) -> f64 {
        self.spectral.sigma_min_nonzero
    }

    /// `D beta`.
    pub fn apply(&self, beta: &Vector) -> Vector {
        Vector::from_iterator(
            self.n(),
            self.sparse_rows
                .iter()
                .map(|row| row.iter().map(|&(j, v)| v * beta[j]).sum::<f64>()),
        )
    }

    /// `D^T v`.
    pub fn apply_transpose(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.d());
        for (row, &vi) in self.sparse_rows.iter().zip(v.iter()) {
            for &(j, dij) in row {
                out[j] += dij * vi;
            }
        }
        out
    }

    /// Adds `scale * D^T diag(weights) D` into `target` (a `d x d` matrix).
    pub fn add_weighted_gram(&self, weights: &Vector, scale: f64, target: &mut Matrix) {
        if let Some(dt) = &self.dense_transpose {
            let mut scaled = self.matrix.clone();
            for (mut row, &w) in scaled.row_iter_mut().zip(weights.iter()) {
                row *= scale * w;
            }
            target.gemm(1.0, dt, &scaled, 1.0);
            return;
        }
        for (row, &w) in self.sparse_rows.iter().zip(weights.iter()) {
            let s = scale * w;
            if s == 0.0 {
                continue;
            }
            for &(a, va) in row {
                let sa = s * va;
                for &(b, vb) in row {
                    target[(a, b)] += sa * vb;
                }
            }
        }
    }

    /// Rows of `D` indexed by `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), self.d(), |i, j| self.matrix[(rows[i], j)])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_matrix_csv(path, &self.matrix)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::new(io::read_matrix_csv(path)?, OperatorKind::Custom)
    }
}

pub fn make_identity(d: usize) -> Result<AnalysisOperator> {
    if d == 0 {
        return Err(Error::InvalidShape("identity operator needs d >= 1".into()));
    }
    AnalysisOperator::new(Matrix::identity(d, d), OperatorKind::Identity)
}

/// Forward differences `beta[i+1] - beta[i]`, shape `(d-1) x d`.
pub fn make_fd_1d(d: usize) -> Result<AnalysisOperator> {
    if d < 2 {
        return Err(Error::InvalidShape("1D difference operator needs d >= 2".into()));
    }
    let mut m = Matrix::zeros(d - 1, d);
    for i in 0..d - 1 {
        m[(i, i)] = -1.0;
        m[(i, i + 1)] = 1.0;
    }
    let spectral = SpectralData::from_sorted(sorted_desc(
        (1..d).map(|k| path_laplacian_eigenvalue(k, d).sqrt()).collect(),
    ));
    AnalysisOperator::with_spectral(m, OperatorKind::FiniteDiff1d, spectral)
}

// Eigenvalues of the path-graph Laplacian on `len` nodes: 4 sin^2(pi k / 2 len).
fn path_laplacian_eigenvalue(k: usize, len: usize) -> f64 {
    let s = (std::f64::consts::PI * k as f64 / (2 * len) as f64).sin();
    4.0 * s * s
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Anisotropic 2D forward differences on an `h x w` image stored row-major
/// (pixel `(r, c)` at index `r * w + c`).
///
/// Rows are ordered: all horizontal differences `x[r, c+1] - x[r, c]`
/// (row-major over `(r, c)`), then all vertical differences
/// `x[r+1, c] - x[r, c]` (row-major over `(r, c)`). No wrap-around.
pub fn make_fd_2d(h: usize, w: usize) -> Result<AnalysisOperator> {
    if h < 2 || w < 2 {
        return Err(Error::InvalidShape("2D difference operator needs h, w >= 2".into()));
    }
    let d = h * w;
    let n = h * (w - 1) + (h - 1) * w;
    let mut m = Matrix::zeros(n, d);
    let mut row = 0;
    for r in 0..h {
        for c in 0..w - 1 {
            m[(row, r * w + c)] = -1.0;
            m[(row, r * w + c + 1)] = 1.0;
            row += 1;
        }
    }
    for r in 0..h - 1 {
        for c in 0..w {
            m[(row, r * w + c)] = -1.0;
            m[(row, (r + 1) * w + c)] = 1.0;
            row += 1;
        }
    }
    debug_assert_eq!(row, n);
    // D^T D is the Kronecker sum of the two path Laplacians, so its spectrum
    // is known in closed form; a dense SVD is out of reach for large images.
    let spectral = SpectralData::from_sorted(sorted_desc(
        (0..h)
            .flat_map(|a| {
                (0..w).map(move |b| {
                    (path_laplacian_eigenvalue(a, h) + path_laplacian_eigenvalue(b, w)).sqrt()
                })
            })
            .collect(),
    ));
    AnalysisOperator::with_spectral(m, OperatorKind::FiniteDiff2d { height: h, width: w }, spectral)
}

/// Random Parseval frame: an `n x d` standard Gaussian with orthonormalized
/// columns, so that `D^T D = I_d`.
pub fn make_random_parseval_frame(n: usize, d: usize, seed: u64) -> Result<AnalysisOperator> {
    if d == 0 || n < d {
        return Err(Error::InvalidShape(format!(
            "Parseval frame needs n >= d >= 1, got n={n}, d={d}"
        )));
    }
    let g = seeding::gaussian_matrix(n, d, &mut seeding::rng(seed));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Sign-fix so Q is Haar-distributed rather than tied to the Householder convention.
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    AnalysisOperator::new(q, OperatorKind::RandomParseval { seed })
}

/// Support / cosupport split of an analysis vector `D beta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosupportProfile {
    pub support: Vec<usize>,
    pub cosupport: Vec<usize>,
}

impl CosupportProfile {
    pub fn from_cosupport(n: usize, mut cosupport: Vec<usize>) -> Self {
        cosupport.sort_unstable();
        cosupport.dedup();
        let support = (0..n).filter(|i| cosupport.binary_search(i).is_err()).collect();
        CosupportProfile { support, cosupport }
    }

    /// Sparsity `k = |T|`.
    pub fn k(&self) -> usize {
        self.support.len()
    }

    /// Cosparsity `l = |Lambda|`.
    pub fn l(&self) -> usize {
        self.cosupport.len()
    }

    pub fn n(&self) -> usize {
        self.support.len() + self.cosupport.len()
    }
}

/// Splits the rows of `D beta` into zeros (relative to `tol * |D beta|_inf`)
/// and nonzeros.
pub fn cosparsity(op: &AnalysisOperator, beta: &Vector, tol: f64) -> Result<CosupportProfile> {
    if beta.len() != op.d() {
        return Err(Error::InvalidShape(format!(
            "vector has length {} but operator acts on R^{}",
            beta.len(),
            op.d()
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be >= 0, got {tol}")));
    }
    Ok(cosparsity_of_analysis(&op.apply(beta), tol))
}

pub fn cosparsity_of_analysis(analysis: &Vector, tol: f64) -> CosupportProfile {
    let peak = analysis.amax();
    let cutoff = tol * peak;
    let cosupport = (0..analysis.len())
        .filter(|&i| peak == 0.0 || analysis[i].abs() <= cutoff)
        .collect();
    CosupportProfile::from_cosupport(analysis.len(), cosupport)
}
