//! Synthetic recovery problems: Gaussian designs with unit-norm columns,
//! cosparse ground truths, noisy observations, and a small phantom task
//! measured on radial lines of its 2D Fourier transform.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::numerics::{self, Matrix, Vector, RANK_TOL};
use crate::operators::{self, AnalysisOperator, CosupportProfile, OperatorKind, COSPARSITY_TOL};
use crate::seeding;

const MAX_COSUPPORT_DRAWS: usize = 100;

// Sub-stream tags for `seeding::derive`.
const STREAM_DESIGN: u64 = 1;
const STREAM_SIGNAL: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// A synthetic instance of `y = X beta* + w`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub x: Matrix,
    pub y: Vector,
    pub beta_star: Vector,
    pub op: Arc<AnalysisOperator>,
    pub sigma: f64,
    /// Cosparsity the ground truth was drawn with.
    pub l_target: usize,
    /// Measured cosupport of `D beta*`.
    pub profile: CosupportProfile,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    /// Draws `X` (`m x d`), an `l`-cosparse `beta*` and `y` with noise level `sigma`.
    pub fn generate(
        op: Arc<AnalysisOperator>,
        m: usize,
        l: usize,
        sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        let x = make_design_matrix(m, op.d(), seeding::derive(seed, STREAM_DESIGN))?;
        let (beta_star, profile) = make_cosparse_vector(&op, l, seeding::derive(seed, STREAM_SIGNAL))?;
        let y = observe(&x, &beta_star, sigma, seeding::derive(seed, STREAM_NOISE))?;
        Ok(ProblemInstance {
            x,
            y,
            beta_star,
            op,
            sigma,
            l_target: l,
            profile,
            seed,
        })
    }

    /// Writes `X.csv`, `y.csv`, `beta_star.csv`, `D.csv` and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        io::write_matrix_csv(&dir.join("X.csv"), &self.x)?;
        io::write_vector_csv(&dir.join("y.csv"), &self.y)?;
        io::write_vector_csv(&dir.join("beta_star.csv"), &self.beta_star)?;
        self.op.write_csv(&dir.join("D.csv"))?;
        let meta = InstanceMeta {
            m: self.m(),
            d: self.d(),
            n: self.n(),
            l: self.l_target,
            sigma: self.sigma,
            seed: self.seed,
            operator: self.op.kind().to_string(),
            operator_seed: match self.op.kind() {
                OperatorKind::RandomParseval { seed } => Some(seed),
                _ => None,
            },
        };
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: InstanceMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        let x = io::read_matrix_csv(&dir.join("X.csv"))?;
        let y = io::read_vector_csv(&dir.join("y.csv"))?;
        let beta_star = io::read_vector_csv(&dir.join("beta_star.csv"))?;
        let kind = meta.operator_kind();
        let op = AnalysisOperator::new(io::read_matrix_csv(&dir.join("D.csv"))?, kind)?;
        if x.nrows() != meta.m || x.ncols() != meta.d || op.n() != meta.n || y.len() != meta.m {
            return Err(Error::Parse("instance files disagree with meta.json".into()));
        }
        let profile = operators::cosparsity(&op, &beta_star, COSPARSITY_TOL)?;
        Ok(ProblemInstance {
            x,
            y,
            beta_star,
            op: Arc::new(op),
            sigma: meta.sigma,
            l_target: meta.l,
            profile,
            seed: meta.seed,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceMeta {
    m: usize,
    d: usize,
    n: usize,
    l: usize,
    sigma: f64,
    seed: u64,
    operator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    operator_seed: Option<u64>,
}

impl InstanceMeta {
    fn operator_kind(&self) -> OperatorKind {
        match self.operator.as_str() {
            "identity" => OperatorKind::Identity,
            "fd1d" => OperatorKind::FiniteDiff1d,
            "parseval" => OperatorKind::RandomParseval {
                seed: self.operator_seed.unwrap_or_default(),
            },
            s => s
                .strip_prefix("fd2d_")
                .and_then(|dims| dims.split_once('x'))
                .and_then(|(h, w)| Some(OperatorKind::FiniteDiff2d {
                    height: h.parse().ok()?,
                    width: w.parse().ok()?,
                }))
                .unwrap_or(OperatorKind::Custom),
        }
    }
}

/// `m x d` matrix of i.i.d. standard normals with every column scaled to unit norm.
pub fn make_design_matrix(m: usize, d: usize, seed: u64) -> Result<Matrix> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidShape(format!("design matrix needs m, d >= 1, got {m}x{d}")));
    }
    let mut x = seeding::gaussian_matrix(m, d, &mut seeding::rng(seed));
    for mut col in x.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    Ok(x)
}

/// Draws `l` rows of `D` at random and returns a unit-norm vector from the
/// null space of those rows, together with its measured cosupport.
pub fn make_cosparse_vector(
    op: &AnalysisOperator,
    l: usize,
    seed: u64,
) -> Result<(Vector, CosupportProfile)> {
    let n = op.n();
    if l == 0 || l > n {
        return Err(Error::InvalidInput(format!("cosparsity must lie in 1..={n}, got {l}")));
    }
    let mut rng = seeding::rng(seed);
    for _ in 0..MAX_COSUPPORT_DRAWS {
        let mut rows = index::sample(&mut rng, n, l).into_vec();
        rows.sort_unstable();
        let basis = numerics::null_space_basis(&op.select_rows(&rows), RANK_TOL)?;
        if basis.ncols() == 0 {
            continue;
        }
        let g = seeding::gaussian_vector(basis.ncols(), &mut rng);
        let mut beta = &basis * g;
        let norm = beta.norm();
        if norm == 0.0 {
            continue;
        }
        beta /= norm;
        // Rows in the drawn cosupport are zero up to rounding; snap them for the profile.
        let mut analysis = op.apply(&beta);
        for &i in &rows {
            if analysis[i].abs() <= COSPARSITY_TOL * analysis.amax() {
                analysis[i] = 0.0;
            }
        }
        let profile = operators::cosparsity_of_analysis(&analysis, COSPARSITY_TOL);
        if profile.k() == 0 {
            // Only the trivial analysis vector fits this cosupport.
            continue;
        }
        return Ok((beta, profile));
    }
    Err(Error::InfeasibleCosparsity {
        l,
        attempts: MAX_COSUPPORT_DRAWS,
    })
}

/// `y = X beta + sigma * g` with `g` standard normal.
pub fn observe(x: &Matrix, beta: &Vector, sigma: f64, seed: u64) -> Result<Vector> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("noise level must be >= 0, got {sigma}")));
    }
    if beta.len() != x.ncols() {
        return Err(Error::InvalidShape(format!(
            "signal has length {} but design has {} columns",
            beta.len(),
            x.ncols()
        )));
    }
    let clean = x * beta;
    if sigma == 0.0 {
        return Ok(clean);
    }
    Ok(clean + seeding::gaussian_vector(x.nrows(), &mut seeding::rng(seed)) * sigma)
}

/// Gray levels used by [`make_phantom`].
pub const PHANTOM_PALETTE: [f64; 6] = [0.0, 0.2, 0.3, 0.4, 0.6, 1.0];

struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    level: usize,
}

// Painted in order; later ellipses overwrite earlier ones.
const PHANTOM_ELLIPSES: [Ellipse; 5] = [
    Ellipse { cx: 0.0, cy: 0.0, rx: 0.69, ry: 0.92, level: 3 },
    Ellipse { cx: 0.25, cy: 0.05, rx: 0.14, ry: 0.36, level: 0 },
    Ellipse { cx: -0.25, cy: 0.05, rx: 0.18, ry: 0.44, level: 1 },
    Ellipse { cx: 0.0, cy: -0.45, rx: 0.25, ry: 0.22, level: 4 },
    Ellipse { cx: 0.0, cy: 0.6, rx: 0.12, ry: 0.12, level: 5 },
];

// Ellipses thinner than 1.5 pixels only add jagged edges at small sizes.
fn resolvable(e: &Ellipse, h: usize, w: usize) -> bool {
    (e.rx * w as f64 / 2.0).min(e.ry * h as f64 / 2.0) >= 1.5
}

/// Piecewise-constant nested-ellipse test image (`h x w`, values in `[0, 1]`).
pub fn make_phantom(h: usize, w: usize) -> Result<Matrix> {
    if h < 8 || w < 8 {
        return Err(Error::InvalidShape(format!("phantom needs h, w >= 8, got {h}x{w}")));
    }
    let mut img = Matrix::zeros(h, w);
    for r in 0..h {
        let py = (2 * r + 1) as f64 / h as f64 - 1.0;
        for c in 0..w {
            let px = (2 * c + 1) as f64 / w as f64 - 1.0;
            for e in PHANTOM_ELLIPSES.iter().filter(|e| resolvable(e, h, w)) {
                let u = (px - e.cx) / e.rx;
                let v = (py - e.cy) / e.ry;
                if u * u + v * v <= 1.0 {
                    img[(r, c)] = PHANTOM_PALETTE[e.level];
                }
            }
        }
    }
    Ok(img)
}

/// Row-major vectorization of an image, matching the pixel order of
/// [`operators::make_fd_2d`].
pub fn vectorize(img: &Matrix) -> Vector {
    Vector::from_iterator(
        img.nrows() * img.ncols(),
        (0..img.nrows()).flat_map(|r| (0..img.ncols()).map(move |c| img[(r, c)])),
    )
}

pub fn unvectorize(v: &Vector, h: usize, w: usize) -> Matrix {
    Matrix::from_fn(h, w, |r, c| v[r * w + c])
}

/// Frequencies `(u, v)` (row, column; centered, `u in [-h/2, h/2)`) nearest to
/// `lines` equally spaced lines through the origin at angles `j * pi / lines`.
/// Each frequency is reported once per conjugate pair `{f, -f}`, sorted.
pub fn radial_frequencies(h: usize, w: usize, lines: usize) -> Vec<(i64, i64)> {
    let (h_i, w_i) = (h as i64, w as i64);
    let wrap = |k: i64, size: i64| -> i64 { (k + size / 2).rem_euclid(size) - size / 2 };
    let canonical = |u: i64, v: i64| -> (i64, i64) {
        let (nu, nv) = (wrap(-u, h_i), wrap(-v, w_i));
        if (u, v) <= (nu, nv) { (u, v) } else { (nu, nv) }
    };
    let radius = h.max(w) as f64;
    let steps = (8.0 * radius) as i64;
    let mut freqs = Vec::new();
    for j in 0..lines {
        let theta = j as f64 * PI / lines as f64;
        let (s, c) = theta.sin_cos();
        for k in -steps..=steps {
            let t = k as f64 * radius / steps as f64;
            let u = (t * s).round() as i64;
            let v = (t * c).round() as i64;
            if u < -h_i / 2 || u >= h_i - h_i / 2 || v < -w_i / 2 || v >= w_i - w_i / 2 {
                continue;
            }
            freqs.push(canonical(u, v));
        }
    }
    freqs.sort_unstable();
    freqs.dedup();
    freqs
}

/// Real-valued partial Fourier measurement operator on `h x w` images.
///
/// Every sampled frequency contributes a cosine row and a sine row of the 2D
/// DFT functional, each scaled to unit norm. Self-conjugate frequencies
/// (DC and Nyquist) have an identically zero sine row, which is omitted.
pub fn make_partial_fourier_radial(h: usize, w: usize, lines: usize) -> Result<Matrix> {
    if lines == 0 {
        return Err(Error::InvalidInput("need at least one radial line".into()));
    }
    if h == 0 || w == 0 {
        return Err(Error::InvalidShape("image must be non-empty".into()));
    }
    let d = h * w;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (u, v) in radial_frequencies(h, w, lines) {
        let phase = |r: usize, c: usize| {
            2.0 * PI * (u as f64 * r as f64 / h as f64 + v as f64 * c as f64 / w as f64)
        };
        let mut cos_row = Vec::with_capacity(d);
        let mut sin_row = Vec::with_capacity(d);
        for r in 0..h {
            for c in 0..w {
                let (s, co) = phase(r, c).sin_cos();
                cos_row.push(co);
                sin_row.push(-s);
            }
        }
        for mut row in [cos_row, sin_row] {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 * (d as f64).sqrt() {
                row.iter_mut().for_each(|x| *x /= norm);
                rows.push(row);
            }
        }
    }
    let flat: Vec<f64> = rows.concat();
    Ok(Matrix::from_row_slice(rows.len(), d, &flat))
}

/// The phantom reconstruction task at desk scale.
#[derive(Debug, Clone)]
pub struct PhantomTask {
    pub image: Matrix,
    pub lines: usize,
    pub instance: ProblemInstance,
}

impl PhantomTask {
    pub fn new(op: Arc<AnalysisOperator>, h: usize, w: usize, lines: usize, sigma: f64, seed: u64) -> Result<Self> {
        if op.d() != h * w {
            return Err(Error::InvalidShape(format!(
                "operator acts on R^{} but image has {} pixels",
                op.d(),
                h * w
            )));
        }
        let image = make_phantom(h, w)?;
        let beta_star = vectorize(&image);
        let x = make_partial_fourier_radial(h, w, lines)?;
        let y = observe(&x, &beta_star, sigma, seeding::derive(seed, STREAM_NOISE))?;
        let profile = operators::cosparsity(&op, &beta_star, COSPARSITY_TOL)?;
        Ok(PhantomTask {
            image,
            lines,
            instance: ProblemInstance {
                x,
                y,
                l_target: profile.l(),
                beta_star,
                op,
                sigma,
                profile,
                seed,
            },
        })
    }
}
