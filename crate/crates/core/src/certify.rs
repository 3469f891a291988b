//! Brute-force certificates for small problems: restricted isometry constants
//! over analysis-sparse and cosparse models, and the null space property
//! adapted to an analysis operator.
//!
//! The analysis-sparse isometry is measured on `{D^+ w : |supp w| <= s}`,
//! i.e. the isometry of `X D^+` on `s`-sparse vectors relative to `D^+`. For
//! Parseval frames this is the usual D-RIP since `D^+ = D^T`.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix, Vector, RANK_TOL};
use crate::operators::AnalysisOperator;
use crate::seeding;
use crate::theory::{check_budget, Subsets};

/// Margin a null space property check must clear before it is declared to hold.
pub const NSP_STRICTNESS: f64 = 1e-9;

/// Directions with `|D^+ w| <= DEGENERATE_NORM |w|` are excluded from the D-RIP ratio.
const DEGENERATE_NORM: f64 = 1e-12;

const GRID_POINTS: usize = 10_000;
const ANGLE_TOL: f64 = 1e-10;
const RANDOM_STARTS: usize = 10;
const ASCENT_STEPS: usize = 200;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RipFlavor {
    DRip,
    OmegaRip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipEstimate {
    /// Support size (D-RIP) or cosupport size (Omega-RIP).
    pub order: usize,
    pub delta: f64,
    /// First index set (in lexicographic order) attaining `delta`.
    pub extremal_support: Vec<usize>,
    pub flavor: RipFlavor,
}

// Max over subsets, ties broken toward the lexicographically first subset so
// the result does not depend on how the work was scheduled.
fn max_over_subsets<F>(n: usize, size: usize, eval: F) -> Result<Option<(f64, Vec<usize>)>>
where
    F: Fn(&[usize]) -> Result<Option<f64>> + Sync,
{
    check_budget(n, size)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut subsets = Subsets::new(n, size);
    loop {
        let chunk: Vec<Vec<usize>> = subsets.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        let values = chunk
            .par_iter()
            .map(|s| eval(s))
            .collect::<Result<Vec<Option<f64>>>>()?;
        for (s, v) in chunk.into_iter().zip(values) {
            if let Some(v) = v {
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, s));
                }
            }
        }
    }
    Ok(best)
}

fn deviation_from_one(eigenvalues: &Vector) -> f64 {
    eigenvalues.iter().map(|&e| (e - 1.0).abs()).fold(0.0, f64::max)
}

/// Isometry constant of `X` over `{D^+ w : w s-sparse}`.
pub fn drip_delta(x: &Matrix, op: &AnalysisOperator, s: usize) -> Result<RipEstimate> {
    let n = op.n();
    if x.ncols() != op.d() {
        return Err(Error::InvalidShape(format!("X has {} columns, D has {}", x.ncols(), op.d())));
    }
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!("order must lie in 1..={n}, got {s}")));
    }
    let dpinv = numerics::pseudoinverse(op.matrix())?;
    let a = x * &dpinv;
    let best = max_over_subsets(n, s, |support| {
        let b = dpinv.select_columns(support);
        let c = a.select_columns(support);
        // B = U S V^T; w = V S^-1 z gives |D^+ w| = |z| on the range of B.
        let svd = b.svd(false, true);
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let top = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > DEGENERATE_NORM * top.max(1.0))
            .collect();
        if keep.is_empty() {
            return Ok(None);
        }
        let mut basis = Matrix::zeros(s, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            let scale = 1.0 / svd.singular_values[i];
            for r in 0..s {
                basis[(r, j)] = v_t[(i, r)] * scale;
            }
        }
        let cz = &c * &basis;
        let ratios = SymmetricEigen::new(cz.transpose() * &cz).eigenvalues;
        Ok(Some(deviation_from_one(&ratios)))
    })?;
    let (delta, extremal_support) = best.unwrap_or((0.0, Vec::new()));
    Ok(RipEstimate {
        order: s,
        delta,
        extremal_support,
        flavor: RipFlavor::DRip,
    })
}

/// Isometry constant of `X` over the union of `Null(D_Lambda)`, `|Lambda| = l`.
pub fn omega_rip_delta(x: &Matrix, op: &AnalysisOperator, l: usize) -> Result<RipEstimate> {
    let n = op.n();
    if x.ncols() != op.d() {
        return Err(Error::InvalidShape(format!("X has {} columns, D has {}", x.ncols(), op.d())));
    }
    if l > n {
        return Err(Error::InvalidInput(format!("cosupport size must be at most {n}, got {l}")));
    }
    let best = max_over_subsets(n, l, |cosupport| {
        let w = if cosupport.is_empty() {
            Matrix::identity(op.d(), op.d())
        } else {
            numerics::null_space_basis(&op.select_rows(cosupport), RANK_TOL)?
        };
        if w.ncols() == 0 {
            return Ok(None);
        }
        let xw = x * &w;
        Ok(Some(deviation_from_one(&SymmetricEigen::new(xw.transpose() * &xw).eigenvalues)))
    })?;
    let (delta, extremal_support) = best.ok_or(Error::EmptyModel)?;
    Ok(RipEstimate {
        order: l,
        delta,
        extremal_support,
        flavor: RipFlavor::OmegaRip,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Violated,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NspMethod {
    /// Exhaustive for nullity at most one, a refined angular grid for nullity two.
    ExactGrid,
    Randomized,
}

/// A null-space direction `v` and a set `T` with `|D_T v|_q^q >= |D_{T^c} v|_q^q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NspWitness {
    pub v: Vec<f64>,
    pub t: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NspVerdict {
    pub verdict: Verdict,
    /// Smallest `|D_{T^c} v|_q^q - |D_T v|_q^q` found over unit `v` (`+inf` for
    /// a trivial null space).
    pub margin: f64,
    pub witness: Option<NspWitness>,
    pub method: NspMethod,
    pub nullity: usize,
}

/// Which index sets `T` the property quantifies over.
#[derive(Debug, Clone, PartialEq)]
pub enum NspSets {
    /// Every `T` with `|T| <= k`.
    AllUpTo(usize),
    /// A single fixed `T`.
    Fixed(Vec<usize>),
}

impl NspSets {
    // Worst margin over the admissible sets and the set attaining it.
    fn worst(&self, analysis: &Vector, q: f64) -> (f64, Vec<usize>) {
        let powered: Vec<f64> = analysis.iter().map(|a| a.abs().powf(q)).collect();
        let total: f64 = powered.iter().sum();
        match self {
            NspSets::AllUpTo(k) => {
                let mut order: Vec<usize> = (0..powered.len()).collect();
                order.sort_by(|&i, &j| powered[j].total_cmp(&powered[i]).then(i.cmp(&j)));
                let mut t: Vec<usize> = order[..*k].to_vec();
                t.sort_unstable();
                let inside: f64 = t.iter().map(|&i| powered[i]).sum();
                (total - 2.0 * inside, t)
            }
            NspSets::Fixed(t) => {
                let inside: f64 = t.iter().map(|&i| powered[i]).sum();
                (total - 2.0 * inside, t.clone())
            }
        }
    }
}

/// Checks `|D_T v|_q^q < |D_{T^c} v|_q^q` for all nonzero `v` in `Null(X)` and
/// all `|T| <= k`.
pub fn dnspq_check(
    x: &Matrix,
    op: &AnalysisOperator,
    q: f64,
    k: usize,
    budget: usize,
    seed: u64,
) -> Result<NspVerdict> {
    if k > op.n() {
        return Err(Error::InvalidInput(format!("k must be at most n = {}, got {k}", op.n())));
    }
    nsp_check(x, op, q, &NspSets::AllUpTo(k), budget, seed)
}

/// The same property relative to one fixed index set `T`.
pub fn dnspq_check_relative(
    x: &Matrix,
    op: &AnalysisOperator,
    q: f64,
    t: &[usize],
    budget: usize,
    seed: u64,
) -> Result<NspVerdict> {
    if t.iter().any(|&i| i >= op.n()) {
        return Err(Error::InvalidInput("T contains an index outside 0..n".into()));
    }
    let mut t = t.to_vec();
    t.sort_unstable();
    t.dedup();
    nsp_check(x, op, q, &NspSets::Fixed(t), budget, seed)
}

fn nsp_check(
    x: &Matrix,
    op: &AnalysisOperator,
    q: f64,
    sets: &NspSets,
    budget: usize,
    seed: u64,
) -> Result<NspVerdict> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidInput(format!("q must lie in (0, 1], got {q}")));
    }
    if x.ncols() != op.d() {
        return Err(Error::InvalidShape(format!("X has {} columns, D has {}", x.ncols(), op.d())));
    }
    let basis = numerics::null_space_basis(x, RANK_TOL)?;
    let nullity = basis.ncols();
    // Analysis of the null space basis: D v = (D W) c.
    let dw = op.matrix() * &basis;
    let evaluate = |c: &Vector| -> (f64, Vec<usize>) { sets.worst(&(&dw * c), q) };

    let verdict_from = |margin: f64, c: &Vector, t: Vec<usize>, method| {
        let violated = margin <= NSP_STRICTNESS;
        NspVerdict {
            verdict: if violated { Verdict::Violated } else { Verdict::Holds },
            margin,
            witness: violated.then(|| NspWitness {
                v: (&basis * c).as_slice().to_vec(),
                t,
            }),
            method,
            nullity,
        }
    };

    match nullity {
        0 => Ok(NspVerdict {
            verdict: Verdict::Holds,
            margin: f64::INFINITY,
            witness: None,
            method: NspMethod::ExactGrid,
            nullity,
        }),
        1 => {
            let c = Vector::from_element(1, 1.0);
            let (margin, t) = evaluate(&c);
            Ok(verdict_from(margin, &c, t, NspMethod::ExactGrid))
        }
        2 => {
            // v(theta) and v(theta + pi) differ only in sign.
            let at = |theta: f64| Vector::from_vec(vec![theta.cos(), theta.sin()]);
            let step = std::f64::consts::PI / GRID_POINTS as f64;
            let grid: Vec<f64> = (0..GRID_POINTS).map(|i| evaluate(&at(i as f64 * step)).0).collect();
            let mut best_theta = 0.0;
            let mut best = f64::INFINITY;
            for i in 0..GRID_POINTS {
                let prev = grid[(i + GRID_POINTS - 1) % GRID_POINTS];
                let next = grid[(i + 1) % GRID_POINTS];
                if grid[i] <= prev && grid[i] <= next {
                    let center = i as f64 * step;
                    let (theta, value) =
                        golden_section(|th| evaluate(&at(th)).0, center - step, center + step);
                    let (theta, value) = if grid[i] < value { (center, grid[i]) } else { (theta, value) };
                    if value < best {
                        best = value;
                        best_theta = theta;
                    }
                }
            }
            let c = at(best_theta);
            let (margin, t) = evaluate(&c);
            Ok(verdict_from(margin, &c, t, NspMethod::ExactGrid))
        }
        _ => {
            let mut rng = seeding::rng(seed);
            let mut starts: Vec<(f64, Vector)> = (0..budget.max(1))
                .map(|_| {
                    let c = seeding::gaussian_vector(nullity, &mut rng).normalize();
                    (evaluate(&c).0, c)
                })
                .collect();
            starts.sort_by(|a, b| a.0.total_cmp(&b.0));
            starts.truncate(RANDOM_STARTS);
            let mut best = (f64::INFINITY, Vector::zeros(nullity));
            for (_, c) in starts {
                let (m, c) = descend_margin(&dw, q, sets, c);
                if m < best.0 {
                    best = (m, c);
                }
            }
            let (margin, t) = evaluate(&best.1);
            let mut out = verdict_from(margin, &best.1, t, NspMethod::Randomized);
            if out.verdict == Verdict::Holds {
                out.verdict = Verdict::Unknown;
            }
            Ok(out)
        }
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > ANGLE_TOL {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

// Projected (sphere) descent on the margin, with T re-chosen at every step.
fn descend_margin(dw: &Matrix, q: f64, sets: &NspSets, mut c: Vector) -> (f64, Vector) {
    let mut current = sets.worst(&(dw * &c), q);
    let mut step = 0.1;
    for _ in 0..ASCENT_STEPS {
        let a = dw * &c;
        let mut g = Vector::zeros(a.len());
        let mut inside = vec![false; a.len()];
        for &i in &current.1 {
            inside[i] = true;
        }
        for i in 0..a.len() {
            let mag = a[i].abs().max(1e-12);
            let sign = if inside[i] { -1.0 } else { 1.0 };
            g[i] = sign * q * mag.powf(q - 1.0) * a[i].signum();
        }
        let mut grad = dw.transpose() * g;
        // Tangent component only.
        let radial = grad.dot(&c);
        grad -= &c * radial;
        if grad.norm() < 1e-14 {
            break;
        }
        let mut improved = false;
        while step > 1e-12 {
            let trial = (&c - &grad * step).normalize();
            let value = sets.worst(&(dw * &trial), q);
            if value.0 < current.0 {
                c = trial;
                current = value;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved || current.0 <= 0.0 {
            break;
        }
    }
    (current.0, c)
}

/// Re-checks a witness: `X v = 0`, `|T| <= k` and `|D_T v|_q^q >= |D_{T^c} v|_q^q`
/// (both within tolerance).
pub fn verify_witness(
    x: &Matrix,
    op: &AnalysisOperator,
    q: f64,
    k: usize,
    witness: &NspWitness,
) -> bool {
    let v = Vector::from_column_slice(&witness.v);
    let scale = v.norm();
    if scale == 0.0 || witness.t.len() > k {
        return false;
    }
    let x_norm = numerics::singular_values(x).map(|s| s.sigma_max).unwrap_or(f64::INFINITY);
    if (x * &v).norm() > 1e-10 * x_norm.max(1.0) * scale {
        return false;
    }
    let v = v / scale;
    let (margin, _) = NspSets::Fixed(witness.t.clone()).worst(&op.apply(&v), q);
    margin <= NSP_STRICTNESS
}
