//! CoIRLq: cosparse iteratively reweighted lq minimization.
//!
//! Minimizes the penalized analysis problem
//!
//! ```text
//!     1/2 |y - X beta|^2 + lambda * |D beta|_q^q
//! ```
//!
//! through its smoothed variational surrogate
//!
//! ```text
//!     F(beta, eps) = 1/2 |y - X beta|^2 + lambda * sum_i (|D_i beta|^2 + eps^2)^(q/2)
//! ```
//!
//! by alternating three closed-form steps: a weight update, a weighted least
//! squares solve, and a monotone shrink of the smoothing parameter driven by
//! the `l`-th smallest analysis magnitude. Every step leaves `F` non-increasing.

use std::io::Write;

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::numerics::{self, Matrix, Vector, RANK_TOL};
use crate::operators::{self, AnalysisOperator};

/// Exponent of the inner weighted problem. Only the least-squares case is supported.
pub const ALPHA: f64 = 2.0;

/// Relative error at or below which a recovery counts as exact.
pub const SUCCESS_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub q: f64,
    pub lambda: f64,
    /// Cosparsity `l` whose analysis magnitude drives the smoothing schedule.
    pub l_target: usize,
    /// Shrink factor applied to the `l`-th smallest analysis magnitude.
    pub rho_eps: f64,
    /// Stationarity tolerance on `|beta^k - beta^(k-1)|_inf`.
    pub tau: f64,
    /// Smoothing values at or below this snap to exactly zero.
    pub eps_floor: f64,
    pub max_iters: usize,
    /// Upper clamp on the weights.
    pub eta_cap: f64,
    /// Consecutive small steps that end the run while `eps > 0`.
    pub stall_window: usize,
}

impl SolverConfig {
    pub fn new(q: f64, lambda: f64, l_target: usize) -> Self {
        SolverConfig {
            q,
            lambda,
            l_target,
            rho_eps: 0.9,
            tau: 1e-8,
            eps_floor: 1e-13,
            max_iters: 500,
            eta_cap: 1e12,
            stall_window: 10,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.q > 0.0 && self.q <= 1.0) {
            return bad(format!("q must lie in (0, 1], got {}", self.q));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.rho_eps > 0.0 && self.rho_eps < 1.0) {
            return bad(format!("rho_eps must lie in (0, 1), got {}", self.rho_eps));
        }
        if !(self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.eps_floor >= 0.0) || !(self.eta_cap > 0.0) {
            return bad("eps_floor must be >= 0 and eta_cap > 0".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.l_target == 0 || self.l_target > n {
            return bad(format!("l_target must lie in 1..={n}, got {}", self.l_target));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `|delta beta|_inf <= tau` for `stall_window` consecutive steps with `eps > 0`.
    Stationary,
    /// `eps` reached zero and the last step was below `tau`.
    EpsilonZero,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub beta: Vector,
    pub epsilon: f64,
    /// `F(beta, eps)` with the weights restricted to `(0, eta_cap]`; equals
    /// [`objective_f`] unless a weight was clamped. See [`capped_smoothed_lq`].
    pub f_value: f64,
    pub residual_norm: f64,
    /// `|D beta|_q^q`.
    pub lq_norm: f64,
    /// `|beta^k - beta^(k-1)|_inf`; zero for the initial point.
    pub delta_beta_inf: f64,
}

/// Iterate history; entry 0 is the initialization.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl SolverTrace {
    /// Number of completed reweighting sweeps.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn f_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.f_value)
    }

    /// Largest relative increase `(F_{k+1} - F_k) / |F_k|` over the run
    /// (negative or zero for a monotone trace).
    pub fn worst_relative_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].f_value - w[0].f_value) / w[0].f_value.abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with columns `iter,F,epsilon,residual_norm,lq_norm,delta_beta_inf`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iter,F,epsilon,residual_norm,lq_norm,delta_beta_inf")?;
        for (k, r) in self.records.iter().enumerate() {
            writeln!(
                out,
                "{k},{:?},{:?},{:?},{:?},{:?}",
                r.f_value, r.epsilon, r.residual_norm, r.lq_norm, r.delta_beta_inf
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub beta_hat: Vector,
    pub trace: SolverTrace,
    pub relative_error: Option<f64>,
    pub success: bool,
}

/// `eta_i = (|a_i|^alpha + eps^alpha)^(q/alpha - 1)`, clamped to `[0, eta_cap]`.
pub fn eta_update(analysis: &Vector, epsilon: f64, q: f64, alpha: f64, eta_cap: f64) -> Vector {
    let eps_a = epsilon.powf(alpha);
    analysis.map(|a| {
        let base = a.abs().powf(alpha) + eps_a;
        let eta = if base == 0.0 {
            f64::INFINITY
        } else {
            base.powf(q / alpha - 1.0)
        };
        eta.min(eta_cap)
    })
}

/// `min(eps_prev, rho * r_l)` where `r_l` is the `l`-th smallest `|a_i|`;
/// results at or below `eps_floor` become exactly zero.
pub fn epsilon_update(analysis: &Vector, l: usize, rho: f64, eps_prev: f64, eps_floor: f64) -> f64 {
    assert!(l >= 1 && l <= analysis.len(), "l must lie in 1..=n");
    let mut mags: Vec<f64> = analysis.iter().map(|a| a.abs()).collect();
    let (_, r_l, _) = mags.select_nth_unstable_by(l - 1, f64::total_cmp);
    let eps = eps_prev.min(rho * *r_l);
    if eps <= eps_floor {
        0.0
    } else {
        eps
    }
}

/// `sum_i (|a_i|^2 + eps^2)^(q/2)`.
pub fn smoothed_lq(analysis: &Vector, epsilon: f64, q: f64) -> f64 {
    let eps_a = epsilon.powf(ALPHA);
    analysis
        .iter()
        .map(|a| (a.abs().powf(ALPHA) + eps_a).powf(q / ALPHA))
        .sum()
}

/// `min over 0 < eta_i <= eta_cap` of the variational bound on the smoothed
/// penalty. Rows whose weight would exceed the cap contribute the tangent
/// `(q/2) cap u + (1 - q/2) cap^(-q/(2-q))` in `u = |a_i|^2 + eps^2` instead
/// of `u^(q/2)`; the two agree where the cap is inactive. The clamped
/// reweighting step minimizes this bound exactly, so the solver decreases it
/// monotonically.
pub fn capped_smoothed_lq(analysis: &Vector, epsilon: f64, q: f64, eta_cap: f64) -> f64 {
    let eps2 = epsilon * epsilon;
    let floor_term = (1.0 - q / ALPHA) * eta_cap.powf(-q / (ALPHA - q));
    analysis
        .iter()
        .map(|a| {
            let u = a * a + eps2;
            if u > 0.0 && u.powf(q / ALPHA - 1.0) <= eta_cap {
                u.powf(q / ALPHA)
            } else {
                q / ALPHA * eta_cap * u + floor_term
            }
        })
        .sum()
}

/// `|a|_q^q`.
pub fn lq_norm(analysis: &Vector, q: f64) -> f64 {
    analysis.iter().map(|a| a.abs().powf(q)).sum()
}

/// Smoothed objective `F(beta, eps)` in closed form.
pub fn objective_f(
    x: &Matrix,
    y: &Vector,
    op: &AnalysisOperator,
    beta: &Vector,
    epsilon: f64,
    lambda: f64,
    q: f64,
) -> f64 {
    let residual = y - x * beta;
    0.5 * residual.norm_squared() + lambda * smoothed_lq(&op.apply(beta), epsilon, q)
}

/// The variational bound `J_alpha(eta)` on `|a|_q^q`:
/// `(q/alpha) sum_i (eta_i |a_i|^alpha + ((alpha - q)/q) eta_i^(-q/(alpha - q)))`.
pub fn variational_bound(analysis: &Vector, eta: &Vector, q: f64, alpha: f64) -> f64 {
    let tail = (alpha - q) / q;
    let expo = -q / (alpha - q);
    q / alpha
        * analysis
            .iter()
            .zip(eta.iter())
            .map(|(a, &e)| e * a.abs().powf(alpha) + tail * e.powf(expo))
            .sum::<f64>()
}

/// Normal equations of the weighted least-squares step with `X^T X` and `X^T y` cached.
pub struct WeightedLeastSquares<'a> {
    op: &'a AnalysisOperator,
    x: Matrix,
    y: Vector,
    xtx: Matrix,
    xty: Vector,
}

impl<'a> WeightedLeastSquares<'a> {
    pub fn new(x: &Matrix, y: &Vector, op: &'a AnalysisOperator) -> Result<Self> {
        if x.ncols() != op.d() || y.len() != x.nrows() {
            return Err(Error::InvalidShape(format!(
                "X is {}x{}, y has length {}, D is {}x{}",
                x.nrows(),
                x.ncols(),
                y.len(),
                op.n(),
                op.d()
            )));
        }
        let xt = x.transpose();
        Ok(WeightedLeastSquares {
            op,
            x: x.clone(),
            y: y.clone(),
            xtx: &xt * x,
            xty: &xt * y,
        })
    }

    pub fn xty(&self) -> &Vector {
        &self.xty
    }

    fn system(&self, eta: &Vector, lambda: f64, q: f64) -> Matrix {
        let mut a = self.xtx.clone();
        // d/d beta of (lambda q / alpha) sum eta_i |D_i beta|^2 contributes lambda q D^T diag(eta) D.
        self.op.add_weighted_gram(eta, lambda * q, &mut a);
        a
    }

    /// Exact minimizer of `1/2 |y - X beta|^2 + (lambda q / 2) sum_i eta_i |D_i beta|^2`.
    pub fn solve(&self, eta: &Vector, lambda: f64, q: f64) -> Result<Vector> {
        if self.op.d() < LARGE_SYSTEM {
            if let Some(beta) = self.solve_stacked(eta, lambda, q) {
                return Ok(beta);
            }
        }
        let a = self.system(eta, lambda, q);
        let factor = match SpdFactor::new(&a) {
            Some(f) => f,
            None => {
                let d = a.nrows();
                let ridge = 1e-12 * a.trace() / d as f64;
                let mut r = a.clone();
                for i in 0..d {
                    r[(i, i)] += ridge;
                }
                SpdFactor::new(&r).ok_or(Error::SingularSystem)?
            }
        };
        let mut beta = factor.solve(&self.xty);
        // One step of iterative refinement against the unregularized system.
        let residual = &self.xty - &a * &beta;
        beta += factor.solve(&residual);
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok(beta)
    }

    // Householder QR of [X; sqrt(lambda q eta) D]. Clamped weights make the
    // normal matrix condition number the square of this one, so small systems
    // go through here; `None` when the stacked matrix is numerically rank deficient.
    fn solve_stacked(&self, eta: &Vector, lambda: f64, q: f64) -> Option<Vector> {
        let (m, n, d) = (self.x.nrows(), self.op.n(), self.op.d());
        let dm = self.op.matrix();
        let mut stacked = Matrix::zeros(m + n, d);
        stacked.rows_mut(0, m).copy_from(&self.x);
        for i in 0..n {
            let w = (lambda * q * eta[i]).sqrt();
            for j in 0..d {
                stacked[(m + i, j)] = w * dm[(i, j)];
            }
        }
        let mut rhs = Vector::zeros(m + n);
        rhs.rows_mut(0, m).copy_from(&self.y);
        let qr = stacked.qr();
        let r = qr.r();
        let diag_max = r.diagonal().amax();
        if !(diag_max > 0.0) || r.diagonal().iter().any(|v| v.abs() <= RANK_TOL * diag_max) {
            return None;
        }
        qr.q_tr_mul(&mut rhs);
        let beta = r.solve_upper_triangular(&rhs.rows(0, d).into_owned())?;
        beta.iter().all(|v| v.is_finite()).then_some(beta)
    }

    /// Gradient of the weighted quadratic at `beta`.
    pub fn gradient(&self, beta: &Vector, eta: &Vector, lambda: f64, q: f64) -> Vector {
        let weighted = self.op.apply(beta).component_mul(eta) * (lambda * q);
        &self.xtx * beta - &self.xty + self.op.apply_transpose(&weighted)
    }
}

// Above this size faer's blocked Cholesky is several times faster than nalgebra's.
const LARGE_SYSTEM: usize = 256;

enum SpdFactor {
    Small(Cholesky<f64, nalgebra::Dyn>),
    Large(faer::linalg::solvers::Cholesky<f64>),
}

impl SpdFactor {
    fn new(a: &Matrix) -> Option<Self> {
        let d = a.nrows();
        if d < LARGE_SYSTEM {
            return Cholesky::new(a.clone()).map(SpdFactor::Small);
        }
        let m = faer::Mat::<f64>::from_fn(d, d, |i, j| a[(i, j)]);
        m.cholesky(faer::Side::Lower).ok().map(SpdFactor::Large)
    }

    fn solve(&self, b: &Vector) -> Vector {
        match self {
            SpdFactor::Small(c) => c.solve(b),
            SpdFactor::Large(c) => {
                use faer::prelude::SpSolver;
                let rhs = faer::Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
                let x = c.solve(&rhs);
                Vector::from_fn(b.len(), |i, _| x[(i, 0)])
            }
        }
    }
}

/// One weighted least-squares step; see [`WeightedLeastSquares::solve`].
pub fn beta_update(
    x: &Matrix,
    y: &Vector,
    op: &AnalysisOperator,
    eta: &Vector,
    lambda: f64,
    q: f64,
) -> Result<Vector> {
    if eta.len() != op.n() || eta.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::InvalidInput("weights must be non-negative, one per row of D".into()));
    }
    WeightedLeastSquares::new(x, y, op)?.solve(eta, lambda, q)
}

/// Runs CoIRLq on an instance and scores it against the stored ground truth.
pub fn solve(instance: &ProblemInstance, config: &SolverConfig) -> Result<RecoveryResult> {
    solve_problem(&instance.x, &instance.y, &instance.op, config, Some(&instance.beta_star))
}

pub fn solve_problem(
    x: &Matrix,
    y: &Vector,
    op: &AnalysisOperator,
    config: &SolverConfig,
    truth: Option<&Vector>,
) -> Result<RecoveryResult> {
    config.validate(op.n())?;
    let wls = WeightedLeastSquares::new(x, y, op)?;
    let q = config.q;
    let lambda = config.lambda;

    let record = |beta: Vector, epsilon: f64, delta: f64| {
        let analysis = op.apply(&beta);
        let residual_norm = (y - x * &beta).norm();
        IterationRecord {
            f_value: 0.5 * residual_norm * residual_norm
                + lambda * capped_smoothed_lq(&analysis, epsilon, q, config.eta_cap),
            lq_norm: lq_norm(&analysis, q),
            residual_norm,
            epsilon,
            delta_beta_inf: delta,
            beta,
        }
    };

    let beta0 = numerics::min_norm_solution(x, y)?;
    let mut records = vec![record(beta0, 1.0, 0.0)];
    let mut small_steps = 0;
    let mut termination = Termination::MaxIters;

    for _ in 0..config.max_iters {
        let prev = records.last().expect("initialized");
        let eta = eta_update(&op.apply(&prev.beta), prev.epsilon, q, ALPHA, config.eta_cap);
        let beta = wls.solve(&eta, lambda, q)?;
        let epsilon = epsilon_update(
            &op.apply(&beta),
            config.l_target,
            config.rho_eps,
            prev.epsilon,
            config.eps_floor,
        );
        let delta = (&beta - &prev.beta).amax();
        records.push(record(beta, epsilon, delta));

        if delta <= config.tau {
            small_steps += 1;
            if epsilon == 0.0 {
                termination = Termination::EpsilonZero;
                break;
            }
            if small_steps >= config.stall_window {
                termination = Termination::Stationary;
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    let beta_hat = records.last().expect("non-empty").beta.clone();
    let relative_error = truth.map(|t| relative_error(&beta_hat, t));
    Ok(RecoveryResult {
        success: relative_error.is_some_and(|e| e <= SUCCESS_TOL),
        relative_error,
        beta_hat,
        trace: SolverTrace {
            records,
            termination,
        },
    })
}

/// `|estimate - truth|_2 / |truth|_2` (absolute error when `truth = 0`).
pub fn relative_error(estimate: &Vector, truth: &Vector) -> f64 {
    let err = (estimate - truth).norm();
    let scale = truth.norm();
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Iterate bound `sigma_min(D)^-1 (F(beta^0, eps^0) / lambda)^(1/q)` for
/// full-column-rank `D`.
pub fn iterate_norm_bound(op: &AnalysisOperator, f0: f64, lambda: f64, q: f64) -> f64 {
    (f0 / lambda).powf(1.0 / q) / op.sigma_min()
}

/// First-order stationarity residual of the unsmoothed penalized problem at
/// `beta`, restricted to directions that keep the detected cosupport at zero.
///
/// Rows with `|D_i beta| <= support_tol * |D beta|_inf` are treated as the
/// cosupport; the gradient of the smooth part over the remaining rows is
/// projected onto `Null(D_cosupport)`.
pub fn stationarity_residual(
    x: &Matrix,
    y: &Vector,
    op: &AnalysisOperator,
    beta: &Vector,
    lambda: f64,
    q: f64,
    support_tol: f64,
) -> Result<f64> {
    let analysis = op.apply(beta);
    let profile = operators::cosparsity_of_analysis(&analysis, support_tol);
    let mut weighted = Vector::zeros(op.n());
    for &i in &profile.support {
        let a = analysis[i];
        weighted[i] = lambda * q * a.abs().powf(q - 1.0) * a.signum();
    }
    let grad = x.transpose() * (x * beta - y) + op.apply_transpose(&weighted);
    let basis = if profile.cosupport.is_empty() {
        Matrix::identity(op.d(), op.d())
    } else {
        numerics::null_space_basis(&op.select_rows(&profile.cosupport), RANK_TOL)?
    };
    Ok((basis.transpose() * grad).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{make_fd_1d, make_identity, make_random_parseval_frame};
    use crate::seeding;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_update(&v(&[2.0]), 0.0, 1.0, 2.0, 1e12)[0], 0.5);
        assert_eq!(eta_update(&v(&[0.0]), 1.0, 0.5, 2.0, 1e12)[0], 1.0);
        let e = eta_update(&v(&[3.0, 4.0]), 0.0, 1.0, 2.0, 1e12);
        assert_relative_eq!(e[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(e[1], 0.25, epsilon = 1e-15);
        // Singular case is absorbed by the cap.
        assert_eq!(eta_update(&v(&[0.0]), 0.0, 0.5, 2.0, 1e12)[0], 1e12);
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_update(&v(&[0.0, 0.0, 5.0]), 2, 0.9, 1.0, 1e-13), 0.0);
        assert_eq!(epsilon_update(&v(&[1.0, 2.0, 3.0]), 2, 0.5, 10.0, 1e-13), 1.0);
        assert_eq!(epsilon_update(&v(&[1.0, 2.0, 3.0]), 2, 0.5, 0.0, 1e-13), 0.0);
        assert_eq!(epsilon_update(&v(&[1e-14, 2.0]), 1, 0.9, 1.0, 1e-13), 0.0);
    }

    #[test]
    fn objective_examples() {
        let op = make_identity(2).unwrap();
        let x = Matrix::identity(2, 2);
        let beta = v(&[3.0, -4.0]);
        assert_eq!(objective_f(&x, &beta, &op, &beta, 0.0, 1.0, 1.0), 7.0);

        let op4 = make_identity(4).unwrap();
        let x4 = Matrix::identity(4, 4);
        let f = objective_f(&x4, &Vector::zeros(4), &op4, &Vector::zeros(4), 0.3, 1.0, 0.5);
        assert_relative_eq!(f, 4.0 * 0.3f64.sqrt(), epsilon = 1e-15);

        let y = v(&[1.0, 1.0]);
        assert_eq!(objective_f(&x, &y, &op, &Vector::zeros(2), 0.5, 0.0, 0.7), 1.0);
    }

    #[test]
    fn beta_update_examples() {
        // X = D = I, eta = 1, q = 1: each coordinate minimizes (b-y)^2/2 + lambda b^2/2.
        let op = make_identity(3).unwrap();
        let y = v(&[1.0, -2.0, 4.0]);
        let lambda = 0.25;
        let b = beta_update(&Matrix::identity(3, 3), &y, &op, &Vector::repeat(3, 1.0), lambda, 1.0).unwrap();
        assert!((b - &y / (1.0 + lambda)).amax() < 1e-14);

        // Zero weights: ordinary least squares.
        let x = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let y = v(&[1.0, 2.0, 3.0]);
        let op2 = make_identity(2).unwrap();
        let b = beta_update(&x, &y, &op2, &Vector::zeros(2), 1.0, 1.0).unwrap();
        let ols = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * &y;
        assert!((b - ols).amax() < 1e-12);

        // Tiny lambda with invertible square X approaches X^-1 y.
        let x = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let y = v(&[1.0, -1.0]);
        let b = beta_update(&x, &y, &op2, &Vector::repeat(2, 1.0), 1e-12, 1.0).unwrap();
        let exact = x.clone().try_inverse().unwrap() * &y;
        assert!((b - exact).amax() < 1e-10);
    }

    #[test]
    fn beta_update_first_order_condition() {
        let op = make_random_parseval_frame(30, 20, 4).unwrap();
        let mut rng = seeding::rng(5);
        let x = crate::instances::make_design_matrix(12, 20, 6).unwrap();
        let y = seeding::gaussian_vector(12, &mut rng);
        let eta = seeding::gaussian_vector(30, &mut rng).map(|g| g.abs() * 1e6 + 1e-3);
        let wls = WeightedLeastSquares::new(&x, &y, &op).unwrap();
        let beta = wls.solve(&eta, 1e-4, 0.7).unwrap();
        let grad = wls.gradient(&beta, &eta, 1e-4, 0.7);
        assert!(grad.norm() <= 1e-6 * wls.xty().norm());
    }

    #[test]
    fn zero_observation_gives_zero() {
        let op = Arc::new(make_fd_1d(8).unwrap());
        let x = crate::instances::make_design_matrix(5, 8, 1).unwrap();
        let res = solve_problem(&x, &Vector::zeros(5), &op, &SolverConfig::new(0.7, 1e-4, 4), None).unwrap();
        assert_eq!(res.beta_hat.amax(), 0.0);
        assert_eq!(res.trace.iterations(), 1);
        assert_eq!(res.trace.termination, Termination::EpsilonZero);
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::new(0.5, 1e-4, 3);
        assert!(ok.validate(5).is_ok());
        for bad in [
            SolverConfig { q: 0.0, ..ok.clone() },
            SolverConfig { q: 1.5, ..ok.clone() },
            SolverConfig { lambda: 0.0, ..ok.clone() },
            SolverConfig { rho_eps: 1.0, ..ok.clone() },
            SolverConfig { max_iters: 0, ..ok.clone() },
            SolverConfig { l_target: 6, ..ok.clone() },
        ] {
            assert!(bad.validate(5).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn trace_csv_header() {
        let op = make_identity(2).unwrap();
        let x = Matrix::identity(2, 2);
        let res = solve_problem(&x, &v(&[1.0, 0.0]), &op, &SolverConfig::new(1.0, 1e-3, 1), None).unwrap();
        let mut buf = Vec::new();
        res.trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,F,epsilon,residual_norm,lq_norm,delta_beta_inf\n0,"));
        assert_eq!(text.lines().count(), res.trace.records.len() + 1);
    }

    #[test]
    fn capped_penalty_matches_where_cap_is_inactive() {
        let a = v(&[0.3, -2.0, 1e-3]);
        for q in [0.3, 0.7, 1.0] {
            assert_relative_eq!(capped_smoothed_lq(&a, 0.1, q, 1e12), smoothed_lq(&a, 0.1, q), max_relative = 1e-14);
        }
    }

    #[test]
    fn capped_penalty_is_a_continuous_upper_bound() {
        let (q, cap) = (0.5f64, 1e6f64);
        // Switch point: u^(q/2 - 1) = cap.
        let u_star = cap.powf(1.0 / (q / 2.0 - 1.0));
        let at = |u: f64| capped_smoothed_lq(&v(&[u.sqrt()]), 0.0, q, cap);
        assert_relative_eq!(at(u_star * (1.0 - 1e-9)), at(u_star * (1.0 + 1e-9)), max_relative = 1e-8);
        for u in [0.0, u_star / 10.0, u_star / 2.0, u_star * 3.0] {
            assert!(at(u) >= u.powf(q / 2.0) - 1e-15);
        }
        // At zero the tangent leaves the smallest admissible variational gap.
        assert_relative_eq!(at(0.0), (1.0 - q / 2.0) * cap.powf(-q / (2.0 - q)), max_relative = 1e-14);
    }
}
