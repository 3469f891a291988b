//! Closed-form recovery conditions, constants and error bounds for
//! lq-analysis minimization.
//!
//! The central quantity is the restricted isometry threshold
//!
//! ```text
//!     b(rho, kappa) = (rho (1 - kappa^4) + kappa^2 sqrt(4 rho + 1)) / (rho (kappa^2 + 1)^2 + kappa^2)
//! ```
//!
//! where `kappa` is the condition number of the analysis operator and `rho`
//! depends on `(q, t)` differently in the noiseless and noisy settings. A
//! sensing matrix whose isometry constant of order `(t^q + 1) k` is below `b`
//! recovers every `k`-analysis-sparse signal; in the noisy setting the
//! constants `c0`, `c1`, `c2` turn that margin into explicit error bounds.
//!
//! All logarithms are natural logarithms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{self, RANK_TOL};
use crate::operators::AnalysisOperator;

/// Relative tolerance (against the largest term) below which a negative
/// discriminant in [`mu_of`] is treated as zero.
pub const MU_DISCRIMINANT_SLACK: f64 = 1e-12;

/// `c0` values above `-C0_SLACK` are treated as the boundary `c0 = 0`.
const C0_SLACK: f64 = 1e-12;

/// Upper limit on the number of enumerated index subsets.
pub const ENUMERATION_BUDGET: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Noiseless,
    Noisy,
}

/// `t^(q-2) / 4` (noiseless) or `4^(1/q - 2) t^(q-2)` (noisy).
pub fn rho_of(q: f64, t: f64, mode: Mode) -> f64 {
    match mode {
        Mode::Noiseless => t.powf(q - 2.0) / 4.0,
        Mode::Noisy => 4f64.powf(1.0 / q - 2.0) * t.powf(q - 2.0),
    }
}

pub fn delta_threshold(rho: f64, kappa: f64) -> f64 {
    let k2 = kappa * kappa;
    (rho * (1.0 - k2 * k2) + k2 * (4.0 * rho + 1.0).sqrt()) / (rho * (k2 + 1.0).powi(2) + k2)
}

/// Largest admissible condition number: `sqrt((2 rho + 1 + sqrt(4 rho + 1)) / (2 rho))`.
pub fn kappa_bound(rho: f64) -> f64 {
    ((2.0 * rho + 1.0 + (4.0 * rho + 1.0).sqrt()) / (2.0 * rho)).sqrt()
}

/// The balancing constant `mu` evaluated at threshold level `b`.
pub fn mu_of(b: f64, rho: f64, kappa: f64) -> Result<f64> {
    let k2 = kappa * kappa;
    let terms = [
        -rho * (b + 1.0).powi(2) * k2 * k2,
        (2.0 * rho + 1.0) * (1.0 - b * b) * k2,
        -rho * (1.0 - b).powi(2),
    ];
    let mut disc: f64 = terms.iter().sum();
    if disc < 0.0 {
        let scale = terms.iter().fold(1.0f64, |acc, t| acc.max(t.abs()));
        if disc < -MU_DISCRIMINANT_SLACK * scale {
            return Err(Error::InfeasibleRegime(format!(
                "mu discriminant is {disc:e} for b={b}, rho={rho}, kappa={kappa}"
            )));
        }
        disc = 0.0;
    }
    let denom = 2.0 * (rho + 1.0) * (b + 1.0) * k2 + 2.0 * rho * (b - 1.0);
    if !(denom > 0.0) {
        return Err(Error::InfeasibleRegime(format!(
            "mu denominator is {denom:e} for b={b}, rho={rho}, kappa={kappa}"
        )));
    }
    Ok(((b + 1.0) * k2 + disc.sqrt()) / denom)
}

/// Stability constants of the noisy error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// The leading coefficient `c0` alone; negative exactly when `delta` is below
/// the threshold that `mu` was computed for.
pub fn c0_of(delta: f64, rho: f64, kappa: f64, mu: f64) -> f64 {
    let k2 = kappa * kappa;
    (0.5 - mu).powi(2) * (1.0 + delta) * k2 - 0.25 * (1.0 - delta)
        + rho * mu * mu * (k2 * (1.0 + delta) - (1.0 - delta))
}

pub fn constants_c(delta: f64, rho: f64, kappa: f64, mu: f64, sigma_max_d: f64) -> Result<Constants> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!("delta must lie in [0, 1), got {delta}")));
    }
    let c0 = c0_of(delta, rho, kappa, mu);
    if c0 > -C0_SLACK {
        return Err(Error::ConditionViolated(format!(
            "c0 = {c0:e} is not negative (delta = {delta} is not below the threshold)"
        )));
    }
    let k2 = kappa * kappa;
    let p = rho * mu * mu * (k2 * (1.0 + delta) - (1.0 - delta));
    let c1 = 2.0 * kappa * (mu - mu * mu) * (1.0 + delta).sqrt() * sigma_max_d / -c0;
    let c2 = (2.0 * p + (-c0 * p).max(0.0).sqrt()) / -c0;
    Ok(Constants { c0, c1, c2 })
}

/// Inputs of a threshold evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdQuery {
    pub q: f64,
    pub t: f64,
    pub kappa: f64,
    /// Sparsity of the analysis vector.
    pub k: usize,
    pub mode: Mode,
}

impl ThresholdQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidInput(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidInput(format!("t must be positive, got {}", self.t)));
        }
        if !(self.kappa >= 1.0) {
            return Err(Error::InvalidInput(format!("kappa must be >= 1, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Everything the recovery theorems say about one `(q, t, kappa, k)` setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub query: ThresholdQuery,
    pub rho: f64,
    /// Threshold `b` on the isometry constant.
    pub delta_threshold: f64,
    pub kappa_bound: f64,
    /// `None` when the setting is infeasible.
    pub mu: Option<f64>,
    /// Isometry constant the constants were evaluated at, if one was supplied.
    pub delta: Option<f64>,
    /// `None` unless a `delta` below the threshold was supplied.
    pub constants: Option<Constants>,
    /// `(t^q + 1) k`.
    pub rip_order: f64,
    /// `k + ceil(t^q k)`: the integral order used when `t^q k` is fractional.
    pub rip_order_ceil: usize,
    /// `kappa` below its bound and a positive threshold.
    pub feasible: bool,
}

impl TheoryReport {
    pub fn new(query: ThresholdQuery, delta: Option<f64>, sigma_max_d: f64) -> Result<Self> {
        query.validate()?;
        let rho = rho_of(query.q, query.t, query.mode);
        let b = delta_threshold(rho, query.kappa);
        let kb = kappa_bound(rho);
        let feasible = query.kappa < kb && b > 0.0;
        let mu = if feasible { Some(mu_of(b, rho, query.kappa)?) } else { None };
        let constants = match (mu, delta) {
            (Some(mu), Some(delta)) if delta < b => {
                Some(constants_c(delta, rho, query.kappa, mu, sigma_max_d)?)
            }
            _ => None,
        };
        let tq_k = query.t.powf(query.q) * query.k as f64;
        Ok(TheoryReport {
            query,
            rho,
            delta_threshold: b,
            kappa_bound: kb,
            mu,
            delta,
            constants,
            rip_order: tq_k + query.k as f64,
            rip_order_ceil: query.k + ceil_snapped(tq_k),
            feasible,
        })
    }
}

// ceil that ignores rounding noise just above an integer.
fn ceil_snapped(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

// floor that ignores rounding noise just below an integer.
fn floor_snapped(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// Bounds on the estimation error of the lq-analysis minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBounds {
    /// Bound on `|D beta_hat - D beta*|_q^q`.
    pub lq_bound: f64,
    /// Bound on `|beta_hat - beta*|_2`.
    pub l2_bound: f64,
    /// The `epsilon` part of `l2_bound`.
    pub l2_noise_term: f64,
    /// The `sigma_k` part of `l2_bound`.
    pub l2_compressibility_term: f64,
}

/// `sigma_k` is the best `k`-term approximation error `sigma_k(D beta*)_q`.
pub fn error_bounds(
    report: &TheoryReport,
    epsilon: f64,
    k: usize,
    q: f64,
    sigma_k: f64,
    sigma_min_d: f64,
) -> Result<ErrorBounds> {
    let Some(Constants { c1, c2, .. }) = report.constants.filter(|_| report.feasible) else {
        return Err(Error::ConditionViolated(
            "theory report is infeasible or lacks an isometry constant below the threshold".into(),
        ));
    };
    if !(epsilon >= 0.0) || !(sigma_k >= 0.0) || k == 0 || !(sigma_min_d > 0.0) {
        return Err(Error::InvalidInput(
            "need epsilon, sigma_k >= 0, k >= 1 and sigma_min(D) > 0".into(),
        ));
    }
    let kf = k as f64;
    let lq_bound = 2.0 * c1.powf(q) * kf.powf(1.0 - q / 2.0) * epsilon.powf(q)
        + 2.0 * (2.0 * c2.powf(q) + 1.0) * sigma_k.powf(q);
    let l2_noise_term = 2.0 * c1 / sigma_min_d * epsilon;
    let l2_compressibility_term =
        2f64.powf(1.0 / q) * (2.0 * c2 + 1.0) / sigma_min_d * sigma_k / kf.powf(1.0 / q - 0.5);
    Ok(ErrorBounds {
        lq_bound,
        l2_bound: l2_noise_term + l2_compressibility_term,
        l2_noise_term,
        l2_compressibility_term,
    })
}

/// `sigma_k(a)_q`: the lq quasi-norm of all but the `k` largest-magnitude entries.
pub fn best_k_term_error(analysis: &[f64], k: usize, q: f64) -> f64 {
    let mut mags: Vec<f64> = analysis.iter().map(|a| a.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags.iter().skip(k).map(|a| a.powf(q)).sum::<f64>().powf(1.0 / q)
}

/// High-probability bound on `|w|_2` for `w ~ N(0, sigma^2 I_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseBound {
    pub bound: f64,
    /// `1 - 1/m`.
    pub probability: f64,
}

pub fn gaussian_noise_bound(m: usize, sigma: f64) -> Result<NoiseBound> {
    if m == 0 || !(sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("need m >= 1 and sigma >= 0, got m={m}, sigma={sigma}")));
    }
    let mf = m as f64;
    Ok(NoiseBound {
        bound: sigma * (mf + 2.0 * (mf * mf.ln()).sqrt()).sqrt(),
        probability: 1.0 - 1.0 / mf,
    })
}

/// `1 / (2 ln(2C + 3))`, the constant of the instance-optimality sample bound.
pub fn instance_optimality_constant(c: f64) -> f64 {
    1.0 / (2.0 * (2.0 * c + 3.0).ln())
}

/// `1 / (2 ln(8 c2^q + 7))`.
pub fn sample_constant(q: f64, c2: f64) -> f64 {
    instance_optimality_constant(4.0 * c2.powf(q) + 2.0)
}

/// `C2 q k ln(n / 4k)` with `C2 = 1 / (2 ln(8 c2^q + 7))`.
pub fn sample_lower_bound(q: f64, k: usize, n: usize, c2: f64) -> Result<f64> {
    if n <= 4 * k {
        return Err(Error::UndefinedRegime(format!("need n > 4k, got n={n}, k={k}")));
    }
    if !(c2 > 0.0) || !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidInput(format!("need c2 > 0 and q in (0, 1], got c2={c2}, q={q}")));
    }
    Ok(sample_constant(q, c2) * q * k as f64 * (n as f64 / (4.0 * k as f64)).ln())
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    // Saturates instead of overflowing; callers only compare against a budget.
    let mut acc = 1u128;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i + 1) as u128,
            None => return u128::MAX,
        }
    }
    acc
}

pub(crate) fn check_budget(n: usize, k: usize) -> Result<()> {
    let count = binomial(n, k);
    if count > ENUMERATION_BUDGET {
        return Err(Error::TooLarge {
            count,
            budget: ENUMERATION_BUDGET,
        });
    }
    Ok(())
}

/// Lexicographic enumeration of all `k`-subsets of `0..n`.
pub struct Subsets {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Subsets {
    pub fn new(n: usize, k: usize) -> Self {
        Subsets {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().expect("checked above");
        let k = cur.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if cur[i] < self.n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Minimal sample count for uniqueness of `l`-cosparse solutions:
/// twice the largest null-space dimension over cosupports of size `l`.
pub fn cosparse_sample_floor(op: &AnalysisOperator, l: usize) -> Result<usize> {
    let n = op.n();
    if l == 0 || l > n {
        return Err(Error::InvalidInput(format!("l must lie in 1..={n}, got {l}")));
    }
    check_budget(n, l)?;
    let mut best = 0;
    for rows in Subsets::new(n, l) {
        let rank = numerics::singular_values(&op.select_rows(&rows))?.rank;
        best = best.max(op.d() - rank);
        if best == op.d() {
            break;
        }
    }
    let _ = RANK_TOL;
    Ok(2 * best)
}

/// Largest analysis sparsity recoverable with exponent `q`, given the convex
/// level `s1` and multiplier `t`: `floor((t + 1) / (t^(q/(2-q)) + 1) * s1)`.
pub fn sq_from_s1(t: f64, q: f64, s1: u64) -> Result<u64> {
    if !(t >= 1.0) || !(q > 0.0 && q <= 1.0) || s1 == 0 {
        return Err(Error::InvalidInput(format!(
            "need t >= 1, q in (0, 1], s1 >= 1; got t={t}, q={q}, s1={s1}"
        )));
    }
    let value = (t + 1.0) * s1 as f64 / (t.powf(q / (2.0 - q)) + 1.0);
    Ok(floor_snapped(value))
}

/// Error guarantee of the reweighted solver for `l`-cosparse targets:
/// `(sqrt(2 F0) + epsilon) / sqrt(1 - delta)`, where `F0` is the smoothed
/// objective at the solver's initialization and `delta` the isometry constant
/// over cosupports of size at least `2l - n`.
pub fn coirlq_guarantee(delta: f64, epsilon: f64, f0: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidInput(format!("delta must be >= 0, got {delta}")));
    }
    if delta >= 1.0 {
        return Err(Error::ConditionViolated(format!("delta = {delta} is not below 1")));
    }
    if !(epsilon >= 0.0) || !(f0 >= 0.0) {
        return Err(Error::InvalidInput("epsilon and F0 must be non-negative".into()));
    }
    Ok(((2.0 * f0).sqrt() + epsilon) / (1.0 - delta).sqrt())
}

/// One row of the threshold table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub q: f64,
    pub t: f64,
    pub kappa: f64,
    pub rho: f64,
    /// `t^q + 1`: the isometry order as a multiple of `k`.
    pub order_multiplier: f64,
    pub threshold: f64,
}

pub fn threshold_row(q: f64, t: f64, kappa: f64, mode: Mode) -> ThresholdRow {
    let rho = rho_of(q, t, mode);
    ThresholdRow {
        q,
        t,
        kappa,
        rho,
        order_multiplier: t.powf(q) + 1.0,
        threshold: delta_threshold(rho, kappa),
    }
}

/// The `(q, t, kappa)` settings of the classical sufficient-condition table.
pub const TABLE_SETTINGS: [(f64, f64, f64); 6] = [
    (1.0, 1.0, 1.0),
    (0.5, 1.0, 1.0),
    (1.0, 2.0, 1.0),
    (0.5, 4.0, 1.0),
    (1.0, 6.0, 1.0),
    (0.5, 36.0, 1.0),
];

pub fn threshold_table() -> Vec<ThresholdRow> {
    TABLE_SETTINGS
        .iter()
        .map(|&(q, t, kappa)| threshold_row(q, t, kappa, Mode::Noiseless))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{make_fd_1d, make_identity, make_random_parseval_frame};

    const EXPECTED_TABLE: [f64; 6] = [
        std::f64::consts::FRAC_1_SQRT_2,
        std::f64::consts::FRAC_1_SQRT_2,
        0.816_496_580_927_726, // sqrt(2/3)
        0.942_809_041_582_063_4, // sqrt(8/9)
        0.925_820_099_772_551_4, // sqrt(6/7)
        0.997_693_191_852_647_9, // sqrt(216/217)
    ];

    #[test]
    fn table_rows() {
        let exact = [
            0.5f64.sqrt(),
            0.5f64.sqrt(),
            (2.0f64 / 3.0).sqrt(),
            (8.0f64 / 9.0).sqrt(),
            (6.0f64 / 7.0).sqrt(),
            (216.0f64 / 217.0).sqrt(),
        ];
        for ((row, e), lit) in threshold_table().iter().zip(exact).zip(EXPECTED_TABLE) {
            assert!((row.threshold - e).abs() < 1e-12, "{row:?}");
            assert!((e - lit).abs() < 1e-15);
        }
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_of(1.0, 2.0, Mode::Noiseless), 0.125);
        for t in [0.5, 1.0, 3.0, 7.5] {
            assert!((rho_of(1.0, t, Mode::Noisy) - rho_of(1.0, t, Mode::Noiseless)).abs() < 1e-15);
        }
        assert!((rho_of(0.5, 36.0, Mode::Noiseless) - 1.0 / 864.0).abs() < 1e-15);
    }

    #[test]
    fn kappa_bound_examples() {
        assert!((kappa_bound(0.25) - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((kappa_bound(2.0) - 2f64.sqrt()).abs() < 1e-12);
        let grid: Vec<f64> = (0..60).map(|i| kappa_bound(10f64.powf(-3.0 + 0.15 * i as f64))).collect();
        assert!(grid.windows(2).all(|w| w[1] < w[0]));
        assert!(grid.iter().all(|&k| k > 1.0));
        assert!(kappa_bound(1e9) - 1.0 < 1e-4);
    }

    #[test]
    fn mu_at_parseval_quarter() {
        let b = 0.5f64.sqrt();
        let mu = mu_of(b, 0.25, 1.0).unwrap();
        // With kappa = 1 the formula collapses to b / (b + 1).
        assert!((mu - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(c0_of(b, 0.25, 1.0, mu).abs() < 1e-10);
    }

    #[test]
    fn mu_at_zero_level() {
        // b = 0, kappa = 1: discriminant 1, mu = 2 / 2 = 1, and c0 sits at 0.
        let mu = mu_of(0.0, 0.3, 1.0).unwrap();
        assert!((mu - 1.0).abs() < 1e-15);
        assert!(c0_of(0.0, 0.3, 1.0, mu).abs() < 1e-15);
    }

    #[test]
    fn mu_rejects_negative_discriminant() {
        // Far above threshold the discriminant goes negative.
        assert!(matches!(mu_of(0.99, 1.0, 1.0), Err(Error::InfeasibleRegime(_))));
    }

    #[test]
    fn constants_signs_and_boundary() {
        let rho = 0.25;
        let b = delta_threshold(rho, 1.0);
        let mu = mu_of(b, rho, 1.0).unwrap();
        let c = constants_c(0.3, rho, 1.0, mu, 1.0).unwrap();
        assert!(c.c0 < 0.0 && c.c1 > 0.0 && c.c2 > 0.0);
        assert!(matches!(constants_c(b, rho, 1.0, mu, 1.0), Err(Error::ConditionViolated(_))));
        // delta = 0, kappa = 1: c0 = (1/2 - mu)^2 - 1/4.
        let c = constants_c(0.0, rho, 1.0, mu, 1.0).unwrap();
        assert!((c.c0 - ((0.5 - mu).powi(2) - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn report_and_error_bounds() {
        let query = ThresholdQuery { q: 1.0, t: 1.0, kappa: 1.0, k: 2, mode: Mode::Noisy };
        let report = TheoryReport::new(query, Some(0.2), 1.0).unwrap();
        assert!(report.feasible);
        assert_eq!(report.rip_order, 4.0);
        let zero = error_bounds(&report, 0.0, 2, 1.0, 0.0, 1.0).unwrap();
        assert_eq!((zero.lq_bound, zero.l2_bound), (0.0, 0.0));
        let a = error_bounds(&report, 0.1, 2, 1.0, 0.05, 1.0).unwrap();
        let b = error_bounds(&report, 0.2, 2, 1.0, 0.05, 1.0).unwrap();
        assert!((b.l2_noise_term - 2.0 * a.l2_noise_term).abs() < 1e-15);
        assert_eq!(a.l2_compressibility_term, b.l2_compressibility_term);

        let above = TheoryReport::new(query, Some(0.9), 1.0).unwrap();
        assert!(above.constants.is_none());
        assert!(matches!(
            error_bounds(&above, 0.1, 2, 1.0, 0.0, 1.0),
            Err(Error::ConditionViolated(_))
        ));
    }

    #[test]
    fn fractional_rip_order_rounds_up() {
        let query = ThresholdQuery { q: 0.5, t: 2.0, kappa: 1.0, k: 3, mode: Mode::Noiseless };
        let r = TheoryReport::new(query, None, 1.0).unwrap();
        // t^q k = 3 sqrt 2 = 4.24...
        assert_eq!(r.rip_order_ceil, 8);
        let query = ThresholdQuery { q: 0.5, t: 4.0, kappa: 1.0, k: 3, mode: Mode::Noiseless };
        assert_eq!(TheoryReport::new(query, None, 1.0).unwrap().rip_order_ceil, 9);
    }

    #[test]
    fn noise_bound_examples() {
        assert_eq!(gaussian_noise_bound(1, 0.3).unwrap().bound, 0.3);
        assert_eq!(gaussian_noise_bound(50, 0.0).unwrap().bound, 0.0);
        let nb = gaussian_noise_bound(100, 0.01).unwrap();
        assert!((nb.bound - 0.119_55).abs() < 1e-4, "{}", nb.bound);
        assert_eq!(nb.probability, 0.99);
    }

    #[test]
    fn sample_bounds() {
        assert!((instance_optimality_constant(1.0) - 1.0 / (2.0 * 5f64.ln())).abs() < 1e-15);
        let a = sample_lower_bound(0.5, 3, 100, 2.0).unwrap();
        let c = sample_constant(0.5, 2.0);
        assert!((a - c * 0.5 * 3.0 * (100.0f64 / 12.0).ln()).abs() < 1e-12);
        assert!(matches!(sample_lower_bound(1.0, 5, 20, 1.0), Err(Error::UndefinedRegime(_))));
        // Linear in q once C2 is held fixed through c2 = 1 (c2^q = 1).
        let b1 = sample_lower_bound(0.4, 3, 100, 1.0).unwrap();
        let b2 = sample_lower_bound(0.8, 3, 100, 1.0).unwrap();
        assert!((b2 - 2.0 * b1).abs() < 1e-12);
    }

    #[test]
    fn cosparse_floor_examples() {
        let op = make_identity(5).unwrap();
        for l in 1..=5 {
            assert_eq!(cosparse_sample_floor(&op, l).unwrap(), 2 * (5 - l));
        }
        assert_eq!(cosparse_sample_floor(&make_fd_1d(4).unwrap(), 2).unwrap(), 4);
        let op = make_random_parseval_frame(6, 4, 2).unwrap();
        assert_eq!(cosparse_sample_floor(&op, 3).unwrap(), 2);
        let big = make_random_parseval_frame(40, 10, 2).unwrap();
        assert!(matches!(cosparse_sample_floor(&big, 20), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn sq_examples() {
        for s1 in 1..=30u64 {
            assert_eq!(sq_from_s1(4.0, 2.0 / 3.0, s1).unwrap(), 5 * s1 / 3);
            assert_eq!(sq_from_s1(3.7, 1.0, s1).unwrap(), s1);
            assert_eq!(sq_from_s1(1.0, 0.3, s1).unwrap(), s1);
        }
    }

    #[test]
    fn guarantee_examples() {
        assert!((coirlq_guarantee(0.0, 0.0, 0.125).unwrap() - 0.5).abs() < 1e-15);
        assert!((coirlq_guarantee(0.75, 0.1, 0.0).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(coirlq_guarantee(1.0, 0.1, 0.0), Err(Error::ConditionViolated(_))));
    }

    #[test]
    fn subsets_enumeration() {
        let all: Vec<Vec<usize>> = Subsets::new(4, 2).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(Subsets::new(3, 0).count(), 1);
        assert_eq!(Subsets::new(2, 3).count(), 0);
        assert!(binomial(144, 99) > ENUMERATION_BUDGET);
        assert_eq!(binomial(12, 6), 924);
    }

    #[test]
    fn best_k_term() {
        let a = [3.0, -1.0, 0.5, 2.0];
        assert_eq!(best_k_term_error(&a, 2, 1.0), 1.5);
        assert_eq!(best_k_term_error(&a, 4, 0.5), 0.0);
    }
}
