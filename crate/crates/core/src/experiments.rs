//! Experiment harness: phase transitions over sample count or cosparsity,
//! single-instance demos, and phantom reconstruction from radial Fourier
//! samples. Every run is a pure function of its parameters and base seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{self, PhantomTask, ProblemInstance};
use crate::numerics::Vector;
use crate::operators::{self, AnalysisOperator};
use crate::seeding;
use crate::solver::{self, RecoveryResult, SolverConfig};

/// Log-spaced penalty grid `10^-5 .. 10^0` used when tuning against the ground truth.
pub fn lambda_grid() -> Vec<f64> {
    (0..11).map(|i| 10f64.powf(-5.0 + 0.5 * i as f64)).collect()
}

/// Default exponents of the phase-transition study.
pub const DEFAULT_Q_VALUES: [f64; 6] = [0.1, 0.3, 0.5, 0.7, 0.8, 1.0];

const OPERATOR_STREAM: u64 = 0x0f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SampleCount,
    Cosparsity,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::SampleCount => "m",
            SweepAxis::Cosparsity => "l",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed(f64),
    /// Pick, per trial, the grid value with the smallest error against the
    /// ground truth. This is oracle tuning.
    GridSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub axis: SweepAxis,
    pub axis_values: Vec<usize>,
    pub q_values: Vec<f64>,
    pub reps: usize,
    /// Sample count, used when the axis is cosparsity.
    pub m: usize,
    /// Cosparsity, used when the axis is sample count.
    pub l: usize,
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub lambda: LambdaPolicy,
    pub base_seed: u64,
}

impl PhaseGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.axis_values.is_empty() || self.axis_values.windows(2).any(|w| w[1] <= w[0]) {
            return bad("axis values must be non-empty and strictly increasing");
        }
        if self.q_values.is_empty() || self.q_values.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return bad("every q must lie in (0, 1]");
        }
        if self.d == 0 || self.n < self.d {
            return bad("need n >= d >= 1");
        }
        if !(self.sigma >= 0.0) {
            return bad("sigma must be non-negative");
        }
        if let LambdaPolicy::Fixed(l) = self.lambda {
            if !(l > 0.0) {
                return bad("lambda must be positive");
            }
        }
        Ok(())
    }

    fn sizes(&self, axis_value: usize) -> (usize, usize) {
        match self.axis {
            SweepAxis::SampleCount => (axis_value, self.l),
            SweepAxis::Cosparsity => (self.m, axis_value),
        }
    }
}

/// Aggregate over the repetitions of one `(axis_value, q)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub axis_value: usize,
    pub q: f64,
    pub successes: usize,
    /// Trials that ran; infeasible draws are excluded.
    pub reps: usize,
    pub skipped: usize,
    pub mean_relative_error: f64,
    pub mean_iterations: f64,
}

impl PhaseCell {
    pub fn success_rate(&self) -> f64 {
        if self.reps == 0 {
            0.0
        } else {
            self.successes as f64 / self.reps as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseResult {
    pub axis: SweepAxis,
    /// Ordered by axis value, then by the order of `q_values`.
    pub cells: Vec<PhaseCell>,
}

impl PhaseResult {
    pub fn cell(&self, axis_value: usize, q: f64) -> Option<&PhaseCell> {
        self.cells.iter().find(|c| c.axis_value == axis_value && c.q == q)
    }

    /// Smallest axis value whose success rate reaches `rate` for this `q`.
    pub fn first_reaching(&self, q: f64, rate: f64) -> Option<usize> {
        self.cells
            .iter()
            .filter(|c| c.q == q && c.reps > 0 && c.success_rate() >= rate)
            .map(|c| c.axis_value)
            .min()
    }

    pub fn q_values(&self) -> Vec<f64> {
        let mut qs: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !qs.contains(&c.q) {
                qs.push(c.q);
            }
        }
        qs
    }

    /// Columns `axis_value,q,success_rate,mean_rel_err,mean_iters`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis_value,q,success_rate,mean_rel_err,mean_iters\n");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{:?},{:?},{:?},{:?}",
                c.axis_value,
                c.q,
                c.success_rate(),
                c.mean_relative_error,
                c.mean_iterations
            );
        }
        s
    }
}

struct Trial {
    success: bool,
    relative_error: f64,
    iterations: usize,
}

/// Solves with the given policy; grid search keeps the lowest-error run.
pub fn solve_with_policy(
    instance: &ProblemInstance,
    q: f64,
    policy: LambdaPolicy,
) -> Result<(f64, RecoveryResult)> {
    let lambdas = match policy {
        LambdaPolicy::Fixed(l) => vec![l],
        LambdaPolicy::GridSearch => lambda_grid(),
    };
    let mut best: Option<(f64, RecoveryResult)> = None;
    for lambda in lambdas {
        let result = solver::solve(instance, &SolverConfig::new(q, lambda, instance.l_target))?;
        let err = result.relative_error.unwrap_or(f64::INFINITY);
        if best.as_ref().is_none_or(|(_, b)| err < b.relative_error.unwrap_or(f64::INFINITY)) {
            best = Some((lambda, result));
        }
    }
    Ok(best.expect("at least one lambda"))
}

/// Random Parseval operator shared by every trial of a grid.
pub fn grid_operator(grid: &PhaseGrid) -> Result<AnalysisOperator> {
    operators::make_random_parseval_frame(grid.n, grid.d, seeding::derive(grid.base_seed, OPERATOR_STREAM))
}

/// Runs every cell of the grid. All `q` values of a repetition share one
/// instance, so the comparison between exponents is paired.
pub fn run_phase_transition(grid: &PhaseGrid) -> Result<PhaseResult> {
    grid.validate()?;
    let op = Arc::new(grid_operator(grid)?);
    let mut cells = Vec::with_capacity(grid.axis_values.len() * grid.q_values.len());
    for &value in &grid.axis_values {
        let (m, l) = grid.sizes(value);
        let trials: Vec<Option<Vec<Trial>>> = (0..grid.reps)
            .into_par_iter()
            .map(|rep| -> Result<Option<Vec<Trial>>> {
                let seed = seeding::trial_seed(grid.base_seed, &[value as u64, rep as u64]);
                let instance = match ProblemInstance::generate(op.clone(), m, l, grid.sigma, seed) {
                    Ok(i) => i,
                    Err(e) if e.is_infeasible() => return Ok(None),
                    Err(e) => return Err(e),
                };
                grid.q_values
                    .iter()
                    .map(|&q| {
                        let (_, r) = solve_with_policy(&instance, q, grid.lambda)?;
                        Ok(Trial {
                            success: r.success,
                            relative_error: r.relative_error.unwrap_or(f64::NAN),
                            iterations: r.trace.iterations(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            })
            .collect::<Result<_>>()?;
        let skipped = trials.iter().filter(|t| t.is_none()).count();
        for (qi, &q) in grid.q_values.iter().enumerate() {
            let runs: Vec<&Trial> = trials.iter().flatten().map(|t| &t[qi]).collect();
            let reps = runs.len();
            let mean = |f: &dyn Fn(&Trial) -> f64| {
                if reps == 0 {
                    f64::NAN
                } else {
                    runs.iter().map(|t| f(t)).sum::<f64>() / reps as f64
                }
            };
            cells.push(PhaseCell {
                axis_value: value,
                q,
                successes: runs.iter().filter(|t| t.success).count(),
                reps,
                skipped,
                mean_relative_error: mean(&|t| t.relative_error),
                mean_iterations: mean(&|t| t.iterations as f64),
            });
        }
    }
    Ok(PhaseResult {
        axis: grid.axis,
        cells,
    })
}

/// One solved synthetic instance.
#[derive(Debug, Clone)]
pub struct DemoReport {
    pub instance: ProblemInstance,
    pub lambda: f64,
    pub result: RecoveryResult,
}

impl DemoReport {
    /// `index,true,estimate` rows for stem plots.
    pub fn stem_csv(&self) -> String {
        let mut s = String::from("index,true,estimate\n");
        for (i, (t, e)) in self.instance.beta_star.iter().zip(self.result.beta_hat.iter()).enumerate() {
            let _ = writeln!(s, "{i},{t:?},{e:?}");
        }
        s
    }

    pub fn trace_csv(&self) -> String {
        let mut buf = Vec::new();
        self.result.trace.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trace.csv"), self.trace_csv())?;
        fs::write(dir.join("stem.csv"), self.stem_csv())?;
        self.instance.save(&dir.join("instance"))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoParams {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub l: usize,
    pub q: f64,
    pub sigma: f64,
    pub lambda: LambdaPolicy,
    pub seed: u64,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams {
            m: 80,
            n: 144,
            d: 120,
            l: 99,
            q: 0.7,
            sigma: 0.0,
            lambda: LambdaPolicy::Fixed(1e-4),
            seed: 0,
        }
    }
}

pub fn run_recovery_demo(p: &DemoParams) -> Result<DemoReport> {
    let op = operators::make_random_parseval_frame(p.n, p.d, seeding::derive(p.seed, OPERATOR_STREAM))?;
    let instance = ProblemInstance::generate(Arc::new(op), p.m, p.l, p.sigma, p.seed)?;
    let (lambda, result) = solve_with_policy(&instance, p.q, p.lambda)?;
    Ok(DemoReport {
        instance,
        lambda,
        result,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomParams {
    pub size: usize,
    pub lines: usize,
    pub q: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct PhantomReport {
    pub params: PhantomParams,
    pub measurements: usize,
    pub l_target: usize,
    pub relative_error: f64,
    /// `20 log10(|beta*| / |beta_hat - beta*|)` in dB.
    pub snr_db: f64,
    pub iterations: usize,
    pub reconstruction: Vector,
}

impl PhantomReport {
    pub fn exact(&self) -> bool {
        self.relative_error <= PHANTOM_EXACT_TOL
    }

    /// Writes `reconstruction.pgm` and `reconstruction.csv`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let s = self.params.size;
        let img = instances::unvectorize(&self.reconstruction, s, s);
        fs::write(dir.join("reconstruction.pgm"), to_pgm(&img))?;
        crate::io::write_matrix_csv(&dir.join("reconstruction.csv"), &img)?;
        Ok(())
    }
}

/// Relative error at or below which a phantom reconstruction counts as exact.
pub const PHANTOM_EXACT_TOL: f64 = 1e-3;

/// Plain (ASCII) PGM, gray values clamped from `[0, 1]` to `0..=255`.
pub fn to_pgm(img: &crate::numerics::Matrix) -> String {
    let mut s = format!("P2\n{} {}\n255\n", img.ncols(), img.nrows());
    for r in 0..img.nrows() {
        let row: Vec<String> = (0..img.ncols())
            .map(|c| ((img[(r, c)].clamp(0.0, 1.0) * 255.0).round() as u8).to_string())
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn snr_db(estimate: &Vector, truth: &Vector) -> f64 {
    let err = (estimate - truth).norm();
    20.0 * (truth.norm() / err).log10()
}

pub fn run_phantom(p: &PhantomParams) -> Result<PhantomReport> {
    if !matches!(p.size, 16 | 32) {
        return Err(Error::InvalidInput(format!("phantom size must be 16 or 32, got {}", p.size)));
    }
    if p.lines < 2 {
        return Err(Error::InvalidInput("need at least 2 radial lines".into()));
    }
    let op = Arc::new(operators::make_fd_2d(p.size, p.size)?);
    run_phantom_with(op, p)
}

/// As [`run_phantom`], reusing an already built difference operator.
pub fn run_phantom_with(op: Arc<AnalysisOperator>, p: &PhantomParams) -> Result<PhantomReport> {
    let task = PhantomTask::new(op, p.size, p.size, p.lines, p.sigma, p.seed)?;
    let inst = &task.instance;
    let result = solver::solve(inst, &SolverConfig::new(p.q, p.lambda, inst.l_target))?;
    Ok(PhantomReport {
        params: *p,
        measurements: inst.m(),
        l_target: inst.l_target,
        relative_error: result.relative_error.unwrap_or(f64::NAN),
        snr_db: snr_db(&result.beta_hat, &inst.beta_star),
        iterations: result.trace.iterations(),
        reconstruction: result.beta_hat,
    })
}

/// Smallest line count in `lo..=hi` giving an exact noiseless reconstruction,
/// found by bisection (exactness is assumed monotone in the line count).
pub fn minimal_exact_lines(
    op: Arc<AnalysisOperator>,
    base: &PhantomParams,
    lo: usize,
    hi: usize,
) -> Result<Option<usize>> {
    let exact = |lines: usize| -> Result<bool> {
        let p = PhantomParams { lines, sigma: 0.0, ..*base };
        Ok(run_phantom_with(op.clone(), &p)?.exact())
    };
    if lo > hi || !exact(hi)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (lo, hi);
    // Invariant: `hi` is exact; everything below `lo` is not known to be.
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if exact(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(Some(hi))
}

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Success rate against the swept axis, one polyline per `q`.
pub fn render_svg(result: &PhaseResult) -> Result<String> {
    if result.cells.is_empty() {
        return Err(Error::InvalidInput("phase result has no cells".into()));
    }
    let xs: Vec<usize> = result.cells.iter().map(|c| c.axis_value).collect();
    let (xmin, xmax) = (*xs.iter().min().unwrap() as f64, *xs.iter().max().unwrap() as f64);
    let span = if xmax > xmin { xmax - xmin } else { 1.0 };
    let px = |v: usize| {
        if xmax > xmin {
            MARGIN + (v as f64 - xmin) / span * (PLOT_W - 2.0 * MARGIN)
        } else {
            PLOT_W / 2.0
        }
    };
    let py = |rate: f64| PLOT_H - MARGIN - rate * (PLOT_H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, PLOT_W - MARGIN, py(0.0), py(1.0));
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{tick:.1}</text>"#,
            x0 - 6.0,
            py(tick) + 4.0
        );
    }
    let mut ticks: Vec<usize> = xs.clone();
    ticks.sort_unstable();
    ticks.dedup();
    for v in &ticks {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-size="11" text-anchor="middle">{v}</text>"#,
            px(*v),
            y0 + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        PLOT_W / 2.0,
        PLOT_H - 10.0,
        result.axis.label()
    );
    for (i, q) in result.q_values().into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<(f64, f64)> = result
            .cells
            .iter()
            .filter(|c| c.q == q)
            .map(|c| (px(c.axis_value), py(c.success_rate())))
            .collect();
        if points.len() > 1 {
            let path: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                path.join(" ")
            );
        }
        for (x, y) in &points {
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">q={q}</text>"#,
            x1 + 4.0,
            MARGIN + 14.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes the SVG to `path` and the backing CSV next to it; returns the CSV path.
pub fn emit_plot(result: &PhaseResult, path: &Path) -> Result<PathBuf> {
    let svg = render_svg(result)?;
    fs::write(path, svg)?;
    let csv_path = path.with_extension("csv");
    fs::write(&csv_path, result.to_csv())?;
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> PhaseGrid {
        PhaseGrid {
            axis: SweepAxis::SampleCount,
            axis_values: vec![10, 12],
            q_values: vec![0.7, 1.0],
            reps: 3,
            m: 0,
            l: 8,
            n: 12,
            d: 10,
            sigma: 0.0,
            lambda: LambdaPolicy::Fixed(1e-6),
            base_seed: 5,
        }
    }

    #[test]
    fn lambda_grid_endpoints() {
        let g = lambda_grid();
        assert_eq!(g.len(), 11);
        assert!((g[0] - 1e-5).abs() < 1e-20 && (g[10] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        let mut g = small_grid();
        assert!(g.validate().is_ok());
        g.axis_values = vec![12, 10];
        assert!(g.validate().is_err());
        let mut g = small_grid();
        g.q_values = vec![1.5];
        assert!(g.validate().is_err());
    }

    #[test]
    fn square_design_always_succeeds() {
        // m = d: the measurements determine beta; the penalty only adds a bias
        // of order lambda / sigma_min(X)^2, negligible at this lambda.
        let mut g = small_grid();
        g.axis_values = vec![10];
        g.lambda = LambdaPolicy::Fixed(1e-10);
        let r = run_phase_transition(&g).unwrap();
        for c in &r.cells {
            assert_eq!(c.successes, c.reps, "{c:?}");
        }
    }

    #[test]
    fn phase_is_deterministic_and_csv_shaped() {
        let a = run_phase_transition(&small_grid()).unwrap();
        let b = run_phase_transition(&small_grid()).unwrap();
        assert_eq!(a, b);
        let csv = a.to_csv();
        assert!(csv.starts_with("axis_value,q,success_rate,mean_rel_err,mean_iters\n"));
        assert_eq!(csv.lines().count(), 1 + 4);
    }

    #[test]
    fn infeasible_cells_are_skipped() {
        let mut g = small_grid();
        g.l = 12;
        g.axis_values = vec![10];
        let r = run_phase_transition(&g).unwrap();
        assert!(r.cells.iter().all(|c| c.reps == 0 && c.skipped == 3));
    }

    #[test]
    fn plot_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let single = PhaseResult {
            axis: SweepAxis::Cosparsity,
            cells: vec![PhaseCell {
                axis_value: 7,
                q: 0.5,
                successes: 1,
                reps: 2,
                skipped: 0,
                mean_relative_error: 0.1,
                mean_iterations: 4.0,
            }],
        };
        let svg = render_svg(&single).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
        let path = dir.path().join("p.svg");
        let csv = emit_plot(&single, &path).unwrap();
        let first = (fs::read(&path).unwrap(), fs::read(&csv).unwrap());
        emit_plot(&single, &path).unwrap();
        assert_eq!(first, (fs::read(&path).unwrap(), fs::read(&csv).unwrap()));
        assert!(render_svg(&PhaseResult { axis: SweepAxis::Cosparsity, cells: vec![] }).is_err());
    }

    #[test]
    fn pgm_header_and_clamping() {
        let img = crate::numerics::Matrix::from_row_slice(1, 3, &[-0.5, 0.5, 2.0]);
        assert_eq!(to_pgm(&img), "P2\n3 1\n255\n0 128 255\n");
    }

    #[test]
    fn snr_of_scaled_error() {
        let t = Vector::from_vec(vec![3.0, 4.0]);
        let e = Vector::from_vec(vec![3.05, 4.0]);
        assert!((snr_db(&e, &t) - 40.0).abs() < 1e-9);
    }
}
