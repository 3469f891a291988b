#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use cosparse::certify::{self, RipEstimate, Verdict};
use cosparse::experiments::{
    self, DemoParams, LambdaPolicy, PhaseGrid, PhantomParams, SweepAxis,
};
use cosparse::operators::{self, AnalysisOperator};
use cosparse::theory::{self, Mode, ThresholdQuery, TheoryReport};
use cosparse::{instances, seeding, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "cosparse", version, about = "Cosparse recovery by nonconvex lq-analysis minimization")]
#[command(args_override_self = true)]
struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory for CSV, SVG and image files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Flat JSON object of flag values; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one synthetic instance and dump the trace and estimate.
    Recover(RecoverArgs),
    /// Success rate over a sweep of sample counts or cosparsities.
    Phase(PhaseArgs),
    /// Reconstruct the phantom from radial Fourier samples.
    Phantom(PhantomArgs),
    /// Isometry thresholds for the classical (q, t, kappa) settings.
    Thresholds(ThresholdArgs),
    /// Brute-force isometry constants or the null space property on a small instance.
    Certify(CertifyArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct RecoverArgs {
    #[arg(long, default_value_t = 80)]
    m: usize,
    #[arg(long, default_value_t = 144)]
    n: usize,
    #[arg(long, default_value_t = 120)]
    d: usize,
    #[arg(long, default_value_t = 99)]
    l: usize,
    #[arg(long, default_value_t = 0.7)]
    q: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    /// Tune lambda on a log grid against the ground truth.
    #[arg(long)]
    lambda_grid: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    M,
    L,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct PhaseArgs {
    #[arg(long, value_enum, default_value = "m")]
    axis: AxisArg,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', default_values_t = [60, 65, 70, 75, 80, 85, 90, 95, 100])]
    values: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = experiments::DEFAULT_Q_VALUES)]
    q: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 90)]
    m: usize,
    #[arg(long, default_value_t = 99)]
    l: usize,
    #[arg(long, default_value_t = 144)]
    n: usize,
    #[arg(long, default_value_t = 120)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    #[arg(long)]
    lambda_grid: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct PhantomArgs {
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value_t = 12)]
    lines: usize,
    #[arg(long, default_value_t = 0.7)]
    q: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    /// Instead of one run, bisect for the fewest lines giving an exact reconstruction.
    #[arg(long)]
    min_lines: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Noiseless,
    Noisy,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ThresholdArgs {
    #[arg(long, value_enum, default_value = "noiseless")]
    mode: ModeArg,
    /// Extra rows as `q:t:kappa`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    extra: Vec<String>,
    /// Also write the table as CSV to the output directory.
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Flavor {
    Drip,
    Omega,
    Nsp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OperatorArg {
    Identity,
    Fd1d,
    Parseval,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct CertifyArgs {
    #[arg(long, value_enum, default_value = "drip")]
    flavor: Flavor,
    /// Support size (drip), cosupport size (omega) or k (nsp).
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Random starts for the null space search when the nullity exceeds two.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 6)]
    d: usize,
    #[arg(long, value_enum, default_value = "parseval")]
    operator: OperatorArg,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = Cli::parse_from(argv);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_infeasible() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

const SUBCOMMANDS: [&str; 5] = ["recover", "phase", "phantom", "thresholds", "certify"];

// Splices `--key value` pairs from the config file in right after the
// subcommand name, so that explicit flags (which come later) override them.
fn merge_config(argv: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = argv.get(i + 1).cloned();
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let config: Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
    let Value::Object(map) = config else {
        return Err(Error::Parse("config must be a flat JSON object".into()));
    };
    let mut tokens = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => tokens.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => tokens.extend([flag, n.to_string()]),
            Value::String(s) => tokens.extend([flag, s]),
            Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                tokens.extend([flag, parts.join(",")]);
            }
            Value::Object(_) => {
                return Err(Error::Parse(format!("config key {key:?} must not be nested")));
            }
        }
    }
    let Some(pos) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let mut merged = argv[..=pos].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&argv[pos + 1..]);
    Ok(merged)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Recover(a) => recover(cli, a),
        Command::Phase(a) => phase(cli, a),
        Command::Phantom(a) => phantom(cli, a),
        Command::Thresholds(a) => thresholds(cli, a),
        Command::Certify(a) => certify_cmd(cli, a),
    }
}

fn lambda_policy(lambda: f64, grid: bool) -> LambdaPolicy {
    if grid {
        LambdaPolicy::GridSearch
    } else {
        LambdaPolicy::Fixed(lambda)
    }
}

fn recover(cli: &Cli, a: &RecoverArgs) -> Result<()> {
    let report = experiments::run_recovery_demo(&DemoParams {
        m: a.m,
        n: a.n,
        d: a.d,
        l: a.l,
        q: a.q,
        sigma: a.sigma,
        lambda: lambda_policy(a.lambda, a.lambda_grid),
        seed: cli.seed,
    })?;
    print!("{}", report.trace_csv());
    let r = &report.result;
    println!("termination: {:?}", r.trace.termination);
    println!("iterations: {}", r.trace.iterations());
    println!("lambda: {:?}", report.lambda);
    println!("relative_error: {:?}", r.relative_error.unwrap_or(f64::NAN));
    println!("success: {}", r.success);
    report.write_outputs(&cli.out)?;
    println!("wrote {}", cli.out.display());
    Ok(())
}

fn phase(cli: &Cli, a: &PhaseArgs) -> Result<()> {
    let grid = PhaseGrid {
        axis: match a.axis {
            AxisArg::M => SweepAxis::SampleCount,
            AxisArg::L => SweepAxis::Cosparsity,
        },
        axis_values: a.values.clone(),
        q_values: a.q.clone(),
        reps: a.reps,
        m: a.m,
        l: a.l,
        n: a.n,
        d: a.d,
        sigma: a.sigma,
        lambda: lambda_policy(a.lambda, a.lambda_grid),
        base_seed: cli.seed,
    };
    let result = experiments::run_phase_transition(&grid)?;
    print!("{}", result.to_csv());
    fs::create_dir_all(&cli.out)?;
    let svg = cli.out.join("phase.svg");
    let csv = experiments::emit_plot(&result, &svg)?;
    println!("wrote {} and {}", svg.display(), csv.display());
    Ok(())
}

fn phantom(cli: &Cli, a: &PhantomArgs) -> Result<()> {
    let params = PhantomParams {
        size: a.size,
        lines: a.lines,
        q: a.q,
        sigma: a.sigma,
        lambda: a.lambda,
        seed: cli.seed,
    };
    if a.min_lines {
        if !matches!(a.size, 16 | 32) {
            return Err(Error::InvalidInput(format!("phantom size must be 16 or 32, got {}", a.size)));
        }
        let op = Arc::new(operators::make_fd_2d(a.size, a.size)?);
        let found = experiments::minimal_exact_lines(op, &params, 2, a.size)?;
        match found {
            Some(lines) => println!("minimal_exact_lines: {lines}"),
            None => println!("minimal_exact_lines: none up to {}", a.size),
        }
        return Ok(());
    }
    let report = experiments::run_phantom(&params)?;
    println!("measurements: {}", report.measurements);
    println!("cosparsity: {}", report.l_target);
    println!("iterations: {}", report.iterations);
    println!("relative_error: {:?}", report.relative_error);
    println!("snr_db: {:?}", report.snr_db);
    println!("exact: {}", report.exact());
    report.write_outputs(&cli.out)?;
    println!("wrote {}", cli.out.display());
    Ok(())
}

fn thresholds(cli: &Cli, a: &ThresholdArgs) -> Result<()> {
    let mode = match a.mode {
        ModeArg::Noiseless => Mode::Noiseless,
        ModeArg::Noisy => Mode::Noisy,
    };
    let mut rows: Vec<theory::ThresholdRow> = theory::TABLE_SETTINGS
        .iter()
        .map(|&(q, t, kappa)| theory::threshold_row(q, t, kappa, mode))
        .collect();
    for spec in &a.extra {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("bad row {spec:?}: {e}")))?;
        let [q, t, kappa] = parts[..] else {
            return Err(Error::InvalidInput(format!("row {spec:?} must be q:t:kappa")));
        };
        ThresholdQuery { q, t, kappa, k: 1, mode }.validate()?;
        rows.push(theory::threshold_row(q, t, kappa, mode));
    }
    let header = ["q", "t", "kappa", "rho", "order_multiplier", "threshold"];
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [r.q, r.t, r.kappa, r.rho, r.order_multiplier, r.threshold].map(|v| format!("{v:?}"))
        })
        .collect();
    let widths: Vec<usize> = (0..6)
        .map(|j| cells.iter().map(|c| c[j].len()).chain([header[j].len()]).max().unwrap())
        .collect();
    let line = |fields: Vec<&str>| {
        fields
            .iter()
            .zip(&widths)
            .map(|(f, w)| format!("{f:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    println!("{}", line(header.to_vec()));
    for c in &cells {
        println!("{}", line(c.iter().map(String::as_str).collect()));
    }
    if a.csv {
        fs::create_dir_all(&cli.out)?;
        let mut s = header.join(",") + "\n";
        for c in &cells {
            s.push_str(&c.join(","));
            s.push('\n');
        }
        let path = cli.out.join("thresholds.csv");
        fs::write(&path, s)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn certify_operator(a: &CertifyArgs, seed: u64) -> Result<AnalysisOperator> {
    match a.operator {
        OperatorArg::Identity => operators::make_identity(a.d),
        OperatorArg::Fd1d => operators::make_fd_1d(a.d),
        OperatorArg::Parseval => operators::make_random_parseval_frame(a.n, a.d, seeding::derive(seed, 0x0f)),
    }
}

fn print_rip(est: &RipEstimate, threshold_label: &str, threshold: f64) {
    println!("flavor: {:?}", est.flavor);
    println!("order: {}", est.order);
    println!("delta: {:?}", est.delta);
    println!("extremal_support: {:?}", est.extremal_support);
    println!("{threshold_label}: {threshold:?}");
    println!("below_threshold: {}", est.delta < threshold);
}

fn certify_cmd(cli: &Cli, a: &CertifyArgs) -> Result<()> {
    let op = certify_operator(a, cli.seed)?;
    let x = instances::make_design_matrix(a.m, op.d(), seeding::derive(cli.seed, 1))?;
    println!("instance: m={} n={} d={} operator={} kappa={:?}", a.m, op.n(), op.d(), op.kind(), op.kappa());
    match a.flavor {
        Flavor::Drip => {
            let est = certify::drip_delta(&x, &op, a.order)?;
            // Order s = (t^q + 1) k with k = 1, i.e. t^q = s - 1.
            let t = ((a.order as f64 - 1.0).max(1.0)).powf(1.0 / a.q);
            let b = TheoryReport::new(
                ThresholdQuery { q: a.q, t, kappa: op.kappa(), k: 1, mode: Mode::Noiseless },
                None,
                op.sigma_max(),
            )?
            .delta_threshold;
            println!("t: {t:?}");
            print_rip(&est, "noiseless_threshold", b);
        }
        Flavor::Omega => {
            let est = certify::omega_rip_delta(&x, &op, a.order)?;
            print_rip(&est, "uniqueness_threshold", 1.0);
        }
        Flavor::Nsp => {
            let v = certify::dnspq_check(&x, &op, a.q, a.order, a.budget, cli.seed)?;
            println!("nullity: {}", v.nullity);
            println!("method: {:?}", v.method);
            println!("verdict: {:?}", v.verdict);
            println!("margin: {:?}", v.margin);
            if let Some(w) = &v.witness {
                println!("witness_t: {:?}", w.t);
                println!("witness_v: {:?}", w.v);
                println!("witness_verified: {}", certify::verify_witness(&x, &op, a.q, a.order, w));
            }
            if v.verdict == Verdict::Holds {
                println!("exact recovery of every {}-analysis-sparse vector is guaranteed", a.order);
            }
        }
    }
    Ok(())
}
