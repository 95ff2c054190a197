//! The `minkbvp` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bvp::{self, BoundaryCondition, Parameter, Problem, Solution};
use crate::certificates::{self, TheoremConstants};
use crate::config::{load_config, ProblemConfig};
use crate::continuation;
use crate::error::{Error, Result};
use crate::figures;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_SOLUTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "MINKBVP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "minkbvp", version, about = "Positive solutions of indefinite Minkowski-curvature problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find all solutions in the configured scan range.
    Solve(SolveArgs),
    /// Continue a solution branch in λ or κ.
    Branch(BranchArgs),
    /// Compute the a-priori constants, the degree of f# and the probe reports.
    Certify(CertifyArgs),
    /// Regenerate the data of figure 1, 2 or 3.
    ReproduceFigure(FigureArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Overrides the configured κ (power_exp only).
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Solution table path (default: `<output dir>/solutions.csv`).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write one trajectory CSV per solution.
    #[arg(long)]
    trajectories: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ParamArg {
    Lambda,
    Kappa,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    Both,
    Up,
    Down,
}

#[derive(Args, Debug)]
struct BranchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    parameter: ParamArg,
    #[arg(long)]
    min: f64,
    #[arg(long)]
    max: f64,
    /// Starting `u(0)`; defaults to the smallest positive solution at the
    /// configured parameter value.
    #[arg(long)]
    u0: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    direction: DirectionArg,
    /// Branch CSV path (default: `<output dir>/branch.csv`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    /// Radius for the small-norm probe and the degree.
    #[arg(long)]
    r: Option<f64>,
    /// Scan points per probe.
    #[arg(long, default_value_t = 200)]
    resolution: usize,
    /// Also write the report to this file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FigureArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    figure: u8,
    /// Supplies the output directory and sample density when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::InvalidWeight(_)
        | Error::InvalidNonlinearity(_)
        | Error::Io(_)
        | Error::NoPositivityInterval => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            // Fails only when a global pool already exists.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_threads();
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Branch(a) => branch(a),
        Command::Certify(a) => certify(a),
        Command::ReproduceFigure(a) => reproduce(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("minkbvp: {e}");
            exit_code(&e)
        }
    }
}

fn setup(common: &Common) -> Result<(ProblemConfig, Problem)> {
    let cfg = load_config(&common.config)?;
    let mut problem = cfg.problem()?;
    if let Some(l) = common.lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Config { line: 0, key: "--lambda".into(), message: format!("must be positive, got {l}") });
        }
        problem.lambda = l;
    }
    if let Some(k) = common.kappa {
        if problem.nonlinearity.kappa().is_none() {
            return Err(Error::Config { line: 0, key: "--kappa".into(), message: "only valid for power_exp".into() });
        }
        problem = problem.with_param(Parameter::Kappa, k).map_err(|e| Error::Config {
            line: 0,
            key: "--kappa".into(),
            message: e.to_string(),
        })?;
    }
    Ok((cfg, problem))
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// All solutions of the configured problem.
pub fn find_solutions(cfg: &ProblemConfig, problem: &Problem) -> Result<Vec<Solution>> {
    let scan = cfg.scan(problem);
    let mut neumann_problem = problem.clone();
    neumann_problem.bc = BoundaryCondition::Neumann;
    let neumann = bvp::solve_neumann(&neumann_problem, &scan)?;
    match problem.bc {
        BoundaryCondition::Neumann => Ok(neumann.solutions),
        BoundaryCondition::Periodic => {
            let guesses = bvp::periodic_guesses(&neumann.solutions, scan.c_max.min(5.0), 10, 5);
            Ok(bvp::solve_periodic(problem, &guesses)?.solutions)
        }
    }
}

/// CSV `index,u0,v0,sup_norm,bc_residual,weak_residual,min_u`.
pub fn write_solutions<W: Write>(mut out: W, sols: &[Solution]) -> Result<()> {
    writeln!(out, "index,u0,v0,sup_norm,bc_residual,weak_residual,min_u")?;
    for (i, s) in sols.iter().enumerate() {
        let c = &s.certificate;
        writeln!(out, "{i},{:?},{:?},{:?},{:?},{:?},{:?}", s.u0(), s.v0(), s.sup_norm, c.bc_residual, c.weak_residual, c.min_u)?;
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<i32> {
    let (cfg, problem) = setup(&a.common)?;
    let sols: Vec<Solution> = find_solutions(&cfg, &problem)?.into_iter().filter(Solution::is_positive).collect();
    let path = a.output.unwrap_or_else(|| cfg.output.directory.join("solutions.csv"));
    let mut w = writer(&path)?;
    write_solutions(&mut w, &sols)?;
    w.flush()?;
    if a.trajectories {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for (i, s) in sols.iter().enumerate() {
            let mut w = writer(&dir.join(format!("solution_{i:03}.csv")))?;
            s.trajectory.write_csv(&mut w, cfg.output.samples)?;
            w.flush()?;
        }
    }
    eprintln!("{} positive solution(s) written to {}", sols.len(), path.display());
    Ok(if sols.is_empty() { EXIT_NO_SOLUTION } else { EXIT_OK })
}

fn branch(a: BranchArgs) -> Result<i32> {
    let (cfg, problem) = setup(&a.common)?;
    if problem.bc != BoundaryCondition::Neumann {
        return Err(Error::Config { line: 0, key: "bc".into(), message: "branch supports neumann only".into() });
    }
    let parameter = match a.parameter {
        ParamArg::Lambda => Parameter::Lambda,
        ParamArg::Kappa => Parameter::Kappa,
    };
    let start = problem.param(parameter);
    if !start.is_finite() {
        return Err(Error::Config { line: 0, key: "--parameter".into(), message: "kappa needs power_exp".into() });
    }
    if !(a.min > 0.0 && a.max > a.min && start >= a.min && start <= a.max) {
        return Err(Error::Config {
            line: 0,
            key: "--min/--max".into(),
            message: format!("need 0 < min <= {start} <= max"),
        });
    }
    let u0 = match a.u0 {
        Some(u) => u,
        None => match find_solutions(&cfg, &problem)?.into_iter().find(Solution::is_positive) {
            Some(s) => s.u0(),
            None => {
                eprintln!("no positive solution at {} = {start}", parameter.name());
                return Ok(EXIT_NO_SOLUTION);
            }
        },
    };
    let opts = cfg.continuation();
    let range = (a.min, a.max);
    let b = match a.direction {
        DirectionArg::Both => figures::trace_both_ways(&problem, parameter, (start, u0), range, &opts)?,
        DirectionArg::Up => continuation::trace_branch(&problem, parameter, start, u0, range, 1.0, &opts)?,
        DirectionArg::Down => continuation::trace_branch(&problem, parameter, start, u0, range, -1.0, &opts)?,
    };
    let path = a.output.unwrap_or_else(|| cfg.output.directory.join("branch.csv"));
    let mut w = writer(&path)?;
    b.write_csv(&mut w)?;
    w.flush()?;
    let folds = continuation::detect_folds(&b);
    eprintln!(
        "{} points, {} fold(s), termination {:?}, written to {}",
        b.points.len(),
        folds.len(),
        b.termination,
        path.display()
    );
    for (p, u) in folds {
        eprintln!("fold at {} = {p}, u0 = {u}", parameter.name());
    }
    Ok(EXIT_OK)
}

fn fmt_list(xs: impl IntoIterator<Item = f64>) -> String {
    let v: Vec<String> = xs.into_iter().map(|x| x.to_string()).collect();
    format!("[{}]", v.join(", "))
}

fn constants_report(s: &mut String, c: &TheoremConstants) {
    let _ = writeln!(s, "se_condition = pass");
    let _ = writeln!(s, "K = {}", c.k);
    let _ = writeln!(s, "liminf_g_over_G = {}", c.liminf_estimate);
    let _ = writeln!(s, "A = {}", fmt_list(c.intervals.iter().map(|i| i.window_l1)));
    let _ = writeln!(s, "delta = {}", fmt_list(c.deltas()));
    let _ = writeln!(s, "gamma = {}", fmt_list(c.intervals.iter().map(|i| i.gamma)));
    let _ = writeln!(s, "K_i = {}", fmt_list(c.intervals.iter().map(|i| i.k_i)));
    let _ = writeln!(s, "epsilon = {}", c.epsilon);
    let _ = writeln!(s, "beta = {}", fmt_list(c.betas()));
    let _ = writeln!(s, "R_star = {}", c.r_star);
    let _ = writeln!(s, "R_hat = {}", c.r_hat);
    let _ = writeln!(s, "R = {}", c.big_r);
    let _ = writeln!(s, "alpha0 = {:e}", c.alpha0);
    let _ = writeln!(s, "log_alpha0 = {}", c.log_alpha0);
}

fn probe_line(s: &mut String, name: &str, r: &Result<certificates::ProbeReport>) {
    match r {
        Ok(p) => {
            let _ = writeln!(s, "{name} = {}", if p.passed() { "pass" } else { "hit" });
            let _ = writeln!(s, "{name}.detail = {}", p.summary());
            let _ = writeln!(s, "{name}.failed_shots = {}", p.failures);
            for (i, h) in p.hits.iter().enumerate() {
                let _ = writeln!(s, "{name}.hit{i} = param {} u0 {} v0 {} sup_norm {}", h.param, h.u0, h.v0, h.sup_norm);
            }
        }
        Err(e) => {
            let _ = writeln!(s, "{name} = error");
            let _ = writeln!(s, "{name}.detail = {e}");
        }
    }
}

fn certify(a: CertifyArgs) -> Result<i32> {
    let (cfg, problem) = setup(&a.common)?;
    let n = problem.nonlinearity.with_scale(problem.lambda * problem.nonlinearity.scale())?;
    let w = &problem.weight;
    let mut s = String::new();
    let _ = writeln!(s, "bc = {}", problem.bc.name());
    let _ = writeln!(s, "lambda = {}", problem.lambda);
    if let Some(k) = n.kappa() {
        let _ = writeln!(s, "kappa = {k}");
    }
    let _ = writeln!(s, "neg_sup_norm = {}", w.neg_sup_norm());
    let _ = writeln!(s, "mean_value = {}", w.mean_value());

    let smallest = find_solutions(&cfg, &problem)
        .ok()
        .and_then(|v| v.into_iter().filter(Solution::is_positive).map(|s| s.sup_norm).reduce(f64::min));
    let r = a.r.unwrap_or_else(|| certificates::default_r(smallest));
    let _ = writeln!(s, "r = {r}");
    match certificates::brouwer_degree_f_sharp(w, &n, r) {
        Ok(d) => {
            let _ = writeln!(s, "degree = {d}");
        }
        Err(e) => {
            let _ = writeln!(s, "degree = error");
            let _ = writeln!(s, "degree.detail = {e}");
        }
    }

    match certificates::compute_constants(w, &n) {
        Ok(c) => {
            constants_report(&mut s, &c);
            let res = a.resolution.max(2);
            probe_line(&mut s, "probe_H1", &certificates::probe_h1(&problem, r, &certificates::theta_grid(), res));
            let alphas = if c.alpha0.is_finite() { certificates::alpha_grid(c.alpha0, 20) } else { vec![0.0] };
            probe_line(&mut s, "probe_H2", &certificates::probe_h2(&problem, c.big_r, &alphas, res));
            if c.alpha0.is_finite() {
                probe_line(&mut s, "probe_H3", &certificates::probe_h3(&problem, c.big_r, c.alpha0, res));
            } else {
                let _ = writeln!(s, "probe_H3 = skipped");
                let _ = writeln!(s, "probe_H3.detail = alpha0 exceeds the floating-point range");
            }
        }
        Err(Error::GrowthConditionUnmet { estimate, threshold }) => {
            let _ = writeln!(s, "se_condition = fail");
            let _ = writeln!(s, "se_condition.estimate = {estimate}");
            let _ = writeln!(s, "se_condition.threshold = {threshold}");
            let _ = writeln!(
                s,
                "se_condition.detail = liminf g/G estimate {estimate} does not exceed {threshold}"
            );
        }
        Err(e) => return Err(e),
    }

    print!("{s}");
    if let Some(path) = a.output {
        let mut w = writer(&path)?;
        w.write_all(s.as_bytes())?;
        w.flush()?;
    }
    Ok(EXIT_OK)
}

fn reproduce(a: FigureArgs) -> Result<i32> {
    let (dir, samples) = match &a.config {
        Some(p) => {
            let cfg = load_config(p)?;
            (cfg.output.directory, cfg.output.samples)
        }
        None => (PathBuf::from("out"), 401),
    };
    let dir = a.out.unwrap_or(dir);
    let summary = figures::reproduce_figure_with(a.figure, &dir, samples)?;
    print!("{}", summary.to_text());
    Ok(EXIT_OK)
}
