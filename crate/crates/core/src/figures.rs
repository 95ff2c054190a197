//! Regeneration of the three reference data sets: the `λ` branch for
//! `e^{u²} - 1`, the `κ` branch for `u² e^{κu}`, and the Cauchy family on the
//! symmetric interval.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bvp::{self, BoundaryCondition, Parameter, Problem, ScanOptions};
use crate::continuation::{self, Branch, ContinuationOptions};
use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::phase_flow::{self, phi_inv, FlowOptions, HomotopyParams, PhaseState, Trajectory};
use crate::weight::WeightFunction;

const REFERENCE: &str = include_str!("../data/reference_points.csv");

/// Negative weight value behind the branch and family data of figures 1
/// and 3.
pub const FIG1_NEGATIVE: f64 = -4.0;
pub const FIG2_NEGATIVE: f64 = -10.0;
pub const FIG3_NEGATIVE: f64 = -4.0;

/// Endpoint slope below which a Cauchy family member counts as Neumann.
pub const NEUMANN_SLOPE_TOL: f64 = 1e-3;

/// `u(0)` of the Cauchy family members, centred time.
pub fn fig3_initial_values() -> Vec<f64> {
    (0..=10).map(|k| 0.493648 + 0.2 * k as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferencePoint {
    pub figure: u8,
    pub kind: RefKind,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefKind {
    Anchor,
    Fold,
    Profile,
}

/// The embedded comparison table.
pub fn reference_points() -> Vec<ReferencePoint> {
    REFERENCE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("figure") && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let kind = match f[1] {
                "anchor" => RefKind::Anchor,
                "fold" => RefKind::Fold,
                _ => RefKind::Profile,
            };
            ReferencePoint { figure: f[0].parse().unwrap(), kind, x: f[2].parse().unwrap(), y: f[3].parse().unwrap() }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub label: String,
    pub x: f64,
    pub reference: f64,
    pub computed: f64,
}

impl Comparison {
    pub fn rel_delta(&self) -> f64 {
        (self.computed - self.reference).abs() / self.reference.abs()
    }
}

#[derive(Clone, Debug, Default)]
pub struct FigureSummary {
    pub figure: u8,
    pub files: Vec<PathBuf>,
    pub comparisons: Vec<Comparison>,
    pub notes: Vec<(String, String)>,
}

impl FigureSummary {
    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "figure = {}", self.figure);
        for (k, v) in &self.notes {
            let _ = writeln!(s, "{k} = {v}");
        }
        for f in &self.files {
            let name = f.file_name().map_or_else(|| f.display().to_string(), |n| n.to_string_lossy().into_owned());
            let _ = writeln!(s, "file = {name}");
        }
        for c in &self.comparisons {
            let _ = writeln!(
                s,
                "compare.{} = x {} reference {} computed {} rel_delta {:.3e}",
                c.label,
                c.x,
                c.reference,
                c.computed,
                c.rel_delta()
            );
        }
        s
    }

    pub fn max_rel_delta(&self) -> f64 {
        self.comparisons.iter().map(Comparison::rel_delta).fold(0.0, f64::max)
    }
}

pub fn fig1_problem(negative: f64) -> Result<Problem> {
    Ok(Problem::new(
        WeightFunction::step(&[1.0], &[1.0, negative], 2.0)?,
        Nonlinearity::exp_power(2.0)?,
        BoundaryCondition::Neumann,
    ))
}

pub fn fig2_problem(kappa: f64) -> Result<Problem> {
    Ok(Problem::new(
        WeightFunction::step(&[1.0], &[1.0, FIG2_NEGATIVE], 2.0)?,
        Nonlinearity::power_exp(2.0, kappa)?,
        BoundaryCondition::Neumann,
    ))
}

/// Symmetric problem on `[-2, 2]` translated to `[0, 4]`.
pub fn fig3_problem(negative: f64) -> Result<Problem> {
    Ok(Problem::new(
        WeightFunction::step(&[1.0, 3.0], &[negative, 1.0, negative], 4.0)?,
        Nonlinearity::exp_power(2.0)?,
        BoundaryCondition::Neumann,
    ))
}

/// Offset mapping `[0, 4]` back to centred time.
pub const FIG3_OFFSET: f64 = -2.0;

/// Cauchy solution from `(u0, 0)` at the centre, on `[0, 4]`.
pub fn fig3_member(problem: &Problem, u0: f64) -> Result<Trajectory> {
    phase_flow::integrate_two_sided(
        &problem.weight,
        &problem.nonlinearity,
        HomotopyParams::with_lambda(problem.lambda)?,
        PhaseState::new(u0, 0.0),
        -FIG3_OFFSET,
        (0.0, problem.period()),
        &FlowOptions { max_step: problem.max_step, ..FlowOptions::default() },
    )
}

fn nearest(values: &[f64], target: f64) -> Option<f64> {
    values.iter().copied().min_by(|a, b| (a - target).abs().partial_cmp(&(b - target).abs()).unwrap())
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    Ok((path.clone(), BufWriter::new(File::create(&path)?)))
}

/// Traces the branch through `start` in both directions over `range`.
pub fn trace_both_ways(
    problem: &Problem,
    parameter: Parameter,
    start: (f64, f64),
    range: (f64, f64),
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let (back, fwd) = rayon::join(
        || continuation::trace_branch(problem, parameter, start.0, start.1, range, -1.0, opts),
        || continuation::trace_branch(problem, parameter, start.0, start.1, range, 1.0, opts),
    );
    Ok(Branch::joined(&back?, &fwd?))
}

fn smallest_neumann(problem: &Problem) -> Result<f64> {
    let report = bvp::solve_neumann(problem, &ScanOptions::default_for(problem))?;
    report
        .solutions
        .iter()
        .filter(|s| s.is_positive())
        .map(|s| s.u0())
        .next()
        .ok_or_else(|| Error::Inconclusive("no positive Neumann solution at the start parameter".into()))
}

fn anchor_comparisons(
    summary: &mut FigureSummary,
    branch: &Branch,
    problem: &Problem,
    figure: u8,
    prefix: &str,
) -> Result<()> {
    for (i, r) in reference_points().into_iter().filter(|r| r.figure == figure).enumerate() {
        let computed = match r.kind {
            RefKind::Anchor => {
                let sols = branch.solve_at(problem, r.x)?;
                let u0s: Vec<f64> = sols.iter().map(|s| s.u0()).collect();
                nearest(&u0s, r.y).unwrap_or(f64::NAN)
            }
            RefKind::Fold => {
                let folds = continuation::detect_folds(branch);
                folds
                    .iter()
                    .min_by(|a, b| (a.0 - r.x).abs().partial_cmp(&(b.0 - r.x).abs()).unwrap())
                    .map_or(f64::NAN, |f| f.1)
            }
            RefKind::Profile => continue,
        };
        let kind = if r.kind == RefKind::Fold { "fold" } else { "anchor" };
        summary.comparisons.push(Comparison {
            label: format!("{prefix}.{kind}{i}"),
            x: r.x,
            reference: r.y,
            computed,
        });
    }
    Ok(())
}

fn figure1(out: &Path) -> Result<FigureSummary> {
    let problem = fig1_problem(FIG1_NEGATIVE)?;
    let u0 = smallest_neumann(&problem)?;
    let branch = trace_both_ways(&problem, Parameter::Lambda, (1.0, u0), (1e-4, 3.0), &ContinuationOptions::default())?;
    let mut summary = FigureSummary { figure: 1, ..Default::default() };
    let (path, mut f) = create(out, "fig1_branch.csv")?;
    branch.write_csv(&mut f)?;
    f.flush()?;
    summary.files.push(path);
    summary.notes.push(("weight".into(), format!("step [0,1): 1, [1,2]: {FIG1_NEGATIVE}")));
    summary.notes.push(("nonlinearity".into(), "exp_power p = 2".into()));
    summary.notes.push(("points".into(), branch.points.len().to_string()));
    summary.notes.push(("termination".into(), format!("{:?}", branch.termination)));
    anchor_comparisons(&mut summary, &branch, &problem, 1, "lambda")?;
    Ok(summary)
}

fn figure2(out: &Path) -> Result<FigureSummary> {
    let problem = fig2_problem(10.0)?;
    let u0 = smallest_neumann(&problem)?;
    let branch = trace_both_ways(&problem, Parameter::Kappa, (10.0, u0), (0.1, 50.0), &ContinuationOptions::default())?;
    let mut summary = FigureSummary { figure: 2, ..Default::default() };
    let (path, mut f) = create(out, "fig2_branch.csv")?;
    branch.write_csv(&mut f)?;
    f.flush()?;
    summary.files.push(path);
    let folds = continuation::detect_folds(&branch);
    let (path, mut f) = create(out, "fig2_folds.csv")?;
    writeln!(f, "kappa,u0")?;
    for (k, u) in &folds {
        writeln!(f, "{k:?},{u:?}")?;
    }
    f.flush()?;
    summary.files.push(path);
    summary.notes.push(("weight".into(), format!("step [0,1): 1, [1,2]: {FIG2_NEGATIVE}")));
    summary.notes.push(("nonlinearity".into(), "power_exp p = 2".into()));
    summary.notes.push(("points".into(), branch.points.len().to_string()));
    summary.notes.push(("folds".into(), folds.len().to_string()));
    summary.notes.push(("termination".into(), format!("{:?}", branch.termination)));
    anchor_comparisons(&mut summary, &branch, &problem, 2, "kappa")?;
    Ok(summary)
}

fn figure3(out: &Path, samples: usize) -> Result<FigureSummary> {
    let problem = fig3_problem(FIG3_NEGATIVE)?;
    let inits = fig3_initial_values();
    let members: Vec<Result<Trajectory>> = inits.par_iter().map(|&u0| fig3_member(&problem, u0)).collect();
    let mut summary = FigureSummary { figure: 3, ..Default::default() };
    let (index_path, mut index) = create(out, "fig3_family.csv")?;
    writeln!(index, "member,u0,offset,u_left,u_right,uprime_left,uprime_right,is_neumann,file")?;
    let mut neumann_member = None;
    for (k, (u0, tr)) in inits.iter().zip(members).enumerate() {
        let tr = tr?;
        let name = format!("fig3_member_{k:02}.csv");
        let (path, mut f) = create(out, &name)?;
        tr.write_csv(&mut f, samples)?;
        f.flush()?;
        summary.files.push(path);
        let (a, b) = (tr.first(), tr.last());
        let (sa, sb) = (phi_inv(a.v), phi_inv(b.v));
        let is_neumann = sa.abs() < NEUMANN_SLOPE_TOL && sb.abs() < NEUMANN_SLOPE_TOL;
        if is_neumann && neumann_member.is_none() {
            neumann_member = Some((k, tr.clone()));
        }
        writeln!(index, "{k},{u0:?},{FIG3_OFFSET:?},{:?},{:?},{sa:?},{sb:?},{},{name}", a.u, b.u, is_neumann as u8)?;
    }
    index.flush()?;
    summary.files.insert(0, index_path);
    summary.notes.push(("weight".into(), format!("step [0,1): {FIG3_NEGATIVE}, [1,3): 1, [3,4]: {FIG3_NEGATIVE}")));
    summary.notes.push(("nonlinearity".into(), "exp_power p = 2".into()));
    summary.notes.push(("offset".into(), FIG3_OFFSET.to_string()));
    match &neumann_member {
        Some((k, tr)) => {
            summary.notes.push(("neumann_member".into(), k.to_string()));
            for (i, r) in reference_points().into_iter().filter(|r| r.figure == 3).enumerate() {
                for (side, t) in [("right", r.x), ("left", 0.0 - r.x)] {
                    summary.comparisons.push(Comparison {
                        label: format!("profile{i}.{side}"),
                        x: t,
                        reference: r.y,
                        computed: tr.eval(t - FIG3_OFFSET).u,
                    });
                }
            }
        }
        None => summary.notes.push(("neumann_member".into(), "none".into())),
    }
    Ok(summary)
}

/// Writes the data files of figure `which` into `out_dir` together with a
/// `figN_summary.txt` of comparison deltas.
pub fn reproduce_figure(which: u8, out_dir: &Path) -> Result<FigureSummary> {
    reproduce_figure_with(which, out_dir, 401)
}

pub fn reproduce_figure_with(which: u8, out_dir: &Path, samples: usize) -> Result<FigureSummary> {
    fs::create_dir_all(out_dir)?;
    let mut summary = match which {
        1 => figure1(out_dir)?,
        2 => figure2(out_dir)?,
        3 => figure3(out_dir, samples)?,
        _ => return Err(Error::Domain { what: "figure number in {1, 2, 3}", value: which as f64 }),
    };
    let path = out_dir.join(format!("fig{which}_summary.txt"));
    summary.files.push(path.clone());
    fs::write(&path, summary.to_text())?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table_parses() {
        let r = reference_points();
        assert_eq!(r.iter().filter(|p| p.figure == 1).count(), 7);
        assert_eq!(r.iter().filter(|p| p.kind == RefKind::Fold).count(), 1);
        assert_eq!(r.iter().filter(|p| p.figure == 3).count(), 3);
    }

    #[test]
    fn neumann_member_of_family() {
        let p = fig3_problem(FIG3_NEGATIVE).unwrap();
        let tr = fig3_member(&p, 0.693648).unwrap();
        for t in [0.0, 4.0] {
            let s = tr.eval(t);
            assert!((s.u - 0.267815).abs() < 5e-6, "{s:?}");
            assert!(phi_inv(s.v).abs() < 1e-4);
        }
        assert!((tr.eval(0.9).u - 0.406371).abs() < 5e-6);
    }

    #[test]
    fn figure3_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = reproduce_figure_with(3, dir.path(), 41).unwrap();
        assert_eq!(s.files.len(), 13);
        assert!(s.notes.contains(&("neumann_member".to_string(), "1".to_string())));
        assert!(s.max_rel_delta() < 1e-4, "{}", s.to_text());
    }
}
