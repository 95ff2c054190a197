//! Problem configuration files.
//!
//! The format is line-oriented `key = value` statements grouped in named
//! blocks, with `#` comments. Statements inside a block may also be separated
//! by `;`:
//!
//! ```text
//! weight { T = 2; breaks = [1]; values = [1, -10] }
//! nonlinearity {
//!     kind = exp_power
//!     p = 2
//! }
//! bc = neumann
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bvp::{BoundaryCondition, Problem, ScanOptions};
use crate::continuation::{ContinuationOptions, DEFAULT_CEILING, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::nonlinearity::{Nonlinearity, NonlinearityKind};
use crate::phase_flow::Tolerances;
use crate::weight::WeightFunction;

#[derive(Clone, Debug, PartialEq)]
pub enum WeightSource {
    Step { breaks: Vec<f64>, values: Vec<f64> },
    /// Two-column text file of `t a(t)` rows.
    Samples(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightConfig {
    pub period: f64,
    pub source: WeightSource,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearityConfig {
    pub kind: NonlinearityKind,
    pub p: f64,
    pub kappa: Option<f64>,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: Option<f64>,
    pub c_min: Option<f64>,
    pub c_max: Option<f64>,
    pub scan_points: Option<usize>,
    pub step: f64,
    pub ceiling: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let tol = Tolerances::default();
        SolverConfig {
            rtol: tol.rel,
            atol: tol.abs,
            max_step: None,
            c_min: None,
            c_max: None,
            scan_points: None,
            step: DEFAULT_STEP,
            ceiling: DEFAULT_CEILING,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Points per exported trajectory.
    pub samples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: PathBuf::from("out"), samples: 401 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub weight: WeightConfig,
    pub nonlinearity: NonlinearityConfig,
    pub bc: BoundaryCondition,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

struct Entry {
    line: usize,
    value: String,
}

#[derive(Default)]
struct Block {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

fn cfg_err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config { line, key: key.to_string(), message: message.into() }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

/// Splits the text into top-level statements and named blocks.
fn lex(text: &str) -> Result<(BTreeMap<String, Entry>, BTreeMap<String, Block>)> {
    let mut top = BTreeMap::new();
    let mut blocks: BTreeMap<String, Block> = BTreeMap::new();
    let mut current: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut rest = strip_comment(raw).trim();
        while !rest.is_empty() {
            if current.is_none() {
                if let Some(pos) = rest.find('{') {
                    let name = rest[..pos].trim();
                    if name.is_empty() || name.contains('=') {
                        return Err(cfg_err(line, name, "malformed block header"));
                    }
                    if blocks.contains_key(name) {
                        return Err(cfg_err(line, name, "duplicate block"));
                    }
                    blocks.insert(name.to_string(), Block { line, ..Default::default() });
                    current = Some(name.to_string());
                    rest = rest[pos + 1..].trim();
                    continue;
                }
            }
            let (stmt, tail, closes) = match (rest.find(';'), rest.find('}')) {
                (Some(s), Some(c)) if c < s => (&rest[..c], &rest[c + 1..], true),
                (Some(s), _) => (&rest[..s], &rest[s + 1..], false),
                (None, Some(c)) => (&rest[..c], &rest[c + 1..], true),
                (None, None) => (rest, "", false),
            };
            let stmt = stmt.trim();
            if !stmt.is_empty() {
                let (key, value) = stmt
                    .split_once('=')
                    .ok_or_else(|| cfg_err(line, stmt, "expected `key = value`"))?;
                let key = key.trim().to_string();
                let value = value.trim().to_string();
                if key.is_empty() {
                    return Err(cfg_err(line, "", "empty key"));
                }
                let map = match &current {
                    Some(b) => &mut blocks.get_mut(b).unwrap().entries,
                    None => &mut top,
                };
                if map.contains_key(&key) {
                    return Err(cfg_err(line, &key, "duplicate key"));
                }
                map.insert(key, Entry { line, value });
            }
            if closes {
                if current.take().is_none() {
                    return Err(cfg_err(line, "}", "unmatched closing brace"));
                }
            }
            rest = tail.trim();
        }
    }
    if let Some(b) = current {
        let line = blocks[&b].line;
        return Err(cfg_err(line, &b, "block is not closed"));
    }
    Ok((top, blocks))
}

struct Fields<'a> {
    block: &'a str,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl<'a> Fields<'a> {
    fn new(block: &'a str, b: Block, allowed: &[&str]) -> Result<Self> {
        for (k, e) in &b.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(cfg_err(e.line, &format!("{block}.{k}"), "unknown key"));
            }
        }
        Ok(Fields { block, line: b.line, entries: b.entries })
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.block)
    }

    fn raw(&self, k: &str) -> Option<&Entry> {
        self.entries.get(k)
    }

    fn real(&self, k: &str) -> Result<Option<(f64, usize)>> {
        match self.raw(k) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(|x| Some((x, e.line)))
                .ok_or_else(|| cfg_err(e.line, &self.key(k), format!("expected a finite number, got `{}`", e.value))),
        }
    }

    fn required_real(&self, k: &str) -> Result<(f64, usize)> {
        self.real(k)?.ok_or_else(|| cfg_err(self.line, &self.key(k), "missing required key"))
    }

    fn positive(&self, k: &str) -> Result<Option<f64>> {
        match self.real(k)? {
            Some((x, _)) if x > 0.0 => Ok(Some(x)),
            Some((x, line)) => Err(cfg_err(line, &self.key(k), format!("must be positive, got {x}"))),
            None => Ok(None),
        }
    }

    fn count(&self, k: &str, lo: usize, hi: usize) -> Result<Option<usize>> {
        match self.raw(k) {
            None => Ok(None),
            Some(e) => match e.value.parse::<usize>() {
                Ok(n) if (lo..=hi).contains(&n) => Ok(Some(n)),
                _ => Err(cfg_err(e.line, &self.key(k), format!("expected an integer in [{lo}, {hi}], got `{}`", e.value))),
            },
        }
    }

    fn list(&self, k: &str) -> Result<Option<(Vec<f64>, usize)>> {
        let Some(e) = self.raw(k) else { return Ok(None) };
        let bad = || cfg_err(e.line, &self.key(k), format!("expected a list `[x, y, ...]`, got `{}`", e.value));
        let inner = e.value.strip_prefix('[').and_then(|s| s.strip_suffix(']')).ok_or_else(bad)?;
        let inner = inner.trim();
        if inner.is_empty() {
            return Ok(Some((Vec::new(), e.line)));
        }
        let xs = inner
            .split(',')
            .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(bad)?;
        Ok(Some((xs, e.line)))
    }
}

fn take_block(blocks: &mut BTreeMap<String, Block>, name: &str, last_line: usize) -> Result<Block> {
    blocks.remove(name).ok_or_else(|| cfg_err(last_line, name, "missing required block"))
}

/// Parses a configuration; relative sample paths resolve against the
/// working directory.
pub fn parse_config(text: &str) -> Result<ProblemConfig> {
    parse_config_in(text, Path::new("."))
}

/// Reads and parses a configuration file; relative sample paths resolve
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err(0, "config", format!("cannot read {}: {e}", path.display())))?;
    parse_config_in(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_config_in(text: &str, base: &Path) -> Result<ProblemConfig> {
    let (mut top, mut blocks) = lex(text)?;
    let last_line = text.lines().count();

    for (k, e) in &top {
        if k != "bc" {
            return Err(cfg_err(e.line, k, "unknown key"));
        }
    }
    let bc = match top.remove("bc") {
        None => BoundaryCondition::Neumann,
        Some(e) => match e.value.as_str() {
            "neumann" => BoundaryCondition::Neumann,
            "periodic" => BoundaryCondition::Periodic,
            other => return Err(cfg_err(e.line, "bc", format!("expected neumann or periodic, got `{other}`"))),
        },
    };

    let weight = parse_weight(take_block(&mut blocks, "weight", last_line)?, base)?;
    let nonlinearity = parse_nonlinearity(take_block(&mut blocks, "nonlinearity", last_line)?)?;
    let solver = match blocks.remove("solver") {
        Some(b) => parse_solver(b)?,
        None => SolverConfig::default(),
    };
    let output = match blocks.remove("output") {
        Some(b) => parse_output(b)?,
        None => OutputConfig::default(),
    };
    if let Some((name, b)) = blocks.into_iter().next() {
        return Err(cfg_err(b.line, &name, "unknown block"));
    }
    Ok(ProblemConfig { weight, nonlinearity, bc, solver, output })
}

fn parse_weight(b: Block, base: &Path) -> Result<WeightConfig> {
    let f = Fields::new("weight", b, &["T", "breaks", "values", "samples_file"])?;
    let (period, line) = f.required_real("T")?;
    if !(period > 0.0) {
        return Err(cfg_err(line, &f.key("T"), format!("must be positive, got {period}")));
    }
    let source = if let Some(e) = f.raw("samples_file") {
        if f.raw("breaks").is_some() || f.raw("values").is_some() {
            return Err(cfg_err(e.line, &f.key("samples_file"), "cannot be combined with breaks/values"));
        }
        let rel = PathBuf::from(e.value.trim_matches('"'));
        let path = if rel.is_absolute() { rel } else { base.join(rel) };
        if !path.is_file() {
            return Err(cfg_err(e.line, &f.key("samples_file"), format!("file {} does not exist", path.display())));
        }
        WeightSource::Samples(path)
    } else {
        let (breaks, bline) = f.list("breaks")?.unwrap_or((Vec::new(), f.line));
        let (values, vline) =
            f.list("values")?.ok_or_else(|| cfg_err(f.line, &f.key("values"), "missing required key"))?;
        if values.len() != breaks.len() + 1 {
            return Err(cfg_err(
                vline,
                &f.key("values"),
                format!("expected {} values for {} breaks, got {}", breaks.len() + 1, breaks.len(), values.len()),
            ));
        }
        let mut prev = 0.0;
        for &b in &breaks {
            if !(b > prev && b < period) {
                return Err(cfg_err(bline, &f.key("breaks"), "must be strictly increasing inside (0, T)"));
            }
            prev = b;
        }
        WeightSource::Step { breaks, values }
    };
    Ok(WeightConfig { period, source })
}

fn parse_nonlinearity(b: Block) -> Result<NonlinearityConfig> {
    let f = Fields::new("nonlinearity", b, &["kind", "p", "kappa", "lambda"])?;
    let kind_entry = f.raw("kind").ok_or_else(|| cfg_err(f.line, &f.key("kind"), "missing required key"))?;
    let kind = NonlinearityKind::parse(&kind_entry.value).ok_or_else(|| {
        cfg_err(
            kind_entry.line,
            &f.key("kind"),
            format!("expected power, exp_power or power_exp, got `{}`", kind_entry.value),
        )
    })?;
    let (p, pline) = f.required_real("p")?;
    if !(p > 1.0) {
        return Err(cfg_err(pline, &f.key("p"), format!("p must exceed 1, got {p}")));
    }
    let kappa = f.positive("kappa")?;
    if kind == NonlinearityKind::PowerExp && kappa.is_none() {
        return Err(cfg_err(f.line, &f.key("kappa"), "required for power_exp"));
    }
    if kind != NonlinearityKind::PowerExp && kappa.is_some() {
        let line = f.raw("kappa").unwrap().line;
        return Err(cfg_err(line, &f.key("kappa"), "only valid for power_exp"));
    }
    let lambda = f.positive("lambda")?.unwrap_or(1.0);
    Ok(NonlinearityConfig { kind, p, kappa, lambda })
}

fn parse_solver(b: Block) -> Result<SolverConfig> {
    let f = Fields::new(
        "solver",
        b,
        &["rtol", "atol", "max_step", "c_min", "c_max", "scan_points", "step", "ceiling"],
    )?;
    let mut out = SolverConfig::default();
    for (k, slot) in [("rtol", &mut out.rtol), ("atol", &mut out.atol)] {
        if let Some((x, line)) = f.real(k)? {
            if !(x > 0.0 && x <= 1e-2) {
                return Err(cfg_err(line, &f.key(k), format!("must lie in (0, 1e-2], got {x}")));
            }
            *slot = x;
        }
    }
    out.max_step = f.positive("max_step")?;
    out.c_min = f.positive("c_min")?;
    out.c_max = f.positive("c_max")?;
    if let (Some(lo), Some(hi)) = (out.c_min, out.c_max) {
        if hi <= lo {
            let line = f.raw("c_max").unwrap().line;
            return Err(cfg_err(line, &f.key("c_max"), format!("must exceed c_min = {lo}")));
        }
    }
    out.scan_points = f.count("scan_points", 2, 10_000_000)?;
    if let Some((x, line)) = f.real("step")? {
        if !(x > 0.0 && x <= 1.0) {
            return Err(cfg_err(line, &f.key("step"), format!("must lie in (0, 1], got {x}")));
        }
        out.step = x;
    }
    if let Some(x) = f.positive("ceiling")? {
        out.ceiling = x;
    }
    Ok(out)
}

fn parse_output(b: Block) -> Result<OutputConfig> {
    let f = Fields::new("output", b, &["directory", "samples"])?;
    let mut out = OutputConfig::default();
    if let Some(e) = f.raw("directory") {
        let d = e.value.trim_matches('"');
        if d.is_empty() {
            return Err(cfg_err(e.line, &f.key("directory"), "must not be empty"));
        }
        out.directory = PathBuf::from(d);
    }
    if let Some(n) = f.count("samples", 2, 10_000_000)? {
        out.samples = n;
    }
    Ok(out)
}

fn fmt_list(xs: &[f64]) -> String {
    let inner: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", inner.join(", "))
}

impl ProblemConfig {
    /// Text form accepted by [`parse_config`]; numbers are written with
    /// round-trip precision.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &self.weight;
        let _ = writeln!(s, "weight {{");
        let _ = writeln!(s, "    T = {:?}", w.period);
        match &w.source {
            WeightSource::Step { breaks, values } => {
                let _ = writeln!(s, "    breaks = {}", fmt_list(breaks));
                let _ = writeln!(s, "    values = {}", fmt_list(values));
            }
            WeightSource::Samples(p) => {
                let _ = writeln!(s, "    samples_file = {}", p.display());
            }
        }
        let _ = writeln!(s, "}}");
        let n = &self.nonlinearity;
        let _ = writeln!(s, "nonlinearity {{");
        let _ = writeln!(s, "    kind = {}", n.kind.name());
        let _ = writeln!(s, "    p = {:?}", n.p);
        if let Some(k) = n.kappa {
            let _ = writeln!(s, "    kappa = {k:?}");
        }
        let _ = writeln!(s, "    lambda = {:?}", n.lambda);
        let _ = writeln!(s, "}}");
        let _ = writeln!(s, "bc = {}", self.bc.name());
        let v = &self.solver;
        let _ = writeln!(s, "solver {{");
        let _ = writeln!(s, "    rtol = {:?}", v.rtol);
        let _ = writeln!(s, "    atol = {:?}", v.atol);
        for (k, x) in [("max_step", v.max_step), ("c_min", v.c_min), ("c_max", v.c_max)] {
            if let Some(x) = x {
                let _ = writeln!(s, "    {k} = {x:?}");
            }
        }
        if let Some(n) = v.scan_points {
            let _ = writeln!(s, "    scan_points = {n}");
        }
        let _ = writeln!(s, "    step = {:?}", v.step);
        let _ = writeln!(s, "    ceiling = {:?}", v.ceiling);
        let _ = writeln!(s, "}}");
        let _ = writeln!(s, "output {{");
        let _ = writeln!(s, "    directory = {}", self.output.directory.display());
        let _ = writeln!(s, "    samples = {}", self.output.samples);
        let _ = writeln!(s, "}}");
        s
    }

    pub fn weight_function(&self) -> Result<WeightFunction> {
        let w = &self.weight;
        match &w.source {
            WeightSource::Step { breaks, values } => WeightFunction::step(breaks, values, w.period),
            WeightSource::Samples(path) => {
                let text = std::fs::read_to_string(path)?;
                let (mut t, mut a) = (Vec::new(), Vec::new());
                for (i, line) in text.lines().enumerate() {
                    let line = strip_comment(line).trim();
                    if line.is_empty() {
                        continue;
                    }
                    let cols: Vec<f64> = line
                        .split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| cfg_err(i + 1, "weight.samples_file", format!("malformed row `{line}`")))?;
                    if cols.len() != 2 {
                        return Err(cfg_err(i + 1, "weight.samples_file", "expected two columns"));
                    }
                    t.push(cols[0]);
                    a.push(cols[1]);
                }
                WeightFunction::sampled(w.period, t, a)
            }
        }
    }

    pub fn nonlinearity_fn(&self) -> Result<Nonlinearity> {
        let n = &self.nonlinearity;
        Nonlinearity::make_builtin(n.kind, n.p, n.kappa, None)
    }

    pub fn problem(&self) -> Result<Problem> {
        let mut p = Problem::new(self.weight_function()?, self.nonlinearity_fn()?, self.bc);
        p.lambda = self.nonlinearity.lambda;
        p.tol = Tolerances { rel: self.solver.rtol, abs: self.solver.atol };
        if let Some(h) = self.solver.max_step {
            p.max_step = Some(h);
        }
        Ok(p)
    }

    /// Scan range with the configured overrides applied to the defaults.
    pub fn scan(&self, problem: &Problem) -> ScanOptions {
        let d = ScanOptions::default_for(problem);
        let c_min = self.solver.c_min.unwrap_or(d.c_min);
        let c_max = self.solver.c_max.unwrap_or(d.c_max).max(c_min * 2.0);
        let n_points = self.solver.scan_points.unwrap_or((600.0 * (c_max - c_min)).ceil().max(2.0) as usize);
        ScanOptions { c_min, c_max, n_points }
    }

    pub fn continuation(&self) -> ContinuationOptions {
        ContinuationOptions { step: self.solver.step, ceiling: self.solver.ceiling }
    }
}
