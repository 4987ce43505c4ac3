//! Run configuration files.
//!
//! A config is a list of `key = value` lines grouped under `[section]`
//! headers, with `seed` and `output` allowed before the first header.
//! Comments start with `#` (at line start, or after whitespace). Every key
//! is checked against the list for its section, so a misspelled parameter
//! is an error rather than a silent default.
//!
//! ```text
//! seed = 7
//! output = out/chaotic
//!
//! [grid]
//! n = 32
//!
//! [physics]
//! mu = 0.02
//! beta = 0.01
//! r = 3
//! forcing = kolmogorov(4, 0.3)
//!
//! [stepper]
//! dt = 0.02
//! t_end = 50
//!
//! [experiment]
//! kind = lyapunov
//! m = 12
//! t_total = 60
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use cbf_core::operators::check_exponent;
use cbf_core::{make_grid, CflPolicy, ForcingSpec, StepperConfig};

use crate::error::{at, CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridBlock {
    pub n: usize,
    pub l: f64,
    pub pad: usize,
}

/// Forcing as written in a config.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    Kolmogorov { wavenumber: i64, amplitude: f64 },
    TaylorGreen { amplitude: f64 },
    Vortex { width: f64, amplitude: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsBlock {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r: u32,
    pub forcing: Forcing,
    /// Restrict the forcing to the centred disc of this radius.
    pub forcing_mask: Option<f64>,
    pub kappa_tilde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperBlock {
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub record_every: usize,
    pub policy: CflPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Zero,
    /// Random divergence-free field drawn from the run seed.
    Random { amplitude: f64, decay: f64 },
    TaylorGreen { amplitude: f64 },
    Vortex { width: f64, amplitude: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentStart {
    Random,
    Lowest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentKind {
    Simulate,
    EnergyAudit,
    Absorbing,
    Frechet,
    Lyapunov,
    Semicontinuity,
    Verify,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Simulate,
        ExperimentKind::EnergyAudit,
        ExperimentKind::Absorbing,
        ExperimentKind::Frechet,
        ExperimentKind::Lyapunov,
        ExperimentKind::Semicontinuity,
        ExperimentKind::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::EnergyAudit => "energy-audit",
            ExperimentKind::Absorbing => "absorbing",
            ExperimentKind::Frechet => "frechet",
            ExperimentKind::Lyapunov => "lyapunov",
            ExperimentKind::Semicontinuity => "semicontinuity",
            ExperimentKind::Verify => "verify",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

/// Experiment selection with its own parameters.
///
/// The stepper block's `t_end` is the run length for `simulate`, `absorbing`
/// and `frechet`, and a spin-up for `energy-audit` and `lyapunov`.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Simulate { snapshot_every: Option<usize> },
    /// Richardson ladder from `audit_dt` (the stepper's `dt` when unset).
    EnergyAudit { levels: usize, audit_dt: Option<f64> },
    /// `ensemble` initial conditions with norms spread up to `max_factor * M1`.
    Absorbing { ensemble: usize, max_factor: f64 },
    Frechet { eps_max: f64, eps_levels: usize, eps_ratio: f64 },
    Lyapunov { m: usize, t_total: f64, t_ortho: f64, transient: Option<f64>, init: TangentStart },
    Semicontinuity { radii: Vec<f64>, transient: f64, count: usize, spacing: f64, epsilon_rel: f64 },
    /// Property checks on `samples` random fields plus short runs.
    Verify { samples: usize, levels: usize },
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::Simulate { .. } => ExperimentKind::Simulate,
            Experiment::EnergyAudit { .. } => ExperimentKind::EnergyAudit,
            Experiment::Absorbing { .. } => ExperimentKind::Absorbing,
            Experiment::Frechet { .. } => ExperimentKind::Frechet,
            Experiment::Lyapunov { .. } => ExperimentKind::Lyapunov,
            Experiment::Semicontinuity { .. } => ExperimentKind::Semicontinuity,
            Experiment::Verify { .. } => ExperimentKind::Verify,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub grid: GridBlock,
    pub physics: PhysicsBlock,
    pub stepper: StepperBlock,
    pub initial: Initial,
    pub experiment: Experiment,
}

impl RunConfig {
    pub fn forcing_spec(&self) -> ForcingSpec {
        let base = match &self.physics.forcing {
            Forcing::Zero => ForcingSpec::Zero,
            Forcing::Kolmogorov { wavenumber, amplitude } => {
                ForcingSpec::Kolmogorov { wavenumber: *wavenumber, amplitude: *amplitude }
            }
            Forcing::TaylorGreen { amplitude } => ForcingSpec::TaylorGreen { amplitude: *amplitude },
            Forcing::Vortex { width, amplitude } => ForcingSpec::Vortex { width: *width, amplitude: *amplitude },
            Forcing::File(p) => ForcingSpec::File(p.clone()),
        };
        match self.physics.forcing_mask {
            Some(r) => base.masked(r),
            None => base,
        }
    }

    pub fn stepper_config(&self) -> StepperConfig {
        let s = &self.stepper;
        let mut c = StepperConfig::new(s.dt, s.t_end);
        c.cfl = s.cfl;
        c.record_every = s.record_every;
        c.policy = s.policy;
        c
    }
}

const SECTIONS: [&str; 5] = ["grid", "physics", "stepper", "initial", "experiment"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Keys of one section, consumed as they are interpreted.
#[derive(Debug)]
struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn label(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn raw(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn get<T: Value>(&mut self, key: &str) -> Result<Option<(T, usize)>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => T::parse_value(&e.value)
                .map(|v| Some((v, e.line)))
                .ok_or_else(|| at(e.line, format!("{} expects {}, got `{}`", self.label(key), T::EXPECTED, e.value))),
        }
    }

    fn or<T: Value>(&mut self, key: &str, default: T) -> Result<(T, usize)> {
        let line = self.line;
        Ok(self.get(key)?.unwrap_or((default, line)))
    }

    fn require<T: Value>(&mut self, key: &str) -> Result<(T, usize)> {
        let (name, line) = (self.name.clone(), self.line);
        self.get(key)?.ok_or_else(|| {
            if name.is_empty() {
                CliError::Missing(format!("missing top-level key `{key}`"))
            } else {
                at(line, format!("missing key `{key}` in [{name}]"))
            }
        })
    }

    /// Fails on the first key nobody asked for.
    fn finish(self) -> Result<()> {
        match self.entries.iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((k, e)) => {
                let place = if self.name.is_empty() { "at top level".to_string() } else { format!("in [{}]", self.name) };
                Err(at(e.line, format!("unknown key `{k}` {place}")))
            }
        }
    }
}

trait Value: Sized {
    const EXPECTED: &'static str;
    fn parse_value(s: &str) -> Option<Self>;
}

impl Value for f64 {
    const EXPECTED: &'static str = "a finite number";
    fn parse_value(s: &str) -> Option<Self> {
        s.parse::<f64>().ok().filter(|x| x.is_finite())
    }
}

impl Value for usize {
    const EXPECTED: &'static str = "a nonnegative integer";
    fn parse_value(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Value for u64 {
    const EXPECTED: &'static str = "a nonnegative integer";
    fn parse_value(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Value for u32 {
    const EXPECTED: &'static str = "a nonnegative integer";
    fn parse_value(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Value for String {
    const EXPECTED: &'static str = "a string";
    fn parse_value(s: &str) -> Option<Self> {
        Some(s.to_string())
    }
}

impl Value for Vec<f64> {
    const EXPECTED: &'static str = "a comma-separated list of numbers";
    fn parse_value(s: &str) -> Option<Self> {
        s.split(',').map(|x| f64::parse_value(x.trim())).collect()
    }
}

fn strip_comment(line: &str) -> &str {
    if line.trim_start().starts_with('#') {
        return "";
    }
    let bytes = line.as_bytes();
    for i in 1..bytes.len() {
        if bytes[i] == b'#' && bytes[i - 1].is_ascii_whitespace() {
            return &line[..i];
        }
    }
    line
}

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    sections.insert(String::new(), Section { name: String::new(), line: 1, entries: BTreeMap::new() });
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| at(line, format!("malformed section header `{content}`")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(at(line, format!("unknown section [{name}]; expected one of {}", SECTIONS.join(", "))));
            }
            if let Some(prev) = sections.get(name) {
                return Err(at(line, format!("section [{name}] repeated; first opened on line {}", prev.line)));
            }
            sections.insert(name.to_string(), Section { name: name.to_string(), line, entries: BTreeMap::new() });
            current = name.to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| at(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(at(line, "empty key"));
        }
        let section = sections.get_mut(&current).expect("current section exists");
        if let Some(prev) = section.entries.get(key) {
            return Err(at(
                line,
                format!("duplicate key `{}` (first set on line {}, again on line {line})", section.label(key), prev.line),
            ));
        }
        section.entries.insert(key.to_string(), Entry { value: value.to_string(), line });
    }
    Ok(sections)
}

/// Splits `name(a, b)` into its name and arguments; a bare word has none.
fn parse_call(s: &str) -> Option<(&str, Vec<&str>)> {
    match s.split_once('(') {
        None => Some((s.trim(), Vec::new())),
        Some((name, rest)) => {
            let inner = rest.trim_end().strip_suffix(')')?;
            let args = if inner.trim().is_empty() { Vec::new() } else { inner.split(',').map(str::trim).collect() };
            Some((name.trim(), args))
        }
    }
}

fn numbers(args: &[&str], count: usize) -> Option<Vec<f64>> {
    if args.len() != count {
        return None;
    }
    args.iter().map(|a| f64::parse_value(a)).collect()
}

fn parse_forcing(s: &str) -> Option<Forcing> {
    let (name, args) = parse_call(s)?;
    match name {
        "zero" if args.is_empty() => Some(Forcing::Zero),
        "kolmogorov" if args.len() == 2 => Some(Forcing::Kolmogorov {
            wavenumber: args[0].parse().ok()?,
            amplitude: f64::parse_value(args[1])?,
        }),
        "taylor-green" => numbers(&args, 1).map(|v| Forcing::TaylorGreen { amplitude: v[0] }),
        "vortex" => numbers(&args, 2).map(|v| Forcing::Vortex { width: v[0], amplitude: v[1] }),
        "file" if args.len() == 1 && !args[0].is_empty() => Some(Forcing::File(PathBuf::from(args[0]))),
        _ => None,
    }
}

fn render_forcing(f: &Forcing) -> String {
    match f {
        Forcing::Zero => "zero".into(),
        Forcing::Kolmogorov { wavenumber, amplitude } => format!("kolmogorov({wavenumber}, {amplitude:?})"),
        Forcing::TaylorGreen { amplitude } => format!("taylor-green({amplitude:?})"),
        Forcing::Vortex { width, amplitude } => format!("vortex({width:?}, {amplitude:?})"),
        Forcing::File(p) => format!("file({})", p.display()),
    }
}

fn positive(v: f64, line: usize, what: &str) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(at(line, format!("{what} must be positive, got {v}")))
    }
}

fn nonnegative(v: f64, line: usize, what: &str) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(at(line, format!("{what} must be nonnegative, got {v}")))
    }
}

fn take_section(sections: &mut BTreeMap<String, Section>, name: &str) -> Result<Section> {
    sections.remove(name).ok_or_else(|| CliError::Missing(format!("missing section [{name}]")))
}

fn parse_grid(mut s: Section) -> Result<GridBlock> {
    let (n, n_line) = s.require::<usize>("n")?;
    let (l, l_line) = s.or("l", 2.0 * std::f64::consts::PI)?;
    let (pad, _) = s.or("pad", 2usize)?;
    s.finish()?;
    positive(l, l_line, "grid.l")?;
    make_grid(n, l, pad).map_err(|e| at(n_line, e.to_string()))?;
    Ok(GridBlock { n, l, pad })
}

fn parse_physics(mut s: Section) -> Result<PhysicsBlock> {
    let (mu, mu_line) = s.require::<f64>("mu")?;
    let (alpha, a_line) = s.or("alpha", 0.0)?;
    let (beta, b_line) = s.or("beta", 0.0)?;
    let (r, r_line) = s.or("r", 1u32)?;
    let forcing = match s.raw("forcing") {
        None => Forcing::Zero,
        Some(e) => parse_forcing(&e.value).ok_or_else(|| {
            at(
                e.line,
                format!(
                    "physics.forcing expects zero, kolmogorov(k, A), taylor-green(A), vortex(w, A) or file(path), got `{}`",
                    e.value
                ),
            )
        })?,
    };
    let forcing_mask = match s.get::<f64>("forcing_mask")? {
        Some((v, line)) => Some(nonnegative(v, line, "physics.forcing_mask")?),
        None => None,
    };
    let (kappa_tilde, k_line) = s.or("kappa_tilde", 1.0)?;
    s.finish()?;
    positive(mu, mu_line, "physics.mu")?;
    nonnegative(alpha, a_line, "physics.alpha")?;
    nonnegative(beta, b_line, "physics.beta")?;
    positive(kappa_tilde, k_line, "physics.kappa_tilde")?;
    check_exponent(r).map_err(|e| at(r_line, e.to_string()))?;
    Ok(PhysicsBlock { mu, alpha, beta, r, forcing, forcing_mask, kappa_tilde })
}

fn parse_stepper(mut s: Section) -> Result<StepperBlock> {
    let (dt, line) = s.require::<f64>("dt")?;
    let (t_end, _) = s.require::<f64>("t_end")?;
    let (cfl, _) = s.or("cfl", 0.5)?;
    let (record_every, _) = s.or("record_every", 1usize)?;
    let policy = match s.raw("policy") {
        None => CflPolicy::Halve,
        Some(e) => match e.value.as_str() {
            "halve" => CflPolicy::Halve,
            "error" => CflPolicy::Error,
            other => return Err(at(e.line, format!("stepper.policy expects halve or error, got `{other}`"))),
        },
    };
    s.finish()?;
    let block = StepperBlock { dt, t_end, cfl, record_every, policy };
    let mut c = StepperConfig::new(dt, t_end);
    c.cfl = cfl;
    c.record_every = record_every;
    c.validate().map_err(|e| at(line, e.to_string()))?;
    Ok(block)
}

fn parse_initial(s: Option<Section>) -> Result<Initial> {
    let Some(mut s) = s else {
        return Ok(Initial::Random { amplitude: 1.0, decay: 1.0 });
    };
    let (kind, line) = s.or("kind", "random".to_string())?;
    let init = match kind.as_str() {
        "zero" => Initial::Zero,
        "random" => {
            let (amplitude, a_line) = s.or("amplitude", 1.0)?;
            let (decay, _) = s.or("decay", 1.0)?;
            Initial::Random { amplitude: nonnegative(amplitude, a_line, "initial.amplitude")?, decay }
        }
        "taylor-green" => Initial::TaylorGreen { amplitude: s.or("amplitude", 1.0)?.0 },
        "vortex" => {
            let (width, w_line) = s.require::<f64>("width")?;
            let (amplitude, _) = s.or("amplitude", 1.0)?;
            Initial::Vortex { width: positive(width, w_line, "initial.width")?, amplitude }
        }
        "file" => Initial::File(PathBuf::from(s.require::<String>("path")?.0)),
        other => {
            return Err(at(
                line,
                format!("initial.kind expects zero, random, taylor-green, vortex or file, got `{other}`"),
            ))
        }
    };
    s.finish()?;
    Ok(init)
}

fn parse_experiment(mut s: Section) -> Result<Experiment> {
    let (kind, line) = s.require::<String>("kind")?;
    let kind: ExperimentKind = kind.parse().map_err(|e: String| at(line, e))?;
    let exp = match kind {
        ExperimentKind::Simulate => {
            let snapshot_every = match s.get::<usize>("snapshot_every")? {
                Some((0, l)) => return Err(at(l, "experiment.snapshot_every must be at least 1")),
                v => v.map(|(v, _)| v),
            };
            Experiment::Simulate { snapshot_every }
        }
        ExperimentKind::EnergyAudit => {
            let (levels, l) = s.or("levels", 4usize)?;
            if levels < 2 {
                return Err(at(l, "experiment.levels must be at least 2"));
            }
            let audit_dt = match s.get::<f64>("audit_dt")? {
                Some((v, l)) => Some(positive(v, l, "experiment.audit_dt")?),
                None => None,
            };
            Experiment::EnergyAudit { levels, audit_dt }
        }
        ExperimentKind::Absorbing => {
            let (ensemble, l) = s.or("ensemble", 10usize)?;
            if ensemble == 0 {
                return Err(at(l, "experiment.ensemble must be at least 1"));
            }
            let (max_factor, l) = s.or("max_factor", 10.0)?;
            Experiment::Absorbing { ensemble, max_factor: positive(max_factor, l, "experiment.max_factor")? }
        }
        ExperimentKind::Frechet => {
            let (eps_max, l1) = s.or("eps_max", 1e-2)?;
            let (eps_levels, l2) = s.or("eps_levels", 6usize)?;
            let (eps_ratio, l3) = s.or("eps_ratio", 0.5)?;
            positive(eps_max, l1, "experiment.eps_max")?;
            if eps_levels < 2 {
                return Err(at(l2, "experiment.eps_levels must be at least 2"));
            }
            if !(eps_ratio > 0.0 && eps_ratio < 1.0) {
                return Err(at(l3, format!("experiment.eps_ratio must lie in (0, 1), got {eps_ratio}")));
            }
            Experiment::Frechet { eps_max, eps_levels, eps_ratio }
        }
        ExperimentKind::Lyapunov => {
            let (m, l) = s.require::<usize>("m")?;
            if m == 0 || m > 64 {
                return Err(at(l, format!("experiment.m must be in 1..=64, got {m}")));
            }
            let (t_total, l) = s.require::<f64>("t_total")?;
            positive(t_total, l, "experiment.t_total")?;
            let (t_ortho, l) = s.or("t_ortho", 0.1)?;
            positive(t_ortho, l, "experiment.t_ortho")?;
            let transient = match s.get::<f64>("transient")? {
                Some((v, l)) => Some(nonnegative(v, l, "experiment.transient")?),
                None => None,
            };
            let init = match s.raw("init") {
                None => TangentStart::Random,
                Some(e) => match e.value.as_str() {
                    "random" => TangentStart::Random,
                    "lowest" => TangentStart::Lowest,
                    other => return Err(at(e.line, format!("experiment.init expects random or lowest, got `{other}`"))),
                },
            };
            Experiment::Lyapunov { m, t_total, t_ortho, transient, init }
        }
        ExperimentKind::Semicontinuity => {
            let (radii, l) = s.require::<Vec<f64>>("radii")?;
            if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
                return Err(at(l, "experiment.radii must be positive and strictly increasing"));
            }
            let (transient, l) = s.or("transient", 0.0)?;
            nonnegative(transient, l, "experiment.transient")?;
            let (count, l) = s.or("count", 20usize)?;
            if count == 0 {
                return Err(at(l, "experiment.count must be at least 1"));
            }
            let (spacing, l) = s.or("spacing", 1.0)?;
            positive(spacing, l, "experiment.spacing")?;
            let (epsilon_rel, l) = s.or("epsilon_rel", 0.1)?;
            positive(epsilon_rel, l, "experiment.epsilon_rel")?;
            Experiment::Semicontinuity { radii, transient, count, spacing, epsilon_rel }
        }
        ExperimentKind::Verify => {
            let (samples, l) = s.or("samples", 50usize)?;
            if samples == 0 {
                return Err(at(l, "experiment.samples must be at least 1"));
            }
            let (levels, l) = s.or("levels", 4usize)?;
            if levels < 2 {
                return Err(at(l, "experiment.levels must be at least 2"));
            }
            Experiment::Verify { samples, levels }
        }
    };
    s.finish()?;
    Ok(exp)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut sections = split_sections(text)?;
    let mut top = take_section(&mut sections, "")?;
    let (seed, _) = top.or("seed", 0u64)?;
    let (output, _) = top.or("output", "out".to_string())?;
    top.finish()?;
    let grid = parse_grid(take_section(&mut sections, "grid")?)?;
    let physics = parse_physics(take_section(&mut sections, "physics")?)?;
    let stepper = parse_stepper(take_section(&mut sections, "stepper")?)?;
    let initial = parse_initial(sections.remove("initial"))?;
    let experiment = parse_experiment(take_section(&mut sections, "experiment")?)?;
    Ok(RunConfig { seed, output: PathBuf::from(output), grid, physics, stepper, initial, experiment })
}

/// Renders a config that parses back to an equal value.
pub fn render_config(c: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "seed = {}", c.seed);
    let _ = writeln!(s, "output = {}", c.output.display());
    let g = &c.grid;
    let _ = write!(s, "\n[grid]\nn = {}\nl = {:?}\npad = {}\n", g.n, g.l, g.pad);
    let p = &c.physics;
    let _ = write!(
        s,
        "\n[physics]\nmu = {:?}\nalpha = {:?}\nbeta = {:?}\nr = {}\nforcing = {}\n",
        p.mu,
        p.alpha,
        p.beta,
        p.r,
        render_forcing(&p.forcing)
    );
    if let Some(m) = p.forcing_mask {
        let _ = writeln!(s, "forcing_mask = {m:?}");
    }
    let _ = writeln!(s, "kappa_tilde = {:?}", p.kappa_tilde);
    let st = &c.stepper;
    let policy = match st.policy {
        CflPolicy::Halve => "halve",
        CflPolicy::Error => "error",
    };
    let _ = write!(
        s,
        "\n[stepper]\ndt = {:?}\nt_end = {:?}\ncfl = {:?}\nrecord_every = {}\npolicy = {policy}\n",
        st.dt, st.t_end, st.cfl, st.record_every
    );
    s.push_str("\n[initial]\n");
    match &c.initial {
        Initial::Zero => s.push_str("kind = zero\n"),
        Initial::Random { amplitude, decay } => {
            let _ = write!(s, "kind = random\namplitude = {amplitude:?}\ndecay = {decay:?}\n");
        }
        Initial::TaylorGreen { amplitude } => {
            let _ = write!(s, "kind = taylor-green\namplitude = {amplitude:?}\n");
        }
        Initial::Vortex { width, amplitude } => {
            let _ = write!(s, "kind = vortex\nwidth = {width:?}\namplitude = {amplitude:?}\n");
        }
        Initial::File(p) => {
            let _ = write!(s, "kind = file\npath = {}\n", p.display());
        }
    }
    let _ = write!(s, "\n[experiment]\nkind = {}\n", c.experiment.kind());
    match &c.experiment {
        Experiment::Simulate { snapshot_every } => {
            if let Some(k) = snapshot_every {
                let _ = writeln!(s, "snapshot_every = {k}");
            }
        }
        Experiment::EnergyAudit { levels, audit_dt } => {
            let _ = writeln!(s, "levels = {levels}");
            if let Some(h) = audit_dt {
                let _ = writeln!(s, "audit_dt = {h:?}");
            }
        }
        Experiment::Absorbing { ensemble, max_factor } => {
            let _ = write!(s, "ensemble = {ensemble}\nmax_factor = {max_factor:?}\n");
        }
        Experiment::Frechet { eps_max, eps_levels, eps_ratio } => {
            let _ = write!(s, "eps_max = {eps_max:?}\neps_levels = {eps_levels}\neps_ratio = {eps_ratio:?}\n");
        }
        Experiment::Lyapunov { m, t_total, t_ortho, transient, init } => {
            let _ = write!(s, "m = {m}\nt_total = {t_total:?}\nt_ortho = {t_ortho:?}\n");
            if let Some(t) = transient {
                let _ = writeln!(s, "transient = {t:?}");
            }
            let init = match init {
                TangentStart::Random => "random",
                TangentStart::Lowest => "lowest",
            };
            let _ = writeln!(s, "init = {init}");
        }
        Experiment::Semicontinuity { radii, transient, count, spacing, epsilon_rel } => {
            let list: Vec<String> = radii.iter().map(|r| format!("{r:?}")).collect();
            let _ = write!(
                s,
                "radii = {}\ntransient = {transient:?}\ncount = {count}\nspacing = {spacing:?}\nepsilon_rel = {epsilon_rel:?}\n",
                list.join(", ")
            );
        }
        Experiment::Verify { samples, levels } => {
            let _ = write!(s, "samples = {samples}\nlevels = {levels}\n");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nn = 16\n\n[physics]\nmu = 0.1\n\n[stepper]\ndt = 0.01\nt_end = 1\n\n[experiment]\nkind = simulate\n";

    fn err_line(text: &str) -> (usize, String) {
        match parse_config(text) {
            Err(CliError::Config { line, message }) => (line, message),
            other => panic!("expected a line error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.pad, 2);
        assert_eq!(c.grid.l, 2.0 * std::f64::consts::PI);
        assert_eq!(c.stepper.cfl, 0.5);
        assert_eq!(c.physics.kappa_tilde, 1.0);
        assert_eq!((c.physics.alpha, c.physics.beta, c.physics.r), (0.0, 0.0, 1));
        assert_eq!(c.physics.forcing, Forcing::Zero);
        assert_eq!(c.seed, 0);
        assert_eq!(c.stepper.policy, CflPolicy::Halve);
    }

    #[test]
    fn exponent_four_is_rejected() {
        let text = MINIMAL.replace("mu = 0.1", "mu = 0.1\nr = 4");
        let (line, msg) = err_line(&text);
        assert_eq!(line, 6);
        assert!(msg.contains("{1, 2, 3}"), "{msg}");
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let text = MINIMAL.replace("n = 16", "n = 16\npad = 2\nn = 32");
        let (line, msg) = err_line(&text);
        assert_eq!(line, 4);
        assert!(msg.contains("line 2") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn unknown_key_and_section() {
        let (line, msg) = err_line(&MINIMAL.replace("mu = 0.1", "mu = 0.1\nnu = 0.2"));
        assert_eq!(line, 6);
        assert!(msg.contains("nu"));
        let (line, _) = err_line(&format!("{MINIMAL}\n[extra]\nx = 1\n"));
        assert_eq!(line, 14);
    }

    #[test]
    fn type_mismatch_cites_line() {
        let (line, msg) = err_line(&MINIMAL.replace("n = 16", "n = sixteen"));
        assert_eq!(line, 2);
        assert!(msg.contains("grid.n"));
    }

    #[test]
    fn missing_section_and_key() {
        let text = MINIMAL.replace("[grid]\nn = 16\n", "");
        assert!(matches!(parse_config(&text), Err(CliError::Missing(_))));
        let (line, msg) = err_line(&MINIMAL.replace("dt = 0.01\n", ""));
        assert_eq!(line, 7);
        assert!(msg.contains("dt"));
    }

    #[test]
    fn comments_and_forcing_syntax() {
        let text = MINIMAL.replace("mu = 0.1", "# viscosity\nmu = 0.1   # inline\nforcing = kolmogorov(4, 0.25)");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.physics.forcing, Forcing::Kolmogorov { wavenumber: 4, amplitude: 0.25 });
        let (line, _) = err_line(&MINIMAL.replace("mu = 0.1", "mu = 0.1\nforcing = kolmogorov(4)"));
        assert_eq!(line, 6);
    }

    #[test]
    fn render_round_trip() {
        let text = MINIMAL
            .replace("mu = 0.1", "mu = 0.1\nbeta = 0.3\nr = 3\nforcing = vortex(0.5, 2)\nforcing_mask = 1.25")
            .replace("kind = simulate", "kind = semicontinuity\nradii = 0.5, 1, 1.5, 2.5\ncount = 3");
        let c = parse_config(&text).unwrap();
        let again = parse_config(&render_config(&c)).unwrap();
        assert_eq!(c, again);
    }
}
