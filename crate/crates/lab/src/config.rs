//! Experiment configuration: a TOML document walked section by section so
//! that every problem is reported in one pass.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use toml::{Table, Value};
use viscoplate::attractor::{validate_epsilons, SamplingParams, SweepParams};
use viscoplate::dynamics::{DampingFamily, DampingSpec, ForcingSpec, MemoryCoupling, Model, NonlinearitySpec};
use viscoplate::memory::{validate_kernel, MemoryKernel};
use viscoplate::spectral::{DomainSpec, SpectralField};

use crate::error::{LabError, Result};

/// Subcommands; also the optional top-level `experiment` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    EnergyAudit,
    Decay,
    ContDep,
    Sweep,
    Dist,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Simulate,
        Experiment::EnergyAudit,
        Experiment::Decay,
        Experiment::ContDep,
        Experiment::Sweep,
        Experiment::Dist,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::EnergyAudit => "energy-audit",
            Experiment::Decay => "decay",
            Experiment::ContDep => "cont-dep",
            Experiment::Sweep => "sweep",
            Experiment::Dist => "dist",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How initial displacement and velocity are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    /// `u_k = amplitude/(1+k)²`, `v_k = velocity·(-1)^k/(1+k)²` over flat indices `k`.
    Profile {
        amplitude: f64,
        velocity: f64,
    },
    Rest,
    /// Leading coefficients in flat order, the rest zero.
    Coefficients {
        u: Vec<f64>,
        v: Vec<f64>,
    },
    /// Uniform draws on modes with every index `≤ band`, weighted by
    /// `1/(1+λ_k)²` and rescaled to phase norm `norm`.
    Random {
        norm: f64,
        band: usize,
    },
    /// Row of a trajectory or cloud CSV (`u_*`, `v_*` columns); the last row by default.
    File {
        path: PathBuf,
        row: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    pub kind: InitialKind,
    /// One initial state per factor, each a multiple of the base state.
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConfig {
    /// Perturbation size for `E_ε` and the envelope; `None` means `ε₂`.
    pub eps: Option<f64>,
    /// Dissipation residual allowance, relative to `1 + |E|`.
    pub tolerance: f64,
    /// Energy identity residual allowance, relative to `1 + |E|`.
    pub identity_tolerance: f64,
    pub slope_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorConfig {
    pub t_transient: f64,
    pub t_sample: f64,
    pub snapshots: usize,
    pub symbol_samples: usize,
    /// Also write the full history of every cloud point.
    pub write_history: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContDepConfig {
    pub epsilons: Vec<f64>,
    pub family: DampingFamily,
    pub horizon: f64,
    /// Largest allowed max/min ratio of `sup ‖w‖²/‖a_ε - a₀‖_∞` across `ε`.
    pub ratio_spread: f64,
    /// Allowed range of `sup ‖w‖²` between consecutive `ε`.
    pub contraction: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    pub family: DampingFamily,
    pub horizon: f64,
    pub tolerance: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistConfig {
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub output: PathBuf,
    pub seed: u64,
    pub model: Model,
    pub initial: InitialSpec,
    pub integrator: IntegratorConfig,
    pub energy: EnergyConfig,
    pub attractor: AttractorConfig,
    pub cont_dep: ContDepConfig,
    pub sweep: SweepConfig,
    pub dist: DistConfig,
}

impl ExperimentConfig {
    pub fn sampling(&self) -> SamplingParams {
        SamplingParams {
            dt: self.integrator.dt,
            t_transient: self.attractor.t_transient,
            t_sample: self.attractor.t_sample,
            n_snapshots: self.attractor.snapshots,
            symbol_samples: self.attractor.symbol_samples,
        }
    }

    pub fn sweep_params(&self) -> SweepParams {
        SweepParams {
            sampling: self.sampling(),
            horizon: self.sweep.horizon,
            tolerance: self.sweep.tolerance,
            slack: self.sweep.slack,
        }
    }
}

const SECTIONS: [&str; 12] = [
    "domain",
    "kernel",
    "damping",
    "nonlinearity",
    "forcing",
    "initial",
    "integrator",
    "energy",
    "attractor",
    "cont_dep",
    "sweep",
    "dist",
];

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_str(&text, &[])
}

/// Parses `text`, applies `section.key=value` overrides, and validates.
pub fn parse_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table = parse_table(text)?;
    apply_overrides(&mut table, overrides)?;
    from_table(table)
}

/// TOML syntax check; the error carries line and column.
pub fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| {
        let at = e.span().map(|span| line_col(text, span.start));
        let message = e.message().trim().to_string();
        LabError::config(match at {
            Some((line, col)) => format!("syntax error at line {line}, column {col}: {message}"),
            None => format!("syntax error: {message}"),
        })
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// `section.key=value` (or `key=value` at the top level). The value is read
/// as a TOML value and falls back to a bare string.
pub fn apply_overrides(table: &mut Table, overrides: &[String]) -> Result<()> {
    let mut errors = Vec::new();
    for item in overrides {
        let Some((path, raw)) = item.split_once('=') else {
            errors.push(format!("override {item:?} is not of the form section.key=value"));
            continue;
        };
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        let parts: Vec<&str> = path.trim().split('.').collect();
        match parts.as_slice() {
            [key] => {
                table.insert(key.to_string(), value);
            }
            [section, key] => {
                let entry = table
                    .entry(section.to_string())
                    .or_insert_with(|| Value::Table(Table::new()));
                match entry {
                    Value::Table(t) => {
                        t.insert(key.to_string(), value);
                    }
                    _ => errors.push(format!("override {item:?}: `{section}` is not a section")),
                }
            }
            _ => errors.push(format!("override {item:?} is not of the form section.key=value")),
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(LabError::Config(errors))
    }
}

// one TOML table plus the keys read from it so far
struct Section {
    name: String,
    table: Table,
    used: BTreeSet<String>,
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a float",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a datetime",
        Value::Array(_) => "an array",
        Value::Table(_) => "a table",
    }
}

fn as_f64(value: &Value) -> Option<f64> {
    match value {
        Value::Float(x) => Some(*x),
        Value::Integer(n) => Some(*n as f64),
        _ => None,
    }
}

impl Section {
    fn new(name: &str, table: Table) -> Self {
        Self {
            name: name.to_string(),
            table,
            used: BTreeSet::new(),
        }
    }

    fn present(&self) -> bool {
        !self.table.is_empty()
    }

    fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    fn get(&mut self, key: &str) -> Option<Value> {
        self.used.insert(key.to_string());
        self.table.get(key).cloned()
    }

    fn wrong(&self, key: &str, expected: &str, got: &Value, errors: &mut Vec<String>) {
        errors.push(format!(
            "[{}] {key}: expected {expected}, got {}",
            self.name,
            type_name(got)
        ));
    }

    fn opt_f64(&mut self, key: &str, errors: &mut Vec<String>) -> Option<f64> {
        let value = self.get(key)?;
        let x = as_f64(&value);
        if x.is_none() {
            self.wrong(key, "a number", &value, errors);
        }
        x
    }

    fn f64(&mut self, key: &str, default: f64, errors: &mut Vec<String>) -> f64 {
        self.opt_f64(key, errors).unwrap_or(default)
    }

    fn usize(&mut self, key: &str, default: usize, errors: &mut Vec<String>) -> usize {
        match self.get(key) {
            None => default,
            Some(Value::Integer(n)) if n >= 0 => n as usize,
            Some(value) => {
                self.wrong(key, "a nonnegative integer", &value, errors);
                default
            }
        }
    }

    fn opt_usize(&mut self, key: &str, errors: &mut Vec<String>) -> Option<usize> {
        self.has(key).then(|| self.usize(key, 0, errors))
    }

    fn bool(&mut self, key: &str, default: bool, errors: &mut Vec<String>) -> bool {
        match self.get(key) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(value) => {
                self.wrong(key, "a boolean", &value, errors);
                default
            }
        }
    }

    fn opt_string(&mut self, key: &str, errors: &mut Vec<String>) -> Option<String> {
        match self.get(key)? {
            Value::String(s) => Some(s),
            value => {
                self.wrong(key, "a string", &value, errors);
                None
            }
        }
    }

    fn string(&mut self, key: &str, default: &str, errors: &mut Vec<String>) -> String {
        self.opt_string(key, errors).unwrap_or_else(|| default.to_string())
    }

    fn opt_f64_list(&mut self, key: &str, errors: &mut Vec<String>) -> Option<Vec<f64>> {
        let value = self.get(key)?;
        let list = match &value {
            Value::Array(items) => items.iter().map(as_f64).collect::<Option<Vec<f64>>>(),
            _ => None,
        };
        if list.is_none() {
            self.wrong(key, "an array of numbers", &value, errors);
        }
        list
    }

    fn f64_list(&mut self, key: &str, default: &[f64], errors: &mut Vec<String>) -> Vec<f64> {
        self.opt_f64_list(key, errors).unwrap_or_else(|| default.to_vec())
    }

    fn opt_pairs(&mut self, key: &str, errors: &mut Vec<String>) -> Option<Vec<(f64, f64)>> {
        let value = self.get(key)?;
        let pairs = match &value {
            Value::Array(items) => items
                .iter()
                .map(|item| match item {
                    Value::Array(p) if p.len() == 2 => Some((as_f64(&p[0])?, as_f64(&p[1])?)),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>(),
            _ => None,
        };
        if pairs.is_none() {
            self.wrong(key, "an array of [t, value] pairs", &value, errors);
        }
        pairs
    }

    fn require_f64(&mut self, key: &str, context: &str, errors: &mut Vec<String>) -> f64 {
        if !self.has(key) {
            errors.push(format!("[{}] {key} is required for {context}", self.name));
            self.used.insert(key.to_string());
            return f64::NAN;
        }
        self.f64(key, f64::NAN, errors)
    }

    /// Reports keys nobody read.
    fn finish(self, errors: &mut Vec<String>) {
        for key in self.table.keys() {
            if !self.used.contains(key) {
                errors.push(format!("[{}] unknown key `{key}`", self.name));
            }
        }
    }

    /// Accepts every key, used after an invalid `kind` to avoid noise.
    fn abandon(self) {}
}

fn take_section(root: &mut Table, name: &str, errors: &mut Vec<String>) -> Section {
    match root.remove(name) {
        None => Section::new(name, Table::new()),
        Some(Value::Table(t)) => Section::new(name, t),
        Some(other) => {
            errors.push(format!("`{name}` must be a section, got {}", type_name(&other)));
            Section::new(name, Table::new())
        }
    }
}

fn unknown_kind(section: &Section, kind: &str, allowed: &[&str], errors: &mut Vec<String>) {
    errors.push(format!(
        "[{}] kind: unknown kind {kind:?}, expected one of {}",
        section.name,
        allowed.join(", ")
    ));
}

/// Builds and validates the configuration from a parsed table.
pub fn from_table(mut root: Table) -> Result<ExperimentConfig> {
    let mut errors = Vec::new();
    let mut top = Section::new("top level", Table::new());

    let mut sections: Vec<Section> = SECTIONS
        .iter()
        .map(|s| take_section(&mut root, s, &mut errors))
        .collect();
    top.table = root;
    for (key, value) in top.table.iter() {
        if value.is_table() {
            errors.push(format!("unknown section [{key}]"));
        }
    }
    top.table.retain(|_, v| !v.is_table());

    let experiment = top.opt_string("experiment", &mut errors).and_then(|name| {
        let parsed = Experiment::parse(&name);
        if parsed.is_none() {
            errors.push(format!(
                "[top level] experiment: unknown experiment {name:?}, expected one of {}",
                Experiment::ALL.map(|e| e.name()).join(", ")
            ));
        }
        parsed
    });
    let output = PathBuf::from(top.string("output", "out", &mut errors));
    let seed = match top.get("seed") {
        None => 0,
        Some(Value::Integer(n)) if n >= 0 => n as u64,
        Some(value) => {
            top.wrong("seed", "a nonnegative integer", &value, &mut errors);
            0
        }
    };
    top.finish(&mut errors);

    let mut it = sections.drain(..);
    let mut next = || it.next().expect("one section per name");
    let domain = read_domain(next(), &mut errors);
    let kernel = read_kernel(next(), &mut errors);
    let damping = read_damping(next(), &mut errors);
    let nonlinearity = read_nonlinearity(next(), &mut errors);
    let forcing = read_forcing(next(), domain, &mut errors);
    let initial = read_initial(next(), &mut errors);
    let (integrator, coupling) = read_integrator(next(), &mut errors);
    let energy = read_energy(next(), &mut errors);
    let attractor = read_attractor(next(), &mut errors);
    let cont_dep = read_cont_dep(next(), &mut errors);
    let sweep = read_sweep(next(), &mut errors);
    let dist = read_dist(next(), &mut errors);

    let mut model = None;
    if let (Some(domain), Some(damping), Some(nonlinearity), Some(forcing)) = (domain, &damping, &nonlinearity, forcing)
    {
        let mut m = Model::new(domain, damping.clone())
            .with_nonlinearity(nonlinearity.clone())
            .with_forcing(forcing)
            .with_coupling(coupling);
        if let Some((kernel, tail)) = kernel {
            m = m.with_kernel(kernel);
            if let Some(tail) = tail {
                m = m.with_tail_tolerance(tail);
            }
        }
        if let Err(e) = m.validate() {
            match e {
                viscoplate::Error::Invalid(list) => errors.extend(list),
                other => errors.push(other.to_string()),
            }
        }
        if integrator.dt > m.stability_limit() {
            errors.push(format!(
                "[integrator] dt = {} exceeds the stability limit 2.5/lambda_max = {}",
                integrator.dt,
                m.stability_limit()
            ));
        }
        if let InitialKind::Coefficients { u, v } = &initial.kind {
            if u.len() > domain.len() || v.len() > domain.len() {
                errors.push(format!(
                    "[initial] coefficient lists longer than the {} modes of the domain",
                    domain.len()
                ));
            }
        }
        model = Some(m);
    } else {
        // the model is incomplete; still report what its parts can check alone
        if let Some((kernel, tail)) = &kernel {
            let report = validate_kernel(kernel, tail.unwrap_or_else(|| kernel.default_tail_tolerance()));
            errors.extend(
                report
                    .failures()
                    .map(|f| format!("kernel fails {}: {}", f.condition.label(), f.detail)),
            );
        }
        if let Some(damping) = &damping {
            errors.extend(damping.validate());
        }
        if let (Some(nonlinearity), Some(domain)) = (&nonlinearity, domain) {
            errors.extend(nonlinearity.validate(domain.dim()));
        }
    }

    if errors.is_empty() {
        Ok(ExperimentConfig {
            experiment,
            output,
            seed,
            model: model.expect("no errors means every section was built"),
            initial,
            integrator,
            energy,
            attractor,
            cont_dep,
            sweep,
            dist,
        })
    } else {
        Err(LabError::Config(errors))
    }
}

fn read_domain(mut s: Section, errors: &mut Vec<String>) -> Option<DomainSpec> {
    let dim = s.usize("dim", 1, errors);
    let modes = s.usize("modes", 8, errors);
    let grid = s.usize("grid", 2 * modes, errors);
    s.finish(errors);
    match DomainSpec::new(dim, modes, grid) {
        Ok(d) => Some(d),
        Err(e) => {
            errors.push(format!("[domain] {}", strip(&e)));
            None
        }
    }
}

fn strip(e: &viscoplate::Error) -> String {
    match e {
        viscoplate::Error::Config(m) | viscoplate::Error::Argument(m) => m.clone(),
        other => other.to_string(),
    }
}

fn read_kernel(mut s: Section, errors: &mut Vec<String>) -> Option<(MemoryKernel, Option<f64>)> {
    if !s.present() {
        return None;
    }
    let amplitude = s.f64("amplitude", 1.0, errors);
    let decay_rate = s.f64("decay_rate", 1.0, errors);
    let mut kernel = MemoryKernel::new(amplitude, decay_rate);
    if let Some(t) = s.opt_f64("truncation", errors) {
        kernel = kernel.with_truncation(t);
    }
    let tail = s.opt_f64("tail_tolerance", errors);
    s.finish(errors);
    Some((kernel, tail))
}

fn read_damping(mut s: Section, errors: &mut Vec<String>) -> Option<DampingSpec> {
    let kind = s.string("kind", "paper", errors);
    let spec = match kind.as_str() {
        "paper" => {
            let epsilon = s.f64("epsilon", 0.0, errors);
            let zeta = s.f64("zeta", 0.5, errors);
            Some(DampingSpec::paper_family(epsilon, zeta))
        }
        "constant" => Some(DampingSpec::constant(s.f64("value", 1.0, errors))),
        "tabulated" => match s.opt_pairs("points", errors) {
            None => {
                if !s.has("points") {
                    errors.push("[damping] points is required for tabulated damping".into());
                }
                None
            }
            Some(points) => match DampingSpec::tabulated(points) {
                Ok(d) => Some(d),
                Err(e) => {
                    errors.push(format!("[damping] {}", strip(&e)));
                    None
                }
            },
        },
        other => {
            unknown_kind(&s, other, &["paper", "constant", "tabulated"], errors);
            s.abandon();
            return None;
        }
    };
    let lower = s.opt_f64("lower", errors);
    let upper = s.opt_f64("upper", errors);
    s.finish(errors);
    let spec = spec?;
    let (l, u) = (lower.unwrap_or(spec.lower), upper.unwrap_or(spec.upper));
    Some(spec.with_bounds(l, u))
}

fn read_nonlinearity(mut s: Section, errors: &mut Vec<String>) -> Option<NonlinearitySpec> {
    let kind = s.string("kind", "zero", errors);
    let spec = match kind.as_str() {
        "zero" => Some(NonlinearitySpec::zero()),
        "cubic" => Some(NonlinearitySpec::cubic()),
        "odd-power" => Some(NonlinearitySpec::odd_power(s.require_f64(
            "exponent",
            "odd-power f",
            errors,
        ))),
        "tabulated" => {
            let nodes = s.opt_f64_list("nodes", errors);
            let values = s.opt_f64_list("values", errors);
            let p = s.require_f64("growth_exponent", "tabulated f", errors);
            let m_f = s.require_f64("m_f", "tabulated f", errors);
            let c_f = s.f64("c_f", 0.0, errors);
            match (nodes, values) {
                (Some(nodes), Some(values)) => match NonlinearitySpec::tabulated(nodes, values, p, m_f, c_f) {
                    Ok(spec) => Some(spec),
                    Err(e) => {
                        errors.push(format!("[nonlinearity] {}", strip(&e)));
                        None
                    }
                },
                _ => {
                    errors.push("[nonlinearity] nodes and values are required for tabulated f".into());
                    None
                }
            }
        }
        other => {
            unknown_kind(&s, other, &["zero", "cubic", "odd-power", "tabulated"], errors);
            s.abandon();
            return None;
        }
    };
    s.finish(errors);
    spec
}

// flat coefficient list padded to the domain, optionally rescaled to an L² norm
fn read_profile(
    s: &mut Section,
    key: &str,
    norm_key: &str,
    domain: DomainSpec,
    errors: &mut Vec<String>,
) -> Option<SpectralField> {
    let coeffs = s.opt_f64_list(key, errors);
    let norm = s.opt_f64(norm_key, errors);
    let Some(mut coeffs) = coeffs else {
        if !s.has(key) {
            errors.push(format!("[forcing] {key} is required"));
        }
        return None;
    };
    if coeffs.len() > domain.len() {
        errors.push(format!(
            "[forcing] {key} has {} coefficients, the domain has {}",
            coeffs.len(),
            domain.len()
        ));
        return None;
    }
    coeffs.resize(domain.len(), 0.0);
    let mut field = SpectralField::from_coeffs(domain, coeffs).expect("length matches domain");
    if let Some(norm) = norm {
        let current = field.l2_norm_sq().sqrt();
        if !(current > 0.0) || !(norm >= 0.0) {
            errors.push(format!(
                "[forcing] {norm_key} needs a nonzero profile and a nonnegative value"
            ));
            return None;
        }
        field = field.scaled(norm / current);
    }
    Some(field)
}

fn read_forcing(mut s: Section, domain: Option<DomainSpec>, errors: &mut Vec<String>) -> Option<ForcingSpec> {
    let kind = s.string("kind", "zero", errors);
    let spec = match (kind.as_str(), domain) {
        ("zero", _) => Some(ForcingSpec::Zero),
        ("stationary", Some(d)) => read_profile(&mut s, "profile", "norm", d, errors).map(ForcingSpec::Stationary),
        ("periodic", Some(d)) => {
            let profile = read_profile(&mut s, "profile", "norm", d, errors);
            let frequency = s.require_f64("frequency", "periodic forcing", errors);
            let phase = s.f64("phase", 0.0, errors);
            profile.map(|profile| ForcingSpec::Periodic {
                profile,
                frequency,
                phase,
            })
        }
        ("quasi-periodic", Some(d)) => {
            let first = read_profile(&mut s, "profile", "norm", d, errors);
            let second = read_profile(&mut s, "second_profile", "second_norm", d, errors);
            let frequencies = s.opt_f64_list("frequencies", errors);
            let phases = s.f64_list("phases", &[0.0, 0.0], errors);
            let frequencies = match frequencies.as_deref() {
                Some([a, b]) => Some([*a, *b]),
                _ => {
                    errors.push("[forcing] frequencies must list two numbers".into());
                    None
                }
            };
            if phases.len() != 2 {
                errors.push("[forcing] phases must list two numbers".into());
            }
            match (first, second, frequencies) {
                (Some(first), Some(second), Some(frequencies)) if phases.len() == 2 => {
                    Some(ForcingSpec::QuasiPeriodic {
                        first,
                        second,
                        frequencies,
                        phases: [phases[0], phases[1]],
                    })
                }
                _ => None,
            }
        }
        ("stationary" | "periodic" | "quasi-periodic", None) => {
            s.abandon();
            return None;
        }
        (other, _) => {
            unknown_kind(&s, other, &["zero", "stationary", "periodic", "quasi-periodic"], errors);
            s.abandon();
            return None;
        }
    };
    let shift = s.f64("shift", 0.0, errors);
    s.finish(errors);
    let spec = spec?;
    Some(if shift != 0.0 { spec.shifted(shift) } else { spec })
}

fn read_initial(mut s: Section, errors: &mut Vec<String>) -> InitialSpec {
    let kind = s.string("kind", "profile", errors);
    let kind = match kind.as_str() {
        "profile" => InitialKind::Profile {
            amplitude: s.f64("amplitude", 0.8, errors),
            velocity: s.f64("velocity", 0.3, errors),
        },
        "rest" => InitialKind::Rest,
        "coefficients" => InitialKind::Coefficients {
            u: s.f64_list("u", &[], errors),
            v: s.f64_list("v", &[], errors),
        },
        "random" => {
            let norm = s.f64("norm", 1.0, errors);
            let band = s.usize("band", 4, errors);
            if !(norm >= 0.0) || band == 0 {
                errors.push("[initial] random data needs norm >= 0 and band >= 1".into());
            }
            InitialKind::Random { norm, band }
        }
        "file" => {
            let path = s.opt_string("path", errors).map(PathBuf::from);
            let row = s.opt_usize("row", errors);
            if path.is_none() {
                errors.push("[initial] path is required for file initial data".into());
            }
            InitialKind::File {
                path: path.unwrap_or_default(),
                row,
            }
        }
        other => {
            unknown_kind(
                &s,
                other,
                &["profile", "rest", "coefficients", "random", "file"],
                errors,
            );
            s.abandon();
            return InitialSpec {
                kind: InitialKind::Rest,
                scales: vec![1.0],
            };
        }
    };
    let scales = s.f64_list("scales", &[1.0], errors);
    if scales.is_empty() || scales.iter().any(|x| !x.is_finite()) {
        errors.push("[initial] scales must be a nonempty list of finite numbers".into());
    }
    s.finish(errors);
    InitialSpec { kind, scales }
}

fn read_integrator(mut s: Section, errors: &mut Vec<String>) -> (IntegratorConfig, MemoryCoupling) {
    let dt = s.f64("dt", 1e-3, errors);
    let t_end = s.f64("t_end", 10.0, errors);
    let record_stride = s.usize("record_stride", 1, errors);
    let coupling = match s.string("coupling", "evolved", errors).as_str() {
        "evolved" => MemoryCoupling::Evolved,
        "frozen" => MemoryCoupling::Frozen,
        other => {
            errors.push(format!(
                "[integrator] coupling: unknown coupling {other:?}, expected evolved or frozen"
            ));
            MemoryCoupling::Evolved
        }
    };
    s.finish(errors);
    if !(dt > 0.0) || !dt.is_finite() {
        errors.push(format!("[integrator] dt = {dt} must be positive"));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        errors.push(format!("[integrator] t_end = {t_end} must be nonnegative"));
    }
    if record_stride == 0 {
        errors.push("[integrator] record_stride must be at least 1".into());
    }
    (
        IntegratorConfig {
            dt,
            t_end,
            record_stride: record_stride.max(1),
        },
        coupling,
    )
}

fn read_energy(mut s: Section, errors: &mut Vec<String>) -> EnergyConfig {
    let config = EnergyConfig {
        eps: s.opt_f64("eps", errors),
        tolerance: s.f64("tolerance", 1e-4, errors),
        identity_tolerance: s.f64("identity_tolerance", 1e-3, errors),
        slope_slack: s.f64("slope_slack", 1e-3, errors),
    };
    s.finish(errors);
    if config.eps.is_some_and(|e| !(e > 0.0)) {
        errors.push("[energy] eps must be positive".into());
    }
    for (name, x) in [
        ("tolerance", config.tolerance),
        ("identity_tolerance", config.identity_tolerance),
        ("slope_slack", config.slope_slack),
    ] {
        if !(x >= 0.0) {
            errors.push(format!("[energy] {name} must be nonnegative"));
        }
    }
    config
}

fn read_attractor(mut s: Section, errors: &mut Vec<String>) -> AttractorConfig {
    let config = AttractorConfig {
        t_transient: s.f64("t_transient", 20.0, errors),
        t_sample: s.f64("t_sample", 10.0, errors),
        snapshots: s.usize("snapshots", 64, errors),
        symbol_samples: s.usize("symbol_samples", 4, errors),
        write_history: s.bool("write_history", false, errors),
    };
    s.finish(errors);
    if !(config.t_transient >= 0.0) || !(config.t_sample >= 0.0) {
        errors.push("[attractor] t_transient and t_sample must be nonnegative".into());
    }
    if config.snapshots == 0 {
        errors.push("[attractor] snapshots must be at least 1".into());
    }
    config
}

fn read_family(s: &mut Section, errors: &mut Vec<String>) -> DampingFamily {
    let zeta = s.f64("zeta", 0.5, errors);
    if !(zeta > 0.0) {
        errors.push(format!("[{}] zeta must be positive", s.name));
    }
    match s.string("family", "paper", errors).as_str() {
        "paper" => DampingFamily::Paper { zeta },
        "shifted" => DampingFamily::Shifted { zeta },
        other => {
            errors.push(format!(
                "[{}] family: unknown family {other:?}, expected paper or shifted",
                s.name
            ));
            DampingFamily::Paper { zeta }
        }
    }
}

fn read_cont_dep(mut s: Section, errors: &mut Vec<String>) -> ContDepConfig {
    let epsilons = s.f64_list("epsilons", &[0.4, 0.2, 0.1, 0.05], errors);
    let family = read_family(&mut s, errors);
    let horizon = s.f64("horizon", 5.0, errors);
    let ratio_spread = s.f64("ratio_spread", 2.0, errors);
    let contraction = s.f64_list("contraction", &[0.4, 0.6], errors);
    s.finish(errors);
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        errors.push("[cont_dep] epsilons must be a nonempty list in (0, 1]".into());
    }
    if !(horizon > 0.0) {
        errors.push("[cont_dep] horizon must be positive".into());
    }
    let contraction = match contraction.as_slice() {
        [lo, hi] if lo <= hi => (*lo, *hi),
        _ => {
            errors.push("[cont_dep] contraction must be [low, high] with low <= high".into());
            (0.4, 0.6)
        }
    };
    ContDepConfig {
        epsilons,
        family,
        horizon,
        ratio_spread,
        contraction,
    }
}

fn read_sweep(mut s: Section, errors: &mut Vec<String>) -> SweepConfig {
    let epsilons = s.f64_list("epsilons", &[0.4, 0.2, 0.1, 0.05, 0.0], errors);
    let family = read_family(&mut s, errors);
    let config = SweepConfig {
        epsilons,
        family,
        horizon: s.f64("horizon", 5.0, errors),
        tolerance: s.f64("tolerance", 1e-2, errors),
        slack: s.f64("slack", 1.25, errors),
    };
    s.finish(errors);
    if let Err(e) = validate_epsilons(&config.epsilons) {
        errors.push(format!("[sweep] {}", strip(&e)));
    }
    if !(config.horizon > 0.0) || !(config.tolerance >= 0.0) || !(config.slack >= 1.0) {
        errors.push("[sweep] need horizon > 0, tolerance >= 0 and slack >= 1".into());
    }
    config
}

fn read_dist(mut s: Section, errors: &mut Vec<String>) -> DistConfig {
    let config = DistConfig {
        a: s.opt_string("a", errors).map(PathBuf::from),
        b: s.opt_string("b", errors).map(PathBuf::from),
    };
    s.finish(errors);
    config
}
