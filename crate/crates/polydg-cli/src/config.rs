//! TOML run configuration: parsing with an exhaustive validation report.
//!
//! The file has five sections — `[mesh]`, `[space]`, `[physics]`, `[time]`,
//! `[output]` — all keys below. Unknown sections and keys are rejected by
//! name; all violations are collected into one error list rather than
//! reported one at a time. Physical quantities are plain SI numbers: a
//! string where a number is expected (e.g. `mu_f = "3.5e-3 Pa.s"`) is
//! rejected as a unit-suffix mismatch.

use std::fmt;
use std::path::PathBuf;

use polydg::params::{MaterialParams, PenaltyConfig};
use polydg::system::{FluidMode, TimeScheme};
use toml::Value;

/// All validation failures of one config file, one message per line.
#[derive(Debug)]
pub struct ConfigError {
    pub errors: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} error(s)):", self.errors.len())?;
        for e in &self.errors {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Mesh geometry selector for coupled runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    /// Poroelastic unit square stacked on a fluid unit square.
    Stack,
    /// Fluid pocket embedded in a tissue square, with an outlet.
    Pocket,
}

#[derive(Debug, Clone)]
pub struct MeshSpec {
    pub kind: MeshKind,
    pub nx: usize,
    pub ny: usize,
}

/// Uniform interface-compartment source `g_E(t)`: a sinusoid
/// `amplitude * sin(2 pi t / period)`, or the constant `amplitude` when no
/// period is given.
#[derive(Debug, Clone, Copy)]
pub struct SourceSpec {
    pub amplitude: f64,
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct OutputSpec {
    /// Time-series CSV path.
    pub timeseries: Option<PathBuf>,
    /// Field snapshot path pattern containing `{step}`.
    pub fields: Option<String>,
    /// Explicit snapshot times (validated against [0, T]).
    pub snapshots: Vec<f64>,
    /// Periodic snapshot interval in steps.
    pub snapshot_every: Option<usize>,
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub degree: usize,
    pub params: MaterialParams,
    /// Degree-1 baseline penalty constants; the runner scales them for the
    /// configured degree before assembling the system.
    pub penalty: PenaltyConfig,
    pub scheme: TimeScheme,
    pub steps: usize,
    pub mode: FluidMode,
    pub source: SourceSpec,
    pub output: OutputSpec,
}

impl RunConfig {
    /// Final simulation time `steps * dt`.
    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.scheme.dt
    }

    /// Snapshot step indices from both the explicit times (rounded to the
    /// nearest step) and the periodic interval, sorted and deduplicated.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = self
            .output
            .snapshots
            .iter()
            .map(|&t| (t / self.scheme.dt).round() as usize)
            .collect();
        if let Some(every) = self.output.snapshot_every {
            steps.extend((0..=self.steps).filter(|s| s % every == 0));
        }
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

/// Typed access to one section's keys, collecting errors by full key path.
struct Section<'a> {
    name: &'a str,
    table: Option<&'a toml::map::Map<String, Value>>,
    errors: &'a mut Vec<String>,
}

impl<'a> Section<'a> {
    fn check_known_keys(&mut self, known: &[&str]) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !known.contains(&k.as_str()) {
                    self.errors.push(format!("unknown key `{}.{}`", self.name, k));
                }
            }
        }
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    /// A float-valued key; strings are rejected as unit-suffix mismatches.
    fn float(&mut self, key: &str) -> Option<f64> {
        match self.raw(key) {
            None => None,
            Some(Value::Float(v)) => Some(*v),
            Some(Value::Integer(v)) => Some(*v as f64),
            Some(Value::String(s)) => {
                self.errors.push(format!(
                    "unit suffix not accepted for `{}.{}` (write plain SI numbers): {s:?}",
                    self.name, key
                ));
                None
            }
            Some(other) => {
                self.errors.push(format!(
                    "`{}.{}` must be a number, found {}",
                    self.name,
                    key,
                    other.type_str()
                ));
                None
            }
        }
    }

    fn float_required(&mut self, key: &str, default: Option<f64>) -> f64 {
        match self.float(key) {
            Some(v) => v,
            None => {
                if self.raw(key).is_none() {
                    if let Some(d) = default {
                        return d;
                    }
                    self.errors.push(format!("missing key `{}.{}`", self.name, key));
                }
                default.unwrap_or(f64::NAN)
            }
        }
    }

    fn integer(&mut self, key: &str) -> Option<i64> {
        match self.raw(key) {
            None => None,
            Some(Value::Integer(v)) => Some(*v),
            Some(Value::String(s)) => {
                self.errors.push(format!(
                    "unit suffix not accepted for `{}.{}` (write plain SI numbers): {s:?}",
                    self.name, key
                ));
                None
            }
            Some(other) => {
                self.errors.push(format!(
                    "`{}.{}` must be an integer, found {}",
                    self.name,
                    key,
                    other.type_str()
                ));
                None
            }
        }
    }

    fn positive_count(&mut self, key: &str, default: Option<usize>) -> usize {
        match self.integer(key) {
            Some(v) if v >= 1 => v as usize,
            Some(v) => {
                self.errors
                    .push(format!("`{}.{}` must be >= 1, found {v}", self.name, key));
                default.unwrap_or(1)
            }
            None => {
                if self.raw(key).is_none() {
                    if let Some(d) = default {
                        return d;
                    }
                    self.errors.push(format!("missing key `{}.{}`", self.name, key));
                }
                default.unwrap_or(1)
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.raw(key) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => {
                self.errors.push(format!(
                    "`{}.{}` must be a string, found {}",
                    self.name,
                    key,
                    other.type_str()
                ));
                None
            }
        }
    }

    fn float_array(&mut self, key: &str) -> Vec<f64> {
        match self.raw(key) {
            None => Vec::new(),
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    match item {
                        Value::Float(v) => out.push(*v),
                        Value::Integer(v) => out.push(*v as f64),
                        other => self.errors.push(format!(
                            "`{}.{}[{}]` must be a number, found {}",
                            self.name,
                            key,
                            i,
                            other.type_str()
                        )),
                    }
                }
                out
            }
            Some(other) => {
                self.errors.push(format!(
                    "`{}.{}` must be an array of numbers, found {}",
                    self.name,
                    key,
                    other.type_str()
                ));
                Vec::new()
            }
        }
    }
}

/// Parse and validate a config file.
pub fn parse_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        errors: vec![format!("cannot read {}: {e}", path.display())],
    })?;
    parse_config_str(&text)
}

/// Parse and validate config text.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = text.parse().map_err(|e| ConfigError {
        errors: vec![format!("TOML syntax: {e}")],
    })?;
    let root = match value {
        Value::Table(t) => t,
        _ => {
            return Err(ConfigError {
                errors: vec!["top level must be a table".into()],
            })
        }
    };

    let mut errors: Vec<String> = Vec::new();
    for k in root.keys() {
        if !["mesh", "space", "physics", "time", "output"].contains(&k.as_str()) {
            errors.push(format!("unknown section `[{k}]`"));
        }
    }
    let table_of = |name: &str, errors: &mut Vec<String>| match root.get(name) {
        None => None,
        Some(Value::Table(t)) => Some(t),
        Some(_) => {
            errors.push(format!("`[{name}]` must be a table"));
            None
        }
    };

    // [mesh]
    let mesh_table = table_of("mesh", &mut errors);
    if mesh_table.is_none() && !root.contains_key("mesh") {
        errors.push("missing section `[mesh]`".into());
    }
    let mut mesh = Section { name: "mesh", table: mesh_table, errors: &mut errors };
    mesh.check_known_keys(&["kind", "nx", "ny"]);
    let kind = match mesh.string("kind").as_deref() {
        Some("stack") => MeshKind::Stack,
        Some("pocket") => MeshKind::Pocket,
        Some(other) => {
            mesh.errors
                .push(format!("`mesh.kind` must be \"stack\" or \"pocket\", found {other:?}"));
            MeshKind::Stack
        }
        None => {
            if mesh.table.is_some() {
                mesh.errors.push("missing key `mesh.kind`".into());
            }
            MeshKind::Stack
        }
    };
    let nx = mesh.positive_count("nx", None);
    let ny = mesh.positive_count("ny", None);
    if kind == MeshKind::Pocket {
        if nx % 4 != 0 {
            errors.push(format!("`mesh.nx` must be a multiple of 4 for the pocket mesh, found {nx}"));
        }
        if ny % 2 != 0 {
            errors.push(format!("`mesh.ny` must be even for the pocket mesh, found {ny}"));
        }
    }

    // [space]
    let space_table = table_of("space", &mut errors);
    if space_table.is_none() && !root.contains_key("space") {
        errors.push("missing section `[space]`".into());
    }
    let mut space = Section { name: "space", table: space_table, errors: &mut errors };
    space.check_known_keys(&["degree", "eta", "zeta", "gamma_v", "gamma_p"]);
    let degree = space.positive_count("degree", None);
    if degree > 6 {
        errors.push(format!("`space.degree` must be between 1 and 6, found {degree}"));
    }
    let mut space = Section { name: "space", table: space_table, errors: &mut errors };
    let mut penalty = PenaltyConfig::default();
    if let Some(v) = space.float("eta") {
        penalty.eta_bar = v;
    }
    if let Some(v) = space.float("zeta") {
        penalty.zeta_bar = v;
    }
    if let Some(v) = space.float("gamma_v") {
        penalty.gamma_v_bar = v;
    }
    if let Some(v) = space.float("gamma_p") {
        penalty.gamma_p_bar = v;
    }
    if let Err(e) = penalty.validate() {
        for msg in e.list {
            errors.push(format!("[space] {msg}"));
        }
    }

    // [physics]
    let physics_table = table_of("physics", &mut errors);
    let mut phys = Section { name: "physics", table: physics_table, errors: &mut errors };
    phys.check_known_keys(&[
        "preset",
        "mode",
        "gamma",
        "rho_el",
        "rho_f",
        "mu_el",
        "lambda",
        "mu_f",
        "alpha",
        "storage",
        "permeability",
        "network_viscosity",
        "beta_e",
        "source_amplitude",
        "source_period",
    ]);
    let mut params = match phys.string("preset").as_deref() {
        None | Some("unit") => MaterialParams::unit(),
        Some("physiological") => MaterialParams::physiological(),
        Some(other) => {
            phys.errors.push(format!(
                "`physics.preset` must be \"unit\" or \"physiological\", found {other:?}"
            ));
            MaterialParams::unit()
        }
    };
    let mode = match phys.string("mode").as_deref() {
        None | Some("stokes") => FluidMode::Stokes,
        Some("navier-stokes") => FluidMode::NavierStokes,
        Some(other) => {
            phys.errors.push(format!(
                "`physics.mode` must be \"stokes\" or \"navier-stokes\", found {other:?}"
            ));
            FluidMode::Stokes
        }
    };
    for (key, slot) in [
        ("gamma", &mut params.gamma as &mut f64),
        ("rho_el", &mut params.rho_el),
        ("rho_f", &mut params.rho_f),
        ("mu_el", &mut params.mu_el),
        ("lambda", &mut params.lambda),
        ("mu_f", &mut params.mu_f),
    ] {
        if let Some(v) = phys.float(key) {
            *slot = v;
        }
    }
    {
        let e = params.interface_compartment;
        let comp = &mut params.compartments[e];
        for (key, slot) in [
            ("alpha", &mut comp.alpha as &mut f64),
            ("storage", &mut comp.c),
            ("permeability", &mut comp.k),
            ("network_viscosity", &mut comp.mu),
            ("beta_e", &mut comp.beta_e),
        ] {
            if let Some(v) = phys.float(key) {
                *slot = v;
            }
        }
    }
    let amplitude = phys.float_required("source_amplitude", Some(0.0));
    let period = phys.float("source_period");
    if let Some(p) = period {
        if !(p > 0.0) {
            errors.push(format!("`physics.source_period` must be > 0, found {p}"));
        }
    }
    if let Err(e) = params.validate() {
        for msg in e.list {
            errors.push(format!("[physics] {msg}"));
        }
    }

    // [time] — defaults apply when the whole section is omitted.
    let time_table = table_of("time", &mut errors);
    let mut time = Section { name: "time", table: time_table, errors: &mut errors };
    time.check_known_keys(&["dt", "steps", "beta", "gamma", "theta"]);
    let dt = time.float_required("dt", Some(1e-3));
    let steps = time.positive_count("steps", Some(100));
    let beta = time.float_required("beta", Some(0.25));
    let gamma_n = time.float_required("gamma", Some(0.5));
    let theta = time.float_required("theta", Some(0.5));
    let scheme = match TimeScheme::with_parameters(dt, beta, gamma_n, theta) {
        Ok(s) => s,
        Err(e) => {
            errors.push(format!("[time] {e}"));
            TimeScheme::new(1e-3).expect("default scheme is valid")
        }
    };

    // [output]
    let output_table = table_of("output", &mut errors);
    let mut out = Section { name: "output", table: output_table, errors: &mut errors };
    out.check_known_keys(&["timeseries", "fields", "snapshots", "snapshot_every"]);
    let timeseries = out.string("timeseries").map(PathBuf::from);
    let fields = out.string("fields");
    let snapshots = out.float_array("snapshots");
    let snapshot_every = match out.integer("snapshot_every") {
        Some(v) if v >= 1 => Some(v as usize),
        Some(v) => {
            errors.push(format!("`output.snapshot_every` must be >= 1, found {v}"));
            None
        }
        None => None,
    };
    let horizon = steps as f64 * dt;
    for &t in &snapshots {
        if !(0.0..=horizon + 1e-12).contains(&t) {
            errors.push(format!("snapshot time {t} outside [0, {horizon}]"));
        }
    }
    if let Some(pattern) = &fields {
        if !pattern.contains("{step}") {
            errors.push(format!("`output.fields` must contain `{{step}}`, found {pattern:?}"));
        }
    } else if !snapshots.is_empty() || snapshot_every.is_some() {
        errors.push("snapshots requested but `output.fields` pattern is missing".into());
    }

    if errors.is_empty() {
        Ok(RunConfig {
            mesh: MeshSpec { kind, nx, ny },
            degree,
            params,
            penalty,
            scheme,
            steps,
            mode,
            source: SourceSpec { amplitude, period },
            output: OutputSpec { timeseries, fields, snapshots, snapshot_every },
        })
    } else {
        Err(ConfigError { errors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[mesh]
kind = "stack"
nx = 2
ny = 2

[space]
degree = 1
"#;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.scheme.beta, 0.25);
        assert_eq!(cfg.scheme.theta, 0.5);
        assert_eq!(cfg.scheme.gamma, 0.5);
        assert_eq!(cfg.scheme.dt, 1e-3);
        assert_eq!(cfg.steps, 100);
        assert_eq!(cfg.mode, FluidMode::Stokes);
        assert_eq!(cfg.penalty.eta_bar, 10.0);
        assert_eq!(cfg.source.amplitude, 0.0);
    }

    #[test]
    fn physiological_preset_sets_reference_values() {
        let text = format!("{MINIMAL}\n[physics]\npreset = \"physiological\"\n");
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg.params.rho_el, 1000.0);
        assert_eq!(cfg.params.rho_f, 1000.0);
        assert_eq!(cfg.params.mu_el, 216.0);
        assert_eq!(cfg.params.lambda, 11567.0);
        assert_eq!(cfg.params.mu_f, 3.5e-3);
        let e = cfg.params.interface();
        assert_eq!(e.alpha, 0.49);
        assert_eq!(e.c, 1e-6);
        assert_eq!(e.k, 1e-16);
        assert_eq!(cfg.params.gamma, 1.0);
    }

    #[test]
    fn negative_slip_rate_is_rejected_with_the_contract_message() {
        let text = format!("{MINIMAL}\n[physics]\ngamma = -1.0\n");
        let err = parse_config_str(&text).unwrap_err();
        assert!(
            err.errors.iter().any(|e| e.contains("slip rate must be >= 0")),
            "errors: {:?}",
            err.errors
        );
    }

    #[test]
    fn unknown_keys_and_sections_are_named() {
        let text = format!("{MINIMAL}\n[frobnicate]\nx = 1\n\n[output]\nbogus = 2\n");
        let err = parse_config_str(&text).unwrap_err();
        assert!(err.errors.iter().any(|e| e.contains("unknown section `[frobnicate]`")));
        assert!(err.errors.iter().any(|e| e.contains("unknown key `output.bogus`")));
    }

    #[test]
    fn unit_suffix_strings_are_rejected() {
        let text = format!("{MINIMAL}\n[physics]\nmu_f = \"3.5e-3 Pa.s\"\n");
        let err = parse_config_str(&text).unwrap_err();
        assert!(
            err.errors.iter().any(|e| e.contains("unit suffix") && e.contains("physics.mu_f")),
            "errors: {:?}",
            err.errors
        );
    }

    #[test]
    fn all_violations_are_reported_together() {
        let text = r#"
[mesh]
kind = "pocket"
nx = 3
ny = 3

[space]
degree = 9

[physics]
gamma = -2.0

[time]
dt = -0.5
"#;
        let err = parse_config_str(text).unwrap_err();
        let joined = err.errors.join("\n");
        assert!(joined.contains("multiple of 4"), "{joined}");
        assert!(joined.contains("must be even"), "{joined}");
        assert!(joined.contains("space.degree"), "{joined}");
        assert!(joined.contains("slip rate"), "{joined}");
        assert!(joined.contains("[time]"), "{joined}");
        assert!(err.errors.len() >= 5);
    }

    #[test]
    fn snapshot_times_must_lie_in_the_horizon() {
        let text = format!(
            "{MINIMAL}\n[time]\ndt = 0.01\nsteps = 10\n\n[output]\nfields = \"f_{{step}}.txt\"\nsnapshots = [0.05, 0.2]\n"
        );
        let err = parse_config_str(&text).unwrap_err();
        assert!(
            err.errors.iter().any(|e| e.contains("snapshot time 0.2 outside [0, 0.1")),
            "errors: {:?}",
            err.errors
        );
    }

    #[test]
    fn snapshot_steps_merge_times_and_interval() {
        let text = format!(
            "{MINIMAL}\n[time]\ndt = 0.01\nsteps = 10\n\n[output]\nfields = \"f_{{step}}.txt\"\nsnapshots = [0.05]\nsnapshot_every = 4\n"
        );
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg.snapshot_steps(), vec![0, 4, 5, 8]);
    }
}
