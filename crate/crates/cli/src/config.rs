//! Flat key-value run configuration.
//!
//! Values come from, in increasing precedence: built-in defaults, the TOML
//! config file, `MEDGATE_<KEY>` environment variables and `--set key=value`
//! arguments. Every value remembers where it came from so that diagnostics
//! can point at the offending line or override.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use toml::Value;

pub const ENV_PREFIX: &str = "MEDGATE_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    DynamicMap,
    AdiabaticMap,
    Spectrum,
    CphaseScan,
    Decoherence,
    Interference,
}

impl Mode {
    pub const ALL: [Mode; 6] =
        [Mode::DynamicMap, Mode::AdiabaticMap, Mode::Spectrum, Mode::CphaseScan, Mode::Decoherence, Mode::Interference];

    pub fn name(self) -> &'static str {
        match self {
            Mode::DynamicMap => "dynamic-map",
            Mode::AdiabaticMap => "adiabatic-map",
            Mode::Spectrum => "spectrum",
            Mode::CphaseScan => "cphase-scan",
            Mode::Decoherence => "decoherence",
            Mode::Interference => "interference",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
            format!("unknown mode `{s}` (expected one of {})", names.join(", "))
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a configuration value was set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Default,
    File { path: String, line: usize },
    Env(String),
    Set(String),
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => f.write_str("default"),
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Env(var) => write!(f, "environment variable {var}"),
            Origin::Set(arg) => write!(f, "--set {arg}"),
            Origin::Flag(arg) => f.write_str(arg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{origin}: {message}")]
pub struct ConfigError {
    pub origin: Origin,
    pub message: String,
}

impl ConfigError {
    fn new(origin: &Origin, message: impl Into<String>) -> Self {
        Self { origin: origin.clone(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    OptFloat,
    Count,
    Integer,
    Bool,
    Floats,
    Choice(&'static [&'static str]),
}

struct KeySpec {
    name: &'static str,
    kind: Kind,
    /// TOML literal; `None` leaves an optional key unset.
    default: Option<&'static str>,
    help: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, kind, default: Some(default), help }
}

const KEYS: &[KeySpec] = &[
    key("seed", Kind::Integer, "0", "seed for Monte Carlo estimates"),
    key("e_c", Kind::Float, "0.1", "control Zeeman energy E_C (ps^-1)"),
    key("r", Kind::Floats, "[1.0]", "ratio R = 2 E_Q / E_C - 1; a list sweeps it"),
    KeySpec { name: "e_q", kind: Kind::OptFloat, default: None, help: "explicit E_Q (overrides r)" },
    KeySpec { name: "e_qp", kind: Kind::OptFloat, default: None, help: "explicit E_Q' (defaults to E_Q)" },
    key("alpha", Kind::Float, "1.0", "exchange anisotropy (1 = XY)"),
    key("tol", Kind::Float, "1e-10", "integrator tolerance"),
    key("j1_min", Kind::Float, "0.0", "first coupling grid start"),
    key("j1_max", Kind::Float, "0.2", "first coupling grid end"),
    key("j1_count", Kind::Count, "21", "first coupling grid points"),
    key("j2_min", Kind::Float, "0.0", "second coupling grid start"),
    key("j2_max", Kind::Float, "0.2", "second coupling grid end"),
    key("j2_count", Kind::Count, "21", "second coupling grid points"),
    key("reduced_couplings", Kind::Bool, "false", "coupling grids are J' = 2J/E_C"),
    key("n", Kind::Count, "1", "revival index of the dynamic gate"),
    key("estimator", Kind::Choice(&["closed", "mc"]), "\"closed\"", "entangling power estimator"),
    key("samples", Kind::Count, "100000", "Monte Carlo samples"),
    key("shape", Kind::Choice(&["gaussian", "rectangular"]), "\"gaussian\"", "pulse shape"),
    key("omega0", Kind::Float, "0.3", "peak Rabi frequency (ps^-1)"),
    key("delta", Kind::Float, "0.5", "laser detuning (ps^-1)"),
    key("tau", Kind::Float, "500.0", "pulse width (ps)"),
    key("leakage_threshold", Kind::Float, "1e-3", "leakage above which a point is invalid"),
    key("detuning_min", Kind::Float, "-1.0", "spectrum detuning grid start"),
    key("detuning_max", Kind::Float, "1.0", "spectrum detuning grid end"),
    key("detuning_count", Kind::Count, "201", "spectrum detuning grid points"),
    key("tau_min", Kind::Float, "100.0", "cphase scan start (ps)"),
    key("tau_max", Kind::Float, "1000.0", "cphase scan end (ps)"),
    key("tau_count", Kind::Count, "30", "cphase scan points"),
    key("phase_tol", Kind::Float, "1e-4", "accepted |phi - pi| of the refined pulse width"),
    key("gamma0", Kind::Floats, "[0.0, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0]", "decay rates (ns^-1)"),
    key("j_list", Kind::Floats, "[0.05]", "equal couplings J1 = J2 for the decoherence study"),
    key("dynamic_omega0", Kind::Float, "5.0", "pi-pulse Rabi frequency of the dynamic gate"),
    key("opt_delta_min", Kind::Float, "0.243", "detuning search start for the adiabatic gate"),
    key("opt_delta_max", Kind::Float, "0.912", "detuning search end"),
    key("opt_delta_count", Kind::Count, "41", "detuning search points (1 = use `delta`)"),
    key("opt_slack", Kind::Float, "1e-3", "entangling power tolerance of the detuning search"),
    key("amp_100", Kind::Float, "0.7071067811865476", "initial amplitude of |100>g"),
    key("amp_001", Kind::Float, "0.7071067811865476", "initial amplitude of |001>g"),
    key("time_samples", Kind::Count, "2001", "interference trace samples"),
];

fn spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// `(key, default, help)` for every recognised key.
pub fn documented_keys() -> impl Iterator<Item = (&'static str, &'static str, &'static str)> {
    KEYS.iter().map(|k| (k.name, k.default.unwrap_or("(unset)"), k.help))
}

fn parse_literal(text: &str) -> Option<Value> {
    let table: toml::Table = toml::from_str(&format!("v = {text}")).ok()?;
    table.get("v").cloned()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Raw values with their origins, before typing and validation.
#[derive(Debug, Clone, Default)]
pub struct Layers {
    values: BTreeMap<String, (Value, Origin)>,
}

impl Layers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply_file(&mut self, path: &str, text: &str) -> Result<(), ConfigError> {
        let doc: BTreeMap<String, toml::Spanned<Value>> = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| line_of(text, s.start));
            ConfigError::new(&Origin::File { path: path.into(), line }, e.message().trim().to_string())
        })?;
        for (name, spanned) in doc {
            let origin = Origin::File { path: path.into(), line: line_of(text, spanned.span().start) };
            let value = spanned.into_inner();
            if matches!(value, Value::Table(_)) {
                return Err(ConfigError::new(&origin, format!("`{name}`: tables are not supported, keys are flat")));
            }
            self.insert(name, value, origin)?;
        }
        Ok(())
    }

    /// Picks up `MEDGATE_<KEY>` for every known key.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        for k in KEYS {
            let var = format!("{ENV_PREFIX}{}", k.name.to_uppercase());
            if let Some(raw) = lookup(&var) {
                let value = parse_literal(&raw).unwrap_or(Value::String(raw));
                self.insert(k.name.into(), value, Origin::Env(var))?;
            }
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_set(&mut self, arg: &str) -> Result<(), ConfigError> {
        let origin = Origin::Set(arg.into());
        let (name, raw) = arg.split_once('=').ok_or_else(|| ConfigError::new(&origin, "expected key=value"))?;
        let raw = raw.trim();
        let value = parse_literal(raw).unwrap_or_else(|| Value::String(raw.into()));
        self.insert(name.trim().into(), value, origin)
    }

    pub fn insert_value(&mut self, name: &str, value: Value, origin: Origin) -> Result<(), ConfigError> {
        self.insert(name.into(), value, origin)
    }

    fn insert(&mut self, name: String, value: Value, origin: Origin) -> Result<(), ConfigError> {
        if spec(&name).is_none() {
            return Err(ConfigError::new(&origin, format!("unknown key `{name}`")));
        }
        self.values.insert(name, (value, origin));
        Ok(())
    }

    /// Types every key, filling in defaults.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let mut out = BTreeMap::new();
        for k in KEYS {
            let (value, origin) = match self.values.get(k.name) {
                Some((v, o)) => (Some(v.clone()), o.clone()),
                None => (k.default.map(|d| parse_literal(d).expect("default literal parses")), Origin::Default),
            };
            let typed = match value {
                None => None,
                Some(v) => Some(typed(k, v, &origin)?),
            };
            out.insert(k.name, (typed, origin));
        }
        Ok(Resolved { values: out })
    }
}

/// A typed configuration value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Setting {
    Float(f64),
    Integer(u64),
    Bool(bool),
    Text(String),
    Floats(Vec<f64>),
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn typed(k: &KeySpec, v: Value, origin: &Origin) -> Result<Setting, ConfigError> {
    let bad = |what: &str| ConfigError::new(origin, format!("`{}` must be {what}, got {v}", k.name));
    Ok(match k.kind {
        Kind::Float | Kind::OptFloat => {
            let x = as_float(&v).ok_or_else(|| bad("a number"))?;
            if !x.is_finite() {
                return Err(bad("finite"));
            }
            Setting::Float(x)
        }
        Kind::Count => match v {
            Value::Integer(i) if i >= 1 => Setting::Integer(i as u64),
            _ => return Err(bad("an integer >= 1")),
        },
        Kind::Integer => match v {
            Value::Integer(i) if i >= 0 => Setting::Integer(i as u64),
            _ => return Err(bad("a non-negative integer")),
        },
        Kind::Bool => match v {
            Value::Boolean(b) => Setting::Bool(b),
            _ => return Err(bad("true or false")),
        },
        Kind::Floats => {
            let list = match &v {
                Value::Array(items) => items.iter().map(as_float).collect::<Option<Vec<_>>>(),
                other => as_float(other).map(|x| vec![x]),
            };
            match list {
                Some(xs) if !xs.is_empty() && xs.iter().all(|x| x.is_finite()) => Setting::Floats(xs),
                _ => return Err(bad("a non-empty list of finite numbers")),
            }
        }
        Kind::Choice(options) => match &v {
            Value::String(s) if options.contains(&s.as_str()) => Setting::Text(s.clone()),
            _ => return Err(bad(&format!("one of {}", options.join(", ")))),
        },
    })
}

/// Typed values with their origins.
#[derive(Debug, Clone)]
pub struct Resolved {
    values: BTreeMap<&'static str, (Option<Setting>, Origin)>,
}

impl Resolved {
    fn entry(&self, name: &str) -> &(Option<Setting>, Origin) {
        self.values.get(name).unwrap_or_else(|| panic!("unregistered key {name}"))
    }

    pub fn origin(&self, name: &str) -> &Origin {
        &self.entry(name).1
    }

    pub fn float(&self, name: &str) -> f64 {
        match self.entry(name).0 {
            Some(Setting::Float(x)) => x,
            ref other => panic!("{name} is not a float: {other:?}"),
        }
    }

    pub fn opt_float(&self, name: &str) -> Option<f64> {
        match self.entry(name).0 {
            Some(Setting::Float(x)) => Some(x),
            None => None,
            ref other => panic!("{name} is not a float: {other:?}"),
        }
    }

    pub fn int(&self, name: &str) -> u64 {
        match self.entry(name).0 {
            Some(Setting::Integer(i)) => i,
            ref other => panic!("{name} is not an integer: {other:?}"),
        }
    }

    pub fn count(&self, name: &str) -> usize {
        self.int(name) as usize
    }

    pub fn flag(&self, name: &str) -> bool {
        match self.entry(name).0 {
            Some(Setting::Bool(b)) => b,
            ref other => panic!("{name} is not a bool: {other:?}"),
        }
    }

    pub fn text(&self, name: &str) -> &str {
        match &self.entry(name).0 {
            Some(Setting::Text(s)) => s,
            other => panic!("{name} is not text: {other:?}"),
        }
    }

    pub fn floats(&self, name: &str) -> &[f64] {
        match &self.entry(name).0 {
            Some(Setting::Floats(xs)) => xs,
            other => panic!("{name} is not a list: {other:?}"),
        }
    }

    pub fn error(&self, name: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::new(self.origin(name), format!("`{name}`: {}", message.into()))
    }

    /// Every key with its value (unset optional keys omitted).
    pub fn settings(&self) -> BTreeMap<&'static str, Setting> {
        self.values.iter().filter_map(|(k, (v, _))| v.clone().map(|v| (*k, v))).collect()
    }

    /// Origins of the keys that were not left at their default.
    pub fn overrides(&self) -> BTreeMap<&'static str, String> {
        self.values.iter().filter(|(_, (_, o))| *o != Origin::Default).map(|(k, (_, o))| (*k, o.to_string())).collect()
    }
}

/// Evenly spaced grid `min..=max` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    fn read(r: &Resolved, prefix: &str) -> Result<Self, ConfigError> {
        let g = Grid {
            min: r.float(&format!("{prefix}_min")),
            max: r.float(&format!("{prefix}_max")),
            count: r.count(&format!("{prefix}_count")),
        };
        if g.max < g.min {
            return Err(r.error(&format!("{prefix}_max"), format!("must not be below {prefix}_min = {}", g.min)));
        }
        Ok(g)
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count).map(|k| self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Closed,
    Mc,
}

/// A validated configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub e_c: f64,
    pub r: Vec<f64>,
    pub e_q: Option<f64>,
    pub e_qp: Option<f64>,
    pub alpha: f64,
    pub tol: f64,
    pub j1: Grid,
    pub j2: Grid,
    pub reduced_couplings: bool,
    pub n: u32,
    pub estimator: Estimator,
    pub samples: usize,
    pub rectangular: bool,
    pub omega0: f64,
    pub delta: f64,
    pub tau: f64,
    pub leakage_threshold: f64,
    pub detunings: Grid,
    pub taus: Grid,
    pub phase_tol: f64,
    pub gamma0: Vec<f64>,
    pub j_list: Vec<f64>,
    pub dynamic_omega0: f64,
    pub opt_delta: Grid,
    pub opt_slack: f64,
    pub amplitudes: (f64, f64),
    pub time_samples: usize,
    pub resolved: Resolved,
}

impl RunConfig {
    pub fn from_resolved(mode: Mode, r: Resolved) -> Result<Self, ConfigError> {
        let positive = |name: &str| {
            let x = r.float(name);
            if x > 0.0 {
                Ok(x)
            } else {
                Err(r.error(name, format!("must be positive, got {x}")))
            }
        };
        let non_negative = |name: &str| {
            let x = r.float(name);
            if x >= 0.0 {
                Ok(x)
            } else {
                Err(r.error(name, format!("must be non-negative, got {x}")))
            }
        };
        let e_c = positive("e_c")?;
        let tol = positive("tol")?;
        let omega0 = non_negative("omega0")?;
        let tau = positive("tau")?;
        let dynamic_omega0 = positive("dynamic_omega0")?;
        let leakage_threshold = non_negative("leakage_threshold")?;
        let phase_tol = positive("phase_tol")?;
        let opt_slack = non_negative("opt_slack")?;
        let taus = Grid::read(&r, "tau")?;
        if taus.min <= 0.0 {
            return Err(r.error("tau_min", "must be positive"));
        }
        if mode == Mode::CphaseScan && taus.count < 2 {
            return Err(r.error("tau_count", "a scan needs at least two points"));
        }
        let gamma0 = r.floats("gamma0").to_vec();
        if gamma0.iter().any(|&g| g < 0.0) {
            return Err(r.error("gamma0", "decay rates must be non-negative"));
        }
        let single_r = matches!(mode, Mode::Spectrum | Mode::CphaseScan | Mode::Interference | Mode::Decoherence);
        if single_r && r.floats("r").len() != 1 && r.opt_float("e_q").is_none() {
            return Err(r.error("r", format!("mode {mode} takes a single ratio")));
        }
        let (a100, a001) = (r.float("amp_100"), r.float("amp_001"));
        let norm = (a100 * a100 + a001 * a001).sqrt();
        if norm == 0.0 {
            return Err(r.error("amp_100", "amplitudes must not both vanish"));
        }
        let n = r.int("n");
        Ok(Self {
            mode,
            seed: r.int("seed"),
            e_c,
            r: r.floats("r").to_vec(),
            e_q: r.opt_float("e_q"),
            e_qp: r.opt_float("e_qp"),
            alpha: r.float("alpha"),
            tol,
            j1: Grid::read(&r, "j1")?,
            j2: Grid::read(&r, "j2")?,
            reduced_couplings: r.flag("reduced_couplings"),
            n: u32::try_from(n).map_err(|_| r.error("n", "too large"))?,
            estimator: if r.text("estimator") == "mc" { Estimator::Mc } else { Estimator::Closed },
            samples: r.count("samples"),
            rectangular: r.text("shape") == "rectangular",
            omega0,
            delta: r.float("delta"),
            tau,
            leakage_threshold,
            detunings: Grid::read(&r, "detuning")?,
            taus,
            phase_tol,
            gamma0,
            j_list: r.floats("j_list").to_vec(),
            dynamic_omega0,
            opt_delta: Grid::read(&r, "opt_delta")?,
            opt_slack,
            amplitudes: (a100 / norm, a001 / norm),
            time_samples: r.count("time_samples"),
            resolved: r,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let r = Layers::new().resolve().unwrap();
        assert_eq!(r.float("tau"), 500.0);
        assert_eq!(r.floats("r"), &[1.0]);
        assert_eq!(r.opt_float("e_q"), None);
        RunConfig::from_resolved(Mode::DynamicMap, r).unwrap();
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let mut l = Layers::new();
        let e = l.apply_file("c.toml", "tau = 100\n\nbogus = 3\n").unwrap_err();
        assert_eq!(e.origin, Origin::File { path: "c.toml".into(), line: 3 });
        let e = Layers::new().apply_file("c.toml", "tau = 100\nomega0 = = 2\n").unwrap_err();
        assert_eq!(e.origin, Origin::File { path: "c.toml".into(), line: 2 });
        let mut l = Layers::new();
        l.apply_file("c.toml", "# comment\nj1_count = 0\n").unwrap();
        let e = l.resolve().unwrap_err();
        assert_eq!(e.origin, Origin::File { path: "c.toml".into(), line: 2 });
        assert!(e.to_string().starts_with("c.toml:2:"), "{e}");
    }

    #[test]
    fn override_precedence() {
        let mut l = Layers::new();
        l.apply_file("c.toml", "tau = 100\nomega0 = 0.2\ndelta = 0.4\n").unwrap();
        l.apply_env(|var| (var == "MEDGATE_TAU" || var == "MEDGATE_OMEGA0").then(|| "250".to_string())).unwrap();
        l.apply_set("tau=300").unwrap();
        let r = l.resolve().unwrap();
        assert_eq!(r.float("tau"), 300.0);
        assert_eq!(r.float("omega0"), 250.0);
        assert_eq!(r.float("delta"), 0.4);
        assert_eq!(r.origin("omega0"), &Origin::Env("MEDGATE_OMEGA0".into()));
    }

    #[test]
    fn set_values_are_typed() {
        let mut l = Layers::new();
        l.apply_set("estimator=mc").unwrap();
        l.apply_set("gamma0=[0.5, 1]").unwrap();
        l.apply_set("r=1.2").unwrap();
        let r = l.resolve().unwrap();
        assert_eq!(r.text("estimator"), "mc");
        assert_eq!(r.floats("gamma0"), &[0.5, 1.0]);
        assert_eq!(r.floats("r"), &[1.2]);
        let mut l = Layers::new();
        l.apply_set("shape=triangle").unwrap();
        assert!(l.resolve().is_err());
        assert!(Layers::new().apply_set("nokey").is_err());
    }

    #[test]
    fn grid_validation() {
        let mut l = Layers::new();
        l.apply_set("j1_min=0.3").unwrap();
        let e = RunConfig::from_resolved(Mode::DynamicMap, l.resolve().unwrap()).unwrap_err();
        assert!(e.message.contains("j1_max"), "{e}");
        assert_eq!(Grid { min: 0.0, max: 1.0, count: 3 }.points(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Grid { min: 0.4, max: 1.0, count: 1 }.points(), vec![0.4]);
    }
}
