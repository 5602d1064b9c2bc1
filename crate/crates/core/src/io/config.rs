//! Flat `key = value` run configuration.
//!
//! ```text
//! [case]
//! preset = blunt_body
//!
//! [solver]
//! scheme = hllem_fp1d   # hlle | hllem | hllem_lm | hllem_fp1d
//! r = 0.3333333333333333
//! order = 1
//! cfl = 0.5
//! stepping = global     # global | local
//!
//! [run]
//! end_time = 0.2
//! max_iters = 1000
//!
//! [output]
//! dir = "runs/blunt_fp1d"
//! snapshot_every = 500      # or snapshot_interval = 0.05
//! formats = csv, vtk
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::cases::{default_cfl, preset_kind};
use crate::fv2d::{SpatialOrder, TimeStepping};
use crate::riemann::{FluxScheme, SchemeKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `[section]` or `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` appears twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue { line: usize, key: String, reason: String },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("`{key}` conflicts with `{other}`")]
    Conflict { key: String, other: String },
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
}

impl ConfigError {
    /// Line the error refers to, when there is one.
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Syntax { line }
            | ConfigError::UnknownSection { line, .. }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::DuplicateKey { line, .. }
            | ConfigError::InvalidValue { line, .. } => Some(*line),
            _ => None,
        }
    }

    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::DuplicateKey { key, .. }
            | ConfigError::InvalidValue { key, .. }
            | ConfigError::Missing { key }
            | ConfigError::Conflict { key, .. } => Some(key),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutputFormat {
    Csv,
    Vtk,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Vtk => "vtk",
        }
    }
}

/// When intermediate snapshots are written.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cadence {
    Iterations(usize),
    Time(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: String,
    pub scheme: FluxScheme,
    pub order: SpatialOrder,
    pub cfl: f64,
    pub stepping: TimeStepping,
    /// Overrides the preset's end time.
    pub end_time: Option<f64>,
    /// Overrides the preset's iteration limit.
    pub max_iters: Option<usize>,
    /// Relative paths are resolved against the output root.
    pub output_dir: PathBuf,
    pub snapshots: Option<Cadence>,
    pub formats: Vec<OutputFormat>,
}

impl RunConfig {
    /// Configuration with every optional setting at its default.
    pub fn new(preset: &str, scheme: FluxScheme) -> Result<Self, ConfigError> {
        let kind = preset_kind(preset).map_err(|e| ConfigError::InvalidValue {
            line: 0,
            key: "preset".into(),
            reason: e.to_string(),
        })?;
        Ok(Self {
            preset: preset.to_string(),
            scheme,
            order: SpatialOrder::First,
            cfl: default_cfl(kind),
            stepping: TimeStepping::Global,
            end_time: None,
            max_iters: None,
            output_dir: PathBuf::from(format!("{preset}_{}", scheme.kind.name())),
            snapshots: None,
            formats: vec![OutputFormat::Csv],
        })
    }

    /// Same configuration with a different flux and its own default output
    /// directory below the current one.
    pub fn with_scheme(&self, scheme: FluxScheme) -> Self {
        Self { scheme, output_dir: self.output_dir.join(scheme.kind.name()), ..self.clone() }
    }

    /// Canonical text form; parses back to an equal configuration.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[case]\npreset = {}\n", self.preset);
        let _ = writeln!(s, "[solver]");
        let _ = writeln!(s, "scheme = {}", self.scheme.kind.name());
        let _ = writeln!(s, "r = {:?}", self.scheme.r);
        let _ = writeln!(s, "order = {}", self.order.number());
        let _ = writeln!(s, "cfl = {:?}", self.cfl);
        let stepping = match self.stepping {
            TimeStepping::Global => "global",
            TimeStepping::Local => "local",
        };
        let _ = writeln!(s, "stepping = {stepping}\n");
        let _ = writeln!(s, "[run]");
        if let Some(t) = self.end_time {
            let _ = writeln!(s, "end_time = {t:?}");
        }
        if let Some(n) = self.max_iters {
            let _ = writeln!(s, "max_iters = {n}");
        }
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = \"{}\"", self.output_dir.display());
        match self.snapshots {
            Some(Cadence::Iterations(n)) => {
                let _ = writeln!(s, "snapshot_every = {n}");
            }
            Some(Cadence::Time(t)) => {
                let _ = writeln!(s, "snapshot_interval = {t:?}");
            }
            None => {}
        }
        let formats: Vec<_> = self.formats.iter().map(|f| f.name()).collect();
        let _ = writeln!(s, "formats = {}", formats.join(", "));
        s
    }
}

const SECTIONS: [(&str, &[&str]); 4] = [
    ("case", &["preset"]),
    ("solver", &["scheme", "r", "order", "cfl", "stepping"]),
    ("run", &["end_time", "max_iters"]),
    ("output", &["dir", "snapshot_every", "snapshot_interval", "formats"]),
];

/// Drops a trailing `#` comment that is not inside double quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (k, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..k],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> &str {
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn invalid(e: &Entry, key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::InvalidValue { line: e.line, key: key.to_string(), reason: reason.to_string() }
}

fn parse_f64(e: &Entry, key: &str) -> Result<f64, ConfigError> {
    let x: f64 = e.value.parse().map_err(|_| invalid(e, key, format!("`{}` is not a number", e.value)))?;
    if !x.is_finite() {
        return Err(invalid(e, key, "must be finite"));
    }
    Ok(x)
}

fn parse_positive_usize(e: &Entry, key: &str) -> Result<usize, ConfigError> {
    match e.value.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(invalid(e, key, format!("`{}` is not a positive integer", e.value))),
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut section: Option<&str> = None;
    let mut entries: Vec<(String, Entry)> = Vec::new();
    let mut seen = HashSet::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let name = name.trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(n, _)| *n)
                    .ok_or_else(|| ConfigError::UnknownSection { line, section: name.to_string() })?,
            );
            continue;
        }
        let (key, value) = s.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        let allowed = section.and_then(|sec| SECTIONS.iter().find(|(n, _)| *n == sec)).map(|(_, keys)| *keys);
        if !allowed.is_some_and(|keys| keys.contains(&key)) {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
        }
        entries.push((key.to_string(), Entry { line, value: unquote(value.trim()).to_string() }));
    }

    let get = |key: &str| entries.iter().find(|(k, _)| k == key).map(|(_, e)| e);
    let required = |key: &str| get(key).ok_or_else(|| ConfigError::Missing { key: key.to_string() });

    let preset_entry = required("preset")?;
    let scheme_entry = required("scheme")?;
    let kind: SchemeKind = scheme_entry.value.parse().map_err(|e| invalid(scheme_entry, "scheme", e))?;
    let r = match get("r") {
        Some(e) => parse_f64(e, "r")?,
        None => FluxScheme::DEFAULT_R,
    };
    let scheme = FluxScheme::new(kind, r).map_err(|err| invalid(get("r").unwrap_or(scheme_entry), "r", err))?;
    let mut cfg = RunConfig::new(&preset_entry.value, scheme).map_err(|err| match err {
        ConfigError::InvalidValue { key, reason, .. } => ConfigError::InvalidValue { line: preset_entry.line, key, reason },
        other => other,
    })?;

    if let Some(e) = get("order") {
        let n: u32 = e.value.parse().map_err(|_| invalid(e, "order", "expected 1 or 2"))?;
        cfg.order = SpatialOrder::from_number(n).map_err(|_| invalid(e, "order", "expected 1 or 2"))?;
    }
    if let Some(e) = get("cfl") {
        let c = parse_f64(e, "cfl")?;
        if !(c > 0.0 && c <= 1.0) {
            return Err(invalid(e, "cfl", format!("{c} is outside (0, 1]")));
        }
        cfg.cfl = c;
    }
    if let Some(e) = get("stepping") {
        cfg.stepping = match e.value.to_ascii_lowercase().as_str() {
            "global" => TimeStepping::Global,
            "local" => TimeStepping::Local,
            _ => return Err(invalid(e, "stepping", "expected `global` or `local`")),
        };
    }
    if let Some(e) = get("end_time") {
        let t = parse_f64(e, "end_time")?;
        if !(t > 0.0) {
            return Err(invalid(e, "end_time", "must be positive"));
        }
        cfg.end_time = Some(t);
    }
    if let Some(e) = get("max_iters") {
        cfg.max_iters = Some(parse_positive_usize(e, "max_iters")?);
    }
    if let Some(e) = get("dir") {
        if e.value.is_empty() {
            return Err(invalid(e, "dir", "must not be empty"));
        }
        cfg.output_dir = PathBuf::from(&e.value);
    }
    match (get("snapshot_every"), get("snapshot_interval")) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Conflict { key: "snapshot_interval".into(), other: "snapshot_every".into() })
        }
        (Some(e), None) => cfg.snapshots = Some(Cadence::Iterations(parse_positive_usize(e, "snapshot_every")?)),
        (None, Some(e)) => {
            let t = parse_f64(e, "snapshot_interval")?;
            if !(t > 0.0) {
                return Err(invalid(e, "snapshot_interval", "must be positive"));
            }
            cfg.snapshots = Some(Cadence::Time(t));
        }
        (None, None) => {}
    }
    if let Some(e) = get("formats") {
        let mut formats = Vec::new();
        for item in e.value.split(',').map(str::trim) {
            let f = match item.to_ascii_lowercase().as_str() {
                "csv" => OutputFormat::Csv,
                "vtk" => OutputFormat::Vtk,
                _ => return Err(invalid(e, "formats", format!("unknown format `{item}`"))),
            };
            if !formats.contains(&f) {
                formats.push(f);
            }
        }
        cfg.formats = formats;
    }
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.to_path_buf(), reason: e.to_string() })?;
    parse_config(&text)
}
