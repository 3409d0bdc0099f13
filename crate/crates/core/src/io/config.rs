//! Run configuration in a flat `section.key = value` text format.
//!
//! ```text
//! # Dog1D, three modes
//! model.name = dog1d
//! model.table_lo = 5
//! grid.lo = 0
//! grid.hi = 10
//! grid.n = 301
//! solver.horizon = 3
//! solver.role = reach
//! ```
//!
//! Lists are comma separated. Every key may appear once. Keys under
//! `model.` other than `name` are handed to the selected model.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hji::GameRole;
use crate::io::{owner_from_str, owner_str};
use crate::solver::SolverConfig;
use crate::systems::ModelSpec;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub result: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub slice: Option<PathBuf>,
}

/// A planar or lower-dimensional cut through one mode's field.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub mode: String,
    pub t: f64,
    /// `(dimension, value)` pairs; the remaining dimensions are free.
    pub fixed: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSpec {
    pub x0: Vec<f64>,
    pub mode: String,
    pub t0: f64,
    pub dt_sim: Option<f64>,
    /// `none` or `worst_case`.
    pub disturbance: String,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub slice: Option<SliceSpec>,
    pub rollout: Option<RolloutSpec>,
}

fn bare(e: Error) -> String {
    match e {
        Error::Usage(m) => m,
        other => other.to_string(),
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_list<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

struct Table {
    entries: Vec<(String, Entry)>,
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, Entry)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `section.key = value`, got {body:?}"),
            })?;
            let key = k.trim();
            if !key.contains('.') || key.starts_with('.') || key.ends_with('.') {
                return Err(Error::Config { line, message: format!("key {key:?} needs a section prefix") });
            }
            if let Some((_, prev)) = entries.iter().find(|(k, _)| k == key) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key {key:?} (first set on line {})", prev.line),
                });
            }
            entries.push((key.to_string(), Entry { line, value: v.trim().to_string(), used: false }));
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.iter_mut().find(|(k, _)| k == key).map(|(_, e)| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.iter().find(|(k, _)| k == key).map_or(0, |(_, e)| e.line)
    }

    fn parse_with<T>(&mut self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => f(&v)
                .map(Some)
                .ok_or_else(|| Error::Config { line, message: format!("{key}: cannot parse {v:?}") }),
        }
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.parse_with(key, |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.parse_with(key, |s| s.parse().ok())
    }

    fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.parse_with(key, |s| {
            s.split(',').map(|p| p.trim().parse::<f64>().ok().filter(|v| v.is_finite())).collect()
        })
    }

    fn usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        self.parse_with(key, |s| s.split(',').map(|p| p.trim().parse().ok()).collect())
    }

    fn bool_list(&mut self, key: &str) -> Result<Option<Vec<bool>>> {
        self.parse_with(key, |s| {
            s.split(',')
                .map(|p| match p.trim() {
                    "true" | "1" => Some(true),
                    "false" | "0" => Some(false),
                    _ => None,
                })
                .collect()
        })
    }

    fn wrap<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Usage(m) | Error::InvalidModel(m) => Error::Config { line: self.line_of(key), message: m },
            other => other,
        })
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut t = Table::parse(text)?;

    let (name_line, name) = t.take("model.name").ok_or(Error::Config { line: 0, message: "model.name is required".into() })?;
    let mut model = ModelSpec::by_name(&name).map_err(|e| Error::Config { line: name_line, message: bare(e) })?;
    let model_keys: Vec<String> = t
        .entries
        .iter()
        .filter_map(|(k, _)| k.strip_prefix("model.").map(String::from))
        .filter(|k| k != "name")
        .collect();
    for k in model_keys {
        let full = format!("model.{k}");
        let (line, v) = t.take(&full).expect("listed key");
        model.set(&k, &v).map_err(|e| Error::Config { line, message: bare(e) })?;
    }
    let sys_dim = t.wrap("model.name", model.build())?.dim();

    let default_grid = model.default_grid();
    let lo = t.f64_list("grid.lo")?;
    let hi = t.f64_list("grid.hi")?;
    let n = t.usize_list("grid.n")?;
    let periodic = t.bool_list("grid.periodic")?;
    let grid = if lo.is_none() && hi.is_none() && n.is_none() && periodic.is_none() {
        default_grid
    } else {
        let line = t.line_of("grid.lo").max(t.line_of("grid.n"));
        let (lo, hi, n) = match (lo, hi, n) {
            (Some(lo), Some(hi), Some(n)) => (lo, hi, n),
            _ => return Err(Error::Config { line, message: "grid needs lo, hi and n".into() }),
        };
        let dim = lo.len();
        if hi.len() != dim || n.len() != dim || periodic.as_ref().is_some_and(|p| p.len() != dim) {
            return Err(Error::Config { line, message: "grid.lo, grid.hi, grid.n and grid.periodic lengths differ".into() });
        }
        if dim != sys_dim {
            return Err(Error::DimensionMismatch { model: sys_dim, grid: dim });
        }
        let periodic = periodic.unwrap_or_else(|| vec![false; dim]);
        GridSpec::new(lo, hi, n, periodic).map_err(|e| Error::Config { line, message: bare(e) })?
    };

    let d = SolverConfig::default();
    let role = match t.take("solver.role") {
        Some((line, v)) => v.parse::<GameRole>().map_err(|e| Error::Config { line, message: bare(e) })?,
        None => d.role,
    };
    let forced_owner_override = match t.take("solver.forced_owner_override") {
        Some((_, v)) if v == "none" => None,
        Some((line, v)) => Some(owner_from_str(&v).map_err(|e| Error::Config { line, message: bare(e) })?),
        None => None,
    };
    let solver = SolverConfig {
        horizon: t.f64("solver.horizon")?.unwrap_or(d.horizon),
        role,
        cfl_factor: t.f64("solver.cfl_factor")?.unwrap_or(d.cfl_factor),
        max_dt: t.f64("solver.max_dt")?.unwrap_or(d.max_dt),
        snapshot_stride: t.usize("solver.snapshot_stride")?.unwrap_or(d.snapshot_stride),
        forced_owner_override,
        large_value: t.f64("solver.large_value")?.unwrap_or(d.large_value),
        threads: t.usize("solver.threads")?.unwrap_or(d.threads),
    };
    t.wrap("solver.horizon", solver.validate())?;

    let output = OutputConfig {
        result: t.take("output.result").map(|(_, v)| v.into()),
        trajectory: t.take("output.trajectory").map(|(_, v)| v.into()),
        slice: t.take("output.slice").map(|(_, v)| v.into()),
    };

    let slice = match t.take("slice.mode") {
        None => None,
        Some((_, mode)) => {
            let line = t.line_of("slice.fixed");
            let fixed = match t.take("slice.fixed") {
                None => Vec::new(),
                Some((_, v)) => parse_fixed(&v).map_err(|message| Error::Config { line, message })?,
            };
            Some(SliceSpec { mode, t: t.f64("slice.t")?.unwrap_or(0.0), fixed })
        }
    };

    let rollout = match t.f64_list("rollout.x0")? {
        None => None,
        Some(x0) => {
            if x0.len() != sys_dim {
                return Err(Error::DimensionMismatch { model: sys_dim, grid: x0.len() });
            }
            let line = t.line_of("rollout.disturbance");
            let disturbance = t.take("rollout.disturbance").map_or("none".to_string(), |(_, v)| v);
            if disturbance != "none" && disturbance != "worst_case" {
                return Err(Error::Config { line, message: format!("unknown disturbance policy {disturbance:?}") });
            }
            Some(RolloutSpec {
                x0,
                mode: t.take("rollout.mode").map_or("0".to_string(), |(_, v)| v),
                t0: t.f64("rollout.t0")?.unwrap_or(0.0),
                dt_sim: t.f64("rollout.dt_sim")?,
                disturbance,
                margin: t.f64("rollout.margin")?,
            })
        }
    };

    if let Some((k, e)) = t.entries.iter().find(|(_, e)| !e.used) {
        return Err(Error::Config { line: e.line, message: format!("unknown key {k:?}") });
    }
    Ok(RunConfig { model, grid, solver, output, slice, rollout })
}

/// `dim=value` pairs separated by commas, e.g. `2=0.0,3=1.5`.
pub fn parse_fixed(s: &str) -> std::result::Result<Vec<(usize, f64)>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| format!("expected dim=value, got {p:?}"))?;
            let k = k.trim().parse::<usize>().map_err(|_| format!("bad dimension in {p:?}"))?;
            let v = v.trim().parse::<f64>().map_err(|_| format!("bad value in {p:?}"))?;
            Ok((k, v))
        })
        .collect()
}

impl RunConfig {
    /// Canonical text form; `parse_config(&c.to_text())` reproduces `c`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model.name = {}", self.model.name());
        for (k, v) in self.model.params() {
            let _ = writeln!(s, "model.{k} = {v}");
        }
        let g = &self.grid;
        let _ = writeln!(s, "grid.lo = {}", g.lo().iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(","));
        let _ = writeln!(s, "grid.hi = {}", g.hi().iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(","));
        let _ = writeln!(s, "grid.n = {}", fmt_list(g.n()));
        let _ = writeln!(s, "grid.periodic = {}", fmt_list(g.periodic()));
        let c = &self.solver;
        let _ = writeln!(s, "solver.horizon = {}", fmt_f(c.horizon));
        let _ = writeln!(s, "solver.role = {}", c.role.as_str());
        let _ = writeln!(s, "solver.cfl_factor = {}", fmt_f(c.cfl_factor));
        let _ = writeln!(s, "solver.max_dt = {}", fmt_f(c.max_dt));
        let _ = writeln!(s, "solver.snapshot_stride = {}", c.snapshot_stride);
        let _ = writeln!(s, "solver.forced_owner_override = {}", c.forced_owner_override.map_or("none", owner_str));
        let _ = writeln!(s, "solver.large_value = {}", fmt_f(c.large_value));
        let _ = writeln!(s, "solver.threads = {}", c.threads);
        for (key, p) in [
            ("result", &self.output.result),
            ("trajectory", &self.output.trajectory),
            ("slice", &self.output.slice),
        ] {
            if let Some(p) = p {
                let _ = writeln!(s, "output.{key} = {}", p.display());
            }
        }
        if let Some(sl) = &self.slice {
            let _ = writeln!(s, "slice.mode = {}", sl.mode);
            let _ = writeln!(s, "slice.t = {}", fmt_f(sl.t));
            if !sl.fixed.is_empty() {
                let fixed: Vec<String> = sl.fixed.iter().map(|(k, v)| format!("{k}={}", fmt_f(*v))).collect();
                let _ = writeln!(s, "slice.fixed = {}", fixed.join(","));
            }
        }
        if let Some(r) = &self.rollout {
            let _ = writeln!(s, "rollout.x0 = {}", r.x0.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(","));
            let _ = writeln!(s, "rollout.mode = {}", r.mode);
            let _ = writeln!(s, "rollout.t0 = {}", fmt_f(r.t0));
            if let Some(h) = r.dt_sim {
                let _ = writeln!(s, "rollout.dt_sim = {}", fmt_f(h));
            }
            let _ = writeln!(s, "rollout.disturbance = {}", r.disturbance);
            if let Some(m) = r.margin {
                let _ = writeln!(s, "rollout.margin = {}", fmt_f(m));
            }
        }
        s
    }
}
