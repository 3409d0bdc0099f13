//! Hybrid automaton data model: modes with per-mode flows and input boxes,
//! signed invariant functions, controlled and forced switches with reset
//! maps, and a target function.
//!
//! Sets are encoded by signed functions: a mode's invariant is
//! `{ x : s(x) <= 0 }`, the target is `{ x : l(x) <= 0 }` and a switch guard
//! is enabled on `{ x : g(x) <= 0 }`.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MAX_DIM};

/// Largest number of channels in a control or disturbance box.
pub const MAX_INPUTS: usize = 8;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type GeneralFn = Arc<dyn Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl InputBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::usage("input box bounds have different lengths"));
        }
        if lo.len() > MAX_INPUTS {
            return Err(Error::usage(format!("at most {MAX_INPUTS} input channels are supported")));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::usage("input box needs finite bounds with lo <= hi"));
        }
        Ok(Self { lo, hi })
    }

    /// A box with no channels.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.dim() && v.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a <= x && x <= b)
    }

    /// Writes the corner selected by the bits of `mask` (bit j set = upper edge).
    pub fn corner(&self, mask: usize, out: &mut [f64]) {
        for j in 0..self.dim() {
            out[j] = if mask & (1 << j) != 0 { self.hi[j] } else { self.lo[j] };
        }
    }

    pub fn corner_count(&self) -> usize {
        1 << self.dim()
    }

    /// The point of the box closest to zero, used when no input is applied.
    pub fn nearest_to_zero(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.0f64.clamp(*a, *b)).collect()
    }
}

/// Continuous flow of one mode.
#[derive(Clone)]
pub enum Dynamics {
    /// `f(x,u,d) = a(x) + B(x) u + C(x) d`; `control` and `disturbance` fill
    /// row-major `dim x m` matrices.
    Affine {
        drift: VectorFn,
        control: VectorFn,
        disturbance: VectorFn,
    },
    /// Arbitrary flow; input optimization falls back to box-corner sampling.
    General(GeneralFn),
}

impl Dynamics {
    pub fn affine(
        drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        control: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        disturbance: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Dynamics::Affine {
            drift: Arc::new(drift),
            control: Arc::new(control),
            disturbance: Arc::new(disturbance),
        }
    }

    /// Zero flow with no inputs.
    pub fn zero() -> Self {
        Self::affine(|_, out| out.fill(0.0), |_, _| {}, |_, _| {})
    }
}

/// Affine decomposition evaluated at one state, on the stack.
pub(crate) struct AffineParts {
    pub drift: [f64; MAX_DIM],
    pub control: [f64; MAX_DIM * MAX_INPUTS],
    pub disturbance: [f64; MAX_DIM * MAX_INPUTS],
}

#[derive(Clone)]
pub struct Mode {
    id: usize,
    name: String,
    dim: usize,
    dynamics: Dynamics,
    control: InputBox,
    disturbance: InputBox,
    invariant: Option<ScalarFn>,
}

impl fmt::Debug for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mode")
            .field("id", &self.id)
            .field("name", &self.name)
            .field("control", &self.control)
            .field("disturbance", &self.disturbance)
            .finish_non_exhaustive()
    }
}

impl Mode {
    /// A mode whose invariant is the whole state space.
    pub fn new(name: impl Into<String>, dim: usize, dynamics: Dynamics, control: InputBox, disturbance: InputBox) -> Self {
        Self {
            id: 0,
            name: name.into(),
            dim,
            dynamics,
            control,
            disturbance,
            invariant: None,
        }
    }

    pub fn with_invariant(mut self, s: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.invariant = Some(Arc::new(s));
        self
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn control_box(&self) -> &InputBox {
        &self.control
    }

    pub fn disturbance_box(&self) -> &InputBox {
        &self.disturbance
    }

    /// Signed invariant: `<= 0` inside `S_i`.
    pub fn invariant(&self, x: &[f64]) -> f64 {
        self.invariant.as_ref().map_or(-1.0, |s| s(x))
    }

    pub fn in_invariant(&self, x: &[f64]) -> bool {
        self.invariant(x) <= 0.0
    }

    pub fn eval(&self, x: &[f64], u: &[f64], d: &[f64], out: &mut [f64]) {
        match &self.dynamics {
            Dynamics::General(f) => f(x, u, d, out),
            Dynamics::Affine { .. } => {
                let parts = self.affine_parts(x).expect("affine");
                let (mu, md) = (self.control.dim(), self.disturbance.dim());
                for k in 0..self.dim {
                    let mut v = parts.drift[k];
                    for j in 0..mu {
                        v += parts.control[k * mu + j] * u[j];
                    }
                    for j in 0..md {
                        v += parts.disturbance[k * md + j] * d[j];
                    }
                    out[k] = v;
                }
            }
        }
    }

    pub fn dynamics_at(&self, x: &[f64], u: &[f64], d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(x, u, d, &mut out);
        out
    }

    pub(crate) fn affine_parts(&self, x: &[f64]) -> Option<AffineParts> {
        match &self.dynamics {
            Dynamics::Affine { drift, control, disturbance } => {
                let mut parts = AffineParts {
                    drift: [0.0; MAX_DIM],
                    control: [0.0; MAX_DIM * MAX_INPUTS],
                    disturbance: [0.0; MAX_DIM * MAX_INPUTS],
                };
                let n = self.dim;
                drift(x, &mut parts.drift[..n]);
                control(x, &mut parts.control[..n * self.control.dim()]);
                disturbance(x, &mut parts.disturbance[..n * self.disturbance.dim()]);
                Some(parts)
            }
            Dynamics::General(_) => None,
        }
    }

    /// Upper bound on `|f(x,u,d)_k|` over both input boxes, per dimension.
    /// Exact for affine flows; corner sampling otherwise.
    pub fn speed_bounds(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        if let Some(p) = self.affine_parts(x) {
            let (mu, md) = (self.control.dim(), self.disturbance.dim());
            for k in 0..n {
                let (mut lo, mut hi) = (p.drift[k], p.drift[k]);
                for j in 0..mu {
                    let a = p.control[k * mu + j] * self.control.lo[j];
                    let b = p.control[k * mu + j] * self.control.hi[j];
                    lo += a.min(b);
                    hi += a.max(b);
                }
                for j in 0..md {
                    let a = p.disturbance[k * md + j] * self.disturbance.lo[j];
                    let b = p.disturbance[k * md + j] * self.disturbance.hi[j];
                    lo += a.min(b);
                    hi += a.max(b);
                }
                out[k] = lo.abs().max(hi.abs());
            }
            return;
        }
        out[..n].fill(0.0);
        let mut u = [0.0; MAX_INPUTS];
        let mut d = [0.0; MAX_INPUTS];
        let mut f = [0.0; MAX_DIM];
        for cu in 0..self.control.corner_count() {
            self.control.corner(cu, &mut u);
            for cd in 0..self.disturbance.corner_count() {
                self.disturbance.corner(cd, &mut d);
                self.eval(x, &u[..self.control.dim()], &d[..self.disturbance.dim()], &mut f[..n]);
                for k in 0..n {
                    out[k] = out[k].max(f[k].abs());
                }
            }
        }
    }

    pub fn speed_bound(&self, x: &[f64], k: usize) -> f64 {
        let mut out = [0.0; MAX_DIM];
        self.speed_bounds(x, &mut out[..self.dim]);
        out[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwitchKind {
    Controlled,
    Forced,
}

/// Who chooses among simultaneously enabled forced switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Owner {
    Control,
    Adversary,
}

#[derive(Clone)]
pub struct Switch {
    pub name: String,
    pub kind: SwitchKind,
    pub from: usize,
    pub to: usize,
    pub owner: Owner,
    reset: Option<VectorFn>,
    guard: Option<ScalarFn>,
}

impl fmt::Debug for Switch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Switch")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("from", &self.from)
            .field("to", &self.to)
            .field("owner", &self.owner)
            .field("identity_reset", &self.reset.is_none())
            .finish_non_exhaustive()
    }
}

impl Switch {
    pub fn controlled(name: impl Into<String>, from: usize, to: usize) -> Self {
        Self {
            name: name.into(),
            kind: SwitchKind::Controlled,
            from,
            to,
            owner: Owner::Control,
            reset: None,
            guard: None,
        }
    }

    pub fn forced(name: impl Into<String>, from: usize, to: usize) -> Self {
        Self { kind: SwitchKind::Forced, ..Self::controlled(name, from, to) }
    }

    pub fn with_reset(mut self, r: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.reset = Some(Arc::new(r));
        self
    }

    /// Restricts where the switch may fire to `{ x : g(x) <= 0 }`.
    pub fn with_guard(mut self, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.guard = Some(Arc::new(g));
        self
    }

    /// Only meaningful for forced switches; controlled switches always
    /// belong to the controller.
    pub fn with_owner(mut self, owner: Owner) -> Self {
        if self.kind == SwitchKind::Forced {
            self.owner = owner;
        }
        self
    }

    pub fn has_identity_reset(&self) -> bool {
        self.reset.is_none()
    }

    pub fn reset_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.reset {
            Some(r) => r(x, out),
            None => out.copy_from_slice(x),
        }
    }

    pub fn reset(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.reset_into(x, &mut out);
        out
    }

    pub fn enabled(&self, x: &[f64]) -> bool {
        self.guard.as_ref().is_none_or(|g| g(x) <= 0.0)
    }
}

pub struct HybridSystem {
    name: String,
    params: Vec<(String, String)>,
    dim: usize,
    state_names: Vec<String>,
    modes: Vec<Mode>,
    switches: Vec<Switch>,
    target: ScalarFn,
}

impl fmt::Debug for HybridSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("modes", &self.modes)
            .field("switches", &self.switches)
            .finish_non_exhaustive()
    }
}

impl HybridSystem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        modes: Vec<Mode>,
        switches: Vec<Switch>,
        target: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidModel(format!("state dimension {dim} unsupported")));
        }
        if modes.is_empty() {
            return Err(Error::InvalidModel("a hybrid system needs at least one mode".into()));
        }
        let mut modes = modes;
        for (i, m) in modes.iter_mut().enumerate() {
            if m.dim != dim {
                return Err(Error::InvalidModel(format!("mode {} has dimension {}, system has {dim}", m.name, m.dim)));
            }
            m.id = i;
        }
        for s in &switches {
            if s.from >= modes.len() || s.to >= modes.len() {
                return Err(Error::InvalidModel(format!("switch {} references a missing mode", s.name)));
            }
        }
        Ok(Self {
            name: name.into(),
            params: Vec::new(),
            dim,
            state_names: (0..dim).map(|k| format!("x{k}")).collect(),
            modes,
            switches,
            target: Arc::new(target),
        })
    }

    pub fn with_state_names(mut self, names: &[&str]) -> Self {
        if names.len() == self.dim {
            self.state_names = names.iter().map(|s| s.to_string()).collect();
        }
        self
    }

    /// Records the registry identity used to rebuild this system.
    pub fn with_params(mut self, params: Vec<(String, String)>) -> Self {
        self.params = params;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, String)] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> &Mode {
        &self.modes[i]
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_by_name(&self, name: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.name == name)
    }

    pub fn switches(&self) -> &[Switch] {
        &self.switches
    }

    pub fn switch(&self, id: usize) -> &Switch {
        &self.switches[id]
    }

    /// `(switch id, switch)` pairs leaving `mode` with the given kind.
    pub fn switches_from(&self, mode: usize, kind: SwitchKind) -> impl Iterator<Item = (usize, &Switch)> {
        self.switches
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.from == mode && s.kind == kind)
    }

    /// The same system with one switch removed; later switch ids shift down.
    pub fn without_switch(mut self, id: usize) -> Self {
        self.switches.remove(id);
        self
    }

    pub fn has_outgoing(&self, mode: usize) -> bool {
        self.switches.iter().any(|s| s.from == mode)
    }

    pub fn target(&self, x: &[f64]) -> f64 {
        (self.target)(x)
    }

    pub fn sample_target(&self, grid: &GridSpec) -> Vec<f64> {
        grid.sample(|x| self.target(x))
    }

    /// Checks on a concrete grid that every forced-region node has an enabled
    /// forced switch, that `l` is finite, and how often controlled resets
    /// leave the grid.
    pub fn validate(&self, grid: &GridSpec) -> ValidationReport {
        let total = grid.len();
        let mut report = ValidationReport::default();
        if grid.dim() != self.dim {
            report.dimension_mismatch = Some((self.dim, grid.dim()));
            return report;
        }
        let nonfinite = AtomicUsize::new(0);
        grid.for_each_node(|_, _, x| {
            if !self.target(x).is_finite() {
                nonfinite.fetch_add(1, Ordering::Relaxed);
            }
        });
        report.nonfinite_target = nonfinite.into_inner();

        for mode in &self.modes {
            let gaps = AtomicUsize::new(0);
            grid.for_each_node(|_, _, x| {
                if !mode.in_invariant(x) && !self.switches_from(mode.id, SwitchKind::Forced).any(|(_, s)| s.enabled(x)) {
                    gaps.fetch_add(1, Ordering::Relaxed);
                }
            });
            let gaps = gaps.into_inner();
            if gaps > 0 {
                report.forced_gaps.push(ForcedGap {
                    mode: mode.id,
                    nodes: gaps,
                    fraction: gaps as f64 / total as f64,
                });
            }
        }

        for (id, sw) in self.switches.iter().enumerate() {
            if sw.kind != SwitchKind::Controlled {
                continue;
            }
            let src = &self.modes[sw.from];
            let eligible = AtomicUsize::new(0);
            let escaped = AtomicUsize::new(0);
            grid.for_each_node(|_, _, x| {
                if src.in_invariant(x) && sw.enabled(x) {
                    eligible.fetch_add(1, Ordering::Relaxed);
                    let mut y = [0.0; MAX_DIM];
                    sw.reset_into(x, &mut y[..x.len()]);
                    if !grid.contains(&y[..x.len()]) {
                        escaped.fetch_add(1, Ordering::Relaxed);
                    }
                }
            });
            let (eligible, escaped) = (eligible.into_inner(), escaped.into_inner());
            if escaped > 0 {
                report.reset_escapes.push(ResetEscape {
                    switch: id,
                    nodes: escaped,
                    fraction: escaped as f64 / eligible as f64,
                });
            }
        }
        report
    }
}

/// Forced-region nodes of one mode without any enabled forced switch.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedGap {
    pub mode: usize,
    pub nodes: usize,
    /// Share of all grid nodes.
    pub fraction: f64,
}

/// In-invariant nodes whose controlled reset image leaves the grid box.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetEscape {
    pub switch: usize,
    pub nodes: usize,
    /// Share of the switch's eligible source nodes.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub forced_gaps: Vec<ForcedGap>,
    pub reset_escapes: Vec<ResetEscape>,
    pub nonfinite_target: usize,
    pub dimension_mismatch: Option<(usize, usize)>,
}

impl ValidationReport {
    /// Reset escapes are reported but do not invalidate the model; they are
    /// treated as infeasible switches by the solver.
    pub fn is_valid(&self) -> bool {
        self.forced_gaps.is_empty() && self.nonfinite_target == 0 && self.dimension_mismatch.is_none()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((model, grid)) = self.dimension_mismatch {
            writeln!(f, "dimension mismatch: model {model}, grid {grid}")?;
        }
        if self.nonfinite_target > 0 {
            writeln!(f, "target non-finite at {} nodes", self.nonfinite_target)?;
        }
        for g in &self.forced_gaps {
            writeln!(
                f,
                "mode {}: {} forced-region nodes ({:.4}%) have no forced switch",
                g.mode,
                g.nodes,
                100.0 * g.fraction
            )?;
        }
        for e in &self.reset_escapes {
            writeln!(
                f,
                "switch {}: reset leaves the grid from {} nodes ({:.4}% of eligible)",
                e.switch,
                e.nodes,
                100.0 * e.fraction
            )?;
        }
        if self.is_valid() {
            writeln!(f, "valid")?;
        }
        Ok(())
    }
}
