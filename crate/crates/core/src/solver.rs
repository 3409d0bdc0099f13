//! Backward propagation of one value field per discrete mode.
//!
//! Each step first advances every mode by one explicit Euler step of its own
//! variational inequality, then applies the discrete update to every mode
//! using the post-Euler fields: inside a mode's invariant the controller may
//! take any controlled switch (or stay), outside it the value is whatever the
//! enabled forced switches lead to.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{interpolate, GridSpec, OutOfBounds, ValueField, MAX_DIM};
use crate::hji::{dissipation_bounds, vi_euler_step_into, cfl_timestep, GameRole, StepWorkspace};
use crate::model::{HybridSystem, Owner, SwitchKind};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Horizon `T` in seconds; the march runs from `t = T` down to `t = 0`.
    pub horizon: f64,
    pub role: GameRole,
    pub cfl_factor: f64,
    pub max_dt: f64,
    /// Keep every k-th step; `t = T` and `t = 0` are always kept.
    pub snapshot_stride: usize,
    /// Replaces the owner of every forced switch when set.
    pub forced_owner_override: Option<Owner>,
    /// Magnitude of the value assigned to switches whose reset leaves the grid.
    pub large_value: f64,
    /// Worker count; 0 uses the ambient rayon pool.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            role: GameRole::Reach,
            cfl_factor: 0.8,
            max_dt: 0.1,
            snapshot_stride: 1,
            forced_owner_override: None,
            large_value: 1e6,
            threads: 0,
        }
    }
}

impl SolverConfig {
    pub fn new(horizon: f64, role: GameRole) -> Self {
        Self { horizon, role, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::usage(format!("horizon must be finite and >= 0, got {}", self.horizon)));
        }
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= 1.0) {
            return Err(Error::usage(format!("cfl_factor must lie in (0, 1], got {}", self.cfl_factor)));
        }
        if !(self.max_dt > 0.0) {
            return Err(Error::usage("max_dt must be positive"));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::usage("snapshot_stride must be at least 1"));
        }
        if !(self.large_value > 0.0 && self.large_value.is_finite()) {
            return Err(Error::usage("large_value must be positive and finite"));
        }
        Ok(())
    }

    /// The value standing in for an infeasible switch: the worst outcome
    /// for the controller.
    pub fn infeasible_value(&self) -> f64 {
        match self.role {
            GameRole::Reach => self.large_value,
            GameRole::Avoid => -self.large_value,
        }
    }
}

/// Run metadata. Equality ignores `wall_time`, which is not stored in
/// result files so that repeated runs write identical bytes.
#[derive(Debug, Clone)]
pub struct SolveMeta {
    pub grid: Arc<GridSpec>,
    pub config: SolverConfig,
    pub model: String,
    pub model_params: Vec<(String, String)>,
    pub mode_names: Vec<String>,
    pub state_names: Vec<String>,
    pub dt: f64,
    pub steps: usize,
    pub wall_time: f64,
}

impl PartialEq for SolveMeta {
    fn eq(&self, o: &Self) -> bool {
        self.grid == o.grid
            && self.config == o.config
            && self.model == o.model
            && self.model_params == o.model_params
            && self.mode_names == o.mode_names
            && self.state_names == o.state_names
            && self.dt.to_bits() == o.dt.to_bits()
            && self.steps == o.steps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Stored times, from `T` down to 0.
    pub times: Vec<f64>,
    /// `fields[mode][k]` is the value of `mode` at `times[k]`.
    pub fields: Vec<Vec<ValueField>>,
    pub meta: SolveMeta,
}

impl SolveResult {
    pub fn grid(&self) -> &GridSpec {
        &self.meta.grid
    }

    pub fn mode_count(&self) -> usize {
        self.fields.len()
    }

    pub fn horizon(&self) -> f64 {
        self.times[0]
    }

    pub fn field(&self, mode: usize, k: usize) -> &ValueField {
        &self.fields[mode][k]
    }

    /// Field at `t = 0`.
    pub fn initial(&self, mode: usize) -> &ValueField {
        self.fields[mode].last().expect("at least one snapshot")
    }

    /// Snapshot indices around `t` and the weight on the first of them.
    pub fn bracket(&self, t: f64) -> Result<(usize, usize, f64)> {
        let (t_hi, t_lo) = (self.times[0], *self.times.last().unwrap());
        if !(t >= t_lo && t <= t_hi) {
            return Err(Error::usage(format!("time {t} outside the stored range [{t_lo}, {t_hi}]")));
        }
        if self.times.len() == 1 {
            return Ok((0, 0, 1.0));
        }
        // times descend; find k with times[k] >= t >= times[k+1]
        let k = self.times.partition_point(|&s| s > t).saturating_sub(1).min(self.times.len() - 2);
        let (a, b) = (self.times[k], self.times[k + 1]);
        let w = if a > b { (t - b) / (a - b) } else { 1.0 };
        Ok((k, k + 1, w))
    }

    fn check_point(&self, x: &[f64], mode: usize) -> Result<()> {
        if x.len() != self.grid().dim() {
            return Err(Error::usage(format!("state has {} entries, grid has {} dimensions", x.len(), self.grid().dim())));
        }
        if mode >= self.mode_count() {
            return Err(Error::usage(format!("mode {mode} does not exist")));
        }
        if !self.grid().contains(x) {
            return Err(Error::usage(format!("state {x:?} lies outside the grid")));
        }
        Ok(())
    }

    /// Value at an arbitrary state and time: multilinear in space, linear in time.
    pub fn value(&self, x: &[f64], mode: usize, t: f64) -> Result<f64> {
        self.check_point(x, mode)?;
        let (a, b, w) = self.bracket(t)?;
        let va = self.fields[mode][a].interpolate(x, OutOfBounds::Clamp);
        if w == 1.0 {
            return Ok(va);
        }
        let vb = self.fields[mode][b].interpolate(x, OutOfBounds::Clamp);
        Ok(w * va + (1.0 - w) * vb)
    }
}

/// Whether `(x, mode)` lies in the tube at time `t`.
pub fn brt_membership(result: &SolveResult, x: &[f64], mode: usize, t: f64) -> Result<bool> {
    Ok(result.value(x, mode, t)? <= 0.0)
}

/// Everything the discrete update needs that does not change between steps.
struct SwitchContext<'a> {
    sys: &'a HybridSystem,
    grid: &'a GridSpec,
    role: GameRole,
    owner_override: Option<Owner>,
    infeasible: f64,
    inside: Vec<Vec<bool>>,
}

impl<'a> SwitchContext<'a> {
    fn new(sys: &'a HybridSystem, grid: &'a GridSpec, config: &SolverConfig) -> Self {
        let inside = sys.modes().iter().map(|m| grid.sample_bool(|x| m.in_invariant(x))).collect();
        Self {
            sys,
            grid,
            role: config.role,
            owner_override: config.forced_owner_override,
            infeasible: config.infeasible_value(),
            inside,
        }
    }

    fn switch_value(&self, post: &[Vec<f64>], id: usize, x: &[f64], y: &mut [f64]) -> f64 {
        let sw = self.sys.switch(id);
        sw.reset_into(x, y);
        interpolate(self.grid, &post[sw.to], y, OutOfBounds::Infeasible(self.infeasible))
    }

    /// Value of an in-invariant node: stay or take a controlled switch,
    /// never above the target function.
    fn controlled(&self, post: &[Vec<f64>], target: &[f64], mode: usize, flat: usize, x: &[f64]) -> f64 {
        let mut y = [0.0; MAX_DIM];
        let mut best = post[mode][flat];
        for (id, sw) in self.sys.switches_from(mode, SwitchKind::Controlled) {
            if sw.enabled(x) {
                best = self.role.control_pick(best, self.switch_value(post, id, x, &mut y[..x.len()]));
            }
        }
        best.min(target[flat])
    }

    /// Value of a forced-region node. Picked by the controller unless an
    /// enabled switch belongs to the adversary, in which case the adversary
    /// picks among all of them.
    fn forced(&self, post: &[Vec<f64>], mode: usize, x: &[f64]) -> Option<f64> {
        let mut y = [0.0; MAX_DIM];
        let mut ctrl: Option<f64> = None;
        let mut adv: Option<f64> = None;
        let mut any_adversary = false;
        for (id, sw) in self.sys.switches_from(mode, SwitchKind::Forced) {
            if !sw.enabled(x) {
                continue;
            }
            let v = self.switch_value(post, id, x, &mut y[..x.len()]);
            any_adversary |= self.owner_override.unwrap_or(sw.owner) == Owner::Adversary;
            ctrl = Some(ctrl.map_or(v, |c| self.role.control_pick(c, v)));
            adv = Some(adv.map_or(v, |a| if self.role.control_pick(a, v) == a { v } else { a }));
        }
        if any_adversary {
            adv
        } else {
            ctrl
        }
    }

    fn update_mode(&self, post: &[Vec<f64>], target: &[f64], mode: usize, out: &mut [f64]) -> Result<()> {
        let grid = self.grid;
        let dim = grid.dim();
        let inside = &self.inside[mode];
        out.par_chunks_mut(CHUNK).enumerate().try_for_each(|(c, chunk)| {
            let mut x = [0.0; MAX_DIM];
            for (off, slot) in chunk.iter_mut().enumerate() {
                let flat = c * CHUNK + off;
                grid.node_coords(flat, &mut x);
                let x = &x[..dim];
                *slot = if inside[flat] {
                    self.controlled(post, target, mode, flat, x)
                } else {
                    self.forced(post, mode, x).ok_or_else(|| {
                        Error::InvalidModel(format!(
                            "mode {} has no enabled forced switch at {x:?}",
                            self.sys.mode(mode).name()
                        ))
                    })?
                };
            }
            Ok(())
        })
    }
}

fn field_stack(sys: &HybridSystem, grid: &GridSpec, post: &[ValueField]) -> Result<Vec<Vec<f64>>> {
    if post.len() != sys.mode_count() {
        return Err(Error::usage(format!("expected {} fields, got {}", sys.mode_count(), post.len())));
    }
    if post.iter().any(|f| f.grid() != grid) {
        return Err(Error::usage("fields must share the grid"));
    }
    Ok(post.iter().map(|f| f.data().to_vec()).collect())
}

/// In-invariant update of `mode` from the post-Euler fields of every mode.
/// Forced-region nodes keep their post-Euler value.
pub fn controlled_switch_update(
    sys: &HybridSystem,
    post: &[ValueField],
    target: &ValueField,
    mode: usize,
    config: &SolverConfig,
) -> Result<ValueField> {
    let grid = target.grid();
    let stack = field_stack(sys, grid, post)?;
    let ctx = SwitchContext::new(sys, grid, config);
    let mut out = stack[mode].clone();
    grid.map_nodes_into(&mut out, |flat, x| {
        if ctx.inside[mode][flat] {
            ctx.controlled(&stack, target.data(), mode, flat, x)
        } else {
            stack[mode][flat]
        }
    });
    ValueField::new(target.grid_arc().clone(), out)
}

/// Forced-region update of `mode`; in-invariant nodes keep their post-Euler
/// value. No target clamp is applied here.
pub fn forced_region_update(sys: &HybridSystem, post: &[ValueField], mode: usize, config: &SolverConfig) -> Result<ValueField> {
    let grid_arc = post.first().ok_or_else(|| Error::usage("no fields"))?.grid_arc().clone();
    let stack = field_stack(sys, &grid_arc, post)?;
    let ctx = SwitchContext::new(sys, &grid_arc, config);
    let mut out = stack[mode].clone();
    let dim = grid_arc.dim();
    let mut x = vec![0.0; dim];
    for (flat, slot) in out.iter_mut().enumerate() {
        if ctx.inside[mode][flat] {
            continue;
        }
        grid_arc.node_coords(flat, &mut x);
        *slot = ctx
            .forced(&stack, mode, &x)
            .ok_or_else(|| Error::InvalidModel(format!("mode {mode} has no enabled forced switch at {x:?}")))?;
    }
    ValueField::new(grid_arc, out)
}

/// Uniform step count and size such that the last step lands exactly on 0.
pub fn step_schedule(horizon: f64, dt_max: f64) -> (usize, f64) {
    if horizon == 0.0 {
        return (0, 0.0);
    }
    let steps = (horizon / dt_max).ceil().max(1.0) as usize;
    (steps, horizon / steps as f64)
}

pub fn solve(sys: &HybridSystem, grid: &GridSpec, config: &SolverConfig) -> Result<SolveResult> {
    in_pool(config, || solve_in_pool(sys, grid, config, None))
}

/// Like [`solve`], but with caller-chosen dissipation coefficients, one row
/// per mode and dimension. Each entry must be at least the bound the solver
/// would compute itself. Two systems solved with the same coefficients share
/// the timestep, so their fields are comparable node by node.
pub fn solve_with_dissipation(
    sys: &HybridSystem,
    grid: &GridSpec,
    config: &SolverConfig,
    dissipation: &[Vec<f64>],
) -> Result<SolveResult> {
    in_pool(config, || solve_in_pool(sys, grid, config, Some(dissipation)))
}

fn in_pool<F>(config: &SolverConfig, run: F) -> Result<SolveResult>
where
    F: FnOnce() -> Result<SolveResult> + Send,
{
    config.validate()?;
    if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;
        pool.install(run)
    } else {
        run()
    }
}

fn solve_in_pool(
    sys: &HybridSystem,
    grid: &GridSpec,
    config: &SolverConfig,
    dissipation: Option<&[Vec<f64>]>,
) -> Result<SolveResult> {
    let started = Instant::now();
    let report = sys.validate(grid);
    if !report.is_valid() {
        return Err(Error::InvalidModel(report.to_string().trim_end().to_string()));
    }
    let grid_arc = Arc::new(grid.clone());
    let n_modes = sys.mode_count();
    let target = sys.sample_target(grid);

    let mut alphas: Vec<Vec<f64>> = sys.modes().iter().map(|m| dissipation_bounds(m, grid)).collect();
    if let Some(given) = dissipation {
        if given.len() != n_modes || given.iter().any(|a| a.len() != grid.dim()) {
            return Err(Error::usage(format!("dissipation needs {n_modes} rows of {} coefficients", grid.dim())));
        }
        for (q, (need, have)) in alphas.iter().zip(given).enumerate() {
            if let Some(k) = (0..need.len()).find(|&k| !(have[k] >= need[k])) {
                return Err(Error::usage(format!(
                    "dissipation for mode {q}, dimension {k} is {}, below the required {}",
                    have[k], need[k]
                )));
            }
        }
        alphas = given.to_vec();
    }
    let dt_cfl = cfl_timestep(&alphas, grid, config.cfl_factor, config.max_dt)?.min(config.max_dt);
    let (steps, dt) = step_schedule(config.horizon, dt_cfl);

    let mut workspaces: Vec<StepWorkspace> = alphas.into_iter().map(|a| StepWorkspace::new(grid, a)).collect();
    let ctx = SwitchContext::new(sys, grid, config);

    let mut current: Vec<Vec<f64>> = vec![target.clone(); n_modes];
    let mut post: Vec<Vec<f64>> = vec![vec![0.0; grid.len()]; n_modes];
    let mut times = vec![config.horizon];
    let mut fields: Vec<Vec<ValueField>> = current
        .iter()
        .map(|v| vec![ValueField::new(grid_arc.clone(), v.clone()).expect("sized")])
        .collect();

    for step in 1..=steps {
        let t = config.horizon - step as f64 * dt;
        for i in 0..n_modes {
            vi_euler_step_into(grid, &current[i], sys.mode(i), config.role, &target, dt, &mut workspaces[i], &mut post[i])?;
        }
        for (i, out) in current.iter_mut().enumerate() {
            ctx.update_mode(&post, &target, i, out)?;
            if out.par_iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { time: t, mode: i });
            }
        }
        if step % config.snapshot_stride == 0 || step == steps {
            let t = if step == steps { 0.0 } else { t };
            times.push(t);
            for (i, v) in current.iter().enumerate() {
                fields[i].push(ValueField::new(grid_arc.clone(), v.clone()).expect("sized"));
            }
        }
    }

    Ok(SolveResult {
        times,
        fields,
        meta: SolveMeta {
            grid: grid_arc,
            config: config.clone(),
            model: sys.name().to_string(),
            model_params: sys.params().to_vec(),
            mode_names: sys.modes().iter().map(|m| m.name().to_string()).collect(),
            state_names: sys.state_names().to_vec(),
            dt,
            steps,
            wall_time: started.elapsed().as_secs_f64(),
        },
    })
}
