//! Controller extraction from a solved value stack and closed-loop rollout.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{central_gradient_into, interpolate, OutOfBounds, MAX_DIM};
use crate::hji::{optimal_inputs, GameRole};
use crate::model::{HybridSystem, Owner, SwitchKind};
use crate::solver::SolveResult;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyQuery {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub u_star: Vec<f64>,
    pub d_star: Vec<f64>,
    /// Best legal switch: a controlled switch that strictly improves on
    /// staying, or the chosen forced switch outside the invariant.
    pub best_switch: Option<usize>,
    /// Value reached through `best_switch`, or `value` when there is none.
    pub switch_value: f64,
    pub in_invariant: bool,
}

/// Value of `mode` at an arbitrary point, with out-of-grid points mapped to
/// `infeasible`.
fn value_or(result: &SolveResult, x: &[f64], mode: usize, t: f64, infeasible: f64) -> Result<f64> {
    let (a, b, w) = result.bracket(t)?;
    let grid = result.grid();
    let oob = OutOfBounds::Infeasible(infeasible);
    let va = interpolate(grid, result.fields[mode][a].data(), x, oob);
    if w == 1.0 || va == infeasible {
        return Ok(va);
    }
    let vb = interpolate(grid, result.fields[mode][b].data(), x, oob);
    Ok(w * va + (1.0 - w) * vb)
}

fn gradient_at(result: &SolveResult, x: &[f64], mode: usize, t: f64) -> Result<Vec<f64>> {
    let (a, b, w) = result.bracket(t)?;
    let grid = result.grid();
    let dim = grid.dim();
    let mut ga = [0.0; MAX_DIM];
    central_gradient_into(grid, result.fields[mode][a].data(), x, OutOfBounds::Clamp, &mut ga);
    if w != 1.0 {
        let mut gb = [0.0; MAX_DIM];
        central_gradient_into(grid, result.fields[mode][b].data(), x, OutOfBounds::Clamp, &mut gb);
        for k in 0..dim {
            ga[k] = w * ga[k] + (1.0 - w) * gb[k];
        }
    }
    Ok(ga[..dim].to_vec())
}

/// Forced switch chosen at `x` and the value it leads to. The controller
/// picks unless an enabled switch is adversary-owned.
fn forced_choice(result: &SolveResult, sys: &HybridSystem, x: &[f64], mode: usize, t: f64) -> Result<Option<(usize, f64)>> {
    let cfg = &result.meta.config;
    let role = cfg.role;
    let infeasible = cfg.infeasible_value();
    let mut ctrl: Option<(usize, f64)> = None;
    let mut adv: Option<(usize, f64)> = None;
    let mut any_adversary = false;
    for (id, sw) in sys.switches_from(mode, SwitchKind::Forced) {
        if !sw.enabled(x) {
            continue;
        }
        let v = value_or(result, &sw.reset(x), sw.to, t, infeasible)?;
        any_adversary |= cfg.forced_owner_override.unwrap_or(sw.owner) == Owner::Adversary;
        if ctrl.is_none_or(|(_, c)| role.control_prefers(v, c)) {
            ctrl = Some((id, v));
        }
        if adv.is_none_or(|(_, a)| role.control_prefers(a, v)) {
            adv = Some((id, v));
        }
    }
    Ok(if any_adversary { adv } else { ctrl })
}

/// Optimal continuous inputs and discrete choice at `(x, mode, t)`.
pub fn query(result: &SolveResult, sys: &HybridSystem, x: &[f64], mode: usize, t: f64, role: GameRole) -> Result<PolicyQuery> {
    if sys.mode_count() != result.mode_count() || sys.dim() != result.grid().dim() {
        return Err(Error::usage("result and system do not match"));
    }
    let value = result.value(x, mode, t)?;
    let gradient = gradient_at(result, x, mode, t)?;
    let m = sys.mode(mode);
    let inputs = optimal_inputs(m, x, &gradient, role)?;
    let in_invariant = m.in_invariant(x);

    let (best_switch, switch_value) = if in_invariant {
        let infeasible = result.meta.config.infeasible_value();
        let mut best: Option<(usize, f64)> = None;
        for (id, sw) in sys.switches_from(mode, SwitchKind::Controlled) {
            if !sw.enabled(x) {
                continue;
            }
            let v = value_or(result, &sw.reset(x), sw.to, t, infeasible)?;
            let beats = best.map_or(value, |(_, b)| b);
            if role.control_prefers(v, beats) {
                best = Some((id, v));
            }
        }
        best.map_or((None, value), |(id, v)| (Some(id), v))
    } else {
        match forced_choice(result, sys, x, mode, t)? {
            Some((id, v)) => (Some(id), v),
            None => (None, value),
        }
    };

    Ok(PolicyQuery {
        value,
        gradient,
        u_star: inputs.u,
        d_star: inputs.d,
        best_switch,
        switch_value,
        in_invariant,
    })
}

/// How the disturbance channel is driven during a rollout.
#[derive(Clone, Default)]
pub enum DisturbancePolicy {
    /// The box point nearest to zero.
    #[default]
    None,
    /// The adversary's optimal response to the value gradient.
    WorstCase,
    /// `d(t)`, clamped into the box.
    Scripted(Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
}

impl fmt::Debug for DisturbancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DisturbancePolicy::None => "None",
            DisturbancePolicy::WorstCase => "WorstCase",
            DisturbancePolicy::Scripted(_) => "Scripted",
        })
    }
}

impl FromStr for DisturbancePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(DisturbancePolicy::None),
            "worst_case" => Ok(DisturbancePolicy::WorstCase),
            other => Err(Error::usage(format!("unknown disturbance policy {other:?} (expected none or worst_case)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchEventKind {
    Controlled,
    Forced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchEvent {
    pub kind: SwitchEventKind,
    pub switch: usize,
    pub from: usize,
    pub to: usize,
    pub x_before: Vec<f64>,
    pub x_after: Vec<f64>,
    /// Improvement of the one-step lookahead value that justified a
    /// controlled switch; 0 for forced switches.
    pub drop: f64,
}

/// State at time `t` after any switches applied at that instant, and the
/// inputs held until the next record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub mode: usize,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub events: Vec<SwitchEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutStatus {
    ReachedTarget,
    HorizonExhausted,
    Frozen,
    LeftGrid,
}

impl RolloutStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RolloutStatus::ReachedTarget => "REACHED_TARGET",
            RolloutStatus::HorizonExhausted => "HORIZON_EXHAUSTED",
            RolloutStatus::Frozen => "FROZEN",
            RolloutStatus::LeftGrid => "LEFT_GRID",
        }
    }
}

impl fmt::Display for RolloutStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub status: RolloutStatus,
}

impl Trajectory {
    pub fn events(&self) -> impl Iterator<Item = &SwitchEvent> {
        self.records.iter().flat_map(|r| r.events.iter())
    }

    /// Modes visited, with consecutive repeats collapsed.
    pub fn mode_sequence(&self) -> Vec<usize> {
        let mut seq: Vec<usize> = Vec::new();
        for r in &self.records {
            for e in &r.events {
                if seq.is_empty() {
                    seq.push(e.from);
                }
                seq.push(e.to);
            }
            if seq.is_empty() {
                seq.push(r.mode);
            }
        }
        seq.dedup();
        seq
    }
}

#[derive(Debug, Clone, Default)]
pub struct RolloutConfig {
    /// Integration step; defaults to a quarter of the solver step.
    pub dt_sim: Option<f64>,
    pub disturbance: DisturbancePolicy,
    /// Controlled-switch margin as a value rate (value units per second);
    /// defaults to 1% of the sampled target range per second.
    pub margin: Option<f64>,
}

/// One classical Runge-Kutta step with inputs held constant.
fn rk4(sys: &HybridSystem, mode: usize, x: &[f64], u: &[f64], d: &[f64], h: f64) -> Vec<f64> {
    let m = sys.mode(mode);
    let n = x.len();
    let k1 = m.dynamics_at(x, u, d);
    let shift = |k: &[f64], s: f64| -> Vec<f64> { (0..n).map(|i| x[i] + s * k[i]).collect() };
    let k2 = m.dynamics_at(&shift(&k1, 0.5 * h), u, d);
    let k3 = m.dynamics_at(&shift(&k2, 0.5 * h), u, d);
    let k4 = m.dynamics_at(&shift(&k3, h), u, d);
    (0..n).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

struct Roller<'a> {
    result: &'a SolveResult,
    sys: &'a HybridSystem,
    role: GameRole,
    horizon: f64,
    infeasible: f64,
    disturbance: DisturbancePolicy,
}

impl Roller<'_> {
    fn disturbance_at(&self, mode: usize, t: f64, q: &PolicyQuery) -> Vec<f64> {
        let dbox = self.sys.mode(mode).disturbance_box();
        match &self.disturbance {
            DisturbancePolicy::None => dbox.nearest_to_zero(),
            DisturbancePolicy::WorstCase => q.d_star.clone(),
            DisturbancePolicy::Scripted(f) => {
                let raw = f(t);
                (0..dbox.dim())
                    .map(|j| raw.get(j).copied().unwrap_or(0.0).clamp(dbox.lo()[j], dbox.hi()[j]))
                    .collect()
            }
        }
    }

    /// Value after flowing one step of length `h` in `mode` from `x` under
    /// the optimal inputs and the worst-case disturbance. Starting or landing
    /// in the forced region is resolved through the forced choice.
    fn lookahead(&self, x: &[f64], mode: usize, t: f64, h: f64) -> Result<f64> {
        if !self.result.grid().contains(x) {
            return Ok(self.infeasible);
        }
        if !self.sys.mode(mode).in_invariant(x) {
            let forced = forced_choice(self.result, self.sys, x, mode, t)?;
            return Ok(forced.map_or(self.infeasible, |(_, v)| v));
        }
        let q = query(self.result, self.sys, x, mode, t, self.role)?;
        let next = rk4(self.sys, mode, x, &q.u_star, &q.d_star, h);
        let t_next = (t + h).min(self.horizon);
        if !self.result.grid().contains(&next) {
            return Ok(self.infeasible);
        }
        if self.sys.mode(mode).in_invariant(&next) {
            return value_or(self.result, &next, mode, t_next, self.infeasible);
        }
        Ok(forced_choice(self.result, self.sys, &next, mode, t_next)?.map_or(self.infeasible, |(_, v)| v))
    }

    fn is_frozen(&self, x: &[f64], mode: usize) -> bool {
        let mut s = [0.0; MAX_DIM];
        self.sys.mode(mode).speed_bounds(x, &mut s[..x.len()]);
        s[..x.len()].iter().all(|&v| v == 0.0) && !self.sys.has_outgoing(mode)
    }

    /// Applies forced switches until `x` is inside the current invariant.
    fn apply_forced(&self, x: &mut Vec<f64>, mode: &mut usize, t: f64, events: &mut Vec<SwitchEvent>) -> Result<()> {
        for _ in 0..=self.sys.mode_count() {
            if self.sys.mode(*mode).in_invariant(x) {
                return Ok(());
            }
            let Some((id, _)) = forced_choice(self.result, self.sys, x, *mode, t)? else {
                return Err(Error::InvalidModel(format!("no enabled forced switch from mode {} at {x:?}", *mode)));
            };
            let sw = self.sys.switch(id);
            let after = sw.reset(x);
            events.push(SwitchEvent {
                kind: SwitchEventKind::Forced,
                switch: id,
                from: *mode,
                to: sw.to,
                x_before: x.clone(),
                x_after: after.clone(),
                drop: 0.0,
            });
            *x = after;
            *mode = sw.to;
            if !self.result.grid().contains(x) {
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Closed-loop simulation from `(x0, q0)` at time `t0` up to the horizon.
///
/// Forced switches fire as soon as the state leaves the invariant. A
/// controlled switch is taken when its one-step lookahead value beats
/// staying by more than `margin * dt_sim`, which bounds the number of
/// controlled switches by the total lookahead improvement over that margin.
pub fn rollout(
    result: &SolveResult,
    sys: &HybridSystem,
    x0: &[f64],
    q0: usize,
    t0: f64,
    config: &RolloutConfig,
) -> Result<Trajectory> {
    let horizon = result.horizon();
    if !(t0 >= 0.0 && t0 <= horizon) {
        return Err(Error::usage(format!("start time {t0} outside [0, {horizon}]")));
    }
    if q0 >= sys.mode_count() || x0.len() != sys.dim() {
        return Err(Error::usage("start state does not match the system"));
    }
    let dt_sim = config.dt_sim.unwrap_or(result.meta.dt / 4.0);
    if !(dt_sim > 0.0) {
        return Err(Error::usage("dt_sim must be positive"));
    }
    let role = result.meta.config.role;
    let margin = match config.margin {
        Some(m) => m,
        None => {
            let l = sys.sample_target(result.grid());
            let (lo, hi) = l.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            0.01 * (hi - lo)
        }
    };
    let roller = Roller {
        result,
        sys,
        role,
        horizon,
        infeasible: result.meta.config.infeasible_value(),
        disturbance: config.disturbance.clone(),
    };

    let mut x = x0.to_vec();
    let mut mode = q0;
    let mut t = t0;
    let mut events = Vec::new();
    let grid = result.grid();
    if grid.contains(&x) {
        roller.apply_forced(&mut x, &mut mode, t, &mut events)?;
    }
    let mut records = Vec::new();
    // stop slightly early so float drift never produces a sliver step
    let t_end = horizon - 1e-9 * dt_sim;

    let status = loop {
        let terminal = if sys.target(&x) <= 0.0 {
            Some(RolloutStatus::ReachedTarget)
        } else if !grid.contains(&x) {
            Some(RolloutStatus::LeftGrid)
        } else if roller.is_frozen(&x, mode) {
            Some(RolloutStatus::Frozen)
        } else if t >= t_end {
            Some(RolloutStatus::HorizonExhausted)
        } else {
            None
        };
        if let Some(status) = terminal {
            records.push(TrajectoryRecord {
                t,
                x: x.clone(),
                mode,
                u: sys.mode(mode).control_box().nearest_to_zero(),
                d: sys.mode(mode).disturbance_box().nearest_to_zero(),
                events: std::mem::take(&mut events),
            });
            break status;
        }

        let q = query(result, sys, &x, mode, t, role)?;
        let u = q.u_star.clone();
        let d = roller.disturbance_at(mode, t, &q);
        records.push(TrajectoryRecord {
            t,
            x: x.clone(),
            mode,
            u: u.clone(),
            d: d.clone(),
            events: std::mem::take(&mut events),
        });

        let h = dt_sim.min(horizon - t);
        x = rk4(sys, mode, &x, &u, &d, h);
        t = if horizon - (t + h) < 1e-12 * horizon.max(1.0) { horizon } else { t + h };
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalDomain { mode, x });
        }
        if !grid.contains(&x) {
            continue;
        }

        if !sys.mode(mode).in_invariant(&x) {
            roller.apply_forced(&mut x, &mut mode, t, &mut events)?;
            continue;
        }
        if t >= t_end {
            continue;
        }
        let h_next = dt_sim.min(horizon - t);
        let stay = roller.lookahead(&x, mode, t, h_next)?;
        let mut best: Option<(usize, f64)> = None;
        for (id, sw) in sys.switches_from(mode, SwitchKind::Controlled) {
            if !sw.enabled(&x) {
                continue;
            }
            let w = roller.lookahead(&sw.reset(&x), sw.to, t, h_next)?;
            if best.is_none_or(|(_, b)| role.control_prefers(w, b)) {
                best = Some((id, w));
            }
        }
        if let Some((id, w)) = best {
            let drop = match role {
                GameRole::Reach => stay - w,
                GameRole::Avoid => w - stay,
            };
            if drop > margin * h_next {
                let sw = sys.switch(id);
                let after = sw.reset(&x);
                events.push(SwitchEvent {
                    kind: SwitchEventKind::Controlled,
                    switch: id,
                    from: mode,
                    to: sw.to,
                    x_before: x.clone(),
                    x_after: after.clone(),
                    drop,
                });
                x = after;
                mode = sw.to;
                if grid.contains(&x) {
                    roller.apply_forced(&mut x, &mut mode, t, &mut events)?;
                }
            }
        }
    };
    Ok(Trajectory { records, status })
}

/// Smallest time-to-go `T - t` at which `(x, mode)` is in the tube,
/// interpolated linearly between snapshots.
pub fn time_to_reach(result: &SolveResult, x: &[f64], mode: usize) -> Result<Option<f64>> {
    let horizon = result.horizon();
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..result.times.len() {
        let t = result.times[k];
        let v = result.value(x, mode, t)?;
        let tau = horizon - t;
        if v <= 0.0 {
            return Ok(Some(match prev {
                None => tau,
                Some((tau0, v0)) => tau0 + (tau - tau0) * v0 / (v0 - v),
            }));
        }
        prev = Some((tau, v));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::solver::{solve, SolverConfig};
    use crate::systems::make_dog1d;

    fn dog_result(t: f64, stride: usize) -> (HybridSystem, SolveResult) {
        let sys = make_dog1d();
        let grid = GridSpec::uniform(vec![0.0], vec![10.0], vec![301]).unwrap();
        let cfg = SolverConfig { snapshot_stride: stride, ..SolverConfig::new(t, GameRole::Reach) };
        let r = solve(&sys, &grid, &cfg).unwrap();
        (sys, r)
    }

    #[test]
    fn query_in_forced_region_names_the_freeze() {
        let (sys, r) = dog_result(3.0, 10);
        let q = query(&r, &sys, &[5.5], 0, 1.5, GameRole::Reach).unwrap();
        assert!(!q.in_invariant);
        assert_eq!(q.best_switch, Some(2));
    }

    #[test]
    fn crawling_under_the_table_stays() {
        let (sys, r) = dog_result(3.0, 10);
        let q = query(&r, &sys, &[5.5], 1, 1.5, GameRole::Reach).unwrap();
        assert!(q.in_invariant);
        assert_eq!(q.best_switch, None);
        assert_eq!(q.switch_value, q.value);
        assert_eq!(q.u_star, vec![1.0]);
    }

    #[test]
    fn walking_and_crawling_values_tie_where_both_are_free() {
        // the stored fields already contain the switch option, so switching
        // from crawl to walk at x = 3 is never a strict improvement
        let (sys, r) = dog_result(3.0, 10);
        let q = query(&r, &sys, &[3.0], 1, 0.0, GameRole::Reach).unwrap();
        let walk = r.value(&[3.0], 0, 0.0).unwrap();
        assert_eq!(q.value, walk);
        assert_eq!(q.best_switch, None);
    }

    #[test]
    fn start_in_target_is_a_single_record() {
        let (sys, r) = dog_result(1.0, 10);
        let tr = rollout(&r, &sys, &[9.5], 0, 0.0, &RolloutConfig::default()).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.status, RolloutStatus::ReachedTarget);
    }

    #[test]
    fn outside_the_tube_runs_out_of_time() {
        let (sys, r) = dog_result(3.0, 10);
        let tr = rollout(&r, &sys, &[1.5], 0, 0.0, &RolloutConfig::default()).unwrap();
        assert_eq!(tr.status, RolloutStatus::HorizonExhausted);
        assert!(tr.records.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(tr.records.last().unwrap().t, 3.0);
    }

    #[test]
    fn walk_crawl_walk() {
        let (sys, r) = dog_result(3.0, 10);
        let x0 = 2.0 + 2.0 / 30.0;
        let tr = rollout(&r, &sys, &[x0], 0, 0.0, &RolloutConfig::default()).unwrap();
        assert_eq!(tr.status, RolloutStatus::ReachedTarget);
        assert_eq!(tr.mode_sequence(), vec![0, 1, 0]);
        let first = query(&r, &sys, &[x0], 0, 0.0, GameRole::Reach).unwrap();
        assert_eq!(tr.records[0].u, first.u_star);
        for e in tr.events() {
            assert_eq!(e.x_after, sys.switch(e.switch).reset(&e.x_before));
        }
    }

    #[test]
    fn walking_into_the_table_freezes() {
        // the frozen mode is a sink
        let sys = make_dog1d().without_switch(0);
        let grid = GridSpec::uniform(vec![0.0], vec![10.0], vec![101]).unwrap();
        let r = solve(&sys, &grid, &SolverConfig::new(2.0, GameRole::Reach)).unwrap();
        let tr = rollout(&r, &sys, &[4.0], 0, 0.0, &RolloutConfig { margin: Some(0.0), ..Default::default() }).unwrap();
        // no way to cross: either frozen or idle until the horizon
        assert_ne!(tr.status, RolloutStatus::ReachedTarget);
        assert!(tr.records.iter().all(|rec| sys.mode(rec.mode).in_invariant(&rec.x)));
    }

    #[test]
    fn time_to_reach_examples() {
        let (sys, r) = dog_result(3.0, 5);
        let _ = sys;
        assert_eq!(time_to_reach(&r, &[9.5], 0).unwrap(), Some(0.0));
        let tau = time_to_reach(&r, &[2.0 + 2.0 / 30.0], 0).unwrap().unwrap();
        assert!((tau - 3.0).abs() < 0.1, "{tau}");
        assert_eq!(time_to_reach(&r, &[1.5], 0).unwrap(), None);
    }
}
