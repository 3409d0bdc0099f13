//! CSV exports for plotting: value-function slices and rollout traces.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::OutOfBounds;
use crate::policy::{SwitchEventKind, Trajectory};
use crate::solver::SolveResult;

/// Writes the field of `mode` at time `t` with the listed dimensions pinned.
///
/// At most two dimensions may stay free. Free dimensions are walked over
/// their grid nodes (first free dimension slowest); pinned values may fall
/// between nodes and are interpolated.
pub fn export_slice(result: &SolveResult, mode: usize, t: f64, fixed: &[(usize, f64)], path: &Path) -> Result<()> {
    write_slice(result, mode, t, fixed, File::create(path)?)
}

pub fn write_slice<W: Write>(result: &SolveResult, mode: usize, t: f64, fixed: &[(usize, f64)], out: W) -> Result<()> {
    let grid = result.grid();
    let dim = grid.dim();
    if mode >= result.mode_count() {
        return Err(Error::usage(format!("mode {mode} does not exist")));
    }
    let mut pinned: Vec<Option<f64>> = vec![None; dim];
    for &(k, v) in fixed {
        if k >= dim {
            return Err(Error::usage(format!("over-constrained slice: dimension {k} does not exist (grid has {dim})")));
        }
        if pinned[k].is_some() {
            return Err(Error::usage(format!("over-constrained slice: dimension {k} is fixed twice")));
        }
        if !grid.periodic()[k] && !(v >= grid.lo()[k] && v <= grid.hi()[k]) {
            return Err(Error::usage(format!("slice value {v} for dimension {k} lies outside the grid")));
        }
        pinned[k] = Some(v);
    }
    let free: Vec<usize> = (0..dim).filter(|&k| pinned[k].is_none()).collect();
    if free.len() > 2 {
        return Err(Error::usage(format!(
            "under-constrained slice: {} free dimensions, at most 2 can be exported",
            free.len()
        )));
    }

    let (a, b, w) = result.bracket(t)?;
    let (fa, fb) = (result.field(mode, a), result.field(mode, b));
    let names = &result.meta.state_names;
    let mut wtr = csv::Writer::from_writer(out);
    let mut head: Vec<String> = free.iter().map(|&k| names.get(k).cloned().unwrap_or_else(|| format!("x{k}"))).collect();
    head.push("value".into());
    wtr.write_record(&head)?;

    let counts: Vec<usize> = free.iter().map(|&k| grid.n()[k]).collect();
    let total: usize = counts.iter().product();
    let mut x: Vec<f64> = pinned.iter().map(|p| p.unwrap_or(0.0)).collect();
    let mut row: Vec<String> = Vec::with_capacity(free.len() + 1);
    for flat in 0..total {
        let mut rem = flat;
        for (j, &k) in free.iter().enumerate().rev() {
            x[k] = grid.coord(k, rem % counts[j]);
            rem /= counts[j];
        }
        let va = fa.interpolate(&x, OutOfBounds::Clamp);
        let v = if w == 1.0 { va } else { w * va + (1.0 - w) * fb.interpolate(&x, OutOfBounds::Clamp) };
        row.clear();
        row.extend(free.iter().map(|&k| x[k].to_string()));
        row.push(v.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes one row per record: `t, x0.., mode, u0.., d0.., event`, then a
/// `# status=...` comment line.
pub fn export_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    write_trajectory(traj, File::create(path)?)
}

fn pad(v: &[f64], n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| v.get(i).map_or(String::new(), |x| x.to_string()))
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let width = |f: fn(&crate::policy::TrajectoryRecord) -> usize| traj.records.iter().map(f).max().unwrap_or(0);
    let (nx, nu, nd) = (width(|r| r.x.len()), width(|r| r.u.len()), width(|r| r.d.len()));

    let mut wtr = csv::Writer::from_writer(out);
    let mut head = vec!["t".to_string()];
    head.extend((0..nx).map(|i| format!("x{i}")));
    head.push("mode".into());
    head.extend((0..nu).map(|i| format!("u{i}")));
    head.extend((0..nd).map(|i| format!("d{i}")));
    head.push("event".into());
    wtr.write_record(&head)?;

    for r in &traj.records {
        let mut row = vec![r.t.to_string()];
        row.extend(pad(&r.x, nx));
        row.push(r.mode.to_string());
        row.extend(pad(&r.u, nu));
        row.extend(pad(&r.d, nd));
        let events: Vec<String> = r
            .events
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    SwitchEventKind::Controlled => "CONTROLLED_SWITCH",
                    SwitchEventKind::Forced => "FORCED_SWITCH",
                };
                format!("{kind}:{}:{}->{}", e.switch, e.from, e.to)
            })
            .collect();
        row.push(events.join(";"));
        wtr.write_record(&row)?;
    }
    let mut out = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    writeln!(out, "# status={}", traj.status)?;
    out.flush()?;
    Ok(())
}
