//! Quadruped center-of-mass kinematics `[x, y, heading]` with terrain-driven
//! gait modes (normal, slope, slow, tilt, freeze).

use crate::error::{Error, Result};
use crate::model::{Dynamics, HybridSystem, InputBox, Mode, Switch};

use super::{fmt_f64, fmt_list, parse_f64, parse_list, ParamSet};

pub const MODE_NAMES: [&str; 5] = ["normal", "slope", "slow", "tilt", "freeze"];

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    /// Signed distance-like function, `<= 0` inside.
    pub fn signed(&self, x: &[f64]) -> f64 {
        (self.x0 - x[0]).max(x[0] - self.x1).max(self.y0 - x[1]).max(x[1] - self.y1)
    }

    fn parse(key: &str, s: &str) -> Result<Self> {
        let v = parse_list(key, s)?;
        match v[..] {
            [x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Ok(Self::new(x0, x1, y0, y1)),
            _ => Err(Error::usage(format!("{key}: expected x0,x1,y0,y1 with x0 < x1 and y0 < y1"))),
        }
    }

    fn format(&self) -> String {
        fmt_list(&[self.x0, self.x1, self.y0, self.y1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupedParams {
    pub forward_speed: f64,
    pub turn_max: f64,
    /// `(k_x, k_y, k_w)` per mode, in `MODE_NAMES` order.
    pub gains: [[f64; 3]; 5],
    /// Symmetric bound on each planar disturbance channel, per mode.
    pub disturbance: [f64; 5],
    pub slope: Rect,
    pub tilt: Rect,
    pub obstacles: Vec<Rect>,
    pub target_x: f64,
    pub target_y: f64,
    pub target_radius: f64,
}

impl Default for QuadrupedParams {
    fn default() -> Self {
        Self {
            forward_speed: 0.25,
            turn_max: 0.5,
            gains: [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [0.5, 0.5, 1.4], [0.8, 0.8, 1.0], [0.0, 0.0, 0.0]],
            disturbance: [0.02, 0.05, 0.02, 0.02, 0.0],
            slope: Rect::new(2.5, 3.5, 0.5, 1.5),
            tilt: Rect::new(0.5, 1.5, 2.5, 3.5),
            obstacles: vec![Rect::new(1.75, 2.25, 1.5, 2.5)],
            target_x: 2.0,
            target_y: 3.5,
            target_radius: 0.3,
        }
    }
}

impl ParamSet for QuadrupedParams {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(mode) = key.strip_prefix("gain_") {
            let i = mode_index(key, mode)?;
            let v = parse_list(key, value)?;
            if v.len() != 3 {
                return Err(Error::usage(format!("{key}: expected three gains")));
            }
            self.gains[i].copy_from_slice(&v);
            return Ok(());
        }
        if let Some(mode) = key.strip_prefix("disturbance_") {
            let i = mode_index(key, mode)?;
            let b = parse_f64(key, value)?;
            if b < 0.0 {
                return Err(Error::usage(format!("{key}: bound must be nonnegative")));
            }
            self.disturbance[i] = b;
            return Ok(());
        }
        match key {
            "forward_speed" => self.forward_speed = parse_f64(key, value)?,
            "turn_max" => self.turn_max = parse_f64(key, value)?,
            "slope" => self.slope = Rect::parse(key, value)?,
            "tilt" => self.tilt = Rect::parse(key, value)?,
            "obstacles" => {
                self.obstacles = value
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| Rect::parse(key, s))
                    .collect::<Result<_>>()?
            }
            "target_x" => self.target_x = parse_f64(key, value)?,
            "target_y" => self.target_y = parse_f64(key, value)?,
            "target_radius" => self.target_radius = parse_f64(key, value)?,
            _ => return Err(Error::usage(format!("unknown quadruped3d parameter {key:?}"))),
        }
        Ok(())
    }

    fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("forward_speed".to_string(), fmt_f64(self.forward_speed)),
            ("turn_max".to_string(), fmt_f64(self.turn_max)),
        ];
        for (i, name) in MODE_NAMES.iter().enumerate() {
            out.push((format!("gain_{name}"), fmt_list(&self.gains[i])));
        }
        for (i, name) in MODE_NAMES.iter().enumerate() {
            out.push((format!("disturbance_{name}"), fmt_f64(self.disturbance[i])));
        }
        out.push(("slope".into(), self.slope.format()));
        out.push(("tilt".into(), self.tilt.format()));
        out.push(("obstacles".into(), self.obstacles.iter().map(Rect::format).collect::<Vec<_>>().join(";")));
        out.push(("target_x".into(), fmt_f64(self.target_x)));
        out.push(("target_y".into(), fmt_f64(self.target_y)));
        out.push(("target_radius".into(), fmt_f64(self.target_radius)));
        out
    }
}

fn mode_index(key: &str, mode: &str) -> Result<usize> {
    MODE_NAMES
        .iter()
        .position(|m| *m == mode)
        .ok_or_else(|| Error::usage(format!("unknown quadruped3d parameter {key:?}")))
}

fn gait_mode(p: &QuadrupedParams, i: usize) -> Result<Mode> {
    let [kx, ky, kw] = p.gains[i];
    let v = p.forward_speed;
    let b = p.disturbance[i];
    let dbox = if b > 0.0 { InputBox::new(vec![-b, -b], vec![b, b])? } else { InputBox::empty() };
    let planar = dbox.dim() > 0;
    Ok(Mode::new(
        MODE_NAMES[i],
        3,
        Dynamics::affine(
            move |x, f| {
                f[0] = kx * v * x[2].sin();
                f[1] = ky * v * x[2].cos();
                f[2] = 0.0;
            },
            move |_, c| {
                c[0] = 0.0;
                c[1] = 0.0;
                c[2] = kw;
            },
            move |_, c| {
                if planar {
                    c.copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
                }
            },
        ),
        InputBox::new(vec![-p.turn_max], vec![p.turn_max])?,
        dbox,
    ))
}

pub fn build(p: &QuadrupedParams) -> Result<HybridSystem> {
    if !(p.turn_max >= 0.0) {
        return Err(Error::usage("quadruped3d needs turn_max >= 0"));
    }
    let obstacles = p.obstacles.clone();
    let obstacle = move |x: &[f64]| obstacles.iter().map(|r| r.signed(x)).fold(f64::INFINITY, f64::min);
    let (slope, tilt) = (p.slope, p.tilt);
    // flat ground: outside every special region
    let flat = {
        let obstacle = obstacle.clone();
        move |x: &[f64]| (-slope.signed(x)).max(-tilt.signed(x)).max(-obstacle(x))
    };

    let mut modes = Vec::with_capacity(5);
    for i in 0..4 {
        modes.push(gait_mode(p, i)?);
    }
    modes[0] = modes[0].clone().with_invariant(flat.clone());
    modes[2] = modes[2].clone().with_invariant(flat);
    {
        let o = obstacle.clone();
        modes[1] = modes[1].clone().with_invariant(move |x| slope.signed(x).max(-o(x)));
        let o = obstacle.clone();
        modes[3] = modes[3].clone().with_invariant(move |x| tilt.signed(x).max(-o(x)));
    }
    modes.push(Mode::new("freeze", 3, Dynamics::zero(), InputBox::empty(), InputBox::empty()));

    let mut switches = vec![Switch::controlled("normal->slow", 0, 2), Switch::controlled("slow->normal", 2, 0)];
    for (from, name) in [(0usize, "normal"), (2, "slow")] {
        switches.push(Switch::forced(format!("{name}->slope"), from, 1).with_guard(move |x| slope.signed(x)));
        switches.push(Switch::forced(format!("{name}->tilt"), from, 3).with_guard(move |x| tilt.signed(x)));
        let o = obstacle.clone();
        switches.push(Switch::forced(format!("{name}->freeze"), from, 4).with_guard(move |x| o(x)));
    }
    for (from, name, region) in [(1usize, "slope", slope), (3, "tilt", tilt)] {
        switches.push(Switch::forced(format!("{name}->normal"), from, 0).with_guard(move |x| -region.signed(x)));
        let o = obstacle.clone();
        switches.push(Switch::forced(format!("{name}->freeze"), from, 4).with_guard(move |x| o(x)));
    }

    let (cx, cy, r) = (p.target_x, p.target_y, p.target_radius);
    let sys = HybridSystem::new("quadruped3d", 3, modes, switches, move |x| (x[0] - cx).hypot(x[1] - cy) - r)?;
    Ok(sys.with_state_names(&["x", "y", "heading"]).with_params(p.entries()))
}
