//! Planar one-legged jumper: stance, ballistic flight and freeze on terrain
//! contact. State `[x, y, vx, vy]`.

use crate::error::{Error, Result};
use crate::model::{Dynamics, HybridSystem, InputBox, Mode, Switch};

use super::{fmt_f64, parse_f64, ParamSet};

#[derive(Debug, Clone, PartialEq)]
pub struct JumperParams {
    pub mass: f64,
    pub gravity: f64,
    pub leg_length: f64,
    pub force_max: f64,
    pub platform_x0: f64,
    pub platform_x1: f64,
    pub platform_height: f64,
    pub target_x: f64,
    pub target_y: f64,
    pub target_radius: f64,
    /// Slope of the target function inside the disk. Values above 1 deepen
    /// the well without moving its zero level.
    pub target_depth: f64,
}

impl Default for JumperParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.81,
            leg_length: 0.5,
            force_max: 30.0,
            platform_x0: 3.0,
            platform_x1: 5.0,
            platform_height: 0.6,
            target_x: 3.8,
            target_y: 1.0,
            target_radius: 0.35,
            target_depth: 30.0,
        }
    }
}

impl ParamSet for JumperParams {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = parse_f64(key, value)?;
        match key {
            "mass" => self.mass = v,
            "gravity" => self.gravity = v,
            "leg_length" => self.leg_length = v,
            "force_max" => self.force_max = v,
            "platform_x0" => self.platform_x0 = v,
            "platform_x1" => self.platform_x1 = v,
            "platform_height" => self.platform_height = v,
            "target_x" => self.target_x = v,
            "target_y" => self.target_y = v,
            "target_radius" => self.target_radius = v,
            "target_depth" => self.target_depth = v,
            _ => return Err(Error::usage(format!("unknown jumper2d parameter {key:?}"))),
        }
        Ok(())
    }

    fn entries(&self) -> Vec<(String, String)> {
        [
            ("mass", self.mass),
            ("gravity", self.gravity),
            ("leg_length", self.leg_length),
            ("force_max", self.force_max),
            ("platform_x0", self.platform_x0),
            ("platform_x1", self.platform_x1),
            ("platform_height", self.platform_height),
            ("target_x", self.target_x),
            ("target_y", self.target_y),
            ("target_radius", self.target_radius),
            ("target_depth", self.target_depth),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), fmt_f64(v)))
        .collect()
    }
}

impl JumperParams {
    /// Signed terrain function, positive inside the ground or the platform.
    pub fn terrain(&self, x: &[f64]) -> f64 {
        let ground = -x[1];
        let platform = (x[0] - self.platform_x0)
            .min(self.platform_x1 - x[0])
            .min(self.platform_height - x[1]);
        ground.max(platform)
    }
}

pub fn build(p: &JumperParams) -> Result<HybridSystem> {
    if !(p.mass > 0.0 && p.force_max >= 0.0 && p.leg_length > 0.0) {
        return Err(Error::usage("jumper2d needs positive mass and leg length"));
    }
    if !(p.target_depth > 0.0) {
        return Err(Error::usage("jumper2d target_depth must be positive"));
    }
    let (m, g, l0) = (p.mass, p.gravity, p.leg_length);
    let ballistic = move |x: &[f64], f: &mut [f64]| {
        f[0] = x[2];
        f[1] = x[3];
        f[2] = 0.0;
        f[3] = -g;
    };

    let terrain = {
        let p = p.clone();
        move |x: &[f64]| p.terrain(x)
    };
    let t_stance = terrain.clone();
    let stance = Mode::new(
        "stance",
        4,
        Dynamics::affine(ballistic, move |_, b| {
            // rows x, y, vx, vy; columns u1, u2
            b.fill(0.0);
            b[4] = 1.0 / m;
            b[7] = 1.0 / m;
        }, |_, _| {}),
        InputBox::new(vec![0.0, 0.0], vec![p.force_max, p.force_max])?,
        InputBox::empty(),
    )
    .with_invariant(move |x| (x[1] - l0).max(t_stance(x)));

    let t_flight = terrain.clone();
    let flight = Mode::new("flight", 4, Dynamics::affine(ballistic, |_, _| {}, |_, _| {}), InputBox::empty(), InputBox::empty())
        .with_invariant(move |x| t_flight(x));

    let freeze = Mode::new("freeze", 4, Dynamics::zero(), InputBox::empty(), InputBox::empty());

    let t_lift = terrain.clone();
    let t_crash = terrain;
    let (cx, cy, r, depth) = (p.target_x, p.target_y, p.target_radius, p.target_depth);
    let sys = HybridSystem::new(
        "jumper2d",
        4,
        vec![stance, flight, freeze],
        vec![
            Switch::forced("stance->flight", 0, 1).with_guard(move |x| t_lift(x)),
            Switch::forced("stance->freeze", 0, 2).with_guard(move |x| -t_crash(x)),
            Switch::forced("flight->freeze", 1, 2),
        ],
        move |x| {
            let s = ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)).sqrt() - r;
            if s < 0.0 { depth * s } else { s }
        },
    )?;
    Ok(sys.with_state_names(&["x", "y", "vx", "vy"]).with_params(p.entries()))
}
