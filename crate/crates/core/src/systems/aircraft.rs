//! Two-aircraft conflict resolution in relative coordinates `[xr, yr, z]`,
//! with the relative heading held fixed and a maneuver timer `z`.

use crate::error::{Error, Result};
use crate::model::{Dynamics, HybridSystem, InputBox, Mode, Switch};

use super::{fmt_f64, parse_f64, ParamSet};

#[derive(Debug, Clone, PartialEq)]
pub struct AircraftParams {
    pub heading: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    pub d_lo: f64,
    pub d_hi: f64,
    pub turn_rate: f64,
    /// Heading change accumulated in the turning mode before the forced exit.
    pub maneuver_angle: f64,
    pub collision_radius: f64,
}

impl Default for AircraftParams {
    fn default() -> Self {
        Self {
            heading: 2.0 * std::f64::consts::PI / 3.0,
            u_lo: 1.5,
            u_hi: 3.0,
            d_lo: 2.0,
            d_hi: 4.0,
            turn_rate: 1.0,
            maneuver_angle: std::f64::consts::PI,
            collision_radius: 5.0,
        }
    }
}

impl ParamSet for AircraftParams {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = parse_f64(key, value)?;
        match key {
            "heading" => self.heading = v,
            "u_lo" => self.u_lo = v,
            "u_hi" => self.u_hi = v,
            "d_lo" => self.d_lo = v,
            "d_hi" => self.d_hi = v,
            "turn_rate" => self.turn_rate = v,
            "maneuver_angle" => self.maneuver_angle = v,
            "collision_radius" => self.collision_radius = v,
            _ => return Err(Error::usage(format!("unknown aircraft3d parameter {key:?}"))),
        }
        Ok(())
    }

    fn entries(&self) -> Vec<(String, String)> {
        [
            ("heading", self.heading),
            ("u_lo", self.u_lo),
            ("u_hi", self.u_hi),
            ("d_lo", self.d_lo),
            ("d_hi", self.d_hi),
            ("turn_rate", self.turn_rate),
            ("maneuver_angle", self.maneuver_angle),
            ("collision_radius", self.collision_radius),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), fmt_f64(v)))
        .collect()
    }
}

/// Relative position after both aircraft turn instantaneously by -π/2:
/// the relative frame rotates by +π/2.
fn quarter_turn(x: &[f64], out: &mut [f64]) {
    out[0] = -x[1];
    out[1] = x[0];
    out[2] = x[2];
}

fn flight_mode(name: &str, p: &AircraftParams, omega: f64, timer: f64) -> Result<Mode> {
    let (c, s) = (p.heading.cos(), p.heading.sin());
    Ok(Mode::new(
        name,
        3,
        Dynamics::affine(
            move |x, f| {
                f[0] = omega * x[1];
                f[1] = -omega * x[0];
                f[2] = timer;
            },
            |_, b| {
                b[0] = -1.0;
                b[1] = 0.0;
                b[2] = 0.0;
            },
            move |_, b| {
                b[0] = c;
                b[1] = s;
                b[2] = 0.0;
            },
        ),
        InputBox::new(vec![p.u_lo], vec![p.u_hi])?,
        InputBox::new(vec![p.d_lo], vec![p.d_hi])?,
    ))
}

pub fn build(p: &AircraftParams) -> Result<HybridSystem> {
    if !(p.u_lo <= p.u_hi && p.d_lo <= p.d_hi) {
        return Err(Error::usage("aircraft3d speed intervals need lo <= hi"));
    }
    let straight = flight_mode("straight", p, 0.0, 0.0)?;
    let limit = p.maneuver_angle / p.turn_rate;
    let turning = flight_mode("turning", p, p.turn_rate, 1.0)?.with_invariant(move |x| x[2] - limit);
    let resumed = flight_mode("resumed", p, 0.0, 0.0)?;
    let r = p.collision_radius;
    let sys = HybridSystem::new(
        "aircraft3d",
        3,
        vec![straight, turning, resumed],
        vec![
            Switch::controlled("straight->turning", 0, 1).with_reset(|x, y| {
                quarter_turn(x, y);
                y[2] = 0.0;
            }),
            Switch::forced("turning->resumed", 1, 2).with_reset(quarter_turn),
        ],
        move |x| x[0].hypot(x[1]) - r,
    )?;
    Ok(sys.with_state_names(&["xr", "yr", "z"]).with_params(p.entries()))
}
