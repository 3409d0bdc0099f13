//! Registry of the shipped benchmark systems, keyed by name and
//! parameterized by string key/value pairs so configs can rebuild them.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::HybridSystem;

pub mod aircraft;
pub mod dog1d;
pub mod jumper;
pub mod quadruped;

pub use aircraft::AircraftParams;
pub use dog1d::{Dog1dParams, Dog1dVariant};
pub use jumper::JumperParams;
pub use quadruped::{QuadrupedParams, Rect};

/// String-keyed parameter access shared by all model parameter structs.
pub trait ParamSet {
    fn set(&mut self, key: &str, value: &str) -> Result<()>;
    /// Every parameter in a fixed order, formatted so that `set` restores it exactly.
    fn entries(&self) -> Vec<(String, String)>;
}

pub(crate) fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| Error::usage(format!("{key}: {value:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::usage(format!("{key}: value must be finite")));
    }
    Ok(v)
}

pub(crate) fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|s| parse_f64(key, s)).collect()
}

/// Shortest decimal that parses back to the same bits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

pub const MODEL_NAMES: [&str; 4] = ["dog1d", "jumper2d", "aircraft3d", "quadruped3d"];

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Dog1d(Dog1dParams),
    Jumper2d(JumperParams),
    Aircraft3d(AircraftParams),
    Quadruped3d(QuadrupedParams),
}

impl ModelSpec {
    /// Default parameters for a registered model name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "dog1d" => ModelSpec::Dog1d(Dog1dParams::default()),
            "jumper2d" => ModelSpec::Jumper2d(JumperParams::default()),
            "aircraft3d" => ModelSpec::Aircraft3d(AircraftParams::default()),
            "quadruped3d" => ModelSpec::Quadruped3d(QuadrupedParams::default()),
            other => {
                return Err(Error::usage(format!(
                    "unknown model {other:?} (known: {})",
                    MODEL_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn from_params(name: &str, params: &[(String, String)]) -> Result<Self> {
        let mut spec = Self::by_name(name)?;
        for (k, v) in params {
            spec.set(k, v)?;
        }
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Dog1d(_) => "dog1d",
            ModelSpec::Jumper2d(_) => "jumper2d",
            ModelSpec::Aircraft3d(_) => "aircraft3d",
            ModelSpec::Quadruped3d(_) => "quadruped3d",
        }
    }

    fn params_mut(&mut self) -> &mut dyn ParamSet {
        match self {
            ModelSpec::Dog1d(p) => p,
            ModelSpec::Jumper2d(p) => p,
            ModelSpec::Aircraft3d(p) => p,
            ModelSpec::Quadruped3d(p) => p,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.params_mut().set(key, value)
    }

    pub fn params(&self) -> Vec<(String, String)> {
        match self {
            ModelSpec::Dog1d(p) => p.entries(),
            ModelSpec::Jumper2d(p) => p.entries(),
            ModelSpec::Aircraft3d(p) => p.entries(),
            ModelSpec::Quadruped3d(p) => p.entries(),
        }
    }

    pub fn build(&self) -> Result<HybridSystem> {
        match self {
            ModelSpec::Dog1d(p) => dog1d::build(p),
            ModelSpec::Jumper2d(p) => jumper::build(p),
            ModelSpec::Aircraft3d(p) => aircraft::build(p),
            ModelSpec::Quadruped3d(p) => quadruped::build(p),
        }
    }

    /// The resolution used for the published experiments with each model.
    pub fn default_grid(&self) -> GridSpec {
        let g = match self {
            ModelSpec::Dog1d(_) => GridSpec::uniform(vec![0.0], vec![10.0], vec![301]),
            ModelSpec::Jumper2d(_) => GridSpec::uniform(
                vec![0.0, -0.1, -1.0, -5.0],
                vec![5.0, 1.4, 7.0, 5.0],
                vec![51, 31, 21, 21],
            ),
            ModelSpec::Aircraft3d(_) => {
                GridSpec::uniform(vec![-15.0, -15.0, 0.0], vec![15.0, 15.0, 10.0 * PI / 9.0], vec![301, 301, 11])
            }
            ModelSpec::Quadruped3d(_) => GridSpec::new(
                vec![0.0, 0.0, -PI],
                vec![4.0, 4.0, PI],
                vec![40, 40, 72],
                vec![false, false, true],
            ),
        };
        g.expect("built-in grid is valid")
    }
}

pub fn make_dog1d() -> HybridSystem {
    dog1d::build(&Dog1dParams::default()).expect("default dog1d")
}

pub fn make_jumper2d() -> HybridSystem {
    jumper::build(&JumperParams::default()).expect("default jumper2d")
}

pub fn make_aircraft3d() -> HybridSystem {
    aircraft::build(&AircraftParams::default()).expect("default aircraft3d")
}

pub fn make_quadruped3d() -> HybridSystem {
    quadruped::build(&QuadrupedParams::default()).expect("default quadruped3d")
}
