//! Files in and out: run configs, result files and CSV exports.

pub mod config;
pub mod export;
pub mod hexfloat;
pub mod vfs;

pub use config::{parse_config, parse_fixed, OutputConfig, RolloutSpec, RunConfig, SliceSpec};
pub use export::{export_slice, export_trajectory, write_slice, write_trajectory};
pub use vfs::{read_result, write_result};

use crate::error::{Error, Result};
use crate::model::Owner;

pub(crate) fn owner_str(owner: Owner) -> &'static str {
    match owner {
        Owner::Control => "control",
        Owner::Adversary => "adversary",
    }
}

pub(crate) fn owner_from_str(s: &str) -> Result<Owner> {
    match s {
        "control" => Ok(Owner::Control),
        "adversary" => Ok(Owner::Adversary),
        other => Err(Error::usage(format!("unknown owner {other:?}, expected control or adversary"))),
    }
}
