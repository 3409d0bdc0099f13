//! One-dimensional quadruped in a room with a table: walk, crawl, frozen.

use crate::error::{Error, Result};
use crate::model::{Dynamics, HybridSystem, InputBox, Mode, Switch};

use super::{fmt_f64, parse_f64, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dog1dVariant {
    /// Walk, crawl and frozen modes with walk/crawl switching.
    Hybrid,
    /// Crawling only, no table interaction.
    CrawlOnly,
    /// Walking plus the forced freeze under the table.
    WalkOnly,
}

impl Dog1dVariant {
    fn as_str(self) -> &'static str {
        match self {
            Dog1dVariant::Hybrid => "hybrid",
            Dog1dVariant::CrawlOnly => "crawl_only",
            Dog1dVariant::WalkOnly => "walk_only",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dog1dParams {
    pub variant: Dog1dVariant,
    pub table_lo: f64,
    pub table_hi: f64,
    pub walk_speed: f64,
    pub crawl_speed: f64,
    pub target_center: f64,
    pub target_radius: f64,
}

impl Default for Dog1dParams {
    fn default() -> Self {
        Self {
            variant: Dog1dVariant::Hybrid,
            table_lo: 5.0,
            table_hi: 6.0,
            walk_speed: 3.0,
            crawl_speed: 1.0,
            target_center: 9.5,
            target_radius: 0.5,
        }
    }
}

impl ParamSet for Dog1dParams {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "variant" => {
                self.variant = match value {
                    "hybrid" => Dog1dVariant::Hybrid,
                    "crawl_only" => Dog1dVariant::CrawlOnly,
                    "walk_only" => Dog1dVariant::WalkOnly,
                    other => return Err(Error::usage(format!("unknown dog1d variant {other:?}"))),
                }
            }
            "table_lo" => self.table_lo = parse_f64(key, value)?,
            "table_hi" => self.table_hi = parse_f64(key, value)?,
            "walk_speed" => self.walk_speed = parse_f64(key, value)?,
            "crawl_speed" => self.crawl_speed = parse_f64(key, value)?,
            "target_center" => self.target_center = parse_f64(key, value)?,
            "target_radius" => self.target_radius = parse_f64(key, value)?,
            _ => return Err(Error::usage(format!("unknown dog1d parameter {key:?}"))),
        }
        Ok(())
    }

    fn entries(&self) -> Vec<(String, String)> {
        vec![
            ("variant".into(), self.variant.as_str().into()),
            ("table_lo".into(), fmt_f64(self.table_lo)),
            ("table_hi".into(), fmt_f64(self.table_hi)),
            ("walk_speed".into(), fmt_f64(self.walk_speed)),
            ("crawl_speed".into(), fmt_f64(self.crawl_speed)),
            ("target_center".into(), fmt_f64(self.target_center)),
            ("target_radius".into(), fmt_f64(self.target_radius)),
        ]
    }
}

fn speed_mode(name: &str, speed: f64) -> Mode {
    Mode::new(
        name,
        1,
        Dynamics::affine(|_, f| f[0] = 0.0, move |_, b| b[0] = speed, |_, _| {}),
        InputBox::new(vec![0.0], vec![1.0]).expect("unit box"),
        InputBox::empty(),
    )
}

pub fn build(p: &Dog1dParams) -> Result<HybridSystem> {
    if !(p.table_lo < p.table_hi) {
        return Err(Error::usage("dog1d table needs table_lo < table_hi"));
    }
    let (c, r) = (p.target_center, p.target_radius);
    let target = move |x: &[f64]| (x[0] - c).abs() - r;
    let mid = 0.5 * (p.table_lo + p.table_hi);
    let half = 0.5 * (p.table_hi - p.table_lo);
    // positive strictly under the table
    let under_table = move |x: &[f64]| half - (x[0] - mid).abs();

    let walk = speed_mode("walk", p.walk_speed).with_invariant(under_table);
    let crawl = speed_mode("crawl", p.crawl_speed);
    let frozen = Mode::new("frozen", 1, Dynamics::zero(), InputBox::empty(), InputBox::empty());

    let sys = match p.variant {
        Dog1dVariant::Hybrid => HybridSystem::new(
            "dog1d",
            1,
            vec![walk, crawl, frozen],
            vec![
                Switch::controlled("walk->crawl", 0, 1),
                Switch::controlled("crawl->walk", 1, 0),
                Switch::forced("walk->frozen", 0, 2),
            ],
            target,
        )?,
        Dog1dVariant::CrawlOnly => HybridSystem::new("dog1d", 1, vec![crawl], vec![], target)?,
        Dog1dVariant::WalkOnly => HybridSystem::new(
            "dog1d",
            1,
            vec![walk, frozen],
            vec![Switch::forced("walk->frozen", 0, 1)],
            target,
        )?,
    };
    Ok(sys.with_state_names(&["x"]).with_params(p.entries()))
}
