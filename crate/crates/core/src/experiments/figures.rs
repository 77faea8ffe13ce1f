//! Recipes for the six reference figures.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::output::{write_outputs, OutputFiles};
use super::{run_sweep, Objective, ScenarioConfig, Scheme, SweepResult};
use crate::beamforming::Backend;
use crate::channel::ChannelKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FigureTag {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl FigureTag {
    pub const ALL: [FigureTag; 6] = [FigureTag::Fig2, FigureTag::Fig3, FigureTag::Fig4, FigureTag::Fig5, FigureTag::Fig6, FigureTag::Fig7];
}

impl fmt::Display for FigureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = FigureTag::ALL.iter().position(|t| t == self).unwrap() + 2;
        write!(f, "fig{k}")
    }
}

impl FromStr for FigureTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        FigureTag::ALL
            .into_iter()
            .find(|t| t.to_string() == lower)
            .ok_or_else(|| Error::Validation(format!("unknown figure {s:?}; expected fig2 .. fig7")))
    }
}

fn range(lo: usize, hi: usize, step: usize) -> Vec<usize> {
    (lo..=hi).step_by(step).collect()
}

/// Config that regenerates `tag`.
pub fn figure_config(tag: FigureTag) -> ScenarioConfig {
    let base = ScenarioConfig { name: tag.to_string(), ..ScenarioConfig::default() };
    let rician = ChannelKind::Rician { k_factor: 1.0 };
    match tag {
        FigureTag::Fig2 => ScenarioConfig {
            n_list: range(16, 128, 16),
            objective: Objective::Crb,
            report_crb_approx: true,
            ..base
        },
        FigureTag::Fig3 => ScenarioConfig {
            channels: vec![ChannelKind::LoS, rician, ChannelKind::Rayleigh],
            n_list: range(10, 100, 10),
            ..base
        },
        FigureTag::Fig4 => ScenarioConfig {
            channels: vec![ChannelKind::LoS],
            n_list: range(10, 100, 1),
            schemes: Scheme::ALL.to_vec(),
            trials: 20,
            ..base
        },
        FigureTag::Fig5 => ScenarioConfig { n_list: range(10, 150, 5), schemes: Scheme::ALL.to_vec(), ..base },
        FigureTag::Fig6 => ScenarioConfig {
            channels: vec![rician, ChannelKind::Rayleigh],
            n_list: range(20, 200, 20),
            objective: Objective::Crb,
            trials: 20,
            ..base
        },
        FigureTag::Fig7 => ScenarioConfig {
            n_list: range(20, 260, 10),
            objective: Objective::Crb,
            schemes: Scheme::ALL.to_vec(),
            trials: 20,
            ..base
        },
    }
}

/// Command-line style overrides applied on top of a recipe.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub backend: Option<Backend>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        if let Some(b) = self.backend {
            cfg.optimizer.backend = b;
        }
    }
}

pub struct FigureOutput {
    pub result: SweepResult,
    pub files: OutputFiles,
}

/// Runs the recipe for `tag` and writes CSV, SVG and metadata to `out_dir`.
pub fn reproduce_figure(tag: FigureTag, out_dir: &Path, overrides: &Overrides) -> Result<FigureOutput> {
    let mut cfg = figure_config(tag);
    overrides.apply(&mut cfg);
    let result = run_sweep(&cfg)?;
    let files = write_outputs(&result, out_dir)?;
    Ok(FigureOutput { result, files })
}
