//! Configurations shipped with the crate.

use super::config::ExperimentConfig;
use super::sweep::SweepSpec;
use crate::error::{Error, Result};

pub const PRESETS: [(&str, &str); 5] = [
    ("quadratic-ncsc", include_str!("../../presets/quadratic-ncsc.toml")),
    (
        "quadratic-ncsc-speedup",
        include_str!("../../presets/quadratic-ncsc-speedup.toml"),
    ),
    ("fair-ncc", include_str!("../../presets/fair-ncc.toml")),
    ("auroc-ncsc", include_str!("../../presets/auroc-ncsc.toml")),
    (
        "ablation-q-momentum",
        include_str!("../../presets/ablation-q-momentum.toml"),
    ),
];

#[derive(Debug, Clone)]
pub enum Preset {
    Experiment(ExperimentConfig),
    Sweep(SweepSpec),
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parses a config text as a sweep when it has an `axes` table, otherwise as
/// a single experiment.
pub fn parse(text: &str, origin: &str) -> Result<Preset> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config(origin, e.to_string()))?;
    if table.contains_key("axes") {
        SweepSpec::from_toml(text, origin).map(Preset::Sweep)
    } else {
        ExperimentConfig::from_toml(text, origin).map(Preset::Experiment)
    }
}

pub fn load(name: &str) -> Result<Preset> {
    let text = source(name).ok_or_else(|| Error::config("preset", format!("unknown preset `{name}`")))?;
    parse(text, name)
}
