//! Shipped technology presets.

use anyhow::{Context, Result};
use hem3d_core::arch::{TechKind, Technology};

use crate::formats::technology_from_json;

pub const M3D_JSON: &str = include_str!("../presets/m3d.json");
pub const TSV_JSON: &str = include_str!("../presets/tsv.json");

pub fn preset_json(kind: TechKind) -> &'static str {
    match kind {
        TechKind::M3d => M3D_JSON,
        TechKind::Tsv => TSV_JSON,
    }
}

/// Loads a shipped preset by kind.
pub fn preset(kind: TechKind) -> Result<Technology> {
    technology_from_json(preset_json(kind)).with_context(|| format!("shipped {kind} preset is invalid"))
}
