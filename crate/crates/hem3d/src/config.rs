//! Run configuration: one JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use hem3d_core::arch::{DesignSpec, GridSpec, TechKind, Technology, TileMix, DEFAULT_CELL_PITCH_MM, DEFAULT_LINK_ALPHA, DEFAULT_MAX_DEGREE};
use hem3d_core::objectives::{Mode, DEFAULT_AMBIENT_C};
use hem3d_core::optimizer::{AmosaConfig, SearchSpace, StageConfig, REFERENCE_SAMPLES};
use hem3d_core::selector::{EtSource, DEFAULT_ET_WEIGHTS, DEFAULT_T_TH};
use hem3d_core::traffic::SynthParams;
use serde::{Deserialize, Serialize};

use crate::formats::{read_et_csv, technology_from_json, TechnologyDoc};
use crate::presets;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub tiers: usize,
    pub rows: usize,
    pub cols: usize,
    /// Defaults to the technology's tier pitch.
    pub tier_pitch_mm: Option<f64>,
    pub cell_pitch_mm: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { tiers: 4, rows: 4, cols: 4, tier_pitch_mm: None, cell_pitch_mm: DEFAULT_CELL_PITCH_MM }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixConfig {
    pub cpu: usize,
    pub llc: usize,
    pub gpu: usize,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig { cpu: 8, llc: 16, gpu: 40 }
    }
}

/// A preset name (`m3d`, `tsv`), a path to a technology JSON file, or an
/// inline technology object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TechConfig {
    Named(String),
    Inline(TechnologyDoc),
}

impl Default for TechConfig {
    fn default() -> Self {
        TechConfig::Named("m3d".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub windows: usize,
    pub intensity: f64,
    pub skew: f64,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let p = SynthParams::default();
        SynthConfig { windows: p.windows, intensity: p.intensity, skew: p.skew, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Synthetic(SynthConfig),
    File(PathBuf),
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig::Synthetic(SynthConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Stage,
    Amosa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageSection {
    pub max_iterations: usize,
    pub convergence_eps: f64,
    pub convergence_window: usize,
    pub neighbors_per_step: usize,
    pub meta_candidates: usize,
    pub local_steps: usize,
    pub max_depth: usize,
    pub max_evaluations: Option<usize>,
}

impl Default for StageSection {
    fn default() -> Self {
        let c = StageConfig::default();
        StageSection {
            max_iterations: c.max_iterations,
            convergence_eps: c.convergence_eps,
            convergence_window: c.convergence_window,
            neighbors_per_step: c.neighbors_per_step,
            meta_candidates: c.meta_candidates,
            local_steps: c.local_steps,
            max_depth: c.max_depth,
            max_evaluations: c.max_evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmosaSection {
    pub soft_limit: usize,
    pub hard_limit: usize,
    pub cooling: f64,
    pub iters_per_temperature: usize,
    pub t_initial: Option<f64>,
    pub calibration_moves: usize,
    pub target_acceptance: f64,
    pub max_evaluations: usize,
}

impl Default for AmosaSection {
    fn default() -> Self {
        let c = AmosaConfig::default();
        AmosaSection {
            soft_limit: c.soft_limit,
            hard_limit: c.hard_limit,
            cooling: c.cooling,
            iters_per_temperature: c.iters_per_temperature,
            t_initial: c.t_initial,
            calibration_moves: c.calibration_moves,
            target_acceptance: c.target_acceptance,
            max_evaluations: c.max_evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub swap_tiles: bool,
    pub move_links: bool,
    pub pinned_slots: Vec<usize>,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection { swap_tiles: true, move_links: true, pinned_slots: Vec::new() }
    }
}

/// Surrogate weights or a CSV of measured execution times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EtConfig {
    Surrogate { weights: [f64; 3] },
    External(PathBuf),
}

impl Default for EtConfig {
    fn default() -> Self {
        EtConfig::Surrogate { weights: DEFAULT_ET_WEIGHTS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub grid: GridConfig,
    pub mix: MixConfig,
    /// Link count; defaults to the edge count of the equivalent 3D mesh.
    pub links: Option<usize>,
    pub alpha: f64,
    pub max_degree: usize,
    pub technology: TechConfig,
    pub profile: ProfileConfig,
    pub optimizer: OptimizerKind,
    pub stage: StageSection,
    pub amosa: AmosaSection,
    pub search: SearchSection,
    #[serde(with = "mode_str")]
    pub mode: Mode,
    pub t_th: f64,
    pub ambient_c: f64,
    pub reference_samples: usize,
    pub et: EtConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            grid: GridConfig::default(),
            mix: MixConfig::default(),
            links: None,
            alpha: DEFAULT_LINK_ALPHA,
            max_degree: DEFAULT_MAX_DEGREE,
            technology: TechConfig::default(),
            profile: ProfileConfig::default(),
            optimizer: OptimizerKind::Stage,
            stage: StageSection::default(),
            amosa: AmosaSection::default(),
            search: SearchSection::default(),
            mode: Mode::Po,
            t_th: DEFAULT_T_TH,
            ambient_c: DEFAULT_AMBIENT_C,
            reference_samples: REFERENCE_SAMPLES,
            et: EtConfig::default(),
        }
    }
}

/// Command-line values that win over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tech: Option<String>,
    pub mode: Option<Mode>,
    pub t_th: Option<f64>,
    pub optimizer: Option<OptimizerKind>,
}

mod mode_str {
    use hem3d_core::objectives::Mode;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Mode, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(m.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mode, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| D::Error::custom(format!("unknown mode `{s}`, expected po or pt")))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.out = resolve(base, &cfg.out);
        if let ProfileConfig::File(p) = &mut cfg.profile {
            *p = resolve(base, p);
        }
        if let EtConfig::External(p) = &mut cfg.et {
            *p = resolve(base, p);
        }
        if let TechConfig::Named(name) = &mut cfg.technology {
            if name.parse::<TechKind>().is_err() {
                *name = resolve(base, Path::new(name.as_str())).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(t) = &o.tech {
            self.technology = TechConfig::Named(t.clone());
        }
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(t) = o.t_th {
            self.t_th = t;
        }
        if let Some(k) = o.optimizer {
            self.optimizer = k;
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let spec = self.design_spec()?;
        let slots = spec.grid.slot_count();
        ensure!(
            spec.mix.total() == slots,
            "tile mix has {} tiles but the grid has {} slots",
            spec.mix.total(),
            slots
        );
        ensure!(self.t_th.is_finite(), "t_th must be finite");
        ensure!(self.reference_samples >= 1, "reference_samples must be at least 1");
        self.stage_config().validate()?;
        self.amosa_config().validate()?;
        if let ProfileConfig::File(p) = &self.profile {
            ensure!(p.is_file(), "profile file {} does not exist", p.display());
        }
        match &self.et {
            EtConfig::External(p) => ensure!(p.is_file(), "execution-time file {} does not exist", p.display()),
            EtConfig::Surrogate { weights } => {
                ensure!(weights.iter().all(|w| w.is_finite() && *w >= 0.0), "surrogate weights must be non-negative")
            }
        }
        if let Some(&bad) = self.search.pinned_slots.iter().find(|&&s| s >= slots) {
            bail!("pinned slot {bad} is outside the grid");
        }
        Ok(())
    }

    /// The technology as configured, before adapting to the grid.
    pub fn base_technology(&self) -> Result<(Technology, bool)> {
        match &self.technology {
            TechConfig::Named(name) => match name.parse::<TechKind>() {
                Ok(kind) => Ok((presets::preset(kind)?, true)),
                Err(_) => {
                    let text = std::fs::read_to_string(name)
                        .with_context(|| format!("`{name}` is neither m3d, tsv nor a readable technology file"))?;
                    Ok((technology_from_json(&text).with_context(|| format!("in technology file {name}"))?, false))
                }
            },
            TechConfig::Inline(doc) => Ok((doc.to_technology()?, false)),
        }
    }

    /// The technology matched to the grid's tier count. Shipped presets are
    /// stretched or cut to fit; explicit technologies must match exactly.
    pub fn technology(&self) -> Result<Technology> {
        let (tech, preset) = self.base_technology()?;
        let tiers = self.grid.tiers;
        if tech.r_tier.len() == tiers {
            Ok(tech)
        } else if preset {
            Ok(tech.with_tiers(tiers))
        } else {
            bail!("technology lists {} tier resistances but the grid has {tiers} tiers", tech.r_tier.len())
        }
    }

    pub fn design_spec(&self) -> Result<DesignSpec> {
        let (tech, _) = self.base_technology()?;
        let g = &self.grid;
        let grid = GridSpec::new(
            g.tiers,
            g.rows,
            g.cols,
            g.tier_pitch_mm.unwrap_or_else(|| tech.default_tier_pitch()),
            g.cell_pitch_mm,
        )?;
        Ok(DesignSpec {
            grid,
            mix: TileMix::new(self.mix.cpu, self.mix.llc, self.mix.gpu),
            link_count: self.links,
            alpha: self.alpha,
            max_degree: self.max_degree,
        })
    }

    pub fn synth_params(&self) -> Option<SynthParams> {
        match &self.profile {
            ProfileConfig::Synthetic(s) => Some(SynthParams {
                windows: s.windows,
                intensity: s.intensity,
                skew: s.skew,
                seed: s.seed.unwrap_or(self.seed),
                ..SynthParams::default()
            }),
            ProfileConfig::File(_) => None,
        }
    }

    pub fn search_space(&self) -> SearchSpace {
        SearchSpace {
            max_degree: self.max_degree,
            alpha: self.alpha,
            swap_tiles: self.search.swap_tiles,
            move_links: self.search.move_links,
            pinned_slots: self.search.pinned_slots.clone(),
        }
    }

    pub fn stage_config(&self) -> StageConfig {
        let s = &self.stage;
        StageConfig {
            max_iterations: s.max_iterations,
            convergence_eps: s.convergence_eps,
            convergence_window: s.convergence_window,
            neighbors_per_step: s.neighbors_per_step,
            meta_candidates: s.meta_candidates,
            local_steps: s.local_steps,
            max_depth: s.max_depth,
            max_evaluations: s.max_evaluations,
            seed: self.seed,
        }
    }

    pub fn amosa_config(&self) -> AmosaConfig {
        let a = &self.amosa;
        AmosaConfig {
            soft_limit: a.soft_limit,
            hard_limit: a.hard_limit,
            cooling: a.cooling,
            iters_per_temperature: a.iters_per_temperature,
            t_initial: a.t_initial,
            calibration_moves: a.calibration_moves,
            target_acceptance: a.target_acceptance,
            max_evaluations: a.max_evaluations,
            seed: self.seed,
            ..AmosaConfig::default()
        }
    }

    pub fn et_source(&self) -> Result<EtSource> {
        match &self.et {
            EtConfig::Surrogate { weights } => Ok(EtSource::Surrogate { weights: *weights }),
            EtConfig::External(p) => {
                let file = std::fs::File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
                Ok(EtSource::External(read_et_csv(file).with_context(|| format!("in {}", p.display()))?))
            }
        }
    }
}
