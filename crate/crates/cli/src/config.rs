//! Pipeline configuration: one structured file drives every subcommand.
//!
//! TOML and JSON are both accepted, selected by file extension. Every field
//! has a default, so an empty table is a valid config. The fully resolved
//! config is echoed next to each run's outputs together with a provenance
//! map that flags values which are project choices rather than constraints
//! inherited from the modeled setup.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use lunarad_core::propagation::{RegolithParams, RenderOptions, BAND_HIGH_HZ, BAND_LOW_HZ};
use lunarad_core::surface::DEFAULT_EPSILON_FLOOR;
use lunarad_core::terrain::TerrainGenConfig;

use crate::exit::{config_error, io_error, CliResult, IntoCliResult};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub terrain: TerrainGenConfig,
    pub propagation: PropagationConfig,
    pub dataset: DatasetConfig,
    pub k2: K2Config,
    pub metrics: MetricsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    pub frequencies_hz: Vec<f64>,
    pub tx_height_m: f64,
    pub tx_power_dbm: f64,
    pub regolith: RegolithParams,
    pub render: RenderOptions,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            frequencies_hz: vec![BAND_LOW_HZ, BAND_HIGH_HZ],
            tx_height_m: 2.0,
            tx_power_dbm: 30.0,
            regolith: RegolithParams::default(),
            render: RenderOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxPlacement {
    /// Uniform over all grid cells.
    Uniform,
    /// Uniform over the top elevation decile.
    Ridge,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Number of terrains when `seeds` is not given; seeds run from
    /// `base_seed` upward.
    pub n_terrains: usize,
    pub base_seed: u64,
    /// Explicit terrain seed list; overrides `n_terrains`/`base_seed`.
    pub seeds: Option<Vec<u64>>,
    pub tx_per_terrain: usize,
    pub tx_placement: TxPlacement,
    /// Train/validation/test fractions over terrains, in that order.
    pub split_fractions: [f64; 3],
    /// Blur scale removed from the heightmap for the fine-structure channel.
    pub highpass_sigma_m: f64,
    /// Reject frequencies other than the two training bands.
    pub strict_bands: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_terrains: 4,
            base_seed: 0,
            seeds: None,
            tx_per_terrain: 1,
            tx_placement: TxPlacement::Uniform,
            split_fractions: [0.8, 0.1, 0.1],
            highpass_sigma_m: 8.0,
            strict_bands: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct K2Config {
    /// Power floor applied before the square root when converting radio
    /// maps to field magnitudes.
    pub epsilon_floor: f64,
}

impl Default for K2Config {
    fn default() -> Self {
        Self {
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Pool pixels across samples for RMSE/PSNR instead of averaging
    /// per-sample values.
    pub pooled_pixels: bool,
}

impl PipelineConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        self.terrain.validate().context("terrain config")?;
        if self.propagation.frequencies_hz.is_empty() {
            bail!("propagation.frequencies_hz must not be empty");
        }
        for &f in &self.propagation.frequencies_hz {
            if !(f.is_finite() && f > 0.0) {
                bail!("frequency {f} must be positive");
            }
        }
        if !(self.propagation.tx_height_m.is_finite() && self.propagation.tx_height_m >= 0.0) {
            bail!("propagation.tx_height_m must be non-negative");
        }
        if !self.propagation.tx_power_dbm.is_finite() {
            bail!("propagation.tx_power_dbm must be finite");
        }
        self.propagation.regolith.validate().context("regolith")?;
        self.propagation.render.validate().context("render options")?;
        if self.dataset.tx_per_terrain == 0 {
            bail!("dataset.tx_per_terrain must be at least 1");
        }
        if let Some(seeds) = &self.dataset.seeds {
            let mut sorted = seeds.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != seeds.len() {
                bail!("dataset.seeds contains duplicates");
            }
        }
        let fractions = self.dataset.split_fractions;
        if fractions.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
            bail!("split fractions must lie in [0, 1]");
        }
        if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            bail!("split fractions must sum to 1");
        }
        if !(self.dataset.highpass_sigma_m.is_finite() && self.dataset.highpass_sigma_m > 0.0) {
            bail!("dataset.highpass_sigma_m must be positive");
        }
        if !(self.k2.epsilon_floor.is_finite() && self.k2.epsilon_floor > 0.0) {
            bail!("k2.epsilon_floor must be positive");
        }
        Ok(())
    }

    /// Terrain seeds in generation order.
    pub fn terrain_seeds(&self) -> Vec<u64> {
        match &self.dataset.seeds {
            Some(list) => list.clone(),
            None => (0..self.dataset.n_terrains as u64)
                .map(|i| self.dataset.base_seed + i)
                .collect(),
        }
    }

    /// Field-by-field provenance of the resolved values. Fields still at a
    /// built-in default that the modeled setup never specifies are flagged
    /// `non-paper-default`; fields the operator changed are `user`; the two
    /// training bands are `paper` when left at their default.
    pub fn provenance(&self) -> BTreeMap<String, &'static str> {
        let defaults = PipelineConfig::default();
        let mut map = BTreeMap::new();
        let mut mark = |key: &str, at_default: bool| {
            map.insert(
                key.to_string(),
                if at_default { "non-paper-default" } else { "user" },
            );
        };
        let t = &self.terrain;
        let td = &defaults.terrain;
        mark("terrain.cell_size_m", t.cell_size_m == td.cell_size_m);
        mark("terrain.target_age", t.target_age == td.target_age);
        mark("terrain.n_epochs", t.n_epochs == td.n_epochs);
        mark("terrain.sfd_exponent", t.sfd_exponent == td.sfd_exponent);
        mark("terrain.crater_rate", t.crater_rate == td.crater_rate);
        mark("terrain.d_min_m", t.d_min_m == td.d_min_m);
        mark("terrain.d_max_m", t.d_max_m == td.d_max_m);
        mark("terrain.diffusivity", t.diffusivity == td.diffusivity);
        mark("terrain.depth_ratio", t.depth_ratio == td.depth_ratio);
        mark(
            "terrain.rim_height_ratio",
            t.rim_height_ratio == td.rim_height_ratio,
        );
        let p = &self.propagation;
        let pd = &defaults.propagation;
        mark("propagation.tx_height_m", p.tx_height_m == pd.tx_height_m);
        mark("propagation.tx_power_dbm", p.tx_power_dbm == pd.tx_power_dbm);
        mark(
            "propagation.regolith.rel_permittivity",
            p.regolith.rel_permittivity == pd.regolith.rel_permittivity,
        );
        mark(
            "propagation.regolith.conductivity",
            p.regolith.conductivity == pd.regolith.conductivity,
        );
        mark(
            "propagation.render.rx_height_m",
            p.render.rx_height_m == pd.render.rx_height_m,
        );
        mark(
            "propagation.render.clip_range_db",
            p.render.clip_range_db == pd.render.clip_range_db,
        );
        mark(
            "dataset.highpass_sigma_m",
            self.dataset.highpass_sigma_m == defaults.dataset.highpass_sigma_m,
        );
        mark(
            "dataset.split_fractions",
            self.dataset.split_fractions == defaults.dataset.split_fractions,
        );
        mark(
            "k2.epsilon_floor",
            self.k2.epsilon_floor == defaults.k2.epsilon_floor,
        );
        map.insert(
            "propagation.frequencies_hz".to_string(),
            if p.frequencies_hz == pd.frequencies_hz {
                "paper"
            } else {
                "user"
            },
        );
        map
    }
}

pub fn load_config(path: &Path) -> CliResult<PipelineConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(io_error)?;
    let config: PipelineConfig = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(config_error)?,
        Some("json") => serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(config_error)?,
        other => {
            return Err(config_error(anyhow::anyhow!(
                "config {} must be .toml or .json, found {:?}",
                path.display(),
                other
            )))
        }
    };
    config.validate().or_config()?;
    Ok(config)
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    config: &'a PipelineConfig,
    provenance: BTreeMap<String, &'static str>,
}

/// Writes the fully resolved config with provenance markers next to an
/// output artifact, as `<artifact>.config.json`.
pub fn write_config_echo(config: &PipelineConfig, artifact: &Path) -> CliResult {
    let echo = ConfigEcho {
        config,
        provenance: config.provenance(),
    };
    let json = serde_json::to_string_pretty(&echo).or_config()?;
    let mut path = artifact.as_os_str().to_owned();
    path.push(".config.json");
    std::fs::write(std::path::PathBuf::from(path), json).or_io()?;
    Ok(())
}
