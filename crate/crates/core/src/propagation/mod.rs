//! Deterministic terrain-aware radio-map rendering.
//!
//! The engine combines free-space loss, multi-knife-edge diffraction over the
//! terrain profile (Deygout construction, up to three edges), and an optional
//! coherent two-ray ground reflection for line-of-sight pixels. It stands in
//! for a full ray tracer: simple enough to be reproducible bit-for-bit,
//! rich enough to produce distance decay, terrain shadows, and frequency-
//! dependent shadow depth.

mod diffraction;
mod profile;
mod reflection;

pub use diffraction::{deygout_loss, free_space_path_loss, knife_edge_loss};
pub use profile::{terrain_profile, TerrainProfile};
pub use reflection::{fresnel_gamma_h, two_ray_gain};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::terrain::HeightMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// The two supported band frequencies in Hz.
pub const BAND_LOW_HZ: f64 = 415.0e6;
pub const BAND_HIGH_HZ: f64 = 5.8e9;

/// Maximum number of knife edges counted per path.
pub const MAX_DEYGOUT_EDGES: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmitter {
    pub grid_i: usize,
    pub grid_j: usize,
    /// Antenna height above the local terrain, meters.
    pub height_above_ground: f64,
    pub power_dbm: f64,
    pub frequency_hz: f64,
}

impl Transmitter {
    pub fn validate_for(&self, map: &HeightMap) -> Result<()> {
        let n = map.size();
        if self.grid_i >= n || self.grid_j >= n {
            return Err(Error::invalid(format!(
                "transmitter index ({}, {}) outside {n}x{n} grid",
                self.grid_i, self.grid_j
            )));
        }
        if !(self.height_above_ground.is_finite() && self.height_above_ground > 0.0) {
            return Err(Error::invalid(format!(
                "transmitter height {} must be positive",
                self.height_above_ground
            )));
        }
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(Error::invalid(format!(
                "frequency {} Hz must be positive",
                self.frequency_hz
            )));
        }
        if !self.power_dbm.is_finite() {
            return Err(Error::NonFinite("transmitter power"));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }
}

/// Electromagnetic ground parameters used by the reflection model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegolithParams {
    /// Real part of the relative permittivity.
    pub rel_permittivity: f64,
    /// Conductivity in S/m.
    pub conductivity: f64,
}

impl Default for RegolithParams {
    fn default() -> Self {
        Self {
            rel_permittivity: 3.0,
            conductivity: 1.0e-4,
        }
    }
}

impl RegolithParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_permittivity.is_finite() && self.rel_permittivity >= 1.0) {
            return Err(Error::invalid(format!(
                "relative permittivity {} must be >= 1",
                self.rel_permittivity
            )));
        }
        if !(self.conductivity.is_finite() && self.conductivity >= 0.0) {
            return Err(Error::invalid(format!(
                "conductivity {} must be non-negative",
                self.conductivity
            )));
        }
        Ok(())
    }
}

/// Rendering knobs with engine defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    /// Receiver antenna height above ground, meters.
    pub rx_height_m: f64,
    /// Enable the coherent ground reflection on line-of-sight paths.
    pub two_ray: bool,
    /// Path gain is clipped to this closed dB interval before normalization.
    pub clip_range_db: (f64, f64),
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            rx_height_m: 1.0,
            two_ray: true,
            clip_range_db: (-150.0, -50.0),
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rx_height_m.is_finite() && self.rx_height_m > 0.0) {
            return Err(Error::invalid(format!(
                "receiver height {} must be positive",
                self.rx_height_m
            )));
        }
        let (lo, hi) = self.clip_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!(
                "clip range ({lo}, {hi}) must be a finite increasing interval"
            )));
        }
        Ok(())
    }
}

/// Rendered path-gain map. `gain_db` is stored already clipped to
/// `clip_range_db`; `normalized` is its exact affine rescaling to [0, 1].
#[derive(Debug, Clone)]
pub struct RadioMap {
    pub gain_db: Grid,
    pub normalized: Grid,
    pub frequency_hz: f64,
    pub tx: Transmitter,
    pub clip_range_db: (f64, f64),
}

impl RadioMap {
    /// Inverse of the normalization: clip_min + normalized * (max - min).
    pub fn denormalized(&self) -> Grid {
        let (lo, hi) = self.clip_range_db;
        self.normalized.map(|v| lo + v * (hi - lo))
    }

    /// Linear power scale of the clipped gain (10^(dB/10)).
    pub fn linear_power(&self) -> Grid {
        self.gain_db.map(|db| 10f64.powf(db / 10.0))
    }
}

/// Renders the path-gain map for one transmitter over one heightmap.
///
/// Per receiver pixel: gain = -FSPL(direct 3D distance) - Deygout diffraction
/// loss + two-ray adjustment (line-of-sight pixels only, when enabled),
/// clipped to the configured range. Pixels are independent, so the render is
/// parallel over rows and bit-identical for any worker count.
pub fn render_radio_map(
    map: &HeightMap,
    tx: &Transmitter,
    regolith: &RegolithParams,
    options: &RenderOptions,
) -> Result<RadioMap> {
    tx.validate_for(map)?;
    regolith.validate()?;
    options.validate()?;

    let n = map.size();
    let wavelength = tx.wavelength_m();
    let (clip_lo, clip_hi) = options.clip_range_db;

    let mut gain_db = Grid::new(n, n, 0.0);
    gain_db
        .as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            for (j, out) in row.iter_mut().enumerate() {
                let p = terrain_profile(map, tx, i, j, options.rx_height_m);
                let direct = p.direct_distance_m().max(1e-6);
                let fspl =
                    20.0 * (4.0 * std::f64::consts::PI * direct / wavelength).log10();
                let mut gain = -fspl - deygout_loss(&p, wavelength);
                if options.two_ray && p.is_line_of_sight() {
                    gain += two_ray_gain(&p, regolith, tx.frequency_hz);
                }
                *out = gain.clamp(clip_lo, clip_hi);
            }
        });

    let normalized = gain_db.map(|g| ((g - clip_lo) / (clip_hi - clip_lo)).clamp(0.0, 1.0));
    Ok(RadioMap {
        gain_db,
        normalized,
        frequency_hz: tx.frequency_hz,
        tx: *tx,
        clip_range_db: options.clip_range_db,
    })
}
