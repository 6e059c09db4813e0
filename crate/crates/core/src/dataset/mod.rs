//! Training-sample assembly and repair of externally rendered maps.
//!
//! A [`DatasetSample`] bundles the six channels consumed by the learning
//! stack: normalized heightmap, high-pass fine-structure map, transmitter
//! one-hot, band flag, binary wave-number label, and normalized radio map.
//! Externally rendered maps may arrive with null pixels; [`fill_gaps_bilinear`]
//! and [`fill_gaps_static`] repair them, and [`merge_reseeded`] averages
//! repeated renders of the same scene.

mod container;

pub use container::{
    read_container, read_container_bytes, read_terrain_container, read_terrain_container_bytes,
    write_container, write_container_bytes, write_terrain_container,
    write_terrain_container_bytes, TerrainMeta, MAGIC, TERRAIN_MAGIC,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ByteGrid, Grid};
use crate::propagation::{RadioMap, Transmitter, BAND_HIGH_HZ, BAND_LOW_HZ};
use crate::surface::WaveNumberMap;
use crate::terrain::{high_pass, HeightMap};

/// A grid in which some pixels may be missing. `valid` holds 1 for pixels
/// that carry data and 0 for nulls; the value stored at a null pixel is
/// meaningless and never read.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGrid {
    pub values: Grid,
    pub valid: ByteGrid,
}

impl MaskedGrid {
    pub fn new(values: Grid, valid: ByteGrid) -> Result<Self> {
        if values.dims() != valid.dims() {
            return Err(Error::DimensionMismatch {
                expected: values.dims(),
                found: valid.dims(),
            });
        }
        if !valid.is_binary() {
            return Err(Error::invalid("validity mask must contain only 0 and 1"));
        }
        Ok(Self { values, valid })
    }

    /// Wraps a fully valid grid.
    pub fn fully_valid(values: Grid) -> Self {
        let (rows, cols) = values.dims();
        Self {
            values,
            valid: ByteGrid::new(rows, cols, 1),
        }
    }

    /// Marks every non-finite value as null.
    pub fn from_grid_with_nan_nulls(values: Grid) -> Self {
        let (rows, cols) = values.dims();
        let valid = ByteGrid::from_fn(rows, cols, |i, j| {
            if values[(i, j)].is_finite() {
                1
            } else {
                0
            }
        });
        Self { values, valid }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    pub fn null_count(&self) -> usize {
        self.valid.len() - self.valid.count_ones()
    }

    pub fn is_fully_valid(&self) -> bool {
        self.null_count() == 0
    }
}

/// Nearest valid pixel along one axis direction from `(i, j)` exclusive.
/// Returns (distance in pixels, value).
fn scan_axis(
    grid: &MaskedGrid,
    mut i: isize,
    mut j: isize,
    di: isize,
    dj: isize,
) -> Option<(f64, f64)> {
    let (rows, cols) = grid.dims();
    let mut dist = 0usize;
    loop {
        i += di;
        j += dj;
        dist += 1;
        if i < 0 || j < 0 || i >= rows as isize || j >= cols as isize {
            return None;
        }
        if grid.valid[(i as usize, j as usize)] == 1 {
            return Some((dist as f64, grid.values[(i as usize, j as usize)]));
        }
    }
}

/// Linear interpolation between the nearest valid pixels on the two opposite
/// axis directions. The boolean is true when both directions had data; a
/// one-sided copy is returned with false so callers can prefer genuinely
/// interpolated axes.
fn axis_estimate(neg: Option<(f64, f64)>, pos: Option<(f64, f64)>) -> Option<(f64, bool)> {
    match (neg, pos) {
        (Some((dn, vn)), Some((dp, vp))) => Some(((vn * dp + vp * dn) / (dn + dp), true)),
        (Some((_, v)), None) | (None, Some((_, v))) => Some((v, false)),
        (None, None) => None,
    }
}

fn combine_axes(h: Option<(f64, bool)>, v: Option<(f64, bool)>) -> Option<f64> {
    match (h, v) {
        (Some((a, true)), Some((b, true))) => Some(0.5 * (a + b)),
        (Some((a, true)), _) | (_, Some((a, true))) => Some(a),
        (Some((a, false)), Some((b, false))) => Some(0.5 * (a + b)),
        (Some((a, false)), None) | (None, Some((a, false))) => Some(a),
        (None, None) => None,
    }
}

/// Nearest valid pixel by Euclidean distance, used only when all four axis
/// scans from a null pixel hit the border without meeting data.
fn nearest_valid(grid: &MaskedGrid, i: usize, j: usize) -> f64 {
    let (rows, cols) = grid.dims();
    let mut best_d2 = u64::MAX;
    let mut best = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            if grid.valid[(r, c)] == 1 {
                let di = r.abs_diff(i) as u64;
                let dj = c.abs_diff(j) as u64;
                let d2 = di * di + dj * dj;
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = grid.values[(r, c)];
                }
            }
        }
    }
    best
}

/// Replaces every null pixel with a bilinear estimate built from the nearest
/// valid pixels on the four axis directions. Axes with data on both sides
/// contribute linear interpolants, which are averaged; axes cut off by the
/// border degrade to one-sided copies and are used only when no two-sided
/// axis exists. A null with no axis data at all takes the nearest valid
/// pixel overall.
///
/// Valid pixels pass through bit-for-bit. Affine fields are reconstructed
/// exactly at every null with at least one two-sided axis.
pub fn fill_gaps_bilinear(grid: &MaskedGrid) -> Result<Grid> {
    if grid.valid.count_ones() == 0 {
        return Err(Error::AllNull);
    }
    let (rows, cols) = grid.dims();
    let mut out = grid.values.clone();
    for i in 0..rows {
        for j in 0..cols {
            if grid.valid[(i, j)] == 1 {
                continue;
            }
            let h = axis_estimate(
                scan_axis(grid, i as isize, j as isize, 0, -1),
                scan_axis(grid, i as isize, j as isize, 0, 1),
            );
            let v = axis_estimate(
                scan_axis(grid, i as isize, j as isize, -1, 0),
                scan_axis(grid, i as isize, j as isize, 1, 0),
            );
            out[(i, j)] = combine_axes(h, v).unwrap_or_else(|| nearest_valid(grid, i, j));
        }
    }
    Ok(out)
}

/// Replaces every null pixel with `fill_value`, leaving valid pixels
/// untouched. Suited to maps whose nulls form large contiguous voids where
/// interpolation would invent structure.
pub fn fill_gaps_static(grid: &MaskedGrid, fill_value: f64) -> Grid {
    let (rows, cols) = grid.dims();
    Grid::from_fn(rows, cols, |i, j| {
        if grid.valid[(i, j)] == 1 {
            grid.values[(i, j)]
        } else {
            fill_value
        }
    })
}

/// Per-pixel mean over instances, ignoring nulls. A pixel stays null only
/// where every instance is null.
pub fn merge_reseeded(instances: &[MaskedGrid]) -> Result<MaskedGrid> {
    let first = instances.first().ok_or(Error::EmptyInstanceList)?;
    let (rows, cols) = first.dims();
    for inst in &instances[1..] {
        if inst.dims() != (rows, cols) {
            return Err(Error::DimensionMismatch {
                expected: (rows, cols),
                found: inst.dims(),
            });
        }
    }
    let mut values = Grid::new(rows, cols, 0.0);
    let mut valid = ByteGrid::new(rows, cols, 0);
    for i in 0..rows {
        for j in 0..cols {
            let mut sum = 0.0;
            let mut count = 0u32;
            for inst in instances {
                if inst.valid[(i, j)] == 1 {
                    sum += inst.values[(i, j)];
                    count += 1;
                }
            }
            if count > 0 {
                values[(i, j)] = sum / count as f64;
                valid[(i, j)] = 1;
            }
        }
    }
    MaskedGrid::new(values, valid)
}

/// How the radio map in a sample was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleProvenance {
    /// Rendered by the built-in propagation engine.
    EngineRendered,
    /// Imported from an external renderer and repaired.
    Ingested,
}

/// Everything needed to de-normalize the stored channels exactly and to
/// trace a sample back to its generator inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub terrain_seed: u64,
    pub tx_row: usize,
    pub tx_col: usize,
    pub tx_height_above_ground_m: f64,
    pub rx_height_above_ground_m: f64,
    pub tx_power_dbm: f64,
    pub frequency_hz: f64,
    pub clip_range_db: (f64, f64),
    pub cell_size_m: f64,
    pub elevation_min_m: f64,
    pub elevation_max_m: f64,
    /// Units of the continuous wave-number field the binary label was
    /// thresholded from.
    pub k2_units: String,
    pub generator_version: String,
    pub provenance: SampleProvenance,
    /// Gap-repair method applied before assembly, for ingested maps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_method: Option<String>,
}

/// One training sample: three real-valued channels, three binary channels,
/// and the metadata to invert the normalizations.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    /// Heightmap min-max normalized to [0, 1].
    pub i_hm: Grid,
    /// High-pass fine structure of the heightmap, meters.
    pub i_fm: Grid,
    /// One-hot transmitter position.
    pub i_tx: ByteGrid,
    /// Band flag: all 0 for the low band, all 1 for the high band.
    pub i_hz: ByteGrid,
    /// Binary wave-number label.
    pub i_km: ByteGrid,
    /// Radio map normalized to [0, 1].
    pub i_rm: Grid,
    pub meta: SampleMeta,
}

impl DatasetSample {
    pub fn dims(&self) -> (usize, usize) {
        self.i_hm.dims()
    }

    /// Recovers the heightmap in meters from the normalized channel.
    pub fn denormalized_heightmap(&self) -> Grid {
        let span = self.meta.elevation_max_m - self.meta.elevation_min_m;
        let min = self.meta.elevation_min_m;
        self.i_hm.map(|v| min + v * span)
    }

    /// Recovers the radio map in dB from the normalized channel.
    pub fn denormalized_radio_map(&self) -> Grid {
        let (lo, hi) = self.meta.clip_range_db;
        self.i_rm.map(|v| lo + v * (hi - lo))
    }
}

/// Assembly knobs. `highpass_sigma_m` is the blur scale (in meters) removed
/// from the heightmap to isolate fine structure; `rx_height_m` must repeat
/// the receiver height the radio map was rendered at; `strict_bands`
/// restricts accepted frequencies to the two training bands.
#[derive(Debug, Clone)]
pub struct AssembleConfig {
    pub highpass_sigma_m: f64,
    pub rx_height_m: f64,
    pub strict_bands: bool,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        Self {
            highpass_sigma_m: 8.0,
            rx_height_m: 1.0,
            strict_bands: true,
        }
    }
}

fn band_flag(frequency_hz: f64, strict_bands: bool) -> Result<u8> {
    if frequency_hz == BAND_LOW_HZ {
        return Ok(0);
    }
    if frequency_hz == BAND_HIGH_HZ {
        return Ok(1);
    }
    if strict_bands {
        return Err(Error::FrequencyOutsideBands { frequency_hz });
    }
    // Off-band frequencies map to the nearer band in log-frequency.
    let mid = (BAND_LOW_HZ * BAND_HIGH_HZ).sqrt();
    Ok(if frequency_hz >= mid { 1 } else { 0 })
}

/// Combines a terrain, a rendered radio map, and the wave-number label into
/// one sample. The heightmap is min-max normalized per sample with the range
/// recorded in the metadata; a flat heightmap normalizes to all zeros.
pub fn assemble_sample(
    map: &HeightMap,
    tx: &Transmitter,
    rendered: &RadioMap,
    k2: &WaveNumberMap,
    config: &AssembleConfig,
) -> Result<DatasetSample> {
    tx.validate_for(map)?;
    let dims = map.elevations().dims();
    if rendered.normalized.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: rendered.normalized.dims(),
        });
    }
    if k2.k2_binary.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: k2.k2_binary.dims(),
        });
    }
    if rendered.tx != *tx {
        return Err(Error::SampleMismatch(format!(
            "radio map was rendered for transmitter {:?}, not {:?}",
            rendered.tx, tx
        )));
    }
    if !rendered.normalized.all_finite() {
        return Err(Error::NonFinite("rendered radio map"));
    }

    let flag = band_flag(tx.frequency_hz, config.strict_bands)?;
    let (rows, cols) = dims;

    let (min, max) = map.elevations().min_max();
    let span = max - min;
    let i_hm = if span > 0.0 {
        map.elevations().map(|v| (v - min) / span)
    } else {
        Grid::new(rows, cols, 0.0)
    };

    let i_fm = high_pass(map, config.highpass_sigma_m / map.cell_size_m())?;

    let mut i_tx = ByteGrid::new(rows, cols, 0);
    i_tx[(tx.grid_i, tx.grid_j)] = 1;

    Ok(DatasetSample {
        i_hm,
        i_fm,
        i_tx,
        i_hz: ByteGrid::new(rows, cols, flag),
        i_km: k2.k2_binary.clone(),
        i_rm: rendered.normalized.clone(),
        meta: SampleMeta {
            terrain_seed: map.seed(),
            tx_row: tx.grid_i,
            tx_col: tx.grid_j,
            tx_height_above_ground_m: tx.height_above_ground,
            rx_height_above_ground_m: config.rx_height_m,
            tx_power_dbm: tx.power_dbm,
            frequency_hz: tx.frequency_hz,
            clip_range_db: rendered.clip_range_db,
            cell_size_m: map.cell_size_m(),
            elevation_min_m: min,
            elevation_max_m: max,
            k2_units: "1/m^2".to_string(),
            generator_version: env!("CARGO_PKG_VERSION").to_string(),
            provenance: SampleProvenance::EngineRendered,
            repair_method: None,
        },
    })
}

/// Checks every structural invariant of a sample and returns one message per
/// violation. An empty list means the sample is well formed.
pub fn validate_sample(sample: &DatasetSample) -> Vec<String> {
    let mut violations = Vec::new();
    let dims = sample.i_hm.dims();

    let real_channels = [
        ("I_HM", &sample.i_hm),
        ("I_FM", &sample.i_fm),
        ("I_RM", &sample.i_rm),
    ];
    for (name, grid) in real_channels {
        if grid.dims() != dims {
            violations.push(format!(
                "{name} dims {:?} disagree with I_HM dims {dims:?}",
                grid.dims()
            ));
        }
        if !grid.all_finite() {
            violations.push(format!("{name} contains non-finite values"));
        }
    }
    let binary_channels = [
        ("I_Tx", &sample.i_tx),
        ("I_Hz", &sample.i_hz),
        ("I_KM", &sample.i_km),
    ];
    for (name, grid) in binary_channels {
        if grid.dims() != dims {
            violations.push(format!(
                "{name} dims {:?} disagree with I_HM dims {dims:?}",
                grid.dims()
            ));
        }
        if !grid.is_binary() {
            violations.push(format!("{name} holds values other than 0 and 1"));
        }
    }

    let ones = sample.i_tx.count_ones();
    if ones != 1 {
        violations.push(format!("I_Tx must have exactly one hot pixel, found {ones}"));
    }
    let hz_ones = sample.i_hz.count_ones();
    if hz_ones != 0 && hz_ones != sample.i_hz.len() {
        violations.push("I_Hz must be constant all-0 or all-1".to_string());
    }
    for (name, grid, lo, hi) in [
        ("I_HM", &sample.i_hm, 0.0, 1.0),
        ("I_RM", &sample.i_rm, 0.0, 1.0),
    ] {
        let (gmin, gmax) = grid.min_max();
        if gmin < lo || gmax > hi {
            violations.push(format!("{name} range [{gmin}, {gmax}] exceeds [{lo}, {hi}]"));
        }
    }

    let meta = &sample.meta;
    if !(meta.frequency_hz.is_finite() && meta.frequency_hz > 0.0) {
        violations.push(format!("frequency {} must be positive", meta.frequency_hz));
    }
    if !(meta.cell_size_m.is_finite() && meta.cell_size_m > 0.0) {
        violations.push(format!("cell size {} must be positive", meta.cell_size_m));
    }
    if meta.elevation_max_m < meta.elevation_min_m {
        violations.push(format!(
            "elevation range [{}, {}] is inverted",
            meta.elevation_min_m, meta.elevation_max_m
        ));
    }
    if meta.clip_range_db.1 <= meta.clip_range_db.0 {
        violations.push(format!(
            "clip range ({}, {}) must be increasing",
            meta.clip_range_db.0, meta.clip_range_db.1
        ));
    }
    if meta.tx_row >= dims.0 || meta.tx_col >= dims.1 {
        violations.push(format!(
            "transmitter index ({}, {}) outside grid {:?}",
            meta.tx_row, meta.tx_col, dims
        ));
    } else if sample.i_tx.dims() == dims && sample.i_tx[(meta.tx_row, meta.tx_col)] != 1 {
        violations.push("I_Tx hot pixel disagrees with metadata position".to_string());
    }

    violations
}
