//! Crater population sampling and stamping.

use super::{CraterEvent, HeightMap, TerrainGenConfig};
use crate::error::{Error, Result};
use crate::grid::Grid;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Draws the cratering events for one epoch.
///
/// The event count follows a Poisson law with mean
/// `crater_rate * grid_area * epoch_duration`; diameters are i.i.d. samples
/// from the truncated power law with cumulative slope `-b`, and centers are
/// uniform over the grid padded by one crater radius on every side.
pub fn sample_crater_population<R: Rng>(
    config: &TerrainGenConfig,
    epoch: u32,
    rng: &mut R,
) -> Result<Vec<CraterEvent>> {
    if epoch >= config.n_epochs {
        return Err(Error::invalid(format!(
            "epoch {epoch} out of range for {} epochs",
            config.n_epochs
        )));
    }
    if !(config.crater_rate.is_finite() && config.crater_rate >= 0.0) {
        return Err(Error::invalid(format!(
            "crater rate {} must be finite and non-negative",
            config.crater_rate
        )));
    }

    let extent = config.extent_m();
    let area = extent * extent;
    let mean = config.crater_rate * area * config.epoch_duration();
    if mean == 0.0 {
        return Ok(Vec::new());
    }

    let poisson = Poisson::new(mean).map_err(|e| Error::invalid(format!("poisson mean {mean}: {e:?}")))?;
    let count = poisson.sample(rng) as u64;

    let mut events = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let diameter_m = sample_diameter(config.sfd_exponent, config.d_min_m, config.d_max_m, rng);
        let radius = diameter_m / 2.0;
        let center_x_m = rng.gen_range(-radius..=extent + radius);
        let center_y_m = rng.gen_range(-radius..=extent + radius);
        events.push(CraterEvent {
            center_x_m,
            center_y_m,
            diameter_m,
            epoch_index: epoch,
        });
    }
    Ok(events)
}

/// Inverse-CDF sample from the truncated cumulative power law N(>D) ~ D^-b
/// on [d_min, d_max].
fn sample_diameter<R: Rng>(b: f64, d_min: f64, d_max: f64, rng: &mut R) -> f64 {
    let a_min = d_min.powf(-b);
    let a_max = d_max.powf(-b);
    let u: f64 = rng.gen();
    (a_min - u * (a_min - a_max)).powf(-1.0 / b)
}

/// Stamps a single crater, returning the modified map.
pub fn stamp_crater(map: &HeightMap, event: &CraterEvent, config: &TerrainGenConfig) -> HeightMap {
    let mut elevations = map.elevations().clone();
    stamp_into(&mut elevations, map.cell_size_m(), event, config);
    HeightMap::new(elevations, map.cell_size_m(), map.seed())
        .expect("stamping preserves heightmap invariants")
}

/// In-place crater stamp.
///
/// Inside the rim crest the terrain is replaced by a parabolic bowl anchored
/// to the mean pre-impact elevation of the bowl footprint, cross-faded into
/// the existing surface over the outer 10% of the radius. Outside the crest a
/// rim of height `rim_height_ratio * D` is added with an (r/R)^-3 falloff,
/// truncated where the contribution drops below `rim_floor_m`. Parts of the
/// footprint that fall outside the grid are clipped.
pub(super) fn stamp_into(
    elevations: &mut Grid,
    cell_size_m: f64,
    event: &CraterEvent,
    config: &TerrainGenConfig,
) {
    let n = elevations.rows();
    let radius = event.diameter_m / 2.0;
    let depth = config.depth_ratio * event.diameter_m;
    let rim_height = config.rim_height_ratio * event.diameter_m;

    // Radial extent of the additive rim: rim_h * (r/R)^-3 >= floor.
    let reach = if rim_height > config.rim_floor_m {
        radius * (rim_height / config.rim_floor_m).cbrt()
    } else {
        radius
    };

    let lo_i = (((event.center_y_m - reach) / cell_size_m).floor().max(0.0)) as usize;
    let hi_i = (((event.center_y_m + reach) / cell_size_m).ceil()).min((n - 1) as f64) as usize;
    let lo_j = (((event.center_x_m - reach) / cell_size_m).floor().max(0.0)) as usize;
    let hi_j = (((event.center_x_m + reach) / cell_size_m).ceil()).min((n - 1) as f64) as usize;
    if lo_i > hi_i || lo_j > hi_j || event.center_y_m + reach < 0.0 || event.center_x_m + reach < 0.0
    {
        return;
    }

    // Pre-impact reference: mean elevation over the in-grid bowl footprint.
    let mut ref_sum = 0.0;
    let mut ref_count = 0usize;
    for i in lo_i..=hi_i {
        for j in lo_j..=hi_j {
            let r = pixel_distance(i, j, cell_size_m, event);
            if r <= radius {
                ref_sum += elevations[(i, j)];
                ref_count += 1;
            }
        }
    }
    let reference = if ref_count > 0 {
        ref_sum / ref_count as f64
    } else {
        0.0
    };

    let blend_start = 0.9 * radius;
    for i in lo_i..=hi_i {
        for j in lo_j..=hi_j {
            let r = pixel_distance(i, j, cell_size_m, event);
            if r <= radius {
                if ref_count == 0 {
                    continue;
                }
                let rr = r / radius;
                let bowl = reference - depth + (depth + rim_height) * rr * rr;
                let rim_here = elevations[(i, j)] + rim_height * rr.powi(-3).min(8.0);
                let w = if r <= blend_start {
                    1.0
                } else {
                    (radius - r) / (radius - blend_start)
                };
                elevations[(i, j)] = w * bowl + (1.0 - w) * rim_here;
            } else if r <= reach {
                let add = rim_height * (r / radius).powi(-3);
                if add >= config.rim_floor_m {
                    elevations[(i, j)] += add;
                }
            }
        }
    }
}

#[inline]
fn pixel_distance(i: usize, j: usize, cell_size_m: f64, event: &CraterEvent) -> f64 {
    let x = j as f64 * cell_size_m;
    let y = i as f64 * cell_size_m;
    ((x - event.center_x_m).powi(2) + (y - event.center_y_m).powi(2)).sqrt()
}
