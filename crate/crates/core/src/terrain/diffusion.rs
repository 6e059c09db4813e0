//! Explicit heat-equation solver used for crater degradation.

use super::{BoundaryCondition, HeightMap};
use crate::error::{Error, Result};
use crate::grid::Grid;
use rayon::prelude::*;

/// Largest stable step fraction kappa*dt/dx^2 for the 5-point stencil.
const MAX_STEP_FRACTION: f64 = 0.25;

/// Diffuses the heightmap by `duration` age units at diffusivity `kappa`.
///
/// The solver subdivides `duration` so every substep satisfies the stability
/// bound `kappa*dt/dx^2 <= 0.25`. With either boundary condition the update
/// is a convex combination of neighbors (discrete maximum principle) and the
/// stencil is flux-conservative, so the elevation sum is preserved.
pub fn diffuse(
    map: &HeightMap,
    kappa: f64,
    duration: f64,
    boundary: BoundaryCondition,
) -> Result<HeightMap> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::invalid(format!(
            "diffusivity {kappa} must be finite and non-negative"
        )));
    }
    if !duration.is_finite() || duration < 0.0 {
        return Err(Error::invalid(format!(
            "duration {duration} must be finite and non-negative"
        )));
    }
    let mut elevations = map.elevations().clone();
    diffuse_grid(&mut elevations, map.cell_size_m(), kappa, duration, boundary);
    HeightMap::new(elevations, map.cell_size_m(), map.seed())
}

pub(super) fn diffuse_grid(
    elevations: &mut Grid,
    cell_size_m: f64,
    kappa: f64,
    duration: f64,
    boundary: BoundaryCondition,
) {
    if kappa == 0.0 || duration == 0.0 {
        return;
    }
    let dx2 = cell_size_m * cell_size_m;
    let substeps = (kappa * duration / (MAX_STEP_FRACTION * dx2)).ceil().max(1.0) as usize;
    let lam = kappa * (duration / substeps as f64) / dx2;

    let (rows, cols) = elevations.dims();
    let mut back = elevations.clone();
    for _ in 0..substeps {
        step(elevations, &mut back, rows, cols, lam, boundary);
        std::mem::swap(elevations, &mut back);
    }
}

fn step(
    src: &Grid,
    dst: &mut Grid,
    rows: usize,
    cols: usize,
    lam: f64,
    boundary: BoundaryCondition,
) {
    let s = src.as_slice();
    dst.as_mut_slice()
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(i, out_row)| {
            let (up, down) = match boundary {
                BoundaryCondition::Neumann => (i.saturating_sub(1), (i + 1).min(rows - 1)),
                BoundaryCondition::Periodic => ((i + rows - 1) % rows, (i + 1) % rows),
            };
            for j in 0..cols {
                let (left, right) = match boundary {
                    BoundaryCondition::Neumann => (j.saturating_sub(1), (j + 1).min(cols - 1)),
                    BoundaryCondition::Periodic => ((j + cols - 1) % cols, (j + 1) % cols),
                };
                let center = s[i * cols + j];
                let sum = s[up * cols + j] + s[down * cols + j] + s[i * cols + left]
                    + s[i * cols + right];
                out_row[j] = center + lam * (sum - 4.0 * center);
            }
        });
}
