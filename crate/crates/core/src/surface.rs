//! Differential operators on the surface defined by a heightmap.
//!
//! The heightmap graph z = h(x, y) induces a metric g = I + grad(h) grad(h)^T
//! on the chart plane. This module builds that metric, applies the
//! Laplace-Beltrami operator to fields sampled on the chart, and derives the
//! square-wave-number map k^2 = -lap(E)/E from a received-power field
//! together with its sign-based binary mask.

use crate::error::{Error, Result};
use crate::grid::{ByteGrid, Grid};
use crate::propagation::RadioMap;
use crate::terrain::HeightMap;
use rayon::prelude::*;

/// Default floor applied to linear received power before taking the square
/// root, preventing division blow-up in deep shadow.
pub const DEFAULT_EPSILON_FLOOR: f64 = 1e-12;

/// First fundamental form of the heightmap graph, with derived inverse and
/// volume-element grids. All components are dimensionless.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub g11: Grid,
    pub g12: Grid,
    pub g22: Grid,
    /// sqrt(g11*g22 - g12^2), the area element.
    pub sqrt_det: Grid,
    pub inv_g11: Grid,
    pub inv_g12: Grid,
    pub inv_g22: Grid,
    cell_size_m: f64,
}

impl MetricField {
    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn dims(&self) -> (usize, usize) {
        self.g11.dims()
    }
}

/// Scalar field sampled on the manifold, indexed by the heightmap chart.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    values: Grid,
    chart_cell_size: f64,
}

impl SurfaceField {
    pub fn new(values: Grid, chart_cell_size: f64) -> Result<Self> {
        if !values.all_finite() {
            return Err(Error::NonFinite("surface field"));
        }
        if !(chart_cell_size.is_finite() && chart_cell_size > 0.0) {
            return Err(Error::invalid(format!(
                "chart cell size {chart_cell_size} must be positive"
            )));
        }
        Ok(Self {
            values,
            chart_cell_size,
        })
    }

    pub fn values(&self) -> &Grid {
        &self.values
    }

    pub fn chart_cell_size(&self) -> f64 {
        self.chart_cell_size
    }
}

/// Laplace-Beltrami output. Border pixels use reduced-order one-sided
/// stencils and are marked 0 in `full_order`.
#[derive(Debug, Clone)]
pub struct LaplacianField {
    pub values: Grid,
    pub full_order: ByteGrid,
}

/// Square-wave-number map in 1/m^2 with its sign-based binary mask. Negative
/// continuous values mark field discontinuities; the binary channel is 1
/// exactly where the continuous channel is negative. The one-pixel border of
/// both channels is forced to 0 because border stencils are reduced-order.
#[derive(Debug, Clone)]
pub struct WaveNumberMap {
    pub k2_continuous: Grid,
    pub k2_binary: ByteGrid,
}

/// Builds the graph-surface metric from a heightmap.
///
/// Gradients use central differences scaled by the cell size, falling back to
/// one-sided differences on the border.
pub fn metric_from_heightmap(map: &HeightMap) -> MetricField {
    let h = map.elevations();
    let (rows, cols) = h.dims();
    let cell = map.cell_size_m();

    let mut g11 = Grid::new(rows, cols, 0.0);
    let mut g12 = Grid::new(rows, cols, 0.0);
    let mut g22 = Grid::new(rows, cols, 0.0);
    let mut sqrt_det = Grid::new(rows, cols, 0.0);
    let mut inv_g11 = Grid::new(rows, cols, 0.0);
    let mut inv_g12 = Grid::new(rows, cols, 0.0);
    let mut inv_g22 = Grid::new(rows, cols, 0.0);

    for i in 0..rows {
        for j in 0..cols {
            let hx = directional_gradient(h, i, j, cell, Axis::X);
            let hy = directional_gradient(h, i, j, cell, Axis::Y);
            let a = 1.0 + hx * hx;
            let b = hx * hy;
            let c = 1.0 + hy * hy;
            let det = a * c - b * b;
            g11[(i, j)] = a;
            g12[(i, j)] = b;
            g22[(i, j)] = c;
            sqrt_det[(i, j)] = det.sqrt();
            inv_g11[(i, j)] = c / det;
            inv_g12[(i, j)] = -b / det;
            inv_g22[(i, j)] = a / det;
        }
    }

    MetricField {
        g11,
        g12,
        g22,
        sqrt_det,
        inv_g11,
        inv_g12,
        inv_g22,
        cell_size_m: cell,
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn directional_gradient(h: &Grid, i: usize, j: usize, cell: f64, axis: Axis) -> f64 {
    let (rows, cols) = h.dims();
    match axis {
        Axis::X => {
            let jm = j.saturating_sub(1);
            let jp = (j + 1).min(cols - 1);
            (h[(i, jp)] - h[(i, jm)]) / ((jp - jm) as f64 * cell)
        }
        Axis::Y => {
            let im = i.saturating_sub(1);
            let ip = (i + 1).min(rows - 1);
            (h[(ip, j)] - h[(im, j)]) / ((ip - im) as f64 * cell)
        }
    }
}

/// Applies the Laplace-Beltrami operator
/// `lap(f) = (1/sqrt|g|) d_i( sqrt|g| g^{ij} d_j f )`
/// in conservative flux form: fluxes are evaluated on half-cell faces with
/// face coefficients averaged from the two adjacent cells, then differenced.
/// For a flat metric the stencil reduces to the classical 5-point Laplacian.
///
/// Border pixels clamp out-of-grid reads, which degrades the stencil to
/// one-sided first order; they are flagged 0 in the output mask.
pub fn laplace_beltrami(field: &SurfaceField, metric: &MetricField) -> Result<LaplacianField> {
    let f = field.values();
    if f.dims() != metric.dims() {
        return Err(Error::DimensionMismatch {
            expected: metric.dims(),
            found: f.dims(),
        });
    }
    let (rows, cols) = f.dims();
    let cell = field.chart_cell_size();

    // Face-averaged coefficient fields: a = sqrt|g| g^xx, b = sqrt|g| g^xy,
    // c = sqrt|g| g^yy, evaluated at cell centers.
    let a = metric.sqrt_det.zip_map(&metric.inv_g11, |s, v| s * v);
    let b = metric.sqrt_det.zip_map(&metric.inv_g12, |s, v| s * v);
    let c = metric.sqrt_det.zip_map(&metric.inv_g22, |s, v| s * v);

    let clamp_i = |i: isize| -> usize { i.clamp(0, rows as isize - 1) as usize };
    let clamp_j = |j: isize| -> usize { j.clamp(0, cols as isize - 1) as usize };

    // Average of the central y-derivatives at columns ja and jb of row i.
    let dy_pair = |i: usize, ja: usize, jb: usize| -> f64 {
        let im = clamp_i(i as isize - 1);
        let ip = clamp_i(i as isize + 1);
        (f[(ip, ja)] - f[(im, ja)] + f[(ip, jb)] - f[(im, jb)]) / (4.0 * cell)
    };
    let dx_pair = |ia: usize, ib: usize, j: usize| -> f64 {
        let jm = clamp_j(j as isize - 1);
        let jp = clamp_j(j as isize + 1);
        (f[(ia, jp)] - f[(ia, jm)] + f[(ib, jp)] - f[(ib, jm)]) / (4.0 * cell)
    };

    let mut values = Grid::new(rows, cols, 0.0);
    values
        .as_mut_slice()
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(i, out_row)| {
            let im = clamp_i(i as isize - 1);
            let ip = clamp_i(i as isize + 1);
            for j in 0..cols {
                let jm = clamp_j(j as isize - 1);
                let jp = clamp_j(j as isize + 1);

                let flux_xp = 0.5 * (a[(i, j)] + a[(i, jp)]) * (f[(i, jp)] - f[(i, j)]) / cell
                    + 0.5 * (b[(i, j)] + b[(i, jp)]) * dy_pair(i, j, jp);
                let flux_xm = 0.5 * (a[(i, jm)] + a[(i, j)]) * (f[(i, j)] - f[(i, jm)]) / cell
                    + 0.5 * (b[(i, jm)] + b[(i, j)]) * dy_pair(i, jm, j);
                let flux_yp = 0.5 * (c[(i, j)] + c[(ip, j)]) * (f[(ip, j)] - f[(i, j)]) / cell
                    + 0.5 * (b[(i, j)] + b[(ip, j)]) * dx_pair(i, ip, j);
                let flux_ym = 0.5 * (c[(im, j)] + c[(i, j)]) * (f[(i, j)] - f[(im, j)]) / cell
                    + 0.5 * (b[(im, j)] + b[(i, j)]) * dx_pair(im, i, j);

                let divergence = (flux_xp - flux_xm + flux_yp - flux_ym) / cell;
                out_row[j] = divergence / metric.sqrt_det[(i, j)];
            }
        });

    let full_order = ByteGrid::from_fn(rows, cols, |i, j| {
        u8::from(i > 0 && i < rows - 1 && j > 0 && j < cols - 1)
    });

    Ok(LaplacianField { values, full_order })
}

/// Pixelwise sign rule: strictly negative values map to 1, everything else
/// to 0.
pub fn binarize_by_sign(values: &Grid) -> ByteGrid {
    ByteGrid::from_fn(values.rows(), values.cols(), |i, j| {
        u8::from(values[(i, j)] < 0.0)
    })
}

/// Derives the square-wave-number map for a rendered radio map by converting
/// its clipped dB gain to linear power and delegating to
/// [`extract_k2_from_power`].
pub fn extract_k2(
    radio_map: &RadioMap,
    metric: &MetricField,
    epsilon_floor: f64,
) -> Result<WaveNumberMap> {
    let power = SurfaceField::new(radio_map.linear_power(), metric.cell_size_m())?;
    extract_k2_from_power(&power, metric, epsilon_floor)
}

/// Derives the square-wave-number map from a linear received-power field.
///
/// The field magnitude is `E = sqrt(max(power, epsilon_floor))` and the map
/// is `k^2 = -lap(E)/E` with the border zeroed in both channels.
pub fn extract_k2_from_power(
    power: &SurfaceField,
    metric: &MetricField,
    epsilon_floor: f64,
) -> Result<WaveNumberMap> {
    validate_floor(epsilon_floor)?;
    if let Some(&v) = power.values().iter().find(|&&v| v < 0.0) {
        return Err(Error::NegativePower { value: v });
    }
    let magnitude = SurfaceField::new(
        power.values().map(|p| p.max(epsilon_floor).sqrt()),
        power.chart_cell_size(),
    )?;
    k2_from_magnitude_unchecked(&magnitude, metric)
}

/// Same derivation starting from an externally supplied field magnitude
/// (for example, ingested |E| from a full-wave solver). Magnitudes are
/// floored at `sqrt(epsilon_floor)` to match the power-domain floor.
pub fn extract_k2_from_magnitude(
    magnitude: &SurfaceField,
    metric: &MetricField,
    epsilon_floor: f64,
) -> Result<WaveNumberMap> {
    validate_floor(epsilon_floor)?;
    if let Some(&v) = magnitude.values().iter().find(|&&v| v < 0.0) {
        return Err(Error::NegativePower { value: v });
    }
    let floor = epsilon_floor.sqrt();
    let floored = SurfaceField::new(
        magnitude.values().map(|m| m.max(floor)),
        magnitude.chart_cell_size(),
    )?;
    k2_from_magnitude_unchecked(&floored, metric)
}

fn validate_floor(epsilon_floor: f64) -> Result<()> {
    if !(epsilon_floor.is_finite() && epsilon_floor > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon floor {epsilon_floor} must be finite and positive"
        )));
    }
    Ok(())
}

fn k2_from_magnitude_unchecked(
    magnitude: &SurfaceField,
    metric: &MetricField,
) -> Result<WaveNumberMap> {
    let lap = laplace_beltrami(magnitude, metric)?;
    let (rows, cols) = lap.values.dims();
    let mut k2 = Grid::new(rows, cols, 0.0);
    for i in 0..rows {
        for j in 0..cols {
            if lap.full_order[(i, j)] == 1 {
                k2[(i, j)] = -lap.values[(i, j)] / magnitude.values()[(i, j)];
            }
        }
    }
    let k2_binary = binarize_by_sign(&k2);
    Ok(WaveNumberMap {
        k2_continuous: k2,
        k2_binary,
    })
}
