//! Separable Gaussian blur and the derived high-pass terrain filter.

use super::HeightMap;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Edge handling for the blur convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderMode {
    /// Mirror without repeating the edge sample (a b c | b a).
    Reflect,
    /// Wrap around to the opposite edge.
    Periodic,
}

fn kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let mut weights = Vec::with_capacity(2 * radius + 1);
    let inv = -0.5 / (sigma * sigma);
    for offset in -(radius as isize)..=(radius as isize) {
        let d = offset as f64;
        weights.push((d * d * inv).exp());
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

fn resolve(index: isize, len: usize, mode: BorderMode) -> usize {
    let n = len as isize;
    match mode {
        BorderMode::Periodic => (index.rem_euclid(n)) as usize,
        BorderMode::Reflect => {
            // Reflect about the edge samples; period of the reflection is 2n-2.
            if n == 1 {
                return 0;
            }
            let period = 2 * n - 2;
            let m = index.rem_euclid(period);
            if m < n {
                m as usize
            } else {
                (period - m) as usize
            }
        }
    }
}

/// Blurs a grid with a normalized Gaussian of standard deviation `sigma`
/// pixels, applied separately along rows and columns.
pub fn gaussian_blur(grid: &Grid, sigma: f64, mode: BorderMode) -> Result<Grid> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::invalid(format!(
            "blur sigma {sigma} must be finite and positive"
        )));
    }
    let weights = kernel(sigma);
    let radius = (weights.len() / 2) as isize;
    let (rows, cols) = grid.dims();

    let mut horizontal = Grid::new(rows, cols, 0.0);
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for (t, w) in weights.iter().enumerate() {
                let jj = resolve(j as isize + t as isize - radius, cols, mode);
                acc += w * grid[(i, jj)];
            }
            horizontal[(i, j)] = acc;
        }
    }

    let mut out = Grid::new(rows, cols, 0.0);
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for (t, w) in weights.iter().enumerate() {
                let ii = resolve(i as isize + t as isize - radius, rows, mode);
                acc += w * horizontal[(ii, j)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Removes the low-frequency component of the terrain: elevations minus a
/// Gaussian blur with reflecting borders. The result keeps meter units.
pub fn high_pass(map: &HeightMap, sigma: f64) -> Result<Grid> {
    let blurred = gaussian_blur(map.elevations(), sigma, BorderMode::Reflect)?;
    Ok(map.elevations().zip_map(&blurred, |a, b| a - b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_passes_through_to_zero() {
        let map = HeightMap::new(Grid::new(64, 64, 7.25), 1.0, 0).unwrap();
        let hp = high_pass(&map, 8.0).unwrap();
        for &v in hp.iter() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn linear_ramp_is_removed_in_the_interior() {
        let n = 96;
        let map = HeightMap::new(Grid::from_fn(n, n, |_, j| 0.5 * j as f64), 1.0, 0).unwrap();
        let hp = high_pass(&map, 4.0).unwrap();
        let radius = (3.0f64 * 4.0).ceil() as usize;
        for i in radius..n - radius {
            for j in radius..n - radius {
                assert!(
                    hp[(i, j)].abs() < 1e-6,
                    "interior ramp residue {} at ({i},{j})",
                    hp[(i, j)]
                );
            }
        }
    }

    #[test]
    fn impulse_keeps_most_of_its_height() {
        let n = 64;
        let mut g = Grid::new(n, n, 0.0);
        g[(32, 32)] = 1.0;
        let map = HeightMap::new(g, 1.0, 0).unwrap();
        let sigma = 2.0;
        let hp = high_pass(&map, sigma).unwrap();
        let w = kernel(sigma);
        let center_weight = w[w.len() / 2];
        let expected = 1.0 - center_weight * center_weight;
        assert!((hp[(32, 32)] - expected).abs() < 1e-12);
    }

    #[test]
    fn periodic_blur_preserves_the_mean() {
        let g = Grid::from_fn(48, 48, |i, j| ((i * 5 + j * 11) % 17) as f64);
        let before = g.mean();
        let blurred = gaussian_blur(&g, 3.0, BorderMode::Periodic).unwrap();
        assert!((blurred.mean() - before).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_sigma() {
        let g = Grid::new(32, 32, 0.0);
        assert!(gaussian_blur(&g, 0.0, BorderMode::Reflect).is_err());
        assert!(gaussian_blur(&g, f64::NAN, BorderMode::Reflect).is_err());
    }
}
