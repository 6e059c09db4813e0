//! Terrain profile extraction along the transmitter-receiver segment.

use super::Transmitter;
use crate::terrain::HeightMap;

/// Terrain samples along the straight chart segment between the transmitter
/// and a receiver pixel, with the vertical gap between the direct ray and
/// the ground at every sample.
#[derive(Debug, Clone)]
pub struct TerrainProfile {
    /// Horizontal chart distance from the transmitter, meters. Ascending,
    /// first entry 0, last entry the full horizontal separation.
    pub distances_m: Vec<f64>,
    /// Interpolated terrain elevation at each sample.
    pub elevations_m: Vec<f64>,
    /// Ray height minus terrain elevation: positive means the ray clears the
    /// ground at that sample.
    pub clearances_m: Vec<f64>,
    /// Absolute antenna elevations (terrain plus antenna height).
    pub tx_z_m: f64,
    pub rx_z_m: f64,
}

impl TerrainProfile {
    pub fn horizontal_distance_m(&self) -> f64 {
        *self.distances_m.last().unwrap_or(&0.0)
    }

    /// Straight-line 3D distance between the antennas.
    pub fn direct_distance_m(&self) -> f64 {
        let dh = self.horizontal_distance_m();
        let dz = self.rx_z_m - self.tx_z_m;
        (dh * dh + dz * dz).sqrt()
    }

    /// Minimum clearance over samples strictly between the endpoints. A
    /// profile with no interior samples is trivially clear.
    pub fn min_interior_clearance_m(&self) -> f64 {
        let n = self.clearances_m.len();
        if n <= 2 {
            return f64::INFINITY;
        }
        self.clearances_m[1..n - 1]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_line_of_sight(&self) -> bool {
        self.min_interior_clearance_m() > 0.0
    }

    pub fn len(&self) -> usize {
        self.distances_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances_m.is_empty()
    }
}

/// Samples the terrain between the transmitter and receiver pixels at a
/// spacing of at most half a cell, using bilinear elevation interpolation.
/// A zero-length path yields a single-sample profile.
pub fn terrain_profile(
    map: &HeightMap,
    tx: &Transmitter,
    rx_i: usize,
    rx_j: usize,
    rx_height_m: f64,
) -> TerrainProfile {
    let cell = map.cell_size_m();
    let tx_x = tx.grid_j as f64 * cell;
    let tx_y = tx.grid_i as f64 * cell;
    let rx_x = rx_j as f64 * cell;
    let rx_y = rx_i as f64 * cell;

    let tx_z = map.elevation_at(tx_x, tx_y) + tx.height_above_ground;
    let rx_z = map.elevation_at(rx_x, rx_y) + rx_height_m;

    let horizontal = ((rx_x - tx_x).powi(2) + (rx_y - tx_y).powi(2)).sqrt();
    if horizontal == 0.0 {
        let ground = map.elevation_at(tx_x, tx_y);
        return TerrainProfile {
            distances_m: vec![0.0],
            elevations_m: vec![ground],
            clearances_m: vec![tx_z - ground],
            tx_z_m: tx_z,
            rx_z_m: rx_z,
        };
    }

    let segments = (horizontal / (0.5 * cell)).ceil() as usize;
    let count = segments.max(1) + 1;
    let mut distances_m = Vec::with_capacity(count);
    let mut elevations_m = Vec::with_capacity(count);
    let mut clearances_m = Vec::with_capacity(count);

    for k in 0..count {
        let t = k as f64 / (count - 1) as f64;
        let x = tx_x + t * (rx_x - tx_x);
        let y = tx_y + t * (rx_y - tx_y);
        let ground = map.elevation_at(x, y);
        let ray_z = tx_z + t * (rx_z - tx_z);
        distances_m.push(t * horizontal);
        elevations_m.push(ground);
        clearances_m.push(ray_z - ground);
    }

    TerrainProfile {
        distances_m,
        elevations_m,
        clearances_m,
        tx_z_m: tx_z,
        rx_z_m: rx_z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn tx_at(i: usize, j: usize) -> Transmitter {
        Transmitter {
            grid_i: i,
            grid_j: j,
            height_above_ground: 2.0,
            power_dbm: 30.0,
            frequency_hz: 415.0e6,
        }
    }

    #[test]
    fn flat_terrain_clearances_interpolate_antenna_heights() {
        let map = HeightMap::flat(64, 2.0, 0).unwrap();
        let tx = tx_at(10, 10);
        let p = terrain_profile(&map, &tx, 10, 50, 1.0);
        assert_eq!(p.clearances_m.first().copied().unwrap(), 2.0);
        assert!((p.clearances_m.last().copied().unwrap() - 1.0).abs() < 1e-12);
        // The ray between a 2 m and a 1 m antenna over a plane stays in
        // [1, 2] and the minimum sits at the lower endpoint.
        for &c in &p.clearances_m {
            assert!((1.0 - 1e-12..=2.0 + 1e-12).contains(&c));
        }
        assert!(p.is_line_of_sight());
    }

    #[test]
    fn sample_spacing_is_at_most_half_a_cell() {
        let map = HeightMap::flat(64, 2.0, 0).unwrap();
        let tx = tx_at(3, 5);
        let p = terrain_profile(&map, &tx, 41, 29, 1.0);
        for w in p.distances_m.windows(2) {
            assert!(w[1] - w[0] <= 0.5 * map.cell_size_m() + 1e-12);
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn hill_between_endpoints_obstructs() {
        let n = 64;
        let mut g = Grid::new(n, n, 0.0);
        // Triangular ridge across column 32, 10 m tall: above both antennas.
        for i in 0..n {
            g[(i, 31)] = 5.0;
            g[(i, 32)] = 10.0;
            g[(i, 33)] = 5.0;
        }
        let map = HeightMap::new(g, 2.0, 0).unwrap();
        let tx = tx_at(20, 8);
        let p = terrain_profile(&map, &tx, 20, 56, 1.0);
        assert!(p.min_interior_clearance_m() < 0.0);
        assert!(!p.is_line_of_sight());
    }

    #[test]
    fn profile_is_reciprocal() {
        let g = Grid::from_fn(64, 64, |i, j| ((i * 13 + j * 29) % 31) as f64 * 0.4);
        let map = HeightMap::new(g, 2.0, 0).unwrap();
        let a = tx_at(5, 9);
        let forward = terrain_profile(&map, &a, 50, 60, 2.0);
        // Swap roles with matched antenna heights.
        let b = tx_at(50, 60);
        let backward = terrain_profile(&map, &b, 5, 9, 2.0);

        assert_eq!(forward.len(), backward.len());
        let total = forward.horizontal_distance_m();
        for k in 0..forward.len() {
            let rk = backward.len() - 1 - k;
            assert!((forward.distances_m[k] - (total - backward.distances_m[rk])).abs() < 1e-9);
            assert!((forward.elevations_m[k] - backward.elevations_m[rk]).abs() < 1e-9);
            assert!((forward.clearances_m[k] - backward.clearances_m[rk]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_length_path_gives_single_sample() {
        let map = HeightMap::flat(64, 2.0, 0).unwrap();
        let tx = tx_at(12, 12);
        let p = terrain_profile(&map, &tx, 12, 12, 1.0);
        assert_eq!(p.len(), 1);
        assert!(p.is_line_of_sight());
        assert!((p.direct_distance_m() - 1.0).abs() < 1e-12);
    }
}
