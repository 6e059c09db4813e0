//! Free-space loss and multi-knife-edge diffraction.

use super::profile::TerrainProfile;
use super::{MAX_DEYGOUT_EDGES, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Friis free-space path loss in dB: 20 log10(4 pi d / lambda).
pub fn free_space_path_loss(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(Error::invalid(format!(
            "distance {distance_m} m must be positive"
        )));
    }
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(Error::invalid(format!(
            "frequency {frequency_hz} Hz must be positive"
        )));
    }
    let wavelength = SPEED_OF_LIGHT / frequency_hz;
    Ok(20.0 * (4.0 * std::f64::consts::PI * distance_m / wavelength).log10())
}

/// Single knife-edge diffraction loss in dB as a function of the Fresnel
/// parameter: 0 below nu = -0.78, else 6.9 + 20 log10(sqrt((nu-0.1)^2+1)
/// + nu - 0.1).
pub fn knife_edge_loss(nu: f64) -> f64 {
    if nu <= -0.78 {
        return 0.0;
    }
    let t = nu - 0.1;
    6.9 + 20.0 * ((t * t + 1.0).sqrt() + t).log10()
}

/// Fresnel parameter of an obstruction `h` meters above the ray, `d1`/`d2`
/// meters from the terminals along the path.
fn fresnel_nu(h: f64, d1: f64, d2: f64, wavelength: f64) -> f64 {
    h * (2.0 * (d1 + d2) / (wavelength * d1 * d2)).sqrt()
}

/// Total diffraction loss of a profile by the Deygout construction.
///
/// The dominant edge is the interior sample maximizing the Fresnel
/// parameter; the path is then split at that edge and each side searched
/// recursively, up to `MAX_DEYGOUT_EDGES` counted edges. Only edges with a
/// strictly positive Fresnel parameter contribute. Because nu scales every
/// candidate by the common factor sqrt(2/lambda), the selected edge set is
/// identical at every frequency, which makes the per-pixel loss monotone in
/// frequency.
pub fn deygout_loss(profile: &TerrainProfile, wavelength: f64) -> f64 {
    if profile.len() < 3 {
        return 0.0;
    }
    let last = profile.len() - 1;
    let tx = (profile.distances_m[0], profile.tx_z_m);
    let rx = (profile.distances_m[last], profile.rx_z_m);
    edge_loss(profile, 0, last, tx, rx, wavelength, MAX_DEYGOUT_EDGES)
}

fn edge_loss(
    profile: &TerrainProfile,
    lo: usize,
    hi: usize,
    a: (f64, f64),
    b: (f64, f64),
    wavelength: f64,
    budget: u32,
) -> f64 {
    if budget == 0 || hi - lo < 2 {
        return 0.0;
    }
    let (da, za) = a;
    let (db, zb) = b;
    let span = db - da;
    if span <= 0.0 {
        return 0.0;
    }

    let mut best_k = 0;
    let mut best_nu = f64::NEG_INFINITY;
    for k in lo + 1..hi {
        let d1 = profile.distances_m[k] - da;
        let d2 = db - profile.distances_m[k];
        if d1 <= 0.0 || d2 <= 0.0 {
            continue;
        }
        let ray_z = za + (d1 / span) * (zb - za);
        let h = profile.elevations_m[k] - ray_z;
        let nu = fresnel_nu(h, d1, d2, wavelength);
        if nu > best_nu {
            best_nu = nu;
            best_k = k;
        }
    }
    if best_nu <= 0.0 {
        return 0.0;
    }

    let apex = (profile.distances_m[best_k], profile.elevations_m[best_k]);
    knife_edge_loss(best_nu)
        + edge_loss(profile, lo, best_k, a, apex, wavelength, budget - 1)
        + edge_loss(profile, best_k, hi, apex, b, wavelength, budget - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{terrain_profile, Transmitter};
    use crate::terrain::HeightMap;
    use crate::grid::Grid;

    #[test]
    fn unit_log_argument_gives_zero_loss() {
        let f = 1.0e9;
        let wavelength = SPEED_OF_LIGHT / f;
        let d = wavelength / (4.0 * std::f64::consts::PI);
        assert!(free_space_path_loss(d, f).unwrap().abs() < 1e-12);
    }

    /// Closed-form checks evaluated independently:
    /// 20 log10(4 pi 1000 / 0.722392...) = 84.8088 dB and
    /// 20 log10(4 pi 100 / 0.0516884...) = 87.7168 dB.
    #[test]
    fn friis_reference_points() {
        let low = free_space_path_loss(1000.0, 415.0e6).unwrap();
        assert!((low - 84.81).abs() < 0.01, "415 MHz @ 1 km: {low}");
        let high = free_space_path_loss(100.0, 5.8e9).unwrap();
        assert!((high - 87.72).abs() < 0.01, "5.8 GHz @ 100 m: {high}");
    }

    #[test]
    fn fspl_rejects_degenerate_inputs() {
        assert!(free_space_path_loss(0.0, 1e9).is_err());
        assert!(free_space_path_loss(-5.0, 1e9).is_err());
        assert!(free_space_path_loss(10.0, 0.0).is_err());
        assert!(free_space_path_loss(f64::NAN, 1e9).is_err());
    }

    #[test]
    fn knife_edge_below_threshold_is_lossless() {
        assert_eq!(knife_edge_loss(-2.0), 0.0);
        assert_eq!(knife_edge_loss(-0.781), 0.0);
    }

    #[test]
    fn knife_edge_at_grazing_is_about_six_db() {
        // 6.9 + 20 log10(sqrt(1.01) - 0.1) = 6.0328...
        let loss = knife_edge_loss(0.0);
        assert!((loss - 6.03).abs() < 0.01, "J(0) = {loss}");
    }

    #[test]
    fn knife_edge_is_monotone_nondecreasing() {
        let mut prev = knife_edge_loss(-0.78);
        for k in 1..=10_000 {
            let nu = -0.78 + 10.78 * k as f64 / 10_000.0;
            let loss = knife_edge_loss(nu);
            assert!(
                loss >= prev,
                "loss decreased at nu = {nu}: {loss} < {prev}"
            );
            prev = loss;
        }
    }

    fn ridge_map(height: f64) -> HeightMap {
        let n = 64;
        let mut g = Grid::new(n, n, 0.0);
        for i in 0..n {
            g[(i, 32)] = height;
        }
        HeightMap::new(g, 2.0, 0).unwrap()
    }

    fn tx() -> Transmitter {
        Transmitter {
            grid_i: 32,
            grid_j: 4,
            height_above_ground: 2.0,
            power_dbm: 30.0,
            frequency_hz: 415.0e6,
        }
    }

    #[test]
    fn clear_flat_path_has_no_diffraction_loss() {
        let map = HeightMap::flat(64, 2.0, 0).unwrap();
        let p = terrain_profile(&map, &tx(), 32, 60, 1.0);
        assert_eq!(deygout_loss(&p, 0.72), 0.0);
    }

    #[test]
    fn taller_ridge_loses_more() {
        let wavelength = SPEED_OF_LIGHT / 415.0e6;
        let mut prev = -1.0;
        for height in [4.0, 8.0, 16.0, 32.0] {
            let map = ridge_map(height);
            let p = terrain_profile(&map, &tx(), 32, 60, 1.0);
            assert!(!p.is_line_of_sight());
            let loss = deygout_loss(&p, wavelength);
            assert!(loss > prev, "loss {loss} not above {prev} at {height} m");
            prev = loss;
        }
    }

    #[test]
    fn obstructed_loss_grows_with_frequency() {
        let map = ridge_map(10.0);
        let p = terrain_profile(&map, &tx(), 32, 60, 1.0);
        let low = deygout_loss(&p, SPEED_OF_LIGHT / 415.0e6);
        let high = deygout_loss(&p, SPEED_OF_LIGHT / 5.8e9);
        assert!(low > 0.0);
        assert!(high > low);
    }

    /// The knife-edge sum must never be negative and a single edge must
    /// reproduce knife_edge_loss directly.
    #[test]
    fn single_edge_matches_direct_formula() {
        let map = ridge_map(12.0);
        let t = tx();
        let p = terrain_profile(&map, &t, 32, 60, 1.0);
        let wavelength = SPEED_OF_LIGHT / 415.0e6;

        // Independent evaluation: apex at column 32, h above the straight
        // ray between the antennas.
        let d1 = (32 - 4) as f64 * 2.0;
        let d2 = (60 - 32) as f64 * 2.0;
        let ray_z = 2.0 + (d1 / (d1 + d2)) * (1.0 - 2.0);
        let h = 12.0 - ray_z;
        let nu = h * (2.0 * (d1 + d2) / (wavelength * d1 * d2)).sqrt();
        let expected = knife_edge_loss(nu);

        let got = deygout_loss(&p, wavelength);
        // Sub-edges on either side of a single ridge have negative nu and
        // contribute nothing, so the totals agree.
        assert!(
            (got - expected).abs() < 1e-9,
            "deygout {got} vs single edge {expected}"
        );
    }
}
