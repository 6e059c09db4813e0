//! Coherent two-ray ground reflection.

use super::profile::TerrainProfile;
use super::{RegolithParams, SPEED_OF_LIGHT};
use num_complex::Complex64;

const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;

/// Fresnel reflection coefficient for horizontal polarization at grazing
/// angle `theta` against a half-space of complex relative permittivity
/// `eps_c`: (sin t - sqrt(eps_c - cos^2 t)) / (sin t + sqrt(eps_c - cos^2 t)).
pub fn fresnel_gamma_h(grazing_angle_rad: f64, eps_c: Complex64) -> Complex64 {
    let s = grazing_angle_rad.sin();
    let c = grazing_angle_rad.cos();
    let root = (eps_c - Complex64::new(c * c, 0.0)).sqrt();
    (Complex64::new(s, 0.0) - root) / (Complex64::new(s, 0.0) + root)
}

/// dB adjustment from adding the ground-reflected ray to the direct ray.
///
/// The reflection geometry is taken in the chord frame: antennas sit at
/// heights h1, h2 above the straight line joining the terrain endpoints, and
/// the specular point follows from the image construction on that chord.
/// Returns 0 when the geometry admits no specular point (zero-length path).
/// The interference magnitude is floored before the log, so the return value
/// is always finite; deep nulls are expected to clip downstream.
pub fn two_ray_gain(profile: &TerrainProfile, regolith: &RegolithParams, frequency_hz: f64) -> f64 {
    let total = profile.horizontal_distance_m();
    if profile.len() < 2 || total <= 0.0 {
        return 0.0;
    }
    let g0 = profile.elevations_m[0];
    let g1 = *profile.elevations_m.last().unwrap();
    let h1 = profile.tx_z_m - g0;
    let h2 = profile.rx_z_m - g1;
    if h1 + h2 <= 0.0 {
        return 0.0;
    }
    let specular = total * h1 / (h1 + h2);
    if !(0.0 < specular && specular < total) {
        return 0.0;
    }

    let wavelength = SPEED_OF_LIGHT / frequency_hz;
    let d_direct = (total * total + (h2 - h1) * (h2 - h1)).sqrt();
    let d_reflect = (total * total + (h1 + h2) * (h1 + h2)).sqrt();
    let delta_phase = 2.0 * std::f64::consts::PI * (d_reflect - d_direct) / wavelength;

    let grazing = (h1 + h2).atan2(total);
    let eps_c = Complex64::new(
        regolith.rel_permittivity,
        -regolith.conductivity / (2.0 * std::f64::consts::PI * frequency_hz * VACUUM_PERMITTIVITY),
    );
    let gamma = fresnel_gamma_h(grazing, eps_c);

    let amplitude_ratio = d_direct / d_reflect;
    let field = Complex64::new(1.0, 0.0)
        + gamma * Complex64::from_polar(amplitude_ratio, -delta_phase);
    20.0 * field.norm().max(1e-15).log10()
}
