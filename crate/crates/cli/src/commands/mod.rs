pub mod dataset;
pub mod eval;
pub mod ingest;
pub mod terrain;
pub mod validate;
pub mod vectors;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use lunarad_core::propagation::Transmitter;
use lunarad_core::terrain::HeightMap;

use crate::config::{PipelineConfig, TxPlacement};

/// Deterministic transmitter placement for transmitter `k` on a terrain.
/// The stream is keyed on (terrain seed, k) only, so reruns and partial
/// regenerations agree.
pub fn place_transmitter(
    map: &HeightMap,
    k: usize,
    frequency_hz: f64,
    config: &PipelineConfig,
) -> Transmitter {
    use rand::SeedableRng;
    let key = map
        .seed()
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(k as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let n = map.size();
    let (grid_i, grid_j) = match config.dataset.tx_placement {
        TxPlacement::Uniform => (rng.gen_range(0..n), rng.gen_range(0..n)),
        TxPlacement::Ridge => {
            let h = map.elevations();
            let mut sorted: Vec<f64> = h.iter().copied().collect();
            sorted.sort_unstable_by(f64::total_cmp);
            let threshold = sorted[(sorted.len() * 9) / 10];
            let candidates: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| h[(i, j)] >= threshold)
                .collect();
            candidates[rng.gen_range(0..candidates.len())]
        }
    };
    Transmitter {
        grid_i,
        grid_j,
        height_above_ground: config.propagation.tx_height_m,
        power_dbm: config.propagation.tx_power_dbm,
        frequency_hz,
    }
}
