use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Deserialize;

use lunarad_core::dataset::{
    assemble_sample, fill_gaps_bilinear, fill_gaps_static, merge_reseeded, write_container,
    AssembleConfig, DatasetSample, MaskedGrid, SampleProvenance,
};
use lunarad_core::grid::{ByteGrid, Grid};
use lunarad_core::propagation::{RadioMap, Transmitter, BAND_LOW_HZ};
use lunarad_core::surface::{extract_k2, metric_from_heightmap};
use lunarad_core::terrain::{generate_terrain, HeightMap};

use crate::config::{load_config, write_config_echo, PipelineConfig};
use crate::exit::{config_error, io_error, validation_error, CliResult, IntoCliResult};
use crate::{resolve_out, FillMethod, IngestArgs};

/// Null marker in the raw payload: either an exact value or "nan".
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NullSentinel {
    Number(f64),
    Text(String),
}

/// Describes one externally rendered map instance. The payload referenced
/// by `data` (default: the sidecar path with extension `.f32`) holds
/// rows x cols little-endian float32 dB gains, row-major.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    rows: usize,
    cols: usize,
    frequency_hz: f64,
    null_sentinel: NullSentinel,
    terrain_seed: u64,
    tx_row: usize,
    tx_col: usize,
    #[serde(default)]
    tx_height_m: Option<f64>,
    #[serde(default)]
    tx_power_dbm: Option<f64>,
    #[serde(default)]
    data: Option<PathBuf>,
}

fn load_instance(sidecar_path: &Path) -> CliResult<(Sidecar, MaskedGrid)> {
    let text = std::fs::read_to_string(sidecar_path)
        .with_context(|| format!("reading sidecar {}", sidecar_path.display()))
        .or_io()?;
    let sidecar: Sidecar = serde_json::from_str(&text)
        .with_context(|| format!("parsing sidecar {}", sidecar_path.display()))
        .or_config()?;
    if let NullSentinel::Text(t) = &sidecar.null_sentinel {
        if t != "nan" {
            return Err(config_error(anyhow!(
                "{}: null_sentinel must be a number or \"nan\", found {t:?}",
                sidecar_path.display()
            )));
        }
    }

    let data_path = match &sidecar.data {
        Some(rel) => sidecar_path.parent().unwrap_or(Path::new(".")).join(rel),
        None => sidecar_path.with_extension("f32"),
    };
    let raw = std::fs::read(&data_path)
        .with_context(|| format!("reading raw map {}", data_path.display()))
        .or_io()?;
    let expected = sidecar.rows * sidecar.cols * 4;
    if raw.len() != expected {
        return Err(config_error(anyhow!(
            "{}: expected {expected} bytes for {}x{} float32, found {}",
            data_path.display(),
            sidecar.rows,
            sidecar.cols,
            raw.len()
        )));
    }

    let mut values = Grid::new(sidecar.rows, sidecar.cols, 0.0);
    let mut valid = ByteGrid::new(sidecar.rows, sidecar.cols, 0);
    for (idx, bytes) in raw.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(bytes.try_into().unwrap()) as f64;
        let is_null = match &sidecar.null_sentinel {
            NullSentinel::Number(s) => v == *s || v.is_nan(),
            NullSentinel::Text(_) => v.is_nan(),
        };
        let (i, j) = (idx / sidecar.cols, idx % sidecar.cols);
        if !is_null {
            values[(i, j)] = v;
            valid[(i, j)] = 1;
        }
    }
    let grid = MaskedGrid::new(values, valid).or_config()?;
    Ok((sidecar, grid))
}

fn scene_key(s: &Sidecar) -> (u64, usize, usize, u64) {
    (s.terrain_seed, s.tx_row, s.tx_col, s.frequency_hz.to_bits())
}

fn repair_scene(
    sidecar: &Sidecar,
    instances: &[MaskedGrid],
    fill: FillMethod,
    config: &PipelineConfig,
) -> CliResult<(Grid, String)> {
    let merged = merge_reseeded(instances).or_config()?;
    let mut method_parts = Vec::new();
    if instances.len() > 1 {
        method_parts.push(format!("merge({})", instances.len()));
    }
    let repaired = if merged.is_fully_valid() {
        merged.values.clone()
    } else {
        let use_bilinear = match fill {
            FillMethod::Bilinear => true,
            FillMethod::Static => false,
            FillMethod::Auto => sidecar.frequency_hz == BAND_LOW_HZ,
        };
        if use_bilinear {
            method_parts.push("bilinear".to_string());
            fill_gaps_bilinear(&merged).or_validation()?
        } else {
            method_parts.push("static".to_string());
            fill_gaps_static(&merged, config.propagation.render.clip_range_db.0)
        }
    };
    let method = if method_parts.is_empty() {
        "noop".to_string()
    } else {
        method_parts.join("+")
    };
    Ok((repaired, method))
}

fn assemble_ingested(
    map: &HeightMap,
    sidecar: &Sidecar,
    repaired_db: Grid,
    method: String,
    config: &PipelineConfig,
) -> CliResult<DatasetSample> {
    let (lo, hi) = config.propagation.render.clip_range_db;
    let gain_db = repaired_db.map(|v| v.clamp(lo, hi));
    let normalized = gain_db.map(|v| (v - lo) / (hi - lo));
    let tx = Transmitter {
        grid_i: sidecar.tx_row,
        grid_j: sidecar.tx_col,
        height_above_ground: sidecar.tx_height_m.unwrap_or(config.propagation.tx_height_m),
        power_dbm: sidecar.tx_power_dbm.unwrap_or(config.propagation.tx_power_dbm),
        frequency_hz: sidecar.frequency_hz,
    };
    tx.validate_for(map).or_config()?;
    let rendered = RadioMap {
        gain_db,
        normalized,
        frequency_hz: sidecar.frequency_hz,
        tx: tx.clone(),
        clip_range_db: (lo, hi),
    };
    // The wave-number label is extracted from the repaired map, never from
    // the gappy raw payload.
    let metric = metric_from_heightmap(map);
    let k2 = extract_k2(&rendered, &metric, config.k2.epsilon_floor).or_config()?;
    let mut sample = assemble_sample(
        map,
        &tx,
        &rendered,
        &k2,
        &AssembleConfig {
            highpass_sigma_m: config.dataset.highpass_sigma_m,
            rx_height_m: config.propagation.render.rx_height_m,
            strict_bands: config.dataset.strict_bands,
        },
    )
    .or_config()?;
    sample.meta.provenance = SampleProvenance::Ingested;
    sample.meta.repair_method = Some(method);
    Ok(sample)
}

pub fn run(args: IngestArgs) -> CliResult {
    let config = load_config(&args.config)?;

    let mut scenes: BTreeMap<(u64, usize, usize, u64), (Sidecar, Vec<MaskedGrid>)> =
        BTreeMap::new();
    for path in &args.sidecars {
        let (sidecar, grid) = load_instance(path)?;
        let entry = scenes
            .entry(scene_key(&sidecar))
            .or_insert_with(|| (sidecar.clone(), Vec::new()));
        if (entry.0.rows, entry.0.cols) != (sidecar.rows, sidecar.cols) {
            return Err(config_error(anyhow!(
                "{}: instance dimensions {}x{} disagree with earlier instances of the same scene",
                path.display(),
                sidecar.rows,
                sidecar.cols
            )));
        }
        entry.1.push(grid);
    }

    let mut terrains: BTreeMap<u64, HeightMap> = BTreeMap::new();
    let mut samples = Vec::new();
    for (sidecar, instances) in scenes.values() {
        let map = match terrains.get(&sidecar.terrain_seed) {
            Some(map) => map,
            None => {
                let map =
                    generate_terrain(&config.terrain, sidecar.terrain_seed).or_config()?;
                terrains.entry(sidecar.terrain_seed).or_insert(map)
            }
        };
        if map.size() != sidecar.rows || map.size() != sidecar.cols {
            return Err(config_error(anyhow!(
                "scene seed={} is {}x{}, but the configured terrain grid is {}x{}",
                sidecar.terrain_seed,
                sidecar.rows,
                sidecar.cols,
                map.size(),
                map.size()
            )));
        }
        let (repaired, method) = repair_scene(sidecar, instances, args.fill, &config)?;
        println!(
            "scene seed={} tx=({}, {}) {:.0} MHz: {} instance(s), repair={}",
            sidecar.terrain_seed,
            sidecar.tx_row,
            sidecar.tx_col,
            sidecar.frequency_hz / 1e6,
            instances.len(),
            method
        );
        samples.push(assemble_ingested(map, sidecar, repaired, method, &config)?);
    }

    let out = resolve_out(&args.out)?;
    write_container(&samples, &out)
        .map_err(|e| match e {
            lunarad_core::Error::Io(io) => io_error(io),
            other => validation_error(other),
        })?;
    write_config_echo(&config, &out)?;
    println!("wrote {} ingested samples to {}", samples.len(), out.display());
    Ok(())
}
