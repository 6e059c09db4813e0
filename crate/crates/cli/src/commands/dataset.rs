use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::Serialize;

use lunarad_core::dataset::{
    assemble_sample, validate_sample, write_container, AssembleConfig, DatasetSample,
};
use lunarad_core::png_export::{write_binary_png, write_heightmap_png, write_unit_interval_png};
use lunarad_core::propagation::{render_radio_map, Transmitter};
use lunarad_core::surface::{extract_k2, metric_from_heightmap};
use lunarad_core::terrain::{generate_terrain, HeightMap};

use crate::commands::place_transmitter;
use crate::config::{load_config, write_config_echo, PipelineConfig};
use crate::exit::{validation_error, CliResult, IntoCliResult};
use crate::{resolve_out, DatasetArgs};

#[derive(Serialize)]
struct SplitManifest {
    fractions: [f64; 3],
    train: Vec<u64>,
    val: Vec<u64>,
    test: Vec<u64>,
}

/// Partitions terrain seeds (not samples) so no terrain leaks across splits.
fn split_seeds(seeds: &[u64], fractions: [f64; 3]) -> SplitManifest {
    let n = seeds.len();
    let n_train = (fractions[0] * n as f64).floor() as usize;
    let n_val = (fractions[1] * n as f64).floor() as usize;
    SplitManifest {
        fractions,
        train: seeds[..n_train].to_vec(),
        val: seeds[n_train..n_train + n_val].to_vec(),
        test: seeds[n_train + n_val..].to_vec(),
    }
}

fn build_sample(
    map: &HeightMap,
    tx: &Transmitter,
    config: &PipelineConfig,
) -> lunarad_core::Result<DatasetSample> {
    let rendered = render_radio_map(
        map,
        tx,
        &config.propagation.regolith,
        &config.propagation.render,
    )?;
    let metric = metric_from_heightmap(map);
    let k2 = extract_k2(&rendered, &metric, config.k2.epsilon_floor)?;
    assemble_sample(
        map,
        tx,
        &rendered,
        &k2,
        &AssembleConfig {
            highpass_sigma_m: config.dataset.highpass_sigma_m,
            rx_height_m: config.propagation.render.rx_height_m,
            strict_bands: config.dataset.strict_bands,
        },
    )
}

pub fn run(args: DatasetArgs) -> CliResult {
    let config = load_config(&args.config)?;
    let seeds = config.terrain_seeds();

    let maps: Vec<HeightMap> = seeds
        .par_iter()
        .map(|&seed| generate_terrain(&config.terrain, seed))
        .collect::<Result<_, _>>()
        .or_config()?;

    // One job per terrain x transmitter x frequency, in that nesting order.
    let jobs: Vec<(usize, Transmitter)> = maps
        .iter()
        .enumerate()
        .flat_map(|(mi, map)| {
            let config = &config;
            (0..config.dataset.tx_per_terrain).flat_map(move |k| {
                config
                    .propagation
                    .frequencies_hz
                    .iter()
                    .map(move |&f| (mi, place_transmitter(map, k, f, config)))
            })
        })
        .collect();

    let samples: Vec<DatasetSample> = jobs
        .par_iter()
        .map(|(mi, tx)| build_sample(&maps[*mi], tx, &config))
        .collect::<Result<_, _>>()
        .or_config()?;

    for (idx, sample) in samples.iter().enumerate() {
        let violations = validate_sample(sample);
        if !violations.is_empty() {
            return Err(validation_error(anyhow!(
                "sample {idx} failed validation: {}",
                violations.join("; ")
            )));
        }
    }

    let out = resolve_out(&args.out)?;
    write_container(&samples, &out).or_io()?;
    write_config_echo(&config, &out)?;

    let manifest = split_seeds(&seeds, config.dataset.split_fractions);
    let mut splits_path = out.as_os_str().to_owned();
    splits_path.push(".splits.json");
    std::fs::write(
        std::path::PathBuf::from(splits_path),
        serde_json::to_string_pretty(&manifest).or_config()?,
    )
    .or_io()?;

    if let Some(png_dir) = &args.png {
        let png_dir = resolve_out(png_dir)?;
        std::fs::create_dir_all(&png_dir).or_io()?;
        for (map, sample) in maps.iter().flat_map(|m| {
            samples
                .iter()
                .filter(move |s| s.meta.terrain_seed == m.seed())
                .map(move |s| (m, s))
        }) {
            let stem = format!(
                "seed{:04}_tx{}x{}_{}mhz",
                sample.meta.terrain_seed,
                sample.meta.tx_row,
                sample.meta.tx_col,
                (sample.meta.frequency_hz / 1e6).round() as u64
            );
            write_heightmap_png(map, png_dir.join(format!("{stem}_hm.png")))
                .context("heightmap png")
                .or_io()?;
            write_unit_interval_png(&sample.i_rm, png_dir.join(format!("{stem}_rm.png")))
                .context("radio map png")
                .or_io()?;
            write_binary_png(&sample.i_km, png_dir.join(format!("{stem}_km.png")))
                .context("wave-number png")
                .or_io()?;
        }
    }

    println!(
        "wrote {} samples ({} terrains x {} tx x {} frequencies) to {}",
        samples.len(),
        seeds.len(),
        config.dataset.tx_per_terrain,
        config.propagation.frequencies_hz.len(),
        out.display()
    );
    Ok(())
}
