use anyhow::Context;
use rayon::prelude::*;

use lunarad_core::dataset::write_terrain_container;
use lunarad_core::png_export::write_heightmap_png;
use lunarad_core::terrain::{generate_terrain, HeightMap};

use crate::config::{load_config, write_config_echo};
use crate::exit::{CliResult, IntoCliResult};
use crate::{resolve_out, TerrainArgs};

pub fn run(args: TerrainArgs) -> CliResult {
    let mut config = load_config(&args.config)?;
    if let Some(count) = args.count {
        config.dataset.n_terrains = count;
        config.dataset.seeds = None;
    }
    if let Some(seeds) = args.seeds.clone() {
        config.dataset.seeds = Some(seeds);
    }
    config.validate().or_config()?;

    let seeds = config.terrain_seeds();
    let maps: Vec<HeightMap> = seeds
        .par_iter()
        .map(|&seed| generate_terrain(&config.terrain, seed))
        .collect::<Result<_, _>>()
        .or_config()?;

    let out = resolve_out(&args.out)?;
    write_terrain_container(&maps, &out).or_io()?;
    write_config_echo(&config, &out)?;

    if let Some(png_dir) = &args.png {
        let png_dir = resolve_out(png_dir)?;
        std::fs::create_dir_all(&png_dir).or_io()?;
        for map in &maps {
            let path = png_dir.join(format!("terrain_{:08}.png", map.seed()));
            write_heightmap_png(map, &path)
                .with_context(|| format!("writing {}", path.display()))
                .or_io()?;
        }
    }

    println!("wrote {} terrains to {}", maps.len(), out.display());
    Ok(())
}
