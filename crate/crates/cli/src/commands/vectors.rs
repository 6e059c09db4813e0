use anyhow::{anyhow, Context};

use lunarad_core::model_math::vectors;

use crate::exit::{validation_error, CliResult, IntoCliResult};
use crate::{resolve_out, VectorsArgs};

pub fn run(args: VectorsArgs) -> CliResult {
    let file = vectors::generate(args.seed, args.cases, args.timesteps).or_config()?;
    let violations = vectors::validate(&file);
    if !violations.is_empty() {
        return Err(validation_error(anyhow!(
            "generated vectors failed self-validation:\n{}",
            violations.join("\n")
        )));
    }
    let json = serde_json::to_string_pretty(&file)
        .context("serializing vector file")
        .or_validation()?;
    let out = resolve_out(&args.out)?;
    std::fs::write(&out, json)
        .with_context(|| format!("writing {}", out.display()))
        .or_io()?;
    println!(
        "wrote {} conformance cases (seed {}, {} timesteps) to {}",
        file.cases.len(),
        args.seed,
        args.timesteps,
        out.display()
    );
    Ok(())
}
