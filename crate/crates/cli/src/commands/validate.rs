use std::path::Path;

use anyhow::{anyhow, Context};

use lunarad_core::dataset::{
    read_container_bytes, read_terrain_container_bytes, validate_sample, MAGIC, TERRAIN_MAGIC,
};
use lunarad_core::model_math::vectors::{self, VectorFile};

use crate::exit::{validation_error, CliResult, IntoCliResult};
use crate::ValidateArgs;

fn check_one(path: &Path) -> CliResult {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .or_io()?;

    if bytes.len() >= 4 && bytes[..4] == MAGIC {
        let samples = read_container_bytes(&bytes)
            .with_context(|| format!("{}", path.display()))
            .or_validation()?;
        let mut violations = Vec::new();
        for (idx, sample) in samples.iter().enumerate() {
            for v in validate_sample(sample) {
                violations.push(format!("sample {idx}: {v}"));
            }
        }
        if !violations.is_empty() {
            return Err(validation_error(anyhow!(
                "{}: {} violation(s):\n{}",
                path.display(),
                violations.len(),
                violations.join("\n")
            )));
        }
        println!("{}: OK, {} samples, 0 violations", path.display(), samples.len());
    } else if bytes.len() >= 4 && bytes[..4] == TERRAIN_MAGIC {
        let maps = read_terrain_container_bytes(&bytes)
            .with_context(|| format!("{}", path.display()))
            .or_validation()?;
        println!("{}: OK, {} terrains, 0 violations", path.display(), maps.len());
    } else if path.extension().is_some_and(|e| e == "json") {
        let file: VectorFile = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing {}", path.display()))
            .or_validation()?;
        let violations = vectors::validate(&file);
        if !violations.is_empty() {
            return Err(validation_error(anyhow!(
                "{}: {} violation(s):\n{}",
                path.display(),
                violations.len(),
                violations.join("\n")
            )));
        }
        println!(
            "{}: OK, {} conformance cases, 0 violations",
            path.display(),
            file.cases.len()
        );
    } else {
        return Err(validation_error(anyhow!(
            "{}: unrecognized artifact (expected a sample container, terrain container, or .json vector file)",
            path.display()
        )));
    }
    Ok(())
}

pub fn run(args: ValidateArgs) -> CliResult {
    let mut failures = 0usize;
    for path in &args.paths {
        if let Err(e) = check_one(path) {
            eprintln!("error: {e}");
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(validation_error(anyhow!(
            "{failures} of {} artifact(s) failed validation",
            args.paths.len()
        )));
    }
    Ok(())
}
