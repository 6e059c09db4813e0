use std::path::Path;

use anyhow::{anyhow, Context};

use lunarad_core::dataset::{read_container, DatasetSample};
use lunarad_core::metrics::{evaluate_dataset, EvalOptions};
use lunarad_core::propagation::BAND_LOW_HZ;

use crate::exit::{io_error, validation_error, CliError, CliResult, IntoCliResult};
use crate::{resolve_out, BandFilter, EvalArgs};

fn read_samples(path: &Path) -> Result<Vec<DatasetSample>, CliError> {
    read_container(path).map_err(|e| match e {
        lunarad_core::Error::Io(io) => {
            io_error(anyhow::Error::new(io).context(format!("reading {}", path.display())))
        }
        other => validation_error(
            anyhow::Error::new(other).context(format!("reading {}", path.display())),
        ),
    })
}

pub fn run(args: EvalArgs) -> CliResult {
    let predictions = read_samples(&args.predictions)?;
    let references = read_samples(&args.references)?;
    if predictions.len() != references.len() {
        return Err(validation_error(anyhow!(
            "prediction container holds {} samples, reference container holds {}",
            predictions.len(),
            references.len()
        )));
    }

    let (predictions, references): (Vec<_>, Vec<_>) = predictions
        .into_iter()
        .zip(references)
        .filter(|(_, r)| match args.band {
            BandFilter::All => true,
            BandFilter::Low => r.meta.frequency_hz == BAND_LOW_HZ,
            BandFilter::High => r.meta.frequency_hz != BAND_LOW_HZ,
        })
        .unzip();

    let options = EvalOptions {
        pooled_pixels: args.pooled,
        ..EvalOptions::default()
    };
    let report = evaluate_dataset(&predictions, &references, &options).or_validation()?;

    if let Some(path) = &args.out_json {
        let path = resolve_out(path)?;
        std::fs::write(&path, report.to_json().or_validation()?)
            .with_context(|| format!("writing {}", path.display()))
            .or_io()?;
    }
    let table = report.to_text_table();
    if let Some(path) = &args.out_table {
        let path = resolve_out(path)?;
        std::fs::write(&path, &table)
            .with_context(|| format!("writing {}", path.display()))
            .or_io()?;
    }
    print!("{table}");
    Ok(())
}
