//! Image-quality metrics for predicted radio maps and their aggregation
//! into a per-band report.
//!
//! All four metrics treat the first argument as ground truth. They are
//! computed on the normalized [0, 1] maps stored in the dataset, and the
//! report header says so.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::dataset::DatasetSample;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model_math::mse_loss;
use crate::propagation::{BAND_HIGH_HZ, BAND_LOW_HZ};

/// Root mean squared pixel error.
pub fn rmse(truth: &Grid, predicted: &Grid) -> Result<f64> {
    Ok(mse_loss(truth, predicted)?.sqrt())
}

/// Squared error energy normalized by the ground-truth energy.
pub fn nmse(truth: &Grid, predicted: &Grid) -> Result<f64> {
    if truth.dims() != predicted.dims() {
        return Err(Error::DimensionMismatch {
            expected: truth.dims(),
            found: predicted.dims(),
        });
    }
    let mut err = 0.0;
    let mut energy = 0.0;
    for (&a, &b) in truth.iter().zip(predicted.iter()) {
        err += (a - b) * (a - b);
        energy += a * a;
    }
    if energy == 0.0 {
        return Err(Error::ZeroEnergyReference);
    }
    Ok(err / energy)
}

/// Peak signal-to-noise ratio in dB. Identical inputs yield the +infinity
/// sentinel rather than an error.
pub fn psnr(truth: &Grid, predicted: &Grid, peak: f64) -> Result<f64> {
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::invalid(format!("psnr peak {peak} must be positive")));
    }
    let mse = mse_loss(truth, predicted)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Parameters of the windowed structural similarity index. The defaults are
/// the widely used 11-tap Gaussian window with sigma 1.5 and stabilizers
/// K1 = 0.01, K2 = 0.03 over a unit dynamic range.
#[derive(Debug, Clone, Serialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::invalid(format!(
                "ssim window {} must be odd and at least 3",
                self.window
            )));
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("k1", self.k1),
            ("k2", self.k2),
            ("dynamic_range", self.dynamic_range),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("ssim {name} {v} must be positive")));
            }
        }
        Ok(())
    }
}

fn gaussian_taps(window: usize, sigma: f64) -> Vec<f64> {
    let half = (window / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= total;
    }
    taps
}

/// Valid-mode separable convolution: rows shrink after the vertical pass,
/// columns after the horizontal pass.
fn convolve_valid(src: &Grid, taps: &[f64]) -> Grid {
    let (rows, cols) = src.dims();
    let w = taps.len();
    let mut horizontal = Grid::new(rows, cols - w + 1, 0.0);
    for i in 0..rows {
        for j in 0..cols - w + 1 {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * src[(i, j + k)];
            }
            horizontal[(i, j)] = acc;
        }
    }
    let mut out = Grid::new(rows - w + 1, cols - w + 1, 0.0);
    for i in 0..rows - w + 1 {
        for j in 0..cols - w + 1 {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * horizontal[(i + k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Mean local structural similarity over all fully interior windows.
pub fn ssim(truth: &Grid, predicted: &Grid, params: &SsimParams) -> Result<f64> {
    params.validate()?;
    if truth.dims() != predicted.dims() {
        return Err(Error::DimensionMismatch {
            expected: truth.dims(),
            found: predicted.dims(),
        });
    }
    let (rows, cols) = truth.dims();
    if rows < params.window || cols < params.window {
        return Err(Error::GridSmallerThanWindow {
            dims: (rows, cols),
            window: params.window,
        });
    }

    let taps = gaussian_taps(params.window, params.sigma);
    let mu_a = convolve_valid(truth, &taps);
    let mu_b = convolve_valid(predicted, &taps);
    let e_aa = convolve_valid(&truth.zip_map(truth, |x, y| x * y), &taps);
    let e_bb = convolve_valid(&predicted.zip_map(predicted, |x, y| x * y), &taps);
    let e_ab = convolve_valid(&truth.zip_map(predicted, |x, y| x * y), &taps);

    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let mut acc = 0.0;
    for idx in 0..mu_a.len() {
        let ma = mu_a.as_slice()[idx];
        let mb = mu_b.as_slice()[idx];
        let va = e_aa.as_slice()[idx] - ma * ma;
        let vb = e_bb.as_slice()[idx] - mb * mb;
        let cov = e_ab.as_slice()[idx] - ma * mb;
        let numerator = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let denominator = (ma * ma + mb * mb + c1) * (va + vb + c2);
        acc += numerator / denominator;
    }
    Ok(acc / mu_a.len() as f64)
}

fn serialize_db<S: Serializer>(value: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if value.is_finite() {
        s.serialize_f64(*value)
    } else if *value == f64::INFINITY {
        s.serialize_str("+inf")
    } else {
        s.serialize_str("nan")
    }
}

/// Aggregated metrics for one frequency band (or for all samples combined).
#[derive(Debug, Clone, Serialize)]
pub struct BandMetrics {
    pub n_samples: usize,
    /// Mean of per-sample RMSE, or RMSE of pooled pixels in pooled mode.
    pub rmse: f64,
    /// Always energy-pooled: total error energy over total truth energy.
    pub nmse: f64,
    /// Mean of per-sample SSIM in both modes.
    pub ssim: f64,
    /// Mean of per-sample PSNR, or PSNR of pooled pixels in pooled mode.
    #[serde(serialize_with = "serialize_db")]
    pub psnr: f64,
    /// Sample-count-weighted mean of per-sample MSE, independent of mode.
    pub mean_mse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    /// What the metrics were computed on.
    pub note: &'static str,
    /// True when RMSE and PSNR pool pixels across samples instead of
    /// averaging per-sample values.
    pub pooled_pixels: bool,
    pub ssim_params: SsimParams,
    pub low_band: Option<BandMetrics>,
    pub high_band: Option<BandMetrics>,
    pub combined: BandMetrics,
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub pooled_pixels: bool,
    pub ssim: SsimParams,
}

#[derive(Clone, Copy)]
struct SampleScore {
    high_band: bool,
    pixels: usize,
    sq_err: f64,
    truth_energy: f64,
    mse: f64,
    ssim: f64,
    psnr: f64,
}

fn score_pair(
    reference: &DatasetSample,
    prediction: &DatasetSample,
    index: usize,
    ssim_params: &SsimParams,
) -> Result<SampleScore> {
    if reference.dims() != prediction.dims() {
        return Err(Error::SampleMismatch(format!(
            "sample {index}: dims {:?} vs {:?}",
            reference.dims(),
            prediction.dims()
        )));
    }
    for (what, a, b) in [
        (
            "frequency",
            reference.meta.frequency_hz,
            prediction.meta.frequency_hz,
        ),
        (
            "terrain seed",
            reference.meta.terrain_seed as f64,
            prediction.meta.terrain_seed as f64,
        ),
        (
            "tx position",
            (reference.meta.tx_row * 1_000_000 + reference.meta.tx_col) as f64,
            (prediction.meta.tx_row * 1_000_000 + prediction.meta.tx_col) as f64,
        ),
    ] {
        if a != b {
            return Err(Error::SampleMismatch(format!(
                "sample {index}: {what} differs between prediction and reference"
            )));
        }
    }
    let high_band = if reference.meta.frequency_hz == BAND_LOW_HZ {
        false
    } else if reference.meta.frequency_hz == BAND_HIGH_HZ {
        true
    } else {
        return Err(Error::FrequencyOutsideBands {
            frequency_hz: reference.meta.frequency_hz,
        });
    };

    let truth = &reference.i_rm;
    let predicted = &prediction.i_rm;
    let mut sq_err = 0.0;
    let mut truth_energy = 0.0;
    for (&a, &b) in truth.iter().zip(predicted.iter()) {
        sq_err += (a - b) * (a - b);
        truth_energy += a * a;
    }
    let pixels = truth.len();
    let mse = sq_err / pixels as f64;
    Ok(SampleScore {
        high_band,
        pixels,
        sq_err,
        truth_energy,
        mse,
        ssim: ssim(truth, predicted, ssim_params)?,
        psnr: if mse == 0.0 {
            f64::INFINITY
        } else {
            -10.0 * mse.log10()
        },
    })
}

fn aggregate(scores: &[SampleScore], pooled_pixels: bool) -> Result<BandMetrics> {
    let n = scores.len();
    let sq_err: f64 = scores.iter().map(|s| s.sq_err).sum();
    let truth_energy: f64 = scores.iter().map(|s| s.truth_energy).sum();
    if truth_energy == 0.0 {
        return Err(Error::ZeroEnergyReference);
    }
    let pixels: usize = scores.iter().map(|s| s.pixels).sum();
    let mean_mse = scores.iter().map(|s| s.mse).sum::<f64>() / n as f64;
    let (rmse, psnr) = if pooled_pixels {
        let pooled_mse = sq_err / pixels as f64;
        let psnr = if pooled_mse == 0.0 {
            f64::INFINITY
        } else {
            -10.0 * pooled_mse.log10()
        };
        (pooled_mse.sqrt(), psnr)
    } else {
        (
            scores.iter().map(|s| s.mse.sqrt()).sum::<f64>() / n as f64,
            scores.iter().map(|s| s.psnr).sum::<f64>() / n as f64,
        )
    };
    Ok(BandMetrics {
        n_samples: n,
        rmse,
        nmse: sq_err / truth_energy,
        ssim: scores.iter().map(|s| s.ssim).sum::<f64>() / n as f64,
        psnr,
        mean_mse,
    })
}

/// Scores every prediction against its reference and aggregates per band.
/// Samples are paired by index and must agree on dimensions, frequency,
/// terrain seed, and transmitter position.
pub fn evaluate_dataset(
    predictions: &[DatasetSample],
    references: &[DatasetSample],
    options: &EvalOptions,
) -> Result<MetricReport> {
    if predictions.len() != references.len() {
        return Err(Error::SampleMismatch(format!(
            "{} predictions vs {} references",
            predictions.len(),
            references.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    options.ssim.validate()?;

    let scores: Vec<SampleScore> = references
        .par_iter()
        .zip(predictions.par_iter())
        .enumerate()
        .map(|(index, (r, p))| score_pair(r, p, index, &options.ssim))
        .collect::<Result<_>>()?;

    let low: Vec<SampleScore> = scores.iter().copied().filter(|s| !s.high_band).collect();
    let high: Vec<SampleScore> = scores.iter().copied().filter(|s| s.high_band).collect();
    let band = |subset: &[SampleScore]| -> Result<Option<BandMetrics>> {
        if subset.is_empty() {
            Ok(None)
        } else {
            aggregate(subset, options.pooled_pixels).map(Some)
        }
    };
    Ok(MetricReport {
        note: "metrics computed on normalized [0, 1] radio maps",
        pooled_pixels: options.pooled_pixels,
        ssim_params: options.ssim.clone(),
        low_band: band(&low)?,
        high_band: band(&high)?,
        combined: aggregate(&scores, options.pooled_pixels)?,
    })
}

fn format_value(v: f64, decimals: usize) -> String {
    if v == f64::INFINITY {
        "+inf".to_string()
    } else {
        format!("{v:.decimals$}")
    }
}

impl MetricReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned table with metric rows and band columns.
    pub fn to_text_table(&self) -> String {
        let mut lines = vec![
            self.note.to_string(),
            format!(
                "aggregation: {} (NMSE always energy-pooled)",
                if self.pooled_pixels {
                    "pixel-pooled RMSE/PSNR"
                } else {
                    "per-sample mean"
                }
            ),
        ];
        let bands = [
            ("415 MHz", self.low_band.as_ref()),
            ("5.8 GHz", self.high_band.as_ref()),
            ("combined", Some(&self.combined)),
        ];
        let mut header = format!("{:<8}", "");
        for (name, _) in bands {
            header.push_str(&format!("{name:>12}"));
        }
        lines.push(header);
        let rows: [(&str, Box<dyn Fn(&BandMetrics) -> String>); 5] = [
            ("samples", Box::new(|m| m.n_samples.to_string())),
            ("NMSE", Box::new(|m| format_value(m.nmse, 4))),
            ("RMSE", Box::new(|m| format_value(m.rmse, 4))),
            ("SSIM", Box::new(|m| format_value(m.ssim, 4))),
            ("PSNR", Box::new(|m| format_value(m.psnr, 2))),
        ];
        for (label, fmt) in rows {
            let mut line = format!("{label:<8}");
            for (_, metrics) in bands {
                let cell = metrics.map_or_else(|| "-".to_string(), |m| fmt(m));
                line.push_str(&format!("{cell:>12}"));
            }
            lines.push(line);
        }
        lines.join("\n") + "\n"
    }
}
