//! Pure numerical kernels for the staged training objectives and the
//! diffusion-model algebra: noise schedules, the v-parameterization forward
//! and inverse maps, BCE/MSE losses, the hybrid residual objective, and the
//! final reconstruction. No network code lives here; everything is a
//! deterministic function of grids and scalars so external trainers can
//! verify their implementations against the conformance vectors.

pub mod vectors;

use crate::error::{Error, Result};
use crate::grid::Grid;
use serde::{Deserialize, Serialize};

/// Cumulative signal-retention schedule. `alpha_bar[t]` is the product of
/// per-step retention factors up to timestep t; values lie in (0, 1] and
/// never increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    pub fn from_alpha_bar(alpha_bar: Vec<f64>) -> Result<Self> {
        if alpha_bar.is_empty() {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        for (t, &a) in alpha_bar.iter().enumerate() {
            if !(a.is_finite() && a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidSchedule(format!(
                    "alpha_bar[{t}] = {a} outside (0, 1]"
                )));
            }
            if t > 0 && a > alpha_bar[t - 1] {
                return Err(Error::InvalidSchedule(format!(
                    "alpha_bar increases at t = {t}: {} -> {a}",
                    alpha_bar[t - 1]
                )));
            }
        }
        Ok(Self { alpha_bar })
    }

    /// Linear-beta schedule: per-step noise rate beta grows linearly from
    /// 1e-4 to 0.02 across `timesteps` steps.
    pub fn linear_beta(timesteps: usize) -> Result<Self> {
        if timesteps == 0 {
            return Err(Error::InvalidSchedule("zero timesteps".into()));
        }
        let (beta_start, beta_end) = (1.0e-4, 0.02);
        let mut alpha_bar = Vec::with_capacity(timesteps);
        let mut product = 1.0;
        for t in 0..timesteps {
            let frac = if timesteps == 1 {
                0.0
            } else {
                t as f64 / (timesteps - 1) as f64
            };
            let beta = beta_start + (beta_end - beta_start) * frac;
            product *= 1.0 - beta;
            alpha_bar.push(product);
        }
        Self::from_alpha_bar(alpha_bar)
    }

    /// Cosine schedule with offset s = 0.008:
    /// alpha_bar(t) = cos^2(((t/T + s)/(1 + s)) * pi/2), rescaled so the
    /// t = 0 boundary value is 1.
    pub fn cosine(timesteps: usize) -> Result<Self> {
        if timesteps == 0 {
            return Err(Error::InvalidSchedule("zero timesteps".into()));
        }
        let s = 0.008;
        let f = |u: f64| -> f64 {
            let angle = ((u + s) / (1.0 + s)) * std::f64::consts::FRAC_PI_2;
            angle.cos().powi(2)
        };
        let f0 = f(0.0);
        let alpha_bar = (0..timesteps)
            .map(|t| f((t + 1) as f64 / timesteps as f64) / f0)
            .collect();
        Self::from_alpha_bar(alpha_bar)
    }

    pub fn len(&self) -> usize {
        self.alpha_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_bar.is_empty()
    }

    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        self.alpha_bar.get(t).copied().ok_or(Error::TimestepOutOfRange {
            t,
            len: self.alpha_bar.len(),
        })
    }

    pub fn alpha_bar_slice(&self) -> &[f64] {
        &self.alpha_bar
    }
}

/// Weights for the hybrid residual objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Weight of the reconstruction term in the hybrid loss.
    pub lambda_recon: f64,
    /// Probability clamp for the BCE log arguments.
    pub epsilon_bce: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_recon: 1.0,
            epsilon_bce: 1.0e-7,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_recon.is_finite() && self.lambda_recon >= 0.0) {
            return Err(Error::invalid(format!(
                "lambda_recon {} must be finite and non-negative",
                self.lambda_recon
            )));
        }
        if !(self.epsilon_bce > 0.0 && self.epsilon_bce <= 1.0e-3) {
            return Err(Error::invalid(format!(
                "epsilon_bce {} outside (0, 1e-3]",
                self.epsilon_bce
            )));
        }
        Ok(())
    }
}

fn check_dims(a: &Grid, b: &Grid) -> Result<()> {
    if !a.same_dims(b) {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    Ok(())
}

/// Mean binary cross-entropy with probability clamping.
pub fn bce_loss(target: &Grid, predicted_prob: &Grid, epsilon_bce: f64) -> Result<f64> {
    check_dims(target, predicted_prob)?;
    if !(epsilon_bce > 0.0 && epsilon_bce <= 1.0e-3) {
        return Err(Error::invalid(format!(
            "epsilon_bce {epsilon_bce} outside (0, 1e-3]"
        )));
    }
    let mut acc = 0.0;
    for (&y, &p) in target.iter().zip(predicted_prob.iter()) {
        if y != 0.0 && y != 1.0 {
            return Err(Error::TargetNotBinary { value: y });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange { value: p });
        }
        let p = p.clamp(epsilon_bce, 1.0 - epsilon_bce);
        acc -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(acc / target.len() as f64)
}

/// Mean squared error over all pixels.
pub fn mse_loss(target: &Grid, predicted: &Grid) -> Result<f64> {
    check_dims(target, predicted)?;
    let mut acc = 0.0;
    for (&a, &b) in target.iter().zip(predicted.iter()) {
        let d = a - b;
        acc += d * d;
    }
    Ok(acc / target.len() as f64)
}

/// Forward noising: r_t = sqrt(abar_t) r + sqrt(1 - abar_t) eps.
pub fn forward_noise(
    residual: &Grid,
    noise: &Grid,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<Grid> {
    check_dims(residual, noise)?;
    let abar = schedule.alpha_bar(t)?;
    let (sa, sn) = (abar.sqrt(), (1.0 - abar).sqrt());
    Ok(residual.zip_map(noise, |r, e| sa * r + sn * e))
}

/// Velocity target: v = sqrt(abar_t) eps - sqrt(1 - abar_t) r.
pub fn velocity_target(
    residual: &Grid,
    noise: &Grid,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<Grid> {
    check_dims(residual, noise)?;
    let abar = schedule.alpha_bar(t)?;
    let (sa, sn) = (abar.sqrt(), (1.0 - abar).sqrt());
    Ok(residual.zip_map(noise, |r, e| sa * e - sn * r))
}

/// Inverts the v-parameterization: r_hat = sqrt(abar_t) r_t
/// - sqrt(1 - abar_t) v. Exact inverse of the forward pair because
/// abar + (1 - abar) = 1.
pub fn residual_from_velocity(
    noisy_residual: &Grid,
    velocity: &Grid,
    t: usize,
    schedule: &NoiseSchedule,
) -> Result<Grid> {
    check_dims(noisy_residual, velocity)?;
    let abar = schedule.alpha_bar(t)?;
    let (sa, sn) = (abar.sqrt(), (1.0 - abar).sqrt());
    Ok(noisy_residual.zip_map(velocity, |rt, v| sa * rt - sn * v))
}

/// The three components of the hybrid objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridLoss {
    /// velocity + lambda * reconstruction.
    pub total: f64,
    pub velocity: f64,
    pub reconstruction: f64,
}

/// Hybrid objective: MSE on the velocity plus weighted MSE on the
/// reconstructed residual.
pub fn hybrid_loss(
    v_true: &Grid,
    v_pred: &Grid,
    r_true: &Grid,
    r_hat: &Grid,
    config: &LossConfig,
) -> Result<HybridLoss> {
    config.validate()?;
    let velocity = mse_loss(v_true, v_pred)?;
    let reconstruction = mse_loss(r_true, r_hat)?;
    Ok(HybridLoss {
        total: velocity + config.lambda_recon * reconstruction,
        velocity,
        reconstruction,
    })
}

/// Unweighted sum of the three stage losses.
pub fn total_loss(l1: f64, l2: f64, l3: f64) -> Result<f64> {
    for v in [l1, l2, l3] {
        if !v.is_finite() {
            return Err(Error::NonFinite("stage loss"));
        }
    }
    Ok(l1 + l2 + l3)
}

/// Final prediction: stage-2 map plus the predicted residual, elementwise.
pub fn reconstruct_final(rm_stage2: &Grid, residual: &Grid) -> Result<Grid> {
    check_dims(rm_stage2, residual)?;
    Ok(rm_stage2.zip_map(residual, |m, r| m + r))
}
