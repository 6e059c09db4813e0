//! Conformance vectors: serialized input/output pairs for every kernel in
//! this module, so external implementations can check themselves against
//! this one without sharing code.

use super::{
    bce_loss, forward_noise, hybrid_loss, mse_loss, reconstruct_final, residual_from_velocity,
    total_loss, velocity_target, HybridLoss, LossConfig, NoiseSchedule,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorFile {
    pub generator_version: String,
    pub seed: u64,
    /// Maximum absolute deviation allowed when re-evaluating the cases.
    pub tolerance: f64,
    pub schedules: Vec<ScheduleDescriptor>,
    pub cases: Vec<VectorCase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    LinearBeta,
    Cosine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleDescriptor {
    pub name: String,
    pub kind: ScheduleKind,
    pub timesteps: usize,
    /// Full cumulative-retention sequence, so schedule construction itself
    /// can be diffed.
    pub alpha_bar: Vec<f64>,
}

impl ScheduleDescriptor {
    fn build(&self) -> Result<NoiseSchedule> {
        match self.kind {
            ScheduleKind::LinearBeta => NoiseSchedule::linear_beta(self.timesteps),
            ScheduleKind::Cosine => NoiseSchedule::cosine(self.timesteps),
        }
    }
}

/// Row-major grid payload for the JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorGrid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl VectorGrid {
    fn from_grid(g: &Grid) -> Self {
        Self {
            rows: g.rows(),
            cols: g.cols(),
            data: g.as_slice().to_vec(),
        }
    }

    fn to_grid(&self) -> Result<Grid> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidPayload(format!(
                "vector grid claims {}x{} but carries {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(Grid::from_vec(self.rows, self.cols, self.data.clone()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum VectorCase {
    BceLoss {
        target: VectorGrid,
        predicted: VectorGrid,
        epsilon_bce: f64,
        expected: f64,
    },
    MseLoss {
        target: VectorGrid,
        predicted: VectorGrid,
        expected: f64,
    },
    ForwardNoise {
        schedule: String,
        t: usize,
        residual: VectorGrid,
        noise: VectorGrid,
        expected: VectorGrid,
    },
    VelocityTarget {
        schedule: String,
        t: usize,
        residual: VectorGrid,
        noise: VectorGrid,
        expected: VectorGrid,
    },
    ResidualFromVelocity {
        schedule: String,
        t: usize,
        noisy_residual: VectorGrid,
        velocity: VectorGrid,
        expected: VectorGrid,
    },
    HybridLoss {
        v_true: VectorGrid,
        v_pred: VectorGrid,
        r_true: VectorGrid,
        r_hat: VectorGrid,
        lambda_recon: f64,
        expected: HybridLoss,
    },
    TotalLoss {
        l1: f64,
        l2: f64,
        l3: f64,
        expected: f64,
    },
    ReconstructFinal {
        stage2: VectorGrid,
        residual: VectorGrid,
        expected: VectorGrid,
    },
}

/// Generates a deterministic vector file: `cases_per_op` random cases for
/// each operation, over linear and cosine schedules of the given length.
pub fn generate(seed: u64, cases_per_op: usize, timesteps: usize) -> Result<VectorFile> {
    if cases_per_op == 0 {
        return Err(Error::invalid("cases_per_op must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let linear = NoiseSchedule::linear_beta(timesteps)?;
    let cosine = NoiseSchedule::cosine(timesteps)?;
    let schedules = vec![
        ScheduleDescriptor {
            name: format!("linear_beta_{timesteps}"),
            kind: ScheduleKind::LinearBeta,
            timesteps,
            alpha_bar: linear.alpha_bar_slice().to_vec(),
        },
        ScheduleDescriptor {
            name: format!("cosine_{timesteps}"),
            kind: ScheduleKind::Cosine,
            timesteps,
            alpha_bar: cosine.alpha_bar_slice().to_vec(),
        },
    ];
    let named: Vec<(&str, &NoiseSchedule)> = vec![
        (schedules[0].name.as_str(), &linear),
        (schedules[1].name.as_str(), &cosine),
    ];

    let mut cases = Vec::new();
    for c in 0..cases_per_op {
        let rows = 2 + (c % 4);
        let cols = 3 + (c % 3);
        let normal_grid = |rng: &mut ChaCha8Rng| -> Grid {
            Grid::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
        };

        let target = Grid::from_fn(rows, cols, |_, _| f64::from(rng.gen_bool(0.5)));
        let predicted = Grid::from_fn(rows, cols, |_, _| rng.gen_range(0.0..=1.0));
        cases.push(VectorCase::BceLoss {
            target: VectorGrid::from_grid(&target),
            predicted: VectorGrid::from_grid(&predicted),
            epsilon_bce: 1.0e-7,
            expected: bce_loss(&target, &predicted, 1.0e-7)?,
        });

        let a = normal_grid(&mut rng);
        let b = normal_grid(&mut rng);
        cases.push(VectorCase::MseLoss {
            target: VectorGrid::from_grid(&a),
            predicted: VectorGrid::from_grid(&b),
            expected: mse_loss(&a, &b)?,
        });

        for &(name, schedule) in &named {
            let t = rng.gen_range(0..schedule.len());
            let r = normal_grid(&mut rng);
            let e = normal_grid(&mut rng);
            let rt = forward_noise(&r, &e, t, schedule)?;
            let v = velocity_target(&r, &e, t, schedule)?;
            let rhat = residual_from_velocity(&rt, &v, t, schedule)?;
            cases.push(VectorCase::ForwardNoise {
                schedule: name.to_string(),
                t,
                residual: VectorGrid::from_grid(&r),
                noise: VectorGrid::from_grid(&e),
                expected: VectorGrid::from_grid(&rt),
            });
            cases.push(VectorCase::VelocityTarget {
                schedule: name.to_string(),
                t,
                residual: VectorGrid::from_grid(&r),
                noise: VectorGrid::from_grid(&e),
                expected: VectorGrid::from_grid(&v),
            });
            cases.push(VectorCase::ResidualFromVelocity {
                schedule: name.to_string(),
                t,
                noisy_residual: VectorGrid::from_grid(&rt),
                velocity: VectorGrid::from_grid(&v),
                expected: VectorGrid::from_grid(&rhat),
            });
        }

        let v_true = normal_grid(&mut rng);
        let v_pred = normal_grid(&mut rng);
        let r_true = normal_grid(&mut rng);
        let r_hat = normal_grid(&mut rng);
        let lambda_recon = rng.gen_range(0.0..2.0);
        let config = LossConfig {
            lambda_recon,
            ..LossConfig::default()
        };
        cases.push(VectorCase::HybridLoss {
            v_true: VectorGrid::from_grid(&v_true),
            v_pred: VectorGrid::from_grid(&v_pred),
            r_true: VectorGrid::from_grid(&r_true),
            r_hat: VectorGrid::from_grid(&r_hat),
            lambda_recon,
            expected: hybrid_loss(&v_true, &v_pred, &r_true, &r_hat, &config)?,
        });

        let (l1, l2, l3) = (
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        );
        cases.push(VectorCase::TotalLoss {
            l1,
            l2,
            l3,
            expected: total_loss(l1, l2, l3)?,
        });

        let stage2 = normal_grid(&mut rng);
        let residual = normal_grid(&mut rng);
        cases.push(VectorCase::ReconstructFinal {
            stage2: VectorGrid::from_grid(&stage2),
            residual: VectorGrid::from_grid(&residual),
            expected: VectorGrid::from_grid(&reconstruct_final(&stage2, &residual)?),
        });
    }

    Ok(VectorFile {
        generator_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        tolerance: DEFAULT_TOLERANCE,
        schedules,
        cases,
    })
}

/// Re-evaluates every case in the file against this implementation and
/// returns human-readable descriptions of any deviations beyond the file's
/// tolerance. An empty list means full conformance.
pub fn validate(file: &VectorFile) -> Vec<String> {
    let mut violations = Vec::new();
    let mut schedules: HashMap<&str, NoiseSchedule> = HashMap::new();

    for desc in &file.schedules {
        match desc.build() {
            Ok(s) => {
                for (t, (&stored, &built)) in
                    desc.alpha_bar.iter().zip(s.alpha_bar_slice()).enumerate()
                {
                    if (stored - built).abs() > file.tolerance {
                        violations.push(format!(
                            "schedule {}: alpha_bar[{t}] stored {stored} vs rebuilt {built}",
                            desc.name
                        ));
                        break;
                    }
                }
                if desc.alpha_bar.len() != s.len() {
                    violations.push(format!(
                        "schedule {}: stored length {} vs rebuilt {}",
                        desc.name,
                        desc.alpha_bar.len(),
                        s.len()
                    ));
                }
                schedules.insert(desc.name.as_str(), s);
            }
            Err(e) => violations.push(format!("schedule {}: {e}", desc.name)),
        }
    }

    for (index, case) in file.cases.iter().enumerate() {
        if let Err(problem) = check_case(case, &schedules, file.tolerance) {
            violations.push(format!("case {index}: {problem}"));
        }
    }
    violations
}

fn check_case(
    case: &VectorCase,
    schedules: &HashMap<&str, NoiseSchedule>,
    tolerance: f64,
) -> std::result::Result<(), String> {
    let scalar = |name: &str, got: f64, expected: f64| {
        if (got - expected).abs() > tolerance {
            Err(format!("{name}: got {got}, expected {expected}"))
        } else {
            Ok(())
        }
    };
    let grids = |name: &str, got: &Grid, expected: &VectorGrid| {
        let expected = expected.to_grid().map_err(|e| e.to_string())?;
        if !got.same_dims(&expected) {
            return Err(format!("{name}: dimension mismatch"));
        }
        for (k, (a, b)) in got.iter().zip(expected.iter()).enumerate() {
            if (a - b).abs() > tolerance {
                return Err(format!("{name}: pixel {k} got {a}, expected {b}"));
            }
        }
        Ok(())
    };
    let lookup = |name: &str| {
        schedules
            .get(name)
            .ok_or_else(|| format!("unknown schedule {name}"))
    };

    match case {
        VectorCase::BceLoss {
            target,
            predicted,
            epsilon_bce,
            expected,
        } => {
            let got = bce_loss(
                &target.to_grid().map_err(|e| e.to_string())?,
                &predicted.to_grid().map_err(|e| e.to_string())?,
                *epsilon_bce,
            )
            .map_err(|e| e.to_string())?;
            scalar("bce_loss", got, *expected)
        }
        VectorCase::MseLoss {
            target,
            predicted,
            expected,
        } => {
            let got = mse_loss(
                &target.to_grid().map_err(|e| e.to_string())?,
                &predicted.to_grid().map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            scalar("mse_loss", got, *expected)
        }
        VectorCase::ForwardNoise {
            schedule,
            t,
            residual,
            noise,
            expected,
        } => {
            let got = forward_noise(
                &residual.to_grid().map_err(|e| e.to_string())?,
                &noise.to_grid().map_err(|e| e.to_string())?,
                *t,
                lookup(schedule)?,
            )
            .map_err(|e| e.to_string())?;
            grids("forward_noise", &got, expected)
        }
        VectorCase::VelocityTarget {
            schedule,
            t,
            residual,
            noise,
            expected,
        } => {
            let got = velocity_target(
                &residual.to_grid().map_err(|e| e.to_string())?,
                &noise.to_grid().map_err(|e| e.to_string())?,
                *t,
                lookup(schedule)?,
            )
            .map_err(|e| e.to_string())?;
            grids("velocity_target", &got, expected)
        }
        VectorCase::ResidualFromVelocity {
            schedule,
            t,
            noisy_residual,
            velocity,
            expected,
        } => {
            let got = residual_from_velocity(
                &noisy_residual.to_grid().map_err(|e| e.to_string())?,
                &velocity.to_grid().map_err(|e| e.to_string())?,
                *t,
                lookup(schedule)?,
            )
            .map_err(|e| e.to_string())?;
            grids("residual_from_velocity", &got, expected)
        }
        VectorCase::HybridLoss {
            v_true,
            v_pred,
            r_true,
            r_hat,
            lambda_recon,
            expected,
        } => {
            let config = LossConfig {
                lambda_recon: *lambda_recon,
                ..LossConfig::default()
            };
            let got = hybrid_loss(
                &v_true.to_grid().map_err(|e| e.to_string())?,
                &v_pred.to_grid().map_err(|e| e.to_string())?,
                &r_true.to_grid().map_err(|e| e.to_string())?,
                &r_hat.to_grid().map_err(|e| e.to_string())?,
                &config,
            )
            .map_err(|e| e.to_string())?;
            scalar("hybrid_loss.total", got.total, expected.total)?;
            scalar("hybrid_loss.velocity", got.velocity, expected.velocity)?;
            scalar(
                "hybrid_loss.reconstruction",
                got.reconstruction,
                expected.reconstruction,
            )
        }
        VectorCase::TotalLoss {
            l1,
            l2,
            l3,
            expected,
        } => {
            let got = total_loss(*l1, *l2, *l3).map_err(|e| e.to_string())?;
            scalar("total_loss", got, *expected)
        }
        VectorCase::ReconstructFinal {
            stage2,
            residual,
            expected,
        } => {
            let got = reconstruct_final(
                &stage2.to_grid().map_err(|e| e.to_string())?,
                &residual.to_grid().map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            grids("reconstruct_final", &got, expected)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_vectors_validate_cleanly() {
        let file = generate(7, 3, 100).unwrap();
        assert_eq!(file.schedules.len(), 2);
        assert!(file.cases.len() >= 3 * 8);
        let violations = validate(&file);
        assert!(violations.is_empty(), "violations: {violations:?}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = serde_json::to_string(&generate(42, 2, 50).unwrap()).unwrap();
        let b = serde_json::to_string(&generate(42, 2, 50).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip_preserves_conformance() {
        let file = generate(3, 2, 80).unwrap();
        let text = serde_json::to_string_pretty(&file).unwrap();
        let back: VectorFile = serde_json::from_str(&text).unwrap();
        assert!(validate(&back).is_empty());
    }

    #[test]
    fn tampered_expectation_is_reported() {
        let mut file = generate(5, 1, 60).unwrap();
        for case in &mut file.cases {
            if let VectorCase::MseLoss { expected, .. } = case {
                *expected += 1.0;
            }
        }
        let violations = validate(&file);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("mse_loss"));
    }

    #[test]
    fn unknown_schedule_is_reported() {
        let mut file = generate(5, 1, 60).unwrap();
        for case in &mut file.cases {
            if let VectorCase::ForwardNoise { schedule, .. } = case {
                *schedule = "no_such_schedule".into();
            }
        }
        let violations = validate(&file);
        assert!(violations.iter().any(|v| v.contains("unknown schedule")));
    }
}
