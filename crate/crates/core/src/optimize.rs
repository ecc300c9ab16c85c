//! Gradient descent on the cooling control.

use std::time::Instant;

use thiserror::Error;

use crate::heat::{compute_gradient, Control, GradientOptions, GradientReport, HeatError, SimConfig};
use crate::sampling::splitmix64_mix;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error("invalid optimizer setting: {0}")]
    InvalidConfig(String),
    #[error("iteration {iteration}: objective still increased after {halvings} step halvings")]
    NoDescent { iteration: usize, halvings: u32 },
}

/// Frozen reuses the base seed every iteration, so the objective is a fixed
/// smooth function of the control. Resample draws a new seed per iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SeedMode {
    #[default]
    Frozen,
    Resample,
}

impl std::str::FromStr for SeedMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "frozen" => Ok(SeedMode::Frozen),
            "resample" => Ok(SeedMode::Resample),
            other => Err(format!("unknown seed mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig<T> {
    pub iterations: usize,
    pub step_size: T,
    pub seed_mode: SeedMode,
    /// Starting control; all zeros when `None`.
    pub initial: Option<Control<T>>,
    pub gradient: GradientOptions,
    /// Frozen mode halves the step on an objective increase, at most this often per iteration.
    pub max_halvings: u32,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            iterations: 50,
            step_size: T::of(1e-2),
            seed_mode: SeedMode::Frozen,
            initial: None,
            gradient: GradientOptions::default(),
            max_halvings: 5,
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.iterations == 0 {
            return Err(OptimizeError::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.step_size > T::zero() && self.step_size.is_finite()) {
            return Err(OptimizeError::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub seconds: f64,
    /// Step size used to leave this iterate.
    pub step_size: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizationHistory {
    pub records: Vec<IterationRecord>,
}

impl OptimizationHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grad_norm).collect()
    }
}

/// `u - eta g`.
pub fn gd_step<T: Real>(control: &Control<T>, gradient: &[T], eta: T) -> Control<T> {
    assert_eq!(control.len(), gradient.len(), "control and gradient lengths differ");
    Control::new(
        control
            .values()
            .iter()
            .zip(gradient)
            .map(|(&u, &g)| u - eta * g)
            .collect(),
    )
}

pub fn l2_norm<T: Real>(v: &[T]) -> f64 {
    v.iter().map(|x| x.to_f64_lossy().powi(2)).sum::<f64>().sqrt()
}

fn iteration_seed(base: u64, iteration: usize) -> u64 {
    splitmix64_mix(base ^ splitmix64_mix(iteration as u64))
}

/// Runs `opt.iterations` gradient steps from the initial control and returns
/// the final control with one history record per iteration.
pub fn run_optimization<T: Real>(
    cfg: &SimConfig<T>,
    opt: &OptimizerConfig<T>,
) -> Result<(Control<T>, OptimizationHistory), OptimizeError> {
    opt.validate()?;
    let grid = cfg.validate()?;
    let mut control = opt.initial.clone().unwrap_or_else(|| Control::zeros(grid.cells()));
    control.check(&grid)?;
    let mut eta = opt.step_size;
    let mut history = OptimizationHistory::default();

    match opt.seed_mode {
        SeedMode::Frozen => {
            let mut t0 = Instant::now();
            let mut report = compute_gradient(cfg, &control, &opt.gradient)?;
            for iteration in 0..opt.iterations {
                let last = iteration + 1 == opt.iterations;
                let objective = report.objective;
                let grad_norm = l2_norm(&report.gradient);
                let mut next: Option<(Control<T>, GradientReport<T>)> = None;
                if !last {
                    let mut halvings = 0;
                    loop {
                        let candidate = gd_step(&control, &report.gradient, eta);
                        let trial = compute_gradient(cfg, &candidate, &opt.gradient)?;
                        if trial.objective <= objective {
                            next = Some((candidate, trial));
                            break;
                        }
                        if halvings == opt.max_halvings {
                            return Err(OptimizeError::NoDescent { iteration, halvings });
                        }
                        halvings += 1;
                        eta = eta * T::half();
                    }
                }
                history.records.push(IterationRecord {
                    iteration,
                    objective: objective.to_f64_lossy(),
                    grad_norm,
                    seconds: t0.elapsed().as_secs_f64(),
                    step_size: eta.to_f64_lossy(),
                });
                t0 = Instant::now();
                match next {
                    Some((c, r)) => {
                        control = c;
                        report = r;
                    }
                    None => control = gd_step(&control, &report.gradient, eta),
                }
            }
        }
        SeedMode::Resample => {
            for iteration in 0..opt.iterations {
                let t0 = Instant::now();
                let seeded = SimConfig {
                    seed: iteration_seed(cfg.seed, iteration),
                    ..cfg.clone()
                };
                let report = compute_gradient(&seeded, &control, &opt.gradient)?;
                control = gd_step(&control, &report.gradient, eta);
                history.records.push(IterationRecord {
                    iteration,
                    objective: report.objective.to_f64_lossy(),
                    grad_norm: l2_norm(&report.gradient),
                    seconds: t0.elapsed().as_secs_f64(),
                    step_size: eta.to_f64_lossy(),
                });
            }
        }
    }
    Ok((control, history))
}

/// Least-squares slope of `values` against their index.
pub fn trend_slope(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = values.iter().sum::<f64>() / n;
    let (num, den) = values.iter().enumerate().fold((0.0, 0.0), |(num, den), (i, &y)| {
        let dx = i as f64 - mean_x;
        (num + dx * (y - mean_y), den + dx * dx)
    });
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::InitialProfile;

    fn tiny() -> SimConfig<f64> {
        SimConfig {
            length: 1.0,
            dx: 0.125,
            dt: 0.005,
            steps: 20,
            particles: 400,
            nu: 1.0,
            seed: 2,
            profile: InitialProfile {
                amplitude: 1.0,
                offset: 2.0,
                modes: 1,
            },
        }
    }

    #[test]
    fn gd_step_arithmetic() {
        let u = Control::new(vec![1.0, 1.0]);
        assert_eq!(gd_step(&u, &[0.5, -0.5], 0.1).values(), &[0.95, 1.05]);
        assert_eq!(gd_step(&u, &[0.0, 0.0], 0.1), u);
    }

    #[test]
    fn slope_of_line() {
        assert!((trend_slope(&[3.0, 1.0, -1.0, -3.0]) + 2.0).abs() < 1e-12);
        assert_eq!(trend_slope(&[1.0]), 0.0);
    }

    #[test]
    fn rejects_bad_settings() {
        let opt = OptimizerConfig {
            iterations: 0,
            ..OptimizerConfig::default()
        };
        assert!(matches!(run_optimization(&tiny(), &opt), Err(OptimizeError::InvalidConfig(_))));
        let opt = OptimizerConfig {
            step_size: -1.0,
            ..OptimizerConfig::default()
        };
        assert!(run_optimization(&tiny(), &opt).is_err());
    }

    #[test]
    fn zero_profile_is_a_fixed_point() {
        let cfg = SimConfig {
            profile: InitialProfile {
                amplitude: 0.0,
                offset: 0.0,
                modes: 1,
            },
            ..tiny()
        };
        let opt = OptimizerConfig {
            iterations: 3,
            ..OptimizerConfig::default()
        };
        let (u, hist) = run_optimization(&cfg, &opt).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
        assert_eq!(hist.len(), 3);
    }

    #[test]
    fn frozen_descent_is_monotone_and_deterministic() {
        let opt = OptimizerConfig {
            iterations: 8,
            step_size: 0.5,
            ..OptimizerConfig::default()
        };
        let (u1, h1) = run_optimization(&tiny(), &opt).unwrap();
        let (u2, h2) = run_optimization(&tiny(), &opt).unwrap();
        assert_eq!(u1, u2);
        assert_eq!(h1.objectives(), h2.objectives());
        let obj = h1.objectives();
        assert!(obj.windows(2).all(|w| w[1] <= w[0]), "{obj:?}");
        assert!(obj[7] < obj[0]);
    }
}
