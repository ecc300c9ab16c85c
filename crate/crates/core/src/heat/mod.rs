//! Monte Carlo particle scheme for cooling a periodic 1D rod, and its
//! discrete adjoint.
//!
//! Particles carry a position and a weight. Each step moves a particle by a
//! Brownian increment and scales its weight by `exp(-dt u(x_new))`; binning the
//! weights gives the temperature estimate. The adjoint sweep walks the same
//! paths backwards in time, either from stored histories or by regenerating
//! them with the reversible generator.

mod adjoint;
mod check;
mod config;
mod forward;

pub use adjoint::{
    adjoint_step, compare_paths, compute_gradient, gradient_contribution, reverse_path_step,
    terminal_adjoint, GradientDiagnostics, GradientMode, GradientOptions, GradientReport, GradientVector,
    PathAgreement, PathCursor, PathProvider, ReversibleCursor, ReversiblePaths, StoredCursor, EDGE_TOLERANCE,
};
pub use check::{finite_difference_check, random_directions, DirectionalCheck, FdReport};
pub use config::{Grid, InitialProfile, SimConfig};
pub use forward::{
    assign_initial_weights, deposit, diffusion_step, objective, particle_generator, reweight_step,
    run_forward, sample_initial_positions, trapezoid_weight, ForwardRun, ParticleEnsemble, PathCapture,
    StoredPaths, TemperatureField, BLOCK_PARTICLES,
};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    ConfigSyntax { line: usize, text: String },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config key `{key}`: cannot parse {value:?}")]
    ConfigValue { key: String, value: String },
    #[error("control has {got} entries, grid has {expected} cells")]
    ControlLength { expected: usize, got: usize },
    #[error("stored paths need {required} bytes, budget is {budget}")]
    PathBudgetExceeded { required: usize, budget: usize },
    #[error("failed to allocate {bytes} bytes of path storage")]
    AllocationFailed { bytes: usize },
}

/// Piecewise-constant cooling rate, one value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Control<T> {
    values: Vec<T>,
}

impl<T: Real> Control<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn zeros(cells: usize) -> Self {
        Self {
            values: vec![T::zero(); cells],
        }
    }

    pub fn constant(cells: usize, value: T) -> Self {
        Self {
            values: vec![value; cells],
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `u(x)`: the value of the cell holding `x`.
    #[inline]
    pub fn at(&self, grid: &Grid<T>, x: T) -> T {
        self.values[grid.cell_of(x)]
    }

    pub fn check(&self, grid: &Grid<T>) -> Result<(), HeatError> {
        if self.values.len() != grid.cells() {
            return Err(HeatError::ControlLength {
                expected: grid.cells(),
                got: self.values.len(),
            });
        }
        if let Some(bad) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(HeatError::InvalidConfig(format!("control entry {bad} is not finite")));
        }
        Ok(())
    }
}
