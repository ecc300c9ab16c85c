//! Backward sweep: adjoint weights and the gradient with respect to the control.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{Grid, SimConfig};
use super::forward::{
    particle_generator, run_forward, InitialSampler, ParticleEnsemble, PathCapture, StoredPaths, Stepper, TemperatureField,
    BLOCK_PARTICLES,
};
use super::{Control, HeatError};
use crate::rng::GeneratorState;
use crate::sampling::{u64_to_unit_f64, AttemptOutcome};
use crate::scalar::Real;

/// Positions closer than this to a cell edge are counted by the sweep, since
/// reconstruction drift could move them into the neighbouring cell.
pub const EDGE_TOLERANCE: f64 = 1e-8;

/// Upper bound on consecutive rejected draws searched when closing a path.
const MAX_BOUNDARY_DRAWS: usize = 64;

/// Gradient of the objective, one entry per cell.
pub type GradientVector<T> = Vec<T>;

/// Walks one particle's path backwards, one level per [`PathCursor::step_back`].
pub trait PathCursor<T> {
    fn position(&self) -> T;
    fn weight(&self) -> T;
    fn level(&self) -> usize;
    fn step_back(&mut self);
    /// Ends the walk at level 0. Returns whether the particle's generator is
    /// back at its pre-run state, if the provider tracks generators.
    fn finish(self) -> Option<bool>;
}

/// Source of particle paths visited from the last level down to the first.
pub trait PathProvider<T: Real>: Sync {
    type Cursor<'a>: PathCursor<T>
    where
        Self: 'a;

    fn particles(&self) -> usize;
    fn levels(&self) -> usize;
    fn cursor(&self, p: usize) -> Self::Cursor<'_>;
}

pub struct StoredCursor<'a, T> {
    positions: &'a [T],
    weights: &'a [T],
    level: usize,
}

impl<T: Real> PathCursor<T> for StoredCursor<'_, T> {
    fn position(&self) -> T {
        self.positions[self.level]
    }

    fn weight(&self) -> T {
        self.weights[self.level]
    }

    fn level(&self) -> usize {
        self.level
    }

    fn step_back(&mut self) {
        self.level -= 1;
    }

    fn finish(self) -> Option<bool> {
        None
    }
}

impl<T: Real> PathProvider<T> for StoredPaths<T> {
    type Cursor<'a> = StoredCursor<'a, T>;

    fn particles(&self) -> usize {
        self.positions.len() / self.levels
    }

    fn levels(&self) -> usize {
        self.levels
    }

    fn cursor(&self, p: usize) -> StoredCursor<'_, T> {
        let range = p * self.levels..(p + 1) * self.levels;
        StoredCursor {
            positions: &self.positions[range.clone()],
            weights: &self.weights[range],
            level: self.levels - 1,
        }
    }
}

/// Regenerates paths from the final ensemble by running each particle's
/// generator backwards.
pub struct ReversiblePaths<'a, T> {
    ensemble: &'a ParticleEnsemble<T>,
    stepper: Stepper<'static, T>,
    initial: InitialSampler<T>,
    levels: usize,
    seed: u64,
}

impl<'a, T: Real> ReversiblePaths<'a, T> {
    pub fn new(
        cfg: &SimConfig<T>,
        control: &Control<T>,
        ensemble: &'a ParticleEnsemble<T>,
    ) -> Result<Self, HeatError> {
        let grid = cfg.validate()?;
        control.check(&grid)?;
        Ok(Self {
            ensemble,
            stepper: Stepper::new(grid, cfg.dt, control),
            initial: InitialSampler::new(cfg, grid),
            levels: cfg.steps + 1,
            seed: cfg.seed,
        })
    }
}

pub struct ReversibleCursor<'a, T> {
    stepper: &'a Stepper<'static, T>,
    initial: &'a InitialSampler<T>,
    x: T,
    w: T,
    rng: GeneratorState,
    level: usize,
    levels: usize,
    origin: GeneratorState,
}

impl<T: Real> PathCursor<T> for ReversibleCursor<'_, T> {
    fn position(&self) -> T {
        self.x
    }

    fn weight(&self) -> T {
        self.w
    }

    fn level(&self) -> usize {
        self.level
    }

    fn step_back(&mut self) {
        let (x, w) = self.stepper.reverse(self.x, self.w, &mut self.rng);
        self.x = x;
        self.w = w;
        self.level -= 1;
    }

    fn finish(mut self) -> Option<bool> {
        while self.level > 0 {
            self.step_back();
        }
        // Reverse normal sampling leaves the first increment's rejected draws
        // in front of the uniform that placed the particle. A draw the
        // ziggurat would accept cannot be one of them, so it is the uniform.
        // A rejecting draw is the uniform only if it reproduces the
        // reconstructed initial position, up to accumulated rounding.
        let grid = &self.stepper.grid;
        let drift = T::epsilon() * T::of(16.0) * T::of_usize(self.levels);
        let tol = grid.length() * drift.max(T::of(EDGE_TOLERANCE));
        for _ in 0..MAX_BOUNDARY_DRAWS {
            let v = self.rng.prev_u64();
            if self.stepper.table.attempt(v) != AttemptOutcome::Reject {
                return Some(self.rng == self.origin);
            }
            let x = self.initial.position(u64_to_unit_f64(v));
            let d = (x - self.x).abs();
            if d.min(grid.length() - d) <= tol {
                return Some(self.rng == self.origin);
            }
        }
        Some(false)
    }
}

impl<T: Real> PathProvider<T> for ReversiblePaths<'_, T> {
    type Cursor<'a>
        = ReversibleCursor<'a, T>
    where
        Self: 'a;

    fn particles(&self) -> usize {
        self.ensemble.len()
    }

    fn levels(&self) -> usize {
        self.levels
    }

    fn cursor(&self, p: usize) -> ReversibleCursor<'_, T> {
        ReversibleCursor {
            stepper: &self.stepper,
            initial: &self.initial,
            x: self.ensemble.positions[p],
            w: self.ensemble.weights[p],
            rng: self.ensemble.generators[p],
            level: self.levels - 1,
            levels: self.levels,
            origin: particle_generator(self.seed, p),
        }
    }
}

/// Inverts one diffusion and reweighting step, drawing the increment in reverse.
pub fn reverse_path_step<T: Real>(
    x_next: T,
    w_next: T,
    rng: &mut GeneratorState,
    control: &Control<T>,
    grid: &Grid<T>,
    dt: T,
) -> (T, T) {
    let xi = T::of(crate::sampling::sample_normal(rng, crate::rng::Direction::Reverse));
    let x_prev = grid.wrap(x_next - (T::of(2.0) * dt).sqrt() * xi);
    (x_prev, w_next * (dt * control.at(grid, x_next)).exp())
}

/// `W*_T = -dt c_T theta_T(x_T)` with `c_T = 1/2`.
pub fn terminal_adjoint<T: Real>(x_last: T, theta_last: &[T], grid: &Grid<T>, dt: T) -> T {
    -dt * T::half() * theta_last[grid.cell_of(x_last)]
}

/// `W*_s = exp(-dt u(x_{s+1})) W*_{s+1} - dt c_s theta_s(x_s)`.
#[allow(clippy::too_many_arguments)]
pub fn adjoint_step<T: Real>(
    wstar_next: T,
    x_next: T,
    x_cur: T,
    theta_cur: &[T],
    control: &Control<T>,
    grid: &Grid<T>,
    dt: T,
    c: T,
) -> T {
    (-dt * control.at(grid, x_next)).exp() * wstar_next - dt * c * theta_cur[grid.cell_of(x_cur)]
}

/// Cell of `x_next` and the increment `dt W_{s+1} W*_{s+1}` it receives.
pub fn gradient_contribution<T: Real>(w_next: T, x_next: T, wstar_next: T, grid: &Grid<T>, dt: T) -> (usize, T) {
    (grid.cell_of(x_next), dt * w_next * wstar_next)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientMode {
    Stored,
    #[default]
    Reversible,
}

impl GradientMode {
    pub fn name(self) -> &'static str {
        match self {
            GradientMode::Stored => "stored",
            GradientMode::Reversible => "reversible",
        }
    }
}

impl std::str::FromStr for GradientMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stored" => Ok(GradientMode::Stored),
            "reversible" => Ok(GradientMode::Reversible),
            other => Err(format!("unknown gradient mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GradientOptions {
    pub mode: GradientMode,
    /// Refuse stored mode if histories would exceed this many bytes.
    pub path_budget_bytes: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradientDiagnostics {
    /// Ensemble, histories and temperature field kept for the sweep.
    pub peak_path_bytes: usize,
    pub constraint_seconds: f64,
    pub adjoint_seconds: f64,
    /// Reconstructed positions within [`EDGE_TOLERANCE`] of a cell edge.
    pub edge_proximity_count: usize,
    pub empty_cells: usize,
    /// Reversible mode only: whether every generator returned to its pre-run state.
    pub generators_restored: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct GradientReport<T> {
    pub gradient: GradientVector<T>,
    pub objective: T,
    pub field: TemperatureField<T>,
    pub diagnostics: GradientDiagnostics,
}

struct SweepResult<T> {
    gradient: Vec<T>,
    edge_hits: usize,
    restored: Option<bool>,
}

fn merge_restored(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x && y),
    }
}

fn sweep_block<T: Real, P: PathProvider<T>>(
    provider: &P,
    particles: std::ops::Range<usize>,
    field: &TemperatureField<T>,
    stepper: &Stepper<'static, T>,
    dt: T,
) -> SweepResult<T> {
    let grid = &stepper.grid;
    let steps = provider.levels() - 1;
    let tol = T::of(EDGE_TOLERANCE);
    let mut gradient = vec![T::zero(); grid.cells()];
    let mut edge_hits = 0;
    let mut restored = None;
    // Level-outer, particle-inner keeps one field row hot at a time.
    let mut cursors: Vec<P::Cursor<'_>> = particles.map(|p| provider.cursor(p)).collect();
    if steps > 0 {
        let row = field.row(steps);
        let mut cells = Vec::with_capacity(cursors.len());
        let mut wstar = Vec::with_capacity(cursors.len());
        for c in &cursors {
            let n = grid.cell_of(c.position());
            let ws = -dt * T::half() * row[n];
            gradient[n] = gradient[n] + dt * c.weight() * ws;
            cells.push(n);
            wstar.push(ws);
        }
        for s in (1..steps).rev() {
            let row = field.row(s);
            for ((c, cell), ws) in cursors.iter_mut().zip(cells.iter_mut()).zip(wstar.iter_mut()) {
                c.step_back();
                let x = c.position();
                let here = grid.cell_of(x);
                *ws = stepper.decay[*cell] * *ws - dt * row[here];
                gradient[here] = gradient[here] + dt * c.weight() * *ws;
                if grid.edge_distance_in(x, here) < tol {
                    edge_hits += 1;
                }
                *cell = here;
            }
        }
    }
    for c in cursors {
        restored = merge_restored(restored, c.finish());
    }
    SweepResult {
        gradient,
        edge_hits,
        restored,
    }
}

/// Accumulates the path part of the gradient over all particles, in fixed
/// blocks merged in particle order.
fn sweep<T: Real, P: PathProvider<T>>(
    provider: &P,
    field: &TemperatureField<T>,
    stepper: &Stepper<'static, T>,
    dt: T,
) -> SweepResult<T> {
    let total = provider.particles();
    let blocks: Vec<std::ops::Range<usize>> = (0..total)
        .step_by(BLOCK_PARTICLES)
        .map(|start| start..(start + BLOCK_PARTICLES).min(total))
        .collect();
    let mut acc = SweepResult {
        gradient: vec![T::zero(); stepper.grid.cells()],
        edge_hits: 0,
        restored: None,
    };
    let wave = rayon::current_num_threads().max(1);
    for group in blocks.chunks(wave) {
        let parts: Vec<SweepResult<T>> = group
            .par_iter()
            .map(|r| sweep_block(provider, r.clone(), field, stepper, dt))
            .collect();
        for part in parts {
            for (g, v) in acc.gradient.iter_mut().zip(part.gradient) {
                *g = *g + v;
            }
            acc.edge_hits += part.edge_hits;
            acc.restored = merge_restored(acc.restored, part.restored);
        }
    }
    acc
}

/// Runs the constraint simulation and the adjoint sweep, returning
/// `g = nu dx u + sum_p sum_s dt W_s W*_s 1[x_s in cell]`.
pub fn compute_gradient<T: Real>(
    cfg: &SimConfig<T>,
    control: &Control<T>,
    options: &GradientOptions,
) -> Result<GradientReport<T>, HeatError> {
    let capture = match options.mode {
        GradientMode::Stored => PathCapture::Store {
            budget_bytes: options.path_budget_bytes,
        },
        GradientMode::Reversible => PathCapture::Discard,
    };
    let t0 = Instant::now();
    let run = run_forward(cfg, control, capture)?;
    let constraint_seconds = t0.elapsed().as_secs_f64();
    let peak_path_bytes = run.path_bytes();

    let t1 = Instant::now();
    let stepper = Stepper::new(cfg.grid()?, cfg.dt, control);
    let swept = match &run.paths {
        Some(paths) => sweep(paths, &run.field, &stepper, cfg.dt),
        None => sweep(
            &ReversiblePaths::new(cfg, control, &run.ensemble)?,
            &run.field,
            &stepper,
            cfg.dt,
        ),
    };
    let adjoint_seconds = t1.elapsed().as_secs_f64();

    let reg = cfg.nu * cfg.dx;
    let gradient = control
        .values()
        .iter()
        .zip(&swept.gradient)
        .map(|(&u, &g)| reg * u + g)
        .collect();
    Ok(GradientReport {
        gradient,
        objective: run.objective,
        field: run.field,
        diagnostics: GradientDiagnostics {
            peak_path_bytes,
            constraint_seconds,
            adjoint_seconds,
            edge_proximity_count: swept.edge_hits,
            empty_cells: run.empty_cells,
            generators_restored: swept.restored,
        },
    })
}

/// Largest discrepancies between stored and reconstructed paths.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PathAgreement {
    /// Periodic distance between stored and reconstructed positions.
    pub max_position_error: f64,
    /// `|W_reconstructed / W_stored - 1|` over nonzero stored weights.
    pub max_weight_ratio_error: f64,
    pub generators_restored: bool,
}

impl PathAgreement {
    fn merge(self, other: Self) -> Self {
        Self {
            max_position_error: self.max_position_error.max(other.max_position_error),
            max_weight_ratio_error: self.max_weight_ratio_error.max(other.max_weight_ratio_error),
            generators_restored: self.generators_restored && other.generators_restored,
        }
    }
}

/// Runs forward with stored histories, then reconstructs every path from the
/// final ensemble and compares level by level.
pub fn compare_paths<T: Real>(cfg: &SimConfig<T>, control: &Control<T>) -> Result<PathAgreement, HeatError> {
    let run = run_forward(cfg, control, PathCapture::Store { budget_bytes: None })?;
    let stored = run.paths.as_ref().expect("stored capture");
    let rev = ReversiblePaths::new(cfg, control, &run.ensemble)?;
    let length = cfg.length.to_f64_lossy();
    let compare = |p: usize| {
        let mut s = stored.cursor(p);
        let mut r = rev.cursor(p);
        let mut out = PathAgreement {
            generators_restored: true,
            ..PathAgreement::default()
        };
        loop {
            let d = (s.position() - r.position()).to_f64_lossy().abs();
            out.max_position_error = out.max_position_error.max(d.min(length - d));
            let ws = s.weight().to_f64_lossy();
            if ws != 0.0 {
                let ratio = r.weight().to_f64_lossy() / ws;
                out.max_weight_ratio_error = out.max_weight_ratio_error.max((ratio - 1.0).abs());
            }
            if s.level() == 0 {
                break;
            }
            s.step_back();
            r.step_back();
        }
        out.generators_restored = r.finish().unwrap_or(false);
        out
    };
    Ok((0..run.ensemble.len())
        .into_par_iter()
        .map(compare)
        .reduce(
            || PathAgreement {
                generators_restored: true,
                ..PathAgreement::default()
            },
            PathAgreement::merge,
        ))
}
