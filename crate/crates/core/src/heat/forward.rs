//! Forward (constraint) simulation.

use rayon::prelude::*;

use super::config::{Grid, SimConfig};
use super::{Control, HeatError};
use crate::rng::{Direction, GeneratorState, StreamId};
use crate::sampling::{sample_uniform, splitmix64_mix, ZigguratTable};
use crate::scalar::Real;

/// Particles per work unit. Fixed so that reductions, and therefore results,
/// do not depend on the number of worker threads.
pub const BLOCK_PARTICLES: usize = 8192;

/// Generator for particle `p`: stream `p`, with an initial state mixed from
/// the base seed and the particle index.
pub fn particle_generator(seed: u64, p: usize) -> GeneratorState {
    let hi = splitmix64_mix(seed);
    let lo = splitmix64_mix(seed ^ splitmix64_mix((p as u64).wrapping_add(1)));
    GeneratorState::seed(((hi as u128) << 64) | lo as u128, StreamId(p as u64))
}

/// Positions, weights and generator states of all particles at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble<T> {
    pub positions: Vec<T>,
    pub weights: Vec<T>,
    pub generators: Vec<GeneratorState>,
}

impl<T: Real> ParticleEnsemble<T> {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Bytes held by the ensemble arrays.
    pub fn storage_bytes(&self) -> usize {
        self.len() * (2 * std::mem::size_of::<T>() + std::mem::size_of::<GeneratorState>())
    }
}

/// Binned temperature estimate on all `steps + 1` time levels.
#[derive(Clone, Debug, PartialEq)]
pub struct TemperatureField<T> {
    levels: usize,
    cells: usize,
    dx: T,
    dt: T,
    data: Vec<T>,
}

impl<T: Real> TemperatureField<T> {
    pub fn zeros(levels: usize, cells: usize, dx: T, dt: T) -> Self {
        Self {
            levels,
            cells,
            dx,
            dt,
            data: vec![T::zero(); levels * cells],
        }
    }

    /// Number of time levels (`steps + 1`).
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn row(&self, tau: usize) -> &[T] {
        &self.data[tau * self.cells..(tau + 1) * self.cells]
    }

    pub fn row_mut(&mut self, tau: usize) -> &mut [T] {
        &mut self.data[tau * self.cells..(tau + 1) * self.cells]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// `sum_n theta[tau][n] * dx`.
    pub fn mass(&self, tau: usize) -> T {
        self.row(tau).iter().copied().sum::<T>() * self.dx
    }

    /// `sum_tau theta[tau]`, per cell.
    pub fn time_integrated(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.cells];
        for tau in 0..self.levels {
            for (a, &v) in acc.iter_mut().zip(self.row(tau)) {
                *a = *a + v;
            }
        }
        acc
    }

    pub fn storage_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<T>()
    }
}

/// Whether the forward run keeps full particle histories.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PathCapture {
    #[default]
    Discard,
    Store {
        budget_bytes: Option<usize>,
    },
}

/// Full `(X, W)` histories, particle-major: entry `p * (steps + 1) + tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredPaths<T> {
    pub(crate) levels: usize,
    pub(crate) positions: Vec<T>,
    pub(crate) weights: Vec<T>,
}

impl<T: Real> StoredPaths<T> {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn position(&self, p: usize, tau: usize) -> T {
        self.positions[p * self.levels + tau]
    }

    pub fn weight(&self, p: usize, tau: usize) -> T {
        self.weights[p * self.levels + tau]
    }

    pub fn storage_bytes(&self) -> usize {
        (self.positions.len() + self.weights.len()) * std::mem::size_of::<T>()
    }

    pub fn required_bytes(particles: usize, steps: usize) -> usize {
        particles
            .saturating_mul(steps + 1)
            .saturating_mul(2 * std::mem::size_of::<T>())
    }
}

#[derive(Clone, Debug)]
pub struct ForwardRun<T> {
    pub ensemble: ParticleEnsemble<T>,
    pub field: TemperatureField<T>,
    pub objective: T,
    pub paths: Option<StoredPaths<T>>,
    /// Cells that received no particle at initialization; their initial
    /// temperature is lost from the estimate.
    pub empty_cells: usize,
}

impl<T: Real> ForwardRun<T> {
    /// Ensemble, histories (if stored) and field: everything kept for the adjoint sweep.
    pub fn path_bytes(&self) -> usize {
        self.ensemble.storage_bytes()
            + self.paths.as_ref().map_or(0, StoredPaths::storage_bytes)
            + self.field.storage_bytes()
    }
}

/// Precomputed per-step quantities shared by the forward and reverse sweeps.
pub(crate) struct Stepper<'a, T> {
    pub grid: Grid<T>,
    pub scale: T,
    pub decay: Vec<T>,
    pub growth: Vec<T>,
    pub table: &'a ZigguratTable,
}

impl<T: Real> Stepper<'static, T> {
    pub fn new(grid: Grid<T>, dt: T, control: &Control<T>) -> Self {
        Self {
            grid,
            scale: (T::of(2.0) * dt).sqrt(),
            decay: control.values().iter().map(|&u| (-dt * u).exp()).collect(),
            growth: control.values().iter().map(|&u| (dt * u).exp()).collect(),
            table: ZigguratTable::standard(),
        }
    }
}

impl<T: Real> Stepper<'_, T> {
    /// One forward step; returns the new position, weight and cell.
    #[inline]
    pub fn forward(&self, x: T, w: T, rng: &mut GeneratorState) -> (T, T, usize) {
        let xi = T::of(self.table.sample(rng, Direction::Forward));
        let x_new = self.grid.wrap(x + self.scale * xi);
        let cell = self.grid.cell_of(x_new);
        (x_new, w * self.decay[cell], cell)
    }

    /// Inverse of [`Stepper::forward`] given the post-step state.
    #[inline]
    pub fn reverse(&self, x_next: T, w_next: T, rng: &mut GeneratorState) -> (T, T) {
        let cell = self.grid.cell_of(x_next);
        let xi = T::of(self.table.sample(rng, Direction::Reverse));
        (self.grid.wrap(x_next - self.scale * xi), w_next * self.growth[cell])
    }
}

/// `wrap(x + sqrt(2 dt) xi)`.
pub fn diffusion_step<T: Real>(x: T, xi: T, dt: T, grid: &Grid<T>) -> T {
    grid.wrap(x + (T::of(2.0) * dt).sqrt() * xi)
}

/// `w exp(-dt u(x_new))`, with the post-move position.
pub fn reweight_step<T: Real>(w: T, x_new: T, control: &Control<T>, grid: &Grid<T>, dt: T) -> T {
    w * (-dt * control.at(grid, x_new)).exp()
}

/// Piecewise-linear inverse CDF of `theta0` tabulated on `10 N` segments.
struct InverseCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn new<T: Real>(cfg: &SimConfig<T>, grid: &Grid<T>) -> Option<Self> {
        let length = cfg.length.to_f64_lossy();
        let total = cfg.profile.cumulative(length, length);
        if total.is_nan() || total <= 0.0 {
            return None;
        }
        let segments = 10 * grid.cells();
        let xs: Vec<f64> = (0..=segments).map(|j| length * j as f64 / segments as f64).collect();
        let mut cdf: Vec<f64> = xs.iter().map(|&x| cfg.profile.cumulative(x, length) / total).collect();
        cdf[segments] = 1.0;
        Some(Self { xs, cdf })
    }

    fn invert(&self, u: f64) -> f64 {
        let j = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1) - 1;
        let (c0, c1) = (self.cdf[j], self.cdf[j + 1]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.xs[j] + frac * (self.xs[j + 1] - self.xs[j])
    }
}

/// Maps one uniform to an initial position.
pub(crate) struct InitialSampler<T> {
    table: Option<InverseCdf>,
    grid: Grid<T>,
}

impl<T: Real> InitialSampler<T> {
    pub fn new(cfg: &SimConfig<T>, grid: Grid<T>) -> Self {
        Self {
            table: InverseCdf::new(cfg, &grid),
            grid,
        }
    }

    pub fn position(&self, u: f64) -> T {
        let x = T::of(match &self.table {
            Some(t) => t.invert(u),
            None => u * self.grid.length().to_f64_lossy(),
        });
        if x >= self.grid.length() || x < T::zero() {
            self.grid.wrap(x)
        } else {
            x
        }
    }
}

/// Draws each initial position from `theta0 / int theta0` with one uniform
/// from that particle's own generator. A zero profile gives uniform positions.
pub fn sample_initial_positions<T: Real>(
    cfg: &SimConfig<T>,
    grid: &Grid<T>,
    generators: &mut [GeneratorState],
) -> Vec<T> {
    let sampler = InitialSampler::new(cfg, *grid);
    generators
        .par_iter_mut()
        .map(|g| sampler.position(sample_uniform(g, Direction::Forward)))
        .collect()
}

/// Gives every particle in cell `n` the weight `theta0_cells[n] dx / count_n`,
/// so that binning reproduces `theta0_cells` on every occupied cell. Returns
/// the weights and the number of empty cells.
pub fn assign_initial_weights<T: Real>(positions: &[T], theta0_cells: &[T], grid: &Grid<T>) -> (Vec<T>, usize) {
    let mut counts = vec![0usize; grid.cells()];
    let cells: Vec<usize> = positions.iter().map(|&x| grid.cell_of(x)).collect();
    for &n in &cells {
        counts[n] += 1;
    }
    let per_particle: Vec<T> = theta0_cells
        .iter()
        .zip(&counts)
        .map(|(&theta, &c)| if c > 0 { theta * grid.dx() / T::of_usize(c) } else { T::zero() })
        .collect();
    let empty = counts.iter().filter(|&&c| c == 0).count();
    (cells.iter().map(|&n| per_particle[n]).collect(), empty)
}

/// `theta_n = sum_p 1[x_p in cell n] w_p / dx`.
pub fn deposit<T: Real>(positions: &[T], weights: &[T], grid: &Grid<T>) -> Vec<T> {
    let mut row = vec![T::zero(); grid.cells()];
    for (&x, &w) in positions.iter().zip(weights) {
        let n = grid.cell_of(x);
        row[n] = row[n] + w;
    }
    row.iter().map(|&m| m / grid.dx()).collect()
}

/// Trapezoid factor: 1/2 on the first and last level, 1 in between.
pub fn trapezoid_weight<T: Real>(tau: usize, steps: usize) -> T {
    if tau == 0 || tau == steps {
        T::half()
    } else {
        T::one()
    }
}

/// `dt sum''_tau dx/2 |theta_tau|^2 + nu dx/2 |u|^2`.
pub fn objective<T: Real>(field: &TemperatureField<T>, control: &Control<T>, nu: T) -> T {
    let steps = field.levels() - 1;
    let half = T::half();
    let state: T = (0..field.levels())
        .map(|tau| {
            let sq: T = field.row(tau).iter().map(|&v| v * v).sum();
            trapezoid_weight::<T>(tau, steps) * field.dx() * half * sq
        })
        .sum();
    let reg: T = control.values().iter().map(|&u| u * u).sum();
    field.dt() * state + nu * field.dx() * half * reg
}

struct BlockMut<'a, T> {
    positions: &'a mut [T],
    weights: &'a mut [T],
    generators: &'a mut [GeneratorState],
    history: Option<(&'a mut [T], &'a mut [T])>,
}

/// Runs one block of particles through all steps; returns its per-level,
/// per-cell weight sums.
fn simulate_block<T: Real>(stepper: &Stepper<T>, steps: usize, block: &mut BlockMut<T>) -> Vec<T> {
    let cells = stepper.grid.cells();
    let levels = steps + 1;
    let mut mass = vec![T::zero(); levels * cells];
    let BlockMut {
        positions,
        weights,
        generators,
        history,
    } = block;
    for (&x, &w) in positions.iter().zip(weights.iter()) {
        let n = stepper.grid.cell_of(x);
        mass[n] = mass[n] + w;
    }
    if let Some((hx, hw)) = history {
        for i in 0..positions.len() {
            hx[i * levels] = positions[i];
            hw[i * levels] = weights[i];
        }
    }
    for tau in 1..levels {
        let row = &mut mass[tau * cells..(tau + 1) * cells];
        for i in 0..positions.len() {
            let (x, w, n) = stepper.forward(positions[i], weights[i], &mut generators[i]);
            positions[i] = x;
            weights[i] = w;
            row[n] = row[n] + w;
            if let Some((hx, hw)) = history {
                hx[i * levels + tau] = x;
                hw[i * levels + tau] = w;
            }
        }
    }
    mass
}

fn allocate<T: Real>(len: usize) -> Result<Vec<T>, HeatError> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| HeatError::AllocationFailed {
        bytes: len.saturating_mul(std::mem::size_of::<T>()),
    })?;
    v.resize(len, T::zero());
    Ok(v)
}

/// Position and weight history slices of one block, when paths are stored.
type HistoryChunk<'a, T> = Option<(&'a mut [T], &'a mut [T])>;

/// Initializes the ensemble, advances it `cfg.steps` times under `control`,
/// and bins every level including the first and last.
pub fn run_forward<T: Real>(
    cfg: &SimConfig<T>,
    control: &Control<T>,
    capture: PathCapture,
) -> Result<ForwardRun<T>, HeatError> {
    let grid = cfg.validate()?;
    control.check(&grid)?;
    let (p_count, steps, cells) = (cfg.particles, cfg.steps, grid.cells());
    let levels = steps + 1;

    let mut paths = match capture {
        PathCapture::Discard => None,
        PathCapture::Store { budget_bytes } => {
            let required = StoredPaths::<T>::required_bytes(p_count, steps);
            if let Some(budget) = budget_bytes {
                if required > budget {
                    return Err(HeatError::PathBudgetExceeded { required, budget });
                }
            }
            let len = p_count.checked_mul(levels).ok_or(HeatError::AllocationFailed { bytes: required })?;
            Some(StoredPaths {
                levels,
                positions: allocate(len)?,
                weights: allocate(len)?,
            })
        }
    };

    let mut generators: Vec<GeneratorState> =
        (0..p_count).into_par_iter().map(|p| particle_generator(cfg.seed, p)).collect();
    let mut positions = sample_initial_positions(cfg, &grid, &mut generators);
    let length = cfg.length.to_f64_lossy();
    let theta0: Vec<T> = (0..cells)
        .map(|n| T::of(cfg.profile.value(grid.center(n).to_f64_lossy(), length)))
        .collect();
    let (mut weights, empty_cells) = assign_initial_weights(&positions, &theta0, &grid);

    let stepper = Stepper::new(grid, cfg.dt, control);
    let mut blocks: Vec<BlockMut<T>> = {
        let history_chunks: Box<dyn Iterator<Item = HistoryChunk<'_, T>>> = match paths.as_mut() {
            Some(sp) => Box::new(
                sp.positions
                    .chunks_mut(BLOCK_PARTICLES * levels)
                    .zip(sp.weights.chunks_mut(BLOCK_PARTICLES * levels))
                    .map(Some),
            ),
            None => Box::new(std::iter::repeat_with(|| None)),
        };
        positions
            .chunks_mut(BLOCK_PARTICLES)
            .zip(weights.chunks_mut(BLOCK_PARTICLES))
            .zip(generators.chunks_mut(BLOCK_PARTICLES))
            .zip(history_chunks)
            .map(|(((positions, weights), generators), history)| BlockMut {
                positions,
                weights,
                generators,
                history,
            })
            .collect()
    };

    let mut mass = vec![T::zero(); levels * cells];
    let wave = rayon::current_num_threads().max(1);
    for group in blocks.chunks_mut(wave) {
        let partials: Vec<Vec<T>> = group
            .par_iter_mut()
            .map(|b| simulate_block(&stepper, steps, b))
            .collect();
        for part in partials {
            for (m, v) in mass.iter_mut().zip(part) {
                *m = *m + v;
            }
        }
    }
    drop(blocks);

    let mut field = TemperatureField::zeros(levels, cells, grid.dx(), cfg.dt);
    for (t, m) in field.data.iter_mut().zip(&mass) {
        *t = *m / grid.dx();
    }
    let objective = objective(&field, control, cfg.nu);
    Ok(ForwardRun {
        ensemble: ParticleEnsemble {
            positions,
            weights,
            generators,
        },
        field,
        objective,
        paths,
        empty_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SimConfig<f64> {
        SimConfig {
            length: 1.0,
            dx: 0.125,
            dt: 0.01,
            steps: 5,
            particles: 50,
            nu: 1.0,
            seed: 3,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_increment_keeps_position() {
        let grid = Grid::new(10.0, 0.1).unwrap();
        assert_eq!(diffusion_step(3.7, 0.0, 0.001, &grid), 3.7);
    }

    #[test]
    fn increment_of_one_period_wraps_back() {
        let grid = Grid::new(10.0, 0.1).unwrap();
        let dt = 0.005;
        let xi = 10.0 / (2.0f64 * dt).sqrt();
        assert!((diffusion_step(0.5, xi, dt, &grid) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reweight_values() {
        let grid = Grid::new(1.0, 0.5).unwrap();
        let zero = Control::zeros(2);
        assert_eq!(reweight_step(2.0, 0.3, &zero, &grid, 0.1), 2.0);
        let c = Control::new(vec![0.0, 3.0]);
        let w = reweight_step(2.0, 0.7, &c, &grid, 0.1);
        assert!((w - 2.0 * (-0.3f64).exp()).abs() < 1e-15);
        assert!((w - 1.4816).abs() < 1e-4);
    }

    #[test]
    fn constant_cooling_telescopes() {
        let grid = Grid::new(1.0, 0.25).unwrap();
        let c = Control::constant(4, 2.0);
        let mut w = 1.5;
        for k in 0..40 {
            w = reweight_step(w, (k as f64 * 0.37) % 1.0, &c, &grid, 0.01);
        }
        assert!((w / (1.5 * (-2.0 * 40.0 * 0.01f64).exp()) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn single_particle_deposit() {
        let grid = Grid::new(1.0, 0.125).unwrap();
        let row = deposit(&[0.3], &[1.0], &grid);
        for (n, v) in row.iter().enumerate() {
            assert_eq!(*v, if n == 2 { 8.0 } else { 0.0 });
        }
    }

    #[test]
    fn one_particle_per_cell_weights() {
        let grid = Grid::new(1.0, 0.25).unwrap();
        let theta = [1.0, 2.0, 3.0, 4.0];
        let positions = [0.9, 0.1, 0.6, 0.3];
        let (w, empty) = assign_initial_weights(&positions, &theta, &grid);
        assert_eq!(empty, 0);
        assert_eq!(w, vec![1.0, 0.25, 0.75, 0.5]);
    }

    #[test]
    fn binning_reproduces_initial_profile_on_occupied_cells() {
        let grid = Grid::new(1.0, 0.25).unwrap();
        let theta = [5.0, 2.0, 3.0, 4.0];
        let positions = [0.05, 0.1, 0.2, 0.6, 0.65, 0.7, 0.8];
        let (w, empty) = assign_initial_weights(&positions, &theta, &grid);
        assert_eq!(empty, 1);
        let row: Vec<f64> = deposit(&positions, &w, &grid);
        assert!((row[0] - 5.0).abs() < 1e-14);
        assert_eq!(row[1], 0.0);
        assert!((row[2] - 3.0).abs() < 1e-14);
        assert!((row[3] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn zero_horizon_objective() {
        let cfg = SimConfig { steps: 0, ..tiny() };
        let u = Control::new((0..8).map(|n| n as f64 * 0.5).collect());
        let run = run_forward(&cfg, &u, PathCapture::Discard).unwrap();
        assert_eq!(run.field.levels(), 1);
        let theta0 = run.field.row(0);
        let sq: f64 = theta0.iter().map(|v| v * v).sum();
        let reg: f64 = u.values().iter().map(|v| v * v).sum();
        let expected = cfg.dt * 0.5 * cfg.dx * 0.5 * sq + cfg.nu * cfg.dx * 0.5 * reg;
        assert!((run.objective - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn objective_closed_forms() {
        let zero = TemperatureField::zeros(4, 3, 0.5, 0.1);
        assert_eq!(objective(&zero, &Control::zeros(3), 1.0), 0.0);
        let u = Control::new(vec![2.0, 0.0, 0.0]);
        assert_eq!(objective(&zero, &u, 1.0), 1.0 * 0.5 * 2.0);

        let steps = 6;
        let mut f = TemperatureField::zeros(steps + 1, 3, 0.5, 0.1);
        f.data.iter_mut().for_each(|v| *v = 7.0);
        let expected = 0.1 * steps as f64 * 0.5 * 3.0 * 0.5 * 49.0;
        assert!((objective(&f, &Control::zeros(3), 1.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn control_length_is_checked() {
        let err = run_forward(&tiny(), &Control::zeros(3), PathCapture::Discard).unwrap_err();
        assert_eq!(err, HeatError::ControlLength { expected: 8, got: 3 });
    }

    #[test]
    fn stored_budget_is_enforced() {
        let err = run_forward(
            &tiny(),
            &Control::zeros(8),
            PathCapture::Store { budget_bytes: Some(100) },
        )
        .unwrap_err();
        assert!(matches!(err, HeatError::PathBudgetExceeded { budget: 100, .. }));
    }

    #[test]
    fn stored_history_matches_final_state() {
        let cfg = tiny();
        let run = run_forward(&cfg, &Control::constant(8, 1.0), PathCapture::Store { budget_bytes: None }).unwrap();
        let paths = run.paths.as_ref().unwrap();
        for p in 0..cfg.particles {
            assert_eq!(paths.position(p, cfg.steps), run.ensemble.positions[p]);
            assert_eq!(paths.weight(p, cfg.steps), run.ensemble.weights[p]);
        }
        assert!(run.path_bytes() >= 16 * cfg.particles * cfg.steps);
    }
}
