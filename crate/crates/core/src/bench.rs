//! Timing harnesses: per-distribution throughput and gradient scaling.

use std::hint::black_box;
use std::time::Instant;

use crate::heat::{compute_gradient, Control, GradientMode, GradientOptions, HeatError, SimConfig};
use crate::rng::{Direction, GeneratorState, StreamId};
use crate::sampling::{sample_uniform, Distribution, ZigguratTable};
use crate::scalar::Real;

pub const TOTAL_RUNS: usize = 55;
pub const DISCARDED_RUNS: usize = 5;

/// Times `f` [`TOTAL_RUNS`] times, drops the first [`DISCARDED_RUNS`] as
/// warm-up and returns the minimum of the rest together with the kept timings.
pub fn min_of_kept<F: FnMut()>(mut f: F) -> (f64, Vec<f64>) {
    let mut kept = Vec::with_capacity(TOTAL_RUNS - DISCARDED_RUNS);
    for run in 0..TOTAL_RUNS {
        let t0 = Instant::now();
        f();
        let dt = t0.elapsed().as_secs_f64();
        if run >= DISCARDED_RUNS {
            kept.push(dt);
        }
    }
    let min = kept.iter().copied().fold(f64::INFINITY, f64::min);
    (min, kept)
}

pub fn direction_name(dir: Direction) -> &'static str {
    match dir {
        Direction::Forward => "forward",
        Direction::Reverse => "reverse",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub count: usize,
    pub dist: String,
    pub mode: Direction,
    pub min_seconds: f64,
}

#[inline(always)]
fn timed_loop(count: usize, start: GeneratorState, mut sample: impl FnMut(&mut GeneratorState) -> f64) -> f64 {
    let t0 = Instant::now();
    let mut g = start;
    let mut acc = 0.0;
    for _ in 0..count {
        acc += sample(&mut g);
    }
    black_box(acc);
    t0.elapsed().as_secs_f64()
}

/// One timed run; each (distribution, direction) pair gets its own loop so
/// neither direction pays for a branch the other does not.
fn draw_run(dist: Distribution, dir: Direction, count: usize, start: GeneratorState) -> f64 {
    match (dist, dir) {
        (Distribution::Uniform, Direction::Forward) => {
            timed_loop(count, start, |g| sample_uniform(g, Direction::Forward))
        }
        (Distribution::Uniform, Direction::Reverse) => {
            timed_loop(count, start, |g| sample_uniform(g, Direction::Reverse))
        }
        (Distribution::Exponential(e), Direction::Forward) => {
            timed_loop(count, start, |g| e.sample(g, Direction::Forward))
        }
        (Distribution::Exponential(e), Direction::Reverse) => {
            timed_loop(count, start, |g| e.sample(g, Direction::Reverse))
        }
        (Distribution::Normal, Direction::Forward) => {
            let table = ZigguratTable::standard();
            timed_loop(count, start, |g| table.sample(g, Direction::Forward))
        }
        (Distribution::Normal, Direction::Reverse) => {
            let table = ZigguratTable::standard();
            timed_loop(count, start, |g| table.sample(g, Direction::Reverse))
        }
    }
}

/// Draws `count` samples per timed run, each run starting from the same state.
pub fn time_draws(dist: Distribution, dir: Direction, count: usize, seed: u64) -> (f64, Vec<f64>) {
    let start = GeneratorState::seed(seed as u128, StreamId(seed));
    min_of_kept(|| {
        draw_run(dist, dir, count, start);
    })
}

/// Runs every direction in `dirs` [`TOTAL_RUNS`] times, round-robin with a
/// rotating start, so slow drift in machine speed hits all directions alike.
/// Returns the min of the kept runs per direction, in `dirs` order.
pub fn time_draws_interleaved(dist: Distribution, dirs: &[Direction], count: usize, seed: u64) -> Vec<f64> {
    let start = GeneratorState::seed(seed as u128, StreamId(seed));
    let mut best = vec![f64::INFINITY; dirs.len()];
    for run in 0..TOTAL_RUNS {
        for k in 0..dirs.len() {
            let i = (run + k) % dirs.len();
            let dt = draw_run(dist, dirs[i], count, start);
            if run >= DISCARDED_RUNS {
                best[i] = best[i].min(dt);
            }
        }
    }
    best
}

/// One record per direction, timed with [`time_draws_interleaved`].
pub fn bench_distribution(dist: Distribution, dirs: &[Direction], count: usize, seed: u64) -> Vec<BenchRecord> {
    time_draws_interleaved(dist, dirs, count, seed)
        .into_iter()
        .zip(dirs)
        .map(|(min_seconds, &mode)| BenchRecord {
            count,
            dist: dist_label(&dist),
            mode,
            min_seconds,
        })
        .collect()
}

/// `uniform`, `normal`, or `exponential(rate)`.
pub fn dist_label(dist: &Distribution) -> String {
    match dist {
        Distribution::Exponential(e) => format!("exponential({})", e.rate()),
        other => other.name().to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingStatus {
    Ok,
    /// Stored histories would exceed the memory budget; nothing was run.
    OverBudget,
}

impl ScalingStatus {
    pub fn name(self) -> &'static str {
        match self {
            ScalingStatus::Ok => "ok",
            ScalingStatus::OverBudget => "over_budget",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRecord {
    pub particles: usize,
    pub mode: GradientMode,
    pub constraint_seconds: f64,
    pub adjoint_seconds: f64,
    pub total_seconds: f64,
    pub peak_path_bytes: usize,
    /// Process high-water mark after the run, where the OS reports it.
    pub rss_bytes: Option<u64>,
    pub status: ScalingStatus,
}

impl ScalingRecord {
    pub fn per_particle_seconds(&self) -> f64 {
        self.total_seconds / self.particles as f64
    }
}

/// Peak resident set size (`VmHWM`) on Linux.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// One gradient evaluation per `(batch size, mode)` at zero control. Stored
/// runs that would exceed `budget_bytes` yield an [`ScalingStatus::OverBudget`]
/// record instead of running.
pub fn bench_scaling<T: Real>(
    cfg: &SimConfig<T>,
    batch_sizes: &[usize],
    modes: &[GradientMode],
    budget_bytes: Option<usize>,
) -> Result<Vec<ScalingRecord>, HeatError> {
    let cells = cfg.grid()?.cells();
    let control = Control::zeros(cells);
    let mut out = Vec::new();
    for &particles in batch_sizes {
        let sized = SimConfig {
            particles,
            ..cfg.clone()
        };
        for &mode in modes {
            let options = GradientOptions {
                mode,
                path_budget_bytes: budget_bytes,
            };
            match compute_gradient(&sized, &control, &options) {
                Ok(report) => {
                    let d = report.diagnostics;
                    out.push(ScalingRecord {
                        particles,
                        mode,
                        constraint_seconds: d.constraint_seconds,
                        adjoint_seconds: d.adjoint_seconds,
                        total_seconds: d.constraint_seconds + d.adjoint_seconds,
                        peak_path_bytes: d.peak_path_bytes,
                        rss_bytes: peak_rss_bytes(),
                        status: ScalingStatus::Ok,
                    });
                }
                Err(HeatError::PathBudgetExceeded { required, .. }) => out.push(ScalingRecord {
                    particles,
                    mode,
                    constraint_seconds: f64::NAN,
                    adjoint_seconds: f64::NAN,
                    total_seconds: f64::NAN,
                    peak_path_bytes: required,
                    rss_bytes: None,
                    status: ScalingStatus::OverBudget,
                }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}
