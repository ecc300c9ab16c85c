//! Problem setup for the cooled periodic rod and its `key = value` file format.

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::HeatError;
use crate::scalar::Real;

/// Initial temperature `amplitude * sin(2 pi modes x / L) + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialProfile<T> {
    pub amplitude: T,
    pub offset: T,
    pub modes: u32,
}

impl<T: Real> InitialProfile<T> {
    pub fn value(&self, x: f64, length: f64) -> f64 {
        let (a, b) = (self.amplitude.to_f64_lossy(), self.offset.to_f64_lossy());
        a * (2.0 * PI * self.modes as f64 * x / length).sin() + b
    }

    /// `int_0^x theta0`.
    pub fn cumulative(&self, x: f64, length: f64) -> f64 {
        let (a, b) = (self.amplitude.to_f64_lossy(), self.offset.to_f64_lossy());
        if self.modes == 0 {
            return b * x;
        }
        let k = 2.0 * PI * self.modes as f64 / length;
        b * x + a / k * (1.0 - (k * x).cos())
    }

    /// Analytic solution of the uncooled problem at time `t`.
    pub fn heat_solution(&self, x: f64, t: f64, length: f64) -> f64 {
        let (a, b) = (self.amplitude.to_f64_lossy(), self.offset.to_f64_lossy());
        let k = 2.0 * PI * self.modes as f64 / length;
        b + a * (-k * k * t).exp() * (k * x).sin()
    }
}

/// Uniform periodic grid of `cells` half-open cells `[n dx, (n+1) dx)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    cells: usize,
    dx: T,
    length: T,
}

impl<T: Real> Grid<T> {
    pub fn new(length: T, dx: T) -> Result<Self, HeatError> {
        if !(length > T::zero() && dx > T::zero()) || !length.is_finite() || !dx.is_finite() {
            return Err(HeatError::InvalidConfig(format!(
                "length {length} and dx {dx} must be positive"
            )));
        }
        let ratio = (length / dx).to_f64_lossy();
        let cells = ratio.round();
        if cells < 1.0 || (ratio - cells).abs() > 1e-6 * cells.max(1.0) {
            return Err(HeatError::InvalidConfig(format!(
                "L / dx = {ratio} is not a positive integer"
            )));
        }
        Ok(Self {
            cells: cells as usize,
            dx,
            length,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn center(&self, n: usize) -> T {
        (T::of_usize(n) + T::half()) * self.dx
    }

    /// Index of the cell holding `x`, for `x` in `[0, L)`. Edges are the
    /// floating-point products `n * dx`, so a point on an edge belongs to the
    /// cell to its right.
    #[inline]
    pub fn cell_of(&self, x: T) -> usize {
        // Truncation is floor for x >= 0; anything below maps to cell 0.
        let q = (x / self.dx).to_f64_lossy();
        let guess = if q > 0.0 { (q as i64 as usize).min(self.cells - 1) } else { 0 };
        if guess > 0 && x < T::of_usize(guess) * self.dx {
            guess - 1
        } else if guess + 1 < self.cells && x >= T::of_usize(guess + 1) * self.dx {
            guess + 1
        } else {
            guess
        }
    }

    /// Periodic wrap into `[0, L)`.
    #[inline]
    pub fn wrap(&self, x: T) -> T {
        let l = self.length;
        if x >= T::zero() && x < l {
            return x;
        }
        // One period off is the common case; both shifts are exact there.
        let mut y = if x >= -l && x < l + l {
            if x < T::zero() {
                x + l
            } else {
                x - l
            }
        } else {
            let r = x % l;
            if r < T::zero() {
                r + l
            } else {
                r
            }
        };
        if y >= l {
            y = y - l;
        }
        y
    }

    /// Distance from `x` to the nearest cell edge.
    #[inline]
    pub fn edge_distance(&self, x: T) -> T {
        self.edge_distance_in(x, self.cell_of(x))
    }

    /// [`Grid::edge_distance`] when the cell of `x` is already known.
    #[inline]
    pub fn edge_distance_in(&self, x: T, n: usize) -> T {
        let left = x - T::of_usize(n) * self.dx;
        let right = T::of_usize(n + 1) * self.dx - x;
        left.min(right)
    }
}

/// Everything the particle scheme needs besides the control.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<T> {
    pub length: T,
    pub dx: T,
    pub dt: T,
    /// Number of time steps; the horizon is `steps * dt`.
    pub steps: usize,
    pub particles: usize,
    pub nu: T,
    pub seed: u64,
    pub profile: InitialProfile<T>,
}

impl<T: Real> Default for SimConfig<T> {
    /// Full-size run: L = 10, dx = 0.01, dt = 0.001, t_end = 1,
    /// nu = 1, theta0 = 50 sin(8 pi x / L) + 90.
    fn default() -> Self {
        Self {
            length: T::of(10.0),
            dx: T::of(0.01),
            dt: T::of(0.001),
            steps: 1000,
            particles: 100_000,
            nu: T::one(),
            seed: 0,
            profile: InitialProfile {
                amplitude: T::of(50.0),
                offset: T::of(90.0),
                modes: 4,
            },
        }
    }
}

const KEYS: [&str; 10] = [
    "L",
    "dx",
    "dt",
    "t_end",
    "particles",
    "nu",
    "seed",
    "theta0_amplitude",
    "theta0_offset",
    "theta0_modes",
];

impl<T: Real> SimConfig<T> {
    /// Smaller grid used for quick experiments and tests: N = 100, 200 steps
    /// to t = 1, 10^4 particles.
    pub fn desk() -> Self {
        Self {
            dx: T::of(0.1),
            dt: T::of(0.005),
            steps: 200,
            particles: 10_000,
            ..Self::default()
        }
    }

    pub fn grid(&self) -> Result<Grid<T>, HeatError> {
        Grid::new(self.length, self.dx)
    }

    pub fn t_end(&self) -> T {
        self.dt * T::of_usize(self.steps)
    }

    pub fn validate(&self) -> Result<Grid<T>, HeatError> {
        let grid = self.grid()?;
        if self.dt <= T::zero() || !self.dt.is_finite() {
            return Err(HeatError::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if self.particles == 0 {
            return Err(HeatError::InvalidConfig("particles must be at least 1".into()));
        }
        if self.nu < T::zero() || !self.nu.is_finite() {
            return Err(HeatError::InvalidConfig(format!("nu = {} must be nonnegative", self.nu)));
        }
        let InitialProfile { amplitude, offset, .. } = self.profile;
        if !(amplitude >= T::zero() && offset >= amplitude) || !offset.is_finite() {
            return Err(HeatError::InvalidConfig(format!(
                "theta0 needs offset >= amplitude >= 0 (got amplitude {amplitude}, offset {offset})"
            )));
        }
        Ok(grid)
    }

    /// Parses `key = value` lines. Blank lines and `#`/`;` comments are
    /// ignored; missing keys keep the values of `SimConfig::default()`.
    pub fn from_ini_str(text: &str) -> Result<Self, HeatError> {
        let mut cfg = Self::default();
        let mut t_end: Option<f64> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| HeatError::ConfigSyntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || HeatError::ConfigValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            let real = || value.parse::<f64>().map_err(|_| bad());
            match key {
                "L" => cfg.length = T::of(real()?),
                "dx" => cfg.dx = T::of(real()?),
                "dt" => cfg.dt = T::of(real()?),
                "t_end" => t_end = Some(real()?),
                "particles" => cfg.particles = parse_count(value).ok_or_else(bad)?,
                "nu" => cfg.nu = T::of(real()?),
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                "theta0_amplitude" => cfg.profile.amplitude = T::of(real()?),
                "theta0_offset" => cfg.profile.offset = T::of(real()?),
                "theta0_modes" => cfg.profile.modes = value.parse().map_err(|_| bad())?,
                other => {
                    return Err(HeatError::UnknownKey {
                        line: i + 1,
                        key: other.to_string(),
                    })
                }
            }
        }
        let t_end = t_end.unwrap_or_else(|| cfg.t_end().to_f64_lossy());
        cfg.steps = steps_for(t_end, cfg.dt.to_f64_lossy())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_ini_string(&self) -> String {
        let mut s = String::new();
        let values = [
            self.length.to_string(),
            self.dx.to_string(),
            self.dt.to_string(),
            self.t_end().to_string(),
            self.particles.to_string(),
            self.nu.to_string(),
            self.seed.to_string(),
            self.profile.amplitude.to_string(),
            self.profile.offset.to_string(),
            self.profile.modes.to_string(),
        ];
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Accepts plain integers and exact float notation such as `1e6`.
fn parse_count(value: &str) -> Option<usize> {
    if let Ok(n) = value.parse::<usize>() {
        return Some(n);
    }
    let f = value.parse::<f64>().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f < 1e15).then_some(f as usize)
}

fn steps_for(t_end: f64, dt: f64) -> Result<usize, HeatError> {
    if t_end.is_nan() || t_end < 0.0 || dt.is_nan() || dt <= 0.0 {
        return Err(HeatError::InvalidConfig(format!(
            "t_end = {t_end} and dt = {dt} must be nonnegative and positive"
        )));
    }
    let ratio = t_end / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-6 * steps.max(1.0) {
        return Err(HeatError::InvalidConfig(format!(
            "t_end / dt = {ratio} is not an integer"
        )));
    }
    Ok(steps as usize)
}
