//! CSV writers. Comma separated, header row, `\n` line endings.

use std::io::{self, Write};

use crate::bench::{direction_name, BenchRecord, ScalingRecord};
use crate::heat::{Control, Grid, TemperatureField};
use crate::optimize::OptimizationHistory;
use crate::scalar::Real;

/// `tau,n,theta`, one row per level and cell.
pub fn write_field_csv<T: Real, W: Write>(mut w: W, field: &TemperatureField<T>) -> io::Result<()> {
    writeln!(w, "tau,n,theta")?;
    for tau in 0..field.levels() {
        for (n, v) in field.row(tau).iter().enumerate() {
            writeln!(w, "{tau},{n},{v}")?;
        }
    }
    Ok(())
}

/// `n,u,grad`.
pub fn write_gradient_csv<T: Real, W: Write>(mut w: W, control: &Control<T>, gradient: &[T]) -> io::Result<()> {
    writeln!(w, "n,u,grad")?;
    for (n, (u, g)) in control.values().iter().zip(gradient).enumerate() {
        writeln!(w, "{n},{u},{g}")?;
    }
    Ok(())
}

/// `iter,objective,grad_norm,seconds`.
pub fn write_history_csv<W: Write>(mut w: W, history: &OptimizationHistory) -> io::Result<()> {
    writeln!(w, "iter,objective,grad_norm,seconds")?;
    for r in &history.records {
        writeln!(w, "{},{},{},{}", r.iteration, r.objective, r.grad_norm, r.seconds)?;
    }
    Ok(())
}

/// `n,x_center,u`.
pub fn write_control_csv<T: Real, W: Write>(mut w: W, grid: &Grid<T>, control: &Control<T>) -> io::Result<()> {
    writeln!(w, "n,x_center,u")?;
    for (n, u) in control.values().iter().enumerate() {
        writeln!(w, "{n},{},{u}", grid.center(n))?;
    }
    Ok(())
}

/// `count,dist,mode,min_seconds`. Distribution labels containing commas are quoted.
pub fn write_bench_csv<W: Write>(mut w: W, records: &[BenchRecord]) -> io::Result<()> {
    writeln!(w, "count,dist,mode,min_seconds")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{}",
            r.count,
            quote(&r.dist),
            direction_name(r.mode),
            r.min_seconds
        )?;
    }
    Ok(())
}

pub const SCALING_HEADER: &str =
    "particles,mode,constraint_seconds,adjoint_seconds,total_seconds,peak_path_bytes,rss_bytes,status";

pub fn write_scaling_header<W: Write>(mut w: W) -> io::Result<()> {
    writeln!(w, "{SCALING_HEADER}")
}

pub fn write_scaling_row<W: Write>(mut w: W, r: &ScalingRecord) -> io::Result<()> {
    let rss = r.rss_bytes.map(|b| b.to_string()).unwrap_or_default();
    writeln!(
        w,
        "{},{},{},{},{},{},{},{}",
        r.particles,
        r.mode.name(),
        r.constraint_seconds,
        r.adjoint_seconds,
        r.total_seconds,
        r.peak_path_bytes,
        rss,
        r.status.name()
    )
}

pub fn write_scaling_csv<W: Write>(mut w: W, records: &[ScalingRecord]) -> io::Result<()> {
    write_scaling_header(&mut w)?;
    for r in records {
        write_scaling_row(&mut w, r)?;
    }
    Ok(())
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
