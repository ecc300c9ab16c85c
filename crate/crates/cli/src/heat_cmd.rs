use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Subcommand};
use revmc::bench::{bench_scaling as run_scaling, ScalingStatus};
use revmc::heat::{
    compute_gradient, finite_difference_check, run_forward, Control, GradientMode, GradientOptions, PathCapture,
};
use revmc::optimize::{l2_norm, run_optimization, OptimizerConfig, SeedMode};
use revmc::output::{write_control_csv, write_field_csv, write_gradient_csv, write_history_csv, write_scaling_csv};

use crate::{io, stat, Failure, SimArgs};

#[derive(Subcommand, Debug)]
pub enum HeatCommand {
    /// Forward run; writes the temperature field.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Control CSV with a `u` column (default: zero control).
        #[arg(long)]
        control: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Adjoint gradient at a control.
    Gradient {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        control: Option<PathBuf>,
        #[arg(long, default_value = "reversible")]
        mode: GradientMode,
        /// Refuse stored mode above this many bytes of path storage.
        #[arg(long)]
        budget_bytes: Option<usize>,
        /// Also compare against central differences along this many random directions.
        #[arg(long)]
        fd_check: Option<usize>,
        #[arg(long, default_value_t = 1e-5)]
        fd_step: f64,
        /// Largest acceptable relative error of the finite-difference check.
        #[arg(long, default_value_t = 1e-4)]
        fd_tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gradient descent on the control.
    Optimize {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        #[arg(long, default_value_t = 1e-2)]
        step_size: f64,
        #[arg(long, default_value = "frozen")]
        seed_mode: SeedMode,
        #[arg(long, default_value = "reversible")]
        mode: GradientMode,
        /// Final control CSV (`n,x_center,u`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-iteration history CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000")]
    batch_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "stored,reversible")]
    modes: Vec<GradientMode>,
    /// Stored-mode runs needing more path storage than this are skipped.
    #[arg(long, default_value_t = 4_000_000_000)]
    budget_bytes: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(cmd: HeatCommand) -> Result<(), Failure> {
    match cmd {
        HeatCommand::Simulate { sim, control, out } => {
            let cfg = io::load_config(&sim)?;
            let cells = cfg.grid()?.cells();
            let control = match control {
                Some(p) => io::load_control(&p, cells)?,
                None => Control::zeros(cells),
            };
            let t0 = Instant::now();
            let run = run_forward(&cfg, &control, PathCapture::Discard)?;
            stat("objective", run.objective);
            stat("empty_cells", run.empty_cells);
            stat("constraint_seconds", t0.elapsed().as_secs_f64());
            let mut w = io::output(out.as_deref())?;
            write_field_csv(&mut w, &run.field)?;
            w.flush()?;
            Ok(())
        }
        HeatCommand::Gradient {
            sim,
            control,
            mode,
            budget_bytes,
            fd_check,
            fd_step,
            fd_tolerance,
            out,
        } => {
            let cfg = io::load_config(&sim)?;
            let cells = cfg.grid()?.cells();
            let control = match control {
                Some(p) => io::load_control(&p, cells)?,
                None => Control::zeros(cells),
            };
            let options = GradientOptions {
                mode,
                path_budget_bytes: budget_bytes,
            };
            let report = compute_gradient(&cfg, &control, &options)?;
            let d = &report.diagnostics;
            stat("mode", mode.name());
            stat("objective", report.objective);
            stat("grad_norm", l2_norm(&report.gradient));
            stat("peak_path_bytes", d.peak_path_bytes);
            stat("constraint_seconds", d.constraint_seconds);
            stat("adjoint_seconds", d.adjoint_seconds);
            stat("edge_proximity_count", d.edge_proximity_count);
            stat("empty_cells", d.empty_cells);
            if let Some(restored) = d.generators_restored {
                stat("generators_restored", restored);
            }
            let mut w = io::output(out.as_deref())?;
            write_gradient_csv(&mut w, &control, &report.gradient)?;
            w.flush()?;
            drop(w);
            if let Some(k) = fd_check {
                let fd = finite_difference_check(&cfg, &control, &options, k, fd_step, cfg.seed)?;
                stat("fd_directions", k);
                stat("fd_max_relative_error", fd.max_relative_error);
                if fd.max_relative_error.is_nan() || fd.max_relative_error >= fd_tolerance {
                    return Err(Failure::Verification(format!(
                        "finite-difference relative error {} exceeds {fd_tolerance}",
                        fd.max_relative_error
                    )));
                }
            }
            if d.generators_restored == Some(false) {
                return Err(Failure::Verification("generator states not restored by the sweep".into()));
            }
            Ok(())
        }
        HeatCommand::Optimize {
            sim,
            iterations,
            step_size,
            seed_mode,
            mode,
            out,
            history,
        } => {
            let cfg = io::load_config(&sim)?;
            let grid = cfg.grid()?;
            let opt = OptimizerConfig {
                iterations,
                step_size,
                seed_mode,
                initial: None,
                gradient: GradientOptions {
                    mode,
                    path_budget_bytes: None,
                },
                ..OptimizerConfig::default()
            };
            let (control, hist) = run_optimization(&cfg, &opt)?;
            if let (Some(first), Some(last)) = (hist.records.first(), hist.records.last()) {
                stat("iterations", hist.len());
                stat("objective_first", first.objective);
                stat("objective_last", last.objective);
                stat("grad_norm_first", first.grad_norm);
                stat("grad_norm_last", last.grad_norm);
                stat("step_size_last", last.step_size);
            }
            if let Some(p) = history {
                let mut w = io::output(Some(&p))?;
                write_history_csv(&mut w, &hist)?;
                w.flush()?;
            }
            let mut w = io::output(out.as_deref())?;
            write_control_csv(&mut w, &grid, &control)?;
            w.flush()?;
            Ok(())
        }
    }
}

pub fn bench_scaling(args: ScalingArgs) -> Result<(), Failure> {
    if args.batch_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage("--batch-sizes must be strictly ascending".into()));
    }
    let cfg = io::load_config(&args.sim)?;
    let records = run_scaling(&cfg, &args.batch_sizes, &args.modes, Some(args.budget_bytes))?;
    for r in &records {
        if r.status == ScalingStatus::OverBudget {
            stat(
                "over_budget",
                format!("particles={} mode={} required_bytes={}", r.particles, r.mode.name(), r.peak_path_bytes),
            );
        }
    }
    let mut w = io::output(args.out.as_deref())?;
    write_scaling_csv(&mut w, &records)?;
    w.flush()?;
    Ok(())
}
