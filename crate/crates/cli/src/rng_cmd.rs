use std::io::Write;
use std::path::PathBuf;

use clap::{Subcommand, ValueEnum};
use revmc::bench::bench_distribution;
use revmc::output::write_bench_csv;
use revmc::rng::{Direction, GeneratorState, StreamId};
use revmc::roundtrip::{roundtrip_all, Fault};
use revmc::sampling::{Distribution, Exponential};

use crate::{io, stat, Failure};

#[derive(Subcommand, Debug)]
pub enum RngCommand {
    /// Draws forward then backward and checks the samples mirror bit for bit.
    Roundtrip {
        #[arg(long, default_value_t = 1_000_000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corrupt the generator between the passes (negative control).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Min-of-50 timing of `count` draws per run.
    Bench {
        #[arg(long, value_enum, default_value_t = DistArg::Uniform)]
        dist: DistArg,
        /// Rate of the exponential distribution.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000,1000000")]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Raw little-endian 64-bit outputs on stdout.
    Stream {
        #[arg(long)]
        bytes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u128,
        #[arg(long, default_value_t = 0)]
        stream: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum DistArg {
    Uniform,
    Exponential,
    Normal,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModeArg {
    Forward,
    Reverse,
    Both,
}

pub fn run(cmd: RngCommand) -> Result<(), Failure> {
    match cmd {
        RngCommand::Roundtrip {
            count,
            seed,
            inject_fault,
        } => roundtrip(count, seed, inject_fault),
        RngCommand::Bench {
            dist,
            rate,
            mode,
            counts,
            seed,
            out,
        } => bench(dist, rate, mode, &counts, seed, out),
        RngCommand::Stream { bytes, seed, stream } => stream_bytes(bytes, seed, stream),
    }
}

fn roundtrip(count: usize, seed: u64, inject_fault: bool) -> Result<(), Failure> {
    if count == 0 {
        return Err(Failure::Usage("--count must be at least 1".into()));
    }
    let fault = inject_fault.then_some(Fault::FlipStateBit);
    match roundtrip_all(seed, count, fault) {
        Ok(()) => {
            stat("roundtrip", "ok");
            stat("count", count);
            Ok(())
        }
        Err(m) => {
            stat("roundtrip", "mismatch");
            stat("first_mismatch_index", m.index);
            Err(Failure::Verification(format!("first mismatch at {m}")))
        }
    }
}

fn bench(
    dist: DistArg,
    rate: f64,
    mode: ModeArg,
    counts: &[usize],
    seed: u64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    if let Some(&bad) = counts.iter().find(|&&k| !(1_000..=100_000_000).contains(&k)) {
        return Err(Failure::Usage(format!("count {bad} outside 1000..=100000000")));
    }
    let dist = match dist {
        DistArg::Uniform => Distribution::Uniform,
        DistArg::Normal => Distribution::Normal,
        DistArg::Exponential => {
            Distribution::Exponential(Exponential::new(rate).map_err(|e| Failure::Usage(e.to_string()))?)
        }
    };
    let dirs: &[Direction] = match mode {
        ModeArg::Forward => &[Direction::Forward],
        ModeArg::Reverse => &[Direction::Reverse],
        ModeArg::Both => &[Direction::Forward, Direction::Reverse],
    };
    let mut records = Vec::new();
    for &count in counts {
        records.extend(bench_distribution(dist, dirs, count, seed));
    }
    let mut w = io::output(out.as_deref())?;
    write_bench_csv(&mut w, &records)?;
    w.flush()?;
    Ok(())
}

fn stream_bytes(bytes: u64, seed: u128, stream: u64) -> Result<(), Failure> {
    if bytes == 0 {
        return Err(Failure::Usage("--bytes must be positive".into()));
    }
    let mut g = GeneratorState::seed(seed, StreamId(stream));
    let stdout = std::io::stdout();
    let mut w = std::io::BufWriter::with_capacity(1 << 16, stdout.lock());
    let mut left = bytes;
    let result = (|| -> std::io::Result<()> {
        while left > 0 {
            let word = g.next_u64().to_le_bytes();
            let n = left.min(8) as usize;
            w.write_all(&word[..n])?;
            left -= n as u64;
        }
        w.flush()
    })();
    match result {
        Ok(()) => Ok(()),
        // The reader went away: stop quietly, but report that the stream was cut short.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Err(Failure::Runtime(String::new())),
        Err(e) => Err(e.into()),
    }
}
