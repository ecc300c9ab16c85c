use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use revmc::heat::{Control, SimConfig};

use crate::{Failure, SimArgs};

/// Buffered writer to `path`, or stdout when absent.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn load_config(args: &SimArgs) -> Result<SimConfig<f64>, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            SimConfig::from_ini_str(&text)?
        }
        None if args.desk => SimConfig::desk(),
        None => SimConfig::default(),
    };
    if let Some(p) = args.particles {
        cfg.particles = p;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads the `u` column of a control CSV (as written by `heat optimize`).
pub fn load_control(path: &Path, cells: usize) -> Result<Control<f64>, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let col = header
        .split(',')
        .position(|h| h.trim() == "u")
        .ok_or_else(|| Failure::Usage(format!("{}: no `u` column", path.display())))?;
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .nth(col)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Failure::Usage(format!("{}: bad row {l:?}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != cells {
        return Err(Failure::Usage(format!(
            "{}: {} control values for {cells} cells",
            path.display(),
            values.len()
        )));
    }
    Ok(Control::new(values))
}
