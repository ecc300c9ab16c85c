//! Forward-then-reverse mirror check for the samplers.

use crate::rng::{Direction, GeneratorState, StreamId};
use crate::sampling::{Distribution, Exponential};

/// Deliberate corruption for exercising the failure path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Flip the lowest state bit between the forward and the reverse pass.
    FlipStateBit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub distribution: String,
    /// Forward index of the first sample whose reverse replay differs.
    pub index: usize,
    pub forward: f64,
    pub reverse: f64,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: sample {} forward={:e} reverse={:e}",
            self.distribution, self.index, self.forward, self.reverse
        )
    }
}

/// The four samplers checked by [`roundtrip_all`].
pub fn roundtrip_distributions() -> Vec<(String, Distribution)> {
    let exp = |r| Distribution::Exponential(Exponential::new(r).expect("positive rate"));
    vec![
        ("uniform".to_string(), Distribution::Uniform),
        ("exponential(1)".to_string(), exp(1.0)),
        ("exponential(2.5)".to_string(), exp(2.5)),
        ("normal".to_string(), Distribution::Normal),
    ]
}

/// Draws `count` samples forward, then `count` in reverse, and checks that the
/// reverse sequence is the forward one reversed, bit for bit, and that the
/// generator ends where it started.
pub fn verify_roundtrip(
    name: &str,
    dist: Distribution,
    seed: u64,
    count: usize,
    fault: Option<Fault>,
) -> Result<(), Mismatch> {
    let start = GeneratorState::seed(seed as u128, StreamId(seed));
    let mut g = start;
    let forward: Vec<f64> = (0..count).map(|_| dist.sample(&mut g, Direction::Forward)).collect();
    if fault == Some(Fault::FlipStateBit) {
        g = GeneratorState::from_parts(g.state() ^ 1, g.increment());
    }
    for (j, &fwd) in forward.iter().enumerate().rev() {
        let rev = dist.sample(&mut g, Direction::Reverse);
        if rev.to_bits() != fwd.to_bits() {
            return Err(Mismatch {
                distribution: name.to_string(),
                index: j,
                forward: fwd,
                reverse: rev,
            });
        }
    }
    if g != start {
        return Err(Mismatch {
            distribution: name.to_string(),
            index: count,
            forward: f64::NAN,
            reverse: f64::NAN,
        });
    }
    Ok(())
}

/// [`verify_roundtrip`] for every distribution of [`roundtrip_distributions`].
pub fn roundtrip_all(seed: u64, count: usize, fault: Option<Fault>) -> Result<(), Mismatch> {
    for (name, dist) in roundtrip_distributions() {
        verify_roundtrip(&name, dist, seed, count, fault)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts_mirror() {
        roundtrip_all(7, 1, None).unwrap();
        roundtrip_all(7, 5000, None).unwrap();
    }

    #[test]
    fn fault_is_reported_at_last_sample() {
        let err = roundtrip_all(7, 100, Some(Fault::FlipStateBit)).unwrap_err();
        assert_eq!(err.distribution, "uniform");
        assert_eq!(err.index, 99);
    }
}
