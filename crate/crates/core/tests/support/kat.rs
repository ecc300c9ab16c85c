//! Known-answer vectors of the reference 128-bit PCG (XSL-RR 128/64).

/// `(seed, stream, first ten outputs)` from the committed fixture.
pub fn load() -> Vec<(u128, u64, Vec<u64>)> {
    let text = include_str!("../fixtures/pcg_kat.txt");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut parts = l.split_whitespace();
            let seed = u128::from_str_radix(parts.next().unwrap(), 16).unwrap();
            let stream = u64::from_str_radix(parts.next().unwrap(), 16).unwrap();
            let outs = parts.map(|v| u64::from_str_radix(v, 16).unwrap()).collect();
            (seed, stream, outs)
        })
        .collect()
}
