//! Plain-text instance dumps:
//!
//! ```text
//! mst-instance 1
//! d 2
//! n 1
//! seed 42
//! distribution uniform 0.0 1.0
//! edge -1,-1/0 0.7180264931217468
//! ...
//! ```
//!
//! `seed none` and `distribution explicit` mark hand-written weights. Edge
//! records may come in any order; weights are printed in shortest round-trip
//! form.

use std::fmt::Write;

use crate::error::{invalid, Result};
use crate::mst::lattice::{Edge, LatticeBox};
use crate::mst::weights::{HashedWeights, WeightEnvironment, WeightLaw, WeightSource};

const MAGIC: &str = "mst-instance 1";

pub fn dump_instance(env: &WeightEnvironment) -> String {
    let lattice = env.lattice();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "d {}", lattice.dimension());
    let _ = writeln!(out, "n {}", lattice.radius());
    match env.source() {
        WeightSource::Hashed(h) => {
            let _ = writeln!(out, "seed {}", h.seed);
            let _ = writeln!(out, "distribution {}", h.law);
        }
        WeightSource::Explicit => {
            let _ = writeln!(out, "seed none");
            let _ = writeln!(out, "distribution explicit");
        }
    }
    for (e, w) in lattice.edges().iter().zip(env.weights()) {
        let _ = writeln!(out, "edge {e} {w:?}");
    }
    out
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<&'a str> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| invalid(format!("instance ends before the {key:?} header")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .map(str::trim)
        .ok_or_else(|| invalid(format!("line {}: expected {key:?} header, got {line:?}", no + 1)))
}

/// Parse a dump. Weights in the records are authoritative; the environment
/// keeps its hashed source only when the records reproduce it exactly.
pub fn parse_instance(text: &str) -> Result<WeightEnvironment> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, MAGIC)) => {}
        other => return Err(invalid(format!("not an instance dump: first line {:?}", other.map(|o| o.1)))),
    }
    let d: usize = header(&mut lines, "d")?
        .parse()
        .map_err(|e| invalid(format!("dimension: {e}")))?;
    let n: usize = header(&mut lines, "n")?
        .parse()
        .map_err(|e| invalid(format!("radius: {e}")))?;
    let seed = match header(&mut lines, "seed")? {
        "none" => None,
        s => Some(s.parse::<u64>().map_err(|e| invalid(format!("seed: {e}")))?),
    };
    let law = match header(&mut lines, "distribution")? {
        "explicit" => None,
        s => Some(s.parse::<WeightLaw>()?),
    };
    let lattice = LatticeBox::new(d, n)?;
    let mut weights = vec![f64::NAN; lattice.edge_count()];
    for (no, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let ["edge", id, w] = parts.as_slice() else {
            return Err(invalid(format!("line {}: expected an edge record, got {line:?}", no + 1)));
        };
        let e: Edge = id.parse()?;
        let idx = lattice
            .edge_index(&e)
            .ok_or_else(|| invalid(format!("line {}: edge {e} is outside the box", no + 1)))?;
        if !weights[idx].is_nan() {
            return Err(invalid(format!("line {}: duplicate record for edge {e}", no + 1)));
        }
        weights[idx] = w
            .parse()
            .map_err(|err| invalid(format!("line {}: weight {w:?}: {err}", no + 1)))?;
    }
    if let Some(i) = weights.iter().position(|w| w.is_nan()) {
        return Err(invalid(format!("no weight recorded for edge {}", lattice.edge(i))));
    }
    if let (Some(seed), Some(law)) = (seed, law) {
        let hashed = HashedWeights::new(seed, law)?;
        let regenerated = WeightEnvironment::hashed(lattice.clone(), hashed)?;
        if regenerated.weights() == weights.as_slice() {
            return Ok(regenerated);
        }
    }
    WeightEnvironment::from_values(lattice, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let env = WeightEnvironment::hashed(
            LatticeBox::new(2, 2).unwrap(),
            HashedWeights::new(42, WeightLaw::Power { exponent: 3.0 }).unwrap(),
        )
        .unwrap();
        let text = dump_instance(&env);
        let back = parse_instance(&text).unwrap();
        assert_eq!(back.weights(), env.weights());
        assert_eq!(back.source(), env.source());
        assert_eq!(dump_instance(&back), text);

        let explicit = env.with_weight(0, 0.123).unwrap();
        let text = dump_instance(&explicit);
        assert!(text.contains("seed none"));
        let back = parse_instance(&text).unwrap();
        assert_eq!(back.weights(), explicit.weights());
    }

    #[test]
    fn malformed_dumps_rejected() {
        let env = WeightEnvironment::hashed(
            LatticeBox::new(2, 1).unwrap(),
            HashedWeights::new(1, WeightLaw::default()).unwrap(),
        )
        .unwrap();
        let text = dump_instance(&env);
        let missing: String = text.lines().filter(|l| !l.starts_with("edge 0,0/0")).map(|l| format!("{l}\n")).collect();
        assert!(parse_instance(&missing).is_err());
        let dup = format!("{text}edge 0,0/0 0.5\n");
        assert!(parse_instance(&dup).is_err());
        assert!(parse_instance(&text.replace("mst-instance 1", "mst-instance 2")).is_err());
        assert!(parse_instance(&text.replace("edge 0,0/0", "edge 5,0/0")).is_err());
    }
}
