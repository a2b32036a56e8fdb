//! Seeded random topology generators.
//!
//! Every generator is a pure function of `(n, seed)`: the seed initializes a ChaCha8 stream and
//! rejected (not two-connected) samples simply consume more of that stream.
//!
//! Link weights are drawn on a dyadic grid `k / 2^32` with `1 <= k < 2^32`. Sums of such weights
//! are exact in `f64` for any realistic path length, so distances do not depend on the order in
//! which a shortest-path engine adds them up.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_two_connected, Link, Topology};
use crate::error::{Error, Result};

/// Rejection-sampling budget used when none is given.
pub const DEFAULT_RETRIES: usize = 10_000;

const WEIGHT_SCALE: u64 = 1 << 32;

/// Uniform weight in the open interval (0, 1).
fn random_weight(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(1..WEIGHT_SCALE) as f64 / WEIGHT_SCALE as f64
}

/// Rounds a non-negative real onto the weight grid, keeping it strictly positive.
fn quantize(x: f64) -> f64 {
    let k = (x * WEIGHT_SCALE as f64).round().max(1.0);
    k / WEIGHT_SCALE as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorKind {
    ErdosRenyi,
    Lattice,
    Waxman,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::ErdosRenyi => "erdos-renyi",
            GeneratorKind::Lattice => "lattice",
            GeneratorKind::Waxman => "waxman",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "er" | "erdos-renyi" | "erdos_renyi" => Ok(GeneratorKind::ErdosRenyi),
            "lattice" | "grid" => Ok(GeneratorKind::Lattice),
            "waxman" => Ok(GeneratorKind::Waxman),
            _ => Err(Error::Syntax {
                what: "network kind",
                input: s.to_string(),
            }),
        }
    }
}

/// Dispatches to the generator for `kind`.
pub fn generate(kind: GeneratorKind, n: usize, seed: u64, retries: usize) -> Result<Topology> {
    match kind {
        GeneratorKind::ErdosRenyi => erdos_renyi_with_retries(n, seed, retries),
        GeneratorKind::Lattice => generate_lattice(n, seed),
        GeneratorKind::Waxman => waxman_with_retries(n, seed, retries),
    }
}

/// Link probability `2 ln(n) / n`.
pub(crate) fn erdos_renyi_probability(n: usize) -> f64 {
    (2.0 * (n as f64).ln() / n as f64).min(1.0)
}

/// Erdős–Rényi graph with link probability `2 ln(n) / n` and uniform (0,1) weights, resampled
/// until two-connected.
pub fn generate_erdos_renyi(n: usize, seed: u64) -> Result<Topology> {
    erdos_renyi_with_retries(n, seed, DEFAULT_RETRIES)
}

fn erdos_renyi_with_retries(n: usize, seed: u64, retries: usize) -> Result<Topology> {
    if n < 3 {
        return Err(Error::TooFewNodes {
            kind: "erdos-renyi",
            n,
            min: 3,
        });
    }
    let p = erdos_renyi_probability(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..retries {
        let mut links = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    links.push(Link::new(u, v, random_weight(&mut rng)));
                }
            }
        }
        let t = Topology::new(n, links)?;
        if is_two_connected(&t) {
            return Ok(t);
        }
    }
    Err(Error::RetriesExhausted {
        kind: "erdos-renyi",
        n,
        attempts: retries,
    })
}

/// `i x i` grid (`i = sqrt(n)`) with horizontal and vertical links only and uniform (0,1)
/// weights. Node `r * i + c` sits in row `r`, column `c`.
pub fn generate_lattice(n: usize, seed: u64) -> Result<Topology> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n || side < 3 {
        return Err(Error::NotSquare(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Vec::with_capacity(2 * side * (side - 1));
    for r in 0..side {
        for c in 0..side {
            let id = r * side + c;
            if c + 1 < side {
                links.push(Link::new(id, id + 1, random_weight(&mut rng)));
            }
            if r + 1 < side {
                links.push(Link::new(id, id + side, random_weight(&mut rng)));
            }
        }
    }
    Topology::new(n, links)
}

/// One unconditioned Waxman draw, with the per-pair decisions kept for inspection.
#[derive(Debug, Clone)]
pub(crate) struct WaxmanSample {
    pub topology: Topology,
    #[cfg_attr(not(test), allow(dead_code))]
    pub max_distance: f64,
    /// `(euclidean distance, accepted)` for every unordered pair.
    #[cfg_attr(not(test), allow(dead_code))]
    pub pairs: Vec<(f64, bool)>,
}

pub(crate) fn waxman_attempt(n: usize, rng: &mut ChaCha8Rng) -> Result<WaxmanSample> {
    const ALPHA: f64 = 0.5;
    const BETA: f64 = 0.5;

    let pos: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let dist = |a: usize, b: usize| {
        let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
        (dx * dx + dy * dy).sqrt()
    };
    let mut max_distance = 0.0f64;
    for u in 0..n {
        for v in u + 1..n {
            max_distance = max_distance.max(dist(u, v));
        }
    }
    let mut links = Vec::new();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            let d = dist(u, v);
            let p = if max_distance > 0.0 {
                ALPHA * (-d / (BETA * max_distance)).exp()
            } else {
                ALPHA
            };
            let accepted = rng.gen_bool(p);
            if accepted {
                links.push(Link::new(u, v, quantize(d)));
            }
            pairs.push((d, accepted));
        }
    }
    Ok(WaxmanSample {
        topology: Topology::new(n, links)?,
        max_distance,
        pairs,
    })
}

/// Waxman graph on the unit square: link probability `0.5 * exp(-d / (0.5 * a))` with `a` the
/// largest pairwise distance, link weight = euclidean distance; resampled until two-connected.
pub fn generate_waxman(n: usize, seed: u64) -> Result<Topology> {
    waxman_with_retries(n, seed, DEFAULT_RETRIES)
}

fn waxman_with_retries(n: usize, seed: u64, retries: usize) -> Result<Topology> {
    if n < 3 {
        return Err(Error::TooFewNodes {
            kind: "waxman",
            n,
            min: 3,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..retries {
        let sample = waxman_attempt(n, &mut rng)?;
        if is_two_connected(&sample.topology) {
            return Ok(sample.topology);
        }
    }
    Err(Error::RetriesExhausted {
        kind: "waxman",
        n,
        attempts: retries,
    })
}
