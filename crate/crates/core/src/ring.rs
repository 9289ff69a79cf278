//! Odd antiferromagnetic rings: spin configurations, domain walls, the
//! pinned-wall initial state and qubit fault injection.
//!
//! Edge `e` joins sites `e` and `e + 1 mod n`. With a positive coupling the
//! bond energy is `+J σz σz`, so an edge whose two spins are aligned is
//! frustrated; such an edge is a domain wall. On an odd ring the number of
//! walls is always odd.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Ring size, coupling, location of the pinned wall and faulty qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSpec {
    n: usize,
    j_programmed: f64,
    initial_wall_edge: usize,
    faulty_sites: BTreeSet<usize>,
}

impl RingSpec {
    pub fn new(n: usize, j_programmed: f64) -> Result<Self> {
        Self::with_options(n, j_programmed, 0, BTreeSet::new())
    }

    pub fn with_options(
        n: usize,
        j_programmed: f64,
        initial_wall_edge: usize,
        faulty_sites: BTreeSet<usize>,
    ) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "ring size must be odd and at least 3, got {n}"
            )));
        }
        if !(j_programmed > 0.0 && j_programmed <= 1.0) {
            return Err(Error::OutOfRange {
                what: "programmed coupling J",
                value: j_programmed,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if initial_wall_edge >= n {
            return Err(Error::InvalidParameter(format!(
                "initial wall edge {initial_wall_edge} outside ring of {n}"
            )));
        }
        if let Some(&bad) = faulty_sites.iter().find(|&&s| s >= n) {
            return Err(Error::InvalidParameter(format!(
                "faulty site {bad} outside ring of {n}"
            )));
        }
        Ok(RingSpec {
            n,
            j_programmed,
            initial_wall_edge,
            faulty_sites,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j_programmed(&self) -> f64 {
        self.j_programmed
    }

    pub fn initial_wall_edge(&self) -> usize {
        self.initial_wall_edge
    }

    pub fn faulty_sites(&self) -> &BTreeSet<usize> {
        &self.faulty_sites
    }
}

/// A Z-basis configuration, one `±1` per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!(
                "spin value {bad} is not ±1"
            )));
        }
        Ok(SpinConfig { spins })
    }

    /// Decodes a basis index: bit `i` set means site `i` points down.
    pub fn from_basis_index(index: u64, n: usize) -> Self {
        let spins = (0..n)
            .map(|i| if index >> i & 1 == 1 { -1 } else { 1 })
            .collect();
        SpinConfig { spins }
    }

    /// Inverse of [`SpinConfig::from_basis_index`]; `n ≤ 64`.
    pub fn basis_index(&self) -> u64 {
        debug_assert!(self.spins.len() <= 64);
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0u64, |acc, (i, _)| acc | 1 << i)
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn flipped(&self) -> Self {
        SpinConfig {
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }

    /// Shifts every spin `k` sites forward around the ring.
    pub fn rotated(&self, k: usize) -> Self {
        let n = self.spins.len();
        let mut spins = vec![0; n];
        for (i, &s) in self.spins.iter().enumerate() {
            spins[(i + k) % n] = s;
        }
        SpinConfig { spins }
    }

    /// Number of aligned (frustrated) edges.
    pub fn wall_count(&self) -> usize {
        let n = self.spins.len();
        (0..n)
            .filter(|&e| self.spins[e] == self.spins[(e + 1) % n])
            .count()
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .spins
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect();
        f.write_str(&s)
    }
}

impl FromStr for SpinConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spins = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::InvalidParameter(format!(
                    "spin character `{other}` is not + or -"
                ))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(SpinConfig { spins })
    }
}

impl Serialize for SpinConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Shared spin sign of a wall's two sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Wall {
    pub edge: usize,
    pub orientation: Orientation,
}

/// Walls of one configuration, in ascending edge order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WallSet {
    pub walls: Vec<Wall>,
}

impl WallSet {
    pub fn len(&self) -> usize {
        self.walls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walls.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.walls.iter().map(|w| w.edge)
    }
}

pub fn detect_walls(cfg: &SpinConfig) -> WallSet {
    let spins = cfg.spins();
    let n = spins.len();
    let walls = (0..n)
        .filter(|&e| spins[e] == spins[(e + 1) % n])
        .map(|e| Wall {
            edge: e,
            orientation: if spins[e] > 0 {
                Orientation::Up
            } else {
                Orientation::Down
            },
        })
        .collect();
    WallSet { walls }
}

/// Néel configuration with a single up-up wall on the ring's initial wall edge.
pub fn initial_state(spec: &RingSpec) -> SpinConfig {
    let n = spec.n();
    let e = spec.initial_wall_edge();
    let mut spins = vec![0i8; n];
    spins[e] = 1;
    // walk forward from e+1 alternating; odd n closes back onto spins[e] = +1
    for k in 0..n - 1 {
        spins[(e + 1 + k) % n] = if k % 2 == 0 { 1 } else { -1 };
    }
    SpinConfig { spins }
}

/// Replaces every faulty site's spin by an independent fair coin.
pub fn apply_faults<R: Rng + ?Sized>(cfg: &SpinConfig, spec: &RingSpec, rng: &mut R) -> SpinConfig {
    if spec.faulty_sites().is_empty() {
        return cfg.clone();
    }
    let mut out = cfg.clone();
    for &site in spec.faulty_sites() {
        out.spins[site] = if rng.gen::<bool>() { 1 } else { -1 };
    }
    out
}

pub fn hamming_distance(a: &SpinConfig, b: &SpinConfig) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.spins()
        .iter()
        .zip(b.spins())
        .filter(|(x, y)| x != y)
        .count())
}
