//! Bijective relabelings of time bins as M-bit labels.
//!
//! A good map for the local-global channel keeps neighbouring bins close in
//! Hamming distance and spreads the bit flips caused by neighbouring-bin
//! errors evenly over the bit levels, rather than concentrating them on the
//! least significant bit as the reflected Gray code does.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::TransitionTable;
use crate::error::{parse_err, usage, Error, Result};

pub const MIN_BITS: u8 = 2;
pub const MAX_BITS: u8 = 12;

/// The balanced M = 4 table, bins 0..15 in order.
const BALANCED_4: [u16; 16] = [
    0b0000, 0b0001, 0b0011, 0b0111, 0b1111, 0b1110, 0b1100, 0b1000, 0b1001, 0b1011, 0b1010,
    0b0010, 0b0110, 0b0100, 0b0101, 0b1101,
];

const ANNEAL_SEED: u64 = 0x5eed_ba1a_9ced;

/// Which labelling to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Identity,
    Gray,
    Balanced,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Scheme::Identity),
            "gray" => Ok(Scheme::Gray),
            "balanced" => Ok(Scheme::Balanced),
            other => Err(usage(format!(
                "unknown modulation {other:?} (expected identity, gray or balanced)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Identity => "identity",
            Scheme::Gray => "gray",
            Scheme::Balanced => "balanced",
        })
    }
}

/// Bijection between bin indices and labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModulationMap {
    bits: u8,
    forward: Vec<u16>,
    inverse: Vec<u16>,
}

fn check_bits(bits: u8) -> Result<()> {
    if !(MIN_BITS..=MAX_BITS).contains(&bits) {
        return Err(Error::Parameter(format!(
            "bits per symbol {bits} outside {MIN_BITS}..={MAX_BITS}"
        )));
    }
    Ok(())
}

impl ModulationMap {
    /// Wraps a bin -> label table, checking that it is a bijection.
    pub fn from_forward(bits: u8, forward: Vec<u16>) -> Result<Self> {
        let n = 1usize << bits;
        if bits > MAX_BITS || forward.len() != n {
            return Err(usage(format!(
                "a {bits}-bit map needs {n} entries, got {}",
                forward.len()
            )));
        }
        let mut inverse = vec![u16::MAX; n];
        for (bin, &label) in forward.iter().enumerate() {
            let slot = inverse
                .get_mut(label as usize)
                .ok_or_else(|| usage(format!("label {label} out of range")))?;
            if *slot != u16::MAX {
                return Err(usage(format!("label {label} assigned twice")));
            }
            *slot = bin as u16;
        }
        Ok(Self {
            bits,
            forward,
            inverse,
        })
    }

    pub fn identity(bits: u8) -> Result<Self> {
        check_bits(bits)?;
        Self::from_forward(bits, (0..1u16 << bits).collect())
    }

    pub fn build(scheme: Scheme, bits: u8) -> Result<Self> {
        match scheme {
            Scheme::Identity => Self::identity(bits),
            Scheme::Gray => gray_map(bits),
            Scheme::Balanced => balanced_map(bits),
        }
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn size(&self) -> usize {
        self.forward.len()
    }

    #[inline]
    pub fn label(&self, bin: usize) -> u16 {
        self.forward[bin]
    }

    #[inline]
    pub fn bin(&self, label: usize) -> u16 {
        self.inverse[label]
    }

    pub fn forward(&self) -> &[u16] {
        &self.forward
    }

    /// One `bin label-bits` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (bin, label) in self.forward.iter().enumerate() {
            let _ = writeln!(out, "{bin} {:0w$b}", label, w = self.bits as usize);
        }
        out
    }

    /// Parses the format written by [`ModulationMap::to_text`]. Blank lines
    /// and `#` comments are ignored; bins may appear in any order.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut bits = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(b), Some(l), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err(idx + 1, "expected `bin label-bits`"));
            };
            let bin: usize = b
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("bad bin index {b:?}")))?;
            if l.is_empty() || l.len() > MAX_BITS as usize || l.chars().any(|c| c != '0' && c != '1') {
                return Err(parse_err(idx + 1, format!("bad label {l:?}")));
            }
            match bits {
                None => bits = Some(l.len()),
                Some(w) if w != l.len() => {
                    return Err(parse_err(idx + 1, "labels of different widths"))
                }
                _ => {}
            }
            let label = u16::from_str_radix(l, 2).expect("validated binary string");
            entries.push((bin, label));
        }
        let bits = bits.ok_or_else(|| parse_err(0, "empty map"))? as u8;
        let n = 1usize << bits;
        let mut forward = vec![u16::MAX; n];
        for (bin, label) in entries {
            let slot = forward
                .get_mut(bin)
                .ok_or_else(|| usage(format!("bin {bin} out of range for {bits} bits")))?;
            if *slot != u16::MAX {
                return Err(usage(format!("bin {bin} listed twice")));
            }
            *slot = label;
        }
        if forward.contains(&u16::MAX) {
            return Err(usage("map does not list every bin"));
        }
        Self::from_forward(bits, forward)
    }
}

/// Binary-reflected Gray code.
pub fn gray_map(bits: u8) -> Result<ModulationMap> {
    check_bits(bits)?;
    ModulationMap::from_forward(bits, (0..1u16 << bits).map(|b| b ^ (b >> 1)).collect())
}

/// Balanced map: the fixed table for 4 bits, otherwise the result of a
/// seeded annealing search (see [`anneal_balanced`]).
pub fn balanced_map(bits: u8) -> Result<ModulationMap> {
    check_bits(bits)?;
    if bits == 4 {
        return ModulationMap::from_forward(4, BALANCED_4.to_vec());
    }
    let start = gray_map(bits)?.forward;
    let iterations = (40_000usize * bits as usize) << bits.min(6);
    ModulationMap::from_forward(bits, anneal_balanced(bits, start, iterations, ANNEAL_SEED))
}

/// Per-level statistics over the bin-ordered label sequence. Adjacency is
/// non-cyclic: bins `0` and `2^M - 1` are not neighbours.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunMetrics {
    /// Maximal constant runs in each level's bit string, level 1 (MSB) first.
    pub runs: Vec<usize>,
    /// Adjacent bin pairs whose labels differ in each level.
    pub transitions: Vec<usize>,
    /// Sum of Hamming distances over adjacent bin pairs.
    pub total_hamming: usize,
}

impl RunMetrics {
    pub fn max_transitions(&self) -> usize {
        self.transitions.iter().copied().max().unwrap_or(0)
    }

    pub fn lsb_transitions(&self) -> usize {
        *self.transitions.last().expect("at least one level")
    }
}

fn level_transitions(bits: u8, seq: &[u16]) -> Vec<usize> {
    let mut counts = vec![0usize; bits as usize];
    for pair in seq.windows(2) {
        let diff = pair[0] ^ pair[1];
        for (l, c) in counts.iter_mut().enumerate() {
            *c += ((diff >> (bits as usize - 1 - l)) & 1) as usize;
        }
    }
    counts
}

pub fn run_metrics(map: &ModulationMap) -> RunMetrics {
    let transitions = level_transitions(map.bits, &map.forward);
    RunMetrics {
        runs: transitions.iter().map(|t| t + 1).collect(),
        total_hamming: transitions.iter().sum(),
        transitions,
    }
}

/// Exact per-bit error probabilities under `table`, averaged over a
/// uniformly distributed conditioning bin.
pub fn predicted_bit_error_split(map: &ModulationMap, table: &TransitionTable) -> Result<Vec<f64>> {
    if map.bits() != table.bits() {
        return Err(usage(format!(
            "map has {} bits but channel has {}",
            map.bits(),
            table.bits()
        )));
    }
    let n = map.size();
    let bits = map.bits() as usize;
    let mut out = vec![0.0; bits];
    for y in 0..n {
        let ly = map.label(y);
        for (x, &p) in table.row(y).iter().enumerate() {
            let diff = ly ^ map.label(x);
            if diff == 0 {
                continue;
            }
            for (l, o) in out.iter_mut().enumerate() {
                if (diff >> (bits - 1 - l)) & 1 == 1 {
                    *o += p;
                }
            }
        }
    }
    out.iter_mut().for_each(|o| *o /= n as f64);
    Ok(out)
}

/// Lexicographic objective: worst level first, then total Hamming weight.
fn objective(counts: &[usize]) -> (usize, usize) {
    (
        counts.iter().copied().max().unwrap_or(0),
        counts.iter().sum(),
    )
}

/// Simulated annealing over label orderings whose consecutive labels are at
/// Hamming distance at most 2. Moves are segment reversals; the annealed
/// energy is the sum of squared per-level transition counts plus the total
/// Hamming weight, and the best ordering under `(max level count, total)` is
/// returned. `start` must itself satisfy the distance constraint.
pub fn anneal_balanced(bits: u8, start: Vec<u16>, iterations: usize, seed: u64) -> Vec<u16> {
    let n = start.len();
    let b = bits as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq = start;
    let mut counts = level_transitions(bits, &seq);
    let energy = |c: &[usize]| -> f64 {
        c.iter().map(|&x| (x * x) as f64).sum::<f64>() + c.iter().sum::<usize>() as f64
    };
    let mut cur_e = energy(&counts);
    let mut best = seq.clone();
    let mut best_obj = objective(&counts);

    let t0 = (n as f64).max(4.0);
    let t1 = 0.05;
    let mut delta = vec![0isize; b];
    for it in 0..iterations {
        let temp = t0 * (t1 / t0).powf(it as f64 / iterations.max(1) as f64);
        let mut i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        // Reversing seq[i..=j] replaces the pairs (i-1, i) and (j, j+1) by
        // (i-1, j) and (i, j+1).
        if i > 0 && (seq[i - 1] ^ seq[j]).count_ones() > 2 {
            continue;
        }
        if j + 1 < n && (seq[i] ^ seq[j + 1]).count_ones() > 2 {
            continue;
        }
        delta.iter_mut().for_each(|d| *d = 0);
        let mut account = |a: u16, c: u16, s: isize| {
            let diff = a ^ c;
            for (l, d) in delta.iter_mut().enumerate() {
                if (diff >> (b - 1 - l)) & 1 == 1 {
                    *d += s;
                }
            }
        };
        if i > 0 {
            account(seq[i - 1], seq[i], -1);
            account(seq[i - 1], seq[j], 1);
        }
        if j + 1 < n {
            account(seq[j], seq[j + 1], -1);
            account(seq[i], seq[j + 1], 1);
        }
        let new_counts: Vec<usize> = counts
            .iter()
            .zip(&delta)
            .map(|(&c, &d)| (c as isize + d) as usize)
            .collect();
        let new_e = energy(&new_counts);
        let accept = new_e <= cur_e || rng.random::<f64>() < ((cur_e - new_e) / temp).exp();
        if accept {
            seq[i..=j].reverse();
            counts = new_counts;
            cur_e = new_e;
            let obj = objective(&counts);
            if obj < best_obj {
                best_obj = obj;
                best.copy_from_slice(&seq);
            }
        }
    }
    best
}
