//! The local-global discrete channel: a Gaussian kernel on bin distance for
//! timing jitter plus a uniform floor for losses and stray detections,
//! `P(x | y) = c * exp(-d(x, y)^2 / sigma) + beta`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{parse_err, usage, Error, Result};
use crate::modulation::{ModulationMap, MAX_BITS, MIN_BITS};

/// Probabilities below this are clamped before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-300;

/// How bin distance treats the frame edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    /// `d(x, y) = min(|x - y|, 2^M - |x - y|)`.
    #[default]
    Cyclic,
    /// `d(x, y) = |x - y|`.
    Truncated,
}

impl Boundary {
    #[inline]
    pub fn distance(self, x: usize, y: usize, n: usize) -> usize {
        let d = x.abs_diff(y);
        match self {
            Boundary::Cyclic => d.min(n - d),
            Boundary::Truncated => d,
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cyclic" => Ok(Boundary::Cyclic),
            "truncated" => Ok(Boundary::Truncated),
            other => Err(usage(format!(
                "unknown boundary {other:?} (expected cyclic or truncated)"
            ))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Cyclic => "cyclic",
            Boundary::Truncated => "truncated",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub bits: u8,
    /// Local Gaussian strength in squared-bin units.
    pub sigma: f64,
    /// Uniform floor per (x, y) pair.
    pub beta: f64,
    pub boundary: Boundary,
}

impl ChannelParams {
    pub fn new(bits: u8, sigma: f64, beta: f64, boundary: Boundary) -> Result<Self> {
        let p = Self {
            bits,
            sigma,
            beta,
            boundary,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_BITS..=MAX_BITS).contains(&self.bits) {
            return Err(Error::Parameter(format!(
                "bits per symbol {} outside {MIN_BITS}..={MAX_BITS}",
                self.bits
            )));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::Parameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::Parameter(format!("beta must be non-negative, got {}", self.beta)));
        }
        let mass = self.beta * (1u64 << self.bits) as f64;
        if mass > 1.0 + 1e-12 {
            return Err(Error::Parameter(format!(
                "uniform mass 2^M * beta = {mass} exceeds 1"
            )));
        }
        Ok(())
    }
}

/// Row-stochastic table `P(X = x | Y = y)`, row `y`, column `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionTable {
    bits: u8,
    probs: Vec<f64>,
}

impl TransitionTable {
    /// Wraps explicit rows, checking shape, sign and normalization.
    pub fn from_rows(bits: u8, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = 1usize << bits;
        if bits > MAX_BITS || rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(usage(format!("a {bits}-bit table must be {n}x{n}")));
        }
        for (y, r) in rows.iter().enumerate() {
            if r.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::Parameter(format!("row {y} has a negative or non-finite entry")));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Parameter(format!("row {y} sums to {s}")));
            }
        }
        Ok(Self {
            bits,
            probs: rows.concat(),
        })
    }

    /// Channel whose only errors move a symbol to a neighbouring bin
    /// (non-cyclic): interior rows keep `1 - eps` and give `eps / 2` to each
    /// neighbour, edge rows give `eps / 2` to their single neighbour.
    pub fn adjacent_only(bits: u8, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Parameter(format!("eps {eps} outside [0, 1]")));
        }
        let n = 1usize << bits;
        let rows = (0..n)
            .map(|y| {
                let mut r = vec![0.0; n];
                if y > 0 {
                    r[y - 1] = eps / 2.0;
                }
                if y + 1 < n {
                    r[y + 1] = eps / 2.0;
                }
                r[y] = 1.0 - r.iter().sum::<f64>();
                r
            })
            .collect();
        Self::from_rows(bits, rows)
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn size(&self) -> usize {
        1 << self.bits
    }

    /// `P(X = x | Y = y)`.
    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[y * self.size() + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        let n = self.size();
        &self.probs[y * n..(y + 1) * n]
    }

    /// Draws the other party's bin given `x`, reading row `x` as the
    /// conditional distribution. For the cyclic kernel the table is
    /// symmetric so this is the same law in either direction.
    pub fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let row = self.row(x);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = x;
        for (y, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = y;
                if u < acc {
                    return y;
                }
            }
        }
        last
    }
}

/// Builds the normalized table for `params`. The Gaussian weight of each
/// row is scaled so that it carries exactly `1 - 2^M * beta`.
pub fn build_transition_table(params: &ChannelParams) -> Result<TransitionTable> {
    params.validate()?;
    let n = 1usize << params.bits;
    let beta = params.beta.min(1.0 / n as f64);
    let gauss_mass = (1.0 - beta * n as f64).max(0.0);
    let mut probs = Vec::with_capacity(n * n);
    for y in 0..n {
        let kernel: Vec<f64> = (0..n)
            .map(|x| {
                let d = params.boundary.distance(x, y, n) as f64;
                (-(d * d) / params.sigma).exp()
            })
            .collect();
        let z: f64 = kernel.iter().sum();
        let c = gauss_mass / z;
        probs.extend(kernel.into_iter().map(|k| c * k + beta));
    }
    Ok(TransitionTable {
        bits: params.bits,
        probs,
    })
}

/// `sample_output` as a free function.
pub fn sample_output<R: Rng + ?Sized>(x: usize, table: &TransitionTable, rng: &mut R) -> usize {
    table.sample(x, rng)
}

/// Channel LLR vector for received bin `y`, indexed by label difference `t`:
/// `log P(X = bin(label(y) ^ t) | y) - log P(X = y | y)`.
pub fn channel_llr(y: usize, table: &TransitionTable, map: &ModulationMap) -> Result<Vec<f64>> {
    if map.bits() != table.bits() {
        return Err(usage(format!(
            "map has {} bits but channel has {}",
            map.bits(),
            table.bits()
        )));
    }
    let n = table.size();
    if y >= n {
        return Err(usage(format!("bin {y} out of range")));
    }
    let ly = map.label(y) as usize;
    let base = table.prob(y, y).max(PROB_FLOOR).ln();
    Ok((0..n)
        .map(|t| {
            if t == 0 {
                return 0.0;
            }
            let x = map.bin(ly ^ t) as usize;
            table.prob(x, y).max(PROB_FLOOR).ln() - base
        })
        .collect())
}

/// Channel LLR vectors for every received label, computed once per
/// (table, map) pair and shared by all frames.
#[derive(Clone, Debug)]
pub struct ChannelLlrTable {
    bits: u8,
    by_label: Vec<f64>,
}

impl ChannelLlrTable {
    pub fn new(table: &TransitionTable, map: &ModulationMap) -> Result<Self> {
        let n = table.size();
        let mut by_label = vec![0.0; n * n];
        for label in 0..n {
            let y = map.bin(label) as usize;
            by_label[label * n..(label + 1) * n].copy_from_slice(&channel_llr(y, table, map)?);
        }
        Ok(Self {
            bits: table.bits(),
            by_label,
        })
    }

    /// Builds a table directly from per-label vectors (entry 0 must be 0).
    pub fn from_vectors(bits: u8, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let n = 1usize << bits;
        if vectors.len() != n || vectors.iter().any(|v| v.len() != n || v[0] != 0.0) {
            return Err(usage("need 2^M vectors of length 2^M with zero first entry"));
        }
        Ok(Self {
            bits,
            by_label: vectors.concat(),
        })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    #[inline]
    pub fn for_label(&self, label: usize) -> &[f64] {
        let n = 1usize << self.bits;
        &self.by_label[label * n..(label + 1) * n]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStats {
    /// Average over `y` of `1 - P(x = y | y)`.
    pub raw_symbol_error_rate: f64,
    /// Per-level bit error probability under the modulation, level 1 first.
    pub per_bit_error_rate: Vec<f64>,
}

pub fn raw_error_stats(table: &TransitionTable, map: &ModulationMap) -> Result<ChannelStats> {
    let n = table.size();
    let ser = (0..n).map(|y| 1.0 - table.prob(y, y)).sum::<f64>() / n as f64;
    Ok(ChannelStats {
        raw_symbol_error_rate: ser.clamp(0.0, 1.0),
        per_bit_error_rate: crate::modulation::predicted_bit_error_split(map, table)?,
    })
}

/// Counts of signed bin offsets `x - y`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OffsetHistogram {
    pub counts: Vec<(i64, u64)>,
}

impl OffsetHistogram {
    pub fn from_offsets(offsets: impl IntoIterator<Item = i64>) -> Self {
        let mut map = std::collections::BTreeMap::new();
        for o in offsets {
            *map.entry(o).or_insert(0u64) += 1;
        }
        Self {
            counts: map.into_iter().collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    /// One `offset count` pair per line; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut counts = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(o), Some(c), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err(idx + 1, "expected `offset count`"));
            };
            let o: i64 = o
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("bad offset {o:?}")))?;
            let c: u64 = c
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("bad count {c:?}")))?;
            counts.push((o, c));
        }
        if counts.is_empty() {
            return Err(parse_err(0, "histogram is empty"));
        }
        Ok(Self { counts })
    }

    pub fn to_text(&self) -> String {
        self.counts.iter().map(|(o, c)| format!("{o} {c}\n")).collect()
    }
}

/// Search interval for sigma.
pub const FIT_SIGMA_MIN: f64 = 1e-3;
const FIT_REL_TOL: f64 = 1e-6;
const FIT_GRID: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub params: ChannelParams,
    /// Share of probability mass carried by the Gaussian component.
    pub gaussian_weight: f64,
    pub log_likelihood: f64,
    /// Total variation distance between the empirical and fitted offset laws.
    pub tv_distance: f64,
    /// All observations fell on a single offset; sigma sits at the lower bound.
    pub degenerate: bool,
    pub samples: u64,
}

/// Offset-distance model for the cyclic channel with a uniform input.
struct OffsetModel {
    n: usize,
    /// Observations per cyclic distance class `0..=n/2`.
    counts: Vec<f64>,
    /// Number of offsets in each class.
    mult: Vec<f64>,
}

impl OffsetModel {
    fn new(hist: &OffsetHistogram, bits: u8) -> Self {
        let n = 1usize << bits;
        let classes = n / 2 + 1;
        let mut counts = vec![0.0; classes];
        for &(o, c) in &hist.counts {
            let d = o.rem_euclid(n as i64) as usize;
            counts[d.min(n - d)] += c as f64;
        }
        let mult = (0..classes)
            .map(|d| if d == 0 || 2 * d == n { 1.0 } else { 2.0 })
            .collect();
        Self { n, counts, mult }
    }

    /// Normalized Gaussian probability of a single offset in each class.
    fn gauss(&self, sigma: f64) -> Vec<f64> {
        let k: Vec<f64> = (0..self.counts.len())
            .map(|d| (-((d * d) as f64) / sigma).exp())
            .collect();
        let z: f64 = k.iter().zip(&self.mult).map(|(a, m)| a * m).sum();
        k.into_iter().map(|a| a / z).collect()
    }

    fn loglik(&self, g: &[f64], w: f64) -> f64 {
        let u = 1.0 / self.n as f64;
        self.counts
            .iter()
            .zip(g)
            .filter(|(&c, _)| c > 0.0)
            .map(|(&c, &gd)| c * ((1.0 - w) * gd + w * u).max(PROB_FLOOR).ln())
            .sum()
    }

    /// Maximizes the (concave) likelihood in the uniform weight by bisection
    /// on its derivative.
    fn best_weight(&self, g: &[f64]) -> f64 {
        let u = 1.0 / self.n as f64;
        let deriv = |w: f64| -> f64 {
            self.counts
                .iter()
                .zip(g)
                .filter(|(&c, _)| c > 0.0)
                .map(|(&c, &gd)| c * (u - gd) / ((1.0 - w) * gd + w * u).max(PROB_FLOOR))
                .sum()
        };
        if deriv(0.0) <= 0.0 {
            return 0.0;
        }
        if deriv(1.0) >= 0.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if deriv(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn profile(&self, log_sigma: f64) -> (f64, f64) {
        let g = self.gauss(log_sigma.exp());
        let w = self.best_weight(&g);
        (self.loglik(&g, w), w)
    }
}

/// Maximum-likelihood fit of `(sigma, beta)` to an offset histogram under
/// the cyclic channel with `bits` bits per symbol.
///
/// The uniform weight is maximized exactly for each sigma; sigma itself is
/// located by a log-spaced grid scan followed by golden-section refinement
/// to a relative tolerance of 1e-6.
pub fn fit_channel(hist: &OffsetHistogram, bits: u8) -> Result<FitResult> {
    if !(MIN_BITS..=MAX_BITS).contains(&bits) {
        return Err(Error::Parameter(format!("bits per symbol {bits} outside {MIN_BITS}..={MAX_BITS}")));
    }
    let total = hist.total();
    if total == 0 {
        return Err(usage("histogram has no observations"));
    }
    let model = OffsetModel::new(hist, bits);
    let n = model.n;
    let lo = FIT_SIGMA_MIN.ln();
    let hi = ((n * n) as f64).ln();
    let degenerate = hist.counts.iter().filter(|&&(_, c)| c > 0).count() == 1;

    let log_sigma = if degenerate {
        lo
    } else {
        let step = (hi - lo) / (FIT_GRID - 1) as f64;
        let grid: Vec<f64> = (0..FIT_GRID).map(|i| lo + step * i as f64).collect();
        let best = grid
            .iter()
            .enumerate()
            .map(|(i, &s)| (i, model.profile(s).0))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        let mut a = grid[best.saturating_sub(1)];
        let mut b = grid[(best + 1).min(FIT_GRID - 1)];
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = model.profile(c).0;
        let mut fd = model.profile(d).0;
        // log-space width below ln(1 + tol) means relative tolerance on sigma
        while b - a > FIT_REL_TOL.ln_1p() {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = model.profile(c).0;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = model.profile(d).0;
            }
        }
        0.5 * (a + b)
    };

    let sigma = log_sigma.exp();
    let g = model.gauss(sigma);
    let w = model.best_weight(&g);
    let ll = model.loglik(&g, w);
    let u = 1.0 / n as f64;
    let tv = 0.5
        * model
            .counts
            .iter()
            .zip(&g)
            .zip(&model.mult)
            .map(|((&c, &gd), &m)| (c / total as f64 - m * ((1.0 - w) * gd + w * u)).abs())
            .sum::<f64>();
    Ok(FitResult {
        params: ChannelParams {
            bits,
            sigma,
            beta: w * u,
            boundary: Boundary::Cyclic,
        },
        gaussian_weight: 1.0 - w,
        log_likelihood: ll,
        tv_distance: tv,
        degenerate,
        samples: total,
    })
}
