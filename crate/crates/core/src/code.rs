//! Joint local-global LDPC codes.
//!
//! Every variable node (VN) is an M-bit symbol. Local check nodes (CNs) are
//! plain binary parity checks split into M groups; a CN in group `l` only
//! sees bit `l` of its neighbours. Global CNs are compound: each bundles W
//! binary checks and reaches a neighbouring VN through a W x M binary edge
//! matrix, so it constrains `sum_k H_k * label_k` over GF(2)^W.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{parse_err, usage, Error, Result};
use crate::gf2::BinaryMatrix;
use crate::modulation::{MAX_BITS, MIN_BITS};

#[derive(Clone, Debug, PartialEq)]
pub struct JointCodeParams {
    /// Symbols per frame.
    pub n: usize,
    /// Bits per symbol.
    pub m: u8,
    /// Rows per compound CN.
    pub w: u8,
    /// Requested share of compound CNs, `|G| / (|G| + |L| / W)`.
    pub alpha: f64,
    pub rate: f64,
    pub local_vn_degree: usize,
    pub seed: u64,
}

impl JointCodeParams {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_BITS..=MAX_BITS).contains(&self.m) {
            return Err(Error::Parameter(format!("M = {} outside {MIN_BITS}..={MAX_BITS}", self.m)));
        }
        if self.w < 2 || self.w > self.m {
            return Err(Error::Parameter(format!("W = {} must satisfy 2 <= W <= M = {}", self.w, self.m)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Parameter(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(Error::Parameter(format!("rate = {} outside (0, 1)", self.rate)));
        }
        if self.n == 0 {
            return Err(Error::Parameter("N must be positive".into()));
        }
        Ok(())
    }

    /// `(1 - rate) * N * M`, which must be an integer.
    pub fn constraint_bits(&self) -> Result<usize> {
        let exact = (1.0 - self.rate) * self.n as f64 * self.m as f64;
        let rounded = exact.round();
        if (exact - rounded).abs() > 1e-6 {
            return Err(Error::Parameter(format!(
                "(1 - rate) * N * M = {exact} is not an integer"
            )));
        }
        Ok(rounded as usize)
    }
}

/// How many CNs of each kind a code gets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnBudget {
    /// Local CNs per level, level 1 first.
    pub local_per_level: Vec<usize>,
    pub global: usize,
}

impl CnBudget {
    pub fn local_total(&self) -> usize {
        self.local_per_level.iter().sum()
    }
}

/// Splits the constraint-bit budget between compound and local CNs.
///
/// The compound count is `alpha * bits / W` rounded to the nearest integer
/// (stepped down if that would overspend); the local CNs take the remaining
/// bits and are spread as evenly as possible over the levels, earlier levels
/// taking any remainder.
pub fn plan_cn_budget(params: &JointCodeParams) -> Result<CnBudget> {
    params.validate()?;
    let bits = params.constraint_bits()?;
    let w = params.w as usize;
    let mut global = (params.alpha * bits as f64 / w as f64).round() as usize;
    if global * w > bits {
        global -= 1;
    }
    if global > params.n {
        return Err(Error::Construction(format!(
            "{global} compound CNs exceed N = {} with degree-1 global VNs",
            params.n
        )));
    }
    let local = bits - global * w;
    let m = params.m as usize;
    let local_per_level = (0..m).map(|l| local / m + usize::from(l < local % m)).collect();
    Ok(CnBudget {
        local_per_level,
        global,
    })
}

/// One group of local CNs; `checks[j]` lists the VNs of CN `j`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalLevel {
    pub checks: Vec<Vec<usize>>,
}

impl LocalLevel {
    pub fn edge_count(&self) -> usize {
        self.checks.iter().map(Vec::len).sum()
    }
}

/// A compound CN: its neighbouring VNs and their W x M edge matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompoundCheck {
    pub edges: Vec<(usize, BinaryMatrix)>,
}

/// Random bipartite graph in which every VN has `vn_degree` distinct CN
/// neighbours and CN degrees differ by at most one.
///
/// Sockets are paired by a uniform shuffle (configuration model); repeated
/// (VN, CN) pairs are then removed by random edge switches that never create
/// a new repeat.
pub fn build_local_level<R: Rng + ?Sized>(
    n: usize,
    cn_count: usize,
    vn_degree: usize,
    rng: &mut R,
) -> Result<LocalLevel> {
    if cn_count == 0 {
        return Ok(LocalLevel::default());
    }
    if vn_degree == 0 || vn_degree > cn_count {
        return Err(Error::Construction(format!(
            "VN degree {vn_degree} is not realizable with {cn_count} CNs"
        )));
    }
    let edges = n * vn_degree;
    if cn_count > edges {
        return Err(Error::Construction(format!(
            "{cn_count} CNs cannot all be connected with {edges} edges"
        )));
    }
    // CN sockets: degrees as even as possible.
    let mut cn_sockets: Vec<usize> = (0..cn_count)
        .flat_map(|c| std::iter::repeat_n(c, edges / cn_count + usize::from(c < edges % cn_count)))
        .collect();
    if cn_sockets.iter().filter(|&&c| c == 0).count() > n {
        return Err(Error::Construction("CN degree exceeds N".into()));
    }
    cn_sockets.shuffle(rng);
    // edge e connects VN e / vn_degree to CN cn_sockets[e]
    let vn_of = |e: usize| e / vn_degree;
    let mut pair_count = std::collections::HashMap::<(usize, usize), usize>::new();
    for (e, &c) in cn_sockets.iter().enumerate() {
        *pair_count.entry((vn_of(e), c)).or_insert(0) += 1;
    }
    let max_switches = 1000 * edges + 100_000;
    let mut switches = 0;
    loop {
        let bad: Vec<usize> = (0..edges)
            .filter(|&e| pair_count[&(vn_of(e), cn_sockets[e])] > 1)
            .collect();
        if bad.is_empty() {
            break;
        }
        for e in bad {
            let (v, c) = (vn_of(e), cn_sockets[e]);
            if pair_count[&(v, c)] <= 1 {
                continue;
            }
            loop {
                switches += 1;
                if switches > max_switches {
                    return Err(Error::Construction(format!(
                        "could not remove repeated edges (N = {n}, CNs = {cn_count}, degree {vn_degree})"
                    )));
                }
                let f = rng.random_range(0..edges);
                let (v2, c2) = (vn_of(f), cn_sockets[f]);
                if c2 == c || v2 == v {
                    continue;
                }
                if pair_count.get(&(v, c2)).copied().unwrap_or(0) > 0
                    || pair_count.get(&(v2, c)).copied().unwrap_or(0) > 0
                {
                    continue;
                }
                for key in [(v, c), (v2, c2)] {
                    *pair_count.get_mut(&key).expect("present") -= 1;
                }
                *pair_count.entry((v, c2)).or_insert(0) += 1;
                *pair_count.entry((v2, c)).or_insert(0) += 1;
                cn_sockets.swap(e, f);
                break;
            }
        }
    }
    let mut checks = vec![Vec::new(); cn_count];
    for (e, &c) in cn_sockets.iter().enumerate() {
        checks[c].push(vn_of(e));
    }
    checks.iter_mut().for_each(|c| c.sort_unstable());
    Ok(LocalLevel { checks })
}

/// Compound CNs over a random balanced partition of all N VNs, each edge
/// carrying a uniformly drawn full-row-rank W x M matrix.
pub fn build_global_cns<R: Rng + ?Sized>(
    n: usize,
    m: u8,
    w: u8,
    count: usize,
    rng: &mut R,
) -> Result<Vec<CompoundCheck>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if count > n {
        return Err(Error::Construction(format!(
            "{count} compound CNs exceed N = {n} with degree-1 global VNs"
        )));
    }
    let mut vns: Vec<usize> = (0..n).collect();
    vns.shuffle(rng);
    let mut out = Vec::with_capacity(count);
    let mut start = 0;
    for j in 0..count {
        let size = n / count + usize::from(j < n % count);
        let mut members = vns[start..start + size].to_vec();
        members.sort_unstable();
        start += size;
        let edges = members
            .into_iter()
            .map(|v| Ok((v, BinaryMatrix::random_full_row_rank(w as usize, m, rng)?)))
            .collect::<Result<Vec<_>>>()?;
        out.push(CompoundCheck { edges });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointCode {
    params: JointCodeParams,
    local: Vec<LocalLevel>,
    global: Vec<CompoundCheck>,
}

/// Local syndrome bits per level and one W-bit value per compound CN.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SyndromePair {
    pub local: Vec<Vec<bool>>,
    pub global: Vec<u16>,
}

impl SyndromePair {
    pub fn xor(&self, other: &SyndromePair) -> Result<SyndromePair> {
        if self.global.len() != other.global.len()
            || self.local.len() != other.local.len()
            || self.local.iter().zip(&other.local).any(|(a, b)| a.len() != b.len())
        {
            return Err(usage("syndrome shapes differ"));
        }
        Ok(SyndromePair {
            local: self
                .local
                .iter()
                .zip(&other.local)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x ^ y).collect())
                .collect(),
            global: self.global.iter().zip(&other.global).map(|(a, b)| a ^ b).collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.local.iter().flatten().all(|&b| !b) && self.global.iter().all(|&g| g == 0)
    }
}

impl JointCode {
    /// Builds a random code. Local levels are drawn first, level by level,
    /// then the compound CNs, all from one ChaCha stream seeded by
    /// `params.seed`.
    pub fn build(params: &JointCodeParams) -> Result<Self> {
        let budget = plan_cn_budget(params)?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let local = budget
            .local_per_level
            .iter()
            .map(|&c| build_local_level(params.n, c, params.local_vn_degree, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let global = build_global_cns(params.n, params.m, params.w, budget.global, &mut rng)?;
        Self::from_parts(params.clone(), local, global)
    }

    /// Assembles a code from explicit parts, checking indices and shapes.
    /// Unlike [`JointCode::build`] this accepts VNs in several compound CNs.
    pub fn from_parts(
        params: JointCodeParams,
        local: Vec<LocalLevel>,
        global: Vec<CompoundCheck>,
    ) -> Result<Self> {
        if local.len() != params.m as usize {
            return Err(usage(format!(
                "expected {} local levels, got {}",
                params.m,
                local.len()
            )));
        }
        for (l, level) in local.iter().enumerate() {
            for check in &level.checks {
                if let Some(&v) = check.iter().find(|&&v| v >= params.n) {
                    return Err(usage(format!("level {} CN references VN {v} >= N", l + 1)));
                }
                let mut sorted = check.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != check.len() {
                    return Err(usage(format!("level {} CN repeats a VN", l + 1)));
                }
            }
        }
        for check in &global {
            for (v, h) in &check.edges {
                if *v >= params.n {
                    return Err(usage(format!("compound CN references VN {v} >= N")));
                }
                if h.n_rows() != params.w as usize || h.n_cols() != params.m as usize {
                    return Err(usage(format!(
                        "edge matrix is {}x{}, expected {}x{}",
                        h.n_rows(),
                        h.n_cols(),
                        params.w,
                        params.m
                    )));
                }
            }
        }
        Ok(Self {
            params,
            local,
            global,
        })
    }

    pub fn params(&self) -> &JointCodeParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn m(&self) -> u8 {
        self.params.m
    }

    pub fn w(&self) -> u8 {
        self.params.w
    }

    pub fn local(&self) -> &[LocalLevel] {
        &self.local
    }

    pub fn global(&self) -> &[CompoundCheck] {
        &self.global
    }

    pub fn local_cn_count(&self) -> usize {
        self.local.iter().map(|l| l.checks.len()).sum()
    }

    /// `|L| + W |G|`.
    pub fn constraint_bits(&self) -> usize {
        self.local_cn_count() + self.params.w as usize * self.global.len()
    }

    /// `1 - constraint_bits / (N M)`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.constraint_bits() as f64 / (self.params.n * self.params.m as usize) as f64
    }

    /// Achieved `|G| / (|G| + |L| / W)`.
    pub fn achieved_alpha(&self) -> f64 {
        let g = self.global.len() as f64;
        let denom = g + self.local_cn_count() as f64 / self.params.w as f64;
        if denom == 0.0 {
            0.0
        } else {
            g / denom
        }
    }

    /// `H * labels` for both CN families.
    pub fn syndrome(&self, labels: &[u16]) -> Result<SyndromePair> {
        if labels.len() != self.params.n {
            return Err(usage(format!(
                "expected {} labels, got {}",
                self.params.n,
                labels.len()
            )));
        }
        let m = self.params.m as usize;
        let local = self
            .local
            .iter()
            .enumerate()
            .map(|(l, level)| {
                let shift = m - 1 - l;
                level
                    .checks
                    .iter()
                    .map(|c| c.iter().fold(false, |acc, &v| acc ^ ((labels[v] >> shift) & 1 == 1)))
                    .collect()
            })
            .collect();
        let global = self
            .global
            .iter()
            .map(|c| {
                c.edges
                    .iter()
                    .fold(0u16, |acc, (v, h)| acc ^ h.apply_raw(labels[*v] as u32) as u16)
            })
            .collect();
        Ok(SyndromePair { local, global })
    }

    /// `syndrome(Y) ^ R`, which equals the syndrome of `Y ^ X` when
    /// `R = syndrome(X)`.
    pub fn relative_syndrome(&self, y_labels: &[u16], received: &SyndromePair) -> Result<SyndromePair> {
        self.syndrome(y_labels)?.xor(received)
    }

    /// Self-describing text form; see [`JointCode::from_text`].
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "jointbp-code 1");
        let _ = writeln!(s, "N {}", p.n);
        let _ = writeln!(s, "M {}", p.m);
        let _ = writeln!(s, "W {}", p.w);
        let _ = writeln!(s, "rate {}", p.rate);
        let _ = writeln!(s, "alpha {}", p.alpha);
        let _ = writeln!(s, "local_vn_degree {}", p.local_vn_degree);
        let _ = writeln!(s, "seed {}", p.seed);
        for (l, level) in self.local.iter().enumerate() {
            let _ = writeln!(s, "level {} {}", l + 1, level.checks.len());
            for c in &level.checks {
                s.push('c');
                for v in c {
                    let _ = write!(s, " {v}");
                }
                s.push('\n');
            }
        }
        let _ = writeln!(s, "global {}", self.global.len());
        for c in &self.global {
            s.push('g');
            for (v, h) in &c.edges {
                let _ = write!(s, " {v}:{h}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| parse_err(0, format!("unexpected end of input, expected {what}")))
        };
        let (ln, magic) = next("header")?;
        if magic != "jointbp-code 1" {
            return Err(parse_err(ln, "not a jointbp code file"));
        }
        fn field<T: std::str::FromStr>((ln, line): (usize, &str), key: &str) -> Result<T> {
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(parse_err(ln, format!("expected `{key}`")));
            }
            parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| parse_err(ln, format!("bad value for `{key}`")))
        }
        let n: usize = field(next("N")?, "N")?;
        let m: u8 = field(next("M")?, "M")?;
        let w: u8 = field(next("W")?, "W")?;
        let rate: f64 = field(next("rate")?, "rate")?;
        let alpha: f64 = field(next("alpha")?, "alpha")?;
        let local_vn_degree: usize = field(next("local_vn_degree")?, "local_vn_degree")?;
        let seed: u64 = field(next("seed")?, "seed")?;
        let params = JointCodeParams {
            n,
            m,
            w,
            alpha,
            rate,
            local_vn_degree,
            seed,
        };
        params.validate()?;

        let mut local = Vec::with_capacity(m as usize);
        for l in 1..=m as usize {
            let (ln, line) = next("level header")?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "level" || parts[1] != l.to_string() {
                return Err(parse_err(ln, format!("expected `level {l} <count>`")));
            }
            let count: usize = parts[2]
                .parse()
                .map_err(|_| parse_err(ln, "bad CN count"))?;
            let mut checks = Vec::with_capacity(count);
            for _ in 0..count {
                let (ln, line) = next("local CN")?;
                let mut parts = line.split_whitespace();
                if parts.next() != Some("c") {
                    return Err(parse_err(ln, "expected `c <vn>...`"));
                }
                checks.push(
                    parts
                        .map(|v| v.parse().map_err(|_| parse_err(ln, format!("bad VN {v:?}"))))
                        .collect::<Result<Vec<usize>>>()?,
                );
            }
            local.push(LocalLevel { checks });
        }
        let count: usize = field(next("global header")?, "global")?;
        let mut global = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, line) = next("compound CN")?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some("g") {
                return Err(parse_err(ln, "expected `g <vn>:<matrix>...`"));
            }
            let edges = parts
                .map(|e| {
                    let (v, h) = e
                        .split_once(':')
                        .ok_or_else(|| parse_err(ln, format!("bad edge {e:?}")))?;
                    let v = v.parse().map_err(|_| parse_err(ln, format!("bad VN {v:?}")))?;
                    let h = h
                        .parse::<BinaryMatrix>()
                        .map_err(|err| parse_err(ln, err.to_string()))?;
                    Ok((v, h))
                })
                .collect::<Result<Vec<_>>>()?;
            global.push(CompoundCheck { edges });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing content"));
        }
        Self::from_parts(params, local, global)
    }
}
