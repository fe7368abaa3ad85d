//! Reference decoders and frame helpers shared by the integration tests.
//!
//! The references work from the transition table directly (not from the
//! library's LLR tables) and use their own kernels: pairwise box-plus for
//! binary checks, a dense Hadamard matrix for the non-binary checks.

#![allow(dead_code)]

use jointbp_core::channel::{build_transition_table, Boundary, ChannelParams, TransitionTable};
use jointbp_core::code::{CompoundCheck, JointCode, JointCodeParams, LocalLevel, SyndromePair};
use jointbp_core::gf2::BinaryMatrix;
use jointbp_core::modulation::{ModulationMap, Scheme};
use rand::seq::SliceRandom;
use rand::Rng;

pub struct Channel {
    pub table: TransitionTable,
    pub map: ModulationMap,
}

impl Channel {
    pub fn new(bits: u8, sigma: f64, beta: f64, scheme: Scheme) -> Self {
        Self {
            table: build_transition_table(&ChannelParams::new(bits, sigma, beta, Boundary::Cyclic).unwrap()).unwrap(),
            map: ModulationMap::build(scheme, bits).unwrap(),
        }
    }

    pub fn llr_table(&self) -> jointbp_core::channel::ChannelLlrTable {
        jointbp_core::channel::ChannelLlrTable::new(&self.table, &self.map).unwrap()
    }

    /// `P(Delta = t | Y = y)` for every `t`, from the table.
    pub fn posterior(&self, y: u16) -> Vec<f64> {
        let yb = self.map.bin(y as usize) as usize;
        let q = self.map.size();
        let p: Vec<f64> = (0..q)
            .map(|t| self.table.prob(self.map.bin(y as usize ^ t) as usize, yb))
            .collect();
        let z: f64 = p.iter().sum();
        p.iter().map(|v| v / z).collect()
    }

    /// Alice's and Bob's labels for one frame.
    pub fn frame<R: Rng>(&self, n: usize, rng: &mut R) -> (Vec<u16>, Vec<u16>) {
        let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let xb = rng.random_range(0..self.map.size());
            let yb = self.table.sample(xb, rng);
            x.push(self.map.label(xb));
            y.push(self.map.label(yb));
        }
        (x, y)
    }
}

fn boxplus(a: f64, b: f64) -> f64 {
    a.signum() * b.signum() * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// M independent binary syndrome BP decoders, one per level, flooding
/// schedule, messages clamped to +-40.
pub struct BinaryBp {
    bits: usize,
    /// Per level: checks as VN lists.
    checks: Vec<Vec<Vec<usize>>>,
    syndrome: Vec<Vec<bool>>,
    /// Per VN, per level: channel bit LLR.
    prior: Vec<Vec<f64>>,
    /// Flattened over (level, check, position), same order as the code.
    pub v2c: Vec<f64>,
    pub c2v: Vec<f64>,
    edge_vn: Vec<usize>,
    edge_level: Vec<usize>,
}

impl BinaryBp {
    pub fn new(code: &JointCode, ch: &Channel, y: &[u16], received: &SyndromePair) -> Self {
        let bits = code.m() as usize;
        let s = code.syndrome(y).unwrap().xor(received).unwrap();
        let prior = y
            .iter()
            .map(|&yl| {
                let p = ch.posterior(yl);
                (0..bits)
                    .map(|l| {
                        let shift = bits - 1 - l;
                        let zero: f64 = p.iter().enumerate().filter(|(t, _)| (t >> shift) & 1 == 0).map(|(_, v)| v).sum();
                        let one: f64 = p.iter().enumerate().filter(|(t, _)| (t >> shift) & 1 == 1).map(|(_, v)| v).sum();
                        zero.ln() - one.ln()
                    })
                    .collect()
            })
            .collect();
        let checks: Vec<Vec<Vec<usize>>> = code.local().iter().map(|lv| lv.checks.clone()).collect();
        let (mut edge_vn, mut edge_level) = (Vec::new(), Vec::new());
        for (l, lv) in checks.iter().enumerate() {
            for c in lv {
                for &v in c {
                    edge_vn.push(v);
                    edge_level.push(l);
                }
            }
        }
        let e = edge_vn.len();
        Self {
            bits,
            checks,
            syndrome: s.local,
            prior,
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            edge_vn,
            edge_level,
        }
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        (self.edge_vn[e], self.edge_level[e] + 1)
    }

    fn incoming(&self, vn: usize, level: usize) -> f64 {
        (0..self.c2v.len())
            .filter(|&e| self.edge_vn[e] == vn && self.edge_level[e] == level)
            .map(|e| self.c2v[e])
            .sum()
    }

    pub fn iterate(&mut self) {
        for e in 0..self.v2c.len() {
            let (v, l) = (self.edge_vn[e], self.edge_level[e]);
            let total = self.prior[v][l] + self.incoming(v, l);
            self.v2c[e] = (total - self.c2v[e]).clamp(-40.0, 40.0);
        }
        let mut base = 0;
        for (l, lv) in self.checks.iter().enumerate() {
            for (j, c) in lv.iter().enumerate() {
                let sign = if self.syndrome[l][j] { -1.0 } else { 1.0 };
                for k in 0..c.len() {
                    let others: Vec<f64> = (0..c.len()).filter(|&o| o != k).map(|o| self.v2c[base + o]).collect();
                    self.c2v[base + k] = match others.split_first() {
                        None => 0.0,
                        Some((first, rest)) => (sign * rest.iter().fold(*first, |acc, &b| boxplus(acc, b))).clamp(-40.0, 40.0),
                    };
                }
                base += c.len();
            }
        }
    }

    /// Hard decision per VN, bits packed MSB first.
    pub fn decisions(&self) -> Vec<u16> {
        (0..self.prior.len())
            .map(|v| {
                (0..self.bits).fold(0u16, |acc, l| {
                    let post = self.prior[v][l] + self.incoming(v, l);
                    (acc << 1) | u16::from(post < 0.0)
                })
            })
            .collect()
    }
}

/// Dense Hadamard transform with the 2^-W factor on the forward side.
fn hadamard(p: &[f64], forward: bool) -> Vec<f64> {
    let n = p.len();
    let scale = if forward { 1.0 / n as f64 } else { 1.0 };
    (0..n)
        .map(|u| {
            scale
                * (0..n)
                    .map(|t| if (u & t).count_ones() % 2 == 0 { p[t] } else { -p[t] })
                    .sum::<f64>()
        })
        .collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let z: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= z);
    v
}

/// Non-binary syndrome BP over compound CNs only, in the probability domain.
pub struct NonBinaryBp<'c> {
    code: &'c JointCode,
    syndrome: Vec<u16>,
    prior: Vec<Vec<f64>>,
    /// `(vn, check, matrix image table)` per edge, in code order.
    edges: Vec<(usize, usize, Vec<u32>)>,
    pub v2c: Vec<Vec<f64>>,
    pub c2v: Vec<Vec<f64>>,
}

impl<'c> NonBinaryBp<'c> {
    pub fn new(code: &'c JointCode, ch: &Channel, y: &[u16], received: &SyndromePair) -> Self {
        let q = 1usize << code.m();
        let s = code.syndrome(y).unwrap().xor(received).unwrap();
        let mut edges = Vec::new();
        for (j, c) in code.global().iter().enumerate() {
            for (v, h) in &c.edges {
                edges.push((*v, j, (0..q as u32).map(|t| h.apply_raw(t)).collect()));
            }
        }
        let e = edges.len();
        Self {
            code,
            syndrome: s.global,
            prior: y.iter().map(|&yl| ch.posterior(yl)).collect(),
            edges,
            v2c: vec![vec![1.0 / q as f64; q]; e],
            c2v: vec![vec![1.0 / q as f64; q]; e],
        }
    }

    fn product(&self, vn: usize, skip: Option<usize>) -> Vec<f64> {
        let mut p = self.prior[vn].clone();
        for (e, (v, _, _)) in self.edges.iter().enumerate() {
            if *v == vn && Some(e) != skip {
                p.iter_mut().zip(&self.c2v[e]).for_each(|(a, b)| *a *= b);
            }
        }
        p
    }

    pub fn iterate(&mut self) {
        for e in 0..self.edges.len() {
            self.v2c[e] = normalized(self.product(self.edges[e].0, Some(e)));
        }
        let qw = 1usize << self.code.w();
        for e in 0..self.edges.len() {
            let (_, j, ref image) = self.edges[e];
            let mut spectrum = vec![1.0; qw];
            for (k, (_, jk, img)) in self.edges.iter().enumerate() {
                if *jk != j || k == e {
                    continue;
                }
                let mut proj = vec![0.0; qw];
                for (t, &u) in img.iter().enumerate() {
                    proj[u as usize] += self.v2c[k][t];
                }
                spectrum.iter_mut().zip(hadamard(&proj, true)).for_each(|(a, b)| *a *= b);
            }
            let dist: Vec<f64> = hadamard(&spectrum, false).iter().map(|v| v.max(0.0)).collect();
            let s = self.syndrome[j] as usize;
            self.c2v[e] = normalized(image.iter().map(|&u| dist[s ^ u as usize]).collect());
        }
    }

    /// Argmax of the posterior (lowest label on ties) and the per-bit
    /// decisions formed from the channel and check parts separately.
    pub fn decisions(&self) -> (Vec<u16>, Vec<u16>) {
        let bits = self.code.m() as usize;
        let mut sym = Vec::new();
        let mut bit = Vec::new();
        for vn in 0..self.prior.len() {
            let post = self.product(vn, None);
            let mut best = 0;
            for t in 1..post.len() {
                if post[t] > post[best] {
                    best = t;
                }
            }
            sym.push(best as u16);
            let mut checks = vec![1.0; post.len()];
            for (e, (v, _, _)) in self.edges.iter().enumerate() {
                if *v == vn {
                    checks.iter_mut().zip(&self.c2v[e]).for_each(|(a, b)| *a *= b);
                }
            }
            let marg = |p: &[f64], shift: usize| {
                let zero: f64 = p.iter().enumerate().filter(|(t, _)| (t >> shift) & 1 == 0).map(|(_, v)| v).sum();
                let one: f64 = p.iter().enumerate().filter(|(t, _)| (t >> shift) & 1 == 1).map(|(_, v)| v).sum();
                zero.ln() - one.ln()
            };
            bit.push((0..bits).fold(0u16, |acc, l| {
                let shift = bits - 1 - l;
                let llr = marg(&self.prior[vn], shift) + marg(&checks, shift);
                (acc << 1) | u16::from(llr < 0.0)
            }));
        }
        (sym, bit)
    }

    /// Runs the same stopping rule as the joint decoder: bit and symbol
    /// decisions agree and reproduce the syndrome.
    pub fn decode(&mut self, max_iters: usize) -> (Vec<u16>, bool, usize) {
        let mut it = 0;
        loop {
            let (sym, bit) = self.decisions();
            let syn = self.code.syndrome(&sym).unwrap();
            let ok = sym == bit && syn.global == self.syndrome;
            if ok || it >= max_iters {
                return (sym, ok, it);
            }
            self.iterate();
            it += 1;
        }
    }
}

/// Compound-CN-only code in which every VN sits in `vn_degree` checks of
/// degree `cn_degree`, with random invertible `M x M` matrices.
pub fn random_nonbinary_code<R: Rng>(n: usize, m: u8, vn_degree: usize, cn_degree: usize, rng: &mut R) -> JointCode {
    assert_eq!((n * vn_degree) % cn_degree, 0);
    let checks = n * vn_degree / cn_degree;
    'retry: loop {
        let mut sockets: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, vn_degree)).collect();
        sockets.shuffle(rng);
        let mut global = Vec::with_capacity(checks);
        for chunk in sockets.chunks(cn_degree) {
            let mut seen = chunk.to_vec();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != chunk.len() {
                continue 'retry;
            }
            global.push(CompoundCheck {
                edges: chunk
                    .iter()
                    .map(|&v| (v, BinaryMatrix::random_full_row_rank(m as usize, m, rng).unwrap()))
                    .collect(),
            });
        }
        let params = JointCodeParams {
            n,
            m,
            w: m,
            alpha: 1.0,
            rate: 1.0 - checks as f64 / n as f64,
            local_vn_degree: 3,
            seed: 0,
        };
        return JointCode::from_parts(params, vec![LocalLevel::default(); m as usize], global).unwrap();
    }
}
