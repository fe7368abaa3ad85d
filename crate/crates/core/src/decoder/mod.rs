//! Joint local-global belief propagation.
//!
//! The decoder works on the label difference `Delta = Y ^ X`. Given the
//! relative syndrome `S = H Y ^ R = H Delta` it passes
//!
//! * scalar LLRs between symbol bits and local CNs (tanh rule, the CN's
//!   syndrome bit flipping the sign), and
//! * length-`2^M` LLR vectors between symbols and compound CNs, combined in
//!   the Walsh-Hadamard domain after projecting each incoming belief through
//!   its edge matrix.
//!
//! The two families exchange information at every VN: the global messages
//! enter the local ones through the bit marginals `f_{M,l}`, and the local
//! messages enter the global ones as a per-bit penalty on labels with that
//! bit set.
//!
//! Each iteration is a flooding step (all VNs, then all CNs). Within a node
//! the outgoing messages are formed by aggregating once and subtracting the
//! recipient's own contribution; [`Session::vn_to_local`] and friends compute
//! the same messages from scratch and exist to check the batch path.

pub mod kernels;

use crate::channel::ChannelLlrTable;
use crate::code::{JointCode, SyndromePair};
use crate::combine::{sign, Aggregate, PhiKernel};
use crate::error::{usage, Result};
use crate::wht::{wht_in_place, wht_inverse_in_place};

pub use kernels::{f_marginal_all, f_marginal_direct, h_project};
use kernels::{f_marginal_all_into, h_project_into};

/// Length-`2^M` log-likelihood ratios indexed by label difference, entry 0
/// being the reference.
pub type LlrVector = Vec<f64>;

/// Bound on scalar (local) messages.
pub const SCALAR_CLAMP: f64 = 40.0;
/// Bound on vector (global) message entries.
pub const VECTOR_CLAMP: f64 = 600.0;
/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

#[inline]
fn clamp_scalar(x: f64) -> f64 {
    x.clamp(-SCALAR_CLAMP, SCALAR_CLAMP)
}

#[inline]
fn clamp_vector(x: f64) -> f64 {
    x.clamp(-VECTOR_CLAMP, VECTOR_CLAMP)
}

/// Edge indexing derived from a [`JointCode`].
///
/// Local CNs are numbered consecutively across levels (level 1 first);
/// local edges follow CN order, global edges follow compound-CN order.
#[derive(Clone, Debug)]
pub struct DecoderGraph {
    n: usize,
    bits: usize,
    wbits: usize,
    local_cn_level: Vec<usize>,
    local_cn_edges: Vec<Vec<usize>>,
    local_edge_vn: Vec<usize>,
    local_edge_cn: Vec<usize>,
    /// `vn_local[i * M + l]` lists the level-`l+1` edges of VN `i`.
    vn_local: Vec<Vec<usize>>,
    global_cn_edges: Vec<Vec<usize>>,
    global_edge_vn: Vec<usize>,
    global_edge_cn: Vec<usize>,
    /// `H t` for every `t`, per global edge.
    global_edge_image: Vec<Vec<u16>>,
    vn_global: Vec<Vec<usize>>,
}

impl DecoderGraph {
    pub fn new(code: &JointCode) -> Self {
        let n = code.n();
        let bits = code.m() as usize;
        let mut g = DecoderGraph {
            n,
            bits,
            wbits: code.w() as usize,
            local_cn_level: Vec::new(),
            local_cn_edges: Vec::new(),
            local_edge_vn: Vec::new(),
            local_edge_cn: Vec::new(),
            vn_local: vec![Vec::new(); n * bits],
            global_cn_edges: Vec::new(),
            global_edge_vn: Vec::new(),
            global_edge_cn: Vec::new(),
            global_edge_image: Vec::new(),
            vn_global: vec![Vec::new(); n],
        };
        for (l, level) in code.local().iter().enumerate() {
            for check in &level.checks {
                let cn = g.local_cn_edges.len();
                let mut edges = Vec::with_capacity(check.len());
                for &v in check {
                    let e = g.local_edge_vn.len();
                    g.local_edge_vn.push(v);
                    g.local_edge_cn.push(cn);
                    g.vn_local[v * bits + l].push(e);
                    edges.push(e);
                }
                g.local_cn_edges.push(edges);
                g.local_cn_level.push(l);
            }
        }
        for (j, check) in code.global().iter().enumerate() {
            let mut edges = Vec::with_capacity(check.edges.len());
            for (v, h) in &check.edges {
                let e = g.global_edge_vn.len();
                g.global_edge_vn.push(*v);
                g.global_edge_cn.push(j);
                g.global_edge_image.push(h.image_table());
                g.vn_global[*v].push(e);
                edges.push(e);
            }
            g.global_cn_edges.push(edges);
        }
        g
    }

    pub fn local_edge_count(&self) -> usize {
        self.local_edge_vn.len()
    }

    pub fn global_edge_count(&self) -> usize {
        self.global_edge_vn.len()
    }

    /// `(vn, level (1-based), local CN index)` of a local edge.
    pub fn local_edge(&self, e: usize) -> (usize, usize, usize) {
        let cn = self.local_edge_cn[e];
        (self.local_edge_vn[e], self.local_cn_level[cn] + 1, cn)
    }

    /// `(vn, compound CN index)` of a global edge.
    pub fn global_edge(&self, e: usize) -> (usize, usize) {
        (self.global_edge_vn[e], self.global_edge_cn[e])
    }

    pub fn local_cn_edges(&self, cn: usize) -> &[usize] {
        &self.local_cn_edges[cn]
    }

    pub fn global_cn_edges(&self, cn: usize) -> &[usize] {
        &self.global_cn_edges[cn]
    }

    /// Level-`level` (1-based) local edges of VN `vn`.
    pub fn vn_local_edges(&self, vn: usize, level: usize) -> &[usize] {
        &self.vn_local[vn * self.bits + level - 1]
    }

    pub fn vn_global_edges(&self, vn: usize) -> &[usize] {
        &self.vn_global[vn]
    }
}

/// All messages of one decoding run, iteration `iteration`.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageState {
    pub iteration: usize,
    pub local_v2c: Vec<f64>,
    pub local_c2v: Vec<f64>,
    /// Global edge `e` occupies `e * 2^M .. (e + 1) * 2^M`.
    pub global_v2c: Vec<f64>,
    pub global_c2v: Vec<f64>,
    q: usize,
}

impl MessageState {
    fn new(graph: &DecoderGraph) -> Self {
        let q = 1 << graph.bits;
        Self {
            iteration: 0,
            local_v2c: vec![0.0; graph.local_edge_count()],
            local_c2v: vec![0.0; graph.local_edge_count()],
            global_v2c: vec![0.0; graph.global_edge_count() * q],
            global_c2v: vec![0.0; graph.global_edge_count() * q],
            q,
        }
    }

    pub fn global_v2c(&self, e: usize) -> &[f64] {
        &self.global_v2c[e * self.q..(e + 1) * self.q]
    }

    pub fn global_c2v(&self, e: usize) -> &[f64] {
        &self.global_c2v[e * self.q..(e + 1) * self.q]
    }
}

/// Outcome of a decoding run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    /// Estimated labels of the other party, `Y ^ delta`.
    pub estimate: Vec<u16>,
    /// Estimated label differences.
    pub delta: Vec<u16>,
    pub converged: bool,
    /// Completed flooding iterations when decoding stopped.
    pub iterations_used: usize,
}

/// Hard decisions at one checkpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    /// Per-bit decisions from channel + local + global-marginal LLRs.
    pub bits: Vec<u16>,
    /// Symbol-level argmax of the aggregate LLR vector (lowest label on ties).
    pub symbols: Vec<u16>,
    /// Bit-level and symbol-level decisions coincide at every VN.
    pub agree: bool,
    /// The symbol decisions reproduce the relative syndrome.
    pub satisfied: bool,
}

impl Decision {
    pub fn converged(&self) -> bool {
        self.agree && self.satisfied
    }
}

/// Shares one code's graph across any number of frames.
#[derive(Clone, Debug)]
pub struct Decoder<'c> {
    code: &'c JointCode,
    graph: DecoderGraph,
}

impl<'c> Decoder<'c> {
    pub fn new(code: &'c JointCode) -> Self {
        Self {
            code,
            graph: DecoderGraph::new(code),
        }
    }

    pub fn code(&self) -> &JointCode {
        self.code
    }

    pub fn graph(&self) -> &DecoderGraph {
        &self.graph
    }

    /// Prepares a decoding run for received labels `y` and the other
    /// party's syndrome `received`, with all messages zero.
    pub fn session<'a>(
        &'a self,
        y: &'a [u16],
        received: &SyndromePair,
        channel: &'a ChannelLlrTable,
    ) -> Result<Session<'a>> {
        if channel.bits() as usize != self.graph.bits {
            return Err(usage(format!(
                "channel has {} bits, code has {}",
                channel.bits(),
                self.graph.bits
            )));
        }
        let q = 1usize << self.graph.bits;
        if let Some(bad) = y.iter().find(|&&v| v as usize >= q) {
            return Err(usage(format!("label {bad} out of range")));
        }
        let s = self.code.relative_syndrome(y, received)?;
        let bits = self.graph.bits;
        let mut ch_marg = vec![0.0; self.graph.n * bits];
        let mut work = Vec::with_capacity(q);
        for (i, &yl) in y.iter().enumerate() {
            f_marginal_all_into(
                channel.for_label(yl as usize),
                &mut work,
                &mut ch_marg[i * bits..(i + 1) * bits],
            );
        }
        Ok(Session {
            dec: self,
            y,
            channel,
            local_syndrome: s.local.iter().flatten().copied().collect(),
            global_syndrome: s.global,
            ch_marg,
            state: MessageState::new(&self.graph),
            agg: Aggregates::new(self.graph.n, bits),
        })
    }

    /// Runs up to `max_iters` flooding iterations, checking for convergence
    /// before the first and after every iteration.
    pub fn decode(
        &self,
        y: &[u16],
        received: &SyndromePair,
        channel: &ChannelLlrTable,
        max_iters: usize,
    ) -> Result<DecodeResult> {
        let mut s = self.session(y, received, channel)?;
        loop {
            let d = s.decide();
            if d.converged() || s.state.iteration >= max_iters {
                let converged = d.converged();
                let estimate = y.iter().zip(&d.symbols).map(|(a, b)| a ^ b).collect();
                return Ok(DecodeResult {
                    estimate,
                    delta: d.symbols,
                    converged,
                    iterations_used: s.state.iteration,
                });
            }
            s.iterate();
        }
    }
}

/// Per-VN sums of incoming CN messages, valid for one iteration.
#[derive(Clone, Debug)]
struct Aggregates {
    iteration: Option<usize>,
    /// `sum_k L_{c^G_k -> v_i}`, `2^M` per VN.
    global_sum: Vec<f64>,
    /// `f_{M,l}` of `global_sum`, M per VN.
    global_marg: Vec<f64>,
    /// `sum_k L_{c^l_k -> v_i}`, M per VN.
    local_sum: Vec<f64>,
}

impl Aggregates {
    fn new(n: usize, bits: usize) -> Self {
        Self {
            iteration: None,
            global_sum: vec![0.0; n << bits],
            global_marg: vec![0.0; n * bits],
            local_sum: vec![0.0; n * bits],
        }
    }
}

/// One frame being decoded.
pub struct Session<'a> {
    dec: &'a Decoder<'a>,
    y: &'a [u16],
    channel: &'a ChannelLlrTable,
    local_syndrome: Vec<bool>,
    global_syndrome: Vec<u16>,
    /// `f_{M,l}(L^ch_i)`, M per VN.
    ch_marg: Vec<f64>,
    state: MessageState,
    agg: Aggregates,
}

impl<'a> Session<'a> {
    pub fn state(&self) -> &MessageState {
        &self.state
    }

    pub fn graph(&self) -> &DecoderGraph {
        &self.dec.graph
    }

    /// Overwrites the CN-to-VN messages, e.g. to start from a given state.
    pub fn set_c2v(&mut self, local: Vec<f64>, global: Vec<f64>) -> Result<()> {
        if local.len() != self.state.local_c2v.len() || global.len() != self.state.global_c2v.len() {
            return Err(usage("message array shapes do not match the code"));
        }
        self.state.local_c2v = local;
        self.state.global_c2v = global;
        self.agg.iteration = None;
        Ok(())
    }

    pub fn channel_llr(&self, vn: usize) -> &[f64] {
        self.channel.for_label(self.y[vn] as usize)
    }

    pub fn local_syndrome_bit(&self, cn: usize) -> bool {
        self.local_syndrome[cn]
    }

    pub fn global_syndrome(&self, cn: usize) -> u16 {
        self.global_syndrome[cn]
    }

    fn q(&self) -> usize {
        1 << self.dec.graph.bits
    }

    fn refresh_aggregates(&mut self) {
        if self.agg.iteration == Some(self.state.iteration) {
            return;
        }
        let dec = self.dec;
        let g = &dec.graph;
        let (bits, q) = (g.bits, self.q());
        let mut work = Vec::with_capacity(q);
        for i in 0..g.n {
            let gs = &mut self.agg.global_sum[i * q..(i + 1) * q];
            gs.iter_mut().for_each(|x| *x = 0.0);
            for &e in &g.vn_global[i] {
                for (a, b) in gs.iter_mut().zip(self.state.global_c2v(e)) {
                    *a += b;
                }
            }
            let gm = &mut self.agg.global_marg[i * bits..(i + 1) * bits];
            if g.vn_global[i].is_empty() {
                gm.iter_mut().for_each(|x| *x = 0.0);
            } else {
                f_marginal_all_into(gs, &mut work, gm);
            }
            for l in 0..bits {
                self.agg.local_sum[i * bits + l] = g.vn_local[i * bits + l]
                    .iter()
                    .map(|&e| self.state.local_c2v[e])
                    .sum();
            }
        }
        self.agg.iteration = Some(self.state.iteration);
    }

    /// `L_i[t] = L^ch_i[t] + sum_k L_{c^G_k -> v_i}[t] - sum_l [t_l = 1] sum_k L_{c^l_k -> v_i}`.
    fn vn_total(&self, i: usize, out: &mut [f64]) {
        let bits = self.dec.graph.bits;
        let q = self.q();
        let ch = self.channel_llr(i);
        let gs = &self.agg.global_sum[i * q..(i + 1) * q];
        let ls = &self.agg.local_sum[i * bits..(i + 1) * bits];
        // out first holds the penalty, built from the entry without t's lowest set bit
        out[0] = 0.0;
        for t in 1..q {
            let low = t.trailing_zeros() as usize;
            out[t] = out[t & (t - 1)] + ls[bits - 1 - low];
        }
        for t in 0..q {
            out[t] = ch[t] + gs[t] - out[t];
        }
    }

    /// VN update for every edge of both families.
    pub fn vn_phase(&mut self) {
        self.refresh_aggregates();
        let dec = self.dec;
        let g = &dec.graph;
        let (bits, q) = (g.bits, self.q());
        let mut total = vec![0.0; q];
        for i in 0..g.n {
            if !g.vn_global[i].is_empty() {
                self.vn_total(i, &mut total);
                for &e in &g.vn_global[i] {
                    let range = e * q..(e + 1) * q;
                    for ((o, &tot), &c) in self.state.global_v2c[range.clone()]
                        .iter_mut()
                        .zip(&total)
                        .zip(&self.state.global_c2v[range])
                    {
                        *o = clamp_vector(tot - c);
                    }
                }
            }
            for l in 0..bits {
                let base = self.ch_marg[i * bits + l]
                    + self.agg.local_sum[i * bits + l]
                    + self.agg.global_marg[i * bits + l];
                for &e in &g.vn_local[i * bits + l] {
                    self.state.local_v2c[e] = clamp_scalar(base - self.state.local_c2v[e]);
                }
            }
        }
    }

    /// CN update for every edge of both families.
    pub fn cn_phase(&mut self) {
        self.local_cn_phase();
        self.global_cn_phase();
        self.state.iteration += 1;
        self.agg.iteration = None;
    }

    /// One flooding iteration.
    pub fn iterate(&mut self) {
        self.vn_phase();
        self.cn_phase();
    }

    fn local_cn_phase(&mut self) {
        let dec = self.dec;
        let g = &dec.graph;
        for (cn, edges) in g.local_cn_edges.iter().enumerate() {
            if edges.len() == 1 {
                self.state.local_c2v[edges[0]] = 0.0;
                continue;
            }
            let s = if self.local_syndrome[cn] { -1.0 } else { 1.0 };
            let agg = Aggregate::new(&PhiKernel, edges.iter().map(|&e| self.state.local_v2c[e]));
            for &e in edges {
                self.state.local_c2v[e] = s * agg.without(&PhiKernel, self.state.local_v2c[e]);
            }
        }
    }


    fn global_cn_phase(&mut self) {
        let dec = self.dec;
        let g = &dec.graph;
        let q = self.q();
        let qw = 1usize << g.wbits;
        let mut spectra: Vec<f64> = Vec::new();
        let mut zeros = vec![0u32; qw];
        let mut signs = vec![1.0; qw];
        let mut log_mag = vec![0.0; qw];
        let mut resid = vec![0.0; qw];
        let mut lp = vec![0.0; qw];
        for (cn, edges) in g.global_cn_edges.iter().enumerate() {
            let d = edges.len();
            spectra.resize(d * qw, 0.0);
            for (k, &e) in edges.iter().enumerate() {
                let slot = &mut spectra[k * qw..(k + 1) * qw];
                h_project_into(&g.global_edge_image[e], self.state.global_v2c(e), slot);
                wht_in_place(slot).expect("power-of-two length");
            }
            // Product of all spectra as sign, log-magnitude and a count of
            // exact zeros, so any one factor can be divided back out.
            zeros.iter_mut().for_each(|z| *z = 0);
            signs.iter_mut().for_each(|s| *s = 1.0);
            log_mag.iter_mut().for_each(|m| *m = 0.0);
            for k in 0..d {
                for u in 0..qw {
                    let a = spectra[k * qw + u];
                    if a == 0.0 {
                        zeros[u] += 1;
                    } else {
                        signs[u] *= sign(a);
                        log_mag[u] += a.abs().ln();
                    }
                }
            }
            let s = self.global_syndrome[cn] as usize;
            for (k, &e) in edges.iter().enumerate() {
                let own = &spectra[k * qw..(k + 1) * qw];
                let mut mx = f64::NEG_INFINITY;
                for u in 0..qw {
                    let a = own[u];
                    let lm = match (a == 0.0, zeros[u]) {
                        (true, 1) => log_mag[u],
                        (false, 0) => log_mag[u] - a.abs().ln(),
                        _ => f64::NEG_INFINITY,
                    };
                    lp[u] = lm;
                    mx = mx.max(lm);
                }
                for u in 0..qw {
                    let a = own[u];
                    let sg = if a == 0.0 { signs[u] } else { signs[u] * sign(a) };
                    resid[u] = sg * (lp[u] - mx).exp();
                }
                wht_inverse_in_place(&mut resid).expect("power-of-two length");
                write_global_message(&resid, s, &g.global_edge_image[e], &mut lp, self.state_c2v_mut(e, q));
            }
        }
    }

    fn state_c2v_mut(&mut self, e: usize, q: usize) -> &mut [f64] {
        &mut self.state.global_c2v[e * q..(e + 1) * q]
    }

    /// `L_{v_i -> c^l_j}`, recomputed from the incoming messages.
    pub fn vn_to_local(&self, e: usize) -> f64 {
        let dec = self.dec;
        let g = &dec.graph;
        let (i, level, _) = g.local_edge(e);
        let mut gs = vec![0.0; self.q()];
        for &k in &g.vn_global[i] {
            for (a, b) in gs.iter_mut().zip(self.state.global_c2v(k)) {
                *a += b;
            }
        }
        let from_global = if g.vn_global[i].is_empty() {
            0.0
        } else {
            f_marginal_direct(&gs, level)
        };
        let others: f64 = g
            .vn_local_edges(i, level)
            .iter()
            .filter(|&&k| k != e)
            .map(|&k| self.state.local_c2v[k])
            .sum();
        clamp_scalar(f_marginal_direct(self.channel_llr(i), level) + others + from_global)
    }

    /// `L_{v_i -> c^G_j}`, recomputed from the incoming messages.
    pub fn vn_to_global(&self, e: usize) -> LlrVector {
        let dec = self.dec;
        let g = &dec.graph;
        let (i, _) = g.global_edge(e);
        let bits = g.bits;
        let ch = self.channel_llr(i);
        (0..self.q())
            .map(|t| {
                let mut v = ch[t];
                for &k in g.vn_global[i].iter().filter(|&&k| k != e) {
                    v += self.state.global_c2v(k)[t];
                }
                for level in 1..=bits {
                    if (t >> (bits - level)) & 1 == 1 {
                        for &k in g.vn_local_edges(i, level) {
                            v -= self.state.local_c2v[k];
                        }
                    }
                }
                clamp_vector(v)
            })
            .collect()
    }

    /// `L_{c^l_j -> v_i}` by the tanh rule over the other neighbours.
    pub fn local_cn_to_vn(&self, e: usize) -> f64 {
        let dec = self.dec;
        let g = &dec.graph;
        let (_, _, cn) = g.local_edge(e);
        let edges = g.local_cn_edges(cn);
        if edges.len() == 1 {
            return 0.0;
        }
        let prod: f64 = edges
            .iter()
            .filter(|&&k| k != e)
            .map(|&k| (self.state.local_v2c[k] / 2.0).tanh())
            .product();
        let s = if self.local_syndrome[cn] { -1.0 } else { 1.0 };
        let prod = prod.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
        clamp_scalar(s * 2.0 * prod.atanh())
    }

    /// `L_{c^G_j -> v_i}` by direct XOR convolution of the other
    /// neighbours' projected distributions.
    pub fn global_cn_to_vn(&self, e: usize) -> LlrVector {
        let dec = self.dec;
        let g = &dec.graph;
        let (_, cn) = g.global_edge(e);
        let qw = 1usize << g.wbits;
        let mut dist = vec![0.0; qw];
        dist[0] = 1.0;
        let mut proj = vec![0.0; qw];
        for &k in g.global_cn_edges(cn).iter().filter(|&&k| k != e) {
            h_project_into(&g.global_edge_image[k], self.state.global_v2c(k), &mut proj);
            let mut next = vec![0.0; qw];
            for (a, &pa) in dist.iter().enumerate() {
                for (b, &pb) in proj.iter().enumerate() {
                    next[a ^ b] += pa * pb;
                }
            }
            dist = next;
        }
        let mut out = vec![0.0; self.q()];
        let mut lp = vec![0.0; qw];
        write_global_message(&dist, self.global_syndrome[cn] as usize, &g.global_edge_image[e], &mut lp, &mut out);
        out
    }

    /// Hard decisions from the current CN-to-VN messages.
    pub fn decide(&mut self) -> Decision {
        self.refresh_aggregates();
        let dec = self.dec;
        let g = &dec.graph;
        let (bits, q) = (g.bits, self.q());
        let mut total = vec![0.0; q];
        let mut bit_dec = Vec::with_capacity(g.n);
        let mut sym_dec = Vec::with_capacity(g.n);
        for i in 0..g.n {
            let mut b = 0u16;
            for l in 0..bits {
                let v = self.ch_marg[i * bits + l] + self.agg.local_sum[i * bits + l] + self.agg.global_marg[i * bits + l];
                b = (b << 1) | u16::from(v < 0.0);
            }
            bit_dec.push(b);
            self.vn_total(i, &mut total);
            let mut best = 0;
            for t in 1..q {
                if total[t] > total[best] {
                    best = t;
                }
            }
            sym_dec.push(best as u16);
        }
        let agree = bit_dec == sym_dec;
        let satisfied = match self.dec.code.syndrome(&sym_dec) {
            Ok(syn) => {
                syn.global == self.global_syndrome
                    && syn.local.iter().flatten().eq(self.local_syndrome.iter())
            }
            Err(_) => false,
        };
        Decision {
            bits: bit_dec,
            symbols: sym_dec,
            agree,
            satisfied,
        }
    }
}

/// Turns the (unnormalised, possibly slightly negative) distribution `dist`
/// of the other neighbours' XOR into the message
/// `out[t] = L'[s ^ H t] - L'[s]`.
fn write_global_message(dist: &[f64], s: usize, image: &[u16], lp: &mut [f64], out: &mut [f64]) {
    let total: f64 = dist.iter().map(|&p| p.max(0.0)).sum();
    for (l, &p) in lp.iter_mut().zip(dist) {
        let p = if total > 0.0 { p.max(0.0) / total } else { 0.0 };
        *l = p.max(PROB_FLOOR).ln();
    }
    let base = lp[s];
    for (o, &u) in out.iter_mut().zip(image) {
        *o = clamp_vector(lp[s ^ u as usize] - base);
    }
}

#[cfg(test)]
mod tests;
