use super::*;
use crate::channel::{build_transition_table, Boundary, ChannelParams};
use crate::code::{CompoundCheck, JointCodeParams, LocalLevel};
use crate::gf2::BinaryMatrix;
use crate::modulation::{ModulationMap, Scheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(n: usize, m: u8, w: u8, alpha: f64, rate: f64, seed: u64) -> JointCodeParams {
    JointCodeParams {
        n,
        m,
        w,
        alpha,
        rate,
        local_vn_degree: 3,
        seed,
    }
}

fn llr_table(bits: u8, sigma: f64, beta: f64) -> (ChannelLlrTable, crate::channel::TransitionTable, ModulationMap) {
    let table = build_transition_table(&ChannelParams::new(bits, sigma, beta, Boundary::Cyclic).unwrap()).unwrap();
    let map = ModulationMap::build(Scheme::Gray, bits).unwrap();
    (ChannelLlrTable::new(&table, &map).unwrap(), table, map)
}

/// Labels of Alice and Bob for one frame.
fn frame(
    n: usize,
    table: &crate::channel::TransitionTable,
    map: &ModulationMap,
    rng: &mut ChaCha8Rng,
) -> (Vec<u16>, Vec<u16>) {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xb = rng.random_range(0..map.size());
        let yb = table.sample(xb, rng);
        x.push(map.label(xb));
        y.push(map.label(yb));
    }
    (x, y)
}

fn prob_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let soft = |v: &[f64]| {
        let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = v.iter().map(|x| (x - mx).exp()).sum();
        v.iter().map(|x| (x - mx).exp() / z).collect::<Vec<_>>()
    };
    soft(a).iter().zip(soft(b)).all(|(p, q)| (p - q).abs() < tol)
}

#[test]
fn cold_start_messages_are_channel_terms() {
    let code = JointCode::build(&params(60, 3, 2, 0.3, 0.5, 1)).unwrap();
    let (ch, table, map) = llr_table(3, 1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (x, y) = frame(60, &table, &map, &mut rng);
    let dec = Decoder::new(&code);
    let r = code.syndrome(&x).unwrap();
    let mut s = dec.session(&y, &r, &ch).unwrap();
    s.vn_phase();
    let g = dec.graph();
    for e in 0..g.local_edge_count() {
        let (i, level, _) = g.local_edge(e);
        let want = f_marginal_direct(ch.for_label(y[i] as usize), level);
        assert!((s.state().local_v2c[e] - want).abs() < 1e-12);
    }
    for e in 0..g.global_edge_count() {
        let (i, _) = g.global_edge(e);
        assert_eq!(s.state().global_v2c(e), ch.for_label(y[i] as usize));
    }
}

#[test]
fn batch_updates_match_per_edge_recomputation() {
    let code = JointCode::build(&params(80, 3, 2, 0.4, 0.5, 5)).unwrap();
    assert!(!code.global().is_empty());
    let (ch, table, map) = llr_table(3, 2.0, 0.002);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (x, y) = frame(80, &table, &map, &mut rng);
    let dec = Decoder::new(&code);
    let r = code.syndrome(&x).unwrap();
    let mut s = dec.session(&y, &r, &ch).unwrap();
    let g = dec.graph().clone();
    for _ in 0..4 {
        s.vn_phase();
        for e in 0..g.local_edge_count() {
            let (a, b) = (s.state().local_v2c[e], s.vn_to_local(e));
            assert!((a - b).abs() < 1e-9, "local v2c {e}: {a} vs {b}");
        }
        for e in 0..g.global_edge_count() {
            let b = s.vn_to_global(e);
            for (p, q) in s.state().global_v2c(e).iter().zip(&b) {
                assert!((p - q).abs() < 1e-9, "global v2c {e}");
            }
        }
        s.cn_phase();
        for e in 0..g.local_edge_count() {
            let (a, b) = (s.state().local_c2v[e], s.local_cn_to_vn(e));
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "local c2v {e}: {a} vs {b}");
        }
        for e in 0..g.global_edge_count() {
            let b = s.global_cn_to_vn(e);
            assert!(prob_close(s.state().global_c2v(e), &b, 1e-9), "global c2v {e}");
        }
    }
}

/// Two VNs of width 3 joined by one compound CN with identity matrices.
fn two_vn_code(syndrome_free_m: u8) -> JointCode {
    let m = syndrome_free_m;
    let id = BinaryMatrix::identity(m).unwrap();
    JointCode::from_parts(
        params(2, m, m, 1.0, 0.0, 0),
        vec![LocalLevel::default(); m as usize],
        vec![CompoundCheck {
            edges: vec![(0, id.clone()), (1, id)],
        }],
    )
    .unwrap()
}

#[test]
fn degree_two_identity_check_swaps_messages() {
    let code = two_vn_code(3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vecs: Vec<Vec<f64>> = (0..8)
        .map(|_| {
            let mut v: Vec<f64> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
            v[0] = 0.0;
            v
        })
        .collect();
    let ch = ChannelLlrTable::from_vectors(3, vecs).unwrap();
    let dec = Decoder::new(&code);
    let y = [3u16, 6];
    let zero = code.syndrome(&y).unwrap();
    let mut s = dec.session(&y, &zero, &ch).unwrap();
    s.iterate();
    for (e, other) in [(0, 1), (1, 0)] {
        let want = ch.for_label(y[other] as usize);
        for (a, b) in s.state().global_c2v(e).iter().zip(want) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn uniform_inputs_give_zero_messages() {
    let code = JointCode::build(&params(40, 3, 2, 0.5, 0.5, 2)).unwrap();
    let ch = ChannelLlrTable::from_vectors(3, vec![vec![0.0; 8]; 8]).unwrap();
    let dec = Decoder::new(&code);
    let y = vec![0u16; 40];
    let r = code.syndrome(&y).unwrap();
    let mut s = dec.session(&y, &r, &ch).unwrap();
    s.iterate();
    assert!(s.state().local_c2v.iter().all(|&v| v.abs() <= crate::combine::PHI_MIN_OUTPUT));
    assert!(s.state().global_c2v.iter().all(|&v| v.abs() < 1e-12));
}

#[test]
fn three_neighbour_check_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..10 {
        let hs: Vec<BinaryMatrix> = (0..3)
            .map(|_| BinaryMatrix::random_full_row_rank(2, 3, &mut rng).unwrap())
            .collect();
        let code = JointCode::from_parts(
            params(3, 3, 2, 1.0, 0.0, 0),
            vec![LocalLevel::default(); 3],
            vec![CompoundCheck {
                edges: hs.iter().cloned().enumerate().collect(),
            }],
        )
        .unwrap();
        let vecs: Vec<Vec<f64>> = (0..8)
            .map(|_| {
                let mut v: Vec<f64> = (0..8).map(|_| rng.random_range(-4.0..4.0)).collect();
                v[0] = 0.0;
                v
            })
            .collect();
        let ch = ChannelLlrTable::from_vectors(3, vecs).unwrap();
        let y = [rng.random_range(0..8u16), rng.random_range(0..8), rng.random_range(0..8)];
        let received = crate::code::SyndromePair {
            local: vec![Vec::new(); 3],
            global: vec![rng.random_range(0..4u16)],
        };
        let s_rel = code.relative_syndrome(&y, &received).unwrap().global[0] as u32;
        let dec = Decoder::new(&code);
        let mut s = dec.session(&y, &received, &ch).unwrap();
        s.iterate();
        let p = |i: usize, t: usize| ch.for_label(y[i] as usize)[t].exp();
        for target in 0..3 {
            let others: Vec<usize> = (0..3).filter(|&k| k != target).collect();
            let weight = |t: u32| {
                let mut acc = 0.0;
                for a in 0..8u32 {
                    for b in 0..8u32 {
                        let lhs = hs[target].apply_raw(t) ^ hs[others[0]].apply_raw(a) ^ hs[others[1]].apply_raw(b);
                        if lhs == s_rel {
                            acc += p(others[0], a as usize) * p(others[1], b as usize);
                        }
                    }
                }
                acc
            };
            let w0 = weight(0);
            for t in 0..8u32 {
                let want = (weight(t) / w0).ln();
                let got = s.state().global_c2v(target)[t as usize];
                assert!((got - want).abs() < 1e-9, "trial {trial} target {target} t {t}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn noiseless_frame_converges_before_iterating() {
    let code = JointCode::build(&params(100, 4, 4, 0.3, 0.5, 3)).unwrap();
    let (ch, _, map) = llr_table(4, 0.05, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<u16> = (0..100).map(|_| map.label(rng.random_range(0..16))).collect();
    let r = code.syndrome(&x).unwrap();
    let out = Decoder::new(&code).decode(&x, &r, &ch, 20).unwrap();
    assert!(out.converged);
    assert_eq!(out.iterations_used, 0);
    assert_eq!(out.estimate, x);
    assert!(out.delta.iter().all(|&d| d == 0));
}

#[test]
fn converged_estimates_reproduce_the_syndrome() {
    let code = JointCode::build(&params(400, 4, 4, 0.2, 0.5, 8)).unwrap();
    let (ch, table, map) = llr_table(4, 0.4, 0.0);
    let dec = Decoder::new(&code);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut converged = 0;
    for _ in 0..10 {
        let (x, y) = frame(400, &table, &map, &mut rng);
        let r = code.syndrome(&x).unwrap();
        let out = dec.decode(&y, &r, &ch, 50).unwrap();
        if out.converged {
            converged += 1;
            assert_eq!(code.syndrome(&out.estimate).unwrap(), r);
            assert!(out.iterations_used <= 50);
        }
    }
    assert!(converged > 0);
}

#[test]
fn decision_and_session_validation() {
    let code = JointCode::build(&params(40, 3, 2, 0.3, 0.5, 2)).unwrap();
    let (ch, _, _) = llr_table(3, 1.0, 0.0);
    let (ch4, _, _) = llr_table(4, 1.0, 0.0);
    let dec = Decoder::new(&code);
    let y = vec![0u16; 40];
    let r = code.syndrome(&y).unwrap();
    assert!(dec.session(&y, &r, &ch4).is_err());
    assert!(dec.session(&[9u16; 40], &r, &ch).is_err());
    assert!(dec.session(&y[..10], &r, &ch).is_err());
}

