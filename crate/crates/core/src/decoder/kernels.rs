//! Per-vector kernels shared by the VN and global CN updates.

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[inline]
fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// `ln sum_{t_l = 0} e^{L[t]} - ln sum_{t_l = 1} e^{L[t]}` for level `l`
/// (1-based, level 1 is the MSB of `t`), summed term by term.
pub fn f_marginal_direct(llr: &[f64], level: usize) -> f64 {
    let n = llr.len();
    let bits = n.trailing_zeros() as usize;
    assert!(n.is_power_of_two() && level >= 1 && level <= bits, "bad level {level}");
    let shift = bits - level;
    let zero = log_sum_exp(llr.iter().enumerate().filter(|(t, _)| (t >> shift) & 1 == 0).map(|(_, &v)| v));
    let one = log_sum_exp(llr.iter().enumerate().filter(|(t, _)| (t >> shift) & 1 == 1).map(|(_, &v)| v));
    zero - one
}

/// All M marginals at once.
///
/// Level 1 splits the vector into the halves `t_1 = 0` and `t_1 = 1`; their
/// aggregates give the level-1 marginal, and folding the halves together
/// (pairwise log-add) leaves a `2^(M-1)` vector over the remaining bits on
/// which the same step yields level 2, and so on. The folds are shared by
/// every later level.
pub fn f_marginal_all_into(llr: &[f64], work: &mut Vec<f64>, out: &mut [f64]) {
    let n = llr.len();
    debug_assert!(n.is_power_of_two() && out.len() == n.trailing_zeros() as usize);
    work.clear();
    let mx = llr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    work.extend(llr.iter().map(|&v| (v - mx).exp()));
    // The probability-domain fold is exact up to rounding unless a whole
    // half underflows, in which case redo the work in the log domain.
    let mut len = n;
    let mut level = 0;
    let mut ok = true;
    while len > 1 {
        let half = len / 2;
        let (lo, hi) = work[..len].split_at_mut(half);
        let z: f64 = lo.iter().sum();
        let o: f64 = hi.iter().sum();
        if z < 1e-280 || o < 1e-280 {
            ok = false;
            break;
        }
        out[level] = z.ln() - o.ln();
        for (a, b) in lo.iter_mut().zip(hi.iter()) {
            *a += *b;
        }
        len = half;
        level += 1;
    }
    if ok {
        return;
    }
    work.clear();
    work.extend_from_slice(llr);
    let mut len = n;
    let mut level = 0;
    while len > 1 {
        let half = len / 2;
        let (lo, hi) = work[..len].split_at_mut(half);
        out[level] = log_sum_exp(lo.iter().copied()) - log_sum_exp(hi.iter().copied());
        for (a, b) in lo.iter_mut().zip(hi.iter()) {
            *a = log_add(*a, *b);
        }
        len = half;
        level += 1;
    }
}

pub fn f_marginal_all(llr: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; llr.len().trailing_zeros() as usize];
    f_marginal_all_into(llr, &mut Vec::with_capacity(llr.len()), &mut out);
    out
}

/// Pushforward of `softmax(llr)` through the linear map whose image table
/// is `image` (`image[t] = H t`), into `out` of length `2^W`.
pub fn h_project_into(image: &[u16], llr: &[f64], out: &mut [f64]) {
    debug_assert_eq!(image.len(), llr.len());
    out.iter_mut().for_each(|o| *o = 0.0);
    let mx = llr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (&u, &v) in image.iter().zip(llr) {
        let p = (v - mx).exp();
        out[u as usize] += p;
        total += p;
    }
    let inv = total.recip();
    out.iter_mut().for_each(|o| *o *= inv);
}

/// Distribution of `H * Delta` when `Delta` has log-odds `llr` relative to
/// the zero label.
pub fn h_project(h: &crate::gf2::BinaryMatrix, llr: &[f64]) -> Vec<f64> {
    assert_eq!(llr.len(), 1 << h.n_cols(), "LLR length does not match matrix");
    let mut out = vec![0.0; 1 << h.n_rows()];
    h_project_into(&h.image_table(), llr, &mut out);
    out
}
