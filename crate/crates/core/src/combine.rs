//! Signed combining functions used by both check-node update laws.
//!
//! `combine(f, A) = prod sgn(a) * f^-1(sum f(|a|))` and its leave-one-out
//! companion `combine_residual(f, combine(f, A), a) = combine(f, A \ {a})`.
//! With `f = ln` these are the signed product and division; with `f = phi`
//! this is the tanh rule of binary belief propagation.

/// Magnitudes below this are treated as this value before entering `phi`.
pub const PHI_MIN_INPUT: f64 = 1e-12;
/// Lower clamp applied to `phi` outputs on the message path.
pub const PHI_MIN_OUTPUT: f64 = 1e-12;
/// Upper clamp applied to `phi` outputs on the message path.
pub const PHI_MAX_OUTPUT: f64 = 40.0;

/// `phi(x) = -ln(tanh(x / 2))`, unclamped. Self-inverse on `(0, inf)`.
#[inline]
pub fn phi(x: f64) -> f64 {
    // -ln tanh(x/2) = ln(1 + e^-x) - ln(1 - e^-x)
    let e = (-x).exp();
    if x > 1.0 {
        e.ln_1p() - (-e).ln_1p()
    } else {
        e.ln_1p() - (-(-x).exp_m1()).ln()
    }
}

/// A strictly monotone map on `(0, inf)` with a computable inverse.
pub trait CombineKernel {
    fn forward(&self, x: f64) -> f64;
    fn inverse(&self, y: f64) -> f64;
}

/// `f = ln`: combining multiplies, the residual divides.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogKernel;

impl CombineKernel for LogKernel {
    #[inline]
    fn forward(&self, x: f64) -> f64 {
        x.ln()
    }
    #[inline]
    fn inverse(&self, y: f64) -> f64 {
        y.exp()
    }
}

/// `f = phi` with the message-path clamps applied on both sides.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhiKernel;

impl PhiKernel {
    #[inline]
    fn clamped(x: f64) -> f64 {
        phi(x.max(PHI_MIN_INPUT)).clamp(PHI_MIN_OUTPUT, PHI_MAX_OUTPUT)
    }
}

impl CombineKernel for PhiKernel {
    #[inline]
    fn forward(&self, x: f64) -> f64 {
        Self::clamped(x)
    }
    #[inline]
    fn inverse(&self, y: f64) -> f64 {
        Self::clamped(y)
    }
}

/// Sign with zero mapped to `+1`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Running aggregate of `combine`: the sign product and the sum in the
/// `f` domain. Keeping the sum lets leave-one-out values be formed without
/// round-tripping through `f^-1`.
#[derive(Clone, Copy, Debug)]
pub struct Aggregate {
    pub sign: f64,
    pub sum: f64,
}

impl Aggregate {
    pub fn new<K: CombineKernel>(f: &K, values: impl IntoIterator<Item = f64>) -> Self {
        values.into_iter().fold(
            Aggregate { sign: 1.0, sum: 0.0 },
            |acc, a| Aggregate {
                sign: acc.sign * sign(a),
                sum: acc.sum + f.forward(a.abs()),
            },
        )
    }

    pub fn value<K: CombineKernel>(&self, f: &K) -> f64 {
        self.sign * f.inverse(self.sum)
    }

    /// The combine of every value except `a`, which must have been included.
    pub fn without<K: CombineKernel>(&self, f: &K, a: f64) -> f64 {
        self.sign * sign(a) * f.inverse(self.sum - f.forward(a.abs()))
    }
}

/// `prod sgn(a_i) * f^-1(sum f(|a_i|))`. Panics on an empty input.
pub fn combine<K: CombineKernel>(f: &K, values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "combine needs at least one value");
    Aggregate::new(f, values.iter().copied()).value(f)
}

/// `sgn(total) sgn(a) f^-1(f(|total|) - f(|a|))`.
///
/// For `f = ln` a zero `leave_out` has no defined residual and yields 0.
pub fn combine_residual<K: CombineKernel>(f: &K, total: f64, leave_out: f64) -> f64 {
    let diff = f.forward(total.abs()) - f.forward(leave_out.abs());
    if diff.is_nan() {
        return 0.0;
    }
    sign(total) * sign(leave_out) * f.inverse(diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tanh_rule(values: &[f64]) -> f64 {
        2.0 * values.iter().map(|v| (v / 2.0).tanh()).product::<f64>().atanh()
    }

    #[test]
    fn log_kernel_is_signed_product() {
        assert!((combine(&LogKernel, &[2.0, 3.0, -1.0]) + 6.0).abs() < 1e-12);
        assert!((combine_residual(&LogKernel, 6.0, 3.0) - 2.0).abs() < 1e-12);
        assert_eq!(combine_residual(&LogKernel, 0.0, 0.0), 0.0);
    }

    #[test]
    fn phi_single_and_pair() {
        assert!((combine(&PhiKernel, &[1.7]) - 1.7).abs() < 1e-12);
        let want = 2.0 * (0.5f64.tanh().powi(2)).atanh();
        assert!((want - 0.4338).abs() < 1e-4);
        let got = combine(&PhiKernel, &[1.0, 1.0]);
        assert!((got - want).abs() < 1e-12);
        assert!((combine_residual(&PhiKernel, got, 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn phi_matches_tanh_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(1..8);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-8.0..8.0)).collect();
            assert!((combine(&PhiKernel, &v) - tanh_rule(&v)).abs() < 1e-9);
        }
    }

    #[test]
    fn phi_is_an_involution() {
        let mut x = 1e-6;
        while x <= 30.0 {
            assert!((phi(phi(x)) - x).abs() < 1e-9 * x.max(1.0), "x = {x}");
            x *= 1.01;
        }
        assert!((phi(phi(30.0)) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn zero_sign_is_positive() {
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(sign(-0.0), 1.0);
        let v = combine(&PhiKernel, &[0.0, 2.0]);
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn residual_matches_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let n = rng.random_range(2..=8);
            let a: Vec<f64> = (0..n)
                .map(|_| {
                    let m = rng.random_range(0.05..6.0);
                    if rng.random::<bool>() { m } else { -m }
                })
                .collect();
            let drop = rng.random_range(0..n);
            let rest: Vec<f64> = a.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &v)| v).collect();
            let tot = combine(&LogKernel, &a);
            let want = combine(&LogKernel, &rest);
            let got = combine_residual(&LogKernel, tot, a[drop]);
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "log: {got} vs {want}");

            let tot = combine(&PhiKernel, &a);
            let want = combine(&PhiKernel, &rest);
            let got = combine_residual(&PhiKernel, tot, a[drop]);
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "phi: {got} vs {want}");
        }
    }
}
