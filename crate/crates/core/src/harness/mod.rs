//! Monte-Carlo frame error rate experiments.
//!
//! A point is one `(alpha, sigma)` pair. Each trial draws Alice's bins
//! uniformly, passes them through the channel, and decodes Bob's labels
//! against Alice's syndrome. A frame counts as an error when the decoder
//! does not converge or converges to the wrong sequence.
//!
//! Every trial owns a ChaCha8 stream selected by `(point index, trial
//! index)` under the master seed, so the outcome does not depend on how
//! trials are spread over threads.

pub mod ingest;

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{build_transition_table, Boundary, ChannelLlrTable, ChannelParams, TransitionTable};
use crate::code::{JointCode, JointCodeParams};
use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::modulation::{ModulationMap, Scheme};

pub use ingest::{ingest_timestamps, read_timestamps, FramePairBatch, IngestStats, Provenance};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "JOINTBP_THREADS";

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;

pub const CSV_HEADER: &str = "alpha,sigma,beta,trials,frame_errors,fer,ci_lo,ci_hi,mean_iters,wall_s";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: u8,
    pub w: u8,
    pub rate: f64,
    pub alphas: Vec<f64>,
    pub local_vn_degree: usize,
    pub code_seed: u64,
    pub sigmas: Vec<f64>,
    pub beta: f64,
    pub boundary: Boundary,
    pub modulation: Scheme,
    pub trials: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::Usage("alpha list is empty".into()));
        }
        if self.sigmas.is_empty() {
            return Err(Error::Usage("sigma list is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Usage("trials must be at least 1".into()));
        }
        for &s in &self.sigmas {
            ChannelParams::new(self.m, s, self.beta, self.boundary)?;
        }
        for &a in &self.alphas {
            self.code_params(a).validate()?;
        }
        Ok(())
    }

    pub fn code_params(&self, alpha: f64) -> JointCodeParams {
        JointCodeParams {
            n: self.n,
            m: self.m,
            w: self.w,
            alpha,
            rate: self.rate,
            local_vn_degree: self.local_vn_degree,
            seed: self.code_seed,
        }
    }
}

/// One row of the results table.
#[derive(Clone, Debug, PartialEq)]
pub struct FerRecord {
    pub alpha: f64,
    /// Share of compound CNs actually realised by the code.
    pub achieved_alpha: f64,
    pub sigma: f64,
    pub beta: f64,
    pub trials: usize,
    pub frame_errors: usize,
    pub fer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_iters: f64,
    pub wall_s: f64,
}

impl FerRecord {
    /// `10 log10(1 / sigma)`.
    pub fn sigma_db(&self) -> f64 {
        -10.0 * self.sigma.log10()
    }

    /// CSV row; `wall_s` is written as 0 unless `timing` is set so that
    /// repeated runs give identical files.
    pub fn csv_row(&self, timing: bool) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.alpha,
            self.sigma,
            self.beta,
            self.trials,
            self.frame_errors,
            self.fer,
            self.ci_lo,
            self.ci_hi,
            self.mean_iters,
            if timing { self.wall_s } else { 0.0 }
        )
    }
}

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Everything a trial needs for one `(code, sigma)` point.
pub struct PointSetup<'c> {
    pub decoder: Decoder<'c>,
    pub table: TransitionTable,
    pub map: ModulationMap,
    pub llr: ChannelLlrTable,
    pub max_iters: usize,
}

impl<'c> PointSetup<'c> {
    pub fn new(code: &'c JointCode, config: &ExperimentConfig, sigma: f64) -> Result<Self> {
        let table = build_transition_table(&ChannelParams::new(config.m, sigma, config.beta, config.boundary)?)?;
        let map = ModulationMap::build(config.modulation, config.m)?;
        let llr = ChannelLlrTable::new(&table, &map)?;
        Ok(Self {
            decoder: Decoder::new(code),
            table,
            map,
            llr,
            max_iters: config.max_iters,
        })
    }

    /// Runs one frame with `rng`; returns `(frame error, iterations used)`.
    pub fn trial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(bool, usize)> {
        let code = self.decoder.code();
        let n = code.n();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let xb = rng.random_range(0..self.map.size());
            let yb = self.table.sample(xb, rng);
            x.push(self.map.label(xb));
            y.push(self.map.label(yb));
        }
        let r = code.syndrome(&x)?;
        let out = self.decoder.decode(&y, &r, &self.llr, self.max_iters)?;
        Ok((!out.converged || out.estimate != x, out.iterations_used))
    }
}

/// The RNG of trial `trial` at point `point`.
pub fn trial_rng(seed: u64, point: u32, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(point) << 32) | u64::from(trial));
    rng
}

/// Runs every trial of one point with an already built code.
pub fn run_point_with_code(
    code: &JointCode,
    config: &ExperimentConfig,
    sigma: f64,
    point: u32,
) -> Result<FerRecord> {
    let start = Instant::now();
    let setup = PointSetup::new(code, config, sigma)?;
    let outcomes = (0..config.trials as u32)
        .into_par_iter()
        .map(|t| setup.trial(&mut trial_rng(config.seed, point, t)))
        .collect::<Result<Vec<_>>>()?;
    let frame_errors = outcomes.iter().filter(|o| o.0).count();
    let iters: usize = outcomes.iter().map(|o| o.1).sum();
    let (ci_lo, ci_hi) = wilson_interval(frame_errors, config.trials);
    Ok(FerRecord {
        alpha: code.params().alpha,
        achieved_alpha: code.achieved_alpha(),
        sigma,
        beta: config.beta,
        trials: config.trials,
        frame_errors,
        fer: frame_errors as f64 / config.trials as f64,
        ci_lo,
        ci_hi,
        mean_iters: iters as f64 / config.trials as f64,
        wall_s: start.elapsed().as_secs_f64(),
    })
}

/// Builds the code for `alpha` and runs a single point.
pub fn run_point(config: &ExperimentConfig, alpha: f64, sigma: f64) -> Result<FerRecord> {
    config.validate()?;
    let code = JointCode::build(&config.code_params(alpha))?;
    with_thread_pool(|| run_point_with_code(&code, config, sigma, 0))
}

/// A point that could not be run.
#[derive(Clone, Debug, PartialEq)]
pub struct PointFailure {
    pub alpha: f64,
    pub sigma: Option<f64>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<FerRecord>,
    pub failures: Vec<PointFailure>,
}

impl SweepOutcome {
    pub fn write_csv<W: Write>(&self, mut out: W, timing: bool) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(out, "{}", r.csv_row(timing))?;
        }
        Ok(())
    }

    pub fn to_csv(&self, timing: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, timing).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

/// Runs the cartesian product `alphas x sigmas`. Records are sorted by
/// `(alpha, sigma)`; points whose code cannot be built are reported in
/// `failures` and skipped.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    sweep_with(config, JointCode::build)
}

/// [`sweep`] with a caller-supplied code builder, e.g. one backed by a cache.
pub fn sweep_with(
    config: &ExperimentConfig,
    build: impl Fn(&JointCodeParams) -> Result<JointCode> + Sync,
) -> Result<SweepOutcome> {
    config.validate()?;
    with_thread_pool(|| {
        let mut out = SweepOutcome::default();
        let n_sigma = config.sigmas.len();
        for (ai, &alpha) in config.alphas.iter().enumerate() {
            let code = match build(&config.code_params(alpha)) {
                Ok(c) => c,
                Err(e) => {
                    out.failures.push(PointFailure {
                        alpha,
                        sigma: None,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            for (si, &sigma) in config.sigmas.iter().enumerate() {
                let point = (ai * n_sigma + si) as u32;
                match run_point_with_code(&code, config, sigma, point) {
                    Ok(r) => out.records.push(r),
                    Err(e) => out.failures.push(PointFailure {
                        alpha,
                        sigma: Some(sigma),
                        message: e.to_string(),
                    }),
                }
            }
        }
        out.records
            .sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.sigma.total_cmp(&b.sigma)));
        Ok(out)
    })
}

/// Runs `f` on a pool sized by [`THREADS_ENV`] if set, else on the global pool.
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 120,
            m: 3,
            w: 3,
            rate: 0.5,
            alphas: vec![0.0, 0.3],
            local_vn_degree: 3,
            code_seed: 4,
            sigmas: vec![0.3, 0.05],
            beta: 0.0,
            boundary: Boundary::Cyclic,
            modulation: Scheme::Gray,
            trials: 20,
            max_iters: 30,
            seed: 99,
        }
    }

    #[test]
    fn wilson_against_closed_form() {
        // k = 0: upper bound z^2 / (n + z^2)
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - Z95 * Z95 / (100.0 + Z95 * Z95)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!((hi - 0.5 - 0.0961).abs() < 1e-3);
        let (lo, hi) = wilson_interval(10, 10);
        assert_eq!(hi, 1.0);
        assert!((lo - 10.0 / (10.0 + Z95 * Z95)).abs() < 1e-12);
        for n in [1, 7, 50, 500] {
            for k in 0..=n {
                let (lo, hi) = wilson_interval(k, n);
                let p = k as f64 / n as f64;
                assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
            }
        }
    }

    #[test]
    fn trial_streams_are_distinct_and_repeatable() {
        let a: u64 = trial_rng(1, 0, 0).random();
        assert_eq!(a, trial_rng(1, 0, 0).random::<u64>());
        assert_ne!(a, trial_rng(1, 0, 1).random::<u64>());
        assert_ne!(a, trial_rng(1, 1, 0).random::<u64>());
        assert_ne!(a, trial_rng(2, 0, 0).random::<u64>());
    }

    #[test]
    fn sweep_shape_and_ordering() {
        let mut c = small_config();
        c.sigmas = vec![0.3, 0.05];
        let out = sweep(&c).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.records.len(), 4);
        let keys: Vec<_> = out.records.iter().map(|r| (r.alpha, r.sigma)).collect();
        assert_eq!(keys, vec![(0.0, 0.05), (0.0, 0.3), (0.3, 0.05), (0.3, 0.3)]);
        for r in &out.records {
            assert_eq!(r.fer, r.frame_errors as f64 / r.trials as f64);
            assert!(r.ci_lo <= r.fer && r.fer <= r.ci_hi);
        }
        assert_eq!(out.to_csv(false), sweep(&c).unwrap().to_csv(false));
        assert!(out.to_csv(false).starts_with(CSV_HEADER));
    }

    #[test]
    fn single_point_sweep_equals_run_point() {
        let mut c = small_config();
        c.alphas = vec![0.3];
        c.sigmas = vec![0.3];
        let a = sweep(&c).unwrap().records.remove(0);
        let b = run_point(&c, 0.3, 0.3).unwrap();
        assert_eq!(a.csv_row(false), b.csv_row(false));
    }

    #[test]
    fn trivial_regimes() {
        let mut c = small_config();
        c.alphas = vec![0.3];
        c.sigmas = vec![0.01];
        let r = run_point(&c, 0.3, 0.01).unwrap();
        assert_eq!(r.frame_errors, 0);
        assert_eq!(r.mean_iters, 0.0);
        // uniform channel: 3 bits of noise per symbol against 1.5 bits of syndrome
        c.beta = 1.0 / 8.0;
        c.trials = 10;
        let r = run_point(&c, 0.3, 0.01).unwrap();
        assert_eq!(r.frame_errors, 10);
    }

    #[test]
    fn construction_failure_is_recorded() {
        let mut c = small_config();
        c.alphas = vec![0.3, 0.9];
        c.local_vn_degree = 40;
        c.sigmas = vec![0.1];
        let out = sweep(&c);
        // validation accepts the degree, construction rejects it
        let out = out.unwrap();
        assert!(!out.failures.is_empty());
    }

    #[test]
    fn validation() {
        let mut c = small_config();
        c.alphas.clear();
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.beta = 0.5;
        assert!(c.validate().is_err());
    }
}
