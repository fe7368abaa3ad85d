//! Python bindings: modulation maps, the channel model, code construction,
//! decoding and single-point FER runs.

use jointbp_core::channel::{
    build_transition_table, fit_channel as core_fit, Boundary, ChannelLlrTable, ChannelParams, OffsetHistogram,
};
use jointbp_core::code::{JointCode as CoreCode, JointCodeParams, SyndromePair};
use jointbp_core::decoder::{f_marginal_all as core_marginals, Decoder};
use jointbp_core::harness::{self, ExperimentConfig};
use jointbp_core::modulation::{run_metrics as core_run_metrics, ModulationMap, Scheme};
use jointbp_core::{wht as core_wht, Error};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Construction(m) => PyRuntimeError::new_err(m),
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn scheme(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(to_py)
}

fn boundary(name: &str) -> PyResult<Boundary> {
    name.parse().map_err(to_py)
}

/// Labels of bins `0..2^bits` under `scheme` ("gray", "balanced" or "identity").
#[pyfunction]
#[pyo3(signature = (bits, scheme_name = "balanced"))]
fn modulation_map(bits: u8, scheme_name: &str) -> PyResult<Vec<u16>> {
    Ok(ModulationMap::build(scheme(scheme_name)?, bits).map_err(to_py)?.forward().to_vec())
}

/// Adjacent-bin transitions per bit level (level 1 = MSB first).
#[pyfunction]
fn level_transitions(labels: Vec<u16>, bits: u8) -> PyResult<Vec<usize>> {
    let map = ModulationMap::from_forward(bits, labels).map_err(to_py)?;
    Ok(core_run_metrics(&map).transitions)
}

/// Row `y` holds `P(X = x | Y = y)`.
#[pyfunction]
#[pyo3(signature = (bits, sigma, beta = 0.0, boundary_name = "cyclic"))]
fn transition_table(bits: u8, sigma: f64, beta: f64, boundary_name: &str) -> PyResult<Vec<Vec<f64>>> {
    let t = build_transition_table(&ChannelParams::new(bits, sigma, beta, boundary(boundary_name)?).map_err(to_py)?)
        .map_err(to_py)?;
    Ok((0..t.size()).map(|y| t.row(y).to_vec()).collect())
}

#[pyclass(get_all, frozen)]
struct ChannelFit {
    sigma: f64,
    beta: f64,
    gaussian_weight: f64,
    log_likelihood: f64,
    tv_distance: f64,
    samples: u64,
}

/// Fits `(sigma, beta)` to a list of `bob - alice` bin offsets.
#[pyfunction]
fn fit_channel(offsets: Vec<i64>, bits: u8) -> PyResult<ChannelFit> {
    let f = core_fit(&OffsetHistogram::from_offsets(offsets), bits).map_err(to_py)?;
    Ok(ChannelFit {
        sigma: f.params.sigma,
        beta: f.params.beta,
        gaussian_weight: f.gaussian_weight,
        log_likelihood: f.log_likelihood,
        tv_distance: f.tv_distance,
        samples: f.samples,
    })
}

/// Forward Walsh-Hadamard transform with the 1/2 factor per stage.
#[pyfunction]
fn wht(values: Vec<f64>) -> PyResult<Vec<f64>> {
    core_wht::wht(&values).map_err(to_py)
}

#[pyfunction]
fn wht_inverse(values: Vec<f64>) -> PyResult<Vec<f64>> {
    core_wht::wht_inverse(&values).map_err(to_py)
}

/// Per-level bit marginals of a length-`2^M` LLR vector.
#[pyfunction]
fn f_marginal_all(llr: Vec<f64>) -> PyResult<Vec<f64>> {
    if llr.len() < 2 || !llr.len().is_power_of_two() {
        return Err(PyValueError::new_err("length must be a power of two >= 2"));
    }
    Ok(core_marginals(&llr))
}

#[pyfunction]
fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    harness::wilson_interval(errors, trials)
}

#[pyclass(get_all, frozen)]
struct IngestResult {
    alice_bins: Vec<u16>,
    bob_bins: Vec<u16>,
    total_frames: u64,
    effective: u64,
    empty: u64,
    multiple: u64,
    unpaired: u64,
}

/// Pairs sorted detection times into bins of effective frames.
#[pyfunction]
fn ingest(alice: Vec<u64>, bob: Vec<u64>, frame_len: u64, bits: u8) -> PyResult<IngestResult> {
    let (b, s) = harness::ingest_timestamps(&alice, &bob, frame_len, bits).map_err(to_py)?;
    Ok(IngestResult {
        alice_bins: b.alice_bins().to_vec(),
        bob_bins: b.bob_bins().to_vec(),
        total_frames: s.total_frames,
        effective: s.effective,
        empty: s.empty,
        multiple: s.multiple,
        unpaired: s.unpaired,
    })
}

#[pyclass(get_all, frozen)]
struct DecodeResult {
    estimate: Vec<u16>,
    delta: Vec<u16>,
    converged: bool,
    iterations_used: usize,
}

/// A joint local-global code.
#[pyclass(frozen)]
struct JointCode {
    inner: CoreCode,
}

#[pymethods]
impl JointCode {
    #[new]
    #[pyo3(signature = (n, m, w, rate = 0.5, alpha = 0.0, local_vn_degree = 3, seed = 0))]
    fn new(n: usize, m: u8, w: u8, rate: f64, alpha: f64, local_vn_degree: usize, seed: u64) -> PyResult<Self> {
        let inner = CoreCode::build(&JointCodeParams {
            n,
            m,
            w,
            alpha,
            rate,
            local_vn_degree,
            seed,
        })
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CoreCode::from_text(text).map_err(to_py)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> u8 {
        self.inner.m()
    }

    #[getter]
    fn w(&self) -> u8 {
        self.inner.w()
    }

    #[getter]
    fn global_cn_count(&self) -> usize {
        self.inner.global().len()
    }

    #[getter]
    fn local_cn_count(&self) -> usize {
        self.inner.local_cn_count()
    }

    #[getter]
    fn achieved_alpha(&self) -> f64 {
        self.inner.achieved_alpha()
    }

    #[getter]
    fn design_rate(&self) -> f64 {
        self.inner.design_rate()
    }

    /// `(local, global)`: per-level lists of parity bits and one W-bit
    /// label per compound CN.
    fn syndrome(&self, labels: Vec<u16>) -> PyResult<(Vec<Vec<bool>>, Vec<u16>)> {
        let s = self.inner.syndrome(&labels).map_err(to_py)?;
        Ok((s.local, s.global))
    }

    /// Recovers Alice's labels from Bob's labels `y` and her syndrome.
    #[pyo3(signature = (y, local, global_, sigma, beta = 0.0, modulation = "balanced", boundary_name = "cyclic", max_iters = 50))]
    #[allow(clippy::too_many_arguments)]
    fn decode(
        &self,
        py: Python<'_>,
        y: Vec<u16>,
        local: Vec<Vec<bool>>,
        global_: Vec<u16>,
        sigma: f64,
        beta: f64,
        modulation: &str,
        boundary_name: &str,
        max_iters: usize,
    ) -> PyResult<DecodeResult> {
        let m = self.inner.m();
        let table = build_transition_table(&ChannelParams::new(m, sigma, beta, boundary(boundary_name)?).map_err(to_py)?)
            .map_err(to_py)?;
        let map = ModulationMap::build(scheme(modulation)?, m).map_err(to_py)?;
        let llr = ChannelLlrTable::new(&table, &map).map_err(to_py)?;
        let received = SyndromePair { local, global: global_ };
        let out = py
            .detach(|| Decoder::new(&self.inner).decode(&y, &received, &llr, max_iters))
            .map_err(to_py)?;
        Ok(DecodeResult {
            estimate: out.estimate,
            delta: out.delta,
            converged: out.converged,
            iterations_used: out.iterations_used,
        })
    }
}

#[pyclass(get_all, frozen)]
struct FerPoint {
    alpha: f64,
    achieved_alpha: f64,
    sigma: f64,
    beta: f64,
    trials: usize,
    frame_errors: usize,
    fer: f64,
    ci_lo: f64,
    ci_hi: f64,
    mean_iters: f64,
    wall_s: f64,
}

/// Monte-Carlo FER at one `(alpha, sigma)` point.
#[pyfunction]
#[pyo3(signature = (n, m, w, alpha, sigma, trials, rate = 0.5, beta = 0.0, modulation = "balanced", max_iters = 50, seed = 0, code_seed = 0))]
#[allow(clippy::too_many_arguments)]
fn run_point(
    py: Python<'_>,
    n: usize,
    m: u8,
    w: u8,
    alpha: f64,
    sigma: f64,
    trials: usize,
    rate: f64,
    beta: f64,
    modulation: &str,
    max_iters: usize,
    seed: u64,
    code_seed: u64,
) -> PyResult<FerPoint> {
    let cfg = ExperimentConfig {
        n,
        m,
        w,
        rate,
        alphas: vec![alpha],
        local_vn_degree: 3,
        code_seed,
        sigmas: vec![sigma],
        beta,
        boundary: Boundary::Cyclic,
        modulation: scheme(modulation)?,
        trials,
        max_iters,
        seed,
    };
    let r = py.detach(|| harness::run_point(&cfg, alpha, sigma)).map_err(to_py)?;
    Ok(FerPoint {
        alpha: r.alpha,
        achieved_alpha: r.achieved_alpha,
        sigma: r.sigma,
        beta: r.beta,
        trials: r.trials,
        frame_errors: r.frame_errors,
        fer: r.fer,
        ci_lo: r.ci_lo,
        ci_hi: r.ci_hi,
        mean_iters: r.mean_iters,
        wall_s: r.wall_s,
    })
}

#[pymodule]
fn jointbp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<JointCode>()?;
    m.add_class::<DecodeResult>()?;
    m.add_class::<ChannelFit>()?;
    m.add_class::<IngestResult>()?;
    m.add_class::<FerPoint>()?;
    m.add_function(wrap_pyfunction!(modulation_map, m)?)?;
    m.add_function(wrap_pyfunction!(level_transitions, m)?)?;
    m.add_function(wrap_pyfunction!(transition_table, m)?)?;
    m.add_function(wrap_pyfunction!(fit_channel, m)?)?;
    m.add_function(wrap_pyfunction!(wht, m)?)?;
    m.add_function(wrap_pyfunction!(wht_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(f_marginal_all, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(ingest, m)?)?;
    m.add_function(wrap_pyfunction!(run_point, m)?)?;
    Ok(())
}
