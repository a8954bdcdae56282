//! Python extension module exposing the spinbus types and operations.
//!
//! Build with `cargo build --release -p spinbus-py` and rename the produced
//! `libspinbus_py.so` to `spinbus.so` somewhere on `sys.path` (see
//! `python/smoke_test.py`, which automates this).

use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use spinbus::dynamics;
use spinbus::entanglement;
use spinbus::graph::{GaugePhases, SiteId};
use spinbus::hamiltonian::build_single_excitation;
use spinbus::optimizer;
use spinbus::symmetry;

fn err(e: spinbus::Error) -> PyErr {
    match e {
        spinbus::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Weighted spin graph with local fields and bond phases.
#[pyclass(frozen)]
struct SpinGraph {
    inner: spinbus::SpinGraph,
}

#[pymethods]
impl SpinGraph {
    /// Uniform open chain; fields default to zero.
    #[staticmethod]
    #[pyo3(signature = (n, coupling=1.0, fields=None))]
    fn chain(n: usize, coupling: f64, fields: Option<Vec<f64>>) -> PyResult<Self> {
        let fields = fields.unwrap_or_else(|| vec![0.0; n]);
        spinbus::SpinGraph::make_chain(n, coupling, &fields)
            .map(|inner| SpinGraph { inner })
            .map_err(err)
    }

    /// Open chain with per-bond couplings.
    #[staticmethod]
    #[pyo3(signature = (couplings, fields=None))]
    fn weighted_chain(couplings: Vec<f64>, fields: Option<Vec<f64>>) -> PyResult<Self> {
        let fields = fields.unwrap_or_else(|| vec![0.0; couplings.len() + 1]);
        spinbus::SpinGraph::make_weighted_chain(&couplings, &fields)
            .map(|inner| SpinGraph { inner })
            .map_err(err)
    }

    /// Ring threaded by `flux` flux quanta.
    #[staticmethod]
    #[pyo3(signature = (n, coupling=1.0, flux=0.0))]
    fn ring(n: usize, coupling: f64, flux: f64) -> PyResult<Self> {
        spinbus::SpinGraph::make_ring(n, coupling, flux)
            .map(|inner| SpinGraph { inner })
            .map_err(err)
    }

    /// Parses the JSON graph config format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        spinbus::SpinGraph::parse(text).map(|inner| SpinGraph { inner }).map_err(err)
    }

    /// Switches to the Heisenberg interaction.
    fn heisenberg(&self) -> Self {
        SpinGraph { inner: self.inner.clone().with_model(spinbus::Model::Heisenberg) }
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }

    #[getter]
    fn model(&self) -> String {
        self.inner.model().to_string()
    }

    fn gauge_transform(&self, chi: Vec<f64>) -> PyResult<Self> {
        self.inner.gauge_transform(&GaugePhases(chi)).map(|inner| SpinGraph { inner }).map_err(err)
    }

    fn connected_components(&self) -> Vec<usize> {
        self.inner.connected_components()
    }

    fn __repr__(&self) -> String {
        format!(
            "SpinGraph(model={}, n_sites={}, bonds={})",
            self.inner.model(),
            self.inner.n_sites(),
            self.inner.bonds().len()
        )
    }
}

/// Cached eigendecomposition of the single-excitation Hamiltonian.
#[pyclass(frozen)]
struct Propagator {
    inner: dynamics::Propagator,
}

#[pymethods]
impl Propagator {
    #[new]
    fn new(graph: &SpinGraph) -> PyResult<Self> {
        dynamics::diagonalize(&build_single_excitation(&graph.inner))
            .map(|inner| Propagator { inner })
            .map_err(err)
    }

    /// Eigenvalues in ascending order.
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    /// Single transition amplitude `f_{to,from}(t)`.
    fn amplitude(&self, t: f64, to: usize, from: usize) -> PyResult<C64> {
        let n = self.inner.n_sites();
        if to >= n || from >= n {
            return Err(PyValueError::new_err(format!(
                "sites ({to},{from}) out of range for {n} sites"
            )));
        }
        Ok(self.inner.amplitude(t, SiteId(to), SiteId(from)))
    }

    /// Full amplitude matrix at time t as nested lists.
    fn amplitude_matrix(&self, t: f64) -> Vec<Vec<C64>> {
        let f = dynamics::transition_amplitudes(&self.inner, t);
        let n = self.inner.n_sites();
        (0..n).map(|i| (0..n).map(|j| f.matrix()[(i, j)]).collect()).collect()
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }
}

/// Initial encoding `α|μ⟩ + β|ν⟩` (normalized on construction).
#[pyclass(frozen)]
struct Encoding {
    inner: entanglement::Encoding,
}

#[pymethods]
impl Encoding {
    #[new]
    #[pyo3(signature = (mu, nu=None, alpha=C64::new(1.0, 0.0), beta=C64::new(0.0, 0.0)))]
    fn new(mu: usize, nu: Option<usize>, alpha: C64, beta: C64) -> PyResult<Self> {
        let inner = match nu {
            Some(nu) => entanglement::Encoding::normalized(SiteId(mu), SiteId(nu), alpha, beta)
                .map_err(err)?,
            None => {
                if beta.norm() != 0.0 {
                    return Err(PyValueError::new_err("a nonzero β requires a second site ν"));
                }
                entanglement::Encoding::excitation(SiteId(mu))
            }
        };
        Ok(Encoding { inner })
    }

    /// Maximally entangled (Bell) encoding.
    #[staticmethod]
    fn me(mu: usize, nu: usize) -> PyResult<Self> {
        entanglement::Encoding::me(SiteId(mu), SiteId(nu))
            .map(|inner| Encoding { inner })
            .map_err(err)
    }

    #[getter]
    fn mu(&self) -> usize {
        self.inner.mu().0
    }

    #[getter]
    fn nu(&self) -> usize {
        self.inner.nu().0
    }

    #[getter]
    fn alpha(&self) -> C64 {
        self.inner.alpha()
    }

    #[getter]
    fn beta(&self) -> C64 {
        self.inner.beta()
    }

    fn initial_concurrence(&self) -> f64 {
        self.inner.initial_concurrence()
    }
}

/// Result of an encoding optimization.
#[pyclass(frozen, get_all)]
struct EncodingOptimum {
    alpha: C64,
    beta: C64,
    c: f64,
    t: f64,
    method: String,
}

impl From<optimizer::EncodingOptimum> for EncodingOptimum {
    fn from(o: optimizer::EncodingOptimum) -> Self {
        EncodingOptimum {
            alpha: o.alpha,
            beta: o.beta,
            c: o.c,
            t: o.t,
            method: o.method.to_string(),
        }
    }
}

/// Result of a flux/time transfer search.
#[pyclass(frozen, get_all)]
struct FluxTransferResult {
    flux: f64,
    t: f64,
    amplitude: f64,
    probability: f64,
}

/// Two-stage targeting schedule.
#[pyclass(frozen, get_all)]
struct TargetPlan {
    stages: Vec<(f64, f64)>,
    target: (usize, usize),
    achieved_c: f64,
    transfer_site: usize,
    transfer_amplitude: f64,
}

/// Concurrence of the target pair `(m, n)` at time `t` for a given
/// encoding, via the closed form `2|A||B|`.
#[pyfunction]
fn concurrence(p: &Propagator, e: &Encoding, m: usize, n: usize, t: f64) -> PyResult<f64> {
    let f = dynamics::transition_amplitudes(&p.inner, t);
    let pa = entanglement::pair_amplitudes(&f, &e.inner, SiteId(m), SiteId(n)).map_err(err)?;
    Ok(entanglement::concurrence_closed_form(&pa))
}

/// Target-pair amplitudes `(A, B)` at time `t`.
#[pyfunction]
fn pair_amplitudes(
    p: &Propagator,
    e: &Encoding,
    m: usize,
    n: usize,
    t: f64,
) -> PyResult<(C64, C64)> {
    let f = dynamics::transition_amplitudes(&p.inner, t);
    let pa = entanglement::pair_amplitudes(&f, &e.inner, SiteId(m), SiteId(n)).map_err(err)?;
    Ok((pa.a, pa.b))
}

/// Wootters concurrence of the pair state built from amplitudes `(a, b)`;
/// independent cross-check of the closed form.
#[pyfunction]
fn wootters_concurrence(a: C64, b: C64) -> PyResult<f64> {
    let pa = entanglement::PairAmplitudes { a, b, m: SiteId(0), n: SiteId(1), t: 0.0 };
    let state = entanglement::pair_state(&pa).map_err(err)?;
    entanglement::concurrence_wootters(&state).map_err(err)
}

/// All involutions of the graph as permutation lists.
#[pyfunction]
fn find_involutions(graph: &SpinGraph) -> PyResult<Vec<Vec<usize>>> {
    symmetry::find_involutions(&graph.inner)
        .map(|invs| invs.iter().map(|i| i.perm().to_vec()).collect())
        .map_err(err)
}

/// Symmetry class of a configuration: "class-i", "class-ii", or "none".
#[pyfunction]
#[pyo3(signature = (graph, mu, m, n, nu=None))]
fn classify(
    graph: &SpinGraph,
    mu: usize,
    m: usize,
    n: usize,
    nu: Option<usize>,
) -> PyResult<String> {
    symmetry::classify(&graph.inner, SiteId(mu), nu.map(SiteId), SiteId(m), SiteId(n))
        .map(|cls| cls.class.to_string())
        .map_err(err)
}

/// Exact best encoding at a fixed time.
#[pyfunction]
fn optimal_encoding(
    p: &Propagator,
    mu: usize,
    nu: usize,
    m: usize,
    n: usize,
    t: f64,
) -> PyResult<EncodingOptimum> {
    let f = dynamics::transition_amplitudes(&p.inner, t);
    optimizer::optimal_encoding_at_time(&f, SiteId(mu), SiteId(nu), SiteId(m), SiteId(n))
        .map(Into::into)
        .map_err(err)
}

/// Best (encoding, time) over a uniform time grid.
#[pyfunction]
#[pyo3(signature = (p, mu, nu, m, n, horizon=40.0, steps=4096))]
fn optimize_over_time(
    p: &Propagator,
    mu: usize,
    nu: usize,
    m: usize,
    n: usize,
    horizon: f64,
    steps: usize,
) -> PyResult<EncodingOptimum> {
    optimizer::optimize_over_time(
        &p.inner,
        SiteId(mu),
        SiteId(nu),
        SiteId(m),
        SiteId(n),
        horizon,
        steps,
    )
    .map(Into::into)
    .map_err(err)
}

/// Flux/time search for the best ring transfer `source → target`.
#[pyfunction]
#[pyo3(signature = (n, source, target, coupling=1.0, flux_points=512, time_points=4096, horizon=40.0, refine=1))]
#[allow(clippy::too_many_arguments)]
fn flux_transfer_search(
    n: usize,
    source: usize,
    target: usize,
    coupling: f64,
    flux_points: usize,
    time_points: usize,
    horizon: f64,
    refine: usize,
) -> PyResult<FluxTransferResult> {
    let budgets = optimizer::SearchBudgets {
        flux_points,
        time_points,
        time_horizon: horizon,
        refine_passes: refine,
    };
    optimizer::flux_transfer_search(n, coupling, SiteId(source), SiteId(target), &budgets)
        .map(|r| FluxTransferResult {
            flux: r.flux,
            t: r.t,
            amplitude: r.amplitude,
            probability: r.probability,
        })
        .map_err(err)
}

/// Two-stage fixed-site targeting plan on a ring.
#[pyfunction]
#[pyo3(signature = (n, mu, m, n_site, coupling=1.0, flux_points=512, time_points=4096, horizon=40.0))]
#[allow(clippy::too_many_arguments)]
fn plan_targeting(
    n: usize,
    mu: usize,
    m: usize,
    n_site: usize,
    coupling: f64,
    flux_points: usize,
    time_points: usize,
    horizon: f64,
) -> PyResult<TargetPlan> {
    let budgets = optimizer::PlanBudgets {
        flux: optimizer::SearchBudgets {
            flux_points,
            time_points,
            time_horizon: horizon,
            refine_passes: 1,
        },
        stage2_time_points: time_points,
        stage2_horizon: horizon,
        stage2_refine_passes: 1,
        keep_flux_in_stage2: false,
    };
    optimizer::plan_targeting(n, coupling, SiteId(mu), SiteId(m), SiteId(n_site), &budgets)
        .map(|plan| TargetPlan {
            stages: plan.stages.iter().map(|s| (s.flux, s.duration)).collect(),
            target: (plan.target.0 .0, plan.target.1 .0),
            achieved_c: plan.achieved_c,
            transfer_site: plan.transfer_site.0,
            transfer_amplitude: plan.transfer_amplitude,
        })
        .map_err(err)
}

/// Max deviation from the disconnected-region factorization of the
/// concurrence over the given times.
#[pyfunction]
fn isolated_factorization_check(
    graph: &SpinGraph,
    e: &Encoding,
    m: usize,
    n: usize,
    times: Vec<f64>,
) -> PyResult<f64> {
    optimizer::isolated_factorization_check(&graph.inner, &e.inner, SiteId(m), SiteId(n), &times)
        .map_err(err)
}

#[pymodule]
#[pyo3(name = "spinbus")]
fn spinbus_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SpinGraph>()?;
    m.add_class::<Propagator>()?;
    m.add_class::<Encoding>()?;
    m.add_class::<EncodingOptimum>()?;
    m.add_class::<FluxTransferResult>()?;
    m.add_class::<TargetPlan>()?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(pair_amplitudes, m)?)?;
    m.add_function(wrap_pyfunction!(wootters_concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(find_involutions, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_encoding, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_over_time, m)?)?;
    m.add_function(wrap_pyfunction!(flux_transfer_search, m)?)?;
    m.add_function(wrap_pyfunction!(plan_targeting, m)?)?;
    m.add_function(wrap_pyfunction!(isolated_factorization_check, m)?)?;
    Ok(())
}
