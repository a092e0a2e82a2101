//! Python bindings.
//!
//! Exposes scenario loading, closed-form and grid-oracle propagation, the
//! bound reports and the verification checks as the `stirap_py` module.
//! Configuration errors raise `ValueError`; numerical failures raise
//! `RuntimeError`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::collections::BTreeMap;

use stirap::bounds::{dyson_bound_with, eqtrans_total_bound_with, first_order_bound_with, BoundReport};
use stirap::config::Scenario;
use stirap::model::GaussianPacket;
use stirap::propagator::{oracle_packet, IntegrationFrame};
use stirap::verify::{run_checks, CHECKS};
use stirap::wavepacket::run_sequence;
use stirap::{Error, ErrorCategory};

// ============================================================================
// Conversions
// ============================================================================

fn to_py(e: Error) -> PyErr {
    match e.category() {
        ErrorCategory::Numerical => PyRuntimeError::new_err(e.to_string()),
        ErrorCategory::Config | ErrorCategory::Io => PyValueError::new_err(e.to_string()),
    }
}

fn parse_frame(frame: &str) -> PyResult<IntegrationFrame> {
    match frame {
        "rotating" => Ok(IntegrationFrame::Rotating),
        "adiabatic" => Ok(IntegrationFrame::Adiabatic),
        other => Err(PyValueError::new_err(format!("unknown frame {other:?} (rotating or adiabatic)"))),
    }
}

/// `(z, p, dx2, age, phase)` of a packet.
type PacketTuple = (f64, f64, f64, f64, f64);

fn packet_tuple(p: &GaussianPacket) -> PacketTuple {
    (p.center, p.momentum, p.dx2, p.age, p.phase)
}

fn report_dict(r: &BoundReport) -> BTreeMap<String, f64> {
    let mut d: BTreeMap<String, f64> = r.ingredients.iter().map(|i| (i.name.clone(), i.value)).collect();
    d.insert("value".into(), r.value);
    d.insert("sup_p".into(), r.sup_p);
    d.insert("sup_t".into(), r.sup_t);
    d.insert("epsilon_target".into(), r.epsilon_target);
    d
}

// ============================================================================
// Scenario
// ============================================================================

/// A resolved scenario: atom, packet, momentum grid and pulse plan.
#[pyclass(name = "Scenario", module = "stirap_py")]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    /// Parses a scenario from TOML text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: Scenario::from_toml_str(text).map_err(to_py)? })
    }

    /// Reads a scenario file.
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self { inner: Scenario::load(&path).map_err(to_py)? })
    }

    /// Copy with a different integrator tolerance.
    fn with_tol(&self, tol: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_tol(tol).map_err(to_py)? })
    }

    /// Number of pulse steps.
    #[getter]
    fn steps(&self) -> usize {
        self.inner.plan.steps.len()
    }

    /// Grid momenta.
    #[getter]
    fn momenta(&self) -> Vec<f64> {
        self.inner.grid.momenta()
    }

    /// Messages of every violated physical precondition (empty if runnable).
    fn validate(&self) -> Vec<String> {
        self.inner.validate().to_string().lines().map(str::to_string).collect()
    }

    /// Closed-form trajectory as `(t, z, p, epsilon, phase, state)` rows.
    fn closed_form(&self) -> PyResult<Vec<(f64, f64, f64, f64, f64, String)>> {
        let s = &self.inner;
        let traj = run_sequence(&s.packet, s.state, &s.plan, &s.atom, &s.flights).map_err(to_py)?;
        Ok(traj
            .entries
            .iter()
            .map(|e| {
                let p = &e.packet;
                (e.t, p.center, p.momentum, p.spreading(s.atom.mass), p.phase, e.state.label().to_string())
            })
            .collect())
    }

    /// Grid-oracle run: returns `(ensemble efficiency, per-slice efficiencies,
    /// fitted final packet (z, p, dx2, age, phase))`.
    #[pyo3(signature = (frame = "rotating"))]
    fn run(&self, py: Python<'_>, frame: &str) -> PyResult<(f64, Vec<f64>, PacketTuple)> {
        let frame = parse_frame(frame)?;
        let s = &self.inner;
        let o = py
            .detach(|| oracle_packet(&s.plan, &s.atom, &s.packet, &s.grid, s.tol, frame))
            .map_err(to_py)?;
        let effs: Vec<f64> = o.slices.iter().map(|r| r.amplitude.norm_sqr()).collect();
        let total = s.grid.total_weight();
        let ensemble = s.grid.points.iter().zip(&effs).map(|(g, e)| g.weight * e).sum::<f64>() / total;
        Ok((ensemble, effs, packet_tuple(&o.fitted)))
    }

    /// First-order, Dyson and equivalent-transformation bounds of step
    /// `index`, each as a dict of value and ingredients.
    fn bounds(&self, py: Python<'_>, index: usize) -> PyResult<BTreeMap<String, BTreeMap<String, f64>>> {
        let s = &self.inner;
        let step = s
            .plan
            .steps
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("step {index} out of range")))?;
        let opts = &s.bound_options;
        py.detach(|| -> stirap::Result<_> {
            let mut out = BTreeMap::new();
            out.insert("first_order".into(), report_dict(&first_order_bound_with(step, &s.atom, s.dpm, opts)?));
            out.insert("dyson".into(), report_dict(&dyson_bound_with(step, &s.atom, s.dpm, opts)?));
            out.insert("eqtrans_total".into(), report_dict(&eqtrans_total_bound_with(step, &s.atom, &s.grid, opts)?));
            Ok(out)
        })
        .map_err(to_py)
    }

    /// Runs verification checks (all when `checks` is `None`); returns
    /// `(passed, [(name, passed, value, threshold, detail)])`.
    #[pyo3(signature = (checks = None))]
    #[allow(clippy::type_complexity)]
    fn verify(
        &self,
        py: Python<'_>,
        checks: Option<Vec<String>>,
    ) -> (bool, Vec<(String, bool, f64, f64, String)>) {
        let s = &self.inner;
        let report = py.detach(|| run_checks(s, checks.as_deref()));
        let rows = report
            .checks
            .into_iter()
            .map(|c| (c.name, c.passed, c.value, c.threshold, c.detail))
            .collect();
        (report.passed, rows)
    }
}

// ============================================================================
// Module
// ============================================================================

/// Names of the verification checks.
#[pyfunction]
fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

/// Momentum amplitude `(re, im)` of a Gaussian packet at momentum `p`.
#[pyfunction]
fn momentum_amplitude(packet: PacketTuple, mass: f64, p: f64) -> PyResult<(f64, f64)> {
    let (z, p0, dx2, age, phase) = packet;
    let pk = GaussianPacket::new(z, p0, dx2, age, phase).map_err(to_py)?;
    let a = stirap::wavepacket::momentum_amplitude(&pk, mass, p);
    Ok((a.re, a.im))
}

#[pymodule]
fn stirap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", stirap::io::ARTIFACT_VERSION)?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(check_names, m)?)?;
    m.add_function(wrap_pyfunction!(momentum_amplitude, m)?)?;
    Ok(())
}
