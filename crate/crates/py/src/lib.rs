//! Python bindings for the radgrid engine.
//!
//! The module is deliberately thin: detections and poses are small value
//! classes, the grid is driven through `GridMap.step`, and layer contents come
//! back as flat lists in row-major order.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use radgrid::io::scanlog;
use radgrid::io::snapshot::encode_snapshot;
use radgrid::manager::PHASES;
use radgrid::sim::{ScanRecord, Scenario};
use radgrid::surface::SurfaceKind;
use radgrid::{
    Config, Error, Mode, NoiseStd, Representation, SensorFrame, SensorModelParams, SensorMount, UnifyState, Vec2,
};

fn py_err(e: Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

#[pyclass(name = "Detection", from_py_object)]
#[derive(Clone)]
pub struct PyDetection {
    inner: radgrid::Detection,
}

#[pymethods]
impl PyDetection {
    #[new]
    #[pyo3(signature = (range, azimuth, range_rate=0.0, sensor_id=0, timestamp=0.0, sigma_range=None, sigma_azimuth=None, sigma_range_rate=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        range: f64,
        azimuth: f64,
        range_rate: f64,
        sensor_id: u32,
        timestamp: f64,
        sigma_range: Option<f64>,
        sigma_azimuth: Option<f64>,
        sigma_range_rate: Option<f64>,
    ) -> PyResult<Self> {
        let noise = NoiseStd::default();
        let inner = radgrid::Detection {
            sensor_id,
            timestamp,
            range,
            azimuth,
            range_rate,
            sigma_range: sigma_range.unwrap_or(noise.range),
            sigma_azimuth: sigma_azimuth.unwrap_or(noise.azimuth),
            sigma_range_rate: sigma_range_rate.unwrap_or(noise.range_rate),
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn range(&self) -> f64 {
        self.inner.range
    }
    #[getter]
    fn azimuth(&self) -> f64 {
        self.inner.azimuth
    }
    #[getter]
    fn range_rate(&self) -> f64 {
        self.inner.range_rate
    }
    #[getter]
    fn sensor_id(&self) -> u32 {
        self.inner.sensor_id
    }
    #[getter]
    fn timestamp(&self) -> f64 {
        self.inner.timestamp
    }

    fn __repr__(&self) -> String {
        let d = &self.inner;
        format!(
            "Detection(range={}, azimuth={}, range_rate={}, sensor_id={}, timestamp={})",
            d.range, d.azimuth, d.range_rate, d.sensor_id, d.timestamp
        )
    }
}

#[pyclass(name = "EgoPose", from_py_object)]
#[derive(Clone)]
pub struct PyEgoPose {
    inner: radgrid::EgoPose,
}

#[pymethods]
impl PyEgoPose {
    #[new]
    #[pyo3(signature = (x=0.0, y=0.0, heading=0.0, vx=0.0, vy=0.0, timestamp=0.0))]
    fn new(x: f64, y: f64, heading: f64, vx: f64, vy: f64, timestamp: f64) -> Self {
        Self {
            inner: radgrid::EgoPose::new(Vec2::new(x, y), heading, Vec2::new(vx, vy), timestamp),
        }
    }

    #[getter]
    fn position(&self) -> (f64, f64) {
        (self.inner.position.x, self.inner.position.y)
    }
    #[getter]
    fn heading(&self) -> f64 {
        self.inner.heading
    }
    #[getter]
    fn velocity(&self) -> (f64, f64) {
        (self.inner.velocity.x, self.inner.velocity.y)
    }
    #[getter]
    fn timestamp(&self) -> f64 {
        self.inner.timestamp
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "EgoPose(x={}, y={}, heading={}, vx={}, vy={}, timestamp={})",
            p.position.x, p.position.y, p.heading, p.velocity.x, p.velocity.y, p.timestamp
        )
    }
}

/// Mixture inverse sensor models for a sensor at the origin looking along +x.
#[pyclass(name = "SensorModel")]
pub struct PySensorModel {
    inner: radgrid::SensorModel,
}

#[pymethods]
impl PySensorModel {
    #[new]
    #[pyo3(signature = (k_pos=1, k_range_rate=1))]
    fn new(k_pos: u32, k_range_rate: u32) -> PyResult<Self> {
        let params = SensorModelParams::default().with_shift_bounds(k_pos, k_range_rate);
        Ok(Self {
            inner: radgrid::SensorModel::new(params).map_err(py_err)?,
        })
    }

    #[getter]
    fn delta_range(&self) -> f64 {
        self.inner.params().delta_range
    }
    #[getter]
    fn delta_azimuth(&self) -> f64 {
        self.inner.params().delta_azimuth
    }
    #[getter]
    fn delta_range_rate(&self) -> f64 {
        self.inner.params().delta_range_rate
    }

    /// Occupancy likelihood of the cell at polar position `(range, azimuth)`.
    fn occupancy(&self, range: f64, azimuth: f64, z: &PyDetection) -> PyResult<f64> {
        self.inner.occupancy_likelihood((range, azimuth), &z.inner).map_err(py_err)
    }

    fn free(&self, range: f64, azimuth: f64, z: &PyDetection) -> PyResult<f64> {
        self.inner.free_space_likelihood((range, azimuth), &z.inner).map_err(py_err)
    }

    /// Range-rate likelihood of a state at `position` moving with `velocity`.
    fn velocity(&self, position: (f64, f64), velocity: (f64, f64), z: &PyDetection) -> PyResult<f64> {
        let frame = SensorFrame::new(&SensorMount::identity(z.inner.sensor_id), &radgrid::EgoPose::at_origin(0.0));
        self.inner
            .velocity_likelihood(
                Vec2::new(position.0, position.1),
                Vec2::new(velocity.0, velocity.1),
                &z.inner,
                &frame,
            )
            .map_err(py_err)
    }

    /// `(range_rate, probability)` alias hypotheses of a measured range rate.
    fn range_rate_hypotheses(&self, range_rate: f64) -> Vec<(f64, f64)> {
        self.inner.range_rate_hypotheses(range_rate)
    }
}

/// Binomial shift probabilities for shifts `-k..=k`.
#[pyfunction]
fn shift_weights(k: u32) -> Vec<f64> {
    radgrid::sensor_models::shift_weights(k)
}

/// Samples a likelihood surface; returns `(nx, ny, values)` with values in
/// row-major order.
#[pyfunction]
#[pyo3(signature = (model, range=80.0, azimuth=0.0, range_rate=0.0, k=1, k_rr=1, resolution=0.5))]
fn surface(
    model: &str,
    range: f64,
    azimuth: f64,
    range_rate: f64,
    k: u32,
    k_rr: u32,
    resolution: f64,
) -> PyResult<(usize, usize, Vec<f64>)> {
    let kind: SurfaceKind = parse(model)?;
    let sensor = radgrid::SensorModel::new(SensorModelParams::default().with_shift_bounds(k, k_rr)).map_err(py_err)?;
    let z = PyDetection::new(range, azimuth, range_rate, 0, 0.0, None, None, None)?;
    let window = radgrid::surface::default_window(kind, resolution);
    window.validate().map_err(py_err)?;
    let s = radgrid::surface::surface(&sensor, kind, &z.inner, &window).map_err(py_err)?;
    Ok((s.nx(), s.ny(), s.values))
}

type PyScan = (PyEgoPose, Vec<PyDetection>);

type CellStats = ((f64, f64), [f64; 3], usize, bool);

fn to_py(records: Vec<ScanRecord>) -> Vec<PyScan> {
    records
        .into_iter()
        .map(|r| {
            (
                PyEgoPose { inner: r.pose },
                r.detections.into_iter().map(|inner| PyDetection { inner }).collect(),
            )
        })
        .collect()
}

fn from_py(scans: Vec<PyScan>) -> Vec<ScanRecord> {
    scans
        .into_iter()
        .map(|(pose, dets)| ScanRecord {
            pose: pose.inner,
            detections: dets.into_iter().map(|d| d.inner).collect(),
        })
        .collect()
}

/// Simulates a bundled scenario (by name) or a scenario file into a list of
/// `(pose, detections)` scans.
#[pyfunction]
#[pyo3(signature = (scenario, seed=None))]
fn simulate(scenario: &str, seed: Option<u64>) -> PyResult<Vec<PyScan>> {
    let sc = match Scenario::bundled(scenario) {
        Some(sc) => sc,
        None => Scenario::load(std::path::Path::new(scenario)).map_err(py_err)?,
    };
    Ok(to_py(sc.generate(seed.unwrap_or(sc.seed))))
}

#[pyfunction]
fn read_scan_log(path: PathBuf) -> PyResult<Vec<PyScan>> {
    Ok(to_py(scanlog::read_scan_log(&path).map_err(py_err)?))
}

#[pyfunction]
fn write_scan_log(path: PathBuf, scans: Vec<PyScan>) -> PyResult<()> {
    scanlog::write_scan_log(&path, &from_py(scans)).map_err(py_err)
}

/// Occupancy and velocity layers driven one scan at a time.
#[pyclass(name = "GridMap")]
pub struct PyGridMap {
    inner: UnifyState,
}

#[pymethods]
impl PyGridMap {
    /// `config` is TOML text in the `run --config` format; defaults apply when omitted.
    #[new]
    #[pyo3(signature = (config=None, mode="full", representation=None, seed=0, start=(0.0, 0.0)))]
    fn new(config: Option<&str>, mode: &str, representation: Option<&str>, seed: u64, start: (f64, f64)) -> PyResult<Self> {
        let mut cfg = match config {
            Some(text) => Config::from_toml_str(text, "<config>").map_err(py_err)?,
            None => Config::default(),
        };
        if let Some(r) = representation {
            cfg.occupancy.representation = parse::<Representation>(r)?;
        }
        let mode: Mode = parse(mode)?;
        let inner = UnifyState::new(cfg, mode, Vec2::new(start.0, start.1), seed).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Runs one cycle and returns its report as a dict.
    fn step<'py>(&mut self, py: Python<'py>, pose: &PyEgoPose, detections: Vec<PyDetection>) -> PyResult<Bound<'py, PyDict>> {
        let scan: Vec<_> = detections.into_iter().map(|d| d.inner).collect();
        let r = self.inner.step(&pose.inner, &scan).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("cycle", r.cycle)?;
        d.set_item("timestamp", r.timestamp)?;
        d.set_item("detections", r.detections)?;
        d.set_item("scrolled", r.scrolled)?;
        d.set_item("particles", r.particles)?;
        d.set_item("transfers", r.transfers)?;
        d.set_item("transferred", r.transferred)?;
        d.set_item("spawned", r.spawned)?;
        d.set_item("clusters", r.clusters)?;
        let phases = PyDict::new(py);
        for (name, ms) in PHASES.iter().zip(r.phase_ms) {
            phases.set_item(name, ms)?;
        }
        d.set_item("phase_ms", phases)?;
        Ok(d)
    }

    #[getter]
    fn cycle(&self) -> u64 {
        self.inner.cycle()
    }

    #[getter]
    fn particle_count(&self) -> usize {
        self.inner.velocity().map_or(0, |v| v.particle_count())
    }

    /// `(nx, ny, cell_size, origin)` of the occupancy window.
    #[getter]
    fn occupancy_grid(&self) -> (usize, usize, f64, (f64, f64)) {
        let s = self.inner.snapshot(false).occupancy_spec;
        (s.nx(), s.ny(), s.cell_size, (s.origin.x, s.origin.y))
    }

    #[getter]
    fn velocity_grid(&self) -> (usize, usize, f64, (f64, f64)) {
        let s = self.inner.snapshot(false).velocity_spec;
        (s.nx(), s.ny(), s.cell_size, (s.origin.x, s.origin.y))
    }

    /// Row-major occupancy probabilities (empty in velocity-only mode).
    fn probabilities(&self) -> Vec<f64> {
        self.inner.occupancy().map(|o| o.probabilities()).unwrap_or_default()
    }

    /// Row-major `(occupied, free)` masses, or None for a Binary Bayes grid.
    fn masses(&self) -> Option<Vec<(f64, f64)>> {
        self.inner.occupancy().and_then(|o| o.ds_masses())
    }

    /// Row-major `(vx, vy, [cxx, cxy, cyy], particles, valid)` per velocity cell.
    fn velocity_stats(&self) -> Vec<CellStats> {
        self.inner
            .velocity()
            .map(|v| {
                v.stats()
                    .iter()
                    .map(|s| ((s.mean.x, s.mean.y), s.cov, s.particle_count, s.valid))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Binary snapshot in the format written by the CLI.
    fn snapshot_bytes(&self) -> Vec<u8> {
        encode_snapshot(&self.inner.snapshot(true))
    }
}

#[pymodule]
fn radgrid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDetection>()?;
    m.add_class::<PyEgoPose>()?;
    m.add_class::<PySensorModel>()?;
    m.add_class::<PyGridMap>()?;
    m.add_function(wrap_pyfunction!(shift_weights, m)?)?;
    m.add_function(wrap_pyfunction!(surface, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(read_scan_log, m)?)?;
    m.add_function(wrap_pyfunction!(write_scan_log, m)?)?;
    Ok(())
}
