//! Python bindings for the irrplan toolkit.
//!
//! Exposes the main types and operations — chain descriptions, root paths,
//! the sublink projection, forward kinematics, swept-volume grids, the
//! curvature closed forms, scene generation and the two-mode planner — as an
//! extension module named `irrplan_py`. Build with
//! `cargo build -p irrplan-py --release` and load the produced cdylib as
//! `irrplan_py.so` (the bundled smoke test does both).

use std::str::FromStr;

use irrplan::bench::{self, Scene, SceneKind};
use irrplan::chain::{self, ChainSpec, Dim, JointConfig};
use irrplan::curvature;
use irrplan::geometry::Pose3;
use irrplan::planner::Mode;
use irrplan::projection;
use irrplan::rootpath::{heading_of, RootPath};
use irrplan::world::{self, OccupancyGrid};
use nalgebra::{Matrix3, Vector3};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dim_of(spatial: bool) -> Dim {
    if spatial {
        Dim::Spatial
    } else {
        Dim::Planar
    }
}

/// Decodes the scene-file pose convention: `[x, y, heading]` (planar) or
/// `[x, y, z, r00..r22]` (translation plus row-major rotation, spatial).
fn pose_from_numbers(values: &[f64]) -> PyResult<Pose3> {
    match values.len() {
        3 => {
            let rotation = irrplan::geometry::rot_z(values[2]);
            Pose3::new(Vector3::new(values[0], values[1], 0.0), rotation).map_err(value_err)
        }
        12 => {
            let translation = Vector3::new(values[0], values[1], values[2]);
            let rotation = Matrix3::from_row_slice(&values[3..12]);
            Pose3::new(translation, rotation).map_err(value_err)
        }
        n => Err(PyValueError::new_err(format!(
            "pose must have 3 (planar) or 12 (spatial) numbers, got {n}"
        ))),
    }
}

fn pose_to_numbers(pose: &Pose3, dim: Dim) -> Vec<f64> {
    match dim {
        Dim::Planar => vec![
            pose.translation.x,
            pose.translation.y,
            heading_of(&pose.rotation),
        ],
        Dim::Spatial => {
            let mut out = vec![
                pose.translation.x,
                pose.translation.y,
                pose.translation.z,
            ];
            for r in 0..3 {
                for c in 0..3 {
                    out.push(pose.rotation[(r, c)]);
                }
            }
            out
        }
    }
}

/// A serial chain description: root link plus trailing sublinks.
#[pyclass(name = "Chain", module = "irrplan_py")]
#[derive(Clone)]
struct PyChain {
    spec: ChainSpec,
}

#[pymethods]
impl PyChain {
    /// Chain(radii, lengths, theta_bar, spatial=False)
    ///
    /// `radii` has one entry per body (root first), `lengths` one entry per
    /// sublink; `theta_bar` is the joint-angle limit in radians.
    #[new]
    #[pyo3(signature = (radii, lengths, theta_bar, spatial = false))]
    fn new(radii: Vec<f64>, lengths: Vec<f64>, theta_bar: f64, spatial: bool) -> PyResult<Self> {
        let spec =
            ChainSpec::new(radii, lengths, theta_bar, dim_of(spatial)).map_err(value_err)?;
        Ok(Self { spec })
    }

    /// Equal-length, equal-radius chain with `n` sublinks.
    #[staticmethod]
    #[pyo3(signature = (n, l0, delta, theta_bar, spatial = false))]
    fn uniform(n: usize, l0: f64, delta: f64, theta_bar: f64, spatial: bool) -> PyResult<Self> {
        let spec = ChainSpec::uniform(n, l0, delta, theta_bar, dim_of(spatial)).map_err(value_err)?;
        Ok(Self { spec })
    }

    #[getter]
    fn links(&self) -> usize {
        self.spec.links()
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.spec.radii().to_vec()
    }

    #[getter]
    fn lengths(&self) -> Vec<f64> {
        self.spec.lengths().to_vec()
    }

    #[getter]
    fn theta_bar(&self) -> f64 {
        self.spec.theta_bar()
    }

    #[getter]
    fn total_length(&self) -> f64 {
        self.spec.total_length()
    }

    #[getter]
    fn root_radius(&self) -> f64 {
        self.spec.root_radius()
    }

    #[getter]
    fn spatial(&self) -> bool {
        self.spec.dim() == Dim::Spatial
    }

    /// Guaranteed-projection curvature bound 2 sin(θ̄)/(N l₀) for the
    /// equal-length chain (uses the first link length).
    fn kappa_n(&self) -> PyResult<f64> {
        curvature::kappa_max(self.spec.theta_bar(), self.spec.lengths()[0], self.spec.links())
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Chain(links={}, theta_bar={:.6}, spatial={})",
            self.spec.links(),
            self.spec.theta_bar(),
            self.spec.dim() == Dim::Spatial
        )
    }
}

/// A densely sampled root-link path.
#[pyclass(name = "Path", module = "irrplan_py")]
#[derive(Clone)]
struct PyPath {
    path: RootPath,
}

#[pymethods]
impl PyPath {
    /// Parses the text dump format (header `<dim> <step>`, one sample per
    /// line).
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            path: RootPath::parse_text(text).map_err(value_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.path.dump_text()
    }

    fn __len__(&self) -> usize {
        self.path.len()
    }

    #[getter]
    fn total_length(&self) -> f64 {
        self.path.total_length()
    }

    #[getter]
    fn step(&self) -> f64 {
        self.path.step()
    }

    #[getter]
    fn spatial(&self) -> bool {
        self.path.dim() == Dim::Spatial
    }

    /// Position at arc length `s` as an `(x, y, z)` tuple.
    fn position_at(&self, s: f64) -> PyResult<(f64, f64, f64)> {
        let p = self.path.position_at(s).map_err(value_err)?;
        Ok((p.x, p.y, p.z))
    }

    /// Maximum discrete curvature along the path.
    fn curvature_profile(&self) -> PyResult<f64> {
        self.path.curvature_profile().map_err(value_err)
    }

    fn resample(&self, step: f64) -> PyResult<Self> {
        Ok(Self {
            path: self.path.resample(step).map_err(value_err)?,
        })
    }

    fn reversed(&self) -> Self {
        Self {
            path: self.path.reversed(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Path(samples={}, length={:.6}, step={:.6})",
            self.path.len(),
            self.path.total_length(),
            self.path.step()
        )
    }
}

/// A rasterized swept volume.
#[pyclass(name = "SweptVolume", module = "irrplan_py")]
struct PySweptVolume {
    grid: OccupancyGrid,
}

#[pymethods]
impl PySweptVolume {
    #[getter]
    fn occupied(&self) -> usize {
        self.grid.occupied_count()
    }

    #[getter]
    fn resolution(&self) -> f64 {
        self.grid.resolution()
    }

    fn occupied_at(&self, x: f64, y: f64, z: f64) -> bool {
        self.grid.occupied_at_point(&Vector3::new(x, y, z))
    }

    /// True when this sweep is contained in `other` (cell-center semantics).
    fn is_subset(&self, other: &PySweptVolume) -> PyResult<bool> {
        world::is_subset(&self.grid, &other.grid).map_err(value_err)
    }

    /// Text dump of the grid (consumable by external plotting).
    fn dump(&self) -> String {
        self.grid.dump()
    }

    fn __repr__(&self) -> String {
        format!(
            "SweptVolume(occupied={}, resolution={:.6})",
            self.grid.occupied_count(),
            self.grid.resolution()
        )
    }
}

/// Sweeps the root sphere of radius `radius` along `path` at grid
/// resolution `res`.
///
/// Pass another sweep as `like` to rasterize into its frame, which makes
/// the two grids comparable with `is_subset`.
#[pyfunction]
#[pyo3(signature = (path, radius, res, like = None))]
fn sweep_root(
    path: &PyPath,
    radius: f64,
    res: f64,
    like: Option<&PySweptVolume>,
) -> PyResult<PySweptVolume> {
    let grid = match like {
        Some(reference) => world::sweep_spheres_in_frame(
            reference.grid.frame().clone(),
            &path.path,
            |_| vec![(Vector3::zeros(), radius)],
        ),
        None => world::sweep_root(&path.path, radius, res),
    }
    .map_err(value_err)?;
    Ok(PySweptVolume { grid })
}

/// Projects the sublinks of `chain` onto `path` at arc length `s`
/// (default: the path end).
///
/// Returns a dict with joint angles (`theta`, `gamma`), the sublink sphere
/// `centers` and `radii`, and the projected `arclengths`.
#[pyfunction]
#[pyo3(signature = (path, chain, s = None))]
fn project<'py>(
    py: Python<'py>,
    path: &PyPath,
    chain: &PyChain,
    s: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = s.unwrap_or_else(|| path.path.total_length());
    let result = projection::project(&path.path, &chain.spec, s).map_err(value_err)?;
    let spheres = result
        .sublink_spheres(&path.path, &chain.spec)
        .map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("theta", result.q.theta.clone())?;
    out.set_item("gamma", result.q.gamma.clone())?;
    out.set_item(
        "centers",
        spheres
            .iter()
            .map(|(c, _)| (c.x, c.y, c.z))
            .collect::<Vec<_>>(),
    )?;
    out.set_item("radii", spheres.iter().map(|&(_, r)| r).collect::<Vec<_>>())?;
    out.set_item("arclengths", result.sublink_arclengths)?;
    Ok(out)
}

/// Link poses under the chain's forward kinematics.
///
/// `pose` follows the scene-file convention (`[x, y, heading]` or
/// `[x, y, z, r00..r22]`); returns one pose per body (root first) in the
/// same convention.
#[pyfunction]
#[pyo3(signature = (chain, pose, theta, gamma = None))]
fn forward_kinematics(
    chain: &PyChain,
    pose: Vec<f64>,
    theta: Vec<f64>,
    gamma: Option<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let root = pose_from_numbers(&pose)?;
    let n = theta.len();
    let q = JointConfig {
        theta,
        gamma: gamma.unwrap_or_else(|| vec![0.0; n]),
    };
    let poses = chain::forward_kinematics(&chain.spec, &root, &q).map_err(value_err)?;
    Ok(poses
        .iter()
        .map(|p| pose_to_numbers(p, chain.spec.dim()))
        .collect())
}

/// Occupancy spheres of the chain at a configuration: `(center, radius)`
/// per body, root first.
#[pyfunction]
#[pyo3(signature = (chain, pose, theta, gamma = None))]
fn chain_spheres(
    chain: &PyChain,
    pose: Vec<f64>,
    theta: Vec<f64>,
    gamma: Option<Vec<f64>>,
) -> PyResult<Vec<((f64, f64, f64), f64)>> {
    let root = pose_from_numbers(&pose)?;
    let n = theta.len();
    let q = JointConfig {
        theta,
        gamma: gamma.unwrap_or_else(|| vec![0.0; n]),
    };
    let poses = chain::forward_kinematics(&chain.spec, &root, &q).map_err(value_err)?;
    let spheres = chain::chain_volume(&chain.spec, &poses).map_err(value_err)?;
    Ok(spheres
        .iter()
        .map(|(c, r)| ((c.x, c.y, c.z), *r))
        .collect())
}

/// Maximum curvature 2 sin(θ̄)/(N l₀) under which projection is guaranteed.
#[pyfunction]
fn kappa_max(theta_bar: f64, l0: f64, n: usize) -> PyResult<f64> {
    curvature::kappa_max(theta_bar, l0, n).map_err(value_err)
}

/// Minimal osculating radius N l₀ / (2 sin θ̄).
#[pyfunction]
fn osculating_radius(theta_bar: f64, l0: f64, n: usize) -> PyResult<f64> {
    curvature::osculating_radius(theta_bar, l0, n).map_err(value_err)
}

/// Workspace extreme point (l₀ cos θ̄, l₀ sin θ̄) of a two-link unit.
#[pyfunction]
fn extreme_point(l0: f64, theta_bar: f64) -> PyResult<(f64, f64)> {
    curvature::extreme_point(l0, theta_bar).map_err(value_err)
}

/// Joint angle arcsin(l / (2 R₀)) induced by chord-fitting on a circle.
#[pyfunction]
fn relative_joint_angle(r0: f64, l: f64) -> PyResult<f64> {
    curvature::relative_joint_angle(r0, l).map_err(value_err)
}

/// Sagitta R₀ − sqrt(R₀² − l₀²/4): max distance between chord and arc.
#[pyfunction]
fn chord_deviation(r0: f64, l0: f64) -> PyResult<f64> {
    curvature::chord_deviation(r0, l0).map_err(value_err)
}

/// Generates a built-in benchmark scene (`maze2d`, `rocks2d`, `rocks3d`,
/// `wallhole3d`) as a JSON string.
#[pyfunction]
fn generate_scene(kind: &str, seed: u64, difficulty: u8) -> PyResult<String> {
    let kind = SceneKind::from_str(kind).map_err(value_err)?;
    Ok(bench::generate_scene(kind, seed, difficulty)
        .map_err(value_err)?
        .to_json())
}

fn mode_from_str(mode: &str) -> PyResult<Mode> {
    match mode {
        "full" => Ok(Mode::Full),
        "irreducible" => Ok(Mode::Irreducible),
        other => Err(PyValueError::new_err(format!(
            "mode must be \"full\" or \"irreducible\", got {other:?}"
        ))),
    }
}

/// Runs seeded planning trials on a scene JSON string.
///
/// Returns a dict with the scene name, manifold label, success rate
/// (percent), mean/std solve times, and per-trial records (`seed`,
/// `success`, `seconds`, `nodes`, `path_length`, `error`, and the solution
/// `path` as a text dump when one was found).
#[pyfunction]
#[pyo3(signature = (scene_json, mode, trials = 10, time_limit = None, base_seed = 1000, jobs = 1))]
fn plan_scene<'py>(
    py: Python<'py>,
    scene_json: &str,
    mode: &str,
    trials: usize,
    time_limit: Option<f64>,
    base_seed: u64,
    jobs: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let scene = Scene::parse(scene_json).map_err(value_err)?;
    let mode = mode_from_str(mode)?;
    let limit = time_limit.unwrap_or(scene.planner.time_limit);
    let (stats, records) =
        bench::run_bench(&scene, mode, trials, limit, base_seed, jobs).map_err(value_err)?;

    let out = PyDict::new(py);
    out.set_item("scene", scene.name.clone())?;
    out.set_item(
        "manifold",
        bench::manifold_name(scene.chain.dim(), mode, scene.chain.links()),
    )?;
    out.set_item("success_rate", stats.success_rate)?;
    out.set_item("mean_time", stats.mean_time)?;
    out.set_item("std_time", stats.std_time)?;
    let mut rows = Vec::with_capacity(records.len());
    for rec in &records {
        let row = PyDict::new(py);
        row.set_item("seed", rec.seed)?;
        match &rec.outcome {
            Ok(trial) => {
                row.set_item("success", trial.success)?;
                row.set_item("seconds", trial.seconds)?;
                row.set_item("nodes", trial.nodes)?;
                row.set_item("path_length", trial.path_length)?;
                row.set_item("error", py.None())?;
            }
            Err(message) => {
                row.set_item("success", false)?;
                row.set_item("error", message)?;
            }
        }
        row.set_item(
            "path",
            rec.path.as_ref().map(|p| p.root.dump_text()),
        )?;
        rows.push(row);
    }
    out.set_item("trials", rows)?;
    Ok(out)
}

#[pymodule]
fn irrplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChain>()?;
    m.add_class::<PyPath>()?;
    m.add_class::<PySweptVolume>()?;
    m.add_function(wrap_pyfunction!(sweep_root, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(forward_kinematics, m)?)?;
    m.add_function(wrap_pyfunction!(chain_spheres, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_max, m)?)?;
    m.add_function(wrap_pyfunction!(osculating_radius, m)?)?;
    m.add_function(wrap_pyfunction!(extreme_point, m)?)?;
    m.add_function(wrap_pyfunction!(relative_joint_angle, m)?)?;
    m.add_function(wrap_pyfunction!(chord_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(generate_scene, m)?)?;
    m.add_function(wrap_pyfunction!(plan_scene, m)?)?;
    Ok(())
}
