//! Kinodynamic RRT over the root link alone (Irreducible mode) or the full
//! chain configuration (Full mode).
//!
//! Both modes grow a tree of root poses connected by bounded steering
//! controls. Full mode carries the joint angles in the state and integrates
//! sampled joint rates alongside the root motion, collision-checking the
//! entire chain volume along each edge. Irreducible mode plans the root
//! link only and accepts an edge when the root sphere stays free *and* the
//! sublinks project onto the swept root path without exceeding joint
//! limits or touching obstacles — the planning space stays the root pose
//! manifold regardless of the number of links.

use crate::chain::{
    chain_volume, forward_kinematics, ChainError, ChainSpec, Dim, JointConfig,
};
use crate::geometry::{GeometryError, Pose3};
use crate::projection::{project, ProjectionError};
use crate::rootpath::{chain_prefix_path, extend_prefix, PathError, PathSample, RootPath};
use crate::steering::{
    airplane_step, dubins_step, sample_control, Control, ControlBounds, SteeringError,
};
use crate::world::Environment;
use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("planner config field {field} has invalid value {value}")]
    Config { field: &'static str, value: f64 },
    #[error("start configuration is infeasible: {reason}")]
    InfeasibleStart { reason: String },
    #[error("goal position lies outside the workspace bounds")]
    GoalOutOfBounds,
    #[error("chain dimensionality does not match the environment")]
    DimMismatch,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Steering(#[from] SteeringError),
}

/// Planning mode: full configuration space or the irreducible root space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Full,
    Irreducible,
}

fn default_goal_bias() -> f64 {
    0.05
}
fn default_joint_rate() -> f64 {
    1.0
}
fn default_w_rot() -> f64 {
    0.3
}
fn default_w_joint() -> f64 {
    0.3
}
fn default_roll_max() -> f64 {
    std::f64::consts::PI
}
fn default_max_nodes() -> usize {
    100_000
}

/// Controls drawn per extension; the best endpoint toward the target wins.
const CONTROL_CANDIDATES: usize = 1;

/// Planner parameters. `collision_step` defaults to half the root radius
/// when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub kappa: f64,
    pub epsilon_goal: f64,
    pub time_limit: f64,
    pub seed: u64,
    #[serde(default = "default_goal_bias")]
    pub goal_bias: f64,
    #[serde(default)]
    pub collision_step: Option<f64>,
    #[serde(default = "default_joint_rate")]
    pub joint_rate_max: f64,
    pub mode: Mode,
    #[serde(default = "default_w_rot")]
    pub w_rot: f64,
    #[serde(default = "default_w_joint")]
    pub w_joint: f64,
    #[serde(default = "default_roll_max")]
    pub roll_max: f64,
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
}

impl PlannerConfig {
    pub fn new(kappa: f64, epsilon_goal: f64, time_limit: f64, seed: u64, mode: Mode) -> Self {
        Self {
            kappa,
            epsilon_goal,
            time_limit,
            seed,
            goal_bias: default_goal_bias(),
            collision_step: None,
            joint_rate_max: default_joint_rate(),
            mode,
            w_rot: default_w_rot(),
            w_joint: default_w_joint(),
            roll_max: default_roll_max(),
            max_nodes: default_max_nodes(),
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        let check = |field: &'static str, value: f64, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(PlannerError::Config { field, value })
            }
        };
        check("kappa", self.kappa, self.kappa.is_finite() && self.kappa > 0.0)?;
        check(
            "epsilon_goal",
            self.epsilon_goal,
            self.epsilon_goal.is_finite() && self.epsilon_goal > 0.0,
        )?;
        check(
            "time_limit",
            self.time_limit,
            self.time_limit.is_finite() && self.time_limit > 0.0,
        )?;
        check(
            "goal_bias",
            self.goal_bias,
            self.goal_bias.is_finite() && (0.0..=0.5).contains(&self.goal_bias),
        )?;
        if let Some(cs) = self.collision_step {
            check("collision_step", cs, cs.is_finite() && cs > 0.0)?;
        }
        check(
            "joint_rate_max",
            self.joint_rate_max,
            self.joint_rate_max.is_finite() && self.joint_rate_max > 0.0,
        )?;
        check("w_rot", self.w_rot, self.w_rot.is_finite() && self.w_rot >= 0.0)?;
        check(
            "w_joint",
            self.w_joint,
            self.w_joint.is_finite() && self.w_joint >= 0.0,
        )?;
        check(
            "roll_max",
            self.roll_max,
            self.roll_max.is_finite() && self.roll_max > 0.0,
        )?;
        check("max_nodes", self.max_nodes as f64, self.max_nodes >= 1)?;
        Ok(())
    }
}

/// Root steering control plus the joint rates integrated alongside it in
/// Full mode (empty in Irreducible mode).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeControl {
    pub control: Control,
    pub theta_rates: Vec<f64>,
    pub gamma_rates: Vec<f64>,
}

/// One tree node: the root pose reached, the joint state there, and the
/// densely sampled edge from the parent.
#[derive(Debug, Clone)]
pub struct Node {
    pub pose: Pose3,
    pub joints: JointConfig,
    pub parent: Option<usize>,
    pub control: Option<EdgeControl>,
    /// Edge samples as (arc offset from the parent, pose), endpoint
    /// included, parent pose excluded.
    pub edge: Vec<(f64, Pose3)>,
    /// Joint states aligned with `edge` (Full mode).
    pub edge_joints: Vec<JointConfig>,
    /// Cumulative arc length from the tree root.
    pub depth_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SearchTree {
    nodes: Vec<Node>,
    /// Node translations in a flat array so the nearest-neighbor scan stays
    /// cache-friendly.
    positions: Vec<Vector3<f64>>,
}

impl SearchTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: Node) {
        self.positions.push(node.pose.translation);
        self.nodes.push(node);
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node minimizing the weighted distance to the target:
    /// Euclidean translation + w_rot · rotation angle, plus
    /// w_joint · joint-angle L2 distance when `joints` is given. Exact ties
    /// keep the lowest index. Linear scan; the translation term lower-bounds
    /// the metric, so far nodes skip the rotation and joint terms.
    pub fn nearest(
        &self,
        pose: &Pose3,
        joints: Option<&JointConfig>,
        w_rot: f64,
        w_joint: f64,
    ) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        let mut best_d2 = f64::INFINITY;
        for (i, position) in self.positions.iter().enumerate() {
            let q = (position - pose.translation).norm_squared();
            if q >= best_d2 {
                continue;
            }
            let node = &self.nodes[i];
            let mut d = q.sqrt();
            if w_rot > 0.0 {
                d += w_rot * node.pose.rotation_angle_to(pose);
            }
            if let Some(target) = joints {
                d += w_joint * joint_distance(&node.joints, target);
            }
            if d < best_d {
                best_d = d;
                best_d2 = best_d * best_d;
                best = i;
            }
        }
        best
    }
}

/// Whether a pose lies in the closed goal region: translation distance at
/// most `eps` (orientation-free).
pub fn goal_reached(q: &Pose3, goal: &Pose3, eps: f64) -> bool {
    (q.translation - goal.translation).norm() <= eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    Timeout,
    Exhausted,
}

/// Outcome of a single planning trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub success: bool,
    pub seconds: f64,
    /// Root motion length in meters (the chain-trail prefix not counted).
    pub path_length: f64,
    pub nodes: usize,
    pub failure: Option<FailureReason>,
}

/// A solved motion: the prefix-extended root path and one joint
/// configuration per path sample (start configuration over the prefix).
#[derive(Debug, Clone)]
pub struct PlannedPath {
    pub root: RootPath,
    pub joints: Vec<JointConfig>,
    /// Arc length of the chain-trail prefix at the head of `root`.
    pub prefix_len: f64,
}

/// Extension-level counters for diagnosing search behavior.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtensionStats {
    pub attempts: usize,
    /// Edges rejected by root-sphere collision or bounds checks.
    pub collision_rejections: usize,
    /// Full mode: edges rejected by sublink collisions along the edge.
    pub chain_rejections: usize,
    /// Irreducible mode: endpoints rejected by projection failure or
    /// projected-sphere collision.
    pub projection_rejections: usize,
}

/// Everything a plan invocation produces: the trial statistics, the path on
/// success, the search tree for replay and inspection, and extension
/// counters.
#[derive(Debug, Clone)]
pub struct PlanReport {
    pub trial: TrialResult,
    pub path: Option<PlannedPath>,
    pub tree: SearchTree,
    pub extensions: ExtensionStats,
}

/// Plans a motion from `start` (root pose and joint configuration) to the
/// goal region around `goal`.
///
/// Wall-clock timeout is checked between extensions, never inside one, so
/// a given seed always explores the same tree prefix. An infeasible start
/// is an error; running out of time or of the node budget is a normal
/// unsuccessful [`TrialResult`].
pub fn plan(
    env: &Environment,
    spec: &ChainSpec,
    start_pose: &Pose3,
    start_q: &JointConfig,
    goal: &Pose3,
    cfg: &PlannerConfig,
) -> Result<PlanReport, PlannerError> {
    cfg.validate()?;
    if spec.dim() != env.dim() {
        return Err(PlannerError::DimMismatch);
    }
    let collision_step = cfg.collision_step.unwrap_or(spec.root_radius() / 2.0);
    let delta0 = spec.root_radius();

    // Start feasibility: every chain sphere clear of obstacles, root inside
    // bounds, joints within limits.
    if !start_q.within_limits(spec) {
        return Err(PlannerError::InfeasibleStart {
            reason: "start joint configuration exceeds joint limits".into(),
        });
    }
    let start_chain = chain_volume(spec, &forward_kinematics(spec, start_pose, start_q)?)?;
    for (i, (c, r)) in start_chain.iter().enumerate() {
        if env.sphere_in_collision(c, *r) {
            return Err(PlannerError::InfeasibleStart {
                reason: format!("chain sphere {i} collides with an obstacle"),
            });
        }
    }
    if !env.sphere_in_bounds(&start_pose.translation, delta0) {
        return Err(PlannerError::InfeasibleStart {
            reason: "root sphere is outside the workspace bounds".into(),
        });
    }
    if !env.bounds().contains(&clamp_planar(goal.translation, spec.dim())) {
        return Err(PlannerError::GoalOutOfBounds);
    }

    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bounds = {
        let mut b = ControlBounds::new(cfg.kappa)?;
        b.roll_max = cfg.roll_max;
        b
    };
    let mut tree = SearchTree::new();
    tree.push(Node {
        pose: start_pose.clone(),
        joints: start_q.clone(),
        parent: None,
        control: None,
        edge: Vec::new(),
        edge_joints: Vec::new(),
        depth_s: 0.0,
    });

    // Chain-trail prefix of the start configuration, used to give backward
    // projections room near the tree root.
    let prefix = chain_prefix_path(spec, start_pose, start_q, collision_step)?;
    let backward_needed = 1.1 * spec.total_length() + collision_step;

    if goal_reached(start_pose, goal, cfg.epsilon_goal) {
        let path = assemble_path(&tree, tree.len() - 1, spec, start_q, collision_step)?;
        return Ok(PlanReport {
            trial: TrialResult {
                success: true,
                seconds: t0.elapsed().as_secs_f64(),
                path_length: 0.0,
                nodes: 1,
                failure: None,
            },
            path: Some(path),
            tree,
            extensions: ExtensionStats::default(),
        });
    }

    let mut failure = None;
    let mut solution = None;
    let mut extensions = ExtensionStats::default();
    loop {
        if t0.elapsed().as_secs_f64() >= cfg.time_limit {
            failure = Some(FailureReason::Timeout);
            break;
        }
        if tree.len() >= cfg.max_nodes {
            failure = Some(FailureReason::Exhausted);
            break;
        }

        // Target state for this extension.
        let biased = rng.random::<f64>() < cfg.goal_bias;
        let (target_pose, target_joints) = if biased {
            (goal.clone(), None)
        } else {
            let pose = sample_pose(env, spec.dim(), &mut rng);
            let joints = if cfg.mode == Mode::Full {
                Some(sample_joints(spec, &mut rng))
            } else {
                None
            };
            (pose, joints)
        };
        let near = tree.nearest(&target_pose, target_joints.as_ref(), cfg.w_rot, cfg.w_joint);

        // Candidate controls: integrate only the one whose closed-form
        // endpoint lands nearest the target.
        let mut edge_control: Option<(EdgeControl, f64)> = None;
        for _ in 0..CONTROL_CANDIDATES {
            let control = sample_control(&bounds, spec.dim(), &mut rng);
            let (theta_rates, gamma_rates) = if cfg.mode == Mode::Full {
                let n = spec.links();
                let theta: Vec<f64> = (0..n)
                    .map(|_| rng.random_range(-cfg.joint_rate_max..=cfg.joint_rate_max))
                    .collect();
                let gamma: Vec<f64> = if spec.dim() == Dim::Spatial {
                    (0..n)
                        .map(|_| rng.random_range(-cfg.joint_rate_max..=cfg.joint_rate_max))
                        .collect()
                } else {
                    vec![0.0; n]
                };
                (theta, gamma)
            } else {
                (Vec::new(), Vec::new())
            };
            let end = step_from(&tree.nodes()[near].pose, &control, control.duration())?;
            let mut d = (end.translation - target_pose.translation).norm()
                + cfg.w_rot * end.rotation_angle_to(&target_pose);
            if let Some(tj) = target_joints.as_ref() {
                let endj = advance_joints(
                    &tree.nodes()[near].joints,
                    &theta_rates,
                    &gamma_rates,
                    control.duration(),
                    spec.theta_bar(),
                );
                d += cfg.w_joint * joint_distance(&endj, tj);
            }
            if edge_control.as_ref().is_none_or(|(_, best)| d < *best) {
                edge_control = Some((
                    EdgeControl {
                        control,
                        theta_rates,
                        gamma_rates,
                    },
                    d,
                ));
            }
        }
        let (edge_control, _) = edge_control.expect("at least one candidate control");

        // Integrate and check the edge; entry into the goal region truncates
        // it at the entering sample.
        extensions.attempts += 1;
        let (edge, edge_joints) = match integrate_edge(
            env,
            spec,
            &tree.nodes()[near],
            &edge_control,
            collision_step,
            cfg.mode,
            goal,
            cfg.epsilon_goal,
        )? {
            EdgeOutcome::Accepted(edge, joints) => (edge, joints),
            EdgeOutcome::RootBlocked => {
                extensions.collision_rejections += 1;
                continue;
            }
            EdgeOutcome::ChainBlocked => {
                extensions.chain_rejections += 1;
                continue;
            }
        };

        let (end_s, end_pose) = edge.last().expect("edges have samples").clone();
        let mut edge_control = edge_control;
        edge_control.control.set_duration(end_s);
        let end_joints = match cfg.mode {
            Mode::Full => edge_joints.last().expect("full edges carry joints").clone(),
            Mode::Irreducible => {
                // Projection feasibility at the edge endpoint.
                match project_endpoint(
                    &tree,
                    near,
                    &edge,
                    &prefix,
                    spec,
                    env,
                    collision_step,
                    backward_needed,
                )? {
                    Some(q) => q,
                    None => {
                        extensions.projection_rejections += 1;
                        continue;
                    }
                }
            }
        };

        let depth_s = tree.nodes()[near].depth_s + end_s;
        tree.push(Node {
            pose: end_pose.clone(),
            joints: end_joints,
            parent: Some(near),
            control: Some(edge_control),
            edge,
            edge_joints,
            depth_s,
        });

        if goal_reached(&end_pose, goal, cfg.epsilon_goal) {
            solution = Some(tree.len() - 1);
            break;
        }
    }

    let (success, path, path_length) = match solution {
        Some(idx) => {
            let path = assemble_path(&tree, idx, spec, start_q, collision_step)?;
            let len = path.root.total_length() - path.prefix_len;
            (true, Some(path), len)
        }
        None => (false, None, 0.0),
    };
    Ok(PlanReport {
        trial: TrialResult {
            success,
            seconds: t0.elapsed().as_secs_f64(),
            path_length,
            nodes: tree.len(),
            failure: if success { None } else { failure },
        },
        path,
        tree,
        extensions,
    })
}

fn clamp_planar(mut p: Vector3<f64>, dim: Dim) -> Vector3<f64> {
    if dim == Dim::Planar {
        p.z = 0.0;
    }
    p
}

/// Uniform pose over the workspace: translation in bounds, rotation from
/// uniform heading (planar) or uniform Euler draws (spatial; used only as a
/// nearest-neighbor target, where mild non-uniformity is harmless).
fn sample_pose<R: Rng>(env: &Environment, dim: Dim, rng: &mut R) -> Pose3 {
    let b = env.bounds();
    let x = rng.random_range(b.min.x..=b.max.x);
    let y = rng.random_range(b.min.y..=b.max.y);
    match dim {
        Dim::Planar => {
            let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            Pose3 {
                translation: Vector3::new(x, y, 0.0),
                rotation: crate::geometry::rot_z(heading),
            }
        }
        Dim::Spatial => {
            let z = rng.random_range(b.min.z..=b.max.z);
            let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let pitch = rng.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
            let roll = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let rotation = (Rotation3::from_axis_angle(&Vector3::z_axis(), yaw)
                * Rotation3::from_axis_angle(&Vector3::y_axis(), pitch)
                * Rotation3::from_axis_angle(&Vector3::x_axis(), roll))
            .into_inner();
            Pose3 {
                translation: Vector3::new(x, y, z),
                rotation,
            }
        }
    }
}

fn sample_joints<R: Rng>(spec: &ChainSpec, rng: &mut R) -> JointConfig {
    let tb = spec.theta_bar();
    let n = spec.links();
    let theta = (0..n).map(|_| rng.random_range(-tb..=tb)).collect();
    let gamma = if spec.dim() == Dim::Spatial {
        (0..n).map(|_| rng.random_range(-tb..=tb)).collect()
    } else {
        vec![0.0; n]
    };
    JointConfig { theta, gamma }
}

enum EdgeOutcome {
    Accepted(Vec<(f64, Pose3)>, Vec<JointConfig>),
    RootBlocked,
    ChainBlocked,
}

/// Integrates one edge from a parent node at collision-step spacing,
/// checking obstacle clearance and workspace bounds at every sample. The
/// edge is truncated at the first sample that enters the goal region,
/// since entry terminates planning.
#[allow(clippy::too_many_arguments)]
fn integrate_edge(
    env: &Environment,
    spec: &ChainSpec,
    parent: &Node,
    ec: &EdgeControl,
    collision_step: f64,
    mode: Mode,
    goal: &Pose3,
    epsilon_goal: f64,
) -> Result<EdgeOutcome, PlannerError> {
    let duration = ec.control.duration();
    let m = (duration / collision_step).ceil().max(1.0) as usize;
    let delta0 = spec.root_radius();
    let mut edge = Vec::with_capacity(m);
    let mut edge_joints = Vec::with_capacity(if mode == Mode::Full { m } else { 0 });

    for j in 1..=m {
        let t = duration * j as f64 / m as f64;
        let pose = step_from(&parent.pose, &ec.control, t)?;
        if !env.sphere_in_bounds(&pose.translation, delta0)
            || env.sphere_in_collision(&pose.translation, delta0)
        {
            return Ok(EdgeOutcome::RootBlocked);
        }
        if mode == Mode::Full {
            let joints = advance_joints(
                &parent.joints,
                &ec.theta_rates,
                &ec.gamma_rates,
                t,
                spec.theta_bar(),
            );
            let chain = chain_volume(spec, &forward_kinematics(spec, &pose, &joints)?)?;
            // The root sphere was already checked; sublinks must clear the
            // obstacles as well.
            for (c, r) in chain.iter().skip(1) {
                if env.sphere_in_collision(c, *r) {
                    return Ok(EdgeOutcome::ChainBlocked);
                }
            }
            edge_joints.push(joints);
        }
        let entered_goal = goal_reached(&pose, goal, epsilon_goal);
        edge.push((t, pose));
        if entered_goal {
            break;
        }
    }
    Ok(EdgeOutcome::Accepted(edge, edge_joints))
}

/// Closed-form pose along a control at local arc length `t`.
fn step_from(parent: &Pose3, control: &Control, t: f64) -> Result<Pose3, PlannerError> {
    let pose = match *control {
        Control::Planar { u, .. } => dubins_step(&parent.to_planar(), u, t)?.to_spatial(),
        Control::Spatial { u4, u5, u6, .. } => airplane_step(parent, u4, u5, u6, t)?,
    };
    Ok(pose)
}

/// Joint state a time `t` into an edge: linear rates clamped at the limits.
fn advance_joints(
    q0: &JointConfig,
    theta_rates: &[f64],
    gamma_rates: &[f64],
    t: f64,
    theta_bar: f64,
) -> JointConfig {
    let theta = q0
        .theta
        .iter()
        .zip(theta_rates)
        .map(|(&q, &r)| (q + r * t).clamp(-theta_bar, theta_bar))
        .collect();
    let gamma = q0
        .gamma
        .iter()
        .zip(gamma_rates)
        .map(|(&q, &r)| (q + r * t).clamp(-theta_bar, theta_bar))
        .collect();
    JointConfig { theta, gamma }
}

/// L2 distance between two joint configurations over shared joints.
fn joint_distance(a: &JointConfig, b: &JointConfig) -> f64 {
    let mut sum = 0.0;
    for k in 0..a.theta.len().min(b.theta.len()) {
        sum += (a.theta[k] - b.theta[k]).powi(2) + (a.gamma[k] - b.gamma[k]).powi(2);
    }
    sum.sqrt()
}

/// Irreducible-mode endpoint test: assemble the recent backward root path
/// (falling back to the chain-trail prefix near the tree root), project the
/// sublinks at the endpoint, and check the projected spheres. Returns the
/// projected joint configuration, or None when the extension must be
/// rejected.
#[allow(clippy::too_many_arguments)]
fn project_endpoint(
    tree: &SearchTree,
    parent_idx: usize,
    edge: &[(f64, Pose3)],
    prefix: &RootPath,
    spec: &ChainSpec,
    env: &Environment,
    collision_step: f64,
    backward_needed: f64,
) -> Result<Option<JointConfig>, PlannerError> {
    // Gather edge segments newest-first until enough arc is available.
    let mut segments: Vec<&[(f64, Pose3)]> = vec![edge];
    let mut first_pose;
    let mut acc = edge.last().expect("edges are non-empty").0;
    let mut cur = parent_idx;
    loop {
        let node = &tree.nodes()[cur];
        match node.parent {
            None => {
                first_pose = None; // reached the tree root: prepend the prefix
                break;
            }
            Some(p) => {
                segments.push(&node.edge);
                acc += node.edge.last().expect("edges are non-empty").0;
                if acc >= backward_needed {
                    first_pose = Some(tree.nodes()[p].pose.clone());
                    break;
                }
                cur = p;
            }
        }
    }

    let mut samples: Vec<PathSample> = Vec::new();
    let mut base = 0.0;
    if first_pose.is_none() {
        // Start with the chain-trail prefix, whose last sample is the tree
        // root pose.
        samples.extend(prefix.samples().iter().cloned());
        base = prefix.total_length();
    } else if let Some(p) = first_pose.take() {
        samples.push(PathSample::new(0.0, &p));
    }
    for seg in segments.iter().rev() {
        for (t, pose) in seg.iter() {
            samples.push(PathSample::new(base + t, pose));
        }
        base += seg.last().expect("edges are non-empty").0;
    }
    let subpath = RootPath::new(samples, collision_step, spec.dim())?;

    let s_query = subpath.total_length();
    match project(&subpath, spec, s_query) {
        Ok(result) => {
            for (c, r) in result
                .sublink_spheres(&subpath, spec)
                .map_err(PlannerError::from)?
            {
                if env.sphere_in_collision(&c, r) {
                    return Ok(None);
                }
            }
            Ok(Some(result.q))
        }
        Err(
            ProjectionError::JointLimitExceeded { .. }
            | ProjectionError::PathTooShort { .. }
            | ProjectionError::DegenerateDirection { .. },
        ) => Ok(None),
        Err(ProjectionError::Path(e)) => Err(e.into()),
        Err(ProjectionError::Chain(e)) => Err(e.into()),
        Err(ProjectionError::Geometry(e)) => Err(e.into()),
    }
}

/// Builds the returned motion for a solved node: root path from the tree
/// root through every edge, prefix-extended, with joint configurations per
/// sample.
fn assemble_path(
    tree: &SearchTree,
    node_idx: usize,
    spec: &ChainSpec,
    start_q: &JointConfig,
    collision_step: f64,
) -> Result<PlannedPath, PlannerError> {
    // Chain of nodes from root to the solution.
    let mut order = Vec::new();
    let mut cur = Some(node_idx);
    while let Some(i) = cur {
        order.push(i);
        cur = tree.nodes()[i].parent;
    }
    order.reverse();

    let prefix_len = spec.total_length();
    let root_pose = tree.nodes()[order[0]].pose.clone();

    if order.len() == 1 {
        // No motion: the path is the chain-trail prefix alone.
        let root = chain_prefix_path(spec, &root_pose, start_q, collision_step)?;
        let joints = vec![start_q.clone(); root.len()];
        return Ok(PlannedPath {
            root,
            joints,
            prefix_len,
        });
    }

    let mut samples = vec![PathSample::new(0.0, &root_pose)];
    let mut motion_joints = vec![start_q.clone()];
    let mut base = 0.0;
    for &i in order.iter().skip(1) {
        let node = &tree.nodes()[i];
        for (k, (t, pose)) in node.edge.iter().enumerate() {
            samples.push(PathSample::new(base + t, pose));
            if !node.edge_joints.is_empty() {
                motion_joints.push(node.edge_joints[k].clone());
            }
        }
        base += node.edge.last().expect("edges are non-empty").0;
    }
    let bare = RootPath::new(samples, collision_step, spec.dim())?;
    let extended = extend_prefix(&bare, spec, start_q)?;

    // Joint configuration per extended sample: the start configuration
    // across the prefix, then per-sample values.
    let mut joints = Vec::with_capacity(extended.len());
    let n_prefix = extended.len() - bare.len();
    joints.extend(std::iter::repeat_with(|| start_q.clone()).take(n_prefix));
    if motion_joints.len() == bare.len() {
        joints.extend(motion_joints);
    } else {
        // Irreducible mode: project at every sample past the seam. A joint
        // limit overshoot between checked endpoints still yields the
        // geometric projection (carried in the error) rather than a hole.
        for smp in &extended.samples()[n_prefix..] {
            let q = match project(&extended, spec, smp.s) {
                Ok(r) => r.q,
                Err(ProjectionError::JointLimitExceeded { result, .. }) => result.q,
                Err(e) => {
                    return Err(match e {
                        ProjectionError::Path(p) => p.into(),
                        ProjectionError::Chain(c) => c.into(),
                        ProjectionError::Geometry(g) => g.into(),
                        other => PlannerError::InfeasibleStart {
                            reason: format!("projection failed on the solution path: {other}"),
                        },
                    })
                }
            };
            joints.push(q);
        }
    }
    debug_assert_eq!(joints.len(), extended.len());
    Ok(PlannedPath {
        root: extended,
        joints,
        prefix_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::containment_certificate;
    use crate::world::{is_feasible, sweep_spheres, Aabb, Obstacle};
    use approx::assert_abs_diff_eq;

    fn empty_env_2d() -> Environment {
        Environment::new(
            Dim::Planar,
            Aabb::new(Vector3::new(-10.0, -10.0, 0.0), Vector3::new(10.0, 10.0, 0.0)),
            vec![],
        )
        .unwrap()
    }

    fn small_chain() -> ChainSpec {
        ChainSpec::uniform(3, 0.5, 0.23, std::f64::consts::FRAC_PI_2, Dim::Planar).unwrap()
    }

    fn goal_at(x: f64, y: f64) -> Pose3 {
        Pose3 {
            translation: Vector3::new(x, y, 0.0),
            rotation: nalgebra::Matrix3::identity(),
        }
    }

    fn base_cfg(mode: Mode, seed: u64) -> PlannerConfig {
        PlannerConfig::new(1.0, 0.5, 5.0, seed, mode)
    }

    #[test]
    fn start_equals_goal_is_immediate() {
        let env = empty_env_2d();
        let spec = small_chain();
        let start = Pose3::identity();
        let q = JointConfig::zeros(3);
        let report = plan(
            &env,
            &spec,
            &start,
            &q,
            &goal_at(0.0, 0.0),
            &base_cfg(Mode::Irreducible, 1),
        )
        .unwrap();
        assert!(report.trial.success);
        assert_eq!(report.trial.nodes, 1);
        assert_abs_diff_eq!(report.trial.path_length, 0.0, epsilon = 1e-12);
        let path = report.path.unwrap();
        assert_abs_diff_eq!(path.root.total_length(), spec.total_length(), epsilon = 1e-9);
        assert_eq!(path.joints.len(), path.root.len());
    }

    #[test]
    fn empty_environment_reaches_a_forward_goal() {
        let env = empty_env_2d();
        let spec = small_chain();
        let start = Pose3::identity();
        let q = JointConfig::zeros(3);
        let goal = goal_at(5.0, 0.0);
        let mut successes = 0;
        for seed in 0..20 {
            let report = plan(&env, &spec, &start, &q, &goal, &base_cfg(Mode::Irreducible, seed))
                .unwrap();
            if report.trial.success {
                successes += 1;
                let path = report.path.as_ref().unwrap();
                let end = path.root.samples().last().unwrap().position;
                assert!((end - goal.translation).norm() <= 0.5 + 1e-9);
            }
        }
        assert!(successes >= 19, "only {successes}/20 trials succeeded");
    }

    #[test]
    fn full_mode_reaches_a_nearby_goal() {
        let env = empty_env_2d();
        let spec = ChainSpec::uniform(2, 0.5, 0.2, 1.0, Dim::Planar).unwrap();
        let start = Pose3::identity();
        let q = JointConfig::zeros(2);
        let goal = goal_at(2.5, 0.0);
        let report = plan(&env, &spec, &start, &q, &goal, &base_cfg(Mode::Full, 3)).unwrap();
        assert!(report.trial.success);
        let path = report.path.unwrap();
        assert_eq!(path.joints.len(), path.root.len());
        // Recorded joint states respect the limits everywhere.
        for q in &path.joints {
            assert!(q.within_limits(&spec));
        }
    }

    #[test]
    fn narrow_corridor_is_never_passed() {
        // Gap width 0.4 < 2·δ_0 = 0.46: the root disk cannot fit through.
        let bounds = Aabb::new(Vector3::new(-2.0, -2.0, 0.0), Vector3::new(8.0, 2.0, 0.0));
        let env = Environment::new(
            Dim::Planar,
            bounds,
            vec![
                Obstacle::Box {
                    min: Vector3::new(2.4, -2.0, 0.0),
                    max: Vector3::new(2.6, -0.2, 0.0),
                },
                Obstacle::Box {
                    min: Vector3::new(2.4, 0.2, 0.0),
                    max: Vector3::new(2.6, 2.0, 0.0),
                },
            ],
        )
        .unwrap();
        let spec = small_chain();
        let start = Pose3::identity();
        let q = JointConfig::zeros(3);
        let goal = goal_at(5.0, 0.0);
        for seed in 0..20 {
            let mut cfg = base_cfg(Mode::Irreducible, seed);
            cfg.time_limit = 0.25;
            let report = plan(&env, &spec, &start, &q, &goal, &cfg).unwrap();
            assert!(!report.trial.success, "seed {seed} slipped through");
            assert!(report.trial.failure.is_some());
        }
    }

    #[test]
    fn infeasible_start_is_an_error() {
        let bounds = Aabb::new(Vector3::new(-10.0, -10.0, 0.0), Vector3::new(10.0, 10.0, 0.0));
        let env = Environment::new(
            Dim::Planar,
            bounds,
            vec![Obstacle::Ball {
                center: Vector3::new(0.0, 0.0, 0.0),
                radius: 0.3,
            }],
        )
        .unwrap();
        let spec = small_chain();
        let out = plan(
            &env,
            &spec,
            &Pose3::identity(),
            &JointConfig::zeros(3),
            &goal_at(5.0, 0.0),
            &base_cfg(Mode::Irreducible, 1),
        );
        assert!(matches!(out, Err(PlannerError::InfeasibleStart { .. })));
    }

    #[test]
    fn nearest_metric_and_ties() {
        let mk = |x: f64, heading: f64| Node {
            pose: Pose3 {
                translation: Vector3::new(x, 0.0, 0.0),
                rotation: crate::geometry::rot_z(heading),
            },
            joints: JointConfig::zeros(0),
            parent: None,
            control: None,
            edge: Vec::new(),
            edge_joints: Vec::new(),
            depth_s: 0.0,
        };
        let mut tree = SearchTree::new();
        for node in [mk(1.0, 0.0), mk(-1.0, 0.0), mk(1.0, 1.0)] {
            tree.push(node);
        }
        let target = Pose3::identity();
        // Equidistant translations: the tie goes to the lower index.
        assert_eq!(tree.nearest(&target, None, 0.0, 0.0), 0);
        // Rotation ignored when w_rot = 0: node 2's heading cost vanishes.
        let t2 = Pose3 {
            translation: Vector3::new(1.0, 0.0, 0.0),
            rotation: nalgebra::Matrix3::identity(),
        };
        assert_eq!(tree.nearest(&t2, None, 0.0, 0.0), 0);
        // With rotation weighted, the aligned node wins over the rotated.
        assert_eq!(tree.nearest(&t2, None, 0.3, 0.0), 0);
        let t3 = Pose3 {
            translation: Vector3::new(1.0, 0.0, 0.0),
            rotation: crate::geometry::rot_z(1.0),
        };
        assert_eq!(tree.nearest(&t3, None, 0.3, 0.0), 2);
    }

    #[test]
    fn goal_region_is_closed() {
        let a = Pose3::identity();
        let exactly = goal_at(0.25, 0.0);
        assert!(goal_reached(&a, &a, 0.25));
        assert!(goal_reached(&exactly, &a, 0.25));
        let beyond = goal_at(0.25 + 1e-9, 0.0);
        assert!(!goal_reached(&beyond, &a, 0.25));
    }

    #[test]
    fn planning_is_deterministic_per_seed() {
        let env = empty_env_2d();
        let spec = small_chain();
        let start = Pose3::identity();
        let q = JointConfig::zeros(3);
        let goal = goal_at(4.0, 1.0);
        let cfg = base_cfg(Mode::Irreducible, 42);
        let a = plan(&env, &spec, &start, &q, &goal, &cfg).unwrap();
        let b = plan(&env, &spec, &start, &q, &goal, &cfg).unwrap();
        assert!(a.trial.success && b.trial.success);
        assert_eq!(a.trial.nodes, b.trial.nodes);
        let (pa, pb) = (a.path.unwrap(), b.path.unwrap());
        assert_eq!(pa.root.len(), pb.root.len());
        for (sa, sb) in pa.root.samples().iter().zip(pb.root.samples()) {
            assert_eq!(sa.s.to_bits(), sb.s.to_bits());
            for i in 0..3 {
                assert_eq!(sa.position[i].to_bits(), sb.position[i].to_bits());
            }
        }
    }

    #[test]
    fn irreducible_paths_satisfy_curvature_and_containment() {
        let env = empty_env_2d();
        let spec = small_chain();
        let kappa_n =
            crate::curvature::kappa_max(spec.theta_bar(), spec.lengths()[0], spec.links()).unwrap();
        assert!(kappa_n >= 1.0_f64.atan(), "hypotheses must hold for this scene");
        let start = Pose3::identity();
        let q = JointConfig::zeros(3);
        let goal = goal_at(4.0, -2.0);
        let report = plan(&env, &spec, &start, &q, &goal, &base_cfg(Mode::Irreducible, 7)).unwrap();
        assert!(report.trial.success);
        let path = report.path.unwrap();
        let profile = path.root.curvature_profile().unwrap();
        assert!(profile <= 1.0_f64.atan() + 1e-3, "profile {profile}");

        let res = spec.root_radius() / 20.0;
        let fine = path.root.resample(res).unwrap();
        let sv = crate::world::sweep_root(&fine, spec.root_radius(), res).unwrap();
        let report = containment_certificate(&fine, &spec, &sv, 20).unwrap();
        assert!(
            report.pass(),
            "certificate failed: {} failing points, worst {}",
            report.failing_points,
            report.worst_violation
        );
    }

    #[test]
    fn planner_and_checker_agree_on_returned_paths() {
        let bounds = Aabb::new(Vector3::new(-10.0, -10.0, 0.0), Vector3::new(10.0, 10.0, 0.0));
        let env = Environment::new(
            Dim::Planar,
            bounds,
            vec![Obstacle::Ball {
                center: Vector3::new(2.5, 0.6, 0.0),
                radius: 0.5,
            }],
        )
        .unwrap();
        let spec = small_chain();
        let start = Pose3::identity();
        let q = JointConfig::zeros(3);
        let goal = goal_at(5.0, 0.0);
        let report =
            plan(&env, &spec, &start, &q, &goal, &base_cfg(Mode::Irreducible, 11)).unwrap();
        assert!(report.trial.success);
        let path = report.path.unwrap();
        let sv = sweep_spheres(
            &path.root,
            |_| vec![(Vector3::zeros(), spec.root_radius())],
            path.root.step(),
        )
        .unwrap();
        assert!(is_feasible(&sv, &env));
    }

    #[test]
    fn tree_edges_replay_exactly() {
        let env = empty_env_2d();
        let spec = small_chain();
        let report = plan(
            &env,
            &spec,
            &Pose3::identity(),
            &JointConfig::zeros(3),
            &goal_at(4.0, 1.0),
            &base_cfg(Mode::Irreducible, 9),
        )
        .unwrap();
        let tree = &report.tree;
        assert!(tree.len() > 1);
        for node in tree.nodes().iter().skip(1) {
            let parent = &tree.nodes()[node.parent.unwrap()];
            let ec = node.control.as_ref().unwrap();
            let replayed = step_from(&parent.pose, &ec.control, ec.control.duration()).unwrap();
            assert!(
                (replayed.translation - node.pose.translation).norm() < 1e-9,
                "edge replay drift"
            );
        }
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let mut cfg = base_cfg(Mode::Full, 0);
        cfg.goal_bias = 0.6;
        assert!(matches!(
            cfg.validate(),
            Err(PlannerError::Config { field: "goal_bias", .. })
        ));
        let mut cfg = base_cfg(Mode::Full, 0);
        cfg.epsilon_goal = 0.0;
        assert!(matches!(
            cfg.validate(),
            Err(PlannerError::Config { field: "epsilon_goal", .. })
        ));
        let mut cfg = base_cfg(Mode::Full, 0);
        cfg.time_limit = -1.0;
        assert!(cfg.validate().is_err());
    }
}
