//! Serial chain descriptions, joint configurations and forward kinematics.
//!
//! A chain is a free-floating spherical root link of radius `δ_0` followed
//! by `n` sublinks of radius `δ_i` connected by revolute joints at spacing
//! `l_i`. Each joint bends by a yaw angle `θ_i` (about the local z-axis) and,
//! in space, additionally by a pitch angle `γ_i` (about the local y-axis);
//! both are limited to `±θ̄`. Link centers trail behind their parent: the
//! child center sits at distance `l_i` along the child frame's −x axis.

use crate::geometry::{rot_y, rot_z, Pose3};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("chain must have at least one sublink")]
    Empty,
    #[error("expected {expected} radii for {links} links, got {got}")]
    RadiusCount {
        expected: usize,
        got: usize,
        links: usize,
    },
    #[error("chain.radii[{index}] must be positive and finite, got {value}")]
    NonPositiveRadius { index: usize, value: f64 },
    #[error("chain.radii[{index}] = {value} exceeds the root radius {root}")]
    SublinkRadiusExceedsRoot { index: usize, value: f64, root: f64 },
    #[error(
        "chain.lengths[{index}] = {length} must exceed the adjacent radii sum {min} \
         (links may not interpenetrate)"
    )]
    LinkTooShort { index: usize, length: f64, min: f64 },
    #[error("chain.theta_bar must lie in (0, pi/2], got {0}")]
    ThetaBarRange(f64),
    #[error("joint configuration has {got} angles, chain has {expected} joints")]
    JointCount { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Ambient dimension of a scene or path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    Planar,
    Spatial,
}

/// Geometry of an `n`-sublink chain: radii `δ_0..δ_n` (root first), joint
/// spacings `l_1..l_n` and the shared joint limit `θ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    radii: Vec<f64>,
    lengths: Vec<f64>,
    theta_bar: f64,
    dim: Dim,
}

impl ChainSpec {
    pub fn new(
        radii: Vec<f64>,
        lengths: Vec<f64>,
        theta_bar: f64,
        dim: Dim,
    ) -> Result<Self, ChainError> {
        if lengths.is_empty() {
            return Err(ChainError::Empty);
        }
        if radii.len() != lengths.len() + 1 {
            return Err(ChainError::RadiusCount {
                expected: lengths.len() + 1,
                got: radii.len(),
                links: lengths.len(),
            });
        }
        for (i, &r) in radii.iter().enumerate() {
            if !r.is_finite() || r <= 0.0 {
                return Err(ChainError::NonPositiveRadius { index: i, value: r });
            }
        }
        let root = radii[0];
        for (i, &r) in radii.iter().enumerate().skip(1) {
            if r > root {
                return Err(ChainError::SublinkRadiusExceedsRoot {
                    index: i,
                    value: r,
                    root,
                });
            }
        }
        for (i, &l) in lengths.iter().enumerate() {
            if !l.is_finite() {
                return Err(ChainError::NonFinite("lengths"));
            }
            let min = radii[i] + radii[i + 1];
            if l <= min {
                return Err(ChainError::LinkTooShort {
                    index: i,
                    length: l,
                    min,
                });
            }
        }
        if !theta_bar.is_finite() || theta_bar <= 0.0 || theta_bar > std::f64::consts::FRAC_PI_2 {
            return Err(ChainError::ThetaBarRange(theta_bar));
        }
        Ok(Self {
            radii,
            lengths,
            theta_bar,
            dim,
        })
    }

    /// Uniform chain: `n` sublinks of length `l0`, all radii `delta`.
    pub fn uniform(n: usize, l0: f64, delta: f64, theta_bar: f64, dim: Dim) -> Result<Self, ChainError> {
        Self::new(vec![delta; n + 1], vec![l0; n], theta_bar, dim)
    }

    /// Number of sublinks (joints).
    pub fn links(&self) -> usize {
        self.lengths.len()
    }

    /// Radii `δ_0..δ_n`, root first.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Root link radius `δ_0`.
    pub fn root_radius(&self) -> f64 {
        self.radii[0]
    }

    /// Joint spacings `l_1..l_n`.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Total chain span `Σ l_i` — the backward path length the projection
    /// consumes.
    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn theta_bar(&self) -> f64 {
        self.theta_bar
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }
}

/// Joint angles of a chain: yaw `θ_i` and pitch `γ_i` per joint.
///
/// Planar chains keep every `γ_i` at zero. Configurations produced by a
/// successful projection satisfy `|θ_i| ≤ θ̄` and `|γ_i| ≤ θ̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl JointConfig {
    pub fn zeros(n: usize) -> Self {
        Self {
            theta: vec![0.0; n],
            gamma: vec![0.0; n],
        }
    }

    pub fn planar(theta: Vec<f64>) -> Self {
        let n = theta.len();
        Self {
            theta,
            gamma: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    fn check_for(&self, spec: &ChainSpec) -> Result<(), ChainError> {
        if self.theta.len() != spec.links() || self.gamma.len() != spec.links() {
            return Err(ChainError::JointCount {
                expected: spec.links(),
                got: self.theta.len().max(self.gamma.len()),
            });
        }
        if !self.theta.iter().chain(self.gamma.iter()).all(|v| v.is_finite()) {
            return Err(ChainError::NonFinite("joint angles"));
        }
        Ok(())
    }

    /// Whether every angle respects the chain's joint limit.
    pub fn within_limits(&self, spec: &ChainSpec) -> bool {
        let tb = spec.theta_bar();
        self.theta
            .iter()
            .chain(self.gamma.iter())
            .all(|a| a.abs() <= tb)
    }
}

/// Link-center poses for a chain at joint configuration `q`, root first.
///
/// The returned vector has `n + 1` poses: index 0 is the root pose itself,
/// index `i` the center and frame of sublink `i`. Frames compose as
/// `f_i = f_{i-1} · R_y(γ_i) · R_z(θ_i)` and centers as
/// `c_i = c_{i-1} + l_i · f_i · (−x̂)`.
pub fn forward_kinematics(
    spec: &ChainSpec,
    root: &Pose3,
    q: &JointConfig,
) -> Result<Vec<Pose3>, ChainError> {
    q.check_for(spec)?;
    let mut poses = Vec::with_capacity(spec.links() + 1);
    poses.push(root.clone());
    let mut frame = root.rotation;
    let mut center = root.translation;
    for i in 0..spec.links() {
        frame *= rot_y(q.gamma[i]) * rot_z(q.theta[i]);
        center += frame * Vector3::new(-spec.lengths[i], 0.0, 0.0);
        poses.push(Pose3::new(center, frame).map_err(|_| ChainError::NonFinite("pose"))?);
    }
    Ok(poses)
}

/// The chain's workspace volume at the given link poses: one sphere per
/// link, radii from the spec, root first.
pub fn chain_volume(spec: &ChainSpec, poses: &[Pose3]) -> Result<Vec<(Vector3<f64>, f64)>, ChainError> {
    if poses.len() != spec.links() + 1 {
        return Err(ChainError::RadiusCount {
            expected: spec.links() + 1,
            got: poses.len(),
            links: spec.links(),
        });
    }
    Ok(poses
        .iter()
        .zip(spec.radii.iter())
        .map(|(p, &r)| (p.translation, r))
        .collect())
}
