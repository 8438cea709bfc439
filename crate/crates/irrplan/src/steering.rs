//! Kinodynamic steering: the planar Dubins unicycle and the spatial
//! driftless airplane, with bounded control sampling and exact rollout of
//! control sequences into root paths.
//!
//! Both systems move at unit forward speed, so elapsed time equals arc
//! length and rollouts integrate in closed form — an arc per planar
//! control, a screw motion per spatial control — with no numeric drift
//! inside a control segment.

use crate::chain::Dim;
use crate::geometry::{se3_exp, GeometryError, Pose2, Pose3, Twist};
use crate::rootpath::{PathError, PathSample, RootPath};
use rand::Rng;
use thiserror::Error;

/// Default cap on a single control's duration (arc-length units).
pub const DEFAULT_DURATION_MAX: f64 = 1.0;
/// Default bound on the roll rate `u6` (radians per meter). The model
/// leaves roll unbounded; sampling needs a finite interval, so it is capped
/// here and configurable through [`ControlBounds`].
pub const DEFAULT_ROLL_MAX: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteeringError {
    #[error("curvature bound must be positive and finite, got {0}")]
    KappaRange(f64),
    #[error("control {name} = {value} exceeds the bound {bound}")]
    ControlBound {
        name: &'static str,
        value: f64,
        bound: f64,
    },
    #[error("duration must lie in (0, {max}], got {got}")]
    DurationRange { got: f64, max: f64 },
    #[error("rollout needs at least one control")]
    NoControls,
    #[error("rollout controls mix planar and spatial variants")]
    MixedControls,
    #[error("rollout step must be positive and finite, got {0}")]
    StepRange(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// A constant control applied for a duration: steering angle `u` in the
/// plane, or yaw/pitch/roll rates in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    Planar { u: f64, duration: f64 },
    Spatial { u4: f64, u5: f64, u6: f64, duration: f64 },
}

impl Control {
    pub fn duration(&self) -> f64 {
        match self {
            Control::Planar { duration, .. } | Control::Spatial { duration, .. } => *duration,
        }
    }

    /// Replaces the duration, e.g. after truncating an integrated edge.
    pub fn set_duration(&mut self, value: f64) {
        match self {
            Control::Planar { duration, .. } | Control::Spatial { duration, .. } => {
                *duration = value
            }
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            Control::Planar { .. } => Dim::Planar,
            Control::Spatial { .. } => Dim::Spatial,
        }
    }

    /// Checks the control against a bound set.
    pub fn validate(&self, bounds: &ControlBounds) -> Result<(), SteeringError> {
        let u_max = bounds.u_max();
        let check = |name: &'static str, value: f64, bound: f64| {
            if !value.is_finite() || value.abs() > bound {
                Err(SteeringError::ControlBound { name, value, bound })
            } else {
                Ok(())
            }
        };
        match *self {
            Control::Planar { u, duration } => {
                check("u", u, u_max)?;
                bounds.check_duration(duration)
            }
            Control::Spatial {
                u4,
                u5,
                u6,
                duration,
            } => {
                check("u4", u4, u_max)?;
                check("u5", u5, u_max)?;
                check("u6", u6, bounds.roll_max)?;
                bounds.check_duration(duration)
            }
        }
    }
}

/// Bounds for control sampling and validation. The steering bound is
/// `atan(kappa)`, matching the system definition; note the realized path
/// curvature then equals the steering angle, so callers comparing against a
/// chain's curvature budget should check `curvature_profile` explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBounds {
    pub kappa: f64,
    pub roll_max: f64,
    pub duration_max: f64,
}

impl ControlBounds {
    pub fn new(kappa: f64) -> Result<Self, SteeringError> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(SteeringError::KappaRange(kappa));
        }
        Ok(Self {
            kappa,
            roll_max: DEFAULT_ROLL_MAX,
            duration_max: DEFAULT_DURATION_MAX,
        })
    }

    /// The steering-angle bound atan(κ).
    pub fn u_max(&self) -> f64 {
        self.kappa.atan()
    }

    fn check_duration(&self, duration: f64) -> Result<(), SteeringError> {
        if !duration.is_finite() || duration <= 0.0 || duration > self.duration_max {
            return Err(SteeringError::DurationRange {
                got: duration,
                max: self.duration_max,
            });
        }
        Ok(())
    }
}

/// Below this steering magnitude a planar control integrates as a straight
/// segment (the arc closed form degrades numerically near u = 0).
const STRAIGHT_TOL: f64 = 1e-12;

/// Exact unicycle integration: a straight segment for u = 0, otherwise an
/// arc of radius 1/u.
pub fn dubins_step(q: &Pose2, u: f64, dt: f64) -> Result<Pose2, SteeringError> {
    let (x, y, th) = (q.x, q.y, q.heading);
    let pose = if u.abs() < STRAIGHT_TOL {
        Pose2::new(x + dt * th.cos(), y + dt * th.sin(), th)?
    } else {
        let th1 = th + u * dt;
        Pose2::new(
            x + (th1.sin() - th.sin()) / u,
            y + (th.cos() - th1.cos()) / u,
            th1,
        )?
    };
    Ok(pose)
}

/// Exact airplane integration: one screw motion
/// `q · exp((X_1 + u4·X_4 + u5·X_5 + u6·X_6)·dt)`.
pub fn airplane_step(q: &Pose3, u4: f64, u5: f64, u6: f64, dt: f64) -> Result<Pose3, SteeringError> {
    let twist = Twist::unit_forward(u4, u5, u6)?;
    let motion = se3_exp(&twist, dt)?;
    Ok(q.compose(&motion)?)
}

/// Draws a control uniformly within bounds. The draw order is fixed —
/// steering components first, then duration — so equal seeds give equal
/// streams. Durations are uniform on (0, duration_max].
pub fn sample_control<R: Rng>(
    bounds: &ControlBounds,
    dim: Dim,
    rng: &mut R,
) -> Control {
    let u_max = bounds.u_max();
    match dim {
        Dim::Planar => {
            let u = rng.random_range(-u_max..=u_max);
            let duration = bounds.duration_max * (1.0 - rng.random::<f64>());
            Control::Planar { u, duration }
        }
        Dim::Spatial => {
            let u4 = rng.random_range(-u_max..=u_max);
            let u5 = rng.random_range(-u_max..=u_max);
            let u6 = rng.random_range(-bounds.roll_max..=bounds.roll_max);
            let duration = bounds.duration_max * (1.0 - rng.random::<f64>());
            Control::Spatial {
                u4,
                u5,
                u6,
                duration,
            }
        }
    }
}

/// Integrates a control sequence from a start pose into a root path
/// sampled at `step`, with extra samples at every control boundary.
///
/// Arc length equals elapsed time (unit speed), so the path's total length
/// is the sum of durations. Within each control the pose is evaluated in
/// closed form from the segment's start pose; across segments poses chain
/// by composition, so the construction is deterministic bit for bit.
pub fn rollout(start: &Pose3, controls: &[Control], step: f64) -> Result<RootPath, SteeringError> {
    if controls.is_empty() {
        return Err(SteeringError::NoControls);
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(SteeringError::StepRange(step));
    }
    let dim = controls[0].dim();
    if controls.iter().any(|c| c.dim() != dim) {
        return Err(SteeringError::MixedControls);
    }
    for c in controls {
        let d = c.duration();
        if !d.is_finite() || d <= 0.0 {
            return Err(SteeringError::DurationRange {
                got: d,
                max: f64::INFINITY,
            });
        }
    }

    // Boundary samples closer than this to a grid sample replace it; keeps
    // consecutive arc-length gaps well above floating noise.
    let merge_tol = (1e-6 * step).max(1e-12);
    let mut samples: Vec<PathSample> = Vec::new();
    let mut seg_start_s = 0.0;

    match dim {
        Dim::Planar => {
            let mut pose = start.to_planar();
            samples.push(PathSample::new(0.0, &pose.to_spatial()));
            for c in controls {
                let (u, duration) = match *c {
                    Control::Planar { u, duration } => (u, duration),
                    Control::Spatial { .. } => unreachable!("dim checked above"),
                };
                append_segment(&mut samples, seg_start_s, duration, step, merge_tol, |dt| {
                    Ok(dubins_step(&pose, u, dt)?.to_spatial())
                })?;
                pose = dubins_step(&pose, u, duration)?;
                seg_start_s += duration;
            }
        }
        Dim::Spatial => {
            let mut pose = start.clone();
            samples.push(PathSample::new(0.0, &pose));
            for c in controls {
                let (u4, u5, u6, duration) = match *c {
                    Control::Spatial {
                        u4,
                        u5,
                        u6,
                        duration,
                    } => (u4, u5, u6, duration),
                    Control::Planar { .. } => unreachable!("dim checked above"),
                };
                append_segment(&mut samples, seg_start_s, duration, step, merge_tol, |dt| {
                    airplane_step(&pose, u4, u5, u6, dt)
                })?;
                pose = airplane_step(&pose, u4, u5, u6, duration)?;
                seg_start_s += duration;
            }
        }
    }

    Ok(RootPath::new(samples, step, dim)?)
}

/// Appends samples of one control segment: global-grid points interior to
/// the segment, then the segment end, merging near-coincident values.
fn append_segment(
    samples: &mut Vec<PathSample>,
    seg_start_s: f64,
    duration: f64,
    step: f64,
    merge_tol: f64,
    eval: impl Fn(f64) -> Result<Pose3, SteeringError>,
) -> Result<(), SteeringError> {
    let seg_end_s = seg_start_s + duration;
    let mut locals: Vec<f64> = Vec::new();
    let mut k = (seg_start_s / step).floor() as i64 + 1;
    loop {
        let s = k as f64 * step;
        if s >= seg_end_s - merge_tol {
            break;
        }
        if s > seg_start_s + merge_tol {
            locals.push(s);
        }
        k += 1;
    }
    locals.push(seg_end_s);
    for s in locals {
        let pose = eval(s - seg_start_s)?;
        samples.push(PathSample::new(s, &pose));
    }
    Ok(())
}
