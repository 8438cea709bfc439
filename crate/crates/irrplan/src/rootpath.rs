//! Densely sampled root-link paths.
//!
//! A [`RootPath`] is the discrete trace of the root link: samples of
//! arc-length, position and orientation, strictly increasing in `s` from 0,
//! dense enough that consecutive positions are at most 1.5 sample steps
//! apart. Paths follow the unit-speed convention: the parameter is the
//! traveled arc length and the orientation's x-axis points along the motion.
//!
//! [`extend_prefix`] prepends the virtual unwinding of a chain behind the
//! path start: the polyline through the link centers at the initial joint
//! configuration, resampled at the path step. The projection consumes this
//! prefix so sublinks are well-defined from the very first root pose.

use crate::chain::{forward_kinematics, ChainError, ChainSpec, Dim, JointConfig};
use crate::geometry::{discrete_curvature, wrap_angle, GeometryError, Pose3};
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Factor by which consecutive sample distances may exceed the nominal step.
pub const DENSITY_SLACK: f64 = 1.5;

/// Second-derivative norm below which the frame seed falls back to a
/// canonical axis.
pub const DEGENERATE_SECOND: f64 = 1e-9;

/// Angular tolerance for the prefix tangent-continuity check, radians.
pub const TANGENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("path needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("sample step must be positive and finite, got {0}")]
    StepNonPositive(f64),
    #[error("arc length must start at 0, got {0}")]
    NotAtOrigin(f64),
    #[error("arc length not strictly increasing at sample {index}")]
    NotMonotone { index: usize },
    #[error(
        "samples {index}..{} are {distance:.6} apart, above the density bound {limit:.6}",
        index + 1
    )]
    SampleSpacing {
        index: usize,
        distance: f64,
        limit: f64,
    },
    #[error("arc length {s} outside the path range [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
    #[error("degenerate tangent: first derivative vanished at s = {0}")]
    DegenerateTangent(f64),
    #[error(
        "chain does not trail the path start: first backward chord deviates from the \
         start tangent by {angle:.3e} rad"
    )]
    TangentMismatch { angle: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("malformed path text: {0}")]
    Parse(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One path sample: arc length, position and local-to-world orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub s: f64,
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl PathSample {
    pub fn new(s: f64, pose: &Pose3) -> Self {
        Self {
            s,
            position: pose.translation,
            rotation: pose.rotation,
        }
    }

    pub fn pose(&self) -> Pose3 {
        Pose3 {
            translation: self.position,
            rotation: self.rotation,
        }
    }
}

/// A validated, densely sampled root-link path.
#[derive(Debug, Clone, PartialEq)]
pub struct RootPath {
    samples: Vec<PathSample>,
    step: f64,
    dim: Dim,
}

impl RootPath {
    /// Validates and wraps a sample sequence.
    pub fn new(samples: Vec<PathSample>, step: f64, dim: Dim) -> Result<Self, PathError> {
        if !step.is_finite() || step <= 0.0 {
            return Err(PathError::StepNonPositive(step));
        }
        if samples.len() < 2 {
            return Err(PathError::TooFewSamples {
                min: 2,
                got: samples.len(),
            });
        }
        if samples[0].s.abs() > 1e-9 {
            return Err(PathError::NotAtOrigin(samples[0].s));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !w[1].s.is_finite() || !w[1].position.iter().all(|v| v.is_finite()) {
                return Err(PathError::NonFinite("sample"));
            }
            if w[1].s <= w[0].s {
                return Err(PathError::NotMonotone { index: i + 1 });
            }
            let d = (w[1].position - w[0].position).norm();
            let limit = DENSITY_SLACK * step;
            if d > limit {
                return Err(PathError::SampleSpacing {
                    index: i,
                    distance: d,
                    limit,
                });
            }
        }
        Ok(Self { samples, step, dim })
    }

    /// Conventional sample step for a chain: one hundredth of the shortest
    /// link.
    pub fn default_step(spec: &ChainSpec) -> f64 {
        0.01 * spec.lengths().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn samples(&self) -> &[PathSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees >= 2 samples
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Total arc length (the last sample's parameter).
    pub fn total_length(&self) -> f64 {
        self.samples[self.samples.len() - 1].s
    }

    fn check_range(&self, s: f64) -> Result<f64, PathError> {
        let length = self.total_length();
        let tol = 1e-9 * length.max(1.0);
        if !s.is_finite() || s < -tol || s > length + tol {
            return Err(PathError::OutOfRange { s, length });
        }
        Ok(s.clamp(0.0, length))
    }

    /// Index of the last sample with `samples[i].s <= s` (clamped so that
    /// `i + 1` is valid).
    fn segment_index(&self, s: f64) -> usize {
        let n = self.samples.len();
        let idx = self.samples.partition_point(|smp| smp.s <= s);
        idx.saturating_sub(1).min(n - 2)
    }

    /// Interpolated position at arc length `s`.
    pub fn position_at(&self, s: f64) -> Result<Vector3<f64>, PathError> {
        let s = self.check_range(s)?;
        let i = self.segment_index(s);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let t = (s - a.s) / (b.s - a.s);
        Ok(a.position + (b.position - a.position) * t)
    }

    /// Interpolated pose at arc length `s`.
    ///
    /// Positions interpolate linearly. Planar orientations interpolate the
    /// heading angle; spatial orientations are carried from the nearest
    /// sample.
    pub fn pose_at(&self, s: f64) -> Result<Pose3, PathError> {
        let s = self.check_range(s)?;
        let i = self.segment_index(s);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let t = (s - a.s) / (b.s - a.s);
        let position = a.position + (b.position - a.position) * t;
        let rotation = match self.dim {
            Dim::Planar => {
                let ha = heading_of(&a.rotation);
                let hb = heading_of(&b.rotation);
                let h = wrap_angle(ha + t * wrap_angle(hb - ha)?)?;
                crate::geometry::rot_z(h)
            }
            Dim::Spatial => {
                if t < 0.5 {
                    a.rotation
                } else {
                    b.rotation
                }
            }
        };
        Ok(Pose3 {
            translation: position,
            rotation,
        })
    }

    /// First and second derivatives of the position with respect to arc
    /// length at `s`: the unit tangent and the raw second-derivative vector.
    ///
    /// Derivatives come from the interpolating parabola through the three
    /// samples around `s` (one-sided at the path ends, central at interior
    /// samples). When the second derivative's norm falls below 1e-9 it is
    /// replaced by the smallest-index canonical axis not parallel to the
    /// tangent, orthogonalized against it — a fixed, deterministic seed for
    /// frame construction on straight segments.
    pub fn derivatives_at(&self, s: f64) -> Result<(Vector3<f64>, Vector3<f64>), PathError> {
        let s = self.check_range(s)?;
        let n = self.samples.len();
        let (first, second) = if n == 2 {
            let d = self.samples[1].position - self.samples[0].position;
            (d / (self.samples[1].s - self.samples[0].s), Vector3::zeros())
        } else {
            // Center the three-point stencil on the sample nearest to s,
            // clamped to the interior.
            let seg = self.segment_index(s);
            let nearest = if (s - self.samples[seg].s) <= (self.samples[seg + 1].s - s) {
                seg
            } else {
                seg + 1
            };
            let c = nearest.clamp(1, n - 2);
            let (pm, p0, pp) = (
                &self.samples[c - 1],
                &self.samples[c],
                &self.samples[c + 1],
            );
            lagrange_derivatives(s, (pm.s, &pm.position), (p0.s, &p0.position), (pp.s, &pp.position))
        };
        let speed = first.norm();
        if speed < 1e-12 {
            return Err(PathError::DegenerateTangent(s));
        }
        let tangent = first / speed;
        let second = if second.norm() < DEGENERATE_SECOND {
            fallback_normal(&tangent)
        } else {
            second
        };
        Ok((tangent, second))
    }

    /// Maximum discrete curvature over consecutive sample triples.
    ///
    /// Triples containing near-coincident positions (repeated poses from a
    /// paused parameterization) are skipped. A two-sample path is straight
    /// and reports 0.
    pub fn curvature_profile(&self) -> Result<f64, PathError> {
        let mut max_kappa: f64 = 0.0;
        for w in self.samples.windows(3) {
            match discrete_curvature(&w[0].position, &w[1].position, &w[2].position) {
                Ok(k) => max_kappa = max_kappa.max(k),
                Err(GeometryError::CoincidentPoints(_)) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(max_kappa)
    }

    /// The same geometric path traversed in the opposite direction.
    pub fn reversed(&self) -> RootPath {
        let length = self.total_length();
        let mut samples: Vec<PathSample> = self
            .samples
            .iter()
            .rev()
            .map(|smp| PathSample {
                s: length - smp.s,
                position: smp.position,
                rotation: smp.rotation,
            })
            .collect();
        samples[0].s = 0.0;
        RootPath {
            samples,
            step: self.step,
            dim: self.dim,
        }
    }

    /// The same polyline re-sampled at a (typically finer) spacing: samples
    /// at every multiple of `new_step`, at every original breakpoint, and
    /// at the end.
    pub fn resample(&self, new_step: f64) -> Result<RootPath, PathError> {
        if !new_step.is_finite() || new_step <= 0.0 {
            return Err(PathError::StepNonPositive(new_step));
        }
        let total = self.total_length();
        let mut stations: Vec<f64> = Vec::with_capacity(
            self.samples.len() + (total / new_step) as usize + 2,
        );
        stations.extend(self.samples.iter().map(|smp| smp.s));
        let mut k = 1;
        loop {
            let s = k as f64 * new_step;
            if s >= total {
                break;
            }
            stations.push(s);
            k += 1;
        }
        stations.sort_by(|a, b| a.partial_cmp(b).expect("arc lengths are finite"));
        stations.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * new_step.min(1.0));
        let samples = stations
            .iter()
            .map(|&s| Ok(PathSample::new(s, &self.pose_at(s)?)))
            .collect::<Result<Vec<_>, PathError>>()?;
        RootPath::new(samples, new_step, self.dim)
    }

    /// Plain-text form: a header line `dim step`, then one sample per line —
    /// `s x y heading` in 2D, `s x y z r00 .. r22` (row-major rotation) in
    /// 3D. Numbers use shortest exact round-trip formatting.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        match self.dim {
            Dim::Planar => {
                out.push_str(&format!("2 {}\n", self.step));
                for smp in &self.samples {
                    out.push_str(&format!(
                        "{} {} {} {}\n",
                        smp.s,
                        smp.position.x,
                        smp.position.y,
                        heading_of(&smp.rotation)
                    ));
                }
            }
            Dim::Spatial => {
                out.push_str(&format!("3 {}\n", self.step));
                for smp in &self.samples {
                    let r = &smp.rotation;
                    out.push_str(&format!(
                        "{} {} {} {}",
                        smp.s, smp.position.x, smp.position.y, smp.position.z
                    ));
                    for i in 0..3 {
                        for j in 0..3 {
                            out.push_str(&format!(" {}", r[(i, j)]));
                        }
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Parses the [`dump_text`](Self::dump_text) format.
    pub fn parse_text(text: &str) -> Result<RootPath, PathError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| PathError::Parse("empty path text".into()))?;
        let mut head = header.split_whitespace();
        let parse_f64 = |tok: &str, what: &str| {
            tok.parse::<f64>()
                .map_err(|_| PathError::Parse(format!("bad {what}: {tok:?}")))
        };
        let dim = match head.next() {
            Some("2") => Dim::Planar,
            Some("3") => Dim::Spatial,
            other => {
                return Err(PathError::Parse(format!(
                    "header dimension must be 2 or 3, got {other:?}"
                )))
            }
        };
        let step = parse_f64(
            head.next()
                .ok_or_else(|| PathError::Parse("header missing step".into()))?,
            "step",
        )?;
        let per_line = match dim {
            Dim::Planar => 4,
            Dim::Spatial => 13,
        };
        let mut samples = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields = line
                .split_whitespace()
                .map(|tok| parse_f64(tok, "number"))
                .collect::<Result<Vec<f64>, _>>()?;
            if fields.len() != per_line {
                return Err(PathError::Parse(format!(
                    "sample line {} has {} fields, expected {per_line}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let (s, position, rotation) = match dim {
                Dim::Planar => (
                    fields[0],
                    Vector3::new(fields[1], fields[2], 0.0),
                    crate::geometry::rot_z(fields[3]),
                ),
                Dim::Spatial => {
                    let mut r = Matrix3::zeros();
                    for i in 0..3 {
                        for j in 0..3 {
                            r[(i, j)] = fields[4 + 3 * i + j];
                        }
                    }
                    let pose =
                        Pose3::new(Vector3::new(fields[1], fields[2], fields[3]), r).map_err(
                            |e| PathError::Parse(format!("sample line {}: {e}", lineno + 2)),
                        )?;
                    (fields[0], pose.translation, pose.rotation)
                }
            };
            samples.push(PathSample {
                s,
                position,
                rotation,
            });
        }
        RootPath::new(samples, step, dim)
    }
}

/// Heading angle of a planar rotation (angle of its x-axis).
pub fn heading_of(rotation: &Matrix3<f64>) -> f64 {
    rotation[(1, 0)].atan2(rotation[(0, 0)])
}

/// First and second derivative of the parabola through three points,
/// evaluated at `s`.
fn lagrange_derivatives(
    s: f64,
    (sa, pa): (f64, &Vector3<f64>),
    (sb, pb): (f64, &Vector3<f64>),
    (sc, pc): (f64, &Vector3<f64>),
) -> (Vector3<f64>, Vector3<f64>) {
    let da = (sa - sb) * (sa - sc);
    let db = (sb - sa) * (sb - sc);
    let dc = (sc - sa) * (sc - sb);
    let first = pa * ((2.0 * s - sb - sc) / da)
        + pb * ((2.0 * s - sa - sc) / db)
        + pc * ((2.0 * s - sa - sb) / dc);
    let second = pa * (2.0 / da) + pb * (2.0 / db) + pc * (2.0 / dc);
    (first, second)
}

/// Smallest-index canonical axis not parallel to `tangent`, orthogonalized
/// against it and normalized.
fn fallback_normal(tangent: &Vector3<f64>) -> Vector3<f64> {
    for k in 0..3 {
        let mut axis = Vector3::zeros();
        axis[k] = 1.0;
        if axis.dot(tangent).abs() < 1.0 - 1e-9 {
            let v = axis - tangent * tangent.dot(&axis);
            return v.normalize();
        }
    }
    unreachable!("some canonical axis is non-parallel to any unit tangent")
}

/// Prepends the virtual chain prefix to a path: the polyline through the
/// link centers at the start configuration (deepest link first), resampled
/// at the path step, followed by the original samples shifted by the total
/// chain span.
///
/// The returned path adds exactly `Σ l_i` of arc length, and its sample at
/// `s = Σ l_i` is the original start pose. The chain must trail the start
/// tangent: if the first backward chord deviates from the start pose's
/// motion direction by more than 1e-6 rad this is a [`PathError::TangentMismatch`]
/// (in practice the first joint of `initial_q` must be zero).
pub fn extend_prefix(
    path: &RootPath,
    spec: &ChainSpec,
    initial_q: &JointConfig,
) -> Result<RootPath, PathError> {
    let start = path.samples[0].pose();
    let poses = forward_kinematics(spec, &start, initial_q)?;

    // Continuity: the chord from the first sublink center to the root must
    // point along the start pose's motion direction (its x-axis under the
    // unit-speed convention).
    let first_chord = (poses[0].translation - poses[1].translation) / spec.lengths()[0];
    let forward = start.rotation.column(0).into_owned();
    let angle = first_chord.dot(&forward).clamp(-1.0, 1.0).acos();
    if angle > TANGENT_TOL {
        return Err(PathError::TangentMismatch { angle });
    }

    let step = path.step;
    let mut samples = prefix_polyline(spec, &poses, step, false);
    let base = spec.total_length();
    // The original samples, shifted by the chain span; the first original
    // sample supplies the exact start pose at s = span.
    samples.reserve(path.samples.len());
    for smp in &path.samples {
        samples.push(PathSample {
            s: base + smp.s,
            position: smp.position,
            rotation: smp.rotation,
        });
    }
    RootPath::new(samples, step, path.dim)
}

/// The chain-trail polyline alone as a path: from the deepest link center
/// at `s = 0` to the root pose at `s = Σ l_i`, sampled at `step`.
///
/// This is the degenerate prefix extension of a robot that has not moved
/// yet; the planner uses it when the root path consists of a single pose.
pub fn chain_prefix_path(
    spec: &ChainSpec,
    start: &Pose3,
    initial_q: &JointConfig,
    step: f64,
) -> Result<RootPath, PathError> {
    let poses = forward_kinematics(spec, start, initial_q)?;
    let samples = prefix_polyline(spec, &poses, step, true);
    RootPath::new(samples, step, spec.dim())
}

/// Samples the polyline through FK link centers deepest-first. The final
/// vertex (the root pose) is included only when `include_last` — callers
/// appending the original path supply it themselves.
fn prefix_polyline(
    spec: &ChainSpec,
    poses: &[Pose3],
    step: f64,
    include_last: bool,
) -> Vec<PathSample> {
    let n = spec.links();
    let mut samples: Vec<PathSample> =
        Vec::with_capacity((spec.total_length() / step) as usize + n + 2);
    let mut base = 0.0f64;
    // Walk segments deepest-first: link n back to the root.
    for i in (0..n).rev() {
        let from = poses[i + 1].translation;
        let to = poses[i].translation;
        let l = spec.lengths()[i];
        let m = (l / step).ceil().max(1.0) as usize;
        let rotation = poses[i + 1].rotation;
        let kmax = if i == 0 && !include_last { m - 1 } else { m };
        for k in 0..=kmax {
            if k == 0 && i != n - 1 {
                continue; // segment start equals the previous segment's end
            }
            let t = k as f64 / m as f64;
            // The root vertex carries the start pose's own frame.
            let rotation = if i == 0 && k == m { poses[0].rotation } else { rotation };
            samples.push(PathSample {
                s: base + l * t,
                position: from + (to - from) * t,
                rotation,
            });
        }
        base += l;
    }
    samples
}
