//! The irreducible curvature projection: computing sublink joint angles so
//! the whole chain lies inside the root link's swept volume, plus the
//! grid-level containment certificate.
//!
//! The projection walks backwards along the root path from a query arc
//! length, placing each sublink center at exact chordal distance `l_i` from
//! its predecessor, and decomposes each backward chord into an in-plane
//! angle θ_i and an out-of-plane angle γ_i against the moving link frame.
//! Sublink centers therefore lie exactly on the root path, which is what
//! makes the containment certificate discharge: a sublink ball of radius
//! δ_i ≤ δ_0 centered on the path is inside the root link's swept tube.

use crate::chain::{ChainError, ChainSpec, JointConfig};
use crate::geometry::{rot_y, rot_z, GeometryError};
use crate::rootpath::{PathError, RootPath};
use crate::world::OccupancyGrid;
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Below this norm a backward chord is considered parallel to a frame axis.
pub const DEGENERATE_DIRECTION_TOL: f64 = 1e-12;
/// Relative tolerance of the chordal placement ‖τ(s_i−1) − τ(s_i)‖ = l_i.
pub const CHORD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error(
        "path too short behind the query for link {joint}: needs chord {needed} \
         but only {available} is reachable before s=0 (extend the prefix first)"
    )]
    PathTooShort {
        joint: usize,
        needed: f64,
        available: f64,
    },
    #[error("joint {joint} exceeds the joint limit; partial result attached")]
    JointLimitExceeded {
        joint: usize,
        result: Box<ProjectionResult>,
    },
    #[error("backward chord at joint {joint} is parallel to a frame axis")]
    DegenerateDirection { joint: usize },
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Output of the projection at one query point.
///
/// `frames` holds the seed frame at index 0 followed by each sublink's
/// frame, so `frames[i]` with `i ≥ 1` is the frame of sublink `i` and the
/// chord to sublink `i` is `l_i · frames[i] · (−x̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub q: JointConfig,
    pub sublink_arclengths: Vec<f64>,
    pub frames: Vec<Matrix3<f64>>,
}

impl ProjectionResult {
    /// The frame the projection was seeded with (tangent, normal, binormal
    /// at the query point).
    pub fn seed_frame(&self) -> &Matrix3<f64> {
        &self.frames[0]
    }

    /// Sublink occupancy spheres: centers on the path at the projected arc
    /// lengths, radii from the chain.
    pub fn sublink_spheres(
        &self,
        path: &RootPath,
        spec: &ChainSpec,
    ) -> Result<Vec<(Vector3<f64>, f64)>, PathError> {
        self.sublink_arclengths
            .iter()
            .zip(spec.radii().iter().skip(1))
            .map(|(&s, &r)| Ok((path.position_at(s)?, r)))
            .collect()
    }
}

/// Finds the arc length `s < s_last` whose position lies at chordal
/// distance `l` from the position at `s_last`.
///
/// Marches backwards over the sample grid until the chord first exceeds
/// `l`, then bisects on the piecewise-linear interpolant to a relative
/// placement error of 1e−9.
pub fn backward_arc_point(path: &RootPath, s_last: f64, l: f64) -> Result<f64, ProjectionError> {
    let anchor = path.position_at(s_last)?;
    let samples = path.samples();
    // Index of the last sample strictly before s_last.
    let mut idx = samples.partition_point(|smp| smp.s < s_last);
    let mut s_hi = s_last; // nearer bracket end: chord < l
    let mut bracket = None;
    while idx > 0 {
        idx -= 1;
        let smp = &samples[idx];
        let d = (smp.position - anchor).norm();
        if d >= l {
            bracket = Some((smp.s, s_hi));
            break;
        }
        s_hi = smp.s;
    }
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => {
            let available = (samples[0].position - anchor).norm();
            return Err(ProjectionError::PathTooShort {
                joint: 0,
                needed: l,
                available,
            });
        }
    };
    // Invariant: chord(lo) ≥ l > chord(hi); the crossing lies between.
    let tol = CHORD_TOL * l;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = (path.position_at(mid)? - anchor).norm();
        if (d - l).abs() <= tol {
            return Ok(mid);
        }
        if d >= l {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Projects the sublinks of `spec` onto the root path at query arc length
/// `s_query`, returning the joint angles that place every sublink center on
/// the path behind the query point.
///
/// The seed frame comes from the path derivatives at the query: tangent,
/// orthonormalized second derivative, and their cross product. Each
/// backward chord is rotated into the current frame and decomposed against
/// the link axis (−1, 0, 0); the frame then advances by
/// `R · R_y(γ_i) · R_z(θ_i)`. Joint limits are checked after the full loop
/// so a limit violation still carries the completed result.
pub fn project(
    path: &RootPath,
    spec: &ChainSpec,
    s_query: f64,
) -> Result<ProjectionResult, ProjectionError> {
    let (e1, second) = path.derivatives_at(s_query)?;
    let e2_raw = second - e1 * second.dot(&e1);
    let n2 = e2_raw.norm();
    if n2 < DEGENERATE_DIRECTION_TOL {
        return Err(ProjectionError::DegenerateDirection { joint: 0 });
    }
    let e2 = e2_raw / n2;
    let e3 = e1.cross(&e2);
    let mut frame = Matrix3::from_columns(&[e1, e2, e3]);

    let n = spec.links();
    let mut theta = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    let mut arclengths = Vec::with_capacity(n);
    let mut frames = Vec::with_capacity(n + 1);
    frames.push(frame);

    let mut s_last = s_query;
    let mut p_last = path.position_at(s_last)?;
    for (i, &l) in spec.lengths().iter().enumerate() {
        let joint = i + 1;
        let s_next = backward_arc_point(path, s_last, l).map_err(|e| match e {
            ProjectionError::PathTooShort {
                needed, available, ..
            } => ProjectionError::PathTooShort {
                joint,
                needed,
                available,
            },
            other => other,
        })?;
        let p_next = path.position_at(s_next)?;
        let p_w = frame.transpose() * (p_next - p_last);
        let p_xy = Vector3::new(p_w.x, p_w.y, 0.0);
        let p_zx = Vector3::new(p_w.x, 0.0, p_w.z);
        if p_xy.norm() < DEGENERATE_DIRECTION_TOL || p_zx.norm() < DEGENERATE_DIRECTION_TOL {
            return Err(ProjectionError::DegenerateDirection { joint });
        }
        // Angle of each planar shadow of the chord against x_L = (−1,0,0).
        let mut th = (-p_w.x / p_xy.norm()).clamp(-1.0, 1.0).acos();
        let mut ga = (-p_w.x / p_zx.norm()).clamp(-1.0, 1.0).acos();
        if p_w.z < 0.0 {
            ga = -ga;
        }
        if p_w.y > 0.0 {
            th = -th;
        }
        frame *= rot_y(ga) * rot_z(th);
        theta.push(th);
        gamma.push(ga);
        arclengths.push(s_next);
        frames.push(frame);
        s_last = s_next;
        p_last = p_next;
    }

    let result = ProjectionResult {
        q: JointConfig { theta, gamma },
        sublink_arclengths: arclengths,
        frames,
    };
    let tb = spec.theta_bar();
    let offending = result
        .q
        .theta
        .iter()
        .zip(result.q.gamma.iter())
        .position(|(t, g)| t.abs() > tb || g.abs() > tb);
    if let Some(j) = offending {
        return Err(ProjectionError::JointLimitExceeded {
            joint: j + 1,
            result: Box::new(result),
        });
    }
    Ok(result)
}

/// A single uncovered test point found by the containment certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentViolation {
    pub s_query: f64,
    pub link: usize,
    pub point: Vector3<f64>,
    /// How far inside the claimed sublink ball the uncovered region
    /// extends, in meters.
    pub depth: f64,
}

/// Report of the grid-level containment certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub queries: usize,
    /// (query, link) pairs whose ball was checked.
    pub checks: usize,
    /// Projection errors per query arc length, rendered as text.
    pub projection_failures: Vec<(f64, String)>,
    /// Count of uncovered test points across all checks.
    pub failing_points: usize,
    pub violations: Vec<ContainmentViolation>,
    /// Deepest violation in meters (0 when none).
    pub worst_violation: f64,
}

impl CertificateReport {
    pub fn pass(&self) -> bool {
        self.projection_failures.is_empty() && self.failing_points == 0
    }
}

/// Verifies, cell by cell, that every projected sublink ball lies inside
/// the root link's swept volume `sv` at `queries` equispaced query points.
///
/// Each ball is sampled at its center and on its boundary at the grid
/// resolution. Boundary samples are taken at the radius minus one
/// worst-case quantization offset (half the cell diagonal plus half the
/// path sample spacing): the grid cannot certify geometry below a single
/// cell, and with that inset a ball of radius δ_i ≤ δ_0 centered on the
/// path is guaranteed covered, while radius overshoots of a few cells are
/// still detected.
pub fn containment_certificate(
    path: &RootPath,
    spec: &ChainSpec,
    sv: &OccupancyGrid,
    queries: usize,
) -> Result<CertificateReport, ProjectionError> {
    let needed = spec.total_length();
    let total = path.total_length();
    let lo = needed.min(total);
    let n_q = queries.max(1);
    let res = sv.resolution();
    let dim_axes: f64 = match path.dim() {
        crate::chain::Dim::Planar => 2.0,
        crate::chain::Dim::Spatial => 3.0,
    };
    let inset = res * dim_axes.sqrt() / 2.0 + path.step() / 2.0;

    let mut report = CertificateReport {
        queries: n_q,
        checks: 0,
        projection_failures: Vec::new(),
        failing_points: 0,
        violations: Vec::new(),
        worst_violation: 0.0,
    };

    for k in 0..n_q {
        let t = if n_q == 1 {
            0.0
        } else {
            k as f64 / (n_q - 1) as f64
        };
        let s_query = lo + t * (total - lo);
        let result = match project(path, spec, s_query) {
            Ok(r) => r,
            Err(e) => {
                report.projection_failures.push((s_query, e.to_string()));
                continue;
            }
        };
        for (link_idx, (center, radius)) in result
            .sublink_spheres(path, spec)?
            .into_iter()
            .enumerate()
        {
            report.checks += 1;
            let link = link_idx + 1;
            let r_eff = (radius - inset).max(0.0);
            let mut points = vec![center];
            if r_eff > 0.0 {
                points.extend(boundary_points(&center, r_eff, res, path.dim()));
            }
            for p in points {
                if sv.occupied_at_point(&p) {
                    continue;
                }
                report.failing_points += 1;
                let depth = violation_depth(sv, &center, &p, radius, res);
                if depth > report.worst_violation {
                    report.worst_violation = depth;
                }
                report.violations.push(ContainmentViolation {
                    s_query,
                    link,
                    point: p,
                    depth,
                });
            }
        }
    }
    Ok(report)
}

/// Boundary sample points of a ball at roughly one grid cell apart:
/// a ring in the plane, a Fibonacci-spiral covering in space.
fn boundary_points(
    center: &Vector3<f64>,
    radius: f64,
    res: f64,
    dim: crate::chain::Dim,
) -> Vec<Vector3<f64>> {
    match dim {
        crate::chain::Dim::Planar => {
            let count = ((std::f64::consts::TAU * radius / res).ceil() as usize).max(8);
            (0..count)
                .map(|i| {
                    let a = std::f64::consts::TAU * i as f64 / count as f64;
                    center + radius * Vector3::new(a.cos(), a.sin(), 0.0)
                })
                .collect()
        }
        crate::chain::Dim::Spatial => {
            let area = 4.0 * std::f64::consts::PI * radius * radius;
            let count = ((area / (res * res)).ceil() as usize).clamp(32, 20_000);
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r_xy = (1.0 - z * z).max(0.0).sqrt();
                    let a = golden * i as f64;
                    center + radius * Vector3::new(r_xy * a.cos(), r_xy * a.sin(), z)
                })
                .collect()
        }
    }
}

/// Marches from an uncovered point toward the ball center until coverage
/// resumes; the violation depth is measured from the claimed ball surface.
fn violation_depth(
    sv: &OccupancyGrid,
    center: &Vector3<f64>,
    point: &Vector3<f64>,
    radius: f64,
    res: f64,
) -> f64 {
    let toward = center - point;
    let dist = toward.norm();
    if dist < 1e-12 {
        // The center itself is uncovered: the whole ball is in doubt.
        return radius;
    }
    let dir = toward / dist;
    let mut t = 0.0;
    while t < dist {
        let p = point + dir * t;
        if sv.occupied_at_point(&p) {
            // Covered again at distance (radius − dist + t) from the center.
            return radius - (dist - t);
        }
        t += res / 2.0;
    }
    radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{forward_kinematics, Dim};
    use crate::geometry::Pose3;
    use crate::rootpath::{extend_prefix, PathSample};
    use crate::world::sweep_root;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn straight_path(len: f64, step: f64) -> RootPath {
        let n = (len / step).ceil() as usize;
        let samples = (0..=n)
            .map(|k| {
                let s = (k as f64 * step).min(len);
                PathSample {
                    s,
                    position: Vector3::new(s, 0.0, 0.0),
                    rotation: Matrix3::identity(),
                }
            })
            .collect();
        RootPath::new(samples, step, Dim::Planar).unwrap()
    }

    /// Planar circle of radius `r`; `ccw` picks the turn direction. Starts
    /// at the origin heading +x.
    fn circle_path(r: f64, arc: f64, step: f64, ccw: bool) -> RootPath {
        let n = (arc / step).ceil() as usize;
        let sign = if ccw { 1.0 } else { -1.0 };
        let samples = (0..=n)
            .map(|k| {
                let s = (k as f64 * step).min(arc);
                let a = s / r;
                let position = Vector3::new(r * a.sin(), sign * r * (1.0 - a.cos()), 0.0);
                let rotation = crate::geometry::rot_z(sign * a);
                PathSample { s, position, rotation }
            })
            .collect();
        RootPath::new(samples, step, Dim::Planar).unwrap()
    }

    #[test]
    fn backward_point_on_a_line_is_exact() {
        let path = straight_path(6.0, 0.01);
        let s = backward_arc_point(&path, 5.0, 1.0).unwrap();
        assert_abs_diff_eq!(s, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn backward_point_on_a_circle_matches_chord_relation() {
        let path = circle_path(2.0, 6.0, 0.005, true);
        let s_last = 4.0;
        let s = backward_arc_point(&path, s_last, 1.0).unwrap();
        // Arc between chord endpoints on a circle: 2R·asin(l/(2R)).
        let expect = s_last - 2.0 * 2.0 * (1.0 / 4.0_f64).asin();
        assert_abs_diff_eq!(s, expect, epsilon = 1e-6);
        assert_abs_diff_eq!(expect, s_last - 1.0107210, epsilon = 1e-6);
        let chord = (path.position_at(s).unwrap() - path.position_at(s_last).unwrap()).norm();
        assert_abs_diff_eq!(chord, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn backward_point_reports_short_paths() {
        let path = straight_path(2.0, 0.01);
        match backward_arc_point(&path, 0.5, 1.0) {
            Err(ProjectionError::PathTooShort {
                needed, available, ..
            }) => {
                assert_abs_diff_eq!(needed, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(available, 0.5, epsilon = 1e-9);
            }
            other => panic!("expected PathTooShort, got {other:?}"),
        }
    }

    #[test]
    fn straight_paths_project_to_zero_angles() {
        let spec = ChainSpec::uniform(4, 1.0, 0.2, 1.0, Dim::Planar).unwrap();
        let path = straight_path(8.0, 0.01);
        let r = project(&path, &spec, 7.0).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(r.q.theta[i], 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(r.q.gamma[i], 0.0, epsilon = 1e-9);
        }
        // Sublink centers trail at exact unit spacing.
        for (i, &s) in r.sublink_arclengths.iter().enumerate() {
            assert_abs_diff_eq!(s, 7.0 - (i as f64 + 1.0), epsilon = 1e-8);
        }
    }

    #[test]
    fn circle_projection_matches_the_chord_angle() {
        // Both turn directions: the in-plane angle equals the half-chord
        // angle asin(l/(2R)) in magnitude and is negative under the
        // inward-normal seed frame; out-of-plane angles vanish.
        let magnitude = (1.0 / 10.0_f64).asin();
        assert_abs_diff_eq!(magnitude, 0.1001674, epsilon = 1e-7);
        for ccw in [true, false] {
            let path = circle_path(5.0, 12.0, 0.005, ccw);
            let spec = ChainSpec::uniform(2, 1.0, 0.2, 1.0, Dim::Planar).unwrap();
            let r = project(&path, &spec, 10.0).unwrap();
            assert_abs_diff_eq!(r.q.theta[0], -magnitude, epsilon = 1e-5);
            assert_abs_diff_eq!(r.q.gamma[0], 0.0, epsilon = 1e-9);
            // Interior joints bend by the full chord angle 2·asin(l/(2R)).
            assert_abs_diff_eq!(r.q.theta[1], -2.0 * magnitude, epsilon = 1e-5);
            assert_abs_diff_eq!(r.q.gamma[1], 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn tight_circles_exceed_joint_limits() {
        // θ̄ = 0.05 needs R_0 = 1/(2·sin 0.05) ≈ 10.004; a radius-5 circle
        // bends the first joint past the limit.
        let spec = ChainSpec::uniform(1, 1.0, 0.2, 0.05, Dim::Planar).unwrap();
        let path = circle_path(5.0, 12.0, 0.005, true);
        match project(&path, &spec, 10.0) {
            Err(ProjectionError::JointLimitExceeded { joint, result }) => {
                assert_eq!(joint, 1);
                assert_abs_diff_eq!(result.q.theta[0].abs(), 0.1001674, epsilon = 1e-5);
            }
            other => panic!("expected JointLimitExceeded, got {other:?}"),
        }
    }

    #[test]
    fn forward_kinematics_round_trips_the_projection() {
        // Seeding FK with the projection's own frame reproduces every
        // sublink center on the path, for both turn directions.
        let spec = ChainSpec::uniform(3, 1.0, 0.2, 1.0, Dim::Planar).unwrap();
        for ccw in [true, false] {
            let path = circle_path(5.0, 12.0, 0.005, ccw);
            let s_query = 9.0;
            let r = project(&path, &spec, s_query).unwrap();
            let root = Pose3::new(path.position_at(s_query).unwrap(), *r.seed_frame()).unwrap();
            let poses = forward_kinematics(&spec, &root, &r.q).unwrap();
            for (i, &s_i) in r.sublink_arclengths.iter().enumerate() {
                let expect = path.position_at(s_i).unwrap();
                let got = poses[i + 1].translation;
                assert!((got - expect).norm() < 1e-6, "link {} off by {}", i + 1, (got - expect).norm());
            }
        }
        // On a left-turning arc the path pose frame coincides with the
        // seed frame, so seeding FK straight from pose_at works there too.
        let path = circle_path(5.0, 12.0, 0.005, true);
        let r = project(&path, &spec, 9.0).unwrap();
        let root = path.pose_at(9.0).unwrap();
        let poses = forward_kinematics(&spec, &root, &r.q).unwrap();
        for (i, &s_i) in r.sublink_arclengths.iter().enumerate() {
            let expect = path.position_at(s_i).unwrap();
            assert!((poses[i + 1].translation - expect).norm() < 1e-6);
        }
    }

    #[test]
    fn planar_paths_have_zero_out_of_plane_angles() {
        let spec = ChainSpec::uniform(5, 0.7, 0.15, 1.2, Dim::Planar).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let r = rng.random_range(3.0..8.0);
            let ccw = rng.random_bool(0.5);
            let path = circle_path(r, 10.0, 0.007, ccw);
            let q = project(&path, &spec, 9.0).unwrap().q;
            for g in q.gamma {
                assert_abs_diff_eq!(g, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn round_trip_after_prefix_extension_reproduces_initial_q() {
        // Build a straight path, extend it by the chain at a bent initial
        // configuration, and project at the seam: the projection must read
        // the initial configuration back off the prefix polyline.
        let spec = ChainSpec::uniform(3, 1.0, 0.2, 1.0, Dim::Planar).unwrap();
        let initial = JointConfig::planar(vec![0.0, 0.3, -0.4]);
        let path = straight_path(5.0, 0.01);
        let extended = extend_prefix(&path, &spec, &initial).unwrap();
        let seam = spec.total_length();
        let r = project(&extended, &spec, seam).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(r.q.theta[i], initial.theta[i], epsilon = 1e-6);
            assert_abs_diff_eq!(r.q.gamma[i], initial.gamma[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn projection_success_is_guaranteed_under_the_curvature_bound() {
        // Random planar arc-spline paths with curvature ≤ 0.99·κ_N: no
        // joint-limit failures, and consecutive angles sum within θ̄.
        let n = 4;
        let (l0, tb) = (0.8, 0.9);
        let spec = ChainSpec::uniform(n, l0, 0.15, tb, Dim::Planar).unwrap();
        let kappa_n = crate::curvature::kappa_max(tb, l0, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let path = random_arc_spline(&mut rng, 0.99 * kappa_n, 9.0, 0.008);
            assert!(path.curvature_profile().unwrap() <= kappa_n);
            let q = project(&path, &spec, path.total_length() - 0.5)
                .expect("projection must succeed under the curvature bound")
                .q;
            for i in 1..n {
                assert!(
                    (q.theta[i] + q.theta[i - 1]).abs() <= tb + 1e-6,
                    "adjacent sum {} exceeds {}",
                    (q.theta[i] + q.theta[i - 1]).abs(),
                    tb
                );
            }
        }
    }

    /// Planar C¹ arc-spline: segments of constant signed curvature drawn
    /// uniformly within the bound.
    fn random_arc_spline(rng: &mut ChaCha8Rng, kappa_cap: f64, len: f64, step: f64) -> RootPath {
        let mut samples = Vec::new();
        let (mut x, mut y, mut h) = (0.0, 0.0, 0.0);
        let mut s = 0.0;
        let mut seg_left = 0.0;
        let mut kappa = 0.0;
        let n = (len / step).ceil() as usize;
        for _ in 0..=n {
            samples.push(PathSample {
                s,
                position: Vector3::new(x, y, 0.0),
                rotation: crate::geometry::rot_z(h),
            });
            if seg_left <= 0.0 {
                seg_left = rng.random_range(1.0..3.0);
                kappa = rng.random_range(-kappa_cap..kappa_cap);
            }
            x += step * h.cos();
            y += step * h.sin();
            h += step * kappa;
            s += step;
            seg_left -= step;
        }
        RootPath::new(samples, step, Dim::Planar).unwrap()
    }

    #[test]
    fn projection_cost_is_linear_in_links() {
        let path = straight_path(80.0, 0.01);
        let time_for = |n: usize| {
            let spec = ChainSpec::uniform(n, 1.0, 0.2, 1.0, Dim::Planar).unwrap();
            // Warm up, then measure.
            project(&path, &spec, 79.0).unwrap();
            let reps = 40;
            let t0 = std::time::Instant::now();
            for _ in 0..reps {
                project(&path, &spec, 79.0).unwrap();
            }
            t0.elapsed().as_secs_f64() / reps as f64
        };
        let t32 = time_for(32);
        let t64 = time_for(64);
        assert!(
            t64 <= 2.5 * t32.max(1e-6),
            "N=64 took {t64:.2e}s vs N=32 {t32:.2e}s"
        );
    }

    #[test]
    fn certificate_passes_under_theorem_hypotheses() {
        let spec = ChainSpec::uniform(3, 0.8, 0.23, 0.9, Dim::Planar).unwrap();
        let kappa_n = crate::curvature::kappa_max(0.9, 0.8, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let path = random_arc_spline(&mut rng, 0.9 * kappa_n, 8.0, 0.01);
        let extended = extend_prefix(&path, &spec, &JointConfig::zeros(3)).unwrap();
        let res = 0.23 / 20.0;
        let sv = sweep_root(&extended, 0.23, res).unwrap();
        let report = containment_certificate(&extended, &spec, &sv, 25).unwrap();
        assert!(report.pass(), "violations: {:?}", report.violations);
        assert_eq!(report.failing_points, 0);
        assert!(report.projection_failures.is_empty());
        assert!(report.checks > 0);
    }

    #[test]
    fn certificate_detects_oversized_sublinks() {
        // Violated hypothesis: δ_1 = δ_0 + 4·res sticks out of the tube.
        let res: f64 = 0.23 / 20.0;
        let delta0 = 0.23;
        let fat = delta0 + 4.0 * res;
        let spec = ChainSpec::new(
            vec![delta0, fat, delta0],
            vec![0.8, 0.8],
            0.9,
            Dim::Planar,
        );
        // The chain spec itself rejects sublinks fatter than the root, so
        // build the check around a root-radius sweep with a fatter probe:
        // certify a chain whose sublink radius legitimately equals δ_0
        // against a sweep of a *smaller* root ball, which realizes the same
        // geometry (ball radius exceeds tube radius by 4 cells).
        assert!(spec.is_err());
        let spec = ChainSpec::uniform(2, 0.8, delta0, 0.9, Dim::Planar).unwrap();
        let path = straight_path(6.0, 0.01);
        let sv = sweep_root(&path, delta0 - 4.0 * res, res).unwrap();
        let report = containment_certificate(&path, &spec, &sv, 9).unwrap();
        assert!(!report.pass());
        assert!(report.failing_points > 0);
        assert!(report.worst_violation > 0.0);
    }

    #[test]
    fn single_pose_query_on_straight_prefix_passes() {
        let spec = ChainSpec::uniform(3, 0.8, 0.2, 0.9, Dim::Planar).unwrap();
        let path = straight_path(6.0, 0.01);
        let sv = sweep_root(&path, 0.2, 0.01).unwrap();
        let report = containment_certificate(&path, &spec, &sv, 1).unwrap();
        assert!(report.pass());
        assert_eq!(report.queries, 1);
        assert_eq!(report.checks, 3);
    }
}
