//! Independent numeric cross-checks for the closed-form curvature results.
//!
//! Each oracle here re-derives a quantity from its geometric definition by
//! generic numeric search (bisection on monotone functions, golden-section
//! on unimodal ones, Runge-Kutta for flows) without using the closed forms
//! under test. The `check-appendix` CLI command and the verification suite
//! compare the closed forms against these.

use nalgebra::Matrix4;

const BISECT_ITERS: usize = 200;
const GOLDEN_ITERS: usize = 160;

/// Bisection root of a monotone decreasing `f` on `[lo, hi]` with
/// `f(lo) >= 0 >= f(hi)`.
fn bisect_decreasing(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section maximum of a unimodal `f` on `[lo, hi]`.
fn golden_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_ITERS {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    f(0.5 * (lo + hi))
}

/// Point on the reference circle of radius `r` (through the origin, tangent
/// +x at the origin, center (0, r)) at arc angle `phi`.
fn circle_point(r: f64, phi: f64) -> (f64, f64) {
    (r * phi.sin(), r * (1.0 - phi.cos()))
}

/// Half the arc angle subtended on a circle of radius `r` by a chord of
/// length `chord`, found by bisection of the monotone half-chord condition
/// `2 r sin(psi) = chord`. Searching in `psi` (rather than the radius or
/// the endpoint position) keeps the result well conditioned through the
/// diameter tangency `chord = 2r`.
fn half_arc_angle_for_chord(r: f64, chord: f64) -> f64 {
    bisect_decreasing(0.0, std::f64::consts::FRAC_PI_2, |psi| {
        chord - 2.0 * r * psi.sin()
    })
}

/// Minimal osculating radius by numeric search: the smallest circle on
/// which a chord spanning the whole `n`-link chain (length `n * l0`) still
/// subtends a half-angle within the joint limit. Bisects the half-chord
/// ratio `m = n l0 / (2 r)` on the condition `arcsin(m) = theta_bar`.
pub fn osculating_radius_search(theta_bar: f64, l0: f64, n: usize) -> f64 {
    let span = n as f64 * l0;
    let m = bisect_decreasing(0.0, 1.0, |m| theta_bar - m.asin());
    span / (2.0 * m)
}

/// Extreme chord endpoint by construction on the reference circle: the
/// point at chord distance `l0` from the origin on the minimal single-link
/// circle, located by intersecting that circle with the circle of radius
/// `l0` about the origin (in half-chord-ratio space, so the diameter case
/// stays exact).
pub fn extreme_point_on_circle(theta_bar: f64, l0: f64) -> (f64, f64) {
    let m = bisect_decreasing(0.0, 1.0, |m| theta_bar - m.asin());
    // Intersection of x^2 + (y - r)^2 = r^2 with x^2 + y^2 = l0^2 where
    // m = l0 / (2r): y = l0^2 / (2r) = l0 m, x = sqrt(l0^2 - y^2).
    let y = l0 * m;
    let x = l0 * ((1.0 - m) * (1.0 + m)).max(0.0).sqrt();
    (x, y)
}

/// Bend angle of a chord of length `l` on a circle of radius `r0`, measured
/// against the tangent at the chord's start, by locating the far endpoint
/// numerically: the endpoint at half arc angle `psi` sits at
/// `2 r sin(psi) (cos psi, sin psi)`, so the bend is `psi` itself.
pub fn chord_bend_angle(r0: f64, l: f64) -> f64 {
    let psi = half_arc_angle_for_chord(r0, l);
    let (x, y) = (psi.cos(), psi.sin());
    y.atan2(x)
}

/// Sagitta by sampling: maximum distance between the arc and its chord of
/// length `l` on a circle of radius `r0`, found by golden-section search
/// over the arc (the distance profile is unimodal).
pub fn chord_deviation_search(r0: f64, l: f64) -> f64 {
    let phi_end = 2.0 * half_arc_angle_for_chord(r0, l);
    let (cx, cy) = circle_point(r0, phi_end);
    let chord_len = (cx * cx + cy * cy).sqrt();
    golden_max(0.0, phi_end, |phi| {
        let (px, py) = circle_point(r0, phi);
        (cx * py - cy * px).abs() / chord_len
    })
}

/// RK4 integration of the planar unit-speed heading-rate system
/// `x' = cos(theta), y' = sin(theta), theta' = u` from `(x, y, theta)`.
pub fn dubins_rk4(start: (f64, f64, f64), u: f64, t: f64, steps: usize) -> (f64, f64, f64) {
    let h = t / steps as f64;
    let f = |state: (f64, f64, f64)| (state.2.cos(), state.2.sin(), u);
    let (mut x, mut y, mut th) = start;
    for _ in 0..steps {
        let k1 = f((x, y, th));
        let k2 = f((x + 0.5 * h * k1.0, y + 0.5 * h * k1.1, th + 0.5 * h * k1.2));
        let k3 = f((x + 0.5 * h * k2.0, y + 0.5 * h * k2.1, th + 0.5 * h * k2.2));
        let k4 = f((x + h * k3.0, y + h * k3.1, th + h * k3.2));
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        th += h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
    }
    (x, y, th)
}

/// RK4 integration of the matrix flow `q' = q a` from the identity.
pub fn rk4_matrix_flow(a: &Matrix4<f64>, t: f64, steps: usize) -> Matrix4<f64> {
    let h = t / steps as f64;
    let mut q = Matrix4::identity();
    for _ in 0..steps {
        let k1 = q * a;
        let k2 = (q + k1 * (h / 2.0)) * a;
        let k3 = (q + k2 * (h / 2.0)) * a;
        let k4 = (q + k3 * h) * a;
        q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    q
}
