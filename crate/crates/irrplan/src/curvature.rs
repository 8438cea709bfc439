//! Closed-form curvature budgets for an N-link chain trailing a
//! curvature-bounded root path.
//!
//! For a chain of N equal sublinks of length `l0` whose joints may bend at
//! most `theta_bar` each, there is a tightest circle the root may drive on
//! while the backward chord projection still succeeds. These formulas give
//! that circle (radius `r0`, curvature `kappa`), the extreme reachable chord
//! endpoint, the per-joint bend induced by a chord on a given circle, and
//! the sagitta (chord-to-arc deviation) used to size collision margins.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("theta_bar must lie in (0, pi/2], got {0}")]
    ThetaBarRange(f64),
    #[error("link length must be positive and finite, got {0}")]
    LinkLength(f64),
    #[error("link count must be at least 1")]
    LinkCount,
    #[error("radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("chord length {chord} exceeds circle diameter {diameter}")]
    ChordExceedsDiameter { chord: f64, diameter: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

fn check_theta_bar(theta_bar: f64) -> Result<(), CurvatureError> {
    if !theta_bar.is_finite() || theta_bar <= 0.0 || theta_bar > std::f64::consts::FRAC_PI_2 {
        return Err(CurvatureError::ThetaBarRange(theta_bar));
    }
    Ok(())
}

fn check_length(l: f64) -> Result<(), CurvatureError> {
    if !l.is_finite() || l <= 0.0 {
        return Err(CurvatureError::LinkLength(l));
    }
    Ok(())
}

/// Maximum root-path curvature under which an `n`-link chain of equal link
/// length `l0` with joint limit `theta_bar` can still be projected:
/// `2 sin(theta_bar) / (n l0)`.
pub fn kappa_max(theta_bar: f64, l0: f64, n: usize) -> Result<f64, CurvatureError> {
    check_theta_bar(theta_bar)?;
    check_length(l0)?;
    if n == 0 {
        return Err(CurvatureError::LinkCount);
    }
    Ok(2.0 * theta_bar.sin() / (n as f64 * l0))
}

/// Radius of the minimal osculating circle, the reciprocal of [`kappa_max`]:
/// `n l0 / (2 sin(theta_bar))`.
pub fn osculating_radius(theta_bar: f64, l0: f64, n: usize) -> Result<f64, CurvatureError> {
    Ok(1.0 / kappa_max(theta_bar, l0, n)?)
}

/// Extreme chord endpoint reachable under the joint limit: starting at the
/// origin with tangent along +x, the first joint placed at maximum bend
/// lands at `(l0 cos(theta_bar), l0 sin(theta_bar))`.
pub fn extreme_point(l0: f64, theta_bar: f64) -> Result<(f64, f64), CurvatureError> {
    check_theta_bar(theta_bar)?;
    check_length(l0)?;
    Ok((l0 * theta_bar.cos(), l0 * theta_bar.sin()))
}

/// Bend angle induced at a joint by a chord of length `l` inscribed in a
/// circle of radius `r0`: `arctan(l / sqrt(4 r0^2 - l^2))`, equivalently
/// `arcsin(l / (2 r0))`.
pub fn relative_joint_angle(r0: f64, l: f64) -> Result<f64, CurvatureError> {
    if !r0.is_finite() || r0 <= 0.0 {
        return Err(CurvatureError::Radius(r0));
    }
    check_length(l)?;
    if l > 2.0 * r0 {
        return Err(CurvatureError::ChordExceedsDiameter {
            chord: l,
            diameter: 2.0 * r0,
        });
    }
    let disc = 4.0 * r0 * r0 - l * l;
    Ok(l.atan2(disc.max(0.0).sqrt()))
}

/// Sagitta: the maximum deviation between a chord of length `l0` and its arc
/// on a circle of radius `r0`: `r0 - sqrt(r0^2 - l0^2/4)`.
pub fn chord_deviation(r0: f64, l0: f64) -> Result<f64, CurvatureError> {
    if !r0.is_finite() || r0 <= 0.0 {
        return Err(CurvatureError::Radius(r0));
    }
    check_length(l0)?;
    if l0 > 2.0 * r0 {
        return Err(CurvatureError::ChordExceedsDiameter {
            chord: l0,
            diameter: 2.0 * r0,
        });
    }
    let disc = r0 * r0 - l0 * l0 / 4.0;
    Ok(r0 - disc.max(0.0).sqrt())
}

/// Per-joint bend on the minimal osculating circle for an `n`-link chain,
/// expressed directly in `n`: `arctan(sin(theta_bar) / sqrt(n^2 - sin^2))`.
///
/// Identical to `relative_joint_angle(osculating_radius(theta_bar, l0, n),
/// l0)` for any `l0`; the link length cancels.
pub fn joint_angle_for_links(theta_bar: f64, n: usize) -> Result<f64, CurvatureError> {
    check_theta_bar(theta_bar)?;
    if n == 0 {
        return Err(CurvatureError::LinkCount);
    }
    let s = theta_bar.sin();
    let nn = n as f64;
    Ok(s.atan2((nn * nn - s * s).sqrt()))
}

/// Whether two consecutive joints on the minimal osculating circle stay
/// within the shared limit: `2 * joint_angle_for_links(theta_bar, n) <=
/// theta_bar`. Holds for every `n >= 2`; fails for `n = 1`.
pub fn joint_sum_within_limit(theta_bar: f64, n: usize) -> Result<bool, CurvatureError> {
    Ok(2.0 * joint_angle_for_links(theta_bar, n)? <= theta_bar)
}

/// Precomputed curvature budget for one chain geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBudget {
    pub theta_bar: f64,
    pub link_length: f64,
    pub links: usize,
    /// Maximum admissible root-path curvature.
    pub kappa: f64,
    /// Minimal osculating radius, `1/kappa`.
    pub radius: f64,
    /// Sagitta of one link chord on the minimal circle.
    pub deviation: f64,
}

impl CurvatureBudget {
    pub fn new(theta_bar: f64, link_length: f64, links: usize) -> Result<Self, CurvatureError> {
        let kappa = kappa_max(theta_bar, link_length, links)?;
        let radius = 1.0 / kappa;
        let deviation = chord_deviation(radius, link_length)?;
        Ok(Self {
            theta_bar,
            link_length,
            links,
            kappa,
            radius,
            deviation,
        })
    }

    /// Per-joint bend at the budget's minimal circle.
    pub fn joint_angle(&self) -> f64 {
        joint_angle_for_links(self.theta_bar, self.links).expect("validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn kappa_max_frozen_values() {
        assert_abs_diff_eq!(kappa_max(FRAC_PI_2, 1.0, 1).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kappa_max(FRAC_PI_6, 1.0, 2).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            kappa_max(FRAC_PI_4, 0.5, 4).unwrap(),
            0.7071068,
            epsilon = 1e-7
        );
    }

    #[test]
    fn osculating_radius_frozen_values() {
        assert_abs_diff_eq!(osculating_radius(FRAC_PI_6, 1.0, 2).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(osculating_radius(FRAC_PI_2, 1.0, 1).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(osculating_radius(FRAC_PI_2, 2.0, 3).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn extreme_point_frozen_values() {
        let (x, y) = extreme_point(2.0, FRAC_PI_6).unwrap();
        assert_abs_diff_eq!(x, 1.7320508, epsilon = 1e-7);
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn relative_joint_angle_frozen_values() {
        assert_abs_diff_eq!(
            relative_joint_angle(1.0, 1.0).unwrap(),
            0.5235988,
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            relative_joint_angle(5.0, 1.0).unwrap(),
            0.1001674,
            epsilon = 1e-7
        );
        // arcsin form agrees.
        assert_abs_diff_eq!(
            relative_joint_angle(5.0, 1.0).unwrap(),
            (1.0f64 / 10.0).asin(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn chord_deviation_frozen_values() {
        assert_abs_diff_eq!(chord_deviation(2.0, 1.0).unwrap(), 0.0635083, epsilon = 1e-7);
        // Semicircle chord: the sagitta equals the radius.
        assert_abs_diff_eq!(chord_deviation(0.5, 1.0).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn domain_violations_are_distinct_errors() {
        assert!(matches!(
            kappa_max(0.0, 1.0, 1),
            Err(CurvatureError::ThetaBarRange(_))
        ));
        assert!(matches!(
            kappa_max(FRAC_PI_2 + 0.1, 1.0, 1),
            Err(CurvatureError::ThetaBarRange(_))
        ));
        assert!(matches!(
            kappa_max(FRAC_PI_2, -1.0, 1),
            Err(CurvatureError::LinkLength(_))
        ));
        assert!(matches!(kappa_max(FRAC_PI_2, 1.0, 0), Err(CurvatureError::LinkCount)));
        assert!(matches!(
            relative_joint_angle(1.0, 3.0),
            Err(CurvatureError::ChordExceedsDiameter { .. })
        ));
        assert!(matches!(
            chord_deviation(0.4, 1.0),
            Err(CurvatureError::ChordExceedsDiameter { .. })
        ));
    }

    #[test]
    fn joint_angle_matches_chord_form() {
        for &(tb, n) in &[(0.3, 2usize), (FRAC_PI_2, 5), (1.1, 17)] {
            for &l0 in &[0.25, 1.0, 3.0] {
                let r0 = osculating_radius(tb, l0, n).unwrap();
                assert_abs_diff_eq!(
                    joint_angle_for_links(tb, n).unwrap(),
                    relative_joint_angle(r0, l0).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn budget_is_internally_consistent() {
        let b = CurvatureBudget::new(FRAC_PI_6, 1.0, 2).unwrap();
        assert_abs_diff_eq!(b.kappa * b.radius, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.deviation, chord_deviation(2.0, 1.0).unwrap(), epsilon = 1e-12);
        assert!(b.deviation < b.link_length);
        assert_abs_diff_eq!(b.joint_angle(), joint_angle_for_links(FRAC_PI_6, 2).unwrap());
    }

    #[test]
    fn closed_forms_match_numeric_oracles_on_a_grid() {
        // Smaller sibling of the acceptance-suite sweep: every closed form
        // against its independently derived numeric counterpart.
        let mut checked = 0;
        for i in 0..12 {
            let tb = (0.05 + (FRAC_PI_2 - 0.05) * i as f64 / 11.0).min(FRAC_PI_2);
            for &l0 in &[0.3, 1.0, 2.2] {
                for &n in &[1usize, 2, 3, 7] {
                    let r = osculating_radius(tb, l0, n).unwrap();
                    assert_abs_diff_eq!(r, oracles::osculating_radius_search(tb, l0, n), epsilon = 1e-9);
                    assert_abs_diff_eq!(
                        kappa_max(tb, l0, n).unwrap(),
                        1.0 / oracles::osculating_radius_search(tb, l0, n),
                        epsilon = 1e-9
                    );
                    let (ex, ey) = extreme_point(l0, tb).unwrap();
                    let (ox, oy) = oracles::extreme_point_on_circle(tb, l0);
                    assert_abs_diff_eq!(ex, ox, epsilon = 1e-9);
                    assert_abs_diff_eq!(ey, oy, epsilon = 1e-9);
                    if l0 <= 2.0 * r {
                        assert_abs_diff_eq!(
                            relative_joint_angle(r, l0).unwrap(),
                            oracles::chord_bend_angle(r, l0),
                            epsilon = 1e-9
                        );
                        assert_abs_diff_eq!(
                            chord_deviation(r, l0).unwrap(),
                            oracles::chord_deviation_search(r, l0),
                            epsilon = 1e-9
                        );
                    }
                    checked += 1;
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn joint_sum_limit_splits_at_two_links() {
        assert!(!joint_sum_within_limit(1.0, 1).unwrap());
        for n in 2..=20 {
            assert!(joint_sum_within_limit(1.0, n).unwrap());
            assert!(joint_sum_within_limit(FRAC_PI_2, n).unwrap());
        }
    }
}
