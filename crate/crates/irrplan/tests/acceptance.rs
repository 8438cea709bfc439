//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line (visible with `--nocapture`; the test name carries the
//! same verdict either way).
//!
//! The tests serialize on a global lock so the timed criteria are never
//! distorted by concurrent work on the same core.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use irrplan::bench::{generate_scene, run_bench, SceneKind};
use irrplan::chain::{ChainSpec, Dim, JointConfig};
use irrplan::curvature;
use irrplan::geometry::{rot_z, Pose2, Pose3};
use irrplan::oracles;
use irrplan::planner::Mode;
use irrplan::projection::{containment_certificate, project, ProjectionError};
use irrplan::rootpath::{extend_prefix, PathSample, RootPath};
use irrplan::steering::{
    airplane_step, dubins_step, rollout, sample_control, Control, ControlBounds,
};
use irrplan::world::{
    infeasibility_transfer_check, is_proper_subset, is_subset, sweep_spheres_in_frame, Aabb,
    Environment, GridFrame, Obstacle,
};
use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gate() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} — {detail}");
    assert!(pass, "criterion {criterion} FAILED — {detail}");
}

// ---------------------------------------------------------------------------
// Shared path constructions (public API only)
// ---------------------------------------------------------------------------

/// Planar circle through the origin with initial heading +x.
fn circle_path(radius: f64, arc_len: f64, step: f64) -> RootPath {
    let n = (arc_len / step).ceil() as usize;
    let samples = (0..=n)
        .map(|k| {
            let s = (k as f64 * step).min(arc_len);
            let a = s / radius;
            PathSample {
                s,
                position: Vector3::new(radius * a.sin(), radius * (1.0 - a.cos()), 0.0),
                rotation: rot_z(a),
            }
        })
        .collect();
    RootPath::new(samples, step, Dim::Planar).unwrap()
}

/// Planar C¹ arc-spline: constant-curvature segments drawn within the cap.
fn random_arc_spline(rng: &mut ChaCha8Rng, kappa_cap: f64, len: f64, step: f64) -> RootPath {
    let mut samples = Vec::new();
    let (mut x, mut y, mut h) = (0.0f64, 0.0f64, 0.0f64);
    let mut s = 0.0;
    let mut seg_left = 0.0;
    let mut kappa = 0.0;
    let n = (len / step).ceil() as usize;
    for _ in 0..=n {
        samples.push(PathSample {
            s,
            position: Vector3::new(x, y, 0.0),
            rotation: rot_z(h),
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

// ---------------------------------------------------------------------------
// 1. Appendix formula suite vs independent numeric oracles
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_appendix_formulas_match_oracles() {
    let _g = gate();
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut points = 0usize;
    for i in 0..50 {
        let theta_bar = (i as f64 + 1.0) / 50.0 * FRAC_PI_2;
        for l0 in [0.25, 0.5, 1.0, 2.0] {
            for n in [2usize, 3, 5, 9, 17] {
                points += 1;
                let r0_oracle = oracles::osculating_radius_search(theta_bar, l0, n);
                let r0 = curvature::osculating_radius(theta_bar, l0, n).unwrap();
                worst = worst.max((r0 - r0_oracle).abs());
                let kappa = curvature::kappa_max(theta_bar, l0, n).unwrap();
                worst = worst.max((kappa - 1.0 / r0_oracle).abs());
                let (ex, ey) = curvature::extreme_point(l0, theta_bar).unwrap();
                let (ox, oy) = oracles::extreme_point_on_circle(theta_bar, l0);
                worst = worst.max((ex - ox).abs().max((ey - oy).abs()));
                let phi = curvature::relative_joint_angle(r0, l0).unwrap();
                worst = worst.max((phi - oracles::chord_bend_angle(r0, l0)).abs());
                let d = curvature::chord_deviation(r0, l0).unwrap();
                worst = worst.max((d - oracles::chord_deviation_search(r0, l0)).abs());
            }
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        "1 (appendix formulas)",
        points == 1000 && worst <= 1e-8 && elapsed < 5.0,
        &format!("{points} grid points, worst |err| {worst:.2e}, {elapsed:.2}s"),
    );
}

// ---------------------------------------------------------------------------
// 2. Joint-angle lemma properties on a dense grid
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_joint_angle_lemma_properties() {
    let _g = gate();
    let mut violations = 0usize;
    let mut checks = 0usize;
    let grid: Vec<f64> = (1..=1570)
        .map(|k| k as f64 * 1e-3)
        .chain(std::iter::once(FRAC_PI_2))
        .collect();
    for &theta_bar in &grid {
        let mut prev = f64::INFINITY;
        for n in 2usize..=50 {
            let angle = curvature::joint_angle_for_links(theta_bar, n).unwrap();
            checks += 1;
            // Monotone decreasing in N.
            if angle > prev + 1e-15 {
                violations += 1;
            }
            // Adjacent joints bend equally on the minimal circle, so the
            // pair sum is twice the single angle.
            if 2.0 * angle > theta_bar + 1e-12 {
                violations += 1;
            }
            if !curvature::joint_sum_within_limit(theta_bar, n).unwrap() {
                violations += 1;
            }
            if n == 2 && angle > theta_bar / 2.0 + 1e-12 {
                violations += 1;
            }
            prev = angle;
        }
    }
    report(
        "2 (joint-angle lemma)",
        violations == 0,
        &format!("{checks} (theta_bar, N) points, {violations} violations"),
    );
}

// ---------------------------------------------------------------------------
// 3. Projection success guarantee under the curvature bound
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_projection_success_guarantee() {
    let _g = gate();
    let t0 = Instant::now();
    let delta0 = 0.23;
    // Four equal-length chains with delta_i = delta_0; each must satisfy
    // the theorem hypothesis d_kappa_N <= delta_0.
    let specs: Vec<(usize, f64, f64)> = vec![
        (3, 0.8, FRAC_PI_2),
        (4, 0.8, 0.9),
        (2, 0.6, 1.1),
        (5, 0.7, 1.3),
    ];
    let mut paths = 0usize;
    let mut failures = 0usize;
    let mut worst_cells = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (n, l0, theta_bar) in specs {
        let spec = ChainSpec::uniform(n, l0, delta0, theta_bar, Dim::Planar).unwrap();
        let kappa_n = curvature::kappa_max(theta_bar, l0, n).unwrap();
        let r0 = curvature::osculating_radius(theta_bar, l0, n).unwrap();
        assert!(
            curvature::chord_deviation(r0, l0).unwrap() <= delta0,
            "hypothesis d_kappa_N <= delta_0 must hold for the chosen chain"
        );
        for _ in 0..50 {
            paths += 1;
            let path = random_arc_spline(&mut rng, 0.99 * kappa_n, 6.0, 0.01);
            let extended = extend_prefix(&path, &spec, &JointConfig::zeros(n)).unwrap();
            match project(&extended, &spec, extended.total_length()) {
                Ok(_) => {}
                Err(ProjectionError::JointLimitExceeded { .. }) => failures += 1,
                Err(other) => panic!("unexpected projection error: {other}"),
            }
            let res = delta0 / 20.0;
            let sv = irrplan::world::sweep_root(&extended, delta0, res).unwrap();
            let cert = containment_certificate(&extended, &spec, &sv, 20).unwrap();
            if !cert.pass() {
                failures += 1;
            }
            worst_cells = worst_cells.max(cert.failing_points);
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        "3 (projection guarantee)",
        paths == 200 && failures == 0 && worst_cells == 0 && elapsed < 120.0,
        &format!(
            "{paths} bounded-curvature paths, {failures} failures, worst violation {worst_cells} cells, {elapsed:.1}s"
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Projection failure mode on over-tight arcs
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_projection_fails_below_minimal_radius() {
    let _g = gate();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut tripped = 0usize;
    let cases = 50usize;
    for _ in 0..cases {
        // theta_bar stays below 0.45 so the link chord always fits on the
        // shrunken circle (2R > l0 needs ratio > sin(theta_bar)).
        let theta_bar = rng.random_range(0.1..0.45);
        let l0 = rng.random_range(0.3..1.2);
        let spec = ChainSpec::uniform(1, l0, 0.1 * l0, theta_bar, Dim::Planar).unwrap();
        let r0 = curvature::osculating_radius(theta_bar, l0, 1).unwrap();
        let radius = rng.random_range(0.5..0.95) * r0;
        let path = circle_path(radius, l0 + 2.0, 0.005);
        match project(&path, &spec, path.total_length() - 0.5) {
            Err(ProjectionError::JointLimitExceeded { .. }) => tripped += 1,
            other => panic!("expected a joint-limit failure, got {other:?}"),
        }
    }
    report(
        "4 (projection failure mode)",
        tripped == cases,
        &format!("{tripped}/{cases} over-tight arcs raised the joint-limit error"),
    );
}

// ---------------------------------------------------------------------------
// 5. Two-dof reducibility example
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_two_dof_reducibility_example() {
    let _g = gate();
    // A 2-link robot sliding along +y with one revolute joint in
    // [-pi/2, pi/2]: tau_1 keeps the joint at zero, tau_2 swings it by a
    // windowed sine. The straight sweep nests inside the swinging sweep.
    let (link, radius) = (0.6, 0.2);
    let (len, step, res) = (3.0, 0.005, 0.01);
    let heading = FRAC_PI_2;
    let n = (len / step).ceil() as usize;
    let samples: Vec<PathSample> = (0..=n)
        .map(|k| {
            let s = (k as f64 * step).min(len);
            PathSample {
                s,
                position: Vector3::new(0.0, s, 0.0),
                rotation: rot_z(heading),
            }
        })
        .collect();
    let path = RootPath::new(samples, step, Dim::Planar).unwrap();

    let window = 0.9;
    let phi = |s: f64| -> f64 {
        if s < window || s > len - window {
            0.0
        } else {
            1.2 * (2.0 * PI * (s - window) / (len - 2.0 * window)).sin()
        }
    };
    let layout = |angle: f64| {
        vec![
            (Vector3::zeros(), radius),
            (
                Vector3::new(-link * angle.sin(), -link * angle.cos(), 0.0),
                radius,
            ),
        ]
    };
    let frame = GridFrame::fit(
        &Aabb::new(
            Vector3::new(-1.2, -1.2, 0.0),
            Vector3::new(1.2, len + 1.2, 0.0),
        ),
        res,
        Dim::Planar,
    )
    .unwrap();
    let sv1 = sweep_spheres_in_frame(frame.clone(), &path, |_| layout(0.0)).unwrap();
    let sv2 = sweep_spheres_in_frame(frame, &path, |s| layout(phi(s))).unwrap();

    let nested = is_subset(&sv1, &sv2).unwrap() && is_proper_subset(&sv1, &sv2).unwrap();

    let bounds = Aabb::new(
        Vector3::new(-5.0, -5.0, 0.0),
        Vector3::new(5.0, len + 5.0, 0.0),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut passed = 0usize;
    for _ in 0..20 {
        let center = Vector3::new(
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.0..len + 1.0),
            0.0,
        );
        let obstacle = Obstacle::Ball {
            center,
            radius: rng.random_range(0.05..0.3),
        };
        let env = Environment::new(Dim::Planar, bounds.clone(), vec![obstacle]).unwrap();
        if infeasibility_transfer_check(&sv1, &sv2, &env)
            .unwrap()
            .pass()
        {
            passed += 1;
        }
    }
    report(
        "5 (two-dof reducibility)",
        nested && passed == 20,
        &format!("SV(tau_1) ⊂ SV(tau_2): {nested}, transfer check {passed}/20 placements"),
    );
}

// ---------------------------------------------------------------------------
// 6. Feasibility-transfer implications on randomized pairs
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_feasibility_transfer_randomized() {
    let _g = gate();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut violations = 0usize;
    let pairs = 100usize;
    for _ in 0..pairs {
        let step = 0.01;
        let path = random_arc_spline(&mut rng, 0.8, rng.random_range(2.0..5.0), step);
        let r_big = rng.random_range(0.15..0.35);
        let r_small = r_big * rng.random_range(0.5..1.0);
        // The small sweep runs a prefix of the same path with a smaller
        // radius, rasterized in the big sweep's frame: a subset by
        // construction.
        let keep = ((path.len() as f64) * rng.random_range(0.3..0.9)) as usize;
        let prefix =
            RootPath::new(path.samples()[..keep.max(2)].to_vec(), step, Dim::Planar).unwrap();
        let pad = r_big + 0.1;
        let frame = {
            let mut min = Vector3::repeat(f64::INFINITY);
            let mut max = Vector3::repeat(f64::NEG_INFINITY);
            for smp in path.samples() {
                min = min.inf(&smp.position);
                max = max.sup(&smp.position);
            }
            min.z = 0.0;
            max.z = 0.0;
            GridFrame::fit(
                &Aabb::new(min - Vector3::new(pad, pad, 0.0), max + Vector3::new(pad, pad, 0.0)),
                0.02,
                Dim::Planar,
            )
            .unwrap()
        };
        let big =
            sweep_spheres_in_frame(frame.clone(), &path, |_| vec![(Vector3::zeros(), r_big)])
                .unwrap();
        let small =
            sweep_spheres_in_frame(frame, &prefix, |_| vec![(Vector3::zeros(), r_small)]).unwrap();
        assert!(is_subset(&small, &big).unwrap());

        let bounds = Aabb::new(
            Vector3::new(-20.0, -20.0, 0.0),
            Vector3::new(20.0, 20.0, 0.0),
        );
        let mut obstacles = Vec::new();
        for _ in 0..rng.random_range(1..=4) {
            let c = Vector3::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), 0.0);
            if rng.random_bool(0.5) {
                obstacles.push(Obstacle::Ball {
                    center: c,
                    radius: rng.random_range(0.05..0.5),
                });
            } else {
                let half = Vector3::new(
                    rng.random_range(0.05..0.4),
                    rng.random_range(0.05..0.4),
                    0.0,
                );
                obstacles.push(Obstacle::Box {
                    min: c - half,
                    max: c + half,
                });
            }
        }
        let env = Environment::new(Dim::Planar, bounds, obstacles).unwrap();
        let rep = infeasibility_transfer_check(&small, &big, &env).unwrap();
        if !rep.pass() {
            violations += 1;
        }
    }
    report(
        "6 (feasibility transfer)",
        violations == 0,
        &format!("{pairs} randomized subset pairs, {violations} violations"),
    );
}

// ---------------------------------------------------------------------------
// 7. Desk-scale speedup: maze2d (N=3) and rocks2d (N=6)
// ---------------------------------------------------------------------------

fn median_times(records: &[irrplan::bench::TrialRecord], limit: f64) -> f64 {
    let mut times: Vec<f64> = records
        .iter()
        .map(|r| match &r.outcome {
            Ok(t) if t.success => t.seconds.min(limit),
            _ => limit,
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    if n % 2 == 0 {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    } else {
        times[n / 2]
    }
}

#[test]
fn criterion_07_speedup_at_desk_scale() {
    let _g = gate();
    let trials = 20;
    let limit = 120.0;
    let mut all_pass = true;
    let mut details = Vec::new();
    for (kind, seed, difficulty) in [(SceneKind::Maze2d, 1, 2), (SceneKind::Rocks2d, 1, 2)] {
        let scene = generate_scene(kind, seed, difficulty).unwrap();
        let (irr_stats, irr_recs) =
            run_bench(&scene, Mode::Irreducible, trials, limit, 1000, 1).unwrap();
        let (full_stats, full_recs) =
            run_bench(&scene, Mode::Full, trials, limit, 1000, 1).unwrap();
        let irr_median = median_times(&irr_recs, limit);
        let full_median = median_times(&full_recs, limit);
        let ok = irr_median <= full_median / 3.0 && irr_stats.success_rate >= full_stats.success_rate;
        all_pass &= ok;
        details.push(format!(
            "{}: median {:.2}s vs {:.2}s, success {:.0}% vs {:.0}%",
            scene.name, irr_median, full_median, irr_stats.success_rate, full_stats.success_rate
        ));
    }
    report("7 (desk-scale speedup)", all_pass, &details.join("; "));
}

// ---------------------------------------------------------------------------
// 8. 3D smoke: rocks3d success-rate split
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_rocks3d_success_split() {
    let _g = gate();
    let scene = generate_scene(SceneKind::Rocks3d, 1, 1).unwrap();
    let trials = 10;
    let limit = 300.0;
    let (irr_stats, _) = run_bench(&scene, Mode::Irreducible, trials, limit, 1000, 1).unwrap();
    let (full_stats, _) = run_bench(&scene, Mode::Full, trials, limit, 1000, 1).unwrap();
    let pass = irr_stats.success_rate >= 80.0 && full_stats.success_rate <= 50.0;
    report(
        "8 (3d smoke)",
        pass,
        &format!(
            "{}: irreducible {:.0}% vs full {:.0}% at {limit}s",
            scene.name, irr_stats.success_rate, full_stats.success_rate
        ),
    );
}

// ---------------------------------------------------------------------------
// 9. CLI determinism: byte-identical CSV across runs
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_cli_determinism() {
    let _g = gate();
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_irrplan");

    // A scene whose trials finish far below the 0.01 s rounding quantum
    // (start inside the goal ball), so even wall-clock columns are stable.
    let trivial = generate_scene(SceneKind::Rocks2d, 3, 0).unwrap();
    let mut file: serde_json::Value = serde_json::from_str(&trivial.to_json()).unwrap();
    file["goal"]["pose"] = file["start"]["pose"].clone();
    let trivial_path = dir.path().join("trivial.json");
    std::fs::write(&trivial_path, serde_json::to_string(&file).unwrap()).unwrap();

    let run = |scene: &std::path::Path, mode: &str, trials: &str| -> String {
        let out = std::process::Command::new(bin)
            .args([
                "plan",
                "--scene",
                scene.to_str().unwrap(),
                "--mode",
                mode,
                "--trials",
                trials,
                "--seed",
                "42",
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "CLI run failed: {:?}", out);
        String::from_utf8(out.stdout).unwrap()
    };

    let a = run(&trivial_path, "both", "5");
    let b = run(&trivial_path, "both", "5");
    let byte_identical = a == b;

    // A nontrivial planning run: every column except the wall-clock ones
    // must agree between runs.
    let nontrivial = generate_scene(SceneKind::Rocks2d, 3, 0).unwrap();
    let nontrivial_path = dir.path().join("scene.json");
    std::fs::write(&nontrivial_path, nontrivial.to_json()).unwrap();
    let c = run(&nontrivial_path, "irreducible", "3");
    let d = run(&nontrivial_path, "irreducible", "3");
    let stable_columns = |csv: &str| -> Vec<Vec<String>> {
        csv.lines()
            .map(|line| {
                line.split(',')
                    .enumerate()
                    .filter(|(i, _)| *i != 4 && *i != 5) // mean_s, std_s
                    .map(|(_, f)| f.to_string())
                    .collect()
            })
            .collect()
    };
    let non_time_equal = stable_columns(&c) == stable_columns(&d);

    report(
        "9 (CLI determinism)",
        byte_identical && non_time_equal,
        &format!("byte-identical: {byte_identical}, non-time columns equal: {non_time_equal}"),
    );
}

// ---------------------------------------------------------------------------
// 10. Steering closed forms vs numeric integration; rollout curvature
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_steering_correctness() {
    let _g = gate();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst: f64 = 0.0;

    // Planar closed form vs 4th-order Runge-Kutta.
    for _ in 0..100 {
        let u = rng.random_range(-0.9..0.9);
        let t = rng.random_range(0.1..3.0);
        let start = Pose2::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-PI..PI),
        )
        .unwrap();
        let got = dubins_step(&start, u, t).unwrap();
        let (x, y, h) = oracles::dubins_rk4((start.x, start.y, start.heading), u, t, 4000);
        worst = worst
            .max((got.x - x).abs())
            .max((got.y - y).abs())
            .max(((got.heading - h + PI).rem_euclid(2.0 * PI) - PI).abs());
    }

    // Spatial closed form vs the numeric matrix flow of the generator.
    for _ in 0..100 {
        let (u4, u5, u6) = (
            rng.random_range(-0.7..0.7),
            rng.random_range(-0.7..0.7),
            rng.random_range(-1.0..1.0),
        );
        let t = rng.random_range(0.1..2.5);
        let got = airplane_step(&Pose3::identity(), u4, u5, u6, t).unwrap();
        let twist = irrplan::geometry::Twist::unit_forward(u4, u5, u6).unwrap();
        let flow = oracles::rk4_matrix_flow(&twist.generator(), t, 4000);
        for r in 0..3 {
            worst = worst.max((got.translation[r] - flow[(r, 3)]).abs());
            for c in 0..3 {
                worst = worst.max((got.rotation[(r, c)] - flow[(r, c)]).abs());
            }
        }
    }
    let forms_ok = worst <= 1e-8;

    // Rollout curvature stays within the sampled-control bound.
    let kappa = 1.0;
    let bounds = ControlBounds::new(kappa).unwrap();
    let cap = kappa.atan();
    let mut curvature_ok = true;
    let mut sequences = 0usize;
    for i in 0..1000 {
        let dim = if i % 2 == 0 { Dim::Planar } else { Dim::Spatial };
        let controls: Vec<Control> = (0..rng.random_range(1..=4))
            .map(|_| sample_control(&bounds, dim, &mut rng))
            .collect();
        let start = Pose3::identity();
        let path = rollout(&start, &controls, 0.01).unwrap();
        let profile = path.curvature_profile().unwrap();
        if profile > cap + 1e-3 {
            curvature_ok = false;
        }
        sequences += 1;
    }

    report(
        "10 (steering correctness)",
        forms_ok && curvature_ok && sequences == 1000,
        &format!(
            "closed forms worst |err| {worst:.2e}; curvature bound held on {sequences} rollouts: {curvature_ok}"
        ),
    );
}
