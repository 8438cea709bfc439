//! Command-line front end: benchmark planning runs, scene generation,
//! projection queries, swept-volume dumps, and the curvature self-check.

use clap::{Parser, Subcommand, ValueEnum};
use irrplan::bench::{
    emit_csv, generate_scene, manifold_name, run_bench, BenchRow, Scene, SceneKind,
};
use irrplan::chain::{ChainSpec, Dim};
use irrplan::curvature;
use irrplan::oracles;
use irrplan::planner::Mode;
use irrplan::projection::{project, ProjectionError};
use irrplan::rootpath::RootPath;
use irrplan::world::{is_feasible, sweep_root};
use serde::Deserialize;
use std::error::Error;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "irrplan",
    about = "Curvature-constrained planning for serial chains in the irreducible root space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Full,
    Irreducible,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Maze2d,
    Rocks2d,
    Rocks3d,
    Wallhole3d,
}

impl From<KindArg> for SceneKind {
    fn from(kind: KindArg) -> SceneKind {
        match kind {
            KindArg::Maze2d => SceneKind::Maze2d,
            KindArg::Rocks2d => SceneKind::Rocks2d,
            KindArg::Rocks3d => SceneKind::Rocks3d,
            KindArg::Wallhole3d => SceneKind::Wallhole3d,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded planning trials on a scene and emit a CSV table.
    Plan {
        /// Scene JSON file.
        #[arg(long)]
        scene: PathBuf,
        /// Planning mode(s) to benchmark.
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        /// Trials per mode; trial i uses seed + i.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Per-trial wall-clock limit in seconds (defaults to the scene's).
        #[arg(long)]
        time_limit: Option<f64>,
        /// Base seed (defaults to the scene's).
        #[arg(long)]
        seed: Option<u64>,
        /// Write the CSV here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-validate every successful path against an occupancy sweep at
        /// this resolution (meters).
        #[arg(long)]
        grid_res: Option<f64>,
        /// Concurrent trials.
        #[arg(long, env = "IRRPLAN_JOBS", default_value_t = 1)]
        jobs: usize,
    },
    /// Generate a built-in benchmark scene.
    GenScene {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// 0 = easy, 1 = default, 2 = dense.
        #[arg(long, default_value_t = 1)]
        difficulty: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project a chain onto a root path at a query arc length.
    Project {
        /// Root path in the plain-text dump format.
        #[arg(long)]
        path: PathBuf,
        /// Chain JSON: {"n", "radii", "lengths", "theta_bar", "dim"}.
        #[arg(long)]
        chain: PathBuf,
        /// Arc length to project at (defaults to the path end).
        #[arg(long)]
        query: Option<f64>,
    },
    /// Sweep a root sphere along a path into an occupancy grid dump.
    Sweep {
        #[arg(long)]
        path: PathBuf,
        /// Sphere radius (meters).
        #[arg(long)]
        radius: f64,
        /// Grid resolution (meters).
        #[arg(long)]
        res: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the closed-form curvature formulas against numeric oracles.
    CheckAppendix,
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::Plan {
            scene,
            mode,
            trials,
            time_limit,
            seed,
            out,
            grid_res,
            jobs,
        } => cmd_plan(scene, mode, trials, time_limit, seed, out, grid_res, jobs),
        Command::GenScene {
            kind,
            seed,
            difficulty,
            out,
        } => {
            let scene = generate_scene(kind.into(), seed, difficulty)?;
            fs::write(&out, scene.to_json())?;
            println!("wrote {} ({})", out.display(), scene.name);
            Ok(())
        }
        Command::Project { path, chain, query } => cmd_project(path, chain, query),
        Command::Sweep {
            path,
            radius,
            res,
            out,
        } => {
            let text = fs::read_to_string(&path)?;
            let root = RootPath::parse_text(&text)?;
            let sv = sweep_root(&root, radius, res)?;
            fs::write(&out, sv.dump())?;
            println!(
                "wrote {} ({} occupied cells)",
                out.display(),
                sv.occupied_count()
            );
            Ok(())
        }
        Command::CheckAppendix => cmd_check_appendix(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_plan(
    scene_path: PathBuf,
    mode: ModeArg,
    trials: usize,
    time_limit: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    grid_res: Option<f64>,
    jobs: usize,
) -> Result<(), Box<dyn Error>> {
    let scene = Scene::parse(&fs::read_to_string(&scene_path)?)?;
    let time_limit = time_limit.unwrap_or(scene.planner.time_limit);
    let base_seed = seed.unwrap_or(scene.planner.seed);
    let modes: &[Mode] = match mode {
        ModeArg::Full => &[Mode::Full],
        ModeArg::Irreducible => &[Mode::Irreducible],
        ModeArg::Both => &[Mode::Full, Mode::Irreducible],
    };

    let mut rows = Vec::new();
    for &m in modes {
        let (stats, records) = run_bench(&scene, m, trials, time_limit, base_seed, jobs)?;
        if let Some(res) = grid_res {
            revalidate(&scene, &records, res)?;
        }
        rows.push(BenchRow {
            scene: scene.name.clone(),
            mode: m,
            manifold: manifold_name(scene.env.dim(), m, scene.chain.links()),
            stats,
        });
    }
    let csv = emit_csv(&rows);
    print!("{csv}");
    if let Some(out) = out {
        fs::write(&out, &csv)?;
    }
    Ok(())
}

/// Replays each successful trial's path against an occupancy sweep: the
/// grid the planner never saw must agree that the motion is feasible.
fn revalidate(
    scene: &Scene,
    records: &[irrplan::bench::TrialRecord],
    res: f64,
) -> Result<(), Box<dyn Error>> {
    for rec in records {
        let Some(path) = &rec.path else { continue };
        let fine = if path.root.step() <= res {
            path.root.clone()
        } else {
            path.root.resample(res)?
        };
        let sv = sweep_root(&fine, scene.chain.root_radius(), res)?;
        if !is_feasible(&sv, &scene.env) {
            return Err(format!(
                "trial {} (seed {}): swept path fails the occupancy re-check at res {res}",
                rec.index, rec.seed
            )
            .into());
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct ChainFileDoc {
    n: usize,
    radii: Vec<f64>,
    lengths: Vec<f64>,
    theta_bar: f64,
    #[serde(default)]
    dim: Option<u32>,
}

fn cmd_project(
    path: PathBuf,
    chain: PathBuf,
    query: Option<f64>,
) -> Result<(), Box<dyn Error>> {
    let root = RootPath::parse_text(&fs::read_to_string(&path)?)?;
    let doc: ChainFileDoc = serde_json::from_str(&fs::read_to_string(&chain)?)?;
    let dim = match doc.dim {
        Some(2) => Dim::Planar,
        Some(3) => Dim::Spatial,
        None => root.dim(),
        Some(other) => return Err(format!("chain dim must be 2 or 3, got {other}").into()),
    };
    if doc.lengths.len() != doc.n {
        return Err(format!(
            "chain.n = {} but chain.lengths has {} entries",
            doc.n,
            doc.lengths.len()
        )
        .into());
    }
    let spec = ChainSpec::new(doc.radii, doc.lengths, doc.theta_bar, dim)?;
    let s_query = query.unwrap_or_else(|| root.total_length());

    let kappa_n = curvature::kappa_max(spec.theta_bar(), spec.lengths()[0], spec.links())?;
    let profile = root.curvature_profile()?;
    println!("path curvature profile: {profile:.6}  (chain kappa_N: {kappa_n:.6})");

    match project(&root, &spec, s_query) {
        Ok(result) => {
            println!("projection at s = {s_query}:");
            for (i, (theta, gamma)) in result.q.theta.iter().zip(&result.q.gamma).enumerate() {
                println!("  joint {}: theta = {theta:+.7}  gamma = {gamma:+.7}", i + 1);
            }
            let spheres = result.sublink_spheres(&root, &spec)?;
            for (i, (center, radius)) in spheres.iter().enumerate() {
                println!(
                    "  sublink {}: center = ({:.4}, {:.4}, {:.4})  radius = {radius}",
                    i + 1,
                    center.x,
                    center.y,
                    center.z
                );
            }
            Ok(())
        }
        Err(ProjectionError::JointLimitExceeded { joint, result }) => Err(format!(
            "joint {joint} exceeds the limit (theta_bar = {}); angles: {:?}",
            spec.theta_bar(),
            result.q.theta
        )
        .into()),
        Err(e) => Err(e.into()),
    }
}

fn cmd_check_appendix() -> Result<(), Box<dyn Error>> {
    let mut failures = 0;
    let mut table = String::new();
    let mut report = |name: &str, max_err: f64, tol: f64| {
        let ok = max_err <= tol;
        if !ok {
            failures += 1;
        }
        writeln!(
            table,
            "  {name:<22} max error {max_err:9.3e}  tolerance {tol:.0e}  {}",
            if ok { "pass" } else { "FAIL" }
        )
        .expect("writing to a string");
    };

    let thetas: Vec<f64> = (1..=40).map(|i| i as f64 * std::f64::consts::FRAC_PI_2 / 40.0).collect();
    let lengths = [0.25, 0.5, 1.0, 2.0];
    let ns = [2usize, 3, 5, 9, 17];

    let mut err_kappa: f64 = 0.0;
    let mut err_radius: f64 = 0.0;
    let mut err_extreme: f64 = 0.0;
    let mut err_joint: f64 = 0.0;
    let mut err_dev: f64 = 0.0;
    for &theta in &thetas {
        for &l in &lengths {
            for &n in &ns {
                let kappa = curvature::kappa_max(theta, l, n)?;
                let r0 = curvature::osculating_radius(theta, l, n)?;
                err_kappa = err_kappa.max((kappa - 1.0 / oracles::osculating_radius_search(theta, l, n)).abs());
                err_radius = err_radius.max((r0 - oracles::osculating_radius_search(theta, l, n)).abs());
                let (mx, my) = curvature::extreme_point(l, theta)?;
                let (ox, oy) = oracles::extreme_point_on_circle(theta, l);
                err_extreme = err_extreme.max((mx - ox).abs().max((my - oy).abs()));
                err_joint = err_joint
                    .max((curvature::relative_joint_angle(r0, l)? - oracles::chord_bend_angle(r0, l)).abs());
                err_dev = err_dev
                    .max((curvature::chord_deviation(r0, l)? - oracles::chord_deviation_search(r0, l)).abs());
            }
        }
    }
    report("kappa_max", err_kappa, 1e-8);
    report("osculating_radius", err_radius, 1e-8);
    report("extreme_point", err_extreme, 1e-8);
    report("relative_joint_angle", err_joint, 1e-8);
    report("chord_deviation", err_dev, 1e-8);

    print!("appendix formula check:\n{table}");
    if failures > 0 {
        Err(format!("{failures} formula(s) out of tolerance").into())
    } else {
        println!("all formulas within tolerance");
        Ok(())
    }
}
