//! Scene files, built-in scene generators, the seeded multi-trial runner,
//! and Table-style CSV emission.
//!
//! Scenes are versioned JSON documents carrying the environment, the chain,
//! the start/goal, and planner defaults. Generators produce deterministic
//! benchmark families per seed: a corridor maze, planar and spatial rock
//! fields, and a wall-with-hole passage. The runner repeats seeded trials
//! (seed of trial `i` = base seed + `i`), optionally in parallel, and
//! aggregates population statistics with timeouts counted at the time
//! limit.

use crate::chain::{ChainError, ChainSpec, Dim, JointConfig};
use crate::geometry::{rot_z, GeometryError, Pose3};
use crate::planner::{plan, Mode, PlannedPath, PlannerConfig, PlannerError, TrialResult};
use crate::rootpath::PathError;
use crate::world::{Aabb, Environment, Obstacle, WorldError};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("scene schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("scene field {field}: {message}")]
    Semantic { field: String, message: String },
    #[error("unsupported schema version {0} (expected 1)")]
    SchemaVersion(u32),
    #[error("unknown scene kind {0:?}")]
    UnknownKind(String),
    #[error("{kind}: unsatisfiable clearance after bounded retries")]
    UnsatisfiableClearance { kind: String },
    #[error("benchmark needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// A fully validated benchmark scene.
#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    pub env: Environment,
    pub chain: ChainSpec,
    pub start_pose: Pose3,
    pub start_joints: JointConfig,
    pub goal: Pose3,
    pub planner: PlannerConfig,
}

// ---------------------------------------------------------------------------
// JSON schema (version 1)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct SceneFile {
    schema: u32,
    name: String,
    dim: u32,
    bounds: BoundsFile,
    obstacles: Vec<ObstacleFile>,
    chain: ChainFile,
    start: StartFile,
    goal: GoalFile,
    planner: PlannerConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoundsFile {
    min: Vec<f64>,
    max: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ObstacleFile {
    Disk { center: [f64; 2], radius: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    Box { min: Vec<f64>, max: Vec<f64> },
}

#[derive(Debug, Serialize, Deserialize)]
struct ChainFile {
    n: usize,
    radii: Vec<f64>,
    lengths: Vec<f64>,
    theta_bar: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct StartFile {
    pose: Vec<f64>,
    joints: JointConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct GoalFile {
    pose: Vec<f64>,
}

fn semantic(field: &str, message: impl std::fmt::Display) -> BenchError {
    BenchError::Semantic {
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn vec_to_point(v: &[f64], dim: Dim, field: &str) -> Result<Vector3<f64>, BenchError> {
    match (dim, v.len()) {
        (Dim::Planar, 2) => Ok(Vector3::new(v[0], v[1], 0.0)),
        (Dim::Spatial, 3) => Ok(Vector3::new(v[0], v[1], v[2])),
        (d, n) => Err(semantic(
            field,
            format!(
                "expected {} coordinates for a {}D scene, got {n}",
                if d == Dim::Planar { 2 } else { 3 },
                if d == Dim::Planar { 2 } else { 3 },
            ),
        )),
    }
}

fn point_to_vec(p: &Vector3<f64>, dim: Dim) -> Vec<f64> {
    match dim {
        Dim::Planar => vec![p.x, p.y],
        Dim::Spatial => vec![p.x, p.y, p.z],
    }
}

fn pose_from_fields(v: &[f64], dim: Dim, field: &str) -> Result<Pose3, BenchError> {
    match (dim, v.len()) {
        (Dim::Planar, 3) => Ok(Pose3 {
            translation: Vector3::new(v[0], v[1], 0.0),
            rotation: rot_z(v[2]),
        }),
        (Dim::Spatial, 12) => {
            let mut r = Matrix3::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    r[(i, j)] = v[3 + 3 * i + j];
                }
            }
            Pose3::new(Vector3::new(v[0], v[1], v[2]), r).map_err(|e| semantic(field, e))
        }
        (Dim::Planar, n) => Err(semantic(
            field,
            format!("2D pose takes [x, y, heading], got {n} numbers"),
        )),
        (Dim::Spatial, n) => Err(semantic(
            field,
            format!("3D pose takes [x, y, z, r00..r22], got {n} numbers"),
        )),
    }
}

fn pose_to_fields(p: &Pose3, dim: Dim) -> Vec<f64> {
    match dim {
        Dim::Planar => vec![
            p.translation.x,
            p.translation.y,
            crate::rootpath::heading_of(&p.rotation),
        ],
        Dim::Spatial => {
            let mut v = vec![p.translation.x, p.translation.y, p.translation.z];
            for i in 0..3 {
                for j in 0..3 {
                    v.push(p.rotation[(i, j)]);
                }
            }
            v
        }
    }
}

impl Scene {
    /// Parses and validates a scene document. Schema errors carry the JSON
    /// field path; semantic errors name the offending field.
    pub fn parse(text: &str) -> Result<Scene, BenchError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: SceneFile =
            serde_path_to_error::deserialize(de).map_err(|e| BenchError::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        Scene::from_file(file)
    }

    fn from_file(file: SceneFile) -> Result<Scene, BenchError> {
        if file.schema != 1 {
            return Err(BenchError::SchemaVersion(file.schema));
        }
        let dim = match file.dim {
            2 => Dim::Planar,
            3 => Dim::Spatial,
            other => return Err(semantic("dim", format!("must be 2 or 3, got {other}"))),
        };

        let min = vec_to_point(&file.bounds.min, dim, "bounds.min")?;
        let max = vec_to_point(&file.bounds.max, dim, "bounds.max")?;
        let bounds = match dim {
            Dim::Planar => Aabb::new(min, max),
            Dim::Spatial => Aabb::new(min, max),
        };

        let mut obstacles = Vec::with_capacity(file.obstacles.len());
        for (i, ob) in file.obstacles.iter().enumerate() {
            let field = format!("obstacles[{i}]");
            let converted = match ob {
                ObstacleFile::Disk { center, radius } => {
                    if dim != Dim::Planar {
                        return Err(semantic(&field, "disk obstacles only fit 2D scenes"));
                    }
                    Obstacle::Ball {
                        center: Vector3::new(center[0], center[1], 0.0),
                        radius: *radius,
                    }
                }
                ObstacleFile::Sphere { center, radius } => {
                    if dim != Dim::Spatial {
                        return Err(semantic(&field, "sphere obstacles only fit 3D scenes"));
                    }
                    Obstacle::Ball {
                        center: Vector3::new(center[0], center[1], center[2]),
                        radius: *radius,
                    }
                }
                ObstacleFile::Box { min, max } => Obstacle::Box {
                    min: vec_to_point(min, dim, &format!("{field}.min"))?,
                    max: vec_to_point(max, dim, &format!("{field}.max"))?,
                },
            };
            obstacles.push(converted);
        }
        let env = Environment::new(dim, bounds, obstacles)?;

        if file.chain.lengths.len() != file.chain.n {
            return Err(semantic(
                "chain.n",
                format!(
                    "declares {} sublinks but chain.lengths has {}",
                    file.chain.n,
                    file.chain.lengths.len()
                ),
            ));
        }
        // Chain validation errors already name chain.* field paths.
        let chain = ChainSpec::new(file.chain.radii, file.chain.lengths, file.chain.theta_bar, dim)
            .map_err(|e| semantic("chain", e))?;

        let start_pose = pose_from_fields(&file.start.pose, dim, "start.pose")?;
        let goal = pose_from_fields(&file.goal.pose, dim, "goal.pose")?;
        if !env.bounds().contains(&start_pose.translation) {
            return Err(semantic("start.pose", "outside the workspace bounds"));
        }
        if !env.bounds().contains(&goal.translation) {
            return Err(semantic("goal.pose", "outside the workspace bounds"));
        }
        let start_joints = file.start.joints;
        if start_joints.len() != chain.links() || start_joints.gamma.len() != chain.links() {
            return Err(semantic(
                "start.joints",
                format!(
                    "expected {} theta and gamma angles, got {} / {}",
                    chain.links(),
                    start_joints.theta.len(),
                    start_joints.gamma.len()
                ),
            ));
        }
        if !start_joints.within_limits(&chain) {
            return Err(semantic("start.joints", "exceeds the joint limit"));
        }
        file.planner.validate()?;

        Ok(Scene {
            name: file.name,
            env,
            chain,
            start_pose,
            start_joints,
            goal,
            planner: file.planner,
        })
    }

    fn to_file(&self) -> SceneFile {
        let dim = self.env.dim();
        let obstacles = self
            .env
            .obstacles()
            .iter()
            .map(|ob| match ob {
                Obstacle::Ball { center, radius } => match dim {
                    Dim::Planar => ObstacleFile::Disk {
                        center: [center.x, center.y],
                        radius: *radius,
                    },
                    Dim::Spatial => ObstacleFile::Sphere {
                        center: [center.x, center.y, center.z],
                        radius: *radius,
                    },
                },
                Obstacle::Box { min, max } => ObstacleFile::Box {
                    min: point_to_vec(min, dim),
                    max: point_to_vec(max, dim),
                },
            })
            .collect();
        SceneFile {
            schema: 1,
            name: self.name.clone(),
            dim: if dim == Dim::Planar { 2 } else { 3 },
            bounds: BoundsFile {
                min: point_to_vec(&self.env.bounds().min, dim),
                max: point_to_vec(&self.env.bounds().max, dim),
            },
            obstacles,
            chain: ChainFile {
                n: self.chain.links(),
                radii: self.chain.radii().to_vec(),
                lengths: self.chain.lengths().to_vec(),
                theta_bar: self.chain.theta_bar(),
            },
            start: StartFile {
                pose: pose_to_fields(&self.start_pose, dim),
                joints: self.start_joints.clone(),
            },
            goal: GoalFile {
                pose: pose_to_fields(&self.goal, dim),
            },
            planner: self.planner.clone(),
        }
    }

    /// Serializes back to the schema, echoing all defaulted fields.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scene serialization is total")
    }
}

// ---------------------------------------------------------------------------
// Scene generators
// ---------------------------------------------------------------------------

/// Built-in benchmark families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Maze2d,
    Rocks2d,
    Rocks3d,
    Wallhole3d,
}

impl std::str::FromStr for SceneKind {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "maze2d" => Ok(SceneKind::Maze2d),
            "rocks2d" => Ok(SceneKind::Rocks2d),
            "rocks3d" => Ok(SceneKind::Rocks3d),
            "wallhole3d" => Ok(SceneKind::Wallhole3d),
            other => Err(BenchError::UnknownKind(other.to_string())),
        }
    }
}

const DELTA0: f64 = 0.23;
const THETA_BAR: f64 = std::f64::consts::FRAC_PI_2;
// The 3-link chain sits inside the projection guarantee: sampled curvature
// never exceeds atan(kappa) = atan(1) ≈ 0.7854 while kappa_N =
// 2·sin(theta_bar)/(3·0.8) = 0.8333, so every root edge projects. The
// 6-link chain cannot reach that regime (links must span at least 2·delta_0
// = 0.46, capping kappa_N at 0.725), so its tight extensions are pruned by
// projection failures instead — the operating point the rock benchmarks
// are about.
const LINK_LEN_N3: f64 = 0.8;
const LINK_LEN_N6: f64 = 0.5;

/// Deterministic benchmark scene for a kind, seed, and difficulty level
/// (0 = easy, 1 = default, 2 = dense).
pub fn generate_scene(kind: SceneKind, seed: u64, difficulty: u8) -> Result<Scene, BenchError> {
    match kind {
        SceneKind::Maze2d => generate_maze2d(seed, difficulty),
        SceneKind::Rocks2d => generate_rocks2d(seed, difficulty),
        SceneKind::Rocks3d => generate_rocks3d(seed, difficulty),
        SceneKind::Wallhole3d => generate_wallhole3d(seed, difficulty, None),
    }
}

fn planner_defaults(seed: u64, time_limit: f64) -> PlannerConfig {
    let mut cfg = PlannerConfig::new(1.0, 0.1, time_limit, seed, Mode::Irreducible);
    cfg.goal_bias = 0.05;
    cfg
}

/// Corridor maze carved from a seeded wall grid by depth-first search; the
/// chain (3 sublinks) starts in the south-west cell and the goal sits in
/// the north-east cell.
fn generate_maze2d(seed: u64, difficulty: u8) -> Result<Scene, BenchError> {
    let cells: usize = match difficulty {
        0 => 3,
        1 => 4,
        _ => 5,
    };
    // Cell size leaves room for a bounded-curvature quarter turn (radius
    // 1/atan(kappa) ≈ 1.27 m at kappa = 1) anywhere inside a cell.
    let cell = 4.0;
    let size = cell * cells as f64;
    let half_t = 0.1; // wall half thickness

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Recursive-backtracker spanning tree over the cell grid.
    let idx = |x: usize, y: usize| y * cells + x;
    let mut visited = vec![false; cells * cells];
    let mut passage = vec![false; cells * cells * 2]; // [cell * 2 + axis]: east, north
    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    while let Some(&(cx, cy)) = stack.last() {
        let mut options: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(4);
        // (nx, ny, passage_cell, axis): axis 0 = east wall, 1 = north wall.
        if cx + 1 < cells && !visited[idx(cx + 1, cy)] {
            options.push((cx + 1, cy, idx(cx, cy), 0));
        }
        if cx > 0 && !visited[idx(cx - 1, cy)] {
            options.push((cx - 1, cy, idx(cx - 1, cy), 0));
        }
        if cy + 1 < cells && !visited[idx(cx, cy + 1)] {
            options.push((cx, cy + 1, idx(cx, cy), 1));
        }
        if cy > 0 && !visited[idx(cx, cy - 1)] {
            options.push((cx, cy - 1, idx(cx, cy - 1), 1));
        }
        if options.is_empty() {
            stack.pop();
            continue;
        }
        let (nx, ny, pcell, axis) = options[rng.random_range(0..options.len())];
        passage[pcell * 2 + axis] = true;
        visited[idx(nx, ny)] = true;
        stack.push((nx, ny));
    }

    // Walls where no passage was carved, extended by the half thickness at
    // both ends so corners seal, clamped to the workspace.
    let mut obstacles = Vec::new();
    for cy in 0..cells {
        for cx in 0..cells {
            if cx + 1 < cells && !passage[idx(cx, cy) * 2] {
                let x = (cx + 1) as f64 * cell;
                obstacles.push(Obstacle::Box {
                    min: Vector3::new(x - half_t, (cy as f64 * cell - half_t).max(0.0), 0.0),
                    max: Vector3::new(
                        x + half_t,
                        ((cy + 1) as f64 * cell + half_t).min(size),
                        0.0,
                    ),
                });
            }
            if cy + 1 < cells && !passage[idx(cx, cy) * 2 + 1] {
                let y = (cy + 1) as f64 * cell;
                obstacles.push(Obstacle::Box {
                    min: Vector3::new((cx as f64 * cell - half_t).max(0.0), y - half_t, 0.0),
                    max: Vector3::new(
                        ((cx + 1) as f64 * cell + half_t).min(size),
                        y + half_t,
                        0.0,
                    ),
                });
            }
        }
    }

    let env = Environment::new(
        Dim::Planar,
        Aabb::new(Vector3::zeros(), Vector3::new(size, size, 0.0)),
        obstacles,
    )?;
    let chain = ChainSpec::uniform(3, LINK_LEN_N3, DELTA0, THETA_BAR, Dim::Planar)?;
    // The trail (2.4 m + radius) fits between the boundary and the first
    // possible wall at 4 m. The start must also leave a turn radius
    // (1/atan(kappa) ≈ 1.27 m) of runway before the first closable wall, so
    // it points down whichever of the first cell's two passages the
    // spanning tree left open (at least one always is).
    let margin = chain.total_length() + DELTA0 + 0.1;
    let start_pose = if passage[idx(0, 0) * 2] {
        Pose3 {
            translation: Vector3::new(margin, cell / 2.0, 0.0),
            rotation: Matrix3::identity(),
        }
    } else {
        Pose3 {
            translation: Vector3::new(cell / 2.0, margin, 0.0),
            rotation: rot_z(std::f64::consts::FRAC_PI_2),
        }
    };
    let goal = Pose3 {
        translation: Vector3::new(size - cell / 2.0, size - cell / 2.0, 0.0),
        rotation: Matrix3::identity(),
    };
    Ok(Scene {
        name: format!("maze2d-s{seed}-d{difficulty}"),
        env,
        chain,
        start_pose,
        start_joints: JointConfig::zeros(3),
        goal,
        planner: planner_defaults(seed, 120.0),
    })
}

/// Clearance predicate shared by the rock generators: the candidate rock
/// must keep `margin` of free space around the start and goal points and
/// around the capsule the trailing chain occupies behind the start.
fn rock_is_clear(
    center: &Vector3<f64>,
    radius: f64,
    rocks: &[(Vector3<f64>, f64)],
    start: &Vector3<f64>,
    tail: &Vector3<f64>,
    goal: &Vector3<f64>,
    min_gap: f64,
    margin: f64,
) -> bool {
    for (c, r) in rocks {
        if (center - c).norm() < radius + r + min_gap {
            return false;
        }
    }
    if (center - start).norm() < radius + margin || (center - goal).norm() < radius + margin {
        return false;
    }
    // Distance to the start-tail segment.
    let d = {
        let ab = start - tail;
        let t = ((center - tail).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
        (center - (tail + t * ab)).norm()
    };
    d >= radius + DELTA0 + 0.1
}

fn poisson_rocks<R: Rng>(
    rng: &mut R,
    count: usize,
    radius_range: (f64, f64),
    sample_center: impl Fn(&mut R) -> Vector3<f64>,
    start: &Vector3<f64>,
    tail: &Vector3<f64>,
    goal: &Vector3<f64>,
    min_gap: f64,
    kind: &str,
) -> Result<Vec<(Vector3<f64>, f64)>, BenchError> {
    // Start/goal clearance covers a bounded-curvature swerve (turn radius
    // 1/atan(kappa) ≈ 1.27 m plus the tube radius): a rock dead ahead of the
    // start inside that range wedges every trial of both modes.
    let margin = 1.4;
    let mut rocks: Vec<(Vector3<f64>, f64)> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = false;
        for _attempt in 0..400 {
            let radius = rng.random_range(radius_range.0..=radius_range.1);
            let center = sample_center(rng);
            if rock_is_clear(&center, radius, &rocks, start, tail, goal, min_gap, margin) {
                rocks.push((center, radius));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(BenchError::UnsatisfiableClearance {
                kind: kind.to_string(),
            });
        }
    }
    Ok(rocks)
}

/// Planar rock field: Poisson-sampled disks with guaranteed start/goal
/// clearance; 6 sublinks.
fn generate_rocks2d(seed: u64, difficulty: u8) -> Result<Scene, BenchError> {
    let count = match difficulty {
        0 => 12,
        1 => 20,
        _ => 30,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chain = ChainSpec::uniform(6, LINK_LEN_N6, DELTA0, THETA_BAR, Dim::Planar)?;
    let start = Vector3::new(chain.total_length() + DELTA0 + 0.3, 5.5, 0.0);
    let tail = Vector3::new(0.3, 5.5, 0.0);
    let goal = Vector3::new(12.0, 5.5, 0.0);
    let rocks = poisson_rocks(
        &mut rng,
        count,
        (0.35, 0.55),
        |rng| Vector3::new(rng.random_range(0.8..=13.2), rng.random_range(0.8..=10.2), 0.0),
        &start,
        &tail,
        &goal,
        0.6,
        "rocks2d",
    )?;
    let obstacles = rocks
        .into_iter()
        .map(|(center, radius)| Obstacle::Ball { center, radius })
        .collect();
    let env = Environment::new(
        Dim::Planar,
        Aabb::new(Vector3::zeros(), Vector3::new(14.0, 11.0, 0.0)),
        obstacles,
    )?;
    Ok(Scene {
        name: format!("rocks2d-s{seed}-d{difficulty}"),
        env,
        chain,
        start_pose: Pose3 {
            translation: start,
            rotation: Matrix3::identity(),
        },
        start_joints: JointConfig::zeros(6),
        goal: Pose3 {
            translation: goal,
            rotation: Matrix3::identity(),
        },
        planner: planner_defaults(seed, 120.0),
    })
}

/// Spatial rock field: Poisson-sampled spheres; 6 sublinks with two joint
/// angles each.
fn generate_rocks3d(seed: u64, difficulty: u8) -> Result<Scene, BenchError> {
    let count = match difficulty {
        0 => 36,
        1 => 60,
        _ => 90,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chain = ChainSpec::uniform(6, LINK_LEN_N6, DELTA0, THETA_BAR, Dim::Spatial)?;
    let start = Vector3::new(chain.total_length() + DELTA0 + 0.3, 5.0, 5.0);
    let tail = Vector3::new(0.3, 5.0, 5.0);
    let goal = Vector3::new(10.5, 5.0, 5.0);
    let rocks = poisson_rocks(
        &mut rng,
        count,
        (0.4, 0.6),
        |rng| {
            Vector3::new(
                rng.random_range(0.9..=11.1),
                rng.random_range(0.9..=9.1),
                rng.random_range(0.9..=9.1),
            )
        },
        &start,
        &tail,
        &goal,
        0.55,
        "rocks3d",
    )?;
    let obstacles = rocks
        .into_iter()
        .map(|(center, radius)| Obstacle::Ball { center, radius })
        .collect();
    let env = Environment::new(
        Dim::Spatial,
        Aabb::new(Vector3::zeros(), Vector3::new(12.0, 10.0, 10.0)),
        obstacles,
    )?;
    let mut planner = planner_defaults(seed, 300.0);
    planner.epsilon_goal = 0.25;
    Ok(Scene {
        name: format!("rocks3d-s{seed}-d{difficulty}"),
        env,
        chain,
        start_pose: Pose3 {
            translation: start,
            rotation: Matrix3::identity(),
        },
        start_joints: JointConfig::zeros(6),
        goal: Pose3 {
            translation: goal,
            rotation: Matrix3::identity(),
        },
        planner,
    })
}

/// Wall with a square hole; `hole_width` overrides the difficulty preset
/// and is refused below the root diameter (the root sphere could never
/// pass).
pub fn generate_wallhole3d(
    seed: u64,
    difficulty: u8,
    hole_width: Option<f64>,
) -> Result<Scene, BenchError> {
    let width = hole_width.unwrap_or(match difficulty {
        0 => 2.4,
        1 => 1.8,
        _ => 1.2,
    });
    if width < 2.0 * DELTA0 {
        return Err(BenchError::UnsatisfiableClearance {
            kind: "wallhole3d".to_string(),
        });
    }
    let chain = ChainSpec::uniform(6, LINK_LEN_N6, DELTA0, THETA_BAR, Dim::Spatial)?;
    let (wx0, wx1) = (5.85, 6.15);
    let (cy, cz) = (5.0, 5.0);
    let h = width / 2.0;
    let obstacles = vec![
        Obstacle::Box {
            min: Vector3::new(wx0, 0.0, 0.0),
            max: Vector3::new(wx1, 10.0, cz - h),
        },
        Obstacle::Box {
            min: Vector3::new(wx0, 0.0, cz + h),
            max: Vector3::new(wx1, 10.0, 10.0),
        },
        Obstacle::Box {
            min: Vector3::new(wx0, 0.0, cz - h),
            max: Vector3::new(wx1, cy - h, cz + h),
        },
        Obstacle::Box {
            min: Vector3::new(wx0, cy + h, cz - h),
            max: Vector3::new(wx1, 10.0, cz + h),
        },
    ];
    let env = Environment::new(
        Dim::Spatial,
        Aabb::new(Vector3::zeros(), Vector3::new(12.0, 10.0, 10.0)),
        obstacles,
    )?;
    let mut planner = planner_defaults(seed, 300.0);
    planner.epsilon_goal = 0.25;
    let start_x = chain.total_length() + DELTA0 + 0.3;
    Ok(Scene {
        name: format!("wallhole3d-s{seed}-d{difficulty}"),
        env,
        chain,
        start_pose: Pose3 {
            translation: Vector3::new(start_x, cy, cz),
            rotation: Matrix3::identity(),
        },
        start_joints: JointConfig::zeros(6),
        goal: Pose3 {
            translation: Vector3::new(9.5, cy, cz),
            rotation: Matrix3::identity(),
        },
        planner,
    })
}

// ---------------------------------------------------------------------------
// Runner and statistics
// ---------------------------------------------------------------------------

/// Aggregate statistics over a batch of trials. Times of unsuccessful
/// trials (timeouts, exhaustion, errors) count at the time limit, so the
/// mean never exceeds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub trials: usize,
    pub successes: usize,
    /// Percent in [0, 100].
    pub success_rate: f64,
    pub mean_time: f64,
    pub std_time: f64,
}

impl BenchStats {
    /// Population statistics of the given per-trial times.
    pub fn from_times(times: &[f64], successes: usize) -> BenchStats {
        let n = times.len();
        assert!(n > 0, "statistics need at least one trial");
        let mean = times.iter().sum::<f64>() / n as f64;
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64;
        BenchStats {
            trials: n,
            successes,
            success_rate: 100.0 * successes as f64 / n as f64,
            mean_time: mean,
            std_time: var.sqrt(),
        }
    }
}

/// One trial's outcome: planner errors are recorded, never aborting the
/// batch. Successful trials keep their path for re-validation.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub outcome: Result<TrialResult, String>,
    pub path: Option<PlannedPath>,
}

/// Runs `trials` seeded trials of the scene in the given mode (trial `i`
/// uses seed `base_seed + i`), at most `jobs` in parallel. Records appear
/// in trial order regardless of the schedule.
pub fn run_bench(
    scene: &Scene,
    mode: Mode,
    trials: usize,
    time_limit: f64,
    base_seed: u64,
    jobs: usize,
) -> Result<(BenchStats, Vec<TrialRecord>), BenchError> {
    if trials == 0 {
        return Err(BenchError::NoTrials);
    }
    let run_one = |i: usize| -> TrialRecord {
        let mut cfg = scene.planner.clone();
        cfg.mode = mode;
        cfg.time_limit = time_limit;
        cfg.seed = base_seed + i as u64;
        match plan(
            &scene.env,
            &scene.chain,
            &scene.start_pose,
            &scene.start_joints,
            &scene.goal,
            &cfg,
        ) {
            Ok(report) => TrialRecord {
                index: i,
                seed: cfg.seed,
                outcome: Ok(report.trial),
                path: report.path,
            },
            Err(e) => TrialRecord {
                index: i,
                seed: cfg.seed,
                outcome: Err(e.to_string()),
                path: None,
            },
        }
    };

    let records: Vec<TrialRecord> = if jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool construction");
        pool.install(|| (0..trials).into_par_iter().map(run_one).collect())
    } else {
        (0..trials).map(run_one).collect()
    };

    let mut times = Vec::with_capacity(trials);
    let mut successes = 0;
    for rec in &records {
        match &rec.outcome {
            Ok(trial) if trial.success => {
                successes += 1;
                times.push(trial.seconds.min(time_limit));
            }
            _ => times.push(time_limit),
        }
    }
    Ok((BenchStats::from_times(&times, successes), records))
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

/// One output row of the benchmark table.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub scene: String,
    pub mode: Mode,
    pub manifold: String,
    pub stats: BenchStats,
}

/// The state manifold the given mode plans in, e.g. `SE(2)` for the
/// irreducible planar case or `SE(3)xR12` for a full 6-sublink spatial
/// chain.
pub fn manifold_name(dim: Dim, mode: Mode, links: usize) -> String {
    match (dim, mode) {
        (Dim::Planar, Mode::Irreducible) => "SE(2)".to_string(),
        (Dim::Spatial, Mode::Irreducible) => "SE(3)".to_string(),
        (Dim::Planar, Mode::Full) => format!("SE(2)xR{links}"),
        (Dim::Spatial, Mode::Full) => format!("SE(3)xR{}", 2 * links),
    }
}

fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::Full => "Full",
        Mode::Irreducible => "Irreducible",
    }
}

/// Deterministic CSV: header then rows sorted by scene name with Full
/// before Irreducible; seconds at fixed two decimals.
pub fn emit_csv(rows: &[BenchRow]) -> String {
    let mut sorted: Vec<&BenchRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.scene
            .cmp(&b.scene)
            .then_with(|| (a.mode == Mode::Irreducible).cmp(&(b.mode == Mode::Irreducible)))
    });
    let mut out = String::from("scene,mode,manifold,success_pct,mean_s,std_s,trials\n");
    for row in sorted {
        out.push_str(&format!(
            "{},{},{},{:.1},{:.2},{:.2},{}\n",
            row.scene,
            mode_label(row.mode),
            row.manifold,
            row.stats.success_rate,
            row.stats.mean_time,
            row.stats.std_time,
            row.stats.trials,
        ));
    }
    out
}
