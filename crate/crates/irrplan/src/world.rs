//! Environments, swept-volume occupancy grids and the feasibility /
//! subset / equivalence predicates over swept volumes.
//!
//! Swept volumes are rasterized onto axis-aligned grids with cell-center
//! semantics: a cell is occupied iff its center lies inside some swept
//! sphere, and an occupied cell collides iff its center lies inside some
//! obstacle. Subset and equality of swept volumes are then exact at grid
//! level. Planar scenes use a single-cell-thick grid whose cell centers lie
//! exactly in the z = 0 plane.

use crate::chain::Dim;
use crate::rootpath::{PathError, RootPath};
use nalgebra::Vector3;
use thiserror::Error;

/// Default cap on grid size; grids above this are rejected.
pub const CELL_BUDGET: u64 = 1 << 27;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("resolution must be positive and finite, got {0}")]
    ResolutionNonPositive(f64),
    #[error("grid of {cells} cells exceeds the cell budget {budget}")]
    CellBudget { cells: u128, budget: u64 },
    #[error("grids have different origin/resolution/dims")]
    GridMismatch,
    #[error("path step {step} exceeds grid resolution {res}; resample the path first")]
    StepExceedsResolution { step: f64, res: f64 },
    #[error("workspace bounds are degenerate (min must be strictly below max per axis)")]
    DegenerateBounds,
    #[error("obstacle {index} extends outside the workspace bounds")]
    ObstacleOutsideBounds { index: usize },
    #[error("obstacle {index} has non-positive radius {value}")]
    ObstacleRadius { index: usize, value: f64 },
    #[error("subset precondition unmet: the small sweep is not contained in the big sweep")]
    SubsetPreconditionUnmet,
    #[error("malformed grid dump: {0}")]
    GridParse(String),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Axis-aligned box. Planar boxes keep z at [0, 0].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    /// Grows the box by `margin` on every axis (z untouched for planar use
    /// when `margin_z` is 0).
    pub fn padded(&self, margin: f64, margin_z: f64) -> Aabb {
        Aabb {
            min: Vector3::new(self.min.x - margin, self.min.y - margin, self.min.z - margin_z),
            max: Vector3::new(self.max.x + margin, self.max.y + margin, self.max.z + margin_z),
        }
    }
}

/// An obstacle primitive: a ball (disk in the plane, sphere in space) or an
/// axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    Ball { center: Vector3<f64>, radius: f64 },
    Box { min: Vector3<f64>, max: Vector3<f64> },
}

impl Obstacle {
    /// Closed containment of a point.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        match self {
            Obstacle::Ball { center, radius } => (p - center).norm_squared() <= radius * radius,
            Obstacle::Box { min, max } => (0..3).all(|a| p[a] >= min[a] && p[a] <= max[a]),
        }
    }

    /// Euclidean distance from a point to the obstacle (0 inside).
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        match self {
            Obstacle::Ball { center, radius } => ((p - center).norm() - radius).max(0.0),
            Obstacle::Box { min, max } => {
                let mut d2 = 0.0;
                for a in 0..3 {
                    let v = (min[a] - p[a]).max(0.0).max(p[a] - max[a]);
                    d2 += v * v;
                }
                f64::sqrt(d2)
            }
        }
    }

    /// Whether a sphere touches the obstacle (closed: tangency collides).
    pub fn intersects_sphere(&self, center: &Vector3<f64>, radius: f64) -> bool {
        self.distance(center) <= radius
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            Obstacle::Ball { center, radius } => Aabb {
                min: center - Vector3::repeat(*radius),
                max: center + Vector3::repeat(*radius),
            },
            Obstacle::Box { min, max } => Aabb {
                min: *min,
                max: *max,
            },
        }
    }
}

/// A bounded workspace with obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    dim: Dim,
    bounds: Aabb,
    obstacles: Vec<Obstacle>,
}

impl Environment {
    pub fn new(dim: Dim, bounds: Aabb, obstacles: Vec<Obstacle>) -> Result<Self, WorldError> {
        let axes = match dim {
            Dim::Planar => 2,
            Dim::Spatial => 3,
        };
        for a in 0..axes {
            if !(bounds.min[a] < bounds.max[a]) {
                return Err(WorldError::DegenerateBounds);
            }
        }
        for (index, ob) in obstacles.iter().enumerate() {
            if let Obstacle::Ball { radius, .. } = ob {
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(WorldError::ObstacleRadius {
                        index,
                        value: *radius,
                    });
                }
            }
            let bb = ob.aabb();
            for a in 0..axes {
                if bb.min[a] < bounds.min[a] - 1e-9 || bb.max[a] > bounds.max[a] + 1e-9 {
                    return Err(WorldError::ObstacleOutsideBounds { index });
                }
            }
        }
        Ok(Self {
            dim,
            bounds,
            obstacles,
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    /// Whether a point lies inside any obstacle.
    pub fn point_in_obstacle(&self, p: &Vector3<f64>) -> bool {
        self.obstacles.iter().any(|ob| ob.contains(p))
    }

    /// Whether a sphere touches any obstacle.
    pub fn sphere_in_collision(&self, center: &Vector3<f64>, radius: f64) -> bool {
        self.obstacles
            .iter()
            .any(|ob| ob.intersects_sphere(center, radius))
    }

    /// Whether a sphere lies entirely inside the workspace bounds.
    pub fn sphere_in_bounds(&self, center: &Vector3<f64>, radius: f64) -> bool {
        let axes = match self.dim {
            Dim::Planar => 2,
            Dim::Spatial => 3,
        };
        (0..axes).all(|a| {
            center[a] - radius >= self.bounds.min[a] && center[a] + radius <= self.bounds.max[a]
        })
    }
}

/// Placement of a grid in space: origin corner, cell size and cell counts.
/// Planar grids have `dims[2] == 1` with the single layer's cell centers in
/// the z = 0 plane.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFrame {
    pub origin: Vector3<f64>,
    pub resolution: f64,
    pub dims: [usize; 3],
}

impl GridFrame {
    /// Fits a frame around a box with one cell of margin on every side.
    pub fn fit(aabb: &Aabb, resolution: f64, dim: Dim) -> Result<Self, WorldError> {
        Self::fit_with_budget(aabb, resolution, dim, CELL_BUDGET)
    }

    pub fn fit_with_budget(
        aabb: &Aabb,
        resolution: f64,
        dim: Dim,
        budget: u64,
    ) -> Result<Self, WorldError> {
        if !resolution.is_finite() || resolution <= 0.0 {
            return Err(WorldError::ResolutionNonPositive(resolution));
        }
        let pad = resolution;
        let mut dims = [0usize; 3];
        let mut origin = Vector3::zeros();
        let axes = match dim {
            Dim::Planar => 2,
            Dim::Spatial => 3,
        };
        for a in 0..axes {
            origin[a] = aabb.min[a] - pad;
            let extent = aabb.max[a] + pad - origin[a];
            dims[a] = (extent / resolution).ceil().max(1.0) as usize;
        }
        if dim == Dim::Planar {
            // One layer with cell centers exactly at z = 0.
            origin.z = -resolution / 2.0;
            dims[2] = 1;
        }
        let cells = dims[0] as u128 * dims[1] as u128 * dims[2] as u128;
        if cells > budget as u128 {
            return Err(WorldError::CellBudget { cells, budget });
        }
        Ok(Self {
            origin,
            resolution,
            dims,
        })
    }

    pub fn total_cells(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn cell_center(&self, idx: [usize; 3]) -> Vector3<f64> {
        Vector3::new(
            self.origin.x + (idx[0] as f64 + 0.5) * self.resolution,
            self.origin.y + (idx[1] as f64 + 0.5) * self.resolution,
            self.origin.z + (idx[2] as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing a point, or None outside the grid.
    pub fn cell_of(&self, p: &Vector3<f64>) -> Option<[usize; 3]> {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let rel = (p[a] - self.origin[a]) / self.resolution;
            if rel < 0.0 {
                return None;
            }
            let i = rel.floor() as usize;
            if i >= self.dims[a] {
                return None;
            }
            idx[a] = i;
        }
        Some(idx)
    }

    fn linear(&self, idx: [usize; 3]) -> usize {
        (idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0]
    }

    fn approx_eq(&self, other: &GridFrame) -> bool {
        self.dims == other.dims
            && (self.resolution - other.resolution).abs() <= 1e-12
            && (self.origin - other.origin).norm() <= 1e-9
    }
}

/// A bit-per-cell occupancy grid over a [`GridFrame`].
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    frame: GridFrame,
    dim: Dim,
    words: Vec<u64>,
    occupied: usize,
}

impl OccupancyGrid {
    pub fn empty(frame: GridFrame, dim: Dim) -> Self {
        let words = frame.total_cells().div_ceil(64);
        Self {
            frame,
            dim,
            words: vec![0; words],
            occupied: 0,
        }
    }

    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn resolution(&self) -> f64 {
        self.frame.resolution
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn is_occupied(&self, idx: [usize; 3]) -> bool {
        let lin = self.frame.linear(idx);
        self.words[lin / 64] >> (lin % 64) & 1 == 1
    }

    fn set(&mut self, idx: [usize; 3]) {
        let lin = self.frame.linear(idx);
        let word = &mut self.words[lin / 64];
        let mask = 1u64 << (lin % 64);
        if *word & mask == 0 {
            *word |= mask;
            self.occupied += 1;
        }
    }

    /// Whether the cell containing `p` is occupied (false outside the grid).
    pub fn occupied_at_point(&self, p: &Vector3<f64>) -> bool {
        match self.frame.cell_of(p) {
            Some(idx) => self.is_occupied(idx),
            None => false,
        }
    }

    /// Marks every cell whose center lies within the sphere.
    pub fn mark_sphere(&mut self, center: &Vector3<f64>, radius: f64) {
        let res = self.frame.resolution;
        let r2 = radius * radius;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            let lo_f = ((center[a] - radius - self.frame.origin[a]) / res - 0.5).floor();
            let hi_f = ((center[a] + radius - self.frame.origin[a]) / res - 0.5).ceil();
            lo[a] = lo_f.max(0.0) as usize;
            hi[a] = (hi_f.max(0.0) as usize).min(self.frame.dims[a].saturating_sub(1));
        }
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let c = self.frame.cell_center([i, j, k]);
                    if (c - center).norm_squared() <= r2 {
                        self.set([i, j, k]);
                    }
                }
            }
        }
    }

    /// Iterates occupied cell indices.
    pub fn occupied_cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let dims = self.frame.dims;
        (0..dims[2]).flat_map(move |k| {
            (0..dims[1]).flat_map(move |j| {
                (0..dims[0]).filter_map(move |i| {
                    if self.is_occupied([i, j, k]) {
                        Some([i, j, k])
                    } else {
                        None
                    }
                })
            })
        })
    }

    /// Serializes to the portable text dump: a header line
    /// `nx ny nz resolution ox oy oz`, then one line of `0`/`1` characters
    /// per grid row in row-major order (x fastest, then y, then z).
    pub fn dump(&self) -> String {
        let f = &self.frame;
        let mut out = format!(
            "{} {} {} {} {} {} {}\n",
            f.dims[0], f.dims[1], f.dims[2], f.resolution, f.origin.x, f.origin.y, f.origin.z
        );
        for k in 0..f.dims[2] {
            for j in 0..f.dims[1] {
                let mut line = String::with_capacity(f.dims[0] + 1);
                for i in 0..f.dims[0] {
                    line.push(if self.is_occupied([i, j, k]) { '1' } else { '0' });
                }
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }

    /// Parses a text dump produced by [`OccupancyGrid::dump`].
    pub fn parse(text: &str) -> Result<Self, WorldError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| WorldError::GridParse("empty dump".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(WorldError::GridParse(format!(
                "header needs 7 fields, got {}",
                fields.len()
            )));
        }
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| WorldError::GridParse(format!("bad dimension {s:?}: {e}")))
        };
        let parse_f64 = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| WorldError::GridParse(format!("bad number {s:?}: {e}")))
        };
        let dims = [
            parse_usize(fields[0])?,
            parse_usize(fields[1])?,
            parse_usize(fields[2])?,
        ];
        let resolution = parse_f64(fields[3])?;
        let origin = Vector3::new(parse_f64(fields[4])?, parse_f64(fields[5])?, parse_f64(fields[6])?);
        if resolution <= 0.0 || !resolution.is_finite() {
            return Err(WorldError::GridParse("non-positive resolution".into()));
        }
        let frame = GridFrame {
            origin,
            resolution,
            dims,
        };
        let dim = if dims[2] == 1 { Dim::Planar } else { Dim::Spatial };
        let mut grid = OccupancyGrid::empty(frame, dim);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                let line = lines.next().ok_or_else(|| {
                    WorldError::GridParse(format!("missing row {j} of layer {k}"))
                })?;
                if line.len() != dims[0] {
                    return Err(WorldError::GridParse(format!(
                        "row {j} of layer {k} has {} cells, expected {}",
                        line.len(),
                        dims[0]
                    )));
                }
                for (i, ch) in line.chars().enumerate() {
                    match ch {
                        '1' => grid.set([i, j, k]),
                        '0' => {}
                        other => {
                            return Err(WorldError::GridParse(format!(
                                "unexpected character {other:?} in row {j}"
                            )))
                        }
                    }
                }
            }
        }
        Ok(grid)
    }
}

/// Sweeps spheres along a path into a fresh grid sized to fit.
///
/// `spheres_at` maps a path parameter to the spheres occupied at that
/// parameter; the union over all path samples is rasterized with cell-center
/// semantics. The path must be sampled at least as densely as the grid
/// resolution.
pub fn sweep_spheres(
    path: &RootPath,
    spheres_at: impl Fn(f64) -> Vec<(Vector3<f64>, f64)>,
    res: f64,
) -> Result<OccupancyGrid, WorldError> {
    let spheres = collect_spheres(path, &spheres_at, res)?;
    let mut aabb: Option<Aabb> = None;
    for (c, r) in &spheres {
        let b = Aabb {
            min: c - Vector3::repeat(*r),
            max: c + Vector3::repeat(*r),
        };
        aabb = Some(match aabb {
            Some(a) => a.union(&b),
            None => b,
        });
    }
    let aabb = aabb.expect("paths have at least two samples");
    let frame = GridFrame::fit(&aabb, res, path.dim())?;
    sweep_into(frame, path.dim(), &spheres)
}

/// Sweeps spheres along a path into a caller-supplied frame, so grids from
/// different paths can be compared cell-for-cell.
pub fn sweep_spheres_in_frame(
    frame: GridFrame,
    path: &RootPath,
    spheres_at: impl Fn(f64) -> Vec<(Vector3<f64>, f64)>,
) -> Result<OccupancyGrid, WorldError> {
    let spheres = collect_spheres(path, &spheres_at, frame.resolution)?;
    sweep_into(frame, path.dim(), &spheres)
}

/// Convenience sweep of the root sphere alone.
pub fn sweep_root(path: &RootPath, radius: f64, res: f64) -> Result<OccupancyGrid, WorldError> {
    sweep_spheres(path, |_| vec![(Vector3::zeros(), radius)], res)
}

fn collect_spheres(
    path: &RootPath,
    spheres_at: &impl Fn(f64) -> Vec<(Vector3<f64>, f64)>,
    res: f64,
) -> Result<Vec<(Vector3<f64>, f64)>, WorldError> {
    if path.step() > res + 1e-12 {
        return Err(WorldError::StepExceedsResolution {
            step: path.step(),
            res,
        });
    }
    let mut spheres = Vec::new();
    for smp in path.samples() {
        for (offset, r) in spheres_at(smp.s) {
            // Sphere centers are expressed relative to the sample position;
            // the common case is a zero offset (the link center rides the
            // path).
            spheres.push((smp.position + offset, r));
        }
    }
    Ok(spheres)
}

fn sweep_into(
    frame: GridFrame,
    dim: Dim,
    spheres: &[(Vector3<f64>, f64)],
) -> Result<OccupancyGrid, WorldError> {
    let mut grid = OccupancyGrid::empty(frame, dim);
    for (c, r) in spheres {
        grid.mark_sphere(c, *r);
    }
    Ok(grid)
}

/// Whether a swept volume avoids every obstacle: no occupied cell center
/// lies inside any obstacle primitive.
pub fn is_feasible(sv: &OccupancyGrid, env: &Environment) -> bool {
    let frame = &sv.frame;
    for ob in env.obstacles() {
        let bb = ob.aabb().padded(frame.resolution, frame.resolution);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut empty = false;
        for a in 0..3 {
            let lo_f = ((bb.min[a] - frame.origin[a]) / frame.resolution).floor();
            let hi_f = ((bb.max[a] - frame.origin[a]) / frame.resolution).ceil();
            if hi_f < 0.0 || lo_f >= frame.dims[a] as f64 {
                empty = true;
                break;
            }
            lo[a] = lo_f.max(0.0) as usize;
            hi[a] = (hi_f as usize).min(frame.dims[a] - 1);
        }
        if empty {
            continue;
        }
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    if sv.is_occupied([i, j, k]) && ob.contains(&frame.cell_center([i, j, k])) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Whether every occupied cell of `a` is occupied in `b` (subset-or-equal).
pub fn is_subset(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<bool, WorldError> {
    if !a.frame.approx_eq(&b.frame) {
        return Err(WorldError::GridMismatch);
    }
    Ok(a.words.iter().zip(b.words.iter()).all(|(x, y)| x & !y == 0))
}

/// Whether `a` is a proper subset of `b`: contained and strictly smaller.
pub fn is_proper_subset(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<bool, WorldError> {
    Ok(is_subset(a, b)? && !sv_equal(a, b)?)
}

/// Exact cellwise equality of two swept volumes.
pub fn sv_equal(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<bool, WorldError> {
    if !a.frame.approx_eq(&b.frame) {
        return Err(WorldError::GridMismatch);
    }
    Ok(a.words == b.words)
}

/// Result of checking the feasibility-transfer implications on a concrete
/// subset pair: if the small sweep is infeasible the big one must be, and
/// if the big sweep is feasible the small one must be.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub small_feasible: bool,
    pub big_feasible: bool,
    pub violations: Vec<String>,
}

impl TransferReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks both feasibility-transfer implications for a pair of swept
/// volumes with `small ⊆ big` in the given environment. Violations indicate
/// predicate bugs, never valid geometry.
pub fn infeasibility_transfer_check(
    small: &OccupancyGrid,
    big: &OccupancyGrid,
    env: &Environment,
) -> Result<TransferReport, WorldError> {
    if !is_subset(small, big)? {
        return Err(WorldError::SubsetPreconditionUnmet);
    }
    let small_feasible = is_feasible(small, env);
    let big_feasible = is_feasible(big, env);
    let mut violations = Vec::new();
    if !small_feasible && big_feasible {
        violations.push(
            "small sweep infeasible but big sweep feasible (infeasibility must transfer up)"
                .to_string(),
        );
    }
    if big_feasible && !small_feasible {
        violations.push(
            "big sweep feasible but small sweep infeasible (feasibility must transfer down)"
                .to_string(),
        );
    }
    Ok(TransferReport {
        small_feasible,
        big_feasible,
        violations,
    })
}
