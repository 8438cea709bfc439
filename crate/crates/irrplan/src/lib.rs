//! Curvature-constrained kinodynamic motion planning for serial kinematic
//! chains via irreducible root-link paths.
//!
//! The toolkit plans motions for a free-floating root link followed by a
//! chain of trailing sublinks. Instead of searching the full configuration
//! space (root pose plus every joint angle), the planner searches only the
//! space of curvature-bounded root paths and places the sublinks analytically
//! inside the root link's swept volume by a backward chord-fitting
//! projection. The crate provides:
//!
//! - [`geometry`]: poses, the se(3) generator basis, matrix exponentials and
//!   a discrete curvature estimator;
//! - [`curvature`]: closed-form curvature budgets for an N-link chain
//!   (maximum curvature, minimal osculating radius, joint-angle bounds,
//!   chord deviation);
//! - [`chain`]: chain descriptions, joint configurations and forward
//!   kinematics;
//! - [`rootpath`]: densely sampled root-link paths with derivatives and the
//!   virtual prefix extension that unwinds the chain behind the start pose;
//! - [`projection`]: the backward chord projection of sublinks onto a root
//!   path, with containment certificates;
//! - [`steering`]: bounded-curvature steering primitives (planar Dubins step
//!   and the spatial unit-speed "airplane" step) and control rollouts;
//! - [`world`]: environments, occupancy grids, sphere sweeps and the
//!   swept-volume subset/feasibility predicates;
//! - [`planner`]: a kinodynamic RRT running either in the full configuration
//!   space or on root poses only;
//! - [`bench`]: scene files and generators, the seeded multi-trial runner and
//!   CSV emission.

pub mod bench;
pub mod chain;
pub mod curvature;
pub mod geometry;
pub mod oracles;
pub mod planner;
pub mod projection;
pub mod rootpath;
pub mod steering;
pub mod world;
