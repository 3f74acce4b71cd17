//! Deterministic agent-based simulation of pedestrian movement in the
//! minutes after an urban earthquake.
//!
//! The district is a street graph in planar meters. Each human agent owns a
//! private belief about which streets are blocked, routes by shortest path
//! under those beliefs, reacts to damage-induced obstacles (backtracking,
//! giving up), and can imitate informal leaders. One simulation cycle is one
//! second; every run is a pure function of (district, scenario, seed).
//!
//! Geometry and routing are generic over the scalar type (see [`scalar`]);
//! the simulation itself always runs in `f64` through the aliases below.

pub mod agents;
pub mod district;
pub mod engine;
pub mod geometry;
pub mod network;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod world;

/// Scalar the simulation runs in.
pub type Coord = f64;

pub type Point = geometry::Point<Coord>;
pub type Polyline = geometry::Polyline<Coord>;
pub type Polygon = geometry::Polygon<Coord>;
pub type Circle = geometry::Circle<Coord>;
pub type SpatialIndex = geometry::SpatialIndex<Coord>;

pub type Node = network::Node<Coord>;
pub type Edge = network::Edge<Coord>;
pub type StreetGraph = network::StreetGraph<Coord>;
pub type GraphPosition = network::GraphPosition<Coord>;

/// Seeded, portable RNG used by every stochastic step.
pub type StreamRng = rand_chacha::ChaCha8Rng;

pub use district::{generate_synthetic, load_geojson, DistrictSpec, SyntheticParams};
pub use engine::{run, RunOptions, RunResult, Simulation};
pub use scenario::{preset, ScenarioConfig};
