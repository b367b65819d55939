//! NR-V2X Mode 1 sidelink simulator: RSU-to-vehicle latency on a small
//! urban grid, plus a two-car overtaking scenario driven by sidelink BSMs.

pub mod artifacts;
pub mod channel;
pub mod drive;
pub mod engine;
pub mod geometry;
pub mod matrix;
pub mod metrics;
pub mod mobility;
pub mod scalar;
pub mod scenario;
pub mod sched;
pub mod traffic;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use scalar::Scalar;

/// A radio node: an RSU or a vehicle, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeId {
    Rsu(u32),
    Vehicle(u32),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Rsu(i) => write!(f, "rsu{i}"),
            NodeId::Vehicle(i) => write!(f, "veh{i}"),
        }
    }
}

pub type Point = geometry::Point<f64>;
pub type Rect = geometry::Rect<f64>;
pub type Obstacle = geometry::Obstacle<f64>;
pub type Lane = geometry::Lane<f64>;
pub type Road = geometry::Road<f64>;
pub type Rsu = geometry::Rsu<f64>;
pub type SpaceSpec = geometry::SpaceSpec<f64>;
pub type VehicleState = mobility::VehicleState<f64>;

pub use engine::{run, LatencySample, RunOutput, RunSummary};
pub use scenario::{parse_scenario, Scenario, ScenarioError};
