//! Vehicle and truck placement on lanes, and constant-speed motion with
//! wrap-around at road ends.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{LaneId, Rect, Road, RsuId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKind {
    Car,
    Truck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState<T> {
    pub id: VehicleId,
    pub lane: LaneId,
    /// Meters along the lane in its travel direction, in `[0, lane length)`.
    pub position: T,
    pub speed: T,
    pub kind: VehicleKind,
    pub association: Option<RsuId>,
}

/// Vehicles per lane (`lambda`) and trucks per road (`theta`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub lambda: u32,
    pub theta: u32,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { lambda: 5, theta: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speeds<T> {
    pub car: T,
    pub truck: T,
}

/// Places exactly `lambda` cars on every lane and `theta` trucks on every
/// road, each uniformly along its lane.
///
/// This is the homogeneous Poisson process conditioned on its count. Cars come
/// first in lane order, then trucks in road order; ids follow that order.
pub fn place_vehicles<T: Scalar, R: Rng + ?Sized>(
    roads: &[Road<T>],
    density: DensityConfig,
    speeds: Speeds<T>,
    rng: &mut R,
) -> Vec<VehicleState<T>> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<VehicleState<T>>, rng: &mut R, lane: LaneId, len: T, kind, speed| {
        let u: f64 = rng.random();
        let mut position = T::lit(u) * len;
        if position >= len {
            position = T::zero();
        }
        let id = VehicleId(out.len() as u32);
        out.push(VehicleState { id, lane, position, speed, kind, association: None });
    };
    for road in roads {
        for lane in &road.lanes {
            for _ in 0..density.lambda {
                push(&mut out, rng, lane.id, lane.length, VehicleKind::Car, speeds.car);
            }
        }
    }
    for road in roads {
        for _ in 0..density.theta {
            let lane = &road.lanes[rng.random_range(0..road.lanes.len())];
            push(&mut out, rng, lane.id, lane.length, VehicleKind::Truck, speeds.truck);
        }
    }
    out
}

/// Advances every vehicle by `speed * dt` along its lane, wrapping at the end.
///
/// `lane_length` maps a lane id to its length.
pub fn step<T: Scalar>(vehicles: &mut [VehicleState<T>], dt: T, lane_length: impl Fn(LaneId) -> T) {
    debug_assert!(dt > T::zero());
    for v in vehicles.iter_mut() {
        let len = lane_length(v.lane);
        let mut p = (v.position + v.speed * dt) % len;
        if p < T::zero() {
            p = p + len;
        }
        if p >= len {
            p = T::zero();
        }
        v.position = p;
    }
}

/// Truck body footprint aligned to its lane.
pub fn truck_rect<T: Scalar>(lane: &crate::geometry::Lane<T>, position: T, length: T, width: T) -> Rect<T> {
    Rect::oriented(lane.point_at(position), length, width, lane.heading())
}
