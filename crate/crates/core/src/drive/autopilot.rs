//! Scripted driver for headless episodes.

use serde::{Deserialize, Serialize};

use crate::geometry::los_blocked;

use super::{longitudinal_gap, time_to_collision, truck_obstacle, Body, ControlInput, DriveConfig, DriveWorld};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Passes whenever stuck behind a slower truck.
    PassBlind,
    /// Passes only without an active warning; aborts when one appears.
    PassWithWarnings,
}

/// What the driver knows: its own state, the truck, the VtC only when in
/// clear sight, and the warning lamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub t_ms: f64,
    pub voi: Body,
    pub truck: Body,
    pub vtc: Option<Body>,
    pub warning: bool,
}

impl Observation {
    pub fn new(t_ms: f64, voi: Body, truck: Body, vtc: Body, warning: bool, vision_range_m: f64) -> Self {
        let visible = voi.center().distance(&vtc.center()) <= vision_range_m
            && !los_blocked(voi.center(), vtc.center(), &[truck_obstacle(&truck)], &[]);
        Self { t_ms, voi, truck, vtc: visible.then_some(vtc), warning }
    }

    pub fn from_world(w: &DriveWorld) -> Self {
        Self::new(w.t_ms, w.voi, w.truck, w.vtc, w.warning, w.cfg.vision_range_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Follow,
    PullOut,
    Overtake,
    Return,
    Abort,
    Evade,
    Cruise,
}

/// Gap kept behind the truck when following.
const FOLLOW_GAP_M: f64 = 10.0;
/// Gap at or below which a pass starts.
const PASS_TRIGGER_GAP_M: f64 = 15.0;
/// Clearance ahead of the truck before merging back.
const MERGE_CLEARANCE_M: f64 = 8.0;
/// Seen-VtC time to collision that makes the driver bail out hard.
const EVADE_TTC_S: f64 = 2.0;
const ABORT_DECEL_MPS2: f64 = 3.0;
const LANE_TOLERANCE_M: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct Autopilot {
    policy: Policy,
    phase: Phase,
    lane_y: f64,
    cfg: DriveConfig,
}

impl Autopilot {
    pub fn new(policy: Policy, cfg: &DriveConfig) -> Self {
        Self { policy, phase: Phase::Follow, lane_y: cfg.lane_width_m / 2.0, cfg: cfg.clone() }
    }

    fn steer_to(&self, voi: &Body, target_y: f64) -> f64 {
        ((target_y - voi.y) / (self.cfg.lateral_speed_mps * 0.1)).clamp(-1.0, 1.0)
    }

    /// Throttle/brake pair producing `accel`, capped at `max_brake`.
    fn pedals(&self, accel: f64, max_brake: f64) -> (f64, f64) {
        if accel >= 0.0 {
            ((accel / self.cfg.max_accel_mps2).min(1.0), 0.0)
        } else {
            (0.0, ((-accel).min(max_brake) / self.cfg.max_brake_mps2).min(1.0))
        }
    }

    fn track_speed(&self, v: f64, target: f64) -> (f64, f64) {
        self.pedals(1.5 * (target - v), self.cfg.max_accel_mps2)
    }

    pub fn control(&mut self, o: &Observation) -> ControlInput {
        let desired = self.cfg.desired_speed_mps;
        let own_lane = -self.lane_y;
        let truck_gap = longitudinal_gap(&o.voi, &o.truck);
        let vtc_ttc = o.vtc.and_then(|v| time_to_collision(longitudinal_gap(&o.voi, &v), o.voi.speed, v.speed));
        let out_of_lane = o.voi.y > own_lane + LANE_TOLERANCE_M;

        if matches!(self.phase, Phase::PullOut | Phase::Overtake | Phase::Abort)
            && vtc_ttc.is_some_and(|t| t < EVADE_TTC_S)
        {
            self.phase = Phase::Evade;
        }
        if self.policy == Policy::PassWithWarnings && o.warning && matches!(self.phase, Phase::PullOut | Phase::Overtake) {
            self.phase = Phase::Abort;
        }

        let behind_truck = o.voi.front_x() < o.truck.rear_x() - 1.0;
        let clear_ahead = o.voi.rear_x() > o.truck.front_x() + MERGE_CLEARANCE_M;
        let (mut steer, throttle, brake);
        match self.phase {
            Phase::Follow => {
                let target = (o.truck.speed + 0.5 * (truck_gap - FOLLOW_GAP_M)).clamp(0.0, desired);
                (throttle, brake) = self.track_speed(o.voi.speed, target);
                steer = self.steer_to(&o.voi, own_lane);
                let wants_pass = truck_gap <= PASS_TRIGGER_GAP_M && o.truck.speed < desired;
                let allowed = match self.policy {
                    Policy::PassBlind => true,
                    Policy::PassWithWarnings => !o.warning,
                };
                if wants_pass && allowed && !out_of_lane {
                    self.phase = Phase::PullOut;
                }
            }
            Phase::PullOut | Phase::Overtake => {
                (throttle, brake) = self.track_speed(o.voi.speed, desired + 5.0);
                steer = self.steer_to(&o.voi, self.lane_y);
                if self.phase == Phase::PullOut && o.voi.y >= self.lane_y - LANE_TOLERANCE_M {
                    self.phase = Phase::Overtake;
                }
                if clear_ahead {
                    self.phase = Phase::Return;
                }
            }
            Phase::Return => {
                (throttle, brake) = self.track_speed(o.voi.speed, desired);
                steer = self.steer_to(&o.voi, own_lane);
                if !out_of_lane {
                    self.phase = Phase::Cruise;
                }
            }
            Phase::Cruise => {
                (throttle, brake) = self.track_speed(o.voi.speed, desired);
                steer = self.steer_to(&o.voi, own_lane);
            }
            Phase::Abort => {
                if behind_truck {
                    (throttle, brake) = self.track_speed(o.voi.speed, o.truck.speed);
                    steer = self.steer_to(&o.voi, own_lane);
                    if !out_of_lane {
                        self.phase = Phase::Follow;
                    }
                } else {
                    (throttle, brake) = self.pedals(-ABORT_DECEL_MPS2, ABORT_DECEL_MPS2);
                    steer = self.steer_to(&o.voi, self.lane_y);
                }
            }
            Phase::Evade => {
                (throttle, brake) = (0.0, 1.0);
                steer = if behind_truck || clear_ahead { -1.0 } else { 0.0 };
                if !out_of_lane {
                    self.phase = Phase::Follow;
                }
            }
        }
        if steer.abs() < 1e-12 {
            steer = 0.0;
        }
        ControlInput { t: o.t_ms, steer, throttle, brake }
    }
}
