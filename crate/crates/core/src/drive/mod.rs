//! "Do not pass" scenario: a vehicle of interest (VoI) stuck behind a truck
//! on a two-lane road, an oncoming vehicle (VtC), and a warning fed by BSMs
//! carried over the sidelink.
//!
//! Coordinates: the road runs along x. The VoI's lane is centered at
//! y = -lane_width/2 and travels +x; the oncoming lane is centered at
//! y = +lane_width/2 and travels -x.

pub mod autopilot;
pub mod bridge;
pub mod nearcrash;
pub mod sidelink;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Obstacle, ObstacleId, ObstacleKind, Point, Rect};

pub use autopilot::{Autopilot, Observation, Policy};
pub use nearcrash::{detect_near_crash, time_to_collision, NearCrashDetector, NearCrashEvent, Outcome, Trigger};
pub use sidelink::{Sidelink, SidelinkPath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    pub lane_width_m: f64,
    pub car_length_m: f64,
    pub car_width_m: f64,
    pub truck_length_m: f64,
    pub truck_width_m: f64,
    /// Full throttle acceleration.
    pub max_accel_mps2: f64,
    /// Full brake deceleration.
    pub max_brake_mps2: f64,
    /// Lateral speed at full steering.
    pub lateral_speed_mps: f64,
    pub voi_speed_mps: f64,
    pub desired_speed_mps: f64,
    pub truck_speed_mps: f64,
    pub truck_speed_jitter_mps: f64,
    /// Truck center ahead of the VoI center at start, drawn uniformly.
    pub truck_ahead_m: (f64, f64),
    pub vtc_speed_mps: f64,
    pub vtc_speed_jitter_mps: f64,
    /// VtC center ahead of the VoI center at start, drawn uniformly.
    pub vtc_ahead_m: (f64, f64),
    pub bsm_period_ms: f64,
    /// A BSM older than this no longer supports a warning.
    pub warning_window_ms: f64,
    /// Predicted meeting sooner than this counts as a conflict.
    pub pass_horizon_s: f64,
    pub ttc_threshold_s: f64,
    pub evasive_decel_mps2: f64,
    pub evasive_gap_m: f64,
    /// How far the driver (or autopilot) can see with a clear line of sight.
    pub vision_range_m: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            lane_width_m: 3.5,
            car_length_m: 4.5,
            car_width_m: 1.8,
            truck_length_m: 16.0,
            truck_width_m: 2.5,
            max_accel_mps2: 3.0,
            max_brake_mps2: 8.0,
            lateral_speed_mps: 2.5,
            voi_speed_mps: 16.0,
            desired_speed_mps: 20.0,
            truck_speed_mps: 11.0,
            truck_speed_jitter_mps: 0.5,
            truck_ahead_m: (35.0, 45.0),
            vtc_speed_mps: 15.0,
            vtc_speed_jitter_mps: 1.0,
            vtc_ahead_m: (120.0, 140.0),
            bsm_period_ms: 100.0,
            warning_window_ms: 300.0,
            pass_horizon_s: 8.0,
            ttc_threshold_s: 1.5,
            evasive_decel_mps2: 4.9,
            evasive_gap_m: 30.0,
            vision_range_m: 200.0,
        }
    }
}

/// Driver controls. `t` is the client timestamp in ms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlInput {
    #[serde(default)]
    pub t: f64,
    /// -1 (right) to 1 (left).
    pub steer: f64,
    pub throttle: f64,
    pub brake: f64,
}

impl ControlInput {
    pub fn brake_only() -> Self {
        Self { t: 0.0, steer: 0.0, throttle: 0.0, brake: 1.0 }
    }

    pub fn is_valid(&self) -> bool {
        self.t.is_finite()
            && (-1.0..=1.0).contains(&self.steer)
            && (0.0..=1.0).contains(&self.throttle)
            && (0.0..=1.0).contains(&self.brake)
    }
}

/// A vehicle body: center, speed along its heading, footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    /// Radians; 0 travels +x, pi travels -x.
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl Body {
    pub fn rect(&self) -> Rect<f64> {
        Rect::oriented(self.center(), self.length, self.width, self.heading)
    }

    pub fn center(&self) -> Point<f64> {
        Point::new(self.x, self.y)
    }

    pub fn front_x(&self) -> f64 {
        self.x + self.length / 2.0 * self.heading.cos()
    }

    pub fn rear_x(&self) -> f64 {
        self.x - self.length / 2.0 * self.heading.cos()
    }

    fn advance(&mut self, dt: f64) {
        self.x += self.speed * self.heading.cos() * dt;
    }
}

/// Gap along x from the VoI's front bumper to the near end of `other`,
/// negative once `other` is alongside or behind.
pub fn longitudinal_gap(voi: &Body, other: &Body) -> f64 {
    other.x - other.length / 2.0 - (voi.x + voi.length / 2.0)
}

/// The truck as a radio and sight obstacle.
pub fn truck_obstacle(truck: &Body) -> Obstacle<f64> {
    Obstacle { id: ObstacleId(0), kind: ObstacleKind::Truck, rect: truck.rect() }
}

/// One tick of history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t_ms: f64,
    pub voi: Body,
    pub vtc: Body,
    pub truck: Body,
    /// VoI deceleration applied this tick (>= 0).
    pub decel_mps2: f64,
    pub steer: f64,
    pub warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct InFlight {
    generated_ms: f64,
    arrives_ms: f64,
    state: Body,
}

/// Latest VtC BSM held by the VoI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceivedBsm {
    pub generated_ms: f64,
    pub received_ms: f64,
    /// VtC state as of generation.
    pub state: Body,
}

#[derive(Debug, Clone)]
pub struct DriveWorld {
    pub cfg: DriveConfig,
    pub t_ms: f64,
    pub tick: u64,
    pub voi: Body,
    pub vtc: Body,
    pub truck: Body,
    pub warning: bool,
    pub last_bsm: Option<ReceivedBsm>,
    pub detector: NearCrashDetector,
    in_flight: VecDeque<InFlight>,
    next_bsm_ms: f64,
    last_frame: Option<Frame>,
}

impl DriveWorld {
    /// Fresh episode with start positions and speeds jittered by `seed`.
    pub fn new(cfg: DriveConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = cfg.lane_width_m / 2.0;
        let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
        let truck_x = draw(cfg.truck_ahead_m);
        let vtc_x = draw(cfg.vtc_ahead_m);
        let truck_speed = cfg.truck_speed_mps + draw((-cfg.truck_speed_jitter_mps, cfg.truck_speed_jitter_mps));
        let vtc_speed = cfg.vtc_speed_mps + draw((-cfg.vtc_speed_jitter_mps, cfg.vtc_speed_jitter_mps));
        let car = |x, y, speed, heading| Body { x, y, speed, heading, length: cfg.car_length_m, width: cfg.car_width_m };
        Self {
            voi: car(0.0, -half, cfg.voi_speed_mps, 0.0),
            vtc: car(vtc_x, half, vtc_speed, std::f64::consts::PI),
            truck: Body {
                x: truck_x,
                y: -half,
                speed: truck_speed,
                heading: 0.0,
                length: cfg.truck_length_m,
                width: cfg.truck_width_m,
            },
            detector: NearCrashDetector::new(&cfg),
            cfg,
            t_ms: 0.0,
            tick: 0,
            warning: false,
            last_bsm: None,
            in_flight: VecDeque::new(),
            next_bsm_ms: 0.0,
            last_frame: None,
        }
    }

    pub fn outcome(&self) -> Outcome {
        self.detector.outcome()
    }

    /// Age of the newest received VtC BSM, from its generation.
    pub fn bsm_age_ms(&self) -> Option<f64> {
        self.last_bsm.map(|b| self.t_ms - b.generated_ms)
    }

    pub fn last_frame(&self) -> Option<&Frame> {
        self.last_frame.as_ref()
    }

    /// Whether the VtC, as last reported, is on course to meet the VoI
    /// within the pass horizon.
    fn conflict_predicted(&self, bsm: &ReceivedBsm) -> bool {
        let mut vtc = bsm.state;
        vtc.advance((self.t_ms - bsm.generated_ms) / 1000.0);
        let gap = longitudinal_gap(&self.voi, &vtc);
        time_to_collision(gap, self.voi.speed, vtc.speed).is_some_and(|t| t < self.cfg.pass_horizon_s)
    }
}

/// Advances the world by `dt` seconds under `input`.
///
/// The VtC and truck hold their speed. VtC BSMs are generated every BSM
/// period and carried by `link`; a delivered BSM can raise the warning in the
/// tick it arrives. After a crash all motion stops.
pub fn drive_step(world: &mut DriveWorld, input: &ControlInput, dt: f64, link: &mut dyn Sidelink) {
    debug_assert!(dt > 0.0 && dt <= 0.1, "dt {dt} outside (0, 0.1]");
    let dt = dt.clamp(1e-6, 0.1);
    let cfg = &world.cfg;
    let steer = input.steer.clamp(-1.0, 1.0);
    let throttle = input.throttle.clamp(0.0, 1.0);
    let brake = input.brake.clamp(0.0, 1.0);
    let mut decel = 0.0;
    if world.outcome() != Outcome::Crash {
        let accel = throttle * cfg.max_accel_mps2 - brake * cfg.max_brake_mps2;
        let v0 = world.voi.speed;
        world.voi.speed = (v0 + accel * dt).max(0.0);
        decel = ((v0 - world.voi.speed) / dt).max(0.0);
        let edge = cfg.lane_width_m - cfg.car_width_m / 2.0;
        world.voi.y = (world.voi.y + steer * cfg.lateral_speed_mps * dt).clamp(-edge, edge);
        world.voi.advance(dt);
        world.vtc.advance(dt);
        world.truck.advance(dt);
    }
    world.t_ms += dt * 1000.0;
    world.tick += 1;

    let truck = [truck_obstacle(&world.truck)];
    while world.next_bsm_ms <= world.t_ms {
        if let Some(latency) = link.transmit(&world.vtc, &world.voi, &truck) {
            world.in_flight.push_back(InFlight {
                generated_ms: world.next_bsm_ms,
                arrives_ms: world.next_bsm_ms + latency,
                state: world.vtc,
            });
        }
        world.next_bsm_ms += world.cfg.bsm_period_ms;
    }
    let now = world.t_ms;
    let mut i = 0;
    while i < world.in_flight.len() {
        let m = world.in_flight[i];
        if m.arrives_ms <= now {
            world.in_flight.remove(i);
            if world.last_bsm.is_none_or(|b| b.generated_ms < m.generated_ms) {
                world.last_bsm = Some(ReceivedBsm { generated_ms: m.generated_ms, received_ms: now, state: m.state });
            }
        } else {
            i += 1;
        }
    }
    world.warning = world
        .last_bsm
        .is_some_and(|b| now - b.received_ms <= world.cfg.warning_window_ms && world.conflict_predicted(&b));

    let frame = Frame {
        t_ms: now,
        voi: world.voi,
        vtc: world.vtc,
        truck: world.truck,
        decel_mps2: decel,
        steer,
        warning: world.warning,
    };
    world.detector.observe(&frame);
    world.last_frame = Some(frame);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub seed: u64,
    pub policy: Policy,
    pub bsm_enabled: bool,
    /// Added on top of the sidelink's grant-to-reception latency.
    pub extra_latency_ms: f64,
    pub duration_s: f64,
    pub dt_s: f64,
    pub drive: DriveConfig,
}

impl EpisodeConfig {
    pub fn new(seed: u64, policy: Policy) -> Self {
        Self {
            seed,
            policy,
            bsm_enabled: true,
            extra_latency_ms: 0.0,
            duration_s: 12.0,
            dt_s: 0.02,
            drive: DriveConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub event: Option<NearCrashEvent>,
    pub ticks: u64,
    pub first_bsm_ms: Option<f64>,
    pub first_warning_ms: Option<f64>,
    /// The VoI got fully ahead of the truck.
    pub passed_truck: bool,
    pub history: Vec<Frame>,
}

/// Runs one episode with the autopilot at the wheel, stopping early on a crash.
pub fn run_episode(cfg: &EpisodeConfig) -> EpisodeResult {
    let mut world = DriveWorld::new(cfg.drive.clone(), cfg.seed);
    let mut link = SidelinkPath::default();
    link.enabled = cfg.bsm_enabled;
    link.extra_latency_ms = cfg.extra_latency_ms;
    let mut pilot = Autopilot::new(cfg.policy, &cfg.drive);
    let ticks = (cfg.duration_s / cfg.dt_s).round() as u64;
    let mut history = Vec::with_capacity(ticks as usize);
    let (mut first_bsm_ms, mut first_warning_ms, mut passed_truck) = (None, None, false);
    for _ in 0..ticks {
        let obs = Observation::from_world(&world);
        let input = pilot.control(&obs);
        drive_step(&mut world, &input, cfg.dt_s, &mut link);
        if first_bsm_ms.is_none() {
            first_bsm_ms = world.last_bsm.map(|b| b.received_ms);
        }
        if first_warning_ms.is_none() && world.warning {
            first_warning_ms = Some(world.t_ms);
        }
        passed_truck |= world.voi.rear_x() > world.truck.front_x();
        history.extend(world.last_frame().copied());
        if world.outcome() == Outcome::Crash {
            break;
        }
    }
    EpisodeResult {
        outcome: world.outcome(),
        event: world.detector.event().cloned(),
        ticks: world.tick,
        first_bsm_ms,
        first_warning_ms,
        passed_truck,
        history,
    }
}
