//! Scenario documents: a JSON file whose sections mirror the module configs.
//!
//! Every section and field is optional; omissions take the defaults below
//! (two-junction urban layout, 10 MHz channels with 50-RB subchannels, 100 ms
//! periodic traffic with 40-byte payloads). Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::RadioConfig;
use crate::geometry::{Axis, Lane, LaneDirection, LaneId, Obstacle, ObstacleId, ObstacleKind, Point, Rect, Road, Rsu, RsuId, SpaceSpec};
use crate::mobility::DensityConfig;
use crate::sched::SchedulerConfig;
use crate::traffic::{Arrival, CastMode, ClassTable, MessageClass};

/// Number of 10 MHz channels in the 30 MHz band.
pub const CHANNEL_COUNT: usize = 3;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneSpec {
    pub direction: LaneDirection,
    /// Offset of the lane centerline from the road centerline.
    pub offset_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadSpec {
    pub axis: Axis,
    /// Cross-axis coordinate of the road centerline.
    pub centerline_m: f64,
    pub lanes: Vec<LaneSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsuSpec {
    pub position: Point<f64>,
    pub range_m: f64,
    pub channel_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingSpec {
    pub min: Point<f64>,
    pub max: Point<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObstacleConfig {
    pub buildings: Vec<BuildingSpec>,
    pub truck_length_m: f64,
    pub truck_width_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSpec {
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival: Option<Arrival>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_bytes: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cast: Option<CastMode>,
}

impl StreamSpec {
    pub fn named(class: &str) -> Self {
        Self { class: class.to_string(), arrival: None, payload_bytes: None, cast: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    /// Classes added to (or replacing) the built-in table by name.
    pub classes: Vec<MessageClass>,
    /// Streams every active RSU emits.
    pub rsu_streams: Vec<StreamSpec>,
    /// Streams every car emits as channel load.
    pub vehicle_streams: Vec<StreamSpec>,
}

/// Infrastructure-to-vehicle classes sent by each RSU by default.
pub const DEFAULT_RSU_CLASSES: [&str; 9] = ["RSM", "MAP", "SPaT", "RTCM", "SSM", "SRM", "TIM", "RWM", "background"];

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            classes: Vec::new(),
            rsu_streams: DEFAULT_RSU_CLASSES.iter().map(|c| StreamSpec::named(c)).collect(),
            vehicle_streams: vec![StreamSpec::named("BSM-essential")],
        }
    }
}

impl TrafficConfig {
    pub fn class_table(&self) -> ClassTable {
        ClassTable::with_custom(&self.classes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub duration_ms: u64,
    /// Samples generated before this time are left out of metrics.
    pub warmup_ms: u64,
    pub mobility_tick_ms: u64,
    pub car_speed_mps: f64,
    pub truck_speed_mps: f64,
    /// Use only the first N RSUs of the list; `None` uses all.
    pub active_rsus: Option<usize>,
    /// Keep every grant for exclusivity audits.
    pub record_grants: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            duration_ms: 60_000,
            warmup_ms: 1_000,
            mobility_tick_ms: 100,
            car_speed_mps: 14.0,
            truck_speed_mps: 11.0,
            active_rsus: None,
            record_grants: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub space: SpaceSpec<f64>,
    pub lane_width_m: f64,
    pub roads: Vec<RoadSpec>,
    pub rsus: Vec<RsuSpec>,
    pub obstacles: ObstacleConfig,
    pub density: DensityConfig,
    pub radio: RadioConfig,
    pub traffic: TrafficConfig,
    pub scheduler: SchedulerConfig,
    pub engine: EngineConfig,
    pub seed: u64,
}

fn two_lanes(half: f64) -> Vec<LaneSpec> {
    vec![
        LaneSpec { direction: LaneDirection::Positive, offset_m: -half },
        LaneSpec { direction: LaneDirection::Negative, offset_m: half },
    ]
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        // One 60 m block at an inner corner of each junction.
        let b = |x0: f64, y0: f64| BuildingSpec { min: Point::new(x0, y0), max: Point::new(x0 + 60.0, y0 + 60.0) };
        Self {
            buildings: vec![b(56.0, 266.0), b(56.0, 194.0), b(124.0, 266.0), b(124.0, 194.0)],
            truck_length_m: 16.0,
            truck_width_m: 2.5,
        }
    }
}

impl Default for Scenario {
    fn default() -> Self {
        let lane_width_m = 3.5;
        let half = lane_width_m / 2.0;
        let rsu = |x: f64, y: f64, ch: usize| RsuSpec { position: Point::new(x, y), range_m: 150.0, channel_index: ch };
        Self {
            space: SpaceSpec { width_m: 240.0, height_m: 520.0 },
            lane_width_m,
            roads: vec![
                RoadSpec { axis: Axis::Horizontal, centerline_m: 260.0, lanes: two_lanes(half) },
                RoadSpec { axis: Axis::Vertical, centerline_m: 50.0, lanes: two_lanes(-half) },
                RoadSpec { axis: Axis::Vertical, centerline_m: 190.0, lanes: two_lanes(-half) },
            ],
            rsus: vec![rsu(50.0, 260.0, 0), rsu(190.0, 260.0, 1), rsu(120.0, 260.0, 2)],
            obstacles: ObstacleConfig::default(),
            density: DensityConfig::default(),
            radio: RadioConfig::default(),
            traffic: TrafficConfig::default(),
            scheduler: SchedulerConfig::default(),
            engine: EngineConfig::default(),
            seed: 0,
        }
    }
}

/// Parses and validates a scenario document. An empty document yields the
/// defaults.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = if text.trim().is_empty() {
        Scenario::default()
    } else {
        serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(scenario).expect("scenario serializes")
}

impl Scenario {
    /// Collects every violation instead of stopping at the first.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut errors = Vec::new();
        let space = &self.space;
        if !(space.width_m > 0.0) || !(space.height_m > 0.0) {
            errors.push("space dimensions must be > 0".into());
        }
        if !(self.lane_width_m > 0.0) {
            errors.push("lane_width_m must be > 0".into());
        }
        for (i, road) in self.roads.iter().enumerate() {
            if road.lanes.is_empty() {
                errors.push(format!("roads[{i}]: needs at least one lane"));
            }
            let extent = match road.axis {
                Axis::Horizontal => space.height_m,
                Axis::Vertical => space.width_m,
            };
            for (j, lane) in road.lanes.iter().enumerate() {
                let c = road.centerline_m + lane.offset_m;
                if !(c >= 0.0 && c <= extent) {
                    errors.push(format!("roads[{i}].lanes[{j}]: centerline {c} outside space"));
                }
            }
        }
        let mut channels = Vec::new();
        for (i, rsu) in self.rsus.iter().enumerate() {
            if !space.contains(&rsu.position) {
                errors.push(format!(
                    "rsus[{i}]: position ({}, {}) outside space",
                    rsu.position.x, rsu.position.y
                ));
            }
            if !(rsu.range_m > 0.0) {
                errors.push(format!("rsus[{i}]: range_m must be > 0"));
            }
            if rsu.channel_index >= CHANNEL_COUNT {
                errors.push(format!("rsus[{i}]: channel_index {} not in [0, 2]", rsu.channel_index));
            } else if channels.contains(&rsu.channel_index) {
                errors.push(format!("rsus[{i}]: duplicate channel_index {}", rsu.channel_index));
            }
            channels.push(rsu.channel_index);
        }
        if self.engine.active_rsus.is_some_and(|n| n == 0 || n > self.rsus.len()) {
            errors.push(format!(
                "engine.active_rsus must be in [1, {}] for this RSU list",
                self.rsus.len()
            ));
        }
        for (i, b) in self.obstacles.buildings.iter().enumerate() {
            if !(b.max.x > b.min.x && b.max.y > b.min.y) {
                errors.push(format!("obstacles.buildings[{i}]: rectangle must have positive area"));
            }
        }
        if !(self.obstacles.truck_length_m > 0.0 && self.obstacles.truck_width_m > 0.0) {
            errors.push("obstacles: truck dimensions must be > 0".into());
        }
        self.radio.validate(&mut errors);
        self.scheduler.validate(&mut errors);
        self.validate_traffic(&mut errors);
        let e = &self.engine;
        if e.mobility_tick_ms == 0 {
            errors.push("engine.mobility_tick_ms must be > 0".into());
        }
        if !(e.car_speed_mps >= 0.0) || !(e.truck_speed_mps >= 0.0) {
            errors.push("engine speeds must be >= 0".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errors))
        }
    }

    fn validate_traffic(&self, errors: &mut Vec<String>) {
        for (i, c) in self.traffic.classes.iter().enumerate() {
            if !(1..=8).contains(&c.pppp) {
                errors.push(format!("traffic.classes[{i}]: pppp {} not in [1, 8]", c.pppp));
            }
            if c.payload_bytes == 0 {
                errors.push(format!("traffic.classes[{i}]: payload must be > 0"));
            }
            check_arrival(&c.arrival, &format!("traffic.classes[{i}]"), errors);
        }
        let table = self.traffic.class_table();
        for (section, streams) in [("rsu_streams", &self.traffic.rsu_streams), ("vehicle_streams", &self.traffic.vehicle_streams)] {
            for (i, s) in streams.iter().enumerate() {
                let at = format!("traffic.{section}[{i}]");
                if table.lookup(&s.class).is_none() {
                    errors.push(format!("{at}: unknown class {:?}", s.class));
                }
                if s.payload_bytes == Some(0) {
                    errors.push(format!("{at}: payload must be > 0"));
                }
                if let Some(a) = &s.arrival {
                    check_arrival(a, &at, errors);
                }
            }
        }
    }

    /// The RSUs taking part in a run.
    pub fn active_rsus(&self) -> &[RsuSpec] {
        let n = self.engine.active_rsus.unwrap_or(self.rsus.len()).min(self.rsus.len());
        &self.rsus[..n]
    }

    /// Copy of this scenario configured for one experiment cell.
    pub fn for_cell(&self, rsus: usize, lambda: u32, seed: u64) -> Scenario {
        let mut s = self.clone();
        s.engine.active_rsus = Some(rsus);
        s.density.lambda = lambda;
        s.seed = seed;
        s
    }

    pub fn build_roads(&self) -> Vec<Road<f64>> {
        let mut next_lane = 0u32;
        self.roads
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let length = match spec.axis {
                    Axis::Horizontal => self.space.width_m,
                    Axis::Vertical => self.space.height_m,
                };
                let lanes = spec
                    .lanes
                    .iter()
                    .map(|l| {
                        next_lane += 1;
                        Lane {
                            id: LaneId(next_lane - 1),
                            road: i as u32,
                            axis: spec.axis,
                            offset: spec.centerline_m + l.offset_m,
                            direction: l.direction,
                            length,
                        }
                    })
                    .collect();
                Road { id: i as u32, axis: spec.axis, centerline: spec.centerline_m, lanes }
            })
            .collect()
    }

    pub fn build_rsus(&self) -> Vec<Rsu<f64>> {
        self.active_rsus()
            .iter()
            .enumerate()
            .map(|(i, r)| Rsu {
                id: RsuId(i as u32),
                position: r.position,
                range_m: r.range_m,
                channel_index: r.channel_index,
            })
            .collect()
    }

    pub fn build_buildings(&self) -> Vec<Obstacle<f64>> {
        self.obstacles
            .buildings
            .iter()
            .enumerate()
            .map(|(i, b)| Obstacle {
                id: ObstacleId(i as u32),
                kind: ObstacleKind::Building,
                rect: Rect::from_corners(b.min, b.max),
            })
            .collect()
    }
}

fn check_arrival(a: &Arrival, at: &str, errors: &mut Vec<String>) {
    match *a {
        Arrival::Periodic { period_ms } if period_ms == 0 => errors.push(format!("{at}: period must be > 0")),
        Arrival::Event { rate_per_s } if !(rate_per_s > 0.0 && rate_per_s.is_finite()) => {
            errors.push(format!("{at}: event rate must be > 0"))
        }
        _ => {}
    }
}
