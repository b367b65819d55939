//! Slot-level discrete-event loop.
//!
//! Each 1 ms slot: new messages become scheduling requests, stale ones
//! expire, every channel's gNB grants cells, and granted transmissions are
//! evaluated at their receivers. Mobility and the link cache advance once per
//! mobility tick. After the traffic horizon the loop drains until every
//! message has a terminal state.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::{evaluate_link, LinkEnd, LinkState, SHADOW_SIGMA_LOS_DB, SHADOW_SIGMA_NLOS_DB};
use crate::geometry::{Lane, Obstacle, ObstacleId, ObstacleKind, Point, Rsu, RsuId};
use crate::mobility::{self, place_vehicles, truck_rect, Speeds, VehicleKind, VehicleState};
use crate::scenario::{Scenario, ScenarioError, StreamSpec};
use crate::sched::{
    configured_grant, harq_step, schedule_queue, ConfiguredSeries, Feedback, Grant, GrantId, GrantKind, GrantMode,
    PendingQueue, ResourceGrid, SchedRequest,
};
use crate::traffic::{generate, Arrival, CastMode, ClassId, ClassTable, Message, MessageId, Stream};
use crate::NodeId;

// Independent random streams derived from the scenario seed.
const PLACEMENT_STREAM: u64 = 1;
const TARGET_STREAM: u64 = 2;
const SHADOW_STREAM: u64 = 3;

/// Slots of grid history kept for CBR queries.
const GRID_RETENTION_SLOTS: u64 = 1000;

/// One successful reception of an RSU message by a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencySample {
    pub message: MessageId,
    pub class: ClassId,
    pub receiver: u32,
    pub generation_ms: u64,
    pub reception_ms: u64,
}

impl LatencySample {
    pub fn latency_ms(&self) -> u64 {
        self.reception_ms - self.generation_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantRecord {
    pub channel: usize,
    pub slot: u64,
    pub subchannel: usize,
    pub grant: GrantId,
    pub message: MessageId,
    pub kind: GrantKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// RSU messages generated.
    pub generated: u64,
    /// RSU messages received by at least one vehicle.
    pub delivered: u64,
    /// RSU messages dropped at the expiry deadline before transmission.
    pub expired_deadline: u64,
    /// RSU messages transmitted with nobody receiving them.
    pub expired_no_receiver: u64,
    /// Unicast/groupcast messages whose HARQ attempts ran out undelivered.
    pub failed: u64,
    pub samples: u64,
    pub load_generated: u64,
    pub load_transmitted: u64,
    pub load_expired: u64,
    /// Requests still queued when traffic generation stopped.
    pub pending_at_horizon: u64,
    pub grants: u64,
    /// Channel busy ratio per active RSU channel over the whole run.
    pub cbr: Vec<f64>,
    /// Slot at which the run ended, after draining.
    pub end_slot: u64,
}

impl RunSummary {
    pub fn expired(&self) -> u64 {
        self.expired_deadline + self.expired_no_receiver
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub samples: Vec<LatencySample>,
    pub summary: RunSummary,
    /// Every grant, when `engine.record_grants` is set.
    pub grants: Vec<GrantRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Pending,
    Delivered,
    ExpiredDeadline,
    NoReceiver,
    Failed,
}

#[derive(Debug, Clone)]
struct Tracked {
    /// Audience for unicast/groupcast, fixed at generation.
    targets: Vec<u32>,
    received: Vec<u32>,
    fate: Fate,
}

/// Instantaneous simulation state shared with observers.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub clock_ms: u64,
    pub lanes: Vec<Lane<f64>>,
    pub vehicles: Vec<VehicleState<f64>>,
    pub rsus: Vec<Rsu<f64>>,
    /// Buildings followed by truck bodies.
    pub obstacles: Vec<Obstacle<f64>>,
    pub grids: Vec<ResourceGrid>,
    pub queues: Vec<PendingQueue>,
    /// Cached RSU-to-vehicle link per vehicle (for its associated RSU).
    pub links: Vec<Option<LinkState>>,
}

impl WorldState {
    pub fn vehicle_position(&self, idx: usize) -> Point<f64> {
        let v = &self.vehicles[idx];
        self.lanes[v.lane.0 as usize].point_at(v.position)
    }
}

pub struct Simulation {
    scenario: Scenario,
    classes: ClassTable,
    world: WorldState,
    building_count: usize,
    messages: Vec<Message>,
    tracked: Vec<Option<Tracked>>,
    next_message: usize,
    /// Future transmissions keyed by slot: (channel index, grant).
    scheduled: BTreeMap<u64, Vec<(usize, Grant)>>,
    series: Vec<Option<(usize, ConfiguredSeries)>>,
    configured_period: Option<u64>,
    transmissions: Vec<u64>,
    target_rng: ChaCha8Rng,
    shadow_rng: Option<ChaCha8Rng>,
    samples: Vec<LatencySample>,
    grant_log: Vec<GrantRecord>,
    summary: RunSummary,
    slot: u64,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn build_streams(specs: &[StreamSpec], sources: &[NodeId], table: &ClassTable) -> Vec<Stream> {
    let mut out = Vec::new();
    for &source in sources {
        for spec in specs {
            let class = table.lookup(&spec.class).expect("validated class name");
            let mut s = Stream::new(source, class, table, spec.cast.unwrap_or_default());
            if let Some(a) = spec.arrival {
                s.arrival = a;
            }
            if let Some(p) = spec.payload_bytes {
                s.payload_bytes = p;
            }
            out.push(s);
        }
    }
    out
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let scenario = scenario.clone();
        let classes = scenario.traffic.class_table();
        let roads = scenario.build_roads();
        let lanes: Vec<Lane<f64>> = roads.iter().flat_map(|r| r.lanes.iter().cloned()).collect();
        let rsus = scenario.build_rsus();
        let buildings = scenario.build_buildings();
        let building_count = buildings.len();
        let speeds = Speeds { car: scenario.engine.car_speed_mps, truck: scenario.engine.truck_speed_mps };
        let vehicles = place_vehicles(&roads, scenario.density, speeds, &mut stream_rng(scenario.seed, PLACEMENT_STREAM));

        let grids = rsus
            .iter()
            .map(|r| ResourceGrid::from_config(r.channel_index, &scenario.scheduler))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?;
        let queues = rsus.iter().map(|_| PendingQueue::new(scenario.scheduler.processing_delay_slots)).collect();

        let rsu_sources: Vec<NodeId> = rsus.iter().map(|r| NodeId::Rsu(r.id.0)).collect();
        let car_sources: Vec<NodeId> = vehicles
            .iter()
            .filter(|v| v.kind == VehicleKind::Car)
            .map(|v| NodeId::Vehicle(v.id.0))
            .collect();
        let mut streams = build_streams(&scenario.traffic.rsu_streams, &rsu_sources, &classes);
        let vehicle_streams = build_streams(&scenario.traffic.vehicle_streams, &car_sources, &classes);
        let configured_period = match scenario.scheduler.vehicle_grants {
            GrantMode::Configured => vehicle_streams.iter().find_map(|s| match s.arrival {
                Arrival::Periodic { period_ms } => Some(period_ms),
                Arrival::Event { .. } => None,
            }),
            GrantMode::Dynamic => None,
        };
        streams.extend(vehicle_streams);
        let messages = generate(&streams, scenario.engine.duration_ms, scenario.seed);

        let vehicle_count = vehicles.len();
        let shadow_rng = scenario.radio.shadowing.then(|| stream_rng(scenario.seed, SHADOW_STREAM));
        let mut sim = Self {
            classes,
            world: WorldState {
                clock_ms: 0,
                lanes,
                vehicles,
                rsus,
                obstacles: buildings,
                grids,
                queues,
                links: vec![None; vehicle_count],
            },
            building_count,
            tracked: vec![None; messages.len()],
            messages,
            next_message: 0,
            scheduled: BTreeMap::new(),
            series: vec![None; vehicle_count],
            configured_period,
            transmissions: vec![0; rsu_sources.len()],
            target_rng: stream_rng(scenario.seed, TARGET_STREAM),
            shadow_rng,
            samples: Vec::new(),
            grant_log: Vec::new(),
            summary: RunSummary::default(),
            slot: 0,
            scenario,
        };
        sim.refresh_world();
        Ok(sim)
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Truck bodies, associations, and the link cache for the current positions.
    fn refresh_world(&mut self) {
        let w = &mut self.world;
        w.obstacles.truncate(self.building_count);
        let (len, width) = (self.scenario.obstacles.truck_length_m, self.scenario.obstacles.truck_width_m);
        for (i, v) in w.vehicles.iter().enumerate() {
            if v.kind == VehicleKind::Truck {
                w.obstacles.push(Obstacle {
                    id: ObstacleId((self.building_count + i) as u32),
                    kind: ObstacleKind::Truck,
                    rect: truck_rect(&w.lanes[v.lane.0 as usize], v.position, len, width),
                });
            }
        }
        let radio = &self.scenario.radio;
        for i in 0..w.vehicles.len() {
            if w.vehicles[i].kind != VehicleKind::Car || w.rsus.is_empty() {
                continue;
            }
            let p = w.lanes[w.vehicles[i].lane.0 as usize].point_at(w.vehicles[i].position);
            let nearest = w
                .rsus
                .iter()
                .min_by(|a, b| a.position.distance(&p).total_cmp(&b.position.distance(&p)))
                .expect("at least one RSU");
            w.vehicles[i].association = Some(nearest.id);
            let tx = LinkEnd {
                node: NodeId::Rsu(nearest.id.0),
                position: nearest.position,
                antenna_height_m: radio.rsu_height_m,
                body: None,
            };
            let rx = LinkEnd {
                node: NodeId::Vehicle(i as u32),
                position: p,
                antenna_height_m: radio.vehicle_height_m,
                body: None,
            };
            w.links[i] = Some(evaluate_link(&tx, &rx, nearest.range_m, &w.obstacles, radio, None));
        }
        if self.configured_period.is_some() {
            self.refresh_configured_grants();
        }
    }

    fn refresh_configured_grants(&mut self) {
        let period = self.configured_period.expect("configured mode");
        let from = self.slot + self.scenario.scheduler.processing_delay_slots;
        for i in 0..self.world.vehicles.len() {
            let Some(RsuId(rsu)) = self.world.vehicles[i].association else { continue };
            let rsu = rsu as usize;
            if self.series[i].as_ref().is_some_and(|(ch, _)| *ch == rsu) {
                continue;
            }
            if let Some((ch, old)) = self.series[i].take() {
                self.world.grids[ch].release_series(old.id);
                // Transmissions already committed to the series keep their cells.
                let committed: Vec<(u64, usize)> = self
                    .scheduled
                    .range(self.slot..)
                    .flat_map(|(&slot, due)| due.iter().filter(|(c, g)| *c == ch && g.id == old.id).map(move |(_, g)| (slot, g.subchannel)))
                    .collect();
                for (slot, sc) in committed {
                    self.world.grids[ch].reserve(slot, sc).expect("released cell is free");
                }
            }
            match configured_grant(NodeId::Vehicle(i as u32), period, &mut self.world.grids[rsu], from) {
                Ok(s) => self.series[i] = Some((rsu, s)),
                Err(e) => log::debug!("vehicle {i}: configured grant rejected ({e}); using dynamic grants"),
            }
        }
    }

    fn channel_of(&self, source: NodeId) -> Option<usize> {
        match source {
            NodeId::Rsu(i) => Some(i as usize),
            NodeId::Vehicle(i) => self.world.vehicles[i as usize].association.map(|r| r.0 as usize),
        }
    }

    /// Cars currently associated with RSU `rsu` and inside its range.
    fn audience(&self, rsu: usize) -> Vec<u32> {
        self.world
            .vehicles
            .iter()
            .enumerate()
            .filter(|(i, v)| {
                v.association == Some(RsuId(rsu as u32)) && self.world.links[*i].is_some_and(|l| l.distance <= self.world.rsus[rsu].range_m)
            })
            .map(|(i, _)| i as u32)
            .collect()
    }

    fn admit(&mut self, idx: usize) {
        let msg = self.messages[idx].clone();
        let is_rsu = matches!(msg.source, NodeId::Rsu(_));
        if is_rsu {
            self.summary.generated += 1;
        } else {
            self.summary.load_generated += 1;
        }
        let Some(channel) = self.channel_of(msg.source) else {
            // A vehicle with no RSU at all has nowhere to send.
            self.summary.load_expired += 1;
            return;
        };
        if is_rsu {
            let targets = match msg.cast {
                CastMode::Broadcast => Vec::new(),
                CastMode::Groupcast => self.audience(channel),
                CastMode::Unicast => {
                    let audience = self.audience(channel);
                    if audience.is_empty() {
                        Vec::new()
                    } else {
                        vec![audience[self.target_rng.random_range(0..audience.len())]]
                    }
                }
            };
            if msg.cast != CastMode::Broadcast && targets.is_empty() {
                self.tracked[idx] = Some(Tracked { targets, received: Vec::new(), fate: Fate::NoReceiver });
                self.summary.expired_no_receiver += 1;
                return;
            }
            self.tracked[idx] = Some(Tracked { targets, received: Vec::new(), fate: Fate::Pending });
        }
        if let NodeId::Vehicle(v) = msg.source {
            if let Some((ch, series)) = self.series[v as usize].clone() {
                let slot = series.next_at_or_after(self.slot);
                let grant = Grant {
                    id: series.id,
                    message: msg.id,
                    tx: msg.source,
                    slot,
                    subchannel: series.subchannel,
                    kind: GrantKind::ConfiguredPeriodic,
                    attempt: 1,
                };
                self.record_grant(ch, &grant);
                self.scheduled.entry(slot).or_default().push((ch, grant));
                return;
            }
        }
        self.world.queues[channel].push(SchedRequest {
            message: msg.id,
            tx: msg.source,
            pppp: msg.pppp,
            arrival_slot: self.slot,
        });
    }

    fn record_grant(&mut self, channel: usize, g: &Grant) {
        self.summary.grants += 1;
        if self.scenario.engine.record_grants {
            self.grant_log.push(GrantRecord {
                channel,
                slot: g.slot,
                subchannel: g.subchannel,
                grant: g.id,
                message: g.message,
                kind: g.kind,
            });
        }
    }

    fn expire(&mut self, requests: Vec<SchedRequest>) {
        for r in requests {
            match r.tx {
                NodeId::Rsu(_) => {
                    let t = self.tracked[r.message.0 as usize].as_mut().expect("tracked RSU message");
                    t.fate = Fate::ExpiredDeadline;
                    self.summary.expired_deadline += 1;
                }
                NodeId::Vehicle(_) => self.summary.load_expired += 1,
            }
        }
    }

    fn link_success(&mut self, vehicle: usize) -> bool {
        let Some(link) = self.world.links[vehicle] else { return false };
        let Some(rng) = self.shadow_rng.as_mut() else { return link.receivable };
        let sigma = if link.los { SHADOW_SIGMA_LOS_DB } else { SHADOW_SIGMA_NLOS_DB };
        let shadow = Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
        let rsu = link.tx;
        let range = match rsu {
            NodeId::Rsu(r) => self.world.rsus[r as usize].range_m,
            NodeId::Vehicle(_) => self.scenario.radio.sensing_range_m,
        };
        link.snr_db - shadow >= self.scenario.radio.snr_threshold_db && link.distance <= range
    }

    fn transmit(&mut self, channel: usize, grant: Grant) {
        self.transmissions[channel] += 1;
        let idx = grant.message.0 as usize;
        let msg = self.messages[idx].clone();
        if !matches!(msg.source, NodeId::Rsu(_)) {
            self.summary.load_transmitted += 1;
            return;
        }
        let reception_ms = grant.slot + 1;
        let tracked = self.tracked[idx].take().expect("tracked RSU message");
        let candidates: Vec<u32> = match msg.cast {
            CastMode::Broadcast => self.audience(channel),
            _ => tracked.targets.iter().copied().filter(|t| !tracked.received.contains(t)).collect(),
        };
        let mut tracked = tracked;
        for rx in candidates {
            if self.world.vehicles[rx as usize].association != Some(RsuId(channel as u32)) {
                continue;
            }
            if self.link_success(rx as usize) {
                tracked.received.push(rx);
                self.samples.push(LatencySample {
                    message: msg.id,
                    class: msg.class,
                    receiver: rx,
                    generation_ms: msg.generation_ms,
                    reception_ms,
                });
            }
        }
        if msg.cast == CastMode::Broadcast {
            tracked.fate = if tracked.received.is_empty() { Fate::NoReceiver } else { Fate::Delivered };
        } else {
            let all = tracked.targets.iter().all(|t| tracked.received.contains(t));
            let feedback = if all { Feedback::Ack } else { Feedback::Nack };
            let max = self.scenario.scheduler.harq_max_attempts;
            match harq_step(&grant, feedback, msg.cast, max, &mut self.world.grids[channel]) {
                Some(re) => {
                    self.record_grant(channel, &re);
                    self.scheduled.entry(re.slot).or_default().push((channel, re));
                    self.tracked[idx] = Some(tracked);
                    return;
                }
                None if tracked.received.is_empty() => tracked.fate = Fate::Failed,
                None => tracked.fate = Fate::Delivered,
            }
        }
        match tracked.fate {
            Fate::Delivered => self.summary.delivered += 1,
            Fate::NoReceiver => self.summary.expired_no_receiver += 1,
            Fate::Failed => self.summary.failed += 1,
            Fate::Pending | Fate::ExpiredDeadline => unreachable!("transmission leaves a terminal fate"),
        }
        self.tracked[idx] = Some(tracked);
    }

    fn busy(&self) -> bool {
        self.next_message < self.messages.len()
            || !self.scheduled.is_empty()
            || self.world.queues.iter().any(|q| !q.is_empty())
    }

    /// Advances one slot. Returns false once the run has fully drained.
    pub fn step_slot(&mut self) -> bool {
        let slot = self.slot;
        let horizon = self.scenario.engine.duration_ms;
        if slot >= horizon && !self.busy() {
            return false;
        }
        let tick = self.scenario.engine.mobility_tick_ms;
        if slot > 0 && slot % tick == 0 {
            let lanes = &self.world.lanes;
            mobility::step(&mut self.world.vehicles, tick as f64 / 1000.0, |l| lanes[l.0 as usize].length);
            self.refresh_world();
            for g in &mut self.world.grids {
                g.prune_before(slot.saturating_sub(GRID_RETENTION_SLOTS));
            }
        }
        self.world.clock_ms = slot;

        while self.next_message < self.messages.len() && self.messages[self.next_message].generation_ms == slot {
            self.admit(self.next_message);
            self.next_message += 1;
        }
        if slot == horizon {
            self.summary.pending_at_horizon = self.world.queues.iter().map(|q| q.len() as u64).sum();
        }

        let expiry = self.scenario.scheduler.expiry_ms;
        let lookahead = self.scenario.scheduler.lookahead_slots;
        for ch in 0..self.world.grids.len() {
            if slot + 1 >= expiry {
                let stale = self.world.queues[ch].expire_before(slot + 1 - expiry);
                self.expire(stale);
            }
            let grants = schedule_queue(&mut self.world.queues[ch], &mut self.world.grids[ch], slot, lookahead);
            for g in grants {
                self.record_grant(ch, &g);
                self.scheduled.entry(g.slot).or_default().push((ch, g));
            }
        }

        if let Some(due) = self.scheduled.remove(&slot) {
            for (ch, g) in due {
                self.transmit(ch, g);
            }
        }
        self.slot += 1;
        true
    }

    pub fn finish(mut self) -> RunOutput {
        while self.step_slot() {}
        let end = self.slot.max(1);
        self.summary.end_slot = self.slot;
        self.summary.cbr = self
            .world
            .grids
            .iter()
            .zip(&self.transmissions)
            .map(|(g, &tx)| tx as f64 / (end * g.subchannels() as u64) as f64)
            .collect();
        self.summary.samples = self.samples.len() as u64;
        debug_assert!(self.tracked.iter().flatten().all(|t| t.fate != Fate::Pending));
        RunOutput { samples: self.samples, summary: self.summary, grants: self.grant_log }
    }
}

/// Runs a scenario to completion.
pub fn run(scenario: &Scenario) -> Result<RunOutput, ScenarioError> {
    Ok(Simulation::new(scenario)?.finish())
}

/// Fraction of occupied cells over the `window` slots before `end`.
pub fn cbr(grid: &ResourceGrid, end: u64, window: u64) -> f64 {
    grid.cbr(end, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::DensityConfig;
    use crate::scenario::{LaneSpec, RoadSpec, RsuSpec};
    use crate::geometry::{Axis, LaneDirection};

    fn bare(duration_ms: u64) -> Scenario {
        let mut s = Scenario::default();
        s.engine.duration_ms = duration_ms;
        s.engine.active_rsus = Some(1);
        s.density = DensityConfig { lambda: 0, theta: 0 };
        s.traffic.rsu_streams = vec![StreamSpec::named("SPaT")];
        s.traffic.vehicle_streams.clear();
        s
    }

    #[test]
    fn empty_audience() {
        let out = run(&bare(1000)).unwrap();
        assert!(out.samples.is_empty());
        assert_eq!(out.summary.generated, 10);
        assert_eq!(out.summary.expired_no_receiver, 10);
    }

    fn lone_vehicle(duration_ms: u64) -> Scenario {
        let mut s = bare(duration_ms);
        // One lane passing 20 m from the RSU; one stationary car on it.
        s.roads = vec![RoadSpec {
            axis: Axis::Horizontal,
            centerline_m: 240.0,
            lanes: vec![LaneSpec { direction: LaneDirection::Positive, offset_m: 0.0 }],
        }];
        s.rsus = vec![RsuSpec { position: Point::new(100.0, 260.0), range_m: 150.0, channel_index: 0 }];
        s.obstacles.buildings.clear();
        s.density = DensityConfig { lambda: 1, theta: 0 };
        s.engine.car_speed_mps = 0.0;
        s
    }

    #[test]
    fn unloaded_latency_is_four_slots() {
        let out = run(&lone_vehicle(5000)).unwrap();
        assert_eq!(out.samples.len(), 50);
        assert!(out.samples.iter().all(|s| s.latency_ms() == 4));
    }

    #[test]
    fn unicast_with_harq() {
        let mut s = lone_vehicle(2000);
        s.traffic.rsu_streams[0].cast = Some(CastMode::Unicast);
        let out = run(&s).unwrap();
        assert_eq!(out.summary.delivered, 20);
        assert!(out.samples.iter().all(|s| s.latency_ms() == 4));
    }

    #[test]
    fn unicast_out_of_reach_fails_after_retransmission() {
        let mut s = lone_vehicle(1000);
        s.traffic.rsu_streams[0].cast = Some(CastMode::Unicast);
        // Inside range, far below the SNR threshold.
        s.radio.tx_power_dbm = -60.0;
        s.engine.record_grants = true;
        let out = run(&s).unwrap();
        assert_eq!(out.summary.failed, 10);
        let retx = out.grants.iter().filter(|g| g.kind == GrantKind::Retransmission).count();
        assert_eq!(retx, 10);
    }

    #[test]
    fn configured_vehicle_grants_carry_load() {
        let mut s = Scenario::default();
        s.engine.duration_ms = 3000;
        s.engine.active_rsus = Some(2);
        s.scheduler.vehicle_grants = GrantMode::Configured;
        let out = run(&s).unwrap();
        let sm = &out.summary;
        assert_eq!(sm.load_generated, sm.load_transmitted + sm.load_expired);
        assert!(sm.load_transmitted > 0);
        assert_eq!(sm.generated, sm.delivered + sm.expired() + sm.failed);
    }
}
