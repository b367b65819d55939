//! gNB-side Mode 1 sidelink scheduling.
//!
//! A [`ResourceGrid`] tracks subchannel x slot occupancy for one 10 MHz
//! channel. Dynamic requests wait in a [`PendingQueue`] and are granted in
//! ascending PPPP order (FIFO within a PPPP, then lower source id), each taking
//! the earliest free cell at or after its arrival plus the processing delay.
//! Periodic sources may instead hold a configured grant that recurs every
//! period. Unicast and groupcast transmissions get HARQ retransmissions.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::traffic::{CastMode, MessageId};
use crate::NodeId;

pub const VALID_RBS_PER_SUBCHANNEL: [u32; 7] = [10, 15, 20, 25, 50, 75, 100];
pub const RB_WIDTH_MHZ: f64 = 0.18;
pub const SLOT_MS: u64 = 1;
/// Search bound for free cells; beyond this the grid is treated as saturated.
const SEARCH_HORIZON_SLOTS: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedError {
    #[error("invalid RBs per subchannel {0}; expected one of 10, 15, 20, 25, 50, 75, 100")]
    InvalidRbsPerSubchannel(u32),
    #[error("channel bandwidth {bandwidth_mhz} MHz leaves no room after a {guard_mhz} MHz guard band")]
    NoUsableBandwidth { bandwidth_mhz: f64, guard_mhz: f64 },
    #[error("{budget} RBs cannot hold one {rbs_per_subchannel}-RB subchannel")]
    TooNarrow { budget: u32, rbs_per_subchannel: u32 },
    #[error("period {0} ms is not a positive multiple of the slot duration")]
    BadPeriod(u64),
    #[error("grid saturated: no free cell recurs every {period} slots")]
    Saturated { period: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrantMode {
    #[default]
    Dynamic,
    Configured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerConfig {
    pub channel_bandwidth_mhz: f64,
    pub guard_band_mhz: f64,
    pub rbs_per_subchannel: u32,
    /// Scheduling request plus grant round trip.
    pub processing_delay_slots: u64,
    /// Total transmissions allowed per unicast/groupcast message.
    pub harq_max_attempts: u8,
    /// Age at which an undelivered message is dropped.
    pub expiry_ms: u64,
    /// How far ahead dynamic grants may be placed; `None` is unbounded.
    pub lookahead_slots: Option<u64>,
    /// How vehicles' periodic load traffic obtains resources.
    pub vehicle_grants: GrantMode,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            channel_bandwidth_mhz: 10.0,
            guard_band_mhz: 1.25,
            rbs_per_subchannel: 50,
            processing_delay_slots: 3,
            harq_max_attempts: 2,
            expiry_ms: 1000,
            lookahead_slots: Some(1),
            vehicle_grants: GrantMode::Dynamic,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if let Err(e) = ResourceGrid::new(0, self.channel_bandwidth_mhz, self.guard_band_mhz, self.rbs_per_subchannel) {
            errors.push(format!("scheduler: {e}"));
        }
        if self.harq_max_attempts == 0 {
            errors.push("scheduler.harq_max_attempts must be >= 1".into());
        }
        if self.expiry_ms == 0 {
            errors.push("scheduler.expiry_ms must be > 0".into());
        }
        if self.lookahead_slots == Some(0) {
            errors.push("scheduler.lookahead_slots must be >= 1".into());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GrantId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrantKind {
    Dynamic,
    ConfiguredPeriodic,
    Retransmission,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grant {
    pub id: GrantId,
    pub message: MessageId,
    pub tx: NodeId,
    pub slot: u64,
    pub subchannel: usize,
    pub kind: GrantKind,
    pub attempt: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedRequest {
    pub message: MessageId,
    pub tx: NodeId,
    pub pppp: u8,
    pub arrival_slot: u64,
}

impl SchedRequest {
    fn key(&self) -> (u8, u64, NodeId, MessageId) {
        (self.pppp, self.arrival_slot, self.tx, self.message)
    }
}

/// A reservation recurring every `period` slots from `start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfiguredSeries {
    pub id: GrantId,
    pub tx: NodeId,
    pub period: u64,
    pub start: u64,
    pub subchannel: usize,
}

impl ConfiguredSeries {
    pub fn occupies(&self, slot: u64, subchannel: usize) -> bool {
        subchannel == self.subchannel && slot >= self.start && (slot - self.start) % self.period == 0
    }

    /// First occurrence at or after `slot`.
    pub fn next_at_or_after(&self, slot: u64) -> u64 {
        if slot <= self.start {
            return self.start;
        }
        let k = (slot - self.start).div_ceil(self.period);
        self.start + k * self.period
    }

    /// Whether two infinite series ever hit the same cell.
    pub fn collides(&self, other: &ConfiguredSeries) -> bool {
        if self.subchannel != other.subchannel {
            return false;
        }
        let g = gcd(self.period, other.period);
        self.start % g == other.start % g
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Subchannel x slot occupancy for one channel.
#[derive(Debug, Clone)]
pub struct ResourceGrid {
    channel: usize,
    subchannels: usize,
    rb_budget: u32,
    base: u64,
    cells: VecDeque<Vec<Option<GrantId>>>,
    series: Vec<ConfiguredSeries>,
    next_grant: u64,
}

impl ResourceGrid {
    /// Builds the grid for a channel of `bandwidth_mhz` with `guard_mhz` of
    /// guard band; slots are 1 ms.
    pub fn new(channel: usize, bandwidth_mhz: f64, guard_mhz: f64, rbs_per_subchannel: u32) -> Result<Self, SchedError> {
        if !VALID_RBS_PER_SUBCHANNEL.contains(&rbs_per_subchannel) {
            return Err(SchedError::InvalidRbsPerSubchannel(rbs_per_subchannel));
        }
        let usable = bandwidth_mhz - guard_mhz;
        if !(usable > 0.0) || !(guard_mhz >= 0.0) {
            return Err(SchedError::NoUsableBandwidth { bandwidth_mhz, guard_mhz });
        }
        // Rounded before flooring so 8.75 / 0.18 does not lose an RB to float error.
        let rb_budget = ((usable / RB_WIDTH_MHZ * 1e9).round() / 1e9).floor() as u32;
        let mut subchannels = (rb_budget / rbs_per_subchannel) as usize;
        // A single subchannel wider than the guarded budget may still use the
        // raw channel: 50 RBs (9 MHz) on a 10 MHz channel is one subchannel.
        if subchannels == 0 && f64::from(rbs_per_subchannel) * RB_WIDTH_MHZ <= bandwidth_mhz + 1e-9 {
            subchannels = 1;
        }
        if subchannels == 0 {
            return Err(SchedError::TooNarrow { budget: rb_budget, rbs_per_subchannel });
        }
        Ok(Self {
            channel,
            subchannels,
            rb_budget,
            base: 0,
            cells: VecDeque::new(),
            series: Vec::new(),
            next_grant: 0,
        })
    }

    pub fn from_config(channel: usize, cfg: &SchedulerConfig) -> Result<Self, SchedError> {
        Self::new(channel, cfg.channel_bandwidth_mhz, cfg.guard_band_mhz, cfg.rbs_per_subchannel)
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn subchannels(&self) -> usize {
        self.subchannels
    }

    pub fn rb_budget(&self) -> u32 {
        self.rb_budget
    }

    pub fn slot_ms(&self) -> u64 {
        SLOT_MS
    }

    fn dynamic_at(&self, slot: u64, subchannel: usize) -> Option<GrantId> {
        if slot < self.base {
            return None;
        }
        self.cells.get((slot - self.base) as usize).and_then(|row| row[subchannel])
    }

    /// Grant holding the cell, whether dynamic or configured.
    pub fn occupant(&self, slot: u64, subchannel: usize) -> Option<GrantId> {
        self.dynamic_at(slot, subchannel)
            .or_else(|| self.series.iter().find(|s| s.occupies(slot, subchannel)).map(|s| s.id))
    }

    pub fn is_free(&self, slot: u64, subchannel: usize) -> bool {
        self.occupant(slot, subchannel).is_none()
    }

    /// Earliest free cell at or after `from`, lowest subchannel first.
    pub fn earliest_free(&self, from: u64) -> Option<(u64, usize)> {
        (from..from.saturating_add(SEARCH_HORIZON_SLOTS))
            .find_map(|slot| (0..self.subchannels).find(|&sc| self.is_free(slot, sc)).map(|sc| (slot, sc)))
    }

    fn next_id(&mut self) -> GrantId {
        self.next_grant += 1;
        GrantId(self.next_grant - 1)
    }

    fn occupy(&mut self, slot: u64, subchannel: usize, id: GrantId) {
        assert!(slot >= self.base, "cannot reserve pruned slot {slot}");
        let idx = (slot - self.base) as usize;
        while self.cells.len() <= idx {
            self.cells.push_back(vec![None; self.subchannels]);
        }
        let cell = &mut self.cells[idx][subchannel];
        assert!(cell.is_none(), "cell ({slot}, {subchannel}) already granted");
        *cell = Some(id);
    }

    /// Reserves a specific free cell.
    pub fn reserve(&mut self, slot: u64, subchannel: usize) -> Option<GrantId> {
        if !self.is_free(slot, subchannel) || slot < self.base {
            return None;
        }
        let id = self.next_id();
        self.occupy(slot, subchannel, id);
        Some(id)
    }

    /// Fraction of cells occupied over the `window` slots ending before `end`.
    pub fn cbr(&self, end: u64, window: u64) -> f64 {
        assert!(window >= 1, "CBR window must be at least one slot");
        let start = end.saturating_sub(window);
        let cells = (end - start) * self.subchannels as u64;
        if cells == 0 {
            return 0.0;
        }
        let busy = (start..end)
            .map(|slot| (0..self.subchannels).filter(|&sc| !self.is_free(slot, sc)).count() as u64)
            .sum::<u64>();
        busy as f64 / cells as f64
    }

    /// Drops history before `slot`. Cells before it read as free afterwards.
    pub fn prune_before(&mut self, slot: u64) {
        while self.base < slot && !self.cells.is_empty() {
            self.cells.pop_front();
            self.base += 1;
        }
        if self.cells.is_empty() && self.base < slot {
            self.base = slot;
        }
    }

    pub fn series(&self) -> &[ConfiguredSeries] {
        &self.series
    }

    pub fn release_series(&mut self, id: GrantId) -> bool {
        let before = self.series.len();
        self.series.retain(|s| s.id != id);
        before != self.series.len()
    }
}

/// Dynamic requests awaiting a grant.
///
/// Requests not yet past the processing delay wait in arrival order; eligible
/// ones sit in a priority heap. Removal (grant or expiry) is lazy on the heap.
#[derive(Debug, Clone)]
pub struct PendingQueue {
    processing_delay: u64,
    entries: Vec<Option<SchedRequest>>,
    waiting: VecDeque<usize>,
    ready: BinaryHeap<Reverse<((u8, u64, NodeId, MessageId), usize)>>,
    by_arrival: VecDeque<usize>,
    live: usize,
}

impl PendingQueue {
    pub fn new(processing_delay: u64) -> Self {
        Self {
            processing_delay,
            entries: Vec::new(),
            waiting: VecDeque::new(),
            ready: BinaryHeap::new(),
            by_arrival: VecDeque::new(),
            live: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    fn eligible_slot(&self, r: &SchedRequest) -> u64 {
        r.arrival_slot + self.processing_delay
    }

    fn insert_sorted(queue: &mut VecDeque<usize>, entries: &[Option<SchedRequest>], seq: usize) {
        let arrival = entries[seq].as_ref().map(|r| r.arrival_slot).unwrap_or(0);
        let at = queue.partition_point(|&s| entries[s].as_ref().map(|r| r.arrival_slot).unwrap_or(0) <= arrival);
        queue.insert(at, seq);
    }

    pub fn push(&mut self, request: SchedRequest) {
        let seq = self.entries.len();
        self.entries.push(Some(request));
        Self::insert_sorted(&mut self.waiting, &self.entries, seq);
        Self::insert_sorted(&mut self.by_arrival, &self.entries, seq);
        self.live += 1;
    }

    /// Removes and returns every request that arrived before `cutoff`.
    pub fn expire_before(&mut self, cutoff: u64) -> Vec<SchedRequest> {
        let mut out = Vec::new();
        while let Some(&seq) = self.by_arrival.front() {
            match self.entries[seq] {
                Some(r) if r.arrival_slot >= cutoff => break,
                Some(r) => {
                    out.push(r);
                    self.entries[seq] = None;
                    self.live -= 1;
                }
                None => {}
            }
            self.by_arrival.pop_front();
        }
        out
    }

    /// Empties the queue, returning what was left in arrival order.
    pub fn drain(&mut self) -> Vec<SchedRequest> {
        let out: Vec<SchedRequest> = self.by_arrival.iter().filter_map(|&s| self.entries[s]).collect();
        *self = Self::new(self.processing_delay);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = &SchedRequest> {
        self.by_arrival.iter().filter_map(|&s| self.entries[s].as_ref())
    }

    fn promote(&mut self, window_end: u64) {
        while let Some(&seq) = self.waiting.front() {
            let Some(r) = self.entries[seq] else {
                self.waiting.pop_front();
                continue;
            };
            if self.eligible_slot(&r) >= window_end {
                break;
            }
            self.ready.push(Reverse((r.key(), seq)));
            self.waiting.pop_front();
        }
    }
}

/// Grants pending requests for `current_slot` and, when the lookahead allows,
/// later slots.
///
/// Requests are visited in (PPPP, arrival, source, message) order and each
/// takes the earliest free cell at or after both `current_slot` and its
/// arrival plus the processing delay. Requests with no free cell inside the
/// lookahead window stay queued.
pub fn schedule_queue(
    queue: &mut PendingQueue,
    grid: &mut ResourceGrid,
    current_slot: u64,
    lookahead: Option<u64>,
) -> Vec<Grant> {
    let window_end = match lookahead {
        Some(l) => current_slot.saturating_add(l),
        None => u64::MAX,
    };
    queue.promote(window_end);
    let mut grants = Vec::new();
    let mut retained = Vec::new();
    while let Some(Reverse((key, seq))) = queue.ready.pop() {
        let Some(req) = queue.entries[seq] else { continue };
        let from = queue.eligible_slot(&req).max(current_slot);
        match grid.earliest_free(from) {
            Some((slot, subchannel)) if slot < window_end => {
                let id = grid.next_id();
                grid.occupy(slot, subchannel, id);
                queue.entries[seq] = None;
                queue.live -= 1;
                grants.push(Grant {
                    id,
                    message: req.message,
                    tx: req.tx,
                    slot,
                    subchannel,
                    kind: GrantKind::Dynamic,
                    attempt: 1,
                });
            }
            _ => {
                retained.push(Reverse((key, seq)));
                if grid.earliest_free(current_slot).is_none_or(|(s, _)| s >= window_end) {
                    break;
                }
            }
        }
    }
    queue.ready.extend(retained);
    grants
}

/// List form of [`schedule_queue`]: returns the grants and the requests left
/// pending.
pub fn schedule(
    pending: &[SchedRequest],
    grid: &mut ResourceGrid,
    current_slot: u64,
    cfg: &SchedulerConfig,
) -> (Vec<Grant>, Vec<SchedRequest>) {
    let mut queue = PendingQueue::new(cfg.processing_delay_slots);
    for r in pending {
        queue.push(*r);
    }
    let grants = schedule_queue(&mut queue, grid, current_slot, cfg.lookahead_slots);
    (grants, queue.drain())
}

/// Admits a periodic reservation for `tx` at the first aligned cell at or
/// after `from_slot` that never collides with existing grants.
pub fn configured_grant(
    tx: NodeId,
    period_ms: u64,
    grid: &mut ResourceGrid,
    from_slot: u64,
) -> Result<ConfiguredSeries, SchedError> {
    if period_ms == 0 || period_ms % SLOT_MS != 0 {
        return Err(SchedError::BadPeriod(period_ms));
    }
    let period = period_ms / SLOT_MS;
    let dynamic_end = grid.base + grid.cells.len() as u64;
    for start in from_slot..from_slot + period {
        for subchannel in 0..grid.subchannels {
            let candidate = ConfiguredSeries { id: GrantId(0), tx, period, start, subchannel };
            if grid.series.iter().any(|s| s.collides(&candidate)) {
                continue;
            }
            let mut slot = start;
            let mut clear = true;
            while slot < dynamic_end {
                if grid.dynamic_at(slot, subchannel).is_some() {
                    clear = false;
                    break;
                }
                slot += period;
            }
            if clear {
                let series = ConfiguredSeries { id: grid.next_id(), ..candidate };
                grid.series.push(series.clone());
                return Ok(series);
            }
        }
    }
    Err(SchedError::Saturated { period })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    Ack,
    Nack,
    /// No PSFCH response; treated like a NACK for unicast/groupcast.
    None,
}

/// Decides on a HARQ retransmission after `grant` was transmitted.
///
/// Feedback arrives one slot after the transmission, so a retransmission
/// takes the earliest free cell two slots after it. Broadcast never
/// retransmits.
pub fn harq_step(
    grant: &Grant,
    feedback: Feedback,
    cast: CastMode,
    max_attempts: u8,
    grid: &mut ResourceGrid,
) -> Option<Grant> {
    if !cast.has_feedback() || feedback == Feedback::Ack || grant.attempt >= max_attempts {
        return None;
    }
    let (slot, subchannel) = grid.earliest_free(grant.slot + 2)?;
    let id = grid.next_id();
    grid.occupy(slot, subchannel, id);
    Some(Grant {
        id,
        message: grant.message,
        tx: grant.tx,
        slot,
        subchannel,
        kind: GrantKind::Retransmission,
        attempt: grant.attempt + 1,
    })
}
