//! BSM delivery between drive-scenario vehicles.

use crate::channel::{evaluate_link, LinkEnd, RadioConfig};
use crate::geometry::Obstacle;
use crate::sched::SLOT_MS;
use crate::NodeId;

use super::Body;

/// Carries one BSM from `tx` to `rx`; returns the delivery latency in ms, or
/// `None` when the message is lost.
pub trait Sidelink {
    fn transmit(&mut self, tx: &Body, rx: &Body, obstacles: &[Obstacle<f64>]) -> Option<f64>;
}

/// Vehicle-to-vehicle link through the channel model and an uncontended
/// Mode 1 dynamic grant: processing delay plus one transmission slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SidelinkPath {
    pub radio: RadioConfig,
    pub processing_delay_slots: u64,
    pub extra_latency_ms: f64,
    /// Off drops every BSM.
    pub enabled: bool,
}

impl Default for SidelinkPath {
    fn default() -> Self {
        Self { radio: RadioConfig::default(), processing_delay_slots: 3, extra_latency_ms: 0.0, enabled: true }
    }
}

impl SidelinkPath {
    pub fn base_latency_ms(&self) -> f64 {
        ((self.processing_delay_slots + 1) * SLOT_MS) as f64
    }
}

impl Sidelink for SidelinkPath {
    fn transmit(&mut self, tx: &Body, rx: &Body, obstacles: &[Obstacle<f64>]) -> Option<f64> {
        if !self.enabled {
            return None;
        }
        let h = self.radio.vehicle_height_m;
        let end = |node, b: &Body| LinkEnd { node, position: b.center(), antenna_height_m: h, body: None };
        let link = evaluate_link(
            &end(NodeId::Vehicle(1), tx),
            &end(NodeId::Vehicle(0), rx),
            self.radio.sensing_range_m,
            obstacles,
            &self.radio,
            None,
        );
        link.receivable.then(|| self.base_latency_ms() + self.extra_latency_ms)
    }
}
