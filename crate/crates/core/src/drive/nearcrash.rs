//! Episode outcome classification.

use serde::{Deserialize, Serialize};

use super::{longitudinal_gap, DriveConfig, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    #[default]
    None,
    NearCrash,
    Crash,
}

impl Outcome {
    pub fn is_incident(self) -> bool {
        self != Outcome::None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    EvasiveBraking,
    EvasiveSteering,
    TtcBreach,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearCrashEvent {
    pub t_ms: f64,
    /// Smallest VoI-to-VtC gap seen while the VtC was ahead.
    pub min_gap_m: f64,
    pub trigger: Trigger,
    pub peak_decel_mps2: f64,
}

/// Head-on time to collision; `None` unless the gap is open and closing.
pub fn time_to_collision(gap_m: f64, v_voi: f64, v_vtc: f64) -> Option<f64> {
    let closing = v_voi + v_vtc;
    (gap_m >= 0.0 && closing > 0.0).then(|| gap_m / closing)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearCrashDetector {
    ttc_threshold_s: f64,
    evasive_decel: f64,
    evasive_gap_m: f64,
    outcome: Outcome,
    event: Option<NearCrashEvent>,
    min_gap_m: f64,
    peak_decel: f64,
}

impl NearCrashDetector {
    pub fn new(cfg: &DriveConfig) -> Self {
        Self {
            ttc_threshold_s: cfg.ttc_threshold_s,
            evasive_decel: cfg.evasive_decel_mps2,
            evasive_gap_m: cfg.evasive_gap_m,
            outcome: Outcome::None,
            event: None,
            min_gap_m: f64::INFINITY,
            peak_decel: 0.0,
        }
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn event(&self) -> Option<&NearCrashEvent> {
        self.event.as_ref()
    }

    pub fn observe(&mut self, f: &Frame) {
        let vtc_gap = longitudinal_gap(&f.voi, &f.vtc);
        if vtc_gap >= 0.0 {
            self.min_gap_m = self.min_gap_m.min(vtc_gap);
        }
        self.peak_decel = self.peak_decel.max(f.decel_mps2);
        if let Some(e) = self.event.as_mut() {
            e.min_gap_m = self.min_gap_m;
            e.peak_decel_mps2 = self.peak_decel;
        }
        if self.outcome == Outcome::Crash {
            return;
        }
        let voi = f.voi.rect();
        if voi.overlaps(&f.vtc.rect()) || voi.overlaps(&f.truck.rect()) {
            self.outcome = Outcome::Crash;
            if self.event.is_none() {
                self.record(f, Trigger::TtcBreach);
            }
            return;
        }
        if self.outcome != Outcome::None {
            return;
        }
        let in_oncoming_lane = f.voi.y + f.voi.width / 2.0 > 0.0;
        let ttc = time_to_collision(vtc_gap, f.voi.speed, f.vtc.speed);
        if in_oncoming_lane && ttc.is_some_and(|t| t < self.ttc_threshold_s) {
            self.outcome = Outcome::NearCrash;
            self.record(f, Trigger::TtcBreach);
            return;
        }
        let nearest = [vtc_gap, longitudinal_gap(&f.voi, &f.truck)]
            .into_iter()
            .filter(|g| *g >= 0.0)
            .fold(f64::INFINITY, f64::min);
        if f.decel_mps2 >= self.evasive_decel && nearest < self.evasive_gap_m {
            self.outcome = Outcome::NearCrash;
            let trigger = if f.steer.abs() >= 0.5 { Trigger::EvasiveSteering } else { Trigger::EvasiveBraking };
            self.record(f, trigger);
        }
    }

    fn record(&mut self, f: &Frame, trigger: Trigger) {
        self.event = Some(NearCrashEvent {
            t_ms: f.t_ms,
            min_gap_m: self.min_gap_m,
            trigger,
            peak_decel_mps2: self.peak_decel,
        });
    }
}

/// Classifies a recorded episode.
pub fn detect_near_crash(history: &[Frame], cfg: &DriveConfig) -> (Outcome, Option<NearCrashEvent>) {
    let mut d = NearCrashDetector::new(cfg);
    for f in history {
        d.observe(f);
    }
    (d.outcome(), d.event().cloned())
}
