//! UMi-Street-Canyon path loss and link budget reception decisions.

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{los_blocked, Obstacle, ObstacleId, Point};
use crate::scalar::Scalar;
use crate::NodeId;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Effective environment height for UMi.
const EFFECTIVE_ENV_HEIGHT_M: f64 = 1.0;
const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;
pub const SHADOW_SIGMA_LOS_DB: f64 = 4.0;
pub const SHADOW_SIGMA_NLOS_DB: f64 = 7.82;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub carrier_ghz: f64,
    pub tx_power_dbm: f64,
    pub rsu_height_m: f64,
    pub vehicle_height_m: f64,
    pub noise_figure_db: f64,
    pub occupied_bandwidth_hz: f64,
    pub snr_threshold_db: f64,
    /// Vehicle carrier-sensing and communication range.
    pub sensing_range_m: f64,
    pub shadowing: bool,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_ghz: 5.9,
            tx_power_dbm: 23.0,
            rsu_height_m: 10.0,
            vehicle_height_m: 1.5,
            noise_figure_db: 9.0,
            occupied_bandwidth_hz: 9.0e6,
            snr_threshold_db: 5.0,
            sensing_range_m: 150.0,
            shadowing: false,
        }
    }
}

impl RadioConfig {
    pub fn noise_floor_dbm(&self) -> f64 {
        noise_floor_dbm(self.occupied_bandwidth_hz, self.noise_figure_db)
    }

    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(0.5..=100.0).contains(&self.carrier_ghz) {
            errors.push(format!("radio.carrier_ghz {} outside [0.5, 100]", self.carrier_ghz));
        }
        if !(self.occupied_bandwidth_hz > 0.0) {
            errors.push("radio.occupied_bandwidth_hz must be > 0".into());
        }
        if !(self.rsu_height_m > EFFECTIVE_ENV_HEIGHT_M) || !(self.vehicle_height_m > EFFECTIVE_ENV_HEIGHT_M) {
            errors.push("radio antenna heights must exceed 1 m".into());
        }
        if !(self.sensing_range_m > 0.0) {
            errors.push("radio.sensing_range_m must be > 0".into());
        }
        for (name, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_figure_db", self.noise_figure_db),
            ("snr_threshold_db", self.snr_threshold_db),
        ] {
            if !v.is_finite() {
                errors.push(format!("radio.{name} must be finite"));
            }
        }
    }
}

/// Thermal noise floor over `bandwidth_hz` plus receiver noise figure.
pub fn noise_floor_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// UMi-Street-Canyon path loss in dB.
///
/// `h_bs` is the taller antenna. The 2-D distance is floored at 1 m and the
/// carrier clamped to 0.5..100 GHz. NLOS is the max of the LOS value and the
/// NLOS expression, so it never undercuts LOS.
pub fn path_loss_umi<T: Scalar>(d2d: T, carrier_ghz: T, h_bs: T, h_ut: T, los: bool) -> T {
    let one = T::one();
    let d2d = if d2d < one {
        log::trace!("path loss: clamping 2-D distance {:?} m to 1 m", d2d);
        one
    } else {
        d2d
    };
    let fc = if carrier_ghz < T::lit(0.5) || carrier_ghz > T::lit(100.0) {
        log::warn!("path loss: carrier {:?} GHz outside model validity, clamping", carrier_ghz);
        carrier_ghz.max(T::lit(0.5)).min(T::lit(100.0))
    } else {
        carrier_ghz
    };
    let dh = h_bs - h_ut;
    let d3d = (d2d * d2d + dh * dh).sqrt();
    let he = T::lit(EFFECTIVE_ENV_HEIGHT_M);
    let breakpoint = T::lit(4.0) * (h_bs - he) * (h_ut - he) * fc * T::lit(1e9) / T::lit(SPEED_OF_LIGHT);
    let log_fc = fc.log10();
    let los_loss = if d2d <= breakpoint {
        T::lit(32.4) + T::lit(21.0) * d3d.log10() + T::lit(20.0) * log_fc
    } else {
        T::lit(32.4) + T::lit(40.0) * d3d.log10() + T::lit(20.0) * log_fc
            - T::lit(9.5) * (breakpoint * breakpoint + dh * dh).log10()
    };
    if los {
        return los_loss;
    }
    let nlos = T::lit(35.3) * d3d.log10() + T::lit(22.4) + T::lit(21.3) * log_fc - T::lit(0.3) * (h_ut - T::lit(1.5));
    los_loss.max(nlos)
}

/// One end of a radio link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEnd {
    pub node: NodeId,
    pub position: Point<f64>,
    pub antenna_height_m: f64,
    /// The entity's own body, ignored for blockage.
    pub body: Option<ObstacleId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub tx: NodeId,
    pub rx: NodeId,
    pub distance: f64,
    pub los: bool,
    pub path_loss_db: f64,
    pub snr_db: f64,
    pub receivable: bool,
}

/// Classifies the link and applies the link budget.
///
/// `tx_range_m` is the transmitter's operating range (RSU range or vehicle
/// sensing range). With `shadow` set, a log-normal term with the LOS/NLOS
/// standard deviation is added to the path loss.
pub fn evaluate_link(
    tx: &LinkEnd,
    rx: &LinkEnd,
    tx_range_m: f64,
    obstacles: &[Obstacle<f64>],
    cfg: &RadioConfig,
    shadow: Option<&mut dyn RngCore>,
) -> LinkState {
    let exclude: Vec<ObstacleId> = [tx.body, rx.body].into_iter().flatten().collect();
    let los = !los_blocked(tx.position, rx.position, obstacles, &exclude);
    let distance = tx.position.distance(&rx.position);
    let h_bs = tx.antenna_height_m.max(rx.antenna_height_m);
    let h_ut = tx.antenna_height_m.min(rx.antenna_height_m);
    let mut path_loss_db = path_loss_umi(distance, cfg.carrier_ghz, h_bs, h_ut, los);
    if let Some(rng) = shadow {
        let sigma = if los { SHADOW_SIGMA_LOS_DB } else { SHADOW_SIGMA_NLOS_DB };
        path_loss_db += Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
    }
    let snr_db = cfg.tx_power_dbm - path_loss_db - cfg.noise_floor_dbm();
    let receivable = snr_db >= cfg.snr_threshold_db && distance <= tx_range_m;
    LinkState { tx: tx.node, rx: rx.node, distance, los, path_loss_db, snr_db, receivable }
}
