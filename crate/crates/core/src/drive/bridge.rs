//! Realtime session for a remote driver.
//!
//! Transport: one TCP connection; each frame is a 4-byte big-endian length
//! followed by that many bytes of UTF-8 JSON.
//!
//! Client to server: `{"t": ms, "steer": f, "throttle": f, "brake": f}` or
//! `{"cmd": "restart"}`. Server to client, on connect and then once per tick:
//! `{"tick", "voi", "vtc", "truck", "warning", "outcome", "bsm_age_ms"}`.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{drive_step, Body, ControlInput, DriveConfig, DriveWorld, Observation, Outcome, SidelinkPath};

pub const MAX_FRAME_BYTES: usize = 64 * 1024;

pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too long"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes exceeds limit")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntityView {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl From<Body> for EntityView {
    fn from(b: Body) -> Self {
        Self { x: b.x, y: b.y, speed: b.speed, heading: b.heading, length: b.length, width: b.width }
    }
}

impl From<EntityView> for Body {
    fn from(e: EntityView) -> Self {
        Self { x: e.x, y: e.y, speed: e.speed, heading: e.heading, length: e.length, width: e.width }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub voi: EntityView,
    pub vtc: EntityView,
    pub truck: EntityView,
    pub warning: bool,
    pub outcome: Outcome,
    pub bsm_age_ms: Option<f64>,
}

impl Snapshot {
    pub fn of(w: &DriveWorld) -> Self {
        Self {
            tick: w.tick,
            voi: w.voi.into(),
            vtc: w.vtc.into(),
            truck: w.truck.into(),
            warning: w.warning,
            outcome: w.outcome(),
            bsm_age_ms: w.bsm_age_ms(),
        }
    }

    /// What a driver seeing this snapshot knows; `t_ms` is taken from the tick.
    pub fn observation(&self, dt_s: f64, vision_range_m: f64) -> Observation {
        Observation::new(
            self.tick as f64 * dt_s * 1000.0,
            self.voi.into(),
            self.truck.into(),
            self.vtc.into(),
            self.warning,
            vision_range_m,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClientFrame {
    Command { cmd: Command },
    Input(ControlInput),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Restart,
}

/// Parses and range-checks one client frame.
pub fn parse_client_frame(bytes: &[u8]) -> Result<ClientFrame, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("not UTF-8: {e}"))?;
    let frame: ClientFrame = serde_json::from_str(text).map_err(|e| format!("bad frame: {e}"))?;
    if let ClientFrame::Input(i) = &frame {
        if !i.is_valid() {
            return Err(format!("control values out of range: {i:?}"));
        }
    }
    Ok(frame)
}

#[derive(Debug, Clone)]
pub struct BridgeConfig {
    pub tick_hz: f64,
    /// Inputs older than this are replaced by full braking.
    pub stale_after: Duration,
    pub seed: u64,
    pub drive: DriveConfig,
    pub sidelink: SidelinkPath,
    /// Snapshots buffered for a slow client before frames are dropped.
    pub send_buffer: usize,
    /// Ends the session after this many ticks.
    pub max_ticks: Option<u64>,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            tick_hz: 50.0,
            stale_after: Duration::from_millis(500),
            seed: 0,
            drive: DriveConfig::default(),
            sidelink: SidelinkPath::default(),
            send_buffer: 16,
            max_ticks: None,
        }
    }
}

impl BridgeConfig {
    pub fn dt_s(&self) -> f64 {
        1.0 / self.tick_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub seed: u64,
    pub outcome: Outcome,
    pub ticks: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub ticks: u64,
    pub episodes: Vec<EpisodeLog>,
    pub rejected_frames: u64,
    pub dropped_snapshots: u64,
    pub failsafe_ticks: u64,
    /// Longest wall-clock gap between consecutive ticks.
    pub max_tick_interval_ms: f64,
    pub client_disconnected: bool,
}

#[derive(Default)]
struct Mailbox {
    latest: Option<(ControlInput, Instant)>,
    restart: bool,
}

/// Accepts one driver on `listener` and runs the session until the client
/// leaves or `max_ticks` elapse.
pub fn bridge_serve(listener: &TcpListener, cfg: &BridgeConfig) -> io::Result<SessionLog> {
    let (stream, peer) = listener.accept()?;
    log::info!("driver connected from {peer}");
    run_session(stream, cfg)
}

fn run_session(stream: TcpStream, cfg: &BridgeConfig) -> io::Result<SessionLog> {
    stream.set_nodelay(true)?;
    let mailbox = Arc::new(Mutex::new(Mailbox::default()));
    let gone = Arc::new(AtomicBool::new(false));
    let rejected = Arc::new(AtomicU64::new(0));

    let reader = {
        let (mut stream, mailbox, gone, rejected) = (stream.try_clone()?, mailbox.clone(), gone.clone(), rejected.clone());
        thread::spawn(move || {
            let mut last_t = f64::NEG_INFINITY;
            loop {
                let bytes = match read_frame(&mut stream) {
                    Ok(Some(b)) => b,
                    Ok(None) => break,
                    Err(e) => {
                        log::warn!("driver stream error: {e}");
                        break;
                    }
                };
                match parse_client_frame(&bytes) {
                    Ok(ClientFrame::Input(i)) if i.t < last_t => {
                        rejected.fetch_add(1, Ordering::Relaxed);
                        log::warn!("rejected input with timestamp {} before {last_t}", i.t);
                    }
                    Ok(ClientFrame::Input(i)) => {
                        last_t = i.t;
                        mailbox.lock().expect("mailbox").latest = Some((i, Instant::now()));
                    }
                    Ok(ClientFrame::Command { cmd: Command::Restart }) => mailbox.lock().expect("mailbox").restart = true,
                    Err(e) => {
                        rejected.fetch_add(1, Ordering::Relaxed);
                        log::warn!("rejected frame: {e}");
                    }
                }
            }
            gone.store(true, Ordering::Relaxed);
        })
    };

    let (tx, rx) = mpsc::sync_channel::<Vec<u8>>(cfg.send_buffer.max(1));
    let writer = {
        let (mut stream, gone) = (stream.try_clone()?, gone.clone());
        thread::spawn(move || {
            for frame in rx {
                if write_frame(&mut stream, &frame).is_err() {
                    gone.store(true, Ordering::Relaxed);
                    break;
                }
            }
        })
    };

    let mut log = SessionLog::default();
    let mut episode_seed = cfg.seed;
    let mut world = DriveWorld::new(cfg.drive.clone(), episode_seed);
    let mut link = cfg.sidelink.clone();
    let period = Duration::from_secs_f64(1.0 / cfg.tick_hz);
    // The driver sees the starting state one period before the first step.
    let _ = tx.try_send(serde_json::to_vec(&Snapshot::of(&world)).expect("snapshot serializes"));
    let mut next = Instant::now() + period;
    let mut last_tick: Option<Instant> = None;
    while !gone.load(Ordering::Relaxed) && cfg.max_ticks.is_none_or(|m| log.ticks < m) {
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
        }
        let now = Instant::now();
        if let Some(prev) = last_tick {
            log.max_tick_interval_ms = log.max_tick_interval_ms.max((now - prev).as_secs_f64() * 1000.0);
        }
        last_tick = Some(now);
        next += period;
        if next < now {
            next = now;
        }

        let (input, restart) = {
            let mut m = mailbox.lock().expect("mailbox");
            let fresh = m.latest.filter(|(_, at)| now.duration_since(*at) <= cfg.stale_after).map(|(i, _)| i);
            (fresh, std::mem::take(&mut m.restart))
        };
        if restart {
            log.episodes.push(EpisodeLog { seed: episode_seed, outcome: world.outcome(), ticks: world.tick });
            episode_seed += 1;
            world = DriveWorld::new(cfg.drive.clone(), episode_seed);
        }
        let input = input.unwrap_or_else(|| {
            log.failsafe_ticks += 1;
            ControlInput::brake_only()
        });
        drive_step(&mut world, &input, cfg.dt_s(), &mut link);
        log.ticks += 1;
        let frame = serde_json::to_vec(&Snapshot::of(&world)).expect("snapshot serializes");
        match tx.try_send(frame) {
            Ok(()) => {}
            Err(TrySendError::Full(_)) => log.dropped_snapshots += 1,
            Err(TrySendError::Disconnected(_)) => break,
        }
    }
    log.client_disconnected = gone.load(Ordering::Relaxed);
    if log.client_disconnected {
        log::info!("driver left; episode aborted at tick {}", world.tick);
    }
    log.episodes.push(EpisodeLog { seed: episode_seed, outcome: world.outcome(), ticks: world.tick });
    log.rejected_frames = rejected.load(Ordering::Relaxed);
    drop(tx);
    let _ = stream.shutdown(std::net::Shutdown::Both);
    let _ = writer.join();
    let _ = reader.join();
    Ok(log)
}

/// Minimal driver client speaking the wire protocol.
pub struct BridgeClient {
    stream: TcpStream,
}

impl BridgeClient {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self { stream })
    }

    pub fn send_input(&mut self, input: &ControlInput) -> io::Result<()> {
        self.send_raw(&serde_json::to_vec(input).expect("input serializes"))
    }

    pub fn send_restart(&mut self) -> io::Result<()> {
        self.send_raw(br#"{"cmd":"restart"}"#)
    }

    pub fn send_raw(&mut self, payload: &[u8]) -> io::Result<()> {
        write_frame(&mut self.stream, payload)
    }

    /// Next snapshot, or `None` once the server has closed the session.
    pub fn recv(&mut self) -> io::Result<Option<Snapshot>> {
        match read_frame(&mut self.stream)? {
            Some(b) => serde_json::from_slice(&b).map(Some).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            None => Ok(None),
        }
    }

    pub fn set_read_timeout(&self, t: Option<Duration>) -> io::Result<()> {
        self.stream.set_read_timeout(t)
    }

    pub fn close(self) {
        let _ = self.stream.shutdown(std::net::Shutdown::Both);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let mut buf = Vec::new();
        write_frame(&mut buf, b"{\"a\":1}").unwrap();
        assert_eq!(&buf[..4], &[0, 0, 0, 7]);
        let mut r = &buf[..];
        assert_eq!(read_frame(&mut r).unwrap().unwrap(), b"{\"a\":1}");
        assert_eq!(read_frame(&mut r).unwrap(), None);
    }

    #[test]
    fn client_frames() {
        assert_eq!(parse_client_frame(br#"{"cmd":"restart"}"#), Ok(ClientFrame::Command { cmd: Command::Restart }));
        assert!(matches!(
            parse_client_frame(br#"{"t":5,"steer":0.5,"throttle":1,"brake":0}"#),
            Ok(ClientFrame::Input(ControlInput { steer: 0.5, .. }))
        ));
        assert!(parse_client_frame(br#"{"t":5,"steer":3,"throttle":1,"brake":0}"#).is_err());
        assert!(parse_client_frame(b"not json").is_err());
        assert!(parse_client_frame(br#"{"cmd":"fly"}"#).is_err());
    }

    #[test]
    fn snapshot_wire_shape() {
        let w = DriveWorld::new(DriveConfig::default(), 0);
        let v: serde_json::Value = serde_json::to_value(Snapshot::of(&w)).unwrap();
        for key in ["tick", "voi", "vtc", "truck", "warning", "outcome", "bsm_age_ms"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["outcome"], "none");
        assert!(v["bsm_age_ms"].is_null());
    }
}
