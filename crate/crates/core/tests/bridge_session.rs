use std::net::TcpListener;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use nrv2x::drive::autopilot::{Autopilot, Policy};
use nrv2x::drive::bridge::{bridge_serve, BridgeClient, BridgeConfig, SessionLog, Snapshot};
use nrv2x::drive::nearcrash::Outcome;
use nrv2x::drive::{run_episode, ControlInput, EpisodeConfig};

fn serve(cfg: BridgeConfig) -> (BridgeClient, JoinHandle<SessionLog>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || bridge_serve(&listener, &cfg).unwrap());
    let client = BridgeClient::connect(addr).unwrap();
    client.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    (client, server)
}

fn neutral(t: f64) -> ControlInput {
    ControlInput { t, ..ControlInput::default() }
}

#[test]
fn neutral_driver_gets_a_steady_stream() {
    let (mut c, server) = serve(BridgeConfig { seed: 3, ..BridgeConfig::default() });
    let start = Instant::now();
    let mut received = 0u64;
    let mut last_tick = None;
    while start.elapsed() < Duration::from_secs(5) {
        let s = c.recv().unwrap().expect("server closed early");
        if let Some(prev) = last_tick {
            assert!(s.tick > prev, "ticks went {prev} -> {}", s.tick);
        }
        last_tick = Some(s.tick);
        received += 1;
        c.send_input(&neutral(start.elapsed().as_secs_f64())).unwrap();
    }
    c.close();
    let log = server.join().unwrap();
    assert!(received >= 240, "{received} snapshots in 5 s");
    assert!(log.client_disconnected);
    assert_eq!(log.rejected_frames, 0);
    // Only the very first step may run before an input is in.
    assert!(log.failsafe_ticks <= 1, "{log:?}");
    // Soft realtime bound for a healthy client.
    assert!(log.max_tick_interval_ms <= 40.0, "{log:?}");
}

#[test]
fn malformed_frames_are_rejected_and_the_session_goes_on() {
    let (mut c, server) = serve(BridgeConfig { max_ticks: Some(60), ..BridgeConfig::default() });
    c.recv().unwrap().unwrap();
    c.send_raw(b"not json").unwrap();
    c.send_raw(br#"{"t": 0, "steer": 3, "throttle": 0, "brake": 0}"#).unwrap();
    c.send_input(&neutral(1.0)).unwrap();
    // A timestamp going backwards is refused too.
    c.send_input(&neutral(0.5)).unwrap();
    let mut n = 0;
    while c.recv().unwrap().is_some() {
        n += 1;
    }
    let log = server.join().unwrap();
    assert_eq!(log.rejected_frames, 3, "{log:?}");
    assert_eq!(log.ticks, 60);
    assert!(n >= 50, "{n}");
}

#[test]
fn silent_driver_gets_the_brakes() {
    let (mut c, server) = serve(BridgeConfig { max_ticks: Some(50), ..BridgeConfig::default() });
    let first = c.recv().unwrap().unwrap();
    c.send_input(&ControlInput { t: 0.0, throttle: 1.0, ..ControlInput::default() }).unwrap();
    let mut last: Snapshot = first.clone();
    while let Some(s) = c.recv().unwrap() {
        last = s;
    }
    let log = server.join().unwrap();
    // One input covers 500 ms; the remaining ~0.5 s of a 1 s session is braked.
    assert!(log.failsafe_ticks >= 20, "{log:?}");
    assert!(last.voi.speed < first.voi.speed, "{} -> {}", first.voi.speed, last.voi.speed);
}

#[test]
fn restart_begins_the_next_episode() {
    let (mut c, server) = serve(BridgeConfig { seed: 40, max_ticks: Some(40), ..BridgeConfig::default() });
    let mut t = 0.0;
    let mut ticks = Vec::new();
    while let Some(s) = c.recv().unwrap() {
        ticks.push(s.tick);
        t += 0.02;
        // The server hangs up after its last tick.
        if c.send_input(&neutral(t)).is_err() {
            break;
        }
        if ticks.len() == 15 {
            c.send_restart().unwrap();
        }
    }
    let log = server.join().unwrap();
    assert_eq!(log.episodes.len(), 2, "{log:?}");
    assert_eq!((log.episodes[0].seed, log.episodes[1].seed), (40, 41));
    assert!(log.episodes[0].ticks >= 14);
    assert_eq!(log.episodes[0].ticks + log.episodes[1].ticks, log.ticks);
    assert!(ticks.windows(2).any(|w| w[1] < w[0]), "tick counter never reset");
}

/// A client-side autopilot behind the socket reproduces the headless episode.
#[test]
fn remote_autopilot_matches_headless_run() {
    for seed in [5, 6] {
        let headless = run_episode(&EpisodeConfig::new(seed, Policy::PassBlind));
        assert!(headless.outcome.is_incident());
        let head_tick = (headless.event.as_ref().unwrap().t_ms / 20.0).round() as u64;

        let cfg = BridgeConfig { seed, max_ticks: Some(headless.ticks), ..BridgeConfig::default() };
        let (dt, vision, drive) = (cfg.dt_s(), cfg.drive.vision_range_m, cfg.drive.clone());
        let (mut c, server) = serve(cfg);
        let mut pilot = Autopilot::new(Policy::PassBlind, &drive);
        let mut first_incident = None;
        while let Some(s) = c.recv().unwrap() {
            if s.outcome != Outcome::None {
                first_incident.get_or_insert(s.tick);
            }
            let mut input = pilot.control(&s.observation(dt, vision));
            input.t = s.tick as f64 * dt;
            if c.send_input(&input).is_err() {
                break;
            }
        }
        let log = server.join().unwrap();
        assert_eq!(log.episodes.last().unwrap().outcome, headless.outcome, "seed {seed}: {log:?}");
        let bridged = first_incident.expect("incident never reached the client");
        assert!(bridged.abs_diff(head_tick) <= 1, "seed {seed}: bridged tick {bridged}, headless {head_tick}");
    }
}
