use nrv2x::geometry::LaneDirection;
use nrv2x::scenario::{to_json, BuildingSpec, LaneSpec, RsuSpec, StreamSpec};
use nrv2x::sched::{GrantMode, ResourceGrid};
use nrv2x::traffic::{Arrival, CastMode};
use nrv2x::{parse_scenario, Point, Scenario, ScenarioError};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn invalid(text: &str) -> Vec<String> {
    match parse_scenario(text) {
        Err(ScenarioError::Invalid(v)) => v,
        other => panic!("expected semantic errors, got {other:?}"),
    }
}

#[test]
fn empty_document_gives_defaults() {
    let s = parse_scenario("").unwrap();
    assert_eq!(s, Scenario::default());
    assert_eq!(s.rsus.len(), 3);
    assert_eq!(s.traffic.rsu_streams.len(), 9);
    assert_eq!(s.engine.duration_ms, 60_000);
}

#[test]
fn rsu_outside_space_is_rejected() {
    let errs = invalid(r#"{"rsus": [{"position": {"x": 600, "y": 0}, "range_m": 150, "channel_index": 0}]}"#);
    assert!(errs.iter().any(|e| e.contains("outside space")), "{errs:?}");
}

#[test]
fn all_violations_are_listed() {
    let errs = invalid(
        r#"{"rsus": [{"position": {"x": -1, "y": 0}, "range_m": 0, "channel_index": 0},
                     {"position": {"x": 10, "y": 10}, "range_m": 150, "channel_index": 0}],
            "scheduler": {"rbs_per_subchannel": 7}}"#,
    );
    assert!(errs.iter().any(|e| e.contains("outside space")));
    assert!(errs.iter().any(|e| e.contains("range_m")));
    assert!(errs.iter().any(|e| e.contains("duplicate channel_index")));
    assert!(errs.iter().any(|e| e.contains("scheduler")));
    assert!(errs.len() >= 4);
}

#[test]
fn syntax_errors_carry_position() {
    match parse_scenario("{\n  \"seed\": 1,\n  \"density\": {\"lambda\": }\n}") {
        Err(ScenarioError::Syntax { line, column, .. }) => {
            assert_eq!(line, 3);
            assert!(column > 0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(matches!(parse_scenario(r#"{"sed": 3}"#), Err(ScenarioError::Syntax { .. })));
    assert!(matches!(parse_scenario(r#"{"density": {"lambda": 5, "thta": 1}}"#), Err(ScenarioError::Syntax { .. })));
}

#[test]
fn grid_arithmetic() {
    let g = ResourceGrid::new(0, 10.0, 1.25, 50).unwrap();
    assert_eq!(g.rb_budget(), 48);
    assert_eq!(g.subchannels(), 1);
    assert_eq!(ResourceGrid::new(0, 10.0, 1.25, 10).unwrap().subchannels(), 4);
    assert!(ResourceGrid::new(0, 0.0, 1.25, 50).is_err());
    assert!(ResourceGrid::new(0, 10.0, 1.25, 30).is_err());
}

fn fuzz(rng: &mut ChaCha8Rng) -> Scenario {
    let mut s = Scenario::default();
    s.space.width_m = rng.random_range(200.0..800.0);
    s.space.height_m = rng.random_range(200.0..800.0);
    s.seed = rng.random();
    s.density.lambda = rng.random_range(0..30);
    s.density.theta = rng.random_range(0..4);
    for road in &mut s.roads {
        road.centerline_m = rng.random_range(20.0..180.0);
        if rng.random_bool(0.3) {
            road.lanes.push(LaneSpec { direction: LaneDirection::Positive, offset_m: rng.random_range(-5.0..5.0) });
        }
    }
    let mut channels = vec![0usize, 1, 2];
    channels.shuffle(rng);
    let n = rng.random_range(1..=3);
    s.rsus = (0..n)
        .map(|i| RsuSpec {
            position: Point::new(rng.random_range(0.0..s.space.width_m), rng.random_range(0.0..s.space.height_m)),
            range_m: rng.random_range(10.0..400.0),
            channel_index: channels[i],
        })
        .collect();
    s.obstacles.buildings = (0..rng.random_range(0..6))
        .map(|_| {
            let (x, y) = (rng.random_range(0.0..150.0), rng.random_range(0.0..150.0));
            BuildingSpec { min: Point::new(x, y), max: Point::new(x + rng.random_range(1.0..80.0), y + rng.random_range(1.0..80.0)) }
        })
        .collect();
    s.radio.tx_power_dbm = rng.random_range(0.0..33.0);
    s.radio.carrier_ghz = rng.random_range(0.5..100.0);
    s.radio.shadowing = rng.random_bool(0.5);
    s.scheduler.rbs_per_subchannel = *[10u32, 15, 20, 25, 50].choose(rng).unwrap();
    s.scheduler.processing_delay_slots = rng.random_range(0..6);
    s.scheduler.harq_max_attempts = rng.random_range(1..4);
    s.scheduler.lookahead_slots = if rng.random_bool(0.5) { None } else { Some(rng.random_range(1..50)) };
    s.scheduler.vehicle_grants = if rng.random_bool(0.5) { GrantMode::Dynamic } else { GrantMode::Configured };
    s.traffic.rsu_streams.truncate(rng.random_range(0..=9));
    if rng.random_bool(0.5) {
        s.traffic.vehicle_streams.push(StreamSpec {
            class: "BSM-critical".into(),
            arrival: Some(Arrival::Event { rate_per_s: rng.random_range(0.1..20.0) }),
            payload_bytes: Some(rng.random_range(1..1500)),
            cast: Some(CastMode::Unicast),
        });
    }
    if rng.random_bool(0.3) {
        let mut c = nrv2x::traffic::builtin_classes()[0].clone();
        c.name = format!("custom{}", rng.random::<u16>());
        c.arrival = Arrival::Periodic { period_ms: rng.random_range(1..1000) };
        s.traffic.rsu_streams.push(StreamSpec::named(&c.name));
        s.traffic.classes.push(c);
    }
    s.engine.duration_ms = rng.random_range(0..100_000);
    s.engine.car_speed_mps = rng.random_range(0.0..40.0);
    s.engine.active_rsus = if rng.random_bool(0.5) { None } else { Some(rng.random_range(1..=n)) };
    s
}

#[test]
fn fuzzed_documents_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let s = fuzz(&mut rng);
        s.validate().unwrap_or_else(|e| panic!("fuzzer produced an invalid scenario: {e}"));
        let text = to_json(&s);
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(to_json(&back), text);
    }
}
