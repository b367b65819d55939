mod common;

use nrv2x::sched::{
    configured_grant, harq_step, schedule, schedule_queue, Feedback, Grant, GrantId, GrantKind, PendingQueue, ResourceGrid, SchedError,
    SchedRequest, SchedulerConfig,
};
use nrv2x::traffic::{CastMode, MessageId};
use nrv2x::NodeId;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn one_subchannel() -> ResourceGrid {
    ResourceGrid::new(0, 10.0, 1.25, 50).unwrap()
}

fn batch() -> SchedulerConfig {
    SchedulerConfig { lookahead_slots: None, ..Default::default() }
}

fn run_instance(reqs: &[SchedRequest], blocked: &[u64]) -> Vec<(MessageId, u64)> {
    let mut grid = one_subchannel();
    for &b in blocked {
        grid.reserve(b, 0).unwrap();
    }
    let (grants, left) = schedule(reqs, &mut grid, 0, &batch());
    assert!(left.is_empty());
    let mut out: Vec<(MessageId, u64)> = grants.iter().map(|g| (g.message, g.slot)).collect();
    let mut by_key: Vec<&SchedRequest> = reqs.iter().collect();
    by_key.sort_by_key(|r| common::key(r));
    out.sort_by_key(|(m, _)| by_key.iter().position(|r| r.message == *m));
    out
}

#[test]
fn matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..300 {
        let (reqs, blocked) = common::random_instance(&mut rng);
        assert_eq!(run_instance(&reqs, &blocked), common::sched_oracle(&reqs, &blocked, 3), "{reqs:?} {blocked:?}");
    }
}

#[test]
fn oracle_counts_backfill_as_legal() {
    // The urgent request is not eligible until slot 13; the other fills slot 3.
    let reqs = [
        SchedRequest { message: MessageId(0), tx: NodeId::Rsu(0), pppp: 1, arrival_slot: 10 },
        SchedRequest { message: MessageId(1), tx: NodeId::Rsu(0), pppp: 8, arrival_slot: 0 },
    ];
    assert_eq!(common::sched_oracle(&reqs, &[], 3), vec![(MessageId(0), 13), (MessageId(1), 3)]);
}

fn arb_requests() -> impl Strategy<Value = Vec<(u8, u64, u32)>> {
    prop::collection::vec((1u8..=8, 0u64..50, 0u32..20), 0..60)
}

proptest! {
    #[test]
    fn cells_are_exclusive(reqs in arb_requests(), rbs in prop::sample::select(vec![10u32, 25, 50])) {
        let mut grid = ResourceGrid::new(0, 10.0, 1.25, rbs).unwrap();
        let reqs: Vec<SchedRequest> = reqs.iter().enumerate().map(|(i, &(pppp, arrival_slot, tx))| SchedRequest {
            message: MessageId(i as u64), tx: NodeId::Vehicle(tx), pppp, arrival_slot,
        }).collect();
        let (grants, _) = schedule(&reqs, &mut grid, 0, &batch());
        let mut cells: Vec<(u64, usize)> = grants.iter().map(|g| (g.slot, g.subchannel)).collect();
        let n = cells.len();
        cells.sort_unstable();
        cells.dedup();
        prop_assert_eq!(cells.len(), n);
        for g in &grants {
            let r = &reqs[g.message.0 as usize];
            prop_assert!(g.slot >= r.arrival_slot + 3);
            prop_assert_eq!(grid.occupant(g.slot, g.subchannel), Some(g.id));
            prop_assert_eq!(g.kind, GrantKind::Dynamic);
        }
    }

    /// Slot by slot with just-in-time grants, no slot with a free cell is
    /// left idle while an eligible request waits.
    #[test]
    fn work_conserving(reqs in arb_requests()) {
        let mut grid = one_subchannel();
        let mut queue = PendingQueue::new(3);
        let mut by_arrival = reqs.clone();
        by_arrival.sort_by_key(|r| r.1);
        let mut next = 0;
        for slot in 0..200u64 {
            while next < by_arrival.len() && by_arrival[next].1 == slot {
                let (pppp, arrival_slot, tx) = by_arrival[next];
                queue.push(SchedRequest { message: MessageId(next as u64), tx: NodeId::Vehicle(tx), pppp, arrival_slot });
                next += 1;
            }
            let eligible_before = queue.iter().filter(|r| r.arrival_slot + 3 <= slot).count();
            let grants = schedule_queue(&mut queue, &mut grid, slot, Some(1));
            if eligible_before > 0 {
                prop_assert_eq!(grants.len(), 1);
            }
        }
    }

    #[test]
    fn configured_series_never_collide(periods in prop::collection::vec(prop::sample::select(vec![20u64, 50, 100]), 1..40)) {
        let mut grid = ResourceGrid::new(0, 10.0, 1.25, 25).unwrap();
        let mut admitted = Vec::new();
        for (i, p) in periods.iter().enumerate() {
            if let Ok(s) = configured_grant(NodeId::Vehicle(i as u32), *p, &mut grid, 0) {
                admitted.push(s);
            }
        }
        for slot in 0..400u64 {
            for sc in 0..grid.subchannels() {
                prop_assert!(admitted.iter().filter(|s| s.occupies(slot, sc)).count() <= 1);
            }
        }
    }
}

#[test]
fn priority_wins_the_earlier_cell() {
    let reqs = [
        SchedRequest { message: MessageId(0), tx: NodeId::Rsu(0), pppp: 5, arrival_slot: 0 },
        SchedRequest { message: MessageId(1), tx: NodeId::Rsu(0), pppp: 2, arrival_slot: 0 },
    ];
    let mut grid = one_subchannel();
    let (grants, _) = schedule(&reqs, &mut grid, 0, &batch());
    let slot_of = |m| grants.iter().find(|g| g.message == MessageId(m)).unwrap().slot;
    assert_eq!((slot_of(1), slot_of(0)), (3, 4));

    let mut grid = one_subchannel();
    let (grants, left) = schedule(&[], &mut grid, 0, &batch());
    assert!(grants.is_empty() && left.is_empty());
    assert_eq!(grid.earliest_free(0), Some((0, 0)));
}

#[test]
fn configured_pigeonhole() {
    let mut grid = one_subchannel();
    let mut starts = Vec::new();
    for i in 0..100 {
        let s = configured_grant(NodeId::Vehicle(i), 100, &mut grid, 0).expect("room left");
        assert_eq!(s.period, 100);
        starts.push(s.start % 100);
    }
    starts.sort_unstable();
    starts.dedup();
    assert_eq!(starts.len(), 100);
    assert!(matches!(configured_grant(NodeId::Vehicle(100), 100, &mut grid, 0), Err(SchedError::Saturated { period: 100 })));
}

#[test]
fn harq_policy() {
    let mut grid = one_subchannel();
    let g = Grant {
        id: GrantId(0),
        message: MessageId(0),
        tx: NodeId::Rsu(0),
        slot: 10,
        subchannel: 0,
        kind: GrantKind::Dynamic,
        attempt: 1,
    };
    for fb in [Feedback::Ack, Feedback::Nack, Feedback::None] {
        assert!(harq_step(&g, fb, CastMode::Broadcast, 2, &mut grid).is_none());
    }
    assert!(harq_step(&g, Feedback::Ack, CastMode::Unicast, 2, &mut grid).is_none());
    let re = harq_step(&g, Feedback::Nack, CastMode::Unicast, 2, &mut grid).expect("retransmission");
    assert_eq!((re.slot, re.attempt, re.kind), (12, 2, GrantKind::Retransmission));
    assert!(harq_step(&re, Feedback::Nack, CastMode::Unicast, 2, &mut grid).is_none());
    assert!(harq_step(&g, Feedback::None, CastMode::Groupcast, 2, &mut grid).is_some());
}
