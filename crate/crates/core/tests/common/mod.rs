//! Test oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::path::PathBuf;

use nrv2x::sched::SchedRequest;
use nrv2x::traffic::MessageId;
use nrv2x::NodeId;
use rand::Rng;

pub type Key = (u8, u64, NodeId, MessageId);

pub fn key(r: &SchedRequest) -> Key {
    (r.pppp, r.arrival_slot, r.tx, r.message)
}

/// Earliest-free-slot assignment of `order` on a 1-subchannel grid.
fn list_schedule(reqs: &[SchedRequest], order: &[usize], blocked: &[u64], delay: u64) -> Vec<u64> {
    let mut used: Vec<u64> = blocked.to_vec();
    let mut slots = vec![0; reqs.len()];
    for &i in order {
        let mut s = reqs[i].arrival_slot + delay;
        while used.contains(&s) {
            s += 1;
        }
        used.push(s);
        slots[i] = s;
    }
    slots
}

/// Pairs where a more urgent request was already eligible at the slot that a
/// less urgent one took ahead of it.
fn violations(reqs: &[SchedRequest], slots: &[u64], delay: u64) -> usize {
    let mut n = 0;
    for i in 0..reqs.len() {
        for j in 0..reqs.len() {
            if key(&reqs[i]) < key(&reqs[j]) && slots[j] < slots[i] && reqs[i].arrival_slot + delay <= slots[j] {
                n += 1;
            }
        }
    }
    n
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Exhaustive scheduler oracle on one subchannel: over every service order,
/// keep the list schedules with the fewest priority-then-FIFO violations and
/// return the lexicographically smallest slot vector (requests in key order).
pub fn sched_oracle(reqs: &[SchedRequest], blocked: &[u64], delay: u64) -> Vec<(MessageId, u64)> {
    let mut by_key: Vec<usize> = (0..reqs.len()).collect();
    by_key.sort_by_key(|&i| key(&reqs[i]));
    let mut order: Vec<usize> = (0..reqs.len()).collect();
    let mut best: Option<(usize, Vec<u64>)> = None;
    loop {
        let slots = list_schedule(reqs, &order, blocked, delay);
        let v = violations(reqs, &slots, delay);
        let lex: Vec<u64> = by_key.iter().map(|&i| slots[i]).collect();
        if best.as_ref().is_none_or(|(bv, bl)| (v, &lex) < (*bv, bl)) {
            best = Some((v, lex));
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    let (_, lex) = best.unwrap_or_default();
    by_key.iter().zip(lex).map(|(&i, s)| (reqs[i].message, s)).collect()
}

/// Up to 8 requests with few distinct priorities and clustered arrivals, plus
/// a few pre-occupied slots.
pub fn random_instance(rng: &mut impl Rng) -> (Vec<SchedRequest>, Vec<u64>) {
    let n = rng.random_range(0..=8);
    let reqs = (0..n)
        .map(|i| SchedRequest {
            message: MessageId(i as u64),
            tx: NodeId::Vehicle(rng.random_range(0..4)),
            pppp: rng.random_range(1..=4),
            arrival_slot: rng.random_range(0..6),
        })
        .collect();
    let mut blocked: Vec<u64> = (0..rng.random_range(0..4)).map(|_| rng.random_range(3..14)).collect();
    blocked.sort_unstable();
    blocked.dedup();
    (reqs, blocked)
}

/// One-sample Kolmogorov-Smirnov statistic against U(0, 1).
pub fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Critical value at the 1% level (Stephens' small-sample correction).
pub fn ks_critical_1pct(n: usize) -> f64 {
    let s = (n as f64).sqrt();
    1.628 / (s + 0.12 + 0.11 / s)
}

pub struct PathLossCase {
    pub d2d_m: f64,
    pub los: bool,
    pub h_bs_m: f64,
    pub h_ut_m: f64,
    pub carrier_ghz: f64,
    pub path_loss_db: f64,
}

/// Cases frozen from `tests/oracles/umi_path_loss.py random 100 20261016`.
pub fn path_loss_fixture() -> Vec<PathLossCase> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/oracles/umi_random.csv");
    let mut r = csv::Reader::from_path(path).expect("fixture present");
    r.records()
        .map(|rec| {
            let rec = rec.expect("fixture row");
            let f = |i: usize| rec[i].parse::<f64>().expect("number");
            PathLossCase {
                d2d_m: f(0),
                los: &rec[1] == "true",
                h_bs_m: f(2),
                h_ut_m: f(3),
                carrier_ghz: f(4),
                path_loss_db: f(5),
            }
        })
        .collect()
}
