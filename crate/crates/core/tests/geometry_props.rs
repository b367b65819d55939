use nrv2x::geometry::{in_range, los_blocked, segment_intersects_rect, ObstacleId, ObstacleKind, RsuId};
use nrv2x::{Obstacle, Point, Rect, Rsu};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 10_000;

/// Distance from `p` to the closed rectangle (0 inside), computed from the
/// corner polygon rather than the rectangle frame.
fn point_rect_distance(p: Point, r: &Rect) -> f64 {
    if r.contains(&p) {
        return 0.0;
    }
    let c = r.corners();
    (0..4).map(|i| point_segment_distance(p, c[i], c[(i + 1) % 4])).fold(f64::INFINITY, f64::min)
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) };
    p.distance(&Point::new(a.x + t * dx, a.y + t * dy))
}

struct Sampled {
    hit: bool,
    closest: f64,
    spacing: f64,
}

fn sample_segment(p1: Point, p2: Point, r: &Rect) -> Sampled {
    let mut hit = false;
    let mut closest = f64::INFINITY;
    for i in 0..SAMPLES {
        let t = i as f64 / (SAMPLES - 1) as f64;
        let q = Point::new(p1.x + t * (p2.x - p1.x), p1.y + t * (p2.y - p1.y));
        hit |= r.contains(&q);
        closest = closest.min(point_rect_distance(q, r));
    }
    Sampled { hit, closest, spacing: p1.distance(&p2) / (SAMPLES - 1) as f64 }
}

fn random_rect(rng: &mut impl Rng) -> Rect {
    let c = Point::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    Rect::oriented(c, rng.random_range(0.5..30.0), rng.random_range(0.5..10.0), rng.random_range(0.0..std::f64::consts::TAU))
}

fn random_point(rng: &mut impl Rng) -> Point {
    Point::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0))
}

#[test]
fn segment_rect_examples() {
    let a = Point::new(0.0, 0.0);
    let b = Point::new(10.0, 0.0);
    assert!(segment_intersects_rect(a, b, &Rect::square(Point::new(5.0, 0.0), 2.0)));
    assert!(!segment_intersects_rect(a, b, &Rect::square(Point::new(5.0, 10.0), 2.0)));
}

#[test]
fn segment_rect_matches_sampling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut hits, mut disagreements) = (0, 0);
    for _ in 0..1000 {
        let r = random_rect(&mut rng);
        let (p1, p2) = (random_point(&mut rng), random_point(&mut rng));
        let op = segment_intersects_rect(p1, p2, &r);
        let s = sample_segment(p1, p2, &r);
        if s.hit {
            assert!(op, "sampled point inside but op says clear: {p1:?} {p2:?} {r:?}");
            hits += 1;
        } else if op {
            // The op sees a contact thinner than the sampling resolution.
            assert!(s.closest <= s.spacing / 2.0 + 1e-6, "{p1:?} {p2:?} {r:?} closest {}", s.closest);
            disagreements += 1;
        }
    }
    assert!(hits > 100, "too few intersecting pairs generated: {hits}");
    assert!(disagreements < 10, "{disagreements}");
}

#[test]
fn overlaps_matches_sampling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let a = random_rect(&mut rng);
        let b = random_rect(&mut rng);
        let ca = a.corners();
        let cb = b.corners();
        // Two convex polygons meet iff an edge of one crosses the other or one
        // contains a corner of the other.
        let edge_cross = (0..4).any(|i| {
            let s = sample_segment(ca[i], ca[(i + 1) % 4], &b);
            s.hit
        });
        let oracle = edge_cross || cb.iter().any(|p| a.contains(p)) || ca.iter().any(|p| b.contains(p));
        if oracle {
            assert!(a.overlaps(&b), "{a:?} {b:?}");
        } else if a.overlaps(&b) {
            let gap = (0..4).map(|i| sample_segment(ca[i], ca[(i + 1) % 4], &b).closest).fold(f64::INFINITY, f64::min);
            assert!(gap < 0.01, "{a:?} {b:?} gap {gap}");
        }
    }
}

#[test]
fn in_range_boundary_is_inclusive() {
    let rsu = Rsu { id: RsuId(0), position: Point::new(0.0, 0.0), range_m: 150.0, channel_index: 0 };
    assert!(in_range(&rsu, &Point::new(150.0, 0.0)));
    assert!(in_range(&rsu, &Point::new(0.0, 0.0)));
    assert!(!in_range(&rsu, &Point::new(150.000001, 0.0)));
}

#[test]
fn building_between_endpoints_blocks() {
    let wall = Obstacle {
        id: ObstacleId(0),
        kind: ObstacleKind::Building,
        rect: Rect::from_corners(Point::new(40.0, -30.0), Point::new(60.0, 30.0)),
    };
    assert!(los_blocked(Point::new(0.0, 0.0), Point::new(100.0, 5.0), &[wall], &[]));
    assert!(!los_blocked(Point::new(0.0, 0.0), Point::new(100.0, 5.0), &[], &[]));
}

fn arb_point() -> impl Strategy<Value = Point> {
    (-40.0..40.0f64, -40.0..40.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn arb_obstacles() -> impl Strategy<Value = Vec<Obstacle>> {
    prop::collection::vec((arb_point(), 0.5..20.0f64, 0.5..8.0f64, 0.0..std::f64::consts::TAU, any::<bool>()), 0..8)
        .prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (c, l, w, h, truck))| Obstacle {
                    id: ObstacleId(i as u32),
                    kind: if truck { ObstacleKind::Truck } else { ObstacleKind::Building },
                    rect: Rect::oriented(c, l, w, h),
                })
                .collect()
        })
}

proptest! {
    #[test]
    fn los_is_fold_of_segment_tests(a in arb_point(), b in arb_point(), obs in arb_obstacles(), skip in 0u32..10) {
        let exclude = [ObstacleId(skip)];
        let fold = obs.iter().filter(|o| o.id != ObstacleId(skip)).fold(false, |acc, o| acc || segment_intersects_rect(a, b, &o.rect));
        prop_assert_eq!(los_blocked(a, b, &obs, &exclude), fold);
    }

    #[test]
    fn los_is_symmetric(a in arb_point(), b in arb_point(), obs in arb_obstacles()) {
        prop_assert_eq!(los_blocked(a, b, &obs, &[]), los_blocked(b, a, &obs, &[]));
    }

    #[test]
    fn adding_an_obstacle_never_unblocks(a in arb_point(), b in arb_point(), obs in arb_obstacles(), extra in arb_obstacles()) {
        let mut more = obs.clone();
        more.extend(extra.into_iter().map(|mut o| { o.id = ObstacleId(o.id.0 + 100); o }));
        prop_assert!(!los_blocked(a, b, &obs, &[]) || los_blocked(a, b, &more, &[]));
    }

    #[test]
    fn in_range_is_translation_invariant(px in -500.0..500.0f64, py in -500.0..500.0f64, dx in -1e3..1e3f64, dy in -1e3..1e3f64) {
        let rsu = Rsu { id: RsuId(0), position: Point::new(0.0, 0.0), range_m: 150.0, channel_index: 0 };
        let p = Point::new(px, py);
        let d = rsu.position.distance(&p);
        prop_assume!((d - 150.0).abs() > 1e-6);
        let moved = Rsu { position: rsu.position.translate(dx, dy), ..rsu.clone() };
        prop_assert_eq!(in_range(&rsu, &p), in_range(&moved, &p.translate(dx, dy)));
    }
}
