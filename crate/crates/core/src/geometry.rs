//! Planar scene model: space, roads and lanes, RSUs, rectangular obstacles, and
//! line-of-sight queries.
//!
//! All shapes are generic over [`Scalar`]; the simulator itself runs on `f64`
//! through the aliases exported at the crate root.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn translate(&self, dx: T, dy: T) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

/// Oriented rectangle described by its center, half extents along its own
/// axes, and the heading of its length axis (radians, counter-clockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub center: Point<T>,
    pub half_length: T,
    pub half_width: T,
    pub heading: T,
}

impl<T: Scalar> Rect<T> {
    pub fn oriented(center: Point<T>, length: T, width: T, heading: T) -> Self {
        let two = T::lit(2.0);
        Self {
            center,
            half_length: length / two,
            half_width: width / two,
            heading,
        }
    }

    /// Axis-aligned rectangle from its min/max corners.
    pub fn from_corners(min: Point<T>, max: Point<T>) -> Self {
        let two = T::lit(2.0);
        Self {
            center: Point::new((min.x + max.x) / two, (min.y + max.y) / two),
            half_length: (max.x - min.x).abs() / two,
            half_width: (max.y - min.y).abs() / two,
            heading: T::zero(),
        }
    }

    pub fn square(center: Point<T>, side: T) -> Self {
        Self::oriented(center, side, side, T::zero())
    }

    pub fn area(&self) -> T {
        T::lit(4.0) * self.half_length * self.half_width
    }

    /// Maps a world point into the rectangle's local frame.
    fn to_local(&self, p: &Point<T>) -> Point<T> {
        let (s, c) = self.heading.sin_cos();
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        Point::new(dx * c + dy * s, -dx * s + dy * c)
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_length && l.y.abs() <= self.half_width
    }

    pub fn corners(&self) -> [Point<T>; 4] {
        let (s, c) = self.heading.sin_cos();
        let (hl, hw) = (self.half_length, self.half_width);
        let at = |u: T, v: T| Point::new(self.center.x + u * c - v * s, self.center.y + u * s + v * c);
        [at(-hl, -hw), at(hl, -hw), at(hl, hw), at(-hl, hw)]
    }

    /// Separating-axis overlap test between two oriented rectangles (closed).
    pub fn overlaps(&self, other: &Self) -> bool {
        let axes = [self.heading, self.heading + T::FRAC_PI_2(), other.heading, other.heading + T::FRAC_PI_2()];
        let a = self.corners();
        let b = other.corners();
        axes.iter().all(|&angle| {
            let (s, c) = angle.sin_cos();
            let project = |pts: &[Point<T>; 4]| {
                pts.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
                    let d = p.x * c + p.y * s;
                    (lo.min(d), hi.max(d))
                })
            };
            let (a_lo, a_hi) = project(&a);
            let (b_lo, b_hi) = project(&b);
            a_lo <= b_hi && b_lo <= a_hi
        })
    }
}

/// True iff the closed segment `[p1, p2]` meets the closed rectangle `r`.
///
/// Slab clipping in the rectangle frame. A zero-length segment degenerates to
/// a point-in-rectangle test.
pub fn segment_intersects_rect<T: Scalar>(p1: Point<T>, p2: Point<T>, r: &Rect<T>) -> bool {
    let a = r.to_local(&p1);
    let b = r.to_local(&p2);
    let mut t_lo = T::zero();
    let mut t_hi = T::one();
    for (start, delta, half) in [(a.x, b.x - a.x, r.half_length), (a.y, b.y - a.y, r.half_width)] {
        if delta == T::zero() {
            if start < -half || start > half {
                return false;
            }
            continue;
        }
        let t1 = (-half - start) / delta;
        let t2 = (half - start) / delta;
        t_lo = t_lo.max(t1.min(t2));
        t_hi = t_hi.min(t1.max(t2));
        if t_lo > t_hi {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObstacleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Building,
    Truck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle<T> {
    pub id: ObstacleId,
    pub kind: ObstacleKind,
    pub rect: Rect<T>,
}

/// True iff any obstacle other than those in `exclude` crosses the segment
/// between `tx` and `rx`.
///
/// `exclude` carries the truck bodies of the endpoints themselves.
pub fn los_blocked<T: Scalar>(
    tx: Point<T>,
    rx: Point<T>,
    obstacles: &[Obstacle<T>],
    exclude: &[ObstacleId],
) -> bool {
    obstacles
        .iter()
        .filter(|o| !exclude.contains(&o.id))
        .any(|o| segment_intersects_rect(tx, rx, &o.rect))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec<T> {
    /// East-west extent.
    pub width_m: T,
    /// North-south extent.
    pub height_m: T,
}

impl<T: Scalar> SpaceSpec<T> {
    pub fn contains(&self, p: &Point<T>) -> bool {
        p.x >= T::zero() && p.x <= self.width_m && p.y >= T::zero() && p.y <= self.height_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaneDirection {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaneId(pub u32);

/// A straight lane spanning the whole space along its road's axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Lane<T> {
    pub id: LaneId,
    pub road: u32,
    pub axis: Axis,
    /// Cross-axis coordinate of the lane centerline.
    pub offset: T,
    pub direction: LaneDirection,
    pub length: T,
}

impl<T: Scalar> Lane<T> {
    /// World position of a point `s` meters along the lane in its travel direction.
    pub fn point_at(&self, s: T) -> Point<T> {
        let along = match self.direction {
            LaneDirection::Positive => s,
            LaneDirection::Negative => self.length - s,
        };
        match self.axis {
            Axis::Horizontal => Point::new(along, self.offset),
            Axis::Vertical => Point::new(self.offset, along),
        }
    }

    /// Heading of travel, radians counter-clockwise from +x.
    pub fn heading(&self) -> T {
        let base = match self.axis {
            Axis::Horizontal => T::zero(),
            Axis::Vertical => T::FRAC_PI_2(),
        };
        match self.direction {
            LaneDirection::Positive => base,
            LaneDirection::Negative => base + T::PI(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Road<T> {
    pub id: u32,
    pub axis: Axis,
    pub centerline: T,
    pub lanes: Vec<Lane<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RsuId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct Rsu<T> {
    pub id: RsuId,
    pub position: Point<T>,
    pub range_m: T,
    pub channel_index: usize,
}

/// Range check with an inclusive boundary.
pub fn in_range<T: Scalar>(rsu: &Rsu<T>, p: &Point<T>) -> bool {
    rsu.position.distance(p) <= rsu.range_m
}
