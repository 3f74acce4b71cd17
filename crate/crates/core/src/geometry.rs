//! Planar geometry in meters: points, polylines, polygons, circles, and a
//! uniform-grid spatial index for perception and overlap queries.
//!
//! Coordinates live in a projected CRS; there is no geographic handling.
//! Boundary points count as inside for every containment test.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("polyline needs at least two points")]
    TooFewPoints,
    #[error("consecutive polyline points coincide")]
    RepeatedPoint,
    #[error("polygon needs at least three vertices")]
    TooFewVertices,
    #[error("polygon is degenerate (zero area)")]
    DegeneratePolygon,
    #[error("polygon ring self-intersects")]
    SelfIntersecting,
    #[error("circle radius must be positive and finite")]
    BadRadius,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<R> {
    pub x: R,
    pub y: R,
}

impl<R: Real> Point<R> {
    pub fn new(x: R, y: R) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance between two points.
pub fn distance<R: Real>(a: Point<R>, b: Point<R>) -> R {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

fn cross<R: Real>(o: Point<R>, a: Point<R>, b: Point<R>) -> R {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Distance from `p` to the segment `ab`.
pub fn segment_point_distance<R: Real>(a: Point<R>, b: Point<R>, p: Point<R>) -> R {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == R::zero() {
        return distance(a, p);
    }
    let t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / len2;
    let t = t.max(R::zero()).min(R::one());
    let proj = Point::new(a.x + t * abx, a.y + t * aby);
    distance(proj, p)
}

/// True iff the minimum distance from segment `ab` to the circle center is
/// at most the radius. Tangency counts as intersection.
pub fn segment_intersects_circle<R: Real>(a: Point<R>, b: Point<R>, c: &Circle<R>) -> bool {
    segment_point_distance(a, b, c.center) <= c.radius
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline<R> {
    points: Vec<Point<R>>,
}

impl<R: Real> Polyline<R> {
    pub fn new(points: Vec<Point<R>>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(GeometryError::RepeatedPoint);
        }
        Ok(Polyline { points })
    }

    pub fn points(&self) -> &[Point<R>] {
        &self.points
    }

    pub fn first(&self) -> Point<R> {
        self.points[0]
    }

    pub fn last(&self) -> Point<R> {
        *self.points.last().unwrap()
    }

    pub fn length(&self) -> R {
        self.points
            .windows(2)
            .fold(R::zero(), |acc, w| acc + distance(w[0], w[1]))
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point<R>, Point<R>)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Point at arc distance `arc` from the first vertex, clamped to the ends.
    pub fn point_at(&self, arc: R) -> Point<R> {
        if arc <= R::zero() {
            return self.first();
        }
        let mut remaining = arc;
        for (a, b) in self.segments() {
            let seg = distance(a, b);
            if remaining <= seg {
                let t = remaining / seg;
                return Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            }
            remaining = remaining - seg;
        }
        self.last()
    }

    pub fn intersects_circle(&self, c: &Circle<R>) -> bool {
        self.segments().any(|(a, b)| segment_intersects_circle(a, b, c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon<R> {
    ring: Vec<Point<R>>,
}

impl<R: Real> Polygon<R> {
    /// Builds a polygon from an open ring (the closing edge is implicit).
    pub fn new(ring: Vec<Point<R>>) -> Result<Self, GeometryError> {
        if ring.len() < 3 {
            return Err(GeometryError::TooFewVertices);
        }
        if ring.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let poly = Polygon { ring };
        if poly.signed_area().abs() <= R::zero() {
            return Err(GeometryError::DegeneratePolygon);
        }
        if poly.self_intersects() {
            return Err(GeometryError::SelfIntersecting);
        }
        Ok(poly)
    }

    pub fn ring(&self) -> &[Point<R>] {
        &self.ring
    }

    fn edges(&self) -> impl Iterator<Item = (Point<R>, Point<R>)> + '_ {
        let n = self.ring.len();
        (0..n).map(move |i| (self.ring[i], self.ring[(i + 1) % n]))
    }

    fn signed_area(&self) -> R {
        let two = R::from_f64(2.0).unwrap();
        self.edges()
            .fold(R::zero(), |acc, (a, b)| acc + (a.x * b.y - b.x * a.y))
            / two
    }

    pub fn area(&self) -> R {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point<R> {
        let six = R::from_f64(6.0).unwrap();
        let a = self.signed_area();
        let (mut cx, mut cy) = (R::zero(), R::zero());
        for (p, q) in self.edges() {
            let w = p.x * q.y - q.x * p.y;
            cx = cx + (p.x + q.x) * w;
            cy = cy + (p.y + q.y) * w;
        }
        Point::new(cx / (six * a), cy / (six * a))
    }

    fn self_intersects(&self) -> bool {
        let n = self.ring.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // Edges sharing a vertex are allowed to touch there.
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (a, b) = (self.ring[i], self.ring[(i + 1) % n]);
                let (c, d) = (self.ring[j], self.ring[(j + 1) % n]);
                if segments_touch(a, b, c, d) {
                    return true;
                }
            }
        }
        false
    }

    /// Containment with the boundary counting as inside.
    pub fn contains(&self, p: Point<R>) -> bool {
        let eps = R::from_f64(1e-9).unwrap();
        for (a, b) in self.edges() {
            if segment_point_distance(a, b, p) <= eps {
                return true;
            }
        }
        // Even-odd ray casting toward +x.
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_int = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_int {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// True if segments `ab` and `cd` share any point.
pub fn segments_touch<R: Real>(a: Point<R>, b: Point<R>, c: Point<R>, d: Point<R>) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > R::zero() && d2 < R::zero()) || (d1 < R::zero() && d2 > R::zero()))
        && ((d3 > R::zero() && d4 < R::zero()) || (d3 < R::zero() && d4 > R::zero()))
    {
        return true;
    }
    let on = |o: Point<R>, p: Point<R>, q: Point<R>, d: R| {
        d == R::zero()
            && q.x >= o.x.min(p.x)
            && q.x <= o.x.max(p.x)
            && q.y >= o.y.min(p.y)
            && q.y <= o.y.max(p.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle<R> {
    pub center: Point<R>,
    pub radius: R,
}

impl<R: Real> Circle<R> {
    pub fn new(center: Point<R>, radius: R) -> Result<Self, GeometryError> {
        if !center.is_finite() || !radius.is_finite() || radius <= R::zero() {
            return Err(GeometryError::BadRadius);
        }
        Ok(Circle { center, radius })
    }

    pub fn contains(&self, p: Point<R>) -> bool {
        distance(self.center, p) <= self.radius
    }
}

/// Convex hull (monotone chain), counter-clockwise, without repetition.
pub fn convex_hull<R: Real>(points: &[Point<R>]) -> Vec<Point<R>> {
    let mut pts: Vec<Point<R>> = points.to_vec();
    pts.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap()
            .then(a.y.partial_cmp(&b.y).unwrap())
    });
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let half = |iter: &mut dyn Iterator<Item = Point<R>>| {
        let mut hull: Vec<Point<R>> = Vec::new();
        for p in iter {
            while hull.len() >= 2 {
                let q = hull[hull.len() - 1];
                let o = hull[hull.len() - 2];
                if cross(o, q, p) <= R::zero() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
        hull
    };
    let mut lower = half(&mut pts.iter().copied());
    let upper = half(&mut pts.iter().rev().copied());
    lower.extend(upper);
    lower
}

/// Uniform-grid index over entity ids. Queries return a deterministic,
/// id-sorted superset of the entities whose geometry intersects the zone;
/// the caller filters with exact tests.
#[derive(Debug, Clone)]
pub struct SpatialIndex<R> {
    cell: R,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl<R: Real> SpatialIndex<R> {
    pub fn new(cell_size: R) -> Self {
        assert!(cell_size > R::zero(), "cell size must be positive");
        SpatialIndex {
            cell: cell_size,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, x: R, y: R) -> (i64, i64) {
        (
            (x / self.cell).floor().to_i64().unwrap(),
            (y / self.cell).floor().to_i64().unwrap(),
        )
    }

    pub fn clear(&mut self) {
        self.buckets.clear();
    }

    pub fn insert_point(&mut self, id: u32, p: Point<R>) {
        let key = self.key(p.x, p.y);
        self.buckets.entry(key).or_default().push(id);
    }

    /// Inserts `id` into every cell overlapped by the circle's bounding box.
    pub fn insert_circle(&mut self, id: u32, c: &Circle<R>) {
        let (x0, y0) = self.key(c.center.x - c.radius, c.center.y - c.radius);
        let (x1, y1) = self.key(c.center.x + c.radius, c.center.y + c.radius);
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                self.buckets.entry((gx, gy)).or_default().push(id);
            }
        }
    }

    /// Superset of ids whose geometry may intersect `zone`, sorted, deduped.
    pub fn query_circle(&self, zone: &Circle<R>) -> Vec<u32> {
        self.query_bbox(
            zone.center.x - zone.radius,
            zone.center.y - zone.radius,
            zone.center.x + zone.radius,
            zone.center.y + zone.radius,
        )
    }

    /// Superset of ids whose geometry may contain the point.
    pub fn query_point(&self, p: Point<R>) -> Vec<u32> {
        self.query_bbox(p.x, p.y, p.x, p.y)
    }

    fn query_bbox(&self, x0: R, y0: R, x1: R, y1: R) -> Vec<u32> {
        let (gx0, gy0) = self.key(x0, y0);
        let (gx1, gy1) = self.key(x1, y1);
        let mut out = Vec::new();
        for gx in gx0..=gx1 {
            for gy in gy0..=gy1 {
                if let Some(ids) = self.buckets.get(&(gx, gy)) {
                    out.extend_from_slice(ids);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::new(x, y)
    }

    fn unit_square() -> Polygon<f64> {
        Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn distance_identity_and_345() {
        assert_eq!(distance(p(0.0, 0.0), p(0.0, 0.0)), 0.0);
        assert_eq!(distance(p(0.0, 0.0), p(3.0, 4.0)), 5.0);
    }

    #[test]
    fn distance_matches_hypot_oracle() {
        let mut rng = crate::StreamRng::seed_from_u64(7);
        for _ in 0..100 {
            let a = p(rng.gen_range(-1e4..1e4), rng.gen_range(-1e4..1e4));
            let b = p(rng.gen_range(-1e4..1e4), rng.gen_range(-1e4..1e4));
            let expect = (a.x - b.x).hypot(a.y - b.y);
            assert!((distance(a, b) - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn distance_generic_f32() {
        let a: Point<f32> = Point::new(0.0, 0.0);
        let b: Point<f32> = Point::new(3.0, 4.0);
        assert_eq!(distance(a, b), 5.0f32);
    }

    #[test]
    fn polygon_contains_centroid_and_excludes_far_point() {
        let sq = unit_square();
        assert!(sq.contains(sq.centroid()));
        assert!(!sq.contains(p(2.0, 2.0)));
    }

    #[test]
    fn polygon_boundary_counts_as_inside() {
        let sq = unit_square();
        assert!(sq.contains(p(0.5, 0.0)));
        assert!(sq.contains(p(1.0, 1.0)));
    }

    #[test]
    fn polygon_rejects_degenerate_and_self_intersecting() {
        assert_eq!(
            Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]).unwrap_err(),
            GeometryError::DegeneratePolygon
        );
        // Crossing quad with non-zero net area.
        assert_eq!(
            Polygon::new(vec![p(0.0, 0.0), p(4.0, 0.0), p(1.0, 3.0), p(3.0, 3.0)]).unwrap_err(),
            GeometryError::SelfIntersecting
        );
    }

    #[test]
    fn polygon_contains_matches_halfplane_oracle_on_convex() {
        // Convex hexagon, counter-clockwise.
        let hex = Polygon::new(vec![
            p(2.0, 0.0),
            p(4.0, 1.0),
            p(4.0, 3.0),
            p(2.0, 4.0),
            p(0.0, 3.0),
            p(0.0, 1.0),
        ])
        .unwrap();
        let inside_oracle = |q: Point<f64>| -> bool {
            let ring = hex.ring();
            let n = ring.len();
            (0..n).all(|i| {
                let a = ring[i];
                let b = ring[(i + 1) % n];
                cross(a, b, q) >= -1e-12
            })
        };
        let mut rng = crate::StreamRng::seed_from_u64(11);
        for _ in 0..1000 {
            let q = p(rng.gen_range(-1.0..5.0), rng.gen_range(-1.0..5.0));
            assert_eq!(hex.contains(q), inside_oracle(q), "point {q:?}");
        }
    }

    #[test]
    fn segment_circle_tangent_counts() {
        let c = Circle::new(p(5.0, 3.0), 3.0).unwrap();
        assert!(segment_intersects_circle(p(0.0, 0.0), p(10.0, 0.0), &c));
        let c = Circle::new(p(5.0, 4.0), 3.0).unwrap();
        assert!(!segment_intersects_circle(p(0.0, 0.0), p(10.0, 0.0), &c));
    }

    #[test]
    fn segment_circle_matches_sampling_oracle() {
        let mut rng = crate::StreamRng::seed_from_u64(13);
        let mut decisive = 0;
        for _ in 0..1000 {
            let a = p(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let b = p(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            if a == b {
                continue;
            }
            let c = Circle::new(
                p(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)),
                rng.gen_range(0.5..20.0),
            )
            .unwrap();
            const N: usize = 10_000;
            let mut min = f64::INFINITY;
            for k in 0..=N {
                let t = k as f64 / N as f64;
                let q = p(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                min = min.min(distance(q, c.center));
            }
            // Skip cases within the sampling resolution of exact tangency.
            let margin = distance(a, b) / N as f64 + 1e-12;
            if (min - c.radius).abs() <= margin {
                continue;
            }
            decisive += 1;
            assert_eq!(segment_intersects_circle(a, b, &c), min <= c.radius);
        }
        assert!(decisive > 900, "too many ambiguous samples: {decisive}");
    }

    #[test]
    fn spatial_index_empty_and_single() {
        let idx: SpatialIndex<f64> = SpatialIndex::new(10.0);
        let zone = Circle::new(p(0.0, 0.0), 5.0).unwrap();
        assert!(idx.query_circle(&zone).is_empty());

        let mut idx = SpatialIndex::new(10.0);
        idx.insert_point(7, p(0.0, 0.0));
        assert_eq!(idx.query_circle(&zone), vec![7]);
    }

    #[test]
    fn spatial_index_filtered_equals_bruteforce() {
        let mut rng = crate::StreamRng::seed_from_u64(17);
        let pts: Vec<Point<f64>> = (0..500)
            .map(|_| p(rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0)))
            .collect();
        let mut idx = SpatialIndex::new(20.0);
        for (i, q) in pts.iter().enumerate() {
            idx.insert_point(i as u32, *q);
        }
        for _ in 0..50 {
            let zone = Circle::new(
                p(rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0)),
                rng.gen_range(1.0..80.0),
            )
            .unwrap();
            let filtered: Vec<u32> = idx
                .query_circle(&zone)
                .into_iter()
                .filter(|&i| zone.contains(pts[i as usize]))
                .collect();
            let brute: Vec<u32> = (0..pts.len() as u32)
                .filter(|&i| zone.contains(pts[i as usize]))
                .collect();
            assert_eq!(filtered, brute);
        }
    }

    #[test]
    fn polyline_validation_and_length() {
        assert_eq!(
            Polyline::new(vec![p(0.0, 0.0)]).unwrap_err(),
            GeometryError::TooFewPoints
        );
        assert_eq!(
            Polyline::new(vec![p(0.0, 0.0), p(0.0, 0.0)]).unwrap_err(),
            GeometryError::RepeatedPoint
        );
        let line = Polyline::new(vec![p(0.0, 0.0), p(3.0, 0.0), p(3.0, 4.0)]).unwrap();
        assert_eq!(line.length(), 7.0);
        assert_eq!(line.point_at(4.0), p(3.0, 1.0));
    }

    #[test]
    fn hull_of_grid_is_square() {
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                pts.push(p(i as f64, j as f64));
            }
        }
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
    }
}
