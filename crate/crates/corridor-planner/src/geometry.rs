//! Directed polylines with arc-length parameterization, point projection,
//! and a bounding-volume tree that makes projection sublinear.
//!
//! Projection is the hot path of the planner: every objective and
//! constraint evaluation projects vehicle points onto the corridor
//! boundaries and the reference line. The indexed and the exhaustive
//! projection are guaranteed to return bit-identical results so that
//! optimization traces do not depend on which path was used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum spacing between consecutive polyline vertices. Closer points
/// are merged at construction; degenerate segments would have undefined
/// headings.
pub const MIN_VERTEX_SPACING: f64 = 1e-6;

/// A point in the map frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A directed polyline with cumulative arc length per vertex.
#[derive(Debug, Clone)]
pub struct Polyline {
    points: Vec<Point2>,
    cum_arc: Vec<f64>,
}

/// Result of projecting a query point onto a polyline.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    /// Nearest point on the polyline.
    pub foot: Point2,
    /// Direction of the segment containing the foot, radians. At shared
    /// vertices the lower segment index wins, so the heading there is the
    /// incoming segment's direction.
    pub heading: f64,
    /// Arc length of the foot along the polyline, meters.
    pub arc_length: f64,
    /// Perpendicular offset of the query from the containing segment's
    /// line, positive when the query lies left of the segment direction.
    /// Equals the Euclidean query-foot distance when the foot is interior
    /// to a segment.
    pub signed_offset: f64,
    /// Index of the containing segment.
    pub segment_index: usize,
}

impl Polyline {
    /// Builds a polyline from ordered points, merging points closer than
    /// [`MIN_VERTEX_SPACING`].
    pub fn new(points: &[Point2]) -> Result<Self> {
        let mut merged: Vec<Point2> = Vec::with_capacity(points.len());
        for &p in points {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::InvalidPolyline(format!(
                    "non-finite coordinate ({}, {})",
                    p.x, p.y
                )));
            }
            match merged.last() {
                Some(last) if last.distance(p) < MIN_VERTEX_SPACING => {}
                _ => merged.push(p),
            }
        }
        if merged.len() < 2 {
            return Err(Error::InvalidPolyline(format!(
                "needs at least 2 distinct points, got {}",
                merged.len()
            )));
        }
        let mut cum_arc = Vec::with_capacity(merged.len());
        cum_arc.push(0.0);
        for w in merged.windows(2) {
            let step = w[0].distance(w[1]);
            cum_arc.push(cum_arc.last().unwrap() + step);
        }
        Ok(Self {
            points: merged,
            cum_arc,
        })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn cum_arc(&self) -> &[f64] {
        &self.cum_arc
    }

    pub fn num_segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn arc_length(&self) -> f64 {
        *self.cum_arc.last().unwrap()
    }

    /// Direction of segment `i`, radians.
    pub fn segment_heading(&self, i: usize) -> f64 {
        let a = self.points[i];
        let b = self.points[i + 1];
        (b.y - a.y).atan2(b.x - a.x)
    }

    /// Point at arc length `s`, clamped to the polyline ends.
    pub fn point_at(&self, s: f64) -> Point2 {
        if s <= 0.0 {
            return self.points[0];
        }
        if s >= self.arc_length() {
            return *self.points.last().unwrap();
        }
        let seg = match self
            .cum_arc
            .binary_search_by(|v| v.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.num_segments() - 1),
            Err(i) => i - 1,
        };
        let a = self.points[seg];
        let b = self.points[seg + 1];
        let len = self.cum_arc[seg + 1] - self.cum_arc[seg];
        let t = (s - self.cum_arc[seg]) / len;
        Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    }

    /// Exhaustive projection over all segments. Ties at shared vertices
    /// resolve to the lower segment index.
    pub fn project_scan(&self, query: Point2) -> Projection {
        let mut best = self.projection_onto_segment(0, query);
        let mut best_d2 = best.0;
        for i in 1..self.num_segments() {
            let cand = self.projection_onto_segment(i, query);
            if cand.0 < best_d2 {
                best = cand;
                best_d2 = cand.0;
            }
        }
        self.finish_projection(best.1, best.2, query)
    }

    /// Squared distance, segment index, clamped parameter.
    fn projection_onto_segment(&self, i: usize, q: Point2) -> (f64, usize, f64) {
        let a = self.points[i];
        let b = self.points[i + 1];
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        let t = (((q.x - a.x) * dx + (q.y - a.y) * dy) / len2).clamp(0.0, 1.0);
        let fx = a.x + t * dx;
        let fy = a.y + t * dy;
        let (ex, ey) = (q.x - fx, q.y - fy);
        (ex * ex + ey * ey, i, t)
    }

    fn finish_projection(&self, seg: usize, t: f64, q: Point2) -> Projection {
        let a = self.points[seg];
        let b = self.points[seg + 1];
        let foot = Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
        let seg_len = self.cum_arc[seg + 1] - self.cum_arc[seg];
        let heading = self.segment_heading(seg);
        // Cross product of segment direction with (query - a): positive left.
        let (dx, dy) = ((b.x - a.x) / seg_len, (b.y - a.y) / seg_len);
        let signed_offset = dx * (q.y - a.y) - dy * (q.x - a.x);
        Projection {
            foot,
            heading,
            arc_length: self.cum_arc[seg] + t * seg_len,
            signed_offset,
            segment_index: seg,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl Aabb {
    fn of_segment(a: Point2, b: Point2) -> Self {
        Self {
            min_x: a.x.min(b.x),
            min_y: a.y.min(b.y),
            max_x: a.x.max(b.x),
            max_y: a.y.max(b.y),
        }
    }

    fn merge(&self, other: &Aabb) -> Aabb {
        Aabb {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    fn distance2(&self, q: Point2) -> f64 {
        let dx = (self.min_x - q.x).max(0.0).max(q.x - self.max_x);
        let dy = (self.min_y - q.y).max(0.0).max(q.y - self.max_y);
        dx * dx + dy * dy
    }
}

enum BvhNode {
    Leaf {
        aabb: Aabb,
        /// Range into the segment order array.
        start: usize,
        end: usize,
    },
    Internal {
        aabb: Aabb,
        left: usize,
        right: usize,
    },
}

const LEAF_SIZE: usize = 4;

/// Bounding-volume tree over polyline segments. Immutable after
/// construction; queries return results identical to an exhaustive scan.
pub struct SpatialIndex {
    nodes: Vec<BvhNode>,
    /// Segment indices, partitioned during the build.
    order: Vec<usize>,
    root: usize,
}

impl SpatialIndex {
    pub fn build(polyline: &Polyline) -> Self {
        let n = polyline.num_segments();
        let mut order: Vec<usize> = (0..n).collect();
        let centroids: Vec<Point2> = (0..n)
            .map(|i| {
                let a = polyline.points()[i];
                let b = polyline.points()[i + 1];
                Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
            })
            .collect();
        let aabbs: Vec<Aabb> = (0..n)
            .map(|i| Aabb::of_segment(polyline.points()[i], polyline.points()[i + 1]))
            .collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 2);
        let root = Self::build_node(&mut nodes, &mut order, 0, n, &centroids, &aabbs);
        Self { nodes, order, root }
    }

    fn build_node(
        nodes: &mut Vec<BvhNode>,
        order: &mut [usize],
        start: usize,
        end: usize,
        centroids: &[Point2],
        aabbs: &[Aabb],
    ) -> usize {
        let slice = &order[start..end];
        let mut aabb = aabbs[slice[0]];
        for &s in &slice[1..] {
            aabb = aabb.merge(&aabbs[s]);
        }
        if end - start <= LEAF_SIZE {
            nodes.push(BvhNode::Leaf { aabb, start, end });
            return nodes.len() - 1;
        }
        // Median split along the longer axis of the centroid spread.
        let split_x = (aabb.max_x - aabb.min_x) >= (aabb.max_y - aabb.min_y);
        let mid = start + (end - start) / 2;
        let key = |s: &usize| {
            if split_x {
                centroids[*s].x
            } else {
                centroids[*s].y
            }
        };
        order[start..end].select_nth_unstable_by(mid - start, |a, b| {
            key(a).partial_cmp(&key(b)).unwrap().then(a.cmp(b))
        });
        let left = Self::build_node(nodes, order, start, mid, centroids, aabbs);
        let right = Self::build_node(nodes, order, mid, end, centroids, aabbs);
        let aabb = match (&nodes[left], &nodes[right]) {
            (
                BvhNode::Leaf { aabb: a, .. } | BvhNode::Internal { aabb: a, .. },
                BvhNode::Leaf { aabb: b, .. } | BvhNode::Internal { aabb: b, .. },
            ) => a.merge(b),
        };
        nodes.push(BvhNode::Internal { aabb, left, right });
        nodes.len() - 1
    }

    /// Nearest segment and clamped parameter, with the same tie rule as
    /// the exhaustive scan: equal distances resolve to the lower segment
    /// index.
    fn nearest(&self, polyline: &Polyline, q: Point2) -> (usize, f64) {
        let mut best_d2 = f64::INFINITY;
        let mut best_seg = usize::MAX;
        let mut best_t = 0.0;
        let mut stack = Vec::with_capacity(64);
        stack.push(self.root);
        while let Some(idx) = stack.pop() {
            match &self.nodes[idx] {
                BvhNode::Leaf { aabb, start, end } => {
                    if aabb.distance2(q) > best_d2 {
                        continue;
                    }
                    for &seg in &self.order[*start..*end] {
                        let (d2, _, t) = polyline.projection_onto_segment(seg, q);
                        if d2 < best_d2 || (d2 == best_d2 && seg < best_seg) {
                            best_d2 = d2;
                            best_seg = seg;
                            best_t = t;
                        }
                    }
                }
                BvhNode::Internal { aabb, left, right } => {
                    if aabb.distance2(q) > best_d2 {
                        continue;
                    }
                    // Push the farther child first so the nearer is
                    // explored first and tightens the bound early.
                    let dl = self.node_aabb(*left).distance2(q);
                    let dr = self.node_aabb(*right).distance2(q);
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        (best_seg, best_t)
    }

    fn node_aabb(&self, idx: usize) -> &Aabb {
        match &self.nodes[idx] {
            BvhNode::Leaf { aabb, .. } | BvhNode::Internal { aabb, .. } => aabb,
        }
    }

    pub fn num_leaf_segments(&self) -> usize {
        self.order.len()
    }
}

/// Projects `query` onto `polyline` through the spatial index. Returns the
/// globally nearest foot point; the perpendicular foot is clamped to
/// segment endpoints where it falls outside a segment.
pub fn project(polyline: &Polyline, index: &SpatialIndex, query: Point2) -> Projection {
    let (seg, t) = index.nearest(polyline, query);
    polyline.finish_projection(seg, t, query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(v: &[(f64, f64)]) -> Vec<Point2> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    #[test]
    fn straight_segment_arc_length() {
        let p = Polyline::new(&pts(&[(0.0, 0.0), (10.0, 0.0)])).unwrap();
        assert_eq!(p.cum_arc(), &[0.0, 10.0]);
    }

    #[test]
    fn three_four_five_arc_length() {
        let p = Polyline::new(&pts(&[(0.0, 0.0), (3.0, 4.0)])).unwrap();
        assert_eq!(p.cum_arc(), &[0.0, 5.0]);
    }

    #[test]
    fn duplicate_points_merged() {
        let p = Polyline::new(&pts(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)])).unwrap();
        assert_eq!(p.points().len(), 2);
        assert_eq!(p.cum_arc(), &[0.0, 1.0]);
    }

    #[test]
    fn too_few_distinct_points_rejected() {
        let err = Polyline::new(&pts(&[(1.0, 1.0), (1.0, 1.0)])).unwrap_err();
        assert!(matches!(err, Error::InvalidPolyline(_)));
    }

    #[test]
    fn projection_interior_foot() {
        let p = Polyline::new(&pts(&[(0.0, 0.0), (10.0, 0.0)])).unwrap();
        let idx = SpatialIndex::build(&p);
        let proj = project(&p, &idx, Point2::new(3.0, 2.0));
        assert_eq!(proj.foot, Point2::new(3.0, 0.0));
        assert_eq!(proj.heading, 0.0);
        assert_eq!(proj.arc_length, 3.0);
        assert_eq!(proj.signed_offset, 2.0);
        assert_eq!(proj.segment_index, 0);
    }

    #[test]
    fn projection_endpoint_clamp() {
        let p = Polyline::new(&pts(&[(0.0, 0.0), (10.0, 0.0)])).unwrap();
        let idx = SpatialIndex::build(&p);
        let proj = project(&p, &idx, Point2::new(-1.0, 1.0));
        assert_eq!(proj.foot, Point2::new(0.0, 0.0));
        assert_eq!(proj.arc_length, 0.0);
    }

    #[test]
    fn two_segment_index_has_all_leaves() {
        let p = Polyline::new(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)])).unwrap();
        let idx = SpatialIndex::build(&p);
        assert_eq!(idx.num_leaf_segments(), 2);
    }

    #[test]
    fn vertex_tie_prefers_lower_segment() {
        // Query equidistant from both segments only at the shared vertex.
        let p = Polyline::new(&pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])).unwrap();
        let idx = SpatialIndex::build(&p);
        let proj = project(&p, &idx, Point2::new(1.5, -0.5));
        assert_eq!(proj.segment_index, 0);
        let scan = p.project_scan(Point2::new(1.5, -0.5));
        assert_eq!(scan.segment_index, 0);
    }

    fn random_polyline(rng: &mut ChaCha8Rng, n: usize) -> Polyline {
        // Random walk with bounded turn per step so the polyline is
        // directed but wiggly.
        let mut heading: f64 = rng.gen_range(-0.5..0.5);
        let mut p = Point2::new(0.0, 0.0);
        let mut points = vec![p];
        for _ in 0..n {
            heading += rng.gen_range(-0.4..0.4);
            let step = rng.gen_range(0.2..1.5);
            p = Point2::new(p.x + step * heading.cos(), p.y + step * heading.sin());
            points.push(p);
        }
        Polyline::new(&points).unwrap()
    }

    #[test]
    fn indexed_matches_scan_on_random_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let poly = random_polyline(&mut rng, 10_000);
        let idx = SpatialIndex::build(&poly);
        for _ in 0..1000 {
            let q = Point2::new(rng.gen_range(-20.0..800.0), rng.gen_range(-120.0..120.0));
            let a = project(&poly, &idx, q);
            let b = poly.project_scan(q);
            assert_eq!(a.segment_index, b.segment_index, "query {q:?}");
            assert_eq!(a.foot.x.to_bits(), b.foot.x.to_bits());
            assert_eq!(a.foot.y.to_bits(), b.foot.y.to_bits());
            assert_eq!(a.arc_length.to_bits(), b.arc_length.to_bits());
        }
    }

    #[test]
    fn projection_beats_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let poly = random_polyline(&mut rng, 40);
        let idx = SpatialIndex::build(&poly);
        for _ in 0..50 {
            let q = Point2::new(rng.gen_range(-5.0..40.0), rng.gen_range(-15.0..15.0));
            let proj = project(&poly, &idx, q);
            let d = q.distance(proj.foot);
            let mut s = 0.0;
            while s <= poly.arc_length() {
                let p = poly.point_at(s);
                assert!(
                    d <= q.distance(p) + 1e-6,
                    "foot {d} farther than sample at s={s}"
                );
                s += 1e-3;
            }
        }
    }

    proptest! {
        #[test]
        fn signed_offset_flips_under_mirror(qx in -5.0..15.0f64, qy in 0.01..5.0f64) {
            let p = Polyline::new(&pts(&[(0.0, 0.0), (10.0, 0.0)])).unwrap();
            let idx = SpatialIndex::build(&p);
            let above = project(&p, &idx, Point2::new(qx, qy));
            let below = project(&p, &idx, Point2::new(qx, -qy));
            prop_assert!((above.signed_offset + below.signed_offset).abs() < 1e-12);
            prop_assert!(above.signed_offset > 0.0);
        }
    }
}
