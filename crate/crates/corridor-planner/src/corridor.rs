//! Drivable corridor: left/right boundary polylines plus the reference
//! line, boundary smoothing and resampling, and signed clearance /
//! two-circle collision margins against the boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{project, Point2, Polyline, Projection, SpatialIndex};
use crate::kinematics::{VehicleGeometry, VehicleState};

/// Which side of a directed polyline faces the corridor interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteriorSide {
    Left,
    Right,
}

/// Parameters of the boundary smoothing step.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmoothingParams {
    /// Weight on squared second differences of the vertices.
    pub w_smooth: f64,
    /// Weight on squared deviation from the raw vertices.
    pub w_dev: f64,
    /// Per-vertex deviation cap (infinity norm), meters.
    pub max_dev: f64,
    /// Resample spacing applied after smoothing, meters.
    pub resolution: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self {
            w_smooth: 10.0,
            w_dev: 1.0,
            max_dev: 0.25,
            resolution: 0.1,
        }
    }
}

/// Corridor bounded by directed left/right polylines with the reference
/// line between them. All three are indexed for sublinear projection and
/// immutable after construction.
pub struct DrivableCorridor {
    left: Polyline,
    right: Polyline,
    reference: Polyline,
    left_index: SpatialIndex,
    right_index: SpatialIndex,
    reference_index: SpatialIndex,
}

impl DrivableCorridor {
    /// Builds and validates a corridor: the reference must have positive
    /// clearance to both boundaries at every vertex, and all three
    /// polylines must be directed consistently.
    pub fn new(left: Polyline, right: Polyline, reference: Polyline) -> Result<Self> {
        let corridor = Self {
            left_index: SpatialIndex::build(&left),
            right_index: SpatialIndex::build(&right),
            reference_index: SpatialIndex::build(&reference),
            left,
            right,
            reference,
        };
        for (i, &p) in corridor.reference.points().iter().enumerate() {
            let (dl, dr) = corridor.signed_clearance(p);
            if dl <= 0.0 || dr <= 0.0 {
                return Err(Error::Scenario(format!(
                    "reference vertex {i} at ({:.3}, {:.3}) is outside the corridor (clearance left {dl:.3}, right {dr:.3})",
                    p.x, p.y
                )));
            }
        }
        let samples = 64;
        for k in 0..=samples {
            let s = corridor.reference.arc_length() * k as f64 / samples as f64;
            let p = corridor.reference.point_at(s);
            let ref_proj = corridor.reference.project_scan(p);
            let (tx, ty) = (ref_proj.heading.cos(), ref_proj.heading.sin());
            for (name, proj) in [
                ("left", project(&corridor.left, &corridor.left_index, p)),
                ("right", project(&corridor.right, &corridor.right_index, p)),
            ] {
                let dot = tx * proj.heading.cos() + ty * proj.heading.sin();
                if dot <= 0.0 {
                    return Err(Error::Scenario(format!(
                        "{name} boundary is directed against the reference near arc length {s:.2}"
                    )));
                }
            }
        }
        Ok(corridor)
    }

    pub fn left(&self) -> &Polyline {
        &self.left
    }

    pub fn right(&self) -> &Polyline {
        &self.right
    }

    pub fn reference(&self) -> &Polyline {
        &self.reference
    }

    pub fn project_left(&self, p: Point2) -> Projection {
        project(&self.left, &self.left_index, p)
    }

    pub fn project_right(&self, p: Point2) -> Projection {
        project(&self.right, &self.right_index, p)
    }

    pub fn project_reference(&self, p: Point2) -> Projection {
        project(&self.reference, &self.reference_index, p)
    }

    /// Signed distances to the boundaries; both are positive when `p` is
    /// on the corridor-interior side (right of the left boundary, left of
    /// the right boundary).
    pub fn signed_clearance(&self, p: Point2) -> (f64, f64) {
        let (dl, _) = clearance_with_gradient(&self.left, &self.left_index, InteriorSide::Right, p);
        let (dr, _) = clearance_with_gradient(&self.right, &self.right_index, InteriorSide::Left, p);
        (dl, dr)
    }

    /// Clearance margins of the two collision circles against both
    /// boundaries, in the order [circle0 left, circle0 right, circle1
    /// left, circle1 right]. All four nonnegative means no boundary
    /// collision under the circle approximation.
    pub fn collision_margins(&self, state: &VehicleState, geom: &VehicleGeometry) -> [f64; 4] {
        let (sin_t, cos_t) = state.theta.sin_cos();
        let mut margins = [0.0; 4];
        for (ci, &c) in geom.circle_centers.iter().enumerate() {
            let center = Point2::new(state.x + c * cos_t, state.y + c * sin_t);
            let (dl, dr) = self.signed_clearance(center);
            margins[2 * ci] = dl - geom.circle_radius;
            margins[2 * ci + 1] = dr - geom.circle_radius;
        }
        margins
    }
}

/// Signed clearance to one boundary plus its gradient in the query point,
/// with the projection foot held fixed. The gradient is exact wherever
/// the foot is interior to a segment.
pub(crate) fn clearance_with_gradient(
    boundary: &Polyline,
    index: &SpatialIndex,
    interior: InteriorSide,
    p: Point2,
) -> (f64, [f64; 2]) {
    let proj = project(boundary, index, p);
    let dist = p.distance(proj.foot);
    // signed_offset is positive left of the boundary direction; clearance
    // is positive on the interior side.
    let sign = match interior {
        InteriorSide::Right => {
            if proj.signed_offset > 0.0 {
                -1.0
            } else {
                1.0
            }
        }
        InteriorSide::Left => {
            if proj.signed_offset < 0.0 {
                -1.0
            } else {
                1.0
            }
        }
    };
    let grad = if dist > 1e-9 {
        [sign * (p.x - proj.foot.x) / dist, sign * (p.y - proj.foot.y) / dist]
    } else {
        // On the boundary the clearance gradient points to the interior
        // normal regardless of side sign.
        let (sin_h, cos_h) = proj.heading.sin_cos();
        match interior {
            InteriorSide::Right => [sin_h, -cos_h],
            InteriorSide::Left => [-sin_h, cos_h],
        }
    };
    (sign * dist, grad)
}

/// Linearly interpolates extra vertices so consecutive points are at most
/// `resolution` apart. Original vertices are retained; the geometry is
/// unchanged.
pub fn resample(polyline: &Polyline, resolution: f64) -> Polyline {
    assert!(resolution > 0.0, "resolution must be positive");
    let pts = polyline.points();
    let mut out = Vec::with_capacity(pts.len() * 2);
    for i in 0..pts.len() - 1 {
        let a = pts[i];
        let b = pts[i + 1];
        let len = a.distance(b);
        let pieces = (len / resolution).ceil().max(1.0) as usize;
        out.push(a);
        for k in 1..pieces {
            let t = k as f64 / pieces as f64;
            out.push(Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    out.push(*pts.last().unwrap());
    Polyline::new(&out).expect("resampling a valid polyline keeps it valid")
}

/// Smooths a boundary polyline by minimizing
/// `w_smooth * sum ||p[i-1] - 2 p[i] + p[i+1]||^2 + w_dev * sum ||p[i] - raw[i]||^2`
/// subject to a per-vertex deviation cap and displacement restricted to
/// the corridor-interior side, with both endpoints fixed. Solved by
/// projected gradient descent; the feasible set per vertex is the
/// max_dev box clipped by the inward halfplane.
pub fn smooth_boundary(
    polyline: &Polyline,
    params: &SmoothingParams,
    interior: InteriorSide,
) -> Result<Polyline> {
    let raw = polyline.points();
    let n = raw.len();
    if n < 3 {
        return Ok(polyline.clone());
    }
    let outward = outward_normals(raw, interior);
    let mut disp = vec![[0.0f64; 2]; n];
    // Lipschitz constant of the gradient: the second-difference operator
    // has spectral norm at most 4, so D^T D is bounded by 16.
    let step = 1.0 / (2.0 * (16.0 * params.w_smooth + params.w_dev));
    let max_iterations = 20_000;
    let tol = 1e-10;
    let mut grad = vec![[0.0f64; 2]; n];
    for iteration in 0..max_iterations {
        // Second differences of the current (displaced) polyline.
        let pt = |i: usize| -> [f64; 2] { [raw[i].x + disp[i][0], raw[i].y + disp[i][1]] };
        let second = |i: usize| -> [f64; 2] {
            let (a, b, c) = (pt(i - 1), pt(i), pt(i + 1));
            [a[0] - 2.0 * b[0] + c[0], a[1] - 2.0 * b[1] + c[1]]
        };
        for g in grad.iter_mut() {
            *g = [0.0, 0.0];
        }
        for i in 1..n - 1 {
            let d2 = second(i);
            for axis in 0..2 {
                let g = 2.0 * params.w_smooth * d2[axis];
                grad[i - 1][axis] += g;
                grad[i][axis] += -2.0 * g;
                grad[i + 1][axis] += g;
            }
        }
        for i in 1..n - 1 {
            for axis in 0..2 {
                grad[i][axis] += 2.0 * params.w_dev * disp[i][axis];
            }
        }
        let mut max_change = 0.0f64;
        for i in 1..n - 1 {
            let proposal = [
                disp[i][0] - step * grad[i][0],
                disp[i][1] - step * grad[i][1],
            ];
            let projected = project_displacement(proposal, params.max_dev, outward[i]);
            max_change = max_change
                .max((projected[0] - disp[i][0]).abs())
                .max((projected[1] - disp[i][1]).abs());
            disp[i] = projected;
        }
        if max_change < tol {
            let smoothed: Vec<Point2> = raw
                .iter()
                .zip(&disp)
                .map(|(p, d)| Point2::new(p.x + d[0], p.y + d[1]))
                .collect();
            return Polyline::new(&smoothed);
        }
        if iteration == max_iterations - 1 {
            return Err(Error::SmoothingFailed {
                iterations: max_iterations,
                residual: max_change,
            });
        }
    }
    unreachable!()
}

/// Unit normals pointing away from the corridor interior, one per vertex
/// (angle bisector of the adjacent segments).
fn outward_normals(points: &[Point2], interior: InteriorSide) -> Vec<[f64; 2]> {
    let n = points.len();
    let seg_tangent = |i: usize| -> [f64; 2] {
        let (a, b) = (points[i], points[i + 1]);
        let len = a.distance(b);
        [(b.x - a.x) / len, (b.y - a.y) / len]
    };
    (0..n)
        .map(|i| {
            let t = if i == 0 {
                seg_tangent(0)
            } else if i == n - 1 {
                seg_tangent(n - 2)
            } else {
                let (t0, t1) = (seg_tangent(i - 1), seg_tangent(i));
                let sum = [t0[0] + t1[0], t0[1] + t1[1]];
                let norm = (sum[0] * sum[0] + sum[1] * sum[1]).sqrt();
                if norm < 1e-9 {
                    t1
                } else {
                    [sum[0] / norm, sum[1] / norm]
                }
            };
            // Left normal is (-ty, tx); outward is the non-interior side.
            match interior {
                InteriorSide::Right => [-t[1], t[0]],
                InteriorSide::Left => [t[1], -t[0]],
            }
        })
        .collect()
}

/// Euclidean projection of a proposed displacement onto
/// `{ |d|_inf <= max_dev } ∩ { d · outward <= 0 }`, computed exactly on
/// the clipped box polygon.
fn project_displacement(d: [f64; 2], max_dev: f64, outward: [f64; 2]) -> [f64; 2] {
    let clamped = [
        d[0].clamp(-max_dev, max_dev),
        d[1].clamp(-max_dev, max_dev),
    ];
    if clamped[0] * outward[0] + clamped[1] * outward[1] <= 0.0 {
        return clamped;
    }
    // The feasible set is the box polygon clipped by the halfplane; the
    // projection lies on its boundary. Clip the box and project onto the
    // resulting polygon edges.
    let m = max_dev;
    let box_corners = [[-m, -m], [m, -m], [m, m], [-m, m]];
    let inside = |p: [f64; 2]| p[0] * outward[0] + p[1] * outward[1] <= 0.0;
    let mut poly: Vec<[f64; 2]> = Vec::with_capacity(5);
    for k in 0..4 {
        let a = box_corners[k];
        let b = box_corners[(k + 1) % 4];
        let da = a[0] * outward[0] + a[1] * outward[1];
        let db = b[0] * outward[0] + b[1] * outward[1];
        if da <= 0.0 {
            poly.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let t = da / (da - db);
            poly.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    if poly.is_empty() {
        return [0.0, 0.0];
    }
    let mut best = poly[0];
    let mut best_d2 = f64::INFINITY;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 0.0 {
            (((d[0] - a[0]) * ex + (d[1] - a[1]) * ey) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let cand = [a[0] + t * ex, a[1] + t * ey];
        let d2 = (d[0] - cand[0]).powi(2) + (d[1] - cand[1]).powi(2);
        if d2 < best_d2 {
            best_d2 = d2;
            best = cand;
        }
    }
    debug_assert!(inside([best[0] * (1.0 - 1e-12), best[1] * (1.0 - 1e-12)]) || best_d2.is_finite());
    best
}

/// Smooths both boundaries, resamples all three polylines, and rebuilds
/// the corridor. With `smooth` false only the resampling is applied.
pub fn prepare(
    corridor: &DrivableCorridor,
    params: &SmoothingParams,
    smooth: bool,
) -> Result<DrivableCorridor> {
    let (left, right) = if smooth {
        (
            smooth_boundary(corridor.left(), params, InteriorSide::Right)?,
            smooth_boundary(corridor.right(), params, InteriorSide::Left)?,
        )
    } else {
        (corridor.left().clone(), corridor.right().clone())
    };
    DrivableCorridor::new(
        resample(&left, params.resolution),
        resample(&right, params.resolution),
        resample(corridor.reference(), params.resolution),
    )
}
