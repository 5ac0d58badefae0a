//! Planar helpers on current-plane polylines.

use delaunator::{triangulate, Point};

/// Degeneracy tolerance for intersections [A].
pub const INTERSECTION_EPS: f64 = 1e-9;

type P = (f64, f64);

fn cross(a: P, b: P) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn sub(a: P, b: P) -> P {
    (a.0 - b.0, a.1 - b.1)
}

/// Crossing of segments `p0→p1` and `q0→q1` as `(point, t, u)` with `t`, `u`
/// the fractional positions along each segment. Parallel segments never
/// intersect here.
pub fn segment_intersection(p0: P, p1: P, q0: P, q1: P) -> Option<(P, f64, f64)> {
    let r = sub(p1, p0);
    let s = sub(q1, q0);
    let denom = cross(r, s);
    let lr = r.0.hypot(r.1);
    let ls = s.0.hypot(s.1);
    if lr == 0.0 || ls == 0.0 || denom.abs() <= INTERSECTION_EPS * lr * ls {
        return None;
    }
    let qp = sub(q0, p0);
    let t = cross(qp, s) / denom;
    let u = cross(qp, r) / denom;
    let (et, eu) = (INTERSECTION_EPS / lr, INTERSECTION_EPS / ls);
    if t < -et || t > 1.0 + et || u < -eu || u > 1.0 + eu {
        return None;
    }
    let (t, u) = (t.clamp(0.0, 1.0), u.clamp(0.0, 1.0));
    Some(((p0.0 + t * r.0, p0.1 + t * r.1), t, u))
}

/// Closest point of segment `a→b` to `p` as `(fraction along, distance)`.
pub fn project_on_segment(p: P, a: P, b: P) -> (f64, f64) {
    let ab = sub(b, a);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * ab.0 + (p.1 - a.1) * ab.1) / len2).clamp(0.0, 1.0)
    };
    let c = (a.0 + t * ab.0, a.1 + t * ab.1);
    (t, (p.0 - c.0).hypot(p.1 - c.1))
}

/// Piecewise-linear interpolation of scattered values on their Delaunay
/// triangulation.
pub struct DelaunayInterpolator {
    points: Vec<P>,
    triangles: Vec<[usize; 3]>,
}

impl DelaunayInterpolator {
    pub fn new(points: &[P]) -> Self {
        let pts: Vec<Point> = points.iter().map(|&(x, y)| Point { x, y }).collect();
        let tri = triangulate(&pts);
        let triangles = tri
            .triangles
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        Self {
            points: points.to_vec(),
            triangles,
        }
    }

    /// Vertex indices and barycentric weights of the triangle containing `p`.
    pub fn locate(&self, p: P) -> Option<([usize; 3], [f64; 3])> {
        for t in &self.triangles {
            let (a, b, c) = (self.points[t[0]], self.points[t[1]], self.points[t[2]]);
            let det = cross(sub(b, a), sub(c, a));
            if det.abs() < 1e-18 {
                continue;
            }
            let w1 = cross(sub(p, a), sub(c, a)) / det;
            let w2 = cross(sub(b, a), sub(p, a)) / det;
            let w0 = 1.0 - w1 - w2;
            if w0 >= -1e-12 && w1 >= -1e-12 && w2 >= -1e-12 {
                return Some((*t, [w0, w1, w2]));
            }
        }
        None
    }

    pub fn interpolate(&self, p: P, values: &[f64]) -> Option<f64> {
        self.locate(p)
            .map(|(t, w)| w[0] * values[t[0]] + w[1] * values[t[1]] + w[2] * values[t[2]])
    }
}
