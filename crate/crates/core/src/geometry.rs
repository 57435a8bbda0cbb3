//! Planar polygon helpers shared by the outline and feature modules.

use crate::data::Point2;

/// Shoelace signed area. Positive when the vertices run clockwise on screen
/// (y pointing down), i.e. counter-clockwise in y-up coordinates.
pub fn signed_area(points: &[Point2]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

pub fn area(points: &[Point2]) -> f64 {
    signed_area(points).abs()
}

pub fn perimeter(points: &[Point2]) -> f64 {
    let n = points.len();
    (0..n).map(|i| points[i].dist(points[(i + 1) % n])).sum()
}

/// Area centroid of a simple polygon. Falls back to the vertex mean when the
/// polygon encloses no area.
pub fn centroid(points: &[Point2]) -> Point2 {
    let n = points.len();
    // Accumulate relative to the first vertex to limit cancellation for
    // outlines placed far from the origin.
    let o = points[0];
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = points[i] - o;
        let q = points[(i + 1) % n] - o;
        let cross = p.x * q.y - q.x * p.y;
        a2 += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    if a2.abs() <= f64::EPSILON * perimeter(points).powi(2) {
        return vertex_mean(points);
    }
    Point2::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
}

pub fn vertex_mean(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point2::new(sx / n, sy / n)
}

/// Resample a closed polygon at `count` points spaced uniformly by arc length,
/// starting at vertex `start` and following the vertex order.
pub fn resample_closed(points: &[Point2], start: usize, count: usize) -> Vec<Point2> {
    let n = points.len();
    let ordered: Vec<Point2> = (0..n).map(|k| points[(start + k) % n]).collect();
    let seg: Vec<f64> = (0..n)
        .map(|k| ordered[k].dist(ordered[(k + 1) % n]))
        .collect();
    let total: f64 = seg.iter().sum();
    let mut out = Vec::with_capacity(count);
    let mut edge = 0usize;
    let mut walked = 0.0;
    for k in 0..count {
        let target = total * k as f64 / count as f64;
        while edge < n - 1 && walked + seg[edge] < target {
            walked += seg[edge];
            edge += 1;
        }
        let a = ordered[edge];
        let b = ordered[(edge + 1) % n];
        let frac = if seg[edge] > 0.0 {
            ((target - walked) / seg[edge]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(Point2::new(
            a.x + frac * (b.x - a.x),
            a.y + frac * (b.y - a.y),
        ));
    }
    out
}

/// Total length of the intersection of the polygon with the line
/// `{p : (p - origin)·axis = offset}`, summed over every inside interval.
/// `None` when the line misses the polygon or the crossing count is odd.
pub fn chord_length(points: &[Point2], origin: Point2, axis: Point2, offset: f64) -> Option<f64> {
    let perp = Point2::new(-axis.y, axis.x);
    let n = points.len();
    let mut hits = Vec::new();
    for i in 0..n {
        let a = points[i] - origin;
        let b = points[(i + 1) % n] - origin;
        let da = a.dot(axis) - offset;
        let db = b.dot(axis) - offset;
        if (da > 0.0) != (db > 0.0) {
            let t = da / (da - db);
            let pa = a.dot(perp);
            let pb = b.dot(perp);
            hits.push(pa + t * (pb - pa));
        }
    }
    if hits.is_empty() || hits.len() % 2 != 0 {
        return None;
    }
    hits.sort_by(|x, y| x.total_cmp(y));
    Some(hits.chunks(2).map(|pair| pair[1] - pair[0]).sum())
}

/// First intersection of the ray `origin + s·dir` (s > 0) with the polygon
/// boundary.
pub fn ray_hit(points: &[Point2], origin: Point2, dir: Point2) -> Option<Point2> {
    let n = points.len();
    let mut best: Option<f64> = None;
    for i in 0..n {
        let a = points[i] - origin;
        let e = points[(i + 1) % n] - points[i];
        let denom = dir.cross(e);
        if denom.abs() < 1e-300 {
            continue;
        }
        let s = a.cross(e) / denom;
        let u = a.cross(dir) / denom;
        if s > 0.0 && (0.0..=1.0).contains(&u) && best.is_none_or(|b| s < b) {
            best = Some(s);
        }
    }
    best.map(|s| Point2::new(origin.x + s * dir.x, origin.y + s * dir.y))
}
