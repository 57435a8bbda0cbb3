//! Direct least-squares ellipse fitting.
//!
//! The conic `A x² + B xy + C y² + D x + E y + F = 0` is fitted under the
//! ellipse constraint `4AC − B² = 1`, using the block-partitioned scatter
//! matrices so that the 6×6 generalised eigenproblem reduces to a 3×3 one.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::data::{Outline, Point2};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseFit {
    pub center: Point2,
    /// Full length of the major axis.
    pub major_axis_len: f64,
    /// Full length of the minor axis.
    pub minor_axis_len: f64,
    /// Direction of the major axis in radians, in `[0, π)`.
    pub orientation: f64,
}

impl EllipseFit {
    pub fn major_dir(&self) -> Point2 {
        let (s, c) = self.orientation.sin_cos();
        Point2::new(c, s)
    }

    pub fn eccentricity(&self) -> f64 {
        let r = self.minor_axis_len / self.major_axis_len;
        (1.0 - r * r).max(0.0).sqrt()
    }
}

pub fn fit_ellipse(outline: &Outline) -> Result<EllipseFit> {
    fit_ellipse_points(outline.points())
}

pub fn fit_ellipse_points(points: &[Point2]) -> Result<EllipseFit> {
    if points.len() < 5 {
        return Err(Error::Degenerate(format!(
            "ellipse fit needs 5 points, got {}",
            points.len()
        )));
    }
    // Normalise to zero mean and unit RMS radius for conditioning.
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let scale = (points
        .iter()
        .map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Degenerate("all outline points coincide".into()));
    }

    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    for p in points {
        let x = (p.x - mx) / scale;
        let y = (p.y - my) / scale;
        let quad = Vector3::new(x * x, x * y, y * y);
        let lin = Vector3::new(x, y, 1.0);
        s1 += quad * quad.transpose();
        s2 += quad * lin.transpose();
        s3 += lin * lin.transpose();
    }
    let s3_inv = s3
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Degenerate("outline points are collinear".into()))?;
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // Premultiply by the inverse of the constraint block [[0,0,2],[0,-1,0],[2,0,0]].
    let reduced = Matrix3::new(
        m[(2, 0)] / 2.0,
        m[(2, 1)] / 2.0,
        m[(2, 2)] / 2.0,
        -m[(1, 0)],
        -m[(1, 1)],
        -m[(1, 2)],
        m[(0, 0)] / 2.0,
        m[(0, 1)] / 2.0,
        m[(0, 2)] / 2.0,
    );

    let quad = real_eigenvalues(&reduced)
        .into_iter()
        .filter_map(|lambda| null_vector(&(reduced - Matrix3::identity() * lambda)))
        .filter(|v| 4.0 * v[0] * v[2] - v[1] * v[1] > 0.0)
        .max_by(|a, b| {
            let ca = 4.0 * a[0] * a[2] - a[1] * a[1];
            let cb = 4.0 * b[0] * b[2] - b[1] * b[1];
            ca.total_cmp(&cb)
        })
        .ok_or_else(|| Error::Degenerate("no elliptical solution for outline".into()))?;
    let lin = t * quad;

    let geo = conic_to_geometry([quad[0], quad[1], quad[2], lin[0], lin[1], lin[2]])?;
    Ok(EllipseFit {
        center: Point2::new(mx + geo.0.x * scale, my + geo.0.y * scale),
        major_axis_len: 2.0 * geo.1 * scale,
        minor_axis_len: 2.0 * geo.2 * scale,
        orientation: geo.3,
    })
}

fn real_eigenvalues(m: &Matrix3<f64>) -> Vec<f64> {
    m.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

/// Unit vector spanning the (numerical) null space of a rank-2 matrix.
fn null_vector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let rows = [
        m.row(0).transpose(),
        m.row(1).transpose(),
        m.row(2).transpose(),
    ];
    let v = [
        rows[0].cross(&rows[1]),
        rows[0].cross(&rows[2]),
        rows[1].cross(&rows[2]),
    ]
    .into_iter()
    .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))?;
    let norm = v.norm();
    (norm > 0.0 && norm.is_finite()).then(|| v / norm)
}

/// Centre, semi-major, semi-minor and major-axis angle of a conic.
fn conic_to_geometry(c: [f64; 6]) -> Result<(Point2, f64, f64, f64)> {
    let [a, b, cc, d, e, f] = c;
    let den = b * b - 4.0 * a * cc;
    if !(den < 0.0) {
        return Err(Error::Degenerate("fitted conic is not an ellipse".into()));
    }
    let x0 = (2.0 * cc * d - b * e) / den;
    let y0 = (2.0 * a * e - b * d) / den;
    let fc = a * x0 * x0 + b * x0 * y0 + cc * y0 * y0 + d * x0 + e * y0 + f;

    let mean = 0.5 * (a + cc);
    let half_gap = (0.25 * (a - cc).powi(2) + 0.25 * b * b).sqrt();
    let (l1, l2) = (mean - half_gap, mean + half_gap);
    // Larger semi-axis pairs with the eigenvalue of smaller magnitude.
    let (l_major, l_minor) = if l1.abs() <= l2.abs() {
        (l1, l2)
    } else {
        (l2, l1)
    };
    let semi_major = -fc / l_major;
    let semi_minor = -fc / l_minor;
    if !(semi_major > 0.0 && semi_minor > 0.0) {
        return Err(Error::Degenerate(
            "fitted conic is an imaginary ellipse".into(),
        ));
    }

    let angle = if half_gap <= 1e-14 * mean.abs() {
        0.0
    } else {
        let v1 = (0.5 * b, l_major - a);
        let v2 = (l_major - cc, 0.5 * b);
        let (vx, vy) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) {
            v1
        } else {
            v2
        };
        vy.atan2(vx).rem_euclid(std::f64::consts::PI)
    };
    let angle = if angle >= std::f64::consts::PI {
        0.0
    } else {
        angle
    };
    Ok((
        Point2::new(x0, y0),
        semi_major.sqrt(),
        semi_minor.sqrt(),
        angle,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ellipse_points(a: f64, b: f64, rot: f64, c: Point2, n: usize) -> Vec<Point2> {
        let (s, co) = rot.sin_cos();
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                let (x, y) = (a * t.cos(), b * t.sin());
                Point2::new(c.x + co * x - s * y, c.y + s * x + co * y)
            })
            .collect()
    }

    #[test]
    fn axis_aligned_ellipse() {
        let fit =
            fit_ellipse_points(&ellipse_points(5.0, 2.0, 0.0, Point2::new(3.0, -1.0), 64)).unwrap();
        assert!((fit.major_axis_len / 10.0 - 1.0).abs() < 1e-3);
        assert!((fit.minor_axis_len / 4.0 - 1.0).abs() < 1e-3);
        let o = fit.orientation.min(PI - fit.orientation);
        assert!(o < 1e-3, "orientation {}", fit.orientation);
        assert!(fit.center.dist(Point2::new(3.0, -1.0)) < 1e-9);
    }

    #[test]
    fn circle_axes_equal() {
        let fit = fit_ellipse_points(&ellipse_points(7.0, 7.0, 0.0, Point2::new(100.0, 50.0), 64))
            .unwrap();
        assert!((fit.major_axis_len - 14.0).abs() < 1e-6);
        assert!((fit.minor_axis_len - 14.0).abs() < 1e-6);
        assert!(fit.eccentricity() < 1e-6);
    }

    #[test]
    fn rotated_ellipse_orientation() {
        let rot = 30f64.to_radians();
        let fit =
            fit_ellipse_points(&ellipse_points(5.0, 2.0, rot, Point2::new(0.0, 0.0), 64)).unwrap();
        assert!(
            (fit.orientation - rot).abs() < 1e-3,
            "{}",
            fit.orientation.to_degrees()
        );
        let fit = fit_ellipse_points(&ellipse_points(
            5.0,
            2.0,
            rot + PI,
            Point2::new(0.0, 0.0),
            64,
        ))
        .unwrap();
        assert!((fit.orientation - rot).abs() < 1e-3, "mod π");
        let fit =
            fit_ellipse_points(&ellipse_points(5.0, 2.0, -rot, Point2::new(0.0, 0.0), 64)).unwrap();
        assert!((fit.orientation - (PI - rot)).abs() < 1e-3);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<Point2> = (0..10)
            .map(|k| Point2::new(k as f64, 2.0 * k as f64))
            .collect();
        assert!(matches!(
            fit_ellipse_points(&pts),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn noisy_fit_is_close() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Point2> = ellipse_points(40.0, 15.0, 1.1, Point2::new(500.0, 400.0), 128)
            .into_iter()
            .map(|p| {
                Point2::new(
                    p.x + rng.random_range(-0.2..0.2),
                    p.y + rng.random_range(-0.2..0.2),
                )
            })
            .collect();
        let fit = fit_ellipse_points(&pts).unwrap();
        assert!((fit.major_axis_len - 80.0).abs() < 0.5);
        assert!((fit.minor_axis_len - 30.0).abs() < 0.5);
        assert!((fit.orientation - 1.1).abs() < 0.01);
    }
}
