use serde::{Deserialize, Serialize};

use super::{GeometryError, Point, Result, EPS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Self {
        Circle { center, radius }
    }

    /// Inside or on the boundary, with a tolerance relative to the radius.
    pub fn contains(&self, p: Point) -> bool {
        self.center.distance(p) <= self.radius * (1.0 + 1e-12) + EPS
    }

    fn diametral(a: Point, b: Point) -> Circle {
        let center = Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
        Circle::new(center, center.distance(a).max(center.distance(b)))
    }

    /// Circle through three points, or `None` when they are collinear.
    fn circumscribed(a: Point, b: Point, c: Point) -> Option<Circle> {
        let (bx, by) = (b.x - a.x, b.y - a.y);
        let (cx, cy) = (c.x - a.x, c.y - a.y);
        let d = 2.0 * (bx * cy - by * cx);
        if d == 0.0 {
            return None;
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = Point::new(a.x + ux, a.y + uy);
        if !center.is_finite() {
            return None;
        }
        let radius = center
            .distance(a)
            .max(center.distance(b))
            .max(center.distance(c));
        Some(Circle::new(center, radius))
    }
}

/// Smallest circle enclosing every point (Welzl's incremental construction,
/// processed in input order so the result is reproducible).
///
/// Collinear input degenerates to the diametral circle of the extreme pair.
pub fn smallest_enclosing_circle(points: &[Point]) -> Result<Circle> {
    if points.is_empty() {
        return Err(GeometryError::Empty);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let mut circle = Circle::new(points[0], 0.0);
    for i in 1..points.len() {
        if !circle.contains(points[i]) {
            circle = with_one_boundary(&points[..i], points[i]);
        }
    }
    Ok(circle)
}

fn with_one_boundary(points: &[Point], p: Point) -> Circle {
    let mut circle = Circle::new(p, 0.0);
    for j in 0..points.len() {
        if !circle.contains(points[j]) {
            circle = if circle.radius == 0.0 {
                Circle::diametral(p, points[j])
            } else {
                with_two_boundary(&points[..j], p, points[j])
            };
        }
    }
    circle
}

fn with_two_boundary(points: &[Point], p: Point, q: Point) -> Circle {
    let mut circle = Circle::diametral(p, q);
    for &r in points {
        if circle.contains(r) {
            continue;
        }
        circle = match Circle::circumscribed(p, q, r) {
            Some(c) => c,
            // p, q, r collinear: r lies outside the segment pq, so the
            // circle spans r and whichever of p, q is farther from it.
            None => {
                if r.distance(p) >= r.distance(q) {
                    Circle::diametral(r, p)
                } else {
                    Circle::diametral(r, q)
                }
            }
        };
    }
    circle
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn single_point() {
        let c = smallest_enclosing_circle(&[Point::new(0.0, 0.0)]).unwrap();
        assert_eq!(c.center, Point::new(0.0, 0.0));
        assert_eq!(c.radius, 0.0);
    }

    #[test]
    fn diametral_pair() {
        let c = smallest_enclosing_circle(&[Point::new(0.0, 0.0), Point::new(4.0, 0.0)]).unwrap();
        assert!(close(c.center.x, 2.0) && close(c.center.y, 0.0));
        assert!(close(c.radius, 2.0));
    }

    #[test]
    fn interior_third_point_keeps_diametral_circle() {
        let pts = [Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(2.0, 1.0)];
        let c = smallest_enclosing_circle(&pts).unwrap();
        assert!(close(c.center.x, 2.0) && close(c.center.y, 0.0));
        assert!(close(c.radius, 2.0));
    }

    #[test]
    fn collinear_points_use_extreme_pair() {
        let pts = [
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(-3.0, -3.0),
            Point::new(5.0, 5.0),
        ];
        let c = smallest_enclosing_circle(&pts).unwrap();
        assert!(close(c.center.x, 1.0) && close(c.center.y, 1.0));
        assert!(close(c.radius, 32f64.sqrt()));
    }

    #[test]
    fn cocircular_square() {
        let pts = [
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(-1.0, 0.0),
            Point::new(0.0, -1.0),
        ];
        let c = smallest_enclosing_circle(&pts).unwrap();
        assert!(close(c.center.x, 0.0) && close(c.center.y, 0.0));
        assert!(close(c.radius, 1.0));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(smallest_enclosing_circle(&[]), Err(GeometryError::Empty));
    }
}
