use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A position in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// A displacement between two points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn to_vector(self) -> Vector {
        Vector::new(self.x, self.y)
    }

    /// Largest coordinate magnitude, used to scale tolerances.
    pub fn magnitude(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Vector {
    pub const ZERO: Vector = Vector { x: 0.0, y: 0.0 };
    pub const NORTH: Vector = Vector { x: 0.0, y: 1.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vector { x, y }
    }

    pub fn from_angle(radians: f64) -> Self {
        Vector::new(radians.cos(), radians.sin())
    }

    pub fn dot(self, other: Vector) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` is
    /// counterclockwise of `self`.
    pub fn cross(self, other: Vector) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Option<Vector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(Vector::new(self.x / n, self.y / n))
        } else {
            None
        }
    }

    pub fn scale(self, k: f64) -> Vector {
        Vector::new(self.x * k, self.y * k)
    }

    /// Rotates by `radians` in the clockwise sense (from +y towards +x).
    pub fn rotated_clockwise(self, radians: f64) -> Vector {
        let (s, c) = radians.sin_cos();
        Vector::new(self.x * c + self.y * s, -self.x * s + self.y * c)
    }

    /// Quarter turn clockwise, exact.
    pub fn right(self) -> Vector {
        Vector::new(self.y, -self.x)
    }

    /// Quarter turn counterclockwise, exact.
    pub fn left(self) -> Vector {
        Vector::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Sub for Point {
    type Output = Vector;
    fn sub(self, rhs: Point) -> Vector {
        Vector::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Add<Vector> for Point {
    type Output = Point;
    fn add(self, rhs: Vector) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub<Vector> for Point {
    type Output = Point;
    fn sub(self, rhs: Vector) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl AddAssign<Vector> for Point {
    fn add_assign(&mut self, rhs: Vector) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        Vector::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        Vector::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, k: f64) -> Vector {
        self.scale(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns_match_rotation() {
        let v = Vector::new(0.3, -1.7);
        let r = v.rotated_clockwise(std::f64::consts::FRAC_PI_2);
        assert!((r - v.right()).norm() < 1e-12);
        let l = v.rotated_clockwise(-std::f64::consts::FRAC_PI_2);
        assert!((l - v.left()).norm() < 1e-12);
    }

    #[test]
    fn north_right_is_east() {
        assert_eq!(Vector::NORTH.right(), Vector::new(1.0, 0.0));
    }
}
