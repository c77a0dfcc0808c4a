use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Vector};

/// A robot's private coordinate system.
///
/// Every frame has the same handedness: `y_axis` is always `x_axis` turned a
/// quarter counterclockwise, so all robots agree on what clockwise means even
/// though their axes, origins and units differ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub origin: Point,
    pub x_axis: Vector,
    pub y_axis: Vector,
    /// Length of one local unit, in global units.
    pub unit_scale: f64,
}

impl LocalFrame {
    pub fn identity() -> Self {
        LocalFrame::new(Point::ORIGIN, 0.0, 1.0)
    }

    /// Frame whose x-axis is the global x-axis turned counterclockwise by
    /// `rotation` radians.
    pub fn new(origin: Point, rotation: f64, unit_scale: f64) -> Self {
        let x_axis = Vector::from_angle(rotation);
        LocalFrame {
            origin,
            x_axis,
            y_axis: x_axis.left(),
            unit_scale,
        }
    }

    /// Random rotation (unless `shared_orientation`) and a unit scale drawn
    /// from `[0.5, 2]`.
    pub fn random<R: Rng>(rng: &mut R, origin: Point, shared_orientation: bool) -> Self {
        let rotation = if shared_orientation {
            0.0
        } else {
            rng.random_range(0.0..std::f64::consts::TAU)
        };
        let scale = rng.random_range(0.5..=2.0);
        LocalFrame::new(origin, rotation, scale)
    }

    pub fn to_local(&self, q: Point) -> Point {
        let d = q - self.origin;
        Point::new(
            d.dot(self.x_axis) / self.unit_scale,
            d.dot(self.y_axis) / self.unit_scale,
        )
    }

    pub fn to_global(&self, p: Point) -> Point {
        self.origin + (self.x_axis * p.x + self.y_axis * p.y) * self.unit_scale
    }

    pub fn length_to_local(&self, global: f64) -> f64 {
        global / self.unit_scale
    }

    pub fn length_to_global(&self, local: f64) -> f64 {
        local * self.unit_scale
    }

    /// Axes orthonormal with the shared handedness.
    pub fn is_valid(&self) -> bool {
        (self.x_axis.norm() - 1.0).abs() < 1e-9
            && (self.y_axis.norm() - 1.0).abs() < 1e-9
            && self.x_axis.dot(self.y_axis).abs() < 1e-9
            && self.x_axis.cross(self.y_axis) > 0.0
            && self.unit_scale > 0.0
            && self.origin.is_finite()
    }
}
