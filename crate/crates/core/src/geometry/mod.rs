//! Plane geometry used by the movement protocols.
//!
//! Everything here is a pure function of its inputs. Angles are measured in
//! the clockwise sense shared by every robot: rotating `(0, 1)` clockwise by
//! `π/2` yields `(1, 0)`.

mod granular;
mod naming;
mod point;
mod sec;

use std::f64::consts::TAU;

use thiserror::Error;

pub use granular::{
    classify_direction, classify_displacement, granular_radius, slice_direction, Granular, Side,
    SliceHit,
};
pub use naming::{relative_naming_chirality, relative_naming_sod, RelativeNaming};
pub use point::{Point, Vector};
pub use sec::{smallest_enclosing_circle, Circle};

/// Absolute tolerance for point and angle comparisons.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("empty point set")]
    Empty,
    #[error("point {0} coincides with the reference point")]
    Coincident(usize),
    #[error("points {0} and {1} coincide")]
    Duplicate(usize, usize),
    #[error("zero-length direction vector")]
    ZeroVector,
    #[error("slice label {label} out of range for {count} diameters")]
    LabelOutOfRange { label: usize, count: usize },
    #[error("observer {0} sits at the center of the enclosing circle; its horizon line is undefined")]
    ObserverAtCenter(usize),
    #[error("observer index {0} out of range")]
    ObserverOutOfRange(usize),
    #[error("non-finite coordinate")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Clockwise angle in `[0, 2π)` swept when rotating `reference` onto `target`.
///
/// Angles within [`EPS`] of a full turn are reported as `0`, so a target on
/// the reference ray always sorts first.
pub fn clockwise_angle(reference: Vector, target: Vector) -> Result<f64> {
    if reference.norm() == 0.0 || target.norm() == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    if !reference.is_finite() || !target.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    let ccw = reference.cross(target).atan2(reference.dot(target));
    let mut cw = (-ccw).rem_euclid(TAU);
    if cw >= TAU - EPS || cw <= EPS {
        cw = 0.0;
    }
    Ok(cw)
}

/// Returns the first pair of indices holding equal points, if any.
pub fn find_duplicate(points: &[Point]) -> Option<(usize, usize)> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].distance(points[j]) <= EPS {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn clockwise_angle_examples() {
        let n = Vector::new(0.0, 1.0);
        assert_eq!(clockwise_angle(n, n).unwrap(), 0.0);
        assert!((clockwise_angle(n, Vector::new(1.0, 0.0)).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!((clockwise_angle(n, Vector::new(-1.0, 0.0)).unwrap() - 3.0 * FRAC_PI_2).abs() < 1e-12);
        assert!((clockwise_angle(n, Vector::new(0.0, -1.0)).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn clockwise_angle_rejects_zero() {
        assert_eq!(
            clockwise_angle(Vector::ZERO, Vector::NORTH),
            Err(GeometryError::ZeroVector)
        );
        assert_eq!(
            clockwise_angle(Vector::NORTH, Vector::ZERO),
            Err(GeometryError::ZeroVector)
        );
    }

    #[test]
    fn near_full_turn_snaps_to_zero() {
        let r = Vector::new(1.0, 0.0);
        let t = Vector::new(1.0, 1e-13);
        assert_eq!(clockwise_angle(r, t).unwrap(), 0.0);
    }

    #[test]
    fn clockwise_angle_is_scale_free() {
        let a = clockwise_angle(Vector::new(2.0, 1.0), Vector::new(-3.0, 0.5)).unwrap();
        let b = clockwise_angle(Vector::new(20.0, 10.0), Vector::new(-0.3, 0.05)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
