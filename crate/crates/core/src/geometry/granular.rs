use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{clockwise_angle, GeometryError, Point, Result, Vector, EPS};

/// Which half of a diameter a move uses.
///
/// `Zero` is the half reached by rotating the zero direction clockwise by
/// less than `π` (north, east, north-east...), `One` is its opposite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Zero,
    One,
}

impl Side {
    pub fn from_bit(bit: bool) -> Side {
        if bit {
            Side::One
        } else {
            Side::Zero
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, Side::One)
    }
}

/// A robot's private movement disc, sliced by `slice_count` equally spaced
/// diameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Granular {
    pub center: Point,
    pub radius: f64,
    pub slice_count: usize,
    /// Unit direction of the half-diameter labeled 0 on side `Zero`.
    pub zero_direction: Vector,
}

impl Granular {
    pub fn new(center: Point, radius: f64, slice_count: usize, zero_direction: Vector) -> Result<Self> {
        let zero_direction = zero_direction.normalized().ok_or(GeometryError::ZeroVector)?;
        if slice_count == 0 {
            return Err(GeometryError::LabelOutOfRange { label: 0, count: 0 });
        }
        Ok(Granular {
            center,
            radius,
            slice_count,
            zero_direction,
        })
    }

    /// Angle between adjacent diameters.
    pub fn spacing(&self) -> f64 {
        PI / self.slice_count as f64
    }

    /// Half the spacing: every direction lies within this of some half-diameter.
    pub fn max_deviation(&self) -> f64 {
        self.spacing() / 2.0
    }

    /// Strictly inside the disc by more than the tolerance.
    pub fn strictly_contains(&self, p: Point) -> bool {
        self.center.distance(p) < self.radius - EPS
    }
}

/// Radius of the largest disc centered at `p` that fits inside `p`'s Voronoi
/// cell with respect to `others`.
///
/// The cell boundary nearest to `p` lies on the bisector with its nearest
/// neighbour, at half their distance, so no diagram needs to be built.
pub fn granular_radius(p: Point, others: &[Point]) -> Result<f64> {
    if others.is_empty() {
        return Err(GeometryError::Empty);
    }
    let mut nearest = f64::INFINITY;
    for (i, q) in others.iter().enumerate() {
        if !q.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let d = p.distance(*q);
        if d <= EPS {
            return Err(GeometryError::Coincident(i));
        }
        nearest = nearest.min(d);
    }
    Ok(nearest / 2.0)
}

/// Unit vector of half-diameter `label` on the given side.
pub fn slice_direction(g: &Granular, label: usize, side: Side) -> Result<Vector> {
    if label >= g.slice_count {
        return Err(GeometryError::LabelOutOfRange {
            label,
            count: g.slice_count,
        });
    }
    let v = g.zero_direction.rotated_clockwise(label as f64 * g.spacing());
    Ok(match side {
        Side::Zero => v,
        Side::One => -v,
    })
}

/// Result of matching a direction against a granular's half-diameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceHit {
    pub label: usize,
    pub side: Side,
    /// Absolute angle between the direction and the matched half-diameter.
    pub deviation: f64,
}

/// Nearest half-diameter to `direction`. Returns `None` for a zero vector.
pub fn classify_direction(g: &Granular, direction: Vector) -> Option<SliceHit> {
    let angle = clockwise_angle(g.zero_direction, direction).ok()?;
    let spacing = g.spacing();
    let halves = 2 * g.slice_count;
    let index = (angle / spacing).round() as usize % halves;
    let mut deviation = (angle - index as f64 * spacing).abs();
    if index == 0 {
        deviation = deviation.min((std::f64::consts::TAU - angle).abs());
    }
    let (label, side) = if index < g.slice_count {
        (index, Side::Zero)
    } else {
        (index - g.slice_count, Side::One)
    };
    Some(SliceHit {
        label,
        side,
        deviation,
    })
}

/// Decodes a move inside a granular. Standing still and moves that end at
/// the center carry no signal.
pub fn classify_displacement(g: &Granular, from: Point, to: Point) -> Option<SliceHit> {
    if from.distance(to) <= EPS || to.distance(g.center) <= EPS {
        return None;
    }
    classify_direction(g, to - from)
}
