use std::cmp::Ordering;

use super::{clockwise_angle, find_duplicate, Circle, GeometryError, Point, Result, EPS};

/// A labeling of all robots, as computed from one robot's point of view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelativeNaming {
    /// `None` when the labeling is shared by every robot.
    pub observer: Option<usize>,
    labels: Vec<usize>,
    order: Vec<usize>,
}

impl RelativeNaming {
    /// Builds a naming from robot indices listed in label order.
    pub fn from_order(observer: Option<usize>, order: Vec<usize>) -> Self {
        let mut labels = vec![0; order.len()];
        for (label, &robot) in order.iter().enumerate() {
            labels[robot] = label;
        }
        RelativeNaming {
            observer,
            labels,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_of(&self, robot: usize) -> usize {
        self.labels[robot]
    }

    pub fn robot_with(&self, label: usize) -> Option<usize> {
        self.order.get(label).copied()
    }

    /// `labels()[robot]` is the label given to `robot`.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Total order agreed on by robots sharing both axes: `x` ascending, then
/// `y` ascending. Translation and positive scaling of the frame preserve it.
pub fn relative_naming_sod(positions: &[Point]) -> Result<RelativeNaming> {
    if let Some((i, j)) = find_duplicate(positions) {
        return Err(GeometryError::Duplicate(i, j));
    }
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (positions[a], positions[b]);
        pa.x.total_cmp(&pb.x).then(pa.y.total_cmp(&pb.y))
    });
    Ok(RelativeNaming::from_order(None, order))
}

/// Naming relative to `observer` under chirality only.
///
/// Robots are ordered by the clockwise angle of their radius of `sec`,
/// starting from the horizon ray that leaves the center through the
/// observer; robots sharing a radius are ordered by distance from the
/// center. A robot at the center itself is treated as lying on every
/// radius at distance zero and is labeled first.
pub fn relative_naming_chirality(
    positions: &[Point],
    observer: usize,
    sec: &Circle,
) -> Result<RelativeNaming> {
    if observer >= positions.len() {
        return Err(GeometryError::ObserverOutOfRange(observer));
    }
    if let Some((i, j)) = find_duplicate(positions) {
        return Err(GeometryError::Duplicate(i, j));
    }
    let o = sec.center;
    let horizon = positions[observer] - o;
    if horizon.norm() <= EPS {
        return Err(GeometryError::ObserverAtCenter(observer));
    }
    let keys: Vec<(f64, f64)> = positions
        .iter()
        .map(|&p| {
            let radius = p - o;
            let dist = radius.norm();
            if dist <= EPS {
                (0.0, 0.0)
            } else {
                (clockwise_angle(horizon, radius).unwrap_or(0.0), dist)
            }
        })
        .collect();

    // Cluster nearly equal angles before the secondary key applies, so the
    // comparison stays a total order.
    let mut by_angle: Vec<usize> = (0..positions.len()).collect();
    by_angle.sort_by(|&a, &b| keys[a].0.total_cmp(&keys[b].0).then(a.cmp(&b)));
    let mut group = vec![0usize; positions.len()];
    let mut current = 0;
    let mut anchor = f64::NEG_INFINITY;
    for &robot in &by_angle {
        let angle = keys[robot].0;
        if angle - anchor > EPS {
            current += 1;
            anchor = angle;
        }
        group[robot] = current;
    }
    let mut order = by_angle;
    order.sort_by(|&a, &b| match group[a].cmp(&group[b]) {
        Ordering::Equal => keys[a].1.total_cmp(&keys[b].1),
        other => other,
    });
    Ok(RelativeNaming::from_order(Some(observer), order))
}
