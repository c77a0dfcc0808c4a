//! Movement-signal protocols.
//!
//! Each protocol is a [`Program`]: on every activation the robot first reads
//! whatever signals the others are currently showing, then picks its own
//! destination. Bits are carried by the direction of a move away from a
//! resting point; resting points and directions are derived from the
//! configuration at time zero so that every observer can recompute them.
//!
//! | protocol | robots | schedule | naming |
//! |---|---|---|---|
//! | [`Sync2`] | 2 | synchronous | none needed |
//! | [`SyncN`] | n | synchronous | visible ids, shared axes, or chirality only |
//! | [`Async2`] | 2 | any fair | none needed |
//! | [`AsyncN`] | n | any fair | as for `SyncN`, chirality only by default |

mod async2;
mod async_n;
mod common;
mod sync2;
mod sync_n;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    granular_radius, relative_naming_chirality, relative_naming_sod, smallest_enclosing_circle,
    Circle, GeometryError, Granular, Point, RelativeNaming, Vector,
};
use crate::model::{Program, RobotMeta, RobotSpec};

pub use async2::{Async2, Async2Decoder, Async2Phase};
pub use async_n::{AfterReturn, AsyncN, AsyncNPhase, Heading};
pub use common::{ExcursionTracker, Outbox, PeerObservationLog, PeerRecord, PendingBit};
pub use sync2::{Sync2, Sync2Decoder};
pub use sync_n::SyncN;

/// How robots tell each other apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamingMode {
    /// Observable identifiers, shared axes.
    Identified,
    /// Anonymous, shared axes.
    SenseOfDirection,
    /// Anonymous, shared handedness only.
    Chirality,
}

impl NamingMode {
    /// Whether frames must agree on their axes.
    pub fn shared_orientation(self) -> bool {
        !matches!(self, NamingMode::Chirality)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Sync2,
    SyncN(NamingMode),
    Async2,
    AsyncN(NamingMode),
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Sync2 => "sync2",
            ProtocolKind::SyncN(NamingMode::Identified) => "sync_n_id",
            ProtocolKind::SyncN(NamingMode::SenseOfDirection) => "sync_n_sod",
            ProtocolKind::SyncN(NamingMode::Chirality) => "sync_n_chirality",
            ProtocolKind::Async2 => "async2",
            ProtocolKind::AsyncN(NamingMode::Identified) => "async_n_id",
            ProtocolKind::AsyncN(NamingMode::SenseOfDirection) => "async_n_sod",
            ProtocolKind::AsyncN(NamingMode::Chirality) => "async_n",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sync2" => ProtocolKind::Sync2,
            "sync_n_id" => ProtocolKind::SyncN(NamingMode::Identified),
            "sync_n_sod" => ProtocolKind::SyncN(NamingMode::SenseOfDirection),
            "sync_n_chirality" => ProtocolKind::SyncN(NamingMode::Chirality),
            "async2" => ProtocolKind::Async2,
            "async_n_id" => ProtocolKind::AsyncN(NamingMode::Identified),
            "async_n_sod" => ProtocolKind::AsyncN(NamingMode::SenseOfDirection),
            "async_n" | "async_n_chirality" => ProtocolKind::AsyncN(NamingMode::Chirality),
            _ => return None,
        })
    }

    pub fn is_synchronous(self) -> bool {
        matches!(self, ProtocolKind::Sync2 | ProtocolKind::SyncN(_))
    }

    pub fn naming(self) -> Option<NamingMode> {
        match self {
            ProtocolKind::SyncN(m) | ProtocolKind::AsyncN(m) => Some(m),
            _ => None,
        }
    }

    /// Whether robots must share axis orientation.
    pub fn shared_orientation(self) -> bool {
        self.naming().is_some_and(NamingMode::shared_orientation)
    }

    pub fn two_robots_only(self) -> bool {
        matches!(self, ProtocolKind::Sync2 | ProtocolKind::Async2)
    }
}

/// Switches used to build deliberately broken variants for testing monitors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutations {
    /// Start the next bit as soon as the robot is back on its idle line.
    pub skip_resync: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("{protocol} needs {expected} robots, found {found}")]
    RobotCount {
        protocol: &'static str,
        expected: &'static str,
        found: usize,
    },
    #[error("identified naming needs a visible id on every robot")]
    MissingVisibleIds,
    #[error("robots {0} and {1} share a visible id")]
    DuplicateVisibleIds(usize, usize),
    #[error("robot {robot}: {source}")]
    Geometry {
        robot: usize,
        #[source]
        source: GeometryError,
    },
}

/// A robot's granular and naming, as computed by some observer.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotLayout {
    pub granular: Granular,
    pub naming: RelativeNaming,
}

/// Builds every robot's granular and naming from the time-zero positions,
/// all expressed in one observer's frame.
///
/// Granulars get `n` diameters, plus one idle diameter (label 0) when
/// `idle_diameter` is set. Diameter 0 points north under shared axes and
/// outwards from the enclosing circle's center under chirality only.
pub fn preprocess(
    positions: &[Point],
    mode: NamingMode,
    visible_ids: Option<&[u32]>,
    idle_diameter: bool,
) -> Result<Vec<RobotLayout>, ProtocolError> {
    let n = positions.len();
    if n < 2 {
        return Err(ProtocolError::RobotCount {
            protocol: "n-robot protocol",
            expected: "at least 2",
            found: n,
        });
    }
    let slice_count = n + usize::from(idle_diameter);
    let geometry = |robot: usize| move |source| ProtocolError::Geometry { robot, source };

    let shared = match mode {
        NamingMode::Identified => {
            let ids = visible_ids.ok_or(ProtocolError::MissingVisibleIds)?;
            if ids.len() != n {
                return Err(ProtocolError::MissingVisibleIds);
            }
            for i in 0..n {
                for j in i + 1..n {
                    if ids[i] == ids[j] {
                        return Err(ProtocolError::DuplicateVisibleIds(i, j));
                    }
                }
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&r| ids[r]);
            Some(RelativeNaming::from_order(None, order))
        }
        NamingMode::SenseOfDirection => Some(relative_naming_sod(positions).map_err(geometry(0))?),
        NamingMode::Chirality => None,
    };
    let sec = match mode {
        NamingMode::Chirality => Some(smallest_enclosing_circle(positions).map_err(geometry(0))?),
        _ => None,
    };

    (0..n)
        .map(|robot| {
            let p = positions[robot];
            let others: Vec<Point> = positions
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != robot)
                .map(|(_, &q)| q)
                .collect();
            let radius = granular_radius(p, &others).map_err(geometry(robot))?;
            let (zero, naming) = match (&shared, &sec) {
                (Some(naming), _) => (Vector::NORTH, naming.clone()),
                (None, Some(sec)) => {
                    let naming = relative_naming_chirality(positions, robot, sec).map_err(geometry(robot))?;
                    ((p - sec.center), naming)
                }
                (None, None) => unreachable!("either a shared naming or an enclosing circle"),
            };
            let granular = Granular::new(p, radius, slice_count, zero).map_err(geometry(robot))?;
            Ok(RobotLayout { granular, naming })
        })
        .collect()
}

/// Instantiates one program per robot. Each program is given the time-zero
/// configuration as seen in its own frame.
pub fn build_programs(
    kind: ProtocolKind,
    initial: &[Point],
    specs: &[RobotSpec],
    mutations: Mutations,
) -> Result<Vec<Box<dyn Program>>, ProtocolError> {
    let n = initial.len();
    if kind.two_robots_only() && n != 2 {
        return Err(ProtocolError::RobotCount {
            protocol: kind.name(),
            expected: "exactly 2",
            found: n,
        });
    }
    let ids: Option<Vec<u32>> = specs.iter().map(|s| s.visible_id).collect();
    (0..n)
        .map(|me| {
            let spec = &specs[me];
            let view: Vec<Point> = initial.iter().map(|&q| spec.frame.to_local(q)).collect();
            let sigma = spec.frame.length_to_local(spec.sigma);
            let program: Box<dyn Program> = match kind {
                ProtocolKind::Sync2 => Box::new(Sync2::new(me, &view, sigma)),
                ProtocolKind::SyncN(mode) => {
                    let layout = preprocess(&view, mode, ids.as_deref(), false)?;
                    Box::new(SyncN::new(me, layout, sigma))
                }
                ProtocolKind::Async2 => Box::new(Async2::new(me, &view, sigma, mutations)),
                ProtocolKind::AsyncN(mode) => {
                    let layout = preprocess(&view, mode, ids.as_deref(), true)?;
                    Box::new(AsyncN::new(me, layout, sigma))
                }
            };
            Ok(program)
        })
        .collect()
}

/// Engine-side description of each robot for the monitors, in global units.
pub fn robot_meta(kind: ProtocolKind, initial: &[Point], specs: &[RobotSpec]) -> Vec<RobotMeta> {
    initial
        .iter()
        .enumerate()
        .map(|(robot, &p)| {
            let others: Vec<Point> = initial
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != robot)
                .map(|(_, &q)| q)
                .collect();
            let radius = granular_radius(p, &others).unwrap_or(0.0);
            let sigma = specs[robot].sigma;
            let (step, granular) = match kind {
                ProtocolKind::SyncN(_) => (None, Some(Circle::new(p, radius))),
                ProtocolKind::AsyncN(_) => (
                    Some(async_n::initial_step(sigma, radius)),
                    Some(Circle::new(p, radius)),
                ),
                ProtocolKind::Sync2 | ProtocolKind::Async2 => (None, None),
            };
            RobotMeta {
                sigma,
                step,
                granular,
                silent: true,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{slice_direction, Side};

    #[test]
    fn two_robots_ten_apart() {
        let pts = [Point::new(0.0, 0.0), Point::new(0.0, 10.0)];
        let layout = preprocess(&pts, NamingMode::SenseOfDirection, None, false).unwrap();
        assert_eq!(layout[0].granular.radius, 5.0);
        assert_eq!(layout[1].granular.radius, 5.0);
        assert_eq!(layout[0].granular.slice_count, 2);
    }

    #[test]
    fn identified_naming_follows_id_order() {
        let pts = [Point::new(0.0, 0.0), Point::new(5.0, 0.0), Point::new(0.0, 7.0)];
        let layout = preprocess(&pts, NamingMode::Identified, Some(&[30, 10, 20]), false).unwrap();
        assert_eq!(layout[0].naming.labels(), &[2, 0, 1]);
        assert_eq!(
            preprocess(&pts, NamingMode::Identified, None, false),
            Err(ProtocolError::MissingVisibleIds)
        );
        assert_eq!(
            preprocess(&pts, NamingMode::Identified, Some(&[1, 2, 1]), false),
            Err(ProtocolError::DuplicateVisibleIds(0, 2))
        );
    }

    #[test]
    fn twelve_robots_get_twelve_diameters_starting_north() {
        let pts: Vec<Point> = (0..12)
            .map(|i| Point::new((i % 4) as f64 * 10.0 + (i / 4) as f64 * 1.5, (i / 4) as f64 * 9.0))
            .collect();
        let ids: Vec<u32> = (0..12).collect();
        let layout = preprocess(&pts, NamingMode::Identified, Some(&ids), false).unwrap();
        assert_eq!(layout.len(), 12);
        for l in &layout {
            assert_eq!(l.granular.slice_count, 12);
            let d = slice_direction(&l.granular, 0, Side::Zero).unwrap();
            assert!((d - Vector::NORTH).norm() < 1e-12);
        }
    }

    #[test]
    fn chirality_zero_direction_leaves_the_center() {
        let pts = [Point::new(-4.0, 0.0), Point::new(4.0, 0.0), Point::new(0.0, 1.0)];
        let layout = preprocess(&pts, NamingMode::Chirality, None, true).unwrap();
        assert!((layout[0].granular.zero_direction - Vector::new(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(layout[2].granular.slice_count, 4);
    }

    #[test]
    fn observer_at_sec_center_fails_setup() {
        let pts = [Point::new(-4.0, 0.0), Point::new(0.0, 0.0), Point::new(4.0, 0.0)];
        assert!(matches!(
            preprocess(&pts, NamingMode::Chirality, None, false),
            Err(ProtocolError::Geometry {
                robot: 1,
                source: GeometryError::ObserverAtCenter(1)
            })
        ));
    }
}
