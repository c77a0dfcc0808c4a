//! Robots that see but cannot talk, exchanging one-to-one messages by how
//! they move.
//!
//! [`geometry`] holds the planar primitives, [`model`] the look-compute-move
//! engine, [`protocols`] the robot programs, [`harness`] the message API and
//! property monitors, and [`scenario`] the file-driven runs behind the
//! command-line tool.

pub mod geometry;
pub mod harness;
pub mod model;
pub mod protocols;
pub mod scenario;
