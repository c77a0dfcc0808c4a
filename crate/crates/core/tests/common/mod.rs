#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stigmergy::geometry::{smallest_enclosing_circle, Circle, Point, Vector};
use stigmergy::harness::{robot_specs, Session};
use stigmergy::model::ActivationSchedule;
use stigmergy::protocols::{Mutations, ProtocolKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut impl Rng, n: usize, spread: f64) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.random_range(-spread..spread), rng.random_range(-spread..spread)))
        .collect()
}

/// Points at least `min_gap` apart, none within `min_gap` of the center of
/// their enclosing circle.
pub fn spread_points(rng: &mut impl Rng, n: usize, spread: f64, min_gap: f64) -> Vec<Point> {
    loop {
        let mut pts: Vec<Point> = Vec::with_capacity(n);
        let mut tries = 0;
        while pts.len() < n && tries < 10_000 {
            tries += 1;
            let p = Point::new(rng.random_range(-spread..spread), rng.random_range(-spread..spread));
            if pts.iter().all(|q| q.distance(p) >= min_gap) {
                pts.push(p);
            }
        }
        if pts.len() < n {
            continue;
        }
        let sec = smallest_enclosing_circle(&pts).unwrap();
        if pts.iter().all(|p| p.distance(sec.center) >= min_gap) {
            return pts;
        }
    }
}

pub fn random_bits(rng: &mut impl Rng, len: usize) -> Vec<bool> {
    (0..len).map(|_| rng.random_bool(0.5)).collect()
}

fn encloses(c: &Circle, pts: &[Point]) -> bool {
    pts.iter().all(|p| p.distance(c.center) <= c.radius * (1.0 + 1e-12) + 1e-12)
}

fn circumcircle(a: Point, b: Point, c: Point) -> Option<Circle> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if d.abs() < 1e-12 {
        return None;
    }
    let sq = |p: Point| p.x * p.x + p.y * p.y;
    let ux = (sq(a) * (b.y - c.y) + sq(b) * (c.y - a.y) + sq(c) * (a.y - b.y)) / d;
    let uy = (sq(a) * (c.x - b.x) + sq(b) * (a.x - c.x) + sq(c) * (b.x - a.x)) / d;
    let center = Point::new(ux, uy);
    Some(Circle::new(center, center.distance(a)))
}

/// Smallest enclosing circle by trying every circle through two or three
/// of the points.
pub fn brute_force_sec(pts: &[Point]) -> Circle {
    if pts.len() == 1 {
        return Circle::new(pts[0], 0.0);
    }
    let mut best: Option<Circle> = None;
    let mut consider = |c: Circle| {
        if encloses(&c, pts) && best.is_none_or(|b| c.radius < b.radius) {
            best = Some(c);
        }
    };
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let mid = Point::new((pts[i].x + pts[j].x) / 2.0, (pts[i].y + pts[j].y) / 2.0);
            consider(Circle::new(mid, pts[i].distance(pts[j]) / 2.0));
            for k in j + 1..pts.len() {
                if let Some(c) = circumcircle(pts[i], pts[j], pts[k]) {
                    consider(c);
                }
            }
        }
    }
    best.expect("the widest pair's circle grows to enclose everything")
}

/// Clips a convex polygon to the half-plane `{x : (x - on) · normal <= 0}`.
fn clip(poly: &[Point], on: Point, normal: Vector) -> Vec<Point> {
    let side = |p: Point| (p - on).dot(normal);
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0) != (sb < 0.0) && sa != sb {
            let t = sa / (sa - sb);
            out.push(a + (b - a) * t);
        }
    }
    out
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Voronoi cell of `p` by half-plane intersection inside a large box.
pub fn voronoi_cell(p: Point, others: &[Point]) -> Vec<Point> {
    let far = 1e6 + others.iter().map(|q| q.distance(p)).fold(0.0, f64::max) * 4.0;
    let mut cell = vec![
        Point::new(p.x - far, p.y - far),
        Point::new(p.x + far, p.y - far),
        Point::new(p.x + far, p.y + far),
        Point::new(p.x - far, p.y + far),
    ];
    for &q in others {
        let mid = Point::new((p.x + q.x) / 2.0, (p.y + q.y) / 2.0);
        cell = clip(&cell, mid, q - p);
    }
    cell
}

/// Radius of the largest disc centered at `p` inside its Voronoi cell.
pub fn voronoi_inscribed_radius(p: Point, others: &[Point]) -> f64 {
    let cell = voronoi_cell(p, others);
    (0..cell.len())
        .map(|i| segment_distance(p, cell[i], cell[(i + 1) % cell.len()]))
        .fold(f64::INFINITY, f64::min)
}

/// A session with every robot given the same reach and frames drawn from
/// `seed`.
pub fn session(
    kind: ProtocolKind,
    positions: &[Point],
    sigma: f64,
    schedule: &ActivationSchedule,
    seed: u64,
) -> Session {
    session_with(kind, positions, sigma, schedule, seed, Mutations::default())
}

pub fn session_with(
    kind: ProtocolKind,
    positions: &[Point],
    sigma: f64,
    schedule: &ActivationSchedule,
    seed: u64,
    mutations: Mutations,
) -> Session {
    let n = positions.len();
    let ids: Vec<u32> = (0..n as u32).map(|i| 100 + 7 * i).collect();
    let seeds: Vec<u64> = (0..n as u64).map(|i| seed.wrapping_mul(1000).wrapping_add(i)).collect();
    let specs = robot_specs(kind, positions, &vec![sigma; n], Some(&ids), &seeds).unwrap();
    Session::new(kind, positions.to_vec(), specs, schedule, mutations).unwrap()
}

pub fn bits_to_u8(bits: &[bool]) -> Vec<u8> {
    bits.iter().map(|&b| u8::from(b)).collect()
}
