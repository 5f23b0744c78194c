//! Built-in worlds and trajectories.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::geometry::{Point, Pose2};

use super::scenario::TrajectoryScript;
use super::sensor::SensorModel;
use super::world::{Segment, World};

pub const ROOM_WIDTH: f64 = 10.0;
pub const ROOM_HEIGHT: f64 = 8.0;
pub const CIRCUIT_CENTER: (f64, f64) = (5.0, 4.0);
pub const CIRCUIT_RADII: (f64, f64) = (3.0, 2.2);
pub const CIRCUIT_SCANS: usize = 400;
pub const SCAN_RATE_HZ: f64 = 10.0;

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> [Segment; 4] {
    [
        Segment::new(x0, y0, x1, y0),
        Segment::new(x1, y0, x1, y1),
        Segment::new(x1, y1, x0, y1),
        Segment::new(x0, y1, x0, y0),
    ]
}

/// Counter-clockwise outer walls of the room, bottom first.
pub fn room_perimeter() -> Vec<Segment> {
    rect(0.0, 0.0, ROOM_WIDTH, ROOM_HEIGHT).to_vec()
}

/// The 10 m × 8 m room with a box in the middle and a pillar near one corner.
pub fn rectangle_room() -> World {
    let mut s = room_perimeter();
    s.extend(rect(4.4, 3.6, 5.6, 4.4));
    s.extend(rect(8.4, 6.6, 9.0, 7.2));
    World::new(s)
}

/// One lap of the elliptic circuit around the center box, one waypoint per
/// scan, heading along the direction of travel.
pub fn circuit_script(scans: usize, rate_hz: f64) -> TrajectoryScript {
    let (cx, cy) = CIRCUIT_CENTER;
    let (a, b) = CIRCUIT_RADII;
    let n = scans.max(1);
    let waypoints = (0..n)
        .map(|i| {
            let phi = TAU * i as f64 / n as f64;
            let heading = (b * phi.cos()).atan2(-a * phi.sin());
            (
                i as f64 / rate_hz,
                Pose2::new(cx + a * phi.cos(), cy + b * phi.sin(), heading),
            )
        })
        .collect();
    TrajectoryScript::new(waypoints).expect("increasing by construction")
}

/// A world, a script, a sensor and a sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub world: World,
    pub script: TrajectoryScript,
    pub model: SensorModel,
    pub rate_hz: f64,
}

/// The rectangle-room circuit with the default 271-beam sensor.
pub fn room_circuit(seed: u64) -> Scenario {
    Scenario {
        world: rectangle_room(),
        script: circuit_script(CIRCUIT_SCANS, SCAN_RATE_HZ),
        model: SensorModel {
            seed,
            ..SensorModel::default()
        },
        rate_hz: SCAN_RATE_HZ,
    }
}

/// A 40 m wall along `y = 0` seen from 3 m away by a 1081-beam sensor that
/// slides 1 m sideways over 100 scans.
pub fn straight_wall(seed: u64) -> Scenario {
    let script = TrajectoryScript::new(vec![
        (0.0, Pose2::new(-0.5, 3.0, -FRAC_PI_2)),
        (9.9, Pose2::new(0.5, 3.0, -FRAC_PI_2)),
    ])
    .expect("valid script");
    Scenario {
        world: World::new(vec![Segment::new(-20.0, 0.0, 20.0, 0.0)]),
        script,
        model: SensorModel {
            beam_count: 1081,
            seed,
            ..SensorModel::default()
        },
        rate_hz: SCAN_RATE_HZ,
    }
}

/// Replaces the first `fraction` of a counter-clockwise closed perimeter
/// (by length, walking from its first vertex) with copies shifted `shift`
/// meters inward. The remainder is kept in place.
pub fn shift_perimeter(perimeter: &[Segment], fraction: f64, shift: f64) -> Vec<Segment> {
    let total: f64 = perimeter.iter().map(Segment::length).sum();
    let mut budget = (fraction.clamp(0.0, 1.0) * total).max(0.0);
    let mut out = Vec::new();
    for s in perimeter {
        let len = s.length();
        let dir = (s.b - s.a) / len;
        let inward = Point::new(-dir.y, dir.x) * shift;
        let moved = budget.min(len);
        budget -= moved;
        if moved > 0.0 {
            let split = s.a + dir * moved;
            out.push(Segment {
                a: s.a + inward,
                b: split + inward,
            });
        }
        if moved < len {
            out.push(Segment {
                a: s.a + dir * moved,
                b: s.b,
            });
        }
    }
    out
}

/// The room with 40 % of its outer walls pushed 0.3 m inward.
pub fn moved_wall_room() -> World {
    let room = rectangle_room();
    let mut s = shift_perimeter(&room_perimeter(), 0.4, 0.3);
    s.extend_from_slice(&room.segments[4..]);
    World::new(s)
}
