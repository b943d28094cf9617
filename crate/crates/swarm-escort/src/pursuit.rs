//! Chase and escort behavior of a cluster head.
//!
//! A head chases until it closes within the formation radius, then
//! escorts: the formation wraps the intruder and herds it toward the
//! nearest flight-zone boundary. The two phases switch with hysteresis so
//! a head hovering near the threshold does not flap.

use std::fmt;

use crate::geometry::{project_onto_plane, Vec3};
use crate::physics::Force;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Chase,
    Escort,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Chase => "CHASE",
            Phase::Escort => "ESCORT",
        })
    }
}

/// Intruder positions at the last two ticks plus the extrapolation
/// multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuavTrack {
    pub prev_pos: Vec3,
    pub curr_pos: Vec3,
    pub factor: f64,
}

/// Linear extrapolation of the intruder's next position.
pub fn predict_muav(track: &MuavTrack) -> Vec3 {
    track.curr_pos + (track.curr_pos - track.prev_pos) * track.factor
}

/// Steering force pair for a chasing head: the direct line `n` to the
/// intruder at weight `w1`, and the component of the line to the
/// predicted position perpendicular to `n` at weight `w0`, which swings
/// the chaser toward where the target is going. Both directions carry
/// their geometric magnitude; the integrator's speed clamp limits the
/// step.
///
/// A head sitting exactly on the intruder steers along `prev_heading`
/// instead.
pub fn chase_forces(
    ch_pos: Vec3,
    muav_pos: Vec3,
    predicted: Vec3,
    w0: f64,
    w1: f64,
    prev_heading: Vec3,
) -> [Force; 2] {
    let n = muav_pos - ch_pos;
    if n.normalized().is_none() {
        return [
            Force { dir: Vec3::default(), weight: w0 },
            Force { dir: prev_heading, weight: w1 },
        ];
    }
    let v = predicted - ch_pos;
    let v_p = project_onto_plane(v, n).expect("n is nonzero");
    [Force { dir: v_p, weight: w0 }, Force { dir: n, weight: w1 }]
}

/// Phase transition with hysteresis: engage inside the formation radius,
/// disengage only after falling behind by twice that.
pub fn phase_step(phase: Phase, dist_to_muav: f64, r_f: f64) -> Phase {
    match phase {
        Phase::Chase if dist_to_muav < r_f => Phase::Escort,
        Phase::Escort if dist_to_muav > 2.0 * r_f => Phase::Chase,
        p => p,
    }
}

/// Outward normal of the flight-zone face nearest to `pos`, the direction
/// an escort herds the intruder. The zone spans `[0, dims]` per axis.
/// Ties resolve in face order -x, +x, -y, +y, -z, +z; outside the zone
/// the heading is zero because the mission is already over.
pub fn escort_heading(pos: Vec3, dims: Vec3) -> Vec3 {
    let faces = [
        (pos.x, Vec3::new(-1.0, 0.0, 0.0)),
        (dims.x - pos.x, Vec3::new(1.0, 0.0, 0.0)),
        (pos.y, Vec3::new(0.0, -1.0, 0.0)),
        (dims.y - pos.y, Vec3::new(0.0, 1.0, 0.0)),
        (pos.z, Vec3::new(0.0, 0.0, -1.0)),
        (dims.z - pos.z, Vec3::new(0.0, 0.0, 1.0)),
    ];
    if faces.iter().any(|&(d, _)| d < 0.0) {
        return Vec3::default();
    }
    let mut best = faces[0];
    for &f in &faces[1..] {
        if f.0 < best.0 {
            best = f;
        }
    }
    best.1
}
