//! Movement model shared by all UAVs: weighted steering forces with a
//! hard speed clamp, pairwise separation, and a smooth noise wobble that
//! displaces each body around its force-driven anchor.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Vec3, ZERO};

/// Noise coordinate advance per simulation tick.
pub const WOBBLE_STEP: f64 = 0.0005;

/// A steering contribution. `dir` is not normalized: separation encodes its
/// amplitude in the vector, slot steering encodes the remaining distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Force {
    pub dir: Vec3,
    pub weight: f64,
}

impl Force {
    pub fn new(dir: Vec3, weight: f64) -> Self {
        Force { dir, weight }
    }
}

/// Point body with a speed limit and a personal collision bubble.
/// `collision_threshold` is at least twice `body_radius` so bubbles cover
/// the physical extent of both bodies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicBody {
    pub pos: Vec3,
    pub max_speed: f64,
    pub body_radius: f64,
    pub collision_threshold: f64,
}

/// Classic 1D gradient noise over a seeded 256-entry permutation table.
/// Output of [`Perlin1D::sample01`] lies in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Perlin1D {
    perm: [u8; 256],
}

impl Perlin1D {
    pub fn new(seed: u64) -> Self {
        let mut perm: [u8; 256] = std::array::from_fn(|i| i as u8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        perm.shuffle(&mut rng);
        Perlin1D { perm }
    }

    pub fn from_permutation(perm: [u8; 256]) -> Self {
        Perlin1D { perm }
    }

    fn gradient(&self, cell: i64) -> f64 {
        let h = self.perm[(cell.rem_euclid(256)) as usize];
        let mag = (1 + (h & 3)) as f64 / 4.0;
        if h & 4 == 0 {
            mag
        } else {
            -mag
        }
    }

    /// Smooth noise in `[0, 1]`; adjacent samples at distance
    /// [`WOBBLE_STEP`] are strongly correlated.
    pub fn sample01(&self, x: f64) -> f64 {
        let cell = x.floor() as i64;
        let f = x - x.floor();
        let g0 = self.gradient(cell);
        let g1 = self.gradient(cell + 1);
        let u = fade(f);
        let v = (g0 * f) * (1.0 - u) + (g1 * (f - 1.0)) * u;
        v + 0.5
    }
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Per-UAV wobble parameters: a deviation radius and one random noise
/// coordinate offset per axis, so axes and UAVs decorrelate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WobbleState {
    pub radius: f64,
    pub offsets: [f64; 3],
}

/// Deviation from the body's anchor at `tick`. Each component is
/// `radius * (2 * perlin(offset + tick * WOBBLE_STEP) - 1)` and therefore
/// stays within `[-radius, radius]`.
pub fn wobble_offset(state: &WobbleState, noise: &Perlin1D, tick: u64) -> Vec3 {
    let t = tick as f64 * WOBBLE_STEP;
    let c = |axis: usize| state.radius * (2.0 * noise.sample01(state.offsets[axis] + t) - 1.0);
    Vec3::new(c(0), c(1), c(2))
}

/// Summed repulsion from every neighbor closer than its pair threshold.
///
/// Each entry carries the threshold `eps` governing that pair; a neighbor
/// at distance `d < eps` contributes a push of magnitude `eps - d + c`
/// away from it. Exactly coincident neighbors push along `fallback`,
/// which callers derive from seeded pseudo-randomness.
pub fn separation_force(pos: Vec3, neighbors: &[(Vec3, f64)], c: f64, fallback: Vec3) -> Vec3 {
    let mut sum = ZERO;
    for &(other, eps) in neighbors {
        let delta = pos - other;
        let d = delta.norm();
        if d < eps {
            let dir = match delta.normalized() {
                Some(u) => u,
                None => fallback,
            };
            sum += dir * (eps - d + c);
        }
    }
    sum
}

/// One movement step: weighted force sum, clamped to the body's top speed,
/// plus the wobble displacement. Wobble is applied after the clamp, so the
/// combined step may exceed `max_speed`.
pub fn integrate(body: &KinematicBody, forces: &[Force], wobble: Vec3) -> Vec3 {
    let mut v = ZERO;
    for f in forces {
        v += f.dir * f.weight;
    }
    body.pos + clamp_speed(v, body.max_speed) + wobble
}

/// `v` shortened to `max_speed` when longer, otherwise unchanged.
pub fn clamp_speed(v: Vec3, max_speed: f64) -> Vec3 {
    let n = v.norm();
    if n > max_speed {
        v * (max_speed / n)
    } else {
        v
    }
}

/// Steering for the intruder: keep its own collision bubble clear of every
/// visible defense UAV and, while any is visible, flee the centroid of the
/// visible ones. `fallback` resolves coincident or centered geometry.
pub fn muav_policy(muav: &KinematicBody, visible_duavs: &[Vec3], fallback: Vec3) -> Vec<Force> {
    let mut forces = Vec::with_capacity(2);
    if visible_duavs.is_empty() {
        return forces;
    }
    let pairs: Vec<(Vec3, f64)> =
        visible_duavs.iter().map(|&p| (p, muav.collision_threshold)).collect();
    let sep = separation_force(muav.pos, &pairs, 0.0, fallback);
    forces.push(Force::new(sep, 1.0));

    let mut mean = ZERO;
    for &p in visible_duavs {
        mean += p;
    }
    mean = mean / visible_duavs.len() as f64;
    let escape = (muav.pos - mean).normalized().unwrap_or(fallback);
    forces.push(Force::new(escape, 1.0));
    forces
}

/// Deterministic unit vector from integer inputs, for singularity escapes.
/// Not statistically strong, only stable and uniform enough.
pub fn hash_unit_dir(salt: u64, a: u64, b: u64) -> Vec3 {
    let mix = |x: u64| {
        let mut z = x.wrapping_add(0x9E3779B97F4A7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    };
    let h1 = mix(salt ^ a.rotate_left(17));
    let h2 = mix(h1 ^ b.rotate_left(43));
    let z = (h1 >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
    let phi = (h2 >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU;
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}
