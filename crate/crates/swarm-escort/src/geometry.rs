//! Vector math for the swarm: axis-angle rotation, plane projection, and
//! the capture-formation radius.
//!
//! All angles are radians. Comparisons against exact values use an absolute
//! tolerance of `1e-9` at unit scale.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use thiserror::Error;

/// Absolute tolerance for unit-length checks.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// Rotation axis must have unit norm.
    #[error("rotation axis norm {0} is not 1 within 1e-9")]
    NonUnitAxis(f64),
    /// Plane normal must be nonzero.
    #[error("plane normal has zero norm")]
    ZeroNormal,
    /// A cluster with no members has no defined formation radius.
    #[error("formation radius undefined for a cluster with no branch members")]
    DegenerateCluster,
    /// A direction argument must be nonzero.
    #[error("direction has zero norm")]
    ZeroDirection,
    /// Branch indices are 1-based and bounded by the branch count.
    #[error("branch index {index} outside 1..={count}")]
    BranchIndexOutOfRange { index: usize, count: usize },
}

/// Three-component double-precision vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, rhs: Vec3) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * rhs.z - self.z * rhs.y,
            y: self.z * rhs.x - self.x * rhs.z,
            z: self.x * rhs.y - self.y * rhs.x,
        }
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, rhs: Vec3) -> f64 {
        (self - rhs).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n == 0.0 {
            None
        } else {
            Some(self / n)
        }
    }

    /// Same direction scaled to `mag`; zero vectors stay zero.
    pub fn with_norm(self, mag: f64) -> Vec3 {
        match self.normalized() {
            Some(u) => u * mag,
            None => ZERO,
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Rotates `v` by `theta` radians around the unit axis `k` using the
/// Rodrigues formula
///
/// ```text
/// v' = v cos(theta) + (k x v) sin(theta) + k (k . v)(1 - cos(theta))
/// ```
///
/// The axis must already be normalized; a norm off by more than `1e-9`
/// is rejected rather than silently renormalized.
pub fn rotate_rodrigues(v: Vec3, k: Vec3, theta: f64) -> Result<Vec3, GeometryError> {
    let kn = k.norm();
    if (kn - 1.0).abs() > UNIT_TOL {
        return Err(GeometryError::NonUnitAxis(kn));
    }
    let (s, c) = theta.sin_cos();
    Ok(v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c)))
}

/// Radius of the capture formation sphere for a cluster whose longest
/// branch has `max_branch_len` members, spaced so that consecutive members
/// sit `eps_d` apart along a quarter arc:
///
/// ```text
/// r_F = eps_d / (2 sin(pi / (4 max_branch_len)))
/// ```
///
/// A cluster head with no members has no formation; callers substitute
/// their own fallback radius.
pub fn formation_radius(eps_d: f64, max_branch_len: usize) -> Result<f64, GeometryError> {
    if max_branch_len == 0 {
        return Err(GeometryError::DegenerateCluster);
    }
    let half_angle = std::f64::consts::PI / (4.0 * max_branch_len as f64);
    Ok(eps_d / (2.0 * half_angle.sin()))
}

/// Component of `v` lying in the plane with normal `n` (any nonzero `n`):
/// `v - n_hat (n_hat . v)`.
pub fn project_onto_plane(v: Vec3, n: Vec3) -> Result<Vec3, GeometryError> {
    let n_hat = n.normalized().ok_or(GeometryError::ZeroNormal)?;
    Ok(v - n_hat * n_hat.dot(v))
}

/// Azimuthal offset of branch `branch_index` (1-based) when `n_branches`
/// branches split the full circle evenly: `(2 pi / n_branches)(i - 1)`.
pub fn branch_rotation_angle(branch_index: usize, n_branches: usize) -> Result<f64, GeometryError> {
    if branch_index == 0 || branch_index > n_branches {
        return Err(GeometryError::BranchIndexOutOfRange {
            index: branch_index,
            count: n_branches,
        });
    }
    Ok(std::f64::consts::TAU / n_branches as f64 * (branch_index - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    /// Independent oracle: axis-angle to 3x3 rotation matrix, applied by
    /// explicit matrix-vector product.
    fn matrix_rotate(v: Vec3, k: Vec3, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        let t = 1.0 - c;
        let (x, y, z) = (k.x, k.y, k.z);
        let m = [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ];
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// Cheap deterministic generator for reproducible sample points.
    fn lcg_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = rotate_rodrigues(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), FRAC_PI_2)
            .unwrap();
        assert_abs_diff_eq!(r.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_angle_is_identity() {
        let v = Vec3::new(3.0, -2.0, 0.5);
        let r = rotate_rodrigues(v, Vec3::new(0.0, 1.0, 0.0), 0.0).unwrap();
        assert_eq!(r, v);
    }

    #[test]
    fn axis_is_fixed_point() {
        let k = Vec3::new(2.0, 1.0, -2.0).normalized().unwrap();
        let r = rotate_rodrigues(k * 4.0, k, 1.234).unwrap();
        assert_abs_diff_eq!((r - k * 4.0).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn non_unit_axis_rejected() {
        let err = rotate_rodrigues(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 2.0), 1.0);
        assert_eq!(err, Err(GeometryError::NonUnitAxis(2.0)));
    }

    #[test]
    fn matches_matrix_oracle_on_random_cases() {
        let mut next = lcg_stream(0xA5A5_1111);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let v = Vec3::new(next() * 20.0 - 10.0, next() * 20.0 - 10.0, next() * 20.0 - 10.0);
            let k = loop {
                let k = Vec3::new(next() * 2.0 - 1.0, next() * 2.0 - 1.0, next() * 2.0 - 1.0);
                if k.norm() > 1e-3 {
                    break k.normalized().unwrap();
                }
            };
            let theta = (next() * 4.0 - 2.0) * PI;
            let got = rotate_rodrigues(v, k, theta).unwrap();
            let want = matrix_rotate(v, k, theta);
            worst = worst.max((got - want).norm());
        }
        assert!(worst <= 1e-9, "max |rodrigues - matrix| = {worst}");
    }

    #[test]
    fn formation_radius_known_values() {
        // Reference values computed at 50-digit precision.
        let cases: &[(f64, usize, f64)] = &[
            (40.0, 1, 28.28427124746190097603),
            (40.0, 2, 52.26251859505506111427),
            (40.0, 3, 77.27406610312546293998),
            (40.0, 5, 127.8490644299932309408),
            (40.0, 6, 153.2259515108077733818),
            (40.0, 8, 204.0459447475665543242),
            (40.0, 13, 331.2437515647397355009),
            (40.0, 50, 1273.291906120011291709),
            (60.0, 6, 229.8389272662116600727),
            (70.0, 7, 312.5991494633177340088),
            (55.5, 4, 142.2418073496535929232),
        ];
        for &(eps, m, want) in cases {
            let got = formation_radius(eps, m).unwrap();
            let rel = ((got - want) / want).abs();
            assert!(rel <= 1e-12, "eps={eps} m={m}: got {got}, want {want}, rel {rel}");
        }
    }

    #[test]
    fn formation_radius_monotone_and_asymptotic() {
        let mut prev = 0.0;
        for m in 1..=60 {
            let r = formation_radius(40.0, m).unwrap();
            assert!(r > prev, "radius must grow with branch length");
            prev = r;
        }
        // Large-m behavior approaches the inscribed-polygon circumradius
        // eps * 2m / pi.
        let m = 50;
        let r = formation_radius(40.0, m).unwrap();
        let linear = 40.0 * 2.0 * m as f64 / PI;
        assert!((r / linear - 1.0).abs() < 0.02);
    }

    #[test]
    fn formation_radius_degenerate() {
        assert_eq!(formation_radius(40.0, 0), Err(GeometryError::DegenerateCluster));
    }

    #[test]
    fn projection_drops_normal_component() {
        let p = project_onto_plane(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(p, Vec3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn projection_zero_normal() {
        assert_eq!(project_onto_plane(Vec3::new(1.0, 0.0, 0.0), ZERO), Err(GeometryError::ZeroNormal));
    }

    #[test]
    fn branch_angles() {
        assert_abs_diff_eq!(branch_rotation_angle(1, 3).unwrap(), 0.0);
        assert_abs_diff_eq!(branch_rotation_angle(2, 3).unwrap(), TAU / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(branch_rotation_angle(3, 4).unwrap(), PI, epsilon = 1e-15);
        assert!(branch_rotation_angle(0, 3).is_err());
        assert!(branch_rotation_angle(5, 4).is_err());
    }

    proptest! {
        #[test]
        fn rotation_preserves_norm(
            vx in -100.0..100.0f64, vy in -100.0..100.0f64, vz in -100.0..100.0f64,
            ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in -1.0..1.0f64,
            theta in -7.0..7.0f64,
        ) {
            let v = Vec3::new(vx, vy, vz);
            let a = Vec3::new(ax, ay, az);
            prop_assume!(a.norm() > 1e-3);
            let k = a.normalized().unwrap();
            let r = rotate_rodrigues(v, k, theta).unwrap();
            prop_assert!((r.norm() - v.norm()).abs() <= 1e-9 * (1.0 + v.norm()));
        }

        #[test]
        fn rotation_composes(
            vx in -10.0..10.0f64, vy in -10.0..10.0f64, vz in -10.0..10.0f64,
            ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in -1.0..1.0f64,
            t1 in -3.0..3.0f64, t2 in -3.0..3.0f64,
        ) {
            let v = Vec3::new(vx, vy, vz);
            let a = Vec3::new(ax, ay, az);
            prop_assume!(a.norm() > 1e-3);
            let k = a.normalized().unwrap();
            let once = rotate_rodrigues(v, k, t1 + t2).unwrap();
            let twice = rotate_rodrigues(rotate_rodrigues(v, k, t1).unwrap(), k, t2).unwrap();
            prop_assert!((once - twice).norm() <= 1e-9 * (1.0 + v.norm()));
        }

        #[test]
        fn projection_is_idempotent(
            vx in -100.0..100.0f64, vy in -100.0..100.0f64, vz in -100.0..100.0f64,
            nx in -5.0..5.0f64, ny in -5.0..5.0f64, nz in -5.0..5.0f64,
        ) {
            let v = Vec3::new(vx, vy, vz);
            let n = Vec3::new(nx, ny, nz);
            prop_assume!(n.norm() > 1e-3);
            let p1 = project_onto_plane(v, n).unwrap();
            let p2 = project_onto_plane(p1, n).unwrap();
            prop_assert!((p1 - p2).norm() <= 1e-9 * (1.0 + v.norm()));
            // The projection is orthogonal to the normal.
            prop_assert!(p1.dot(n.normalized().unwrap()).abs() <= 1e-9 * (1.0 + v.norm()));
        }
    }
}
