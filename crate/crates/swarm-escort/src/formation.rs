//! Capture formation around the intruder.
//!
//! An escorting cluster arranges its members on a sphere of radius `r_f`
//! centered on the head. Each branch sweeps an arc from the ring
//! perpendicular to the head-to-intruder direction toward the pole: the
//! member at depth `k` sits at elevation `k * theta_frac`. With the
//! enclosure angle at its initial quarter turn the deepest member of the
//! longest branch reaches the pole exactly, and the radius returned by
//! [`crate::geometry::formation_radius`] makes consecutive members sit
//! one capture distance apart. Widening the enclosure toward a half turn
//! wraps the branches past the pole until the sphere closes behind the
//! intruder.
//!
//! Heads send each branch root a [`RotationOrder`]; members forward it
//! down unchanged and derive their own slot from their depth.

use std::f64::consts::FRAC_PI_2;

use crate::geometry::{
    branch_rotation_angle, formation_radius, rotate_rodrigues, GeometryError, Vec3,
};

/// Basis and arc parameters of one cluster's formation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormationFrame {
    /// Unit direction from the head to the intruder, the sphere's pole.
    pub d_hat: Vec3,
    /// Unit reference on the ring perpendicular to `d_hat`, from which
    /// branch directions are rotated.
    pub v_hat: Vec3,
    pub r_f: f64,
    /// Elevation step per unit of branch depth, radians.
    pub theta_frac: f64,
    /// Enclosure angle reached by the deepest member of the longest
    /// branch.
    pub beta: f64,
}

/// Slot geometry shared by every member of one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationOrder {
    pub anchor: Vec3,
    pub axis: Vec3,
    pub branch_dir: Vec3,
    pub r_f: f64,
    pub theta_frac: f64,
}

impl RotationOrder {
    /// Target position for the member at `depth` on this branch.
    pub fn slot(&self, depth: u32) -> Vec3 {
        let alpha = self.theta_frac * depth as f64;
        self.anchor + (self.branch_dir * alpha.cos() + self.axis * alpha.sin()) * self.r_f
    }
}

/// Frame for a cluster at `ch_pos` facing the intruder at `muav_pos`,
/// whose longest branch has `max_len` members, holding an enclosure
/// angle of `beta` radians.
///
/// The ring reference is the cross product of the facing direction with
/// world-up (world-x when facing straight up or down), so frames for
/// horizontal facings are rotations of each other about the vertical.
/// The elevation step caps at a quarter turn, which only binds for
/// single-member branches.
pub fn build_frame(
    ch_pos: Vec3,
    muav_pos: Vec3,
    eps_d: f64,
    max_len: u32,
    beta: f64,
) -> Result<FormationFrame, GeometryError> {
    let d_hat = (muav_pos - ch_pos).normalized().ok_or(GeometryError::ZeroDirection)?;
    let up = Vec3::new(0.0, 0.0, 1.0);
    let v_hat = d_hat.cross(up).normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    let r_f = formation_radius(eps_d, max_len as usize)?;
    let theta_frac = (beta / max_len as f64).min(FRAC_PI_2);
    Ok(FormationFrame { d_hat, v_hat, r_f, theta_frac, beta })
}

/// Ring direction of one branch, branches spread evenly around the pole
/// axis. Indices are 1-based.
pub fn branch_root_direction(
    frame: &FormationFrame,
    branch_index: usize,
    n_branches: usize,
) -> Result<Vec3, GeometryError> {
    let angle = branch_rotation_angle(branch_index, n_branches)?;
    rotate_rodrigues(frame.v_hat, frame.d_hat, angle)
}

/// Ring direction with an explicit separation angle between consecutive
/// branches, for configurations that pin the angle instead of dividing
/// the full turn.
pub fn branch_root_direction_at(
    frame: &FormationFrame,
    branch_index: usize,
    separation: f64,
) -> Result<Vec3, GeometryError> {
    if branch_index == 0 {
        return Err(GeometryError::BranchIndexOutOfRange { index: 0, count: usize::MAX });
    }
    rotate_rodrigues(frame.v_hat, frame.d_hat, separation * (branch_index - 1) as f64)
}

/// Target position for the member at depth `w_b` on the branch lying
/// along `branch_dir`, for a formation anchored at `anchor`.
pub fn member_slot(frame: &FormationFrame, branch_dir: Vec3, w_b: u32, anchor: Vec3) -> Vec3 {
    RotationOrder {
        anchor,
        axis: frame.d_hat,
        branch_dir,
        r_f: frame.r_f,
        theta_frac: frame.theta_frac,
    }
    .slot(w_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI, TAU};

    fn quarter_frame() -> (FormationFrame, Vec3) {
        let anchor = Vec3::new(10.0, 20.0, 30.0);
        let muav = anchor + Vec3::new(0.0, 77.0, 0.0);
        (build_frame(anchor, muav, 40.0, 5, FRAC_PI_2).unwrap(), anchor)
    }

    #[test]
    fn frame_basis_is_orthonormal_and_faces_the_intruder() {
        let (frame, _) = quarter_frame();
        assert!((frame.d_hat - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        assert!((frame.d_hat.norm() - 1.0).abs() < 1e-12);
        assert!((frame.v_hat.norm() - 1.0).abs() < 1e-12);
        assert!(frame.d_hat.dot(frame.v_hat).abs() < 1e-9);
        assert!((frame.theta_frac - FRAC_PI_2 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_enclosure_with_three_members_steps_by_a_sixth_turn() {
        let frame = build_frame(
            Vec3::default(),
            Vec3::new(10.0, 0.0, 0.0),
            40.0,
            3,
            FRAC_PI_2,
        )
        .unwrap();
        assert!((frame.theta_frac - FRAC_PI_6).abs() < 1e-12);
    }

    #[test]
    fn facing_straight_up_falls_back_to_world_x() {
        let frame =
            build_frame(Vec3::default(), Vec3::new(0.0, 0.0, 9.0), 40.0, 3, FRAC_PI_2).unwrap();
        assert_eq!(frame.v_hat, Vec3::new(1.0, 0.0, 0.0));
        let down =
            build_frame(Vec3::default(), Vec3::new(0.0, 0.0, -9.0), 40.0, 3, FRAC_PI_2).unwrap();
        assert_eq!(down.v_hat, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn consecutive_slots_sit_one_capture_distance_apart() {
        let (frame, anchor) = quarter_frame();
        for b in 1..=3 {
            let dir = branch_root_direction(&frame, b, 3).unwrap();
            for depth in 1..5 {
                let gap = member_slot(&frame, dir, depth + 1, anchor)
                    .distance(member_slot(&frame, dir, depth, anchor));
                assert!((gap - 40.0).abs() < 1e-9, "branch {b} depth {depth}: gap {gap}");
            }
        }
    }

    #[test]
    fn slots_lie_on_the_formation_sphere_facing_forward() {
        let (frame, anchor) = quarter_frame();
        for b in 1..=3 {
            let dir = branch_root_direction(&frame, b, 3).unwrap();
            for depth in 0..=5 {
                let slot = member_slot(&frame, dir, depth, anchor);
                assert!((slot.distance(anchor) - frame.r_f).abs() < 1e-9);
                assert!((slot - anchor).dot(frame.d_hat) >= -1e-9);
            }
        }
    }

    #[test]
    fn first_member_slot_matches_the_arc_decomposition() {
        let frame = FormationFrame {
            d_hat: Vec3::new(0.0, 1.0, 0.0),
            v_hat: Vec3::new(1.0, 0.0, 0.0),
            r_f: 100.0,
            theta_frac: FRAC_PI_6,
            beta: FRAC_PI_2,
        };
        let slot = member_slot(&frame, frame.v_hat, 1, Vec3::default());
        assert!((slot.x - 100.0 * FRAC_PI_6.cos()).abs() < 1e-9);
        assert!((slot.x - 86.60254037844387).abs() < 1e-9);
        assert!((slot.y - 50.0).abs() < 1e-9);
        assert!(slot.z.abs() < 1e-12);
    }

    #[test]
    fn deepest_member_reaches_the_pole_at_quarter_enclosure() {
        let (frame, anchor) = quarter_frame();
        let pole = anchor + frame.d_hat * frame.r_f;
        for b in 1..=3 {
            let dir = branch_root_direction(&frame, b, 3).unwrap();
            assert!(member_slot(&frame, dir, 5, anchor).distance(pole) < 1e-9, "branch {b}");
        }
    }

    #[test]
    fn half_enclosure_wraps_past_the_pole() {
        let frame =
            build_frame(Vec3::default(), Vec3::new(0.0, 9.0, 0.0), 40.0, 5, PI).unwrap();
        let dir = branch_root_direction(&frame, 1, 3).unwrap();
        let antipode = Vec3::default() - dir * frame.r_f;
        assert!(member_slot(&frame, dir, 5, Vec3::default()).distance(antipode) < 1e-9);
        let rel = member_slot(&frame, dir, 3, Vec3::default());
        assert!(rel.dot(frame.d_hat) > 0.0);
        assert!(rel.dot(dir) < 0.0);
    }

    #[test]
    fn lone_member_elevation_caps_at_a_quarter_turn() {
        let frame =
            build_frame(Vec3::default(), Vec3::new(9.0, 0.0, 0.0), 40.0, 1, PI).unwrap();
        assert_eq!(frame.theta_frac, FRAC_PI_2);
    }

    #[test]
    fn branches_spread_evenly_around_the_axis() {
        let (frame, _) = quarter_frame();
        let dirs: Vec<Vec3> =
            (1..=4).map(|b| branch_root_direction(&frame, b, 4).unwrap()).collect();
        assert!((dirs[0] - frame.v_hat).norm() < 1e-12);
        assert!((dirs[2] + frame.v_hat).norm() < 1e-9);
        for w in dirs.windows(2) {
            let cos = w[0].dot(w[1]);
            assert!((cos - (TAU / 4.0).cos()).abs() < 1e-9);
        }
        for dir in &dirs {
            assert!(dir.dot(frame.d_hat).abs() < 1e-9);
            assert!((dir.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pinned_separation_angle_overrides_the_even_split() {
        let (frame, _) = quarter_frame();
        let d1 = branch_root_direction_at(&frame, 1, FRAC_PI_2).unwrap();
        let d2 = branch_root_direction_at(&frame, 2, FRAC_PI_2).unwrap();
        let d3 = branch_root_direction_at(&frame, 3, FRAC_PI_2).unwrap();
        assert!((d1 - frame.v_hat).norm() < 1e-12);
        assert!(d1.dot(d2).abs() < 1e-9);
        assert!((d3 + frame.v_hat).norm() < 1e-9);
    }

    #[test]
    fn horizontal_facings_give_rotated_formations() {
        let anchor = Vec3::new(3.0, -7.0, 12.0);
        let up = Vec3::new(0.0, 0.0, 1.0);
        let phi = 0.7;
        let m1 = anchor + Vec3::new(60.0, 0.0, 0.0);
        let m2 = anchor + rotate_rodrigues(Vec3::new(60.0, 0.0, 0.0), up, phi).unwrap();
        let f1 = build_frame(anchor, m1, 40.0, 4, FRAC_PI_2).unwrap();
        let f2 = build_frame(anchor, m2, 40.0, 4, FRAC_PI_2).unwrap();
        for b in 1..=3 {
            let dir1 = branch_root_direction(&f1, b, 3).unwrap();
            let dir2 = branch_root_direction(&f2, b, 3).unwrap();
            for depth in 0..=4 {
                let s1 = member_slot(&f1, dir1, depth, anchor) - anchor;
                let s2 = member_slot(&f2, dir2, depth, anchor) - anchor;
                let mapped = rotate_rodrigues(s1, up, phi).unwrap();
                assert!((mapped - s2).norm() < 1e-9, "branch {b} depth {depth}");
            }
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(
            build_frame(p, p, 40.0, 5, FRAC_PI_2).unwrap_err(),
            GeometryError::ZeroDirection
        );
        assert_eq!(
            build_frame(p, p + Vec3::new(1.0, 0.0, 0.0), 40.0, 0, FRAC_PI_2).unwrap_err(),
            GeometryError::DegenerateCluster
        );
        let (frame, _) = quarter_frame();
        assert!(matches!(
            branch_root_direction(&frame, 0, 3),
            Err(GeometryError::BranchIndexOutOfRange { .. })
        ));
        assert!(matches!(
            branch_root_direction(&frame, 4, 3),
            Err(GeometryError::BranchIndexOutOfRange { .. })
        ));
    }
}
