//! Builds a capture-formation frame and walks its slot geometry: branch
//! ring directions, member slots by depth, and the spacing the formation
//! radius guarantees.

use std::f64::consts::{FRAC_PI_2, PI};

use swarm_escort::formation::{branch_root_direction, build_frame, member_slot};
use swarm_escort::geometry::{formation_radius, Vec3};

fn main() {
    let eps_d = 40.0;

    println!("formation radius by longest-branch length (eps_d = {eps_d}):");
    for len in 1..=6 {
        let r_f = formation_radius(eps_d, len).unwrap();
        println!("  {len} members -> r_f = {r_f:.2}");
    }

    let head = Vec3::new(250.0, 250.0, 100.0);
    let intruder = Vec3::new(250.0, 250.0, 200.0);
    let max_len = 4;
    let n_branches = 3;

    // A quarter-turn enclosure puts the deepest member of the longest
    // branch exactly at the pole between the head and the intruder.
    let frame = build_frame(head, intruder, eps_d, max_len, FRAC_PI_2).unwrap();
    println!("\nhead at {head:?}, intruder straight above, beta = pi/2");
    println!("r_f = {:.2}, elevation step = {:.4} rad", frame.r_f, frame.theta_frac);

    for b in 1..=n_branches {
        let dir = branch_root_direction(&frame, b, n_branches).unwrap();
        println!("\nbranch {b}, ring direction ({:+.3}, {:+.3}, {:+.3}):", dir.x, dir.y, dir.z);
        let mut prev = None;
        for depth in 1..=max_len {
            let slot = member_slot(&frame, dir, depth, head);
            let gap = prev.map(|p: Vec3| p.distance(slot));
            match gap {
                Some(g) => println!(
                    "  depth {depth}: ({:7.2}, {:7.2}, {:7.2})  gap to previous = {g:.2}",
                    slot.x, slot.y, slot.z
                ),
                None => println!(
                    "  depth {depth}: ({:7.2}, {:7.2}, {:7.2})",
                    slot.x, slot.y, slot.z
                ),
            }
            prev = Some(slot);
        }
        let pole = member_slot(&frame, dir, max_len, head);
        let on_axis = pole.distance(head + frame.d_hat * frame.r_f);
        println!("  deepest slot sits {on_axis:.2e} off the pole");
    }

    // Widening the enclosure toward a half turn wraps the branches past
    // the pole so the sphere closes behind the intruder.
    let closed = build_frame(head, intruder, eps_d, max_len, PI).unwrap();
    let dir = branch_root_direction(&closed, 1, n_branches).unwrap();
    println!("\nsame scene at beta = pi (fully wrapped):");
    for depth in 1..=max_len {
        let slot = member_slot(&closed, dir, depth, head);
        let elevation = frame.theta_frac * depth as f64;
        println!(
            "  depth {depth}: ({:7.2}, {:7.2}, {:7.2})  quarter-turn elevation was {elevation:.3}",
            slot.x, slot.y, slot.z
        );
    }
}
