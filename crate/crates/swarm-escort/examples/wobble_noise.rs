//! Samples the gradient-noise wobble that perturbs every UAV: smooth,
//! bounded by the configured radius, and fully determined by the seed.

use swarm_escort::physics::{wobble_offset, Perlin1D, WobbleState};

fn main() {
    let noise = Perlin1D::new(42);

    let state = WobbleState { radius: 50.0, offsets: [12.0, 97.5, 203.25] };
    println!("radius 50, first ticks (offsets move a little each tick):");
    for tick in 0..8 {
        let o = wobble_offset(&state, &noise, tick);
        println!("  tick {tick}: ({:+7.3}, {:+7.3}, {:+7.3})", o.x, o.y, o.z);
    }

    println!("\nper-axis envelope over 20000 ticks:");
    for radius in [0.0, 25.0, 50.0, 150.0] {
        let state = WobbleState { radius, offsets: [12.0, 97.5, 203.25] };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut mean_step = 0.0;
        let mut prev = wobble_offset(&state, &noise, 0);
        for tick in 1..20_000 {
            let o = wobble_offset(&state, &noise, tick);
            lo = lo.min(o.x.min(o.y).min(o.z));
            hi = hi.max(o.x.max(o.y).max(o.z));
            mean_step += (o - prev).norm();
            prev = o;
        }
        mean_step /= 19_999.0;
        println!(
            "  radius {radius:5.1}: offsets in [{lo:8.3}, {hi:8.3}], mean drift {mean_step:.4}/tick"
        );
    }

    let again = Perlin1D::new(42);
    let other = Perlin1D::new(43);
    let probe = WobbleState { radius: 50.0, offsets: [12.0, 97.5, 203.25] };
    println!(
        "\nsame seed, same offsets: {}",
        wobble_offset(&probe, &again, 777) == wobble_offset(&probe, &noise, 777)
    );
    println!(
        "different seed: {}",
        wobble_offset(&probe, &other, 777) == wobble_offset(&probe, &noise, 777)
    );
}
