//! Runs one complete mission with the default scenario and narrates its
//! milestones: first cluster head, first chase, first escort, and the
//! moment the intruder leaves the zone.

use swarm_escort::engine::{self, ScenarioConfig};
use swarm_escort::protocol::Role;
use swarm_escort::pursuit::Phase;

fn main() {
    let cfg = ScenarioConfig::default();
    println!(
        "zone {}x{}x{}, {} defenders, seed {}",
        cfg.zone_dims.x, cfg.zone_dims.y, cfg.zone_dims.z, cfg.n_duavs, cfg.seed
    );

    let mut first_head = None;
    let mut first_chase = None;
    let mut first_escort = None;
    let mut heads_over_time = Vec::new();

    let record = engine::run_observed(&cfg, |world| {
        let heads = world
            .nodes
            .iter()
            .filter(|n| n.role == Role::ClusterHead)
            .count();
        if world.tick % 500 == 0 {
            heads_over_time.push((world.tick, heads));
        }
        if first_head.is_none() && heads > 0 {
            first_head = Some(world.tick);
        }
        let phase_of = |p: Phase| {
            world
                .nodes
                .iter()
                .any(|n| n.role == Role::ClusterHead && n.phase == p)
        };
        if first_chase.is_none() && phase_of(Phase::Chase) {
            first_chase = Some(world.tick);
        }
        if first_escort.is_none() && phase_of(Phase::Escort) {
            first_escort = Some(world.tick);
        }
    });

    let report = |name: &str, tick: Option<u64>| match tick {
        Some(t) => println!("{name:>22}: tick {t}"),
        None => println!("{name:>22}: never"),
    };
    report("first cluster head", first_head);
    report("first chase", first_chase);
    report("first escort", first_escort);
    println!("{:>22}: {} after {} ticks", "outcome", record.outcome, record.escort_ticks);
    println!("{:>22}: {}", "clusterless at end", record.clusterless_final);

    println!("\ncluster heads over time:");
    for (tick, heads) in heads_over_time.iter().take(12) {
        println!("  tick {tick:5}: {} {}", heads, "#".repeat(*heads));
    }
}
