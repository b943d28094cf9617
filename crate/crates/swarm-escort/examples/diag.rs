use swarm_escort::engine::{self, Outcome, ScenarioConfig};
use swarm_escort::pursuit::{self, Phase};

#[derive(Clone, Copy)]
struct Entry {
    tick: u64,
    align: f64,
    dist: f64,
    wall: f64,
    ended: Option<u64>,
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed_lo: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0);
    let seed_hi: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(seed_lo + 1);
    let verbose = args.get(3).map(|s| s == "-v").unwrap_or(false);
    let from: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0);
    let until: u64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(u64::MAX);

    if verbose {
        let mut cfg = ScenarioConfig::default();
        cfg.seed = seed_lo;
        engine::run_observed(&cfg, |w| {
            if w.tick < from || w.tick > until || w.tick % 5 != 0 {
                return;
            }
            let m = w.muav_pos;
            let (zx, zy, zz) = (w.cfg.zone_dims.x, w.cfg.zone_dims.y, w.cfg.zone_dims.z);
            let wall = [m.x, zx - m.x, m.y, zy - m.y, m.z, zz - m.z]
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let in_eps_m = w
                .nodes
                .iter()
                .filter(|n| n.pos.distance(m) < w.cfg.eps_m)
                .count();
            let heads: Vec<String> = w
                .nodes
                .iter()
                .filter(|n| n.phase == Phase::Escort)
                .map(|n| format!("{}@{:.0}", n.id.index(), n.pos.distance(m)))
                .collect();
            use swarm_escort::protocol::Role;
            let n_heads = w.nodes.iter().filter(|n| n.role == Role::ClusterHead).count();
            let n_free = w.nodes.iter().filter(|n| n.role == Role::FreeUav).count();
            let nearest = w
                .nodes
                .iter()
                .map(|n| n.pos.distance(m))
                .fold(f64::INFINITY, f64::min);
            println!(
                "t={:<6} muav=({:>4.0},{:>4.0},{:>4.0}) wall={:>5.1} near={:>5.0} contact={} door={} heads={} free={} escorts=[{}]",
                w.tick,
                m.x,
                m.y,
                m.z,
                wall,
                nearest,
                in_eps_m,
                if w.muav_enclosed() { "OPEN" } else { "shut" },
                n_heads,
                n_free,
                heads.join(" ")
            );
        });
        return;
    }

    let mut all: Vec<(u64, Entry, bool)> = Vec::new();
    for seed in seed_lo..seed_hi {
        let mut cfg = ScenarioConfig::default();
        cfg.seed = seed;
        let mut prev_phase: Vec<Phase> = Vec::new();
        let mut open: Vec<Option<usize>> = Vec::new();
        let mut entries: Vec<Entry> = Vec::new();
        let mut episodes: Vec<(u64, u64)> = Vec::new();
        let mut in_episode = false;
        let record = engine::run_observed(&cfg, |w| {
            if prev_phase.is_empty() {
                prev_phase = w.nodes.iter().map(|n| n.phase).collect();
                open = vec![None; w.nodes.len()];
                return;
            }
            let any = w.nodes.iter().any(|n| n.phase == Phase::Escort);
            if any && !in_episode {
                episodes.push((w.tick, w.tick));
                in_episode = true;
            } else if in_episode {
                if any {
                    episodes.last_mut().unwrap().1 = w.tick;
                } else {
                    in_episode = false;
                }
            }
            for (i, n) in w.nodes.iter().enumerate() {
                let was = prev_phase[i];
                prev_phase[i] = n.phase;
                if n.phase == Phase::Escort && was != Phase::Escort {
                    let to_muav = w.muav_pos - n.pos;
                    let dist = to_muav.norm();
                    let heading = pursuit::escort_heading(n.pos, w.cfg.zone_dims);
                    let align = if dist > 0.0 {
                        heading.dot(to_muav) / dist
                    } else {
                        1.0
                    };
                    let m = w.muav_pos;
                    let (zx, zy, zz) = (w.cfg.zone_dims.x, w.cfg.zone_dims.y, w.cfg.zone_dims.z);
                    let wall = [m.x, zx - m.x, m.y, zy - m.y, m.z, zz - m.z]
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    open[i] = Some(entries.len());
                    entries.push(Entry { tick: w.tick, align, dist, wall, ended: None });
                } else if n.phase != Phase::Escort && was == Phase::Escort {
                    if let Some(idx) = open[i].take() {
                        entries[idx].ended = Some(w.tick);
                    }
                }
            }
        });
        let ok = record.outcome == Outcome::Escorted;
        let total = record.escort_ticks;
        let last_start = episodes.last().map(|e| e.0).unwrap_or(0);
        println!(
            "seed {seed}: {} ticks={} entries={} episodes={} last_start={}",
            if ok { "ESCORTED" } else { "TIMEOUT" },
            total,
            entries.len(),
            episodes.len(),
            last_start
        );
        for e in &entries {
            let carried = e.ended.is_none() && ok;
            println!(
                "  t={:<6} align={:+.2} dist={:>6.1} wall={:>6.1} {}",
                e.tick,
                e.align,
                e.dist,
                e.wall,
                match e.ended {
                    Some(end) => format!("failed after {}", end - e.tick),
                    None => "carried out".to_string(),
                }
            );
            all.push((seed, *e, carried));
        }
    }

    // Aggregate: success rate by alignment bucket.
    println!("\nalign bucket   carried/total");
    for lo in [-10, -5, 0, 5].into_iter() {
        let lo = f64::from(lo) / 10.0;
        let hi = lo + 0.5;
        let in_bucket: Vec<_> = all.iter().filter(|(_, e, _)| e.align >= lo && e.align < hi).collect();
        let carried = in_bucket.iter().filter(|(_, _, c)| *c).count();
        println!("[{lo:+.1},{hi:+.1})   {carried}/{}", in_bucket.len());
    }
    println!("\nwall bucket    carried/total");
    for (lo, hi) in [(0.0, 60.0), (60.0, 150.0), (150.0, 300.0), (300.0, 1000.0)] {
        let in_bucket: Vec<_> = all.iter().filter(|(_, e, _)| e.wall >= lo && e.wall < hi).collect();
        let carried = in_bucket.iter().filter(|(_, _, c)| *c).count();
        println!("[{lo:>4.0},{hi:>4.0})   {carried}/{}", in_bucket.len());
    }
}
