//! Deterministic synchronous simulation loop.
//!
//! A [`World`] holds the defense swarm, the intruder, and the message
//! queue. Every [`World::tick`] runs the same sub-phases in a fixed
//! order: sense neighborhoods, deliver queued messages (one tick of
//! latency, dropped when the endpoints moved out of range), run the
//! clustering protocol, let heads decide chase or escort and publish
//! formation orders, steer members toward their slots, then integrate
//! all bodies with separation forces and wobble. Identical configs
//! produce bit-identical runs: the only randomness is drawn at spawn
//! from the seed, and singularity fallbacks hash the tick instead of
//! consuming generator state.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formation::{self, RotationOrder};
use crate::geometry::{formation_radius, Vec3};
use crate::physics::{self, Force, KinematicBody, Perlin1D, WobbleState};
use crate::protocol::{self, Envelope, MessageBody, NodeId, NodeState, ProtocolConfig, Role};
use crate::pursuit::{self, MuavTrack, Phase};

/// Weight of a chasing head's cross-track anticipation force.
const W_LATERAL: f64 = 0.5;
/// Weight of the direct pursuit or escort heading force.
const W_DIRECT: f64 = 1.0;
/// Longest lead time, in ticks, when a follower projects its moving
/// formation slot ahead. The slot velocity is a one-tick sample;
/// stretching it much further amplifies jitter into overshoot.
const INTERCEPT_TICKS: f64 = 25.0;

/// Full description of one scenario. Field names double as the keys of
/// the key=value config file format.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub zone_dims: Vec3,
    pub n_duavs: usize,
    pub comm_range: f64,
    pub duav_wobble: f64,
    pub muav_wobble: f64,
    pub eps_d: f64,
    pub eps_m: f64,
    pub n_branches: usize,
    /// Pins the angle between consecutive branch ring directions instead
    /// of dividing the full turn by the branch count.
    pub theta_override: Option<f64>,
    pub speed: f64,
    pub body_radius: f64,
    pub max_k: u32,
    pub prediction_factor: f64,
    /// Enclosure angle reached after `enclosure_ticks` ticks of escort.
    pub beta_max: f64,
    pub enclosure_ticks: u32,
    /// Intruder top speed as a fraction of the defenders'.
    pub speed_ratio: f64,
    pub max_ticks: u64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            zone_dims: Vec3::new(500.0, 500.0, 500.0),
            n_duavs: 20,
            comm_range: 100.0,
            duav_wobble: 50.0,
            muav_wobble: 150.0,
            eps_d: 40.0,
            eps_m: 60.0,
            n_branches: 3,
            theta_override: None,
            speed: 0.8,
            body_radius: 10.0,
            max_k: 3,
            prediction_factor: 2.0,
            beta_max: PI,
            enclosure_ticks: 60,
            speed_ratio: 0.9,
            max_ticks: 20000,
            seed: 42,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Malformed { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
}

fn field<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        reason: e.to_string(),
    })
}

impl ScenarioConfig {
    /// Parses flat `key=value` text over the defaults. Blank lines and
    /// `#` comments are skipped; unknown keys are rejected.
    pub fn from_key_values(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed { line: idx + 1 });
            };
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "zone_dims" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 3 {
                    return Err(ConfigError::InvalidValue {
                        key: key.to_string(),
                        reason: "expected three comma-separated lengths".to_string(),
                    });
                }
                self.zone_dims = Vec3::new(
                    field(key, parts[0].trim())?,
                    field(key, parts[1].trim())?,
                    field(key, parts[2].trim())?,
                );
            }
            "n_duavs" => self.n_duavs = field(key, value)?,
            "comm_range" => self.comm_range = field(key, value)?,
            "duav_wobble" => self.duav_wobble = field(key, value)?,
            "muav_wobble" => self.muav_wobble = field(key, value)?,
            "eps_d" => self.eps_d = field(key, value)?,
            "eps_m" => self.eps_m = field(key, value)?,
            "n_branches" => self.n_branches = field(key, value)?,
            "theta_override" => {
                self.theta_override = if value.is_empty() || value == "none" {
                    None
                } else {
                    Some(field(key, value)?)
                };
            }
            "speed" => self.speed = field(key, value)?,
            "body_radius" => self.body_radius = field(key, value)?,
            "max_k" => self.max_k = field(key, value)?,
            "prediction_factor" => self.prediction_factor = field(key, value)?,
            "beta_max" => self.beta_max = field(key, value)?,
            "enclosure_ticks" => self.enclosure_ticks = field(key, value)?,
            "speed_ratio" => self.speed_ratio = field(key, value)?,
            "max_ticks" => self.max_ticks = field(key, value)?,
            "seed" => self.seed = field(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: &str| {
            Err(ConfigError::InvalidValue { key: key.to_string(), reason: reason.to_string() })
        };
        for (axis, v) in [("x", self.zone_dims.x), ("y", self.zone_dims.y), ("z", self.zone_dims.z)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return bad("zone_dims", &format!("{axis} extent must be positive"));
            }
        }
        if self.n_duavs < 1 {
            return bad("n_duavs", "at least one defender required");
        }
        if !(self.comm_range > 0.0) {
            return bad("comm_range", "must be positive");
        }
        if !(self.duav_wobble >= 0.0) {
            return bad("duav_wobble", "must be non-negative");
        }
        if !(self.muav_wobble >= 0.0) {
            return bad("muav_wobble", "must be non-negative");
        }
        if !(self.speed > 0.0) {
            return bad("speed", "must be positive");
        }
        if !(self.body_radius > 0.0) {
            return bad("body_radius", "must be positive");
        }
        if !(self.eps_d >= 2.0 * self.body_radius) {
            return bad("eps_d", "must cover both bodies: at least twice body_radius");
        }
        if !(self.eps_m >= 2.0 * self.body_radius) {
            return bad("eps_m", "must cover both bodies: at least twice body_radius");
        }
        if self.n_branches < 1 {
            return bad("n_branches", "at least one branch required");
        }
        if let Some(t) = self.theta_override {
            if !(t > 0.0 && t <= TAU) {
                return bad("theta_override", "must lie in (0, 2*pi]");
            }
        }
        if self.max_k < 1 {
            return bad("max_k", "must be at least 1");
        }
        if !(self.prediction_factor >= 0.0) || !self.prediction_factor.is_finite() {
            return bad("prediction_factor", "must be finite and non-negative");
        }
        if !(self.beta_max >= FRAC_PI_2 && self.beta_max <= PI) {
            return bad("beta_max", "must lie in [pi/2, pi]");
        }
        if self.enclosure_ticks < 1 {
            return bad("enclosure_ticks", "must be at least 1");
        }
        if !(self.speed_ratio > 0.0) {
            return bad("speed_ratio", "must be positive");
        }
        Ok(())
    }

    fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig { max_k: self.max_k, n_branches: self.n_branches }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Escorted,
    Timeout,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Escorted => "ESCORTED",
            Outcome::Timeout => "TIMEOUT",
        })
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ESCORTED" => Ok(Outcome::Escorted),
            "TIMEOUT" => Ok(Outcome::Timeout),
            other => Err(format!("unknown outcome `{other}`")),
        }
    }
}

/// Result of one complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub outcome: Outcome,
    /// Tick at which the intruder left the zone, or the timeout cap.
    pub escort_ticks: u64,
    /// Defenders still outside any cluster at termination.
    pub clusterless_final: usize,
    pub config: ScenarioConfig,
}

impl fmt::Display for RunRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed={} outcome={} escort_ticks={} clusterless_final={}",
            self.seed, self.outcome, self.escort_ticks, self.clusterless_final
        )
    }
}

/// Running totals of the message bus. Every sent message is eventually
/// delivered or dropped: `sent = delivered + dropped + in flight`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MessageStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
}

pub struct World {
    pub cfg: ScenarioConfig,
    pub nodes: Vec<NodeState>,
    pub muav_pos: Vec3,
    pub muav_prev: Vec3,
    pub tick: u64,
    proto: ProtocolConfig,
    in_flight: Vec<Envelope>,
    noise: Perlin1D,
    wobbles: Vec<WobbleState>,
    muav_wobble: WobbleState,
    /// Per-node escort persistence counter; meaningful for heads only.
    enclosure: Vec<u32>,
    /// Last known unit direction toward the intruder, per node.
    prev_headings: Vec<Vec3>,
    stats: MessageStats,
}

impl World {
    /// Spawns the scenario: intruder at the zone center, defenders
    /// uniformly seeded in the slab covering the first tenth of the x
    /// axis.
    pub fn new(cfg: ScenarioConfig) -> World {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let noise = Perlin1D::new(cfg.seed);
        let mut nodes = Vec::with_capacity(cfg.n_duavs);
        let mut wobbles = Vec::with_capacity(cfg.n_duavs);
        for i in 0..cfg.n_duavs {
            let pos = Vec3::new(
                rng.random_range(0.0..cfg.zone_dims.x * 0.1),
                rng.random_range(0.0..cfg.zone_dims.y),
                rng.random_range(0.0..cfg.zone_dims.z),
            );
            nodes.push(NodeState::free(NodeId(i as u32), pos));
            wobbles.push(WobbleState {
                radius: cfg.duav_wobble,
                offsets: std::array::from_fn(|_| rng.random_range(0.0..256.0)),
            });
        }
        let muav_wobble = WobbleState {
            radius: cfg.muav_wobble,
            offsets: std::array::from_fn(|_| rng.random_range(0.0..256.0)),
        };
        let muav_pos = cfg.zone_dims * 0.5;
        let proto = cfg.protocol();
        let n = cfg.n_duavs;
        World {
            cfg,
            nodes,
            muav_pos,
            muav_prev: muav_pos,
            tick: 0,
            proto,
            in_flight: Vec::new(),
            noise,
            wobbles,
            muav_wobble,
            enclosure: vec![0; n],
            prev_headings: vec![Vec3::new(1.0, 0.0, 0.0); n],
            stats: MessageStats::default(),
        }
    }

    /// Sorted ids within communication range of node `id` (strictly,
    /// so a pair at exactly the range limit is not connected).
    pub fn neighbors_of(&self, id: NodeId) -> Vec<NodeId> {
        let me = &self.nodes[id.index()];
        self.nodes
            .iter()
            .filter(|n| n.id != id && n.pos.distance(me.pos) < self.cfg.comm_range)
            .map(|n| n.id)
            .collect()
    }

    fn sense_neighbors(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for i in 0..self.nodes.len() {
            for j in i + 1..self.nodes.len() {
                if self.nodes[i].pos.distance(self.nodes[j].pos) < self.cfg.comm_range {
                    out[i].push(NodeId(j as u32));
                    out[j].push(NodeId(i as u32));
                }
            }
        }
        out
    }

    pub fn muav_inside(&self) -> bool {
        let p = self.muav_pos;
        let d = self.cfg.zone_dims;
        (0.0..=d.x).contains(&p.x) && (0.0..=d.y).contains(&p.y) && (0.0..=d.z).contains(&p.z)
    }

    pub fn clusterless(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == Role::FreeUav).count()
    }

    pub fn message_stats(&self) -> MessageStats {
        self.stats
    }

    pub fn pending_messages(&self) -> &[Envelope] {
        &self.in_flight
    }

    /// True when no structural traffic (accept, discard, control) is in
    /// flight; formation orders stream continuously and do not count.
    pub fn structurally_quiescent(&self) -> bool {
        self.in_flight.iter().all(|e| matches!(e.body, MessageBody::Rotation(_)))
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        self.proto
    }

    /// The intruder may cross the zone boundary only while an escort is
    /// genuinely pressing it out: some head has held escort long enough
    /// to close its enclosure. A cage that loses its hold hands the
    /// intruder back to the boundary clamp.
    pub fn muav_enclosed(&self) -> bool {
        self.nodes.iter().any(|n| {
            n.role == Role::ClusterHead
                && n.phase == Phase::Escort
                && self.enclosure[n.id.index()] >= self.cfg.enclosure_ticks
        })
    }

    /// Flags heads in escort whose enclosure counter has reached
    /// `min_counter`, plus every member of their trees.
    fn escort_trees(&self, min_counter: u32) -> Vec<bool> {
        let mut flagged = vec![false; self.nodes.len()];
        for n in &self.nodes {
            if n.role != Role::ClusterHead
                || n.phase != Phase::Escort
                || self.enclosure[n.id.index()] < min_counter
            {
                continue;
            }
            flagged[n.id.index()] = true;
            for b in &n.branches {
                let mut prev = n.id;
                let mut cur = Some(b.root);
                while let Some(c) = cur {
                    if self.nodes[c.index()].parent != Some(prev) {
                        break;
                    }
                    flagged[c.index()] = true;
                    prev = c;
                    cur = self.nodes[c.index()].child;
                }
            }
        }
        flagged
    }

    /// Heads currently escorting, plus every member of their trees, may
    /// leave the zone; everyone else is clamped inside.
    fn exit_exempt(&self) -> Vec<bool> {
        self.escort_trees(0)
    }

    fn wobble_delta(&self, state: &WobbleState) -> Vec3 {
        physics::wobble_offset(state, &self.noise, self.tick + 1)
            - physics::wobble_offset(state, &self.noise, self.tick)
    }

    /// Advances the world by one tick.
    pub fn tick(&mut self) {
        let n = self.nodes.len();
        let neighbors = self.sense_neighbors();

        // Deliver last tick's messages; links that broke since sending
        // drop them.
        let mut inbox = Vec::with_capacity(self.in_flight.len());
        for env in std::mem::take(&mut self.in_flight) {
            let a = self.nodes[env.from.index()].pos;
            let b = self.nodes[env.to.index()].pos;
            if a.distance(b) < self.cfg.comm_range {
                self.stats.delivered += 1;
                inbox.push(env);
            } else {
                self.stats.dropped += 1;
            }
        }

        let outbox = protocol::step(&mut self.nodes, &neighbors, inbox, &self.proto);
        self.stats.sent += outbox.len() as u64;
        self.in_flight = outbox;

        // Heads decide their phase and heading and publish formation
        // orders for the current geometry.
        let mut forces: Vec<Vec<Force>> = vec![Vec::new(); n];
        let track = MuavTrack {
            prev_pos: self.muav_prev,
            curr_pos: self.muav_pos,
            factor: self.cfg.prediction_factor,
        };
        let predicted = pursuit::predict_muav(&track);
        for i in 0..n {
            if self.nodes[i].role != Role::ClusterHead {
                self.enclosure[i] = 0;
                continue;
            }
            let pos = self.nodes[i].pos;
            let max_len = self.nodes[i].max_branch_len();
            let r_f = if max_len == 0 {
                self.cfg.eps_d
            } else {
                let len = self.communicable_branch_len(max_len);
                // The head itself never presses closer than the
                // collision spacing, so a capture sphere below it
                // could never admit the intruder.
                formation_radius(self.cfg.eps_d, len as usize)
                    .expect("len >= 1")
                    .max(self.cfg.eps_d)
            };
            let dist = pos.distance(self.muav_pos);
            let phase = pursuit::phase_step(self.nodes[i].phase, dist, r_f);
            self.nodes[i].phase = phase;
            match phase {
                Phase::Escort => {
                    if self.enclosure[i] < self.cfg.enclosure_ticks {
                        self.enclosure[i] += 1;
                    }
                    let heading = pursuit::escort_heading(pos, self.cfg.zone_dims);
                    forces[i].push(steer(heading, W_DIRECT));
                }
                Phase::Chase => {
                    self.enclosure[i] = self.enclosure[i].saturating_sub(1);
                    for f in pursuit::chase_forces(
                        pos,
                        self.muav_pos,
                        predicted,
                        W_LATERAL,
                        W_DIRECT,
                        self.prev_headings[i],
                    ) {
                        forces[i].push(steer(f.dir, f.weight));
                    }
                }
            }
            if let Some(h) = (self.muav_pos - pos).normalized() {
                self.prev_headings[i] = h;
            }
            if max_len > 0 {
                self.send_rotation_orders(i, pos);
            }
        }

        // Members steer toward their formation slots; unclustered nodes
        // flock toward their neighborhood.
        for i in 0..n {
            let pos = self.nodes[i].pos;
            match self.nodes[i].role {
                Role::DUav => {
                    if let Some(rot) = self.nodes[i].rot {
                        let mut target = rot.slot(self.nodes[i].w_b);
                        // Slots travel with the head and swing with the
                        // intruder, so a follower aiming at the last
                        // published point trails it indefinitely. Lead the
                        // slot by its drift over the follower's travel time.
                        // Apparent drift beyond flight speed is a swing
                        // transient, not sustained motion; leading it in
                        // full would hurl the follower out of its links.
                        if let Some(prev) = self.nodes[i].prev_rot {
                            let drift = physics::clamp_speed(
                                target - prev.slot(self.nodes[i].w_b),
                                self.cfg.speed,
                            );
                            let eta = (target - pos).norm() / self.cfg.speed;
                            target += drift * eta.min(INTERCEPT_TICKS);
                        }
                        // A slot farther from the parent than the link can
                        // stretch would sever the tree; lean toward such a
                        // slot from inside the range instead.
                        if let Some(p) = self.nodes[i].parent {
                            let anchor = self.nodes[p.index()].pos;
                            let reach = 0.9 * self.cfg.comm_range;
                            let offset = target - anchor;
                            if offset.norm() > reach {
                                target = anchor + offset.with_norm(reach);
                            }
                        }
                        forces[i].push(steer(target - pos, W_DIRECT));
                    }
                }
                Role::FreeUav => {
                    let around: Vec<Vec3> =
                        neighbors[i].iter().map(|id| self.nodes[id.index()].pos).collect();
                    if let Some(target) = protocol::flocking_target(&around) {
                        forces[i].push(steer(target - pos, W_DIRECT));
                    }
                }
                _ => {}
            }
        }

        // Physics over the previous-tick snapshot. Separation acts at
        // each body's own threshold: a defender gives way within eps_d
        // of anything, the intruder within eps_m. Defenders can push the
        // intruder only while their standoff band reaches inside its
        // bubble, which is the whole game of eps_m versus eps_d. A head
        // has right of way through its own swarm (followers yield to
        // it), otherwise a packed cluster locks its head out of pursuit
        // range; it still keeps the standoff to the intruder.
        let muav_may_exit = self.muav_enclosed();
        let exempt = self.exit_exempt();
        let mut new_positions = Vec::with_capacity(n);
        for i in 0..n {
            let pos = self.nodes[i].pos;
            let mut pairs: Vec<(Vec3, f64)> = if self.nodes[i].role == Role::ClusterHead {
                Vec::new()
            } else {
                neighbors[i].iter().map(|id| (self.nodes[id.index()].pos, self.cfg.eps_d)).collect()
            };
            // The mixed pair takes the larger bubble, so the intruder's
            // spacing governs both sides of every contact with it.
            pairs.push((self.muav_pos, self.cfg.eps_d.max(self.cfg.eps_m)));
            let fallback = physics::hash_unit_dir(self.cfg.seed, self.tick, i as u64);
            forces[i].push(Force::new(physics::separation_force(pos, &pairs, 0.0, fallback), 1.0));
            let body = KinematicBody {
                pos,
                max_speed: self.cfg.speed,
                body_radius: self.cfg.body_radius,
                collision_threshold: self.cfg.eps_d,
            };
            let mut next = physics::integrate(&body, &forces[i], self.wobble_delta(&self.wobbles[i]));
            if !exempt[i] {
                next = clamp_to_zone(next, self.cfg.zone_dims);
            }
            new_positions.push(next);
        }

        let visible: Vec<Vec3> = self
            .nodes
            .iter()
            .filter(|d| d.pos.distance(self.muav_pos) < self.cfg.comm_range)
            .map(|d| d.pos)
            .collect();
        let muav_body = KinematicBody {
            pos: self.muav_pos,
            max_speed: self.cfg.speed * self.cfg.speed_ratio,
            body_radius: self.cfg.body_radius,
            collision_threshold: self.cfg.eps_m,
        };
        let fallback = physics::hash_unit_dir(self.cfg.seed ^ 0x6d75_6176, self.tick, u64::MAX);
        let muav_forces = physics::muav_policy(&muav_body, &visible, fallback);
        let mut muav_next =
            physics::integrate(&muav_body, &muav_forces, self.wobble_delta(&self.muav_wobble));
        if !muav_may_exit {
            muav_next = clamp_to_zone(muav_next, self.cfg.zone_dims);
        }

        for (node, next) in self.nodes.iter_mut().zip(new_positions) {
            node.pos = next;
        }
        self.muav_prev = self.muav_pos;
        self.muav_pos = muav_next;
        self.tick += 1;
    }

    /// Longest branch length whose formation sphere still fits inside
    /// the communication range. A branch root parked on the sphere has
    /// to keep its head link, so deeper clusters fold onto the widest
    /// sphere the links can span and surplus members wrap further
    /// along the arc.
    fn communicable_branch_len(&self, recorded: u32) -> u32 {
        let mut len = 1;
        while len < recorded {
            match formation_radius(self.cfg.eps_d, len as usize + 1) {
                Ok(r) if r <= self.cfg.comm_range => len += 1,
                _ => break,
            }
        }
        len
    }

    fn send_rotation_orders(&mut self, head: usize, pos: Vec3) {
        let beta = FRAC_PI_2
            + (self.cfg.beta_max - FRAC_PI_2) * f64::from(self.enclosure[head])
                / f64::from(self.cfg.enclosure_ticks);
        let recorded = self.nodes[head].max_branch_len();
        if recorded == 0 {
            return;
        }
        let max_len = self.communicable_branch_len(recorded);
        let Ok(frame) = formation::build_frame(pos, self.muav_pos, self.cfg.eps_d, max_len, beta)
        else {
            return;
        };
        let n_branches = self.nodes[head].branches.len();
        let roots: Vec<NodeId> = self.nodes[head].branches.iter().map(|b| b.root).collect();
        for (bi, root) in roots.into_iter().enumerate() {
            let dir = match self.cfg.theta_override {
                Some(step) => formation::branch_root_direction_at(&frame, bi + 1, step),
                None => formation::branch_root_direction(&frame, bi + 1, n_branches),
            };
            let Ok(branch_dir) = dir else { continue };
            let order = RotationOrder {
                anchor: pos,
                axis: frame.d_hat,
                branch_dir,
                r_f: frame.r_f,
                theta_frac: frame.theta_frac,
            };
            self.in_flight.push(Envelope {
                from: self.nodes[head].id,
                to: root,
                body: MessageBody::Rotation(order),
            });
            self.stats.sent += 1;
        }
    }

    fn finish<F: FnMut(&World)>(&mut self, mut observe: F) -> RunRecord {
        observe(self);
        let outcome = loop {
            if !self.muav_inside() {
                break Outcome::Escorted;
            }
            if self.tick >= self.cfg.max_ticks {
                break Outcome::Timeout;
            }
            self.tick();
            observe(self);
        };
        RunRecord {
            seed: self.cfg.seed,
            outcome,
            escort_ticks: self.tick,
            clusterless_final: self.clusterless(),
            config: self.cfg.clone(),
        }
    }
}

fn clamp_to_zone(p: Vec3, dims: Vec3) -> Vec3 {
    Vec3::new(p.x.clamp(0.0, dims.x), p.y.clamp(0.0, dims.y), p.z.clamp(0.0, dims.z))
}

/// Unit-direction steering force, eased near the goal. Keeping steering
/// at O(weight) magnitude lets separation springs win inside collision
/// thresholds, so a UAV can only advance where its own threshold leaves
/// room.
fn steer(error: Vec3, weight: f64) -> Force {
    match error.normalized() {
        Some(dir) => Force::new(dir, weight.min(error.norm())),
        None => Force::new(Vec3::new(0.0, 0.0, 0.0), 0.0),
    }
}

/// Runs one scenario to completion.
pub fn run(cfg: &ScenarioConfig) -> RunRecord {
    World::new(cfg.clone()).finish(|_| {})
}

/// Runs one scenario, calling `observe` on the spawned world and after
/// every tick.
pub fn run_observed<F: FnMut(&World)>(cfg: &ScenarioConfig, observe: F) -> RunRecord {
    World::new(cfg.clone()).finish(observe)
}

/// Runs one scenario writing the position/state trace to `out`.
pub fn run_traced<W: Write>(cfg: &ScenarioConfig, out: &mut W) -> io::Result<RunRecord> {
    writeln!(out, "tick,id,role,w_K,w_B,parent,child,x,y,z,phase")?;
    let mut io_err = None;
    let record = run_observed(cfg, |world| {
        if io_err.is_none() {
            if let Err(e) = write_trace_rows(world, out) {
                io_err = Some(e);
            }
        }
    });
    match io_err {
        Some(e) => Err(e),
        None => Ok(record),
    }
}

/// One trace row per defender (id order) plus the intruder.
pub fn write_trace_rows<W: Write>(world: &World, out: &mut W) -> io::Result<()> {
    fn opt(id: Option<NodeId>) -> String {
        id.map_or_else(|| "-".to_string(), |v| v.to_string())
    }
    for n in &world.nodes {
        let phase = if n.role == Role::ClusterHead { n.phase.to_string() } else { "-".to_string() };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            world.tick,
            n.id,
            n.role,
            n.w_k,
            n.w_b,
            opt(n.parent),
            opt(n.child),
            n.pos.x,
            n.pos.y,
            n.pos.z,
            phase
        )?;
    }
    writeln!(
        out,
        "{},{},{},0,0,-,-,{},{},{},-",
        world.tick,
        world.nodes.len(),
        Role::Malicious,
        world.muav_pos.x,
        world.muav_pos.y,
        world.muav_pos.z
    )
}
