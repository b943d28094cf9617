//! Self-organization protocol for the defense swarm.
//!
//! Each defense UAV runs the same per-node rules every tick:
//!
//! * weight-based leader election over the 1-hop neighborhood, where a
//!   node holding the maximum weight acts as cluster head,
//! * growth of per-cluster trees with at most `n_branches` chains hanging
//!   off the head, kept within one member of each other in length,
//! * a small message alphabet (`BM-A` accept, `BM-D` discard, `CM` growth
//!   and length-correction notices, `ROT` formation orders) delivered
//!   reliably with one tick of latency.
//!
//! [`step`] advances the whole protocol one synchronous tick over an
//! explicit neighbor relation, so it runs identically inside the full
//! simulation and on abstract static graphs in tests.

use std::fmt;

use crate::formation::RotationOrder;
use crate::geometry::Vec3;
use crate::pursuit::Phase;

/// Index-valued node identity. Ids are dense: node `i` lives at slot `i`
/// of the world's node list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    FreeUav,
    DUav,
    ClusterHead,
    Malicious,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::FreeUav => "FREE_UAV",
            Role::DUav => "D_UAV",
            Role::ClusterHead => "CLUSTER_HEAD",
            Role::Malicious => "MALICIOUS",
        })
    }
}

/// One chain of members hanging off a cluster head. `len` is the head's
/// recorded length, updated by CM traffic; it may briefly lag the actual
/// chain while messages are in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchEntry {
    pub root: NodeId,
    pub len: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MessageBody {
    /// Parent-to-child permission to accept one more member at the leaf.
    BasicAccept,
    /// Discard order. `at_depth: None` frees the receiver and cascades to
    /// its child; `Some(d)` travels down and cuts the chain so the member
    /// at depth `d` and everything below is released.
    BasicDiscard { at_depth: Option<u32> },
    /// Child-to-parent growth notice (`corrected_len: None`) or a length
    /// correction after a lost child (`Some(surviving_len)`).
    Control { corrected_len: Option<u32> },
    /// Formation order, forwarded down the chain unchanged.
    Rotation(RotationOrder),
}

/// Delivery order of simultaneously arriving messages: accept before
/// discard before control before rotation, within each sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MessageKind {
    BasicAccept,
    BasicDiscard,
    Control,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub from: NodeId,
    pub to: NodeId,
    pub body: MessageBody,
}

impl Envelope {
    pub fn kind(&self) -> MessageKind {
        match self.body {
            MessageBody::BasicAccept => MessageKind::BasicAccept,
            MessageBody::BasicDiscard { .. } => MessageKind::BasicDiscard,
            MessageBody::Control { .. } => MessageKind::Control,
            MessageBody::Rotation(_) => MessageKind::Rotation,
        }
    }

    fn sort_key(&self) -> (NodeId, MessageKind, NodeId) {
        (self.from, self.kind(), self.to)
    }
}

/// Sorts a message batch into its deterministic delivery order.
pub fn sort_for_delivery(batch: &mut [Envelope]) {
    batch.sort_by_key(Envelope::sort_key);
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub role: Role,
    pub w_k: u32,
    pub w_b: u32,
    pub parent: Option<NodeId>,
    pub child: Option<NodeId>,
    pub accept: bool,
    pub branches: Vec<BranchEntry>,
    pub pos: Vec3,
    pub phase: Phase,
    /// Latest formation order received, kept until superseded or freed.
    pub rot: Option<RotationOrder>,
    /// Order the latest one superseded. Two consecutive orders give a
    /// follower the motion of its slot, so it can aim where the slot
    /// is going instead of trailing where it was.
    pub prev_rot: Option<RotationOrder>,
}

impl NodeState {
    pub fn free(id: NodeId, pos: Vec3) -> Self {
        NodeState {
            id,
            role: Role::FreeUav,
            w_k: 0,
            w_b: 0,
            parent: None,
            child: None,
            accept: false,
            branches: Vec::new(),
            pos,
            phase: Phase::Chase,
            rot: None,
            prev_rot: None,
        }
    }

    /// Recorded member count, the head's local knowledge of cluster size.
    pub fn recorded_members(&self) -> u32 {
        self.branches.iter().map(|b| b.len).sum()
    }

    /// Longest recorded branch, zero for a head without members.
    pub fn max_branch_len(&self) -> u32 {
        self.branches.iter().map(|b| b.len).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProtocolConfig {
    pub max_k: u32,
    pub n_branches: usize,
}

/// New election weight for one node given its neighbors' `(id, weight)`
/// pairs. Rules, applied in order:
///
/// 1. any neighbor heavier than self: adopt `max - 1`;
/// 2. weight 0 in an all-zero neighborhood: self-elect to `max_k`
///    (clustered nodes, which already follow a parent, never self-elect);
/// 3. two heads in contact: the higher id steps down to its heaviest
///    sub-maximum neighbor weight. Heads that hold members keep their
///    weight here and leave the conflict to [`merge_clusters`], which
///    decides by cluster size instead of id;
/// 4. an unsupported intermediate weight decays by one.
pub fn khopca_step(node: &NodeState, neighbors: &[(NodeId, u32)], max_k: u32) -> u32 {
    let heaviest = neighbors.iter().map(|&(_, w)| w).max();
    if let Some(m) = heaviest {
        if m > node.w_k {
            return m - 1;
        }
    }
    if node.w_k == 0 && node.parent.is_none() {
        // Reaching here with weight 0 means nobody around is heavier.
        return max_k;
    }
    if node.w_k == max_k {
        let contested = neighbors.iter().any(|&(id, w)| w == max_k && id < node.id);
        if contested && node.branches.is_empty() {
            return neighbors.iter().map(|&(_, w)| w).filter(|&w| w < max_k).max().unwrap_or(0);
        }
        return node.w_k;
    }
    if node.w_k > 0 && node.w_k < max_k {
        return node.w_k - 1;
    }
    node.w_k
}

/// Mean position of the neighborhood, the gathering target for nodes that
/// have not joined a cluster yet. `None` when alone.
pub fn flocking_target(neighbor_positions: &[Vec3]) -> Option<Vec3> {
    if neighbor_positions.is_empty() {
        return None;
    }
    let mut sum = Vec3::default();
    for &p in neighbor_positions {
        sum += p;
    }
    Some(sum / neighbor_positions.len() as f64)
}

/// Closest accepting candidate, ties broken toward the lower id.
pub fn select_parent(pos: Vec3, candidates: &[(NodeId, Vec3, bool)]) -> Option<NodeId> {
    let mut best: Option<(f64, NodeId)> = None;
    for &(id, cpos, accept) in candidates {
        if !accept {
            continue;
        }
        let d = pos.distance(cpos);
        let better = match best {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && id < bid),
        };
        if better {
            best = Some((d, id));
        }
    }
    best.map(|(_, id)| id)
}

/// Resets a node to unclustered state.
fn free_node(n: &mut NodeState) {
    n.role = Role::FreeUav;
    n.parent = None;
    n.child = None;
    n.w_k = 0;
    n.w_b = 0;
    n.accept = false;
    n.branches.clear();
    n.rot = None;
    n.prev_rot = None;
    n.phase = Phase::Chase;
}

/// Attaches `child` under `parent` if the parent is still accepting.
/// Returns false on rejection; the requester simply retries next tick.
pub fn accept_child(
    nodes: &mut [NodeState],
    parent: NodeId,
    child: NodeId,
    cfg: &ProtocolConfig,
    outbox: &mut Vec<Envelope>,
) -> bool {
    let p = &nodes[parent.index()];
    if !p.accept {
        return false;
    }
    match p.role {
        Role::ClusterHead => {
            if p.branches.len() >= cfg.n_branches {
                return false;
            }
            nodes[parent.index()].branches.push(BranchEntry { root: child, len: 1 });
            let full = nodes[parent.index()].branches.len() == cfg.n_branches;
            if full {
                nodes[parent.index()].accept = false;
                let roots: Vec<NodeId> =
                    nodes[parent.index()].branches.iter().map(|b| b.root).collect();
                for r in roots {
                    outbox.push(Envelope { from: parent, to: r, body: MessageBody::BasicAccept });
                }
            }
            let c = &mut nodes[child.index()];
            c.role = Role::DUav;
            c.parent = Some(parent);
            c.w_b = 1;
            c.accept = false;
            true
        }
        Role::DUav => {
            if p.child.is_some() {
                return false;
            }
            let parent_w_b = p.w_b;
            let grandparent = p.parent;
            nodes[parent.index()].child = Some(child);
            nodes[parent.index()].accept = false;
            let c = &mut nodes[child.index()];
            c.role = Role::DUav;
            c.parent = Some(parent);
            c.w_b = parent_w_b + 1;
            c.accept = false;
            if let Some(gp) = grandparent {
                outbox.push(Envelope {
                    from: parent,
                    to: gp,
                    body: MessageBody::Control { corrected_len: None },
                });
            }
            true
        }
        _ => false,
    }
}

/// Growth or correction notice arriving at `to`. Heads update the sending
/// branch's recorded length and, at full branch count, re-open growth on
/// every minimum-length branch; members relay upward.
pub fn on_control_message(
    nodes: &mut [NodeState],
    from: NodeId,
    to: NodeId,
    corrected_len: Option<u32>,
    cfg: &ProtocolConfig,
    outbox: &mut Vec<Envelope>,
) {
    match nodes[to.index()].role {
        Role::ClusterHead => {
            let node = &mut nodes[to.index()];
            let Some(b) = node.branches.iter_mut().find(|b| b.root == from) else {
                return;
            };
            match corrected_len {
                None => b.len += 1,
                Some(l) => b.len = l,
            }
            if node.branches.len() == cfg.n_branches {
                let min = node.branches.iter().map(|b| b.len).min().unwrap();
                let targets: Vec<NodeId> =
                    node.branches.iter().filter(|b| b.len == min).map(|b| b.root).collect();
                for r in targets {
                    outbox.push(Envelope { from: to, to: r, body: MessageBody::BasicAccept });
                }
            }
        }
        Role::DUav => {
            if let Some(p) = nodes[to.index()].parent {
                outbox.push(Envelope {
                    from: to,
                    to: p,
                    body: MessageBody::Control { corrected_len },
                });
            }
        }
        _ => {}
    }
}

/// BM-A or BM-D arriving at `to`.
pub fn on_basic_message(
    nodes: &mut [NodeState],
    to: NodeId,
    body: MessageBody,
    outbox: &mut Vec<Envelope>,
) {
    if nodes[to.index()].role != Role::DUav {
        return;
    }
    match body {
        MessageBody::BasicAccept => match nodes[to.index()].child {
            None => nodes[to.index()].accept = true,
            Some(c) => outbox.push(Envelope { from: to, to: c, body: MessageBody::BasicAccept }),
        },
        MessageBody::BasicDiscard { at_depth: None } => {
            if let Some(c) = nodes[to.index()].child {
                outbox.push(Envelope {
                    from: to,
                    to: c,
                    body: MessageBody::BasicDiscard { at_depth: None },
                });
            }
            free_node(&mut nodes[to.index()]);
        }
        MessageBody::BasicDiscard { at_depth: Some(d) } => {
            let w_b = nodes[to.index()].w_b;
            if w_b + 1 == d {
                if let Some(c) = nodes[to.index()].child {
                    outbox.push(Envelope {
                        from: to,
                        to: c,
                        body: MessageBody::BasicDiscard { at_depth: None },
                    });
                    nodes[to.index()].child = None;
                }
            } else if w_b + 1 < d {
                if let Some(c) = nodes[to.index()].child {
                    outbox.push(Envelope {
                        from: to,
                        to: c,
                        body: MessageBody::BasicDiscard { at_depth: Some(d) },
                    });
                }
            }
        }
        _ => {}
    }
}

/// One balancing pass for a head: any branch more than one longer than the
/// shortest is cut back to `min + 1` by a targeted discard.
pub fn rebalance(ch: &mut NodeState, outbox: &mut Vec<Envelope>) {
    let Some(min) = ch.branches.iter().map(|b| b.len).min() else {
        return;
    };
    for b in &mut ch.branches {
        if b.len > min + 1 {
            outbox.push(Envelope {
                from: ch.id,
                to: b.root,
                body: MessageBody::BasicDiscard { at_depth: Some(min + 2) },
            });
            b.len = min + 1;
        }
    }
}

/// Resolves two heads in mutual range: the larger cluster absorbs, ties go
/// to the lower id. The losing head releases its whole tree at once and
/// steps down to weight `max_k - 1`, putting it on the winner's gradient.
pub fn merge_clusters(nodes: &mut [NodeState], a: NodeId, b: NodeId, max_k: u32) {
    let size = |id: NodeId| nodes[id.index()].recorded_members();
    let loser = match size(a).cmp(&size(b)) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => a.max(b),
    };
    dissolve_cluster(nodes, loser, max_k);
}

fn dissolve_cluster(nodes: &mut [NodeState], head: NodeId, max_k: u32) {
    let roots: Vec<NodeId> = nodes[head.index()].branches.iter().map(|b| b.root).collect();
    for root in roots {
        let mut prev = head;
        let mut cur = Some(root);
        while let Some(c) = cur {
            if nodes[c.index()].parent != Some(prev) {
                break;
            }
            let next = nodes[c.index()].child;
            free_node(&mut nodes[c.index()]);
            prev = c;
            cur = next;
        }
    }
    let h = &mut nodes[head.index()];
    h.branches.clear();
    h.role = Role::FreeUav;
    h.w_k = max_k.saturating_sub(1);
    h.w_b = 0;
    h.accept = false;
    h.rot = None;
    h.prev_rot = None;
    h.phase = Phase::Chase;
}

/// Drops links whose endpoint left communication range. A severed parent
/// frees the node and cascades a discard to its child; a lost child turns
/// the node back into an accepting leaf and sends a length correction up;
/// a head forgets branches whose root went missing.
pub fn link_maintenance(
    nodes: &mut [NodeState],
    neighbors: &[Vec<NodeId>],
    cfg: &ProtocolConfig,
    outbox: &mut Vec<Envelope>,
) {
    for i in 0..nodes.len() {
        let in_range = |id: NodeId| neighbors[i].binary_search(&id).is_ok();
        if let Some(p) = nodes[i].parent {
            if !in_range(p) {
                if let Some(c) = nodes[i].child {
                    outbox.push(Envelope {
                        from: nodes[i].id,
                        to: c,
                        body: MessageBody::BasicDiscard { at_depth: None },
                    });
                }
                free_node(&mut nodes[i]);
            }
        }
        if nodes[i].role == Role::DUav {
            if let Some(c) = nodes[i].child {
                if !in_range(c) {
                    nodes[i].child = None;
                    nodes[i].accept = true;
                    let surviving = nodes[i].w_b;
                    if let Some(p) = nodes[i].parent {
                        outbox.push(Envelope {
                            from: nodes[i].id,
                            to: p,
                            body: MessageBody::Control { corrected_len: Some(surviving) },
                        });
                    }
                }
            }
        }
        if nodes[i].role == Role::ClusterHead {
            nodes[i].branches.retain(|b| in_range(b.root));
            if nodes[i].branches.len() < cfg.n_branches {
                nodes[i].accept = true;
            }
        }
    }
}

/// One synchronous protocol tick.
///
/// `neighbors[i]` holds the sorted ids in range of node `i`; `inbox` holds
/// the messages due this tick. Returns the messages to deliver next tick.
/// Sub-phases run in a fixed order: election, parent search, message
/// handling, rebalancing, merging, link maintenance.
pub fn step(
    nodes: &mut [NodeState],
    neighbors: &[Vec<NodeId>],
    mut inbox: Vec<Envelope>,
    cfg: &ProtocolConfig,
) -> Vec<Envelope> {
    let mut outbox = Vec::new();

    // Election over a synchronous weight snapshot.
    let weights: Vec<u32> = nodes.iter().map(|n| n.w_k).collect();
    let mut new_weights = Vec::with_capacity(nodes.len());
    for (i, node) in nodes.iter().enumerate() {
        if node.role == Role::Malicious {
            new_weights.push(node.w_k);
            continue;
        }
        let nb: Vec<(NodeId, u32)> =
            neighbors[i].iter().map(|&id| (id, weights[id.index()])).collect();
        new_weights.push(khopca_step(node, &nb, cfg.max_k));
    }
    for (node, w) in nodes.iter_mut().zip(new_weights) {
        if node.role == Role::Malicious {
            continue;
        }
        let was_head = node.role == Role::ClusterHead;
        node.w_k = w;
        if node.w_k == cfg.max_k && node.parent.is_none() {
            if !was_head {
                node.role = Role::ClusterHead;
                node.accept = true;
                node.w_b = 0;
                node.child = None;
            }
        } else if was_head {
            node.role = Role::FreeUav;
            node.accept = false;
            node.branches.clear();
            node.rot = None;
            node.prev_rot = None;
        }
    }

    // Unclustered nodes look for a parent; requests resolve in id order
    // against live accept flags, so one parent grants at most its capacity.
    for i in 0..nodes.len() {
        if nodes[i].role != Role::FreeUav {
            continue;
        }
        let candidates: Vec<(NodeId, Vec3, bool)> = neighbors[i]
            .iter()
            .map(|&id| {
                let c = &nodes[id.index()];
                (id, c.pos, c.accept && c.role != Role::Malicious)
            })
            .collect();
        if let Some(pick) = select_parent(nodes[i].pos, &candidates) {
            let child = nodes[i].id;
            accept_child(nodes, pick, child, cfg, &mut outbox);
        }
    }

    // Queued traffic, in deterministic delivery order.
    sort_for_delivery(&mut inbox);
    for env in inbox {
        match env.body {
            MessageBody::BasicAccept | MessageBody::BasicDiscard { .. } => {
                on_basic_message(nodes, env.to, env.body, &mut outbox);
            }
            MessageBody::Control { corrected_len } => {
                on_control_message(nodes, env.from, env.to, corrected_len, cfg, &mut outbox);
            }
            MessageBody::Rotation(order) => {
                let n = &mut nodes[env.to.index()];
                if n.role == Role::DUav {
                    n.prev_rot = n.rot;
                    n.rot = Some(order);
                    if let Some(c) = n.child {
                        outbox.push(Envelope {
                            from: env.to,
                            to: c,
                            body: MessageBody::Rotation(order),
                        });
                    }
                }
            }
        }
    }

    // Every head trims over-long branches every tick.
    for i in 0..nodes.len() {
        if nodes[i].role == Role::ClusterHead {
            rebalance(&mut nodes[i], &mut outbox);
        }
    }

    // Heads in mutual range merge, largest recorded cluster first.
    let heads: Vec<NodeId> =
        nodes.iter().filter(|n| n.role == Role::ClusterHead).map(|n| n.id).collect();
    for (ai, &a) in heads.iter().enumerate() {
        for &b in &heads[ai + 1..] {
            if nodes[a.index()].role != Role::ClusterHead
                || nodes[b.index()].role != Role::ClusterHead
            {
                continue;
            }
            if neighbors[a.index()].binary_search(&b).is_ok() {
                merge_clusters(nodes, a, b, cfg.max_k);
            }
        }
    }

    link_maintenance(nodes, neighbors, cfg, &mut outbox);

    outbox
}

/// Structural soundness check used by tests and diagnostics. With
/// `quiescent` set (no accept/discard/control traffic in flight), recorded
/// branch lengths must equal walked chain lengths and obey the balance
/// bound `max - min <= 1` per head.
pub fn check_invariants(
    nodes: &[NodeState],
    cfg: &ProtocolConfig,
    quiescent: bool,
) -> Result<(), String> {
    for n in nodes {
        match n.role {
            Role::FreeUav => {
                if n.parent.is_some() || n.child.is_some() || n.w_b != 0 || !n.branches.is_empty()
                {
                    return Err(format!("free node {} carries cluster state", n.id));
                }
                if n.accept {
                    return Err(format!("free node {} accepting", n.id));
                }
            }
            Role::DUav => {
                let Some(p) = n.parent else {
                    return Err(format!("member {} has no parent", n.id));
                };
                if n.w_b == 0 {
                    return Err(format!("member {} at depth 0", n.id));
                }
                let pn = &nodes[p.index()];
                match pn.role {
                    Role::ClusterHead => {
                        if n.w_b != 1 {
                            return Err(format!("root {} at depth {}", n.id, n.w_b));
                        }
                        if !pn.branches.iter().any(|b| b.root == n.id) {
                            return Err(format!("root {} unknown to head {}", n.id, p));
                        }
                    }
                    Role::DUav => {
                        if pn.child != Some(n.id) {
                            return Err(format!("parent {} does not link back to {}", p, n.id));
                        }
                        if n.w_b != pn.w_b + 1 {
                            return Err(format!("depth gap between {} and {}", p, n.id));
                        }
                    }
                    _ => return Err(format!("member {} parented to non-cluster node {}", n.id, p)),
                }
                if n.accept && n.child.is_some() {
                    return Err(format!("non-leaf {} accepting", n.id));
                }
                if let Some(c) = n.child {
                    if nodes[c.index()].parent != Some(n.id) {
                        return Err(format!("child {} does not link back to {}", c, n.id));
                    }
                }
            }
            Role::ClusterHead => {
                if n.parent.is_some() || n.w_b != 0 {
                    return Err(format!("head {} carries member state", n.id));
                }
                if n.w_k != cfg.max_k {
                    return Err(format!("head {} at weight {}", n.id, n.w_k));
                }
                if n.branches.len() > cfg.n_branches {
                    return Err(format!("head {} holds too many branches", n.id));
                }
                if n.accept != (n.branches.len() < cfg.n_branches) {
                    return Err(format!("head {} accept flag out of sync", n.id));
                }
                if quiescent {
                    let lens: Vec<u32> = n
                        .branches
                        .iter()
                        .map(|b| walk_branch_len(nodes, n.id, b.root))
                        .collect();
                    for (b, &actual) in n.branches.iter().zip(&lens) {
                        if b.len != actual {
                            return Err(format!(
                                "head {} records branch {} at {} but chain is {}",
                                n.id, b.root, b.len, actual
                            ));
                        }
                    }
                    if let (Some(&max), Some(&min)) = (lens.iter().max(), lens.iter().min()) {
                        if max - min > 1 {
                            return Err(format!(
                                "head {} unbalanced: branch lengths {:?}",
                                n.id, lens
                            ));
                        }
                    }
                }
            }
            Role::Malicious => {}
        }
        if n.role != Role::ClusterHead && n.w_k == cfg.max_k {
            return Err(format!("node {} holds head weight without the role", n.id));
        }
    }
    Ok(())
}

/// Actual chain length from a head's branch root, following child links.
pub fn walk_branch_len(nodes: &[NodeState], head: NodeId, root: NodeId) -> u32 {
    let mut len = 0;
    let mut prev = head;
    let mut cur = Some(root);
    while let Some(c) = cur {
        if nodes[c.index()].parent != Some(prev) || len > nodes.len() as u32 {
            break;
        }
        len += 1;
        prev = c;
        cur = nodes[c.index()].child;
    }
    len
}
