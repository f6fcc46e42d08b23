//! Seeded greedy growth plus Fiduccia–Mattheyses refinement under an upper
//! balance bound.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PartitionError;
use crate::topology::Hypergraph;

/// Largest admissible part size `⌊(1 + eps_max)·total/k⌋`.
pub fn balance_bound(total: u64, k: usize, eps_max: f64) -> u64 {
    let bound = (1.0 + eps_max) * total as f64 / k as f64;
    (bound * (1.0 + 1e-12)).floor() as u64
}

fn check_args(h: &Hypergraph, k: usize, eps_max: f64) -> Result<u64, PartitionError> {
    if k == 0 {
        return Err(PartitionError::Invalid("part count must be at least 1".into()));
    }
    if !(eps_max >= 0.0) || !eps_max.is_finite() {
        return Err(PartitionError::Invalid(format!("imbalance tolerance must be a nonnegative number, got {eps_max}")));
    }
    let total = h.total_vertex_weight();
    if (total as usize) < k || h.vertex_count < k {
        return Err(PartitionError::Balance(format!("{} vertices of total size {total} cannot fill {k} parts", h.vertex_count)));
    }
    let cap = balance_bound(total, k, eps_max);
    if let Some(v) = (0..h.vertex_count).find(|&v| h.vertex_weights[v] > cap) {
        return Err(PartitionError::Balance(format!(
            "vertex {v} has size {} above the part bound {cap}",
            h.vertex_weights[v]
        )));
    }
    Ok(cap)
}

fn clique_adjacency(h: &Hypergraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); h.vertex_count];
    for pins in &h.hyperedges {
        for &u in pins {
            adj[u].extend(pins.iter().copied().filter(|&v| v != u));
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Hop distances from `s` (`usize::MAX` when unreachable).
fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::from([s]);
    dist[s] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Farthest reachable vertex from `s`, lowest index on ties.
fn farthest(dist: &[usize]) -> usize {
    let mut best = 0;
    for v in 0..dist.len() {
        if dist[v] != usize::MAX && (dist[best] == usize::MAX || dist[v] > dist[best]) {
            best = v;
        }
    }
    best
}

/// Sweep order over all vertices: breadth-first from a peripheral vertex
/// (the farthest point from a random start), continuing component by
/// component.
fn sweep_order(adj: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = adj.len();
    let start = farthest(&bfs(adj, rng.gen_range(0..n)));
    let mut rank = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for root in std::iter::once(start).chain(0..n) {
        if rank[root] != usize::MAX {
            continue;
        }
        let root = if root == start { root } else { farthest(&bfs(adj, root)) };
        rank[root] = order.len();
        order.push(root);
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if rank[v] == usize::MAX {
                    rank[v] = order.len();
                    order.push(v);
                    queue.push_back(v);
                }
            }
        }
    }
    rank
}

/// Initial labels by sequential greedy growth: each part starts next to the
/// region already assigned (following a breadth-first sweep from a
/// peripheral vertex) and absorbs the frontier vertex most strongly
/// connected to it until it reaches its share of the remaining size.
///
/// When growth strands a vertex, falls back to largest-first packing into
/// the least loaded part.
pub fn initial_partition(h: &Hypergraph, k: usize, eps_max: f64, seed: u64) -> Result<Vec<usize>, PartitionError> {
    let cap = check_args(h, k, eps_max)?;
    if k == 1 {
        return Ok(vec![0; h.vertex_count]);
    }
    grow(h, k, cap, seed).or_else(|_| pack(h, k, cap))
}

fn pack(h: &Hypergraph, k: usize, cap: u64) -> Result<Vec<usize>, PartitionError> {
    let mut order: Vec<usize> = (0..h.vertex_count).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(h.vertex_weights[v]), v));
    let mut labels = vec![0; h.vertex_count];
    let mut size = vec![0u64; k];
    for v in order {
        let p = (0..k).min_by_key(|&p| (size[p], p)).expect("k ≥ 1");
        if size[p] + h.vertex_weights[v] > cap {
            return Err(PartitionError::Balance(format!("no part can take vertex {v} under the bound {cap}")));
        }
        labels[v] = p;
        size[p] += h.vertex_weights[v];
    }
    if let Some(p) = (0..k).find(|&p| size[p] == 0) {
        return Err(PartitionError::Balance(format!("part {p} stayed empty")));
    }
    Ok(labels)
}

fn grow(h: &Hypergraph, k: usize, cap: u64, seed: u64) -> Result<Vec<usize>, PartitionError> {
    let n = h.vertex_count;
    let vertex_edges = h.vertex_edges();
    let adj = clique_adjacency(h);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = sweep_order(&adj, &mut rng);

    const NONE: usize = usize::MAX;
    let mut labels = vec![NONE; n];
    let mut size = vec![0u64; k];
    let mut remaining = h.total_vertex_weight();
    let mut left = n;
    // connection weight of each unassigned vertex to the part being grown,
    // and to all assigned vertices
    let mut to_part = vec![0u64; n];
    let mut to_assigned = vec![0u64; n];
    for p in 0..k {
        let target = remaining as f64 / (k - p) as f64;
        let mut candidates: BTreeSet<(std::cmp::Reverse<u64>, usize, usize)> = BTreeSet::new();
        to_part.iter_mut().for_each(|c| *c = 0);
        let pick_seed = |labels: &[usize], to_assigned: &[u64]| {
            (0..n)
                .filter(|&v| labels[v] == NONE)
                .min_by_key(|&v| (std::cmp::Reverse(to_assigned[v]), rank[v]))
        };
        let Some(first) = pick_seed(&labels, &to_assigned) else { break };
        candidates.insert((std::cmp::Reverse(0), rank[first], first));
        while (size[p] as f64) < target || p == k - 1 {
            let Some(entry) = candidates.pop_first() else {
                match pick_seed(&labels, &to_assigned) {
                    Some(v) if p == k - 1 || size[p] + h.vertex_weights[v] <= cap => {
                        candidates.insert((std::cmp::Reverse(0), rank[v], v));
                        continue;
                    }
                    _ => break,
                }
            };
            let v = entry.2;
            if labels[v] != NONE {
                continue;
            }
            // leave one vertex for every part still to grow
            if p < k - 1 && size[p] > 0 && left <= k - 1 - p {
                break;
            }
            if p < k - 1 && size[p] + h.vertex_weights[v] > cap {
                continue;
            }
            labels[v] = p;
            size[p] += h.vertex_weights[v];
            remaining -= h.vertex_weights[v];
            left -= 1;
            for &e in &vertex_edges[v] {
                let w = h.edge_weights[e];
                for &u in &h.hyperedges[e] {
                    if labels[u] == NONE {
                        candidates.remove(&(std::cmp::Reverse(to_part[u]), rank[u], u));
                        to_part[u] += w;
                        to_assigned[u] += w;
                        candidates.insert((std::cmp::Reverse(to_part[u]), rank[u], u));
                    }
                }
            }
        }
    }
    // Whatever does not fit goes to the smallest part with room.
    for v in 0..n {
        if labels[v] == k - 1 && size[k - 1] > cap || labels[v] == NONE {
            if labels[v] == k - 1 {
                size[k - 1] -= h.vertex_weights[v];
            }
            let p = (0..k)
                .filter(|&p| size[p] + h.vertex_weights[v] <= cap)
                .min_by_key(|&p| (size[p], p))
                .ok_or_else(|| PartitionError::Balance(format!("no part can take vertex {v} under the bound {cap}")))?;
            labels[v] = p;
            size[p] += h.vertex_weights[v];
        }
    }
    if let Some(p) = (0..k).find(|&p| size[p] == 0) {
        return Err(PartitionError::Balance(format!("part {p} stayed empty")));
    }
    Ok(labels)
}

/// Cut reduction of moving `v` from its part to `p`.
fn move_gain(h: &Hypergraph, vertex_edges: &[Vec<usize>], pins_in: &[Vec<usize>], v: usize, from: usize, p: usize) -> i64 {
    let mut gain = 0i64;
    for &e in &vertex_edges[v] {
        let len = h.hyperedges[e].len();
        let w = h.edge_weights[e] as i64;
        if pins_in[e][p] == len - 1 {
            gain += w;
        }
        if pins_in[e][from] == len {
            gain -= w;
        }
    }
    gain
}

/// Fiduccia–Mattheyses refinement of the edge cut. Each pass moves unlocked
/// boundary vertices one at a time (best gain first, lowest vertex and part
/// on ties, negative gains allowed), locks them, and rolls back to the best
/// prefix. Moves never exceed the balance bound or empty a part. Passes
/// repeat until one brings no improvement, so the result admits no single
/// improving move.
pub fn fm_refine(h: &Hypergraph, labels: &mut [usize], k: usize, eps_max: f64) -> Result<(), PartitionError> {
    const STALL: usize = 64;
    let cap = check_args(h, k, eps_max)?;
    let n = h.vertex_count;
    if labels.len() != n || labels.iter().any(|&l| l >= k) {
        return Err(PartitionError::Invalid("labels do not match the hypergraph".into()));
    }
    let vertex_edges = h.vertex_edges();
    let mut size = vec![0u64; k];
    let mut members = vec![0usize; k];
    for v in 0..n {
        size[labels[v]] += h.vertex_weights[v];
        members[labels[v]] += 1;
    }
    let mut pins_in: Vec<Vec<usize>> = h
        .hyperedges
        .iter()
        .map(|pins| {
            let mut c = vec![0usize; k];
            for &v in pins {
                c[labels[v]] += 1;
            }
            c
        })
        .collect();
    let best_move = |v: usize, labels: &[usize], size: &[u64], members: &[usize], pins_in: &[Vec<usize>]| {
        let from = labels[v];
        if members[from] == 1 {
            return None;
        }
        let mut best: Option<(i64, usize)> = None;
        for &e in &vertex_edges[v] {
            for p in 0..k {
                if p == from || pins_in[e][p] == 0 || size[p] + h.vertex_weights[v] > cap {
                    continue;
                }
                if best.is_some_and(|(_, q)| q == p) {
                    continue;
                }
                let g = move_gain(h, &vertex_edges, pins_in, v, from, p);
                if best.map_or(true, |(bg, bp)| g > bg || (g == bg && p < bp)) {
                    best = Some((g, p));
                }
            }
        }
        best
    };
    loop {
        let mut locked = vec![false; n];
        let mut history: Vec<(usize, usize)> = Vec::new();
        let (mut gain_sum, mut best_sum, mut best_len) = (0i64, 0i64, 0usize);
        loop {
            let mut choice: Option<(i64, usize, usize)> = None;
            for v in 0..n {
                if locked[v] {
                    continue;
                }
                if let Some((g, p)) = best_move(v, labels, &size, &members, &pins_in) {
                    if choice.map_or(true, |(cg, _, _)| g > cg) {
                        choice = Some((g, v, p));
                    }
                }
            }
            let Some((g, v, p)) = choice else { break };
            let from = labels[v];
            for &e in &vertex_edges[v] {
                pins_in[e][from] -= 1;
                pins_in[e][p] += 1;
            }
            size[from] -= h.vertex_weights[v];
            size[p] += h.vertex_weights[v];
            members[from] -= 1;
            members[p] += 1;
            labels[v] = p;
            locked[v] = true;
            history.push((v, from));
            gain_sum += g;
            if gain_sum > best_sum {
                best_sum = gain_sum;
                best_len = history.len();
            }
            if history.len() - best_len >= STALL {
                break;
            }
        }
        while history.len() > best_len {
            let (v, from) = history.pop().expect("nonempty");
            let p = labels[v];
            for &e in &vertex_edges[v] {
                pins_in[e][p] -= 1;
                pins_in[e][from] += 1;
            }
            size[p] -= h.vertex_weights[v];
            size[from] += h.vertex_weights[v];
            members[p] -= 1;
            members[from] += 1;
            labels[v] = from;
        }
        if best_sum <= 0 {
            return Ok(());
        }
    }
}

/// Labels in `0..k` minimizing the edge cut subject to every part size being
/// at most `(1 + eps_max)` times the average. Deterministic for a fixed seed.
pub fn partition_heuristic(h: &Hypergraph, k: usize, eps_max: f64, seed: u64) -> Result<Vec<usize>, PartitionError> {
    let mut labels = initial_partition(h, k, eps_max, seed)?;
    fm_refine(h, &mut labels, k, eps_max)?;
    Ok(labels)
}
