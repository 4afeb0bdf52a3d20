//! Enumeration of undirected graphs on `k` nodes up to isomorphism.
//!
//! Classes are generated by vertex augmentation: every `k`-node graph is some
//! `(k-1)`-node class plus one vertex with an arbitrary neighbourhood, so
//! augmenting the `(k-1)` classes with all `2^(k-1)` neighbourhoods and
//! deduplicating by canonical form is exhaustive. The canonical form is the
//! lexicographically least adjacency bit string under vertex permutations,
//! with bits grouped by insertion position so a branch-and-bound search can
//! prune on block prefixes.

use std::sync::{Arc, Mutex, OnceLock};

use rustc_hash::FxHashSet;

use super::ExploreError;

/// Largest node count for which static/lossy topologies are enumerated.
pub const MAX_TOPOLOGY_NODES: usize = 8;

/// One isomorphism class of `k`-node topologies, stored as its canonical
/// representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopologyClass {
    pub k: usize,
    /// Edges of the canonical representative, `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    pub connected: bool,
    /// Neighbour bit masks of the representative.
    pub(crate) adj: [u8; MAX_TOPOLOGY_NODES],
}

/// All topology classes on `k` nodes, cached per `k`. The slice is sorted by
/// canonical form, so iteration order is deterministic.
pub fn topology_classes(k: usize) -> Result<Arc<Vec<TopologyClass>>, ExploreError> {
    if k == 0 {
        return Err(ExploreError::ZeroNodes);
    }
    if k > MAX_TOPOLOGY_NODES {
        return Err(ExploreError::TopologyTooLarge {
            k,
            max: MAX_TOPOLOGY_NODES,
        });
    }
    type Cache = Mutex<Vec<Option<Arc<Vec<TopologyClass>>>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![None; MAX_TOPOLOGY_NODES + 1]));
    let mut slot = cache.lock().expect("topology cache lock");
    for size in 1..=k {
        if slot[size].is_none() {
            let prev = if size == 1 {
                None
            } else {
                slot[size - 1].clone()
            };
            slot[size] = Some(Arc::new(build(size, prev.as_deref())));
        }
    }
    Ok(slot[k].clone().expect("just built"))
}

fn build(k: usize, prev: Option<&Vec<TopologyClass>>) -> Vec<TopologyClass> {
    let mut seen: FxHashSet<u32> = FxHashSet::default();
    let mut canon_masks: Vec<u32> = Vec::new();
    match prev {
        None => {
            canon_masks.push(0);
        }
        Some(smaller) => {
            let new = k - 1;
            for class in smaller {
                for nb in 0u8..(1 << new) {
                    let mut adj = class.adj;
                    adj[new] = nb;
                    for (v, mask) in adj.iter_mut().enumerate().take(new) {
                        if nb & (1 << v) != 0 {
                            *mask |= 1 << new;
                        }
                    }
                    let canon = canonical_mask(k, &adj);
                    if seen.insert(canon) {
                        canon_masks.push(canon);
                    }
                }
            }
        }
    }
    canon_masks.sort_unstable();
    canon_masks
        .into_iter()
        .map(|mask| class_from_mask(k, mask))
        .collect()
}

/// Bit position of edge `(s, t)` with `s < t` in the packed form: bits are
/// grouped by the larger endpoint, most significant first.
fn bit_shift(k: usize, s: usize, t: usize) -> u32 {
    let total = (k * (k - 1) / 2) as u32;
    let before = (t * (t - 1) / 2 + s) as u32;
    total - 1 - before
}

fn class_from_mask(k: usize, mask: u32) -> TopologyClass {
    let mut adj = [0u8; MAX_TOPOLOGY_NODES];
    let mut edges = Vec::new();
    for t in 1..k {
        for s in 0..t {
            if mask & (1u32 << bit_shift(k, s, t)) != 0 {
                adj[s] |= 1 << t;
                adj[t] |= 1 << s;
                edges.push((s, t));
            }
        }
    }
    let connected = is_connected(k, &adj);
    TopologyClass {
        k,
        edges,
        connected,
        adj,
    }
}

fn is_connected(k: usize, adj: &[u8; MAX_TOPOLOGY_NODES]) -> bool {
    let mut seen: u8 = 1;
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let mut fresh = adj[v] & !seen;
        seen |= adj[v];
        while fresh != 0 {
            let w = fresh.trailing_zeros() as usize;
            fresh &= fresh - 1;
            stack.push(w);
        }
    }
    seen.count_ones() as usize == k
}

/// Lexicographically least packed adjacency string over all vertex orders.
/// Only permutations achieving the minimal next block can extend to the
/// minimum, so ties are the only branching.
fn canonical_mask(k: usize, adj: &[u8; MAX_TOPOLOGY_NODES]) -> u32 {
    let mut perm = Vec::with_capacity(k);
    canon_rec(k, adj, &mut perm, 0)
}

fn canon_rec(k: usize, adj: &[u8; MAX_TOPOLOGY_NODES], perm: &mut Vec<usize>, used: u8) -> u32 {
    let depth = perm.len();
    if depth == k {
        return 0;
    }
    let mut best_block = u32::MAX;
    let mut ties = [0usize; MAX_TOPOLOGY_NODES];
    let mut n_ties = 0;
    for v in 0..k {
        if used & (1 << v) != 0 {
            continue;
        }
        let mut block = 0u32;
        for &p in perm.iter() {
            block = (block << 1) | u32::from(adj[p] >> v & 1);
        }
        if block < best_block {
            best_block = block;
            ties[0] = v;
            n_ties = 1;
        } else if block == best_block {
            ties[n_ties] = v;
            n_ties += 1;
        }
    }
    // bits contributed by positions depth+1 .. k-1
    let remaining: u32 = ((depth + 1)..k).map(|t| t as u32).sum();
    let mut best = u32::MAX;
    for &v in &ties[..n_ties] {
        perm.push(v);
        let sub = canon_rec(k, adj, perm, used | (1 << v));
        perm.pop();
        let value = (best_block << remaining) | sub;
        best = best.min(value);
    }
    best
}
