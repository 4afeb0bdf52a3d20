//! Labelled BFS over one fixed topology, for static and lossy semantics.
//!
//! States are the label vectors, packed into a `u64` (at most 8 nodes, at most
//! 255 protocol states). Nodes with identical neighbourhoods are
//! interchangeable, so labels are sorted within twin classes before hashing;
//! every such swap is a graph automorphism, which keeps the search exact while
//! collapsing symmetric configurations.

use rustc_hash::FxHashSet;

use super::topology::{TopologyClass, MAX_TOPOLOGY_NODES};
use super::{CompiledProtocol, ExploreError, Meter};
use crate::semantics::SemanticsKind;

pub(crate) struct FixedTopologySearch<'a> {
    cp: &'a CompiledProtocol,
    k: usize,
    adj: [u8; MAX_TOPOLOGY_NODES],
    lossy: bool,
    /// Maximal runs of interchangeable nodes: (start, end) half-open.
    twin_runs: Vec<(usize, usize)>,
}

type Labels = [u8; MAX_TOPOLOGY_NODES];

fn pack(labels: &Labels) -> u64 {
    u64::from_le_bytes(*labels)
}

impl<'a> FixedTopologySearch<'a> {
    pub(crate) fn new(cp: &'a CompiledProtocol, tc: &TopologyClass, sem: SemanticsKind) -> Self {
        debug_assert!(matches!(sem, SemanticsKind::Static | SemanticsKind::Lossy));
        let k = tc.k;
        let adj = tc.adj;
        // consecutive nodes are twins when swapping them is an automorphism:
        // equal neighbourhoods apart from one another. A chain of twins never
        // mixes the adjacent and non-adjacent flavours, so a run of
        // consecutive twins is pairwise twin and any permutation of it is an
        // automorphism.
        let twins = |u: usize, v: usize| -> bool { (adj[u] & !(1 << v)) == (adj[v] & !(1 << u)) };
        let mut twin_runs = Vec::new();
        let mut start = 0;
        for v in 1..=k {
            if v == k || !twins(v - 1, v) {
                if v - start > 1 {
                    twin_runs.push((start, v));
                }
                start = v;
            }
        }
        FixedTopologySearch {
            cp,
            k,
            adj,
            lossy: sem == SemanticsKind::Lossy,
            twin_runs,
        }
    }

    fn canonize(&self, labels: &mut Labels) {
        for &(s, e) in &self.twin_runs {
            labels[s..e].sort_unstable();
        }
    }

    fn initial_labelings(&self) -> Vec<Labels> {
        let mut out = Vec::new();
        let mut cur: Labels = [0; MAX_TOPOLOGY_NODES];
        self.initial_rec(0, &mut cur, &mut out);
        out
    }

    fn initial_rec(&self, pos: usize, cur: &mut Labels, out: &mut Vec<Labels>) {
        if pos == self.k {
            let mut c = *cur;
            self.canonize(&mut c);
            out.push(c);
            return;
        }
        for &q in &self.cp.init {
            cur[pos] = q as u8;
            self.initial_rec(pos + 1, cur, out);
        }
    }

    fn for_each_successor(&self, labels: &Labels, f: &mut impl FnMut(Labels)) {
        for node in 0..self.k {
            let state = labels[node] as usize;
            for &b in &self.cp.bcasts_by_state[state] {
                let (_, msg, tgt) = self.cp.broadcasts[b];
                if self.lossy {
                    // the lost variant: only the sender moves
                    let mut succ = *labels;
                    succ[node] = tgt as u8;
                    f(succ);
                }
                // the real variant: every neighbour takes some reception
                let mut base = *labels;
                base[node] = tgt as u8;
                self.receivers_rec(labels, self.adj[node], msg as usize, &mut base, f);
            }
        }
    }

    fn receivers_rec(
        &self,
        pre: &Labels,
        rest: u8,
        msg: usize,
        acc: &mut Labels,
        f: &mut impl FnMut(Labels),
    ) {
        if rest == 0 {
            f(*acc);
            return;
        }
        let r = rest.trailing_zeros() as usize;
        let rest = rest & (rest - 1);
        for &t in &self.cp.recv_targets[pre[r] as usize][msg] {
            acc[r] = t as u8;
            self.receivers_rec(pre, rest, msg, acc, f);
        }
        acc[r] = pre[r];
    }

    /// BFS layer of the first covering configuration, or `None` once the
    /// reachable set is exhausted.
    pub(crate) fn cover_layer(
        &self,
        targets: &[bool],
        meter: &Meter,
    ) -> Result<Option<usize>, ExploreError> {
        let covers = |l: &Labels| l[..self.k].iter().any(|&q| targets[q as usize]);
        let mut visited: FxHashSet<u64> = FxHashSet::default();
        let mut frontier: Vec<Labels> = Vec::new();
        for l in self.initial_labelings() {
            if visited.insert(pack(&l)) {
                meter.charge(1)?;
                if covers(&l) {
                    return Ok(Some(0));
                }
                frontier.push(l);
            }
        }
        let mut layer = 0;
        while !frontier.is_empty() {
            layer += 1;
            let mut next = Vec::new();
            for l in &frontier {
                let mut found = false;
                let mut error = None;
                self.for_each_successor(l, &mut |mut succ| {
                    if found || error.is_some() {
                        return;
                    }
                    self.canonize(&mut succ);
                    if !visited.insert(pack(&succ)) {
                        return;
                    }
                    if let Err(e) = meter.charge(1) {
                        error = Some(e);
                        return;
                    }
                    if covers(&succ) {
                        found = true;
                        return;
                    }
                    next.push(succ);
                });
                if let Some(e) = error {
                    return Err(e);
                }
                if found {
                    return Ok(Some(layer));
                }
            }
            frontier = next;
        }
        Ok(None)
    }

    /// Union of states over every reachable configuration.
    pub(crate) fn covered_union(&self, meter: &Meter) -> Result<Vec<bool>, ExploreError> {
        let mut covered = vec![false; self.cp.n_states];
        let mut visited: FxHashSet<u64> = FxHashSet::default();
        let mut stack: Vec<Labels> = Vec::new();
        for l in self.initial_labelings() {
            if visited.insert(pack(&l)) {
                meter.charge(1)?;
                mark(&mut covered, &l, self.k);
                stack.push(l);
            }
        }
        while let Some(l) = stack.pop() {
            let mut error = None;
            self.for_each_successor(&l, &mut |mut succ| {
                if error.is_some() {
                    return;
                }
                self.canonize(&mut succ);
                if !visited.insert(pack(&succ)) {
                    return;
                }
                if let Err(e) = meter.charge(1) {
                    error = Some(e);
                    return;
                }
                mark(&mut covered, &succ, self.k);
                stack.push(succ);
            });
            if let Some(e) = error {
                return Err(e);
            }
        }
        Ok(covered)
    }
}

fn mark(covered: &mut [bool], labels: &Labels, k: usize) {
    for &q in &labels[..k] {
        covered[q as usize] = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{topology_classes, Budget};
    use crate::instances::gen_examples;
    use crate::protocol::StateId;

    #[test]
    fn star_topology_twin_runs_collapse_the_leaves() {
        // the 4-node star's canonical representative has its centre somewhere;
        // the three leaves form one twin run
        let classes = topology_classes(4).unwrap();
        let star = classes
            .iter()
            .find(|c| {
                c.connected && c.edges.len() == 3 && c.adj.iter().any(|&m| m.count_ones() == 3)
            })
            .expect("the star exists");
        let (_, p, _) = &gen_examples()[0];
        let cp = CompiledProtocol::new(p).unwrap();
        let search = FixedTopologySearch::new(&cp, star, SemanticsKind::Static);
        assert_eq!(search.twin_runs.len(), 1);
        let (s, e) = search.twin_runs[0];
        assert_eq!(e - s, 3);
    }

    #[test]
    fn static_union_on_a_single_node() {
        let (_, p, _) = &gen_examples()[0];
        let cp = CompiledProtocol::new(p).unwrap();
        let classes = topology_classes(1).unwrap();
        let meter = Meter::new(&Budget::default());
        let search = FixedTopologySearch::new(&cp, &classes[0], SemanticsKind::Static);
        let covered = search.covered_union(&meter).unwrap();
        let names: Vec<&StateId> = p
            .states
            .iter()
            .enumerate()
            .filter(|(i, _)| covered[*i])
            .map(|(_, q)| q)
            .collect();
        assert_eq!(names, [&StateId::from("q0")], "a lone node only self-loops");
    }
}
