//! BFS over state multisets: the counting abstraction of reconfigurable
//! networks. A step picks a sender with a broadcast transition, a sub-multiset
//! of the remaining nodes as receivers, and a matching reception per receiver;
//! equivalently every non-sender independently stays put or takes one of its
//! receptions of the message.

use rustc_hash::FxHashSet;

use super::{Budget, CompiledProtocol, ExploreError, Meter};

pub(crate) struct MultisetOutcome {
    /// BFS layer of the first covering multiset, when targets were given.
    pub cover_layer: Option<usize>,
    /// States appearing in some visited multiset.
    pub support: Vec<bool>,
    /// Every visited multiset, when collection was requested.
    pub multisets: Option<Vec<Box<[u16]>>>,
}

/// Refuses up front when the counts would not fit or the multiset space
/// alone dwarfs the state budget.
pub(crate) fn guard_space(
    cp: &CompiledProtocol,
    k: usize,
    budget: &Budget,
) -> Result<(), ExploreError> {
    if k > u16::MAX as usize {
        return Err(ExploreError::NodeCountTooLarge {
            k,
            max: u16::MAX as usize,
        });
    }
    // C(n_states + k - 1, k), capped
    let cap = budget.max_states as u128;
    let mut space: u128 = 1;
    for i in 0..cp.n_states.saturating_sub(1) {
        space = space.saturating_mul(k as u128 + i as u128 + 1) / (i as u128 + 1);
        if space > cap {
            return Err(ExploreError::BudgetExceeded { states_visited: 0 });
        }
    }
    Ok(())
}

/// Runs the abstraction to its fixpoint (or to the first covering multiset
/// when `targets` is given: the BFS layer index is the covering length).
pub(crate) fn run(
    cp: &CompiledProtocol,
    k: usize,
    targets: Option<&[bool]>,
    collect: bool,
    meter: &Meter,
) -> Result<MultisetOutcome, ExploreError> {
    let n = cp.n_states;
    let mut visited: FxHashSet<Box<[u16]>> = FxHashSet::default();
    let mut frontier: Vec<Box<[u16]>> = Vec::new();
    let mut support = vec![false; n];
    let covers = |ms: &[u16]| -> bool {
        match targets {
            Some(t) => ms.iter().enumerate().any(|(i, &c)| c > 0 && t[i]),
            None => false,
        }
    };

    let mut covered_at = None;
    for ms in initial_multisets(cp, k) {
        if visited.insert(ms.clone()) {
            meter.charge(1)?;
            mark(&mut support, &ms);
            if covered_at.is_none() && covers(&ms) {
                covered_at = Some(0);
            }
            frontier.push(ms);
        }
    }

    let mut layer = 0usize;
    while covered_at.is_none() && !frontier.is_empty() {
        layer += 1;
        let mut next = Vec::new();
        for ms in &frontier {
            let mut error = None;
            for_each_successor(cp, ms, &mut |succ: &[u16]| {
                if error.is_some() || visited.contains(succ) {
                    return;
                }
                let succ: Box<[u16]> = succ.into();
                visited.insert(succ.clone());
                if let Err(e) = meter.charge(1) {
                    error = Some(e);
                    return;
                }
                mark(&mut support, &succ);
                if covered_at.is_none() && covers(&succ) {
                    covered_at = Some(layer);
                }
                next.push(succ);
            });
            if let Some(e) = error {
                return Err(e);
            }
            if covered_at.is_some() {
                break;
            }
        }
        frontier = next;
    }

    Ok(MultisetOutcome {
        cover_layer: covered_at,
        support,
        multisets: collect.then(|| visited.into_iter().collect()),
    })
}

fn mark(support: &mut [bool], ms: &[u16]) {
    for (i, &c) in ms.iter().enumerate() {
        if c > 0 {
            support[i] = true;
        }
    }
}

/// All multisets of size `k` supported on the initial states.
fn initial_multisets(cp: &CompiledProtocol, k: usize) -> Vec<Box<[u16]>> {
    let mut out = Vec::new();
    let mut counts = vec![0u16; cp.n_states];
    fn rec(init: &[u16], pos: usize, left: usize, counts: &mut [u16], out: &mut Vec<Box<[u16]>>) {
        if pos + 1 == init.len() {
            counts[init[pos] as usize] = left as u16;
            out.push(counts.to_vec().into_boxed_slice());
            counts[init[pos] as usize] = 0;
            return;
        }
        for take in 0..=left {
            counts[init[pos] as usize] = take as u16;
            rec(init, pos + 1, left - take, counts, out);
        }
        counts[init[pos] as usize] = 0;
    }
    rec(&cp.init, 0, k, &mut counts, &mut out);
    out
}

/// Calls `f` with every successor multiset (duplicates possible).
fn for_each_successor(cp: &CompiledProtocol, ms: &[u16], f: &mut impl FnMut(&[u16])) {
    for &(src, msg, tgt) in &cp.broadcasts {
        if ms[src as usize] == 0 {
            continue;
        }
        let mut base = ms.to_vec();
        base[src as usize] -= 1;
        let mut acc = vec![0u16; cp.n_states];
        Distributor {
            cp,
            msg: msg as usize,
            base: &base,
            tgt: tgt as usize,
            f,
        }
        .states(0, &mut acc);
    }
}

/// Spreads each receiver class over "stay" plus its reception targets.
struct Distributor<'a, F: FnMut(&[u16])> {
    cp: &'a CompiledProtocol,
    msg: usize,
    base: &'a [u16],
    tgt: usize,
    f: &'a mut F,
}

impl<F: FnMut(&[u16])> Distributor<'_, F> {
    fn states(&mut self, state: usize, acc: &mut Vec<u16>) {
        if state == self.base.len() {
            acc[self.tgt] += 1;
            (self.f)(acc);
            acc[self.tgt] -= 1;
            return;
        }
        let count = self.base[state];
        if count == 0 {
            self.states(state + 1, acc);
            return;
        }
        let mut options: Vec<usize> = vec![state];
        for &t in &self.cp.recv_targets[state][self.msg] {
            if !options.contains(&(t as usize)) {
                options.push(t as usize);
            }
        }
        self.split(state, &options, 0, count, acc);
    }

    fn split(
        &mut self,
        state: usize,
        options: &[usize],
        pos: usize,
        left: u16,
        acc: &mut Vec<u16>,
    ) {
        if pos + 1 == options.len() {
            acc[options[pos]] += left;
            self.states(state + 1, acc);
            acc[options[pos]] -= left;
            return;
        }
        for take in 0..=left {
            acc[options[pos]] += take;
            self.split(state, options, pos + 1, left - take, acc);
            acc[options[pos]] -= take;
        }
    }
}
