//! Shared corpus machinery: seeded random protocols and executions, plus an
//! explicit-graph oracle for the reconfigurable counting abstraction.
//!
//! Each test binary uses its own subset of these helpers.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use bcast::protocol::{Action, MsgId, Protocol, StateId, Transition};
use bcast::semantics::{
    apply_step, enabled_steps, Configuration, Execution, NodeId, SemanticsKind,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random reception-completed protocol with up to `max_states` states,
/// `max_msgs` messages and `max_trans` declared transitions.
pub fn random_protocol(
    rng: &mut ChaCha8Rng,
    max_states: usize,
    max_msgs: usize,
    max_trans: usize,
) -> Protocol {
    let n_states = rng.gen_range(1..=max_states);
    let n_msgs = rng.gen_range(1..=max_msgs);
    let n_init = rng.gen_range(1..=n_states.min(2));
    let n_trans = rng.gen_range(0..=max_trans);

    let states: Vec<StateId> = (0..n_states).map(|i| StateId(format!("q{i}"))).collect();
    let messages: Vec<MsgId> = (0..n_msgs).map(|i| MsgId(format!("m{i}"))).collect();
    let mut init: Vec<StateId> = states.clone();
    init.shuffle(rng);
    init.truncate(n_init);

    let mut transitions: Vec<Transition> = Vec::new();
    for _ in 0..n_trans {
        let source = states[rng.gen_range(0..n_states)].clone();
        let target = states[rng.gen_range(0..n_states)].clone();
        let msg = messages[rng.gen_range(0..n_msgs)].clone();
        let action = if rng.gen_bool(0.5) {
            Action::Broadcast(msg)
        } else {
            Action::Receive(msg)
        };
        let t = Transition {
            source,
            action,
            target,
        };
        if !transitions.contains(&t) {
            transitions.push(t);
        }
    }

    Protocol {
        name: format!("random_{n_states}_{n_msgs}_{n_trans}"),
        states,
        init,
        messages,
        transitions,
    }
    .complete_receptions()
}

/// A random legal execution: random initial configuration, then uniformly
/// chosen enabled steps (with random rewiring under reconfigurable
/// semantics).
pub fn random_execution(
    p: &Protocol,
    sem: SemanticsKind,
    k: usize,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Execution {
    let nodes: Vec<NodeId> = (0..k).map(|i| NodeId(format!("n{i}"))).collect();
    let labels: BTreeMap<NodeId, StateId> = nodes
        .iter()
        .map(|n| (n.clone(), p.init[rng.gen_range(0..p.init.len())].clone()))
        .collect();
    let edges = random_edges(&nodes, rng);
    let initial =
        Configuration::new(nodes.clone(), edges, labels).expect("well-formed configuration");

    let mut steps = Vec::new();
    let mut cur = initial.clone();
    for _ in 0..max_steps {
        let mut enabled = enabled_steps(&cur, sem, p);
        if enabled.is_empty() {
            break;
        }
        let mut step = enabled.swap_remove(rng.gen_range(0..enabled.len()));
        if sem == SemanticsKind::Reconfigurable && rng.gen_bool(0.5) {
            step.new_edges = Some(random_edges(&nodes, rng).into_iter().collect());
        }
        cur = apply_step(&cur, &step, sem, p).expect("enabled steps apply");
        steps.push(step);
    }
    Execution {
        semantics: sem,
        initial,
        steps,
    }
}

fn random_edges(nodes: &[NodeId], rng: &mut ChaCha8Rng) -> Vec<(NodeId, NodeId)> {
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if rng.gen_bool(0.5) {
                edges.push((nodes[i].clone(), nodes[j].clone()));
            }
        }
    }
    edges
}

/// Sorted label multiset of a configuration.
pub fn label_multiset(c: &Configuration) -> Vec<StateId> {
    let mut labels: Vec<StateId> = c.labels().values().cloned().collect();
    labels.sort_unstable();
    labels
}

/// Brute-force oracle for the counting abstraction: reachable label multisets
/// over explicit graph configurations, enumerating every topology (all
/// `2^(k choose 2)` edge sets) at every step. Only sensible for `k <= 3`.
pub fn reconfig_reachable_multisets_explicit(p: &Protocol, k: usize) -> BTreeSet<Vec<StateId>> {
    assert!(k <= 3, "the explicit oracle enumerates all edge sets");
    let nodes: Vec<NodeId> = (0..k).map(|i| NodeId(format!("n{i}"))).collect();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            pairs.push((nodes[i].clone(), nodes[j].clone()));
        }
    }
    let all_edge_sets: Vec<Vec<(NodeId, NodeId)>> = (0u32..(1 << pairs.len()))
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect();

    // all initial labelings over I, times all topologies
    let mut stack: Vec<Configuration> = Vec::new();
    let mut seen: BTreeSet<ConfigKey> = BTreeSet::new();
    let mut assignment = vec![0usize; k];
    loop {
        let labels: BTreeMap<NodeId, StateId> = nodes
            .iter()
            .zip(&assignment)
            .map(|(n, &i)| (n.clone(), p.init[i].clone()))
            .collect();
        for edges in &all_edge_sets {
            let c = Configuration::new(nodes.clone(), edges.clone(), labels.clone()).unwrap();
            if seen.insert(config_key(&c)) {
                stack.push(c);
            }
        }
        // odometer over init assignments
        let mut pos = 0;
        loop {
            if pos == k {
                break;
            }
            assignment[pos] += 1;
            if assignment[pos] < p.init.len() {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }

    let mut multisets = BTreeSet::new();
    while let Some(c) = stack.pop() {
        multisets.insert(label_multiset(&c));
        for step in enabled_steps(&c, SemanticsKind::Reconfigurable, p) {
            for edges in &all_edge_sets {
                let mut step = step.clone();
                step.new_edges = Some(edges.iter().cloned().collect());
                let succ =
                    apply_step(&c, &step, SemanticsKind::Reconfigurable, p).expect("enabled");
                if seen.insert(config_key(&succ)) {
                    stack.push(succ);
                }
            }
        }
    }
    multisets
}

/// Brute-force oracle for the fixed-topology engines: unions and shortest
/// covers over every `k`-node topology (all `2^(k choose 2)` edge sets,
/// nothing reduced up to isomorphism), driven by the semantics engine.
/// Only sensible for `k <= 3`.
pub fn fixed_explicit(
    p: &Protocol,
    sem: SemanticsKind,
    k: usize,
    targets: &bcast::protocol::TargetSet,
) -> (BTreeSet<StateId>, Option<usize>) {
    assert!(matches!(sem, SemanticsKind::Static | SemanticsKind::Lossy));
    assert!(k <= 3, "the explicit oracle enumerates all edge sets");
    let nodes: Vec<NodeId> = (0..k).map(|i| NodeId(format!("n{i}"))).collect();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            pairs.push((nodes[i].clone(), nodes[j].clone()));
        }
    }

    let mut covered: BTreeSet<StateId> = BTreeSet::new();
    let mut best_cover: Option<usize> = None;
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<(NodeId, NodeId)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, e)| e.clone())
            .collect();

        // all initial labelings over I form layer zero
        let mut frontier: Vec<Configuration> = Vec::new();
        let mut seen: BTreeSet<Vec<StateId>> = BTreeSet::new();
        let mut assignment = vec![0usize; k];
        loop {
            let labels: BTreeMap<NodeId, StateId> = nodes
                .iter()
                .zip(&assignment)
                .map(|(n, &i)| (n.clone(), p.init[i].clone()))
                .collect();
            let c = Configuration::new(nodes.clone(), edges.clone(), labels).unwrap();
            if seen.insert(c.nodes().iter().map(|n| c.labels()[n].clone()).collect()) {
                frontier.push(c);
            }
            let mut pos = 0;
            while pos < k {
                assignment[pos] += 1;
                if assignment[pos] < p.init.len() {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }

        // exhaust the reachable set (the union needs everything), noting the
        // first layer that covers
        let mut first_cover: Option<usize> = None;
        let mut layer = 0usize;
        while !frontier.is_empty() {
            for c in &frontier {
                covered.extend(c.label_set());
                if first_cover.is_none() && bcast::covers(c, targets) {
                    first_cover = Some(layer);
                }
            }
            let mut next = Vec::new();
            for c in &frontier {
                for step in enabled_steps(c, sem, p) {
                    let succ = apply_step(c, &step, sem, p).expect("enabled");
                    let key: Vec<StateId> = succ
                        .nodes()
                        .iter()
                        .map(|n| succ.labels()[n].clone())
                        .collect();
                    if seen.insert(key) {
                        next.push(succ);
                    }
                }
            }
            frontier = next;
            layer += 1;
        }
        if let Some(l) = first_cover {
            best_cover = Some(best_cover.map_or(l, |b| b.min(l)));
        }
    }
    (covered, best_cover)
}

type ConfigKey = (Vec<StateId>, Vec<(NodeId, NodeId)>);

fn config_key(c: &Configuration) -> ConfigKey {
    (
        c.nodes().iter().map(|n| c.labels()[n].clone()).collect(),
        c.edges().iter().cloned().collect(),
    )
}

/// Generated-input property checks, shared by the standalone `properties`
/// target and the acceptance suite.
pub mod props {
    use super::*;
    use bcast::explorer::{self, Budget};
    use bcast::protocol::TargetSet;
    use bcast::semantics::{lossy_to_reconfig, replay};
    use bcast::witness::{copycat_lossy, copycat_reconfig};

    pub fn copycat_reconfig_preserves_labels_and_alen(seed: u64, rounds: usize) {
        let mut rng = rng(seed);
        for round in 0..rounds {
            let p = random_protocol(&mut rng, 4, 2, 8);
            let k = rng.gen_range(1..=3);
            let steps = rng.gen_range(0..=5);
            let e = random_execution(&p, SemanticsKind::Reconfigurable, k, steps, &mut rng);
            let src = e.initial.nodes()[rng.gen_range(0..k)].clone();
            let before = replay(&e, &p).expect("generated executions replay");
            let cc = copycat_reconfig(&e, &p, &src).expect("copycat succeeds on legal input");
            let after = replay(&cc.execution, &p).expect("copycat output replays");
            for n in e.initial.nodes() {
                assert_eq!(
                    after.final_config.labels()[n],
                    before.final_config.labels()[n],
                    "round {round}: copycat changed the label of {n}"
                );
            }
            assert_eq!(
                after.final_config.labels()[&cc.fresh],
                before.final_config.labels()[&src],
                "round {round}: copy missed its model's final label"
            );
            assert_eq!(
                after.metrics.active_length[&cc.fresh], before.metrics.active_length[&src],
                "round {round}: copy missed its model's active length"
            );
        }
    }

    pub fn copycat_lossy_never_really_sends(seed: u64, rounds: usize) {
        let mut rng = rng(seed);
        for round in 0..rounds {
            let p = random_protocol(&mut rng, 4, 2, 8);
            let k = rng.gen_range(1..=3);
            let steps = rng.gen_range(0..=6);
            let e = random_execution(&p, SemanticsKind::Lossy, k, steps, &mut rng);
            let src = e.initial.nodes()[rng.gen_range(0..k)].clone();
            let before = replay(&e, &p).expect("generated executions replay");
            let cc = copycat_lossy(&e, &p, &src).expect("copycat succeeds on legal input");
            let after = replay(&cc.execution, &p).expect("copycat output replays");
            for n in e.initial.nodes() {
                assert_eq!(
                    after.final_config.labels()[n],
                    before.final_config.labels()[n],
                    "round {round}: copycat changed the label of {n}"
                );
            }
            assert_eq!(
                after.final_config.labels()[&cc.fresh],
                before.final_config.labels()[&src],
                "round {round}: copy missed its model's final label"
            );
            assert_eq!(
                after.metrics.active_length[&cc.fresh], before.metrics.active_length[&src],
                "round {round}: copy missed its model's active length"
            );
            assert_eq!(
                after.metrics.real_active_length[&cc.fresh], 0,
                "round {round}: copy performed a real broadcast"
            );
        }
    }

    pub fn lossy_embedding_is_legal_and_label_preserving(seed: u64, rounds: usize) {
        let mut rng = rng(seed);
        for round in 0..rounds {
            let p = random_protocol(&mut rng, 4, 2, 8);
            let k = rng.gen_range(1..=3);
            let steps = rng.gen_range(0..=6);
            let e = random_execution(&p, SemanticsKind::Lossy, k, steps, &mut rng);
            let before = replay(&e, &p).expect("generated executions replay");
            let r = lossy_to_reconfig(&e, &p).expect("legal lossy executions embed");
            assert_eq!(r.semantics, SemanticsKind::Reconfigurable);
            let after = replay(&r, &p).expect("embedded executions replay");
            assert_eq!(
                after.final_config.labels(),
                before.final_config.labels(),
                "round {round}: embedding changed the final labelling"
            );
            assert_eq!(after.metrics.length, before.metrics.length, "round {round}");
        }
    }

    pub fn mincover_decide_is_monotone_in_k(seed: u64, rounds: usize) {
        let mut rng = rng(seed);
        let budget = Budget::default();
        for round in 0..rounds {
            let p = random_protocol(&mut rng, 4, 2, 8);
            let target = p.states[rng.gen_range(0..p.states.len())].clone();
            let f = TargetSet::new([target.clone()]);
            let decide = |sem, k| {
                explorer::mincover_decide(&p, &f, k, sem, &budget)
                    .expect("within budget")
                    .value
            };
            for sem in [SemanticsKind::Reconfigurable, SemanticsKind::Lossy] {
                let answers: Vec<bool> = (1..=4).map(|k| decide(sem, k)).collect();
                for (k, w) in answers.windows(2).enumerate() {
                    assert!(
                        !w[0] || w[1],
                        "round {round}: {sem} MinCover true at {} but false at {} for {target}",
                        k + 1,
                        k + 2
                    );
                }
            }
            for k in 1..=4 {
                let lossy = decide(SemanticsKind::Lossy, k);
                let reconfig = decide(SemanticsKind::Reconfigurable, k);
                assert!(
                    !lossy || reconfig,
                    "round {round}: lossy covers {target} at {k} but reconfigurable does not"
                );
            }
        }
    }
}
