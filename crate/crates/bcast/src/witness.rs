//! Constructive synthesis of small covering executions.
//!
//! The copycat transformations add one node that retraces another node's
//! trajectory without disturbing anyone else: under reconfigurable semantics
//! the copy repeats each broadcast of its model under a fully disconnected
//! topology, under lossy semantics it loses every broadcast it makes. Witness
//! synthesis replays the saturation trace left to right, inserting one copycat
//! and one broadcast per broadcast-justified state and two copycats plus one
//! connecting broadcast per reception-justified state. Every synthesized
//! execution is replay-verified before it is returned.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::protocol::{Protocol, StateId, TargetSet};
use crate::saturation::{saturate, Justification, SaturationTrace};
use crate::semantics::{
    covers, edge, initial_config, replay, Configuration, Edge, Execution, NodeId, ReplayError,
    SemanticsKind, StepDescriptor,
};

/// A copycat extension: the new execution, the (identity) embedding of the old
/// nodes, and the added node.
#[derive(Clone, Debug)]
pub struct CopycatResult {
    pub execution: Execution,
    pub injection: BTreeMap<NodeId, NodeId>,
    pub fresh: NodeId,
}

/// A lossy witness together with its bookkeeping: the main node that pins each
/// covered state, and the retired nodes whose labels stopped mattering.
#[derive(Clone, Debug)]
pub struct LossyWitness {
    pub execution: Execution,
    pub main_nodes: BTreeMap<StateId, NodeId>,
    pub retired: BTreeSet<NodeId>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum WitnessError {
    #[error("no target state is coverable")]
    NotCoverable,
    #[error("expected a {expected} execution, got {got}")]
    WrongSemantics {
        expected: SemanticsKind,
        got: SemanticsKind,
    },
    #[error("unknown node '{0}'")]
    UnknownNode(NodeId),
    #[error("input execution does not replay: {0}")]
    IllegalInput(#[from] ReplayError),
    #[error("construction produced an invalid execution: {0}")]
    Internal(String),
}

fn internal(msg: impl Into<String>) -> WitnessError {
    WitnessError::Internal(msg.into())
}

fn fresh_node(nodes: &[NodeId]) -> NodeId {
    let mut i = nodes.len();
    loop {
        let cand = NodeId(format!("n{i}"));
        if !nodes.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

fn identity_injection(nodes: &[NodeId]) -> BTreeMap<NodeId, NodeId> {
    nodes.iter().map(|n| (n.clone(), n.clone())).collect()
}

/// Topology right before each step of an execution, plus the final one.
fn pre_topologies(e: &Execution) -> Vec<BTreeSet<Edge>> {
    let mut out = Vec::with_capacity(e.steps.len() + 1);
    let mut cur = e.initial.edges().clone();
    out.push(cur.clone());
    for s in &e.steps {
        if let Some(es) = &s.new_edges {
            cur = es.clone();
        }
        out.push(cur.clone());
    }
    out
}

/// Extends a reconfigurable execution with one node that copies `src`: same
/// receptions (wired to the same senders), same broadcasts (repeated under a
/// disconnected topology, so nobody is affected). The copy's active length
/// equals that of `src`, and every original node keeps its label trajectory.
pub fn copycat_reconfig(
    e: &Execution,
    p: &Protocol,
    src: &NodeId,
) -> Result<CopycatResult, WitnessError> {
    if e.semantics != SemanticsKind::Reconfigurable {
        return Err(WitnessError::WrongSemantics {
            expected: SemanticsKind::Reconfigurable,
            got: e.semantics,
        });
    }
    if !e.initial.nodes().contains(src) {
        return Err(WitnessError::UnknownNode(src.clone()));
    }
    let before = replay(e, p)?;

    let fresh = fresh_node(e.initial.nodes());
    let pres = pre_topologies(e);

    // each output step paired with the topology that must hold before it
    let mut planned: Vec<(BTreeSet<Edge>, StepDescriptor)> = Vec::new();
    for (j, s) in e.steps.iter().enumerate() {
        let mut pre = pres[j].clone();
        let mut step = s.clone();
        if let Some(t) = s.receptions.get(src) {
            pre.insert(edge(fresh.clone(), s.sender.clone()).expect("fresh is distinct"));
            step.receptions.insert(fresh.clone(), t.clone());
        }
        planned.push((pre, step));
        if &s.sender == src {
            let dup = StepDescriptor::new(fresh.clone(), s.broadcast.clone());
            planned.push((BTreeSet::new(), dup));
        }
    }

    let final_edges = pres.last().expect("pre_topologies is never empty").clone();
    let initial_edges = planned
        .first()
        .map_or_else(|| e.initial.edges().clone(), |(pre, _)| pre.clone());

    let mut nodes = e.initial.nodes().to_vec();
    nodes.push(fresh.clone());
    let mut labels = e.initial.labels().clone();
    labels.insert(fresh.clone(), e.initial.labels()[src].clone());
    let initial = Configuration::new(nodes, initial_edges, labels)
        .map_err(|err| internal(format!("copycat initial configuration: {err}")))?;

    let mut steps = Vec::with_capacity(planned.len());
    for i in 0..planned.len() {
        let next_pre = planned
            .get(i + 1)
            .map_or(&final_edges, |(pre, _)| pre)
            .clone();
        let (_, mut step) = planned[i].clone();
        step.new_edges = Some(next_pre);
        steps.push(step);
    }

    let out = Execution {
        semantics: SemanticsKind::Reconfigurable,
        initial,
        steps,
    };
    let after = replay(&out, p).map_err(|err| internal(format!("copycat replay gate: {err}")))?;
    for n in e.initial.nodes() {
        if after.final_config.labels()[n] != before.final_config.labels()[n] {
            return Err(internal(format!("copycat changed the label of '{n}'")));
        }
    }
    if after.final_config.labels()[&fresh] != before.final_config.labels()[src] {
        return Err(internal("copycat node missed its model's final label"));
    }
    if after.metrics.active_length[&fresh] != before.metrics.active_length[src] {
        return Err(internal("copycat node missed its model's active length"));
    }
    Ok(CopycatResult {
        execution: out,
        injection: identity_injection(e.initial.nodes()),
        fresh,
    })
}

/// Extends a lossy execution with one node that copies `src` over the topology
/// extended by `fresh ~ n` iff `src ~ n`. The copy receives whatever `src`
/// receives and loses every broadcast it repeats, so its real active length is
/// zero and no other node is affected.
pub fn copycat_lossy(
    e: &Execution,
    p: &Protocol,
    src: &NodeId,
) -> Result<CopycatResult, WitnessError> {
    if e.semantics != SemanticsKind::Lossy {
        return Err(WitnessError::WrongSemantics {
            expected: SemanticsKind::Lossy,
            got: e.semantics,
        });
    }
    if !e.initial.nodes().contains(src) {
        return Err(WitnessError::UnknownNode(src.clone()));
    }
    let before = replay(e, p)?;

    let fresh = fresh_node(e.initial.nodes());
    let mut edges = e.initial.edges().clone();
    for n in e.initial.neighbors(src) {
        edges.insert(edge(fresh.clone(), n).expect("fresh is distinct"));
    }

    let mut nodes = e.initial.nodes().to_vec();
    nodes.push(fresh.clone());
    let mut labels = e.initial.labels().clone();
    labels.insert(fresh.clone(), e.initial.labels()[src].clone());
    let initial = Configuration::new(nodes, edges, labels)
        .map_err(|err| internal(format!("copycat initial configuration: {err}")))?;

    let mut steps = Vec::new();
    for s in &e.steps {
        let mut step = s.clone();
        if !s.lost {
            if let Some(t) = s.receptions.get(src) {
                step.receptions.insert(fresh.clone(), t.clone());
            }
        }
        steps.push(step);
        if &s.sender == src {
            steps.push(StepDescriptor::new(fresh.clone(), s.broadcast.clone()).lost());
        }
    }

    let out = Execution {
        semantics: SemanticsKind::Lossy,
        initial,
        steps,
    };
    let after = replay(&out, p).map_err(|err| internal(format!("copycat replay gate: {err}")))?;
    for n in e.initial.nodes() {
        if after.final_config.labels()[n] != before.final_config.labels()[n] {
            return Err(internal(format!("copycat changed the label of '{n}'")));
        }
    }
    if after.final_config.labels()[&fresh] != before.final_config.labels()[src] {
        return Err(internal("copycat node missed its model's final label"));
    }
    if after.metrics.active_length[&fresh] != before.metrics.active_length[src] {
        return Err(internal("copycat node missed its model's active length"));
    }
    if after.metrics.real_active_length[&fresh] != 0 {
        return Err(internal("copycat node performed a real broadcast"));
    }
    Ok(CopycatResult {
        execution: out,
        injection: identity_injection(e.initial.nodes()),
        fresh,
    })
}

/// Rewrites the topology that holds after the last step (or the initial
/// topology of a step-free execution).
fn set_final_topology(e: &mut Execution, edges: BTreeSet<Edge>) -> Result<(), WitnessError> {
    match e.steps.last_mut() {
        Some(s) => {
            s.new_edges = Some(edges);
            Ok(())
        }
        None => {
            e.initial = e
                .initial
                .with_edges(edges)
                .map_err(|err| internal(format!("initial topology rewrite: {err}")))?;
            Ok(())
        }
    }
}

fn first_node_labelled(
    exec: &Execution,
    labels: &BTreeMap<NodeId, StateId>,
    q: &StateId,
) -> Result<NodeId, WitnessError> {
    exec.initial
        .nodes()
        .iter()
        .find(|n| &labels[*n] == q)
        .cloned()
        .ok_or_else(|| internal(format!("no node carries '{q}'")))
}

fn base_execution(
    trace: &SaturationTrace,
    sem: SemanticsKind,
) -> (Execution, BTreeMap<NodeId, StateId>) {
    let initial = initial_config(&trace.sets[0]);
    let labels = initial.labels().clone();
    (
        Execution {
            semantics: sem,
            initial,
            steps: Vec::new(),
        },
        labels,
    )
}

/// Synthesizes a reconfigurable execution covering `f`, following the
/// saturation trace up to the first set that intersects `f`. The final
/// configuration carries exactly that set of labels (all of `S_m` when the
/// target only becomes coverable at the fixpoint), uses `c` nodes where `c` is
/// the counter at that point, and every node broadcasts at most once per
/// replayed iteration, so the length is at most `2|Q|^2`.
pub fn synthesize_reconfig_witness(p: &Protocol, f: &TargetSet) -> Result<Execution, WitnessError> {
    let trace = saturate(p);
    let hit = trace
        .first_covering_iteration(f)
        .ok_or(WitnessError::NotCoverable)?;
    let (mut exec, mut labels) = base_execution(&trace, SemanticsKind::Reconfigurable);

    for i in 0..hit {
        match &trace.justifications[i] {
            Justification::Broadcast { broadcast } => {
                let model = first_node_labelled(&exec, &labels, &broadcast.source)?;
                let cc = copycat_reconfig(&exec, p, &model)?;
                exec = cc.execution;
                labels.insert(cc.fresh.clone(), broadcast.source.clone());
                set_final_topology(&mut exec, BTreeSet::new())?;
                let step = StepDescriptor {
                    sender: cc.fresh.clone(),
                    broadcast: broadcast.clone(),
                    lost: false,
                    receptions: BTreeMap::new(),
                    new_edges: Some(BTreeSet::new()),
                };
                exec.steps.push(step);
                labels.insert(cc.fresh, broadcast.target.clone());
            }
            Justification::Reception {
                broadcast,
                reception,
            } => {
                let model = first_node_labelled(&exec, &labels, &reception.source)?;
                let cc1 = copycat_reconfig(&exec, p, &model)?;
                exec = cc1.execution;
                labels.insert(cc1.fresh.clone(), reception.source.clone());

                let model = first_node_labelled(&exec, &labels, &broadcast.source)?;
                let cc2 = copycat_reconfig(&exec, p, &model)?;
                exec = cc2.execution;
                labels.insert(cc2.fresh.clone(), broadcast.source.clone());

                let (receiver, sender) = (cc1.fresh, cc2.fresh);
                let link =
                    edge(receiver.clone(), sender.clone()).expect("fresh nodes are distinct");
                set_final_topology(&mut exec, [link].into_iter().collect())?;
                let mut receptions = BTreeMap::new();
                receptions.insert(receiver.clone(), reception.clone());
                let step = StepDescriptor {
                    sender: sender.clone(),
                    broadcast: broadcast.clone(),
                    lost: false,
                    receptions,
                    new_edges: Some(BTreeSet::new()),
                };
                exec.steps.push(step);
                labels.insert(receiver, reception.target.clone());
                labels.insert(sender, broadcast.target.clone());
            }
        }
    }

    let replayed =
        replay(&exec, p).map_err(|err| internal(format!("witness replay gate: {err}")))?;
    let expect: BTreeSet<StateId> = trace.sets[hit].iter().cloned().collect();
    if replayed.final_config.label_set() != expect {
        return Err(internal("witness does not exhibit the saturation set"));
    }
    if replayed.metrics.size != trace.counters[hit] {
        return Err(internal(
            "witness size disagrees with the saturation counter",
        ));
    }
    if replayed.metrics.max_active_length() > hit {
        return Err(internal("witness exceeds the active length bound"));
    }
    if !covers(&replayed.final_config, f) {
        return Err(internal("witness does not cover the target"));
    }
    Ok(exec)
}

/// Synthesizes a lossy execution covering `f` (fixed topology throughout):
/// every state covered so far keeps a main node whose real active length is
/// zero, each node performs at most one real broadcast, and main nodes are
/// only ever adjacent to retired nodes.
pub fn synthesize_lossy_witness_full(
    p: &Protocol,
    f: &TargetSet,
) -> Result<LossyWitness, WitnessError> {
    let trace = saturate(p);
    let hit = trace
        .first_covering_iteration(f)
        .ok_or(WitnessError::NotCoverable)?;
    let (mut exec, mut labels) = base_execution(&trace, SemanticsKind::Lossy);
    let mut main: BTreeMap<StateId, NodeId> = trace.sets[0]
        .iter()
        .cloned()
        .zip(exec.initial.nodes().iter().cloned())
        .collect();
    let mut retired: BTreeSet<NodeId> = BTreeSet::new();

    for i in 0..hit {
        match &trace.justifications[i] {
            Justification::Broadcast { broadcast } => {
                let model = main[&broadcast.source].clone();
                let cc = copycat_lossy(&exec, p, &model)?;
                exec = cc.execution;
                labels.insert(cc.fresh.clone(), broadcast.source.clone());
                exec.steps
                    .push(StepDescriptor::new(cc.fresh.clone(), broadcast.clone()).lost());
                labels.insert(cc.fresh.clone(), broadcast.target.clone());
                main.insert(broadcast.target.clone(), cc.fresh);
            }
            Justification::Reception {
                broadcast,
                reception,
            } => {
                let model = main[&reception.source].clone();
                let cc1 = copycat_lossy(&exec, p, &model)?;
                exec = cc1.execution;
                labels.insert(cc1.fresh.clone(), reception.source.clone());

                let model = main[&broadcast.source].clone();
                let cc2 = copycat_lossy(&exec, p, &model)?;
                exec = cc2.execution;
                labels.insert(cc2.fresh.clone(), broadcast.source.clone());

                let (receiver, sender) = (cc1.fresh, cc2.fresh);
                // connecting the two copies is safe: neither performs a real
                // broadcast while the history replays
                let mut edges = exec.initial.edges().clone();
                edges.insert(
                    edge(receiver.clone(), sender.clone()).expect("fresh nodes are distinct"),
                );
                exec.initial = exec
                    .initial
                    .with_edges(edges)
                    .map_err(|err| internal(format!("connecting copies: {err}")))?;

                let mut receptions = BTreeMap::new();
                receptions.insert(receiver.clone(), reception.clone());
                for nb in exec.initial.neighbors(&sender) {
                    if nb == receiver {
                        continue;
                    }
                    let cur = labels[&nb].clone();
                    let t = p
                        .receptions(&cur, broadcast.message())
                        .next()
                        .ok_or_else(|| {
                            internal(format!(
                                "no reception of '{}' from '{cur}'",
                                broadcast.message()
                            ))
                        })?
                        .clone();
                    labels.insert(nb.clone(), t.target.clone());
                    receptions.insert(nb, t);
                }
                exec.steps.push(StepDescriptor {
                    sender: sender.clone(),
                    broadcast: broadcast.clone(),
                    lost: false,
                    receptions,
                    new_edges: None,
                });
                labels.insert(receiver.clone(), reception.target.clone());
                labels.insert(sender.clone(), broadcast.target.clone());
                retired.insert(sender);
                main.insert(reception.target.clone(), receiver);
            }
        }
    }

    let replayed =
        replay(&exec, p).map_err(|err| internal(format!("witness replay gate: {err}")))?;
    if replayed.final_config.labels() != &labels {
        return Err(internal("tracked labels diverge from the replay"));
    }
    if replayed.metrics.size != trace.counters[hit] {
        return Err(internal(
            "witness size disagrees with the saturation counter",
        ));
    }
    if replayed.metrics.max_active_length() > hit {
        return Err(internal("witness exceeds the active length bound"));
    }
    if replayed.metrics.max_real_active_length() > 1 {
        return Err(internal("a node performed more than one real broadcast"));
    }
    let covered_now: BTreeSet<StateId> = trace.sets[hit].iter().cloned().collect();
    let non_retired: BTreeSet<StateId> = labels
        .iter()
        .filter(|(n, _)| !retired.contains(*n))
        .map(|(_, q)| q.clone())
        .collect();
    if non_retired != covered_now {
        return Err(internal(
            "non-retired labels do not exhibit the saturation set",
        ));
    }
    for q in &covered_now {
        let node = main
            .get(q)
            .ok_or_else(|| internal(format!("no main node for '{q}'")))?;
        if &labels[node] != q {
            return Err(internal(format!("main node for '{q}' drifted")));
        }
        if replayed.metrics.real_active_length[node] != 0 {
            return Err(internal(format!(
                "main node for '{q}' sent a real broadcast"
            )));
        }
        if exec
            .initial
            .neighbors(node)
            .iter()
            .any(|nb| !retired.contains(nb))
        {
            return Err(internal(format!(
                "main node for '{q}' has a non-retired neighbour"
            )));
        }
    }
    if !covers(&replayed.final_config, f) {
        return Err(internal("witness does not cover the target"));
    }

    main.retain(|q, _| covered_now.contains(q));
    Ok(LossyWitness {
        execution: exec,
        main_nodes: main,
        retired,
    })
}

/// Like [`synthesize_lossy_witness_full`], returning only the execution.
pub fn synthesize_lossy_witness(p: &Protocol, f: &TargetSet) -> Result<Execution, WitnessError> {
    synthesize_lossy_witness_full(p, f).map(|w| w.execution)
}
