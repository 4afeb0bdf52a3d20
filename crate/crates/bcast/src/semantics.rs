//! Operational semantics for broadcast networks.
//!
//! Three step rules share one configuration shape (an undirected graph of
//! protocol states):
//!
//! * **static** — the topology never changes; a broadcast reaches exactly the
//!   sender's neighbours;
//! * **reconfigurable** — like static, but the step may rewire the topology
//!   after the broadcast;
//! * **lossy** (at send) — the topology never changes, but a broadcast
//!   atomically reaches all neighbours or none of them.
//!
//! Configurations and executions are immutable values; [`apply_step`] returns
//! a fresh configuration, so everything here is safe to share across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Protocol, StateId, TargetSet, Transition};

/// Identifier of a network node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// Undirected edge, stored with its endpoints in increasing order.
pub type Edge = (NodeId, NodeId);

/// Normalizes an unordered node pair; `None` for self-loops.
pub fn edge(a: NodeId, b: NodeId) -> Option<Edge> {
    match a.cmp(&b) {
        std::cmp::Ordering::Less => Some((a, b)),
        std::cmp::Ordering::Greater => Some((b, a)),
        std::cmp::Ordering::Equal => None,
    }
}

/// Which step rule an execution uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticsKind {
    Static,
    Reconfigurable,
    Lossy,
}

impl fmt::Display for SemanticsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SemanticsKind::Static => "static",
            SemanticsKind::Reconfigurable => "reconfigurable",
            SemanticsKind::Lossy => "lossy",
        };
        f.write_str(s)
    }
}

/// Errors raised when building a configuration.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("duplicate node '{0}'")]
    DuplicateNode(NodeId),
    #[error("edge endpoint '{0}' is not a node")]
    UnknownEndpoint(NodeId),
    #[error("self-loop edge on '{0}'")]
    SelfLoop(NodeId),
    #[error("node '{0}' has no label")]
    MissingLabel(NodeId),
    #[error("label refers to unknown node '{0}'")]
    UnknownLabelled(NodeId),
}

/// A network configuration: nodes, symmetric irreflexive edges, and a total
/// labelling of nodes by protocol states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    nodes: Vec<NodeId>,
    edges: BTreeSet<Edge>,
    labels: BTreeMap<NodeId, StateId>,
}

impl Configuration {
    pub fn new(
        nodes: Vec<NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        labels: BTreeMap<NodeId, StateId>,
    ) -> Result<Self, ConfigError> {
        let node_set: BTreeSet<&NodeId> = nodes.iter().collect();
        if node_set.len() != nodes.len() {
            let dup = nodes
                .iter()
                .find(|n| nodes.iter().filter(|m| m == n).count() > 1)
                .unwrap();
            return Err(ConfigError::DuplicateNode(dup.clone()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if !node_set.contains(&a) {
                return Err(ConfigError::UnknownEndpoint(a));
            }
            if !node_set.contains(&b) {
                return Err(ConfigError::UnknownEndpoint(b));
            }
            match edge(a, b.clone()) {
                Some(e) => {
                    set.insert(e);
                }
                None => return Err(ConfigError::SelfLoop(b)),
            }
        }
        for n in &nodes {
            if !labels.contains_key(n) {
                return Err(ConfigError::MissingLabel(n.clone()));
            }
        }
        if let Some(n) = labels.keys().find(|n| !node_set.contains(n)) {
            return Err(ConfigError::UnknownLabelled(n.clone()));
        }
        Ok(Configuration {
            nodes,
            edges: set,
            labels,
        })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn label(&self, n: &NodeId) -> Option<&StateId> {
        self.labels.get(n)
    }

    pub fn labels(&self) -> &BTreeMap<NodeId, StateId> {
        &self.labels
    }

    /// The set of states appearing on nodes.
    pub fn label_set(&self) -> BTreeSet<StateId> {
        self.labels.values().cloned().collect()
    }

    pub fn adjacent(&self, a: &NodeId, b: &NodeId) -> bool {
        match edge(a.clone(), b.clone()) {
            Some(e) => self.edges.contains(&e),
            None => false,
        }
    }

    /// Neighbourhood of a node, in node declaration order.
    pub fn neighbors(&self, n: &NodeId) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|m| self.adjacent(n, m))
            .cloned()
            .collect()
    }

    /// Same nodes and labels, different edge set.
    pub fn with_edges(
        &self,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, ConfigError> {
        Configuration::new(self.nodes.clone(), edges, self.labels.clone())
    }
}

/// True when a node of the configuration carries a state of `f`.
pub fn covers(c: &Configuration, f: &TargetSet) -> bool {
    c.labels.values().any(|q| f.contains(q))
}

/// One step of an execution: a sender, its broadcast transition, the chosen
/// reception per receiver and, for reconfigurable steps, the topology that
/// holds after the broadcast.
///
/// Reception nondeterminism is resolved here rather than in the engine:
/// replaying a step is deterministic and witnesses stay auditable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepDescriptor {
    pub sender: NodeId,
    pub broadcast: Transition,
    /// Meaningful only under lossy semantics.
    pub lost: bool,
    pub receptions: BTreeMap<NodeId, Transition>,
    /// Meaningful only under reconfigurable semantics; applied after the
    /// broadcast. `None` keeps the current topology.
    pub new_edges: Option<BTreeSet<Edge>>,
}

impl StepDescriptor {
    pub fn new(sender: NodeId, broadcast: Transition) -> Self {
        StepDescriptor {
            sender,
            broadcast,
            lost: false,
            receptions: BTreeMap::new(),
            new_edges: None,
        }
    }

    pub fn with_reception(mut self, node: NodeId, t: Transition) -> Self {
        self.receptions.insert(node, t);
        self
    }

    pub fn with_new_edges(mut self, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        self.new_edges = Some(edges.into_iter().filter_map(|(a, b)| edge(a, b)).collect());
        self
    }

    pub fn lost(mut self) -> Self {
        self.lost = true;
        self
    }
}

/// Why a step is not enabled in a configuration.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("sender '{0}' is not a node")]
    UnknownSender(NodeId),
    #[error("step action '{0}' is not a broadcast transition")]
    NotABroadcast(Transition),
    #[error("transition '{0}' is not in the protocol")]
    NotAProtocolTransition(Transition),
    #[error("sender '{sender}' is at '{actual}' but the broadcast starts at '{expected}'")]
    SenderLabelMismatch {
        sender: NodeId,
        expected: StateId,
        actual: StateId,
    },
    #[error("lost flag is only meaningful under lossy semantics")]
    LostUnderNonLossy,
    #[error("a lost broadcast admits no receptions")]
    ReceptionsOnLostStep,
    #[error("new_edges is only meaningful under reconfigurable semantics")]
    NewEdgesUnderNonReconfigurable,
    #[error("node '{0}' must receive but the step has no reception for it")]
    MissingReception(NodeId),
    #[error("node '{0}' has a reception but is not a neighbour of the sender")]
    SpuriousReception(NodeId),
    #[error("reception for '{node}' uses '{transition}', which does not match (state '{state}', message '{message}')")]
    ReceptionMismatch {
        node: NodeId,
        transition: Transition,
        state: StateId,
        message: String,
    },
    #[error("new_edges is malformed: {0}")]
    MalformedNewEdges(ConfigError),
}

/// Applies one step under the given semantics, returning the successor
/// configuration. Fails with the first violated precondition.
pub fn apply_step(
    c: &Configuration,
    s: &StepDescriptor,
    sem: SemanticsKind,
    p: &Protocol,
) -> Result<Configuration, StepError> {
    let sender_label = c
        .label(&s.sender)
        .ok_or_else(|| StepError::UnknownSender(s.sender.clone()))?;
    if !s.broadcast.is_broadcast() {
        return Err(StepError::NotABroadcast(s.broadcast.clone()));
    }
    if !p.transitions.contains(&s.broadcast) {
        return Err(StepError::NotAProtocolTransition(s.broadcast.clone()));
    }
    if &s.broadcast.source != sender_label {
        return Err(StepError::SenderLabelMismatch {
            sender: s.sender.clone(),
            expected: s.broadcast.source.clone(),
            actual: sender_label.clone(),
        });
    }
    if s.lost && sem != SemanticsKind::Lossy {
        return Err(StepError::LostUnderNonLossy);
    }
    if s.new_edges.is_some() && sem != SemanticsKind::Reconfigurable {
        return Err(StepError::NewEdgesUnderNonReconfigurable);
    }

    let msg = s.broadcast.message();
    if s.lost {
        if !s.receptions.is_empty() {
            return Err(StepError::ReceptionsOnLostStep);
        }
    } else {
        // receptions must cover exactly the sender's neighbourhood
        for n in c.neighbors(&s.sender) {
            if !s.receptions.contains_key(&n) {
                return Err(StepError::MissingReception(n));
            }
        }
        for (n, t) in &s.receptions {
            if !c.adjacent(&s.sender, n) {
                return Err(StepError::SpuriousReception(n.clone()));
            }
            let label = c
                .label(n)
                .expect("reception keys are neighbours, hence nodes");
            let fits = t.is_receive() && &t.source == label && t.message() == msg;
            if !fits || !p.transitions.contains(t) {
                return Err(StepError::ReceptionMismatch {
                    node: n.clone(),
                    transition: t.clone(),
                    state: label.clone(),
                    message: msg.0.clone(),
                });
            }
        }
    }

    let mut labels = c.labels.clone();
    labels.insert(s.sender.clone(), s.broadcast.target.clone());
    for (n, t) in &s.receptions {
        labels.insert(n.clone(), t.target.clone());
    }

    let edges = match &s.new_edges {
        None => c.edges.clone(),
        Some(e) => e.clone(),
    };
    Configuration::new(c.nodes.clone(), edges, labels).map_err(StepError::MalformedNewEdges)
}

/// Enumerates every step enabled in `c`, except that `new_edges` is left unset
/// (topology choice is the caller's). Output order is a pure function of node
/// order and transition declaration order: senders in node order, broadcasts in
/// declaration order, reception choices expanded lexicographically (last
/// receiver varies fastest), and under lossy semantics the lost variant last.
/// A lossy sender with no neighbours yields a single non-lost descriptor, since
/// losing a broadcast that nobody would receive changes nothing.
pub fn enabled_steps(c: &Configuration, sem: SemanticsKind, p: &Protocol) -> Vec<StepDescriptor> {
    let mut out = Vec::new();
    for sender in c.nodes() {
        let label = &c.labels[sender];
        for b in p.broadcasts_from(label) {
            let receivers = c.neighbors(sender);
            let choices: Vec<Vec<&Transition>> = receivers
                .iter()
                .map(|n| p.receptions(&c.labels[n], b.message()).collect())
                .collect();
            if choices.iter().all(|opts| !opts.is_empty()) {
                // odometer over reception choices
                let mut idx = vec![0usize; receivers.len()];
                loop {
                    let mut step = StepDescriptor::new(sender.clone(), b.clone());
                    for (n, (opts, i)) in receivers.iter().zip(choices.iter().zip(&idx)) {
                        step.receptions.insert(n.clone(), opts[*i].clone());
                    }
                    out.push(step);
                    let mut pos = idx.len();
                    loop {
                        if pos == 0 {
                            break;
                        }
                        pos -= 1;
                        idx[pos] += 1;
                        if idx[pos] < choices[pos].len() {
                            break;
                        }
                        idx[pos] = 0;
                    }
                    if idx.iter().all(|&i| i == 0) {
                        break;
                    }
                }
            }
            if sem == SemanticsKind::Lossy && !receivers.is_empty() {
                out.push(StepDescriptor::new(sender.clone(), b.clone()).lost());
            }
        }
    }
    out
}

/// An execution: an initial configuration plus the steps taken from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    pub semantics: SemanticsKind,
    pub initial: Configuration,
    pub steps: Vec<StepDescriptor>,
}

/// Execution measurements: node count, step count, per-node broadcast counts.
/// `real_active_length` counts only non-lost broadcasts; outside lossy
/// semantics it equals `active_length`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExecMetrics {
    pub size: usize,
    pub length: usize,
    pub active_length: BTreeMap<NodeId, usize>,
    pub real_active_length: BTreeMap<NodeId, usize>,
}

impl ExecMetrics {
    pub fn max_active_length(&self) -> usize {
        self.active_length.values().copied().max().unwrap_or(0)
    }

    pub fn max_real_active_length(&self) -> usize {
        self.real_active_length.values().copied().max().unwrap_or(0)
    }
}

/// A replayed execution: its metrics and the configuration it ends in.
#[derive(Clone, Debug)]
pub struct Replayed {
    pub metrics: ExecMetrics,
    pub final_config: Configuration,
}

/// Replay failures.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("node '{node}' starts at '{state}', which is not an initial state")]
    NonInitial { node: NodeId, state: StateId },
    #[error("step {index} is illegal: {source}")]
    IllegalStep { index: usize, source: StepError },
}

/// Replays an execution from its initial configuration, checking legality of
/// every step under the execution's semantics.
pub fn replay(e: &Execution, p: &Protocol) -> Result<Replayed, ReplayError> {
    for n in e.initial.nodes() {
        let q = &e.initial.labels()[n];
        if !p.init.contains(q) {
            return Err(ReplayError::NonInitial {
                node: n.clone(),
                state: q.clone(),
            });
        }
    }
    let mut alen: BTreeMap<NodeId, usize> =
        e.initial.nodes().iter().map(|n| (n.clone(), 0)).collect();
    let mut rlen = alen.clone();
    let mut cur = e.initial.clone();
    for (index, s) in e.steps.iter().enumerate() {
        cur = apply_step(&cur, s, e.semantics, p)
            .map_err(|source| ReplayError::IllegalStep { index, source })?;
        *alen
            .get_mut(&s.sender)
            .expect("sender checked by apply_step") += 1;
        if !s.lost {
            *rlen
                .get_mut(&s.sender)
                .expect("sender checked by apply_step") += 1;
        }
    }
    Ok(Replayed {
        metrics: ExecMetrics {
            size: e.initial.nodes().len(),
            length: e.steps.len(),
            active_length: alen,
            real_active_length: rlen,
        },
        final_config: cur,
    })
}

/// Errors of [`lossy_to_reconfig`].
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EmbedError {
    #[error("input execution is {0}, not lossy")]
    NotLossy(SemanticsKind),
    #[error("input execution does not replay: {0}")]
    Illegal(#[from] ReplayError),
}

/// Embeds a legal lossy execution into the reconfigurable semantics: the
/// topology is the empty edge set while a lost broadcast fires and the
/// original edge set `E` otherwise, with `E` restored at the end. The result
/// replays legally and ends with the same labelling.
pub fn lossy_to_reconfig(e: &Execution, p: &Protocol) -> Result<Execution, EmbedError> {
    if e.semantics != SemanticsKind::Lossy {
        return Err(EmbedError::NotLossy(e.semantics));
    }
    let before = replay(e, p)?;

    let full: BTreeSet<Edge> = e.initial.edges().clone();
    let empty: BTreeSet<Edge> = BTreeSet::new();
    let pre = |s: &StepDescriptor| if s.lost { &empty } else { &full };

    let initial = match e.steps.first() {
        Some(s) => e
            .initial
            .with_edges(pre(s).iter().cloned())
            .expect("edge subset stays well formed"),
        None => e.initial.clone(),
    };
    let steps: Vec<StepDescriptor> = e
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| StepDescriptor {
            sender: s.sender.clone(),
            broadcast: s.broadcast.clone(),
            lost: false,
            receptions: s.receptions.clone(),
            new_edges: Some(e.steps.get(i + 1).map_or(&full, pre).clone()),
        })
        .collect();

    let out = Execution {
        semantics: SemanticsKind::Reconfigurable,
        initial,
        steps,
    };
    let after = replay(&out, p)?;
    debug_assert_eq!(after.final_config.labels(), before.final_config.labels());
    Ok(out)
}

/// Convenience builder for an initial configuration `n0..n{k-1}` with the
/// given labels and no edges.
pub fn initial_config(labels: &[StateId]) -> Configuration {
    let nodes: Vec<NodeId> = (0..labels.len()).map(|i| NodeId(format!("n{i}"))).collect();
    let map = nodes.iter().cloned().zip(labels.iter().cloned()).collect();
    Configuration::new(nodes, Vec::new(), map).expect("fresh nodes cannot clash")
}
