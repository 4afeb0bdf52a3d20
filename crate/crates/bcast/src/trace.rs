//! JSON wire format for execution traces.
//!
//! ```json
//! {
//!   "semantics": "static" | "reconfigurable" | "lossy",
//!   "initial": { "nodes": [{"id": "...", "state": "..."}], "edges": [["a","b"]] },
//!   "steps": [
//!     { "sender": "...", "bcast": ["src","msg","tgt"],
//!       "lost": true,                       // only when true
//!       "recv": { "node": ["src","msg","tgt"] },
//!       "new_edges": [["a","b"]] }          // only when present
//!   ]
//! }
//! ```
//!
//! `parse(emit(e)) == e` for every execution, and `emit` output is canonical:
//! emitting a parsed document reproduces it byte for byte.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Action, MsgId, StateId, Transition};
use crate::semantics::{Configuration, Execution, NodeId, SemanticsKind, StepDescriptor};

#[derive(Clone, Debug, Error)]
pub enum TraceError {
    #[error("malformed trace JSON: {0}")]
    Json(String),
    #[error("malformed trace: {0}")]
    Config(#[from] crate::semantics::ConfigError),
    #[error("transition '{0}' has an empty action")]
    EmptyAction(String),
}

#[derive(Serialize, Deserialize)]
struct TraceDoc {
    semantics: SemanticsKind,
    initial: InitialDoc,
    steps: Vec<StepDoc>,
}

#[derive(Serialize, Deserialize)]
struct InitialDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: String,
    state: String,
}

#[derive(Serialize, Deserialize)]
struct StepDoc {
    sender: String,
    bcast: (String, String, String),
    #[serde(default, skip_serializing_if = "is_false")]
    lost: bool,
    recv: BTreeMap<String, (String, String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    new_edges: Option<Vec<(String, String)>>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn bcast_triple(t: &Transition) -> (String, String, String) {
    (
        t.source.0.clone(),
        t.message().0.clone(),
        t.target.0.clone(),
    )
}

fn recv_triple(t: &Transition) -> (String, String, String) {
    bcast_triple(t)
}

fn from_doc(doc: TraceDoc) -> Result<Execution, TraceError> {
    let nodes: Vec<NodeId> = doc
        .initial
        .nodes
        .iter()
        .map(|n| NodeId(n.id.clone()))
        .collect();
    let labels: BTreeMap<NodeId, StateId> = doc
        .initial
        .nodes
        .iter()
        .map(|n| (NodeId(n.id.clone()), StateId(n.state.clone())))
        .collect();
    let edges = doc
        .initial
        .edges
        .into_iter()
        .map(|(a, b)| (NodeId(a), NodeId(b)));
    let initial = Configuration::new(nodes, edges, labels)?;

    let steps = doc
        .steps
        .into_iter()
        .map(|s| {
            let (src, msg, tgt) = s.bcast;
            let broadcast = Transition {
                source: StateId(src),
                action: Action::Broadcast(MsgId(msg)),
                target: StateId(tgt),
            };
            let receptions = s
                .recv
                .into_iter()
                .map(|(n, (src, msg, tgt))| {
                    (
                        NodeId(n),
                        Transition {
                            source: StateId(src),
                            action: Action::Receive(MsgId(msg)),
                            target: StateId(tgt),
                        },
                    )
                })
                .collect();
            let new_edges = s.new_edges.map(|es| {
                es.into_iter()
                    .filter_map(|(a, b)| crate::semantics::edge(NodeId(a), NodeId(b)))
                    .collect()
            });
            StepDescriptor {
                sender: NodeId(s.sender),
                broadcast,
                lost: s.lost,
                receptions,
                new_edges,
            }
        })
        .collect();

    Ok(Execution {
        semantics: doc.semantics,
        initial,
        steps,
    })
}

fn to_doc(e: &Execution) -> TraceDoc {
    TraceDoc {
        semantics: e.semantics,
        initial: InitialDoc {
            nodes: e
                .initial
                .nodes()
                .iter()
                .map(|n| NodeDoc {
                    id: n.0.clone(),
                    state: e.initial.labels()[n].0.clone(),
                })
                .collect(),
            edges: e
                .initial
                .edges()
                .iter()
                .map(|(a, b)| (a.0.clone(), b.0.clone()))
                .collect(),
        },
        steps: e
            .steps
            .iter()
            .map(|s| StepDoc {
                sender: s.sender.0.clone(),
                bcast: bcast_triple(&s.broadcast),
                lost: s.lost,
                recv: s
                    .receptions
                    .iter()
                    .map(|(n, t)| (n.0.clone(), recv_triple(t)))
                    .collect(),
                new_edges: s
                    .new_edges
                    .as_ref()
                    .map(|es| es.iter().map(|(a, b)| (a.0.clone(), b.0.clone())).collect()),
            })
            .collect(),
    }
}

/// Emits the canonical single-line JSON encoding of an execution.
pub fn emit(e: &Execution) -> String {
    serde_json::to_string(&to_doc(e)).expect("trace documents always serialize")
}

/// Emits the trace as a `serde_json::Value`, for embedding in larger payloads.
pub fn emit_value(e: &Execution) -> serde_json::Value {
    serde_json::to_value(to_doc(e)).expect("trace documents always serialize")
}

/// Parses a trace document.
pub fn parse(text: &str) -> Result<Execution, TraceError> {
    let doc: TraceDoc = serde_json::from_str(text).map_err(|e| TraceError::Json(e.to_string()))?;
    from_doc(doc)
}

/// Parses a trace from an already-decoded JSON value.
pub fn parse_value(value: serde_json::Value) -> Result<Execution, TraceError> {
    let doc: TraceDoc =
        serde_json::from_value(value).map_err(|e| TraceError::Json(e.to_string()))?;
    from_doc(doc)
}
