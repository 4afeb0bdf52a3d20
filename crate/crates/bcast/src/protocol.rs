//! Broadcast protocol definitions: control states, messages, transitions.
//!
//! A broadcast protocol is a finite automaton whose transitions either send
//! (`!m`) or receive (`?m`) a message. Every node of a network runs a copy of
//! the same protocol. Protocols are immutable after construction and safe to
//! share across threads.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a protocol control state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub String);

/// Identifier of a broadcast message.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MsgId(pub String);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for MsgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        StateId(s.to_owned())
    }
}

impl From<&str> for MsgId {
    fn from(s: &str) -> Self {
        MsgId(s.to_owned())
    }
}

impl From<String> for MsgId {
    fn from(s: String) -> Self {
        MsgId(s)
    }
}

impl From<String> for StateId {
    fn from(s: String) -> Self {
        StateId(s)
    }
}

/// What a transition does: broadcast a message or receive one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Broadcast(MsgId),
    Receive(MsgId),
}

impl Action {
    pub fn message(&self) -> &MsgId {
        match self {
            Action::Broadcast(m) | Action::Receive(m) => m,
        }
    }

    pub fn is_broadcast(&self) -> bool {
        matches!(self, Action::Broadcast(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Broadcast(m) => write!(f, "!{m}"),
            Action::Receive(m) => write!(f, "?{m}"),
        }
    }
}

/// One transition of a broadcast protocol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub source: StateId,
    pub action: Action,
    pub target: StateId,
}

impl Transition {
    pub fn broadcast(
        source: impl Into<String>,
        msg: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        Transition {
            source: StateId(source.into()),
            action: Action::Broadcast(MsgId(msg.into())),
            target: StateId(target.into()),
        }
    }

    pub fn receive(
        source: impl Into<String>,
        msg: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        Transition {
            source: StateId(source.into()),
            action: Action::Receive(MsgId(msg.into())),
            target: StateId(target.into()),
        }
    }

    pub fn is_broadcast(&self) -> bool {
        self.action.is_broadcast()
    }

    pub fn is_receive(&self) -> bool {
        !self.action.is_broadcast()
    }

    pub fn message(&self) -> &MsgId {
        self.action.message()
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.source, self.action, self.target)
    }
}

/// Subset of states whose coverability is asked about.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSet {
    pub states: Vec<StateId>,
}

impl TargetSet {
    pub fn new(states: impl IntoIterator<Item = StateId>) -> Self {
        TargetSet {
            states: states.into_iter().collect(),
        }
    }

    pub fn of(names: &[&str]) -> Self {
        TargetSet {
            states: names.iter().map(|s| StateId::from(*s)).collect(),
        }
    }

    pub fn contains(&self, q: &StateId) -> bool {
        self.states.contains(q)
    }
}

/// A broadcast protocol `(Q, I, M, Δ)`.
///
/// `states`, `messages` and `transitions` keep declaration order; every
/// deterministic iteration in the library (saturation tie-breaking, witness
/// construction, step enumeration) follows it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Protocol {
    pub name: String,
    pub states: Vec<StateId>,
    pub init: Vec<StateId>,
    pub messages: Vec<MsgId>,
    pub transitions: Vec<Transition>,
}

/// Severity of a validation diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding: the violated invariant plus the offending identifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}

fn diag(code: &'static str, message: String) -> Diagnostic {
    Diagnostic {
        code,
        severity: Severity::Error,
        message,
    }
}

impl Protocol {
    pub fn has_state(&self, q: &StateId) -> bool {
        self.states.contains(q)
    }

    pub fn has_message(&self, m: &MsgId) -> bool {
        self.messages.contains(m)
    }

    /// Index of a state in declaration order.
    pub fn state_index(&self, q: &StateId) -> Option<usize> {
        self.states.iter().position(|s| s == q)
    }

    /// All receive transitions for a `(state, message)` pair, in declaration order.
    pub fn receptions<'a>(
        &'a self,
        q: &'a StateId,
        m: &'a MsgId,
    ) -> impl Iterator<Item = &'a Transition> {
        self.transitions
            .iter()
            .filter(move |t| t.is_receive() && &t.source == q && t.message() == m)
    }

    /// All broadcast transitions out of a state, in declaration order.
    pub fn broadcasts_from<'a>(&'a self, q: &'a StateId) -> impl Iterator<Item = &'a Transition> {
        self.transitions
            .iter()
            .filter(move |t| t.is_broadcast() && &t.source == q)
    }

    /// True when every `(state, message)` pair has at least one reception.
    pub fn is_reception_complete(&self) -> bool {
        self.states.iter().all(|q| {
            self.messages
                .iter()
                .all(|m| self.receptions(q, m).next().is_some())
        })
    }

    /// Materializes the implicit self-loop convention: for every `(q, m)` with
    /// no receive transition, appends `(q, ?m, q)`. Existing transitions are
    /// untouched, so the operation is idempotent.
    pub fn complete_receptions(&self) -> Protocol {
        let mut out = self.clone();
        for q in &self.states {
            for m in &self.messages {
                if self.receptions(q, m).next().is_none() {
                    out.transitions.push(Transition {
                        source: q.clone(),
                        action: Action::Receive(m.clone()),
                        target: q.clone(),
                    });
                }
            }
        }
        out
    }

    /// Checks every structural invariant and returns one diagnostic per
    /// violation. An empty list means the protocol is well formed and
    /// reception-complete; a protocol that has not been normalized yet gets an
    /// `incomplete-receptions` warning.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();

        let mut seen = BTreeSet::new();
        for q in &self.states {
            if !seen.insert(q) {
                out.push(diag(
                    "duplicate-state",
                    format!("state '{q}' declared twice"),
                ));
            }
        }
        let mut seen = BTreeSet::new();
        for m in &self.messages {
            if !seen.insert(m) {
                out.push(diag(
                    "duplicate-message",
                    format!("message '{m}' declared twice"),
                ));
            }
        }

        if self.init.is_empty() {
            out.push(diag("empty-init", "init set is empty".to_owned()));
        }
        for q in &self.init {
            if !self.has_state(q) {
                out.push(diag(
                    "init-not-subset",
                    format!("initial state '{q}' is not declared"),
                ));
            }
        }

        for t in &self.transitions {
            if !self.has_state(&t.source) {
                out.push(diag(
                    "unknown-state",
                    format!("transition source '{}' is not declared", t.source),
                ));
            }
            if !self.has_state(&t.target) {
                out.push(diag(
                    "unknown-state",
                    format!("transition target '{}' is not declared", t.target),
                ));
            }
            if !self.has_message(t.message()) {
                out.push(diag(
                    "unknown-message",
                    format!("message '{}' is not declared", t.message()),
                ));
            }
        }

        for q in &self.states {
            for m in &self.messages {
                if self.receptions(q, m).next().is_none() {
                    out.push(Diagnostic {
                        code: "incomplete-receptions",
                        severity: Severity::Warning,
                        message: format!("no reception of '{m}' from state '{q}'"),
                    });
                }
            }
        }

        out
    }
}
