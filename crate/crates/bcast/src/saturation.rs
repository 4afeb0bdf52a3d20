//! Refined saturation: computes the set of coverable states together with a
//! node counter and an auditable insertion trace.
//!
//! Starting from the initial states, each iteration adds at most one state,
//! either as the target of a broadcast whose source is already covered
//! (counter +1: one more node copies the broadcaster), or as the target of a
//! reception matched by a broadcast entirely inside the covered set
//! (counter +2: copy both participants). The returned set is exactly the set
//! of states coverable under the reconfigurable semantics, and also under the
//! lossy semantics.

use thiserror::Error;

use crate::protocol::{Protocol, StateId, TargetSet, Transition};

/// Why a state entered the saturation set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    /// Inserted as the target of a broadcast transition; counter +1.
    Broadcast { broadcast: Transition },
    /// Inserted as the target of a reception, matched by a broadcast whose
    /// source and target were already in the set; counter +2.
    Reception {
        broadcast: Transition,
        reception: Transition,
    },
}

impl Justification {
    pub fn node_cost(&self) -> usize {
        match self {
            Justification::Broadcast { .. } => 1,
            Justification::Reception { .. } => 2,
        }
    }
}

/// The full run of the saturation algorithm: sets `S_0..S_m`, counters
/// `c_0..c_m`, the inserted state and its justification per iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaturationTrace {
    /// `sets[i]` lists `S_i` in insertion order (initial states first).
    pub sets: Vec<Vec<StateId>>,
    pub counters: Vec<usize>,
    pub inserted: Vec<StateId>,
    pub justifications: Vec<Justification>,
}

impl SaturationTrace {
    /// Number of iterations `m`.
    pub fn iterations(&self) -> usize {
        self.inserted.len()
    }

    /// The fixpoint `S_m`: exactly the coverable states.
    pub fn covered(&self) -> &[StateId] {
        self.sets.last().expect("sets always holds S_0")
    }

    /// Final counter value `c_m`.
    pub fn final_counter(&self) -> usize {
        *self.counters.last().expect("counters always holds c_0")
    }

    /// Index of the first set intersecting `f`, if any.
    pub fn first_covering_iteration(&self, f: &TargetSet) -> Option<usize> {
        // sets grow one state at a time, so scan initial states then insertions
        let s0 = &self.sets[0];
        if s0.iter().any(|q| f.contains(q)) {
            return Some(0);
        }
        self.inserted
            .iter()
            .position(|q| f.contains(q))
            .map(|i| i + 1)
    }
}

/// Runs the refined saturation algorithm.
///
/// Expects a reception-complete protocol (see
/// [`Protocol::complete_receptions`]); on incomplete input the result is still
/// the fixpoint of the rules, but the coverability characterization only
/// holds for normalized protocols. Deterministic: the broadcast rule is tried before the
/// reception rule, and candidates are scanned in transition declaration order
/// (for the reception rule, by broadcast first, then reception).
pub fn saturate(p: &Protocol) -> SaturationTrace {
    debug_assert!(
        p.is_reception_complete(),
        "saturate expects a normalized protocol"
    );

    let mut set: Vec<StateId> = Vec::new();
    for q in &p.init {
        if !set.contains(q) {
            set.push(q.clone());
        }
    }
    let mut trace = SaturationTrace {
        sets: vec![set.clone()],
        counters: vec![set.len()],
        inserted: Vec::new(),
        justifications: Vec::new(),
    };

    loop {
        let step = find_insertion(p, &set);
        let Some((state, justification)) = step else {
            break;
        };
        let cost = justification.node_cost();
        set.push(state.clone());
        trace.sets.push(set.clone());
        trace.counters.push(trace.counters.last().unwrap() + cost);
        trace.inserted.push(state);
        trace.justifications.push(justification);
    }
    trace
}

fn find_insertion(p: &Protocol, set: &[StateId]) -> Option<(StateId, Justification)> {
    let covered = |q: &StateId| set.contains(q);

    for t in &p.transitions {
        if t.is_broadcast() && covered(&t.source) && !covered(&t.target) {
            return Some((
                t.target.clone(),
                Justification::Broadcast {
                    broadcast: t.clone(),
                },
            ));
        }
    }
    for b in &p.transitions {
        if !(b.is_broadcast() && covered(&b.source) && covered(&b.target)) {
            continue;
        }
        for r in &p.transitions {
            if r.is_receive()
                && r.message() == b.message()
                && covered(&r.source)
                && !covered(&r.target)
            {
                return Some((
                    r.target.clone(),
                    Justification::Reception {
                        broadcast: b.clone(),
                        reception: r.clone(),
                    },
                ));
            }
        }
    }
    None
}

/// Decides coverability of `f` (for both the reconfigurable and the lossy
/// semantics) on a normalized protocol.
pub fn is_coverable(p: &Protocol, f: &TargetSet) -> bool {
    saturate(p).covered().iter().any(|q| f.contains(q))
}

/// Witness bounds read off a saturation trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WitnessBounds {
    /// Nodes sufficient to cover everything coverable: `c_m`.
    pub cutoff_ub: usize,
    /// Steps sufficient: `c_m · m`.
    pub length_ub: usize,
    /// Per-node broadcasts sufficient: `m`.
    pub max_active_ub: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TraceMismatch {
    #[error("trace starts from {trace:?}, protocol initial states are {protocol:?}")]
    InitialStates {
        trace: Vec<StateId>,
        protocol: Vec<StateId>,
    },
    #[error("trace inserts '{0}', which is not a protocol state")]
    UnknownState(StateId),
}

/// Derives the cutoff and covering-length upper bounds from a saturation
/// trace, checking that the trace belongs to the protocol.
pub fn witness_bounds(t: &SaturationTrace, p: &Protocol) -> Result<WitnessBounds, TraceMismatch> {
    let mut init_dedup: Vec<StateId> = Vec::new();
    for q in &p.init {
        if !init_dedup.contains(q) {
            init_dedup.push(q.clone());
        }
    }
    if t.sets[0] != init_dedup {
        return Err(TraceMismatch::InitialStates {
            trace: t.sets[0].clone(),
            protocol: init_dedup,
        });
    }
    if let Some(q) = t.inserted.iter().find(|q| !p.has_state(q)) {
        return Err(TraceMismatch::UnknownState(q.clone()));
    }

    let m = t.iterations();
    let c_m = t.final_counter();
    let bounds = WitnessBounds {
        cutoff_ub: c_m,
        length_ub: c_m * m,
        max_active_ub: m,
    };
    let n_states = p.states.len();
    let n_init = t.sets[0].len();
    assert!(
        bounds.cutoff_ub <= 2 * n_states - n_init,
        "counter exceeds 2|Q| - |I|"
    );
    assert!(
        bounds.length_ub <= 2 * n_states * n_states,
        "length bound exceeds 2|Q|^2"
    );
    Ok(bounds)
}
