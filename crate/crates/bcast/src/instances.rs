//! Generators for the protocol families used throughout the test corpus, the
//! two worked examples, and the SetCover → MinCover reduction with its
//! brute-force oracle.

use thiserror::Error;

use crate::protocol::{Protocol, StateId, TargetSet, Transition};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("family parameter must be at least 1")]
    ZeroSize,
    #[error("set cover instance is malformed: {0}")]
    Malformed(String),
    #[error("brute force is limited to {max} subsets, instance has {got}")]
    TooManySubsets { max: usize, got: usize },
}

fn state(s: impl Into<String>) -> StateId {
    StateId(s.into())
}

/// Two worked example protocols, reception-complete. `example1` (8 states,
/// target `smiley`) needs reconfiguration or losses to cover its target;
/// `example2` is a broadcast/reception chain `q0..q6` (target `q6`) whose
/// witness takes ten nodes.
pub fn gen_examples() -> Vec<(String, Protocol, TargetSet)> {
    let example1 = Protocol {
        name: "example1".into(),
        states: ["q0", "q1", "q2", "q3", "q4", "r1", "smiley", "bot"]
            .iter()
            .map(|s| state(*s))
            .collect(),
        init: vec![state("q0")],
        messages: vec!["a".into(), "b1".into(), "b2".into()],
        transitions: vec![
            Transition::broadcast("q0", "a", "q0"),
            Transition::receive("q0", "a", "q1"),
            Transition::broadcast("q1", "b1", "q2"),
            Transition::receive("q2", "a", "q3"),
            Transition::broadcast("q3", "b2", "q4"),
            Transition::receive("q0", "b1", "r1"),
            Transition::receive("r1", "b2", "smiley"),
            Transition::receive("q0", "b1", "bot"),
            Transition::receive("q0", "b2", "bot"),
        ],
    }
    .complete_receptions();

    let example2 = Protocol {
        name: "example2".into(),
        states: (0..=6).map(|i| state(format!("q{i}"))).collect(),
        init: vec![state("q0")],
        messages: vec!["a".into(), "b".into(), "c".into()],
        transitions: vec![
            Transition::broadcast("q0", "a", "q1"),
            Transition::receive("q0", "a", "q2"),
            Transition::broadcast("q2", "b", "q3"),
            Transition::receive("q1", "b", "q4"),
            Transition::broadcast("q4", "c", "q5"),
            Transition::receive("q3", "c", "q6"),
        ],
    }
    .complete_receptions();

    vec![
        ("example1".to_owned(), example1, TargetSet::of(&["smiley"])),
        ("example2".to_owned(), example2, TargetSet::of(&["q6"])),
    ]
}

/// Family with linear cutoff and quadratic covering length: the chain
/// `q0 -!a1-> q1 -?b1-> q2 -!a2-> ... -?bn-> smiley` with a `!bi` loop on each
/// `q(2i-1)`. `2n+1` states.
pub fn gen_lower_bound(n: usize) -> Result<(Protocol, TargetSet), InstanceError> {
    if n == 0 {
        return Err(InstanceError::ZeroSize);
    }
    let mut states: Vec<StateId> = (0..2 * n).map(|i| state(format!("q{i}"))).collect();
    states.push(state("smiley"));
    let mut messages = Vec::new();
    for i in 1..=n {
        messages.push(format!("a{i}").into());
    }
    for i in 1..=n {
        messages.push(format!("b{i}").into());
    }
    let mut transitions = Vec::new();
    for i in 1..=n {
        let odd = format!("q{}", 2 * i - 1);
        let next = if i == n {
            "smiley".to_owned()
        } else {
            format!("q{}", 2 * i)
        };
        transitions.push(Transition::broadcast(
            format!("q{}", 2 * i - 2),
            format!("a{i}"),
            odd.clone(),
        ));
        transitions.push(Transition::broadcast(
            odd.clone(),
            format!("b{i}"),
            odd.clone(),
        ));
        transitions.push(Transition::receive(odd, format!("b{i}"), next));
    }
    let p = Protocol {
        name: format!("lowerbound_{n}"),
        states,
        init: vec![state("q0")],
        messages,
        transitions,
    }
    .complete_receptions();
    Ok((p, TargetSet::of(&["smiley"])))
}

/// Family separating reconfigurable from lossy cutoffs: a `!a` loop feeding a
/// `q`-chain that emits `b1..bn`, an `r`-chain consuming them towards
/// `smiley`, and a `bot` sink for stray receptions at `q0`. `3n+2` states.
pub fn gen_succinctness(n: usize) -> Result<(Protocol, TargetSet), InstanceError> {
    if n == 0 {
        return Err(InstanceError::ZeroSize);
    }
    let mut states: Vec<StateId> = (0..=2 * n).map(|i| state(format!("q{i}"))).collect();
    for j in 1..n {
        states.push(state(format!("r{j}")));
    }
    states.push(state("bot"));
    states.push(state("smiley"));

    let mut messages = vec!["a".into()];
    for i in 1..=n {
        messages.push(format!("b{i}").into());
    }

    let mut transitions = vec![Transition::broadcast("q0", "a", "q0")];
    for i in 0..n {
        transitions.push(Transition::receive(
            format!("q{}", 2 * i),
            "a",
            format!("q{}", 2 * i + 1),
        ));
        transitions.push(Transition::broadcast(
            format!("q{}", 2 * i + 1),
            format!("b{}", i + 1),
            format!("q{}", 2 * i + 2),
        ));
    }
    for j in 1..=n {
        let source = if j == 1 {
            "q0".to_owned()
        } else {
            format!("r{}", j - 1)
        };
        let target = if j == n {
            "smiley".to_owned()
        } else {
            format!("r{j}")
        };
        transitions.push(Transition::receive(source, format!("b{j}"), target));
    }
    for i in 1..=n {
        transitions.push(Transition::receive("q0", format!("b{i}"), "bot"));
    }

    let p = Protocol {
        name: format!("succinct_{n}"),
        states,
        init: vec![state("q0")],
        messages,
        transitions,
    }
    .complete_receptions();
    Ok((p, TargetSet::of(&["smiley"])))
}

/// Family trading nodes for covering length: a `?a` chain to `qn`, broadcasts
/// `!bi` back to `q0`, and a reception chain from `qn` to `smiley`. `2n+1`
/// states.
pub fn gen_tradeoff(n: usize) -> Result<(Protocol, TargetSet), InstanceError> {
    if n == 0 {
        return Err(InstanceError::ZeroSize);
    }
    let mut states: Vec<StateId> = (0..=n).map(|i| state(format!("q{i}"))).collect();
    for j in 1..n {
        states.push(state(format!("r{j}")));
    }
    states.push(state("smiley"));

    let mut messages = vec!["a".into()];
    for i in 1..=n {
        messages.push(format!("b{i}").into());
    }

    let mut transitions = vec![Transition::broadcast("q0", "a", "q0")];
    for i in 0..n {
        transitions.push(Transition::receive(
            format!("q{i}"),
            "a",
            format!("q{}", i + 1),
        ));
    }
    for i in 1..=n {
        transitions.push(Transition::broadcast(
            format!("q{n}"),
            format!("b{i}"),
            "q0",
        ));
    }
    for j in 1..=n {
        let source = if j == 1 {
            format!("q{n}")
        } else {
            format!("r{}", j - 1)
        };
        let target = if j == n {
            "smiley".to_owned()
        } else {
            format!("r{j}")
        };
        transitions.push(Transition::receive(source, format!("b{j}"), target));
    }

    let p = Protocol {
        name: format!("tradeoff_{n}"),
        states,
        init: vec![state("q0")],
        messages,
        transitions,
    }
    .complete_receptions();
    Ok((p, TargetSet::of(&["smiley"])))
}

/// A SetCover instance: does some subcollection of at most `k` subsets cover
/// the universe?
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetCoverInstance {
    pub universe: Vec<String>,
    pub collection: Vec<Vec<String>>,
    pub k: usize,
}

fn check_instance(inst: &SetCoverInstance) -> Result<(), InstanceError> {
    if inst.universe.is_empty() {
        return Err(InstanceError::Malformed("universe is empty".into()));
    }
    if inst.collection.is_empty() {
        return Err(InstanceError::Malformed("collection is empty".into()));
    }
    for a in &inst.universe {
        if a.is_empty()
            || a.starts_with('!')
            || a.starts_with('?')
            || a.contains(':')
            || a.contains('#')
            || a.chars().any(char::is_whitespace)
        {
            return Err(InstanceError::Malformed(format!(
                "element '{a}' is not a valid identifier"
            )));
        }
        if inst.universe.iter().filter(|b| *b == a).count() > 1 {
            return Err(InstanceError::Malformed(format!("duplicate element '{a}'")));
        }
    }
    for (j, s) in inst.collection.iter().enumerate() {
        for a in s {
            if !inst.universe.contains(a) {
                return Err(InstanceError::Malformed(format!(
                    "subset {} mentions unknown element '{a}'",
                    j + 1
                )));
            }
            if s.iter().filter(|b| *b == a).count() > 1 {
                return Err(InstanceError::Malformed(format!(
                    "subset {} repeats element '{a}'",
                    j + 1
                )));
            }
        }
    }
    Ok(())
}

/// The MinCover reduction: subset states `s1..sm` loop on broadcasts of their
/// elements, a chain `q1..qn` consumes `a1..an` in order and ends in `smiley`.
/// Returns the reception-complete protocol, the target `{smiley}` and
/// `k' = k + 1`.
pub fn setcover_reduce(
    inst: &SetCoverInstance,
) -> Result<(Protocol, TargetSet, usize), InstanceError> {
    check_instance(inst)?;
    let n = inst.universe.len();
    let m = inst.collection.len();

    let mut states: Vec<StateId> = (1..=m).map(|j| state(format!("s{j}"))).collect();
    for i in 1..=n {
        states.push(state(format!("q{i}")));
    }
    states.push(state("smiley"));

    let mut init: Vec<StateId> = (1..=m).map(|j| state(format!("s{j}"))).collect();
    init.push(state("q1"));

    let messages = inst.universe.iter().map(|a| a.as_str().into()).collect();

    let mut transitions = Vec::new();
    for (j, subset) in inst.collection.iter().enumerate() {
        for a in &inst.universe {
            if subset.contains(a) {
                transitions.push(Transition::broadcast(
                    format!("s{}", j + 1),
                    a.clone(),
                    format!("s{}", j + 1),
                ));
            }
        }
    }
    for (i, a) in inst.universe.iter().enumerate() {
        let target = if i + 1 == n {
            "smiley".to_owned()
        } else {
            format!("q{}", i + 2)
        };
        transitions.push(Transition::receive(
            format!("q{}", i + 1),
            a.clone(),
            target,
        ));
    }

    let p = Protocol {
        name: "setcover".into(),
        states,
        init,
        messages,
        transitions,
    }
    .complete_receptions();
    Ok((p, TargetSet::of(&["smiley"]), inst.k + 1))
}

/// Exhaustive SetCover oracle: enumerates the `2^m` subcollections.
pub fn setcover_bruteforce(inst: &SetCoverInstance) -> Result<bool, InstanceError> {
    check_instance(inst)?;
    let m = inst.collection.len();
    if m > 20 {
        return Err(InstanceError::TooManySubsets { max: 20, got: m });
    }
    for mask in 0u32..(1 << m) {
        if (mask.count_ones() as usize) > inst.k {
            continue;
        }
        let covered =
            |a: &String| (0..m).any(|j| mask & (1 << j) != 0 && inst.collection[j].contains(a));
        if inst.universe.iter().all(covered) {
            return Ok(true);
        }
    }
    Ok(false)
}
