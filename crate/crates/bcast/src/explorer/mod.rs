//! Exact brute-force reachability at fixed node counts.
//!
//! Three engines sit behind one budgeted API:
//!
//! * reconfigurable semantics collapses to a counting abstraction — since the
//!   topology can be rewired before every broadcast and receptions are
//!   complete, the graph carries no information between steps, so
//!   configurations are multisets of states;
//! * static and lossy semantics keep their topology, so the explorer
//!   enumerates connected topologies up to isomorphism and runs a labelled
//!   BFS per class. A covering execution restricted to the covering node's
//!   component stays legal, so connected classes of size at most `k` decide
//!   every question about `k`-node networks;
//! * everything is capped by an explicit state/wall-time budget; exceeding it
//!   is an error, never a silent wrong answer.
//!
//! Distinct topology classes are explored by parallel workers; results merge
//! by set union or minimum, so the outcome does not depend on scheduling.

mod fixed;
mod multiset;
mod topology;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::protocol::{Protocol, StateId, TargetSet};
use crate::semantics::SemanticsKind;

pub use topology::{topology_classes, TopologyClass, MAX_TOPOLOGY_NODES};

/// Exploration caps. `max_states` bounds the number of distinct states kept
/// across the whole call (all node counts and topology classes together).
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub max_states: u64,
    pub max_wall: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_states: 10_000_000,
            max_wall: None,
        }
    }
}

impl Budget {
    pub fn states(max_states: u64) -> Self {
        Budget {
            max_states,
            max_wall: None,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ExploreError {
    #[error("state budget exceeded after {states_visited} states")]
    BudgetExceeded { states_visited: u64 },
    #[error("wall-clock budget exceeded after {states_visited} states")]
    WallTimeExceeded { states_visited: u64 },
    #[error("static/lossy exploration supports at most {max} nodes, got {k}")]
    TopologyTooLarge { k: usize, max: usize },
    #[error("protocol is not reception-complete; run complete_receptions first")]
    IncompleteReceptions,
    #[error("protocol has {0} states, the explorer supports at most 255")]
    TooManyStates(usize),
    #[error("initial state '{0}' is not declared")]
    UnknownInitState(String),
    #[error("node count {k} exceeds the supported maximum {max}")]
    NodeCountTooLarge { k: usize, max: usize },
    #[error("{op} is not defined for {sem} semantics")]
    UnsupportedSemantics {
        op: &'static str,
        sem: SemanticsKind,
    },
    #[error("node count must be at least 1")]
    ZeroNodes,
}

/// How much work a call did.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExploreStats {
    pub states_visited: u64,
}

/// A result paired with its exploration stats.
#[derive(Clone, Debug)]
pub struct Explored<T> {
    pub value: T,
    pub stats: ExploreStats,
}

/// Shared budget meter; charged once per stored state.
pub(crate) struct Meter {
    visited: AtomicU64,
    max_states: u64,
    deadline: Option<Instant>,
}

impl Meter {
    fn new(budget: &Budget) -> Self {
        Meter {
            visited: AtomicU64::new(0),
            max_states: budget.max_states,
            deadline: budget.max_wall.map(|d| Instant::now() + d),
        }
    }

    pub(crate) fn charge(&self, n: u64) -> Result<(), ExploreError> {
        let seen = self.visited.fetch_add(n, Ordering::Relaxed) + n;
        if seen > self.max_states {
            return Err(ExploreError::BudgetExceeded {
                states_visited: seen,
            });
        }
        if let Some(deadline) = self.deadline {
            // look at the clock on the first charge, then every so often
            if (seen == n || seen % 1024 < n) && Instant::now() > deadline {
                return Err(ExploreError::WallTimeExceeded {
                    states_visited: seen,
                });
            }
        }
        Ok(())
    }

    fn stats(&self) -> ExploreStats {
        ExploreStats {
            states_visited: self.visited.load(Ordering::Relaxed),
        }
    }
}

/// Compiled, index-based view of a protocol shared by all engines.
pub(crate) struct CompiledProtocol {
    pub n_states: usize,
    pub init: Vec<u16>,
    /// (source, message, target) triples in declaration order.
    pub broadcasts: Vec<(u16, u16, u16)>,
    pub bcasts_by_state: Vec<Vec<usize>>,
    /// `recv_targets[state][message]` in declaration order.
    pub recv_targets: Vec<Vec<Vec<u16>>>,
}

impl CompiledProtocol {
    pub(crate) fn new(p: &Protocol) -> Result<Self, ExploreError> {
        if p.states.len() > 255 {
            return Err(ExploreError::TooManyStates(p.states.len()));
        }
        let n_states = p.states.len();
        let n_msgs = p.messages.len();
        let sidx = |q: &StateId| p.states.iter().position(|s| s == q).map(|i| i as u16);
        let midx =
            |m: &crate::protocol::MsgId| p.messages.iter().position(|x| x == m).map(|i| i as u16);

        let mut init = Vec::new();
        for q in &p.init {
            let i = sidx(q).ok_or_else(|| ExploreError::UnknownInitState(q.0.clone()))?;
            if !init.contains(&i) {
                init.push(i);
            }
        }
        if init.is_empty() {
            return Err(ExploreError::IncompleteReceptions);
        }

        let mut broadcasts = Vec::new();
        let mut bcasts_by_state = vec![Vec::new(); n_states];
        let mut recv_targets = vec![vec![Vec::new(); n_msgs]; n_states];
        for t in &p.transitions {
            let (Some(src), Some(msg), Some(tgt)) =
                (sidx(&t.source), midx(t.message()), sidx(&t.target))
            else {
                continue;
            };
            if t.is_broadcast() {
                bcasts_by_state[src as usize].push(broadcasts.len());
                broadcasts.push((src, msg, tgt));
            } else {
                recv_targets[src as usize][msg as usize].push(tgt);
            }
        }
        if recv_targets
            .iter()
            .any(|per_msg| per_msg.iter().any(Vec::is_empty))
        {
            return Err(ExploreError::IncompleteReceptions);
        }
        Ok(CompiledProtocol {
            n_states,
            init,
            broadcasts,
            bcasts_by_state,
            recv_targets,
        })
    }
}

fn target_table(p: &Protocol, f: &TargetSet) -> Vec<bool> {
    p.states.iter().map(|q| f.contains(q)).collect()
}

/// Counting abstraction of a reconfigurable configuration.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MultisetConfig {
    pub counts: BTreeMap<StateId, usize>,
    pub total: usize,
}

/// The exact set of state multisets of size `k` reachable under the
/// reconfigurable semantics from initial multisets supported on `I`.
pub fn reconfig_reachable_multisets(
    p: &Protocol,
    k: usize,
    budget: &Budget,
) -> Result<Explored<Vec<MultisetConfig>>, ExploreError> {
    if k == 0 {
        return Err(ExploreError::ZeroNodes);
    }
    let cp = CompiledProtocol::new(p)?;
    let meter = Meter::new(budget);
    multiset::guard_space(&cp, k, budget)?;
    let outcome = multiset::run(&cp, k, None, true, &meter)?;
    let mut sets = outcome.multisets.expect("collection requested");
    sets.sort_unstable();
    let value = sets
        .into_iter()
        .map(|ms| {
            let counts = ms
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (p.states[i].clone(), c as usize))
                .collect();
            MultisetConfig { counts, total: k }
        })
        .collect();
    Ok(Explored {
        value,
        stats: meter.stats(),
    })
}

/// Union of states appearing in some reachable configuration with `k` nodes
/// (for static and lossy semantics: on any topology with at most `k` nodes,
/// which by padding with isolated nodes is the same thing).
pub fn coverable_states(
    p: &Protocol,
    sem: SemanticsKind,
    k: usize,
    budget: &Budget,
) -> Result<Explored<Vec<StateId>>, ExploreError> {
    if k == 0 {
        return Err(ExploreError::ZeroNodes);
    }
    let cp = CompiledProtocol::new(p)?;
    let meter = Meter::new(budget);
    let covered = match sem {
        SemanticsKind::Reconfigurable => {
            multiset::guard_space(&cp, k, budget)?;
            multiset::run(&cp, k, None, false, &meter)?.support
        }
        SemanticsKind::Static | SemanticsKind::Lossy => sweep_covered_union(&cp, sem, k, &meter)?,
    };
    let value = p
        .states
        .iter()
        .enumerate()
        .filter(|(i, _)| covered[*i])
        .map(|(_, q)| q.clone())
        .collect();
    Ok(Explored {
        value,
        stats: meter.stats(),
    })
}

/// Least `k <= k_max` admitting a covering execution, scanning node counts
/// upwards.
pub fn exact_cutoff(
    p: &Protocol,
    f: &TargetSet,
    sem: SemanticsKind,
    k_max: usize,
    budget: &Budget,
) -> Result<Explored<Option<usize>>, ExploreError> {
    let cp = CompiledProtocol::new(p)?;
    let targets = target_table(p, f);
    let meter = Meter::new(budget);
    for k in 1..=k_max {
        let covered = match sem {
            SemanticsKind::Reconfigurable => {
                multiset::guard_space(&cp, k, budget)?;
                multiset::run(&cp, k, Some(&targets), false, &meter)?
                    .cover_layer
                    .is_some()
            }
            SemanticsKind::Static | SemanticsKind::Lossy => {
                let classes = topology_classes(k)?;
                let found = AtomicBool::new(false);
                classes.par_iter().filter(|tc| tc.connected).try_for_each(
                    |tc| -> Result<(), ExploreError> {
                        if found.load(Ordering::Relaxed) {
                            return Ok(());
                        }
                        let search = fixed::FixedTopologySearch::new(&cp, tc, sem);
                        if search.cover_layer(&targets, &meter)?.is_some() {
                            found.store(true, Ordering::Relaxed);
                        }
                        Ok(())
                    },
                )?;
                found.into_inner()
            }
        };
        if covered {
            return Ok(Explored {
                value: Some(k),
                stats: meter.stats(),
            });
        }
    }
    Ok(Explored {
        value: None,
        stats: meter.stats(),
    })
}

/// Length of a shortest covering execution with exactly `k` nodes, if any.
pub fn min_cover_length(
    p: &Protocol,
    f: &TargetSet,
    sem: SemanticsKind,
    k: usize,
    budget: &Budget,
) -> Result<Explored<Option<usize>>, ExploreError> {
    if k == 0 {
        return Err(ExploreError::ZeroNodes);
    }
    let cp = CompiledProtocol::new(p)?;
    let targets = target_table(p, f);
    let meter = Meter::new(budget);
    let value = match sem {
        SemanticsKind::Reconfigurable => {
            multiset::guard_space(&cp, k, budget)?;
            multiset::run(&cp, k, Some(&targets), false, &meter)?.cover_layer
        }
        SemanticsKind::Static | SemanticsKind::Lossy => {
            // isolated padding embeds any smaller connected class into a
            // k-node network without touching lengths
            let mut all = Vec::new();
            for size in 1..=k {
                let classes = topology_classes(size)?;
                all.extend(classes.iter().filter(|tc| tc.connected).cloned());
            }
            all.par_iter()
                .map(|tc| {
                    let search = fixed::FixedTopologySearch::new(&cp, tc, sem);
                    search.cover_layer(&targets, &meter)
                })
                .try_reduce(
                    || None,
                    |a, b| {
                        Ok(match (a, b) {
                            (Some(x), Some(y)) => Some(x.min(y)),
                            (x, None) => x,
                            (None, y) => y,
                        })
                    },
                )?
        }
    };
    Ok(Explored {
        value,
        stats: meter.stats(),
    })
}

/// Is the target coverable with exactly `k` nodes? By the copycat properties
/// a cover with fewer nodes extends to one with exactly `k`, so this is
/// `exact_cutoff(..., k) <= k`. Defined for reconfigurable and lossy
/// executions only.
pub fn mincover_decide(
    p: &Protocol,
    f: &TargetSet,
    k: usize,
    sem: SemanticsKind,
    budget: &Budget,
) -> Result<Explored<bool>, ExploreError> {
    if sem == SemanticsKind::Static {
        return Err(ExploreError::UnsupportedSemantics {
            op: "mincover_decide",
            sem,
        });
    }
    if k == 0 {
        return Ok(Explored {
            value: false,
            stats: ExploreStats::default(),
        });
    }
    let cutoff = exact_cutoff(p, f, sem, k, budget)?;
    Ok(Explored {
        value: cutoff.value.is_some(),
        stats: cutoff.stats,
    })
}

fn sweep_covered_union(
    cp: &CompiledProtocol,
    sem: SemanticsKind,
    k: usize,
    meter: &Meter,
) -> Result<Vec<bool>, ExploreError> {
    let union = Mutex::new(vec![false; cp.n_states]);
    let saturated = AtomicBool::new(false);
    for size in 1..=k {
        let classes = topology_classes(size)?;
        classes.par_iter().filter(|tc| tc.connected).try_for_each(
            |tc| -> Result<(), ExploreError> {
                if saturated.load(Ordering::Relaxed) {
                    return Ok(());
                }
                let search = fixed::FixedTopologySearch::new(cp, tc, sem);
                let local = search.covered_union(meter)?;
                let mut total = union.lock().expect("no panics while holding the lock");
                for (t, l) in total.iter_mut().zip(&local) {
                    *t |= l;
                }
                if total.iter().all(|&b| b) {
                    saturated.store(true, Ordering::Relaxed);
                }
                Ok(())
            },
        )?;
        if saturated.load(Ordering::Relaxed) {
            break;
        }
    }
    Ok(union.into_inner().expect("no poisoned lock"))
}
