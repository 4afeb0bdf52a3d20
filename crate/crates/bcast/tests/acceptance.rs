//! Acceptance suite: one test per criterion, each printing a pass line with
//! its elapsed time (run with `--nocapture` to see them). The tests serialize
//! on a shared lock so the per-criterion time limits stay honest on a loaded
//! machine.

mod common;

use std::collections::BTreeSet;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use bcast::explorer::{self, Budget};
use bcast::instances::{
    gen_examples, gen_lower_bound, gen_succinctness, gen_tradeoff, setcover_bruteforce,
    setcover_reduce, SetCoverInstance,
};
use bcast::protocol::{Protocol, StateId, TargetSet};
use bcast::saturation::saturate;
use bcast::semantics::{replay, SemanticsKind};
use bcast::witness::{synthesize_lossy_witness, synthesize_reconfig_witness};

static GATE: Mutex<()> = Mutex::new(());

fn criterion(name: &str, limit: Duration, body: impl FnOnce()) {
    let _guard = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    body();
    let elapsed = started.elapsed();
    assert!(
        elapsed <= limit,
        "{name} took {elapsed:?}, over the {limit:?} limit"
    );
    println!("[PASS] {name} ({elapsed:.2?}, limit {limit:?})");
}

fn covered_set(p: &Protocol) -> BTreeSet<StateId> {
    saturate(p).covered().iter().cloned().collect()
}

/// Criterion 1: on 200 random reception-completed protocols (|Q| <= 5,
/// |M| <= 3, up to 12 declared transitions), the saturation set equals the
/// union of supports of the reachable multisets at k = 2|Q|.
#[test]
fn criterion_1_saturation_matches_the_multiset_oracle() {
    criterion(
        "criterion 1: saturation vs multiset oracle on 200 protocols",
        Duration::from_secs(60),
        || {
            let mut rng = common::rng(0xC001);
            for i in 0..200 {
                let p = common::random_protocol(&mut rng, 5, 3, 12);
                let sat = covered_set(&p);
                let k = 2 * p.states.len();
                let reach = explorer::reconfig_reachable_multisets(&p, k, &Budget::default())
                    .expect("within budget");
                let mut union: BTreeSet<StateId> = BTreeSet::new();
                for ms in &reach.value {
                    union.extend(ms.counts.keys().cloned());
                }
                assert_eq!(sat, union, "protocol #{i}:\n{}", bcast::dsl::render(&p));
            }
        },
    );
}

/// Criterion 2: on the same corpus, for every coverable target the
/// synthesized reconfigurable and lossy witnesses replay legally with
/// size <= 2|Q| - |I| and length <= 2|Q|^2; lossy witnesses keep every node's
/// real active length at most 1.
#[test]
fn criterion_2_witness_bounds_hold_on_the_corpus() {
    criterion(
        "criterion 2: witness bounds over the corpus",
        Duration::from_secs(60),
        || {
            let mut rng = common::rng(0xC001);
            for i in 0..200 {
                let p = common::random_protocol(&mut rng, 5, 3, 12);
                let trace = saturate(&p);
                let n_states = p.states.len();
                let n_init = trace.sets[0].len();
                for q in trace.covered() {
                    let f = TargetSet::new([q.clone()]);
                    let ctx = |kind: &str| {
                        format!(
                            "protocol #{i}, target {q}, {kind}:\n{}",
                            bcast::dsl::render(&p)
                        )
                    };

                    let e =
                        synthesize_reconfig_witness(&p, &f).expect("coverable targets synthesize");
                    let r = replay(&e, &p).expect("witnesses replay");
                    assert!(
                        bcast::covers(&r.final_config, &f),
                        "{}",
                        ctx("reconfig cover")
                    );
                    assert!(
                        r.metrics.size <= 2 * n_states - n_init,
                        "{}",
                        ctx("reconfig size")
                    );
                    assert!(
                        r.metrics.length <= 2 * n_states * n_states,
                        "{}",
                        ctx("reconfig length")
                    );

                    let e = synthesize_lossy_witness(&p, &f).expect("coverable targets synthesize");
                    let r = replay(&e, &p).expect("witnesses replay");
                    assert!(bcast::covers(&r.final_config, &f), "{}", ctx("lossy cover"));
                    assert!(
                        r.metrics.size <= 2 * n_states - n_init,
                        "{}",
                        ctx("lossy size")
                    );
                    assert!(
                        r.metrics.length <= 2 * n_states * n_states,
                        "{}",
                        ctx("lossy length")
                    );
                    assert!(
                        r.metrics.max_real_active_length() <= 1,
                        "{}",
                        ctx("lossy rlen")
                    );
                }
            }
        },
    );
}

/// Criterion 3: the linear-cutoff family has reconfigurable cutoff n + 1 and
/// minimal covering length (n^2 + 5n) / 2 at that size, attained exactly.
#[test]
fn criterion_3_lower_bound_family_exact_values() {
    criterion(
        "criterion 3: lower-bound family cutoffs and lengths",
        Duration::from_secs(120),
        || {
            for n in 1..=3usize {
                let (p, f) = gen_lower_bound(n).unwrap();
                let cutoff = explorer::exact_cutoff(
                    &p,
                    &f,
                    SemanticsKind::Reconfigurable,
                    n + 1,
                    &Budget::default(),
                )
                .expect("within budget");
                assert_eq!(cutoff.value, Some(n + 1), "cutoff at n = {n}");
                let length = explorer::min_cover_length(
                    &p,
                    &f,
                    SemanticsKind::Reconfigurable,
                    n + 1,
                    &Budget::default(),
                )
                .expect("within budget");
                assert_eq!(
                    length.value,
                    Some((n * n + 5 * n) / 2),
                    "covering length at n = {n}"
                );
            }
        },
    );
}

/// Criterion 4: the succinctness family separates the semantics: at n = 3 the
/// reconfigurable cutoff is 3 while the lossy cutoff is 4; at n = 4 the lossy
/// cutoff is 5.
#[test]
fn criterion_4_succinctness_separation() {
    criterion(
        "criterion 4: reconfigurable vs lossy cutoff separation",
        Duration::from_secs(600),
        || {
            let (p, f) = gen_succinctness(3).unwrap();
            let reconfig = explorer::exact_cutoff(
                &p,
                &f,
                SemanticsKind::Reconfigurable,
                3,
                &Budget::default(),
            )
            .expect("within budget");
            assert_eq!(reconfig.value, Some(3));
            let lossy = explorer::exact_cutoff(&p, &f, SemanticsKind::Lossy, 4, &Budget::default())
                .expect("within budget");
            assert_eq!(lossy.value, Some(4));

            let (p, f) = gen_succinctness(4).unwrap();
            let lossy = explorer::exact_cutoff(&p, &f, SemanticsKind::Lossy, 5, &Budget::default())
                .expect("within budget");
            assert_eq!(lossy.value, Some(5));
        },
    );
}

/// Criterion 5: on 50 random protocols with |Q| <= 4, the set of states
/// coverable under lossy semantics with at most 2|Q| nodes (brute force over
/// topologies) equals the saturation set.
#[test]
fn criterion_5_lossy_explorer_agrees_with_saturation() {
    criterion(
        "criterion 5: lossy coverable set vs saturation on 50 protocols",
        Duration::from_secs(600),
        || {
            // the sweep visits every connected topology class up to 8 nodes, so it
            // needs more headroom than the default state budget
            let budget = Budget::states(u64::MAX);
            let mut rng = common::rng(0xC005);
            for i in 0..50 {
                let p = common::random_protocol(&mut rng, 4, 3, 12);
                let sat = covered_set(&p);
                let k = 2 * p.states.len();
                let started = Instant::now();
                let lossy = explorer::coverable_states(&p, SemanticsKind::Lossy, k, &budget)
                    .expect("within budget");
                let states: BTreeSet<StateId> = lossy.value.into_iter().collect();
                assert_eq!(states, sat, "protocol #{i}:\n{}", bcast::dsl::render(&p));
                if started.elapsed() > Duration::from_secs(5) {
                    println!(
                        "  (protocol #{i}: |Q| = {}, {} states, {:.2?})",
                        p.states.len(),
                        lossy.stats.states_visited,
                        started.elapsed()
                    );
                }
            }
        },
    );
}

/// Criterion 6: on every SetCover instance with n <= 3 elements and m <= 3
/// subsets (exhaustively enumerated) and every k <= m, the brute-force answer
/// equals MinCover of the reduced protocol at k' = k + 1, under both
/// reconfigurable and lossy semantics.
#[test]
fn criterion_6_setcover_reduction_is_correct_both_ways() {
    criterion(
        "criterion 6: SetCover vs MinCover on all small instances",
        Duration::from_secs(300),
        || {
            let budget = Budget::default();
            let mut checked = 0usize;
            for n in 1..=3usize {
                let universe: Vec<String> = (1..=n).map(|i| format!("e{i}")).collect();
                let subsets: Vec<Vec<String>> = (0u32..(1 << n))
                    .map(|mask| {
                        universe
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| mask & (1 << i) != 0)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                for m in 1..=3usize {
                    for collection in multisets_of(&subsets, m) {
                        for k in 0..=m {
                            let inst = SetCoverInstance {
                                universe: universe.clone(),
                                collection: collection.clone(),
                                k,
                            };
                            let expected = setcover_bruteforce(&inst).unwrap();
                            let (p, f, k_prime) = setcover_reduce(&inst).unwrap();
                            assert_eq!(k_prime, k + 1);
                            for sem in [SemanticsKind::Reconfigurable, SemanticsKind::Lossy] {
                                let got = explorer::mincover_decide(&p, &f, k_prime, sem, &budget)
                                    .expect("within budget");
                                assert_eq!(
                                    got.value, expected,
                                    "{sem} disagrees on U={universe:?} S={collection:?} k={k}",
                                );
                            }
                            checked += 1;
                        }
                    }
                }
            }
            println!("  ({checked} instances, both semantics)");
        },
    );
}

/// Criterion 7: worked-example regressions. example1 has reconfigurable
/// cutoff 3 for smiley and no static cover up to 4 nodes; the tradeoff family
/// at n = 2 covers strictly faster with 4 static nodes than with 3.
#[test]
fn criterion_7_worked_example_regressions() {
    criterion(
        "criterion 7: worked-example regressions",
        Duration::from_secs(300),
        || {
            let (_, p, f) = gen_examples().swap_remove(0);
            let reconfig = explorer::exact_cutoff(
                &p,
                &f,
                SemanticsKind::Reconfigurable,
                3,
                &Budget::default(),
            )
            .expect("within budget");
            assert_eq!(reconfig.value, Some(3));
            let static_search =
                explorer::exact_cutoff(&p, &f, SemanticsKind::Static, 4, &Budget::default())
                    .expect("within budget");
            assert_eq!(
                static_search.value, None,
                "smiley must stay uncovered statically"
            );

            let (p, f) = gen_tradeoff(2).unwrap();
            let at3 =
                explorer::min_cover_length(&p, &f, SemanticsKind::Static, 3, &Budget::default())
                    .expect("within budget")
                    .value
                    .expect("three nodes cover");
            let at4 =
                explorer::min_cover_length(&p, &f, SemanticsKind::Static, 4, &Budget::default())
                    .expect("within budget")
                    .value
                    .expect("four nodes cover");
            assert!(
                at3 > at4,
                "expected a strict node/length tradeoff, got {at3} vs {at4}"
            );
        },
    );
}

/// Criterion 8: the generated-input property suites (also runnable standalone
/// as the `properties` test target) hold with zero failures.
#[test]
fn criterion_8_property_suites() {
    criterion(
        "criterion 8: property suites over the corpus",
        Duration::from_secs(300),
        || {
            common::props::copycat_reconfig_preserves_labels_and_alen(0xC801, 40);
            common::props::copycat_lossy_never_really_sends(0xC802, 40);
            common::props::lossy_embedding_is_legal_and_label_preserving(0xC803, 40);
            common::props::mincover_decide_is_monotone_in_k(0xC804, 25);
        },
    );
}

/// Prints how the random corpus is distributed; handy when retuning the
/// generator. Not a criterion.
#[test]
#[ignore = "diagnostic only"]
fn corpus_profile() {
    let mut rng = common::rng(0xC001);
    let mut saturating = 0;
    let mut partial = 0;
    let mut inert = 0;
    let mut by_size = [0usize; 6];
    for _ in 0..200 {
        let p = common::random_protocol(&mut rng, 5, 3, 12);
        let t = saturate(&p);
        by_size[p.states.len()] += 1;
        if t.covered().len() == p.states.len() {
            saturating += 1;
        } else if t.iterations() > 0 {
            partial += 1;
        } else {
            inert += 1;
        }
    }
    println!(
        "corpus: sizes {by_size:?}, saturating {saturating}, partial {partial}, inert {inert}"
    );
}

/// Every multiset of size m over the given items, as sorted index tuples.
fn multisets_of<T: Clone>(items: &[T], m: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        out.push(idx.iter().map(|&i| items[i].clone()).collect());
        // next non-decreasing index tuple
        let mut pos = m;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < items.len() {
                for later in (pos + 1)..m {
                    idx[later] = idx[pos];
                }
                break;
            }
        }
    }
}
