use std::collections::{BTreeSet, HashMap, HashSet};

use proptest::prelude::*;
use sdncheck::canonical::{decode_state, Canonical};
use sdncheck::controller::{check_order_sensitivity, Emission, HandlerOutput};
use sdncheck::model::*;
use sdncheck::proplang::StatePredicate;
use sdncheck::*;

fn scenario(name: &str, c: u16, s: u16) -> (Topology, LoadBalancer, GlobalState, Property) {
    let cfg = generate_topology(c, s, 1).unwrap();
    let topo = build_topology(&cfg).unwrap();
    let cp = builtin_controller(name, &topo).unwrap();
    let s0 = initial_state(&topo, cfg.workload.as_ref().unwrap(), &cp).unwrap();
    let phi = builtin_property("lb-fairness-firewall", &topo, 2).unwrap();
    (topo, cp, s0, phi)
}

/// Plain worklist closure over whole states, no hashing tricks.
fn enumerate(
    topo: &Topology,
    s0: &GlobalState,
    cp: &dyn ControllerProgram,
) -> HashSet<GlobalState> {
    let mut seen = HashSet::new();
    let mut work = vec![s0.clone()];
    while let Some(s) = work.pop() {
        if !seen.insert(s.clone()) {
            continue;
        }
        for a in enabled_actions(&s, topo, cp) {
            work.push(apply(&s, &a, topo, cp));
        }
    }
    seen
}

#[test]
fn explorer_finds_exactly_the_enumerated_states() {
    for (name, c, s) in [
        ("rr-naive", 2, 1),
        ("lc-naive", 2, 2),
        ("lc-rebalance", 2, 2),
        ("lc-rebalance", 1, 1),
    ] {
        let (topo, cp, s0, _) = scenario(name, c, s);
        let oracle: BTreeSet<StateDigest> = enumerate(&topo, &s0, &cp)
            .iter()
            .map(canonical_hash)
            .collect();
        assert_eq!(
            sdncheck::explorer::reachable_digests(&topo, &s0, &cp),
            oracle,
            "{name} {c}/{s}"
        );
    }
}

#[test]
fn digests_separate_distinct_states() {
    let (topo, cp, s0, _) = scenario("lc-rebalance", 2, 2);
    let states = enumerate(&topo, &s0, &cp);
    let mut by_digest: HashMap<StateDigest, Vec<u8>> = HashMap::new();
    for s in &states {
        let bytes = s.canonical_bytes();
        assert_eq!(decode_state(&bytes, &s0.ctrl.cs).as_ref(), Some(s));
        if let Some(prev) = by_digest.insert(canonical_hash(s), bytes.clone()) {
            assert_eq!(prev, bytes, "digest collision");
        }
    }
    assert_eq!(by_digest.len(), states.len());
}

#[test]
fn reduced_space_is_a_subset_with_the_same_verdict() {
    for (name, c, s) in [
        ("rr-naive", 2, 1),
        ("lc-naive", 2, 2),
        ("lc-rebalance", 2, 2),
    ] {
        let (topo, cp, s0, phi) = scenario(name, c, s);
        let run = |por: bool| {
            explore(
                &topo,
                &s0,
                &cp,
                &phi,
                &ExplorationOptions {
                    por,
                    assume_invariant: true,
                    record_graph: true,
                    audit: true,
                    ..Default::default()
                },
            )
        };
        let full = run(false);
        let reduced = run(true);
        assert_eq!(full.verdict, reduced.verdict, "{name}");
        assert!(reduced.states_explored <= full.states_explored);
        assert!(reduced.transitions_fired <= full.transitions_fired);
        let digests = |r: &ExplorationReport| -> BTreeSet<StateDigest> {
            r.graph
                .as_ref()
                .unwrap()
                .nodes
                .iter()
                .map(|n| n.digest)
                .collect()
        };
        assert!(digests(&reduced).is_subset(&digests(&full)), "{name}");
        let audit = reduced.audit.unwrap();
        assert_eq!(audit.c1_failures, 0);
        assert_eq!(audit.c3_failures, 0);
        assert_eq!(audit.fsync_shrink_failures, 0);
        assert_eq!(audit.barrier_failures, 0);
        assert!(sdncheck::por::audit_c4(reduced.graph.as_ref().unwrap()));
    }
}

#[test]
fn por_without_assertion_is_a_no_op_for_phi() {
    let (topo, cp, s0, phi) = scenario("lc-rebalance", 2, 2);
    let run = |por: bool| {
        explore(
            &topo,
            &s0,
            &cp,
            &phi,
            &ExplorationOptions {
                por,
                ..Default::default()
            },
        )
    };
    let (a, b) = (run(false), run(true));
    assert_eq!(a.states_explored, b.states_explored);
    assert_eq!(a.transitions_fired, b.transitions_fired);
}

/// Flow-removed handling overwrites a register that packet-in also writes,
/// so the two handlers do not commute.
struct Clobber;

impl ControllerProgram for Clobber {
    fn name(&self) -> &str {
        "clobber"
    }
    fn initial_state(&self) -> ControllerState {
        ControllerState::new([("x", RegValue::Int(0))])
    }
    fn packet_in(&self, pkt: &Packet, sw: SwitchId, cs: &ControllerState) -> HandlerOutput {
        let mut cs = cs.clone();
        cs.set_int("x", 2);
        let rule = Rule::new(
            Some(pkt.src),
            None,
            None,
            FwdAction::Port(PortId(2)),
            1,
            true,
        )
        .unwrap();
        HandlerOutput {
            cs,
            emissions: vec![Emission::Message {
                sw,
                msg: ControlMessage::add(rule),
            }],
        }
    }
    fn barrier_reply(&self, _: BarrierId, _: SwitchId, cs: &ControllerState) -> HandlerOutput {
        HandlerOutput::unchanged(cs)
    }
    fn flow_removed(&self, _: &Rule, _: SwitchId, cs: &ControllerState) -> HandlerOutput {
        let mut cs = cs.clone();
        cs.set_int("x", 1);
        HandlerOutput {
            cs,
            emissions: vec![],
        }
    }
    fn declared_order_insensitive(&self) -> bool {
        false
    }
    fn registers_written_by_flow_removed(&self) -> BTreeSet<String> {
        ["x".to_string()].into()
    }
}

#[test]
fn order_sensitive_controller_is_detected_and_not_reduced() {
    let topo = build_topology(&generate_topology(1, 1, 0).unwrap()).unwrap();
    let cp = Clobber;
    let cfg = generate_topology(1, 1, 0).unwrap();
    let s0 = initial_state(&topo, cfg.workload.as_ref().unwrap(), &cp).unwrap();
    let states: Vec<GlobalState> = enumerate(&topo, &s0, &cp).into_iter().collect();
    let report = check_order_sensitivity(&cp, &topo, &states);
    assert!(!report.is_empty());
    assert!(report.witnesses.iter().any(
        |w| [w.first.kind(), w.second.kind()].contains(&sdncheck::semantics::ActionKind::Fsync)
    ));

    let p = Property::invariant_only(StatePredicate::True);
    let run = |por: bool| {
        explore(
            &topo,
            &s0,
            &cp,
            &p,
            &ExplorationOptions {
                por,
                ..Default::default()
            },
        )
    };
    let (a, b) = (run(false), run(true));
    assert_eq!(a.states_explored, b.states_explored);
    assert_eq!(a.states_explored, states.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Random walks stay inside the explored space, and hashing and decoding
    /// are stable along them.
    #[test]
    fn random_walks_stay_in_reachable_set(choices in proptest::collection::vec(any::<u16>(), 0..60)) {
        let (topo, cp, s0, _) = scenario("lc-rebalance", 2, 1);
        let reach = sdncheck::explorer::reachable_digests(&topo, &s0, &cp);
        let mut s = s0.clone();
        for c in choices {
            prop_assert!(reach.contains(&canonical_hash(&s)));
            prop_assert_eq!(canonical_hash(&s), canonical_hash(&s.clone()));
            prop_assert_eq!(decode_state(&s.canonical_bytes(), &s0.ctrl.cs), Some(s.clone()));
            let en = enabled_actions(&s, &topo, &cp);
            if en.is_empty() {
                break;
            }
            s = apply(&s, &en[c as usize % en.len()], &topo, &cp);
        }
    }
}
