//! Reachability search over the (optionally reduced) transition system with
//! invariant and obligation checking.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_hash, decode_state, Canonical, StateDigest};
use crate::controller::ControllerProgram;
use crate::model::*;
use crate::por::{
    ample, commutation_oracle, is_safe, ExploredGraph, GraphEdge, GraphNode, PorContext,
};
use crate::proplang::{eval_obligation, Property};
use crate::semantics::{enabled_actions, rebind, try_apply, Action, ActionKind};
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOrder {
    #[default]
    BreadthFirst,
    DepthFirst,
}

#[derive(Clone, Debug)]
pub struct ExplorationOptions {
    pub por: bool,
    pub search_order: SearchOrder,
    pub max_states: Option<usize>,
    pub time_limit: Option<Duration>,
    /// Keep nodes and edges for `audit_c4`.
    pub record_graph: bool,
    pub worker_count: usize,
    /// The user asserts fsync is invisible to the property.
    pub assume_invariant: bool,
    pub extra_safe_kinds: BTreeSet<ActionKind>,
    /// Check C1/C3, fsync shrinking, barrier order and (optionally)
    /// commutation on every expanded state.
    pub audit: bool,
    pub check_commutation: bool,
}

impl Default for ExplorationOptions {
    fn default() -> Self {
        ExplorationOptions {
            por: false,
            search_order: SearchOrder::BreadthFirst,
            max_states: None,
            time_limit: None,
            record_graph: false,
            worker_count: 1,
            assume_invariant: false,
            extra_safe_kinds: BTreeSet::new(),
            audit: false,
            check_commutation: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    BoundExceeded,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Violated => 1,
            Verdict::BoundExceeded => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: Action,
    /// Digest of the state reached.
    pub digest: StateDigest,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub initial: Option<StateDigest>,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn actions(&self) -> impl Iterator<Item = &Action> {
        self.steps.iter().map(|s| &s.action)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Invariant,
    Obligation { index: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub violation: Violation,
    pub trace: Trace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommutationFailure {
    pub state: StateDigest,
    pub fsync: Action,
    pub other: Action,
}

/// Results of the runtime reduction checks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PorAudit {
    pub states_checked: usize,
    /// `ample` empty while `enabled` is not, or not a subset of it.
    pub c1_failures: usize,
    /// A reduced ample set with an unsafe member.
    pub c3_failures: usize,
    pub fsync_fired: usize,
    /// fsync transitions that did not remove exactly one `frq` entry.
    pub fsync_shrink_failures: usize,
    /// FlowMod actions enabled from beyond the first control-queue segment.
    pub barrier_failures: usize,
    pub commutation_checks: usize,
    pub commutation_failures: Vec<CommutationFailure>,
    pub safe_fsync_states: usize,
}

impl PorAudit {
    pub fn clean(&self) -> bool {
        self.c1_failures == 0
            && self.c3_failures == 0
            && self.fsync_shrink_failures == 0
            && self.barrier_failures == 0
            && self.commutation_failures.is_empty()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExplorationReport {
    pub verdict: Verdict,
    pub states_explored: usize,
    pub transitions_fired: usize,
    pub elapsed_ms: u64,
    pub por: bool,
    pub max_depth: usize,
    pub counterexample: Option<Counterexample>,
    #[serde(skip)]
    pub audit: Option<PorAudit>,
    #[serde(skip)]
    pub graph: Option<ExploredGraph>,
}

/// Predecessor links of every discovered state. Handler labels are stored
/// without their controller state, which [`reconstruct_trace`] restores by
/// replay.
#[derive(Clone, Debug, Default)]
pub struct ParentMap {
    digests: Vec<StateDigest>,
    parents: Vec<Option<(u32, Action)>>,
    index: HashMap<StateDigest, u32>,
}

fn strip(action: Action) -> Action {
    match action {
        Action::Ctrl { sw, pkt, .. } => Action::Ctrl {
            sw,
            pkt,
            cs: ControllerState::default(),
        },
        Action::Bsync { sw, barrier, .. } => Action::Bsync {
            sw,
            barrier,
            cs: ControllerState::default(),
        },
        Action::Fsync { sw, rule, .. } => Action::Fsync {
            sw,
            rule,
            cs: ControllerState::default(),
        },
        other => other,
    }
}

impl ParentMap {
    pub fn insert(
        &mut self,
        digest: StateDigest,
        parent: Option<(usize, Action)>,
    ) -> Option<usize> {
        if self.index.contains_key(&digest) {
            return None;
        }
        let id = self.digests.len();
        self.digests.push(digest);
        self.parents.push(parent.map(|(p, a)| (p as u32, strip(a))));
        self.index.insert(digest, id as u32);
        Some(id)
    }

    pub fn len(&self) -> usize {
        self.digests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digests.is_empty()
    }

    pub fn node_of(&self, digest: &StateDigest) -> Option<usize> {
        self.index.get(digest).map(|&i| i as usize)
    }

    pub fn digests(&self) -> &[StateDigest] {
        &self.digests
    }

    fn path(&self, node: usize) -> Vec<&Action> {
        let mut path = Vec::new();
        let mut cur = node;
        while let Some((p, action)) = &self.parents[cur] {
            path.push(action);
            cur = *p as usize;
        }
        path.reverse();
        path
    }
}

/// Path of recorded actions from the initial state `s0` to `node`, replayed
/// to restore handler labels and to confirm every digest.
pub fn reconstruct_trace(
    parents: &ParentMap,
    node: usize,
    s0: &GlobalState,
    topo: &Topology,
    cp: &dyn ControllerProgram,
) -> Option<Trace> {
    if node >= parents.len() || canonical_hash(s0) != parents.digests[0] {
        return None;
    }
    let mut s = s0.clone();
    let mut steps = Vec::new();
    for action in parents.path(node) {
        let action = rebind(action, &s);
        s = try_apply(&s, &action, topo, cp).ok()?;
        steps.push(TraceStep {
            action,
            digest: canonical_hash(&s),
        });
    }
    if steps
        .last()
        .is_some_and(|st| st.digest != parents.digests[node])
    {
        return None;
    }
    Some(Trace {
        initial: Some(parents.digests[0]),
        steps,
    })
}

/// Replays `trace` from `s0`, checking every step is enabled and reaches the
/// recorded digest. Returns the final state.
pub fn replay(
    s0: &GlobalState,
    trace: &Trace,
    topo: &Topology,
    cp: &dyn ControllerProgram,
) -> Option<GlobalState> {
    if trace.initial.is_some_and(|d| d != canonical_hash(s0)) {
        return None;
    }
    let mut s = s0.clone();
    for step in &trace.steps {
        s = try_apply(&s, &step.action, topo, cp).ok()?;
        if canonical_hash(&s) != step.digest {
            return None;
        }
    }
    Some(s)
}

fn violation_replays(
    s0: &GlobalState,
    cx: &Counterexample,
    topo: &Topology,
    cp: &dyn ControllerProgram,
    property: &Property,
) -> bool {
    let Some(end) = replay(s0, &cx.trace, topo, cp) else {
        return false;
    };
    match cx.violation {
        Violation::Invariant => !property.invariant.eval(&end),
        Violation::Obligation { index } => {
            cx.trace.steps.last().is_some_and(|last| {
                !eval_obligation(&property.obligations[index], &last.action, &end)
            })
        }
    }
}

/// One fired transition, with the successor kept only in encoded form.
struct Fired {
    action: Action,
    bytes: Vec<u8>,
    digest: StateDigest,
    frq_len: usize,
    invariant_holds: bool,
    broken_obligation: Option<usize>,
}

struct Expansion {
    enabled_len: usize,
    fired: Vec<Fired>,
    audit: PorAudit,
}

struct Explorer<'a> {
    topo: &'a Topology,
    cp: &'a dyn ControllerProgram,
    property: &'a Property,
    opts: &'a ExplorationOptions,
    ctx: PorContext<'a>,
}

impl Explorer<'_> {
    fn expand(&self, s: &GlobalState, digest: StateDigest) -> Expansion {
        let enabled = enabled_actions(s, self.topo, self.cp);
        let chosen = if self.opts.por {
            ample(&enabled, &self.ctx)
        } else {
            enabled.clone()
        };
        let mut audit = PorAudit::default();
        if self.opts.audit {
            self.audit_state(s, digest, &enabled, &chosen, &mut audit);
        }
        let fired = chosen
            .into_iter()
            .map(|action| {
                let next = try_apply(s, &action, self.topo, self.cp)
                    .unwrap_or_else(|e| panic!("enabled action failed to apply: {e}"));
                if self.opts.audit && action.kind() == ActionKind::Fsync {
                    audit.fsync_fired += 1;
                    if next.ctrl.frq.len() + 1 != s.ctrl.frq.len() {
                        audit.fsync_shrink_failures += 1;
                    }
                }
                let bytes = next.canonical_bytes();
                let broken_obligation = self
                    .property
                    .obligations
                    .iter()
                    .position(|o| !eval_obligation(o, &action, &next));
                Fired {
                    digest: StateDigest::of_bytes(&bytes),
                    bytes,
                    frq_len: next.ctrl.frq.len(),
                    invariant_holds: self.property.invariant.eval(&next),
                    broken_obligation,
                    action,
                }
            })
            .collect();
        Expansion {
            enabled_len: enabled.len(),
            fired,
            audit,
        }
    }

    fn audit_state(
        &self,
        s: &GlobalState,
        digest: StateDigest,
        enabled: &[Action],
        chosen: &[Action],
        audit: &mut PorAudit,
    ) {
        audit.states_checked += 1;
        if chosen.is_empty() != enabled.is_empty() || !chosen.iter().all(|a| enabled.contains(a)) {
            audit.c1_failures += 1;
        }
        if chosen.len() != enabled.len() && !chosen.iter().all(|a| is_safe(a, &self.ctx)) {
            audit.c3_failures += 1;
        }
        for a in enabled {
            let fm = match a {
                Action::Add { sw, rule } => Some((*sw, FlowMod::Add { rule: *rule })),
                Action::Del { sw, rule } => Some((*sw, FlowMod::Del { rule: *rule })),
                Action::Mod { sw, pattern, patch } => Some((
                    *sw,
                    FlowMod::Mod {
                        pattern: *pattern,
                        patch: *patch,
                    },
                )),
                _ => None,
            };
            if let Some((sw, fm)) = fm {
                if !s
                    .switch(sw)
                    .cq
                    .first()
                    .is_some_and(|seg| seg.mods.contains(&fm))
                {
                    audit.barrier_failures += 1;
                }
            }
        }
        let safe: Vec<&Action> = enabled
            .iter()
            .filter(|a| a.kind() == ActionKind::Fsync && is_safe(a, &self.ctx))
            .collect();
        if !safe.is_empty() {
            audit.safe_fsync_states += 1;
        }
        if self.opts.check_commutation {
            for f in safe {
                for other in enabled.iter().filter(|o| *o != f) {
                    audit.commutation_checks += 1;
                    if !commutation_oracle(s, f, other, self.topo, self.cp) {
                        audit.commutation_failures.push(CommutationFailure {
                            state: digest,
                            fsync: f.clone(),
                            other: other.clone(),
                        });
                    }
                }
            }
        }
    }
}

fn merge_audit(into: &mut PorAudit, from: PorAudit) {
    into.states_checked += from.states_checked;
    into.c1_failures += from.c1_failures;
    into.c3_failures += from.c3_failures;
    into.fsync_fired += from.fsync_fired;
    into.fsync_shrink_failures += from.fsync_shrink_failures;
    into.barrier_failures += from.barrier_failures;
    into.commutation_checks += from.commutation_checks;
    into.commutation_failures.extend(from.commutation_failures);
    into.safe_fsync_states += from.safe_fsync_states;
}

/// A discovered state waiting to be expanded.
struct Pending {
    node: usize,
    depth: usize,
    bytes: Vec<u8>,
}

/// Explores every state reachable from `s0`, stopping at the first
/// violation.
///
/// # Panics
///
/// If a counterexample fails to replay, which indicates a bug in the
/// checker rather than in the model.
pub fn explore(
    topo: &Topology,
    s0: &GlobalState,
    cp: &dyn ControllerProgram,
    property: &Property,
    opts: &ExplorationOptions,
) -> ExplorationReport {
    let start = Instant::now();
    let ex = Explorer {
        topo,
        cp,
        property,
        opts,
        ctx: PorContext {
            cp,
            property,
            assume_invariant: opts.assume_invariant,
            extra_safe_kinds: &opts.extra_safe_kinds,
        },
    };
    let mut parents = ParentMap::default();
    let mut graph = opts.record_graph.then(ExploredGraph::default);
    let mut audit = opts.audit.then(PorAudit::default);
    let mut transitions = 0usize;
    let mut max_depth = 0usize;

    let finish = |verdict, parents: &ParentMap, cx, transitions, max_depth, audit, graph| {
        ExplorationReport {
            verdict,
            states_explored: parents.len(),
            transitions_fired: transitions,
            elapsed_ms: start.elapsed().as_millis() as u64,
            por: opts.por,
            max_depth,
            counterexample: cx,
            audit,
            graph,
        }
    };

    let counterexample = |trace: Option<Trace>, violation: Violation| -> Counterexample {
        let cx = Counterexample {
            violation,
            trace: trace.expect("recorded path replays"),
        };
        assert!(
            violation_replays(s0, &cx, topo, cp, property),
            "counterexample failed to replay"
        );
        cx
    };

    let bytes0 = s0.canonical_bytes();
    let d0 = StateDigest::of_bytes(&bytes0);
    parents.insert(d0, None);
    if let Some(g) = graph.as_mut() {
        g.nodes.push(GraphNode {
            digest: d0,
            fully_expanded: true,
            frq_len: s0.ctrl.frq.len(),
        });
    }
    if !property.invariant.eval(s0) {
        let cx = counterexample(
            reconstruct_trace(&parents, 0, s0, topo, cp),
            Violation::Invariant,
        );
        return finish(Verdict::Violated, &parents, Some(cx), 0, 0, audit, graph);
    }

    let pool = (opts.worker_count > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.worker_count)
            .build()
            .expect("thread pool")
    });
    let template = &s0.ctrl.cs;
    let bfs = opts.search_order == SearchOrder::BreadthFirst;
    let mut pending = vec![Pending {
        node: 0,
        depth: 0,
        bytes: bytes0,
    }];

    while !pending.is_empty() {
        if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            return finish(
                Verdict::BoundExceeded,
                &parents,
                None,
                transitions,
                max_depth,
                audit,
                graph,
            );
        }
        // Breadth-first expands a whole level at once; depth-first pops one.
        let batch: Vec<Pending> = if bfs {
            std::mem::take(&mut pending)
        } else {
            vec![pending.pop().expect("non-empty")]
        };
        let expand = |p: &Pending| {
            let s = decode_state(&p.bytes, template).expect("frontier state decodes");
            ex.expand(&s, parents.digests[p.node])
        };
        let expansions: Vec<Expansion> = match &pool {
            Some(pool) => pool.install(|| batch.par_iter().map(expand).collect()),
            None => batch.iter().map(expand).collect(),
        };

        let mut next_level = Vec::new();
        for (p, exp) in batch.into_iter().zip(expansions) {
            drop(p.bytes);
            if let Some(a) = audit.as_mut() {
                merge_audit(a, exp.audit);
            }
            if let Some(g) = graph.as_mut() {
                g.nodes[p.node].fully_expanded = exp.fired.len() == exp.enabled_len;
            }
            for f in exp.fired {
                transitions += 1;
                let child = parents.insert(f.digest, Some((p.node, f.action.clone())));
                if child.is_some() {
                    max_depth = max_depth.max(p.depth + 1);
                    if let Some(g) = graph.as_mut() {
                        g.nodes.push(GraphNode {
                            digest: f.digest,
                            fully_expanded: true,
                            frq_len: f.frq_len,
                        });
                    }
                }
                if let Some(g) = graph.as_mut() {
                    let to = child.unwrap_or_else(|| parents.node_of(&f.digest).expect("visited"));
                    g.edges.push(GraphEdge {
                        from: p.node,
                        to,
                        kind: f.action.kind(),
                    });
                }
                if let Some(index) = f.broken_obligation {
                    // A transition into an already-visited state can still
                    // violate an obligation, so extend the parent's path.
                    let trace = reconstruct_trace(&parents, p.node, s0, topo, cp).map(|mut t| {
                        let pre = replay(s0, &t, topo, cp).expect("parent path replays");
                        let action = rebind(&f.action, &pre);
                        t.steps.push(TraceStep {
                            action,
                            digest: f.digest,
                        });
                        t
                    });
                    let cx = counterexample(trace, Violation::Obligation { index });
                    return finish(
                        Verdict::Violated,
                        &parents,
                        Some(cx),
                        transitions,
                        max_depth,
                        audit,
                        graph,
                    );
                }
                let Some(child) = child else { continue };
                if !f.invariant_holds {
                    let cx = counterexample(
                        reconstruct_trace(&parents, child, s0, topo, cp),
                        Violation::Invariant,
                    );
                    return finish(
                        Verdict::Violated,
                        &parents,
                        Some(cx),
                        transitions,
                        max_depth,
                        audit,
                        graph,
                    );
                }
                if opts.max_states.is_some_and(|m| parents.len() > m) {
                    return finish(
                        Verdict::BoundExceeded,
                        &parents,
                        None,
                        transitions,
                        max_depth,
                        audit,
                        graph,
                    );
                }
                let entry = Pending {
                    node: child,
                    depth: p.depth + 1,
                    bytes: f.bytes,
                };
                if bfs {
                    next_level.push(entry);
                } else {
                    pending.push(entry);
                }
            }
        }
        if bfs {
            pending = next_level;
        }
    }
    finish(
        Verdict::Holds,
        &parents,
        None,
        transitions,
        max_depth,
        audit,
        graph,
    )
}

/// Every state reachable from `s0` without property checks, keyed by digest.
/// Intended for small models.
pub fn reachable_digests(
    topo: &Topology,
    s0: &GlobalState,
    cp: &dyn ControllerProgram,
) -> BTreeSet<StateDigest> {
    let report = explore(
        topo,
        s0,
        cp,
        &Property::invariant_only(crate::proplang::StatePredicate::True),
        &ExplorationOptions {
            record_graph: true,
            ..Default::default()
        },
    );
    report
        .graph
        .expect("graph recorded")
        .nodes
        .into_iter()
        .map(|n| n.digest)
        .collect()
}

/// Checks that every action in `trace` comes after the action that caused
/// it: nomatch after the packet was sent, ctrl after nomatch, fwd and
/// FlowMods after a handler ran, match after its rule was installed, frmvd
/// after installation, fsync after frmvd, mod after fsync, recv after
/// delivery.
pub fn causal_audit<'a>(trace: impl IntoIterator<Item = &'a Action>) -> bool {
    let mut sent: BTreeSet<(EndpointId, EndpointId)> = BTreeSet::new();
    let mut delivered: BTreeSet<(EndpointId, EndpointId)> = BTreeSet::new();
    let mut nomatched: BTreeSet<(SwitchId, Packet)> = BTreeSet::new();
    let mut handled: BTreeSet<(SwitchId, Packet)> = BTreeSet::new();
    let mut installed: BTreeMap<SwitchId, BTreeSet<Rule>> = BTreeMap::new();
    let mut removed: BTreeSet<(SwitchId, Rule)> = BTreeSet::new();
    let mut replied: BTreeSet<(SwitchId, BarrierId)> = BTreeSet::new();
    let mut handlers_run = 0usize;
    let mut fsyncs = 0usize;

    for action in trace {
        let ok = match action {
            Action::Send { pkt, .. } => {
                sent.insert(pkt.flow());
                true
            }
            Action::NoMatch { sw, pkt } => {
                nomatched.insert((*sw, *pkt));
                sent.contains(&pkt.flow()) || delivered.contains(&pkt.flow())
            }
            Action::Ctrl { sw, pkt, .. } => {
                handlers_run += 1;
                handled.insert((*sw, *pkt));
                nomatched.contains(&(*sw, *pkt))
            }
            Action::Fwd { sw, pkt, .. } => {
                let ok = handled.contains(&(*sw, *pkt));
                delivered.insert(pkt.flow());
                ok
            }
            Action::Add { sw, rule } => {
                installed.entry(*sw).or_default().insert(*rule);
                handlers_run > 0
            }
            Action::Del { .. } | Action::Brepl { .. } => handlers_run > 0,
            Action::Mod { sw, pattern, patch } => {
                let rules = installed.entry(*sw).or_default();
                let patched: Vec<Rule> = rules
                    .iter()
                    .filter(|r| pattern.selects(r))
                    .map(|r| patch.apply(r))
                    .collect();
                rules.extend(patched);
                fsyncs > 0
            }
            Action::Match { sw, pkt, rule } => {
                let ok = installed.get(sw).is_some_and(|rs| rs.contains(rule))
                    && (sent.contains(&pkt.flow()) || delivered.contains(&pkt.flow()));
                if rule.fwd != FwdAction::Drop {
                    delivered.insert(pkt.flow());
                }
                ok
            }
            Action::Frmvd { sw, rule } => {
                removed.insert((*sw, *rule));
                installed.get(sw).is_some_and(|rs| rs.contains(rule))
            }
            Action::Fsync { sw, rule, .. } => {
                handlers_run += 1;
                fsyncs += 1;
                removed.contains(&(*sw, *rule))
            }
            Action::Bsync { sw, barrier, .. } => {
                handlers_run += 1;
                replied.contains(&(*sw, *barrier))
            }
            Action::Recv { pkt, .. } => delivered.contains(&pkt.flow()),
        };
        if let Action::Brepl { sw, barrier } = action {
            replied.insert((*sw, *barrier));
        }
        if !ok {
            return false;
        }
    }
    true
}
