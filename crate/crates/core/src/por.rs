//! Partial-order reduction for flow-removed handling.
//!
//! Only `fsync` is classified safe by default. A state whose enabled set
//! contains a safe action expands just the safe actions; otherwise every
//! enabled action is expanded.

use std::collections::BTreeSet;

use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_hash, StateDigest};
use crate::controller::ControllerProgram;
use crate::model::GlobalState;
use crate::proplang::Property;
use crate::semantics::{rebind, try_apply, Action, ActionKind};
use crate::topology::Topology;

/// Everything `is_safe` needs to know about the check being run.
#[derive(Clone, Copy)]
pub struct PorContext<'a> {
    pub cp: &'a dyn ControllerProgram,
    pub property: &'a Property,
    /// The user asserts that flow-removed handling never changes the truth
    /// of the property.
    pub assume_invariant: bool,
    /// Additional kinds treated like `fsync`. Experimental; unsound unless
    /// backed by the commutation oracle.
    pub extra_safe_kinds: &'a BTreeSet<ActionKind>,
}

impl<'a> PorContext<'a> {
    pub fn new(cp: &'a dyn ControllerProgram, property: &'a Property) -> Self {
        static NONE: BTreeSet<ActionKind> = BTreeSet::new();
        PorContext {
            cp,
            property,
            assume_invariant: false,
            extra_safe_kinds: &NONE,
        }
    }

    /// The invisibility half of safeness, which depends only on the
    /// controller and property.
    pub fn invisible(&self) -> bool {
        if self.assume_invariant || !self.property.has_ctrl_atoms() {
            return true;
        }
        match self.property.registers_read() {
            Some(read) => {
                let written = self.cp.registers_written_by_flow_removed();
                read.is_disjoint(&written)
            }
            None => false,
        }
    }
}

pub fn is_safe(action: &Action, ctx: &PorContext<'_>) -> bool {
    let kind = action.kind();
    (kind == ActionKind::Fsync || ctx.extra_safe_kinds.contains(&kind))
        && ctx.cp.declared_order_insensitive()
        && ctx.invisible()
}

/// The safe subset of `enabled` when it is non-empty, else `enabled`.
pub fn ample(enabled: &[Action], ctx: &PorContext<'_>) -> Vec<Action> {
    let safe: Vec<Action> = enabled
        .iter()
        .filter(|a| is_safe(a, ctx))
        .cloned()
        .collect();
    if safe.is_empty() {
        enabled.to_vec()
    } else {
        safe
    }
}

/// Executes `α·β` and `β·α` from `s` and reports whether both orders are
/// enabled and end in the same state. Handler labels are re-bound to the
/// intermediate controller state, so events are compared rather than labels.
pub fn commutation_oracle(
    s: &GlobalState,
    alpha: &Action,
    beta: &Action,
    topo: &Topology,
    cp: &dyn ControllerProgram,
) -> bool {
    let run = |first: &Action, second: &Action| -> Option<StateDigest> {
        let mid = try_apply(s, first, topo, cp).ok()?;
        let end = try_apply(&mid, &rebind(second, &mid), topo, cp).ok()?;
        Some(canonical_hash(&end))
    };
    match (run(alpha, beta), run(beta, alpha)) {
        (Some(ab), Some(ba)) => ab == ba,
        _ => false,
    }
}

/// A node of a recorded exploration graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub digest: StateDigest,
    /// Every enabled action was expanded.
    pub fully_expanded: bool,
    pub frq_len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub kind: ActionKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploredGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

/// True iff every cycle of the graph passes through a fully expanded node.
pub fn audit_c4(graph: &ExploredGraph) -> bool {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(graph.nodes.len(), graph.edges.len());
    let idx: Vec<_> = graph.nodes.iter().map(|_| g.add_node(())).collect();
    for e in &graph.edges {
        if !graph.nodes[e.from].fully_expanded && !graph.nodes[e.to].fully_expanded {
            g.add_edge(idx[e.from], idx[e.to], ());
        }
    }
    !is_cyclic_directed(&g)
}
