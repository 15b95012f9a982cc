//! Safety properties: invariant state predicates over controller registers
//! and packets in `pq`/`rcvq`, plus action-triggered obligations `[α(x)]P`.
//!
//! Predicates deliberately cannot mention `fq`, `cq`, `rq`, `brq` or `frq`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::*;
use crate::semantics::{Action, ActionKind};
use crate::topology::Topology;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum IntExpr {
    Const {
        value: i64,
    },
    /// Scalar register.
    Reg {
        name: String,
    },
    /// Element of an array register.
    RegAt {
        name: String,
        index: usize,
    },
    Add {
        lhs: Box<IntExpr>,
        rhs: Box<IntExpr>,
    },
    Sub {
        lhs: Box<IntExpr>,
        rhs: Box<IntExpr>,
    },
    Abs {
        arg: Box<IntExpr>,
    },
}

impl IntExpr {
    pub fn reg_at(name: &str, index: usize) -> Self {
        IntExpr::RegAt {
            name: name.to_string(),
            index,
        }
    }

    fn eval(&self, cs: &ControllerState) -> Option<i64> {
        Some(match self {
            IntExpr::Const { value } => *value,
            IntExpr::Reg { name } => cs.int(name)?,
            IntExpr::RegAt { name, index } => *cs.array(name)?.get(*index)?,
            IntExpr::Add { lhs, rhs } => lhs.eval(cs)?.checked_add(rhs.eval(cs)?)?,
            IntExpr::Sub { lhs, rhs } => lhs.eval(cs)?.checked_sub(rhs.eval(cs)?)?,
            IntExpr::Abs { arg } => arg.eval(cs)?.checked_abs()?,
        })
    }

    fn registers(&self, out: &mut BTreeSet<String>) {
        match self {
            IntExpr::Const { .. } => {}
            IntExpr::Reg { name } | IntExpr::RegAt { name, .. } => {
                out.insert(name.clone());
            }
            IntExpr::Add { lhs, rhs } | IntExpr::Sub { lhs, rhs } => {
                lhs.registers(out);
                rhs.registers(out);
            }
            IntExpr::Abs { arg } => arg.registers(out),
        }
    }

    fn validate(&self, cs: &ControllerState, key: &str) -> Result<(), ConfigError> {
        let err = |msg: String| ConfigError::Property {
            key: key.to_string(),
            msg,
        };
        match self {
            IntExpr::Const { .. } => Ok(()),
            IntExpr::Reg { name } => match cs.get(name) {
                Some(RegValue::Int(_)) => Ok(()),
                Some(_) => Err(err(format!("register '{name}' is an array"))),
                None => Err(err(format!("unknown register '{name}'"))),
            },
            IntExpr::RegAt { name, index } => match cs.get(name) {
                Some(RegValue::Array(v)) if *index < v.len() => Ok(()),
                Some(RegValue::Array(v)) => Err(err(format!(
                    "index {index} out of range for '{name}' (len {})",
                    v.len()
                ))),
                Some(_) => Err(err(format!("register '{name}' is not an array"))),
                None => Err(err(format!("unknown register '{name}'"))),
            },
            IntExpr::Add { lhs, rhs } | IntExpr::Sub { lhs, rhs } => {
                lhs.validate(cs, key)?;
                rhs.validate(cs, key)
            }
            IntExpr::Abs { arg } => arg.validate(cs, key),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

/// Comparison over controller registers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtrlAtom {
    pub lhs: IntExpr,
    pub cmp: CmpOp,
    pub rhs: IntExpr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketLocation {
    Pq { switch: SwitchId },
    Rcvq { host: HostId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum HeaderPred {
    True,
    SrcEq { addr: EndpointId },
    DstEq { addr: EndpointId },
    InPortEq { port: PortId },
    Not { arg: Box<HeaderPred> },
    And { args: Vec<HeaderPred> },
    Or { args: Vec<HeaderPred> },
}

impl HeaderPred {
    pub fn eval(&self, pkt: &Packet) -> bool {
        match self {
            HeaderPred::True => true,
            HeaderPred::SrcEq { addr } => pkt.src == *addr,
            HeaderPred::DstEq { addr } => pkt.dst == *addr,
            HeaderPred::InPortEq { port } => pkt.in_port == *port,
            HeaderPred::Not { arg } => !arg.eval(pkt),
            HeaderPred::And { args } => args.iter().all(|p| p.eval(pkt)),
            HeaderPred::Or { args } => args.iter().any(|p| p.eval(pkt)),
        }
    }
}

/// `∀pkt ∈ loc. P(pkt)` or `∃pkt ∈ loc. P(pkt)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketAtom {
    pub quantifier: Quantifier,
    pub location: PacketLocation,
    pub pred: HeaderPred,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum StatePredicate {
    True,
    False,
    Not {
        arg: Box<StatePredicate>,
    },
    And {
        args: Vec<StatePredicate>,
    },
    Or {
        args: Vec<StatePredicate>,
    },
    Ctrl(CtrlAtom),
    /// The controller is in exactly this state.
    CtrlStateIs {
        state: ControllerState,
    },
    Packet(PacketAtom),
}

impl StatePredicate {
    pub fn and(args: Vec<StatePredicate>) -> Self {
        StatePredicate::And { args }
    }

    pub fn negate(arg: StatePredicate) -> Self {
        StatePredicate::Not { arg: Box::new(arg) }
    }

    pub fn eval(&self, s: &GlobalState) -> bool {
        match self {
            StatePredicate::True => true,
            StatePredicate::False => false,
            StatePredicate::Not { arg } => !arg.eval(s),
            StatePredicate::And { args } => args.iter().all(|p| p.eval(s)),
            StatePredicate::Or { args } => args.iter().any(|p| p.eval(s)),
            StatePredicate::Ctrl(atom) => {
                match (atom.lhs.eval(&s.ctrl.cs), atom.rhs.eval(&s.ctrl.cs)) {
                    (Some(a), Some(b)) => atom.cmp.holds(a, b),
                    _ => false,
                }
            }
            StatePredicate::CtrlStateIs { state } => s.ctrl.cs == *state,
            StatePredicate::Packet(atom) => {
                let set = match atom.location {
                    PacketLocation::Pq { switch } => match s.switches.get(switch.index()) {
                        Some(sw) => &sw.pq,
                        None => return false,
                    },
                    PacketLocation::Rcvq { host } => match s.hosts.get(host.index()) {
                        Some(h) => &h.rcvq,
                        None => return false,
                    },
                };
                match atom.quantifier {
                    Quantifier::Forall => set.iter().all(|p| atom.pred.eval(p)),
                    Quantifier::Exists => set.iter().any(|p| atom.pred.eval(p)),
                }
            }
        }
    }

    /// Whether the predicate mentions controller state at all.
    pub fn has_ctrl_atoms(&self) -> bool {
        match self {
            StatePredicate::True | StatePredicate::False | StatePredicate::Packet(_) => false,
            StatePredicate::Ctrl(_) | StatePredicate::CtrlStateIs { .. } => true,
            StatePredicate::Not { arg } => arg.has_ctrl_atoms(),
            StatePredicate::And { args } | StatePredicate::Or { args } => {
                args.iter().any(|p| p.has_ctrl_atoms())
            }
        }
    }

    /// Registers read by controller atoms. `None` when some atom reads the
    /// whole controller state.
    pub fn registers_read(&self) -> Option<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        self.collect_registers(&mut out).then_some(out)
    }

    fn collect_registers(&self, out: &mut BTreeSet<String>) -> bool {
        match self {
            StatePredicate::True | StatePredicate::False | StatePredicate::Packet(_) => true,
            StatePredicate::Ctrl(atom) => {
                atom.lhs.registers(out);
                atom.rhs.registers(out);
                true
            }
            StatePredicate::CtrlStateIs { .. } => false,
            StatePredicate::Not { arg } => arg.collect_registers(out),
            StatePredicate::And { args } | StatePredicate::Or { args } => {
                args.iter().all(|p| p.collect_registers(out))
            }
        }
    }

    fn validate(
        &self,
        topo: &Topology,
        cs: &ControllerState,
        key: &str,
    ) -> Result<(), ConfigError> {
        let err = |msg: String| ConfigError::Property {
            key: key.to_string(),
            msg,
        };
        match self {
            StatePredicate::True | StatePredicate::False => Ok(()),
            StatePredicate::Not { arg } => arg.validate(topo, cs, &format!("{key}.arg")),
            StatePredicate::And { args } | StatePredicate::Or { args } => args
                .iter()
                .enumerate()
                .try_for_each(|(i, p)| p.validate(topo, cs, &format!("{key}.args[{i}]"))),
            StatePredicate::Ctrl(atom) => {
                atom.lhs.validate(cs, &format!("{key}.lhs"))?;
                atom.rhs.validate(cs, &format!("{key}.rhs"))
            }
            StatePredicate::CtrlStateIs { state } => {
                let same_layout = state.registers().len() == cs.registers().len()
                    && state
                        .registers()
                        .iter()
                        .zip(cs.registers())
                        .all(|(a, b)| a.name == b.name);
                if same_layout {
                    Ok(())
                } else {
                    Err(err(
                        "controller state does not match the program's registers".into(),
                    ))
                }
            }
            StatePredicate::Packet(atom) => match atom.location {
                PacketLocation::Pq { switch } if switch.index() >= topo.switch_count() => {
                    Err(err(format!("unknown switch {}", switch.0)))
                }
                PacketLocation::Rcvq { host } if host.index() >= topo.hosts().len() => {
                    Err(err(format!("unknown host {}", host.0)))
                }
                _ => Ok(()),
            },
        }
    }
}

/// Which transitions an obligation applies to. Unset fields are wildcards.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionPattern {
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<SwitchId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<HostId>,
}

impl ActionPattern {
    pub fn unifies(&self, action: &Action) -> bool {
        action.kind() == self.kind
            && self.switch.is_none_or(|sw| action.switch() == Some(sw))
            && self.host.is_none_or(|h| action.host() == Some(h))
    }
}

/// Body of an obligation: may read the action's bound packet and rule and
/// the post-state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ObligationPred {
    True,
    Not { arg: Box<ObligationPred> },
    And { args: Vec<ObligationPred> },
    Or { args: Vec<ObligationPred> },
    RuleFwdDrop,
    RuleFwdPort { port: PortId },
    RuleTimeout,
    PktSrcEq { addr: EndpointId },
    PktDstEq { addr: EndpointId },
    State { pred: StatePredicate },
}

impl ObligationPred {
    fn eval(&self, action: &Action, post: &GlobalState) -> bool {
        match self {
            ObligationPred::True => true,
            ObligationPred::Not { arg } => !arg.eval(action, post),
            ObligationPred::And { args } => args.iter().all(|p| p.eval(action, post)),
            ObligationPred::Or { args } => args.iter().any(|p| p.eval(action, post)),
            ObligationPred::RuleFwdDrop => action.rule().is_some_and(|r| r.fwd == FwdAction::Drop),
            ObligationPred::RuleFwdPort { port } => action
                .rule()
                .is_some_and(|r| r.fwd == FwdAction::Port(*port)),
            ObligationPred::RuleTimeout => action.rule().is_some_and(|r| r.timeout),
            ObligationPred::PktSrcEq { addr } => action.packet().is_some_and(|p| p.src == *addr),
            ObligationPred::PktDstEq { addr } => action.packet().is_some_and(|p| p.dst == *addr),
            ObligationPred::State { pred } => pred.eval(post),
        }
    }

    fn needs(&self, out: &mut Vec<(&'static str, bool)>) {
        match self {
            ObligationPred::Not { arg } => arg.needs(out),
            ObligationPred::And { args } | ObligationPred::Or { args } => {
                args.iter().for_each(|p| p.needs(out))
            }
            ObligationPred::RuleFwdDrop
            | ObligationPred::RuleFwdPort { .. }
            | ObligationPred::RuleTimeout => out.push(("rule", true)),
            ObligationPred::PktSrcEq { .. } | ObligationPred::PktDstEq { .. } => {
                out.push(("packet", false))
            }
            ObligationPred::True | ObligationPred::State { .. } => {}
        }
    }
}

/// `[pattern] body`: whenever a matching action fires, `body` must hold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionObligation {
    pub pattern: ActionPattern,
    pub body: ObligationPred,
}

fn kind_binds_rule(kind: ActionKind) -> bool {
    matches!(
        kind,
        ActionKind::Match
            | ActionKind::Add
            | ActionKind::Del
            | ActionKind::Frmvd
            | ActionKind::Fsync
    )
}

fn kind_binds_packet(kind: ActionKind) -> bool {
    matches!(
        kind,
        ActionKind::Send
            | ActionKind::Recv
            | ActionKind::Match
            | ActionKind::NoMatch
            | ActionKind::Ctrl
            | ActionKind::Fwd
    )
}

/// `□invariant` together with per-transition obligations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    pub invariant: StatePredicate,
    #[serde(default)]
    pub obligations: Vec<ActionObligation>,
}

impl Property {
    pub fn invariant_only(invariant: StatePredicate) -> Self {
        Property {
            invariant,
            obligations: Vec::new(),
        }
    }

    /// Checks every register, device and binding reference once, before
    /// exploration starts.
    pub fn validate(&self, topo: &Topology, cs: &ControllerState) -> Result<(), ConfigError> {
        self.invariant.validate(topo, cs, "invariant")?;
        for (i, o) in self.obligations.iter().enumerate() {
            let key = format!("obligations[{i}]");
            if let Some(sw) = o.pattern.switch {
                if sw.index() >= topo.switch_count() {
                    return Err(ConfigError::Property {
                        key: format!("{key}.pattern.switch"),
                        msg: format!("unknown switch {}", sw.0),
                    });
                }
            }
            if let Some(h) = o.pattern.host {
                if h.index() >= topo.hosts().len() {
                    return Err(ConfigError::Property {
                        key: format!("{key}.pattern.host"),
                        msg: format!("unknown host {}", h.0),
                    });
                }
            }
            let mut needs = Vec::new();
            o.body.needs(&mut needs);
            for (what, is_rule) in needs {
                let bound = if is_rule {
                    kind_binds_rule(o.pattern.kind)
                } else {
                    kind_binds_packet(o.pattern.kind)
                };
                if !bound {
                    return Err(ConfigError::Property {
                        key: format!("{key}.body"),
                        msg: format!("{:?} actions bind no {what}", o.pattern.kind),
                    });
                }
            }
            let mut preds = Vec::new();
            collect_state_preds(&o.body, &mut preds);
            for p in preds {
                p.validate(topo, cs, &format!("{key}.body"))?;
            }
        }
        Ok(())
    }

    pub fn has_ctrl_atoms(&self) -> bool {
        self.invariant.has_ctrl_atoms()
            || self.obligations.iter().any(|o| {
                let mut preds = Vec::new();
                collect_state_preds(&o.body, &mut preds);
                preds.iter().any(|p| p.has_ctrl_atoms())
            })
    }

    /// Registers read anywhere in the property; `None` means "all of them".
    pub fn registers_read(&self) -> Option<BTreeSet<String>> {
        let mut out = self.invariant.registers_read()?;
        for o in &self.obligations {
            let mut preds = Vec::new();
            collect_state_preds(&o.body, &mut preds);
            for p in preds {
                out.extend(p.registers_read()?);
            }
        }
        Some(out)
    }
}

fn collect_state_preds<'a>(body: &'a ObligationPred, out: &mut Vec<&'a StatePredicate>) {
    match body {
        ObligationPred::State { pred } => out.push(pred),
        ObligationPred::Not { arg } => collect_state_preds(arg, out),
        ObligationPred::And { args } | ObligationPred::Or { args } => {
            args.iter().for_each(|p| collect_state_preds(p, out))
        }
        _ => {}
    }
}

pub fn eval_state_pred(p: &StatePredicate, s: &GlobalState) -> bool {
    p.eval(s)
}

/// Vacuously true when `action` does not unify with the pattern.
pub fn eval_obligation(o: &ActionObligation, action: &Action, post: &GlobalState) -> bool {
    !o.pattern.unifies(action) || o.body.eval(action, post)
}

/// Load balancing fairness and firewall invariant: for all ordered server
/// pairs `(i, j)`, no packet in server `i`'s receive queue comes from the
/// dodgy address, and `|sLoad[i] - sLoad[j]| < bound`.
///
/// `servers` lists the server hosts in `sLoad` index order.
pub fn builtin_phi(
    servers: &[HostId],
    dodgy: Option<EndpointId>,
    bound: i64,
) -> Result<Property, ConfigError> {
    if servers.is_empty() {
        return Err(ConfigError::Property {
            key: "servers".into(),
            msg: "at least one server is required".into(),
        });
    }
    let mut clauses = Vec::new();
    for (i, &si) in servers.iter().enumerate() {
        for j in 0..servers.len() {
            let mut pair = Vec::with_capacity(2);
            if let Some(d) = dodgy {
                pair.push(StatePredicate::Packet(PacketAtom {
                    quantifier: Quantifier::Forall,
                    location: PacketLocation::Rcvq { host: si },
                    pred: HeaderPred::Not {
                        arg: Box::new(HeaderPred::SrcEq { addr: d }),
                    },
                }));
            }
            pair.push(StatePredicate::Ctrl(CtrlAtom {
                lhs: IntExpr::Abs {
                    arg: Box::new(IntExpr::Sub {
                        lhs: Box::new(IntExpr::reg_at(crate::controller::REG_SLOAD, i)),
                        rhs: Box::new(IntExpr::reg_at(crate::controller::REG_SLOAD, j)),
                    }),
                },
                cmp: CmpOp::Lt,
                rhs: IntExpr::Const { value: bound },
            }));
            clauses.push(StatePredicate::and(pair));
        }
    }
    Ok(Property::invariant_only(StatePredicate::and(clauses)))
}

pub const BUILTIN_PROPERTIES: [&str; 1] = ["lb-fairness-firewall"];

/// Resolves a named built-in property against a topology.
pub fn builtin_property(name: &str, topo: &Topology, bound: i64) -> Result<Property, ConfigError> {
    match name {
        "lb-fairness-firewall" => {
            let servers = topo.hosts_with_role(crate::topology::HostRole::Server);
            let dodgy = topo
                .hosts_with_role(crate::topology::HostRole::DodgyClient)
                .first()
                .map(|&h| topo.host(h).addr);
            builtin_phi(&servers, dodgy, bound)
        }
        other => Err(ConfigError::UnknownProperty(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{builtin_controller, ControllerProgram, REG_SLOAD};
    use crate::topology::{build_topology, generate_topology, initial_state, WorkloadConfig};

    struct Fixture {
        topo: Topology,
        s0: GlobalState,
    }

    fn four_by_two() -> Fixture {
        let cfg = generate_topology(4, 2, 1).unwrap();
        let topo = build_topology(&cfg).unwrap();
        let cp = builtin_controller("rr-naive", &topo).unwrap();
        let s0 = initial_state(&topo, cfg.workload.as_ref().unwrap(), &cp).unwrap();
        Fixture { topo, s0 }
    }

    fn phi(f: &Fixture, bound: i64) -> Property {
        builtin_property("lb-fairness-firewall", &f.topo, bound).unwrap()
    }

    fn set_load(s: &mut GlobalState, load: &[i64]) {
        *s.ctrl.cs.array_mut(REG_SLOAD).unwrap() = load.to_vec();
    }

    #[test]
    fn phi_holds_initially() {
        let f = four_by_two();
        assert!(eval_state_pred(&phi(&f, 2).invariant, &f.s0));
    }

    #[test]
    fn dodgy_packet_at_server_violates_phi() {
        let f = four_by_two();
        let mut s = f.s0.clone();
        s.hosts[4]
            .rcvq
            .insert(Packet::new(EndpointId(3), EndpointId(6), PortId(0)));
        assert!(!eval_state_pred(&phi(&f, 2).invariant, &s));
        let mut ok = f.s0.clone();
        ok.hosts[4]
            .rcvq
            .insert(Packet::new(EndpointId(0), EndpointId(6), PortId(0)));
        assert!(eval_state_pred(&phi(&f, 2).invariant, &ok));
    }

    #[test]
    fn load_spread_of_two_violates_phi() {
        let f = four_by_two();
        let mut s = f.s0.clone();
        set_load(&mut s, &[3, 1]);
        assert!(!eval_state_pred(&phi(&f, 2).invariant, &s));
        set_load(&mut s, &[2, 1]);
        assert!(eval_state_pred(&phi(&f, 2).invariant, &s));
        set_load(&mut s, &[1, 0]);
        assert!(!eval_state_pred(&phi(&f, 1).invariant, &s));
    }

    #[test]
    fn phi_pairs() {
        let two = builtin_phi(&[HostId(4), HostId(5)], Some(EndpointId(3)), 2).unwrap();
        match &two.invariant {
            StatePredicate::And { args } => assert_eq!(args.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(builtin_phi(&[], None, 2).is_err());
    }

    #[test]
    fn single_server_load_clause_is_trivial() {
        let cfg = generate_topology(2, 1, 1).unwrap();
        let topo = build_topology(&cfg).unwrap();
        let cp = builtin_controller("lc-naive", &topo).unwrap();
        let mut s = initial_state(&topo, &WorkloadConfig::default(), &cp).unwrap();
        let p = builtin_property("lb-fairness-firewall", &topo, 2).unwrap();
        set_load(&mut s, &[7]);
        assert!(eval_state_pred(&p.invariant, &s));
        s.hosts[2]
            .rcvq
            .insert(Packet::new(EndpointId(1), EndpointId(3), PortId(0)));
        assert!(!eval_state_pred(&p.invariant, &s));
    }

    #[test]
    fn ordered_and_unordered_pairs_agree() {
        let f = four_by_two();
        let ordered = phi(&f, 2);
        let unordered = {
            let mut p = ordered.clone();
            if let StatePredicate::And { args } = &mut p.invariant {
                // keep (i, j) with i <= j: indices 0, 1, 3 of the 2x2 grid
                *args = vec![args[0].clone(), args[1].clone(), args[3].clone()];
            }
            p
        };
        let mut s = f.s0.clone();
        for a in 0..4 {
            for b in 0..4 {
                set_load(&mut s, &[a, b]);
                assert_eq!(
                    eval_state_pred(&ordered.invariant, &s),
                    eval_state_pred(&unordered.invariant, &s)
                );
            }
        }
    }

    #[test]
    fn obligation_semantics() {
        let f = four_by_two();
        let ob = ActionObligation {
            pattern: ActionPattern {
                kind: ActionKind::Match,
                switch: None,
                host: None,
            },
            body: ObligationPred::RuleFwdDrop,
        };
        let pkt = Packet::new(EndpointId(0), EndpointId(6), PortId(1));
        let send = Action::Send {
            host: HostId(0),
            pkt,
        };
        assert!(eval_obligation(&ob, &send, &f.s0));
        let drop_rule =
            Rule::new(Some(EndpointId(0)), None, None, FwdAction::Drop, 1, false).unwrap();
        let via_drop = Action::Match {
            sw: SwitchId(0),
            pkt,
            rule: drop_rule,
        };
        assert!(eval_obligation(&ob, &via_drop, &f.s0));
        let via_port = Action::Match {
            sw: SwitchId(0),
            pkt,
            rule: Rule {
                fwd: FwdAction::Port(PortId(5)),
                ..drop_rule
            },
        };
        assert!(!eval_obligation(&ob, &via_port, &f.s0));

        let vacuous = ActionObligation {
            pattern: ob.pattern.clone(),
            body: ObligationPred::True,
        };
        assert!(eval_obligation(&vacuous, &via_port, &f.s0));
    }

    #[test]
    fn validation_rejects_bad_references() {
        let f = four_by_two();
        let cs = builtin_controller("rr-naive", &f.topo)
            .unwrap()
            .initial_state();
        let bad_reg = Property::invariant_only(StatePredicate::Ctrl(CtrlAtom {
            lhs: IntExpr::Reg {
                name: "nope".into(),
            },
            cmp: CmpOp::Eq,
            rhs: IntExpr::Const { value: 0 },
        }));
        assert!(bad_reg.validate(&f.topo, &cs).is_err());
        let bad_index = Property::invariant_only(StatePredicate::Ctrl(CtrlAtom {
            lhs: IntExpr::reg_at(REG_SLOAD, 2),
            cmp: CmpOp::Eq,
            rhs: IntExpr::Const { value: 0 },
        }));
        assert!(bad_index.validate(&f.topo, &cs).is_err());
        let bad_host = Property::invariant_only(StatePredicate::Packet(PacketAtom {
            quantifier: Quantifier::Exists,
            location: PacketLocation::Rcvq { host: HostId(9) },
            pred: HeaderPred::True,
        }));
        assert!(bad_host.validate(&f.topo, &cs).is_err());
        let unbound = Property {
            invariant: StatePredicate::True,
            obligations: vec![ActionObligation {
                pattern: ActionPattern {
                    kind: ActionKind::Brepl,
                    switch: None,
                    host: None,
                },
                body: ObligationPred::RuleFwdDrop,
            }],
        };
        assert!(unbound.validate(&f.topo, &cs).is_err());
        assert!(phi(&f, 2).validate(&f.topo, &cs).is_ok());
    }

    #[test]
    fn register_footprint() {
        let f = four_by_two();
        let p = phi(&f, 2);
        assert!(p.has_ctrl_atoms());
        assert_eq!(
            p.registers_read().unwrap().into_iter().collect::<Vec<_>>(),
            vec![REG_SLOAD.to_string()]
        );
        let whole = Property::invariant_only(StatePredicate::CtrlStateIs {
            state: f.s0.ctrl.cs.clone(),
        });
        assert!(whole.registers_read().is_none());
        let pkt_only = Property::invariant_only(StatePredicate::True);
        assert!(!pkt_only.has_ctrl_atoms());
    }

    #[test]
    fn property_json_round_trip() {
        let f = four_by_two();
        let p = phi(&f, 2);
        let text = serde_json::to_string(&p).unwrap();
        let back: Property = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn evaluation_is_pure() {
        let f = four_by_two();
        let p = phi(&f, 2);
        assert_eq!(p.invariant.eval(&f.s0), p.invariant.eval(&f.s0));
    }
}
