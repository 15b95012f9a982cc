//! The labelled transition relation: which actions are enabled in a state and
//! the unique successor each one produces.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{ControllerProgram, Emission, HandlerOutput};
use crate::model::*;
use crate::topology::{Interface, ReceiveReaction, Topology};

/// A transition label. Every parameter needed to compute the successor is
/// part of the label, so `(state, action)` determines the next state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Send {
        host: HostId,
        pkt: Packet,
    },
    Recv {
        host: HostId,
        pkt: Packet,
    },
    Match {
        sw: SwitchId,
        pkt: Packet,
        rule: Rule,
    },
    #[serde(rename = "nomatch")]
    NoMatch {
        sw: SwitchId,
        pkt: Packet,
    },
    Ctrl {
        sw: SwitchId,
        pkt: Packet,
        cs: ControllerState,
    },
    Fwd {
        sw: SwitchId,
        pkt: Packet,
        port: PortId,
    },
    Add {
        sw: SwitchId,
        rule: Rule,
    },
    Del {
        sw: SwitchId,
        rule: Rule,
    },
    Mod {
        sw: SwitchId,
        pattern: RulePattern,
        patch: RulePatch,
    },
    Brepl {
        sw: SwitchId,
        barrier: BarrierId,
    },
    Bsync {
        sw: SwitchId,
        barrier: BarrierId,
        cs: ControllerState,
    },
    Frmvd {
        sw: SwitchId,
        rule: Rule,
    },
    Fsync {
        sw: SwitchId,
        rule: Rule,
        cs: ControllerState,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Send,
    Recv,
    Match,
    #[serde(rename = "nomatch")]
    NoMatch,
    Ctrl,
    Fwd,
    Add,
    Del,
    Mod,
    Brepl,
    Bsync,
    Frmvd,
    Fsync,
}

impl ActionKind {
    pub const ALL: [ActionKind; 13] = [
        ActionKind::Send,
        ActionKind::Recv,
        ActionKind::Match,
        ActionKind::NoMatch,
        ActionKind::Ctrl,
        ActionKind::Fwd,
        ActionKind::Add,
        ActionKind::Del,
        ActionKind::Mod,
        ActionKind::Brepl,
        ActionKind::Bsync,
        ActionKind::Frmvd,
        ActionKind::Fsync,
    ];

    /// Kinds that run a controller handler.
    pub fn is_handler(self) -> bool {
        matches!(
            self,
            ActionKind::Ctrl | ActionKind::Bsync | ActionKind::Fsync
        )
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Send { .. } => ActionKind::Send,
            Action::Recv { .. } => ActionKind::Recv,
            Action::Match { .. } => ActionKind::Match,
            Action::NoMatch { .. } => ActionKind::NoMatch,
            Action::Ctrl { .. } => ActionKind::Ctrl,
            Action::Fwd { .. } => ActionKind::Fwd,
            Action::Add { .. } => ActionKind::Add,
            Action::Del { .. } => ActionKind::Del,
            Action::Mod { .. } => ActionKind::Mod,
            Action::Brepl { .. } => ActionKind::Brepl,
            Action::Bsync { .. } => ActionKind::Bsync,
            Action::Frmvd { .. } => ActionKind::Frmvd,
            Action::Fsync { .. } => ActionKind::Fsync,
        }
    }

    /// The controller state a handler action is labelled with.
    pub fn controller_state(&self) -> Option<&ControllerState> {
        match self {
            Action::Ctrl { cs, .. } | Action::Bsync { cs, .. } | Action::Fsync { cs, .. } => {
                Some(cs)
            }
            _ => None,
        }
    }

    /// Equality ignoring the controller-state parameter of handler actions.
    /// That parameter is fixed by the state the action fires in, so two
    /// labels that agree elsewhere denote the same event.
    pub fn same_event(&self, other: &Action) -> bool {
        match (self, other) {
            (
                Action::Ctrl { sw, pkt, .. },
                Action::Ctrl {
                    sw: sw2, pkt: pkt2, ..
                },
            ) => sw == sw2 && pkt == pkt2,
            (
                Action::Bsync { sw, barrier, .. },
                Action::Bsync {
                    sw: sw2,
                    barrier: b2,
                    ..
                },
            ) => sw == sw2 && barrier == b2,
            (
                Action::Fsync { sw, rule, .. },
                Action::Fsync {
                    sw: sw2, rule: r2, ..
                },
            ) => sw == sw2 && rule == r2,
            _ => self == other,
        }
    }

    pub fn switch(&self) -> Option<SwitchId> {
        match self {
            Action::Send { .. } | Action::Recv { .. } => None,
            Action::Match { sw, .. }
            | Action::NoMatch { sw, .. }
            | Action::Ctrl { sw, .. }
            | Action::Fwd { sw, .. }
            | Action::Add { sw, .. }
            | Action::Del { sw, .. }
            | Action::Mod { sw, .. }
            | Action::Brepl { sw, .. }
            | Action::Bsync { sw, .. }
            | Action::Frmvd { sw, .. }
            | Action::Fsync { sw, .. } => Some(*sw),
        }
    }

    pub fn host(&self) -> Option<HostId> {
        match self {
            Action::Send { host, .. } | Action::Recv { host, .. } => Some(*host),
            _ => None,
        }
    }

    pub fn packet(&self) -> Option<&Packet> {
        match self {
            Action::Send { pkt, .. }
            | Action::Recv { pkt, .. }
            | Action::Match { pkt, .. }
            | Action::NoMatch { pkt, .. }
            | Action::Ctrl { pkt, .. }
            | Action::Fwd { pkt, .. } => Some(pkt),
            _ => None,
        }
    }

    pub fn rule(&self) -> Option<&Rule> {
        match self {
            Action::Match { rule, .. }
            | Action::Add { rule, .. }
            | Action::Del { rule, .. }
            | Action::Frmvd { rule, .. }
            | Action::Fsync { rule, .. } => Some(rule),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Send { host, pkt } => write!(f, "send({host}, {pkt})"),
            Action::Recv { host, pkt } => write!(f, "recv({host}, {pkt})"),
            Action::Match { sw, pkt, rule } => write!(f, "match({sw}, {pkt}, {rule})"),
            Action::NoMatch { sw, pkt } => write!(f, "nomatch({sw}, {pkt})"),
            Action::Ctrl { sw, pkt, cs } => write!(f, "ctrl({sw}, {pkt}, {cs})"),
            Action::Fwd { sw, pkt, port } => write!(f, "fwd({sw}, {pkt}, {port})"),
            Action::Add { sw, rule } => write!(f, "add({sw}, {rule})"),
            Action::Del { sw, rule } => write!(f, "del({sw}, {rule})"),
            Action::Mod { sw, pattern, patch } => write!(f, "mod({sw}, {pattern:?}, {patch:?})"),
            Action::Brepl { sw, barrier } => write!(f, "brepl({sw}, {barrier})"),
            Action::Bsync { sw, barrier, cs } => write!(f, "bsync({sw}, {barrier}, {cs})"),
            Action::Frmvd { sw, rule } => write!(f, "frmvd({sw}, {rule})"),
            Action::Fsync { sw, rule, cs } => write!(f, "fsync({sw}, {rule}, {cs})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("action {action} is not enabled")]
pub struct NotEnabled {
    pub action: String,
}

/// The rule a switch applies to `pkt`: highest priority among matching rules,
/// ties going to the smallest rule in canonical order.
pub fn match_rule<'a>(ft: impl IntoIterator<Item = &'a Rule>, pkt: &Packet) -> Option<&'a Rule> {
    ft.into_iter()
        .filter(|r| r.matches(pkt))
        // max_by_key keeps the last maximum; reverse the tie order so the
        // smallest rule wins.
        .max_by(|a, b| a.priority.cmp(&b.priority).then_with(|| b.cmp(a)))
}

/// All actions enabled in `s`, in canonical order.
pub fn enabled_actions(
    s: &GlobalState,
    topo: &Topology,
    _cp: &dyn ControllerProgram,
) -> Vec<Action> {
    let mut out = Vec::new();
    for (i, host) in s.hosts.iter().enumerate() {
        let h = HostId(i as u16);
        for &pkt in &host.send_buf {
            out.push(Action::Send { host: h, pkt });
        }
        if topo.host(h).on_receive != ReceiveReaction::None {
            for &pkt in &host.rcvq {
                out.push(Action::Recv { host: h, pkt });
            }
        }
    }
    for (i, swst) in s.switches.iter().enumerate() {
        let sw = SwitchId(i as u16);
        for &pkt in &swst.pq {
            match match_rule(&swst.ft, &pkt) {
                Some(&rule) => out.push(Action::Match { sw, pkt, rule }),
                None => out.push(Action::NoMatch { sw, pkt }),
            }
        }
        for &(pkt, port) in &swst.fq {
            out.push(Action::Fwd { sw, pkt, port });
        }
        if let Some(seg) = swst.cq.first() {
            for fm in &seg.mods {
                out.push(match *fm {
                    FlowMod::Add { rule } => Action::Add { sw, rule },
                    FlowMod::Del { rule } => Action::Del { sw, rule },
                    FlowMod::Mod { pattern, patch } => Action::Mod { sw, pattern, patch },
                });
            }
        }
        if let Some(barrier) = swst.cq.ready_barrier() {
            out.push(Action::Brepl { sw, barrier });
        }
        for &rule in &swst.ft {
            if rule.timeout {
                out.push(Action::Frmvd { sw, rule });
            }
        }
    }
    let cs = &s.ctrl.cs;
    for &(sw, pkt) in &s.ctrl.rq {
        out.push(Action::Ctrl {
            sw,
            pkt,
            cs: cs.clone(),
        });
    }
    for &(sw, barrier) in &s.ctrl.brq {
        out.push(Action::Bsync {
            sw,
            barrier,
            cs: cs.clone(),
        });
    }
    for &(sw, rule) in &s.ctrl.frq {
        out.push(Action::Fsync {
            sw,
            rule,
            cs: cs.clone(),
        });
    }
    out.sort();
    out
}

/// Successor of `s` under `action`.
///
/// # Panics
///
/// If `action` is not enabled in `s`; see [`try_apply`].
pub fn apply(
    s: &GlobalState,
    action: &Action,
    topo: &Topology,
    cp: &dyn ControllerProgram,
) -> GlobalState {
    match try_apply(s, action, topo, cp) {
        Ok(next) => next,
        Err(e) => panic!("{e}"),
    }
}

fn deliver(s: &mut GlobalState, topo: &Topology, from: Interface, pkt: Packet) {
    let Some(peer) = topo.peer(from) else {
        return;
    };
    match peer.device {
        DeviceId::Host(h) => {
            s.host_mut(h).rcvq.insert(pkt.with_in_port(peer.port));
        }
        DeviceId::Switch(sw) => {
            s.switch_mut(sw).pq.insert(pkt.with_in_port(peer.port));
        }
        DeviceId::Controller => {}
    }
}

fn install_output(s: &mut GlobalState, out: HandlerOutput) {
    s.ctrl.cs = out.cs;
    for emission in out.emissions {
        match emission {
            Emission::PacketOut { sw, pkt, port } => {
                s.switch_mut(sw).fq.insert((pkt, port));
            }
            Emission::Message { sw, msg } => s.switch_mut(sw).cq.push(msg),
        }
    }
}

pub fn try_apply(
    s: &GlobalState,
    action: &Action,
    topo: &Topology,
    cp: &dyn ControllerProgram,
) -> Result<GlobalState, NotEnabled> {
    let not_enabled = || NotEnabled {
        action: action.to_string(),
    };
    let valid_host = |h: HostId| h.index() < s.hosts.len();
    let valid_sw = |sw: SwitchId| sw.index() < s.switches.len();
    if action.host().is_some_and(|h| !valid_host(h))
        || action.switch().is_some_and(|sw| !valid_sw(sw))
    {
        return Err(not_enabled());
    }

    let mut next = s.clone();
    match action {
        Action::Send { host, pkt } => {
            if !next.host_mut(*host).send_buf.remove(pkt) {
                return Err(not_enabled());
            }
            let port = topo.host(*host).port;
            deliver(
                &mut next,
                topo,
                Interface {
                    device: DeviceId::Host(*host),
                    port,
                },
                *pkt,
            );
        }
        Action::Recv { host, pkt } => {
            let reaction = topo.host(*host).on_receive;
            if reaction == ReceiveReaction::None || !s.host(*host).rcvq.contains(pkt) {
                return Err(not_enabled());
            }
            match reaction {
                ReceiveReaction::None => {}
                ReceiveReaction::Consume => {
                    next.host_mut(*host).rcvq.remove(pkt);
                }
            }
        }
        Action::Match { sw, pkt, rule } => {
            let swst = s.switch(*sw);
            if !swst.pq.contains(pkt) || match_rule(&swst.ft, pkt) != Some(rule) {
                return Err(not_enabled());
            }
            if let FwdAction::Port(port) = rule.fwd {
                deliver(
                    &mut next,
                    topo,
                    Interface {
                        device: DeviceId::Switch(*sw),
                        port,
                    },
                    *pkt,
                );
            }
        }
        Action::NoMatch { sw, pkt } => {
            let swst = s.switch(*sw);
            if !swst.pq.contains(pkt) || match_rule(&swst.ft, pkt).is_some() {
                return Err(not_enabled());
            }
            next.ctrl.rq.insert((*sw, *pkt));
        }
        Action::Ctrl { sw, pkt, cs } => {
            if *cs != s.ctrl.cs || !next.ctrl.rq.remove(&(*sw, *pkt)) {
                return Err(not_enabled());
            }
            let out = cp.packet_in(pkt, *sw, cs);
            install_output(&mut next, out);
        }
        Action::Fwd { sw, pkt, port } => {
            if !next.switch_mut(*sw).fq.remove(&(*pkt, *port)) {
                return Err(not_enabled());
            }
            deliver(
                &mut next,
                topo,
                Interface {
                    device: DeviceId::Switch(*sw),
                    port: *port,
                },
                *pkt,
            );
        }
        Action::Add { sw, rule } => {
            let swst = next.switch_mut(*sw);
            if !swst.cq.take_front(&FlowMod::Add { rule: *rule }) {
                return Err(not_enabled());
            }
            swst.install(*rule);
        }
        Action::Del { sw, rule } => {
            let swst = next.switch_mut(*sw);
            if !swst.cq.take_front(&FlowMod::Del { rule: *rule }) {
                return Err(not_enabled());
            }
            swst.uninstall(rule);
        }
        Action::Mod { sw, pattern, patch } => {
            let swst = next.switch_mut(*sw);
            if !swst.cq.take_front(&FlowMod::Mod {
                pattern: *pattern,
                patch: *patch,
            }) {
                return Err(not_enabled());
            }
            let selected: Vec<Rule> = swst
                .ft
                .iter()
                .filter(|r| pattern.selects(r))
                .copied()
                .collect();
            for r in &selected {
                swst.ft.remove(r);
            }
            for r in &selected {
                swst.install(patch.apply(r));
            }
        }
        Action::Brepl { sw, barrier } => {
            if !next.switch_mut(*sw).cq.pop_barrier(*barrier) {
                return Err(not_enabled());
            }
            next.ctrl.brq.insert((*sw, *barrier));
        }
        Action::Bsync { sw, barrier, cs } => {
            if *cs != s.ctrl.cs || !next.ctrl.brq.remove(&(*sw, *barrier)) {
                return Err(not_enabled());
            }
            let out = cp.barrier_reply(*barrier, *sw, cs);
            install_output(&mut next, out);
        }
        Action::Frmvd { sw, rule } => {
            if !rule.timeout || !next.switch_mut(*sw).ft.remove(rule) {
                return Err(not_enabled());
            }
            next.ctrl.frq.insert((*sw, *rule));
        }
        Action::Fsync { sw, rule, cs } => {
            if *cs != s.ctrl.cs || !next.ctrl.frq.remove(&(*sw, *rule)) {
                return Err(not_enabled());
            }
            let out = cp.flow_removed(rule, *sw, cs);
            install_output(&mut next, out);
        }
    }
    Ok(next)
}

/// Re-labels a handler action with the controller state of `s`, so an event
/// observed in one state can be looked up in another.
pub fn rebind(action: &Action, s: &GlobalState) -> Action {
    let cs = s.ctrl.cs.clone();
    match action {
        Action::Ctrl { sw, pkt, .. } => Action::Ctrl {
            sw: *sw,
            pkt: *pkt,
            cs,
        },
        Action::Bsync { sw, barrier, .. } => Action::Bsync {
            sw: *sw,
            barrier: *barrier,
            cs,
        },
        Action::Fsync { sw, rule, .. } => Action::Fsync {
            sw: *sw,
            rule: *rule,
            cs,
        },
        other => other.clone(),
    }
}
