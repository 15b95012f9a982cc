//! Controller programs: the handler interface, the built-in load balancer /
//! stateful firewall, and a bounded order-sensitivity check.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::canonical::{canonical_hash, StateDigest};
use crate::error::ConfigError;
use crate::model::*;
use crate::semantics::{apply, enabled_actions, rebind, Action};
use crate::topology::{HostRole, Topology};

/// Something a handler sends to a switch.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Emission {
    PacketOut {
        sw: SwitchId,
        pkt: Packet,
        port: PortId,
    },
    Message {
        sw: SwitchId,
        msg: ControlMessage,
    },
}

/// Updated registers plus the messages emitted, in emission order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandlerOutput {
    pub cs: ControllerState,
    pub emissions: Vec<Emission>,
}

impl HandlerOutput {
    pub fn unchanged(cs: &ControllerState) -> Self {
        HandlerOutput {
            cs: cs.clone(),
            emissions: Vec::new(),
        }
    }
}

/// A controller program. Handlers must be pure functions of their arguments.
pub trait ControllerProgram: Send + Sync {
    fn name(&self) -> &str;

    fn initial_state(&self) -> ControllerState;

    fn packet_in(&self, pkt: &Packet, sw: SwitchId, cs: &ControllerState) -> HandlerOutput;

    fn barrier_reply(
        &self,
        barrier: BarrierId,
        sw: SwitchId,
        cs: &ControllerState,
    ) -> HandlerOutput;

    fn flow_removed(&self, rule: &Rule, sw: SwitchId, cs: &ControllerState) -> HandlerOutput;

    /// The program's claim that its handlers commute.
    fn declared_order_insensitive(&self) -> bool;

    fn registers_written_by_flow_removed(&self) -> BTreeSet<String>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduling {
    RoundRobin,
    LeastConnections,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalPolicy {
    /// Release the session's load only.
    Naive,
    /// Release, then move one session from the most to the least loaded
    /// server when the spread exceeds one.
    Rebalance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ServerInfo {
    pub addr: EndpointId,
    pub port: PortId,
}

pub const REG_SERVER: &str = "server";
pub const REG_SLOAD: &str = "sLoad";
pub const REG_DEPL_SESSIONS: &str = "deplSessions";
pub const REG_DODGY: &str = "dodgy";
pub const REG_SESSION_SERVER: &str = "sessionServer";

const RULE_PRIORITY: u16 = 1;

/// Load balancer and stateful firewall in front of a server cluster.
///
/// Registers:
/// - `server`: last chosen server, 1-based, 0 before the first session;
/// - `sLoad[i]`: active sessions on server `i` (0-based);
/// - `deplSessions[a]`: 1 while client address `a` has an installed session;
/// - `dodgy`: the non-whitelisted address, -1 when there is none;
/// - `sessionServer[a]`: 1-based server currently holding `a`'s session, 0
///   for none. Flow-removed handling releases load against this register.
#[derive(Clone, Debug)]
pub struct LoadBalancer {
    name: String,
    scheduling: Scheduling,
    removal: RemovalPolicy,
    servers: Vec<ServerInfo>,
    dodgy: Option<EndpointId>,
    address_space: usize,
}

impl LoadBalancer {
    pub fn new(
        name: impl Into<String>,
        scheduling: Scheduling,
        removal: RemovalPolicy,
        servers: Vec<ServerInfo>,
        dodgy: Option<EndpointId>,
        address_space: usize,
    ) -> Self {
        LoadBalancer {
            name: name.into(),
            scheduling,
            removal,
            servers,
            dodgy,
            address_space,
        }
    }

    /// Builds the program for `topo`: servers in host-id order, their ports on
    /// the switch they attach to.
    pub fn for_topology(
        name: impl Into<String>,
        scheduling: Scheduling,
        removal: RemovalPolicy,
        topo: &Topology,
    ) -> Result<Self, ConfigError> {
        let servers = topo.hosts_with_role(HostRole::Server);
        if servers.is_empty() {
            return Err(ConfigError::MissingRole("server"));
        }
        if !topo.host_ids().any(|h| topo.host(h).role.is_client()) {
            return Err(ConfigError::MissingRole("client"));
        }
        let dodgy = topo.hosts_with_role(HostRole::DodgyClient);
        if dodgy.len() > 1 {
            return Err(ConfigError::Controller(format!(
                "at most one dodgy client is supported, found {}",
                dodgy.len()
            )));
        }
        let mut switch = None;
        let mut infos = Vec::with_capacity(servers.len());
        for h in servers {
            let iface = topo
                .attachment(h)
                .ok_or_else(|| ConfigError::Controller(format!("server {h} is not attached")))?;
            let sw = iface.device.as_switch().ok_or_else(|| {
                ConfigError::Controller(format!("server {h} is not attached to a switch"))
            })?;
            if *switch.get_or_insert(sw) != sw {
                return Err(ConfigError::Controller(
                    "all servers must attach to the same switch".into(),
                ));
            }
            infos.push(ServerInfo {
                addr: topo.host(h).addr,
                port: iface.port,
            });
        }
        Ok(LoadBalancer::new(
            name,
            scheduling,
            removal,
            infos,
            dodgy.first().map(|&h| topo.host(h).addr),
            topo.address_space(),
        ))
    }

    pub fn servers(&self) -> &[ServerInfo] {
        &self.servers
    }

    pub fn dodgy(&self) -> Option<EndpointId> {
        self.dodgy
    }

    pub fn scheduling(&self) -> Scheduling {
        self.scheduling
    }

    pub fn removal(&self) -> RemovalPolicy {
        self.removal
    }

    fn server_index_of_addr(&self, addr: EndpointId) -> Option<usize> {
        self.servers.iter().position(|s| s.addr == addr)
    }
}

/// Index of the smallest value, lowest index on ties.
pub fn argmin(values: &[i64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[i64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

struct LbRegs<'a> {
    cs: &'a mut ControllerState,
}

impl LbRegs<'_> {
    fn arr(&mut self, name: &str) -> &mut Vec<i64> {
        self.cs
            .array_mut(name)
            .unwrap_or_else(|| panic!("register {name} missing"))
    }
}

impl ControllerProgram for LoadBalancer {
    fn name(&self) -> &str {
        &self.name
    }

    fn initial_state(&self) -> ControllerState {
        ControllerState::new([
            (REG_SERVER, RegValue::Int(0)),
            (REG_SLOAD, RegValue::Array(vec![0; self.servers.len()])),
            (
                REG_DEPL_SESSIONS,
                RegValue::Array(vec![0; self.address_space]),
            ),
            (
                REG_DODGY,
                RegValue::Int(self.dodgy.map_or(-1, |d| i64::from(d.0))),
            ),
            (
                REG_SESSION_SERVER,
                RegValue::Array(vec![0; self.address_space]),
            ),
        ])
    }

    fn packet_in(&self, pkt: &Packet, sw: SwitchId, cs: &ControllerState) -> HandlerOutput {
        if Some(pkt.src) == self.dodgy {
            return HandlerOutput::unchanged(cs);
        }
        let mut next = cs.clone();
        let mut emissions = Vec::new();
        let client = pkt.src.index();
        let deployed = next.array(REG_DEPL_SESSIONS).unwrap()[client] != 0;
        if !deployed {
            let n = self.servers.len() as i64;
            let server = match self.scheduling {
                Scheduling::RoundRobin => next.int(REG_SERVER).unwrap() % n + 1,
                Scheduling::LeastConnections => argmin(next.array(REG_SLOAD).unwrap()) as i64 + 1,
            };
            next.set_int(REG_SERVER, server);
            let target = self.servers[(server - 1) as usize];

            let rule = Rule::new(
                Some(pkt.src),
                None,
                Some(pkt.in_port),
                FwdAction::Port(target.port),
                RULE_PRIORITY,
                false,
            )
            .unwrap();
            let rule_s = Rule::new(
                Some(target.addr),
                Some(pkt.src),
                None,
                FwdAction::Port(pkt.in_port),
                RULE_PRIORITY,
                true,
            )
            .unwrap();
            emissions.push(Emission::Message {
                sw,
                msg: ControlMessage::add(rule),
            });
            emissions.push(Emission::Message {
                sw,
                msg: ControlMessage::add(rule_s),
            });
            if let Some(dodgy) = self.dodgy {
                let rule_d = Rule::new(
                    Some(dodgy),
                    None,
                    None,
                    FwdAction::Drop,
                    RULE_PRIORITY,
                    false,
                )
                .unwrap();
                emissions.push(Emission::Message {
                    sw,
                    msg: ControlMessage::add(rule_d),
                });
            }

            let mut regs = LbRegs { cs: &mut next };
            regs.arr(REG_SLOAD)[(server - 1) as usize] += 1;
            regs.arr(REG_DEPL_SESSIONS)[client] = 1;
            regs.arr(REG_SESSION_SERVER)[client] = server;
        }
        let server = next.int(REG_SERVER).unwrap();
        if server > 0 {
            emissions.push(Emission::PacketOut {
                sw,
                pkt: *pkt,
                port: self.servers[(server - 1) as usize].port,
            });
        }
        HandlerOutput {
            cs: next,
            emissions,
        }
    }

    fn barrier_reply(&self, _: BarrierId, _: SwitchId, cs: &ControllerState) -> HandlerOutput {
        HandlerOutput::unchanged(cs)
    }

    fn flow_removed(&self, rule_s: &Rule, sw: SwitchId, cs: &ControllerState) -> HandlerOutput {
        let Some(client) = rule_s.match_dst else {
            return HandlerOutput::unchanged(cs);
        };
        let client = client.index();
        let mut next = cs.clone();
        let mut emissions = Vec::new();
        let mut regs = LbRegs { cs: &mut next };

        // The notification may name the server the session was installed on
        // even after a rebalance moved it; release against the tracked one.
        let held = regs.arr(REG_SESSION_SERVER)[client];
        if held == 0 {
            return HandlerOutput::unchanged(cs);
        }
        debug_assert!(
            rule_s
                .match_src
                .and_then(|a| self.server_index_of_addr(a))
                .is_some(),
            "flow-removed rule {rule_s} is not a symmetric rule"
        );
        let held_idx = (held - 1) as usize;
        let load = regs.arr(REG_SLOAD);
        assert!(
            load[held_idx] > 0,
            "sLoad[{held_idx}] would drop below zero"
        );
        load[held_idx] -= 1;
        regs.arr(REG_DEPL_SESSIONS)[client] = 0;
        regs.arr(REG_SESSION_SERVER)[client] = 0;

        if self.removal == RemovalPolicy::Rebalance {
            let load = regs.arr(REG_SLOAD).clone();
            let hi = argmax(&load);
            let lo = argmin(&load);
            if load[hi] - load[lo] > 1 {
                let moved = regs
                    .arr(REG_SESSION_SERVER)
                    .iter()
                    .position(|&s| s == hi as i64 + 1)
                    .unwrap_or_else(|| {
                        panic!("sLoad[{hi}]={} but no session is tracked on it", load[hi])
                    });
                let moved_addr = EndpointId(moved as u16);
                let (from, to) = (self.servers[hi], self.servers[lo]);
                emissions.push(Emission::Message {
                    sw,
                    msg: ControlMessage::modify(
                        RulePattern {
                            src: Some(moved_addr),
                            ..Default::default()
                        },
                        RulePatch {
                            fwd: Some(FwdAction::Port(to.port)),
                            ..Default::default()
                        },
                    ),
                });
                emissions.push(Emission::Message {
                    sw,
                    msg: ControlMessage::modify(
                        RulePattern {
                            src: Some(from.addr),
                            dst: Some(moved_addr),
                            in_port: None,
                        },
                        RulePatch {
                            match_src: Some(to.addr),
                            ..Default::default()
                        },
                    ),
                });
                let load = regs.arr(REG_SLOAD);
                load[hi] -= 1;
                load[lo] += 1;
                regs.arr(REG_SESSION_SERVER)[moved] = lo as i64 + 1;
            }
        }
        HandlerOutput {
            cs: next,
            emissions,
        }
    }

    fn declared_order_insensitive(&self) -> bool {
        true
    }

    fn registers_written_by_flow_removed(&self) -> BTreeSet<String> {
        [REG_SLOAD, REG_DEPL_SESSIONS, REG_SESSION_SERVER]
            .into_iter()
            .map(String::from)
            .collect()
    }
}

pub const BUILTIN_CONTROLLERS: [&str; 3] = ["rr-naive", "lc-naive", "lc-rebalance"];

/// `rr-naive`: round-robin + naive removal; `lc-naive`: least connections +
/// naive removal; `lc-rebalance`: least connections + rebalancing removal.
pub fn builtin_controller(name: &str, topo: &Topology) -> Result<LoadBalancer, ConfigError> {
    let (scheduling, removal) = match name {
        "rr-naive" => (Scheduling::RoundRobin, RemovalPolicy::Naive),
        "lc-naive" => (Scheduling::LeastConnections, RemovalPolicy::Naive),
        "lc-rebalance" => (Scheduling::LeastConnections, RemovalPolicy::Rebalance),
        other => return Err(ConfigError::UnknownController(other.to_string())),
    };
    LoadBalancer::for_topology(name, scheduling, removal, topo)
}

/// A pair of handler actions whose two execution orders end in different
/// states.
#[derive(Clone, Debug, Serialize)]
pub struct OrderWitness {
    pub state: StateDigest,
    pub first: Action,
    pub second: Action,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OrderSensitivityReport {
    pub states_checked: usize,
    pub pairs_checked: usize,
    pub witnesses: Vec<OrderWitness>,
}

impl OrderSensitivityReport {
    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }
}

/// Runs every pair of co-enabled handler actions (ctrl, bsync, fsync) in both
/// orders on each sampled state and reports pairs whose results differ.
/// An empty report is evidence, not proof, of order-insensitivity.
pub fn check_order_sensitivity<'a>(
    cp: &dyn ControllerProgram,
    topo: &Topology,
    sample: impl IntoIterator<Item = &'a GlobalState>,
) -> OrderSensitivityReport {
    let mut report = OrderSensitivityReport::default();
    for s in sample {
        let handlers: Vec<Action> = enabled_actions(s, topo, cp)
            .into_iter()
            .filter(|a| a.kind().is_handler())
            .collect();
        if handlers.len() < 2 {
            continue;
        }
        report.states_checked += 1;
        for (i, a) in handlers.iter().enumerate() {
            for b in &handlers[i + 1..] {
                report.pairs_checked += 1;
                let s1 = apply(s, a, topo, cp);
                let s2 = apply(&s1, &rebind(b, &s1), topo, cp);
                let s3 = apply(s, b, topo, cp);
                let s4 = apply(&s3, &rebind(a, &s3), topo, cp);
                if canonical_hash(&s2) != canonical_hash(&s4) {
                    report.witnesses.push(OrderWitness {
                        state: canonical_hash(s),
                        first: a.clone(),
                        second: b.clone(),
                    });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_topology, generate_topology};

    fn lb(name: &str) -> LoadBalancer {
        let topo = build_topology(&generate_topology(4, 2, 1).unwrap()).unwrap();
        builtin_controller(name, &topo).unwrap()
    }

    fn pkt(src: u16, port: u16) -> Packet {
        Packet::new(EndpointId(src), EndpointId(6), PortId(port))
    }

    fn with_load(cp: &LoadBalancer, load: &[i64]) -> ControllerState {
        let mut cs = cp.initial_state();
        *cs.array_mut(REG_SLOAD).unwrap() = load.to_vec();
        cs
    }

    fn rules_added(out: &HandlerOutput) -> Vec<Rule> {
        out.emissions
            .iter()
            .filter_map(|e| match e {
                Emission::Message {
                    msg: ControlMessage::FlowMod(FlowMod::Add { rule }),
                    ..
                } => Some(*rule),
                _ => None,
            })
            .collect()
    }

    /// Simulates a tracked session on `server` (1-based) for `client`.
    fn track(cs: &mut ControllerState, client: usize, server: i64) {
        cs.array_mut(REG_DEPL_SESSIONS).unwrap()[client] = 1;
        cs.array_mut(REG_SESSION_SERVER).unwrap()[client] = server;
    }

    fn sym_rule(cp: &LoadBalancer, server: usize, client: u16) -> Rule {
        Rule::new(
            Some(cp.servers()[server].addr),
            Some(EndpointId(client)),
            None,
            FwdAction::Port(PortId(client + 1)),
            1,
            true,
        )
        .unwrap()
    }

    #[test]
    fn first_round_robin_session_goes_to_server_one() {
        let cp = lb("rr-naive");
        let out = cp.packet_in(&pkt(0, 1), SwitchId(0), &cp.initial_state());
        assert_eq!(out.emissions.len(), 4);
        assert_eq!(out.cs.array(REG_SLOAD).unwrap(), &[1, 0]);
        assert_eq!(out.cs.int(REG_SERVER), Some(1));
        assert!(matches!(
            out.emissions.last(),
            Some(Emission::PacketOut {
                port: PortId(5),
                ..
            })
        ));
        let rules = rules_added(&out);
        assert_eq!(rules.iter().filter(|r| r.timeout).count(), 1);
        assert_eq!(rules[1].match_src, Some(EndpointId(4)));
        assert_eq!(rules[1].match_dst, Some(EndpointId(0)));
        assert_eq!(rules[1].fwd, FwdAction::Port(PortId(1)));
    }

    #[test]
    fn round_robin_alternates() {
        let cp = lb("rr-naive");
        let a = cp.packet_in(&pkt(0, 1), SwitchId(0), &cp.initial_state());
        let b = cp.packet_in(&pkt(1, 2), SwitchId(0), &a.cs);
        let c = cp.packet_in(&pkt(2, 3), SwitchId(0), &b.cs);
        assert_eq!(c.cs.array(REG_SLOAD).unwrap(), &[2, 1]);
    }

    #[test]
    fn dodgy_packet_is_ignored() {
        let cp = lb("rr-naive");
        let cs = cp.initial_state();
        let out = cp.packet_in(&pkt(3, 4), SwitchId(0), &cs);
        assert_eq!(out.cs, cs);
        assert!(out.emissions.is_empty());
    }

    #[test]
    fn repeat_packet_in_only_forwards() {
        let cp = lb("lc-naive");
        let a = cp.packet_in(&pkt(0, 1), SwitchId(0), &cp.initial_state());
        let b = cp.packet_in(&pkt(0, 1), SwitchId(0), &a.cs);
        assert_eq!(b.cs, a.cs);
        assert_eq!(b.emissions.len(), 1);
        assert!(matches!(b.emissions[0], Emission::PacketOut { .. }));
    }

    #[test]
    fn least_connections_picks_argmin() {
        let cp = lb("lc-naive");
        // Every ordering of a two-element load vector: argmin by enumeration.
        for load in [[2, 1], [1, 2], [1, 1], [0, 3]] {
            let expected = if load[1] < load[0] { 2 } else { 1 };
            let out = cp.packet_in(&pkt(0, 1), SwitchId(0), &with_load(&cp, &load));
            assert_eq!(out.cs.int(REG_SERVER), Some(expected), "load {load:?}");
        }
    }

    #[test]
    fn dodgy_traffic_is_only_ever_dropped() {
        for name in BUILTIN_CONTROLLERS {
            let cp = lb(name);
            let mut cs = cp.initial_state();
            for c in 0..3u16 {
                let out = cp.packet_in(&pkt(c, c + 1), SwitchId(0), &cs);
                for r in rules_added(&out) {
                    if r.match_src == cp.dodgy() {
                        assert_eq!(r.fwd, FwdAction::Drop);
                    }
                }
                cs = out.cs;
            }
        }
    }

    #[test]
    fn naive_removal_releases_load() {
        let cp = lb("lc-naive");
        let mut cs = with_load(&cp, &[2, 1]);
        track(&mut cs, 0, 1);
        track(&mut cs, 2, 1);
        track(&mut cs, 1, 2);
        let out = cp.flow_removed(&sym_rule(&cp, 0, 0), SwitchId(0), &cs);
        assert_eq!(out.cs.array(REG_SLOAD).unwrap(), &[1, 1]);
        assert_eq!(out.cs.array(REG_DEPL_SESSIONS).unwrap()[0], 0);
        assert!(out.emissions.is_empty());

        let out2 = cp.flow_removed(&sym_rule(&cp, 1, 1), SwitchId(0), &cs);
        assert_eq!(out2.cs.array(REG_DEPL_SESSIONS).unwrap()[1], 0);
        assert_eq!(out2.cs.array(REG_SLOAD).unwrap(), &[2, 0]);
    }

    #[test]
    fn naive_removal_is_inverse_of_installation() {
        let cp = lb("lc-naive");
        let mut cs = with_load(&cp, &[1, 1]);
        track(&mut cs, 1, 2);
        track(&mut cs, 0, 1);
        let added = cp.packet_in(&pkt(2, 3), SwitchId(0), &cs);
        assert_eq!(added.cs.array(REG_SLOAD).unwrap(), &[2, 1]);
        let removed = cp.flow_removed(&sym_rule(&cp, 0, 2), SwitchId(0), &added.cs);
        assert_eq!(removed.cs.array(REG_SLOAD).unwrap(), &[1, 1]);
    }

    #[test]
    fn rebalance_moves_one_session() {
        let cp = lb("lc-rebalance");
        // Three sessions on server 1, one on server 2; server 2 loses one.
        let mut cs = with_load(&cp, &[3, 2]);
        track(&mut cs, 0, 1);
        track(&mut cs, 1, 1);
        track(&mut cs, 2, 1);
        track(&mut cs, 3, 2);
        track(&mut cs, 5, 2);
        let out = cp.flow_removed(&sym_rule(&cp, 1, 3), SwitchId(0), &cs);
        // [3,1] after the release, rebalanced to [2,2].
        assert_eq!(out.cs.array(REG_SLOAD).unwrap(), &[2, 2]);
        assert_eq!(out.emissions.len(), 2);
        assert_eq!(out.cs.array(REG_SESSION_SERVER).unwrap()[0], 2);
        let sum: i64 = out.cs.array(REG_SLOAD).unwrap().iter().sum();
        assert_eq!(sum, 4);
    }

    #[test]
    fn rebalance_guard_by_enumeration() {
        let cp = lb("lc-rebalance");
        for a in 0..=3i64 {
            for b in 0..=3i64 {
                if a == 0 {
                    continue;
                }
                // Release one session from server 1.
                let mut cs = with_load(&cp, &[a, b]);
                for c in 0..a as usize {
                    track(&mut cs, c, 1);
                }
                for c in a as usize..(a + b) as usize {
                    track(&mut cs, c, 2);
                }
                let out = cp.flow_removed(&sym_rule(&cp, 0, 0), SwitchId(0), &cs);
                let (x, y) = (a - 1, b);
                let rebalanced = (x - y).abs() > 1;
                assert_eq!(!out.emissions.is_empty(), rebalanced, "load [{a},{b}]");
                let load = out.cs.array(REG_SLOAD).unwrap();
                assert_eq!(load.iter().sum::<i64>(), x + y);
                if !rebalanced {
                    assert_eq!(load, &[x, y]);
                }
            }
        }
    }

    #[test]
    fn balanced_release_emits_nothing() {
        let cp = lb("lc-rebalance");
        let mut cs = with_load(&cp, &[2, 2]);
        track(&mut cs, 0, 1);
        track(&mut cs, 1, 1);
        let out = cp.flow_removed(&sym_rule(&cp, 0, 0), SwitchId(0), &cs);
        assert_eq!(out.cs.array(REG_SLOAD).unwrap(), &[1, 2]);
        assert!(out.emissions.is_empty());
    }

    #[test]
    fn handlers_are_pure() {
        for name in BUILTIN_CONTROLLERS {
            let cp = lb(name);
            let cs = cp.initial_state();
            assert_eq!(
                cp.packet_in(&pkt(1, 2), SwitchId(0), &cs),
                cp.packet_in(&pkt(1, 2), SwitchId(0), &cs)
            );
        }
    }

    #[test]
    fn unknown_controller_name() {
        let topo = build_topology(&generate_topology(2, 1, 0).unwrap()).unwrap();
        assert!(matches!(
            builtin_controller("nope", &topo),
            Err(ConfigError::UnknownController(_))
        ));
    }

    #[test]
    fn argmin_argmax_prefer_lowest_index() {
        assert_eq!(argmin(&[1, 1, 0, 0]), 2);
        assert_eq!(argmax(&[3, 1, 3]), 0);
    }
}
