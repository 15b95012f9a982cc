//! Value types for network states: packets, rules, control messages and the
//! global state triple of hosts, switches and controller.
//!
//! Every queue is a set. Packet queues additionally follow the (0,∞)
//! abstraction: a packet is either absent or present unboundedly often, so
//! processing a packet never removes it from `pq`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

macro_rules! id_newtype {
    ($(#[$doc:meta])* $name:ident($inner:ty), $prefix:literal) => {
        $(#[$doc])*
        #[derive(
            Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub $inner);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_newtype!(
    /// Dense host index, `0..hosts`.
    HostId(u16),
    "h"
);
id_newtype!(
    /// Dense switch index, `0..switches`.
    SwitchId(u16),
    "sw"
);
id_newtype!(
    /// Physical port, local to a device.
    PortId(u16),
    "p"
);
id_newtype!(
    /// Network address. One per host plus the cluster address.
    EndpointId(u16),
    "@"
);
id_newtype!(BarrierId(u32), "b");

/// A networking device that can terminate a link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceId {
    Host(HostId),
    Switch(SwitchId),
    Controller,
}

impl DeviceId {
    pub fn as_switch(self) -> Option<SwitchId> {
        match self {
            DeviceId::Switch(sw) => Some(sw),
            _ => None,
        }
    }

    pub fn as_host(self) -> Option<HostId> {
        match self {
            DeviceId::Host(h) => Some(h),
            _ => None,
        }
    }
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviceId::Host(h) => write!(f, "{h}"),
            DeviceId::Switch(sw) => write!(f, "{sw}"),
            DeviceId::Controller => f.write_str("ctrl"),
        }
    }
}

/// `src`/`dst` are fixed at send time; `in_port` is rewritten on every hop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Packet {
    pub src: EndpointId,
    pub dst: EndpointId,
    pub in_port: PortId,
}

impl Packet {
    pub fn new(src: EndpointId, dst: EndpointId, in_port: PortId) -> Self {
        Packet { src, dst, in_port }
    }

    pub fn with_in_port(self, in_port: PortId) -> Self {
        Packet { in_port, ..self }
    }

    /// Header identity without the hop-local port.
    pub fn flow(&self) -> (EndpointId, EndpointId) {
        (self.src, self.dst)
    }
}

impl fmt::Display for Packet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}->{} in {}]", self.src, self.dst, self.in_port)
    }
}

/// Forwarding action of a rule. `Drop` is never a physical port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FwdAction {
    Port(PortId),
    Drop,
}

impl fmt::Display for FwdAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FwdAction::Port(p) => write!(f, "{p}"),
            FwdAction::Drop => f.write_str("drop"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("rule sets no match field and is not flagged catch-all")]
pub struct EmptyMatch;

/// A flow-table entry.
///
/// The derived ordering is the canonical order used to break priority ties:
/// it agrees with byte order of the canonical encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub match_src: Option<EndpointId>,
    pub match_dst: Option<EndpointId>,
    pub match_in_port: Option<PortId>,
    pub priority: u16,
    pub fwd: FwdAction,
    pub timeout: bool,
    #[serde(default)]
    pub catch_all: bool,
}

/// The fields that identify a rule inside a flow table.
pub type RuleKey = (Option<EndpointId>, Option<EndpointId>, Option<PortId>, u16);

impl Rule {
    pub fn new(
        match_src: Option<EndpointId>,
        match_dst: Option<EndpointId>,
        match_in_port: Option<PortId>,
        fwd: FwdAction,
        priority: u16,
        timeout: bool,
    ) -> Result<Self, EmptyMatch> {
        if match_src.is_none() && match_dst.is_none() && match_in_port.is_none() {
            return Err(EmptyMatch);
        }
        Ok(Rule {
            match_src,
            match_dst,
            match_in_port,
            priority,
            fwd,
            timeout,
            catch_all: false,
        })
    }

    pub fn catch_all(fwd: FwdAction, priority: u16, timeout: bool) -> Self {
        Rule {
            match_src: None,
            match_dst: None,
            match_in_port: None,
            priority,
            fwd,
            timeout,
            catch_all: true,
        }
    }

    pub fn key(&self) -> RuleKey {
        (
            self.match_src,
            self.match_dst,
            self.match_in_port,
            self.priority,
        )
    }

    pub fn matches(&self, pkt: &Packet) -> bool {
        self.match_src.is_none_or(|s| s == pkt.src)
            && self.match_dst.is_none_or(|d| d == pkt.dst)
            && self.match_in_port.is_none_or(|p| p == pkt.in_port)
    }

    pub fn is_well_formed(&self) -> bool {
        self.catch_all
            || self.match_src.is_some()
            || self.match_dst.is_some()
            || self.match_in_port.is_some()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut sep = "";
        if let Some(s) = self.match_src {
            write!(f, "src={s}")?;
            sep = ",";
        }
        if let Some(d) = self.match_dst {
            write!(f, "{sep}dst={d}")?;
            sep = ",";
        }
        if let Some(p) = self.match_in_port {
            write!(f, "{sep}in={p}")?;
            sep = ",";
        }
        if self.catch_all {
            write!(f, "{sep}*")?;
        }
        write!(f, " -> {} prio {}", self.fwd, self.priority)?;
        if self.timeout {
            f.write_str(" timeout")?;
        }
        f.write_str("}")
    }
}

/// Match-field pattern of a `mod` message. A rule matches when every field the
/// pattern sets is equal to the rule's corresponding match field.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct RulePattern {
    pub src: Option<EndpointId>,
    pub dst: Option<EndpointId>,
    pub in_port: Option<PortId>,
}

impl RulePattern {
    pub fn selects(&self, rule: &Rule) -> bool {
        (self.src.is_none() || self.src == rule.match_src)
            && (self.dst.is_none() || self.dst == rule.match_dst)
            && (self.in_port.is_none() || self.in_port == rule.match_in_port)
    }
}

/// Replacement components of a `mod` message; unset fields are left alone.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct RulePatch {
    pub fwd: Option<FwdAction>,
    pub match_src: Option<EndpointId>,
    pub match_dst: Option<EndpointId>,
    pub match_in_port: Option<PortId>,
}

impl RulePatch {
    pub fn apply(&self, rule: &Rule) -> Rule {
        Rule {
            fwd: self.fwd.unwrap_or(rule.fwd),
            match_src: self.match_src.or(rule.match_src),
            match_dst: self.match_dst.or(rule.match_dst),
            match_in_port: self.match_in_port.or(rule.match_in_port),
            ..*rule
        }
    }
}

/// Flow-table update held in a switch control queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FlowMod {
    Add {
        rule: Rule,
    },
    Del {
        rule: Rule,
    },
    Mod {
        pattern: RulePattern,
        patch: RulePatch,
    },
}

/// A message the controller sends to a switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMessage {
    FlowMod(FlowMod),
    BarrierReq(BarrierId),
}

impl ControlMessage {
    pub fn add(rule: Rule) -> Self {
        ControlMessage::FlowMod(FlowMod::Add { rule })
    }

    pub fn del(rule: Rule) -> Self {
        ControlMessage::FlowMod(FlowMod::Del { rule })
    }

    pub fn modify(pattern: RulePattern, patch: RulePatch) -> Self {
        ControlMessage::FlowMod(FlowMod::Mod { pattern, patch })
    }
}

/// One barrier-delimited run of a control queue. Order inside `mods` is
/// immaterial; `barrier` closes the segment when present.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CqSegment {
    pub mods: BTreeSet<FlowMod>,
    pub barrier: Option<BarrierId>,
}

/// Switch control queue: a sequence of segments separated by barriers.
///
/// Normalised so that the last segment is never empty-and-unbarriered; the
/// empty queue is the empty vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlQueue {
    segments: Vec<CqSegment>,
}

impl ControlQueue {
    pub(crate) fn from_segments(segments: Vec<CqSegment>) -> Self {
        ControlQueue { segments }
    }

    pub fn segments(&self) -> &[CqSegment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn first(&self) -> Option<&CqSegment> {
        self.segments.first()
    }

    pub fn push(&mut self, msg: ControlMessage) {
        match msg {
            ControlMessage::FlowMod(fm) => match self.segments.last_mut() {
                Some(seg) if seg.barrier.is_none() => {
                    seg.mods.insert(fm);
                }
                _ => {
                    let mut seg = CqSegment::default();
                    seg.mods.insert(fm);
                    self.segments.push(seg);
                }
            },
            ControlMessage::BarrierReq(b) => match self.segments.last_mut() {
                Some(seg) if seg.barrier.is_none() => seg.barrier = Some(b),
                _ => self.segments.push(CqSegment {
                    mods: BTreeSet::new(),
                    barrier: Some(b),
                }),
            },
        }
    }

    /// Removes `fm` from the first segment. Returns false when it is not there.
    pub fn take_front(&mut self, fm: &FlowMod) -> bool {
        let Some(seg) = self.segments.first_mut() else {
            return false;
        };
        if !seg.mods.remove(fm) {
            return false;
        }
        if seg.mods.is_empty() && seg.barrier.is_none() {
            self.segments.remove(0);
        }
        true
    }

    /// The barrier that may be replied to now: the first segment is empty and
    /// closed by it.
    pub fn ready_barrier(&self) -> Option<BarrierId> {
        self.segments
            .first()
            .filter(|seg| seg.mods.is_empty())
            .and_then(|seg| seg.barrier)
    }

    pub fn pop_barrier(&mut self, b: BarrierId) -> bool {
        if self.ready_barrier() == Some(b) {
            self.segments.remove(0);
            true
        } else {
            false
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SwitchState {
    pub pq: BTreeSet<Packet>,
    pub fq: BTreeSet<(Packet, PortId)>,
    pub cq: ControlQueue,
    pub ft: BTreeSet<Rule>,
}

impl SwitchState {
    /// Installs `rule`, replacing any entry with the same match fields and
    /// priority.
    pub fn install(&mut self, rule: Rule) {
        let key = rule.key();
        self.ft.retain(|r| r.key() != key);
        self.ft.insert(rule);
    }

    pub fn uninstall(&mut self, rule: &Rule) {
        let key = rule.key();
        self.ft.retain(|r| r.key() != key);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HostState {
    pub rcvq: BTreeSet<Packet>,
    pub send_buf: BTreeSet<Packet>,
}

/// Value of a controller register.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegValue {
    Int(i64),
    Array(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Register {
    pub name: Arc<str>,
    pub value: RegValue,
}

/// Controller program state: a fixed list of named registers declared by the
/// program.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControllerState {
    regs: Vec<Register>,
}

impl ControllerState {
    pub fn new(regs: impl IntoIterator<Item = (&'static str, RegValue)>) -> Self {
        ControllerState {
            regs: regs
                .into_iter()
                .map(|(name, value)| Register {
                    name: Arc::from(name),
                    value,
                })
                .collect(),
        }
    }

    pub(crate) fn from_registers(regs: Vec<Register>) -> Self {
        ControllerState { regs }
    }

    pub fn registers(&self) -> &[Register] {
        &self.regs
    }

    pub fn get(&self, name: &str) -> Option<&RegValue> {
        self.regs
            .iter()
            .find(|r| &*r.name == name)
            .map(|r| &r.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut RegValue> {
        self.regs
            .iter_mut()
            .find(|r| &*r.name == name)
            .map(|r| &mut r.value)
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        match self.get(name)? {
            RegValue::Int(v) => Some(*v),
            RegValue::Array(_) => None,
        }
    }

    pub fn array(&self, name: &str) -> Option<&[i64]> {
        match self.get(name)? {
            RegValue::Array(v) => Some(v),
            RegValue::Int(_) => None,
        }
    }

    pub fn array_mut(&mut self, name: &str) -> Option<&mut Vec<i64>> {
        match self.get_mut(name)? {
            RegValue::Array(v) => Some(v),
            RegValue::Int(_) => None,
        }
    }

    pub fn set_int(&mut self, name: &str, value: i64) {
        if let Some(slot) = self.get_mut(name) {
            *slot = RegValue::Int(value);
        }
    }
}

impl fmt::Display for ControllerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, r) in self.regs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match &r.value {
                RegValue::Int(v) => write!(f, "{}={v}", r.name)?,
                RegValue::Array(v) => write!(f, "{}={v:?}", r.name)?,
            }
        }
        f.write_str("}")
    }
}

/// Controller program state plus its incoming queues.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ControllerEnv {
    pub cs: ControllerState,
    pub rq: BTreeSet<(SwitchId, Packet)>,
    pub brq: BTreeSet<(SwitchId, BarrierId)>,
    pub frq: BTreeSet<(SwitchId, Rule)>,
}

/// The state triple: hosts (π), switches (δ) and controller (γ). Hosts and
/// switches are indexed by their dense ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GlobalState {
    pub hosts: Vec<HostState>,
    pub switches: Vec<SwitchState>,
    pub ctrl: ControllerEnv,
}

impl GlobalState {
    pub fn host(&self, h: HostId) -> &HostState {
        &self.hosts[h.index()]
    }

    pub fn switch(&self, sw: SwitchId) -> &SwitchState {
        &self.switches[sw.index()]
    }

    pub fn host_mut(&mut self, h: HostId) -> &mut HostState {
        &mut self.hosts[h.index()]
    }

    pub fn switch_mut(&mut self, sw: SwitchId) -> &mut SwitchState {
        &mut self.switches[sw.index()]
    }
}
