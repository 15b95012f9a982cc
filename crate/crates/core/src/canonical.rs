//! Canonical byte serialization of states and the digest derived from it.
//!
//! Sets are written in their sorted order, so two states that differ only in
//! insertion history serialize identically. Scalars are fixed-width big-endian
//! and enum tags follow declaration order, which makes the encoding of a
//! [`Rule`] sort the same way as its derived `Ord`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::model::*;

pub trait Canonical {
    fn encode(&self, out: &mut Vec<u8>);

    fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(128);
        self.encode(&mut out);
        out
    }
}

/// 128-bit digest of a state's canonical serialization.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateDigest(pub [u8; 16]);

impl StateDigest {
    pub fn of_bytes(bytes: &[u8]) -> Self {
        let full = Sha256::digest(bytes);
        let mut out = [0u8; 16];
        out.copy_from_slice(&full[..16]);
        StateDigest(out)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateDigest({})", self.to_hex())
    }
}

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex()[..12])
    }
}

impl Serialize for StateDigest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for StateDigest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 16] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 16 bytes"))?;
        Ok(StateDigest(arr))
    }
}

pub fn canonical_hash(s: &GlobalState) -> StateDigest {
    StateDigest::of_bytes(&s.canonical_bytes())
}

fn put_len(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&(n as u32).to_be_bytes());
}

impl Canonical for u16 {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_be_bytes());
    }
}

impl Canonical for u32 {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_be_bytes());
    }
}

impl Canonical for i64 {
    fn encode(&self, out: &mut Vec<u8>) {
        // Sign bit flipped so byte order follows numeric order.
        out.extend_from_slice(&((*self as u64) ^ (1 << 63)).to_be_bytes());
    }
}

impl Canonical for bool {
    fn encode(&self, out: &mut Vec<u8>) {
        out.push(*self as u8);
    }
}

impl<T: Canonical> Canonical for Option<T> {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            None => out.push(0),
            Some(v) => {
                out.push(1);
                v.encode(out);
            }
        }
    }
}

impl<A: Canonical, B: Canonical> Canonical for (A, B) {
    fn encode(&self, out: &mut Vec<u8>) {
        self.0.encode(out);
        self.1.encode(out);
    }
}

impl<T: Canonical> Canonical for BTreeSet<T> {
    fn encode(&self, out: &mut Vec<u8>) {
        put_len(out, self.len());
        for item in self {
            item.encode(out);
        }
    }
}

impl<T: Canonical> Canonical for [T] {
    fn encode(&self, out: &mut Vec<u8>) {
        put_len(out, self.len());
        for item in self {
            item.encode(out);
        }
    }
}

macro_rules! canonical_newtype {
    ($($t:ty),*) => {
        $(impl Canonical for $t {
            fn encode(&self, out: &mut Vec<u8>) {
                self.0.encode(out);
            }
        })*
    };
}

canonical_newtype!(HostId, SwitchId, PortId, EndpointId, BarrierId);

impl Canonical for Packet {
    fn encode(&self, out: &mut Vec<u8>) {
        self.src.encode(out);
        self.dst.encode(out);
        self.in_port.encode(out);
    }
}

impl Canonical for FwdAction {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            FwdAction::Port(p) => {
                out.push(0);
                p.encode(out);
            }
            // Padded to the width of the port variant.
            FwdAction::Drop => out.extend_from_slice(&[1, 0, 0]),
        }
    }
}

impl Canonical for Rule {
    fn encode(&self, out: &mut Vec<u8>) {
        self.match_src.encode(out);
        self.match_dst.encode(out);
        self.match_in_port.encode(out);
        self.priority.encode(out);
        self.fwd.encode(out);
        self.timeout.encode(out);
        self.catch_all.encode(out);
    }
}

impl Canonical for RulePattern {
    fn encode(&self, out: &mut Vec<u8>) {
        self.src.encode(out);
        self.dst.encode(out);
        self.in_port.encode(out);
    }
}

impl Canonical for RulePatch {
    fn encode(&self, out: &mut Vec<u8>) {
        self.fwd.encode(out);
        self.match_src.encode(out);
        self.match_dst.encode(out);
        self.match_in_port.encode(out);
    }
}

impl Canonical for FlowMod {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            FlowMod::Add { rule } => {
                out.push(0);
                rule.encode(out);
            }
            FlowMod::Del { rule } => {
                out.push(1);
                rule.encode(out);
            }
            FlowMod::Mod { pattern, patch } => {
                out.push(2);
                pattern.encode(out);
                patch.encode(out);
            }
        }
    }
}

impl Canonical for ControlQueue {
    fn encode(&self, out: &mut Vec<u8>) {
        put_len(out, self.segments().len());
        for seg in self.segments() {
            seg.mods.encode(out);
            seg.barrier.encode(out);
        }
    }
}

impl Canonical for SwitchState {
    fn encode(&self, out: &mut Vec<u8>) {
        self.pq.encode(out);
        self.fq.encode(out);
        self.cq.encode(out);
        self.ft.encode(out);
    }
}

impl Canonical for HostState {
    fn encode(&self, out: &mut Vec<u8>) {
        self.rcvq.encode(out);
        self.send_buf.encode(out);
    }
}

impl Canonical for RegValue {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            RegValue::Int(v) => {
                out.push(0);
                v.encode(out);
            }
            RegValue::Array(vs) => {
                out.push(1);
                vs.as_slice().encode(out);
            }
        }
    }
}

impl Canonical for ControllerState {
    fn encode(&self, out: &mut Vec<u8>) {
        put_len(out, self.registers().len());
        for reg in self.registers() {
            put_len(out, reg.name.len());
            out.extend_from_slice(reg.name.as_bytes());
            reg.value.encode(out);
        }
    }
}

impl Canonical for ControllerEnv {
    fn encode(&self, out: &mut Vec<u8>) {
        self.cs.encode(out);
        self.rq.encode(out);
        self.brq.encode(out);
        self.frq.encode(out);
    }
}

impl Canonical for GlobalState {
    fn encode(&self, out: &mut Vec<u8>) {
        self.hosts.as_slice().encode(out);
        self.switches.as_slice().encode(out);
        self.ctrl.encode(out);
    }
}

/// Inverse of [`Canonical::encode`] for the explorer's compact frontier.
pub trait Decode: Sized {
    fn decode(r: &mut Reader<'_>) -> Option<Self>;
}

pub struct Reader<'a> {
    bytes: &'a [u8],
    /// Register names to share instead of allocating per state.
    names: &'a [Register],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.bytes.len() < n {
            return None;
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Some(head)
    }

    fn byte(&mut self) -> Option<u8> {
        Some(self.take(1)?[0])
    }

    fn len(&mut self) -> Option<usize> {
        Some(u32::decode(self)? as usize)
    }
}

/// Decodes a state produced by [`Canonical::canonical_bytes`]. Register
/// names are shared with `template` where they match.
pub fn decode_state(bytes: &[u8], template: &ControllerState) -> Option<GlobalState> {
    let mut r = Reader {
        bytes,
        names: template.registers(),
    };
    let s = GlobalState::decode(&mut r)?;
    r.bytes.is_empty().then_some(s)
}

impl Decode for u16 {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(u16::from_be_bytes(r.take(2)?.try_into().ok()?))
    }
}

impl Decode for u32 {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(u32::from_be_bytes(r.take(4)?.try_into().ok()?))
    }
}

impl Decode for i64 {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        let raw = u64::from_be_bytes(r.take(8)?.try_into().ok()?);
        Some((raw ^ (1 << 63)) as i64)
    }
}

impl Decode for bool {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        match r.byte()? {
            0 => Some(false),
            1 => Some(true),
            _ => None,
        }
    }
}

impl<T: Decode> Decode for Option<T> {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        match r.byte()? {
            0 => Some(None),
            1 => Some(Some(T::decode(r)?)),
            _ => None,
        }
    }
}

impl<A: Decode, B: Decode> Decode for (A, B) {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some((A::decode(r)?, B::decode(r)?))
    }
}

impl<T: Decode + Ord> Decode for BTreeSet<T> {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        let n = r.len()?;
        (0..n).map(|_| T::decode(r)).collect()
    }
}

impl<T: Decode> Decode for Vec<T> {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        let n = r.len()?;
        (0..n).map(|_| T::decode(r)).collect()
    }
}

macro_rules! decode_newtype {
    ($($t:ident),*) => {
        $(impl Decode for $t {
            fn decode(r: &mut Reader<'_>) -> Option<Self> {
                Some($t(Decode::decode(r)?))
            }
        })*
    };
}

decode_newtype!(HostId, SwitchId, PortId, EndpointId, BarrierId);

impl Decode for Packet {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(Packet::new(
            EndpointId::decode(r)?,
            EndpointId::decode(r)?,
            PortId::decode(r)?,
        ))
    }
}

impl Decode for FwdAction {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        match r.byte()? {
            0 => Some(FwdAction::Port(PortId::decode(r)?)),
            1 => {
                r.take(2)?;
                Some(FwdAction::Drop)
            }
            _ => None,
        }
    }
}

impl Decode for Rule {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(Rule {
            match_src: Decode::decode(r)?,
            match_dst: Decode::decode(r)?,
            match_in_port: Decode::decode(r)?,
            priority: Decode::decode(r)?,
            fwd: Decode::decode(r)?,
            timeout: Decode::decode(r)?,
            catch_all: Decode::decode(r)?,
        })
    }
}

impl Decode for RulePattern {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(RulePattern {
            src: Decode::decode(r)?,
            dst: Decode::decode(r)?,
            in_port: Decode::decode(r)?,
        })
    }
}

impl Decode for RulePatch {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(RulePatch {
            fwd: Decode::decode(r)?,
            match_src: Decode::decode(r)?,
            match_dst: Decode::decode(r)?,
            match_in_port: Decode::decode(r)?,
        })
    }
}

impl Decode for FlowMod {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        match r.byte()? {
            0 => Some(FlowMod::Add {
                rule: Rule::decode(r)?,
            }),
            1 => Some(FlowMod::Del {
                rule: Rule::decode(r)?,
            }),
            2 => Some(FlowMod::Mod {
                pattern: RulePattern::decode(r)?,
                patch: RulePatch::decode(r)?,
            }),
            _ => None,
        }
    }
}

impl Decode for CqSegment {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(CqSegment {
            mods: Decode::decode(r)?,
            barrier: Decode::decode(r)?,
        })
    }
}

impl Decode for SwitchState {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(SwitchState {
            pq: Decode::decode(r)?,
            fq: Decode::decode(r)?,
            cq: ControlQueue::from_segments(Decode::decode(r)?),
            ft: Decode::decode(r)?,
        })
    }
}

impl Decode for HostState {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(HostState {
            rcvq: Decode::decode(r)?,
            send_buf: Decode::decode(r)?,
        })
    }
}

impl Decode for RegValue {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        match r.byte()? {
            0 => Some(RegValue::Int(i64::decode(r)?)),
            1 => Some(RegValue::Array(Decode::decode(r)?)),
            _ => None,
        }
    }
}

impl Decode for ControllerState {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        let n = r.len()?;
        let mut regs = Vec::with_capacity(n);
        for i in 0..n {
            let len = r.len()?;
            let raw = std::str::from_utf8(r.take(len)?).ok()?;
            let name = match r.names.get(i) {
                Some(reg) if &*reg.name == raw => reg.name.clone(),
                _ => Arc::from(raw),
            };
            regs.push(Register {
                name,
                value: RegValue::decode(r)?,
            });
        }
        Some(ControllerState::from_registers(regs))
    }
}

impl Decode for ControllerEnv {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(ControllerEnv {
            cs: Decode::decode(r)?,
            rq: Decode::decode(r)?,
            brq: Decode::decode(r)?,
            frq: Decode::decode(r)?,
        })
    }
}

impl Decode for GlobalState {
    fn decode(r: &mut Reader<'_>) -> Option<Self> {
        Some(GlobalState {
            hosts: Decode::decode(r)?,
            switches: Decode::decode(r)?,
            ctrl: Decode::decode(r)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_rule() -> impl Strategy<Value = Rule> {
        (
            proptest::option::of(0u16..4),
            proptest::option::of(0u16..4),
            proptest::option::of(0u16..4),
            0u16..3,
            proptest::option::of(0u16..4),
            any::<bool>(),
            any::<bool>(),
        )
            .prop_map(|(s, d, p, prio, fwd, timeout, catch_all)| Rule {
                match_src: s.map(EndpointId),
                match_dst: d.map(EndpointId),
                match_in_port: p.map(PortId),
                priority: prio,
                fwd: fwd.map_or(FwdAction::Drop, |p| FwdAction::Port(PortId(p))),
                timeout,
                catch_all,
            })
    }

    fn empty_state() -> GlobalState {
        GlobalState {
            hosts: vec![HostState::default(); 2],
            switches: vec![SwitchState::default()],
            ctrl: ControllerEnv::default(),
        }
    }

    proptest! {
        #[test]
        fn rule_order_agrees_with_encoding(a in arb_rule(), b in arb_rule()) {
            prop_assert_eq!(a.cmp(&b), a.canonical_bytes().cmp(&b.canonical_bytes()));
        }

        #[test]
        fn set_insertion_order_is_irrelevant(pkts in proptest::collection::vec((0u16..5, 0u16..5, 0u16..3), 0..8)) {
            let mut a = empty_state();
            let mut b = empty_state();
            for &(s, d, p) in &pkts {
                a.switches[0].pq.insert(Packet::new(EndpointId(s), EndpointId(d), PortId(p)));
            }
            for &(s, d, p) in pkts.iter().rev() {
                b.switches[0].pq.insert(Packet::new(EndpointId(s), EndpointId(d), PortId(p)));
            }
            prop_assert_eq!(canonical_hash(&a), canonical_hash(&b));
        }
    }

    #[test]
    fn hash_is_deterministic() {
        let s = empty_state();
        assert_eq!(canonical_hash(&s), canonical_hash(&s.clone()));
    }

    #[test]
    fn timeout_bit_changes_digest() {
        let rule = Rule::new(
            Some(EndpointId(1)),
            None,
            None,
            FwdAction::Port(PortId(1)),
            1,
            false,
        )
        .unwrap();
        let mut a = empty_state();
        a.switches[0].install(rule);
        let mut b = empty_state();
        b.switches[0].install(Rule {
            timeout: true,
            ..rule
        });
        assert_ne!(a.canonical_bytes(), b.canonical_bytes());
        assert_ne!(canonical_hash(&a), canonical_hash(&b));
    }

    #[test]
    fn reinserting_pq_packet_is_idempotent() {
        let mut s = empty_state();
        let pkt = Packet::new(EndpointId(0), EndpointId(3), PortId(1));
        s.switches[0].pq.insert(pkt);
        let before = s.canonical_bytes();
        s.switches[0].pq.insert(pkt);
        assert_eq!(before, s.canonical_bytes());
    }

    #[test]
    fn decode_inverts_encode() {
        let mut s = empty_state();
        let rule = Rule::new(
            Some(EndpointId(1)),
            None,
            Some(PortId(2)),
            FwdAction::Drop,
            3,
            true,
        )
        .unwrap();
        s.switches[0].install(rule);
        s.switches[0]
            .pq
            .insert(Packet::new(EndpointId(0), EndpointId(3), PortId(1)));
        s.switches[0].fq.insert((
            Packet::new(EndpointId(1), EndpointId(3), PortId(1)),
            PortId(4),
        ));
        s.switches[0].cq.push(ControlMessage::add(rule));
        s.switches[0]
            .cq
            .push(ControlMessage::BarrierReq(BarrierId(7)));
        s.switches[0].cq.push(ControlMessage::modify(
            RulePattern {
                src: Some(EndpointId(1)),
                dst: None,
                in_port: None,
            },
            RulePatch {
                fwd: Some(FwdAction::Port(PortId(2))),
                match_src: None,
                match_dst: None,
                match_in_port: None,
            },
        ));
        s.hosts[1]
            .rcvq
            .insert(Packet::new(EndpointId(0), EndpointId(1), PortId(0)));
        s.ctrl.cs = ControllerState::new([
            ("n", RegValue::Int(-4)),
            ("xs", RegValue::Array(vec![1, -2])),
        ]);
        s.ctrl.frq.insert((SwitchId(0), rule));
        s.ctrl.brq.insert((SwitchId(0), BarrierId(2)));
        let bytes = s.canonical_bytes();
        assert_eq!(decode_state(&bytes, &s.ctrl.cs), Some(s.clone()));
        assert_eq!(decode_state(&bytes[..bytes.len() - 1], &s.ctrl.cs), None);
    }

    #[test]
    fn digest_serde_round_trip() {
        let d = canonical_hash(&empty_state());
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<StateDigest>(&json).unwrap(), d);
    }
}
