//! Topology and workload configuration, validation into a [`Topology`] and
//! construction of the initial state.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::controller::ControllerProgram;
use crate::error::ConfigError;
use crate::model::*;

/// One end of a link: a device and one of its ports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interface {
    pub device: DeviceId,
    pub port: PortId,
}

impl Interface {
    pub fn host(h: u16, port: u16) -> Self {
        Interface {
            device: DeviceId::Host(HostId(h)),
            port: PortId(port),
        }
    }

    pub fn switch(sw: u16, port: u16) -> Self {
        Interface {
            device: DeviceId::Switch(SwitchId(sw)),
            port: PortId(port),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostRole {
    Client,
    DodgyClient,
    Server,
}

impl HostRole {
    pub fn is_client(self) -> bool {
        matches!(self, HostRole::Client | HostRole::DodgyClient)
    }
}

/// What a host does when `recv` fires. Built-in scenarios use `None`, which
/// leaves `recv` disabled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiveReaction {
    #[default]
    None,
    /// Take the packet out of `rcvq`.
    Consume,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchConfig {
    pub id: u16,
    pub ports: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostConfig {
    pub id: u16,
    pub addr: u16,
    pub role: HostRole,
    #[serde(default)]
    pub port: u16,
    #[serde(default, skip_serializing_if = "is_default_reaction")]
    pub on_receive: ReceiveReaction,
}

fn is_default_reaction(r: &ReceiveReaction) -> bool {
    *r == ReceiveReaction::None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub a: Interface,
    pub b: Interface,
}

/// Packets a host has queued for sending at the start of a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SendConfig {
    pub host: u16,
    /// Defaults to the cluster address.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dst: Option<u16>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub sends: Vec<SendConfig>,
}

impl WorkloadConfig {
    /// One packet per client, addressed to the cluster.
    pub fn default_for(topo: &Topology) -> Self {
        WorkloadConfig {
            sends: topo
                .hosts()
                .iter()
                .enumerate()
                .filter(|(_, h)| h.role.is_client())
                .map(|(i, _)| SendConfig {
                    host: i as u16,
                    dst: None,
                })
                .collect(),
        }
    }
}

/// The JSON document describing a network: devices, links, the cluster
/// address and (optionally) the workload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub switches: Vec<SwitchConfig>,
    pub hosts: Vec<HostConfig>,
    pub links: Vec<LinkConfig>,
    pub cluster_addr: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<WorkloadConfig>,
}

impl TopologyConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HostInfo {
    pub addr: EndpointId,
    pub role: HostRole,
    pub port: PortId,
    pub on_receive: ReceiveReaction,
}

/// Validated topology. `λ` is stored in both directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    hosts: Vec<HostInfo>,
    switch_ports: Vec<BTreeSet<PortId>>,
    links: BTreeMap<Interface, Interface>,
    cluster_addr: EndpointId,
}

impl Topology {
    pub fn hosts(&self) -> &[HostInfo] {
        &self.hosts
    }

    pub fn host(&self, h: HostId) -> &HostInfo {
        &self.hosts[h.index()]
    }

    pub fn host_ids(&self) -> impl Iterator<Item = HostId> + '_ {
        (0..self.hosts.len()).map(|i| HostId(i as u16))
    }

    pub fn switch_count(&self) -> usize {
        self.switch_ports.len()
    }

    pub fn switch_ids(&self) -> impl Iterator<Item = SwitchId> + '_ {
        (0..self.switch_ports.len()).map(|i| SwitchId(i as u16))
    }

    pub fn switch_ports(&self, sw: SwitchId) -> &BTreeSet<PortId> {
        &self.switch_ports[sw.index()]
    }

    pub fn cluster_addr(&self) -> EndpointId {
        self.cluster_addr
    }

    /// λ
    pub fn peer(&self, iface: Interface) -> Option<Interface> {
        self.links.get(&iface).copied()
    }

    pub fn links(&self) -> &BTreeMap<Interface, Interface> {
        &self.links
    }

    /// Number of undirected links.
    pub fn link_count(&self) -> usize {
        self.links.len() / 2
    }

    /// The interface on the far side of host `h`'s port.
    pub fn attachment(&self, h: HostId) -> Option<Interface> {
        let info = self.host(h);
        self.peer(Interface {
            device: DeviceId::Host(h),
            port: info.port,
        })
    }

    pub fn host_by_addr(&self, addr: EndpointId) -> Option<HostId> {
        self.hosts
            .iter()
            .position(|h| h.addr == addr)
            .map(|i| HostId(i as u16))
    }

    pub fn hosts_with_role(&self, role: HostRole) -> Vec<HostId> {
        self.host_ids()
            .filter(|&h| self.host(h).role == role)
            .collect()
    }

    /// Size of the address domain: every host address and the cluster
    /// address lie below it.
    pub fn address_space(&self) -> usize {
        self.hosts
            .iter()
            .map(|h| h.addr.index())
            .chain(std::iter::once(self.cluster_addr.index()))
            .max()
            .unwrap_or(0)
            + 1
    }
}

fn check_dense(kind: &'static str, ids: impl Iterator<Item = u16>) -> Result<(), ConfigError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ConfigError::DuplicateDevice { kind, id });
        }
    }
    if let Some((expected, &got)) = seen.iter().enumerate().find(|(i, &id)| *i as u16 != id) {
        return Err(ConfigError::SparseDeviceIds {
            kind,
            expected: expected as u16,
            got,
        });
    }
    Ok(())
}

pub fn build_topology(config: &TopologyConfig) -> Result<Topology, ConfigError> {
    check_dense("switch", config.switches.iter().map(|s| s.id))?;
    check_dense("host", config.hosts.iter().map(|h| h.id))?;

    let mut hosts_sorted: Vec<&HostConfig> = config.hosts.iter().collect();
    hosts_sorted.sort_by_key(|h| h.id);
    let mut switches_sorted: Vec<&SwitchConfig> = config.switches.iter().collect();
    switches_sorted.sort_by_key(|s| s.id);

    let mut addrs = BTreeSet::new();
    for h in &hosts_sorted {
        if !addrs.insert(h.addr) {
            return Err(ConfigError::AddressClash {
                addr: h.addr,
                what: format!("hosts[id={}].addr", h.id),
            });
        }
    }
    if addrs.contains(&config.cluster_addr) {
        return Err(ConfigError::AddressClash {
            addr: config.cluster_addr,
            what: "cluster_addr".into(),
        });
    }

    let mut declared: BTreeSet<Interface> = BTreeSet::new();
    for h in &hosts_sorted {
        declared.insert(Interface::host(h.id, h.port));
    }
    for s in &switches_sorted {
        for &p in &s.ports {
            if !declared.insert(Interface::switch(s.id, p)) {
                return Err(ConfigError::DuplicatePort {
                    switch: s.id,
                    port: p,
                });
            }
        }
    }

    let mut links = BTreeMap::new();
    for (i, link) in config.links.iter().enumerate() {
        for end in [link.a, link.b] {
            if !declared.contains(&end) {
                return Err(ConfigError::DanglingPort {
                    link: i,
                    iface: format!("{}:{}", end.device, end.port),
                });
            }
        }
        if link.a == link.b {
            return Err(ConfigError::NonBijective {
                link: i,
                iface: format!("{}:{}", link.a.device, link.a.port),
            });
        }
        for (from, to) in [(link.a, link.b), (link.b, link.a)] {
            if links.insert(from, to).is_some() {
                return Err(ConfigError::NonBijective {
                    link: i,
                    iface: format!("{}:{}", from.device, from.port),
                });
            }
        }
    }
    if let Some(unlinked) = declared.iter().find(|i| !links.contains_key(i)) {
        return Err(ConfigError::UnlinkedPort {
            iface: format!("{}:{}", unlinked.device, unlinked.port),
        });
    }

    Ok(Topology {
        hosts: hosts_sorted
            .iter()
            .map(|h| HostInfo {
                addr: EndpointId(h.addr),
                role: h.role,
                port: PortId(h.port),
                on_receive: h.on_receive,
            })
            .collect(),
        switch_ports: switches_sorted
            .iter()
            .map(|s| s.ports.iter().map(|&p| PortId(p)).collect())
            .collect(),
        links,
        cluster_addr: EndpointId(config.cluster_addr),
    })
}

/// The state with every queue empty, empty flow tables, the program's initial
/// registers, and each host's send buffer filled from `workload`.
pub fn initial_state(
    topo: &Topology,
    workload: &WorkloadConfig,
    cp: &dyn ControllerProgram,
) -> Result<GlobalState, ConfigError> {
    let mut hosts = vec![HostState::default(); topo.hosts().len()];
    for (i, send) in workload.sends.iter().enumerate() {
        let h = HostId(send.host);
        if h.index() >= hosts.len() {
            return Err(ConfigError::UnknownHost {
                key: format!("workload.sends[{i}].host"),
                host: send.host,
            });
        }
        let info = topo.host(h);
        let dst = send.dst.map_or(topo.cluster_addr(), EndpointId);
        hosts[h.index()]
            .send_buf
            .insert(Packet::new(info.addr, dst, info.port));
    }
    Ok(GlobalState {
        hosts,
        switches: vec![SwitchState::default(); topo.switch_count()],
        ctrl: ControllerEnv {
            cs: cp.initial_state(),
            ..Default::default()
        },
    })
}

/// Single-switch star shaped like the load-balancer scenario: clients on
/// switch ports `1..=clients`, servers on the following ports, the last
/// `dodgy` clients not whitelisted, one packet per client.
pub fn generate_topology(
    clients: u16,
    servers: u16,
    dodgy: u16,
) -> Result<TopologyConfig, ConfigError> {
    if clients == 0 || servers == 0 || dodgy > clients {
        return Err(ConfigError::GeneratorBounds {
            clients,
            servers,
            dodgy,
        });
    }
    let total = clients + servers;
    let hosts: Vec<HostConfig> = (0..total)
        .map(|i| HostConfig {
            id: i,
            addr: i,
            role: if i >= clients {
                HostRole::Server
            } else if i >= clients - dodgy {
                HostRole::DodgyClient
            } else {
                HostRole::Client
            },
            port: 0,
            on_receive: ReceiveReaction::None,
        })
        .collect();
    let links = (0..total)
        .map(|i| LinkConfig {
            a: Interface::host(i, 0),
            b: Interface::switch(0, i + 1),
        })
        .collect();
    Ok(TopologyConfig {
        switches: vec![SwitchConfig {
            id: 0,
            ports: (1..=total).collect(),
        }],
        hosts,
        links,
        cluster_addr: total,
        workload: Some(WorkloadConfig {
            sends: (0..clients)
                .map(|host| SendConfig { host, dst: None })
                .collect(),
        }),
    })
}
