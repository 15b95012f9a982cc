use thiserror::Error;

/// Errors raised while loading or validating a model configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(String),

    #[error("duplicate {kind} id {id}")]
    DuplicateDevice { kind: &'static str, id: u16 },

    #[error("{kind} ids must be contiguous from 0: expected {expected}, found {got}")]
    SparseDeviceIds {
        kind: &'static str,
        expected: u16,
        got: u16,
    },

    #[error("switches[id={switch}].ports lists port {port} twice")]
    DuplicatePort { switch: u16, port: u16 },

    #[error("links[{link}] references undeclared interface {iface}")]
    DanglingPort { link: usize, iface: String },

    #[error("links[{link}] maps interface {iface} a second time; links must form a bijection")]
    NonBijective { link: usize, iface: String },

    #[error("declared interface {iface} is not linked")]
    UnlinkedPort { iface: String },

    #[error("address {addr} used twice ({what})")]
    AddressClash { addr: u16, what: String },

    #[error("{key} references unknown host {host}")]
    UnknownHost { key: String, host: u16 },

    #[error(
        "topology generator bounds violated: clients={clients} servers={servers} dodgy={dodgy}"
    )]
    GeneratorBounds {
        clients: u16,
        servers: u16,
        dodgy: u16,
    },

    #[error("built-in workload needs at least one {0}")]
    MissingRole(&'static str),

    #[error("unknown controller '{0}' (expected rr-naive, lc-naive or lc-rebalance)")]
    UnknownController(String),

    #[error("built-in controller: {0}")]
    Controller(String),

    #[error("property: {key}: {msg}")]
    Property { key: String, msg: String },

    #[error("unknown property '{0}'")]
    UnknownProperty(String),
}
