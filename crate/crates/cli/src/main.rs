use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sdncheck::proplang::BUILTIN_PROPERTIES;
use sdncheck::report::{render_counterexample, RunReport};
use sdncheck::topology::WorkloadConfig;
use sdncheck::*;

#[derive(Parser)]
#[command(
    name = "sdncheck",
    version,
    about = "Explicit-state model checker for SDN controllers with flow timeouts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a property of a controller on a topology.
    Check(CheckArgs),
    /// Print a generated single-switch load-balancer topology.
    GenTopo(GenTopoArgs),
    /// Run lc-rebalance over a grid of topology sizes, with and without reduction.
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Bfs,
    Dfs,
}

#[derive(Args)]
struct CheckArgs {
    /// Topology JSON; a missing workload means one packet per client.
    #[arg(long)]
    topology: PathBuf,
    /// rr-naive, lc-naive or lc-rebalance.
    #[arg(long)]
    controller: String,
    /// A built-in property name or a path to a property JSON document.
    #[arg(long, default_value = BUILTIN_PROPERTIES[0])]
    property: String,
    /// Load-spread bound of the built-in property.
    #[arg(long, default_value_t = 2)]
    bound: i64,
    #[arg(long, value_enum, default_value = "off")]
    por: Switch,
    /// Assert that flow-removed handling never changes the property's truth,
    /// enabling the reduction for properties that read controller registers.
    #[arg(long)]
    assume_invariant: bool,
    #[arg(long, value_enum, default_value = "bfs")]
    order: Order,
    #[arg(long)]
    max_states: Option<usize>,
    /// Seconds before the run stops with BoundExceeded.
    #[arg(long)]
    time_limit: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenTopoArgs {
    #[arg(long)]
    clients: u16,
    #[arg(long)]
    servers: u16,
    #[arg(long, default_value_t = 1)]
    dodgy: u16,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Client counts, `N` or `LO..HI` (inclusive).
    #[arg(long, value_parser = parse_range)]
    clients: Range,
    #[arg(long, value_parser = parse_range)]
    servers: Range,
    /// Per-cell timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    #[arg(long)]
    max_states: Option<usize>,
    #[arg(long)]
    assume_invariant: bool,
    #[arg(long, default_value_t = 2)]
    bound: i64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug)]
struct Range {
    lo: u16,
    hi: u16,
}

fn parse_range(s: &str) -> Result<Range, String> {
    let num = |t: &str| t.trim().parse::<u16>().map_err(|e| format!("'{t}': {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let n = num(s)?;
            (n, n)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok(Range { lo, hi })
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
enum Failure {
    Io(PathBuf, std::io::Error),
    Topology(String),
    Controller(String),
    Property(String),
    Usage(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(..) => 10,
            Failure::Topology(_) => 11,
            Failure::Controller(_) => 12,
            Failure::Property(_) => 13,
            Failure::Usage(_) => 14,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(path, e) => write!(f, "{}: {e}", path.display()),
            Failure::Topology(m) => write!(f, "topology: {m}"),
            Failure::Controller(m) => write!(f, "controller: {m}"),
            Failure::Property(m) => write!(f, "property: {m}"),
            Failure::Usage(m) => f.write_str(m),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn load_property(
    arg: &str,
    topo: &Topology,
    bound: i64,
    cp: &dyn ControllerProgram,
) -> Result<Property, Failure> {
    if BUILTIN_PROPERTIES.contains(&arg) {
        return builtin_property(arg, topo, bound).map_err(|e| Failure::Property(e.to_string()));
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Failure::Property(
            ConfigError::UnknownProperty(arg.to_string()).to_string(),
        ));
    }
    let property: Property = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Property(format!("{}: {e}", path.display())))?;
    property
        .validate(topo, &cp.initial_state())
        .map_err(|e| Failure::Property(e.to_string()))?;
    Ok(property)
}

fn check(args: &CheckArgs) -> Result<Verdict, Failure> {
    let config = TopologyConfig::from_json(&read(&args.topology)?)
        .map_err(|e| Failure::Topology(e.to_string()))?;
    let topo = build_topology(&config).map_err(|e| Failure::Topology(e.to_string()))?;
    let cp = builtin_controller(&args.controller, &topo)
        .map_err(|e| Failure::Controller(e.to_string()))?;
    let workload = config
        .workload
        .clone()
        .unwrap_or_else(|| WorkloadConfig::default_for(&topo));
    let s0 = initial_state(&topo, &workload, &cp).map_err(|e| Failure::Topology(e.to_string()))?;
    let property = load_property(&args.property, &topo, args.bound, &cp)?;

    let opts = ExplorationOptions {
        por: matches!(args.por, Switch::On),
        search_order: match args.order {
            Order::Bfs => SearchOrder::BreadthFirst,
            Order::Dfs => SearchOrder::DepthFirst,
        },
        max_states: args.max_states,
        time_limit: args.time_limit.map(Duration::from_secs),
        worker_count: usize::from(args.workers),
        assume_invariant: args.assume_invariant,
        ..Default::default()
    };
    let result = explore(&topo, &s0, &cp, &property, &opts);
    let report = RunReport::new(&args.controller, &args.property, &result);
    let json = report.to_json();

    let mut human = format!(
        "{:?}: {} states, {} transitions, {} ms\n",
        report.verdict, report.states_explored, report.transitions, report.elapsed_ms
    );
    if let Some(cx) = &report.counterexample {
        human.push_str(&render_counterexample(cx));
    }
    match &args.output {
        Some(path) => {
            write(path, &json)?;
            print!("{human}");
        }
        None => {
            print!("{json}");
            eprint!("{human}");
        }
    }
    Ok(report.verdict)
}

fn gen_topo(args: &GenTopoArgs) -> Result<(), Failure> {
    let config = generate_topology(args.clients, args.servers, args.dodgy)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let mut json = serde_json::to_string_pretty(&config).expect("topology serializes");
    json.push('\n');
    match &args.output {
        Some(path) => write(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Cell {
    clients: u16,
    servers: u16,
    por: bool,
    verdict: Verdict,
    states_explored: usize,
    transitions: usize,
    elapsed_ms: u64,
    terminated: bool,
}

#[derive(Serialize)]
struct ScalingTable {
    controller: &'static str,
    property: &'static str,
    timeout_s: u64,
    cells: Vec<Cell>,
}

fn scaling(args: &ScalingArgs) -> Result<(), Failure> {
    let controller = "lc-rebalance";
    let property = BUILTIN_PROPERTIES[0];
    let mut table = ScalingTable {
        controller,
        property,
        timeout_s: args.timeout,
        cells: Vec::new(),
    };
    println!(
        "{:>7} {:>7} {:>5} {:>14} {:>10} {:>9}",
        "clients", "servers", "por", "verdict", "states", "ms"
    );
    for clients in args.clients.lo..=args.clients.hi {
        for servers in args.servers.lo..=args.servers.hi {
            let config = generate_topology(clients, servers, 1)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let topo = build_topology(&config).map_err(|e| Failure::Topology(e.to_string()))?;
            let cp = builtin_controller(controller, &topo)
                .map_err(|e| Failure::Controller(e.to_string()))?;
            let workload = config
                .workload
                .as_ref()
                .expect("generated topologies carry a workload");
            let s0 = initial_state(&topo, workload, &cp)
                .map_err(|e| Failure::Topology(e.to_string()))?;
            let phi = builtin_property(property, &topo, args.bound)
                .map_err(|e| Failure::Property(e.to_string()))?;
            for por in [false, true] {
                let opts = ExplorationOptions {
                    por,
                    assume_invariant: args.assume_invariant,
                    max_states: args.max_states,
                    time_limit: Some(Duration::from_secs(args.timeout)),
                    ..Default::default()
                };
                let r = explore(&topo, &s0, &cp, &phi, &opts);
                let terminated = r.verdict != Verdict::BoundExceeded;
                println!(
                    "{clients:>7} {servers:>7} {:>5} {:>14} {:>10} {:>9}",
                    if por { "on" } else { "off" },
                    if terminated {
                        format!("{:?}", r.verdict)
                    } else {
                        "-".to_string()
                    },
                    r.states_explored,
                    r.elapsed_ms
                );
                table.cells.push(Cell {
                    clients,
                    servers,
                    por,
                    verdict: r.verdict,
                    states_explored: r.states_explored,
                    transitions: r.transitions_fired,
                    elapsed_ms: r.elapsed_ms,
                    terminated,
                });
            }
        }
    }
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::Io(args.out_dir.clone(), e))?;
    let mut json = serde_json::to_string_pretty(&table).expect("table serializes");
    json.push('\n');
    write(&args.out_dir.join("scaling.json"), &json)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                Failure::Usage(String::new()).exit_code()
            } else {
                0
            });
        }
    };
    let outcome = match &cli.command {
        Command::Check(args) => check(args).map(|v| v.exit_code() as u8),
        Command::GenTopo(args) => gen_topo(args).map(|()| 0),
        Command::Scaling(args) => scaling(args).map(|()| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
