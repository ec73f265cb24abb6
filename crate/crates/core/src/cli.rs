//! `secure-repair` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 unreadable input,
//! 3 bad parameters, 4 unrepairable failure pattern, 5 enumeration budget
//! exceeded.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    bounds_csv, bounds_report, verify_setup, AnalysisError, BoundsReport, EnumerationConfig,
    MessageSpace, ProtocolSetup, VerificationReport, DEFAULT_BUDGET,
};
use crate::field::FieldElement;
use crate::protocol::{
    dealer_rng, default_receivers, BandwidthReport, Network, ProtocolConfig, ProtocolError,
    ProtocolKind, RepairSession, SeededCoins, ShareStack, Transcript,
};
use crate::schemes::{LinearScheme, PlanDef, RepairPlan, SchemeDef, SchemeError};
use crate::NodeId;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PARAM: i32 = 3;
pub const EXIT_UNREPAIRABLE: i32 = 4;
pub const EXIT_BUDGET: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "secure-repair",
    version,
    about = "Secure repair of secret-shared data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a message into per-node shares.
    Encode(EncodeArgs),
    /// Fail nodes and repair them with a secure protocol.
    Repair(RepairArgs),
    /// Check repairability and security by exhaustive enumeration.
    Verify(VerifyArgs),
    /// Measured bandwidth against the lower bound and the construction's cap, as CSV.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scheme definition (JSON).
    #[arg(long)]
    pub scheme: PathBuf,
    /// Seed for every random choice; drawn from the OS when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Message symbols, comma separated, instance after instance.
    #[arg(long)]
    pub message: Option<String>,
    /// Dealer keys, comma separated, instance after instance.
    #[arg(long)]
    pub keys: Option<String>,
    /// Number of stored instances.
    #[arg(long)]
    pub instances: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Include the dealer keys in the output.
    #[arg(long)]
    pub reveal_keys: bool,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// `c2`, `c4` or `c5`.
    #[arg(long, default_value = "c2")]
    pub protocol: ProtocolKind,
    /// Nodes to fail, comma separated.
    #[arg(long)]
    pub failed: Option<String>,
    /// Helper set I, overriding the scheme file and the automatic choice.
    #[arg(long)]
    pub helpers: Option<String>,
    /// Construction-2 receivers.
    #[arg(long)]
    pub receivers: Option<String>,
    /// Shares file written by `encode`; the data is encoded in-process otherwise.
    #[arg(long)]
    pub network: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// `c2` for scalar schemes and `c5` for vector schemes when absent.
    #[arg(long)]
    pub protocol: Option<ProtocolKind>,
    /// Failed nodes to check; every node when absent.
    #[arg(long)]
    pub failed: Option<String>,
    /// Helper set I, as for `repair`.
    #[arg(long)]
    pub helpers: Option<String>,
    /// Construction-2 receivers, as for `repair`.
    #[arg(long)]
    pub receivers: Option<String>,
    /// Largest number of outcomes to enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
    /// Enumerate only the zero message and the unit messages.
    #[arg(long)]
    pub basis: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Defaults as for `verify`.
    #[arg(long)]
    pub protocol: Option<ProtocolKind>,
    /// Failed nodes, one run each; every node when absent, none when empty.
    #[arg(long)]
    pub failed: Option<String>,
    /// Helper set I, as for `repair`.
    #[arg(long)]
    pub helpers: Option<String>,
    /// Construction-2 receivers, as for `repair`.
    #[arg(long)]
    pub receivers: Option<String>,
    /// Outputs of earlier `repair` calls to report on instead of running.
    #[arg(long, num_args = 1..)]
    pub runs: Vec<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn param(message: impl Into<String>) -> Self {
        Self::new(EXIT_PARAM, message)
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        let code = match e {
            SchemeError::NoRepairFunction { .. } => EXIT_UNREPAIRABLE,
            _ => EXIT_PARAM,
        };
        Self::new(code, e.to_string())
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Scheme(s) => s.into(),
            ProtocolError::Unrepairable(_) => Self::new(EXIT_UNREPAIRABLE, e.to_string()),
            _ => Self::param(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::BudgetExceeded { .. } => Self::new(EXIT_BUDGET, e.to_string()),
            AnalysisError::Protocol(p) => p.into(),
            AnalysisError::Scheme(s) => s.into(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<i32> {
    match cmd {
        Command::Encode(a) => cmd_encode(&a),
        Command::Repair(a) => cmd_repair(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bounds(a) => cmd_bounds(&a),
    }
}

struct Loaded {
    def: SchemeDef,
    scheme: LinearScheme,
    config: ProtocolConfig,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
}

fn load_scheme(path: &Path) -> CliResult<Loaded> {
    let text = read_text(path)?;
    let def = SchemeDef::from_json(&text)
        .map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    let scheme = def.build()?;
    let config = ProtocolConfig::from_def(
        &def.protocol.clone().unwrap_or_default(),
        scheme.field(),
        scheme.params().z,
    )?;
    Ok(Loaded {
        def,
        scheme,
        config,
    })
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::param(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<u64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse().map_err(|_| {
                CliError::new(
                    EXIT_PARSE,
                    format!("{what}: {p:?} is not a non-negative integer"),
                )
            })
        })
        .collect()
}

fn parse_nodes(s: &str, what: &str, scheme: &LinearScheme) -> CliResult<Vec<NodeId>> {
    let ids = parse_list(s, what)?;
    ids.into_iter()
        .map(|i| {
            let v = NodeId(i as usize);
            scheme.check_node(v)?;
            Ok(v)
        })
        .collect()
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::thread_rng().gen())
}

fn default_protocol(scheme: &LinearScheme) -> ProtocolKind {
    if scheme.t() == 1 {
        ProtocolKind::C2
    } else {
        ProtocolKind::C5
    }
}

fn default_instances(kind: ProtocolKind, scheme: &LinearScheme) -> usize {
    match kind {
        ProtocolKind::C2 => 1,
        _ => scheme.n() - scheme.params().z,
    }
}

type Dealt = (Vec<Vec<Vec<FieldElement>>>, Vec<Vec<FieldElement>>);

/// Codewords from explicit or seeded message and keys.
fn make_codewords(
    scheme: &LinearScheme,
    data: &DataArgs,
    instances: usize,
    seed: u64,
) -> CliResult<Dealt> {
    let field = scheme.field();
    let k = scheme.message_len();
    let rho = scheme.rho();
    let mut rng = dealer_rng(seed);
    let mut symbols =
        |given: &Option<String>, what: &str, len: usize| -> CliResult<Vec<FieldElement>> {
            match given {
                Some(s) => {
                    let vals = parse_list(s, what)?;
                    if vals.len() != len {
                        return Err(CliError::param(format!(
                            "{what}: expected {len} symbols, got {}",
                            vals.len()
                        )));
                    }
                    if let Some(v) = vals.iter().find(|&&v| v >= field.order()) {
                        return Err(CliError::param(format!(
                            "{what}: {v} is not an element of {field}"
                        )));
                    }
                    Ok(field.elems(&vals))
                }
                None => Ok((0..len).map(|_| field.uniform_element(&mut rng)).collect()),
            }
        };
    let message = symbols(&data.message, "--message", k * instances)?;
    let keys = symbols(&data.keys, "--keys", rho * instances)?;
    let mut codewords = Vec::with_capacity(instances);
    let mut per_instance_keys = Vec::with_capacity(instances);
    for i in 0..instances {
        let ks = keys[i * rho..(i + 1) * rho].to_vec();
        codewords.push(scheme.encode(&message[i * k..(i + 1) * k], &ks)?);
        per_instance_keys.push(ks);
    }
    Ok((codewords, per_instance_keys))
}

fn values(v: &[FieldElement]) -> Vec<u64> {
    v.iter().map(FieldElement::value).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeShares {
    node: usize,
    /// `shares[instance][coordinate]`; empty for a failed node.
    shares: Vec<Vec<u64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SharesFile {
    seed: u64,
    instances: usize,
    nodes: Vec<NodeShares>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    keys: Option<Vec<Vec<u64>>>,
}

fn node_shares(stacks: &[ShareStack]) -> Vec<NodeShares> {
    stacks
        .iter()
        .map(|st| NodeShares {
            node: st.node.0,
            shares: st.shares.iter().map(|s| values(s)).collect(),
        })
        .collect()
}

fn cmd_encode(a: &EncodeArgs) -> CliResult<i32> {
    let loaded = load_scheme(&a.common.scheme)?;
    let scheme = &loaded.scheme;
    let seed = seed_or_entropy(a.common.seed);
    let instances = a.data.instances.unwrap_or(1);
    if instances == 0 {
        return Err(CliError::param("--instances must be positive"));
    }
    let (codewords, keys) = make_codewords(scheme, &a.data, instances, seed)?;
    let net = Network::from_codewords(scheme.clone(), &codewords)?;
    let file = SharesFile {
        seed,
        instances,
        nodes: node_shares(net.stacks()),
        keys: a
            .reveal_keys
            .then(|| keys.iter().map(|k| values(k)).collect()),
    };
    write_output(a.common.out.as_deref(), &json(&file))?;
    Ok(EXIT_OK)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load_network(path: &Path, scheme: &LinearScheme) -> CliResult<Network> {
    let text = read_text(path)?;
    let file: SharesFile = serde_json::from_str(&text)
        .map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    let field = scheme.field();
    let stacks = file
        .nodes
        .iter()
        .map(|ns| {
            let shares = ns
                .shares
                .iter()
                .map(|s| {
                    if let Some(v) = s.iter().find(|&&v| v >= field.order()) {
                        return Err(CliError::param(format!(
                            "node {}: {v} is not an element of {field}",
                            ns.node
                        )));
                    }
                    Ok(field.elems(s))
                })
                .collect::<CliResult<_>>()?;
            Ok(ShareStack {
                node: NodeId(ns.node),
                shares,
            })
        })
        .collect::<CliResult<_>>()?;
    Ok(Network::new(scheme.clone(), stacks)?)
}

/// The plan for `e`: `--helpers` if given, else the scheme file's plan for
/// `e`, else the greedy choice among `candidates`.
fn choose_plan(
    loaded: &Loaded,
    e: NodeId,
    helpers: Option<&[NodeId]>,
    candidates: &[NodeId],
) -> CliResult<RepairPlan> {
    let scheme = &loaded.scheme;
    if let Some(h) = helpers {
        let coords: Vec<usize> = (0..scheme.t()).collect();
        return Ok(scheme.derive_repair_function(e, h, &coords)?);
    }
    if let Some(def) = loaded.def.repair_plans.iter().find(|p| p.e == e.0) {
        return Ok(def.build(scheme)?);
    }
    let others: Vec<NodeId> = candidates.iter().copied().filter(|&v| v != e).collect();
    Ok(scheme.find_repair_plan(e, &others)?)
}

#[derive(Debug, Serialize)]
struct RepairRecord<'a> {
    failed: NodeId,
    plan: &'a RepairPlan,
    receivers: &'a [NodeId],
    transcript: &'a Transcript,
    bandwidth: &'a BandwidthReport,
    restored: Vec<Vec<u64>>,
}

#[derive(Debug, Serialize)]
struct RepairFile<'a> {
    seed: u64,
    protocol: ProtocolKind,
    instances: usize,
    repairs: Vec<RepairRecord<'a>>,
}

struct RepairRun {
    plan: RepairPlan,
    session: RepairSession,
    outcome: crate::protocol::RepairOutcome,
}

/// Fails `failed` and repairs them one at a time in id order.
fn run_repairs(
    loaded: &Loaded,
    mut net: Network,
    kind: ProtocolKind,
    failed: &[NodeId],
    helpers: Option<&[NodeId]>,
    receivers: Option<&[NodeId]>,
    seed: u64,
) -> CliResult<Vec<RepairRun>> {
    for &e in failed {
        net.fail(e)?;
    }
    let mut coins = SeededCoins::new(seed);
    let mut runs = Vec::new();
    let mut order: Vec<NodeId> = failed.to_vec();
    order.sort();
    order.dedup();
    for e in order {
        let plan = choose_plan(loaded, e, helpers, &net.live_nodes())?;
        if let Err(err) = plan.verify(&loaded.scheme) {
            return Err(CliError::new(
                EXIT_UNREPAIRABLE,
                format!("plan for node {e}: {err}"),
            ));
        }
        let recv = match (kind, receivers) {
            (ProtocolKind::C2, Some(r)) => r.to_vec(),
            (ProtocolKind::C2, None) => default_receivers(&net, &plan)?,
            _ => Vec::new(),
        };
        let session = RepairSession::new(kind, &loaded.scheme, &plan, &recv, &loaded.config)?;
        let outcome = session.run(&net, &mut coins)?;
        net.restore(e, outcome.repaired.clone())?;
        runs.push(RepairRun {
            plan,
            session,
            outcome,
        });
    }
    Ok(runs)
}

fn build_network(
    loaded: &Loaded,
    data: &DataArgs,
    network: Option<&Path>,
    kind: ProtocolKind,
    seed: u64,
) -> CliResult<Network> {
    match network {
        Some(p) => load_network(p, &loaded.scheme),
        None => {
            let instances = data
                .instances
                .unwrap_or_else(|| default_instances(kind, &loaded.scheme));
            if instances == 0 {
                return Err(CliError::param("--instances must be positive"));
            }
            let (codewords, _) = make_codewords(&loaded.scheme, data, instances, seed)?;
            Ok(Network::from_codewords(loaded.scheme.clone(), &codewords)?)
        }
    }
}

fn opt_nodes(
    s: &Option<String>,
    what: &str,
    scheme: &LinearScheme,
) -> CliResult<Option<Vec<NodeId>>> {
    s.as_deref()
        .map(|s| parse_nodes(s, what, scheme))
        .transpose()
}

fn cmd_repair(a: &RepairArgs) -> CliResult<i32> {
    let loaded = load_scheme(&a.common.scheme)?;
    let scheme = &loaded.scheme;
    let failed = match &a.failed {
        Some(s) => parse_nodes(s, "--failed", scheme)?,
        None => return Err(CliError::param("--failed is required")),
    };
    if failed.is_empty() {
        return Err(CliError::param("--failed names no node"));
    }
    let helpers = opt_nodes(&a.helpers, "--helpers", scheme)?;
    let receivers = opt_nodes(&a.receivers, "--receivers", scheme)?;
    let seed = seed_or_entropy(a.common.seed);
    let net = build_network(&loaded, &a.data, a.network.as_deref(), a.protocol, seed)?;
    let instances = net.instances();
    let runs = run_repairs(
        &loaded,
        net,
        a.protocol,
        &failed,
        helpers.as_deref(),
        receivers.as_deref(),
        seed,
    )?;
    let file = RepairFile {
        seed,
        protocol: a.protocol,
        instances,
        repairs: runs
            .iter()
            .map(|r| RepairRecord {
                failed: r.plan.failed(),
                plan: &r.plan,
                receivers: r.session.receivers(),
                transcript: &r.outcome.transcript,
                bandwidth: &r.outcome.bandwidth,
                restored: r.outcome.repaired.iter().map(|s| values(s)).collect(),
            })
            .collect(),
    };
    write_output(a.common.out.as_deref(), &json(&file))?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<i32> {
    let loaded = load_scheme(&a.common.scheme)?;
    let scheme = &loaded.scheme;
    let kind = a.protocol.unwrap_or_else(|| default_protocol(scheme));
    let all: Vec<NodeId> = (1..=scheme.n()).map(NodeId).collect();
    let failed = match &a.failed {
        Some(s) => parse_nodes(s, "--failed", scheme)?,
        None => all.clone(),
    };
    let helpers = opt_nodes(&a.helpers, "--helpers", scheme)?;
    let receivers = opt_nodes(&a.receivers, "--receivers", scheme)?;
    let config = EnumerationConfig {
        budget: a.budget,
        message_space: if a.basis {
            MessageSpace::Basis
        } else {
            MessageSpace::Full
        },
    };
    let mut cells = Vec::new();
    for &e in &failed {
        let plan = choose_plan(&loaded, e, helpers.as_deref(), &all)?;
        let mut setup = ProtocolSetup::new(kind, scheme, &plan, &loaded.config);
        if let Some(r) = &receivers {
            setup.receivers = r.clone();
        }
        cells.extend(verify_setup(&setup, &config)?);
    }
    let report = VerificationReport::new(config.message_space, cells);
    for c in report.failures() {
        eprintln!("FAIL {c}");
    }
    write_output(a.common.out.as_deref(), &format!("{}\n", report.to_json()))?;
    Ok(if report.all_pass {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}

#[derive(Debug, Deserialize)]
struct StoredBandwidth {
    round1_symbols: u64,
    round2_symbols: u64,
    symbols_repaired: u64,
}

#[derive(Debug, Deserialize)]
struct StoredRepair {
    plan: PlanDef,
    bandwidth: StoredBandwidth,
    restored: Vec<Vec<u64>>,
}

#[derive(Debug, Deserialize)]
struct StoredRun {
    protocol: ProtocolKind,
    repairs: Vec<StoredRepair>,
}

fn cmd_bounds(a: &BoundsArgs) -> CliResult<i32> {
    let loaded = load_scheme(&a.common.scheme)?;
    let scheme = &loaded.scheme;
    let mut reports: Vec<BoundsReport> = Vec::new();
    if !a.runs.is_empty() {
        for path in &a.runs {
            let text = read_text(path)?;
            let run: StoredRun = serde_json::from_str(&text)
                .map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
            for r in &run.repairs {
                let plan = r.plan.build(scheme)?;
                let bw = BandwidthReport::new(
                    r.bandwidth.round1_symbols,
                    r.bandwidth.round2_symbols,
                    r.bandwidth.symbols_repaired,
                );
                reports.push(bounds_report(
                    run.protocol,
                    scheme,
                    &plan,
                    &bw,
                    r.restored.len(),
                ));
            }
        }
    } else {
        let kind = a.protocol.unwrap_or_else(|| default_protocol(scheme));
        let failed = match &a.failed {
            Some(s) => parse_nodes(s, "--failed", scheme)?,
            None => (1..=scheme.n()).map(NodeId).collect(),
        };
        let helpers = opt_nodes(&a.helpers, "--helpers", scheme)?;
        let receivers = opt_nodes(&a.receivers, "--receivers", scheme)?;
        let seed = seed_or_entropy(a.common.seed);
        for &e in &failed {
            let net = build_network(&loaded, &a.data, None, kind, seed)?;
            let instances = net.instances();
            for r in run_repairs(
                &loaded,
                net,
                kind,
                &[e],
                helpers.as_deref(),
                receivers.as_deref(),
                seed,
            )? {
                reports.push(bounds_report(
                    kind,
                    scheme,
                    &r.plan,
                    &r.outcome.bandwidth,
                    instances,
                ));
            }
        }
    }
    let mut violated = false;
    for r in &reports {
        for v in r.violations() {
            eprintln!("{} repair: {v}", r.construction);
            violated = true;
        }
    }
    write_output(a.common.out.as_deref(), &bounds_csv(&reports))?;
    Ok(if violated { EXIT_VERIFY } else { EXIT_OK })
}
