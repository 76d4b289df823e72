//! Command line front end: `solve`, `compare`, `gen-hardness` and `verify`.
//!
//! Exit codes: 0 success, 1 any error, 2 infeasible instance, 3 limit hit
//! before any solution was found.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use lcmin_milp::{export_lp_text, BranchAndBound, Budget, MilpStatus};
use log::{info, warn};

use crate::hardness_gen::{reduce_set_cover, reduce_set_cover_duplex, SetCoverInstance};
use crate::igp_routing::{FractionTable, SrPolicy};
use crate::lc_problems::{
    build_2sr_lc, build_mcf_lc, metrics, min_mlu, solve_instance, verify, Algorithm, LcParams, LcState, Routing, SolveOptions,
    SolveOutcome, DEFAULT_LINECARD_WATTS, MLU_REL_TOL,
};
use crate::netmodel::{arc_capacity, Network, PortMasks, TrafficMatrix};
use crate::repetita_io::{
    expand_to_ports_with, parse_parallel_overrides, parse_repetita_demands, scale_bandwidth, ParallelOverrides, parse_repetita_graph, read_report, write_report, LinkReport, PolicyEntry,
    SolveReportDocument,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NO_INCUMBENT: i32 = 3;

/// Environment variable holding the default solver time limit in seconds.
pub const TIME_LIMIT_ENV: &str = "LCMIN_TIME_LIMIT";

/// Column order of `compare` output.
pub const COMPARE_HEADER: [&str; 10] = ["instance", "|V|", "|E|", "obj_mcf", "obj_2sr", "ratio", "t_mcf_s", "t_2sr_s", "mlu_mcf", "mlu_2sr"];

#[derive(Debug, Parser)]
#[command(name = "lcmin", version, about = "Minimize active linecards in a backbone network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and write a JSON report.
    Solve(SolveArgs),
    /// Solve a batch with both models and write a CSV comparison.
    Compare(CompareArgs),
    /// Turn a Set Cover instance into GRAPH and DEMANDS files.
    GenHardness(GenHardnessArgs),
    /// Re-check a report against its instance.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Demand scaling factor.
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
    /// Parallel ports per link.
    #[arg(long, default_value_t = 4)]
    pub parallel: usize,
    /// Ports per linecard.
    #[arg(long, default_value_t = 8)]
    pub k: u64,
    /// Utilization threshold.
    #[arg(long, default_value_t = 0.7)]
    pub theta: f64,
    #[command(flatten)]
    pub capacity: CapacityArgs,
}

impl InstanceArgs {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions { scale: self.scale, parallel: self.parallel, k: self.k, capacity: self.capacity.clone() }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    /// Multiplies every edge bandwidth before expansion.
    #[arg(long, default_value_t = 1.0)]
    pub capacity_multiplier: f64,
    /// File of `<edge label> <ports>` lines overriding --parallel per edge.
    #[arg(long)]
    pub parallel_overrides: Option<PathBuf>,
}

impl Default for CapacityArgs {
    fn default() -> Self {
        CapacityArgs { capacity_multiplier: 1.0, parallel_overrides: None }
    }
}

/// How GRAPH and DEMANDS files become a network and a traffic matrix.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub scale: f64,
    pub parallel: usize,
    pub k: u64,
    pub capacity: CapacityArgs,
}

impl LoadOptions {
    pub fn new(scale: f64, parallel: usize, k: u64) -> Self {
        LoadOptions { scale, parallel, k, capacity: CapacityArgs::default() }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    /// Solver time limit in seconds.
    #[arg(long, env = TIME_LIMIT_ENV)]
    pub time_limit: Option<f64>,
    /// Branch-and-bound node limit.
    #[arg(long)]
    pub node_limit: Option<usize>,
    /// Relative optimality gap at which to stop.
    #[arg(long, default_value_t = 0.0)]
    pub gap: f64,
}

impl BudgetArgs {
    fn budget(&self) -> Result<Budget, String> {
        let mut b = Budget { node_limit: self.node_limit, rel_gap: self.gap, ..Budget::default() };
        if let Some(t) = self.time_limit {
            let d = Duration::try_from_secs_f64(t).map_err(|e| format!("time limit {t}: {e}"))?;
            b.time_limit = Some(d);
        }
        Ok(b)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, default_value = "mcf")]
    pub algo: Algorithm,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub demands: Option<PathBuf>,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Watts saved per switched-off linecard.
    #[arg(long, default_value_t = DEFAULT_LINECARD_WATTS)]
    pub watts: f64,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the model in LP format.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
    /// Stop after building (and exporting) the model.
    #[arg(long, requires = "export_lp")]
    pub no_solve: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// GRAPH files; demands are read from `<stem>.demands` or `<stem>.0000.demands` next to each.
    pub graphs: Vec<PathBuf>,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Instances solved concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct GenHardnessArgs {
    /// One set per line, items separated by whitespace.
    #[arg(long)]
    pub sets: PathBuf,
    /// Ports per linecard the instance is meant for.
    #[arg(long, default_value_t = 8)]
    pub k: u64,
    /// Pair every arc with an opposing one and add the blocking demands.
    #[arg(long)]
    pub duplex: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// File stem; defaults to the stem of the sets file.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub demands: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
    /// Demand scaling factor used when solving.
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
    /// Parallel ports per link used when solving.
    #[arg(long, default_value_t = 4)]
    pub parallel: usize,
    #[command(flatten)]
    pub capacity: CapacityArgs,
}

/// An error tagged with the pipeline stage it came from.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for StageError {}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> StageError {
    move |e| StageError { stage, message: e.to_string() }
}

/// Demand file next to a GRAPH file: `<stem>.demands`, else the first `<stem>.*.demands` in name order.
pub fn find_demands(graph: &Path) -> Option<PathBuf> {
    let stem = graph.file_stem()?.to_str()?;
    let dir = graph.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let direct = dir.join(format!("{stem}.demands"));
    if direct.is_file() {
        return Some(direct);
    }
    let mut candidates: Vec<PathBuf> = fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(&format!("{stem}.")) && n.ends_with(".demands"))
        })
        .collect();
    candidates.sort();
    candidates.into_iter().next()
}

/// Reads, scales and expands one instance.
pub fn load_instance(graph: &Path, demands: Option<&Path>, opts: &LoadOptions) -> Result<(Network, TrafficMatrix), StageError> {
    let parse_err = |p: &Path, e: &dyn std::fmt::Display| StageError { stage: "parse", message: format!("{}: {e}", p.display()) };
    let k = crate::netmodel::LinecardConfig::new(opts.k).ok_or(StageError { stage: "parse", message: "k must be at least 1".into() })?;
    let text = fs::read_to_string(graph).map_err(|e| parse_err(graph, &e))?;
    let raw = parse_repetita_graph(&text).map_err(|e| parse_err(graph, &e))?;
    let demands = match demands {
        Some(p) => p.to_path_buf(),
        None => find_demands(graph).ok_or(StageError { stage: "parse", message: format!("no demands file found for {}", graph.display()) })?,
    };
    let text = fs::read_to_string(&demands).map_err(|e| parse_err(&demands, &e))?;
    let tm = parse_repetita_demands(&text, raw.nodes.len()).map_err(|e| parse_err(&demands, &e))?;
    let overrides = match &opts.capacity.parallel_overrides {
        Some(p) => parse_parallel_overrides(&fs::read_to_string(p).map_err(|e| parse_err(p, &e))?).map_err(|e| parse_err(p, &e))?,
        None => ParallelOverrides::new(),
    };
    let tm = tm.scaled(opts.scale).map_err(stage("scale"))?;
    let raw = if opts.capacity.capacity_multiplier == 1.0 { raw } else { scale_bandwidth(&raw, opts.capacity.capacity_multiplier).map_err(stage("expand"))? };
    let net = expand_to_ports_with(&raw, opts.parallel, &overrides, k).map_err(stage("expand"))?;
    Ok((net, tm))
}

fn instance_name(graph: &Path) -> String {
    graph.file_stem().and_then(|s| s.to_str()).unwrap_or("instance").to_string()
}

/// Report document for a solved instance; `None` without a solution.
pub fn report_of(instance: &str, net: &Network, params: LcParams, outcome: &SolveOutcome) -> Option<SolveReportDocument> {
    let state = outcome.state.as_ref()?;
    let m = outcome.metrics.as_ref()?;
    let v = outcome.verification.as_ref()?;
    let links = net
        .links()
        .iter()
        .enumerate()
        .map(|(l, link)| LinkReport { src: link.u, dest: link.v, active_ports: state.masks.active_count(l), total_ports: link.ports.len() })
        .collect();
    let policy = match &state.routing {
        Routing::Policy(p) => Some(
            p.routes
                .iter()
                .flat_map(|(&(src, dst), route)| route.iter().map(move |&(via, fraction)| PolicyEntry { src, dst, via, fraction }))
                .collect(),
        ),
        Routing::Flows(_) => None,
    };
    Some(SolveReportDocument {
        instance: instance.to_string(),
        algorithm: outcome.algorithm.to_string(),
        status: outcome.status.to_string(),
        objective_linecards: m.active_linecards,
        baseline_linecards: m.baseline_linecards,
        deactivatable_linecards: m.deactivatable_linecards,
        inactive_fraction: m.inactive_fraction,
        mlu: v.mlu.unwrap_or(f64::INFINITY),
        theta: params.theta,
        k: params.k.ports(),
        runtime_s: outcome.runtime.as_secs_f64(),
        links,
        policy,
        power_saving_w: Some(m.power_saving_w),
    })
}

fn exit_code_for(outcome: &SolveOutcome) -> i32 {
    match outcome.status {
        MilpStatus::Infeasible => EXIT_INFEASIBLE,
        MilpStatus::TimeLimit => EXIT_NO_INCUMBENT,
        MilpStatus::Optimal | MilpStatus::Feasible if outcome.verified() => EXIT_OK,
        _ => EXIT_ERROR,
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), StageError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| StageError { stage: "write", message: format!("{}: {e}", p.display()) }),
        None => io::stdout().write_all(text.as_bytes()).map_err(stage("write")),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32, StageError> {
    let params = LcParams::new(args.instance.theta, args.instance.k).map_err(stage("build"))?;
    let (net, tm) = load_instance(&args.graph, args.demands.as_deref(), &args.instance.load_options())?;
    if let Some(path) = &args.export_lp {
        let model = match args.algo {
            Algorithm::Mcf => build_mcf_lc(&net, &tm, params).map(|m| m.model),
            Algorithm::TwoSr => build_2sr_lc(&net, &tm, params, &FractionTable::for_demands(&net, &tm)).map(|m| m.model),
        };
        let model = match model {
            Ok(m) => m,
            Err(e) if e.is_infeasibility() => {
                eprintln!("build: {e}");
                return Ok(EXIT_INFEASIBLE);
            }
            Err(e) => return Err(stage("build")(e)),
        };
        let text = export_lp_text(&model).map_err(stage("export"))?;
        fs::write(path, text).map_err(|e| StageError { stage: "export", message: format!("{}: {e}", path.display()) })?;
        info!("wrote {}", path.display());
        if args.no_solve {
            return Ok(EXIT_OK);
        }
    }
    let mut opts = SolveOptions::new(args.algo, params);
    opts.budget = args.budget.budget().map_err(stage("solve"))?;
    opts.watts_per_linecard = args.watts;
    let outcome = solve_instance(&net, &tm, &opts, &BranchAndBound).map_err(stage("solve"))?;
    info!("{}: status {} after {} nodes, {:.3}s", args.algo, outcome.status, outcome.nodes, outcome.runtime.as_secs_f64());
    if let Some(d) = &outcome.diagnostic {
        eprintln!("infeasible: {d}");
    }
    if let Some(v) = &outcome.verification {
        if !v.passed() {
            eprintln!("verify: solution failed verification: {:?}", v.findings);
        }
    }
    if let Some(doc) = report_of(&instance_name(&args.graph), &net, params, &outcome) {
        write_output(args.out.as_deref(), &write_report(&doc).map_err(stage("report"))?)?;
    }
    Ok(exit_code_for(&outcome))
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub instance: String,
    pub vertices: usize,
    pub edges: usize,
    pub mcf: Result<RunSummary, String>,
    pub sr: Result<RunSummary, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub status: MilpStatus,
    pub objective: Option<u64>,
    pub seconds: f64,
    pub mlu: Option<f64>,
}

impl CompareRow {
    /// `obj_2sr / obj_mcf`, with `0 / 0 = 1`.
    pub fn ratio(&self) -> Option<f64> {
        let (m, s) = (self.mcf.as_ref().ok()?.objective?, self.sr.as_ref().ok()?.objective?);
        Some(if m == 0 && s == 0 { 1.0 } else { s as f64 / m as f64 })
    }

    pub fn record(&self) -> Vec<String> {
        fn obj(r: &Result<RunSummary, String>) -> String {
            match r {
                Ok(s) => match s.objective {
                    Some(o) if s.status == MilpStatus::Optimal => o.to_string(),
                    Some(o) => format!("{o} ({})", s.status),
                    None => s.status.to_string(),
                },
                Err(e) => format!("error: {e}"),
            }
        }
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let secs = |r: &Result<RunSummary, String>| opt(r.as_ref().ok().map(|s| s.seconds));
        let mlu = |r: &Result<RunSummary, String>| opt(r.as_ref().ok().and_then(|s| s.mlu));
        vec![
            self.instance.clone(),
            self.vertices.to_string(),
            self.edges.to_string(),
            obj(&self.mcf),
            obj(&self.sr),
            opt(self.ratio()),
            secs(&self.mcf),
            secs(&self.sr),
            mlu(&self.mcf),
            mlu(&self.sr),
        ]
    }
}

fn summarize(outcome: Result<SolveOutcome, String>) -> Result<RunSummary, String> {
    let o = outcome?;
    if let Some(v) = &o.verification {
        if !v.passed() {
            return Err(format!("verification failed: {:?}", v.findings));
        }
    }
    Ok(RunSummary {
        status: o.status,
        objective: o.objective(),
        seconds: o.runtime.as_secs_f64(),
        mlu: o.verification.and_then(|v| v.mlu),
    })
}

/// Solves one instance with both models.
pub fn compare_instance(graph: &Path, instance: &InstanceArgs, budget: &Budget) -> CompareRow {
    let name = instance_name(graph);
    let params = match LcParams::new(instance.theta, instance.k) {
        Ok(p) => p,
        Err(e) => return CompareRow { instance: name, vertices: 0, edges: 0, mcf: Err(e.to_string()), sr: Err(e.to_string()) },
    };
    let (net, tm) = match load_instance(graph, None, &instance.load_options()) {
        Ok(x) => x,
        Err(e) => return CompareRow { instance: name, vertices: 0, edges: 0, mcf: Err(e.to_string()), sr: Err(e.to_string()) },
    };
    let run = |algo| {
        let mut opts = SolveOptions::new(algo, params);
        opts.budget = budget.clone();
        summarize(solve_instance(&net, &tm, &opts, &BranchAndBound).map_err(|e| e.to_string()))
    };
    let mcf = run(Algorithm::Mcf);
    let sr = run(Algorithm::TwoSr);
    CompareRow { instance: name, vertices: net.num_vertices(), edges: net.arcs().len(), mcf, sr }
}

/// CSV text for a batch of rows, header first.
pub fn compare_csv(rows: &[CompareRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARE_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<i32, StageError> {
    let budget = args.budget.budget().map_err(stage("solve"))?;
    let jobs = args.jobs.max(1);
    let mut rows: Vec<Option<CompareRow>> = vec![None; args.graphs.len()];
    for (chunk_rows, chunk) in rows.chunks_mut(jobs).zip(args.graphs.chunks(jobs)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|g| s.spawn(|| compare_instance(g, &args.instance, &budget))).collect();
            for (slot, h) in chunk_rows.iter_mut().zip(handles) {
                *slot = Some(h.join().expect("compare worker panicked"));
            }
        });
    }
    let rows: Vec<CompareRow> = rows.into_iter().flatten().collect();
    for r in &rows {
        if let Some(ratio) = r.ratio() {
            info!("{}: ratio {ratio:.4}", r.instance);
        }
    }
    write_output(args.out.as_deref(), &compare_csv(&rows).map_err(stage("write"))?)?;
    Ok(EXIT_OK)
}

pub fn cmd_gen_hardness(args: &GenHardnessArgs) -> Result<i32, StageError> {
    let text = fs::read_to_string(&args.sets).map_err(|e| StageError { stage: "parse", message: format!("{}: {e}", args.sets.display()) })?;
    let sc = SetCoverInstance::parse(&text).map_err(stage("generate"))?;
    let reduced = if args.duplex { reduce_set_cover_duplex(&sc, args.k) } else { reduce_set_cover(&sc, args.k) }.map_err(stage("generate"))?;
    let name = args.name.clone().unwrap_or_else(|| instance_name(&args.sets));
    let (graph, demands) = reduced.to_repetita();
    fs::create_dir_all(&args.out_dir).map_err(stage("write"))?;
    let gp = args.out_dir.join(format!("{name}.graph"));
    let dp = args.out_dir.join(format!("{name}.demands"));
    fs::write(&gp, graph).map_err(stage("write"))?;
    fs::write(&dp, demands).map_err(stage("write"))?;
    println!(
        "wrote {} and {} ({} routers, {} arcs, q = {}); solve with --parallel 1 --scale 1 --theta 1 --k {}",
        gp.display(),
        dp.display(),
        reduced.network.num_vertices(),
        reduced.network.arcs().len(),
        reduced.q,
        args.k
    );
    Ok(EXIT_OK)
}

/// Outcome of re-checking a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportCheck {
    pub problems: Vec<String>,
    pub mlu: Option<f64>,
    pub linecards: u64,
}

/// Rebuilds the state a report describes and checks it independently.
///
/// Reports of the flow model carry no flows, so their routing is re-solved as
/// a minimum-utilization LP over the reported active ports.
pub fn check_report(net: &Network, tm: &TrafficMatrix, doc: &SolveReportDocument) -> ReportCheck {
    let mut problems = Vec::new();
    let params = match LcParams::new(doc.theta, doc.k) {
        Ok(p) => p,
        Err(e) => return ReportCheck { problems: vec![e.to_string()], mlu: None, linecards: 0 },
    };
    if doc.links.len() != net.links().len() {
        problems.push(format!("report lists {} links, network has {}", doc.links.len(), net.links().len()));
        return ReportCheck { problems, mlu: None, linecards: 0 };
    }
    let mut counts = Vec::with_capacity(doc.links.len());
    for (l, (r, link)) in doc.links.iter().zip(net.links()).enumerate() {
        if (r.src, r.dest) != (link.u, link.v) || r.total_ports != link.ports.len() {
            problems.push(format!("link {l} does not match the network"));
        }
        counts.push(r.active_ports.min(link.ports.len()));
    }
    let masks = PortMasks::from_counts(net, &counts);
    let m = metrics(&masks, net, params.k, DEFAULT_LINECARD_WATTS);
    if m.active_linecards != doc.objective_linecards {
        problems.push(format!("report claims {} linecards, ports need {}", doc.objective_linecards, m.active_linecards));
    }
    let mlu = match &doc.policy {
        Some(entries) => {
            let mut policy = SrPolicy::default();
            for e in entries {
                policy.routes.entry((e.src, e.dst)).or_default().push((e.via, e.fraction));
            }
            let report = verify(net, tm, params, &LcState { masks, routing: Routing::Policy(policy) });
            problems.extend(report.findings.iter().map(|f| format!("{f:?}")));
            if !report.within_threshold {
                problems.push(format!("utilization {:?} exceeds {}", report.mlu, params.theta));
            }
            report.mlu
        }
        None => {
            let caps: Vec<f64> = (0..net.links().len()).map(|l| arc_capacity(net, l, &masks.0[l]).unwrap_or(0.0)).collect();
            match min_mlu(net, tm, &caps) {
                Ok(Some(u)) => {
                    if u > params.theta * (1.0 + MLU_REL_TOL) + 1e-9 {
                        problems.push(format!("best routing over the active ports reaches utilization {u}"));
                    }
                    Some(u)
                }
                Ok(None) => {
                    problems.push("demands cannot be routed over the active ports".into());
                    None
                }
                Err(e) => {
                    problems.push(format!("routing LP failed: {e}"));
                    None
                }
            }
        }
    };
    ReportCheck { problems, mlu, linecards: m.active_linecards }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32, StageError> {
    let text = fs::read_to_string(&args.report).map_err(|e| StageError { stage: "parse", message: format!("{}: {e}", args.report.display()) })?;
    let doc = read_report(&text).map_err(stage("parse"))?;
    let (net, tm) = load_instance(&args.graph, args.demands.as_deref(), &LoadOptions { scale: args.scale, parallel: args.parallel, k: doc.k, capacity: args.capacity.clone() })?;
    let check = check_report(&net, &tm, &doc);
    for p in &check.problems {
        eprintln!("verify: {p}");
    }
    if check.problems.is_empty() {
        println!("ok: {} linecards, mlu {:.6}", check.linecards, check.mlu.unwrap_or(0.0));
        Ok(EXIT_OK)
    } else {
        warn!("{} problems in {}", check.problems.len(), args.report.display());
        Ok(EXIT_ERROR)
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Compare(a) => cmd_compare(a),
        Command::GenHardness(a) => cmd_gen_hardness(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
