//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! `ACCEPTANCE_ONLY=1,4` restricts the run to the listed criteria.
//! `REPETITA_DIR` points criteria 4 to 6 at a directory holding the original
//! Repetita topologies; missing ones fall back to the bundled stand-ins.

mod common;

use std::env;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lcmin::cli::{load_instance, LoadOptions};
use lcmin::hardness_gen::{recover_cover, reduce_set_cover, reduce_set_cover_duplex, ReducedInstance, SetCoverInstance};
use lcmin::igp_routing::{EcmpRouter, FractionTable};
use lcmin::lc_problems::{solve_instance, Algorithm, LcParams, SolveOptions, SolveOutcome};
use lcmin::netmodel::{Network, TrafficMatrix};
use lcmin::oracle::{brute_force_lc_mcfs, brute_force_set_cover, DEFAULT_STATE_BUDGET};
use lcmin_milp::testing::{integer_enumeration, random_ip, random_lp, vertex_enumeration};
use lcmin_milp::{solve_lp, solve_milp, BranchAndBound, Budget, LpStatus, MilpStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HARDNESS_PLAIN: usize = 200;
const HARDNESS_DUPLEX: usize = 50;
const TINY_NETWORKS: usize = 100;
const RATIO_BOUND: f64 = 1.10;
const THETA: f64 = 0.7;
const MLU_SLACK: f64 = 1e-9;
const REPEATS: usize = 5;
const INSTANCE_BUDGET: Duration = Duration::from_secs(3600);
const LP_CASES: usize = 500;
const IP_CASES: usize = 200;
const LP_TOL: f64 = 1e-7;
const ECMP_GRAPHS: usize = 100;

struct Verdict {
    pass: bool,
    detail: String,
}

/// Objectives of both models on one instance, for the dominance check.
struct Pair {
    label: String,
    mcf: Option<u64>,
    sr: Option<u64>,
}

fn solve(net: &Network, tm: &TrafficMatrix, algorithm: Algorithm, params: LcParams, budget: Option<Duration>) -> Result<SolveOutcome, String> {
    let mut opts = SolveOptions::new(algorithm, params);
    opts.budget = Budget { time_limit: budget, ..Budget::default() };
    solve_instance(net, tm, &opts, &BranchAndBound).map_err(|e| e.to_string())
}

/// Per-instance timing on stderr when `ACCEPTANCE_VERBOSE` is set.
fn progress(line: &str) {
    if env::var_os("ACCEPTANCE_VERBOSE").is_some() {
        eprintln!("  {line}");
    }
}

fn optimal_objective(out: &SolveOutcome) -> Option<u64> {
    if out.proven_optimal() && out.verified() {
        out.objective()
    } else {
        None
    }
}

/// Cover size read back from an optimal solve of `reduced`, or why there is none.
fn recovered_size(sc: &SetCoverInstance, reduced: &ReducedInstance) -> Result<(usize, Option<u64>), String> {
    let out = solve(&reduced.network, &reduced.demands, Algorithm::Mcf, reduced.params(), None)?;
    if !out.proven_optimal() {
        return Err(format!("status {}{}", out.status, out.diagnostic.map(|d| format!(" ({d})")).unwrap_or_default()));
    }
    if !out.verified() {
        return Err("solution failed verification".into());
    }
    let state = out.state.as_ref().ok_or("no state")?;
    let cover = recover_cover(reduced, &state.masks);
    if !cover.partial.is_empty() {
        return Err(format!("partially active chains {:?}", cover.partial));
    }
    if !sc.is_cover(&cover.sets) {
        return Err(format!("sets {:?} do not cover", cover.sets));
    }
    Ok((cover.sets.len(), out.objective()))
}

fn criterion_hardness(pairs: &mut Vec<Pair>) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e7c);
    let mut plain_ok = 0;
    let mut first_plain_failure = None;
    for i in 0..HARDNESS_PLAIN {
        let sc = common::random_set_cover(&mut rng, 6, 5);
        let k = rng.gen_range(1..=3);
        let expected = brute_force_set_cover(&sc).expect("small family");
        let reduced = reduce_set_cover(&sc, k).expect("valid instance");
        let t = Instant::now();
        match recovered_size(&sc, &reduced) {
            Ok((size, mcf)) if size == expected => {
                plain_ok += 1;
                let t_mcf = t.elapsed();
                let sr = solve(&reduced.network, &reduced.demands, Algorithm::TwoSr, reduced.params(), None)
                    .ok()
                    .as_ref()
                    .and_then(optimal_objective);
                progress(&format!("hardness #{i}: {} links, k {k}, mcf {t_mcf:.2?}, 2sr {:.2?}", reduced.network.links().len(), t.elapsed() - t_mcf));
                pairs.push(Pair { label: format!("hardness #{i}"), mcf, sr });
            }
            Ok((size, _)) => {
                first_plain_failure.get_or_insert(format!("#{i}: cover {size}, minimum {expected}"));
            }
            Err(e) => {
                first_plain_failure.get_or_insert(format!("#{i}: {e}"));
            }
        }
    }
    let mut duplex_ok = 0;
    let mut first_duplex_failure = None;
    for i in 0..HARDNESS_DUPLEX {
        let sc = common::random_set_cover(&mut rng, 6, 5);
        let k = rng.gen_range(1..=3);
        let expected = brute_force_set_cover(&sc).expect("small family");
        let reduced = reduce_set_cover_duplex(&sc, k).expect("valid instance");
        match recovered_size(&sc, &reduced) {
            Ok((size, _)) if size == expected => duplex_ok += 1,
            Ok((size, _)) => {
                first_duplex_failure.get_or_insert(format!("#{i}: cover {size}, minimum {expected}"));
            }
            Err(e) => {
                first_duplex_failure.get_or_insert(format!("#{i}: {e}"));
            }
        }
    }
    let mut detail = format!("plain {plain_ok}/{HARDNESS_PLAIN}, duplex {duplex_ok}/{HARDNESS_DUPLEX}");
    for (kind, f) in [("plain", first_plain_failure), ("duplex", first_duplex_failure)] {
        if let Some(f) = f {
            detail.push_str(&format!("; first {kind} failure {f}"));
        }
    }
    Verdict { pass: plain_ok == HARDNESS_PLAIN && duplex_ok == HARDNESS_DUPLEX, detail }
}

fn criterion_oracle(pairs: &mut Vec<Pair>) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c1e);
    let mut matched = 0;
    let mut failures = Vec::new();
    for i in 0..TINY_NETWORKS {
        let inst = common::random_tiny_instance(&mut rng, 6, 10, 4);
        let p = inst.params;
        let oracle = brute_force_lc_mcfs(&inst.network, &inst.demands, p.theta, p.k.ports(), DEFAULT_STATE_BUDGET);
        let mcf = solve(&inst.network, &inst.demands, Algorithm::Mcf, p, None);
        match (oracle, &mcf) {
            (Ok((best, _)), Ok(out)) if optimal_objective(out) == Some(best) => matched += 1,
            (Ok((best, _)), Ok(out)) => failures.push(format!("#{i}: oracle {best}, milp {:?} ({})", out.objective(), out.status)),
            (Err(e), _) => failures.push(format!("#{i}: oracle {e}")),
            (_, Err(e)) => failures.push(format!("#{i}: milp {e}")),
        }
        let sr = solve(&inst.network, &inst.demands, Algorithm::TwoSr, p, None).ok().as_ref().and_then(optimal_objective);
        pairs.push(Pair { label: format!("tiny #{i}"), mcf: mcf.ok().as_ref().and_then(optimal_objective), sr });
    }
    let mut detail = format!("{matched}/{TINY_NETWORKS} exact matches");
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first failure {f}"));
    }
    Verdict { pass: matched == TINY_NETWORKS, detail }
}

fn criterion_dominance(pairs: &[Pair]) -> Verdict {
    let both: Vec<&Pair> = pairs.iter().filter(|p| p.mcf.is_some() && p.sr.is_some()).collect();
    let violations: Vec<&str> = both.iter().filter(|p| p.sr < p.mcf).map(|p| p.label.as_str()).collect();
    Verdict {
        pass: violations.is_empty(),
        detail: format!("{} instances with both optimal, {} violations {:?}", both.len(), violations.len(), violations),
    }
}

struct Benchmark {
    name: String,
    path: PathBuf,
}

/// Benchmark topologies, from `REPETITA_DIR` when present there, else the bundled stand-ins.
fn benchmarks() -> Vec<Benchmark> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let external = env::var_os("REPETITA_DIR").map(PathBuf::from);
    let find = |dir: &Path, stem: &str| -> Option<PathBuf> {
        std::fs::read_dir(dir).ok()?.filter_map(Result::ok).map(|e| e.path()).find(|p| {
            p.extension().is_some_and(|x| x == "graph") && p.file_stem().and_then(|s| s.to_str()).is_some_and(|s| s.eq_ignore_ascii_case(stem))
        })
    };
    [("GridNet", "Gridnet"), ("FCCN", "Fccn"), ("BandCon", "Packetexchange")]
        .into_iter()
        .map(|(name, standin)| {
            let path = external
                .as_deref()
                .and_then(|d| find(d, name))
                .unwrap_or_else(|| data.join(format!("{standin}.graph")));
            Benchmark { name: name.to_string(), path }
        })
        .collect()
}

struct Run {
    status: MilpStatus,
    objective: Option<u64>,
    verified: bool,
    mlu: Option<f64>,
    seconds: f64,
}

struct BenchResult {
    name: String,
    mcf: Vec<Run>,
    sr: Vec<Run>,
}

fn run_benchmarks() -> Result<Vec<BenchResult>, String> {
    let params = LcParams::new(THETA, 8).map_err(|e| e.to_string())?;
    let mut results = Vec::new();
    for b in benchmarks() {
        let (net, tm) = load_instance(&b.path, None, &LoadOptions::new(0.5, 4, 8)).map_err(|e| format!("{}: {e}", b.name))?;
        let mut res = BenchResult { name: format!("{} ({})", b.name, b.path.file_stem().unwrap_or_default().to_string_lossy()), mcf: Vec::new(), sr: Vec::new() };
        for _ in 0..REPEATS {
            for algo in [Algorithm::Mcf, Algorithm::TwoSr] {
                let t = Instant::now();
                let out = solve(&net, &tm, algo, params, Some(INSTANCE_BUDGET)).map_err(|e| format!("{} {algo}: {e}", b.name))?;
                let run = Run {
                    status: out.status,
                    objective: out.objective(),
                    verified: out.verified(),
                    mlu: out.verification.as_ref().and_then(|v| v.mlu),
                    seconds: t.elapsed().as_secs_f64(),
                };
                match algo {
                    Algorithm::Mcf => res.mcf.push(run),
                    Algorithm::TwoSr => res.sr.push(run),
                }
            }
        }
        results.push(res);
    }
    Ok(results)
}

fn criterion_reproduction(results: &[BenchResult]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in results {
        let (m, s) = (&r.mcf[0], &r.sr[0]);
        let done = |x: &Run| x.status == MilpStatus::Optimal && x.verified && x.seconds <= INSTANCE_BUDGET.as_secs_f64();
        let ok = match (done(m), done(s), m.objective, s.objective) {
            (true, true, Some(om), Some(os)) => {
                let ratio = if om == 0 { if os == 0 { 1.0 } else { f64::INFINITY } } else { os as f64 / om as f64 };
                let gap_ok = os <= om || os - om <= 1;
                parts.push(format!("{}: mcf {om}, 2sr {os}, ratio {ratio:.3}", r.name));
                ratio <= RATIO_BOUND && gap_ok
            }
            _ => {
                parts.push(format!("{}: mcf {} {:?}, 2sr {} {:?}", r.name, m.status, m.objective, s.status, s.objective));
                false
            }
        };
        pass &= ok;
    }
    Verdict { pass, detail: parts.join("; ") }
}

fn criterion_mlu(results: &[BenchResult]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in results {
        for (algo, runs) in [("mcf", &r.mcf), ("2sr", &r.sr)] {
            for run in runs.iter().filter(|x| x.verified) {
                if run.mlu.is_some_and(|u| u > THETA + MLU_SLACK) {
                    pass = false;
                }
            }
            let worst = runs.iter().filter(|x| x.verified).filter_map(|x| x.mlu).fold(f64::NEG_INFINITY, f64::max);
            let band = if (0.68..=THETA + MLU_SLACK).contains(&worst) { "" } else { " outside [0.68, 0.70]" };
            parts.push(format!("{} {algo} {worst:.6}{band}", r.name));
        }
    }
    Verdict { pass, detail: parts.join("; ") }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn criterion_speed(results: &[BenchResult]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in results {
        let m = median(r.mcf.iter().map(|x| x.seconds).collect());
        let s = median(r.sr.iter().map(|x| x.seconds).collect());
        pass &= s <= m;
        parts.push(format!("{}: median mcf {m:.3}s, 2sr {s:.3}s over {REPEATS}", r.name));
    }
    Verdict { pass, detail: parts.join("; ") }
}

fn criterion_kernel() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1b);
    let mut lp_ok = 0;
    let mut first = None;
    for i in 0..LP_CASES {
        let model = random_lp(&mut rng, 2 + i % 2);
        let lp = solve_lp(&model);
        let ok = match (&lp, vertex_enumeration(&model)) {
            (Ok(s), None) => s.status == LpStatus::Infeasible,
            (Ok(s), Some((obj, _))) => s.status == LpStatus::Optimal && (s.objective - obj).abs() <= LP_TOL && model.check(&s.values, LP_TOL).is_empty(),
            (Err(_), _) => false,
        };
        if ok {
            lp_ok += 1;
        } else {
            first.get_or_insert(format!("lp #{i}"));
        }
    }
    let mut ip_ok = 0;
    for i in 0..IP_CASES {
        let model = random_ip(&mut rng, 12);
        let sol = solve_milp(&model, &Budget::default());
        let ok = match (&sol, integer_enumeration(&model)) {
            (Ok(s), None) => s.status == MilpStatus::Infeasible,
            (Ok(s), Some((obj, _))) => s.status == MilpStatus::Optimal && s.objective == obj,
            (Err(_), _) => false,
        };
        if ok {
            ip_ok += 1;
        } else {
            first.get_or_insert(format!("milp #{i}"));
        }
    }
    let mut detail = format!("lp {lp_ok}/{LP_CASES} within {LP_TOL:e}, milp {ip_ok}/{IP_CASES} exact");
    if let Some(f) = first {
        detail.push_str(&format!("; first failure {f}"));
    }
    Verdict { pass: lp_ok == LP_CASES && ip_ok == IP_CASES, detail }
}

fn criterion_ecmp() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xec3);
    let mut ok_graphs = 0;
    let mut pairs = 0;
    let mut first = None;
    for i in 0..ECMP_GRAPHS {
        let net = common::random_weighted_graph(&mut rng, 8);
        let router = EcmpRouter::new(&net);
        let table = FractionTable::all_pairs(&net);
        let mut ok = true;
        for u in 0..net.num_vertices() {
            for w in 0..net.num_vertices() {
                pairs += 1;
                let reference = common::ecmp_by_paths(&net, u, w);
                let exact = router.unit_flow_exact(u, w).map(|r| r.expect("small graph fits").into_iter().collect());
                let floats_agree = match (&reference, table.get(u, w)) {
                    (Some(r), Some(f)) => {
                        f.len() == r.len() && f.iter().all(|(a, x)| r.get(a).is_some_and(|q| (*q.numer() as f64 / *q.denom() as f64 - x).abs() <= 1e-12))
                    }
                    (None, None) => true,
                    _ => false,
                };
                if exact != reference || !floats_agree {
                    ok = false;
                    first.get_or_insert(format!("graph #{i} pair {u}->{w}"));
                }
            }
        }
        ok_graphs += usize::from(ok);
    }
    let mut detail = format!("{ok_graphs}/{ECMP_GRAPHS} graphs, {pairs} pairs");
    if let Some(f) = first {
        detail.push_str(&format!("; first mismatch {f}"));
    }
    Verdict { pass: ok_graphs == ECMP_GRAPHS, detail }
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |c: u32| only.as_ref().is_none_or(|o| o.contains(&c));
    let mut failed = 0;
    let mut report = |id: u32, title: &str, v: Verdict, secs: f64| {
        println!("{} criterion {id} {title}: {} [{secs:.1}s]", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    };

    let mut pairs = Vec::new();
    if wanted(1) || wanted(3) {
        let t = Instant::now();
        let v = criterion_hardness(&mut pairs);
        if wanted(1) {
            report(1, "hardness round-trip", v, t.elapsed().as_secs_f64());
        }
    }
    if wanted(2) || wanted(3) {
        let t = Instant::now();
        let v = criterion_oracle(&mut pairs);
        if wanted(2) {
            report(2, "oracle equivalence", v, t.elapsed().as_secs_f64());
        }
    }
    if wanted(3) {
        report(3, "2SR never below MCF", criterion_dominance(&pairs), 0.0);
    }
    if wanted(4) || wanted(5) || wanted(6) {
        let t = Instant::now();
        match run_benchmarks() {
            Ok(results) => {
                let secs = t.elapsed().as_secs_f64();
                if wanted(4) {
                    report(4, "benchmark ratio", criterion_reproduction(&results), secs);
                }
                if wanted(5) {
                    report(5, "MLU envelope", criterion_mlu(&results), 0.0);
                }
                if wanted(6) {
                    report(6, "2SR not slower", criterion_speed(&results), 0.0);
                }
            }
            Err(e) => {
                for (id, title) in [(4, "benchmark ratio"), (5, "MLU envelope"), (6, "2SR not slower")] {
                    if wanted(id) {
                        report(id, title, Verdict { pass: false, detail: e.clone() }, 0.0);
                    }
                }
            }
        }
    }
    if wanted(7) {
        let t = Instant::now();
        report(7, "LP and MILP kernel", criterion_kernel(), t.elapsed().as_secs_f64());
    }
    if wanted(8) {
        let t = Instant::now();
        report(8, "ECMP fractions", criterion_ecmp(), t.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
