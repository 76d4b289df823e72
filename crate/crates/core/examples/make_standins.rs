//! Writes Repetita-style GRAPH and DEMANDS files from Topology Zoo JSON exports.
//!
//! Every undirected edge becomes a pair of arcs with weight 1 and bandwidth
//! 400. Demands follow a gravity model with seeded random node masses and
//! are scaled so that the best fractional routing peaks at 90% utilization.
//!
//! ```text
//! cargo run -p lcmin --example make_standins -- crates/core/data Gridnet.json Fccn.json
//! ```

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use lcmin::lc_problems::min_mlu;
use lcmin::netmodel::{LinecardConfig, TrafficMatrix};
use lcmin::repetita_io::{expand_to_ports, write_repetita_demands, write_repetita_graph, RawEdge, RawNode, RawTopology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const BANDWIDTH: f64 = 400.0;
const TARGET_MLU: f64 = 0.9;

fn topology(json: &Value) -> Result<RawTopology, String> {
    let nodes = json["nodes"].as_array().ok_or("missing nodes")?;
    let ids: Vec<String> = nodes.iter().map(|n| n["id"].as_str().map(str::to_string).ok_or("node without id")).collect::<Result<_, _>>()?;
    let index = |id: &Value| -> Result<usize, String> {
        let id = id.as_str().ok_or("edge endpoint is not a string")?;
        ids.iter().position(|x| x == id).ok_or(format!("unknown node {id}"))
    };
    let raw_nodes = nodes
        .iter()
        .map(|n| {
            let label = n["name"].as_str().unwrap_or("node").replace(char::is_whitespace, "_");
            let coords = n["pos"].as_array().and_then(|p| Some((p.first()?.as_f64()?, p.get(1)?.as_f64()?)));
            RawNode { label, coords }
        })
        .collect();
    let mut edges = Vec::new();
    for e in json["edges"].as_array().ok_or("missing edges")? {
        let (u, v) = (index(&e["source"])?, index(&e["target"])?);
        for (s, d) in [(u, v), (v, u)] {
            edges.push(RawEdge { label: format!("edge_{}", edges.len()), src: s, dest: d, weight: 1, bandwidth: BANDWIDTH, delay: 1.0 });
        }
    }
    Ok(RawTopology { nodes: raw_nodes, edges })
}

fn gravity(n: usize, seed: u64) -> TrafficMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mass: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
    let total: f64 = mass.iter().sum();
    let mut tm = TrafficMatrix::new(n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                tm.add(u, v, mass[u] * mass[v] / total).unwrap();
            }
        }
    }
    tm
}

fn rounded(tm: &TrafficMatrix) -> TrafficMatrix {
    let mut out = TrafficMatrix::new(tm.num_vertices());
    for (s, d, v) in tm.iter() {
        out.add(s, d, (v * 1000.0).round() / 1000.0).unwrap();
    }
    out
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let out_dir = PathBuf::from(args.next().ok_or("usage: make_standins OUT_DIR FILE.json...")?);
    fs::create_dir_all(&out_dir)?;
    for (i, path) in args.enumerate() {
        let path = Path::new(&path);
        let name = path.file_stem().and_then(|s| s.to_str()).ok_or("bad file name")?;
        let json: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        let topo = topology(&json)?;
        let net = expand_to_ports(&topo, 1, LinecardConfig::default())?;
        let capacity = vec![BANDWIDTH; net.links().len()];
        let tm = gravity(topo.nodes.len(), 1000 + i as u64);
        let m = min_mlu(&net, &tm, &capacity)?.ok_or("topology is disconnected")?;
        let tm = rounded(&tm.scaled(TARGET_MLU / m)?);
        let check = min_mlu(&net, &tm, &capacity)?.unwrap_or(f64::NAN);
        fs::write(out_dir.join(format!("{name}.graph")), write_repetita_graph(&topo))?;
        fs::write(out_dir.join(format!("{name}.0000.demands")), write_repetita_demands(&tm))?;
        println!("{name}: {} nodes, {} arcs, {} demands, min utilization {check:.4}", topo.nodes.len(), topo.edges.len(), tm.len());
    }
    Ok(())
}
