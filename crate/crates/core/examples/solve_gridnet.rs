//! Solves the bundled Gridnet instance with the flow model and prints the linecard accounting.
//!
//! ```text
//! cargo run --release -p lcmin --example solve_gridnet
//! ```

use std::path::Path;

use lcmin::cli::{load_instance, LoadOptions};
use lcmin::lc_problems::{solve_instance, Algorithm, LcParams, SolveOptions};
use lcmin_milp::BranchAndBound;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/Gridnet.graph");
    let (net, tm) = load_instance(&graph, None, &LoadOptions::new(0.5, 4, 8))?;
    let params = LcParams::new(0.7, 8)?;
    let out = solve_instance(&net, &tm, &SolveOptions::new(Algorithm::Mcf, params), &BranchAndBound)?;
    println!("status {} after {} nodes in {:.2?}", out.status, out.nodes, out.runtime);
    if let (Some(m), Some(v)) = (&out.metrics, &out.verification) {
        println!("linecards {} of {} ({} deactivatable)", m.active_linecards, m.baseline_linecards, m.deactivatable_linecards);
        println!("saving {:.0} W, mlu {:?}, verified {}", m.power_saving_w, v.mlu, v.passed());
    }
    Ok(())
}
