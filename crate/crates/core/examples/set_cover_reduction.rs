//! Builds the linecard instance for a small set cover, solves it and reads the cover back.

use lcmin::hardness_gen::{recover_cover, reduce_set_cover, SetCoverInstance};
use lcmin::lc_problems::{solve_instance, Algorithm, SolveOptions};
use lcmin::oracle::brute_force_set_cover;
use lcmin_milp::BranchAndBound;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = SetCoverInstance::from_labels(&[vec!["a", "b", "c"], vec!["c", "d"], vec!["b", "c"]])?;
    print!("{sc}");
    let reduced = reduce_set_cover(&sc, 2)?;
    println!(
        "{} routers, {} links, {} demands, q = {}",
        reduced.network.num_vertices(),
        reduced.network.links().len(),
        reduced.demands.len(),
        reduced.q
    );
    let out = solve_instance(&reduced.network, &reduced.demands, &SolveOptions::new(Algorithm::Mcf, reduced.params()), &BranchAndBound)?;
    let state = out.state.as_ref().ok_or("no solution")?;
    let cover = recover_cover(&reduced, &state.masks);
    println!("linecards {:?}, cover {:?}", out.objective(), cover.sets);
    println!("minimum cover size {}", brute_force_set_cover(&sc)?);
    Ok(())
}
