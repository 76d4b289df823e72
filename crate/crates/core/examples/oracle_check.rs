//! Exhaustive search against the integer program on a random small network.

use lcmin::lc_problems::{solve_instance, Algorithm, LcParams, SolveOptions};
use lcmin::netmodel::{Network, PortGroup, TrafficMatrix};
use lcmin::oracle::{brute_force_lc_mcfs, DEFAULT_STATE_BUDGET};
use lcmin_milp::BranchAndBound;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 5;
    let mut net = Network::with_vertices(n);
    for v in 1..n {
        net.add_link(rng.gen_range(0..v), v, PortGroup::uniform(rng.gen_range(1..=3), 10.0), 1);
    }
    net.add_link(0, n - 1, PortGroup::uniform(2, 10.0), 2);
    let mut tm = TrafficMatrix::new(n);
    tm.add(0, n - 1, 8.0)?;
    tm.add(1, 2, 5.0)?;
    let (theta, k) = (0.7, 2);
    let (best, witness) = brute_force_lc_mcfs(&net, &tm, theta, k, DEFAULT_STATE_BUDGET)?;
    let out = solve_instance(&net, &tm, &SolveOptions::new(Algorithm::Mcf, LcParams::new(theta, k)?), &BranchAndBound)?;
    println!("enumeration {best} with ports {:?}", witness.counts());
    println!("integer program {:?} ({})", out.objective(), out.status);
    Ok(())
}
