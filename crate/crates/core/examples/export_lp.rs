//! Writes the flow model of a three-router ring in LP format to stdout.

use lcmin::lc_problems::{build_mcf_lc, LcParams};
use lcmin::netmodel::{Network, PortGroup, TrafficMatrix};
use lcmin_milp::export_lp_text;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut net = Network::new(["x", "y", "z"]);
    for (u, v) in [(0, 1), (1, 2), (2, 0)] {
        net.add_link(u, v, PortGroup::uniform(2, 10.0), 1);
    }
    let mut tm = TrafficMatrix::new(3);
    tm.add(0, 1, 6.0)?;
    tm.add(1, 2, 3.0)?;
    let built = build_mcf_lc(&net, &tm, LcParams::new(0.7, 2)?)?;
    print!("{}", export_lp_text(&built.model)?);
    Ok(())
}
