//! Flow routing against 2-segment routing on one instance, as a CSV row.
//!
//! ```text
//! cargo run --release -p lcmin --example compare_routing -- crates/core/data/Fccn.graph
//! ```

use std::env;
use std::path::PathBuf;

use lcmin::cli::{compare_csv, compare_instance, CapacityArgs, InstanceArgs};
use lcmin_milp::Budget;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/Gridnet.graph"));
    let instance = InstanceArgs { scale: 0.5, parallel: 4, k: 8, theta: 0.7, capacity: CapacityArgs::default() };
    let row = compare_instance(&graph, &instance, &Budget::default());
    print!("{}", compare_csv(&[row])?);
    Ok(())
}
