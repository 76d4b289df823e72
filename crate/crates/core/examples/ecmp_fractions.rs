//! Exact even-split shortest-path fractions on a diamond with a shortcut.

use lcmin::igp_routing::EcmpRouter;
use lcmin::netmodel::{Network, PortGroup};

fn main() {
    let mut net = Network::new(["a", "b", "c", "d", "e"]);
    let one = || PortGroup::uniform(1, 10.0);
    net.add_link(0, 1, one(), 1);
    net.add_link(0, 2, one(), 1);
    net.add_link(1, 3, one(), 1);
    net.add_link(2, 3, one(), 1);
    net.add_link(2, 4, one(), 1);
    net.add_link(4, 3, one(), 1);
    net.add_link(0, 3, one(), 2);
    let router = EcmpRouter::new(&net);
    for (u, w) in [(0, 3), (1, 4), (4, 0)] {
        println!("{} -> {} (distance {:?})", net.name(u), net.name(w), router.distance(u, w));
        if let Some(Ok(flow)) = router.unit_flow_exact(u, w) {
            for (a, f) in flow {
                let arc = net.arc(a);
                println!("  {} -> {}: {f}", net.name(arc.tail), net.name(arc.head));
            }
        }
    }
}
