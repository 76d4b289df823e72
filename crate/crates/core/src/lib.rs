pub mod netmodel;
pub mod repetita_io;
pub mod igp_routing;
pub mod lc_problems;
pub mod hardness_gen;
pub mod oracle;
pub mod cli;
