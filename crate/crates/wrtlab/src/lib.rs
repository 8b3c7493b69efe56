//! Simulation and analytic-verification laboratory for weighted recursive
//! trees with bounded random vertex-weights: tree generation, exact and
//! asymptotic degree-tail distributions, maximum-degree centering
//! predictions, and statistical checks of the limit results.

pub mod asymptotics;
pub mod cli;
pub mod degdist;
pub mod oracle;
pub mod quad;
pub mod simulate;
pub mod specfun;
pub mod stats;
pub mod weights;
