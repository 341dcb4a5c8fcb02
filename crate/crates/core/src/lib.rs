pub mod cli;
pub mod conflict;
pub mod formula;
pub mod jgraph;
pub mod sat;
pub mod scenario;
pub mod strategy;
pub mod world;
