pub mod aortho;
pub mod block;
pub mod commcost;
pub mod error;
pub mod harness;
pub mod market;
pub mod partition;
pub mod precond;
pub mod solver;
pub mod sparse;
