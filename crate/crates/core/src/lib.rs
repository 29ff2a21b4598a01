pub mod augment;
pub mod cli;
pub mod facts;
pub mod fixtures;
pub mod metrics;
pub mod qgen;
pub mod refine;
pub mod seed;
pub mod solver;
pub mod temporal;
