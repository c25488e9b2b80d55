pub mod batch;
pub mod cli;
pub mod gen;
pub mod ism;
pub mod models;
pub mod oracle;
pub mod prng;
pub mod runner;
pub mod suites;
