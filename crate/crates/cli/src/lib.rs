//! Scenario front end for the catchup solvers: a line-oriented problem
//! format, a runner that writes CSV artifacts, and the selftest suites.

pub mod runner;
pub mod scenario;
pub mod selftest;
