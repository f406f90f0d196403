//! Command-line front end for `bandlfd`: band spec files, built-in demos,
//! and the verification suite.

pub mod commands;
pub mod demo;
pub mod output;
pub mod spec;
pub mod verify;

pub use commands::{cmd_check, cmd_demo, cmd_solve, Failure, SolveFlags};
pub use demo::Demo;
pub use spec::SpecFile;
pub use verify::{RunReport, VerifyOptions};
