//! Command-line front end for the `fglasso` library: simulation, fitting,
//! penalty paths and ROC scoring, all through plain-text files.

pub mod commands;
pub mod io;
pub mod report;
