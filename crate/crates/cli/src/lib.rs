//! Standard-library companion to `fuzzmux-core`: file formats, the external
//! adapter protocol, campaign directories and the comparison harness behind
//! the `fuzzmux` command-line tool.

#[macro_use]
pub mod logging;

pub mod adapter;
pub mod compare;
pub mod config;
pub mod driver;
pub mod report;
pub mod store;
pub mod target_file;
