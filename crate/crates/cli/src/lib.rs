//! Command layer for the `htcrystal` binary: config parsing, reports and the selftest.

pub mod commands;
pub mod config;
pub mod report;
pub mod selftest;
