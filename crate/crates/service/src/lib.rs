//! HTTP extraction service and command-line front end for `vesselpath`.

pub mod api;
pub mod cli;
