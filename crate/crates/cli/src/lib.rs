//! File formats, subcommands and verification suites behind the `adm` binary.

pub mod commands;
pub mod io;
pub mod verify;
