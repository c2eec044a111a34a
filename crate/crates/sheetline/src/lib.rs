//! File formats, collection server and command-line tooling around
//! [`sheetline_core`].

pub mod capture;
pub mod cli;
pub mod construct;
pub mod export;
pub mod qspec;
pub mod server;
