//! File formats, run manifests and subcommands behind the `multiplex-nmf`
//! binary.

pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;
pub mod method;

pub use error::CliError;
pub use manifest::RunManifest;
pub use method::MethodTag;
