//! Rating-history ingest, run configuration and the estimate → simulate →
//! price → optimize → frontier workflow behind the `cmc` binary.

pub mod config;
pub mod ingest;
pub mod run;

pub use config::RunConfig;
pub use ingest::{export_panel, ingest, ClubbingMap, IngestError, IngestReport, SectorScheme};
pub use run::{run, Command, ErrorClass, LoadedConfig, Overrides, RunError};
