//! Batch front end: one function per pipeline verb, shared by the `uvkit`
//! binary and the integration tests.

pub mod config;
pub mod error;
pub mod tools;
pub mod train;
pub mod unwrap;

pub use config::{Config, DatasetConfig, RefineMode, SeamConfig, TrainRunConfig, UnwrapConfig};
pub use error::{ErrorKind, PipelineError};
pub use tools::{run_curate, seams_decode, seams_encode, CurateSummary};
pub use train::{load_pairs, manifest_pairs, run_train, TrainReport};
pub use unwrap::{load_seams, run_metrics, run_pack, run_unwrap, UnwrapReport, PARTIAL_MARKER};

/// Version line printed by `--version`.
pub fn build_info() -> &'static str {
    static INFO: std::sync::OnceLock<String> = std::sync::OnceLock::new();
    INFO.get_or_init(|| format!(
        "{} {} ({} build, {} {})",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        if cfg!(debug_assertions) { "debug" } else { "release" },
        std::env::consts::ARCH,
        std::env::consts::OS,
    ))
}
