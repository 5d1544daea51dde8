//! Configuration, reports and named experiments behind the `nlperi` binary.

pub mod config;
pub mod experiments;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nlperi::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Cap the global rayon pool from `NLPERI_THREADS`, if set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("NLPERI_THREADS") {
        let k: usize = v.trim().parse().map_err(|_| CliError::Config(format!("NLPERI_THREADS must be a positive integer, got `{v}`")))?;
        if k == 0 {
            return Err(CliError::Config("NLPERI_THREADS must be positive".into()));
        }
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}
