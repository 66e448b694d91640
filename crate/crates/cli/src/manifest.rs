use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use bneb::experiments::{ExperimentConfig, SkipCounters};
use bneb::Result;

/// Provenance record written next to every experiment output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: ExperimentConfig,
    /// SHA-256 of the compact JSON form of `config`.
    pub config_hash: String,
    pub seed: u64,
    pub version: &'static str,
    pub threads: usize,
    pub started_unix: f64,
    pub elapsed_seconds: f64,
    pub skipped: SkipCounters,
}

impl RunManifest {
    pub fn now() -> f64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64())
    }

    pub fn new(
        config: &ExperimentConfig,
        started_unix: f64,
        elapsed: Duration,
        skipped: SkipCounters,
    ) -> Result<Self> {
        Ok(Self {
            command: std::env::args().collect(),
            config: config.clone(),
            config_hash: config_hash(config)?,
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION"),
            threads: rayon::current_num_threads(),
            started_unix,
            elapsed_seconds: elapsed.as_secs_f64(),
            skipped,
        })
    }
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(config)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
