//! Benchmark harness for the ABBE toolset.
//!
//! Four experiments:
//!
//! 1. setup plus keygen time for a growing number of users with 3 attributes each,
//! 2. the same for a single user with a growing number of attributes,
//! 3. concurrent plaintext downloads through one forwarder,
//! 4. concurrent encrypted downloads: header, decapsulation, decryption.
//!
//! Every record keeps per-user times and the worst of them. Reports are CSV
//! with a Markdown rendering and a host metadata sidecar.

pub mod host;
pub mod keygen;
pub mod network;
pub mod record;
pub mod runner;
pub mod stats;

use abbe_core::content::ContentError;
use abbe_core::formats::FormatError;
use abbe_core::ndn::NdnError;
use abbe_core::AbbeError;
use thiserror::Error;

pub use keygen::{experiment1, experiment2};
pub use network::{experiment3, experiment4};
pub use record::{parse_csv, to_csv, to_markdown, BenchmarkRecord};
pub use runner::{run, BenchOptions, Plan};
pub use stats::{linear_fit, LinearFit};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bad plan: {0}")]
    Plan(String),
    #[error("download for {user} does not hash to the published object")]
    HashMismatch { user: String },
    #[error("producer saw {upstream} interests for {segments} segments")]
    Aggregation { segments: u64, upstream: u64 },
    #[error(transparent)]
    Abbe(#[from] AbbeError),
    #[error(transparent)]
    Ndn(#[from] NdnError),
    #[error(transparent)]
    Content(#[from] ContentError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
