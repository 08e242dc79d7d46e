//! Spike analysis for truncated-SVD item embeddings.
//!
//! The crate covers the whole path from raw interaction records to the
//! geometric diagnostics used on recommendation embeddings:
//!
//! * [`ingest`]: parse `item<TAB>context<TAB>weight` records, build the
//!   symmetric co-occurrence (Gram) matrix, keep the top-k entries per item and
//!   apply PPMI normalization.
//! * [`factorize`]: randomized truncated eigendecomposition of the symmetric
//!   matrix, a dense exact oracle, `UΣ^p` embeddings, reconstruction and the
//!   binary snapshot format.
//! * [`spikes`]: the greedy partial-cover spike detector and the `Spk` ratio.
//! * [`communities`]: SBM/DCBM generators, exact spiky embeddings and the
//!   numerical check that spike rows of `M̂` follow a DCBM mean.
//! * [`stability`]: top-k neighborhood stability across snapshots, conditioned
//!   on norm partitions.
//! * [`cli`]: the config-driven command layer behind the `spiky` binary.
//!
//! Every capability has a runnable program under `examples/`:
//!
//! ```bash
//! cargo run --release -p spiky --example pipeline
//! cargo run --release -p spiky --example gaussian_baseline
//! cargo run --release -p spiky --example spk_sweep
//! cargo run --release -p spiky --example spiky_theorem
//! cargo run --release -p spiky --example dcbm_sampling
//! cargo run --release -p spiky --example stability
//! cargo run --release -p spiky --example file_formats
//! cargo run --release -p spiky --example config_run
//! ```

pub mod cli;
pub mod communities;
pub mod error;
pub mod factorize;
pub mod ingest;
pub mod seed;
pub mod spikes;
pub mod stability;
pub mod stats;

pub use communities::{DcbmSpec, SynthConfig, SynthSpikes, TheoremReport};
pub use error::{Error, Result};
pub use factorize::{Embeddings, Factorization, SvdOptions};
pub use ingest::{InteractionTriples, SparseSymmetric};
pub use spikes::{CosineMode, SpikeCover, SpkConfig};
pub use stability::{Similarity, StabilityConfig, StabilityReport};
