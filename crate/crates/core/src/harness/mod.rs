//! Episode runner, seeded batches, metrics and result files.

pub mod batch;
pub mod episode;
pub mod io;
pub mod metrics;

pub use batch::{episode_seed, run_batch, run_batch_sequential, scenario_for, BatchResult};
#[cfg(feature = "parallel")]
pub use batch::run_batch_parallel;
pub use episode::{run_episode, EpisodeParams, EpisodeRecord, Outcome, TickRecord, YieldRecord};
pub use metrics::{summarize, summarize_all, Summary};
