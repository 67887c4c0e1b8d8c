//! Aggregation of episode records into per controller and family
//! summaries.

use serde::{Deserialize, Serialize};

use super::episode::{EpisodeRecord, Outcome};
use crate::control::ControllerKind;
use crate::world::Family;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub controller: ControllerKind,
    pub family: Family,
    /// Successful yields.
    pub mt1_succ: u64,
    /// Unsuccessful yields.
    pub mt1_unsucc: u64,
    /// Mean realized deceleration over decelerating ticks (m/s^2, <= 0).
    pub mt2_mean: f64,
    pub mt2_std: f64,
    /// Successful finishes.
    pub mt3: u64,
    /// Mean per-episode emergency braking time (s).
    pub mt4_mean: f64,
    pub mt4_std: f64,
    pub episodes: u64,
    pub collisions: u64,
    pub timeouts: u64,
    pub faults: u64,
    pub decel_samples: u64,
}

/// Population mean and standard deviation; `(0, 0)` for no samples.
pub fn mean_std(xs: impl IntoIterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = xs.clone().into_iter().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = xs.into_iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

pub fn summarize<'a>(controller: ControllerKind, family: Family, records: impl IntoIterator<Item = &'a EpisodeRecord>) -> Summary {
    let records: Vec<&EpisodeRecord> = records.into_iter().collect();
    let count = |f: &dyn Fn(&Outcome) -> bool| records.iter().filter(|r| f(&r.outcome)).count() as u64;
    let decel = records.iter().flat_map(|r| r.decel_samples.iter().copied());
    let (mt2_mean, mt2_std) = mean_std(decel.clone());
    let (mt4_mean, mt4_std) = mean_std(records.iter().map(|r| r.emergency_time));
    Summary {
        controller,
        family,
        mt1_succ: records.iter().map(|r| r.successful_yields).sum(),
        mt1_unsucc: records.iter().map(|r| r.unsuccessful_yields).sum(),
        mt2_mean,
        mt2_std,
        mt3: count(&|o| *o == Outcome::Success),
        mt4_mean,
        mt4_std,
        episodes: records.len() as u64,
        collisions: count(&|o| matches!(o, Outcome::Collision { .. })),
        timeouts: count(&|o| *o == Outcome::Timeout),
        faults: count(&|o| matches!(o, Outcome::Fault { .. })),
        decel_samples: decel.count() as u64,
    }
}

/// One summary per (controller, family) pair present in `records`, in
/// controller then family order.
pub fn summarize_all(records: &[EpisodeRecord]) -> Vec<Summary> {
    let mut keys: Vec<(ControllerKind, Family)> = records.iter().map(|r| (r.controller, r.family)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(c, f)| summarize(c, f, records.iter().filter(|r| r.controller == c && r.family == f)))
        .collect()
}
