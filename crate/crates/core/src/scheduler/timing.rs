use std::collections::BTreeMap;

use crate::physical::{
    expected_generation_time, sample_generation_time_capped, PhysicalConfig, RandomStream, StreamKey,
};
use crate::time::Nanos;
use crate::topology::PairClass;

use super::SimError;

/// Where task durations come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Durations {
    /// Closed-form mean, deterministic.
    Expected,
    /// Geometric attempts drawn from the stream keyed by
    /// `(seed, trial, node, generation)`.
    Sampled { seed: u64, trial: u64 },
    /// Fixed duration per node, reconfiguration included.
    Scripted(BTreeMap<usize, Nanos>),
}

impl Durations {
    pub fn scripted<I: IntoIterator<Item = (usize, Nanos)>>(items: I) -> Self {
        Durations::Scripted(items.into_iter().collect())
    }

    pub(crate) fn duration(
        &self,
        phys: &PhysicalConfig,
        class: PairClass,
        reconfigured: bool,
        node: usize,
        generation: u64,
    ) -> Result<Nanos, SimError> {
        let reconfig = phys.reconfig(reconfigured);
        let d = match self {
            Durations::Expected => expected_generation_time(phys.params(class)?, reconfig)?,
            Durations::Sampled { seed, trial } => {
                let key = StreamKey { seed: *seed, trial: *trial, task: node as u64, generation };
                let mut stream = RandomStream::new(key);
                sample_generation_time_capped(phys.params(class)?, reconfig, phys.attempt_cap, &mut stream)?
            }
            Durations::Scripted(map) => *map.get(&node).ok_or(SimError::MissingDuration(node))?,
        };
        if d == 0 {
            return Err(SimError::ZeroDuration(node));
        }
        Ok(d)
    }
}
