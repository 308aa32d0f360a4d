//! Event-driven execution of a distributed program on the network: static
//! layer-by-layer schedules, dynamic front-layer scheduling and lookahead
//! with an EPR cutoff.

mod engine;
mod timing;

pub use timing::Durations;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::DagError;
use crate::metrics::{DelayStats, MetricsError};
use crate::partition::DistributedProgram;
use crate::physical::{PhysicalConfig, PhysicalError};
use crate::time::{serde_opt_duration, Nanos};
use crate::topology::{LedgerError, Network, NodeId, QpuId, ReservationId};

use engine::Engine;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Physical(#[from] PhysicalError),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("program uses {needed} QPUs but the network has {available}")]
    TooFewQpus { needed: usize, available: usize },
    #[error("no scripted duration for node {0}")]
    MissingDuration(usize),
    #[error("node {0} would take zero time")]
    ZeroDuration(usize),
    #[error("nodes {blocked:?} can never obtain resources (t = {time} ns)")]
    Starvation { time: Nanos, blocked: Vec<usize> },
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("trial count must be at least 1")]
    NoTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    StaticExpected,
    StaticProb,
    #[default]
    Dynamic,
    DynamicLookahead,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::StaticExpected => "static_expected",
            Strategy::StaticProb => "static_prob",
            Strategy::Dynamic => "dynamic",
            Strategy::DynamicLookahead => "dynamic_lookahead",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static_expected" => Ok(Strategy::StaticExpected),
            "static_prob" | "static" => Ok(Strategy::StaticProb),
            "dynamic" => Ok(Strategy::Dynamic),
            "dynamic_lookahead" | "lookahead" => Ok(Strategy::DynamicLookahead),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub strategy: Strategy,
    /// Future ASAP layers targeted by lookahead.
    pub lookahead: usize,
    /// Storage limit for pre-generated pairs; `None` keeps them forever.
    #[serde(with = "serde_opt_duration")]
    pub cutoff: Option<Nanos>,
    /// Ignore BSM and communication-qubit capacities (usage is still tracked).
    pub unlimited: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { strategy: Strategy::Dynamic, lookahead: 0, cutoff: None, unlimited: false, seed: 0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.lookahead > 0 && self.strategy != Strategy::DynamicLookahead {
            return Err(SimError::Config(format!("lookahead needs dynamic_lookahead, not {}", self.strategy)));
        }
        Ok(())
    }

    /// Durations for one trial under this config.
    pub fn durations(&self, trial: u64) -> Durations {
        match self.strategy {
            Strategy::StaticExpected => Durations::Expected,
            _ => Durations::Sampled { seed: self.seed, trial },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    OnDemand,
    Lookahead,
}

/// A pre-generated pair waiting for its node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EprPair {
    pub node: usize,
    pub qpus: (QpuId, QpuId),
    pub reservation: ReservationId,
    pub ready: Nanos,
    pub expiry: Option<Nanos>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    TaskStart {
        node: usize,
        pair: (QpuId, QpuId),
        purpose: Purpose,
        reservation: ReservationId,
        switches: Vec<NodeId>,
        generation: u64,
        reconfigured: bool,
        finish_ns: Nanos,
    },
    TaskFinish {
        node: usize,
        purpose: Purpose,
        reservation: ReservationId,
    },
    Execute {
        node: usize,
    },
    /// Pair consumed by its node; the reservation is returned.
    Release {
        node: usize,
        reservation: ReservationId,
    },
    /// Stored pair dropped unused (cutoff, or evicted to break a deadlock).
    Discard {
        node: usize,
        reservation: ReservationId,
        evicted: bool,
    },
    Sample {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time_ns: Nanos,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// BSMs in use per switch at one orchestrator step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BsmSample {
    pub time_ns: Nanos,
    /// Indexed like [`TrialResult::switches`].
    pub in_use: Vec<u32>,
}

impl BsmSample {
    pub fn max(&self) -> u32 {
        self.in_use.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub makespan: Nanos,
    pub events: Vec<Event>,
    /// Switch node ids, in the column order of every sample.
    pub switches: Vec<NodeId>,
    pub samples: Vec<BsmSample>,
    /// Consumed pairs per unordered QPU pair.
    pub demand: Vec<((QpuId, QpuId), u64)>,
    pub discarded: u64,
    /// Failed reservation attempts.
    pub unavailable: u64,
    /// Peak communication qubits in use per QPU.
    pub qpu_peaks: Vec<u32>,
    pub unlimited: bool,
}

impl TrialResult {
    /// Event log as JSON lines.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}

fn check_fit(program: &DistributedProgram, net: &Network) -> Result<(), SimError> {
    let needed = program.qpus_used();
    if needed > net.num_qpus() {
        return Err(SimError::TooFewQpus { needed, available: net.num_qpus() });
    }
    Ok(())
}

/// Layer-by-layer with expected durations; seed-independent.
pub fn run_static_expected(
    program: &DistributedProgram,
    net: &Network,
    phys: &PhysicalConfig,
    unlimited: bool,
) -> Result<TrialResult, SimError> {
    run_static(program, net, phys, &Durations::Expected, unlimited)
}

/// Layer-by-layer: the next layer starts only when the current one is done.
/// Blocked nodes retry in id order on every release.
pub fn run_static_prob(
    program: &DistributedProgram,
    net: &Network,
    phys: &PhysicalConfig,
    durations: &Durations,
    unlimited: bool,
) -> Result<TrialResult, SimError> {
    run_static(program, net, phys, durations, unlimited)
}

fn run_static(
    program: &DistributedProgram,
    net: &Network,
    phys: &PhysicalConfig,
    durations: &Durations,
    unlimited: bool,
) -> Result<TrialResult, SimError> {
    check_fit(program, net)?;
    let mut engine = Engine::new(program, net, phys, durations, unlimited, None);
    engine.run_static()?;
    Ok(engine.finish())
}

/// Front-layer scheduling: a node's pair generation starts as soon as its
/// parents are done and resources allow.
pub fn run_dynamic(
    program: &DistributedProgram,
    net: &Network,
    phys: &PhysicalConfig,
    durations: &Durations,
    unlimited: bool,
) -> Result<TrialResult, SimError> {
    run_dynamic_lookahead(program, net, phys, durations, unlimited, 0, None)
}

/// Dynamic scheduling that also pre-generates pairs for the next `k` layers.
/// Stored pairs are dropped after `cutoff`; their nodes then fall back to
/// on-demand generation.
pub fn run_dynamic_lookahead(
    program: &DistributedProgram,
    net: &Network,
    phys: &PhysicalConfig,
    durations: &Durations,
    unlimited: bool,
    k: usize,
    cutoff: Option<Nanos>,
) -> Result<TrialResult, SimError> {
    check_fit(program, net)?;
    let mut engine = Engine::new(program, net, phys, durations, unlimited, cutoff);
    engine.run_dynamic(k)?;
    Ok(engine.finish())
}

/// One trial of `sim` with trial index `trial`.
pub fn run_trial(
    program: &DistributedProgram,
    net: &Network,
    phys: &PhysicalConfig,
    sim: &SimConfig,
    trial: u64,
) -> Result<TrialResult, SimError> {
    sim.validate()?;
    let durations = sim.durations(trial);
    let mut result = match sim.strategy {
        Strategy::StaticExpected | Strategy::StaticProb => run_static(program, net, phys, &durations, sim.unlimited),
        Strategy::Dynamic | Strategy::DynamicLookahead => {
            run_dynamic_lookahead(program, net, phys, &durations, sim.unlimited, sim.lookahead, sim.cutoff)
        }
    }?;
    result.trial = trial;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub sim: SimConfig,
    pub trials: Vec<TrialResult>,
}

impl ExperimentReport {
    pub fn makespans(&self) -> Vec<Nanos> {
        self.trials.iter().map(|t| t.makespan).collect()
    }

    pub fn stats(&self) -> Result<DelayStats<f64>, MetricsError> {
        DelayStats::from_makespans(&self.makespans())
    }
}

/// Trials `0..trials`, run in parallel and collected in index order.
pub fn run_experiment(
    program: &DistributedProgram,
    net: &Network,
    phys: &PhysicalConfig,
    sim: &SimConfig,
    trials: u64,
) -> Result<ExperimentReport, SimError> {
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    sim.validate()?;
    phys.validate()?;
    let results: Result<Vec<_>, _> =
        (0..trials).into_par_iter().map(|t| run_trial(program, net, phys, sim, t)).collect();
    Ok(ExperimentReport { sim: *sim, trials: results? })
}
