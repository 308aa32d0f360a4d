//! Summaries of trial results: delay statistics, QPU-pair demand, BSM
//! usage profiles and congestion-free provisioning.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;
use crate::partition::DistributedProgram;
use crate::scheduler::{EventKind, ExperimentReport, TrialResult};
use crate::time::Nanos;
use crate::topology::{Network, NodeId, ReservationId, TopologyError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no results to summarize")]
    Empty,
    #[error("reports are not paired: {0}")]
    Mismatch(String),
    #[error("peak requirements need results from unlimited mode")]
    NotUnlimited,
    #[error("malformed event log: {0}")]
    MalformedLog(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Population statistics of makespans, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayStats<T> {
    pub mean: T,
    pub std: T,
    pub min: Nanos,
    pub max: Nanos,
    pub trials: usize,
}

impl<T: Scalar> DelayStats<T> {
    pub fn from_makespans(makespans: &[Nanos]) -> Result<Self, MetricsError> {
        let (&min, &max) = match (makespans.iter().min(), makespans.iter().max()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(MetricsError::Empty),
        };
        let n = T::from_count(makespans.len() as u64);
        let mean = makespans.iter().map(|&m| T::from_count(m)).fold(T::zero(), |a, b| a + b) / n;
        let var = makespans
            .iter()
            .map(|&m| {
                let d = T::from_count(m) - mean;
                d * d
            })
            .fold(T::zero(), |a, b| a + b)
            / n;
        Ok(DelayStats { mean, std: var.sqrt(), min, max, trials: makespans.len() })
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> T {
        self.std / T::from_count(self.trials as u64).sqrt()
    }
}

/// Dynamic and static stats from runs sharing seed, program and topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDelayStats<T> {
    pub dynamic: DelayStats<T>,
    pub baseline: DelayStats<T>,
    /// `dynamic.mean / baseline.mean`.
    pub ratio: T,
}

pub fn delay_stats<T: Scalar>(
    dynamic: &ExperimentReport,
    baseline: &ExperimentReport,
) -> Result<PairedDelayStats<T>, MetricsError> {
    if dynamic.trials.is_empty() || baseline.trials.is_empty() {
        return Err(MetricsError::Empty);
    }
    if dynamic.sim.seed != baseline.sim.seed {
        return Err(MetricsError::Mismatch(format!("seeds {} and {}", dynamic.sim.seed, baseline.sim.seed)));
    }
    if dynamic.trials.len() != baseline.trials.len() {
        return Err(MetricsError::Mismatch(format!("{} vs {} trials", dynamic.trials.len(), baseline.trials.len())));
    }
    let d = DelayStats::<T>::from_makespans(&dynamic.makespans())?;
    let b = DelayStats::<T>::from_makespans(&baseline.makespans())?;
    Ok(PairedDelayStats { dynamic: d, baseline: b, ratio: d.mean / b.mean })
}

/// Two-qubit demand per unordered QPU pair. Off-diagonal entries count
/// consumed EPR pairs, diagonal entries count local two-qubit gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandMatrix<T> {
    pub num_qpus: usize,
    /// Row-major, only `i <= j` is filled.
    pub counts: Vec<u64>,
    pub total: u64,
    #[serde(skip)]
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Scalar> DemandMatrix<T> {
    pub fn count(&self, i: usize, j: usize) -> u64 {
        let (a, b) = (i.min(j), i.max(j));
        self.counts[a * self.num_qpus + b]
    }

    /// Share of all demand in percent; symmetric.
    pub fn percent(&self, i: usize, j: usize) -> T {
        if self.total == 0 {
            return T::zero();
        }
        T::from_count(self.count(i, j)) * T::from_count(100) / T::from_count(self.total)
    }

    /// Sum over unordered pairs, i.e. 100 whenever there is any demand.
    pub fn total_percent(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.num_qpus {
            for j in i..self.num_qpus {
                s = s + self.percent(i, j);
            }
        }
        s
    }

    pub fn diagonal_percent(&self) -> T {
        (0..self.num_qpus).map(|i| self.percent(i, i)).fold(T::zero(), |a, b| a + b)
    }

    /// QPU x QPU percentages with a header row, mirrored across the diagonal.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["qpu".to_string()];
        header.extend((0..self.num_qpus).map(|j| format!("qpu{j}")));
        w.write_record(&header)?;
        for i in 0..self.num_qpus {
            let mut row = vec![format!("qpu{i}")];
            row.extend((0..self.num_qpus).map(|j| format!("{:.4}", self.percent(i, j).to_f64_lossy())));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn demand_matrix<T: Scalar>(
    results: &[TrialResult],
    program: &DistributedProgram,
) -> Result<DemandMatrix<T>, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = program.num_qpus().max(program.qpus_used());
    let mut counts = vec![0u64; n * n];
    for r in results {
        for &((a, b), c) in &r.demand {
            if b >= n {
                return Err(MetricsError::Mismatch(format!("QPU {b} outside a {n}-QPU program")));
            }
            counts[a * n + b] += c;
        }
    }
    for (_, q) in program.local_two_qubit() {
        counts[q * n + q] += results.len() as u64;
    }
    let total = counts.iter().sum();
    Ok(DemandMatrix { num_qpus: n, counts, total, _scalar: std::marker::PhantomData })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub index: usize,
    pub time_ns: Nanos,
    pub in_use: Vec<u32>,
    pub max: u32,
}

/// Per-switch BSM holds at every orchestrator sample point.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BsmProfile {
    pub switches: Vec<NodeId>,
    pub samples: Vec<ProfileSample>,
}

impl BsmProfile {
    pub fn peak(&self) -> u32 {
        self.samples.iter().map(|s| s.max).max().unwrap_or(0)
    }

    /// Columns `sample_index,time_ns,switch,in_use,max`, one row per switch
    /// per sample.
    pub fn write_csv<W: Write>(&self, net: &Network, out: W) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sample_index", "time_ns", "switch", "in_use", "max"])?;
        for s in &self.samples {
            for (col, &sw) in self.switches.iter().enumerate() {
                w.write_record([
                    s.index.to_string(),
                    s.time_ns.to_string(),
                    net.node(sw).name.clone(),
                    s.in_use[col].to_string(),
                    s.max.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Rebuilds BSM usage by replaying reservation starts and releases from the
/// event log.
pub fn bsm_profile(result: &TrialResult) -> Result<BsmProfile, MetricsError> {
    let column: HashMap<NodeId, usize> = result.switches.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut held: HashMap<ReservationId, Vec<usize>> = HashMap::new();
    let mut in_use = vec![0u32; result.switches.len()];
    let mut samples = Vec::new();
    let mut last_time = 0;
    for e in &result.events {
        if e.time_ns < last_time {
            return Err(MetricsError::MalformedLog(format!("time goes backwards at {}", e.time_ns)));
        }
        last_time = e.time_ns;
        match &e.kind {
            EventKind::TaskStart { reservation, switches, .. } => {
                let cols = switches
                    .iter()
                    .map(|s| {
                        column.get(s).copied().ok_or_else(|| MetricsError::MalformedLog(format!("unknown switch {s}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                for &c in &cols {
                    in_use[c] += 1;
                }
                if held.insert(*reservation, cols).is_some() {
                    return Err(MetricsError::MalformedLog(format!("reservation {reservation} started twice")));
                }
            }
            // BSMs are free once the pair is heralded; a stored pair holds
            // only communication qubits until it is released or discarded.
            EventKind::TaskFinish { reservation, .. } => {
                let cols = held.get_mut(reservation).ok_or_else(|| {
                    MetricsError::MalformedLog(format!("finish of unknown reservation {reservation}"))
                })?;
                for c in cols.drain(..) {
                    in_use[c] -= 1;
                }
            }
            EventKind::Release { reservation, .. } | EventKind::Discard { reservation, .. } => {
                held.remove(reservation).ok_or_else(|| {
                    MetricsError::MalformedLog(format!("release of unknown reservation {reservation}"))
                })?;
            }
            EventKind::Sample { index } => {
                if *index != samples.len() {
                    return Err(MetricsError::MalformedLog(format!("sample index {index} out of order")));
                }
                let max = in_use.iter().copied().max().unwrap_or(0);
                samples.push(ProfileSample { index: *index, time_ns: e.time_ns, in_use: in_use.clone(), max });
            }
            EventKind::Execute { .. } => {}
        }
    }
    Ok(BsmProfile { switches: result.switches.clone(), samples })
}

/// Per-switch peak BSM usage over all samples of all trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakBsm {
    pub per_switch: Vec<(NodeId, u32)>,
    pub global: u32,
    /// Peak communication qubits per QPU.
    pub per_qpu: Vec<u32>,
}

pub fn peak_bsm_requirement(results: &[TrialResult]) -> Result<PeakBsm, MetricsError> {
    let first = results.first().ok_or(MetricsError::Empty)?;
    if results.iter().any(|r| !r.unlimited) {
        return Err(MetricsError::NotUnlimited);
    }
    let mut peaks = vec![0u32; first.switches.len()];
    let mut per_qpu = vec![0u32; first.qpu_peaks.len()];
    for r in results {
        if r.switches != first.switches || r.qpu_peaks.len() != per_qpu.len() {
            return Err(MetricsError::Mismatch("results come from different networks".into()));
        }
        for s in &r.samples {
            for (p, &u) in peaks.iter_mut().zip(&s.in_use) {
                *p = (*p).max(u);
            }
        }
        for (p, &u) in per_qpu.iter_mut().zip(&r.qpu_peaks) {
            *p = (*p).max(u);
        }
    }
    let global = peaks.iter().copied().max().unwrap_or(0);
    Ok(PeakBsm { per_switch: first.switches.iter().copied().zip(peaks).collect(), global, per_qpu })
}

/// Copy of `net` whose capacities equal the observed peaks.
pub fn provision(net: &Network, peaks: &PeakBsm) -> Result<Network, MetricsError> {
    let mut out = net.clone();
    for &(s, p) in &peaks.per_switch {
        out.set_bsm_capacity(s, p)?;
    }
    for (q, &p) in peaks.per_qpu.iter().enumerate() {
        out.set_comm_qubit_capacity(q, p)?;
    }
    Ok(out)
}

/// One row per labelled configuration.
pub fn write_delay_csv<T: Scalar, W: Write>(rows: &[(String, DelayStats<T>)], out: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["config", "trials", "mean_ns", "std_ns", "min_ns", "max_ns"])?;
    for (label, s) in rows {
        w.write_record([
            label.clone(),
            s.trials.to_string(),
            format!("{:.3}", s.mean.to_f64_lossy()),
            format!("{:.3}", s.std.to_f64_lossy()),
            s.min.to_string(),
            s.max.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
