//! JSON experiment configs and the generate / partition / simulate /
//! profile / sweep pipelines that write CSV and JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{emit_qasm, gen_benchmark, parse_qasm, BenchmarkKind, BenchmarkOptions, Circuit};
use crate::metrics::{bsm_profile, demand_matrix, peak_bsm_requirement, write_delay_csv, DelayStats, MetricsError};
use crate::partition::{export_json, partition_circuit, Partitioned, Partitioner};
use crate::physical::PhysicalConfig;
use crate::scheduler::{run_experiment, ExperimentReport, SimConfig, SimError, Strategy};
use crate::time::{serde_opt_duration, Nanos};
use crate::topology::{ClosSpec, Network};

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad input: the config, the circuit source or the partition request.
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn is_validation(&self) -> bool {
        matches!(self, PipelineError::Invalid(_))
    }
}

fn invalid(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Invalid(e.to_string())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitConfig {
    /// Generated benchmark; ignored when `qasm` is set.
    pub benchmark: BenchmarkKind,
    pub qubits: usize,
    pub options: BenchmarkOptions,
    /// Read the circuit from a QASM file instead.
    pub qasm: Option<PathBuf>,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        CircuitConfig { benchmark: BenchmarkKind::Qaoa, qubits: 40, options: BenchmarkOptions::default(), qasm: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub method: Partitioner,
    /// Number of QPUs used; parts map to QPUs `0..qpus`.
    pub qpus: usize,
    /// Qubits per QPU; `ceil(qubits / qpus)` if absent.
    pub capacity: Option<usize>,
    /// Gates per window for the windowed methods.
    pub window_size: usize,
    pub packing: bool,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig { method: Partitioner::Wbcp, qpus: 4, capacity: None, window_size: 100, packing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Every strategy is run on the same program with the same seed.
    pub strategies: Vec<Strategy>,
    /// Applies to `dynamic_lookahead` only.
    pub lookahead: usize,
    #[serde(with = "serde_opt_duration")]
    pub cutoff: Option<Nanos>,
    pub unlimited: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            strategies: vec![Strategy::StaticProb, Strategy::Dynamic],
            lookahead: 0,
            cutoff: None,
            unlimited: false,
        }
    }
}

/// Storage cutoff value in a sweep list (`"inf"` or `null` for none).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CutoffValue(#[serde(with = "serde_opt_duration")] pub Option<Nanos>);

/// Cartesian product of the non-empty lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub benchmarks: Vec<BenchmarkKind>,
    pub qubits: Vec<usize>,
    pub qpus: Vec<usize>,
    pub cross_success_prob: Vec<f64>,
    pub cutoff: Vec<CutoffValue>,
    pub lookahead: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub circuit: CircuitConfig,
    pub partition: PartitionConfig,
    pub topology: ClosSpec,
    pub physical: PhysicalConfig,
    pub simulation: SimulationConfig,
    pub trials: u64,
    pub seed: u64,
    pub emit_events: bool,
    pub output: PathBuf,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            circuit: CircuitConfig::default(),
            partition: PartitionConfig::default(),
            topology: ClosSpec::default(),
            physical: PhysicalConfig::default(),
            simulation: SimulationConfig::default(),
            trials: 100,
            seed: 0,
            emit_events: false,
            output: PathBuf::from("out"),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(invalid)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        self.physical.validate().map_err(invalid)?;
        if self.physical.attempt_cap == 0 {
            return Err(invalid("attempt_cap must be at least 1"));
        }
        if self.simulation.strategies.is_empty() {
            return Err(invalid("at least one strategy is required"));
        }
        if self.simulation.lookahead > 0 && !self.simulation.strategies.contains(&Strategy::DynamicLookahead) {
            return Err(invalid("lookahead is set but dynamic_lookahead is not among the strategies"));
        }
        let p = &self.partition;
        if p.qpus == 0 {
            return Err(invalid("partition.qpus must be at least 1"));
        }
        if p.window_size == 0 {
            return Err(invalid("partition.window_size must be at least 1"));
        }
        let net = self.network()?;
        if p.qpus > net.num_qpus() {
            return Err(invalid(format!("{} QPUs requested but the topology has {}", p.qpus, net.num_qpus())));
        }
        if self.circuit.qasm.is_none() && self.circuit.qubits == 0 {
            return Err(invalid("circuit.qubits must be at least 1"));
        }
        for &q in &self.sweep.cross_success_prob {
            if !(q > 0.0 && q <= 1.0) {
                return Err(invalid(format!("sweep cross_success_prob {q} outside (0, 1]")));
            }
        }
        if self.sweep.qpus.iter().any(|&k| k == 0 || k > net.num_qpus()) {
            return Err(invalid("sweep qpus must lie in 1..=number of QPUs"));
        }
        Ok(())
    }

    pub fn network(&self) -> Result<Network, PipelineError> {
        Network::build_clos(self.topology).map_err(invalid)
    }

    pub fn build_circuit(&self) -> Result<Circuit, PipelineError> {
        match &self.circuit.qasm {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(io_err(path))?;
                parse_qasm(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
            }
            None => gen_benchmark(self.circuit.benchmark, self.circuit.qubits, &self.circuit.options).map_err(invalid),
        }
    }

    pub fn partition(&self, circuit: &Circuit) -> Result<Partitioned, PipelineError> {
        let p = &self.partition;
        partition_circuit(circuit, p.method, p.qpus, p.capacity, p.window_size, p.packing).map_err(invalid)
    }

    fn sim_config(&self, strategy: Strategy) -> SimConfig {
        SimConfig {
            strategy,
            lookahead: if strategy == Strategy::DynamicLookahead { self.simulation.lookahead } else { 0 },
            cutoff: self.simulation.cutoff,
            unlimited: self.simulation.unlimited,
            seed: self.seed,
        }
    }
}

/// Everything produced by one simulated configuration.
pub struct SimulationRun {
    pub circuit: Circuit,
    pub network: Network,
    pub partitioned: Partitioned,
    pub reports: Vec<ExperimentReport>,
}

impl SimulationRun {
    /// The report whose demand, profile and events are written out: the
    /// last listed strategy.
    pub fn primary(&self) -> &ExperimentReport {
        self.reports.last().expect("at least one strategy")
    }

    fn find(&self, pred: impl Fn(Strategy) -> bool) -> Option<&ExperimentReport> {
        self.reports.iter().find(|r| pred(r.sim.strategy))
    }

    /// `(dynamic mean, static mean, ratio)` when both are present.
    pub fn paired_means(&self) -> Result<Option<(f64, f64, f64)>, PipelineError> {
        let dynamic = self.find(|s| matches!(s, Strategy::Dynamic | Strategy::DynamicLookahead));
        let fixed = self.find(|s| s == Strategy::StaticProb);
        match (dynamic, fixed) {
            (Some(d), Some(s)) => {
                let p = crate::metrics::delay_stats::<f64>(d, s)?;
                Ok(Some((p.dynamic.mean, p.baseline.mean, p.ratio)))
            }
            _ => Ok(None),
        }
    }
}

pub fn simulate(config: &ExperimentConfig) -> Result<SimulationRun, PipelineError> {
    config.validate()?;
    let circuit = config.build_circuit()?;
    let network = config.network()?;
    let partitioned = config.partition(&circuit)?;
    let reports = config
        .simulation
        .strategies
        .iter()
        .map(|&s| {
            run_experiment(&partitioned.program, &network, &config.physical, &config.sim_config(s), config.trials)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationRun { circuit, network, partitioned, reports })
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(path)
}

fn ns(v: f64) -> String {
    format!("{v:.3}")
}

/// `generate`: writes `circuit.qasm`.
pub fn run_generate(config: &ExperimentConfig, out: &Path) -> Result<String, PipelineError> {
    config.validate()?;
    let circuit = config.build_circuit()?;
    let path = write_file(out, "circuit.qasm", emit_qasm(&circuit).as_bytes())?;
    Ok(format!(
        "{} qubits, {} gates ({} two-qubit) -> {}\n",
        circuit.num_qubits(),
        circuit.len(),
        circuit.two_qubit_count(),
        path.display()
    ))
}

/// `partition`: writes `partition.json` and `cost.csv`.
pub fn run_partition(config: &ExperimentConfig, out: &Path) -> Result<String, PipelineError> {
    config.validate()?;
    let circuit = config.build_circuit()?;
    let p = config.partition(&circuit)?;
    write_file(out, "partition.json", export_json(&p)?.as_bytes())?;
    let c = p.cost;
    let csv = format!(
        "method,qpus,nonlocal_gates,packed_epr,teleports,total\n{},{},{},{},{},{}\n",
        config.partition.method, config.partition.qpus, c.nonlocal_gates, c.packed_epr, c.teleports, c.total
    );
    write_file(out, "cost.csv", csv.as_bytes())?;
    Ok(format!(
        "{}: {} non-local gates, {} packed, {} teleports, total {}\n",
        config.partition.method, c.nonlocal_gates, c.packed_epr, c.teleports, c.total
    ))
}

/// `simulate`: writes `config.json`, `delay_stats.csv`, `demand.csv`,
/// `bsm_profile.csv` and, if enabled, `events.jsonl`.
pub fn run_config(config: &ExperimentConfig, out: &Path) -> Result<String, PipelineError> {
    let run = simulate(config)?;
    write_file(out, "config.json", config.to_json().as_bytes())?;

    let mut rows = Vec::new();
    let mut summary = String::new();
    for r in &run.reports {
        let s: DelayStats<f64> = r.stats()?;
        writeln!(
            summary,
            "{:<18} mean {:>16} ns  std {:>16} ns  ({} trials)",
            r.sim.strategy,
            ns(s.mean),
            ns(s.std),
            s.trials
        )
        .unwrap();
        rows.push((r.sim.strategy.to_string(), s));
    }
    let mut buf = Vec::new();
    write_delay_csv(&rows, &mut buf)?;
    write_file(out, "delay_stats.csv", &buf)?;
    if let Some((_, _, ratio)) = run.paired_means()? {
        writeln!(summary, "dynamic/static ratio {ratio:.4}").unwrap();
    }

    let primary = run.primary();
    let mut buf = Vec::new();
    demand_matrix::<f64>(&primary.trials, &run.partitioned.program)?.write_csv(&mut buf)?;
    write_file(out, "demand.csv", &buf)?;

    let first = &primary.trials[0];
    let mut buf = Vec::new();
    bsm_profile(first)?.write_csv(&run.network, &mut buf)?;
    write_file(out, "bsm_profile.csv", &buf)?;

    if config.emit_events {
        write_file(out, "events.jsonl", first.events_jsonl().as_bytes())?;
    }
    if primary.sim.unlimited {
        let peaks = peak_bsm_requirement(&primary.trials)?;
        let mut csv = String::from("switch,peak_bsm\n");
        for (s, p) in &peaks.per_switch {
            writeln!(csv, "{},{p}", run.network.node(*s).name).unwrap();
        }
        write_file(out, "peak_bsm.csv", csv.as_bytes())?;
        writeln!(summary, "peak BSMs per switch (global max) {}", peaks.global).unwrap();
    }
    Ok(summary)
}

/// `profile`: `simulate` with capacities ignored, plus `peak_bsm.csv`.
pub fn run_profile(config: &ExperimentConfig, out: &Path) -> Result<String, PipelineError> {
    let mut cfg = config.clone();
    cfg.simulation.unlimited = true;
    run_config(&cfg, out)
}

#[derive(Debug, Clone, PartialEq)]
struct SweepPoint {
    benchmark: BenchmarkKind,
    qubits: usize,
    qpus: usize,
    cross_p: f64,
    cutoff: Option<Nanos>,
    lookahead: usize,
}

fn or_base<T: Clone>(list: &[T], base: T) -> Vec<T> {
    if list.is_empty() {
        vec![base]
    } else {
        list.to_vec()
    }
}

fn sweep_points(config: &ExperimentConfig) -> Vec<SweepPoint> {
    let s = &config.sweep;
    let mut points = Vec::new();
    for benchmark in or_base(&s.benchmarks, config.circuit.benchmark) {
        for qubits in or_base(&s.qubits, config.circuit.qubits) {
            for qpus in or_base(&s.qpus, config.partition.qpus) {
                for cross_p in or_base(&s.cross_success_prob, config.physical.cross.success_prob) {
                    for cutoff in or_base(&s.cutoff, CutoffValue(config.simulation.cutoff)) {
                        for lookahead in or_base(&s.lookahead, config.simulation.lookahead) {
                            points.push(SweepPoint { benchmark, qubits, qpus, cross_p, cutoff: cutoff.0, lookahead });
                        }
                    }
                }
            }
        }
    }
    points
}

fn apply(config: &ExperimentConfig, p: &SweepPoint) -> ExperimentConfig {
    let mut c = config.clone();
    c.circuit.benchmark = p.benchmark;
    c.circuit.qubits = p.qubits;
    c.partition.qpus = p.qpus;
    c.physical.cross.success_prob = p.cross_p;
    c.simulation.cutoff = p.cutoff;
    c.simulation.lookahead = p.lookahead;
    c
}

fn cutoff_label(c: Option<Nanos>) -> String {
    c.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

/// `sweep`: runs every point of the cartesian product and writes
/// `sweep.csv` (one row per point and strategy) and `paired.csv`.
pub fn run_sweep(config: &ExperimentConfig, out: &Path) -> Result<String, PipelineError> {
    config.validate()?;
    if config.circuit.qasm.is_some() && (!config.sweep.benchmarks.is_empty() || !config.sweep.qubits.is_empty()) {
        return Err(invalid("benchmark and qubit sweeps need a generated circuit"));
    }
    let points = sweep_points(config);
    let configs: Vec<ExperimentConfig> = points.iter().map(|p| apply(config, p)).collect();
    for c in &configs {
        c.validate()?;
    }
    let runs: Vec<SimulationRun> = configs.par_iter().map(simulate).collect::<Result<_, _>>()?;

    write_file(out, "config.json", config.to_json().as_bytes())?;
    let head = "point,benchmark,qubits,qpus,cross_p,cutoff_ns,lookahead";
    let mut sweep = format!("{head},strategy,trials,mean_ns,std_ns,min_ns,max_ns\n");
    let mut paired = format!("{head},dynamic_mean_ns,static_mean_ns,ratio\n");
    let mut summary = String::new();
    for (i, (p, run)) in points.iter().zip(&runs).enumerate() {
        let key = format!(
            "{i},{},{},{},{},{},{}",
            p.benchmark,
            p.qubits,
            p.qpus,
            p.cross_p,
            cutoff_label(p.cutoff),
            p.lookahead
        );
        for r in &run.reports {
            let s: DelayStats<f64> = r.stats()?;
            writeln!(sweep, "{key},{},{},{},{},{},{}", r.sim.strategy, s.trials, ns(s.mean), ns(s.std), s.min, s.max)
                .unwrap();
        }
        if let Some((d, s, ratio)) = run.paired_means()? {
            writeln!(paired, "{key},{},{},{ratio:.6}", ns(d), ns(s)).unwrap();
            writeln!(summary, "point {i}: ratio {ratio:.4}").unwrap();
        }
    }
    write_file(out, "sweep.csv", sweep.as_bytes())?;
    write_file(out, "paired.csv", paired.as_bytes())?;
    writeln!(summary, "{} sweep points", points.len()).unwrap();
    Ok(summary)
}
