//! Qubit-to-QPU assignment: interaction graphs, Kernighan-Lin, windowed
//! partitioning with teleports, boundary refinement and gate packing.

mod graph;
mod kl;
mod packing;
mod program;
mod window;

pub use graph::{InteractionGraph, Placement};
pub use kl::{kl_partition, kl_refine};
pub use packing::{gate_pack, partition_cost};
pub use program::{annotate_program, Annotation, DistributedProgram, NodeOp, ProgramNode};
pub use window::{boundary_refine, wbcp_partition, Teleport, Window, WindowedPlacement};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Circuit;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("number of parts must be at least 1")]
    ZeroParts,
    #[error("{qubits} qubits do not fit into {parts} parts of capacity {capacity}")]
    Infeasible { qubits: usize, parts: usize, capacity: usize },
    #[error("window size must be at least 1")]
    WindowSize,
}

/// EPR-pair cost of a partitioned program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PartitionCost {
    pub nonlocal_gates: usize,
    pub packed_epr: usize,
    pub teleports: usize,
    pub total: usize,
}

pub fn interaction_graph(circuit: &Circuit) -> InteractionGraph {
    InteractionGraph::from_circuit(circuit)
}

/// Non-local two-qubit gates under a fixed placement.
pub fn static_cost(circuit: &Circuit, placement: &Placement) -> PartitionCost {
    let nonlocal = circuit
        .gates()
        .iter()
        .filter(|g| matches!(g.qubits[..], [a, b] if placement.parts[a] != placement.parts[b]))
        .count();
    PartitionCost { nonlocal_gates: nonlocal, packed_epr: nonlocal, teleports: 0, total: nonlocal }
}

/// `ceil(num_qubits / k)`.
pub fn default_capacity(num_qubits: usize, k: usize) -> usize {
    num_qubits.div_ceil(k.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partitioner {
    Kl,
    Wbcp,
    OptWbcp,
}

impl std::fmt::Display for Partitioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Partitioner::Kl => "kl",
            Partitioner::Wbcp => "wbcp",
            Partitioner::OptWbcp => "opt_wbcp",
        })
    }
}

impl std::str::FromStr for Partitioner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kl" => Ok(Partitioner::Kl),
            "wbcp" => Ok(Partitioner::Wbcp),
            "opt_wbcp" | "opt-wbcp" => Ok(Partitioner::OptWbcp),
            other => Err(format!("unknown partitioner `{other}`")),
        }
    }
}

/// Output of the full partitioning step.
#[derive(Debug, Clone)]
pub struct Partitioned {
    pub windowed: WindowedPlacement,
    pub program: DistributedProgram,
    pub cost: PartitionCost,
}

/// Runs one partitioner end to end. `opt_wbcp` adds boundary refinement;
/// `packing` only changes the reported cost.
pub fn partition_circuit(
    circuit: &Circuit,
    partitioner: Partitioner,
    k: usize,
    capacity: Option<usize>,
    window_size: usize,
    packing: bool,
) -> Result<Partitioned, PartitionError> {
    let capacity = capacity.unwrap_or_else(|| default_capacity(circuit.num_qubits(), k));
    let windowed = match partitioner {
        Partitioner::Kl => {
            let placement = kl_partition(&interaction_graph(circuit), k, capacity)?;
            WindowedPlacement::single(circuit, placement)
        }
        Partitioner::Wbcp => wbcp_partition(circuit, k, capacity, window_size)?,
        Partitioner::OptWbcp => boundary_refine(circuit, &wbcp_partition(circuit, k, capacity, window_size)?),
    };
    let program = annotate_program(circuit, &windowed);
    let cost = partition_cost(&program, packing);
    Ok(Partitioned { windowed, program, cost })
}

#[derive(Serialize)]
struct ExportView<'a> {
    num_qpus: usize,
    windows: &'a [Window],
    teleports: &'a [Teleport],
    nodes: &'a [ProgramNode],
    edges: Vec<(usize, usize)>,
    cost: PartitionCost,
}

/// JSON document with per-window placements, teleports and annotated nodes.
pub fn export_json(p: &Partitioned) -> serde_json::Result<String> {
    serde_json::to_string_pretty(&ExportView {
        num_qpus: p.program.num_qpus(),
        windows: &p.windowed.windows,
        teleports: &p.windowed.teleports,
        nodes: p.program.nodes(),
        edges: p.program.dag().edges().collect(),
        cost: p.cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gen_benchmark, BenchmarkKind, BenchmarkOptions};

    #[test]
    fn static_cost_cases() {
        let mut c = Circuit::new(2).unwrap();
        c.cx(0, 1).unwrap();
        let together = Placement { parts: vec![0, 0], num_parts: 1, capacity: 2 };
        assert_eq!(static_cost(&c, &together).total, 0);
        let split = Placement { parts: vec![0, 1], num_parts: 2, capacity: 1 };
        assert_eq!(static_cost(&c, &split).nonlocal_gates, 1);

        let qft4 = gen_benchmark(BenchmarkKind::Qft, 4, &BenchmarkOptions::default()).unwrap();
        let halves = Placement { parts: vec![0, 0, 1, 1], num_parts: 2, capacity: 2 };
        // crz pairs 02, 03, 12, 13 cross the cut.
        assert_eq!(static_cost(&qft4, &halves).nonlocal_gates, 4);
    }

    #[test]
    fn default_capacity_rounds_up() {
        assert_eq!(default_capacity(10, 4), 3);
        assert_eq!(default_capacity(8, 4), 2);
    }

    #[test]
    fn single_window_wbcp_matches_static() {
        let c = gen_benchmark(BenchmarkKind::Qaoa, 12, &BenchmarkOptions::default()).unwrap();
        let p = partition_circuit(&c, Partitioner::Wbcp, 3, None, c.len(), false).unwrap();
        assert_eq!(p.cost.teleports, 0);
        assert_eq!(p.cost.total, static_cost(&c, &p.windowed.windows[0].placement).total);
    }

    #[test]
    fn boundary_refine_never_costs_more() {
        for seed in 0..5 {
            let opts = BenchmarkOptions { seed, ..Default::default() };
            let c = gen_benchmark(BenchmarkKind::Random, 10, &opts).unwrap();
            let plain = partition_circuit(&c, Partitioner::Wbcp, 2, None, 15, false).unwrap();
            let refined = partition_circuit(&c, Partitioner::OptWbcp, 2, None, 15, false).unwrap();
            assert!(refined.cost.total <= plain.cost.total, "seed {seed}");
            for (a, b) in plain.windowed.windows.iter().zip(&refined.windowed.windows) {
                assert_eq!(a.placement, b.placement);
            }
        }
    }

    #[test]
    fn teleports_equal_placement_diffs() {
        let c = gen_benchmark(BenchmarkKind::Qv, 8, &BenchmarkOptions { seed: 3, ..Default::default() }).unwrap();
        let p = partition_circuit(&c, Partitioner::Wbcp, 2, None, 10, false).unwrap();
        let diffs: usize = p.windowed.windows.windows(2).map(|w| w[0].placement.diff(&w[1].placement).len()).sum();
        assert_eq!(p.cost.teleports, diffs);
        assert_eq!(p.program.len(), c.len() + diffs);
    }

    #[test]
    fn export_is_json() {
        let c = gen_benchmark(BenchmarkKind::Cat, 4, &BenchmarkOptions::default()).unwrap();
        let p = partition_circuit(&c, Partitioner::Kl, 2, None, 8, true).unwrap();
        let v: serde_json::Value = serde_json::from_str(&export_json(&p).unwrap()).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), c.len());
        assert_eq!(v["num_qpus"], 2);
    }
}
