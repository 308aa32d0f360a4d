#![allow(dead_code)]

use qdc_core::circuit::Circuit;
use qdc_core::partition::{annotate_program, DistributedProgram, Placement, WindowedPlacement};
use qdc_core::physical::PhysicalConfig;
use qdc_core::topology::{ClosSpec, Network};

/// Program with qubit `q` pinned to QPU `parts[q]` for the whole circuit.
pub fn pinned(circuit: &Circuit, parts: Vec<usize>, num_qpus: usize) -> DistributedProgram {
    let placement = Placement { capacity: parts.len(), parts, num_parts: num_qpus };
    annotate_program(circuit, &WindowedPlacement::single(circuit, placement))
}

pub fn cx_circuit(n: usize, pairs: &[(usize, usize)]) -> Circuit {
    let mut c = Circuit::new(n).unwrap();
    for &(a, b) in pairs {
        c.cx(a, b).unwrap();
    }
    c
}

pub fn default_net() -> Network {
    Network::build_clos(ClosSpec::default()).unwrap()
}

pub fn no_reconfig() -> PhysicalConfig {
    PhysicalConfig { reconfig_delay: 0, ..PhysicalConfig::default() }
}

/// Seven qubits on seven QPUs; every CNOT is non-local.
/// Nodes: 0 = (1,2), 1 = (4,3), 2 = (6,5), 3 = (1,4), 4 = (2,6).
pub fn five_gate_program() -> DistributedProgram {
    let c = cx_circuit(7, &[(1, 2), (4, 3), (6, 5), (1, 4), (2, 6)]);
    pinned(&c, (0..7).collect(), 8)
}
