use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, DependencyDag, GateKind};

use super::WindowedPlacement;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeOp {
    Gate { gate: usize, kind: GateKind, qubits: Vec<usize> },
    Teleport { qubit: usize, from: usize, to: usize },
}

impl NodeOp {
    pub fn qubits(&self) -> &[usize] {
        match self {
            NodeOp::Gate { qubits, .. } => qubits,
            NodeOp::Teleport { qubit, .. } => std::slice::from_ref(qubit),
        }
    }
}

/// Where a node executes and whether it needs an EPR pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Annotation {
    /// Single-qubit gate on `qpu`.
    Single { qpu: usize },
    /// Two-qubit gate with both operands on `qpu`.
    Local { qpu: usize },
    /// Needs one EPR pair between two QPUs (gate order: control's QPU first).
    NonLocal { a: usize, b: usize },
}

impl Annotation {
    pub fn is_nonlocal(&self) -> bool {
        matches!(self, Annotation::NonLocal { .. })
    }

    pub fn pair(&self) -> Option<(usize, usize)> {
        match *self {
            Annotation::NonLocal { a, b } => Some((a, b)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramNode {
    pub id: usize,
    pub op: NodeOp,
    pub annotation: Annotation,
    pub window: usize,
}

/// Dependency DAG over gates plus teleport nodes, annotated local/non-local.
/// Node ids are positions in execution order, hence topological.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedProgram {
    nodes: Vec<ProgramNode>,
    dag: DependencyDag,
    num_qpus: usize,
}

impl DistributedProgram {
    /// Builds a program from nodes in execution order (ids are reassigned).
    pub fn from_nodes(mut nodes: Vec<ProgramNode>, num_qpus: usize) -> Self {
        for (i, n) in nodes.iter_mut().enumerate() {
            n.id = i;
        }
        let dag = DependencyDag::from_touches(nodes.iter().map(|n| n.op.qubits()));
        DistributedProgram { nodes, dag, num_qpus }
    }

    pub fn nodes(&self) -> &[ProgramNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &ProgramNode {
        &self.nodes[id]
    }

    pub fn dag(&self) -> &DependencyDag {
        &self.dag
    }

    pub fn num_qpus(&self) -> usize {
        self.num_qpus
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nonlocal_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.annotation.is_nonlocal()).count()
    }

    pub fn teleport_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.op, NodeOp::Teleport { .. })).count()
    }

    /// Two-qubit gates whose operands share a QPU.
    pub fn local_two_qubit(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n.annotation {
            Annotation::Local { qpu } => Some((n.id, qpu)),
            _ => None,
        })
    }

    /// Highest QPU id referenced plus one.
    pub fn qpus_used(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n.annotation {
                Annotation::Single { qpu } | Annotation::Local { qpu } => qpu + 1,
                Annotation::NonLocal { a, b } => a.max(b) + 1,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Lays out the windows in order, inserting one teleport node per teleport
/// after the window it follows, and annotates each node with the placement
/// in effect when it runs.
pub fn annotate_program(circuit: &Circuit, windowed: &WindowedPlacement) -> DistributedProgram {
    let gates = circuit.gates();
    let mut nodes = Vec::with_capacity(circuit.len() + windowed.teleports.len());
    for (w, window) in windowed.windows.iter().enumerate() {
        let parts = &window.placement.parts;
        let mut ids = window.gates.clone();
        ids.sort_unstable();
        for g in ids {
            let gate = &gates[g];
            let annotation = match gate.qubits[..] {
                [q] => Annotation::Single { qpu: parts[q] },
                [c, t] if parts[c] == parts[t] => Annotation::Local { qpu: parts[c] },
                [c, t] => Annotation::NonLocal { a: parts[c], b: parts[t] },
                _ => unreachable!("gates have one or two qubits"),
            };
            nodes.push(ProgramNode {
                id: 0,
                op: NodeOp::Gate { gate: g, kind: gate.kind, qubits: gate.qubits.clone() },
                annotation,
                window: w,
            });
        }
        for t in windowed.teleports.iter().filter(|t| t.after_window == w) {
            nodes.push(ProgramNode {
                id: 0,
                op: NodeOp::Teleport { qubit: t.qubit, from: t.from, to: t.to },
                annotation: Annotation::NonLocal { a: t.from, b: t.to },
                window: w,
            });
        }
    }
    DistributedProgram::from_nodes(nodes, windowed.num_parts())
}
