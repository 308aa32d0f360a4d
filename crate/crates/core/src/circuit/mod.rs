//! Circuits over the native gate set, their dependency DAG, a QASM subset
//! reader/writer and the benchmark generators.

mod bench;
mod dag;
mod gate;
mod qasm;

pub use bench::{gen_benchmark, BenchmarkKind, BenchmarkOptions};
pub use dag::{two_qubit_gates_per_layer, DagError, DependencyDag, Layering};
pub use gate::{Gate, GateKind};
pub use qasm::{emit_qasm, parse_qasm, QasmError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("circuit needs at least one qubit")]
    NoQubits,
    #[error("{kind} takes {expected} qubit(s), got {found}")]
    Arity { kind: GateKind, expected: usize, found: usize },
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("gate {gate} uses qubit {qubit} twice")]
    RepeatedQubit { gate: usize, qubit: usize },
    #[error("{kind} parameter mismatch")]
    Param { kind: GateKind },
    #[error("gate ids must equal program positions (expected {expected}, found {found})")]
    GateId { expected: usize, found: usize },
    #[error("invalid benchmark options: {0}")]
    Options(String),
}

/// An ordered gate list. Gate ids equal their position in `gates`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self, CircuitError> {
        if num_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        Ok(Circuit { num_qubits, gates: Vec::new() })
    }

    /// Builds a circuit from pre-made gates, checking every invariant.
    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let mut c = Circuit::new(num_qubits)?;
        for (pos, g) in gates.iter().enumerate() {
            if g.id != pos {
                return Err(CircuitError::GateId { expected: pos, found: g.id });
            }
            g.validate(num_qubits)?;
        }
        c.gates = gates;
        Ok(c)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Appends a gate and returns its id.
    pub fn push(&mut self, kind: GateKind, qubits: &[usize], param: Option<f64>) -> Result<usize, CircuitError> {
        let gate = Gate { id: self.gates.len(), kind, qubits: qubits.to_vec(), param };
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(self.gates.len() - 1)
    }

    pub fn h(&mut self, q: usize) -> Result<usize, CircuitError> {
        self.push(GateKind::H, &[q], None)
    }

    pub fn x(&mut self, q: usize) -> Result<usize, CircuitError> {
        self.push(GateKind::X, &[q], None)
    }

    pub fn rz(&mut self, theta: f64, q: usize) -> Result<usize, CircuitError> {
        self.push(GateKind::Rz, &[q], Some(theta))
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<usize, CircuitError> {
        self.push(GateKind::Cx, &[control, target], None)
    }

    pub fn crz(&mut self, theta: f64, control: usize, target: usize) -> Result<usize, CircuitError> {
        self.push(GateKind::Crz, &[control, target], Some(theta))
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn build_dag(&self) -> DependencyDag {
        DependencyDag::from_touches(self.gates.iter().map(|g| g.qubits.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_rejects_bad_gates() {
        let mut c = Circuit::new(2).unwrap();
        assert!(matches!(c.cx(0, 0), Err(CircuitError::RepeatedQubit { .. })));
        assert!(matches!(c.h(2), Err(CircuitError::QubitOutOfRange { .. })));
        assert!(matches!(c.push(GateKind::Rz, &[0], None), Err(CircuitError::Param { .. })));
        assert!(matches!(c.push(GateKind::Cx, &[0], None), Err(CircuitError::Arity { .. })));
        assert_eq!(c.cx(0, 1).unwrap(), 0);
        assert_eq!(c.h(1).unwrap(), 1);
    }

    #[test]
    fn zero_qubits_rejected() {
        assert_eq!(Circuit::new(0), Err(CircuitError::NoQubits));
    }

    #[test]
    fn from_gates_checks_ids() {
        let g = Gate { id: 3, kind: GateKind::H, qubits: vec![0], param: None };
        assert!(matches!(Circuit::from_gates(1, vec![g]), Err(CircuitError::GateId { .. })));
    }
}
