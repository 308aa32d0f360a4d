use std::fmt;

use serde::{Deserialize, Serialize};

use super::CircuitError;

/// Native gate set handled by the toolchain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    H,
    Rz,
    X,
    Cx,
    Crz,
}

impl GateKind {
    pub const ALL: [GateKind; 5] = [GateKind::H, GateKind::Rz, GateKind::X, GateKind::Cx, GateKind::Crz];

    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::Rz | GateKind::X => 1,
            GateKind::Cx | GateKind::Crz => 2,
        }
    }

    pub fn has_param(self) -> bool {
        matches!(self, GateKind::Rz | GateKind::Crz)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::Rz => "rz",
            GateKind::X => "x",
            GateKind::Cx => "cx",
            GateKind::Crz => "crz",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single gate. For two-qubit gates `qubits[0]` is the control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub id: usize,
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
}

impl Gate {
    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }

    pub fn touches(&self, qubit: usize) -> bool {
        self.qubits.contains(&qubit)
    }

    pub fn control(&self) -> Option<usize> {
        self.is_two_qubit().then(|| self.qubits[0])
    }

    pub fn target(&self) -> Option<usize> {
        self.is_two_qubit().then(|| self.qubits[1])
    }

    pub(crate) fn validate(&self, num_qubits: usize) -> Result<(), CircuitError> {
        if self.qubits.len() != self.kind.arity() {
            return Err(CircuitError::Arity { kind: self.kind, expected: self.kind.arity(), found: self.qubits.len() });
        }
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= num_qubits) {
            return Err(CircuitError::QubitOutOfRange { qubit: q, num_qubits });
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(CircuitError::RepeatedQubit { gate: self.id, qubit: self.qubits[0] });
        }
        if self.kind.has_param() != self.param.is_some() {
            return Err(CircuitError::Param { kind: self.kind });
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(p) = self.param {
            write!(f, "({p})")?;
        }
        let qs: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(f, " {}", qs.join(","))
    }
}
