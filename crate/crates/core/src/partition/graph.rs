use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};

/// Qubit interaction graph: `weight(a, b)` is the number of two-qubit gates
/// acting on the unordered pair `{a, b}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    n: usize,
    weights: Vec<u32>,
}

impl InteractionGraph {
    pub fn empty(n: usize) -> Self {
        InteractionGraph { n, weights: vec![0; n * n] }
    }

    pub fn from_circuit(circuit: &Circuit) -> Self {
        Self::from_gates(circuit.num_qubits(), circuit.gates())
    }

    pub fn from_gates<'a, I>(num_qubits: usize, gates: I) -> Self
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        let mut g = Self::empty(num_qubits);
        for gate in gates {
            if let [a, b] = gate.qubits[..] {
                g.add_weight(a, b, 1);
            }
        }
        g
    }

    pub fn add_weight(&mut self, a: usize, b: usize, w: u32) {
        assert!(a != b, "self-loops are not interactions");
        self.weights[a * self.n + b] += w;
        self.weights[b * self.n + a] += w;
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn weight(&self, a: usize, b: usize) -> u32 {
        self.weights[a * self.n + b]
    }

    /// `(a, b, w)` with `a < b` for every present edge.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.n).flat_map(move |a| {
            (a + 1..self.n).filter_map(move |b| {
                let w = self.weight(a, b);
                (w > 0).then_some((a, b, w))
            })
        })
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let row = &self.weights[a * self.n..(a + 1) * self.n];
        row.iter().enumerate().filter(|(_, &w)| w > 0).map(|(b, &w)| (b, w))
    }

    /// Total weight of edges whose endpoints lie in different parts.
    pub fn cut(&self, parts: &[usize]) -> u64 {
        self.edges().filter(|&(a, b, _)| parts[a] != parts[b]).map(|(_, _, w)| w as u64).sum()
    }
}

/// Qubit to QPU assignment with a per-QPU capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub parts: Vec<usize>,
    pub num_parts: usize,
    pub capacity: usize,
}

impl Placement {
    pub fn qpu_of(&self, qubit: usize) -> usize {
        self.parts[qubit]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.num_parts];
        for &p in &self.parts {
            s[p] += 1;
        }
        s
    }

    pub fn is_valid(&self) -> bool {
        self.parts.iter().all(|&p| p < self.num_parts) && self.sizes().iter().all(|&s| s <= self.capacity)
    }

    /// Qubits whose QPU differs between `self` and `next`, ascending.
    pub fn diff(&self, next: &Placement) -> Vec<usize> {
        (0..self.parts.len()).filter(|&q| self.parts[q] != next.parts[q]).collect()
    }
}
