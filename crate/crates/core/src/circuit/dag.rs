use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Circuit;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DagError {
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("node {0} was already removed")]
    AlreadyRemoved(usize),
    #[error("node {node} still has {pending} unfinished predecessor(s)")]
    NotInFront { node: usize, pending: usize },
}

/// Precedence DAG over program-ordered operations.
///
/// Nodes are numbered by program position, so ascending id is always a valid
/// topological order. An edge `a -> b` exists iff `a` comes before `b`, they
/// share a qubit and no operation between them touches that qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyDag {
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    pending: Vec<usize>,
    removed: Vec<bool>,
    front: BTreeSet<usize>,
    alive: usize,
}

/// ASAP levels of a DAG.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Layering {
    pub layers: Vec<Vec<usize>>,
}

impl Layering {
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Node id -> layer index, for nodes present in the layering.
    pub fn index(&self) -> HashMap<usize, usize> {
        self.layers.iter().enumerate().flat_map(|(l, nodes)| nodes.iter().map(move |&n| (n, l))).collect()
    }

    pub fn topological_order(&self) -> Vec<usize> {
        self.layers.iter().flatten().copied().collect()
    }
}

impl DependencyDag {
    /// Builds the DAG from the qubits touched by each operation, in program order.
    pub fn from_touches<'a, I>(touches: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut preds: Vec<Vec<usize>> = Vec::new();
        let mut last_writer: HashMap<usize, usize> = HashMap::new();
        for (node, qubits) in touches.into_iter().enumerate() {
            let mut p: Vec<usize> = qubits.iter().filter_map(|q| last_writer.get(q).copied()).collect();
            p.sort_unstable();
            p.dedup();
            for &q in qubits {
                last_writer.insert(q, node);
            }
            preds.push(p);
        }
        let n = preds.len();
        let mut succs = vec![Vec::new(); n];
        for (node, p) in preds.iter().enumerate() {
            for &u in p {
                succs[u].push(node);
            }
        }
        let pending: Vec<usize> = preds.iter().map(Vec::len).collect();
        let front = (0..n).filter(|&i| pending[i] == 0).collect();
        DependencyDag { preds, succs, pending, removed: vec![false; n], front, alive: n }
    }

    pub fn from_circuit(circuit: &Circuit) -> Self {
        circuit.build_dag()
    }

    /// Total number of nodes, removed or not.
    pub fn node_count(&self) -> usize {
        self.preds.len()
    }

    pub fn remaining(&self) -> usize {
        self.alive
    }

    pub fn is_empty(&self) -> bool {
        self.alive == 0
    }

    pub fn is_removed(&self, node: usize) -> bool {
        self.removed.get(node).copied().unwrap_or(false)
    }

    pub fn predecessors(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succs[node]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.preds.iter().enumerate().flat_map(|(v, p)| p.iter().map(move |&u| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.preds.iter().map(Vec::len).sum()
    }

    /// Nodes with no unfinished predecessors, ascending.
    pub fn front_layer(&self) -> Vec<usize> {
        self.front.iter().copied().collect()
    }

    pub fn in_front(&self, node: usize) -> bool {
        self.front.contains(&node)
    }

    /// Removes a front-layer node; successors left without pending
    /// predecessors join the front layer. Returns those successors.
    pub fn remove_node(&mut self, node: usize) -> Result<Vec<usize>, DagError> {
        if node >= self.node_count() {
            return Err(DagError::UnknownNode(node));
        }
        if self.removed[node] {
            return Err(DagError::AlreadyRemoved(node));
        }
        if self.pending[node] != 0 {
            return Err(DagError::NotInFront { node, pending: self.pending[node] });
        }
        self.removed[node] = true;
        self.front.remove(&node);
        self.alive -= 1;
        let mut released = Vec::new();
        for &v in &self.succs[node] {
            self.pending[v] -= 1;
            if self.pending[v] == 0 {
                self.front.insert(v);
                released.push(v);
            }
        }
        Ok(released)
    }

    /// ASAP layering of the nodes not yet removed.
    pub fn layers(&self) -> Layering {
        self.leading_layers(usize::MAX)
    }

    /// The first `count` ASAP layers of the remaining DAG, layer 0 being the
    /// front layer. Only touches nodes within those layers and their
    /// immediate successors.
    pub fn leading_layers(&self, count: usize) -> Layering {
        let mut layers = Vec::new();
        if count == 0 || self.front.is_empty() {
            return Layering { layers };
        }
        let mut resolved: HashMap<usize, usize> = HashMap::new();
        let mut current: Vec<usize> = self.front_layer();
        while !current.is_empty() && layers.len() < count {
            let mut next = Vec::new();
            for &u in &current {
                for &v in &self.succs[u] {
                    let r = resolved.entry(v).or_insert(0);
                    *r += 1;
                    if *r == self.pending[v] {
                        next.push(v);
                    }
                }
            }
            next.sort_unstable();
            layers.push(current);
            current = next;
        }
        Layering { layers }
    }
}

/// Count of two-qubit gates in every ASAP layer of `circuit`.
pub fn two_qubit_gates_per_layer(circuit: &Circuit) -> Vec<usize> {
    let gates = circuit.gates();
    circuit
        .build_dag()
        .layers()
        .layers
        .iter()
        .map(|layer| layer.iter().filter(|&&g| gates[g].is_two_qubit()).count())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use proptest::prelude::*;

    /// Five-gate example on qubits 1..=6: (1,2),(4,3),(6,5) then (1,4),(2,6).
    fn five_gate() -> Circuit {
        let mut c = Circuit::new(7).unwrap();
        for (a, b) in [(1, 2), (4, 3), (6, 5), (1, 4), (2, 6)] {
            c.cx(a, b).unwrap();
        }
        c
    }

    #[test]
    fn chain_has_single_edge() {
        let mut c = Circuit::new(3).unwrap();
        c.cx(0, 1).unwrap();
        c.cx(1, 2).unwrap();
        let dag = c.build_dag();
        assert_eq!(dag.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(dag.front_layer(), vec![0]);
    }

    #[test]
    fn duplicate_edges_collapse() {
        let mut c = Circuit::new(2).unwrap();
        c.cx(0, 1).unwrap();
        c.cx(0, 1).unwrap();
        assert_eq!(c.build_dag().edge_count(), 1);
    }

    #[test]
    fn intermediate_gate_breaks_edge() {
        let mut c = Circuit::new(2).unwrap();
        c.h(0).unwrap();
        c.rz(0.1, 0).unwrap();
        c.x(0).unwrap();
        let edges: Vec<_> = c.build_dag().edges().collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn five_gate_front_and_layers() {
        let dag = five_gate().build_dag();
        assert_eq!(dag.front_layer(), vec![0, 1, 2]);
        assert_eq!(dag.layers().layers, vec![vec![0, 1, 2], vec![3, 4]]);
    }

    #[test]
    fn five_gate_remove_exposes_only_independent_gate() {
        let mut dag = five_gate().build_dag();
        dag.remove_node(0).unwrap();
        dag.remove_node(1).unwrap();
        // (1,4) is ready; (2,6) still waits on (6,5).
        assert_eq!(dag.front_layer(), vec![2, 3]);
    }

    #[test]
    fn empty_dag() {
        let dag = Circuit::new(1).unwrap().build_dag();
        assert!(dag.is_empty());
        assert!(dag.front_layer().is_empty());
        assert!(dag.layers().is_empty());
    }

    #[test]
    fn remove_non_front_is_error() {
        let mut c = Circuit::new(2).unwrap();
        c.cx(0, 1).unwrap();
        c.cx(0, 1).unwrap();
        let mut dag = c.build_dag();
        assert_eq!(dag.remove_node(1), Err(DagError::NotInFront { node: 1, pending: 1 }));
        assert_eq!(dag.remove_node(0), Ok(vec![1]));
        assert_eq!(dag.front_layer(), vec![1]);
        assert_eq!(dag.remove_node(0), Err(DagError::AlreadyRemoved(0)));
        assert_eq!(dag.remove_node(9), Err(DagError::UnknownNode(9)));
    }

    #[test]
    fn serial_and_disjoint_layer_counts() {
        let mut serial = Circuit::new(1).unwrap();
        for _ in 0..5 {
            serial.h(0).unwrap();
        }
        assert_eq!(serial.build_dag().layers().len(), 5);

        let mut disjoint = Circuit::new(8).unwrap();
        for i in 0..4 {
            disjoint.cx(2 * i, 2 * i + 1).unwrap();
        }
        assert_eq!(disjoint.build_dag().layers().len(), 1);
        assert_eq!(two_qubit_gates_per_layer(&disjoint), vec![4]);
    }

    #[test]
    fn single_qubit_only_counts_zero() {
        let mut c = Circuit::new(2).unwrap();
        c.h(0).unwrap();
        c.h(0).unwrap();
        c.x(1).unwrap();
        assert_eq!(two_qubit_gates_per_layer(&c), vec![0, 0]);
    }

    #[test]
    fn leading_layers_match_full_layering() {
        let dag = five_gate().build_dag();
        assert_eq!(dag.leading_layers(1).layers, vec![vec![0, 1, 2]]);
        assert_eq!(dag.leading_layers(10), dag.layers());
        assert!(dag.leading_layers(0).is_empty());
    }

    fn arb_circuit() -> impl Strategy<Value = Circuit> {
        (2usize..7).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n, any::<bool>()), 0..40).prop_map(move |ops| {
                let mut c = Circuit::new(n).unwrap();
                for (a, b, two) in ops {
                    if two && a != b {
                        c.cx(a, b).unwrap();
                    } else {
                        c.h(a).unwrap();
                    }
                }
                c
            })
        })
    }

    proptest! {
        #[test]
        fn layers_are_a_topological_order(c in arb_circuit()) {
            let dag = c.build_dag();
            let layering = dag.layers();
            let index = layering.index();
            prop_assert_eq!(index.len(), c.len());
            for (u, v) in dag.edges() {
                prop_assert!(index[&u] < index[&v]);
            }
            for node in 0..dag.node_count() {
                let expected = dag.predecessors(node).iter().map(|p| index[p] + 1).max().unwrap_or(0);
                prop_assert_eq!(index[&node], expected);
            }
        }

        #[test]
        fn draining_fronts_takes_one_round_per_layer(c in arb_circuit()) {
            let mut dag = c.build_dag();
            let expected = dag.layers().len();
            let mut rounds = 0;
            while !dag.is_empty() {
                for node in dag.front_layer() {
                    dag.remove_node(node).unwrap();
                }
                rounds += 1;
            }
            prop_assert_eq!(rounds, expected);
        }

        #[test]
        fn edges_follow_last_writer_rule(c in arb_circuit()) {
            let dag = c.build_dag();
            let gates = c.gates();
            for v in 0..gates.len() {
                for u in 0..v {
                    let shared: Vec<usize> = gates[u].qubits.iter().copied().filter(|q| gates[v].touches(*q)).collect();
                    let direct = shared.iter().any(|&q| (u + 1..v).all(|w| !gates[w].touches(q)));
                    prop_assert_eq!(dag.predecessors(v).contains(&u), direct);
                }
            }
        }
    }
}
