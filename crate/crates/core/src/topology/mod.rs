//! Clos data-center network: QPUs under top-of-rack switches, aggregation
//! and core layers, shortest-path routing and the resource ledger.

mod ledger;

pub use ledger::{Grant, LedgerError, Reservation, ReservationId, ResourceLedger};

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;
/// QPU index; QPU `i` is network node `i`.
pub type QpuId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("QPU {0} does not exist")]
    UnknownQpu(QpuId),
    #[error("node {0} is not a switch")]
    NotASwitch(NodeId),
    #[error("no path between a QPU and itself ({0})")]
    SameQpu(QpuId),
    #[error("QPUs {0} and {1} are disconnected")]
    Disconnected(QpuId, QpuId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Qpu,
    Tor,
    Agg,
    Core,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
    pub bsm_capacity: u32,
    pub comm_qubit_capacity: u32,
    pub rack: Option<usize>,
}

impl NetworkNode {
    pub fn is_switch(&self) -> bool {
        self.kind != NodeKind::Qpu
    }

    /// Capacity of the resource this node contributes to a reservation.
    pub fn capacity(&self) -> u32 {
        if self.is_switch() {
            self.bsm_capacity
        } else {
            self.comm_qubit_capacity
        }
    }
}

/// Counts and uniform capacities of a Clos network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosSpec {
    pub cores: usize,
    pub aggs: usize,
    pub racks: usize,
    pub qpus_per_rack: usize,
    pub bsms_per_switch: u32,
    pub comm_qubits_per_qpu: u32,
}

impl Default for ClosSpec {
    /// Two cores, four aggregation switches, four racks of two QPUs.
    fn default() -> Self {
        ClosSpec { cores: 2, aggs: 4, racks: 4, qpus_per_rack: 2, bsms_per_switch: 5, comm_qubits_per_qpu: 4 }
    }
}

impl ClosSpec {
    pub fn num_qpus(&self) -> usize {
        self.racks * self.qpus_per_rack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairClass {
    Local,
    Intra,
    Cross,
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairClass::Local => "local",
            PairClass::Intra => "intra",
            PairClass::Cross => "cross",
        })
    }
}

/// Switches between two distinct QPUs, endpoints excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub switches: Vec<NodeId>,
    pub class: PairClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    spec: ClosSpec,
    nodes: Vec<NetworkNode>,
    adjacency: Vec<Vec<NodeId>>,
    /// Canonical paths for `a < b`, row-major over QPU pairs.
    paths: Vec<Option<Path>>,
}

impl Network {
    /// Builds the Clos network. Node ids: QPUs first (rack-major), then
    /// ToRs, aggregation switches, cores. Rack `r` attaches to aggregation
    /// switches `2r mod aggs` and `(2r + 1) mod aggs` (only agg 0 when
    /// `aggs == 1`); every aggregation switch links to every core.
    pub fn build_clos(spec: ClosSpec) -> Result<Network, TopologyError> {
        for (v, name) in
            [(spec.cores, "cores"), (spec.aggs, "aggs"), (spec.racks, "racks"), (spec.qpus_per_rack, "qpus_per_rack")]
        {
            if v == 0 {
                return Err(TopologyError::ZeroCount(name));
            }
        }
        let nq = spec.num_qpus();
        let tor0 = nq;
        let agg0 = tor0 + spec.racks;
        let core0 = agg0 + spec.aggs;
        let total = core0 + spec.cores;

        let mut nodes = Vec::with_capacity(total);
        for q in 0..nq {
            nodes.push(NetworkNode {
                id: q,
                kind: NodeKind::Qpu,
                name: format!("qpu{q}"),
                bsm_capacity: 0,
                comm_qubit_capacity: spec.comm_qubits_per_qpu,
                rack: Some(q / spec.qpus_per_rack),
            });
        }
        let switch = |id, kind, name: String, rack| NetworkNode {
            id,
            kind,
            name,
            bsm_capacity: spec.bsms_per_switch,
            comm_qubit_capacity: 0,
            rack,
        };
        for r in 0..spec.racks {
            nodes.push(switch(tor0 + r, NodeKind::Tor, format!("tor{r}"), Some(r)));
        }
        for a in 0..spec.aggs {
            nodes.push(switch(agg0 + a, NodeKind::Agg, format!("agg{a}"), None));
        }
        for c in 0..spec.cores {
            nodes.push(switch(core0 + c, NodeKind::Core, format!("core{c}"), None));
        }

        let mut adjacency = vec![Vec::new(); total];
        let mut link = |u: NodeId, v: NodeId| {
            if !adjacency[u].contains(&v) {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        };
        for q in 0..nq {
            link(q, tor0 + q / spec.qpus_per_rack);
        }
        for r in 0..spec.racks {
            for a in rack_aggs(r, spec.aggs) {
                link(tor0 + r, agg0 + a);
            }
        }
        for a in 0..spec.aggs {
            for c in 0..spec.cores {
                link(agg0 + a, core0 + c);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        let mut net = Network { spec, nodes, adjacency, paths: vec![None; nq * nq] };
        for a in 0..nq {
            for b in a + 1..nq {
                let p = net.bfs(a, b)?;
                net.paths[a * nq + b] = Some(p);
            }
        }
        Ok(net)
    }

    pub fn spec(&self) -> &ClosSpec {
        &self.spec
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NetworkNode {
        &self.nodes[id]
    }

    pub fn num_qpus(&self) -> usize {
        self.spec.num_qpus()
    }

    pub fn switches(&self) -> impl Iterator<Item = &NetworkNode> {
        self.nodes.iter().filter(|n| n.is_switch())
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id]
    }

    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, adj)| adj.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn rack_of(&self, qpu: QpuId) -> usize {
        qpu / self.spec.qpus_per_rack
    }

    pub fn tor_of_rack(&self, rack: usize) -> NodeId {
        self.num_qpus() + rack
    }

    pub fn agg_node(&self, agg: usize) -> NodeId {
        self.num_qpus() + self.spec.racks + agg
    }

    pub fn core_node(&self, core: usize) -> NodeId {
        self.num_qpus() + self.spec.racks + self.spec.aggs + core
    }

    /// Overrides the BSM capacity of one switch.
    pub fn set_bsm_capacity(&mut self, switch: NodeId, capacity: u32) -> Result<(), TopologyError> {
        let node = self.nodes.get_mut(switch).ok_or(TopologyError::NotASwitch(switch))?;
        if !node.is_switch() {
            return Err(TopologyError::NotASwitch(switch));
        }
        node.bsm_capacity = capacity;
        Ok(())
    }

    pub fn set_comm_qubit_capacity(&mut self, qpu: QpuId, capacity: u32) -> Result<(), TopologyError> {
        self.check_qpu(qpu)?;
        self.nodes[qpu].comm_qubit_capacity = capacity;
        Ok(())
    }

    fn check_qpu(&self, qpu: QpuId) -> Result<(), TopologyError> {
        if qpu < self.num_qpus() {
            Ok(())
        } else {
            Err(TopologyError::UnknownQpu(qpu))
        }
    }

    pub fn classify_pair(&self, a: QpuId, b: QpuId) -> PairClass {
        if a == b {
            PairClass::Local
        } else if self.rack_of(a) == self.rack_of(b) {
            PairClass::Intra
        } else {
            PairClass::Cross
        }
    }

    /// Minimal-hop switch sequence from `a` to `b`.
    pub fn shortest_path(&self, a: QpuId, b: QpuId) -> Result<Path, TopologyError> {
        self.check_qpu(a)?;
        self.check_qpu(b)?;
        if a == b {
            return Err(TopologyError::SameQpu(a));
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let mut p = self.paths[lo * self.num_qpus() + hi].clone().expect("paths precomputed");
        if a > b {
            p.switches.reverse();
        }
        Ok(p)
    }

    /// Switches on the canonical path between two QPUs (order-independent).
    pub(crate) fn path_switches(&self, a: QpuId, b: QpuId) -> &[NodeId] {
        let (lo, hi) = (a.min(b), a.max(b));
        &self.paths[lo * self.num_qpus() + hi].as_ref().expect("distinct QPUs").switches
    }

    /// Breadth-first search exploring neighbours in ascending id order; the
    /// first discovery of each node fixes its parent.
    fn bfs(&self, a: QpuId, b: QpuId) -> Result<Path, TopologyError> {
        let n = self.nodes.len();
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([a]);
        seen[a] = true;
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &v in &self.adjacency[u] {
                // QPUs are endpoints only, never transit hops.
                if !seen[v] && (self.nodes[v].is_switch() || v == b) {
                    seen[v] = true;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if !seen[b] {
            return Err(TopologyError::Disconnected(a, b));
        }
        let mut switches = Vec::new();
        let mut cur = parent[b];
        while cur != a {
            switches.push(cur);
            cur = parent[cur];
        }
        switches.reverse();
        Ok(Path { switches, class: self.classify_pair(a, b) })
    }
}

fn rack_aggs(rack: usize, aggs: usize) -> Vec<usize> {
    if aggs < 2 {
        vec![0]
    } else {
        let mut v = vec![(2 * rack) % aggs, (2 * rack + 1) % aggs];
        v.dedup();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_net() -> Network {
        Network::build_clos(ClosSpec::default()).unwrap()
    }

    #[test]
    fn default_clos_counts() {
        let net = default_net();
        assert_eq!(net.num_qpus(), 8);
        assert_eq!(net.switches().count(), 10);
        assert_eq!(net.switches().filter(|s| s.kind == NodeKind::Core).count(), 2);
        assert_eq!(net.switches().filter(|s| s.kind == NodeKind::Agg).count(), 4);
        assert_eq!(net.switches().filter(|s| s.kind == NodeKind::Tor).count(), 4);
        assert!(net.nodes().iter().filter(|n| !n.is_switch()).all(|n| n.bsm_capacity == 0));
        assert!(net.switches().all(|n| n.comm_qubit_capacity == 0 && n.bsm_capacity == 5));
    }

    #[test]
    fn wiring_invariants() {
        let net = default_net();
        for q in 0..8 {
            assert_eq!(net.neighbors(q), &[net.tor_of_rack(net.rack_of(q))]);
        }
        // Each agg serves two racks and every core.
        for a in 0..4 {
            let agg = net.agg_node(a);
            let tors = net.neighbors(agg).iter().filter(|&&v| net.node(v).kind == NodeKind::Tor).count();
            let cores = net.neighbors(agg).iter().filter(|&&v| net.node(v).kind == NodeKind::Core).count();
            assert_eq!((tors, cores), (2, 2));
        }
    }

    #[test]
    fn single_rack_is_all_intra() {
        let spec = ClosSpec { cores: 1, aggs: 1, racks: 1, qpus_per_rack: 2, ..Default::default() };
        let net = Network::build_clos(spec).unwrap();
        assert_eq!(net.num_qpus(), 2);
        let p = net.shortest_path(0, 1).unwrap();
        assert_eq!(p.switches, vec![net.tor_of_rack(0)]);
        assert_eq!(p.class, PairClass::Intra);
    }

    #[test]
    fn zero_counts_rejected() {
        let spec = ClosSpec { racks: 0, ..Default::default() };
        assert_eq!(Network::build_clos(spec), Err(TopologyError::ZeroCount("racks")));
    }

    #[test]
    fn classify() {
        let net = default_net();
        assert_eq!(net.classify_pair(0, 0), PairClass::Local);
        assert_eq!(net.classify_pair(0, 1), PairClass::Intra);
        assert_eq!(net.classify_pair(0, 2), PairClass::Cross);
    }

    #[test]
    fn path_shapes() {
        let net = default_net();
        assert_eq!(net.shortest_path(0, 1).unwrap().switches, vec![net.tor_of_rack(0)]);
        // racks 0 and 2 share aggs 0 and 1; the lower id wins.
        let p = net.shortest_path(0, 4).unwrap();
        assert_eq!(p.switches, vec![net.tor_of_rack(0), net.agg_node(0), net.tor_of_rack(2)]);
        assert_eq!(p.class, PairClass::Cross);
        // racks 0 and 1 share nothing.
        let p = net.shortest_path(0, 2).unwrap();
        assert_eq!(
            p.switches,
            vec![net.tor_of_rack(0), net.agg_node(0), net.core_node(0), net.agg_node(2), net.tor_of_rack(1)]
        );
        let rev = net.shortest_path(2, 0).unwrap();
        assert_eq!(rev.switches, p.switches.iter().rev().copied().collect::<Vec<_>>());
        assert_eq!(net.shortest_path(3, 3), Err(TopologyError::SameQpu(3)));
        assert_eq!(net.shortest_path(0, 8), Err(TopologyError::UnknownQpu(8)));
    }

    #[test]
    fn path_lengths_exhaustive() {
        let net = default_net();
        for a in 0..8 {
            for b in 0..8 {
                if a == b {
                    continue;
                }
                let (ra, rb) = (net.rack_of(a), net.rack_of(b));
                let shared = rack_aggs(ra, 4).iter().any(|x| rack_aggs(rb, 4).contains(x));
                let expected = if ra == rb {
                    1
                } else if shared {
                    3
                } else {
                    5
                };
                assert_eq!(net.shortest_path(a, b).unwrap().switches.len(), expected, "{a}->{b}");
            }
        }
    }
}
