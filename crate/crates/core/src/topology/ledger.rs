use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Network, NodeId, QpuId};

pub type ReservationId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("resources unavailable")]
    Unavailable,
    #[error("cannot reserve a pair on a single QPU ({0})")]
    SameQpu(QpuId),
    #[error("unknown reservation {0}")]
    UnknownReservation(ReservationId),
}

/// Holds taken by one entanglement-generation attempt sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reservation {
    pub id: ReservationId,
    pub qpus: (QpuId, QpuId),
    pub switches: Vec<NodeId>,
}

/// Outcome of a successful [`ResourceLedger::try_reserve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grant {
    pub id: ReservationId,
    pub switches: Vec<NodeId>,
    /// Some switch on the path was last configured for a different pair.
    pub reconfigured: bool,
}

/// Live BSM and communication-qubit accounting for one simulation run.
///
/// Every reservation holds one communication qubit at each endpoint QPU and
/// one BSM on every switch of the shortest path. In unlimited mode the
/// capacities are ignored but usage is still counted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceLedger {
    unlimited: bool,
    capacity: Vec<u32>,
    in_use: Vec<u32>,
    peak: Vec<u32>,
    last_pair: Vec<Option<(QpuId, QpuId)>>,
    reservations: BTreeMap<ReservationId, Reservation>,
    next_id: ReservationId,
}

impl ResourceLedger {
    pub fn new(net: &Network, unlimited: bool) -> Self {
        let n = net.nodes().len();
        ResourceLedger {
            unlimited,
            capacity: net.nodes().iter().map(|n| n.capacity()).collect(),
            in_use: vec![0; n],
            peak: vec![0; n],
            last_pair: vec![None; n],
            reservations: BTreeMap::new(),
            next_id: 0,
        }
    }

    pub fn is_unlimited(&self) -> bool {
        self.unlimited
    }

    pub fn capacity(&self, node: NodeId) -> u32 {
        self.capacity[node]
    }

    pub fn in_use(&self, node: NodeId) -> u32 {
        self.in_use[node]
    }

    /// Free units at `node`; `u32::MAX` in unlimited mode.
    pub fn free(&self, node: NodeId) -> u32 {
        if self.unlimited {
            u32::MAX
        } else {
            self.capacity[node] - self.in_use[node]
        }
    }

    /// Highest simultaneous usage seen at every node.
    pub fn peaks(&self) -> &[u32] {
        &self.peak
    }

    pub fn in_use_all(&self) -> &[u32] {
        &self.in_use
    }

    pub fn reservations(&self) -> impl Iterator<Item = &Reservation> {
        self.reservations.values()
    }

    pub fn reservation(&self, id: ReservationId) -> Option<&Reservation> {
        self.reservations.get(&id)
    }

    pub fn active(&self) -> usize {
        self.reservations.len()
    }

    /// Whether a reservation between `a` and `b` would currently succeed.
    pub fn can_reserve(&self, net: &Network, a: QpuId, b: QpuId) -> bool {
        if a == b {
            return false;
        }
        if self.unlimited {
            return true;
        }
        [a, b].into_iter().chain(net.path_switches(a, b).iter().copied()).all(|n| self.free(n) > 0)
    }

    /// Atomically holds one communication qubit per endpoint and one BSM per
    /// path switch, or leaves the ledger untouched.
    pub fn try_reserve(&mut self, net: &Network, a: QpuId, b: QpuId) -> Result<Grant, LedgerError> {
        if a == b {
            return Err(LedgerError::SameQpu(a));
        }
        if !self.can_reserve(net, a, b) {
            return Err(LedgerError::Unavailable);
        }
        let pair = (a.min(b), a.max(b));
        let switches = net.path_switches(a, b).to_vec();
        let mut reconfigured = false;
        for &s in &switches {
            if self.last_pair[s] != Some(pair) {
                reconfigured = true;
                self.last_pair[s] = Some(pair);
            }
        }
        for n in [a, b].into_iter().chain(switches.iter().copied()) {
            self.in_use[n] += 1;
            self.peak[n] = self.peak[n].max(self.in_use[n]);
        }
        let id = self.next_id;
        self.next_id += 1;
        self.reservations.insert(id, Reservation { id, qpus: pair, switches: switches.clone() });
        Ok(Grant { id, switches, reconfigured })
    }

    pub fn release(&mut self, id: ReservationId) -> Result<Reservation, LedgerError> {
        let r = self.reservations.remove(&id).ok_or(LedgerError::UnknownReservation(id))?;
        for n in [r.qpus.0, r.qpus.1].into_iter().chain(r.switches.iter().copied()) {
            self.in_use[n] -= 1;
        }
        Ok(r)
    }

    /// Gives back the BSMs of a reservation whose pair has been heralded; the
    /// communication qubits stay held until [`release`](Self::release).
    pub fn release_bsms(&mut self, id: ReservationId) -> Result<(), LedgerError> {
        let r = self.reservations.get_mut(&id).ok_or(LedgerError::UnknownReservation(id))?;
        for n in r.switches.drain(..) {
            self.in_use[n] -= 1;
        }
        Ok(())
    }

    /// Checks `capacity = free + holds` at every node.
    pub fn check_conservation(&self) -> bool {
        let mut holds = vec![0u32; self.in_use.len()];
        for r in self.reservations.values() {
            for n in [r.qpus.0, r.qpus.1].into_iter().chain(r.switches.iter().copied()) {
                holds[n] += 1;
            }
        }
        holds == self.in_use && (self.unlimited || self.in_use.iter().zip(&self.capacity).all(|(u, c)| u <= c))
    }

    /// Counter state only (no configuration memory), for inverse checks.
    pub fn counters(&self) -> (&[u32], usize) {
        (&self.in_use, self.reservations.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::ClosSpec;
    use proptest::prelude::*;

    fn net_with(bsm: u32, cq: u32) -> Network {
        Network::build_clos(ClosSpec { bsms_per_switch: bsm, comm_qubits_per_qpu: cq, ..Default::default() }).unwrap()
    }

    #[test]
    fn heralded_pair_keeps_only_comm_qubits() {
        let net = net_with(1, 2);
        let mut l = ResourceLedger::new(&net, false);
        let g = l.try_reserve(&net, 0, 1).unwrap();
        assert!(!l.can_reserve(&net, 0, 1));
        l.release_bsms(g.id).unwrap();
        assert_eq!(l.free(net.tor_of_rack(0)), 1);
        assert_eq!((l.free(0), l.free(1)), (1, 1));
        assert!(l.check_conservation());
        let g2 = l.try_reserve(&net, 0, 1).unwrap();
        l.release(g.id).unwrap();
        l.release(g2.id).unwrap();
        assert_eq!((l.free(0), l.free(1)), (2, 2));
        assert!(l.check_conservation());
        assert_eq!(l.release_bsms(g.id), Err(LedgerError::UnknownReservation(g.id)));
    }

    #[test]
    fn intra_reservation_bookkeeping() {
        let net = net_with(5, 2);
        let mut l = ResourceLedger::new(&net, false);
        let tor = net.tor_of_rack(0);
        let g = l.try_reserve(&net, 0, 1).unwrap();
        assert!(g.reconfigured);
        assert_eq!(l.free(tor), 4);
        assert_eq!((l.free(0), l.free(1)), (1, 1));
        assert!(l.check_conservation());
        // Same pair again needs no reconfiguration.
        let g2 = l.try_reserve(&net, 1, 0).unwrap();
        assert!(!g2.reconfigured);
        assert_eq!(l.free(0), 0);
        assert_eq!(l.try_reserve(&net, 0, 1), Err(LedgerError::Unavailable));
    }

    #[test]
    fn zero_capacity_switch_blocks_without_side_effects() {
        let mut net = net_with(5, 2);
        net.set_bsm_capacity(net.tor_of_rack(0), 0).unwrap();
        let mut l = ResourceLedger::new(&net, false);
        let before = l.clone();
        assert_eq!(l.try_reserve(&net, 0, 1), Err(LedgerError::Unavailable));
        assert_eq!(l, before);
    }

    #[test]
    fn shared_agg_exhaustion_and_retry() {
        let net = net_with(1, 2);
        let mut l = ResourceLedger::new(&net, false);
        // rack0->rack1 and rack2->rack3 both climb through agg0 and core0
        // but use different ToRs.
        let a = l.try_reserve(&net, 0, 2).unwrap();
        assert!(a.switches.contains(&net.agg_node(0)));
        assert!(net.shortest_path(4, 6).unwrap().switches.contains(&net.agg_node(0)));
        assert_eq!(l.try_reserve(&net, 4, 6), Err(LedgerError::Unavailable));
        l.release(a.id).unwrap();
        assert!(l.try_reserve(&net, 4, 6).is_ok());
    }

    #[test]
    fn release_errors() {
        let net = net_with(5, 2);
        let mut l = ResourceLedger::new(&net, false);
        let g = l.try_reserve(&net, 0, 2).unwrap();
        l.release(g.id).unwrap();
        assert_eq!(l.release(g.id), Err(LedgerError::UnknownReservation(g.id)));
        assert_eq!(l.try_reserve(&net, 3, 3), Err(LedgerError::SameQpu(3)));
    }

    #[test]
    fn unlimited_counts_beyond_capacity() {
        let net = net_with(1, 1);
        let mut l = ResourceLedger::new(&net, true);
        for _ in 0..4 {
            l.try_reserve(&net, 0, 1).unwrap();
        }
        assert_eq!(l.in_use(net.tor_of_rack(0)), 4);
        assert_eq!(l.peaks()[0], 4);
        assert!(l.check_conservation());
    }

    proptest! {
        #[test]
        fn reserve_release_conserves(ops in prop::collection::vec((0usize..8, 0usize..8, any::<bool>()), 1..60)) {
            let net = net_with(2, 2);
            let mut l = ResourceLedger::new(&net, false);
            let initial = l.counters().0.to_vec();
            let mut held = Vec::new();
            for (a, b, release) in ops {
                if release && !held.is_empty() {
                    let id = held.remove(a % held.len());
                    l.release(id).unwrap();
                } else if a != b {
                    let snapshot = l.clone();
                    match l.try_reserve(&net, a, b) {
                        Ok(g) => held.push(g.id),
                        Err(LedgerError::Unavailable) => prop_assert_eq!(&l, &snapshot),
                        Err(e) => panic!("{e}"),
                    }
                }
                prop_assert!(l.check_conservation());
            }
            for id in held {
                l.release(id).unwrap();
            }
            prop_assert_eq!(l.counters(), (initial.as_slice(), 0));
        }
    }
}
