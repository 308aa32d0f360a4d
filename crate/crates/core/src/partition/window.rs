use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, DependencyDag};

use super::kl::{check_feasible, kl_partition, kl_refine};
use super::{InteractionGraph, PartitionError, Placement};

/// Moves `qubit` from one QPU to another between window `after_window` and
/// the next one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Teleport {
    pub qubit: usize,
    pub from: usize,
    pub to: usize,
    pub after_window: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    /// Gate ids in program order.
    pub gates: Vec<usize>,
    pub placement: Placement,
}

/// A sequence of windows with their own placements; together the windows
/// hold every gate exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowedPlacement {
    pub windows: Vec<Window>,
    pub teleports: Vec<Teleport>,
}

impl WindowedPlacement {
    /// One window holding the whole circuit.
    pub fn single(circuit: &Circuit, placement: Placement) -> Self {
        let windows = vec![Window { gates: (0..circuit.len()).collect(), placement }];
        WindowedPlacement { windows, teleports: Vec::new() }
    }

    pub fn from_windows(windows: Vec<Window>) -> Self {
        let mut wp = WindowedPlacement { windows, teleports: Vec::new() };
        wp.recompute_teleports();
        wp
    }

    /// Rebuilds the teleport list from consecutive placement differences.
    pub fn recompute_teleports(&mut self) {
        self.teleports = self
            .windows
            .windows(2)
            .enumerate()
            .flat_map(|(w, pair)| {
                let (cur, next) = (&pair[0].placement, &pair[1].placement);
                cur.diff(next).into_iter().map(move |q| Teleport {
                    qubit: q,
                    from: cur.parts[q],
                    to: next.parts[q],
                    after_window: w,
                })
            })
            .collect();
    }

    pub fn num_parts(&self) -> usize {
        self.windows.first().map_or(0, |w| w.placement.num_parts)
    }
}

/// Window-based partitioning: fixed-size gate windows, each placed by KL on
/// its own interaction graph. The first window starts cold, later ones are
/// refined from the previous window's placement.
pub fn wbcp_partition(
    circuit: &Circuit,
    k: usize,
    capacity: usize,
    window_size: usize,
) -> Result<WindowedPlacement, PartitionError> {
    if window_size == 0 {
        return Err(PartitionError::WindowSize);
    }
    check_feasible(circuit.num_qubits(), k, capacity)?;
    let gates = circuit.gates();
    let mut windows: Vec<Window> = Vec::new();
    for chunk in gates.chunks(window_size) {
        let graph = InteractionGraph::from_gates(circuit.num_qubits(), chunk);
        let placement = match windows.last() {
            None => kl_partition(&graph, k, capacity)?,
            Some(prev) => {
                let mut p = prev.placement.clone();
                kl_refine(&graph, &mut p);
                p
            }
        };
        windows.push(Window { gates: chunk.iter().map(|g| g.id).collect(), placement });
    }
    Ok(WindowedPlacement::from_windows(windows))
}

/// For every window boundary, pulls the gates of the next window's first
/// ASAP layer that are local under the current window's placement into the
/// current window. Placements never change.
pub fn boundary_refine(circuit: &Circuit, windowed: &WindowedPlacement) -> WindowedPlacement {
    let gates = circuit.gates();
    let mut out = windowed.clone();
    for w in 0..out.windows.len().saturating_sub(1) {
        let next_gates = out.windows[w + 1].gates.clone();
        let dag = DependencyDag::from_touches(next_gates.iter().map(|&g| gates[g].qubits.as_slice()));
        let placement = &out.windows[w].placement;
        let moved: Vec<usize> = dag
            .front_layer()
            .into_iter()
            .map(|i| next_gates[i])
            .filter(|&g| {
                let q = &gates[g].qubits;
                q.iter().all(|&x| placement.parts[x] == placement.parts[q[0]])
            })
            .collect();
        if moved.is_empty() {
            continue;
        }
        out.windows[w].gates.extend_from_slice(&moved);
        out.windows[w + 1].gates.retain(|g| !moved.contains(g));
    }
    out.recompute_teleports();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::static_cost;

    #[test]
    fn single_window_reduces_to_kl() {
        let mut c = Circuit::new(4).unwrap();
        for (a, b) in [(0, 2), (1, 3), (0, 2), (2, 3)] {
            c.cx(a, b).unwrap();
        }
        let wp = wbcp_partition(&c, 2, 2, 100).unwrap();
        assert_eq!(wp.windows.len(), 1);
        assert!(wp.teleports.is_empty());
        let kl = kl_partition(&InteractionGraph::from_circuit(&c), 2, 2).unwrap();
        assert_eq!(wp.windows[0].placement, kl);
        assert_eq!(static_cost(&c, &kl).nonlocal_gates, 1);
    }

    #[test]
    fn empty_circuit_has_no_windows() {
        let c = Circuit::new(3).unwrap();
        let wp = wbcp_partition(&c, 2, 2, 4).unwrap();
        assert!(wp.windows.is_empty());
        assert!(wp.teleports.is_empty());
    }

    #[test]
    fn zero_window_size_rejected() {
        let c = Circuit::new(3).unwrap();
        assert_eq!(wbcp_partition(&c, 2, 2, 0), Err(PartitionError::WindowSize));
    }

    /// Qubit 2 first works with {0, 1}, then with {3, 4}.
    fn migrating_instance() -> Circuit {
        let mut c = Circuit::new(6).unwrap();
        for _ in 0..2 {
            for (a, b) in [(0, 2), (1, 2), (3, 4), (4, 5), (3, 5)] {
                c.cx(a, b).unwrap();
            }
        }
        for _ in 0..2 {
            for (a, b) in [(2, 3), (2, 4), (0, 1), (1, 5), (0, 5)] {
                c.cx(a, b).unwrap();
            }
        }
        c
    }

    #[test]
    fn migrating_qubit_teleports_once() {
        let c = migrating_instance();
        let wp = wbcp_partition(&c, 2, 3, 10).unwrap();
        assert_eq!(wp.windows.len(), 2);
        let first = &wp.windows[0].placement;
        let second = &wp.windows[1].placement;
        assert_eq!(first.parts[0], first.parts[2]);
        assert_eq!(second.parts[2], second.parts[3]);
        let for_q2: Vec<_> = wp.teleports.iter().filter(|t| t.qubit == 2).collect();
        assert_eq!(for_q2.len(), 1);
        assert_eq!(for_q2[0].after_window, 0);
        assert_eq!(wp.teleports.len(), first.diff(second).len());
    }

    #[test]
    fn boundary_moves_local_first_layer_gates() {
        let mut c = Circuit::new(4).unwrap();
        c.cx(0, 2).unwrap();
        c.cx(1, 3).unwrap();
        c.cx(0, 1).unwrap(); // next window, first layer, local under window 0
        c.cx(0, 2).unwrap();
        let p0 = Placement { parts: vec![0, 0, 1, 1], num_parts: 2, capacity: 2 };
        let p1 = Placement { parts: vec![0, 1, 0, 1], num_parts: 2, capacity: 2 };
        let wp = WindowedPlacement::from_windows(vec![
            Window { gates: vec![0, 1], placement: p0.clone() },
            Window { gates: vec![2, 3], placement: p1.clone() },
        ]);
        let refined = boundary_refine(&c, &wp);
        assert_eq!(refined.windows[0].gates, vec![0, 1, 2]);
        assert_eq!(refined.windows[1].gates, vec![3]);
        assert_eq!(refined.windows[0].placement, p0);
        assert_eq!(refined.windows[1].placement, p1);
        assert_eq!(refined.teleports, wp.teleports);
    }

    #[test]
    fn boundary_fixpoint_cases() {
        let mut c = Circuit::new(4).unwrap();
        c.cx(0, 1).unwrap();
        c.cx(0, 2).unwrap();
        let p = Placement { parts: vec![0, 0, 1, 1], num_parts: 2, capacity: 2 };
        let wp = WindowedPlacement::from_windows(vec![
            Window { gates: vec![0], placement: p.clone() },
            Window { gates: vec![1], placement: p.clone() },
        ]);
        assert_eq!(boundary_refine(&c, &wp), wp);
        let single = WindowedPlacement::single(&c, p);
        assert_eq!(boundary_refine(&c, &single), single);
    }
}
