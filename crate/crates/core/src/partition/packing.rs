use std::collections::BTreeSet;

use crate::circuit::GateKind;

use super::{Annotation, DistributedProgram, NodeOp, PartitionCost};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    /// Z-diagonal side: the shared qubit stays in the computational basis.
    Control,
    /// X side: the shared qubit is only hit by X-type operations.
    Target,
}

/// Role a gate gives to `qubit`, if the gate commutes with that role's run.
fn role_of(kind: GateKind, qubits: &[usize], qubit: usize) -> Option<Role> {
    match kind {
        GateKind::Rz | GateKind::Crz => Some(Role::Control),
        GateKind::X => Some(Role::Target),
        GateKind::Cx if qubits[0] == qubit => Some(Role::Control),
        GateKind::Cx => Some(Role::Target),
        GateKind::H => None,
    }
}

fn unordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Counts EPR charges after packing. A run of non-local gates between one
/// QPU pair shares a single charge when a common qubit keeps the control
/// role (intervening rz, crz, cx-control only) or the target role
/// (intervening x, cx-target only). Runs end at window boundaries and
/// teleports of their qubit.
pub fn gate_pack(program: &DistributedProgram) -> PartitionCost {
    // Open runs: (qubit, role, qpu pair).
    let mut open: BTreeSet<(usize, Role, (usize, usize))> = BTreeSet::new();
    let mut window = 0;
    let (mut nonlocal, mut charges, mut teleports) = (0, 0, 0);
    for node in program.nodes() {
        if node.window != window {
            open.clear();
            window = node.window;
        }
        let (kind, qubits) = match &node.op {
            NodeOp::Teleport { qubit, .. } => {
                teleports += 1;
                open.retain(|r| r.0 != *qubit);
                continue;
            }
            NodeOp::Gate { kind, qubits, .. } => (*kind, qubits.as_slice()),
        };
        let pair = match node.annotation {
            Annotation::NonLocal { a, b } => Some(unordered(a, b)),
            _ => None,
        };
        let joined = pair.is_some_and(|p| {
            qubits.iter().any(|&q| role_of(kind, qubits, q).is_some_and(|role| open.contains(&(q, role, p))))
        });
        for &q in qubits {
            let keep = role_of(kind, qubits, q);
            open.retain(|r| r.0 != q || Some(r.1) == keep);
        }
        if let Some(p) = pair {
            nonlocal += 1;
            if !joined {
                charges += 1;
                for &q in qubits {
                    if let Some(role) = role_of(kind, qubits, q) {
                        open.insert((q, role, p));
                    }
                }
            }
        }
    }
    PartitionCost { nonlocal_gates: nonlocal, packed_epr: charges, teleports, total: charges + teleports }
}

/// EPR total with or without packing; teleports are never packed.
pub fn partition_cost(program: &DistributedProgram, packing: bool) -> PartitionCost {
    let packed = gate_pack(program);
    if packing {
        packed
    } else {
        PartitionCost { packed_epr: packed.nonlocal_gates, total: packed.nonlocal_gates + packed.teleports, ..packed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gen_benchmark, BenchmarkKind, BenchmarkOptions, Circuit};
    use crate::partition::{annotate_program, kl_partition, InteractionGraph, Placement, WindowedPlacement};

    fn program(c: &Circuit, parts: Vec<usize>, k: usize) -> DistributedProgram {
        let cap = parts.len();
        annotate_program(c, &WindowedPlacement::single(c, Placement { parts, num_parts: k, capacity: cap }))
    }

    #[test]
    fn rz_between_shared_controls_packs() {
        let mut c = Circuit::new(5).unwrap();
        c.cx(0, 3).unwrap();
        c.rz(0.4, 0).unwrap();
        c.cx(0, 4).unwrap();
        let cost = gate_pack(&program(&c, vec![0, 0, 0, 1, 1], 2));
        assert_eq!(cost.nonlocal_gates, 2);
        assert_eq!(cost.packed_epr, 1);
    }

    #[test]
    fn hadamard_breaks_run() {
        let mut c = Circuit::new(5).unwrap();
        c.cx(0, 3).unwrap();
        c.h(0).unwrap();
        c.cx(0, 4).unwrap();
        assert_eq!(gate_pack(&program(&c, vec![0, 0, 0, 1, 1], 2)).packed_epr, 2);
    }

    #[test]
    fn shared_target_packs_and_control_role_mismatch_does_not() {
        let mut c = Circuit::new(4).unwrap();
        c.cx(0, 3).unwrap();
        c.x(3).unwrap();
        c.cx(1, 3).unwrap();
        assert_eq!(gate_pack(&program(&c, vec![0, 0, 1, 1], 2)).packed_epr, 1);

        let mut c = Circuit::new(4).unwrap();
        c.cx(0, 3).unwrap();
        c.cx(3, 1).unwrap(); // qubit 3 switches role
        assert_eq!(gate_pack(&program(&c, vec![0, 0, 1, 1], 2)).packed_epr, 2);
    }

    #[test]
    fn different_pairs_do_not_merge() {
        let mut c = Circuit::new(3).unwrap();
        c.cx(0, 1).unwrap();
        c.cx(0, 2).unwrap();
        let cost = gate_pack(&program(&c, vec![0, 1, 2], 3));
        assert_eq!(cost.packed_epr, 2);
        assert_eq!(cost.packed_epr, cost.nonlocal_gates);
    }

    #[test]
    fn cost_arithmetic() {
        let mut c = Circuit::new(2).unwrap();
        c.cx(0, 1).unwrap();
        c.h(0).unwrap();
        let all_local = program(&c, vec![0, 0], 1);
        assert_eq!(partition_cost(&all_local, true).total, 0);
        assert_eq!(partition_cost(&all_local, false).total, 0);
    }

    #[test]
    fn bv_packs_to_constant() {
        for n in [20, 40] {
            let c = gen_benchmark(BenchmarkKind::Bv, n, &BenchmarkOptions::default()).unwrap();
            let placement = kl_partition(&InteractionGraph::from_circuit(&c), 2, n / 2).unwrap();
            let prog = annotate_program(&c, &WindowedPlacement::single(&c, placement));
            let on = partition_cost(&prog, true);
            let off = partition_cost(&prog, false);
            assert!(on.total <= 2, "n={n}: {on:?}");
            assert!(off.total >= n / 4, "n={n}: {off:?}");
            assert!(on.packed_epr <= on.nonlocal_gates);
        }
    }
}
