//! Kernighan-Lin partitioning: recursive bisection for k parts followed by
//! pairwise KL refinement between every pair of parts.

use super::{InteractionGraph, PartitionError, Placement};

/// k-way placement by recursive KL bisection. Initial splits put the lower
/// half of the (ascending) qubit indices on one side. The result is refined
/// pairwise until no single swap between any two parts reduces the cut.
pub fn kl_partition(graph: &InteractionGraph, k: usize, capacity: usize) -> Result<Placement, PartitionError> {
    let n = graph.num_nodes();
    check_feasible(n, k, capacity)?;
    let mut parts = vec![0; n];
    let nodes: Vec<usize> = (0..n).collect();
    bisect_recursive(graph, &nodes, 0, k, capacity, &mut parts);
    let mut placement = Placement { parts, num_parts: k, capacity };
    kl_refine(graph, &mut placement);
    Ok(placement)
}

pub(crate) fn check_feasible(n: usize, k: usize, capacity: usize) -> Result<(), PartitionError> {
    if k == 0 {
        return Err(PartitionError::ZeroParts);
    }
    if k.saturating_mul(capacity) < n {
        return Err(PartitionError::Infeasible { qubits: n, parts: k, capacity });
    }
    Ok(())
}

fn bisect_recursive(
    graph: &InteractionGraph,
    nodes: &[usize],
    first_part: usize,
    k: usize,
    capacity: usize,
    parts: &mut [usize],
) {
    if k == 1 {
        for &v in nodes {
            parts[v] = first_part;
        }
        return;
    }
    let k_lo = k.div_ceil(2);
    let k_hi = k / 2;
    let len = nodes.len();
    let size_lo = (len * k_lo).div_ceil(k).clamp(len.saturating_sub(k_hi * capacity), k_lo * capacity).min(len);
    let (lo_label, hi_label) = (first_part, first_part + k_lo);
    for (i, &v) in nodes.iter().enumerate() {
        parts[v] = if i < size_lo { lo_label } else { hi_label };
    }
    kl_bisect(graph, nodes, lo_label, hi_label, parts);
    let lo: Vec<usize> = nodes.iter().copied().filter(|&v| parts[v] == lo_label).collect();
    let hi: Vec<usize> = nodes.iter().copied().filter(|&v| parts[v] == hi_label).collect();
    bisect_recursive(graph, &lo, lo_label, k_lo, capacity, parts);
    bisect_recursive(graph, &hi, hi_label, k_hi, capacity, parts);
}

/// Warm-started refinement: repeats KL bisection passes over every pair of
/// parts until a full sweep changes nothing. Returns the number of swaps.
pub fn kl_refine(graph: &InteractionGraph, placement: &mut Placement) -> usize {
    let k = placement.num_parts;
    let mut total = 0;
    loop {
        let mut swapped = 0;
        for a in 0..k {
            for b in a + 1..k {
                let nodes: Vec<usize> =
                    (0..graph.num_nodes()).filter(|&v| placement.parts[v] == a || placement.parts[v] == b).collect();
                swapped += kl_bisect(graph, &nodes, a, b, &mut placement.parts);
            }
        }
        total += swapped;
        if swapped == 0 {
            return total;
        }
    }
}

/// Kernighan-Lin on the subgraph induced by `nodes`, whose members carry
/// label `a` or `b` in `parts`. Passes repeat until the best prefix gain is
/// not positive. Ties on gain go to the lexicographically smallest pair.
/// Returns the number of swaps applied.
fn kl_bisect(graph: &InteractionGraph, nodes: &[usize], a: usize, b: usize, parts: &mut [usize]) -> usize {
    let mut applied = 0;
    let mut in_set = vec![false; graph.num_nodes()];
    for &v in nodes {
        in_set[v] = true;
    }
    loop {
        // d[v] = external - internal weight within the node set.
        let mut d = vec![0i64; graph.num_nodes()];
        for &v in nodes {
            for (u, w) in graph.neighbors(v) {
                if in_set[u] {
                    d[v] += if parts[u] == parts[v] { -(w as i64) } else { w as i64 };
                }
            }
        }
        let mut side: Vec<usize> = parts.to_vec();
        let mut locked = vec![false; graph.num_nodes()];
        let mut swaps: Vec<(usize, usize)> = Vec::new();
        let mut cumulative = 0i64;
        let (mut best_gain, mut best_len) = (0i64, 0usize);
        loop {
            let mut best: Option<(i64, usize, usize)> = None;
            for &x in nodes.iter().filter(|&&x| !locked[x] && side[x] == a) {
                for &y in nodes.iter().filter(|&&y| !locked[y] && side[y] == b) {
                    let g = d[x] + d[y] - 2 * graph.weight(x, y) as i64;
                    // Nodes are ascending, so the first strict maximum is the smallest pair.
                    if best.is_none_or(|(bg, _, _)| g > bg) {
                        best = Some((g, x, y));
                    }
                }
            }
            let Some((g, x, y)) = best else { break };
            locked[x] = true;
            locked[y] = true;
            for &v in nodes {
                if locked[v] {
                    continue;
                }
                let (wx, wy) = (graph.weight(v, x) as i64, graph.weight(v, y) as i64);
                if side[v] == a {
                    d[v] += 2 * wx - 2 * wy;
                } else {
                    d[v] += 2 * wy - 2 * wx;
                }
            }
            side[x] = b;
            side[y] = a;
            swaps.push((x, y));
            cumulative += g;
            if cumulative > best_gain {
                best_gain = cumulative;
                best_len = swaps.len();
            }
        }
        if best_gain <= 0 {
            return applied;
        }
        for &(x, y) in &swaps[..best_len] {
            parts[x] = b;
            parts[y] = a;
        }
        applied += best_len;
    }
}
