use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Circuit, CircuitError, GateKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkKind {
    Qft,
    Qaoa,
    Qv,
    Random,
    Bv,
    Cat,
}

impl BenchmarkKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Qft => "qft",
            BenchmarkKind::Qaoa => "qaoa",
            BenchmarkKind::Qv => "qv",
            BenchmarkKind::Random => "random",
            BenchmarkKind::Bv => "bv",
            BenchmarkKind::Cat => "cat",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "qft" => BenchmarkKind::Qft,
            "qaoa" => BenchmarkKind::Qaoa,
            "qv" => BenchmarkKind::Qv,
            "random" => BenchmarkKind::Random,
            "bv" => BenchmarkKind::Bv,
            "cat" => BenchmarkKind::Cat,
            other => return Err(CircuitError::Options(format!("unknown benchmark `{other}`"))),
        })
    }
}

/// Generator options. Fields a family does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkOptions {
    pub seed: u64,
    /// Layers for `qv`, gate count for `random`. Defaults to `n` and `10 n`.
    pub depth: Option<usize>,
    /// QAOA cost/mixer repetitions.
    pub rounds: usize,
    /// Edge probability of the QAOA problem graph.
    pub edge_prob: f64,
    /// BV secret over the `n - 1` data qubits, e.g. `"1011"`; all ones if absent.
    pub secret: Option<String>,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions { seed: 0, depth: None, rounds: 3, edge_prob: 0.3, secret: None }
    }
}

/// Generates a benchmark circuit of the given family on `n` qubits.
pub fn gen_benchmark(kind: BenchmarkKind, n: usize, opts: &BenchmarkOptions) -> Result<Circuit, CircuitError> {
    let bad = |m: &str| Err(CircuitError::Options(format!("{kind}: {m}")));
    if n == 0 {
        return bad("n must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut c = Circuit::new(n)?;
    match kind {
        BenchmarkKind::Qft => {
            for i in 0..n {
                c.h(i)?;
                for j in i + 1..n {
                    // cp(theta) = rz(theta / 2) on the control after crz(theta), up to phase.
                    let theta = PI / f64::powi(2.0, (j - i) as i32);
                    c.crz(theta, i, j)?;
                    c.rz(theta / 2.0, i)?;
                }
            }
        }
        BenchmarkKind::Qaoa => {
            if n < 2 {
                return bad("needs at least 2 qubits");
            }
            if opts.rounds == 0 {
                return bad("rounds must be at least 1");
            }
            if !(0.0..=1.0).contains(&opts.edge_prob) {
                return bad("edge_prob must lie in [0, 1]");
            }
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(opts.edge_prob) {
                        edges.push((i, j));
                    }
                }
            }
            let edges = matching_order(n, &edges);
            for q in 0..n {
                c.h(q)?;
            }
            for r in 0..opts.rounds {
                let gamma = 0.4 + 0.1 * r as f64;
                let beta = 0.7 - 0.1 * r as f64;
                for &(i, j) in &edges {
                    c.cx(i, j)?;
                    c.rz(2.0 * gamma, j)?;
                    c.cx(i, j)?;
                }
                for q in 0..n {
                    c.rz(PI / 2.0, q)?;
                    c.h(q)?;
                    c.rz(2.0 * beta, q)?;
                }
            }
        }
        BenchmarkKind::Qv => {
            let depth = opts.depth.unwrap_or(n);
            if n < 2 {
                return bad("needs at least 2 qubits");
            }
            let mut order: Vec<usize> = (0..n).collect();
            for _ in 0..depth {
                order.shuffle(&mut rng);
                for pair in order.chunks_exact(2) {
                    let (a, b) = (pair[0], pair[1]);
                    c.cx(a, b)?;
                    c.rz(rng.gen_range(0.0..2.0 * PI), b)?;
                    c.cx(b, a)?;
                    c.rz(rng.gen_range(0.0..2.0 * PI), a)?;
                    c.cx(a, b)?;
                }
            }
        }
        BenchmarkKind::Random => {
            let depth = opts.depth.unwrap_or(10 * n);
            let kinds: &[GateKind] = if n >= 2 { &GateKind::ALL } else { &[GateKind::H, GateKind::Rz, GateKind::X] };
            for _ in 0..depth {
                let kind = kinds[rng.gen_range(0..kinds.len())];
                let a = rng.gen_range(0..n);
                let qubits = if kind.arity() == 2 {
                    let mut b = rng.gen_range(0..n - 1);
                    if b >= a {
                        b += 1;
                    }
                    vec![a, b]
                } else {
                    vec![a]
                };
                let param = kind.has_param().then(|| rng.gen_range(0.0..2.0 * PI));
                c.push(kind, &qubits, param)?;
            }
        }
        BenchmarkKind::Bv => {
            if n < 2 {
                return bad("needs at least 2 qubits");
            }
            let ancilla = n - 1;
            let secret: Vec<bool> = match &opts.secret {
                None => vec![true; ancilla],
                Some(s) => {
                    if s.len() != ancilla || !s.chars().all(|ch| ch == '0' || ch == '1') {
                        return bad("secret must be a bit string of length n - 1");
                    }
                    s.chars().map(|ch| ch == '1').collect()
                }
            };
            for q in 0..n {
                c.h(q)?;
            }
            for (q, &bit) in secret.iter().enumerate() {
                if bit {
                    c.cx(q, ancilla)?;
                }
            }
            for q in 0..n {
                c.h(q)?;
            }
        }
        BenchmarkKind::Cat => {
            c.h(0)?;
            for i in 0..n - 1 {
                c.cx(i, i + 1)?;
            }
        }
    }
    Ok(c)
}

/// Greedy edge colouring: edges grouped into matchings so that commuting
/// ZZ terms on disjoint qubits run in parallel. Within a colour, edges keep
/// their input order.
type Colour = (Vec<bool>, Vec<(usize, usize)>);

fn matching_order(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut colours: Vec<Colour> = Vec::new();
    for &(a, b) in edges {
        let slot = colours.iter().position(|(busy, _)| !busy[a] && !busy[b]);
        let idx = slot.unwrap_or_else(|| {
            colours.push((vec![false; n], Vec::new()));
            colours.len() - 1
        });
        let (busy, list) = &mut colours[idx];
        busy[a] = true;
        busy[b] = true;
        list.push((a, b));
    }
    colours.into_iter().flat_map(|(_, list)| list).collect()
}
