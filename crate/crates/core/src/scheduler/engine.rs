use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::circuit::DependencyDag;
use crate::partition::DistributedProgram;
use crate::physical::PhysicalConfig;
use crate::time::Nanos;
use crate::topology::{LedgerError, Network, NodeId, QpuId, ReservationId, ResourceLedger};

use super::{BsmSample, Durations, EprPair, Event, EventKind, Purpose, SimError, TrialResult};

struct Task {
    purpose: Purpose,
    reservation: ReservationId,
    qpus: (QpuId, QpuId),
}

pub(super) struct Engine<'a> {
    program: &'a DistributedProgram,
    net: &'a Network,
    phys: &'a PhysicalConfig,
    durations: &'a Durations,
    cutoff: Option<Nanos>,
    unlimited: bool,
    dag: DependencyDag,
    ledger: ResourceLedger,
    now: Nanos,
    completions: BinaryHeap<Reverse<(Nanos, usize)>>,
    tasks: BTreeMap<usize, Task>,
    pairs: BTreeMap<usize, EprPair>,
    /// Lost a stored pair; served on demand only from then on.
    spent: Vec<bool>,
    generation: Vec<u64>,
    switches: Vec<NodeId>,
    events: Vec<Event>,
    samples: Vec<BsmSample>,
    demand: BTreeMap<(QpuId, QpuId), u64>,
    discarded: u64,
    unavailable: u64,
    makespan: Nanos,
}

impl<'a> Engine<'a> {
    pub(super) fn new(
        program: &'a DistributedProgram,
        net: &'a Network,
        phys: &'a PhysicalConfig,
        durations: &'a Durations,
        unlimited: bool,
        cutoff: Option<Nanos>,
    ) -> Self {
        let n = program.len();
        Engine {
            program,
            net,
            phys,
            durations,
            cutoff,
            unlimited,
            dag: program.dag().clone(),
            ledger: ResourceLedger::new(net, unlimited),
            now: 0,
            completions: BinaryHeap::new(),
            tasks: BTreeMap::new(),
            pairs: BTreeMap::new(),
            spent: vec![false; n],
            generation: vec![0; n],
            switches: net.switches().map(|s| s.id).collect(),
            events: Vec::new(),
            samples: Vec::new(),
            demand: BTreeMap::new(),
            discarded: 0,
            unavailable: 0,
            makespan: 0,
        }
    }

    pub(super) fn finish(self) -> TrialResult {
        let qpu_peaks = self.ledger.peaks()[..self.net.num_qpus()].to_vec();
        TrialResult {
            trial: 0,
            makespan: self.makespan,
            events: self.events,
            switches: self.switches,
            samples: self.samples,
            demand: self.demand.into_iter().collect(),
            discarded: self.discarded,
            unavailable: self.unavailable,
            qpu_peaks,
            unlimited: self.unlimited,
        }
    }

    fn log(&mut self, kind: EventKind) {
        self.events.push(Event { time_ns: self.now, kind });
    }

    fn qpus(&self, node: usize) -> Option<(QpuId, QpuId)> {
        self.program.node(node).annotation.pair()
    }

    fn execute(&mut self, node: usize) -> Result<(), SimError> {
        self.dag.remove_node(node)?;
        self.makespan = self.now;
        self.log(EventKind::Execute { node });
        Ok(())
    }

    /// Tries to reserve a path and start generating a pair for `node`.
    fn start_task(&mut self, node: usize, purpose: Purpose) -> Result<bool, SimError> {
        let (a, b) = self.qpus(node).expect("only non-local nodes need pairs");
        let grant = match self.ledger.try_reserve(self.net, a, b) {
            Ok(g) => g,
            Err(LedgerError::Unavailable) => {
                self.unavailable += 1;
                return Ok(false);
            }
            Err(e) => return Err(e.into()),
        };
        let generation = self.generation[node];
        self.generation[node] += 1;
        let class = self.net.classify_pair(a, b);
        let d = self.durations.duration(self.phys, class, grant.reconfigured, node, generation)?;
        let finish = self.now + d;
        self.completions.push(Reverse((finish, node)));
        self.tasks.insert(node, Task { purpose, reservation: grant.id, qpus: (a, b) });
        self.log(EventKind::TaskStart {
            node,
            pair: (a, b),
            purpose,
            reservation: grant.id,
            switches: grant.switches,
            generation,
            reconfigured: grant.reconfigured,
            finish_ns: finish,
        });
        Ok(true)
    }

    fn consume(&mut self, node: usize, reservation: ReservationId, qpus: (QpuId, QpuId)) -> Result<(), SimError> {
        self.ledger.release(reservation)?;
        self.log(EventKind::Release { node, reservation });
        *self.demand.entry((qpus.0.min(qpus.1), qpus.0.max(qpus.1))).or_insert(0) += 1;
        self.execute(node)
    }

    fn discard(&mut self, node: usize, evicted: bool) -> Result<(), SimError> {
        let pair = self.pairs.remove(&node).expect("stored pair");
        self.ledger.release(pair.reservation)?;
        self.log(EventKind::Discard { node, reservation: pair.reservation, evicted });
        self.discarded += 1;
        self.spent[node] = true;
        Ok(())
    }

    /// Handles every task finishing at `now`, in ascending node order.
    fn complete_due(&mut self) -> Result<(), SimError> {
        let mut due = Vec::new();
        while let Some(&Reverse((t, node))) = self.completions.peek() {
            if t != self.now {
                break;
            }
            self.completions.pop();
            due.push(node);
        }
        due.sort_unstable();
        for node in due {
            let task = self.tasks.remove(&node).expect("task for completion");
            self.log(EventKind::TaskFinish { node, purpose: task.purpose, reservation: task.reservation });
            match task.purpose {
                Purpose::OnDemand => self.consume(node, task.reservation, task.qpus)?,
                Purpose::Lookahead => {
                    self.ledger.release_bsms(task.reservation)?;
                    let pair = EprPair {
                        node,
                        qpus: task.qpus,
                        reservation: task.reservation,
                        ready: self.now,
                        expiry: self.cutoff.map(|c| self.now + c),
                    };
                    self.pairs.insert(node, pair);
                }
            }
        }
        Ok(())
    }

    fn expire_due(&mut self) -> Result<(), SimError> {
        let now = self.now;
        let due: Vec<usize> =
            self.pairs.values().filter(|p| p.expiry.is_some_and(|e| e <= now)).map(|p| p.node).collect();
        for node in due {
            self.discard(node, false)?;
        }
        Ok(())
    }

    /// Executes zero-cost front nodes and nodes holding a stored pair until
    /// nothing changes, then starts on-demand generation in id order.
    fn serve_front(&mut self) -> Result<(), SimError> {
        loop {
            let mut progressed = false;
            for node in self.dag.front_layer() {
                if self.qpus(node).is_none() {
                    self.execute(node)?;
                    progressed = true;
                } else if let Some(pair) = self.pairs.remove(&node) {
                    self.consume(node, pair.reservation, pair.qpus)?;
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        for node in self.dag.front_layer() {
            if !self.tasks.contains_key(&node) {
                self.start_task(node, Purpose::OnDemand)?;
            }
        }
        Ok(())
    }

    /// Starts pre-generation for the next `k` layers, ascending layer then id.
    fn lookahead(&mut self, k: usize) -> Result<(), SimError> {
        let layering = self.dag.leading_layers(k + 1);
        for layer in layering.layers.iter().skip(1) {
            for &node in layer {
                if self.qpus(node).is_some()
                    && !self.spent[node]
                    && !self.tasks.contains_key(&node)
                    && !self.pairs.contains_key(&node)
                {
                    self.start_task(node, Purpose::Lookahead)?;
                }
            }
        }
        Ok(())
    }

    fn sample(&mut self) {
        let in_use = self.switches.iter().map(|&s| self.ledger.in_use(s)).collect();
        let index = self.samples.len();
        self.samples.push(BsmSample { time_ns: self.now, in_use });
        self.log(EventKind::Sample { index });
    }

    fn next_event_time(&self) -> Option<Nanos> {
        let completion = self.completions.peek().map(|r| r.0 .0);
        let expiry = self.pairs.values().filter_map(|p| p.expiry).min();
        match (completion, expiry) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn starvation(&self) -> SimError {
        SimError::Starvation { time: self.now, blocked: self.dag.front_layer() }
    }

    pub(super) fn run_dynamic(&mut self, k: usize) -> Result<(), SimError> {
        loop {
            self.complete_due()?;
            self.expire_due()?;
            self.serve_front()?;
            if k > 0 {
                self.lookahead(k)?;
            }
            self.sample();
            if self.dag.is_empty() {
                return Ok(());
            }
            match self.next_event_time() {
                Some(t) => self.now = t,
                None => {
                    // Stored pairs hold everything the front layer needs:
                    // give back the oldest one and retry at the same time.
                    let oldest = self.pairs.values().min_by_key(|p| (p.ready, p.node)).map(|p| p.node);
                    match oldest {
                        Some(node) => self.discard(node, true)?,
                        None => return Err(self.starvation()),
                    }
                }
            }
        }
    }

    pub(super) fn run_static(&mut self) -> Result<(), SimError> {
        let layering = self.dag.layers();
        for layer in layering.layers {
            let mut pending = Vec::new();
            for node in layer {
                if self.qpus(node).is_none() {
                    self.execute(node)?;
                } else {
                    pending.push(node);
                }
            }
            self.start_pending(&mut pending)?;
            self.sample();
            while !pending.is_empty() || !self.tasks.is_empty() {
                let Some(&Reverse((t, _))) = self.completions.peek() else {
                    return Err(SimError::Starvation { time: self.now, blocked: pending });
                };
                self.now = t;
                self.complete_due()?;
                self.start_pending(&mut pending)?;
                self.sample();
            }
        }
        Ok(())
    }

    /// Starts every pending node that can reserve, in id order, without
    /// letting a blocked node hold back later ones.
    fn start_pending(&mut self, pending: &mut Vec<usize>) -> Result<(), SimError> {
        let mut still = Vec::new();
        for &node in pending.iter() {
            if !self.start_task(node, Purpose::OnDemand)? {
                still.push(node);
            }
        }
        *pending = still;
        Ok(())
    }
}
