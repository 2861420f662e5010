//! Dynamic programming along the interval sweep.
//!
//! At every position the table holds `dp[L ∪ S]` for each subset `S` of the
//! active window `M`, where `L` is the set of closed vertices. Window slots
//! map bits of `S` to vertices. Opening a vertex appends a slot and computes
//! the states that contain it, layer by layer; closing a vertex keeps only the
//! states containing it and drops its bit.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, Ordering};
use std::sync::{Barrier, Mutex, RwLock};
use std::thread;

use crate::bitmask_dp::{binomial, for_each_in_range, worker_range, FunctionF, MitmF, UNSET};
use crate::error::{OscmError, Result};
use crate::graph::CrossingMatrix;
use crate::limits::Deadline;

use super::intervals::{EventKind, IntervalSystem};

/// Argmin choices of one open step: `choices[sub]` is the slot of the vertex
/// placed last in state `sub | top`, where `top` is the slot just opened.
#[derive(Debug, Clone)]
pub(crate) struct OpenRecord {
    pub event: usize,
    pub slots: Vec<usize>,
    pub choices: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Record {
    Nothing,
    All,
    Only(usize),
}

struct OpenStep {
    event: usize,
    old_width: usize,
    window_fl: Vec<u64>,
    halves: MitmF,
    choices: Option<Vec<AtomicU8>>,
}

pub(crate) enum Step {
    Closed,
    Opened { old_width: usize },
}

pub(crate) struct Sweep<'a> {
    c: &'a CrossingMatrix,
    system: &'a IntervalSystem,
    next: usize,
    slots: Vec<usize>,
    dp: Vec<AtomicU64>,
    /// `fl[v] = F(L, v)` for every vertex not yet closed.
    fl: Vec<u64>,
    closed: Vec<bool>,
    record: Record,
    open: Option<OpenStep>,
}

impl<'a> Sweep<'a> {
    pub fn new(c: &'a CrossingMatrix, system: &'a IntervalSystem, record: Record) -> Self {
        Sweep {
            c,
            system,
            next: 0,
            slots: Vec::new(),
            dp: vec![AtomicU64::new(0)],
            fl: vec![0; c.n()],
            closed: vec![false; c.n()],
            record,
            open: None,
        }
    }

    pub fn finished(&self) -> bool {
        self.next == self.system.events().len()
    }

    #[cfg(test)]
    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    #[cfg(test)]
    pub fn dp_value(&self, mask: usize) -> u64 {
        self.dp[mask].load(Ordering::Relaxed)
    }

    #[cfg(test)]
    pub fn window_len(&self) -> usize {
        self.dp.len()
    }

    #[cfg(test)]
    pub fn fl(&self, v: usize) -> u64 {
        self.fl[v]
    }

    #[cfg(test)]
    pub fn is_closed(&self, v: usize) -> bool {
        self.closed[v]
    }

    /// Applies the next event. After an open, the new states must be filled
    /// with [`Sweep::fill_range`] for every layer before [`Sweep::finish_open`].
    pub fn apply_event(&mut self) -> Option<Step> {
        debug_assert!(self.open.is_none(), "previous open step not finished");
        let event_idx = self.next;
        let event = *self.system.events().get(event_idx)?;
        self.next += 1;
        let v = event.vertex;
        match event.kind {
            EventKind::Close => {
                let s = self
                    .slots
                    .iter()
                    .position(|&u| u == v)
                    .expect("closing vertex is active");
                let low = (1usize << s) - 1;
                let kept: Vec<AtomicU64> = (0..self.dp.len() / 2)
                    .map(|m| {
                        let old = (m & low) | 1 << s | (m & !low) << 1;
                        AtomicU64::new(self.dp[old].load(Ordering::Relaxed))
                    })
                    .collect();
                self.dp = kept;
                self.slots.remove(s);
                self.closed[v] = true;
                let row = self.c.row(v);
                for (u, acc) in self.fl.iter_mut().enumerate() {
                    if !self.closed[u] {
                        *acc += row[u];
                    }
                }
                Some(Step::Closed)
            }
            EventKind::Open => {
                let old_width = self.slots.len();
                self.slots.push(v);
                let w = self.slots.len();
                self.dp.extend((0..1usize << old_width).map(|_| AtomicU64::new(UNSET)));
                let mut entries = vec![0u64; w * w];
                for (i, &x) in self.slots.iter().enumerate() {
                    for (j, &y) in self.slots.iter().enumerate() {
                        entries[i * w + j] = self.c.get(x, y);
                    }
                }
                let window =
                    CrossingMatrix::from_entries(w, entries).expect("window matrix is square");
                let keep = match self.record {
                    Record::All => true,
                    Record::Only(e) => e == event_idx,
                    Record::Nothing => false,
                };
                self.open = Some(OpenStep {
                    event: event_idx,
                    old_width,
                    window_fl: self.slots.iter().map(|&u| self.fl[u]).collect(),
                    halves: MitmF::new(&window, 1),
                    choices: keep.then(|| (0..1usize << old_width).map(|_| AtomicU8::new(0)).collect()),
                });
                Some(Step::Opened { old_width })
            }
        }
    }

    /// Fills the new states of `layer` (popcount including the opened slot)
    /// with ranks `first..first + count` among the `C(old_width, layer - 1)`
    /// masks of the older slots.
    pub fn fill_range(&self, layer: usize, first: u64, count: u64) {
        let step = self.open.as_ref().expect("fill_range outside an open step");
        let top = 1u64 << step.old_width;
        for_each_in_range(step.old_width, layer - 1, first, count, |sub| {
            let set = top | sub;
            let mut best = UNSET;
            let mut arg = 0u8;
            let mut bits = set;
            while bits != 0 {
                let u = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let prev = set ^ (1 << u);
                let cand = self.dp[prev as usize].load(Ordering::Relaxed)
                    + step.window_fl[u]
                    + step.halves.eval(prev, u);
                if cand < best {
                    best = cand;
                    arg = u as u8;
                }
            }
            self.dp[set as usize].store(best, Ordering::Relaxed);
            if let Some(choices) = &step.choices {
                choices[sub as usize].store(arg, Ordering::Relaxed);
            }
        });
    }

    pub fn finish_open(&mut self) -> Option<OpenRecord> {
        let step = self.open.take().expect("no open step to finish");
        step.choices.map(|choices| OpenRecord {
            event: step.event,
            slots: self.slots.clone(),
            choices: choices.into_iter().map(AtomicU8::into_inner).collect(),
        })
    }

    /// Computes every new state of the pending open step on this thread.
    pub fn fill_all(&self, old_width: usize) {
        for layer in 1..=old_width + 1 {
            self.fill_range(layer, 1, binomial(old_width, layer - 1));
        }
    }

    /// Optimal cost of the closed vertices; valid once the sweep finished.
    pub fn value(&self) -> u64 {
        debug_assert!(self.finished());
        self.dp[0].load(Ordering::Relaxed)
    }
}

/// Runs the sweep on the calling thread, stopping after event `until` when
/// given. Records are passed to `sink` as open steps complete.
pub(crate) fn run_sequential(
    sweep: &mut Sweep,
    until: Option<usize>,
    deadline: &Deadline,
    mut sink: impl FnMut(OpenRecord),
) -> Result<()> {
    while until.is_none_or(|u| sweep.next <= u) {
        deadline.check()?;
        match sweep.apply_event() {
            None => break,
            Some(Step::Closed) => {}
            Some(Step::Opened { old_width }) => {
                sweep.fill_all(old_width);
                if let Some(rec) = sweep.finish_open() {
                    sink(rec);
                }
            }
        }
    }
    Ok(())
}

/// Runs the whole sweep with `workers` threads. The calling thread applies
/// events; within an open step every layer is split between all workers and
/// closed by a barrier.
pub(crate) fn run_parallel(
    sweep: Sweep,
    workers: usize,
    deadline: &Deadline,
    mut sink: impl FnMut(OpenRecord) + Send,
) -> Result<u64> {
    // Window width before every open, known up front so that helpers follow
    // the same schedule as the leader.
    let mut opens = Vec::new();
    let mut width = 0usize;
    for e in sweep.system.events() {
        match e.kind {
            EventKind::Open => {
                opens.push(width);
                width += 1;
            }
            EventKind::Close => width -= 1,
        }
    }
    let sweep = RwLock::new(sweep);
    let barrier = Barrier::new(workers);
    let stop = AtomicBool::new(false);
    let failure: Mutex<Option<OscmError>> = Mutex::new(None);

    let fill_layers = |j: usize, old_width: usize| {
        for layer in 1..=old_width + 1 {
            let (first, count) = worker_range(binomial(old_width, layer - 1), workers, j);
            if count > 0 {
                sweep.read().unwrap().fill_range(layer, first, count);
            }
            barrier.wait();
        }
    };

    thread::scope(|s| {
        for j in 1..workers {
            let (opens, barrier, stop, fill_layers) = (&opens, &barrier, &stop, &fill_layers);
            s.spawn(move || {
                for &old_width in opens {
                    barrier.wait();
                    if stop.load(Ordering::Relaxed) {
                        return;
                    }
                    fill_layers(j, old_width);
                }
            });
        }

        for &old_width in &opens {
            {
                let mut guard = sweep.write().unwrap();
                loop {
                    if let Err(e) = deadline.check() {
                        *failure.lock().unwrap() = Some(e);
                        stop.store(true, Ordering::Relaxed);
                        break;
                    }
                    match guard.apply_event() {
                        Some(Step::Opened { old_width: w }) => {
                            debug_assert_eq!(w, old_width);
                            break;
                        }
                        Some(Step::Closed) => {}
                        None => unreachable!("schedule lists more opens than the sweep has"),
                    }
                }
            }
            barrier.wait();
            if stop.load(Ordering::Relaxed) {
                return;
            }
            fill_layers(0, old_width);
            if let Some(rec) = sweep.write().unwrap().finish_open() {
                sink(rec);
            }
        }
        let mut guard = sweep.write().unwrap();
        while let Some(step) = guard.apply_event() {
            debug_assert!(matches!(step, Step::Closed));
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(sweep.into_inner().unwrap().value())
}
