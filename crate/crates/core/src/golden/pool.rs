//! Parallel search: a fixed set of workers sharing one LIFO stack of
//! unexplored nodes.
//!
//! A worker pops a node, follows `commit(a, b)` itself and pushes the sibling
//! `commit(b, a)` for anyone idle. The stack, the active-worker count and the
//! best leaf live under one mutex; sleeping workers wait on a condition
//! variable. The search is over once the stack is empty and no worker is
//! active.

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::thread;

use crate::error::{OscmError, Result};
use crate::limits::Deadline;

use super::search::{BestSolution, SearchContext, SearchInstance, DEADLINE_POLL};

struct Shared {
    stack: Vec<SearchInstance>,
    active: usize,
    best: BestSolution,
    finished: bool,
    timed_out: bool,
}

struct Pool<'a, 'c> {
    state: Mutex<Shared>,
    wake: Condvar,
    /// Mirror of `best.budget` for lock-free pruning.
    best_budget: AtomicI64,
    ctx: &'a SearchContext<'c>,
    deadline: Deadline,
}

impl Pool<'_, '_> {
    fn lock(&self) -> MutexGuard<'_, Shared> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn push(&self, inst: SearchInstance) {
        self.lock().stack.push(inst);
        self.wake.notify_one();
    }

    fn pop(&self) -> Option<SearchInstance> {
        let mut state = self.lock();
        loop {
            if state.finished {
                return None;
            }
            if let Some(inst) = state.stack.pop() {
                state.active += 1;
                return Some(inst);
            }
            if state.active == 0 {
                state.finished = true;
                self.wake.notify_all();
                return None;
            }
            state = self.wake.wait(state).unwrap_or_else(|e| e.into_inner());
        }
    }

    fn retire(&self) {
        let mut state = self.lock();
        state.active -= 1;
        if state.active == 0 && state.stack.is_empty() {
            state.finished = true;
            self.wake.notify_all();
        }
    }

    fn abort(&self) {
        let mut state = self.lock();
        state.timed_out = true;
        state.finished = true;
        self.wake.notify_all();
    }

    fn offer(&self, leaf: &SearchInstance) {
        let mut state = self.lock();
        if state.best.offer(leaf) {
            self.best_budget.store(state.best.budget, Ordering::Relaxed);
        }
    }

    fn work(&self) {
        let mut visited = 0u64;
        while let Some(mut node) = self.pop() {
            loop {
                visited += 1;
                if visited.is_multiple_of(DEADLINE_POLL) && self.deadline.expired() {
                    self.abort();
                    break;
                }
                if node.budget() < 0 || node.budget() <= self.best_budget.load(Ordering::Relaxed) {
                    break;
                }
                match node.find_choice(self.ctx) {
                    None => {
                        self.offer(&node);
                        break;
                    }
                    Some((a, b)) => {
                        self.push(node.commit(b, a, self.ctx));
                        node = node.commit_into(a, b, self.ctx);
                    }
                }
            }
            self.retire();
        }
    }
}

/// Explores the tree below `root` with `workers` threads. The best budget
/// equals the one [`super::search_sequential`] finds; the precedence matrix
/// achieving it may differ.
pub fn parallel_search(
    root: SearchInstance,
    ctx: &SearchContext,
    workers: usize,
    deadline: &Deadline,
) -> Result<BestSolution> {
    let pool = Pool {
        state: Mutex::new(Shared {
            stack: vec![root],
            active: 0,
            best: BestSolution::default(),
            finished: false,
            timed_out: false,
        }),
        wake: Condvar::new(),
        best_budget: AtomicI64::new(i64::MIN),
        ctx,
        deadline: *deadline,
    };
    thread::scope(|s| {
        for _ in 0..workers.max(1) {
            s.spawn(|| pool.work());
        }
    });
    let state = pool.state.into_inner().unwrap_or_else(|e| e.into_inner());
    if state.timed_out {
        return Err(OscmError::Timeout);
    }
    Ok(state.best)
}
