//! Runtime resource limits shared by the solvers.

use std::fs;
use std::time::{Duration, Instant};

use crate::error::{OscmError, Result};

/// Used when total memory cannot be detected.
const FALLBACK_MEMORY_BYTES: u64 = 4 << 30;

/// Three quarters of physical memory, read from `/proc/meminfo`.
pub fn default_memory_budget() -> u64 {
    let total = fs::read_to_string("/proc/meminfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("MemTotal:"))
                .and_then(|l| l.split_whitespace().nth(1))
                .and_then(|kb| kb.parse::<u64>().ok())
        })
        .map(|kb| kb * 1024)
        .unwrap_or(FALLBACK_MEMORY_BYTES);
    total / 4 * 3
}

/// Optional wall-clock limit checked cooperatively by the solvers.
#[derive(Debug, Clone, Copy, Default)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Deadline(None)
    }

    pub fn after(timeout: Duration) -> Self {
        Deadline(Some(Instant::now() + timeout))
    }

    pub fn at(instant: Instant) -> Self {
        Deadline(Some(instant))
    }

    pub fn expired(&self) -> bool {
        self.0.is_some_and(|d| Instant::now() >= d)
    }

    pub fn check(&self) -> Result<()> {
        if self.expired() {
            Err(OscmError::Timeout)
        } else {
            Ok(())
        }
    }
}

/// Fails with a capacity error when `needed` bytes exceed `budget`.
pub(crate) fn ensure_fits(what: &str, needed: u64, budget: u64) -> Result<()> {
    if needed > budget {
        return Err(OscmError::Capacity {
            what: format!("{what} memory (bytes)"),
            requested: needed,
            limit: budget,
        });
    }
    Ok(())
}
