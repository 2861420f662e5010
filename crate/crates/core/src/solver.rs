//! One entry point over every solver.

use std::fmt;
use std::str::FromStr;

use crate::bitmask_dp::{self, DpConfig, DpVariant};
use crate::error::{OscmError, Result};
use crate::golden::{self, GoldenConfig, DEFAULT_MAX_K};
use crate::graph::{brute_force_solve, BipartiteInstance, SolveResult, DEFAULT_BRUTE_FORCE_CAP};
use crate::limits::{default_memory_budget, Deadline};
use crate::subexpo::{self, characterize_instance, SweepConfig, DEFAULT_WIDTH_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Picks subexpo, mitm-dp or golden from the instance shape.
    Auto,
    SlowDp,
    FastDp,
    MitmDp,
    Golden,
    Subexpo,
    Brute,
}

impl Algorithm {
    pub const CONCRETE: [Algorithm; 6] = [
        Algorithm::SlowDp,
        Algorithm::FastDp,
        Algorithm::MitmDp,
        Algorithm::Golden,
        Algorithm::Subexpo,
        Algorithm::Brute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Auto => "auto",
            Algorithm::SlowDp => "slow-dp",
            Algorithm::FastDp => "fast-dp",
            Algorithm::MitmDp => "mitm-dp",
            Algorithm::Golden => "golden",
            Algorithm::Subexpo => "subexpo",
            Algorithm::Brute => "brute",
        }
    }

    fn dp_variant(self) -> Option<DpVariant> {
        match self {
            Algorithm::SlowDp => Some(DpVariant::Slow),
            Algorithm::FastDp => Some(DpVariant::Fast),
            Algorithm::MitmDp => Some(DpVariant::Mitm),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        std::iter::once(Algorithm::Auto)
            .chain(Algorithm::CONCRETE)
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                format!("unknown algorithm `{s}` (expected auto, slow-dp, fast-dp, mitm-dp, golden, subexpo or brute)")
            })
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub threads: usize,
    pub max_k: u64,
    pub width_cap: usize,
    /// Free-layer cap for the dp variants; `None` keeps each variant's default.
    pub max_free: Option<usize>,
    pub mem_budget: u64,
    pub brute_cap: usize,
    pub deadline: Deadline,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            threads: 1,
            max_k: DEFAULT_MAX_K,
            width_cap: DEFAULT_WIDTH_CAP,
            max_free: None,
            mem_budget: default_memory_budget(),
            brute_cap: DEFAULT_BRUTE_FORCE_CAP,
            deadline: Deadline::none(),
        }
    }
}

impl SolverConfig {
    fn dp(&self) -> DpConfig {
        DpConfig {
            max_free: self.max_free,
            mem_budget: self.mem_budget,
            deadline: self.deadline,
        }
    }

    fn sweep(&self) -> SweepConfig {
        SweepConfig {
            width_cap: self.width_cap,
            mem_budget: self.mem_budget,
            choice_budget: self.mem_budget / 4,
            deadline: self.deadline,
        }
    }

    fn golden(&self) -> GoldenConfig {
        GoldenConfig {
            max_k: self.max_k,
            deadline: self.deadline,
        }
    }
}

/// Fails fast if `algo` cannot run on `inst` within the configured limits.
/// The golden search has no size limit; it fails later with `NotFound`.
pub fn check_capacity(inst: &BipartiteInstance, algo: Algorithm, cfg: &SolverConfig) -> Result<()> {
    let n = inst.n_free();
    match algo {
        Algorithm::Auto | Algorithm::Golden => Ok(()),
        Algorithm::Subexpo => cfg.sweep().check_capacity(&characterize_instance(inst)),
        Algorithm::Brute if n > cfg.brute_cap => Err(OscmError::Capacity {
            what: "brute free-layer size".into(),
            requested: n as u64,
            limit: cfg.brute_cap as u64,
        }),
        Algorithm::Brute => Ok(()),
        dp => cfg.dp().check_capacity(n, dp.dp_variant().expect("dp algorithm")),
    }
}

/// The algorithm `Auto` runs on this instance: subexpo when the window fits,
/// else mitm-dp when the free layer fits, else golden.
pub fn choose_algorithm(inst: &BipartiteInstance, cfg: &SolverConfig) -> Algorithm {
    [Algorithm::Subexpo, Algorithm::MitmDp]
        .into_iter()
        .find(|&a| check_capacity(inst, a, cfg).is_ok())
        .unwrap_or(Algorithm::Golden)
}

pub fn solve(inst: &BipartiteInstance, algo: Algorithm, cfg: &SolverConfig) -> Result<SolveResult> {
    let threads = cfg.threads.max(1);
    match algo {
        Algorithm::Auto => solve(inst, choose_algorithm(inst, cfg), cfg),
        Algorithm::Golden => golden::solve(inst, threads, &cfg.golden()),
        Algorithm::Subexpo => subexpo::sweep_solve_parallel(inst, threads, &cfg.sweep()),
        Algorithm::Brute => brute_force_solve(inst, cfg.brute_cap),
        dp => {
            let variant = dp.dp_variant().expect("dp algorithm");
            bitmask_dp::solve_parallel(inst, variant, threads, &cfg.dp())
        }
    }
}
