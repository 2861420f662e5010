use crate::error::{OscmError, Result};
use crate::graph::CrossingMatrix;
use crate::limits::Deadline;

use super::precedence::{transitive_closure, PrecedenceMatrix};

/// Deadline polling interval, in search nodes.
pub(crate) const DEADLINE_POLL: u64 = 256;

/// Pairwise lower bound and the residual costs above it.
#[derive(Debug, Clone)]
pub struct ResidualCosts {
    n: usize,
    lower_bound: u64,
    residual: Vec<u64>,
}

impl ResidualCosts {
    pub fn new(c: &CrossingMatrix) -> Self {
        let n = c.n();
        let mut lower_bound = 0;
        let mut residual = vec![0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let (ij, ji) = (c.get(i, j), c.get(j, i));
                let low = ij.min(ji);
                lower_bound += low;
                residual[i * n + j] = ij - low;
                residual[j * n + i] = ji - low;
            }
        }
        ResidualCosts {
            n,
            lower_bound,
            residual,
        }
    }

    pub fn lower_bound(&self) -> u64 {
        self.lower_bound
    }

    /// Residual cost of placing `i` before `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.residual[i * self.n + j]
    }
}

/// Read-only data shared by every node of one search.
#[derive(Debug)]
pub struct SearchContext<'a> {
    c: &'a CrossingMatrix,
    residual: &'a ResidualCosts,
    /// Row `i` has bit `j` for `j > i` with `C[i][j] != C[j][i]`.
    unequal: PrecedenceMatrix,
}

impl<'a> SearchContext<'a> {
    pub fn new(c: &'a CrossingMatrix, residual: &'a ResidualCosts) -> Self {
        let n = c.n();
        let mut unequal = PrecedenceMatrix::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if c.get(i, j) != c.get(j, i) {
                    unequal.set(i, j);
                }
            }
        }
        SearchContext {
            c,
            residual,
            unequal,
        }
    }

    pub fn n(&self) -> usize {
        self.c.n()
    }

    pub fn crossings(&self) -> &CrossingMatrix {
        self.c
    }

    pub fn residual(&self) -> &ResidualCosts {
        self.residual
    }
}

/// A node of the search tree: committed precedences plus remaining budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchInstance {
    d: PrecedenceMatrix,
    budget: i64,
    /// Rows before this index hold no choice pair.
    cursor: usize,
}

impl SearchInstance {
    pub fn precedence(&self) -> &PrecedenceMatrix {
        &self.d
    }

    pub fn budget(&self) -> i64 {
        self.budget
    }

    /// First undecided pair `(i, j)`, `i < j`, whose two orders cost
    /// differently. Pairs only ever become decided, so the scan resumes where
    /// the previous call stopped.
    pub fn find_choice(&mut self, ctx: &SearchContext) -> Option<(usize, usize)> {
        let n = ctx.n();
        while self.cursor < n {
            let i = self.cursor;
            let open = ctx
                .unequal
                .row(i)
                .iter()
                .zip(self.d.row(i))
                .map(|(u, d)| u & !d);
            for (w, mut word) in open.enumerate() {
                while word != 0 {
                    let j = w * 64 + word.trailing_zeros() as usize;
                    word &= word - 1;
                    if !self.d.get(j, i) {
                        return Some((i, j));
                    }
                }
            }
            self.cursor += 1;
        }
        None
    }

    /// Copy with `a` placed before `b`, closed under transitivity and charged
    /// for every newly ordered pair.
    pub fn commit(&self, a: usize, b: usize, ctx: &SearchContext) -> SearchInstance {
        self.clone().commit_into(a, b, ctx)
    }

    pub fn commit_into(mut self, a: usize, b: usize, ctx: &SearchContext) -> SearchInstance {
        assert!(
            a != b && !self.d.get(a, b) && !self.d.get(b, a),
            "commit({a}, {b}) on an already ordered pair"
        );
        let n = ctx.n();
        let mut successors = self.d.row(b).to_vec();
        successors[b / 64] |= 1 << (b % 64);
        let residual = ctx.residual;
        let mut budget = self.budget;
        for i in 0..n {
            if i != a && !self.d.get(i, a) {
                continue;
            }
            let row = self.d.row_mut(i);
            for (w, (dst, &src)) in row.iter_mut().zip(&successors).enumerate() {
                let mut added = src & !*dst;
                *dst |= added;
                while added != 0 {
                    let j = w * 64 + added.trailing_zeros() as usize;
                    added &= added - 1;
                    budget = budget.saturating_sub(residual.get(i, j) as i64);
                }
            }
        }
        self.budget = budget;
        self
    }

    /// Residual cost of every ordered pair in `D`.
    pub fn committed_cost(&self, residual: &ResidualCosts) -> u64 {
        self.d.pairs().map(|(i, j)| residual.get(i, j)).sum()
    }
}

/// Root of the search for budget `k`: zero-cost directions and directions
/// whose reverse alone would exceed `k` are forced, then closed.
pub fn build_root_instance(ctx: &SearchContext, k: u64) -> Result<SearchInstance> {
    let n = ctx.n();
    let (c, residual) = (ctx.c, ctx.residual);
    let mut d = PrecedenceMatrix::new(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if (c.get(i, j) == 0 && c.get(j, i) > 0) || residual.get(j, i) > k {
                d.set(i, j);
            }
        }
    }
    transitive_closure(&mut d)?;
    let mut inst = SearchInstance {
        d,
        budget: 0,
        cursor: 0,
    };
    let spent = inst.committed_cost(residual);
    inst.budget = (k as i64).saturating_sub(spent.min(i64::MAX as u64) as i64);
    Ok(inst)
}

/// Best leaf seen so far; `budget` starts at `i64::MIN` and only grows.
#[derive(Debug, Clone)]
pub struct BestSolution {
    pub budget: i64,
    pub precedence: Option<PrecedenceMatrix>,
}

impl Default for BestSolution {
    fn default() -> Self {
        BestSolution {
            budget: i64::MIN,
            precedence: None,
        }
    }
}

impl BestSolution {
    pub fn offer(&mut self, leaf: &SearchInstance) -> bool {
        if leaf.budget > self.budget {
            self.budget = leaf.budget;
            self.precedence = Some(leaf.d.clone());
            true
        } else {
            false
        }
    }

    pub fn found(&self) -> bool {
        self.budget >= 0
    }
}

/// Depth-first search below `root`: `commit(a, b)` before `commit(b, a)`.
/// Subtrees whose budget is negative, or no better than the best leaf, are
/// skipped.
pub fn search_sequential(
    root: SearchInstance,
    ctx: &SearchContext,
    best: &mut BestSolution,
    deadline: &Deadline,
) -> Result<()> {
    let mut pending: Vec<(SearchInstance, usize, usize)> = Vec::new();
    let mut next = Some(root);
    let mut visited = 0u64;
    loop {
        let mut node = match next.take() {
            Some(node) => node,
            None => match pending.pop() {
                Some((parent, a, b)) => parent.commit_into(b, a, ctx),
                None => return Ok(()),
            },
        };
        visited += 1;
        if visited.is_multiple_of(DEADLINE_POLL) && deadline.expired() {
            return Err(OscmError::Timeout);
        }
        if node.budget < 0 || node.budget <= best.budget {
            continue;
        }
        match node.find_choice(ctx) {
            None => {
                best.offer(&node);
            }
            Some((a, b)) => {
                next = Some(node.commit(a, b, ctx));
                pending.push((node, a, b));
            }
        }
    }
}
