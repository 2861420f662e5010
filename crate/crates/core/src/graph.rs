//! Instance model for one-sided crossing minimization.
//!
//! The fixed layer holds vertices `0..n_fixed` in their drawn order; the free
//! layer holds vertices `0..n_free` whose order is chosen by a solver. Files use
//! the PACE `ocr` convention: fixed ids `1..=n_fixed`, free ids
//! `n_fixed+1..=n_fixed+n_free`.

use std::fmt::Write as _;
use std::io::BufRead;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OscmError, Result};

/// Largest free layer the exhaustive solver accepts by default.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteInstance {
    n_fixed: usize,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl BipartiteInstance {
    /// Builds an instance from per-free-vertex neighbor lists. Lists are
    /// sorted; duplicates and out-of-range neighbors are rejected.
    pub fn from_adjacency(n_fixed: usize, mut adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let mut edge_count = 0;
        for (a, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(&b) = list.iter().find(|&&b| b >= n_fixed) {
                return Err(OscmError::InvalidInstance(format!(
                    "free vertex {a} has neighbor {b} outside 0..{n_fixed}"
                )));
            }
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(OscmError::InvalidInstance(format!(
                    "duplicate edge between free vertex {a} and fixed vertex {}",
                    w[0]
                )));
            }
            edge_count += list.len();
        }
        Ok(BipartiteInstance {
            n_fixed,
            adjacency,
            edge_count,
        })
    }

    pub fn n_free(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n_fixed(&self) -> usize {
        self.n_fixed
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbors of free vertex `a`.
    pub fn neighbors(&self, a: usize) -> &[usize] {
        &self.adjacency[a]
    }

    pub fn degree(&self, a: usize) -> usize {
        self.adjacency[a].len()
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }
}

/// Parses a PACE `ocr` document.
pub fn parse_instance<R: BufRead>(reader: R) -> Result<BipartiteInstance> {
    let mut header: Option<(usize, usize, usize, usize)> = None;
    let mut adjacency: Vec<Vec<usize>> = Vec::new();
    let mut seen_edges = 0usize;
    let mut last_line = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let err = |message: String| OscmError::Parse {
            line: lineno,
            message,
        };
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(err("duplicate header".into()));
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            if tokens.len() != 5 || tokens[0] != "p" || tokens[1] != "ocr" {
                return Err(err(format!(
                    "expected `p ocr <n_fixed> <n_free> <edges>`, found `{trimmed}`"
                )));
            }
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(format!("header field `{s}` is not a non-negative integer")))
            };
            let (n_fixed, n_free, edges) = (num(tokens[2])?, num(tokens[3])?, num(tokens[4])?);
            adjacency = vec![Vec::new(); n_free];
            header = Some((n_fixed, n_free, edges, lineno));
            continue;
        }
        let Some((n_fixed, n_free, _, _)) = header else {
            return Err(err("edge line before `p ocr` header".into()));
        };
        let mut tokens = trimmed.split_whitespace();
        let (Some(u), Some(v), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(err(format!("expected `<fixed> <free>`, found `{trimmed}`")));
        };
        let parse_id = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("vertex id `{s}` is not a positive integer")))
        };
        let (fixed, free) = (parse_id(u)?, parse_id(v)?);
        if fixed == 0 || fixed > n_fixed {
            return Err(err(format!(
                "fixed endpoint {fixed} outside declared range 1..={n_fixed}"
            )));
        }
        if free <= n_fixed || free > n_fixed + n_free {
            return Err(err(format!(
                "free endpoint {free} outside declared range {}..={}",
                n_fixed + 1,
                n_fixed + n_free
            )));
        }
        let list = &mut adjacency[free - n_fixed - 1];
        if list.contains(&(fixed - 1)) {
            return Err(err(format!("duplicate edge {fixed} {free}")));
        }
        list.push(fixed - 1);
        seen_edges += 1;
    }

    let Some((n_fixed, _, edges, header_line)) = header else {
        return Err(OscmError::Parse {
            line: last_line.max(1),
            message: "missing `p ocr` header".into(),
        });
    };
    if seen_edges != edges {
        return Err(OscmError::Parse {
            line: header_line,
            message: format!("header declares {edges} edges but {seen_edges} were given"),
        });
    }
    BipartiteInstance::from_adjacency(n_fixed, adjacency)
}

pub fn parse_instance_str(text: &str) -> Result<BipartiteInstance> {
    parse_instance(text.as_bytes())
}

pub fn serialize_instance(inst: &BipartiteInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "p ocr {} {} {}",
        inst.n_fixed(),
        inst.n_free(),
        inst.edge_count()
    );
    for (a, list) in inst.adjacency().iter().enumerate() {
        for &b in list {
            let _ = writeln!(out, "{} {}", b + 1, inst.n_fixed() + a + 1);
        }
    }
    out
}

/// Free vertices in solved order, original PACE ids, one per line.
pub fn serialize_solution(inst: &BipartiteInstance, result: &SolveResult) -> String {
    let mut out = String::new();
    for &a in result.permutation.order() {
        let _ = writeln!(out, "{}", inst.n_fixed() + a + 1);
    }
    out
}

/// Reads a PACE solution file into a permutation of the free layer.
pub fn parse_solution<R: BufRead>(inst: &BipartiteInstance, reader: R) -> Result<Permutation> {
    let lo = inst.n_fixed() + 1;
    let hi = inst.n_fixed() + inst.n_free();
    let mut order = Vec::with_capacity(inst.n_free());
    let mut seen = vec![false; inst.n_free()];
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let id: usize = trimmed.parse().map_err(|_| {
            OscmError::InvalidSolution(format!("line {}: `{trimmed}` is not a vertex id", idx + 1))
        })?;
        if id < lo || id > hi {
            return Err(OscmError::InvalidSolution(format!(
                "line {}: vertex {id} is not a free vertex ({lo}..={hi})",
                idx + 1
            )));
        }
        if std::mem::replace(&mut seen[id - lo], true) {
            return Err(OscmError::InvalidSolution(format!(
                "line {}: vertex {id} appears more than once",
                idx + 1
            )));
        }
        order.push(id - lo);
    }
    if order.len() != inst.n_free() {
        return Err(OscmError::InvalidSolution(format!(
            "solution lists {} vertices, instance has {} free vertices",
            order.len(),
            inst.n_free()
        )));
    }
    Permutation::from_order(order).map_err(|e| match e {
        OscmError::InvalidPermutation(msg) => OscmError::InvalidSolution(msg),
        other => other,
    })
}

/// Pairwise crossing counts: `get(x, y)` is the number of crossings between
/// the edges of `x` and `y` when `x` is drawn before `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingMatrix {
    n: usize,
    entries: Vec<u64>,
}

impl CrossingMatrix {
    /// Row-major `n * n` entries; the diagonal must be zero.
    pub fn from_entries(n: usize, entries: Vec<u64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(OscmError::InvalidInstance(format!(
                "crossing matrix needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        if (0..n).any(|x| entries[x * n + x] != 0) {
            return Err(OscmError::InvalidInstance(
                "crossing matrix diagonal must be zero".into(),
            ));
        }
        Ok(CrossingMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.entries[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[u64] {
        &self.entries[x * self.n..(x + 1) * self.n]
    }

    /// Column-major copy, so that `transposed()[x * n + y] == get(y, x)`.
    pub fn transposed(&self) -> Vec<u64> {
        let n = self.n;
        let mut t = vec![0; n * n];
        for x in 0..n {
            for y in 0..n {
                t[y * n + x] = self.entries[x * n + y];
            }
        }
        t
    }

    /// Cost of the order `order`, summed pairwise.
    pub fn cost_of_order(&self, order: &[usize]) -> u64 {
        let mut total = 0;
        for (i, &x) in order.iter().enumerate() {
            for &y in &order[i + 1..] {
                total += self.get(x, y);
            }
        }
        total
    }
}

/// Builds the crossing matrix with one merge pass per unordered pair.
pub fn compute_crossing_matrix(inst: &BipartiteInstance) -> CrossingMatrix {
    let n = inst.n_free();
    let mut entries = vec![0u64; n * n];
    for x in 0..n {
        let nx = inst.neighbors(x);
        if nx.is_empty() {
            continue;
        }
        for y in x + 1..n {
            let ny = inst.neighbors(y);
            if ny.is_empty() {
                continue;
            }
            // For each b in N_x count the d in N_y with d < b, and shared endpoints.
            let mut below = 0usize;
            let mut x_before_y = 0u64;
            let mut shared = 0u64;
            for &b in nx {
                while below < ny.len() && ny[below] < b {
                    below += 1;
                }
                x_before_y += below as u64;
                if below < ny.len() && ny[below] == b {
                    shared += 1;
                }
            }
            let total = (nx.len() * ny.len()) as u64;
            entries[x * n + y] = x_before_y;
            entries[y * n + x] = total - x_before_y - shared;
        }
    }
    CrossingMatrix { n, entries }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            order: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut inverse = vec![usize::MAX; n];
        for (pos, &v) in order.iter().enumerate() {
            if v >= n {
                return Err(OscmError::InvalidPermutation(format!(
                    "vertex {v} out of range for {n} vertices"
                )));
            }
            if inverse[v] != usize::MAX {
                return Err(OscmError::InvalidPermutation(format!(
                    "vertex {v} appears more than once"
                )));
            }
            inverse[v] = pos;
        }
        Ok(Permutation { order, inverse })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position of vertex `v`.
    pub fn position(&self, v: usize) -> usize {
        self.inverse[v]
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub permutation: Permutation,
    pub crossings: u64,
}

impl SolveResult {
    /// Pairs an order with its cost recomputed by [`count_crossings`].
    pub fn verified(inst: &BipartiteInstance, order: Vec<usize>) -> Result<Self> {
        let permutation = Permutation::from_order(order)?;
        let crossings = count_crossings(inst, &permutation)?;
        Ok(SolveResult {
            permutation,
            crossings,
        })
    }
}

/// Counts crossings of the drawing directly from the edge list with a
/// Fenwick tree over the fixed layer. Does not use [`CrossingMatrix`].
pub fn count_crossings(inst: &BipartiteInstance, p: &Permutation) -> Result<u64> {
    if p.len() != inst.n_free() {
        return Err(OscmError::InvalidPermutation(format!(
            "permutation has {} vertices, instance has {}",
            p.len(),
            inst.n_free()
        )));
    }
    let m = inst.n_fixed();
    let mut tree = vec![0u64; m + 1];
    let mut inserted = 0u64;
    let mut crossings = 0u64;
    for &a in p.order() {
        let list = inst.neighbors(a);
        for &d in list {
            // Earlier edges ending strictly right of d.
            let mut at_most = 0u64;
            let mut i = d + 1;
            while i > 0 {
                at_most += tree[i];
                i &= i - 1;
            }
            crossings += inserted - at_most;
        }
        for &b in list {
            let mut i = b + 1;
            while i <= m {
                tree[i] += 1;
                i += i & i.wrapping_neg();
            }
        }
        inserted += list.len() as u64;
    }
    Ok(crossings)
}

/// Exhaustive search over all orders in lexicographic order; returns the
/// lexicographically smallest optimum.
pub fn brute_force_solve(inst: &BipartiteInstance, cap: usize) -> Result<SolveResult> {
    let n = inst.n_free();
    if n > cap {
        return Err(OscmError::Capacity {
            what: "brute force free-layer size".into(),
            requested: n as u64,
            limit: cap as u64,
        });
    }
    let mut current = Permutation::identity(n);
    let mut best_order = current.order.clone();
    let mut best = count_crossings(inst, &current)?;
    let mut order = current.order.clone();
    while next_permutation(&mut order) {
        current = Permutation::from_order(order.clone())?;
        let c = count_crossings(inst, &current)?;
        if c < best {
            best = c;
            best_order.clone_from(&order);
        }
    }
    Ok(SolveResult {
        permutation: Permutation::from_order(best_order)?,
        crossings: best,
    })
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Random instance with every (free, fixed) pair present independently.
///
/// The generator is ChaCha8 seeded with `ChaCha8Rng::seed_from_u64(seed)`.
/// Pairs are visited free-major (`a` outer, `b` inner); each draws one `u64`
/// `r` and keeps the edge iff `(r >> 11) * 2^-53 < probability`.
pub fn generate_random_instance(
    n_free: usize,
    n_fixed: usize,
    edge_probability: f64,
    seed: u64,
) -> BipartiteInstance {
    let p = edge_probability.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (1u64 << 53) as f64;
    let adjacency = (0..n_free)
        .map(|_| {
            (0..n_fixed)
                .filter(|_| ((rng.next_u64() >> 11) as f64) * scale < p)
                .collect()
        })
        .collect();
    BipartiteInstance::from_adjacency(n_fixed, adjacency).expect("generated lists are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> BipartiteInstance {
        BipartiteInstance::from_adjacency(2, vec![vec![1], vec![0]]).unwrap()
    }

    #[test]
    fn parses_small_instance() {
        let inst = parse_instance_str("c example\np ocr 2 2 2\n2 3\n1 4\n").unwrap();
        assert_eq!(inst, two_by_two());
        assert_eq!(inst.edge_count(), 2);
    }

    #[test]
    fn parses_edgeless_instance() {
        let inst = parse_instance_str("p ocr 1 1 0\n").unwrap();
        assert_eq!(inst.n_free(), 1);
        assert!(inst.neighbors(0).is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_instance_str("p ocr 2 2 1\n3 3\n").unwrap_err();
        assert!(matches!(err, OscmError::Parse { line: 2, .. }), "{err}");

        let err = parse_instance_str("c\np ocr 2 2 2\n1 3\n1 3\n").unwrap_err();
        assert!(matches!(err, OscmError::Parse { line: 4, .. }), "{err}");

        let err = parse_instance_str("p ocr 2 2 3\n1 3\n").unwrap_err();
        assert!(matches!(err, OscmError::Parse { line: 1, .. }), "{err}");

        let err = parse_instance_str("1 3\n").unwrap_err();
        assert!(matches!(err, OscmError::Parse { line: 1, .. }), "{err}");

        let err = parse_instance_str("p ocr x 2 0\n").unwrap_err();
        assert!(matches!(err, OscmError::Parse { line: 1, .. }), "{err}");

        let err = parse_instance_str("p ocr 2 2 1\n1 5\n").unwrap_err();
        assert!(matches!(err, OscmError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn from_adjacency_rejects_duplicates() {
        assert!(BipartiteInstance::from_adjacency(3, vec![vec![1, 1]]).is_err());
        assert!(BipartiteInstance::from_adjacency(3, vec![vec![3]]).is_err());
    }

    #[test]
    fn crossing_matrix_examples() {
        let c = compute_crossing_matrix(&two_by_two());
        assert_eq!((c.get(0, 1), c.get(1, 0)), (1, 0));

        let inst = BipartiteInstance::from_adjacency(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        let c = compute_crossing_matrix(&inst);
        assert_eq!((c.get(0, 1), c.get(1, 0)), (1, 1));

        let inst =
            BipartiteInstance::from_adjacency(3, vec![vec![0, 2], vec![], vec![1]]).unwrap();
        let c = compute_crossing_matrix(&inst);
        for k in 0..3 {
            assert_eq!(c.get(1, k), 0);
            assert_eq!(c.get(k, 1), 0);
        }
    }

    #[test]
    fn count_crossings_examples() {
        let inst = two_by_two();
        let id = Permutation::from_order(vec![0, 1]).unwrap();
        let rev = Permutation::from_order(vec![1, 0]).unwrap();
        assert_eq!(count_crossings(&inst, &id).unwrap(), 1);
        assert_eq!(count_crossings(&inst, &rev).unwrap(), 0);

        let single = BipartiteInstance::from_adjacency(4, vec![vec![0, 1, 3]]).unwrap();
        assert_eq!(count_crossings(&single, &Permutation::identity(1)).unwrap(), 0);

        assert!(count_crossings(&inst, &Permutation::identity(3)).is_err());
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::from_order(vec![0, 0]).is_err());
        assert!(Permutation::from_order(vec![2, 0]).is_err());
        let p = Permutation::from_order(vec![2, 0, 1]).unwrap();
        assert_eq!(p.position(2), 0);
        assert_eq!(p.position(1), 2);
    }

    #[test]
    fn brute_force_examples() {
        let r = brute_force_solve(&two_by_two(), DEFAULT_BRUTE_FORCE_CAP).unwrap();
        assert_eq!(r.permutation.order(), &[1, 0]);
        assert_eq!(r.crossings, 0);

        let empty = BipartiteInstance::from_adjacency(2, vec![vec![]; 3]).unwrap();
        let r = brute_force_solve(&empty, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        assert_eq!(r.permutation.order(), &[0, 1, 2]);
        assert_eq!(r.crossings, 0);

        let inst = BipartiteInstance::from_adjacency(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(brute_force_solve(&inst, 9).unwrap().crossings, 1);

        let big = generate_random_instance(10, 3, 0.5, 1);
        assert!(matches!(
            brute_force_solve(&big, DEFAULT_BRUTE_FORCE_CAP),
            Err(OscmError::Capacity { .. })
        ));
    }

    #[test]
    fn generator_extremes_and_determinism() {
        assert_eq!(generate_random_instance(5, 7, 0.0, 3).edge_count(), 0);
        assert_eq!(generate_random_instance(5, 7, 1.0, 3).edge_count(), 35);
        let a = serialize_instance(&generate_random_instance(8, 8, 0.4, 42));
        let b = serialize_instance(&generate_random_instance(8, 8, 0.4, 42));
        assert_eq!(a, b);
        let c = serialize_instance(&generate_random_instance(8, 8, 0.4, 43));
        assert_ne!(a, c);
    }

    #[test]
    fn serialization_formats() {
        let inst = two_by_two();
        let result = SolveResult::verified(&inst, vec![1, 0]).unwrap();
        assert_eq!(serialize_solution(&inst, &result), "4\n3\n");

        let empty = BipartiteInstance::from_adjacency(0, vec![]).unwrap();
        assert_eq!(serialize_instance(&empty), "p ocr 0 0 0\n");
        assert_eq!(parse_instance_str(&serialize_instance(&empty)).unwrap(), empty);
    }

    #[test]
    fn solution_parsing() {
        let inst = two_by_two();
        let p = parse_solution(&inst, "c note\n4\n3\n".as_bytes()).unwrap();
        assert_eq!(p.order(), &[1, 0]);
        assert!(matches!(
            parse_solution(&inst, "4\n4\n".as_bytes()),
            Err(OscmError::InvalidSolution(_))
        ));
        assert!(parse_solution(&inst, "2\n3\n".as_bytes()).is_err());
        assert!(parse_solution(&inst, "3\n".as_bytes()).is_err());
    }
}
