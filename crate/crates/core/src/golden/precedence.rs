use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{OscmError, Result};
use crate::graph::Permutation;

const WORD: usize = u64::BITS as usize;

/// Square boolean matrix with rows packed into 64-bit words.
/// `get(i, j)` means "i is placed before j".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecedenceMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl PrecedenceMatrix {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(WORD);
        PrecedenceMatrix {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / WORD] >> (j % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / WORD] |= 1 << (j % WORD);
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.bits[i * self.words..(i + 1) * self.words]
    }

    /// `row(dst) |= row(src)`.
    fn or_row(&mut self, dst: usize, src: usize) {
        if dst == src {
            return;
        }
        let w = self.words;
        let (d, s) = if dst < src {
            let (lo, hi) = self.bits.split_at_mut(src * w);
            (&mut lo[dst * w..(dst + 1) * w], &hi[..w])
        } else {
            let (lo, hi) = self.bits.split_at_mut(dst * w);
            (&mut hi[..w], &lo[src * w..(src + 1) * w])
        };
        for (a, b) in d.iter_mut().zip(s) {
            *a |= *b;
        }
    }

    /// All ordered pairs `(i, j)` with `get(i, j)`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ones(self.row(i)).map(move |j| (i, j)))
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Indices of the set bits of a packed row, ascending.
pub(crate) fn ones(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(w, &word)| {
        let mut bits = word;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(w * WORD + b)
        })
    })
}

/// Order compatible with every `get(i, j)` pair; among the vertices free to
/// go next the smallest index is taken.
pub fn topological_sort(d: &PrecedenceMatrix) -> Result<Permutation> {
    let n = d.n();
    let mut indegree = vec![0usize; n];
    for i in 0..n {
        for j in ones(d.row(i)) {
            indegree[j] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| indegree[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for j in ones(d.row(v)) {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(Reverse(j));
            }
        }
    }
    if order.len() != n {
        return Err(OscmError::Cycle);
    }
    Permutation::from_order(order)
}

/// Closes `d` under transitivity. Rows are processed in reverse topological
/// order, so every successor row is already closed when it is OR-ed in.
pub fn transitive_closure(d: &mut PrecedenceMatrix) -> Result<()> {
    let sorted = topological_sort(d)?.into_order();
    let n = sorted.len();
    for i in (0..n).rev() {
        let u = sorted[i];
        for &v in &sorted[i + 1..] {
            if d.get(u, v) {
                d.or_row(u, v);
            }
        }
    }
    Ok(())
}
