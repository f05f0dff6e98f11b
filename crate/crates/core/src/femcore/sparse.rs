//! Sparse symmetric positive definite factorization: supervariable minimum
//! degree ordering followed by an up-looking Cholesky on the elimination tree.

use crate::error::{Error, Result};

/// Symmetric matrix assembled from `(row, col, value)` contributions; only one
/// triangle needs to be supplied, duplicates are summed.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    pub n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    /// Adds `v` at `(i, j)`; the entry is stored in the lower triangle.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.entries.push((r as u32, c as u32, v));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Compressed sparse column storage of the upper triangle of a symmetric
/// matrix (`row ≤ col` in every column), rows sorted.
#[derive(Clone, Debug)]
pub struct SymCsc {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rows: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SymCsc {
    /// Builds `P A Pᵀ` where `perm[new] = old`.
    pub fn from_triplets(t: &Triplets, perm: &[usize]) -> Self {
        let n = t.n;
        assert_eq!(perm.len(), n);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut mapped: Vec<(usize, usize, f64)> = t
            .entries
            .iter()
            .map(|&(r, c, v)| {
                let (a, b) = (inv[r as usize], inv[c as usize]);
                if a <= b {
                    (b, a, v)
                } else {
                    (a, b, v)
                }
            })
            .collect();
        // Column-major upper triangle: sort by (col, row).
        mapped.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut colptr = vec![0usize; n + 1];
        let mut rows = Vec::with_capacity(mapped.len());
        let mut vals: Vec<f64> = Vec::with_capacity(mapped.len());
        let mut last: Option<(usize, usize)> = None;
        for (c, r, v) in mapped {
            if last == Some((c, r)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((c, r));
            rows.push(r);
            vals.push(v);
            colptr[c + 1] += 1;
        }
        for c in 0..n {
            colptr[c + 1] += colptr[c];
        }
        Self {
            n,
            colptr,
            rows,
            vals,
        }
    }
}

/// Minimum degree ordering on a graph of supervariables. `groups[g]` lists
/// the scalar variables of supervariable `g` and `adj[g]` its neighbours.
/// Returns the scalar permutation `perm[new] = old`.
pub fn minimum_degree(groups: &[Vec<usize>], adj: &[Vec<usize>]) -> Vec<usize> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let ng = groups.len();
    let weight: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    let mut nbrs: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(g, a)| {
            let mut v: Vec<usize> = a.iter().copied().filter(|&x| x != g).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let degree = |nb: &Vec<usize>| nb.iter().map(|&x| weight[x]).sum::<usize>();
    let mut deg: Vec<usize> = nbrs.iter().map(degree).collect();
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..ng).map(|g| Reverse((deg[g], g))).collect();
    let mut done = vec![false; ng];
    let mut perm = Vec::with_capacity(weight.iter().sum());
    let mut merged = Vec::new();
    while let Some(Reverse((d, g))) = heap.pop() {
        if done[g] || d != deg[g] {
            continue;
        }
        done[g] = true;
        perm.extend_from_slice(&groups[g]);
        let clique = std::mem::take(&mut nbrs[g]);
        for &u in &clique {
            merged.clear();
            let (a, b) = (&nbrs[u], &clique);
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let x = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
                    let x = a[i];
                    if j < b.len() && b[j] == x {
                        j += 1;
                    }
                    i += 1;
                    x
                } else {
                    let x = b[j];
                    j += 1;
                    x
                };
                if x != u && x != g && !done[x] {
                    merged.push(x);
                }
            }
            std::mem::swap(&mut nbrs[u], &mut merged);
            deg[u] = degree(&nbrs[u]);
            heap.push(Reverse((deg[u], u)));
        }
    }
    perm
}

/// `L Lᵀ = P A Pᵀ` with `L` stored column-wise, diagonal first in each column.
#[derive(Clone, Debug)]
pub struct SparseCholesky {
    pub n: usize,
    /// `perm[new] = old`.
    pub perm: Vec<usize>,
    pub inv: Vec<usize>,
    parent: Vec<usize>,
    colptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

const NONE: usize = usize::MAX;

fn etree(a: &SymCsc) -> Vec<usize> {
    let n = a.n;
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for p in a.colptr[k]..a.colptr[k + 1] {
            let mut i = a.rows[p];
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), written to
/// `stack[top..]` in topological order.
fn ereach(
    a: &SymCsc,
    k: usize,
    parent: &[usize],
    flag: &mut [usize],
    stack: &mut [usize],
) -> usize {
    let n = a.n;
    let mut top = n;
    flag[k] = k;
    for p in a.colptr[k]..a.colptr[k + 1] {
        let mut i = a.rows[p];
        if i > k {
            continue;
        }
        let mut len = 0;
        while flag[i] != k {
            stack[len] = i;
            len += 1;
            flag[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

impl SparseCholesky {
    /// Factors the matrix given by `t` under the ordering `perm[new] = old`.
    pub fn factor(t: &Triplets, perm: Vec<usize>) -> Result<Self> {
        let a = SymCsc::from_triplets(t, &perm);
        let n = a.n;
        let parent = etree(&a);
        let mut flag = vec![NONE; n];
        let mut stack = vec![0usize; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(&a, k, &parent, &mut flag, &mut stack);
            for &j in &stack[top..n] {
                counts[j] += 1;
            }
        }
        let mut colptr = vec![0usize; n + 1];
        for k in 0..n {
            colptr[k + 1] = colptr[k] + counts[k];
        }
        let nnz = colptr[n];
        let mut rows = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut next: Vec<usize> = colptr[..n].to_vec();
        let mut x = vec![0.0; n];
        flag.fill(NONE);
        for k in 0..n {
            let top = ereach(&a, k, &parent, &mut flag, &mut stack);
            for p in a.colptr[k]..a.colptr[k + 1] {
                let i = a.rows[p];
                if i <= k {
                    x[i] += a.vals[p];
                }
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &j in &stack[top..n] {
                let lkj = x[j] / vals[colptr[j]];
                x[j] = 0.0;
                for p in colptr[j] + 1..next[j] {
                    x[rows[p]] -= vals[p] * lkj;
                }
                d -= lkj * lkj;
                rows[next[j]] = k;
                vals[next[j]] = lkj;
                next[j] += 1;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Singular(format!(
                    "pivot {k} of {n} is not positive ({d:e})"
                )));
            }
            rows[next[k]] = k;
            vals[next[k]] = d.sqrt();
            next[k] += 1;
        }
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        Ok(Self {
            n,
            perm,
            inv,
            parent,
            colptr,
            rows,
            vals,
        })
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// In-place `y ← L⁻¹ y` on a vector already in permuted order.
    pub fn forward(&self, y: &mut [f64]) {
        for j in 0..self.n {
            if y[j] == 0.0 {
                continue;
            }
            let r = self.colptr[j];
            y[j] /= self.vals[r];
            let yj = y[j];
            for p in r + 1..self.colptr[j + 1] {
                y[self.rows[p]] -= self.vals[p] * yj;
            }
        }
    }

    /// In-place `y ← L⁻ᵀ y` on a vector in permuted order.
    pub fn backward(&self, y: &mut [f64]) {
        for j in (0..self.n).rev() {
            let r = self.colptr[j];
            let mut s = y[j];
            for p in r + 1..self.colptr[j + 1] {
                s -= self.vals[p] * y[self.rows[p]];
            }
            y[j] = s / self.vals[r];
        }
    }

    /// Solves `A x = b` in the original ordering.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        self.forward(&mut y);
        self.backward(&mut y);
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// `L⁻¹ P b` for a sparse `b` given in original indices. Returns the
    /// nonzero pattern (ascending, permuted indices) and writes values into
    /// `work`, which must be zero on entry and is left holding the result.
    pub fn forward_sparse(
        &self,
        b: &[(usize, f64)],
        work: &mut [f64],
        mark: &mut [bool],
    ) -> Vec<usize> {
        let mut pattern = Vec::new();
        for &(i, v) in b {
            let mut j = self.inv[i];
            work[j] += v;
            while j != NONE && !mark[j] {
                mark[j] = true;
                pattern.push(j);
                j = self.parent[j];
            }
        }
        pattern.sort_unstable();
        for &j in &pattern {
            mark[j] = false;
            let r = self.colptr[j];
            work[j] /= self.vals[r];
            let yj = work[j];
            if yj == 0.0 {
                continue;
            }
            for p in r + 1..self.colptr[j + 1] {
                work[self.rows[p]] -= self.vals[p] * yj;
            }
        }
        pattern
    }
}
