//! Sparse direct solver: reverse Cuthill-McKee reordering followed by a
//! banded LU factorization with partial pivoting.

use std::collections::VecDeque;

use super::CsrMatrix;

/// Reverse Cuthill-McKee ordering of the (symmetrized) sparsity pattern.
///
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for (c, _) in a.row(r) {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        let start = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut current = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(current, adj);
        let depth = level.iter().filter(|&&l| l != usize::MAX).max().copied().unwrap_or(0);
        if depth <= ecc && current != seed {
            break;
        }
        ecc = depth;
        let far = (0..adj.len())
            .filter(|&i| level[i] == depth)
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        if far == current {
            break;
        }
        current = far;
    }
    current
}

/// LU factors of a row/column-permuted band matrix.
///
/// The matrix `P A Pᵀ` (with `P` the fill-reducing permutation) is factored
/// with row interchanges restricted to the band, LINPACK style: the
/// multipliers of step `k` are stored unswapped and replayed in order.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// Row `i` stores columns `i - kl ..= i + kl + ku`.
    band: Vec<f64>,
    /// `lower[k * kl + j]` is the multiplier eliminating row `k + 1 + j` at step `k`.
    lower: Vec<f64>,
    pivots: Vec<usize>,
    perm: Vec<usize>,
    max_pivot: f64,
    min_pivot: f64,
    det_sign: f64,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> BandedLu {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_permutation(a, perm)
    }

    pub fn factor_with_permutation(a: &CsrMatrix, perm: Vec<usize>) -> BandedLu {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "BandedLu needs a square matrix");
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for r in 0..n {
            for (c, _) in a.row(r) {
                let (i, j) = (inv[r], inv[c]);
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            band: vec![0.0; n * width],
            lower: vec![0.0; n * kl.max(1)],
            pivots: vec![0; n],
            perm,
            max_pivot: 0.0,
            min_pivot: f64::INFINITY,
            det_sign: 1.0,
        };
        for r in 0..n {
            for (c, v) in a.row(r) {
                let idx = lu.idx(inv[r], inv[c]);
                lu.band[idx] += v;
            }
        }
        // entry scale keeps the estimate meaningful for tiny systems
        lu.max_pivot = lu.band.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        lu.eliminate();
        lu
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    fn eliminate(&mut self) {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            // partial pivoting within the band
            let mut p = k;
            let mut best = self.band[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.band[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.pivots[k] = p;
            if p != k {
                self.det_sign = -self.det_sign;
                for j in k..=last_col {
                    let (ik, ip) = (self.idx(k, j), self.idx(p, j));
                    self.band.swap(ik, ip);
                }
            }
            let pivot = self.band[self.idx(k, k)];
            let abs = pivot.abs();
            self.max_pivot = self.max_pivot.max(abs);
            self.min_pivot = self.min_pivot.min(abs);
            if pivot < 0.0 {
                self.det_sign = -self.det_sign;
            }
            if pivot == 0.0 {
                self.det_sign = 0.0;
                continue;
            }
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let factor = self.band[ik] / pivot;
                self.band[ik] = 0.0;
                self.lower[k * kl.max(1) + (i - k - 1)] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.idx(k, j);
                    let ij = self.idx(i, j);
                    self.band[ij] -= factor * self.band[kj];
                }
            }
        }
        if n == 0 {
            self.min_pivot = 0.0;
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Ratio of the largest pivot or matrix entry to the smallest pivot
    /// magnitude. Cheap proxy for the condition number; infinite when a pivot
    /// vanished exactly.
    pub fn condition_estimate(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        if self.min_pivot == 0.0 {
            f64::INFINITY
        } else {
            self.max_pivot / self.min_pivot
        }
    }

    /// Smallest pivot magnitude encountered.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Sign of the determinant of the original matrix (0 if exactly singular).
    pub fn determinant_sign(&self) -> f64 {
        self.det_sign
    }

    /// Solves `A x = b` for the original (unpermuted) matrix.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let (kl, ku) = (self.kl, self.ku);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                y.swap(k, p);
            }
            let yk = y[k];
            if yk != 0.0 {
                let last_row = (k + kl).min(n - 1);
                for i in k + 1..=last_row {
                    y[i] -= self.lower[k * kl.max(1) + (i - k - 1)] * yk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let mut acc = y[k];
            for j in k + 1..=last_col {
                acc -= self.band[self.idx(k, j)] * y[j];
            }
            y[k] = acc / self.band[self.idx(k, k)];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
