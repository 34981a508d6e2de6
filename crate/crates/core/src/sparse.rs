//! Symmetric positive definite sparse solver.
//!
//! Reverse Cuthill–McKee reordering followed by an envelope (skyline)
//! Cholesky factorization. Mesh Laplacians and LSCM normal equations have
//! narrow envelopes after RCM, so fill stays close to `n · bandwidth`.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};

/// Accumulates the lower triangle of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricBuilder {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SymmetricBuilder {
    pub fn new(n: usize) -> Self {
        SymmetricBuilder {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `value` at `(i, j)` and, implicitly, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let key = if i >= j { (i, j) } else { (j, i) };
        *self.entries.entry(key).or_insert(0.0) += value;
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (&(i, j), &v) in &self.entries {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn factor(&self) -> Result<Cholesky> {
        Cholesky::new(self)
    }
}

fn rcm_order(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adj[v].len(), v));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope Cholesky factor `P A Pᵀ = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    /// `perm[new] = old`.
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl Cholesky {
    fn new(a: &SymmetricBuilder) -> Result<Self> {
        let n = a.n;
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in a.entries.keys() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let perm = rcm_order(n, &adj);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j) in a.entries.keys() {
            let (pi, pj) = (inv[i], inv[j]);
            let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
            first[r] = first[r].min(c);
        }
        let mut offset = Vec::with_capacity(n + 1);
        let mut total = 0;
        for r in 0..n {
            offset.push(total);
            total += r - first[r] + 1;
        }
        offset.push(total);
        let mut values = vec![0.0; total];
        for (&(i, j), &v) in &a.entries {
            let (pi, pj) = (inv[i], inv[j]);
            let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
            values[offset[r] + c - first[r]] += v;
        }

        let mut chol = Cholesky {
            perm,
            first,
            offset,
            values,
        };
        chol.factorize()?;
        Ok(chol)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.values[self.offset[r] + c - self.first[r]]
    }

    fn factorize(&mut self) -> Result<()> {
        let n = self.first.len();
        let scale = (0..n)
            .map(|r| self.at(r, r).abs())
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            let fi = self.first[i];
            for j in fi..i {
                let fj = self.first[j];
                let start = fi.max(fj);
                let mut s = self.at(i, j);
                let ri = self.offset[i] - fi;
                let rj = self.offset[j] - fj;
                for k in start..j {
                    s -= self.values[ri + k] * self.values[rj + k];
                }
                let d = self.values[self.offset[j] + j - fj];
                self.values[ri + j] = s / d;
            }
            let ri = self.offset[i] - fi;
            let mut d = self.values[ri + i];
            for k in fi..i {
                d -= self.values[ri + k] * self.values[ri + k];
            }
            if !(d > 1e-14 * scale) {
                return Err(Error::Singular(format!(
                    "pivot {d:.3e} at row {i} of {n} is not positive"
                )));
            }
            self.values[ri + i] = d.sqrt();
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.first.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.offset[i] - fi;
            let mut s = y[i];
            for k in fi..i {
                s -= self.values[ri + k] * y[k];
            }
            y[i] = s / self.values[ri + i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let ri = self.offset[i] - fi;
            y[i] /= self.values[ri + i];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.values[ri + k] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
