//! Sparse symmetric LDL^T factorization (up-looking, elimination tree).
//!
//! Conductance matrices of grounded dc networks are symmetric positive
//! definite; no pivoting or reordering is needed at the sizes this crate
//! targets.

/// Symmetric matrix stored as upper-triangle CSC with sorted row indices.
pub struct SparseSym {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Build from (row, col, value) triplets; entries may repeat (summed) and
    /// either triangle may be given — (i, j) and (j, i) address the same slot.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in entries {
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            cols[c].push((r, v));
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in &mut cols {
            col.sort_unstable_by_key(|&(r, _)| r);
            let mut last = usize::MAX;
            for &(r, v) in col.iter() {
                if r == last {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                    last = r;
                }
            }
            col_ptr.push(row_idx.len());
        }
        SparseSym {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// L D L^T factors; L is unit lower triangular, stored by column.
pub struct LdltFactor {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

/// Factor a symmetric positive definite matrix. Returns `None` when a pivot
/// drops below `pivot_tol` (singular or indefinite input).
pub fn factor(a: &SparseSym, pivot_tol: f64) -> Option<LdltFactor> {
    let n = a.n;
    let mut parent = vec![usize::MAX; n];
    let mut lnz = vec![0usize; n];
    let mut flag = vec![usize::MAX; n];

    // Symbolic: elimination tree and per-column counts of L.
    for k in 0..n {
        flag[k] = k;
        for p in a.col_ptr[k]..a.col_ptr[k + 1] {
            let mut i = a.row_idx[p];
            while i < k && flag[i] != k {
                if parent[i] == usize::MAX {
                    parent[i] = k;
                }
                lnz[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        }
    }

    let mut lp = vec![0usize; n + 1];
    for k in 0..n {
        lp[k + 1] = lp[k] + lnz[k];
    }
    let nnz = lp[n];
    let mut li = vec![0usize; nnz];
    let mut lx = vec![0f64; nnz];
    let mut d = vec![0f64; n];
    let mut y = vec![0f64; n];
    let mut pattern = vec![0usize; n];
    let mut used = vec![0usize; n];
    let mut flag = vec![usize::MAX; n];

    // Numeric: solve one row of L per step against the columns found by
    // walking the elimination tree.
    for k in 0..n {
        let mut top = n;
        flag[k] = k;
        y[k] = 0.0;
        for p in a.col_ptr[k]..a.col_ptr[k + 1] {
            let i = a.row_idx[p];
            y[i] += a.values[p];
            let mut len = 0;
            let mut ii = i;
            while ii < k && flag[ii] != k {
                pattern[len] = ii;
                len += 1;
                flag[ii] = k;
                ii = parent[ii];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                pattern[top] = pattern[len];
            }
        }
        d[k] = y[k];
        y[k] = 0.0;
        for s in top..n {
            let i = pattern[s];
            let yi = y[i];
            y[i] = 0.0;
            let p2 = lp[i] + used[i];
            for p in lp[i]..p2 {
                y[li[p]] -= lx[p] * yi;
            }
            let l_ki = yi / d[i];
            d[k] -= l_ki * yi;
            li[p2] = k;
            lx[p2] = l_ki;
            used[i] += 1;
        }
        if d[k] <= pivot_tol {
            return None;
        }
    }

    Some(LdltFactor { n, lp, li, lx, d })
}

impl LdltFactor {
    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for j in 0..self.n {
            let bj = b[j];
            for p in self.lp[j]..self.lp[j + 1] {
                b[self.li[p]] -= self.lx[p] * bj;
            }
        }
        for j in 0..self.n {
            b[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            let mut bj = b[j];
            for p in self.lp[j]..self.lp[j + 1] {
                bj -= self.lx[p] * b[self.li[p]];
            }
            b[j] = bj;
        }
    }
}
