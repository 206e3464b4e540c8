//! Cholesky factor of an active-set Gram matrix with rank-one insert and
//! delete.
//!
//! Row `i` of the factor stores the `i + 1` entries of `L[i, 0..=i]`.
//! Deleting a variable removes its row and restores the triangle with
//! Givens rotations applied from the right, which leaves `L·Lᵀ` unchanged.

#[derive(Clone, Debug, Default)]
pub struct UpdatableCholesky {
    rows: Vec<Vec<f64>>,
    updates: usize,
}

impl UpdatableCholesky {
    pub fn new() -> Self {
        Self::default()
    }

    /// Factorizes `gram` (dimension `dim`) from scratch. Returns the
    /// failing pivot index if the matrix is not numerically positive definite.
    pub fn from_gram(dim: usize, gram: impl Fn(usize, usize) -> f64) -> Result<Self, usize> {
        let mut chol = Self::new();
        for j in 0..dim {
            let cross: Vec<f64> = (0..j).map(|i| gram(i, j)).collect();
            chol.insert(&cross, gram(j, j)).map_err(|_| j)?;
        }
        chol.updates = 0;
        Ok(chol)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Updates since the last full factorization.
    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().enumerate().map(|(i, r)| r[i])
    }

    /// `(max diag / min diag)²`, a cheap lower bound on the 2-norm condition
    /// number of the factored matrix.
    pub fn condition_estimate(&self) -> f64 {
        let (lo, hi) = self
            .diagonal()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if self.rows.is_empty() {
            1.0
        } else if lo <= 0.0 {
            f64::INFINITY
        } else {
            (hi / lo).powi(2)
        }
    }

    /// Appends a variable whose Gram entries against the current variables
    /// are `cross` and whose squared norm is `diag`. On failure the factor
    /// is unchanged and the non-positive squared pivot is returned.
    pub fn insert(&mut self, cross: &[f64], diag: f64) -> Result<(), f64> {
        assert_eq!(cross.len(), self.dim(), "cross length must equal the factor dimension");
        let mut row = self.forward(cross);
        let pivot_sq = diag - row.iter().map(|w| w * w).sum::<f64>();
        if !(pivot_sq > 0.0) {
            return Err(pivot_sq);
        }
        row.push(pivot_sq.sqrt());
        self.rows.push(row);
        self.updates += 1;
        Ok(())
    }

    /// Removes the variable at position `k`.
    pub fn remove(&mut self, k: usize) {
        assert!(k < self.dim());
        self.rows.remove(k);
        let dim = self.rows.len();
        // rows k.. now carry one entry above the diagonal
        for j in k..dim {
            let a = self.rows[j][j];
            let b = self.rows[j][j + 1];
            let r = a.hypot(b);
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
            for i in j..dim {
                let row = &mut self.rows[i];
                let (x, y) = (row[j], row[j + 1]);
                row[j] = c * x + s * y;
                row[j + 1] = -s * x + c * y;
            }
            self.rows[j].truncate(j + 1);
            if self.rows[j][j] < 0.0 {
                for i in j..dim {
                    self.rows[i][j] = -self.rows[i][j];
                }
            }
        }
        self.updates += 1;
    }

    /// Solves `L·z = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(b.len() + 1);
        for (i, row) in self.rows.iter().enumerate() {
            let s: f64 = row[..i].iter().zip(&z).map(|(l, z)| l * z).sum();
            z.push((b[i] - s) / row[i]);
        }
        z
    }

    /// Solves `(L·Lᵀ)·x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.forward(b);
        for i in (0..x.len()).rev() {
            let mut s = x[i];
            for (k, row) in self.rows.iter().enumerate().skip(i + 1) {
                s -= row[i] * x[k];
            }
            x[i] = s / self.rows[i][i];
        }
        x
    }

    /// Dense `L·Lᵀ`, for tests and diagnostics.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut g = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.rows[i][k] * self.rows[j][k]).sum();
                g[i][j] = s;
                g[j][i] = s;
            }
        }
        g
    }
}
