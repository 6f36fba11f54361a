//! Dense two-phase primal simplex for small standard-form programs
//!
//! ```text
//! minimize c^T x  subject to  A x = b,  x >= 0
//! ```
//!
//! Pricing is Dantzig's rule (most negative reduced cost). After a run of
//! degenerate pivots the solver switches to Bland's rule, which cannot cycle,
//! and stays there until the objective moves again.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex hit the iteration cap of {cap} pivots")]
    IterationLimit { cap: usize },
    #[error("constraint matrix has {found} entries, expected {rows}x{cols}")]
    Shape { rows: usize, cols: usize, found: usize },
    #[error("non-finite input to the simplex")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values of the structural variables.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Simplex multipliers `y` with `c_j - y^T A_j >= 0` at optimality, one per
    /// original row and in the original sign convention.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

/// A standard-form program with a dense row-major constraint matrix.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    pub pivot_tol: f64,
    pub cost_tol: f64,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_pivots: 10_000, pivot_tol: 1e-11, cost_tol: 1e-12, degenerate_streak: 16 }
    }
}

struct Tableau {
    rows: usize,
    /// structural + artificial columns; the rhs is stored in `rhs`
    width: usize,
    structural: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    obj: Vec<f64>,
    obj_rhs: f64,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.t[row * w + col];
        let inv = 1.0 / p;
        for v in &mut self.t[row * w..(row + 1) * w] {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        self.t[row * w + col] = 1.0;
        let (pivot_row, pivot_rhs) = (self.t[row * w..(row + 1) * w].to_vec(), self.rhs[row]);
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = self.t[i * w + col];
            if f != 0.0 {
                let dst = &mut self.t[i * w..(i + 1) * w];
                for (d, s) in dst.iter_mut().zip(&pivot_row) {
                    *d -= f * s;
                }
                dst[col] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for (d, s) in self.obj.iter_mut().zip(&pivot_row) {
                *d -= f * s;
            }
            self.obj[col] = 0.0;
            self.obj_rhs -= f * pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations on the current objective row. Columns at or
    /// beyond `enter_limit` are never allowed to enter the basis.
    fn optimize(
        &mut self,
        enter_limit: usize,
        opts: &SimplexOptions,
        pivots: &mut usize,
    ) -> Result<LpStatus, LpError> {
        let mut bland = false;
        let mut streak = 0usize;
        // Columns whose only positive entries are below the pivot tolerance;
        // cleared after every pivot.
        let mut blocked = vec![false; enter_limit];
        loop {
            let entering = if bland {
                (0..enter_limit).find(|&j| !blocked[j] && self.obj[j] < -opts.cost_tol)
            } else {
                let mut best = None;
                let mut best_val = -opts.cost_tol;
                for j in 0..enter_limit {
                    if !blocked[j] && self.obj[j] < best_val {
                        best_val = self.obj[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = entering else {
                return Ok(LpStatus::Optimal);
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > opts.pivot_tol {
                    let ratio = self.rhs[i].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-14
                                || (ratio <= best_ratio + 1e-14 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(row) = leave else {
                if (0..self.rows).any(|i| self.at(i, col) > 0.0) {
                    blocked[col] = true;
                    continue;
                }
                return Ok(LpStatus::Unbounded);
            };

            if *pivots >= opts.max_pivots {
                return Err(LpError::IterationLimit { cap: opts.max_pivots });
            }
            *pivots += 1;
            let before = self.obj_rhs;
            self.pivot(row, col);
            blocked.fill(false);
            if (self.obj_rhs - before).abs() <= 1e-15 * (1.0 + before.abs()) {
                streak += 1;
                if streak >= opts.degenerate_streak {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
        }
    }
}

/// Solves the program with the two-phase method. An artificial variable is
/// attached to every row, so no initial basis is required from the caller.
pub fn solve(lp: &StandardForm, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    let (m, n) = (lp.rows, lp.cols);
    if lp.a.len() != m * n || lp.b.len() != m || lp.c.len() != n {
        return Err(LpError::Shape { rows: m, cols: n, found: lp.a.len() });
    }
    if lp.a.iter().chain(&lp.b).chain(&lp.c).any(|v| !v.is_finite()) {
        return Err(LpError::NonFinite);
    }

    let width = n + m;
    let mut sign = vec![1.0; m];
    let mut t = vec![0.0; m * width];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        if lp.b[i] < 0.0 {
            sign[i] = -1.0;
        }
        for j in 0..n {
            t[i * width + j] = sign[i] * lp.a[i * n + j];
        }
        t[i * width + n + i] = 1.0;
        rhs[i] = sign[i] * lp.b[i];
    }
    // phase one: minimize the sum of artificials
    let mut obj = vec![0.0; width];
    let mut obj_rhs = 0.0;
    for i in 0..m {
        for j in 0..n {
            obj[j] -= t[i * width + j];
        }
        obj_rhs -= rhs[i];
    }
    let mut tab = Tableau {
        rows: m,
        width,
        structural: n,
        t,
        rhs,
        obj,
        obj_rhs,
        basis: (n..n + m).collect(),
    };

    let mut pivots = 0;
    tab.optimize(n, opts, &mut pivots)?;
    let infeasibility = -tab.obj_rhs;
    let scale = 1.0 + lp.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if infeasibility > 1e-9 * scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![0.0; n],
            objective: f64::NAN,
            duals: vec![0.0; m],
            pivots,
        });
    }

    // drive zero-level artificials out of the basis where possible
    for i in 0..m {
        if tab.basis[i] >= n {
            let col = (0..n)
                .filter(|&j| tab.at(i, j).abs() > opts.pivot_tol)
                .max_by(|&a, &b| tab.at(i, a).abs().total_cmp(&tab.at(i, b).abs()));
            if let Some(col) = col {
                tab.pivot(i, col);
                pivots += 1;
            }
        }
    }

    // phase two: price out the real objective
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(&lp.c);
    let mut obj_rhs = 0.0;
    for i in 0..m {
        let k = tab.basis[i];
        let ck = if k < n { lp.c[k] } else { 0.0 };
        if ck != 0.0 {
            for j in 0..width {
                obj[j] -= ck * tab.at(i, j);
            }
            obj_rhs -= ck * tab.rhs[i];
        }
    }
    tab.obj = obj;
    tab.obj_rhs = obj_rhs;

    let status = tab.optimize(n, opts, &mut pivots)?;

    let mut x = vec![0.0; n];
    for (i, &k) in tab.basis.iter().enumerate() {
        if k < tab.structural {
            x[k] = tab.rhs[i];
        }
    }
    let objective = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    // reduced cost of artificial i is -y_i in the sign-flipped system
    let duals = (0..m).map(|i| -tab.obj[n + i] * sign[i]).collect();
    Ok(LpSolution { status, x, objective, duals, pivots })
}
