//! Linear separability through the bounded-normal margin LP
//!
//! ```text
//! maximize m  subject to  (A, X_i - X_j) >= m  for all j != i,  |A|_inf <= 1
//! ```
//!
//! The simplex solves its dual, `min |X_i - sum_j lambda_j X_j|_1` over the
//! probability simplex, whose optimum is the L1 distance from `X_i` to the
//! hull of the other points. The primal solution is the convex-combination
//! witness and the simplex multipliers give the separating normal.

use super::{
    check_index, check_tol, FisherCheck, Method, SeparabilityCertificate, SeparabilityError, SeparabilityTest,
    Verdict, Witness,
};
use crate::geometry::{dot, PointCloud};
use crate::lp::{self, LpStatus, SimplexOptions, StandardForm};

#[derive(Debug, Clone, Copy)]
pub struct LpCheck {
    tol: f64,
}

impl LpCheck {
    pub fn new(tol: f64) -> Result<Self, SeparabilityError> {
        check_tol(tol)?;
        Ok(Self { tol })
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn margin_program(cloud: &PointCloud, i: usize) -> StandardForm {
        let d = cloud.dim();
        let others = cloud.len() - 1;
        let cols = others + 2 * d;
        let rows = d + 1;
        let mut a = vec![0.0; rows * cols];
        let x = cloud.point(i);
        for (col, (_, y)) in cloud.points().enumerate().filter(|&(j, _)| j != i).enumerate() {
            for k in 0..d {
                a[k * cols + col] = x[k] - y[k];
            }
            a[d * cols + col] = 1.0;
        }
        for k in 0..d {
            a[k * cols + others + k] = -1.0;
            a[k * cols + others + d + k] = 1.0;
        }
        let mut b = vec![0.0; rows];
        b[d] = 1.0;
        let mut c = vec![0.0; cols];
        for v in &mut c[others..] {
            *v = 1.0;
        }
        StandardForm { rows, cols, a, b, c }
    }
}

impl SeparabilityTest for LpCheck {
    fn name(&self) -> &'static str {
        "lp"
    }

    fn check_point(&self, cloud: &PointCloud, i: usize) -> Result<SeparabilityCertificate, SeparabilityError> {
        check_index(cloud, i)?;
        let n = cloud.len();
        let d = cloud.dim();
        let x = cloud.point(i);
        if n == 1 {
            return Ok(SeparabilityCertificate {
                index: i,
                verdict: Verdict::Separable,
                witness: Witness::Hyperplane(x.to_vec()),
                margin: f64::INFINITY,
                method: Method::Lp,
            });
        }

        let program = Self::margin_program(cloud, i);
        let opts = SimplexOptions { max_pivots: 50 * (n + d), ..SimplexOptions::default() };
        let sol = lp::solve(&program, &opts).map_err(|source| SeparabilityError::Lp { index: i, source })?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(SeparabilityError::LpStatus { index: i, status: "infeasible" }),
            LpStatus::Unbounded => return Err(SeparabilityError::LpStatus { index: i, status: "unbounded" }),
        }

        let lp_margin = sol.objective.max(0.0);
        let scale = cloud.max_norm();
        let threshold = if scale > 0.0 { self.tol * scale } else { self.tol };

        if lp_margin > threshold {
            let normal: Vec<f64> = sol.duals[..d].iter().map(|y| -y).collect();
            let ax = dot(&normal, x);
            let achieved = cloud
                .points()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, y)| ax - dot(&normal, y))
                .fold(f64::INFINITY, f64::min);
            if !(achieved > 0.0) {
                return Err(SeparabilityError::CertificateMismatch { index: i, lp_margin, achieved });
            }
            Ok(SeparabilityCertificate {
                index: i,
                verdict: Verdict::Separable,
                witness: Witness::Hyperplane(normal),
                margin: achieved,
                method: Method::Lp,
            })
        } else {
            let mut lambda: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .zip(&sol.x[..n - 1])
                .filter(|&(_, &l)| l > 0.0)
                .map(|(j, &l)| (j, l))
                .collect();
            let total: f64 = lambda.iter().map(|p| p.1).sum();
            for p in &mut lambda {
                p.1 /= total;
            }
            Ok(SeparabilityCertificate {
                index: i,
                verdict: Verdict::NotSeparable,
                witness: Witness::Combination(lambda),
                margin: lp_margin,
                method: Method::Lp,
            })
        }
    }
}

/// Fisher check first; the LP runs only for points Fisher cannot separate.
#[derive(Debug, Clone, Copy)]
pub struct ScreenedLinearCheck {
    lp: LpCheck,
}

impl ScreenedLinearCheck {
    pub fn new(tol: f64) -> Result<Self, SeparabilityError> {
        Ok(Self { lp: LpCheck::new(tol)? })
    }
}

impl SeparabilityTest for ScreenedLinearCheck {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn check_point(&self, cloud: &PointCloud, i: usize) -> Result<SeparabilityCertificate, SeparabilityError> {
        let fisher = FisherCheck.check_point(cloud, i)?;
        if fisher.is_separable() {
            Ok(fisher)
        } else {
            self.lp.check_point(cloud, i)
        }
    }
}
