//! Exact hull-membership oracle in integer/rational arithmetic.
//!
//! Every `f64` is a dyadic rational, so a set of coordinates scales to
//! integers by a common power of two without rounding. Membership of `X` in
//! the hull of the other points is decided by Carathéodory enumeration: if
//! the others span an affine subspace of dimension `k`, then `X` is in their
//! hull iff it lies in the simplex of some affinely independent `(k+1)`-subset.
//! The simplices of a fan from one fixed point already cover the hull, so only
//! subsets containing that point are tried. Each subset is solved exactly for
//! barycentric coordinates with fraction-free (Bareiss) elimination.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, Signed, ToPrimitive, Zero};

use super::{check_index, Method, SeparabilityCertificate, SeparabilityError, SeparabilityTest, Verdict, Witness};
use crate::geometry::PointCloud;

pub const DEFAULT_SUBSET_LIMIT: u128 = 2_000_000;

#[derive(Debug, Clone, Copy)]
pub struct ExactOracle {
    limit: u128,
}

impl Default for ExactOracle {
    fn default() -> Self {
        Self { limit: DEFAULT_SUBSET_LIMIT }
    }
}

impl ExactOracle {
    pub fn with_limit(limit: u128) -> Self {
        Self { limit }
    }
}

impl SeparabilityTest for ExactOracle {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn check_point(&self, cloud: &PointCloud, i: usize) -> Result<SeparabilityCertificate, SeparabilityError> {
        check_index(cloud, i)?;
        let others: Vec<usize> = (0..cloud.len()).filter(|&j| j != i).collect();
        let separable = SeparabilityCertificate {
            index: i,
            verdict: Verdict::Separable,
            witness: Witness::None,
            margin: if others.is_empty() { f64::INFINITY } else { f64::NAN },
            method: Method::ExactOracle,
        };
        if others.is_empty() {
            return Ok(separable);
        }

        let rows: Vec<&[f64]> = std::iter::once(cloud.point(i)).chain(others.iter().map(|&j| cloud.point(j))).collect();
        let ints = to_common_integers(&rows);
        let (x, ys) = ints.split_first().expect("at least two rows");

        let k = affine_rank(ys) + 1;
        let (apex, rest) = ys.split_first().expect("at least one other point");
        let subsets = binomial(rest.len() as u128, (k - 1) as u128);
        if subsets > self.limit {
            return Err(SeparabilityError::InstanceTooLarge { subsets, limit: self.limit });
        }

        let mut combo: Vec<usize> = (0..k - 1).collect();
        loop {
            let cols: Vec<&[BigInt]> =
                std::iter::once(apex.as_slice()).chain(combo.iter().map(|&c| rest[c].as_slice())).collect();
            if in_simplex(x, &cols) {
                if let Some(lambda) = barycentric(x, &cols) {
                    let members = std::iter::once(0).chain(combo.iter().map(|&c| c + 1));
                    let witness = members
                        .zip(&lambda)
                        .filter(|(_, l)| !l.is_zero())
                        .map(|(c, l)| (others[c], l.to_f64().unwrap_or(f64::NAN)))
                        .collect();
                    return Ok(SeparabilityCertificate {
                        index: i,
                        verdict: Verdict::NotSeparable,
                        witness: Witness::Combination(witness),
                        margin: 0.0,
                        method: Method::ExactOracle,
                    });
                }
            }
            if !next_combination(&mut combo, rest.len()) {
                return Ok(separable);
            }
        }
    }
}

/// Outcome of re-verifying a floating-point certificate in exact arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactVerdict {
    /// The hyperplane strictly separates the point in exact arithmetic.
    Separable,
    /// The point solves exactly to nonnegative barycentric coordinates over
    /// the witness support.
    NotSeparable,
    /// The witness does not prove its verdict exactly.
    Unproven,
}

/// Proves a certificate's verdict exactly, or reports that it cannot.
///
/// A hyperplane `A` proves separability when `(A, X_i - X_j) > 0` holds in
/// exact arithmetic for every `j`. A convex combination proves membership when
/// the exact barycentric solve over its support is nonnegative.
pub fn certify_exact(cloud: &PointCloud, cert: &SeparabilityCertificate) -> ExactVerdict {
    let i = cert.index;
    match (&cert.witness, cert.verdict) {
        (Witness::Hyperplane(a), Verdict::Separable) => {
            if a.iter().any(|v| !v.is_finite()) {
                return ExactVerdict::Unproven;
            }
            let normal = to_common_integers(&[a.as_slice()]).pop().unwrap();
            let pts: Vec<&[f64]> = cloud.points().collect();
            let ints = to_common_integers(&pts);
            let x = &ints[i];
            let ok = ints.iter().enumerate().filter(|&(j, _)| j != i).all(|(_, y)| {
                let s: BigInt = normal.iter().zip(x.iter().zip(y)).map(|(a, (xk, yk))| a * (xk - yk)).sum();
                s.is_positive()
            });
            if ok {
                ExactVerdict::Separable
            } else {
                ExactVerdict::Unproven
            }
        }
        (Witness::Combination(lambda), Verdict::NotSeparable) => {
            let support: Vec<usize> = lambda.iter().map(|p| p.0).filter(|&j| j != i && j < cloud.len()).collect();
            if support.is_empty() {
                return ExactVerdict::Unproven;
            }
            let rows: Vec<&[f64]> =
                std::iter::once(cloud.point(i)).chain(support.iter().map(|&j| cloud.point(j))).collect();
            let ints = to_common_integers(&rows);
            let (x, ys) = ints.split_first().unwrap();
            let cols: Vec<&[BigInt]> = ys.iter().map(|v| v.as_slice()).collect();
            match barycentric(x, &cols) {
                Some(l) if l.iter().all(|v| !v.is_negative()) => ExactVerdict::NotSeparable,
                _ => ExactVerdict::Unproven,
            }
        }
        _ => ExactVerdict::Unproven,
    }
}

/// Scales every value by one power of two so all become integers.
fn to_common_integers(rows: &[&[f64]]) -> Vec<Vec<BigInt>> {
    let decoded: Vec<Vec<(u64, i16, i8)>> =
        rows.iter().map(|r| r.iter().map(|v| Float::integer_decode(*v)).collect()).collect();
    let min_exp = decoded
        .iter()
        .flatten()
        .filter(|(m, _, _)| *m != 0)
        .map(|&(_, e, _)| e)
        .min()
        .unwrap_or(0);
    decoded
        .iter()
        .map(|r| {
            r.iter()
                .map(|&(m, e, s)| {
                    let v = BigInt::from(m) << ((e - min_exp) as usize);
                    if s < 0 {
                        -v
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

/// Fraction-free elimination over the first `pivot_cols` columns. Returns
/// the rank found in those columns; the matrix is left in echelon form.
fn bareiss(m: &mut [Vec<BigInt>], pivot_cols: usize) -> usize {
    let rows = m.len();
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for col in 0..pivot_cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let width = m[rank].len();
        for r in rank + 1..rows {
            for c in col + 1..width {
                let v = (&m[rank][col] * &m[r][c] - &m[r][col] * &m[rank][c]) / &prev;
                m[r][c] = v;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    rank
}

fn affine_rank(points: &[Vec<BigInt>]) -> usize {
    let Some((base, rest)) = points.split_first() else {
        return 0;
    };
    if rest.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<BigInt>> = rest.iter().map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    let cols = base.len();
    bareiss(&mut m, cols)
}

/// Solves `sum_j l_j Y_j = X`, `sum_j l_j = 1` exactly. Returns `None` when
/// the columns are affinely dependent or `X` is off their affine span.
fn barycentric(x: &[BigInt], cols: &[&[BigInt]]) -> Option<Vec<BigRational>> {
    let (scaled, det) = barycentric_scaled(x, cols)?;
    Some(scaled.into_iter().map(|v| BigRational::new(v, det.clone())).collect())
}

/// Like [`barycentric`], but returns `det * l_j` together with `det`, all
/// integers, so signs can be read without forming fractions.
fn barycentric_scaled(x: &[BigInt], cols: &[&[BigInt]]) -> Option<(Vec<BigInt>, BigInt)> {
    let d = x.len();
    let k = cols.len();
    let mut m: Vec<Vec<BigInt>> = (0..=d)
        .map(|row| {
            let mut r: Vec<BigInt> =
                cols.iter().map(|c| if row < d { c[row].clone() } else { BigInt::from(1) }).collect();
            r.push(if row < d { x[row].clone() } else { BigInt::from(1) });
            r
        })
        .collect();
    let rank = bareiss(&mut m, k);
    if rank < k {
        return None;
    }
    if m[k..].iter().any(|r| !r[k].is_zero()) {
        return None;
    }
    // Cramer: det * l_j is an integer, and each back-substitution step divides exactly.
    let det = m[k - 1][k - 1].clone();
    let mut y = vec![BigInt::zero(); k];
    for row in (0..k).rev() {
        let mut acc = &det * &m[row][k];
        for c in row + 1..k {
            acc -= &m[row][c] * &y[c];
        }
        y[row] = acc / &m[row][row];
    }
    Some((y, det))
}

/// Whether `X` lies in the simplex spanned by `cols`.
fn in_simplex(x: &[BigInt], cols: &[&[BigInt]]) -> bool {
    match barycentric_scaled(x, cols) {
        Some((y, det)) => y.iter().all(|v| v.is_zero() || v.sign() == det.sign()),
        None => false,
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.saturating_mul(n - j) / (j + 1);
    }
    acc
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
