//! Point-versus-set separability checks with re-checkable certificates.
//!
//! Every check implements [`SeparabilityTest`] and is registered by name in
//! a [`Registry`], so the CLI and the experiment runner can select one at
//! runtime:
//!
//! | name     | decides                                   |
//! |----------|-------------------------------------------|
//! | `fisher` | `(X, Y) < (X, X)` for every other `Y`      |
//! | `lp`     | `X` outside the hull, via the margin LP    |
//! | `linear` | as `lp`, with `fisher` as a fast path      |
//! | `exact`  | `X` outside the hull, in exact arithmetic  |

mod exact;
mod fisher;
mod linear;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{dot, PointCloud};
use crate::lp::LpError;

pub use exact::{certify_exact, ExactOracle, ExactVerdict, DEFAULT_SUBSET_LIMIT};
pub use fisher::FisherCheck;
pub use linear::{LpCheck, ScreenedLinearCheck};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeparabilityError {
    #[error("point index {index} out of range for a cloud of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("linear program failed for point {index}: {source}")]
    Lp { index: usize, source: LpError },
    #[error("linear program for point {index} ended with status {status}")]
    LpStatus { index: usize, status: &'static str },
    #[error("hyperplane from the LP for point {index} does not re-check (LP margin {lp_margin:e}, achieved {achieved:e})")]
    CertificateMismatch { index: usize, lp_margin: f64, achieved: f64 },
    #[error("exact oracle would enumerate {subsets} subsets (limit {limit})")]
    InstanceTooLarge { subsets: u128, limit: u128 },
    #[error("unknown separability method `{0}`")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Separable,
    NotSeparable,
}

impl Verdict {
    pub fn is_separable(self) -> bool {
        self == Verdict::Separable
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Separable => "separable",
            Verdict::NotSeparable => "not_separable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Fisher,
    Lp,
    ExactOracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fisher => "fisher",
            Method::Lp => "lp",
            Method::ExactOracle => "exact_oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Normal `A` with `(A, X) > (A, Y)` for every other point `Y`.
    Hyperplane(Vec<f64>),
    /// `(index, lambda)` pairs over the other points with `sum lambda Y = X`.
    Combination(Vec<(usize, f64)>),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityCertificate {
    pub index: usize,
    pub verdict: Verdict,
    pub witness: Witness,
    /// Achieved slack `min_j (A, X - Y_j)` for hyperplane witnesses, the LP
    /// optimum (L1 distance to the hull) for LP failures, `+inf` when there
    /// are no other points and NaN when the method does not produce one.
    pub margin: f64,
    pub method: Method,
}

/// Relative slack allowed when re-checking a hyperplane against its margin.
pub const HYPERPLANE_RECHECK_EPS: f64 = 1e-9;

impl SeparabilityCertificate {
    pub fn is_separable(&self) -> bool {
        self.verdict.is_separable()
    }

    /// Re-checks the witness against the cloud by direct arithmetic.
    /// Returns `false` if the witness does not support the verdict.
    pub fn recheck(&self, cloud: &PointCloud, tol: f64) -> bool {
        let x = cloud.point(self.index);
        match (&self.witness, self.verdict) {
            (Witness::Hyperplane(a), Verdict::Separable) => {
                let ax = dot(a, x);
                (0..cloud.len()).filter(|&j| j != self.index).all(|j| {
                    let ay = dot(a, cloud.point(j));
                    ax > ay && ax - ay >= self.margin * (1.0 - HYPERPLANE_RECHECK_EPS)
                })
            }
            (Witness::Combination(lambda), Verdict::NotSeparable) => {
                let mut residual = x.iter().map(|v| -v).collect::<Vec<_>>();
                let mut total = 0.0;
                for &(j, l) in lambda {
                    if j == self.index || j >= cloud.len() || l < 0.0 {
                        return false;
                    }
                    total += l;
                    for (r, y) in residual.iter_mut().zip(cloud.point(j)) {
                        *r += l * y;
                    }
                }
                let scale = cloud.max_norm().max(1.0);
                (total - 1.0).abs() <= 10.0 * tol && dot(&residual, &residual).sqrt() <= 10.0 * tol * scale
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetReport {
    /// Certificates in index order. In verdict-only mode this stops at the
    /// first failure.
    pub per_point: Vec<SeparabilityCertificate>,
    pub all_separable: bool,
    pub first_failure: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportMode {
    /// Check every point and keep every certificate.
    Full,
    /// Stop at the first non-separable point.
    VerdictOnly,
}

/// A strategy deciding whether point `i` of a cloud is separable from the rest.
pub trait SeparabilityTest: Send + Sync {
    fn name(&self) -> &'static str;

    fn check_point(&self, cloud: &PointCloud, i: usize) -> Result<SeparabilityCertificate, SeparabilityError>;
}

pub(crate) fn check_index(cloud: &PointCloud, i: usize) -> Result<(), SeparabilityError> {
    if i >= cloud.len() {
        Err(SeparabilityError::IndexOutOfRange { index: i, len: cloud.len() })
    } else {
        Ok(())
    }
}

pub(crate) fn check_tol(tol: f64) -> Result<(), SeparabilityError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(SeparabilityError::InvalidTolerance(tol))
    }
}

/// Applies `test` to every point of `cloud`. Full mode checks points in
/// parallel; the report is in index order either way.
pub fn check_set(
    test: &dyn SeparabilityTest,
    cloud: &PointCloud,
    mode: ReportMode,
) -> Result<SetReport, SeparabilityError> {
    let per_point = match mode {
        ReportMode::Full => (0..cloud.len())
            .into_par_iter()
            .map(|i| test.check_point(cloud, i))
            .collect::<Result<Vec<_>, _>>()?,
        ReportMode::VerdictOnly => {
            let mut out = Vec::new();
            for i in 0..cloud.len() {
                let cert = test.check_point(cloud, i)?;
                let stop = !cert.is_separable();
                out.push(cert);
                if stop {
                    break;
                }
            }
            out
        }
    };
    let first_failure = per_point.iter().find(|c| !c.is_separable()).map(|c| c.index);
    Ok(SetReport { all_separable: first_failure.is_none(), first_failure, per_point })
}

pub fn fisher_separable_point(i: usize, cloud: &PointCloud) -> Result<SeparabilityCertificate, SeparabilityError> {
    FisherCheck.check_point(cloud, i)
}

pub fn fisher_separable_set(cloud: &PointCloud, mode: ReportMode) -> Result<SetReport, SeparabilityError> {
    check_set(&FisherCheck, cloud, mode)
}

pub fn linearly_separable_point(
    i: usize,
    cloud: &PointCloud,
    tol: f64,
) -> Result<SeparabilityCertificate, SeparabilityError> {
    LpCheck::new(tol)?.check_point(cloud, i)
}

/// 1-convexity test with the Fisher fast path in front of the LP.
pub fn linearly_separable_set(cloud: &PointCloud, tol: f64, mode: ReportMode) -> Result<SetReport, SeparabilityError> {
    check_set(&ScreenedLinearCheck::new(tol)?, cloud, mode)
}

pub fn exact_oracle_point(i: usize, cloud: &PointCloud) -> Result<SeparabilityCertificate, SeparabilityError> {
    ExactOracle::default().check_point(cloud, i)
}

/// Knobs shared by the registered strategies.
#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    pub tol: f64,
    pub subset_limit: u128,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, subset_limit: DEFAULT_SUBSET_LIMIT }
    }
}

type Factory = fn(&CheckConfig) -> Result<Box<dyn SeparabilityTest>, SeparabilityError>;

/// Name-to-factory table of separability strategies.
pub struct Registry {
    factories: BTreeMap<&'static str, Factory>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("fisher", |_| Ok(Box::new(FisherCheck)));
        reg.register("lp", |c| Ok(Box::new(LpCheck::new(c.tol)?)));
        reg.register("linear", |c| Ok(Box::new(ScreenedLinearCheck::new(c.tol)?)));
        reg.register("exact", |c| Ok(Box::new(ExactOracle::with_limit(c.subset_limit))));
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str, config: &CheckConfig) -> Result<Box<dyn SeparabilityTest>, SeparabilityError> {
        let factory = self.factories.get(name).ok_or_else(|| SeparabilityError::UnknownMethod(name.to_string()))?;
        factory(config)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
