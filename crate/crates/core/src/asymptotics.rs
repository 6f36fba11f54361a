//! Large-`d` behaviour of the bounds: regime classification by critical
//! radius and the approximant each regime predicts.
//!
//! Exact and approximate sides are carried as natural logarithms, because the
//! interesting regimes (gaps near `1e-100`, counts near `1e+60`) sit far outside
//! what naive `f64` arithmetic on the bounds can represent accurately.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2};
use std::fmt;

use thiserror::Error;

use crate::bounds::formulas;

/// `sqrt((sqrt(5) - 1) / 2)`, where `sqrt(1 - r^2) / r^2 = 1`.
pub const R_FISHER_COUNT: f64 = 0.786_151_377_757_423_3;
/// `sqrt(3) / 2`, where `2 sqrt(1 - r^2) = 1`.
pub const R_LAYER_COUNT: f64 = 0.866_025_403_784_438_6;
/// `sqrt(2) / 2`, where `r = sqrt(1 - r^2)`.
pub const R_FISHER_GAP: f64 = FRAC_1_SQRT_2;

/// Half-width of the band around a critical radius treated as "at".
pub const KNIFE_EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticError {
    #[error("asymptotic laws need 0 < r < 1, got {0}")]
    InvalidRadius(f64),
    #[error("failure budget theta must satisfy 0 < theta < 1, got {0}")]
    InvalidTheta(f64),
    #[error("law `{law}` needs at least {min} points, got {n}")]
    TooFewPoints { law: &'static str, min: u64, n: u64 },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("the Fisher set bound is vacuous at d={d}, r={r}, n={n}")]
    VacuousBound { d: usize, r: f64, n: u64 },
    #[error("unknown asymptotic law `{0}`")]
    UnknownLaw(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    BelowCritical,
    AtCritical,
    AboveCritical,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::BelowCritical => "below_critical",
            Regime::AtCritical => "at_critical",
            Regime::AboveCritical => "above_critical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusRegime {
    pub regime: Regime,
    pub critical_value: f64,
    pub context: LawId,
}

pub fn classify(r: f64, critical: f64) -> Regime {
    if (r - critical).abs() < KNIFE_EDGE_TOL {
        Regime::AtCritical
    } else if r < critical {
        Regime::BelowCritical
    } else {
        Regime::AboveCritical
    }
}

/// Where the exact quantity goes as `d` grows with the other parameters fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Diverges,
    Vanishes,
    Constant(f64),
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::Diverges => f.write_str("infinity"),
            Limit::Vanishes => f.write_str("zero"),
            Limit::Constant(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LawId {
    /// Admissible Fisher count in the original form, against its approximant.
    FisherCount,
    /// Square-root Fisher count over the original form.
    FisherCountRatio,
    /// Linear set count over square-root Fisher count.
    LayerCountRatio,
    /// `1 -` Fisher set bound.
    FisherGap,
    /// Gap of the Fisher set bound over the gap of the linear set bound.
    GapRatio,
}

impl LawId {
    pub const ALL: [LawId; 5] =
        [LawId::FisherCount, LawId::FisherCountRatio, LawId::LayerCountRatio, LawId::FisherGap, LawId::GapRatio];

    pub fn as_str(self) -> &'static str {
        match self {
            LawId::FisherCount => "eq1_asymptotic",
            LawId::FisherCountRatio => "fisher_ratio_f_over_g",
            LawId::LayerCountRatio => "layer_count_ratio",
            LawId::FisherGap => "fisher_gap_asymptotic",
            LawId::GapRatio => "gap_ratio_linear_vs_fisher",
        }
    }
}

impl fmt::Display for LawId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact value and regime approximant, both as logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotic {
    pub law: LawId,
    pub ln_exact: f64,
    pub ln_approx: f64,
    pub regime: RadiusRegime,
    pub tends_to: Limit,
}

impl Asymptotic {
    pub fn exact(&self) -> f64 {
        self.ln_exact.exp()
    }

    pub fn approx(&self) -> f64 {
        self.ln_approx.exp()
    }

    /// `exact / approx`, which tends to 1 under every law.
    pub fn ratio(&self) -> f64 {
        (self.ln_exact - self.ln_approx).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawQuery {
    pub r: f64,
    pub d: usize,
    pub theta: f64,
    pub n: u64,
}

/// An asymptotic comparison selectable by name.
pub trait AsymptoticLaw: Send + Sync {
    fn id(&self) -> LawId;

    fn critical_radius(&self) -> f64;

    fn evaluate(&self, q: &LawQuery) -> Result<Asymptotic, AsymptoticError>;
}

fn check_r(r: f64) -> Result<(), AsymptoticError> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(AsymptoticError::InvalidRadius(r))
    }
}

fn check_theta(theta: f64) -> Result<(), AsymptoticError> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(AsymptoticError::InvalidTheta(theta))
    }
}

fn check_d(d: usize) -> Result<(), AsymptoticError> {
    if d == 0 {
        Err(AsymptoticError::ZeroDimension)
    } else {
        Ok(())
    }
}

fn regime(law: LawId, r: f64, critical: f64) -> RadiusRegime {
    RadiusRegime { regime: classify(r, critical), critical_value: critical, context: law }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln(-ln(1 - a))` given `ln a`, for `a` in `(0, 1)`.
fn ln_neg_ln1m(ln_a: f64) -> f64 {
    if ln_a < -30.0 {
        // -ln(1 - a) = a (1 + a/2 + ...)
        ln_a + 0.5 * ln_a.exp()
    } else {
        (-(-ln_a.exp()).ln_1p()).ln()
    }
}

/// `ln(1 - [(1 - r^d)(1 - (n-1)(1-r^2)^(d/2)/2)]^n)`, exact to rounding even
/// when the gap underflows `f64`.
pub fn ln_fisher_gap(r: f64, d: usize, n: u64) -> Option<f64> {
    let df = d as f64;
    let nf = n as f64;
    if n == 0 {
        return Some(f64::NEG_INFINITY);
    }
    // the bracket must be positive
    formulas::ln_fisher_set(r, df, nf)?;
    let ln_a = formulas::ln_r_pow(r, df);
    let ln_t = if n > 1 {
        (0.5 * (nf - 1.0)).ln() + formulas::ln_cap_pow(r, df)
    } else {
        f64::NEG_INFINITY
    };
    // x = n (ln(1 - a) + ln(1 - t)) <= 0 ; gap = -expm1(x)
    let ln_neg_x = nf.ln() + log_add_exp(ln_neg_ln1m(ln_a), ln_neg_ln1m(ln_t));
    let neg_x = ln_neg_x.exp();
    let correction = if neg_x < 1e-5 {
        // (1 - e^x) / (-x) = 1 + x/2 + x^2/6 + ...
        (-0.5 * neg_x + neg_x * neg_x / 6.0).ln_1p()
    } else {
        (-(-neg_x).exp_m1()).ln() - ln_neg_x
    };
    Some(ln_neg_x + correction)
}

/// Admissible Fisher count in the original form against its per-regime
/// approximant: `theta / r^d` above the critical radius, the exact
/// `(sqrt(1 + 2 theta) - 1) / r^d` at it, `sqrt(2 theta) / (1 - r^2)^(d/4)` below.
#[derive(Debug, Clone, Copy, Default)]
pub struct FisherCountLaw;

impl AsymptoticLaw for FisherCountLaw {
    fn id(&self) -> LawId {
        LawId::FisherCount
    }

    fn critical_radius(&self) -> f64 {
        R_FISHER_COUNT
    }

    fn evaluate(&self, q: &LawQuery) -> Result<Asymptotic, AsymptoticError> {
        check_r(q.r)?;
        check_theta(q.theta)?;
        check_d(q.d)?;
        let (r, theta, d) = (q.r, q.theta, q.d as f64);
        let reg = regime(self.id(), r, R_FISHER_COUNT);
        let ln_r_d = d * r.ln();
        let ln_approx = match reg.regime {
            Regime::AboveCritical => theta.ln() - ln_r_d,
            Regime::AtCritical => ((1.0 + 2.0 * theta).sqrt() - 1.0).ln() - ln_r_d,
            Regime::BelowCritical => 0.5 * (2.0 * theta).ln() - 0.5 * formulas::ln_cap_pow(r, d),
        };
        Ok(Asymptotic {
            law: self.id(),
            ln_exact: formulas::ln_eq1(r, theta, d),
            ln_approx,
            regime: reg,
            tends_to: Limit::Diverges,
        })
    }
}

/// `f / g` with `f = sqrt(theta) / (1 - r^2)^(d/4)` and `g` the original
/// Fisher count.
#[derive(Debug, Clone, Copy, Default)]
pub struct FisherCountRatioLaw;

impl AsymptoticLaw for FisherCountRatioLaw {
    fn id(&self) -> LawId {
        LawId::FisherCountRatio
    }

    fn critical_radius(&self) -> f64 {
        R_FISHER_COUNT
    }

    fn evaluate(&self, q: &LawQuery) -> Result<Asymptotic, AsymptoticError> {
        check_r(q.r)?;
        check_theta(q.theta)?;
        check_d(q.d)?;
        let (r, theta, d) = (q.r, q.theta, q.d as f64);
        let reg = regime(self.id(), r, R_FISHER_COUNT);
        let ln_f = 0.5 * theta.ln() - 0.5 * formulas::ln_cap_pow(r, d);
        let ln_exact = ln_f - formulas::ln_eq1(r, theta, d);
        let at_value = ((1.0 + 2.0 * theta).sqrt() + 1.0) / (2.0 * theta.sqrt());
        let (ln_approx, tends_to) = match reg.regime {
            Regime::AboveCritical => {
                // (1/sqrt(theta)) (r^2 / sqrt(1 - r^2))^(d/2)
                let ln_base = 2.0 * r.ln() - 0.5 * (-r * r).ln_1p();
                (-0.5 * theta.ln() + 0.5 * d * ln_base, Limit::Diverges)
            }
            Regime::AtCritical => (at_value.ln(), Limit::Constant(at_value)),
            Regime::BelowCritical => (FRAC_1_SQRT_2.ln(), Limit::Constant(FRAC_1_SQRT_2)),
        };
        Ok(Asymptotic { law: self.id(), ln_exact, ln_approx, regime: reg, tends_to })
    }
}

/// `f / g` with `f = sqrt(theta 2^d)` and `g = sqrt(theta) / (1 - r^2)^(d/4)`.
/// The ratio equals `(2 sqrt(1 - r^2))^(d/2)` identically.
#[derive(Debug, Clone, Copy, Default)]
pub struct LayerCountRatioLaw;

impl AsymptoticLaw for LayerCountRatioLaw {
    fn id(&self) -> LawId {
        LawId::LayerCountRatio
    }

    fn critical_radius(&self) -> f64 {
        R_LAYER_COUNT
    }

    fn evaluate(&self, q: &LawQuery) -> Result<Asymptotic, AsymptoticError> {
        check_r(q.r)?;
        check_theta(q.theta)?;
        check_d(q.d)?;
        let (r, theta, d) = (q.r, q.theta, q.d as f64);
        let reg = regime(self.id(), r, R_LAYER_COUNT);
        let ln_f = 0.5 * theta.ln() + 0.5 * d * LN_2;
        let ln_g = 0.5 * theta.ln() - 0.5 * formulas::ln_cap_pow(r, d);
        let ln_exact = ln_f - ln_g;
        let ln_approx = 0.5 * d * (LN_2 + 0.5 * (-r * r).ln_1p());
        debug_assert!((ln_exact - ln_approx).abs() < 1e-12 * (1.0 + ln_exact.abs()));
        let tends_to = match reg.regime {
            Regime::BelowCritical => Limit::Diverges,
            Regime::AtCritical => Limit::Constant(1.0),
            Regime::AboveCritical => Limit::Vanishes,
        };
        Ok(Asymptotic { law: self.id(), ln_exact, ln_approx, regime: reg, tends_to })
    }
}

/// `g = 1 -` Fisher set bound: `n r^d` above `sqrt(2)/2`,
/// `n (n - 1)/2 (1 - r^2)^(d/2)` below, `n (n + 1)/2 2^(-d/2)` at it.
#[derive(Debug, Clone, Copy, Default)]
pub struct FisherGapLaw;

impl AsymptoticLaw for FisherGapLaw {
    fn id(&self) -> LawId {
        LawId::FisherGap
    }

    fn critical_radius(&self) -> f64 {
        R_FISHER_GAP
    }

    fn evaluate(&self, q: &LawQuery) -> Result<Asymptotic, AsymptoticError> {
        check_r(q.r)?;
        check_d(q.d)?;
        if q.n < 1 {
            return Err(AsymptoticError::TooFewPoints { law: self.id().as_str(), min: 1, n: q.n });
        }
        let (r, d, n) = (q.r, q.d as f64, q.n as f64);
        let reg = regime(self.id(), r, R_FISHER_GAP);
        let ln_exact =
            ln_fisher_gap(r, q.d, q.n).ok_or(AsymptoticError::VacuousBound { d: q.d, r, n: q.n })?;
        let ln_approx = match reg.regime {
            Regime::AboveCritical => n.ln() + d * r.ln(),
            Regime::BelowCritical => (0.5 * n * (n - 1.0)).ln() + formulas::ln_cap_pow(r, d),
            Regime::AtCritical => (0.5 * n * (n + 1.0)).ln() - 0.5 * d * LN_2,
        };
        Ok(Asymptotic { law: self.id(), ln_exact, ln_approx, regime: reg, tends_to: Limit::Vanishes })
    }
}

/// `g / f` with `g = 1 -` Fisher set bound and `f = n (n - 1) / 2^d`, the gap of
/// the linear set bound: `(2r)^d / (n - 1)` above `sqrt(2)/2`,
/// `(4 (1 - r^2))^(d/2) / 2` below, `2^(d/2) (n + 1) / (2 (n - 1))` at it.
#[derive(Debug, Clone, Copy, Default)]
pub struct GapRatioLaw;

impl AsymptoticLaw for GapRatioLaw {
    fn id(&self) -> LawId {
        LawId::GapRatio
    }

    fn critical_radius(&self) -> f64 {
        R_FISHER_GAP
    }

    fn evaluate(&self, q: &LawQuery) -> Result<Asymptotic, AsymptoticError> {
        check_r(q.r)?;
        check_d(q.d)?;
        if q.n < 2 {
            return Err(AsymptoticError::TooFewPoints { law: self.id().as_str(), min: 2, n: q.n });
        }
        let (r, d, n) = (q.r, q.d as f64, q.n as f64);
        let reg = regime(self.id(), r, R_FISHER_GAP);
        let ln_g =
            ln_fisher_gap(r, q.d, q.n).ok_or(AsymptoticError::VacuousBound { d: q.d, r, n: q.n })?;
        let ln_f = n.ln() + (n - 1.0).ln() - d * LN_2;
        let ln_approx = match reg.regime {
            Regime::AboveCritical => d * (2.0 * r).ln() - (n - 1.0).ln(),
            Regime::BelowCritical => 0.5 * d * (2.0 * LN_2 + (-r * r).ln_1p()) - LN_2,
            Regime::AtCritical => 0.5 * d * LN_2 + (n + 1.0).ln() - (2.0 * (n - 1.0)).ln(),
        };
        Ok(Asymptotic { law: self.id(), ln_exact: ln_g - ln_f, ln_approx, regime: reg, tends_to: Limit::Diverges })
    }
}

pub fn eq1_asymptotic(r: f64, theta: f64, d: usize) -> Result<Asymptotic, AsymptoticError> {
    FisherCountLaw.evaluate(&LawQuery { r, d, theta, n: 0 })
}

pub fn fisher_ratio_f_over_g(r: f64, theta: f64, d: usize) -> Result<Asymptotic, AsymptoticError> {
    FisherCountRatioLaw.evaluate(&LawQuery { r, d, theta, n: 0 })
}

pub fn layer_count_ratio(r: f64, theta: f64, d: usize) -> Result<Asymptotic, AsymptoticError> {
    LayerCountRatioLaw.evaluate(&LawQuery { r, d, theta, n: 0 })
}

pub fn fisher_gap_asymptotic(r: f64, n: u64, d: usize) -> Result<Asymptotic, AsymptoticError> {
    FisherGapLaw.evaluate(&LawQuery { r, d, theta: 0.5, n })
}

pub fn gap_ratio_linear_vs_fisher(r: f64, n: u64, d: usize) -> Result<Asymptotic, AsymptoticError> {
    GapRatioLaw.evaluate(&LawQuery { r, d, theta: 0.5, n })
}

pub struct LawRegistry {
    laws: BTreeMap<LawId, Box<dyn AsymptoticLaw>>,
}

impl LawRegistry {
    pub fn with_builtins() -> Self {
        let mut laws: BTreeMap<LawId, Box<dyn AsymptoticLaw>> = BTreeMap::new();
        for law in [
            Box::new(FisherCountLaw) as Box<dyn AsymptoticLaw>,
            Box::new(FisherCountRatioLaw),
            Box::new(LayerCountRatioLaw),
            Box::new(FisherGapLaw),
            Box::new(GapRatioLaw),
        ] {
            laws.insert(law.id(), law);
        }
        Self { laws }
    }

    pub fn by_name(&self, name: &str) -> Result<&dyn AsymptoticLaw, AsymptoticError> {
        self.laws
            .values()
            .find(|l| l.id().as_str() == name)
            .map(|l| l.as_ref())
            .ok_or_else(|| AsymptoticError::UnknownLaw(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.laws.keys().map(|id| id.as_str())
    }
}

impl Default for LawRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn critical_radii() {
        assert_relative_eq!(R_FISHER_COUNT, ((5f64.sqrt() - 1.0) / 2.0).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(R_LAYER_COUNT, 3f64.sqrt() / 2.0, max_relative = 1e-15);
        // sqrt(1 - r^2) / r^2 = 1 at the Fisher-count knife edge
        let r2 = R_FISHER_COUNT * R_FISHER_COUNT;
        assert_relative_eq!((1.0 - r2).sqrt() / r2, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn classification_flips_at_critical_radii() {
        for c in [R_FISHER_COUNT, R_LAYER_COUNT, R_FISHER_GAP] {
            assert_eq!(classify(c, c), Regime::AtCritical);
            assert_eq!(classify(c - 1e-6, c), Regime::BelowCritical);
            assert_eq!(classify(c + 1e-6, c), Regime::AboveCritical);
            assert_eq!(classify(c + 0.5e-12, c), Regime::AtCritical);
        }
    }

    #[test]
    fn plug_examples() {
        let a = eq1_asymptotic(0.9, 0.1, 100).unwrap();
        assert_eq!(a.regime.regime, Regime::AboveCritical);
        assert_relative_eq!(a.approx(), 0.1 / 0.9f64.powi(100), max_relative = 1e-12);

        let a = fisher_gap_asymptotic(0.9, 10, 200).unwrap();
        assert_relative_eq!(a.approx(), 10.0 * 0.9f64.powi(200), max_relative = 1e-12);
        let a = fisher_gap_asymptotic(0.5, 10, 200).unwrap();
        assert_eq!(a.regime.regime, Regime::BelowCritical);
        assert_relative_eq!(a.approx(), 45.0 * 0.75f64.powi(100), max_relative = 1e-12);

        let a = gap_ratio_linear_vs_fisher(0.8, 2, 50).unwrap();
        assert_relative_eq!(a.approx(), 1.6f64.powi(50), max_relative = 1e-12);
        let a = gap_ratio_linear_vs_fisher(R_FISHER_GAP, 3, 40).unwrap();
        assert_eq!(a.regime.regime, Regime::AtCritical);
        assert_relative_eq!(a.approx(), 2f64.powi(20), max_relative = 1e-12);

        let a = layer_count_ratio(0.5, 0.3, 4).unwrap();
        assert_relative_eq!(a.exact(), 3.0, max_relative = 1e-13);
    }

    #[test]
    fn knife_edge_of_fisher_count_is_exact() {
        for d in [1, 10, 57, 200, 400] {
            let a = eq1_asymptotic(R_FISHER_COUNT, 0.5, d).unwrap();
            assert_eq!(a.regime.regime, Regime::AtCritical);
            assert_relative_eq!(a.ratio(), 1.0, max_relative = 1e-12);
            assert_relative_eq!(a.approx(), (2f64.sqrt() - 1.0) / R_FISHER_COUNT.powi(d as i32), max_relative = 1e-12);
        }
    }

    #[test]
    fn fisher_ratio_constant_at_knife_edge() {
        let want = 1.5f64.sqrt() + 1.0;
        for d in 10..=200 {
            let a = fisher_ratio_f_over_g(R_FISHER_COUNT, 0.25, d).unwrap();
            assert_relative_eq!(a.exact(), want, max_relative = 1e-12);
            assert_eq!(a.tends_to, Limit::Constant(a.approx()));
        }
        let lo = fisher_ratio_f_over_g(0.95, 0.1, 50).unwrap().exact();
        let hi = fisher_ratio_f_over_g(0.95, 0.1, 100).unwrap().exact();
        assert!(hi > lo);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(eq1_asymptotic(0.0, 0.1, 10), Err(AsymptoticError::InvalidRadius(_))));
        assert!(matches!(eq1_asymptotic(0.5, 1.0, 10), Err(AsymptoticError::InvalidTheta(_))));
        assert!(matches!(gap_ratio_linear_vs_fisher(0.5, 1, 10), Err(AsymptoticError::TooFewPoints { .. })));
        assert!(matches!(fisher_gap_asymptotic(0.1, 100, 2), Err(AsymptoticError::VacuousBound { .. })));
    }

    #[test]
    fn gap_matches_direct_evaluation_where_representable() {
        for &(r, n, d) in &[(0.6, 5u64, 30usize), (0.9, 3, 20), (0.3, 10, 60)] {
            let direct = formulas::fisher_set_gap(r, d as f64, n as f64).unwrap();
            assert_relative_eq!(ln_fisher_gap(r, d, n).unwrap().exp(), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn registry_names() {
        let reg = LawRegistry::with_builtins();
        for id in LawId::ALL {
            assert_eq!(reg.by_name(id.as_str()).unwrap().id(), id);
        }
        assert!(reg.by_name("nope").is_err());
    }
}
