//! Seeded Monte Carlo grids over `(d, r)` comparing empirical separability
//! frequencies with the lower bounds.
//!
//! Each grid cell gets its own seed mixed from the master seed, `d` and the
//! bits of `r`; trial `t` of a cell draws from ChaCha stream `t`. Trials run in
//! parallel and are merged by trial index, so results do not depend on the
//! thread count.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{self, BoundQuery};
use crate::geometry::{sample_layer_stream, LayerSpec, PointCloud};
use crate::separability::{FisherCheck, LpCheck, SeparabilityError, SeparabilityTest, DEFAULT_TOL};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("successes {successes} exceed trials {trials}")]
    SuccessesExceedTrials { successes: u64, trials: u64 },
    #[error("d={d}, r={r}, trial {trial}: {source}")]
    Check {
        d: usize,
        r: f64,
        trial: u64,
        #[source]
        source: SeparabilityError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Is one extra point separable from an `n`-point cloud?
    PointLevel,
    /// Is every point of an `n`-point cloud separable from the rest?
    SetLevel,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::PointLevel => "point",
            Mode::SetLevel => "set",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckKinds {
    pub linear: bool,
    pub fisher: bool,
}

impl CheckKinds {
    pub const BOTH: CheckKinds = CheckKinds { linear: true, fisher: true };
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub mode: Mode,
    pub d_values: Vec<usize>,
    pub r_values: Vec<f64>,
    pub n: usize,
    pub trials: u64,
    pub master_seed: u64,
    pub tol: f64,
    pub check_kinds: CheckKinds,
    /// When false, `wall_time_seconds` is written as 0 so that output is
    /// reproducible byte for byte.
    pub record_timing: bool,
}

impl ExperimentPlan {
    pub fn new(mode: Mode, d_values: Vec<usize>, r_values: Vec<f64>, n: usize, trials: u64, master_seed: u64) -> Self {
        Self {
            mode,
            d_values,
            r_values,
            n,
            trials,
            master_seed,
            tol: DEFAULT_TOL,
            check_kinds: CheckKinds::BOTH,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::ZeroTrials);
        }
        if self.d_values.is_empty() || self.r_values.is_empty() {
            return Err(ExperimentError::InvalidPlan("empty d or r grid".into()));
        }
        if self.n == 0 {
            return Err(ExperimentError::InvalidPlan("n must be at least 1".into()));
        }
        if self.mode == Mode::SetLevel && self.n < 2 {
            return Err(ExperimentError::InvalidPlan("set-level runs need n >= 2".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ExperimentError::InvalidPlan(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !self.check_kinds.linear && !self.check_kinds.fisher {
            return Err(ExperimentError::InvalidPlan("no check kind selected".into()));
        }
        for &d in &self.d_values {
            for &r in &self.r_values {
                LayerSpec::new(d, r).map_err(|e| ExperimentError::InvalidPlan(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Scaled-down point-level plan: `n = 1000`, `d = 1..=60`.
    pub fn desk_point_level(master_seed: u64) -> Self {
        Self::new(Mode::PointLevel, (1..=60).collect(), DEFAULT_R_GRID.to_vec(), 1000, 60, master_seed)
    }

    /// Scaled-down set-level plan: `n = 200`, `d = 1..=60`.
    pub fn desk_set_level(master_seed: u64) -> Self {
        Self::new(Mode::SetLevel, (1..=60).collect(), DEFAULT_R_GRID.to_vec(), 200, 60, master_seed)
    }

    /// Point-level, `n = 10000`, `d = 1..=60`, 60 trials.
    pub fn fig1(master_seed: u64) -> Self {
        Self::new(Mode::PointLevel, (1..=60).collect(), DEFAULT_R_GRID.to_vec(), 10_000, 60, master_seed)
    }

    /// Set-level, `n = 1000`, `d = 1..=80`, 60 trials.
    pub fn fig2(master_seed: u64) -> Self {
        Self::new(Mode::SetLevel, (1..=80).collect(), DEFAULT_R_GRID.to_vec(), 1000, 60, master_seed)
    }

    /// Set-level, `n = 10000`, `d = 1..=80`, 60 trials.
    pub fn fig3(master_seed: u64) -> Self {
        Self::new(Mode::SetLevel, (1..=80).collect(), DEFAULT_R_GRID.to_vec(), 10_000, 60, master_seed)
    }

    pub fn preset(name: &str, master_seed: u64) -> Option<Self> {
        Some(match name {
            "desk-point" => Self::desk_point_level(master_seed),
            "desk-set" => Self::desk_set_level(master_seed),
            "fig1" => Self::fig1(master_seed),
            "fig2" => Self::fig2(master_seed),
            "fig3" => Self::fig3(master_seed),
            _ => return None,
        })
    }
}

pub const PRESETS: [&str; 5] = ["desk-point", "desk-set", "fig1", "fig2", "fig3"];

pub const DEFAULT_R_GRID: [f64; 4] = [0.0, 0.5, 0.8, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub d: usize,
    pub r: f64,
    pub n: usize,
    pub trials: u64,
    pub freq_linear: f64,
    pub ci_linear: (f64, f64),
    pub freq_fisher: f64,
    pub ci_fisher: (f64, f64),
    pub bound_linear: f64,
    pub bound_fisher: f64,
    pub wall_time_seconds: f64,
    pub lp_calls: u64,
    pub lp_skipped_by_fisher: u64,
}

impl ExperimentRecord {
    pub fn ci_linear_half_width(&self) -> f64 {
        0.5 * (self.ci_linear.1 - self.ci_linear.0)
    }

    pub fn ci_fisher_half_width(&self) -> f64 {
        0.5 * (self.ci_fisher.1 - self.ci_fisher.0)
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn frequency_interval(successes: u64, trials: u64) -> Result<(f64, f64), ExperimentError> {
    if trials == 0 {
        return Err(ExperimentError::ZeroTrials);
    }
    if successes > trials {
        return Err(ExperimentError::SuccessesExceedTrials { successes, trials });
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let high = if successes == trials { 1.0 } else { (center + half).clamp(p, 1.0) };
    Ok((low, high))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct TrialOutcome {
    linear: bool,
    fisher: bool,
    lp_calls: u64,
    lp_skipped: u64,
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of grid cell `(d, r)`.
pub fn cell_seed(master_seed: u64, d: usize, r: f64) -> u64 {
    mix64(mix64(mix64(master_seed) ^ d as u64) ^ r.to_bits())
}

/// The cloud used by trial `trial` of cell `(d, r)`. Point-level runs draw
/// `n + 1` points and treat the last one as the query.
pub fn trial_cloud(plan: &ExperimentPlan, d: usize, r: f64, trial: u64) -> Result<PointCloud, ExperimentError> {
    let layer = LayerSpec::new(d, r).map_err(|e| ExperimentError::InvalidPlan(e.to_string()))?;
    let count = match plan.mode {
        Mode::PointLevel => plan.n + 1,
        Mode::SetLevel => plan.n,
    };
    Ok(sample_layer_stream(&layer, count, cell_seed(plan.master_seed, d, r), trial))
}

fn point_trial(cloud: &PointCloud, kinds: CheckKinds, lp: &LpCheck) -> Result<TrialOutcome, SeparabilityError> {
    let q = cloud.len() - 1;
    let mut out = TrialOutcome::default();
    let fisher_ok = FisherCheck.check_point(cloud, q)?.is_separable();
    out.fisher = kinds.fisher && fisher_ok;
    if kinds.linear {
        if fisher_ok {
            out.linear = true;
            out.lp_skipped = 1;
        } else {
            out.linear = lp.check_point(cloud, q)?.is_separable();
            out.lp_calls = 1;
        }
    }
    Ok(out)
}

fn set_trial(cloud: &PointCloud, kinds: CheckKinds, lp: &LpCheck) -> Result<TrialOutcome, SeparabilityError> {
    let n = cloud.len();
    let mut out = TrialOutcome::default();
    // Points before the first Fisher failure are known Fisher-separable.
    let mut fisher_failure = None;
    let mut fisher_known = 0;
    if kinds.fisher {
        fisher_failure = (0..n).find(|&i| FisherCheck::margin(cloud, i) <= 0.0);
        fisher_known = fisher_failure.map_or(n, |k| k + 1);
        out.fisher = fisher_failure.is_none();
    }
    if kinds.linear {
        out.linear = true;
        for i in 0..n {
            let fisher_ok = if i < fisher_known {
                fisher_failure != Some(i)
            } else {
                FisherCheck::margin(cloud, i) > 0.0
            };
            if fisher_ok {
                out.lp_skipped += 1;
                continue;
            }
            out.lp_calls += 1;
            if !lp.check_point(cloud, i)?.is_separable() {
                out.linear = false;
                break;
            }
        }
    }
    Ok(out)
}

fn run_cell(plan: &ExperimentPlan, d: usize, r: f64) -> Result<ExperimentRecord, ExperimentError> {
    let start = Instant::now();
    let lp = LpCheck::new(plan.tol).map_err(|source| ExperimentError::Check { d, r, trial: 0, source })?;
    let outcomes = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let cloud = trial_cloud(plan, d, r, t)?;
            let res = match plan.mode {
                Mode::PointLevel => point_trial(&cloud, plan.check_kinds, &lp),
                Mode::SetLevel => set_trial(&cloud, plan.check_kinds, &lp),
            };
            res.map_err(|source| ExperimentError::Check { d, r, trial: t, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let elapsed = start.elapsed().as_secs_f64();

    let linear_hits = outcomes.iter().filter(|o| o.linear).count() as u64;
    let fisher_hits = outcomes.iter().filter(|o| o.fisher).count() as u64;
    let trials = plan.trials;
    let freq = |hits: u64, on: bool| if on { hits as f64 / trials as f64 } else { f64::NAN };
    let ci = |hits: u64, on: bool| -> Result<(f64, f64), ExperimentError> {
        if on {
            frequency_interval(hits, trials)
        } else {
            Ok((f64::NAN, f64::NAN))
        }
    };

    let q = BoundQuery::probability(d, r, plan.n as u64).map_err(|e| ExperimentError::InvalidPlan(e.to_string()))?;
    let (bound_linear, bound_fisher) = match plan.mode {
        Mode::PointLevel => (bounds::p1_linear_lb(&q).value, bounds::p1_fisher_lb(&q).value),
        Mode::SetLevel => (bounds::p_linear_lb(&q).value, bounds::p_fisher_lb(&q).value),
    };

    Ok(ExperimentRecord {
        d,
        r,
        n: plan.n,
        trials,
        freq_linear: freq(linear_hits, plan.check_kinds.linear),
        ci_linear: ci(linear_hits, plan.check_kinds.linear)?,
        freq_fisher: freq(fisher_hits, plan.check_kinds.fisher),
        ci_fisher: ci(fisher_hits, plan.check_kinds.fisher)?,
        bound_linear,
        bound_fisher,
        wall_time_seconds: if plan.record_timing { elapsed } else { 0.0 },
        lp_calls: outcomes.iter().map(|o| o.lp_calls).sum(),
        lp_skipped_by_fisher: outcomes.iter().map(|o| o.lp_skipped).sum(),
    })
}

fn run_grid(plan: &ExperimentPlan) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    plan.validate()?;
    let mut records = Vec::with_capacity(plan.d_values.len() * plan.r_values.len());
    for &r in &plan.r_values {
        for &d in &plan.d_values {
            records.push(run_cell(plan, d, r)?);
        }
    }
    Ok(records)
}

/// Estimates the single-point probabilities over the plan grid.
pub fn run_point_level(plan: &ExperimentPlan) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    if plan.mode != Mode::PointLevel {
        return Err(ExperimentError::InvalidPlan("run_point_level needs a point-level plan".into()));
    }
    run_grid(plan)
}

/// Estimates the whole-set probabilities over the plan grid.
pub fn run_set_level(plan: &ExperimentPlan) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    if plan.mode != Mode::SetLevel {
        return Err(ExperimentError::InvalidPlan("run_set_level needs a set-level plan".into()));
    }
    run_grid(plan)
}

pub fn run(plan: &ExperimentPlan) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    match plan.mode {
        Mode::PointLevel => run_point_level(plan),
        Mode::SetLevel => run_set_level(plan),
    }
}
