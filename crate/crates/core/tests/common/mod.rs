#![allow(dead_code)]

pub mod bigfloat;

use bigfloat::BigFloat;
use stochsep::bounds::BoundId;
use stochsep::geometry::{norm, LayerSpec, PointCloud};

/// Upper 0.1% point of chi-square with 35 degrees of freedom.
pub const CHI2_999_DF35: f64 = 66.61882884370104;

/// `sqrt(n)` times the upper 0.1% point of the one-sample Kolmogorov-Smirnov
/// statistic at `n = 100000`.
pub const KS_001_SCALED_1E5: f64 = 1.9489415643306716;

/// Reference value of a bound, computed from the formula as written with a
/// 4096-bit mantissa. Probability bounds are clamped to `[0, 1]`. `None` where
/// the formula has no value (`r = 0` in the original Fisher count).
pub fn bound_oracle(id: BoundId, d: usize, r: f64, n: u64, theta: f64) -> Option<BigFloat> {
    let one = BigFloat::from_u64(1);
    let two = BigFloat::from_u64(2);
    let rb = BigFloat::from_f64(r);
    let th = BigFloat::from_f64(theta);
    let nb = BigFloat::from_u64(n);
    let s = one.sub(&rb.mul(&rb)).sqrt();
    let s_d = s.powu(d as u64);
    let r_d = rb.powu(d as u64);
    let two_d = BigFloat::pow2(d as i64);
    let clamp = |v: BigFloat| {
        if v.is_negative() {
            BigFloat::zero()
        } else if v.cmp_val(&one).is_gt() {
            one.clone()
        } else {
            v
        }
    };
    Some(match id {
        BoundId::P1LinearLb => clamp(one.sub(&nb.div(&two_d))),
        BoundId::PLinearLb => {
            if n <= 1 {
                one
            } else {
                clamp(one.sub(&nb.mul(&BigFloat::from_u64(n - 1)).div(&two_d)))
            }
        }
        BoundId::P1FisherLb => clamp(one.sub(&r_d).mul(&one.sub(&s_d.div(&two)).powu(n))),
        BoundId::PFisherLb => {
            let inner = one.sub(&BigFloat::from_u64(n.saturating_sub(1)).mul(&s_d).div(&two));
            let base = one.sub(&r_d).mul(&inner);
            if n == 0 {
                one
            } else if base.is_negative() || base.is_zero() {
                BigFloat::zero()
            } else {
                clamp(base.powu(n))
            }
        }
        BoundId::Eq1NFisher => {
            if r == 0.0 {
                return None;
            }
            let lead = rb.div(&s).powu(d as u64);
            let w = two.mul(&th).mul(&s_d).div(&r_d.mul(&r_d));
            lead.mul(&one.add(&w).sqrt().sub(&one))
        }
        BoundId::N1Fisher => th.div(&s_d),
        BoundId::NFisher => th.div(&s_d).sqrt(),
        BoundId::N1Linear => th.mul(&two_d),
        BoundId::NLinear => th.mul(&two_d).sqrt(),
    })
}

/// Largest integer strictly below a positive reference value, when it fits in `f64`.
pub fn oracle_largest_integer_below(v: &BigFloat) -> Option<f64> {
    let f = v.to_f64();
    if !(f.is_finite() && f > 0.0 && f < 9.0e15) {
        return None;
    }
    let c = f.ceil();
    // step down if the ceiling is not strictly above the exact value
    let cb = BigFloat::from_f64(c);
    let k = if cb.cmp_val(v).is_gt() { c - 1.0 } else { c };
    let kb = BigFloat::from_f64(k);
    Some(if kb.cmp_val(v).is_lt() { k } else { k - 1.0 })
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic of the norms of `cloud`
/// against the radial law of `layer`.
pub fn radial_ks_statistic(cloud: &PointCloud, layer: &LayerSpec) -> f64 {
    let mut radii: Vec<f64> = cloud.points().map(norm).collect();
    radii.sort_by(f64::total_cmp);
    let m = radii.len() as f64;
    radii
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            let f = layer.radial_cdf(rho);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max)
}

/// Pearson statistic of polar angles of planar points over `bins` equal sectors.
pub fn angle_chi_square(cloud: &PointCloud, bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for p in cloud.points() {
        let t = p[1].atan2(p[0]) + std::f64::consts::PI;
        let k = ((t / std::f64::consts::TAU) * bins as f64) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let expected = cloud.len() as f64 / bins as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}
