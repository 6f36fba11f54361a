//! The spherical layer `{x : r <= |x| <= 1}` and exact uniform sampling from it.
//!
//! A point is drawn as a uniformly random direction (a normalized vector of
//! independent standard normal deviates) scaled by a radius drawn through the
//! inverse of the radial CDF `F(rho) = (rho^d - r^d) / (1 - r^d)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("inner radius must satisfy 0 <= r < 1, got {0}")]
    InvalidRadius(f64),
    #[error("uniform deviate must lie in [0, 1], got {0}")]
    DeviateOutOfRange(f64),
    #[error("row {row} has {found} coordinates, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("coordinate {value} in row {row} is not finite")]
    NonFinite { row: usize, value: f64 },
}

/// Parameters of the layer `B_d \ rB_d` (outer radius fixed at 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    d: usize,
    r: f64,
}

impl LayerSpec {
    pub fn new(d: usize, r: f64) -> Result<Self, GeometryError> {
        if d == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if !(0.0..1.0).contains(&r) {
            return Err(GeometryError::InvalidRadius(r));
        }
        Ok(Self { d, r })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn inner_radius(&self) -> f64 {
        self.r
    }

    /// `r^d`, the fraction of the unit ball's volume removed by the hole.
    pub fn hole_fraction(&self) -> f64 {
        powi_usize(self.r, self.d)
    }

    /// Radial CDF `F(rho) = (rho^d - r^d) / (1 - r^d)` on `[r, 1]`.
    pub fn radial_cdf(&self, rho: f64) -> f64 {
        let rho = rho.clamp(self.r, 1.0);
        let hole = self.hole_fraction();
        ((powi_usize(rho, self.d) - hole) / (1.0 - hole)).clamp(0.0, 1.0)
    }
}

pub(crate) fn powi_usize(x: f64, k: usize) -> f64 {
    match i32::try_from(k) {
        Ok(k) => x.powi(k),
        Err(_) => x.powf(k as f64),
    }
}

/// `n` points of dimension `d` stored row-major, with the provenance needed
/// to regenerate them.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    layer: Option<LayerSpec>,
    seed: Option<u64>,
    stream: u64,
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from explicit rows. All rows must share a dimension and
    /// be finite. The cloud carries no layer or seed.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, GeometryError> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        if !rows.is_empty() && dim == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(GeometryError::RaggedRow { row: i, found: row.len(), expected: dim });
            }
            if let Some(&value) = row.iter().find(|v| !v.is_finite()) {
                return Err(GeometryError::NonFinite { row: i, value });
            }
            coords.extend_from_slice(row);
        }
        Ok(Self { layer: None, seed: None, stream: 0, dim, coords })
    }

    pub fn layer(&self) -> Option<LayerSpec> {
        self.layer
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn max_norm(&self) -> f64 {
        self.points().map(norm).fold(0.0, f64::max)
    }

    /// A copy with every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            layer: None,
            seed: self.seed,
            stream: self.stream,
            dim: self.dim,
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    /// A copy whose row `k` is row `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for &p in perm {
            coords.extend_from_slice(self.point(p));
        }
        Self { coords, ..self.clone() }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Inverse of the radial CDF: `rho = (r^d + u (1 - r^d))^(1/d)`.
pub fn radius_inverse_cdf(u: f64, layer: &LayerSpec) -> Result<f64, GeometryError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(GeometryError::DeviateOutOfRange(u));
    }
    Ok(radius_from_deviate(u, layer))
}

fn radius_from_deviate(u: f64, layer: &LayerSpec) -> f64 {
    if u == 1.0 {
        return 1.0;
    }
    let hole = layer.hole_fraction();
    let rho = (hole + u * (1.0 - hole)).powf(1.0 / layer.d as f64);
    rho.clamp(layer.r, 1.0)
}

/// Samples `n` points uniformly from the layer, using stream 0 of `seed`.
pub fn sample_layer(layer: &LayerSpec, n: usize, seed: u64) -> PointCloud {
    sample_layer_stream(layer, n, seed, 0)
}

/// Samples `n` points uniformly from the layer using an independent ChaCha
/// stream of `seed`. Distinct streams of one seed never overlap, so trial
/// `t` of an experiment can use stream `t` regardless of scheduling.
pub fn sample_layer_stream(layer: &LayerSpec, n: usize, seed: u64, stream: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let d = layer.d;
    let mut coords = vec![0.0; n * d];
    for row in coords.chunks_exact_mut(d) {
        fill_direction(&mut rng, row);
        let u: f64 = rng.random();
        let rho = radius_from_deviate(u, layer);
        for c in row.iter_mut() {
            *c *= rho;
        }
    }
    PointCloud { layer: Some(*layer), seed: Some(seed), stream, dim: d, coords }
}

fn fill_direction<R: Rng>(rng: &mut R, row: &mut [f64]) {
    loop {
        for c in row.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let len = norm(row);
        if len > 0.0 && len.is_finite() {
            for c in row.iter_mut() {
                *c /= len;
            }
            return;
        }
    }
}

/// Volume of the unit ball in `d` dimensions, `pi^(d/2) / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    ln_unit_ball_volume(d).exp()
}

/// Natural log of the unit-ball volume via `V_d = V_{d-2} * 2 pi / d`.
pub fn ln_unit_ball_volume(d: usize) -> f64 {
    let mut acc = if d % 2 == 0 { 0.0 } else { 2f64.ln() };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        acc += (2.0 * std::f64::consts::PI / k as f64).ln();
        k += 2;
    }
    acc
}
