//! Metric tensors: the vesselness-weighted spatial tensor, its
//! coherence-penalised lift over the feature axis, the IR and ArR baselines,
//! and discrete path energies.
//!
//! The lifted grid stores the feature axis in level units: moving by one
//! level costs like moving by one pixel before weighting. `beta` therefore
//! weighs feature motion per level, which keeps its meaning independent of
//! the image contrast.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eikonal::{BlockTensor, GridDims, TensorField, TensorGrid};
use crate::error::{Error, Result};
use crate::grid::{split_coord, GridSpec, Point2, ScalarField2D, SmoothKind, SymMat2, SymMat2Field, VectorField2D};
use crate::oof::OofResult;
use crate::path::{LiftedPolyline, Polyline};

/// Feature-axis weight used in place of `β ω` when `β = 0`.
pub const EPS_THETA: f64 = 1e-6;

/// Which metric a path is extracted with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Isotropic Riemannian: `ω I` in the image plane.
    Ir,
    /// Anisotropic radius-lifted Riemannian.
    Arr,
    /// Coherence-penalised feature-lifted metric.
    Proposed,
}

impl MetricKind {
    pub fn label(self) -> &'static str {
        match self {
            MetricKind::Ir => "IR",
            MetricKind::Arr => "ArR",
            MetricKind::Proposed => "Proposed",
        }
    }

    pub fn all() -> [MetricKind; 3] {
        [MetricKind::Ir, MetricKind::Arr, MetricKind::Proposed]
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ir" => Ok(MetricKind::Ir),
            "arr" => Ok(MetricKind::Arr),
            "proposed" | "coherence" => Ok(MetricKind::Proposed),
            other => Err(Error::param(format!("unknown metric kind '{other}'"))),
        }
    }
}

/// User-facing metric parameters. `alpha` and `lambda` are derived from the
/// data when left unset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricParams {
    pub alpha: Option<f64>,
    pub beta: f64,
    pub lambda: Option<f64>,
    pub p: f64,
    pub levels: usize,
    pub kappa_max: f64,
    pub feature_filter: SmoothKind,
    pub feature_size: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 1.0,
            lambda: None,
            p: 1.0,
            levels: 120,
            kappa_max: 10.0,
            feature_filter: SmoothKind::Gaussian,
            feature_size: 3.0,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        if let Some(a) = self.alpha {
            finite_nonneg("alpha", a)?;
        }
        if let Some(l) = self.lambda {
            finite_nonneg("lambda", l)?;
        }
        finite_nonneg("beta", self.beta)?;
        finite_nonneg("feature_size", self.feature_size)?;
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::param(format!("p must be > 0, got {}", self.p)));
        }
        if self.levels < 2 {
            return Err(Error::param("levels must be >= 2"));
        }
        if !(self.kappa_max.is_finite() && self.kappa_max >= 1.0) {
            return Err(Error::param("kappa_max must be >= 1"));
        }
        Ok(())
    }

    /// Lower bound on `ω`, `1/κ²`.
    pub fn omega_min(&self) -> f64 {
        1.0 / (self.kappa_max * self.kappa_max)
    }

    /// Fills in data-derived defaults.
    pub fn resolve(&self, vesselness: &ScalarField2D, theta_max: f64) -> Result<ResolvedMetric> {
        self.validate()?;
        let alpha = match self.alpha {
            Some(a) => a,
            None => default_alpha(vesselness, self.omega_min()),
        };
        let lambda = match self.lambda {
            Some(l) => l,
            None if theta_max > 0.0 => (10.0 / theta_max).powf(self.p),
            None => 0.0,
        };
        Ok(ResolvedMetric {
            alpha,
            beta: self.beta,
            lambda,
            p: self.p,
            levels: self.levels,
            kappa_max: self.kappa_max,
        })
    }
}

/// Metric parameters with every value fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedMetric {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub p: f64,
    pub levels: usize,
    pub kappa_max: f64,
}

impl ResolvedMetric {
    pub fn omega_min(&self) -> f64 {
        1.0 / (self.kappa_max * self.kappa_max)
    }
}

/// `α` mapping the 99th percentile of `P` onto the `ω` floor.
pub fn default_alpha(vesselness: &ScalarField2D, omega_min: f64) -> f64 {
    let p99 = vesselness.percentile(0.99);
    if p99 > 0.0 {
        -omega_min.ln() / p99
    } else {
        0.0
    }
}

/// `ω = exp(-α P)`.
pub fn potential(vesselness: &ScalarField2D, alpha: f64) -> Result<ScalarField2D> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::param(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if vesselness.min() < 0.0 {
        return Err(Error::param("vesselness must be nonnegative"));
    }
    Ok(vesselness.map(|p| (-alpha * p).exp()))
}

/// `max(ω, ω_min)`.
pub fn floor_potential(omega: &ScalarField2D, omega_min: f64) -> ScalarField2D {
    omega.map(|w| w.max(omega_min))
}

/// `M = ω q₁q₁ᵀ + q₂q₂ᵀ`.
pub fn spatial_tensor(omega: &ScalarField2D, q1: &VectorField2D, q2: &VectorField2D) -> Result<SymMat2Field> {
    let spec = omega.spec();
    if q1.spec() != spec || q2.spec() != spec {
        return Err(Error::param("frame fields do not match the potential grid"));
    }
    let mut entries = Vec::with_capacity(spec.len());
    for i in 0..spec.len() {
        let (a, b, w) = (q1.vectors()[i], q2.vectors()[i], omega.values()[i]);
        let na = a[0].hypot(a[1]);
        let nb = b[0].hypot(b[1]);
        let dot = a[0] * b[0] + a[1] * b[1];
        if (na - 1.0).abs() > 1e-6 || (nb - 1.0).abs() > 1e-6 || dot.abs() > 1e-6 {
            return Err(Error::Tensor {
                node: i,
                reason: "frame is not orthonormal".into(),
            });
        }
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::Tensor {
                node: i,
                reason: format!("potential {w} outside (0, 1]"),
            });
        }
        entries.push(SymMat2::outer(a, w).add(&SymMat2::outer(b, 1.0)));
    }
    SymMat2Field::new(spec, entries)
}

/// `exp(λ |a - b|^p)`.
#[inline]
pub fn coherence_scale(a: f64, b: f64, lambda: f64, p: f64) -> f64 {
    let d = (a - b).abs();
    if lambda == 0.0 || d == 0.0 {
        return 1.0;
    }
    (lambda * d.powf(p)).exp()
}

/// Image grid times the discretised feature interval `[0, theta_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedGrid {
    pub spec: GridSpec,
    pub levels: usize,
    pub theta_max: f64,
    pub theta_values: Vec<f64>,
}

impl LiftedGrid {
    pub fn new(spec: GridSpec, levels: usize, theta_max: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::param("levels must be >= 2"));
        }
        if !theta_max.is_finite() || theta_max < 0.0 {
            return Err(Error::param(format!("invalid feature range {theta_max}")));
        }
        if theta_max == 0.0 {
            return Err(Error::DegenerateFeatureRange);
        }
        let h = theta_max / (levels - 1) as f64;
        let mut theta_values: Vec<f64> = (0..levels).map(|k| k as f64 * h).collect();
        theta_values[levels - 1] = theta_max;
        Ok(Self {
            spec,
            levels,
            theta_max,
            theta_values,
        })
    }

    pub fn dims(&self) -> GridDims {
        GridDims::new(self.spec.width(), self.spec.height(), self.levels)
    }

    /// Feature spacing between neighbouring levels.
    pub fn theta_step(&self) -> f64 {
        self.theta_max / (self.levels - 1) as f64
    }

    /// Continuous level index of a feature value, clamped to the range.
    pub fn level_of(&self, theta: f64) -> f64 {
        (theta / self.theta_step()).clamp(0.0, (self.levels - 1) as f64)
    }

    pub fn theta_of(&self, level: f64) -> f64 {
        level * self.theta_step()
    }

    /// Nearest level to a feature value.
    pub fn nearest_level(&self, theta: f64) -> usize {
        self.level_of(theta).round() as usize
    }

    pub fn node(&self, x: usize, y: usize, level: usize) -> usize {
        self.dims().index(x, y, level)
    }

    /// Lifted point `(x, y, level)` to `(x, y, ϑ)`.
    pub fn to_feature_units(&self, p: [f64; 3]) -> [f64; 3] {
        [p[0], p[1], self.theta_of(p[2])]
    }
}

/// Lifted tensor `blockdiag(s² M(x), s² β ω(x))` with `s = 𝔠_λ(ϑ, 𝓘(x))`,
/// stored as a per-pixel base tensor and a per-node factor `s²`.
#[derive(Clone, Debug)]
pub struct LiftedTensorField {
    grid: LiftedGrid,
    base: Vec<BlockTensor>,
    scale2: Vec<f64>,
}

impl LiftedTensorField {
    pub fn grid(&self) -> &LiftedGrid {
        &self.grid
    }

    /// Tensor at pixel `i` with `s = 1`.
    pub fn base(&self, pixel: usize) -> BlockTensor {
        self.base[pixel]
    }

    pub fn scale_squared(&self, node: usize) -> f64 {
        self.scale2[node]
    }

    /// Energy of a lifted curve given in feature units.
    pub fn energy(&self, path: &LiftedPolyline) -> Result<f64> {
        let pts: Vec<[f64; 3]> = path
            .points
            .iter()
            .map(|p| {
                if !(p[2] >= -1e-9 && p[2] <= self.grid.theta_max * (1.0 + 1e-9)) {
                    return Err(Error::OutOfDomain {
                        x: p[0],
                        y: p[1],
                        width: self.grid.spec.width(),
                        height: self.grid.spec.height(),
                    });
                }
                Ok([p[0], p[1], self.grid.level_of(p[2])])
            })
            .collect::<Result<_>>()?;
        path_energy(self, &pts)
    }
}

impl TensorField for LiftedTensorField {
    fn dims(&self) -> GridDims {
        self.grid.dims()
    }

    #[inline]
    fn tensor(&self, index: usize) -> BlockTensor {
        self.base[index % self.base.len()].scale(self.scale2[index])
    }

    fn validate(&self) -> Result<()> {
        for (i, t) in self.base.iter().enumerate() {
            if !t.is_positive_definite() {
                return Err(Error::Tensor {
                    node: i,
                    reason: format!("not positive definite: {t:?}"),
                });
            }
        }
        if let Some(i) = self.scale2.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Tensor {
                node: i,
                reason: "coherence scale overflow".into(),
            });
        }
        Ok(())
    }
}

/// Builds the coherence-penalised lifted tensor field.
///
/// `omega` must already be floored at `1/κ²`. The feature-axis entry is
/// clamped so that every node's anisotropy stays within `κ`, except for
/// `β = 0` where it is set to [`EPS_THETA`].
pub fn lifted_tensor_field(
    m: &SymMat2Field,
    omega: &ScalarField2D,
    feature: &ScalarField2D,
    grid: &LiftedGrid,
    params: &ResolvedMetric,
) -> Result<LiftedTensorField> {
    let spec = grid.spec;
    if m.spec() != spec || omega.spec() != spec || feature.spec() != spec {
        return Err(Error::param("input fields do not match the lifted grid"));
    }
    if feature.max() > grid.theta_max * (1.0 + 1e-9) || feature.min() < 0.0 {
        return Err(Error::param("feature map exceeds the lifted feature range"));
    }
    let k2 = params.kappa_max * params.kappa_max;
    let base: Vec<BlockTensor> = m
        .entries()
        .iter()
        .zip(omega.values())
        .map(|(mm, &w)| {
            let t33 = if params.beta == 0.0 {
                EPS_THETA
            } else {
                (params.beta * w).clamp(1.0 / k2, k2 * w)
            };
            BlockTensor::from_sym2(*mm, t33)
        })
        .collect();
    let thetas = &grid.theta_values;
    let n2 = spec.len();
    let mut scale2 = vec![0.0; n2 * grid.levels];
    scale2
        .par_chunks_mut(n2)
        .zip(thetas.par_iter())
        .for_each(|(slice, &th)| {
            for (s, &f) in slice.iter_mut().zip(feature.values()) {
                let c = coherence_scale(th, f, params.lambda, params.p);
                *s = c * c;
            }
        });
    let field = LiftedTensorField {
        grid: grid.clone(),
        base,
        scale2,
    };
    field.validate()?;
    Ok(field)
}

/// Isotropic baseline `ω I` (planar).
pub fn isotropic_tensor(omega: &ScalarField2D) -> Result<TensorGrid> {
    let s = omega.spec();
    let tensors = omega.values().iter().map(|&w| BlockTensor::new(w, 0.0, w, 1.0)).collect();
    TensorGrid::new(GridDims::planar(s.width(), s.height()), tensors)
}

/// Radius-lifted anisotropic baseline over `Ω × radii`. Node `(x, y, k)`
/// carries `blockdiag(M_k(x), ω_k(x))` where `M_k` is built from the
/// per-radius potential and eigenframes.
pub fn radius_lifted_tensor(oof: &OofResult, alpha: f64, kappa_max: f64) -> Result<TensorGrid> {
    let spec = oof.spec();
    let omega_min = 1.0 / (kappa_max * kappa_max);
    let nr = oof.radii.len();
    if nr < 2 {
        return Err(Error::param("the radius-lifted metric needs at least two radii"));
    }
    let slices: Vec<Vec<BlockTensor>> = (0..nr)
        .into_par_iter()
        .map(|k| -> Result<Vec<BlockTensor>> {
            let w = floor_potential(&potential(&oof.scale_vesselness(k), alpha)?, omega_min);
            let (q1, q2) = oof.scale_frames(k);
            let m = spatial_tensor(&w, &q1, &q2)?;
            Ok(m
                .entries()
                .iter()
                .zip(w.values())
                .map(|(mm, &wv)| BlockTensor::from_sym2(*mm, wv))
                .collect())
        })
        .collect::<Result<_>>()?;
    let tensors = slices.into_iter().flatten().collect();
    TensorGrid::new(GridDims::new(spec.width(), spec.height(), nr), tensors)
}

/// Trilinear (bilinear when `nz == 1`) interpolation of the tensor field at
/// a point in index coordinates. The point must lie in the grid box.
pub fn sample_tensor<F: TensorField + ?Sized>(field: &F, p: [f64; 3]) -> BlockTensor {
    let d = field.dims();
    let (x0, fx) = split_coord(p[0], d.nx);
    let (y0, fy) = split_coord(p[1], d.ny);
    let (z0, fz, zn) = if d.nz == 1 {
        (0, 0.0, 1)
    } else {
        let (z, f) = split_coord(p[2], d.nz);
        (z, f, 2)
    };
    let mut acc = BlockTensor::new(0.0, 0.0, 0.0, 0.0);
    for dz in 0..zn {
        let wz = if dz == 0 { 1.0 - fz } else { fz };
        for dy in 0..2 {
            let wy = if dy == 0 { 1.0 - fy } else { fy };
            for dx in 0..2 {
                let wx = if dx == 0 { 1.0 - fx } else { fx };
                let w = wx * wy * wz;
                if w != 0.0 {
                    acc = acc.add(&field.tensor(d.index(x0 + dx, y0 + dy, z0 + dz)).scale(w));
                }
            }
        }
    }
    acc
}

fn in_box(d: GridDims, p: [f64; 3]) -> bool {
    let tol = 1e-9;
    p.iter().all(|v| v.is_finite())
        && p[0] >= -tol
        && p[1] >= -tol
        && p[2] >= -tol
        && p[0] <= (d.nx - 1) as f64 + tol
        && p[1] <= (d.ny - 1) as f64 + tol
        && p[2] <= (d.nz - 1) as f64 + tol
}

/// Midpoint-rule energy `Σ ‖pᵢ₊₁ - pᵢ‖_{T((pᵢ + pᵢ₊₁)/2)}` of a curve in
/// index coordinates.
pub fn path_energy<F: TensorField + ?Sized>(field: &F, points: &[[f64; 3]]) -> Result<f64> {
    let d = field.dims();
    for p in points {
        if !in_box(d, *p) {
            return Err(Error::OutOfDomain {
                x: p[0],
                y: p[1],
                width: d.nx,
                height: d.ny,
            });
        }
    }
    let mut e = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
        let t = sample_tensor(field, mid);
        e += t.norm([b[0] - a[0], b[1] - a[1], b[2] - a[2]]);
    }
    Ok(e)
}

/// Energy of a planar curve under a planar field.
pub fn polyline_energy<F: TensorField + ?Sized>(field: &F, path: &Polyline) -> Result<f64> {
    let pts: Vec<[f64; 3]> = path.points.iter().map(|p: &Point2| [p[0], p[1], 0.0]).collect();
    path_energy(field, &pts)
}
