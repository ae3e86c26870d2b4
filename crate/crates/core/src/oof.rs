//! Multi-scale optimally oriented flux (OOF).
//!
//! For every radius `r` the response is the image convolved with the
//! Hessian of a Gaussian, then summed over a rasterised disk of radius `r`
//! and divided by `r`. With the default dark-on-bright convention the
//! eigenvalue across a vessel is positive and largest at its centreline, so
//! the optimal scale is the radius maximising the larger eigenvalue.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, ScalarField2D, SmoothKind, SymMat2, SymMat2Field, VectorField2D};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OofParams {
    /// Disk radii in pixels, strictly ascending.
    pub radii: Vec<f64>,
    /// Gaussian scale applied before the flux computation.
    pub sigma: f64,
    /// Vessels darker than the background (retinal fundus convention).
    pub dark_on_bright: bool,
}

impl Default for OofParams {
    fn default() -> Self {
        Self {
            radii: (0..11).map(|i| 1.0 + 0.5 * i as f64).collect(),
            sigma: 1.0,
            dark_on_bright: true,
        }
    }
}

impl OofParams {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::param("OOF radii must be nonempty"));
        }
        if self.radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::param("OOF radii must be positive"));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("OOF radii must be strictly ascending"));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::param("OOF sigma must be > 0"));
        }
        Ok(())
    }
}

/// Eigen-decomposition of a symmetric 2x2 matrix with `xi1 <= xi2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigen2 {
    pub xi1: f64,
    pub xi2: f64,
    pub v1: [f64; 2],
    pub v2: [f64; 2],
}

/// Closed-form eigen-decomposition. Eigenvectors have their first nonzero
/// component positive; a degenerate spectrum yields `v1 = (1, 0)`.
pub fn eigen2x2(m: &SymMat2) -> Eigen2 {
    let mean = 0.5 * (m.m11 + m.m22);
    let half = 0.5 * (m.m11 - m.m22);
    let rad = half.hypot(m.m12);
    let scale = m.m11.abs().max(m.m22.abs()).max(m.m12.abs());
    if rad <= 1e-15 * scale || rad == 0.0 {
        return Eigen2 {
            xi1: mean,
            xi2: mean,
            v1: [1.0, 0.0],
            v2: [0.0, 1.0],
        };
    }
    let theta = 0.5 * (2.0 * m.m12).atan2(m.m11 - m.m22);
    let (s, c) = theta.sin_cos();
    Eigen2 {
        xi1: mean - rad,
        xi2: mean + rad,
        v1: canonical_sign([-s, c]),
        v2: canonical_sign([c, s]),
    }
}

fn canonical_sign(v: [f64; 2]) -> [f64; 2] {
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        [-v[0] + 0.0, -v[1] + 0.0]
    } else {
        [v[0] + 0.0, v[1] + 0.0]
    }
}

/// Sampled Gaussian derivative kernels `(g, g', g'')`, moment-normalised so
/// that they differentiate linear and quadratic functions exactly.
pub(crate) fn gaussian_derivative_kernels(sigma: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = grid::gaussian_kernel(sigma);
    let r = (g.len() / 2) as f64;
    let t = |i: usize| i as f64 - r;
    let m2: f64 = g.iter().enumerate().map(|(i, v)| t(i) * t(i) * v).sum();
    let g1: Vec<f64> = g.iter().enumerate().map(|(i, v)| -t(i) * v / m2).collect();
    let raw2: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(i, v)| (t(i) * t(i) - m2) * v)
        .collect();
    let norm2: f64 = raw2.iter().enumerate().map(|(i, v)| t(i) * t(i) * v).sum();
    let g2 = raw2.iter().map(|v| 2.0 * v / norm2).collect();
    (g, g1, g2)
}

/// Gaussian-smoothed Hessian components `(Hxx, Hxy, Hyy)`.
fn gaussian_hessian(image: &ScalarField2D, sigma: f64) -> [Vec<f64>; 3] {
    let (g, g1, g2) = gaussian_derivative_kernels(sigma);
    let spec = image.spec();
    let v = image.values();
    [
        grid::convolve_separable(v, spec, &g2, &g),
        grid::convolve_separable(v, spec, &g1, &g1),
        grid::convolve_separable(v, spec, &g, &g2),
    ]
}

/// Sum of `values` over the rasterised disk `dx² + dy² <= r²` around every
/// node, with edge replication.
fn disk_sum(values: &[f64], spec: GridSpec, r: f64) -> Vec<f64> {
    let (w, h) = (spec.width(), spec.height());
    let reach = r.floor() as isize;
    let pad = reach as usize;
    let pw = w + 2 * pad;
    // row prefix sums over edge-replicated rows
    let mut prefix = vec![0.0; h * (pw + 1)];
    for y in 0..h {
        let row = &values[y * w..(y + 1) * w];
        let base = y * (pw + 1);
        for px in 0..pw {
            let sx = grid::clamp_index(px as isize - pad as isize, w);
            prefix[base + px + 1] = prefix[base + px] + row[sx];
        }
    }
    let half_widths: Vec<isize> = (-reach..=reach)
        .map(|dy| ((r * r - (dy * dy) as f64).max(0.0) + 1e-9).sqrt().floor() as isize)
        .collect();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for (k, dy) in (-reach..=reach).enumerate() {
            let sy = grid::clamp_index(y as isize + dy, h);
            let base = sy * (pw + 1);
            let hw = half_widths[k];
            for x in 0..w {
                let lo = (x as isize - hw + pad as isize) as usize;
                let hi = (x as isize + hw + pad as isize) as usize + 1;
                out[y * w + x] += prefix[base + hi] - prefix[base + lo];
            }
        }
    }
    out
}

fn response_from_hessian(hess: &[Vec<f64>; 3], spec: GridSpec, r: f64, sign: f64) -> SymMat2Field {
    let s = sign / r;
    let [sxx, sxy, syy] = [0, 1, 2].map(|c| disk_sum(&hess[c], spec, r));
    let entries = (0..spec.len())
        .map(|i| SymMat2::new(s * sxx[i], s * sxy[i], s * syy[i]))
        .collect();
    SymMat2Field::new(spec, entries).expect("sizes agree")
}

/// Raw OOF response `(1/r) (∂ᵢⱼG_σ) * 1_r * I` at a single radius.
pub fn oof_response(image: &ScalarField2D, r: f64, sigma: f64) -> Result<SymMat2Field> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::param(format!("OOF radius must be > 0, got {r}")));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::param(format!("OOF sigma must be > 0, got {sigma}")));
    }
    let hess = gaussian_hessian(image, sigma);
    Ok(response_from_hessian(&hess, image.spec(), r, 1.0))
}

/// Output of the multi-scale filter.
#[derive(Clone, Debug)]
pub struct OofResult {
    pub radii: Vec<f64>,
    /// Selected radius per node.
    pub scale_map: ScalarField2D,
    /// `max(0, ξ₂)` at the selected radius.
    pub vesselness: ScalarField2D,
    /// Unit vessel tangent (eigenvector of the smaller eigenvalue).
    pub q1: VectorField2D,
    /// Unit vessel normal.
    pub q2: VectorField2D,
    /// `(ξ̂₁, ξ̂₂)` for every radius.
    pub per_scale_eigs: Vec<(ScalarField2D, ScalarField2D)>,
    /// Sign-adjusted response matrices for every radius.
    pub responses: Vec<SymMat2Field>,
}

impl OofResult {
    pub fn spec(&self) -> GridSpec {
        self.vesselness.spec()
    }

    /// Index into `radii` of the selected radius at a pixel.
    pub fn scale_index(&self, x: usize, y: usize) -> usize {
        let r = self.scale_map.get(x, y);
        self.radii.iter().position(|&v| v == r).unwrap_or(0)
    }

    /// Per-radius vesselness `max(0, ξ̂₂(·, r))`.
    pub fn scale_vesselness(&self, k: usize) -> ScalarField2D {
        self.per_scale_eigs[k].1.map(|v| v.max(0.0))
    }

    /// Per-radius eigenframes `(q̂₁, q̂₂)`.
    pub fn scale_frames(&self, k: usize) -> (VectorField2D, VectorField2D) {
        let spec = self.spec();
        let (v1, v2): (Vec<_>, Vec<_>) = self.responses[k]
            .entries()
            .iter()
            .map(|m| {
                let e = eigen2x2(m);
                (e.v1, e.v2)
            })
            .unzip();
        (
            VectorField2D::new(spec, v1).expect("sizes agree"),
            VectorField2D::new(spec, v2).expect("sizes agree"),
        )
    }
}

/// Runs the filter over all radii and selects the optimal scale per node.
pub fn oof_multiscale(image: &ScalarField2D, params: &OofParams) -> Result<OofResult> {
    params.validate()?;
    let spec = image.spec();
    let sign = if params.dark_on_bright { 1.0 } else { -1.0 };
    let hess = gaussian_hessian(image, params.sigma);
    let responses: Vec<SymMat2Field> = params
        .radii
        .par_iter()
        .map(|&r| response_from_hessian(&hess, spec, r, sign))
        .collect();

    let n = spec.len();
    let mut per_scale_eigs = Vec::with_capacity(responses.len());
    let mut decomps: Vec<Vec<Eigen2>> = Vec::with_capacity(responses.len());
    for resp in &responses {
        let eig: Vec<Eigen2> = resp.entries().iter().map(eigen2x2).collect();
        let xi1 = eig.iter().map(|e| e.xi1).collect();
        let xi2 = eig.iter().map(|e| e.xi2).collect();
        per_scale_eigs.push((
            ScalarField2D::new(spec, xi1)?,
            ScalarField2D::new(spec, xi2)?,
        ));
        decomps.push(eig);
    }

    let mut scale = Vec::with_capacity(n);
    let mut vess = Vec::with_capacity(n);
    let mut q1 = Vec::with_capacity(n);
    let mut q2 = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = 0;
        for k in 1..decomps.len() {
            if decomps[k][i].xi2 > decomps[best][i].xi2 {
                best = k;
            }
        }
        let e = decomps[best][i];
        scale.push(params.radii[best]);
        vess.push(e.xi2.max(0.0));
        q1.push(e.v1);
        q2.push(e.v2);
    }

    Ok(OofResult {
        radii: params.radii.clone(),
        scale_map: ScalarField2D::new(spec, scale)?,
        vesselness: ScalarField2D::new(spec, vess)?,
        q1: VectorField2D::new(spec, q1)?,
        q2: VectorField2D::new(spec, q2)?,
        per_scale_eigs,
        responses,
    })
}

/// Smoothed vesselness used as the lifted coordinate, with its range.
#[derive(Clone, Debug)]
pub struct FeatureMap {
    pub map: ScalarField2D,
    /// `‖𝓘‖_∞`, upper end of the feature interval `[0, theta_max]`.
    pub theta_max: f64,
}

pub fn feature_map(vesselness: &ScalarField2D, kind: SmoothKind, size: f64) -> Result<FeatureMap> {
    if vesselness.min() < 0.0 {
        return Err(Error::param("vesselness must be nonnegative"));
    }
    let map = grid::smooth(vesselness, kind, size)?.map(|v| v.max(0.0));
    let theta_max = map.max();
    Ok(FeatureMap { map, theta_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(w: usize, h: usize) -> GridSpec {
        GridSpec::new(w, h).unwrap()
    }

    /// Horizontal dark bar of the given half-width centred on row `cy`.
    fn dark_bar(s: GridSpec, cy: f64, half_width: f64) -> ScalarField2D {
        ScalarField2D::from_fn(s, |_, y| {
            let d = (y as f64 - cy).abs();
            let cover = (half_width + 0.5 - d).clamp(0.0, 1.0);
            1.0 - 0.8 * cover
        })
    }

    fn reconstruct(e: &Eigen2) -> SymMat2 {
        SymMat2::outer(e.v1, e.xi1).add(&SymMat2::outer(e.v2, e.xi2))
    }

    #[test]
    fn eigen_identity_and_reflection() {
        let e = eigen2x2(&SymMat2::IDENTITY);
        assert_eq!((e.xi1, e.xi2), (1.0, 1.0));
        assert_eq!(e.v1, [1.0, 0.0]);
        let e = eigen2x2(&SymMat2::new(0.0, 1.0, 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.xi1 + 1.0).abs() < 1e-15 && (e.xi2 - 1.0).abs() < 1e-15);
        assert!((e.v1[0] - h).abs() < 1e-15 && (e.v1[1] + h).abs() < 1e-15);
        assert!((e.v2[0] - h).abs() < 1e-15 && (e.v2[1] - h).abs() < 1e-15);
    }

    #[test]
    fn eigen_diagonal() {
        let e = eigen2x2(&SymMat2::diag(3.0, 1.0));
        assert_eq!((e.xi1, e.xi2), (1.0, 3.0));
        assert_eq!(e.v2, [1.0, 0.0]);
        assert_eq!(e.v1, [0.0, 1.0]);
    }

    #[test]
    fn eigen_reconstruction_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let m = SymMat2::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            );
            let e = eigen2x2(&m);
            assert!(e.xi1 <= e.xi2);
            let dot = e.v1[0] * e.v2[0] + e.v1[1] * e.v2[1];
            assert!(dot.abs() < 1e-14);
            assert!(reconstruct(&e).max_abs_diff(&m) <= 1e-12);
        }
    }

    #[test]
    fn derivative_kernels_are_exact_on_polynomials() {
        let (g, g1, g2) = gaussian_derivative_kernels(1.3);
        let r = (g.len() / 2) as f64;
        let t = |i: usize| i as f64 - r;
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((g1.iter().enumerate().map(|(i, v)| -t(i) * v).sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(g2.iter().sum::<f64>().abs() < 1e-14);
        assert!((g2.iter().enumerate().map(|(i, v)| t(i) * t(i) * v).sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn constant_image_has_zero_response() {
        let img = ScalarField2D::constant(spec(20, 20), 0.7);
        let q = oof_response(&img, 2.0, 1.0).unwrap();
        assert!(q.entries().iter().all(|m| m.max_abs_diff(&SymMat2::default()) < 1e-12));
        let res = oof_multiscale(&img, &OofParams::default()).unwrap();
        assert!(res.vesselness.values().iter().all(|&v| v == 0.0));
        assert!(res.scale_map.values().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn response_rejects_bad_parameters() {
        let img = ScalarField2D::constant(spec(8, 8), 0.0);
        assert!(oof_response(&img, 0.0, 1.0).is_err());
        assert!(oof_response(&img, 1.0, -1.0).is_err());
        let bad = OofParams {
            radii: vec![2.0, 1.0],
            ..OofParams::default()
        };
        assert!(oof_multiscale(&img, &bad).is_err());
    }

    #[test]
    fn paraboloid_response_matches_direct_convolution() {
        let s = spec(40, 40);
        let img = ScalarField2D::from_fn(s, |x, y| {
            let (u, v) = (x as f64 - 20.0, y as f64 - 20.0);
            u * u + v * v
        });
        let (r, sigma) = (3.0, 1.0);
        let q = oof_response(&img, r, sigma).unwrap();

        // brute-force 2D kernels: outer products of the sampled 1D kernels
        let (g, g1, g2) = gaussian_derivative_kernels(sigma);
        let k = (g.len() / 2) as i64;
        let disk: Vec<(i64, i64)> = (-3..=3i64)
            .flat_map(|dy| (-3..=3i64).map(move |dx| (dx, dy)))
            .filter(|(dx, dy)| (dx * dx + dy * dy) as f64 <= r * r)
            .collect();
        let at = |x: i64, y: i64| img.get(x.clamp(0, 39) as usize, y.clamp(0, 39) as usize);
        let hess_at = |x: i64, y: i64| {
            let mut h = [0.0; 3];
            for j in -k..=k {
                for i in -k..=k {
                    let (a, b) = ((i + k) as usize, (j + k) as usize);
                    let f = at(x - i, y - j);
                    h[0] += g2[a] * g[b] * f;
                    h[1] += g1[a] * g1[b] * f;
                    h[2] += g[a] * g2[b] * f;
                }
            }
            h
        };
        for &(x, y) in &[(20i64, 20i64), (15, 22), (25, 17), (11, 11)] {
            let mut acc = [0.0; 3];
            for &(dx, dy) in &disk {
                let h = hess_at(x + dx, y + dy);
                for c in 0..3 {
                    acc[c] += h[c];
                }
            }
            let oracle = SymMat2::new(acc[0] / r, acc[1] / r, acc[2] / r);
            let got = q.get(x as usize, y as usize);
            let scale = oracle.m11.abs().max(oracle.m22.abs());
            assert!(got.max_abs_diff(&oracle) <= 1e-6 * scale, "{got:?} vs {oracle:?}");
            // Hessian of x²+y² is 2I, so Q = 2|disk|/r · I
            let exact = 2.0 * disk.len() as f64 / r;
            assert!((got.m11 - exact).abs() < 1e-9 && got.m12.abs() < 1e-9);
        }
    }

    #[test]
    fn response_is_linear_in_the_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = spec(24, 20);
        let a = ScalarField2D::from_fn(s, |_, _| rng.random::<f64>());
        let b = ScalarField2D::from_fn(s, |_, _| rng.random::<f64>());
        let combo = ScalarField2D::from_fn(s, |x, y| 2.0 * a.get(x, y) - 0.5 * b.get(x, y));
        let (qa, qb, qc) = (
            oof_response(&a, 2.5, 1.0).unwrap(),
            oof_response(&b, 2.5, 1.0).unwrap(),
            oof_response(&combo, 2.5, 1.0).unwrap(),
        );
        for i in 0..s.len() {
            let expect = qa.entries()[i].scale(2.0).add(&qb.entries()[i].scale(-0.5));
            assert!(qc.entries()[i].max_abs_diff(&expect) < 1e-9);
        }
    }

    #[test]
    fn bar_response_peaks_near_its_half_width() {
        let s = spec(40, 40);
        let img = dark_bar(s, 20.0, 3.0);
        let mut best = (0.0, f64::NEG_INFINITY);
        for r in 1..=6 {
            let q = oof_response(&img, r as f64, 1.0).unwrap();
            let e = eigen2x2(&q.get(20, 20));
            let mag = e.xi2.abs().max(e.xi1.abs());
            if mag > best.1 {
                best = (r as f64, mag);
            }
        }
        assert!((best.0 - 3.0).abs() <= 1.0, "peak at r = {}", best.0);
    }

    #[test]
    fn horizontal_tube_gives_tangent_and_scale() {
        let s = spec(48, 40);
        let img = dark_bar(s, 20.0, 2.0);
        let res = oof_multiscale(&img, &OofParams::default()).unwrap();
        for x in 8..40 {
            assert!(res.vesselness.get(x, 20) > 0.0);
            let q = res.q1.get(x, 20);
            let angle = q[1].atan2(q[0]).abs().to_degrees();
            assert!(angle.min(180.0 - angle) < 5.0);
            assert!((res.scale_map.get(x, 20) - 2.0).abs() <= 1.0);
        }
    }

    #[test]
    fn multiscale_invariants_hold_on_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = spec(20, 18);
        let img = ScalarField2D::from_fn(s, |_, _| rng.random::<f64>());
        let params = OofParams::default();
        let res = oof_multiscale(&img, &params).unwrap();
        for i in 0..s.len() {
            let (a, b) = (res.q1.vectors()[i], res.q2.vectors()[i]);
            assert!((a[0].hypot(a[1]) - 1.0).abs() < 1e-12);
            assert!((b[0].hypot(b[1]) - 1.0).abs() < 1e-12);
            assert!((a[0] * b[0] + a[1] * b[1]).abs() < 1e-12);
            assert!(res.vesselness.values()[i] >= 0.0);
            assert!(params.radii.contains(&res.scale_map.values()[i]));
            for (xi1, xi2) in &res.per_scale_eigs {
                assert!(xi1.values()[i] <= xi2.values()[i]);
            }
        }
    }

    #[test]
    fn rotation_by_ninety_degrees_is_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (w, h) = (22, 17);
        let img = ScalarField2D::from_fn(spec(w, h), |_, _| rng.random::<f64>());
        // rotated(x', y') = img(y', w-1-x'), a grid of size h x w
        let rot = ScalarField2D::from_fn(spec(h, w), |x, y| img.get(w - 1 - y, x));
        let p = OofParams::default();
        let a = oof_multiscale(&img, &p).unwrap();
        let b = oof_multiscale(&rot, &p).unwrap();
        for y in 0..h {
            for x in 0..w {
                let (xr, yr) = (y, w - 1 - x);
                assert!((a.vesselness.get(x, y) - b.vesselness.get(xr, yr)).abs() < 1e-9);
                // image rotation maps a direction (u, v) to (v, -u); compare outer products
                let qa = a.q1.get(x, y);
                let qb = b.q1.get(xr, yr);
                let rotated = [qa[1], -qa[0]];
                let pa = SymMat2::outer(rotated, 1.0);
                let pb = SymMat2::outer(qb, 1.0);
                let k = p.radii.iter().position(|&r| r == a.scale_map.get(x, y)).unwrap();
                let gap = a.per_scale_eigs[k].1.get(x, y) - a.per_scale_eigs[k].0.get(x, y);
                if gap > 1e-6 {
                    assert!(pa.max_abs_diff(&pb) < 1e-6, "at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn feature_map_range() {
        let s = spec(9, 9);
        let zero = feature_map(&ScalarField2D::constant(s, 0.0), SmoothKind::Mean, 1.0).unwrap();
        assert_eq!(zero.theta_max, 0.0);
        let imp = ScalarField2D::from_fn(s, |x, y| if (x, y) == (4, 4) { 9.0 } else { 0.0 });
        let f = feature_map(&imp, SmoothKind::Mean, 1.0).unwrap();
        assert!((f.theta_max - 1.0).abs() < 1e-12);
        assert!(f.map.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn feature_map_flattens_noisy_centreline() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = spec(64, 32);
        let clean = dark_bar(s, 16.0, 2.0);
        let noisy = ScalarField2D::from_fn(s, |x, y| clean.get(x, y) + 0.05 * (rng.random::<f64>() - 0.5));
        let res = oof_multiscale(&noisy, &OofParams::default()).unwrap();
        let feat = feature_map(&res.vesselness, SmoothKind::Gaussian, 2.0).unwrap();
        let cv = |f: &ScalarField2D| {
            let vals: Vec<f64> = (8..56).map(|x| f.get(x, 16)).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64;
            var.sqrt() / m
        };
        assert!(cv(&feat.map) < cv(&res.vesselness));
    }
}
