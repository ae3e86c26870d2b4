//! Uniform 2D grid containers, sampling and the differential/smoothing
//! operators shared by the numeric modules.
//!
//! Nodes sit at integer coordinates `(x, y)` with `x` the column index and
//! `y` the row index; storage is row-major. Grid spacing is one pixel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in continuous pixel coordinates, `[x, y]`.
pub type Point2 = [f64; 2];

/// Shape of an image grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    width: usize,
    height: usize,
}

impl GridSpec {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::param(format!(
                "grid must be at least 2x2, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Distance between neighbouring nodes, always one pixel.
    pub fn spacing(&self) -> f64 {
        1.0
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// Whether a continuous point lies in `[0, w-1] x [0, h-1]`.
    pub fn contains(&self, p: Point2) -> bool {
        p[0].is_finite()
            && p[1].is_finite()
            && p[0] >= 0.0
            && p[1] >= 0.0
            && p[0] <= (self.width - 1) as f64
            && p[1] <= (self.height - 1) as f64
    }

    /// `Error::OutOfDomain` unless [`contains`](Self::contains) holds.
    pub fn check_point(&self, p: Point2) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                x: p[0],
                y: p[1],
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Nearest grid node to a point already known to be inside the domain.
    pub fn nearest_node(&self, p: Point2) -> (usize, usize) {
        let x = p[0].round().clamp(0.0, (self.width - 1) as f64) as usize;
        let y = p[1].round().clamp(0.0, (self.height - 1) as f64) as usize;
        (x, y)
    }
}

/// Scalar value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2D {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::param(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite value at node {i}")));
        }
        Ok(Self { spec, values })
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            values: vec![value; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for y in 0..spec.height {
            for x in 0..spec.width {
                values.push(f(x, y));
            }
        }
        Self { spec, values }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.spec.index(x, y)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Value at the given quantile (`q` in `[0, 1]`, nearest-rank).
    pub fn percentile(&self, q: f64) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = (q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64).round() as usize;
        sorted[rank]
    }

    /// Bilinear interpolation; see [`bilinear_sample`].
    pub fn sample(&self, p: Point2) -> Result<f64> {
        bilinear_sample(self, p)
    }
}

/// Pair of reals per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2D {
    spec: GridSpec,
    vectors: Vec<[f64; 2]>,
}

impl VectorField2D {
    pub fn new(spec: GridSpec, vectors: Vec<[f64; 2]>) -> Result<Self> {
        if vectors.len() != spec.len() {
            return Err(Error::param(format!(
                "expected {} vectors, got {}",
                spec.len(),
                vectors.len()
            )));
        }
        if vectors.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::param("non-finite vector component"));
        }
        Ok(Self { spec, vectors })
    }

    pub fn constant(spec: GridSpec, v: [f64; 2]) -> Self {
        Self {
            spec,
            vectors: vec![v; spec.len()],
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.vectors[self.spec.index(x, y)]
    }
}

/// Symmetric 2x2 matrix `[[m11, m12], [m12, m22]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2 {
        m11: 1.0,
        m12: 0.0,
        m22: 1.0,
    };

    pub fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Self { m11, m12, m22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    /// `a * v vᵀ`
    pub fn outer(v: [f64; 2], a: f64) -> Self {
        Self::new(a * v[0] * v[0], a * v[0] * v[1], a * v[1] * v[1])
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m22 * s)
    }

    pub fn add(&self, o: &SymMat2) -> Self {
        Self::new(self.m11 + o.m11, self.m12 + o.m12, self.m22 + o.m22)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m12 * v[0] + self.m22 * v[1],
        ]
    }

    /// `vᵀ M v`
    pub fn quad(&self, v: [f64; 2]) -> f64 {
        v[0] * (self.m11 * v[0] + self.m12 * v[1]) + v[1] * (self.m12 * v[0] + self.m22 * v[1])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.abs() < 1e-300 || !d.is_finite() {
            return None;
        }
        Some(Self::new(self.m22 / d, -self.m12 / d, self.m11 / d))
    }

    pub fn max_abs_diff(&self, o: &SymMat2) -> f64 {
        (self.m11 - o.m11)
            .abs()
            .max((self.m12 - o.m12).abs())
            .max((self.m22 - o.m22).abs())
    }
}

/// Symmetric 2x2 matrix per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat2Field {
    spec: GridSpec,
    entries: Vec<SymMat2>,
}

impl SymMat2Field {
    pub fn new(spec: GridSpec, entries: Vec<SymMat2>) -> Result<Self> {
        if entries.len() != spec.len() {
            return Err(Error::param(format!(
                "expected {} tensors, got {}",
                spec.len(),
                entries.len()
            )));
        }
        Ok(Self { spec, entries })
    }

    pub fn constant(spec: GridSpec, m: SymMat2) -> Self {
        Self {
            spec,
            entries: vec![m; spec.len()],
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn entries(&self) -> &[SymMat2] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> SymMat2 {
        self.entries[self.spec.index(x, y)]
    }

    /// Smallest eigenvalue over all nodes; nonnegative for PSD fields.
    pub fn min_eigenvalue(&self) -> f64 {
        self.entries
            .iter()
            .map(|m| {
                let half = 0.5 * (m.m11 - m.m22);
                0.5 * (m.m11 + m.m22) - (half * half + m.m12 * m.m12).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Bilinear interpolation of the four nodes surrounding `p`. Exact at nodes.
pub fn bilinear_sample(field: &ScalarField2D, p: Point2) -> Result<f64> {
    let spec = field.spec;
    spec.check_point(p)?;
    let (x0, fx) = split_coord(p[0], spec.width);
    let (y0, fy) = split_coord(p[1], spec.height);
    let v00 = field.get(x0, y0);
    if fx == 0.0 && fy == 0.0 {
        return Ok(v00);
    }
    let v10 = field.get(x0 + 1, y0);
    let v01 = field.get(x0, y0 + 1);
    let v11 = field.get(x0 + 1, y0 + 1);
    let top = v00 + fx * (v10 - v00);
    let bottom = v01 + fx * (v11 - v01);
    Ok(top + fy * (bottom - top))
}

/// Splits a coordinate into a base cell index and a fraction such that
/// `base + 1` is always a valid node.
#[inline]
pub(crate) fn split_coord(c: f64, n: usize) -> (usize, f64) {
    let max_base = n - 2;
    let base = (c.floor().max(0.0) as usize).min(max_base);
    (base, c - base as f64)
}

/// Central differences in the interior, one-sided differences on the border.
pub fn gradient_central(field: &ScalarField2D) -> VectorField2D {
    let spec = field.spec;
    let (w, h) = (spec.width, spec.height);
    let h_sp = spec.spacing();
    let mut vectors = Vec::with_capacity(spec.len());
    for y in 0..h {
        for x in 0..w {
            let gx = if x == 0 {
                field.get(1, y) - field.get(0, y)
            } else if x == w - 1 {
                field.get(w - 1, y) - field.get(w - 2, y)
            } else {
                0.5 * (field.get(x + 1, y) - field.get(x - 1, y))
            };
            let gy = if y == 0 {
                field.get(x, 1) - field.get(x, 0)
            } else if y == h - 1 {
                field.get(x, h - 1) - field.get(x, h - 2)
            } else {
                0.5 * (field.get(x, y + 1) - field.get(x, y - 1))
            };
            vectors.push([gx / h_sp, gy / h_sp]);
        }
    }
    VectorField2D { spec, vectors }
}

/// Smoothing filter family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothKind {
    /// Box filter of half-width `floor(size)`.
    Mean,
    /// Gaussian of standard deviation `size`, truncated at four sigma.
    Gaussian,
}

/// Smooths a field with edge replication at the borders.
pub fn smooth(field: &ScalarField2D, kind: SmoothKind, size: f64) -> Result<ScalarField2D> {
    if !size.is_finite() || size < 0.0 {
        return Err(Error::param(format!("smoothing size must be >= 0, got {size}")));
    }
    let kernel = match kind {
        SmoothKind::Mean => {
            let r = size.floor() as usize;
            if r == 0 {
                return Ok(field.clone());
            }
            vec![1.0 / (2 * r + 1) as f64; 2 * r + 1]
        }
        SmoothKind::Gaussian => {
            if size == 0.0 {
                return Err(Error::param("gaussian sigma must be > 0"));
            }
            gaussian_kernel(size)
        }
    };
    let values = convolve_separable(field.values(), field.spec, &kernel, &kernel);
    Ok(ScalarField2D {
        spec: field.spec,
        values,
    })
}

/// Sampled Gaussian normalised to unit sum, truncated at `ceil(4 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (4.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-r..=r)
        .map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable convolution `(f * (kx ⊗ ky))(x, y) = Σ kx[i] ky[j] f(x - i, y - j)`
/// with edge replication. Kernels have odd length and are centred.
pub fn convolve_separable(values: &[f64], spec: GridSpec, kx: &[f64], ky: &[f64]) -> Vec<f64> {
    let (w, h) = (spec.width, spec.height);
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &values[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in kx.iter().enumerate() {
                let sx = clamp_index(x as isize - (i as isize - rx), w);
                acc += kv * row[sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for (j, &kv) in ky.iter().enumerate() {
            let sy = clamp_index(y as isize - (j as isize - ry), h);
            let src = &tmp[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += kv * s;
            }
        }
    }
    out
}

#[inline]
pub(crate) fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Euclidean distance from every node to the nearest `true` node of `mask`.
/// Nodes are at infinite distance when the mask is empty.
pub fn distance_transform(spec: GridSpec, mask: &[bool]) -> ScalarField2D {
    let (w, h) = (spec.width, spec.height);
    let inf = 1e20;
    let mut sq: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { inf }).collect();

    let mut buf_f = vec![0.0; w.max(h)];
    let mut buf_d = vec![0.0; w.max(h)];
    for x in 0..w {
        for y in 0..h {
            buf_f[y] = sq[y * w + x];
        }
        squared_edt_1d(&buf_f[..h], &mut buf_d[..h]);
        for y in 0..h {
            sq[y * w + x] = buf_d[y];
        }
    }
    for y in 0..h {
        buf_f[..w].copy_from_slice(&sq[y * w..(y + 1) * w]);
        squared_edt_1d(&buf_f[..w], &mut buf_d[..w]);
        sq[y * w..(y + 1) * w].copy_from_slice(&buf_d[..w]);
    }
    let values = sq
        .into_iter()
        .map(|d| if d >= inf { f64::INFINITY } else { d.sqrt() })
        .collect();
    ScalarField2D { spec, values }
}

/// Lower envelope of parabolas (Felzenszwalb & Huttenlocher).
fn squared_edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let intersect = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    for q in 1..n {
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(w: usize, h: usize) -> GridSpec {
        GridSpec::new(w, h).unwrap()
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(GridSpec::new(1, 5).is_err());
        assert!(GridSpec::new(5, 1).is_err());
    }

    #[test]
    fn bilinear_constant_and_linear() {
        let s = spec(10, 10);
        let c = ScalarField2D::constant(s, 3.25);
        assert_eq!(c.sample([4.3, 7.9]).unwrap(), 3.25);
        let lin = ScalarField2D::from_fn(s, |x, _| x as f64);
        assert!((lin.sample([2.5, 7.0]).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn bilinear_is_exact_at_nodes_and_rejects_outside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = spec(6, 5);
        let f = ScalarField2D::from_fn(s, |_, _| rng.random::<f64>());
        for y in 0..5 {
            for x in 0..6 {
                assert_eq!(f.sample([x as f64, y as f64]).unwrap(), f.get(x, y));
            }
        }
        assert!(matches!(f.sample([-0.1, 1.0]), Err(Error::OutOfDomain { .. })));
        assert!(f.sample([5.0, 4.0001]).is_err());
    }

    #[test]
    fn bilinear_matches_convex_combination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = spec(4, 4);
        let f = ScalarField2D::from_fn(s, |_, _| rng.random_range(-5.0..5.0));
        for _ in 0..100 {
            let p: Point2 = [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)];
            let (i, j) = (p[0].floor() as usize, p[1].floor() as usize);
            let (a, b) = (p[0] - i as f64, p[1] - j as f64);
            let oracle = (1.0 - a) * (1.0 - b) * f.get(i, j)
                + a * (1.0 - b) * f.get(i + 1, j)
                + (1.0 - a) * b * f.get(i, j + 1)
                + a * b * f.get(i + 1, j + 1);
            assert!((f.sample(p).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_linear_and_constant_fields() {
        let s = spec(8, 6);
        let g = gradient_central(&ScalarField2D::from_fn(s, |x, _| 2.0 * x as f64));
        for v in g.vectors() {
            assert!((v[0] - 2.0).abs() < 1e-14 && v[1].abs() < 1e-14);
        }
        let z = gradient_central(&ScalarField2D::constant(s, 7.0));
        assert!(z.vectors().iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn gradient_of_square_is_exact_in_interior() {
        let s = spec(32, 32);
        let g = gradient_central(&ScalarField2D::from_fn(s, |x, _| (x * x) as f64));
        for y in 1..31 {
            for x in 1..31 {
                let v = g.get(x, y);
                assert!((v[0] - 2.0 * x as f64).abs() <= 1e-12);
                assert!(v[1].abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn gradient_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = spec(9, 7);
        let f = ScalarField2D::from_fn(s, |_, _| rng.random::<f64>());
        let g = ScalarField2D::from_fn(s, |_, _| rng.random::<f64>());
        let (a, b) = (1.7, -0.3);
        let combo = ScalarField2D::from_fn(s, |x, y| a * f.get(x, y) + b * g.get(x, y));
        let (gf, gg, gc) = (gradient_central(&f), gradient_central(&g), gradient_central(&combo));
        for i in 0..s.len() {
            for c in 0..2 {
                let expect = a * gf.vectors()[i][c] + b * gg.vectors()[i][c];
                assert!((gc.vectors()[i][c] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn smoothing_constants_and_impulses() {
        let s = spec(7, 7);
        let c = ScalarField2D::constant(s, 2.5);
        for kind in [SmoothKind::Mean, SmoothKind::Gaussian] {
            let out = smooth(&c, kind, 1.5).unwrap();
            assert!(out.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
        let impulse = ScalarField2D::from_fn(s, |x, y| if (x, y) == (3, 3) { 1.0 } else { 0.0 });
        let out = smooth(&impulse, SmoothKind::Mean, 1.0).unwrap();
        for y in 0..7usize {
            for x in 0..7usize {
                let near = x.abs_diff(3) <= 1 && y.abs_diff(3) <= 1;
                let expect = if near { 1.0 / 9.0 } else { 0.0 };
                assert!((out.get(x, y) - expect).abs() < 1e-15);
            }
        }
        assert_eq!(smooth(&impulse, SmoothKind::Mean, 0.0).unwrap(), impulse);
    }

    #[test]
    fn smoothing_rejects_bad_sizes() {
        let c = ScalarField2D::constant(spec(4, 4), 1.0);
        assert!(smooth(&c, SmoothKind::Mean, -1.0).is_err());
        assert!(smooth(&c, SmoothKind::Gaussian, 0.0).is_err());
        assert!(smooth(&c, SmoothKind::Gaussian, f64::NAN).is_err());
    }

    #[test]
    fn gaussian_matches_direct_convolution_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = spec(16, 16);
        let f = ScalarField2D::from_fn(s, |_, _| rng.random_range(0.0..10.0));
        let sigma = 1.5;
        let out = smooth(&f, SmoothKind::Gaussian, sigma).unwrap();
        // direct 2D sum with an independently built kernel
        let r = (4.0 * sigma).ceil() as i64;
        let mut norm = 0.0;
        for t in -r..=r {
            norm += (-(t * t) as f64 / (2.0 * sigma * sigma)).exp();
        }
        for y in 0..16i64 {
            for x in 0..16i64 {
                let mut acc = 0.0;
                for j in -r..=r {
                    for i in -r..=r {
                        let wgt = (-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp() / (norm * norm);
                        let sx = (x - i).clamp(0, 15) as usize;
                        let sy = (y - j).clamp(0, 15) as usize;
                        acc += wgt * f.get(sx, sy);
                    }
                }
                assert!((out.get(x as usize, y as usize) - acc).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn smoothing_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = spec(12, 9);
        let f = ScalarField2D::from_fn(s, |_, _| rng.random_range(0.0..3.0));
        for kind in [SmoothKind::Mean, SmoothKind::Gaussian] {
            let out = smooth(&f, kind, 2.0).unwrap();
            assert!(out.min() >= f.min() - 1e-12 && out.max() <= f.max() + 1e-12);
        }
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = spec(13, 11);
        let mask: Vec<bool> = (0..s.len()).map(|_| rng.random::<f64>() < 0.08).collect();
        let dt = distance_transform(s, &mask);
        for i in 0..s.len() {
            let (x, y) = s.coords(i);
            let mut best = f64::INFINITY;
            for (j, &m) in mask.iter().enumerate() {
                if m {
                    let (u, v) = s.coords(j);
                    best = best.min(((x as f64 - u as f64).powi(2) + (y as f64 - v as f64).powi(2)).sqrt());
                }
            }
            assert!((dt.values()[i] - best).abs() < 1e-9, "node {i}");
        }
    }
}
