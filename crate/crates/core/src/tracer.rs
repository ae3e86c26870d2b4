//! Geodesic backtracking by gradient descent on the action map, and the
//! tube-constrained refinement pass.

use serde::{Deserialize, Serialize};

use crate::eikonal::{self, ActionMap, GridDims, Masked, Neighborhood, SolverOptions, TensorField, TensorGrid};
use crate::error::{Error, Result};
use crate::grid::{distance_transform, Point2, ScalarField2D};
use crate::metric::{path_energy, polyline_energy, sample_tensor, LiftedGrid};
use crate::path::{LiftedPolyline, Polyline};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TracerOptions {
    /// Integration step in grid units.
    pub step: f64,
    pub max_steps: usize,
    /// Tracing stops once this close to the seed.
    pub capture_radius: f64,
}

impl Default for TracerOptions {
    fn default() -> Self {
        Self {
            step: 0.25,
            max_steps: 200_000,
            capture_radius: 1.0,
        }
    }
}

impl TracerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::param("tracer step must be > 0"));
        }
        if !(self.capture_radius.is_finite() && self.capture_radius >= self.step / 2.0) {
            return Err(Error::param("capture radius must be at least half the step"));
        }
        if self.max_steps == 0 {
            return Err(Error::param("max_steps must be > 0"));
        }
        Ok(())
    }
}

/// A backtraced curve in grid index coordinates, ordered seed to end.
#[derive(Clone, Debug)]
pub struct Trace {
    pub points: Vec<[f64; 3]>,
    /// Interpolated `U` at each integration point, in tracing order (end
    /// towards seed).
    pub action_along: Vec<f64>,
    pub steps: usize,
    /// Steps taken along the discrete parent chain where the continuous
    /// descent stalled.
    pub fallbacks: usize,
}

impl Trace {
    pub fn to_polyline(&self) -> Polyline {
        Polyline::new(self.points.iter().map(|p| [p[0], p[1]]).collect())
    }

    /// Converts the level coordinate to feature units.
    pub fn to_lifted(&self, grid: &LiftedGrid) -> LiftedPolyline {
        LiftedPolyline::new(self.points.iter().map(|p| grid.to_feature_units(*p)).collect())
    }
}

struct Descent<'a, F: TensorField + ?Sized> {
    map: &'a ActionMap,
    field: &'a F,
    dims: GridDims,
}

impl<F: TensorField + ?Sized> Descent<'_, F> {
    /// Accepted value; tentative values near an early-stopped front are
    /// overestimates and would bend the descent.
    #[inline]
    fn u(&self, i: usize) -> f64 {
        self.map.final_value(i)
    }

    fn node_gradient(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        let d = self.dims;
        let c = self.u(d.index(x, y, z));
        let mut g = [0.0; 3];
        let sizes = [d.nx, d.ny, d.nz];
        let pos = [x, y, z];
        for axis in 0..3 {
            if sizes[axis] == 1 {
                continue;
            }
            let at = |k: usize| {
                let mut q = pos;
                q[axis] = k;
                self.u(d.index(q[0], q[1], q[2]))
            };
            let lo = if pos[axis] > 0 { at(pos[axis] - 1) } else { f64::INFINITY };
            let hi = if pos[axis] + 1 < sizes[axis] { at(pos[axis] + 1) } else { f64::INFINITY };
            g[axis] = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (hi - lo),
                (true, false) if c.is_finite() => c - lo,
                (false, true) if c.is_finite() => hi - c,
                _ => 0.0,
            };
        }
        g
    }

    /// Corners of the cell containing `p` with their interpolation weights.
    fn corners(&self, p: [f64; 3]) -> ([(usize, usize, usize); 8], [f64; 8], usize) {
        let d = self.dims;
        let (x0, fx) = crate::grid::split_coord(p[0], d.nx);
        let (y0, fy) = crate::grid::split_coord(p[1], d.ny);
        let (z0, fz, zn) = if d.nz == 1 {
            (0, 0.0, 1)
        } else {
            let (z, f) = crate::grid::split_coord(p[2], d.nz);
            (z, f, 2)
        };
        let mut c = [(0, 0, 0); 8];
        let mut w = [0.0; 8];
        let mut n = 0;
        for dz in 0..zn {
            let wz = if dz == 0 { 1.0 - fz } else { fz };
            for dy in 0..2 {
                let wy = if dy == 0 { 1.0 - fy } else { fy };
                for dx in 0..2 {
                    let wx = if dx == 0 { 1.0 - fx } else { fx };
                    c[n] = (x0 + dx, y0 + dy, z0 + dz);
                    w[n] = wx * wy * wz;
                    n += 1;
                }
            }
        }
        (c, w, n)
    }

    /// Interpolated action; unreached corners take the largest reached one.
    fn action(&self, p: [f64; 3]) -> f64 {
        let (c, w, n) = self.corners(p);
        let vals: Vec<f64> = (0..n).map(|k| self.u(self.dims.index(c[k].0, c[k].1, c[k].2))).collect();
        let cap = vals.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if !cap.is_finite() {
            return f64::INFINITY;
        }
        (0..n).map(|k| w[k] * if vals[k].is_finite() { vals[k] } else { cap + 1.0 }).sum()
    }

    /// Unit steepest descent of the interpolated action itself, used where
    /// the preconditioned direction fails to decrease it.
    fn interpolant_descent(&self, p: [f64; 3]) -> Option<[f64; 3]> {
        let d = self.dims;
        let (c, _, n) = self.corners(p);
        let vals: Vec<f64> = (0..n).map(|k| self.u(d.index(c[k].0, c[k].1, c[k].2))).collect();
        let cap = vals.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if !cap.is_finite() {
            return None;
        }
        let f = [p[0] - c[0].0 as f64, p[1] - c[0].1 as f64, p[2] - c[0].2 as f64];
        let mut g = [0.0; 3];
        for k in 0..n {
            let v = if vals[k].is_finite() { vals[k] } else { cap + 1.0 };
            let b = [c[k].0 - c[0].0, c[k].1 - c[0].1, c[k].2 - c[0].2];
            let w1 = |a: usize| if b[a] == 1 { f[a] } else { 1.0 - f[a] };
            let dw = |a: usize| if b[a] == 1 { 1.0 } else { -1.0 };
            let wz = if n == 4 { 1.0 } else { w1(2) };
            g[0] += v * dw(0) * w1(1) * wz;
            g[1] += v * w1(0) * dw(1) * wz;
            if n == 8 {
                g[2] += v * w1(0) * w1(1) * dw(2);
            }
        }
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        (norm > 1e-300 && norm.is_finite()).then(|| [-g[0] / norm, -g[1] / norm, -g[2] / norm])
    }

    fn gradient(&self, p: [f64; 3]) -> [f64; 3] {
        let (c, w, n) = self.corners(p);
        let mut g = [0.0; 3];
        for k in 0..n {
            if w[k] == 0.0 {
                continue;
            }
            let gk = self.node_gradient(c[k].0, c[k].1, c[k].2);
            for a in 0..3 {
                g[a] += w[k] * gk[a];
            }
        }
        g
    }

    /// Unit descent direction `-T⁻¹∇U / ‖T⁻¹∇U‖`, `None` where it vanishes.
    fn direction(&self, p: [f64; 3]) -> Option<[f64; 3]> {
        let g = self.gradient(p);
        let t = sample_tensor(self.field, p).inverse()?;
        let v = t.apply(g);
        let v = if self.dims.nz == 1 { [v[0], v[1], 0.0] } else { v };
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n > 1e-300) || !n.is_finite() {
            return None;
        }
        Some([-v[0] / n, -v[1] / n, -v[2] / n])
    }

    /// Moves to the first node on the parent chain of the nearest node whose
    /// action is below `u_p`. Used where the interpolated descent stalls.
    fn discrete_step(&self, p: [f64; 3], u_p: f64) -> Option<([f64; 3], f64)> {
        let d = self.dims;
        let r = |v: f64, n: usize| (v.round().max(0.0) as usize).min(n - 1);
        let mut node = d.index(r(p[0], d.nx), r(p[1], d.ny), r(p[2], d.nz));
        loop {
            let u = self.map.final_value(node);
            if u.is_finite() && u < u_p {
                let (x, y, z) = d.coords(node);
                return Some(([x as f64, y as f64, z as f64], u));
            }
            node = self.map.parent(node)?;
        }
    }

    fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        let d = self.dims;
        [
            p[0].clamp(0.0, (d.nx - 1) as f64),
            p[1].clamp(0.0, (d.ny - 1) as f64),
            p[2].clamp(0.0, (d.nz - 1) as f64),
        ]
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn add(p: [f64; 3], v: [f64; 3], h: f64) -> [f64; 3] {
    [p[0] + h * v[0], p[1] + h * v[1], p[2] + h * v[2]]
}

/// Integrates `ρ̇ = -T⁻¹∇U / ‖T⁻¹∇U‖` from `end` until it is within the
/// capture radius of `seed` (Heun steps, all coordinates in grid units).
/// The result runs from `seed` to `end`, both reproduced exactly.
pub fn backtrack<F: TensorField + ?Sized>(
    map: &ActionMap,
    field: &F,
    seed: [f64; 3],
    end: [f64; 3],
    opts: &TracerOptions,
) -> Result<Trace> {
    opts.validate()?;
    let dims = map.dims();
    if field.dims() != dims {
        return Err(Error::param("action map and tensor field grids differ"));
    }
    let desc = Descent { map, field, dims };
    let u_end = desc.action(end);
    if !u_end.is_finite() {
        return Err(Error::PropagationExhausted);
    }

    let mut pts = vec![end];
    let mut along = vec![u_end];
    let mut p = end;
    let mut u_p = u_end;
    let mut steps = 0;
    let mut fallbacks = 0;
    while dist(p, seed) > opts.capture_radius {
        if steps >= opts.max_steps {
            return Err(Error::TraceDiverged(opts.max_steps));
        }
        steps += 1;
        let Some(k1) = desc.direction(p) else {
            let Some((np, nu)) = desc.discrete_step(p, u_p) else {
                return Err(Error::StationaryPoint { x: p[0], y: p[1] });
            };
            fallbacks += 1;
            p = np;
            u_p = nu;
            pts.push(p);
            along.push(u_p);
            continue;
        };
        let mut h = opts.step;
        let mut next = None;
        for _ in 0..10 {
            let mid = desc.clamp(add(p, k1, h));
            let cand = match desc.direction(mid) {
                Some(k2) => {
                    let s = [k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2]];
                    let n = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
                    if n > 1e-3 {
                        // keep the step length fixed
                        desc.clamp(add(p, [s[0] / n, s[1] / n, s[2] / n], h))
                    } else {
                        mid
                    }
                }
                None => mid,
            };
            let u_c = desc.action(cand);
            if u_c < u_p {
                next = Some((cand, u_c));
                break;
            }
            let u_m = desc.action(mid);
            if u_m < u_p {
                next = Some((mid, u_m));
                break;
            }
            h *= 0.5;
        }
        if next.is_none() {
            if let Some(g) = desc.interpolant_descent(p) {
                let mut h = opts.step;
                for _ in 0..10 {
                    let cand = desc.clamp(add(p, g, h));
                    let u_c = desc.action(cand);
                    if u_c < u_p {
                        next = Some((cand, u_c));
                        break;
                    }
                    h *= 0.5;
                }
            }
        }
        let (np, nu) = match next {
            Some(v) => v,
            None => match desc.discrete_step(p, u_p) {
                Some(v) => {
                    fallbacks += 1;
                    v
                }
                None => return Err(Error::StationaryPoint { x: p[0], y: p[1] }),
            },
        };
        p = np;
        u_p = nu;
        pts.push(p);
        along.push(u_p);
    }
    if dist(*pts.last().expect("nonempty"), seed) > 0.0 {
        pts.push(seed);
    }
    // the end point is the first entry; ensure at least seed and end
    if pts.len() == 1 {
        pts.push(seed);
    }
    pts.reverse();
    if pts.len() > 2 && dist(pts[0], pts[1]) < 1e-12 {
        pts.remove(1);
    }
    if fallbacks > 0 {
        log::debug!("{fallbacks} of {steps} backtracking steps fell back to the parent chain");
    }
    Ok(Trace {
        points: pts,
        action_along: along,
        steps,
        fallbacks,
    })
}

/// Planar convenience wrapper around [`backtrack`].
pub fn backtrack_planar<F: TensorField + ?Sized>(
    map: &ActionMap,
    field: &F,
    seed: Point2,
    end: Point2,
    opts: &TracerOptions,
) -> Result<Trace> {
    backtrack(map, field, [seed[0], seed[1], 0.0], [end[0], end[1], 0.0], opts)
}

/// Drops the feature coordinate of a lifted curve.
pub fn project(gamma: &LiftedPolyline) -> Polyline {
    gamma.project()
}

/// Nodes visited by the polyline, sampled at quarter-pixel spacing.
pub fn rasterize(path: &Polyline, width: usize, height: usize) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    let mut mark = |p: Point2| {
        let x = p[0].round().clamp(0.0, (width - 1) as f64) as usize;
        let y = p[1].round().clamp(0.0, (height - 1) as f64) as usize;
        mask[y * width + x] = true;
    };
    if let Some(&p) = path.points.first() {
        mark(p);
    }
    for w in path.points.windows(2) {
        let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        let n = (len / 0.25).ceil().max(1.0) as usize;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            mark([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
        }
    }
    mask
}

/// `2 + max scale` sampled along the path.
pub fn default_tube_radius(path: &Polyline, scale_map: &ScalarField2D) -> f64 {
    let s = scale_map.spec();
    let mut best: f64 = 0.0;
    for p in &path.points {
        let (x, y) = s.nearest_node(*p);
        best = best.max(scale_map.get(x, y));
    }
    2.0 + best
}

/// Outcome of [`refine_path`].
#[derive(Clone, Debug)]
pub struct Refinement {
    pub path: Polyline,
    /// Whether the returned path is the re-traced one.
    pub refined: bool,
    pub energy_before: f64,
    pub energy_after: f64,
}

/// Re-solves the planar problem with tensor `m` restricted to a tube of
/// `tube_radius` around `path` and re-traces between its endpoints. The
/// input is returned unchanged when the re-traced curve is not cheaper.
pub fn refine_path(path: &Polyline, m: &TensorGrid, tube_radius: f64, opts: &TracerOptions) -> Result<Refinement> {
    if path.len() < 2 {
        return Err(Error::param("refinement needs a path with at least two points"));
    }
    if !(tube_radius.is_finite() && tube_radius > 0.0) {
        return Err(Error::param("tube radius must be > 0"));
    }
    let dims = m.dims();
    if dims.nz != 1 {
        return Err(Error::param("refinement works on planar tensor fields"));
    }
    let spec = crate::grid::GridSpec::new(dims.nx, dims.ny)?;
    let start = path.first().expect("nonempty");
    let end = path.last().expect("nonempty");
    spec.check_point(start)?;
    spec.check_point(end)?;

    let energy_before = polyline_energy(m, path)?;
    let raster = rasterize(path, dims.nx, dims.ny);
    let dt = distance_transform(spec, &raster);
    let mask: Vec<bool> = dt.values().iter().map(|&d| d <= tube_radius).collect();
    let tube = Masked { field: m, mask: &mask };

    let (sx, sy) = spec.nearest_node(start);
    let (ex, ey) = spec.nearest_node(end);
    let seed = spec.index(sx, sy);
    let target = spec.index(ex, ey);
    let opts_solve = SolverOptions::new(Neighborhood::N8).stop_at(vec![target]);
    let map = match eikonal::solve(&tube, &[seed], &opts_solve) {
        Ok(map) => map,
        Err(Error::PropagationExhausted) => {
            return Err(Error::RefinementFailed(format!(
                "endpoints are disconnected within a tube of radius {tube_radius}"
            )))
        }
        Err(e) => return Err(e),
    };
    let trace = backtrack_planar(&map, &tube, start, end, opts)
        .map_err(|e| Error::RefinementFailed(format!("re-tracing failed: {e}")))?;
    let candidate = trace.to_polyline();
    let energy_after = path_energy(m, &trace.points)?;
    if energy_after <= energy_before + 1e-6 {
        Ok(Refinement {
            path: candidate,
            refined: true,
            energy_before,
            energy_after,
        })
    } else {
        log::debug!("refined energy {energy_after} exceeds input {energy_before}; keeping input");
        Ok(Refinement {
            path: path.clone(),
            refined: false,
            energy_before,
            energy_after: energy_before,
        })
    }
}
