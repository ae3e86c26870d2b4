//! Semi-Lagrangian (Hopf-Lax) local update.
//!
//! For a node `x` and a simplex of accepted neighbours `x + e_k` with values
//! `u_k`, the update is
//!
//! ```text
//! min_{λ ≥ 0, Σλ = 1}  Σ λ_k u_k + ‖Σ λ_k e_k‖_T
//! ```
//!
//! Writing `G = Eᵀ T E`, the interior stationary value `μ` solves
//! `(μ1 - u)ᵀ G⁻¹ (μ1 - u) = 1` and the optimal weights are proportional to
//! `G⁻¹(μ1 - u)`. Boundary minima are covered by the lower-dimensional faces,
//! which are evaluated separately.

use super::stencil::{Neighborhood, Stencil};
use super::BlockTensor;

/// Interior solution over a simplex of 2 or 3 vertices. Returns `None` when
/// the minimiser lies on the simplex boundary or the result would not be
/// causal (below one of the vertex values).
pub(crate) fn simplex_update(e: &[[f64; 3]], u: &[f64], t: &BlockTensor) -> Option<f64> {
    let k = e.len();
    debug_assert!(k == 2 || k == 3);
    let umin = u.iter().copied().fold(f64::INFINITY, f64::min);
    let umax = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut du = [0.0; 3];
    for i in 0..k {
        du[i] = u[i] - umin;
    }
    let mut g = [[0.0; 3]; 3];
    for a in 0..k {
        let te = t.apply(e[a]);
        for b in a..k {
            let v = e[b][0] * te[0] + e[b][1] * te[1] + e[b][2] * te[2];
            g[a][b] = v;
            g[b][a] = v;
        }
    }
    let ginv = invert_sym(&g, k)?;
    // a μ² - 2 b μ + c = 0 in shifted values
    let mut qa = 0.0;
    let mut qb = 0.0;
    let mut qc = -1.0;
    for i in 0..k {
        for j in 0..k {
            qa += ginv[i][j];
            qb += ginv[i][j] * du[j];
            qc += du[i] * ginv[i][j] * du[j];
        }
    }
    if qa <= 0.0 {
        return None;
    }
    let disc = qb * qb - qa * qc;
    if disc < 0.0 {
        return None;
    }
    let mu = (qb + disc.sqrt()) / qa;
    // weights ∝ G⁻¹(μ1 - u)
    for i in 0..k {
        let mut w = 0.0;
        for j in 0..k {
            w += ginv[i][j] * (mu - du[j]);
        }
        if w < -1e-12 {
            return None;
        }
    }
    let value = umin + mu;
    if value < umax {
        return None;
    }
    Some(value)
}

fn invert_sym(g: &[[f64; 3]; 3], k: usize) -> Option<[[f64; 3]; 3]> {
    let mut inv = [[0.0; 3]; 3];
    if k == 2 {
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if !(det > 1e-14 * g[0][0] * g[1][1]) {
            return None;
        }
        inv[0][0] = g[1][1] / det;
        inv[1][1] = g[0][0] / det;
        inv[0][1] = -g[0][1] / det;
        inv[1][0] = inv[0][1];
        return Some(inv);
    }
    let c00 = g[1][1] * g[2][2] - g[1][2] * g[2][1];
    let c01 = g[1][2] * g[2][0] - g[1][0] * g[2][2];
    let c02 = g[1][0] * g[2][1] - g[1][1] * g[2][0];
    let det = g[0][0] * c00 + g[0][1] * c01 + g[0][2] * c02;
    if !(det > 1e-16 * g[0][0] * g[1][1] * g[2][2]) {
        return None;
    }
    inv[0][0] = c00 / det;
    inv[0][1] = c01 / det;
    inv[0][2] = c02 / det;
    inv[1][1] = (g[0][0] * g[2][2] - g[0][2] * g[2][0]) / det;
    inv[1][2] = (g[0][2] * g[1][0] - g[0][0] * g[1][2]) / det;
    inv[2][2] = (g[0][0] * g[1][1] - g[0][1] * g[1][0]) / det;
    inv[1][0] = inv[0][1];
    inv[2][0] = inv[0][2];
    inv[2][1] = inv[1][2];
    Some(inv)
}

/// Hopf-Lax update of a node from its accepted neighbours.
///
/// `neighbor_values[d]` is the value at the stencil direction `d` (in the
/// order of [`stencil_offsets`]) or `None` when that neighbour is not
/// accepted. Edge lengths are measured with the single tensor `tensor`.
/// Returns `None` when no neighbour is accepted.
pub fn hopf_lax_update(
    neighborhood: Neighborhood,
    neighbor_values: &[Option<f64>],
    tensor: &BlockTensor,
) -> Option<f64> {
    let st = Stencil::new(neighborhood);
    assert_eq!(neighbor_values.len(), st.offsets.len(), "one value per stencil direction");
    let vec_of = |d: u8| {
        let o = st.offsets[d as usize];
        [o[0] as f64, o[1] as f64, o[2] as f64]
    };
    let mut best: Option<f64> = None;
    let mut offer = |v: f64| {
        if best.is_none_or(|b| v < b) {
            best = Some(v);
        }
    };
    for (d, v) in neighbor_values.iter().enumerate() {
        if let Some(v) = v {
            offer(v + tensor.norm(vec_of(d as u8)));
        }
    }
    for s in &st.simplices {
        let vals: Option<Vec<f64>> = s.iter().map(|&d| neighbor_values[d as usize]).collect();
        if let Some(vals) = vals {
            let es: Vec<[f64; 3]> = s.iter().map(|&d| vec_of(d)).collect();
            if let Some(v) = simplex_update(&es, &vals, tensor) {
                offer(v);
            }
        }
    }
    best
}

/// Integer offsets of the stencil directions, in the order expected by
/// [`hopf_lax_update`].
pub fn stencil_offsets(neighborhood: Neighborhood) -> Vec<[i32; 3]> {
    Stencil::new(neighborhood).offsets
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_search(e: &[[f64; 3]; 2], u: [f64; 2], t: &BlockTensor) -> f64 {
        let mut best = f64::INFINITY;
        let n = 10_000;
        for i in 0..=n {
            let l = i as f64 / n as f64;
            let p = [
                (1.0 - l) * e[0][0] + l * e[1][0],
                (1.0 - l) * e[0][1] + l * e[1][1],
                (1.0 - l) * e[0][2] + l * e[1][2],
            ];
            best = best.min((1.0 - l) * u[0] + l * u[1] + t.norm(p));
        }
        best
    }

    #[test]
    fn single_neighbor_update() {
        let t = BlockTensor::new(4.0, 0.0, 1.0, 1.0);
        let mut vals = vec![None; 8];
        vals[0] = Some(2.0); // (1, 0)
        let u = hopf_lax_update(Neighborhood::N8, &vals, &t).unwrap();
        assert!((u - 4.0).abs() < 1e-15);
        assert!(hopf_lax_update(Neighborhood::N8, &[None; 8], &t).is_none());
    }

    #[test]
    fn isotropic_two_point_update() {
        let t = BlockTensor::identity();
        let mut vals = vec![None; 4];
        vals[0] = Some(3.0);
        vals[1] = Some(3.0);
        let u = hopf_lax_update(Neighborhood::N4, &vals, &t).unwrap();
        assert!((u - (3.0 + std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn simplex_update_matches_line_search() {
        let cases = [
            ([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0]], [0.3, 0.5], BlockTensor::new(2.0, 0.3, 1.0, 1.0)),
            ([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], [1.0, 1.2], BlockTensor::identity()),
            ([[0.0, 1.0, 0.0], [-1.0, 1.0, 0.0]], [2.0, 2.1], BlockTensor::new(1.0, -0.2, 0.5, 1.0)),
            ([[1.0, 0.0, 0.0], [1.0, 0.0, 1.0]], [0.0, 0.2], BlockTensor::new(1.0, 0.0, 1.0, 3.0)),
        ];
        for (e, u, t) in cases {
            let oracle = line_search(&e, u, &t);
            let edge = (u[0] + t.norm(e[0])).min(u[1] + t.norm(e[1]));
            let got = simplex_update(&e, &u, &t).map_or(edge, |v| v.min(edge));
            assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
        }
    }

    #[test]
    fn triangle_update_matches_grid_search() {
        let e = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0]];
        let u = [0.5, 0.9, 0.7];
        let t = BlockTensor::new(1.5, 0.2, 1.0, 0.8);
        let mut got = f64::INFINITY;
        for face in [vec![0, 1, 2], vec![0, 1], vec![1, 2], vec![0, 2]] {
            let fe: Vec<[f64; 3]> = face.iter().map(|&i| e[i]).collect();
            let fu: Vec<f64> = face.iter().map(|&i| u[i]).collect();
            if let Some(v) = simplex_update(&fe, &fu, &t) {
                got = got.min(v);
            }
        }
        for i in 0..3 {
            got = got.min(u[i] + t.norm(e[i]));
        }
        let mut best = f64::INFINITY;
        let n = 600;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
                let c = 1.0 - a - b;
                let p = [0, 1, 2].map(|k| a * e[0][k] + b * e[1][k] + c * e[2][k]);
                best = best.min(a * u[0] + b * u[1] + c * u[2] + t.norm(p));
            }
        }
        assert!((got - best).abs() < 1e-5 && got <= best + 1e-12);
    }

    #[test]
    fn collinear_offsets_fall_back_to_edges() {
        let e = [[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(simplex_update(&e, &[1.0, 1.0], &BlockTensor::identity()).is_none());
    }
}
