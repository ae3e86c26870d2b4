//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vesselpath::eikonal::{BlockTensor, GridDims, TensorField, TensorGrid};
use vesselpath::grid::{GridSpec, ScalarField2D};

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// All nonzero offsets with coordinates in {-1, 0, 1}; planar grids use the
/// eight in-plane ones.
pub fn box_offsets(dims: GridDims) -> Vec<[i64; 3]> {
    let zs: &[i64] = if dims.nz == 1 { &[0] } else { &[-1, 0, 1] };
    let mut out = Vec::new();
    for &dz in zs {
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx, dy, dz) != (0, 0, 0) {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

/// Shortest paths on the grid graph whose edges cost the edge length under
/// the mean of the two endpoint tensors.
pub fn dijkstra<F: TensorField + ?Sized>(field: &F, seed: usize, offsets: &[[i64; 3]]) -> Vec<f64> {
    let d = field.dims();
    let mut dist = vec![f64::INFINITY; d.len()];
    let mut heap = BinaryHeap::new();
    dist[seed] = 0.0;
    heap.push(Item(0.0, seed));
    while let Some(Item(v, i)) = heap.pop() {
        if v > dist[i] {
            continue;
        }
        let (x, y, z) = d.coords(i);
        for o in offsets {
            let (nx, ny, nz) = (x as i64 + o[0], y as i64 + o[1], z as i64 + o[2]);
            if nx < 0 || ny < 0 || nz < 0 || nx >= d.nx as i64 || ny >= d.ny as i64 || nz >= d.nz as i64 {
                continue;
            }
            let j = d.index(nx as usize, ny as usize, nz as usize);
            let t = field.tensor(i).add(&field.tensor(j)).scale(0.5);
            let w = v + t.norm([o[0] as f64, o[1] as f64, o[2] as f64]);
            if w < dist[j] {
                dist[j] = w;
                heap.push(Item(w, j));
            }
        }
    }
    dist
}

/// Random block tensors whose eigenvalue square roots differ by at most
/// `max_anisotropy` at every node.
pub fn random_tensor_field(dims: GridDims, max_anisotropy: f64, seed: u64) -> TensorGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = max_anisotropy * max_anisotropy;
    let tensors = (0..dims.len())
        .map(|_| {
            let s = rng.random_range(0.5..2.0);
            let mut e = [0.0; 3];
            for v in &mut e {
                *v = s * rng.random_range(1.0..ratio);
            }
            let (sn, cs) = rng.random_range(0.0..std::f64::consts::PI).sin_cos();
            BlockTensor::new(
                e[0] * cs * cs + e[1] * sn * sn,
                (e[0] - e[1]) * cs * sn,
                e[0] * sn * sn + e[1] * cs * cs,
                e[2],
            )
        })
        .collect();
    TensorGrid::new(dims, tensors).expect("positive definite")
}

/// Dark straight tube of the given half-width on a unit background, with
/// antialiased edges. `angle` is the axis direction in radians.
pub fn dark_tube(spec: GridSpec, centre: [f64; 2], angle: f64, half_width: f64, contrast: f64) -> ScalarField2D {
    let n = [-angle.sin(), angle.cos()];
    ScalarField2D::from_fn(spec, |x, y| {
        let d = ((x as f64 - centre[0]) * n[0] + (y as f64 - centre[1]) * n[1]).abs();
        let cover = (half_width + 0.5 - d).clamp(0.0, 1.0);
        1.0 - contrast * cover
    })
}

/// Angle between two undirected 2D directions, in degrees.
pub fn axis_angle_deg(a: [f64; 2], b: [f64; 2]) -> f64 {
    let c = (a[0] * b[0] + a[1] * b[1]).abs() / (a[0].hypot(a[1]) * b[0].hypot(b[1]));
    c.min(1.0).acos().to_degrees()
}
