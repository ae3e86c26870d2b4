//! Fast-marching solver for the anisotropic eikonal equation
//! `‖∇U‖_{T⁻¹} = 1`, `U(seed) = 0`, on regular 2D and 3D grids.
//!
//! Tensors are block diagonal (a 2x2 spatial block plus an independent
//! weight on the third axis), which covers the planar metrics and the
//! orientation-lifted ones. Acceptance is label-setting: each node is frozen
//! once, in nondecreasing order of value, and its non-frozen neighbours are
//! updated from the boundary simplices of their stencil that contain it.

pub mod stencil;
mod update;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SymMat2, SymMat2Field};

pub use stencil::Neighborhood;
use stencil::Stencil;
pub use update::{hopf_lax_update, stencil_offsets};

/// Extent of a 2D (`nz == 1`) or 3D grid with unit spacing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl GridDims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Self { nx, ny, nz }
    }

    pub fn planar(nx: usize, ny: usize) -> Self {
        Self { nx, ny, nz: 1 }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.ny + y) * self.nx + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let x = i % self.nx;
        let r = i / self.nx;
        (x, r % self.ny, r / self.ny)
    }

    #[inline]
    fn offset(&self, c: (usize, usize, usize), o: [i32; 3]) -> Option<usize> {
        let x = c.0 as i64 + o[0] as i64;
        let y = c.1 as i64 + o[1] as i64;
        let z = c.2 as i64 + o[2] as i64;
        if x < 0 || y < 0 || z < 0 || x >= self.nx as i64 || y >= self.ny as i64 || z >= self.nz as i64 {
            return None;
        }
        Some(self.index(x as usize, y as usize, z as usize))
    }
}

/// Symmetric 3x3 tensor `[[m11, m12, 0], [m12, m22, 0], [0, 0, m33]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockTensor {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
    pub m33: f64,
}

impl BlockTensor {
    pub fn new(m11: f64, m12: f64, m22: f64, m33: f64) -> Self {
        Self { m11, m12, m22, m33 }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0, 1.0)
    }

    pub fn from_sym2(m: SymMat2, m33: f64) -> Self {
        Self::new(m.m11, m.m12, m.m22, m33)
    }

    pub fn spatial(&self) -> SymMat2 {
        SymMat2::new(self.m11, self.m12, self.m22)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m22 * s, self.m33 * s)
    }

    pub fn add(&self, o: &BlockTensor) -> Self {
        Self::new(self.m11 + o.m11, self.m12 + o.m12, self.m22 + o.m22, self.m33 + o.m33)
    }

    #[inline]
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m12 * v[0] + self.m22 * v[1],
            self.m33 * v[2],
        ]
    }

    #[inline]
    pub fn quad(&self, v: [f64; 3]) -> f64 {
        v[0] * (self.m11 * v[0] + 2.0 * self.m12 * v[1]) + self.m22 * v[1] * v[1] + self.m33 * v[2] * v[2]
    }

    /// `sqrt(vᵀ T v)`
    #[inline]
    pub fn norm(&self, v: [f64; 3]) -> f64 {
        self.quad(v).max(0.0).sqrt()
    }

    pub fn inverse(&self) -> Option<Self> {
        let s = self.spatial().inverse()?;
        if !(self.m33 > 0.0) {
            return None;
        }
        Some(Self::new(s.m11, s.m12, s.m22, 1.0 / self.m33))
    }

    /// Finite and positive definite.
    pub fn is_positive_definite(&self) -> bool {
        let finite = [self.m11, self.m12, self.m22, self.m33].iter().all(|v| v.is_finite());
        finite && self.m11 > 0.0 && self.m33 > 0.0 && self.m11 * self.m22 - self.m12 * self.m12 > 0.0
    }
}

/// A tensor per grid node, possibly restricted to a subset of nodes.
pub trait TensorField: Sync {
    fn dims(&self) -> GridDims;

    fn tensor(&self, index: usize) -> BlockTensor;

    /// Whether the front may enter this node.
    fn allowed(&self, _index: usize) -> bool {
        true
    }

    /// Checks every allowed node holds a positive-definite tensor.
    fn validate(&self) -> Result<()> {
        for i in 0..self.dims().len() {
            if !self.allowed(i) {
                continue;
            }
            let t = self.tensor(i);
            if !t.is_positive_definite() {
                return Err(Error::Tensor {
                    node: i,
                    reason: format!("not positive definite: {t:?}"),
                });
            }
        }
        Ok(())
    }
}

/// Explicitly stored tensor field with an optional mask.
#[derive(Clone, Debug)]
pub struct TensorGrid {
    dims: GridDims,
    tensors: Vec<BlockTensor>,
    mask: Option<Vec<bool>>,
}

impl TensorGrid {
    pub fn new(dims: GridDims, tensors: Vec<BlockTensor>) -> Result<Self> {
        if tensors.len() != dims.len() {
            return Err(Error::param(format!(
                "expected {} tensors, got {}",
                dims.len(),
                tensors.len()
            )));
        }
        let g = Self {
            dims,
            tensors,
            mask: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn constant(dims: GridDims, t: BlockTensor) -> Result<Self> {
        Self::new(dims, vec![t; dims.len()])
    }

    /// Planar field from a 2x2 tensor field.
    pub fn from_sym2(field: &SymMat2Field) -> Result<Self> {
        let s = field.spec();
        let tensors = field.entries().iter().map(|m| BlockTensor::from_sym2(*m, 1.0)).collect();
        Self::new(GridDims::planar(s.width(), s.height()), tensors)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.dims.len() {
            return Err(Error::param("mask size does not match the grid"));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn tensors(&self) -> &[BlockTensor] {
        &self.tensors
    }
}

impl TensorField for TensorGrid {
    fn dims(&self) -> GridDims {
        self.dims
    }

    #[inline]
    fn tensor(&self, index: usize) -> BlockTensor {
        self.tensors[index]
    }

    #[inline]
    fn allowed(&self, index: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[index])
    }
}

/// Wraps a field and restricts propagation to a mask.
pub struct Masked<'a, F: TensorField + ?Sized> {
    pub field: &'a F,
    pub mask: &'a [bool],
}

impl<F: TensorField + ?Sized> TensorField for Masked<'_, F> {
    fn dims(&self) -> GridDims {
        self.field.dims()
    }

    fn tensor(&self, index: usize) -> BlockTensor {
        self.field.tensor(index)
    }

    fn allowed(&self, index: usize) -> bool {
        self.mask[index] && self.field.allowed(index)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub neighborhood: Neighborhood,
    /// Stop as soon as any of these nodes is accepted. Empty means the whole
    /// reachable domain is computed.
    #[serde(default)]
    pub stop_at: Vec<usize>,
    /// Maximum number of accepted nodes before giving up.
    #[serde(default)]
    pub max_nodes: Option<usize>,
}

impl SolverOptions {
    pub fn new(neighborhood: Neighborhood) -> Self {
        Self {
            neighborhood,
            stop_at: Vec::new(),
            max_nodes: None,
        }
    }

    pub fn stop_at(mut self, nodes: Vec<usize>) -> Self {
        self.stop_at = nodes;
        self
    }

    pub fn max_nodes(mut self, n: usize) -> Self {
        self.max_nodes = Some(n);
        self
    }
}

/// Solver output: the action map `U` and bookkeeping.
#[derive(Clone, Debug)]
pub struct ActionMap {
    dims: GridDims,
    values: Vec<f64>,
    accepted: Vec<bool>,
    parents: Vec<u32>,
    reached: Option<usize>,
    accepted_count: usize,
    order_violations: usize,
}

const NO_PARENT: u32 = u32::MAX;

impl ActionMap {
    pub fn dims(&self) -> GridDims {
        self.dims
    }

    /// `U` per node, `+inf` where the front never arrived.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Value if the node was accepted, `+inf` otherwise.
    #[inline]
    pub fn final_value(&self, index: usize) -> f64 {
        if self.accepted[index] {
            self.values[index]
        } else {
            f64::INFINITY
        }
    }

    pub fn is_accepted(&self, index: usize) -> bool {
        self.accepted[index]
    }

    /// Neighbour that supplied the accepted value of a node.
    pub fn parent(&self, index: usize) -> Option<usize> {
        let p = self.parents[index];
        (p != NO_PARENT).then_some(p as usize)
    }

    /// First stop node that was accepted.
    pub fn reached(&self) -> Option<usize> {
        self.reached
    }

    pub fn accepted_count(&self) -> usize {
        self.accepted_count
    }

    /// Number of acceptances whose value was below the previous one; zero
    /// for a monotone march.
    pub fn order_violations(&self) -> usize {
        self.order_violations
    }

    /// Discrete path from a node back to a seed through the parent links.
    pub fn parent_chain(&self, from: usize) -> Vec<usize> {
        let mut out = vec![from];
        let mut cur = from;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
            if out.len() > self.values.len() {
                break;
            }
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    value: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (value, index)
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs fast marching from `seeds` (value zero) over `field`.
pub fn solve<F: TensorField + ?Sized>(field: &F, seeds: &[usize], opts: &SolverOptions) -> Result<ActionMap> {
    let dims = field.dims();
    if dims.nx < 2 || dims.ny < 2 || dims.nz < 1 {
        return Err(Error::param("grid must be at least 2x2"));
    }
    if !opts.neighborhood.is_3d() && dims.nz != 1 {
        return Err(Error::param("planar neighbourhood used on a 3D grid"));
    }
    if seeds.is_empty() {
        return Err(Error::param("no seed nodes"));
    }
    let n = dims.len();
    if n >= NO_PARENT as usize {
        return Err(Error::param("grid too large"));
    }
    for &s in seeds.iter().chain(opts.stop_at.iter()) {
        if s >= n {
            return Err(Error::param(format!("node {s} outside a grid of {n} nodes")));
        }
    }
    field.validate()?;

    let st = Stencil::new(opts.neighborhood);
    let offsets_f: Vec<[f64; 3]> = st
        .offsets
        .iter()
        .map(|o| [o[0] as f64, o[1] as f64, o[2] as f64])
        .collect();
    let opposite: Vec<usize> = (0..st.offsets.len()).map(|d| st.opposite(d)).collect();
    let stop: HashSet<usize> = opts.stop_at.iter().copied().collect();

    let mut values = vec![f64::INFINITY; n];
    let mut accepted = vec![false; n];
    let mut parents = vec![NO_PARENT; n];
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        if !field.allowed(s) {
            return Err(Error::param(format!("seed node {s} is masked out")));
        }
        values[s] = 0.0;
        heap.push(Entry { value: 0.0, index: s });
    }

    let mut reached = None;
    let mut count = 0usize;
    let mut violations = 0usize;
    let mut last = f64::NEG_INFINITY;
    let mut vert_vals = [0.0f64; 3];
    let mut vert_e = [[0.0f64; 3]; 3];

    while let Some(Entry { value, index: z }) = heap.pop() {
        if accepted[z] || value != values[z] {
            continue;
        }
        if let Some(budget) = opts.max_nodes {
            if count >= budget {
                return Err(Error::BudgetExceeded(budget));
            }
        }
        accepted[z] = true;
        count += 1;
        if value < last {
            violations += 1;
        }
        last = value;
        if stop.contains(&z) {
            reached = Some(z);
            break;
        }

        let cz = dims.coords(z);
        let tz = field.tensor(z);
        for (d, &o) in st.offsets.iter().enumerate() {
            let Some(y) = dims.offset(cz, o) else { continue };
            if accepted[y] || !field.allowed(y) {
                continue;
            }
            let cy = dims.coords(y);
            let ty = field.tensor(y);
            // direction from y towards z
            let dz = opposite[d];
            let ez = offsets_f[dz];
            let mut best = value + ty.add(&tz).scale(0.5).norm(ez);
            let mut best_parent = z;

            for sref in &st.incident[dz] {
                let others = sref.others();
                let mut ok = true;
                let mut tsum = tz;
                vert_vals[0] = value;
                vert_e[0] = ez;
                for (k, &od) in others.iter().enumerate() {
                    match dims.offset(cy, st.offsets[od as usize]) {
                        Some(w) if accepted[w] => {
                            vert_vals[k + 1] = values[w];
                            vert_e[k + 1] = offsets_f[od as usize];
                            tsum = tsum.add(&field.tensor(w));
                        }
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let m = others.len() + 1;
                let t = ty.scale(0.5).add(&tsum.scale(0.5 / m as f64));
                if let Some(v) = update::simplex_update(&vert_e[..m], &vert_vals[..m], &t) {
                    if v < best {
                        best = v;
                        best_parent = z;
                    }
                }
            }

            if best < values[y] {
                values[y] = best;
                parents[y] = best_parent as u32;
                heap.push(Entry { value: best, index: y });
            }
        }
    }

    if !stop.is_empty() && reached.is_none() {
        return Err(Error::PropagationExhausted);
    }
    Ok(ActionMap {
        dims,
        values,
        accepted,
        parents,
        reached,
        accepted_count: count,
        order_violations: violations,
    })
}

/// Minimal action from node `a` to node `b`.
pub fn min_action_between<F: TensorField + ?Sized>(
    field: &F,
    a: usize,
    b: usize,
    neighborhood: Neighborhood,
) -> Result<f64> {
    let map = solve(field, &[a], &SolverOptions::new(neighborhood).stop_at(vec![b]))?;
    Ok(map.value(b))
}
