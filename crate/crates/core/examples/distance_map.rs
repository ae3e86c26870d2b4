//! Solves the anisotropic eikonal equation from a single seed under a
//! constant tensor `diag(1/16, 1)` (travel along x is four times cheaper)
//! and compares the action with the closed-form norm.
//!
//! cargo run --release --example distance_map -- [out.png]

use std::path::PathBuf;
use std::time::Instant;

use vesselpath::eikonal::{solve, BlockTensor, GridDims, Neighborhood, SolverOptions, TensorGrid};
use vesselpath::grid::{GridSpec, ScalarField2D};
use vesselpath::io;

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "distance_map.png".into()));
    let n = 201;
    let dims = GridDims::planar(n, n);
    let tensor = BlockTensor::new(1.0 / 16.0, 0.0, 1.0, 1.0);
    let field = TensorGrid::constant(dims, tensor)?;
    let c = n / 2;

    let t0 = Instant::now();
    let map = solve(&field, &[dims.index(c, c, 0)], &SolverOptions::new(Neighborhood::N8))?;
    println!("solved {} nodes in {:.1?}", map.accepted_count(), t0.elapsed());

    let mut worst: f64 = 0.0;
    for i in 0..dims.len() {
        let (x, y, _) = dims.coords(i);
        let v = [x as f64 - c as f64, y as f64 - c as f64, 0.0];
        let exact = tensor.norm(v);
        if exact >= 10.0 {
            worst = worst.max((map.value(i) - exact).abs() / exact);
        }
    }
    println!("max relative error beyond distance 10: {worst:.4}");

    let spec = GridSpec::new(n, n)?;
    let u = ScalarField2D::new(spec, map.values().to_vec())?;
    io::save_field_png(&u, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
