//! Backtracks a geodesic from a planar solve, then perturbs it off the
//! centreline and lets tube-restricted refinement pull it back.
//!
//! cargo run --release --example refine_path

use vesselpath::eikonal::{solve, Neighborhood, SolverOptions, TensorField};
use vesselpath::evaluation::phantom::{crossing_phantom, PhantomParams};
use vesselpath::metric::polyline_energy;
use vesselpath::path::Polyline;
use vesselpath::pipeline::{prepare, PipelineConfig};
use vesselpath::tracer::{backtrack_planar, refine_path};

fn main() -> anyhow::Result<()> {
    let (case, _) = crossing_phantom("demo", 2, &PhantomParams::default())?;
    let config = PipelineConfig::default();
    let prep = prepare(&case.image, &config)?;
    let field = &prep.planar;
    let d = field.dims();

    let seed = d.index(case.source[0] as usize, case.source[1] as usize, 0);
    let map = solve(field, &[seed], &SolverOptions::new(Neighborhood::N8))?;
    let trace = backtrack_planar(&map, field, case.source, case.end, &config.tracer)?;
    let path = trace.to_polyline();
    println!(
        "geodesic: {} steps, {} parent-chain fallbacks, energy {:.3}, U(end) {:.3}",
        trace.steps,
        trace.fallbacks,
        polyline_energy(field, &path)?,
        trace.action_along[0]
    );

    // shift interior points sideways by one pixel
    let n = path.len();
    let shifted = Polyline::new(
        path.points
            .iter()
            .enumerate()
            .map(|(i, p)| if i == 0 || i + 1 == n { *p } else { [p[0], (p[1] + 1.0).min(d.ny as f64 - 1.0)] })
            .collect(),
    );
    let r = refine_path(&shifted, field, 4.0, &config.tracer)?;
    println!(
        "refinement: energy {:.3} -> {:.3} (refined: {})",
        r.energy_before, r.energy_after, r.refined
    );
    Ok(())
}
