//! Extracts the artery between the annotated points of a synthetic
//! crossing patch with the isotropic, radius-lifted and coherence-penalised
//! metrics, scores each path and writes an overlay.
//!
//! cargo run --release --example extract_centerline -- [seed] [overlay.png]

use std::path::PathBuf;

use vesselpath::evaluation::phantom::{crossing_phantom, PhantomParams};
use vesselpath::evaluation::{digitize, theta};
use vesselpath::io;
use vesselpath::metric::MetricKind;
use vesselpath::pipeline::{extract, prepare, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "extract_overlay.png".into()));

    let (case, _) = crossing_phantom("demo", seed, &PhantomParams::default())?;
    let config = PipelineConfig::default();
    let prep = prepare(&case.image, &config)?;
    println!(
        "source {:?} end {:?}, alpha {:.3}, lambda {:.1}",
        case.source, case.end, prep.resolved.alpha, prep.resolved.lambda
    );

    let colours = [[0, 120, 255], [255, 160, 0], [255, 0, 0]];
    let mut paths = Vec::new();
    for (kind, colour) in MetricKind::all().into_iter().zip(colours) {
        let ex = extract(&prep, &config, case.source, case.end, kind)?;
        let score = theta(&digitize(&ex.path), &case.target_mask(), case.spec())?;
        println!(
            "{:<9} U {:8.3}  energy {:8.3}  length {:6.1}  theta {:.3}",
            kind.label(),
            ex.action_value,
            ex.energy,
            ex.length,
            score
        );
        paths.push((ex.path, colour));
    }

    let layers: Vec<_> = paths.iter().map(|(p, c)| (p, *c)).collect();
    io::overlay(&case.image, &layers).save(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
