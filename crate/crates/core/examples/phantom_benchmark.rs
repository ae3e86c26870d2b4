//! Scores the IR, ArR and coherence-penalised metrics on the synthetic
//! crossing suite and writes the score tables and overlays.
//!
//! cargo run --release --example phantom_benchmark -- [out_dir] [cases]

use std::path::PathBuf;
use std::time::Instant;

use vesselpath::evaluation::{phantom, run_benchmark, write_report, CaseEntry};
use vesselpath::metric::MetricKind;
use vesselpath::pipeline::PipelineConfig;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "phantom_benchmark".into()));
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);

    let cases: Vec<CaseEntry> = phantom::crossing_suite(n, 1)?.into_iter().map(CaseEntry::from).collect();
    let config = PipelineConfig::default();
    let t0 = Instant::now();
    let report = run_benchmark("phantom", &cases, &MetricKind::all(), &config)?;
    println!("benchmark finished in {:.1?}", t0.elapsed());
    for s in &report.scores {
        println!(
            "{:<12} {:<9} theta={:.3} {}",
            s.id,
            s.metric.label(),
            s.theta,
            s.error.as_deref().unwrap_or("")
        );
    }
    println!("\n{}", report.table.to_markdown());
    write_report(&report, &cases, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
