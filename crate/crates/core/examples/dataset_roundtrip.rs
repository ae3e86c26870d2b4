//! Writes a synthetic dataset in the `cases/<id>/{image.png, av.png,
//! points.json}` layout, reloads it and reports each case.
//!
//! cargo run --release --example dataset_roundtrip -- [dir] [cases]

use std::path::PathBuf;

use vesselpath::evaluation::phantom::crossing_suite;
use vesselpath::evaluation::{load_cases, save_patch};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synthetic_cases".into()));
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);

    for case in crossing_suite(n, 1)? {
        save_patch(&case, &dir)?;
    }
    for entry in load_cases(&dir)? {
        match entry.case {
            Ok(c) => {
                let artery = c.artery.iter().filter(|a| **a).count();
                let vein = c.vein.iter().filter(|v| **v).count();
                let overlap = c.overlap.iter().filter(|o| **o).count();
                println!(
                    "{}: {}x{}, source {:?}, end {:?}, artery {artery} px, vein {vein} px, crossings {overlap} px",
                    entry.id,
                    c.spec().width(),
                    c.spec().height(),
                    c.source,
                    c.end
                );
            }
            Err(e) => println!("{}: failed to load: {e}", entry.id),
        }
    }
    Ok(())
}
