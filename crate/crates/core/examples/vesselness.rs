//! Runs the multi-scale optimally oriented flux filter on a synthetic
//! crossing patch (or a PNG given on the command line) and writes the
//! vesselness, selected radius and smoothed feature maps.
//!
//! cargo run --release --example vesselness -- [image.png] [out_dir]

use std::path::PathBuf;

use vesselpath::evaluation::phantom::{crossing_phantom, PhantomParams};
use vesselpath::io::{self, Gfld};
use vesselpath::grid::SmoothKind;
use vesselpath::oof::{feature_map, oof_multiscale, OofParams};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let image = match args.next() {
        Some(p) if p != "-" => io::load_image(&PathBuf::from(p))?,
        _ => crossing_phantom("demo", 3, &PhantomParams::default())?.0.image,
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "vesselness_out".into()));
    std::fs::create_dir_all(&out)?;

    let oof = oof_multiscale(&image, &OofParams::default())?;
    let feature = feature_map(&oof.vesselness, SmoothKind::Gaussian, 3.0)?;
    println!(
        "{}x{} px, radii {:?}, max vesselness {:.4}, feature range [0, {:.4}]",
        image.spec().width(),
        image.spec().height(),
        oof.radii,
        oof.vesselness.max(),
        feature.theta_max
    );

    io::save_field_png(&oof.vesselness, &out.join("vesselness.png"))?;
    io::save_field_png(&oof.scale_map, &out.join("scale.png"))?;
    io::save_field_png(&feature.map, &out.join("feature.png"))?;
    Gfld::from_fields(&[&oof.vesselness, &oof.scale_map, &feature.map])?.write(&out.join("fields.gfld"))?;
    println!("wrote {}", out.display());
    Ok(())
}
