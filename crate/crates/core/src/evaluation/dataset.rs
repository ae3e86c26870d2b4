//! Patch datasets laid out as `cases/<id>/{image.png, av.png, points.json}`.
//!
//! The AV image labels arteries red, veins blue and their overlaps green.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Point2, ScalarField2D};
use crate::io;

/// Source and end annotations of a patch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Points {
    pub source: Point2,
    pub end: Point2,
}

#[derive(Clone, Debug)]
pub struct PatchCase {
    pub id: String,
    pub image: ScalarField2D,
    pub artery: Vec<bool>,
    pub vein: Vec<bool>,
    pub overlap: Vec<bool>,
    pub source: Point2,
    pub end: Point2,
}

impl PatchCase {
    pub fn spec(&self) -> GridSpec {
        self.image.spec()
    }

    /// Artery pixels including the crossings.
    pub fn target_mask(&self) -> Vec<bool> {
        self.artery.iter().zip(&self.overlap).map(|(a, o)| *a || *o).collect()
    }

    /// AV ground truth rendered with the colour convention.
    pub fn av_image(&self) -> RgbImage {
        let s = self.spec();
        RgbImage::from_fn(s.width() as u32, s.height() as u32, |x, y| {
            let i = s.index(x as usize, y as usize);
            if self.overlap[i] {
                Rgb([0, 255, 0])
            } else if self.artery[i] {
                Rgb([255, 0, 0])
            } else if self.vein[i] {
                Rgb([0, 0, 255])
            } else {
                Rgb([0, 0, 0])
            }
        })
    }

    fn check(&self, origin: &Path) -> Result<()> {
        let s = self.spec();
        let target = self.target_mask();
        for (name, p) in [("source", self.source), ("end", self.end)] {
            if !s.contains(p) {
                return Err(Error::Ingestion {
                    path: origin.to_path_buf(),
                    reason: format!("{name} point ({}, {}) lies outside the image", p[0], p[1]),
                });
            }
            let (x, y) = s.nearest_node(p);
            if !target[s.index(x, y)] {
                return Err(Error::Ingestion {
                    path: origin.to_path_buf(),
                    reason: format!("{name} point ({}, {}) is not on an artery or crossing", p[0], p[1]),
                });
            }
        }
        Ok(())
    }
}

fn ingestion(path: &Path, reason: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Splits an AV image into (artery, vein, overlap) masks by dominant channel.
pub(crate) fn classify_av(av: &RgbImage) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
    let n = (av.width() * av.height()) as usize;
    let (mut a, mut v, mut o) = (vec![false; n], vec![false; n], vec![false; n]);
    for (i, p) in av.pixels().enumerate() {
        let [r, g, b] = p.0;
        let max = r.max(g).max(b);
        if max < 128 {
            continue;
        }
        if r == max && r > g && r > b {
            a[i] = true;
        } else if b == max && b > r && b > g {
            v[i] = true;
        } else if g == max && g > r && g > b {
            o[i] = true;
        }
    }
    (a, v, o)
}

/// Parses a points file, reporting the line of any syntax error.
pub(crate) fn parse_points(text: &str, path: &Path) -> Result<Points> {
    serde_json::from_str(text).map_err(|e| ingestion(path, format!("line {}: {e}", e.line())))
}

/// Loads one annotated patch.
pub fn load_patch(image_path: &Path, av_path: &Path, points_path: &Path) -> Result<PatchCase> {
    let image = io::load_image(image_path)?;
    let av = image::open(av_path)
        .map_err(|e| ingestion(av_path, e.to_string()))?
        .to_rgb8();
    let s = image.spec();
    if av.width() as usize != s.width() || av.height() as usize != s.height() {
        return Err(ingestion(
            av_path,
            format!(
                "AV image is {}x{} but the image is {}x{}",
                av.width(),
                av.height(),
                s.width(),
                s.height()
            ),
        ));
    }
    let (artery, vein, overlap) = classify_av(&av);
    let text = fs::read_to_string(points_path).map_err(|e| ingestion(points_path, e.to_string()))?;
    let points = parse_points(&text, points_path)?;
    let id = image_path
        .parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "case".into());
    let case = PatchCase {
        id,
        image,
        artery,
        vein,
        overlap,
        source: points.source,
        end: points.end,
    };
    case.check(points_path)?;
    Ok(case)
}

/// Writes a patch in the dataset layout under `dir/<id>/`.
pub fn save_patch(case: &PatchCase, dir: &Path) -> Result<PathBuf> {
    let d = dir.join(&case.id);
    fs::create_dir_all(&d)?;
    io::save_intensity_png(&case.image, &d.join("image.png"))?;
    case.av_image().save(d.join("av.png"))?;
    let pts = Points {
        source: case.source,
        end: case.end,
    };
    fs::write(
        d.join("points.json"),
        serde_json::to_string_pretty(&pts).map_err(|e| Error::Serde(e.to_string()))?,
    )?;
    Ok(d)
}

/// A case slot in a batch: the loaded patch or the reason it failed.
#[derive(Clone, Debug)]
pub struct CaseEntry {
    pub id: String,
    pub case: std::result::Result<PatchCase, String>,
}

impl From<PatchCase> for CaseEntry {
    fn from(c: PatchCase) -> Self {
        Self {
            id: c.id.clone(),
            case: Ok(c),
        }
    }
}

/// Loads every subdirectory of `dir` as a case, sorted by id. Individual
/// failures are kept as entries; an empty directory is an error.
pub fn load_cases(dir: &Path) -> Result<Vec<CaseEntry>> {
    let rd = fs::read_dir(dir).map_err(|e| ingestion(dir, e.to_string()))?;
    let mut ids: Vec<String> = rd
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    ids.sort();
    if ids.is_empty() {
        return Err(ingestion(dir, "no case directories found"));
    }
    Ok(ids
        .into_iter()
        .map(|id| {
            let d = dir.join(&id);
            let case = load_patch(&d.join("image.png"), &d.join("av.png"), &d.join("points.json"))
                .map_err(|e| e.to_string());
            CaseEntry { id, case }
        })
        .collect())
}
