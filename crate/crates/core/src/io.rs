//! Image input, raw float dumps, PNG renderings and path files.
//!
//! Raw dumps use a small sidecar format: the magic `GFLD`, then width,
//! height and channel count as little-endian `u32`, then row-major
//! little-endian `f32` samples with channels interleaved.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, Rgb, RgbImage};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField2D};
use crate::path::{LiftedPolyline, Polyline};

const GFLD_MAGIC: &[u8; 4] = b"GFLD";

fn ingestion(path: &Path, reason: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Grayscale intensities in `[0, 1]` from a decoded image. Colour images
/// contribute their green channel.
pub fn image_to_field(img: &DynamicImage) -> Result<ScalarField2D> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let spec = GridSpec::new(w, h)?;
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(g) => g.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(g) => g.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(g) => g.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
            img.to_rgb16().pixels().map(|p| p.0[1] as f64 / 65535.0).collect()
        }
        _ => img.to_rgb8().pixels().map(|p| p.0[1] as f64 / 255.0).collect(),
    };
    ScalarField2D::new(spec, values)
}

/// Loads an 8/16-bit grayscale or colour PNG as intensities in `[0, 1]`.
pub fn load_image(path: &Path) -> Result<ScalarField2D> {
    let img = image::open(path).map_err(|e| ingestion(path, e.to_string()))?;
    image_to_field(&img).map_err(|e| ingestion(path, e.to_string()))
}

/// Decodes an in-memory image.
pub fn decode_image(bytes: &[u8]) -> Result<ScalarField2D> {
    let img = image::load_from_memory(bytes)?;
    image_to_field(&img)
}

/// Raw float grid with interleaved channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Gfld {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub data: Vec<f32>,
}

impl Gfld {
    pub fn from_fields(fields: &[&ScalarField2D]) -> Result<Self> {
        let first = fields.first().ok_or_else(|| Error::param("no fields to dump"))?;
        let spec = first.spec();
        if fields.iter().any(|f| f.spec() != spec) {
            return Err(Error::param("fields differ in shape"));
        }
        let mut data = Vec::with_capacity(spec.len() * fields.len());
        for i in 0..spec.len() {
            for f in fields {
                data.push(f.values()[i] as f32);
            }
        }
        Ok(Self {
            width: spec.width() as u32,
            height: spec.height() as u32,
            channels: fields.len() as u32,
            data,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.data.len());
        out.extend_from_slice(GFLD_MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.channels.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != GFLD_MAGIC {
            return Err(Error::Serde("missing GFLD header".into()));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().expect("4 bytes"));
        let (width, height, channels) = (word(4), word(8), word(12));
        let n = width as usize * height as usize * channels as usize;
        if bytes.len() != 16 + 4 * n {
            return Err(Error::Serde(format!(
                "GFLD payload has {} bytes, expected {}",
                bytes.len() - 16,
                4 * n
            )));
        }
        let data = bytes[16..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// 8-bit rendering with `0 -> 0` and the field maximum mapped to 255.
pub fn field_to_gray(field: &ScalarField2D) -> GrayImage {
    let s = field.spec();
    let max = field.max();
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    GrayImage::from_fn(s.width() as u32, s.height() as u32, |x, y| {
        let v = field.get(x as usize, y as usize).max(0.0) * scale;
        image::Luma([v.round().clamp(0.0, 255.0) as u8])
    })
}

/// Linear min-max rendering, for signed or offset fields.
pub fn field_to_gray_minmax(field: &ScalarField2D) -> GrayImage {
    let s = field.spec();
    let (lo, hi) = (field.min(), field.max());
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    GrayImage::from_fn(s.width() as u32, s.height() as u32, |x, y| {
        let v = (field.get(x as usize, y as usize) - lo) * scale;
        image::Luma([v.round().clamp(0.0, 255.0) as u8])
    })
}

pub fn encode_png(img: &DynamicImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

pub fn save_field_png(field: &ScalarField2D, path: &Path) -> Result<()> {
    field_to_gray(field).save(path)?;
    Ok(())
}

/// Intensity image in `[0, 1]` as an 8-bit grayscale PNG.
pub fn save_intensity_png(field: &ScalarField2D, path: &Path) -> Result<()> {
    let s = field.spec();
    GrayImage::from_fn(s.width() as u32, s.height() as u32, |x, y| {
        image::Luma([(field.get(x as usize, y as usize) * 255.0).round().clamp(0.0, 255.0) as u8])
    })
    .save(path)?;
    Ok(())
}

/// Draws polylines over a grayscale image. Points are marked with small
/// crosses in the colour of their path.
pub fn overlay(image: &ScalarField2D, paths: &[(&Polyline, [u8; 3])]) -> RgbImage {
    let s = image.spec();
    let (w, h) = (s.width() as u32, s.height() as u32);
    let mut out = RgbImage::from_fn(w, h, |x, y| {
        let v = (image.get(x as usize, y as usize) * 255.0).round().clamp(0.0, 255.0) as u8;
        Rgb([v, v, v])
    });
    let put = |out: &mut RgbImage, x: f64, y: f64, c: [u8; 3]| {
        let (xi, yi) = (x.round(), y.round());
        if xi >= 0.0 && yi >= 0.0 && (xi as u32) < w && (yi as u32) < h {
            out.put_pixel(xi as u32, yi as u32, Rgb(c));
        }
    };
    for (path, color) in paths {
        for seg in path.points.windows(2) {
            let len = (seg[1][0] - seg[0][0]).hypot(seg[1][1] - seg[0][1]);
            let n = (len / 0.25).ceil().max(1.0) as usize;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                put(
                    &mut out,
                    seg[0][0] + t * (seg[1][0] - seg[0][0]),
                    seg[0][1] + t * (seg[1][1] - seg[0][1]),
                    *color,
                );
            }
        }
        for p in [path.first(), path.last()].into_iter().flatten() {
            for (dx, dy) in [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                put(&mut out, p[0] + dx, p[1] + dy, *color);
            }
        }
    }
    out
}

/// `{"type": "Feature", "geometry": {"type": "LineString", ...}}`
pub fn geojson(path: &Polyline) -> Value {
    json!({
        "type": "Feature",
        "geometry": {
            "type": "LineString",
            "coordinates": path.points,
        },
        "properties": {},
    })
}

pub fn write_path_json(path: &Polyline, file: &Path) -> Result<()> {
    let s = serde_json::to_string_pretty(path).map_err(|e| Error::Serde(e.to_string()))?;
    fs::write(file, s)?;
    Ok(())
}

pub fn write_lifted_json(path: &LiftedPolyline, file: &Path) -> Result<()> {
    let s = serde_json::to_string_pretty(path).map_err(|e| Error::Serde(e.to_string()))?;
    fs::write(file, s)?;
    Ok(())
}

pub fn write_geojson(path: &Polyline, file: &Path) -> Result<()> {
    let s = serde_json::to_string_pretty(&geojson(path)).map_err(|e| Error::Serde(e.to_string()))?;
    fs::write(file, s)?;
    Ok(())
}

pub fn read_path_json(file: &Path) -> Result<Polyline> {
    let s = fs::read_to_string(file)?;
    serde_json::from_str(&s).map_err(|e| ingestion(file, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gfld_round_trip_and_header() {
        let s = GridSpec::new(3, 2).unwrap();
        let a = ScalarField2D::from_fn(s, |x, y| (x + 10 * y) as f64);
        let b = a.map(|v| -v);
        let g = Gfld::from_fields(&[&a, &b]).unwrap();
        let bytes = g.to_bytes();
        assert_eq!(&bytes[..4], b"GFLD");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 16 + 4 * 12);
        // second sample is channel 1 of pixel (0,0)
        assert_eq!(f32::from_le_bytes(bytes[20..24].try_into().unwrap()), -0.0);
        assert_eq!(f32::from_le_bytes(bytes[24..28].try_into().unwrap()), 1.0);
        assert_eq!(Gfld::from_bytes(&bytes).unwrap(), g);
        assert!(Gfld::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn colour_images_use_the_green_channel() {
        let img = RgbImage::from_fn(4, 3, |x, _| Rgb([200, (x * 50) as u8, 10]));
        let f = image_to_field(&DynamicImage::ImageRgb8(img)).unwrap();
        assert!((f.get(2, 1) - 100.0 / 255.0).abs() < 1e-12);
        let g16 = image::ImageBuffer::<image::Luma<u16>, _>::from_fn(3, 3, |_, _| image::Luma([65535u16]));
        let f = image_to_field(&DynamicImage::ImageLuma16(g16)).unwrap();
        assert_eq!(f.get(1, 1), 1.0);
    }

    #[test]
    fn png_round_trip() {
        let s = GridSpec::new(5, 4).unwrap();
        let f = ScalarField2D::from_fn(s, |x, _| x as f64 / 4.0);
        let bytes = encode_png(&DynamicImage::ImageLuma8(field_to_gray(&f))).unwrap();
        let back = decode_image(&bytes).unwrap();
        assert!((back.get(4, 0) - 1.0).abs() < 1e-12 && back.get(0, 3) == 0.0);
    }

    #[test]
    fn geojson_shape() {
        let p = Polyline::new(vec![[0.0, 1.0], [2.0, 3.0]]);
        let g = geojson(&p);
        assert_eq!(g["geometry"]["type"], "LineString");
        assert_eq!(g["geometry"]["coordinates"][1][0], 2.0);
    }
}
