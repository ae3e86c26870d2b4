//! Synthetic crossing patches: a dark, strongly winding sinusoidal artery
//! crossed several times by a fainter, gently undulating vein. The vein
//! offers a much shorter route between artery points on either side of the
//! crossings, which is what a metric without a coherence term tends to
//! take.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Point2, ScalarField2D};

use super::PatchCase;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomParams {
    pub width: usize,
    pub height: usize,
    /// Background intensity.
    pub background: f64,
    /// Artery darkening below the background, drawn from this range.
    pub artery_contrast: (f64, f64),
    /// How much less the vein is darkened than the artery.
    pub contrast_gap: (f64, f64),
    pub artery_radius: (f64, f64),
    pub vein_radius: (f64, f64),
    pub amplitude: (f64, f64),
    /// Artery wavelength in pixels; crossings are half a wavelength apart.
    pub wavelength: f64,
    /// Standard deviation of the additive noise.
    pub noise: f64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        Self {
            width: 100,
            height: 80,
            background: 0.9,
            artery_contrast: (0.5, 0.58),
            contrast_gap: (0.22, 0.3),
            artery_radius: (2.0, 2.5),
            vein_radius: (2.0, 2.5),
            amplitude: (24.0, 28.0),
            wavelength: 50.0,
            noise: 0.02,
        }
    }
}

/// Ground-truth geometry of a generated phantom.
#[derive(Clone, Debug)]
pub struct PhantomTruth {
    pub artery_centerline: Vec<Point2>,
    pub vein_centerline: Vec<Point2>,
    pub artery_radius: f64,
    pub vein_radius: f64,
    pub artery_intensity: f64,
    pub vein_intensity: f64,
}

fn draw(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.1 > r.0 {
        rng.random_range(r.0..r.1)
    } else {
        r.0
    }
}

/// Distance from every pixel to a densely sampled curve.
fn distance_to_curve(spec: GridSpec, curve: &[Point2], reach: f64) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; spec.len()];
    for c in curve {
        let x0 = (c[0] - reach).floor().max(0.0) as usize;
        let x1 = ((c[0] + reach).ceil().max(0.0) as usize).min(spec.width() - 1);
        let y0 = (c[1] - reach).floor().max(0.0) as usize;
        let y1 = ((c[1] + reach).ceil().max(0.0) as usize).min(spec.height() - 1);
        if c[0] + reach < 0.0 || c[1] + reach < 0.0 {
            continue;
        }
        for y in y0..=y1 {
            for x in x0..=x1 {
                let v = (x as f64 - c[0]).hypot(y as f64 - c[1]);
                let i = spec.index(x, y);
                if v < d[i] {
                    d[i] = v;
                }
            }
        }
    }
    d
}

/// Generates one crossing phantom. The source and end sit on the artery,
/// three crossings apart.
pub fn crossing_phantom(id: &str, seed: u64, p: &PhantomParams) -> Result<(PatchCase, PhantomTruth)> {
    if p.width < 60 || p.height < 40 {
        return Err(Error::param("phantom needs at least 60x40 pixels"));
    }
    let spec = GridSpec::new(p.width, p.height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (p.width as f64, p.height as f64);
    let amp = draw(&mut rng, p.amplitude).min(h / 2.0 - 6.0);
    let cy = h / 2.0 + rng.random_range(-2.0..2.0);
    let half = p.wavelength / 2.0;
    // crossings near x0 + k * half
    let x0 = (w - 4.0 * half) / 2.0 + rng.random_range(-2.0..2.0);
    let phase_sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let slope = rng.random_range(-0.06..0.06);
    let vein_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let ra = draw(&mut rng, p.artery_radius);
    let rv = draw(&mut rng, p.vein_radius);
    let ca = draw(&mut rng, p.artery_contrast);
    let cv = ca - draw(&mut rng, p.contrast_gap);

    let artery_y = |x: f64| cy + phase_sign * amp * (std::f64::consts::PI * (x - x0) / half).sin();
    let vein_y = |x: f64| cy + slope * (x - w / 2.0) + 1.5 * (std::f64::consts::TAU * x / (3.0 * p.wavelength) + vein_phase).sin();
    let samples = (w * 20.0) as usize;
    let xs: Vec<f64> = (0..=samples).map(|i| -5.0 + (w + 10.0) * i as f64 / samples as f64).collect();
    let artery_c: Vec<Point2> = xs.iter().map(|&x| [x, artery_y(x)]).collect();
    let vein_c: Vec<Point2> = xs.iter().map(|&x| [x, vein_y(x)]).collect();
    let da = distance_to_curve(spec, &artery_c, ra + 3.0);
    let dv = distance_to_curve(spec, &vein_c, rv + 3.0);

    let noise = Normal::new(0.0, p.noise).map_err(|e| Error::param(e.to_string()))?;
    let mut values = Vec::with_capacity(spec.len());
    let mut artery = vec![false; spec.len()];
    let mut vein = vec![false; spec.len()];
    let mut overlap = vec![false; spec.len()];
    for i in 0..spec.len() {
        let cover_a = (ra + 0.5 - da[i]).clamp(0.0, 1.0);
        let cover_v = (rv + 0.5 - dv[i]).clamp(0.0, 1.0);
        // the artery lies on top at crossings
        let dark = ca * cover_a + cv * cover_v * (1.0 - cover_a);
        let v = (p.background - dark + noise.sample(&mut rng)).clamp(0.0, 1.0);
        values.push(v);
        let (ia, iv) = (da[i] <= ra, dv[i] <= rv);
        overlap[i] = ia && iv;
        artery[i] = ia && !iv;
        vein[i] = iv && !ia;
    }
    let image = ScalarField2D::new(spec, values)?;

    let xs_src = x0 + 0.5 * half;
    let xs_end = x0 + 3.5 * half;
    let source = [xs_src.round(), artery_y(xs_src.round()).round()];
    let end = [xs_end.round(), artery_y(xs_end.round()).round()];

    let case = PatchCase {
        id: id.to_string(),
        image,
        artery,
        vein,
        overlap,
        source,
        end,
    };
    let truth = PhantomTruth {
        artery_centerline: artery_c,
        vein_centerline: vein_c,
        artery_radius: ra,
        vein_radius: rv,
        artery_intensity: p.background - ca,
        vein_intensity: p.background - cv,
    };
    Ok((case, truth))
}

/// The standard suite of `n` phantoms with ids `phantom_00`, `phantom_01`, ...
pub fn crossing_suite(n: usize, base_seed: u64) -> Result<Vec<PatchCase>> {
    (0..n)
        .map(|k| crossing_phantom(&format!("phantom_{k:02}"), base_seed + k as u64, &PhantomParams::default()).map(|c| c.0))
        .collect()
}
