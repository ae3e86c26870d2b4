//! Scoring extracted centrelines against artery/vein ground truth.
//!
//! A path is rasterised to a 4-connected pixel chain `Γ` and scored by the
//! fraction of its pixels lying on the target artery,
//! `Θ = |Γ ∩ A| / |Γ|`, where `A` includes the artery/vein overlaps.

mod benchmark;
mod dataset;
pub mod phantom;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::path::Polyline;

pub use benchmark::{run_benchmark, write_report, BenchmarkReport, CaseScore, ScoreRow, ScoreTable};
pub use dataset::{load_cases, load_patch, save_patch, CaseEntry, PatchCase, Points};

/// Ordered pixel chain.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DigitalPath {
    pub pixels: Vec<[i64; 2]>,
}

impl DigitalPath {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Consecutive pixels share an edge and no step is immediately undone.
    pub fn is_four_connected(&self) -> bool {
        let p = &self.pixels;
        let steps_ok = p
            .windows(2)
            .all(|w| (w[1][0] - w[0][0]).abs() + (w[1][1] - w[0][1]).abs() == 1);
        let no_backtrack = p.windows(3).all(|w| w[2] != w[0]);
        steps_ok && no_backtrack
    }

    pub fn unique_pixels(&self) -> HashSet<[i64; 2]> {
        self.pixels.iter().copied().collect()
    }
}

/// Converts a polyline to a 4-connected pixel chain: supersample at half a
/// pixel, round, drop repeats, bridge diagonal steps through the
/// horizontal neighbour, and remove immediate back-steps.
pub fn digitize(path: &Polyline) -> DigitalPath {
    let round = |p: [f64; 2]| [p[0].round() as i64, p[1].round() as i64];
    let mut raw: Vec<[i64; 2]> = Vec::new();
    let push = |q: [i64; 2], raw: &mut Vec<[i64; 2]>| {
        if raw.last() != Some(&q) {
            raw.push(q);
        }
    };
    if let Some(&p) = path.points.first() {
        push(round(p), &mut raw);
    }
    for w in path.points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let n = (len / 0.5).ceil().max(1.0) as usize;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            push(round([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]), &mut raw);
        }
    }

    let mut bridged: Vec<[i64; 2]> = Vec::with_capacity(raw.len() * 2);
    for q in raw {
        if let Some(&p) = bridged.last() {
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            // unit x steps first, then unit y steps
            let mut cur = p;
            for _ in 0..dx.abs() {
                cur = [cur[0] + dx.signum(), cur[1]];
                bridged.push(cur);
            }
            for _ in 0..dy.abs() {
                cur = [cur[0], cur[1] + dy.signum()];
                bridged.push(cur);
            }
        } else {
            bridged.push(q);
        }
    }

    let mut out: Vec<[i64; 2]> = Vec::with_capacity(bridged.len());
    for q in bridged {
        let n = out.len();
        if n >= 2 && out[n - 2] == q {
            out.pop();
        } else if out.last() != Some(&q) {
            out.push(q);
        }
    }
    DigitalPath { pixels: out }
}

/// `Θ = |Γ ∩ A| / |Γ|` over distinct pixels. `target` is a row-major mask.
pub fn theta(gamma: &DigitalPath, target: &[bool], spec: GridSpec) -> Result<f64> {
    if gamma.is_empty() {
        return Err(Error::param("cannot score an empty path"));
    }
    if target.len() != spec.len() {
        return Err(Error::param("mask size does not match the grid"));
    }
    let unique = gamma.unique_pixels();
    let hits = unique
        .iter()
        .filter(|p| {
            p[0] >= 0
                && p[1] >= 0
                && (p[0] as usize) < spec.width()
                && (p[1] as usize) < spec.height()
                && target[spec.index(p[0] as usize, p[1] as usize)]
        })
        .count();
    Ok(hits as f64 / unique.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_segment() {
        let d = digitize(&Polyline::new(vec![[0.0, 0.0], [5.0, 0.0]]));
        assert_eq!(d.pixels, (0..=5).map(|x| [x, 0]).collect::<Vec<_>>());
    }

    #[test]
    fn diagonal_segment_bridged_horizontally_first() {
        let d = digitize(&Polyline::new(vec![[0.0, 0.0], [2.0, 2.0]]));
        assert_eq!(d.pixels, vec![[0, 0], [1, 0], [1, 1], [2, 1], [2, 2]]);
        assert!(d.is_four_connected());
    }

    #[test]
    fn back_steps_are_removed() {
        let d = digitize(&Polyline::new(vec![[0.0, 0.0], [3.0, 0.0], [1.0, 0.0]]));
        assert!(d.is_four_connected());
        assert_eq!(d.pixels, vec![[0, 0], [1, 0]]);
    }

    #[test]
    fn theta_examples() {
        let s = GridSpec::new(10, 3).unwrap();
        let d = digitize(&Polyline::new(vec![[0.0, 1.0], [9.0, 1.0]]));
        let all = vec![true; s.len()];
        assert_eq!(theta(&d, &all, s).unwrap(), 1.0);
        assert_eq!(theta(&d, &vec![false; s.len()], s).unwrap(), 0.0);
        let half: Vec<bool> = (0..s.len()).map(|i| s.coords(i).0 < 5).collect();
        assert_eq!(theta(&d, &half, s).unwrap(), 0.5);
        assert!(theta(&DigitalPath::default(), &all, s).is_err());
    }
}
