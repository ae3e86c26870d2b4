//! Continuous curves in the image plane and in the lifted space.

use serde::{Deserialize, Serialize};

use crate::grid::Point2;

/// Ordered points in pixel coordinates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polyline {
    pub points: Vec<Point2>,
}

impl Polyline {
    pub fn new(points: Vec<Point2>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Euclidean length.
    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    pub fn first(&self) -> Option<Point2> {
        self.points.first().copied()
    }

    pub fn last(&self) -> Option<Point2> {
        self.points.last().copied()
    }
}

/// Ordered points `(x, y, ϑ)` with `ϑ` in feature units.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LiftedPolyline {
    pub points: Vec<[f64; 3]>,
}

impl LiftedPolyline {
    pub fn new(points: Vec<[f64; 3]>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Drops the feature coordinate.
    pub fn project(&self) -> Polyline {
        Polyline::new(self.points.iter().map(|p| [p[0], p[1]]).collect())
    }

    /// Feature coordinate along the curve.
    pub fn thetas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[2]).collect()
    }
}
