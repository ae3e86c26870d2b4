//! End-to-end extraction: filter, metric construction, solve, backtrack,
//! projection and refinement, with the reusable per-image state split out
//! so that repeated extractions only pay for the solve.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eikonal::{self, GridDims, Neighborhood, SolverOptions, TensorField, TensorGrid};
use crate::error::{Error, Result};
use crate::grid::{Point2, ScalarField2D, SymMat2Field};
use crate::metric::{
    self, floor_potential, isotropic_tensor, lifted_tensor_field, potential, radius_lifted_tensor, spatial_tensor,
    LiftedGrid, LiftedTensorField, MetricKind, MetricParams, ResolvedMetric,
};
use crate::oof::{feature_map, oof_multiscale, FeatureMap, OofParams, OofResult};
use crate::path::{LiftedPolyline, Polyline};
use crate::tracer::{self, TracerOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefinementConfig {
    pub enabled: bool,
    /// Tube radius in pixels; `2 + max scale along the path` when unset.
    pub tube_radius: Option<f64>,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            tube_radius: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Give up after accepting this many nodes.
    pub max_nodes: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub output_dir: Option<String>,
    /// Also write raw float dumps of the filter outputs.
    pub dump_fields: bool,
}

/// Every tunable of the pipeline. Serialises to TOML and JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub oof: OofParams,
    pub metric: MetricParams,
    pub tracer: TracerOptions,
    pub refinement: RefinementConfig,
    pub solver: SolverConfig,
    pub io: IoConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.oof.validate()?;
        self.metric.validate()?;
        self.tracer.validate()?;
        if let Some(r) = self.refinement.tube_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::param("tube_radius must be > 0"));
            }
        }
        if self.solver.max_nodes == Some(0) {
            return Err(Error::param("max_nodes must be > 0"));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Serde(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Serde(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Reads a `.json` or `.toml` file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|e| Error::Ingestion {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// SHA-256 of the canonical JSON form (object keys sorted).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serialises");
        let canonical = serde_json::to_string(&value).expect("value serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Hash of the parts that determine the metric tensors.
    pub fn metric_hash(&self) -> String {
        let value = serde_json::json!({ "oof": self.oof, "metric": self.metric });
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

/// Per-image state shared by all extractions with one configuration.
pub struct Prepared {
    pub image: ScalarField2D,
    pub oof: OofResult,
    pub feature: FeatureMap,
    pub resolved: ResolvedMetric,
    /// `ω` after flooring.
    pub omega: ScalarField2D,
    pub m: SymMat2Field,
    /// `M` as a planar tensor field.
    pub planar: TensorGrid,
    pub metric_hash: String,
    lifted: OnceLock<std::result::Result<LiftedTensorField, String>>,
    isotropic: OnceLock<TensorGrid>,
    radius_lifted: OnceLock<std::result::Result<TensorGrid, String>>,
}

impl Prepared {
    pub fn spec(&self) -> crate::grid::GridSpec {
        self.image.spec()
    }

    /// The coherence-penalised lifted field, built on first use.
    pub fn lifted(&self) -> Result<&LiftedTensorField> {
        let r = self.lifted.get_or_init(|| {
            let grid = LiftedGrid::new(self.spec(), self.resolved.levels, self.feature.theta_max)
                .map_err(|e| error_tag(&e))?;
            lifted_tensor_field(&self.m, &self.omega, &self.feature.map, &grid, &self.resolved)
                .map_err(|e| error_tag(&e))
        });
        r.as_ref().map_err(|e| untag(e))
    }

    pub fn isotropic(&self) -> &TensorGrid {
        self.isotropic
            .get_or_init(|| isotropic_tensor(&self.omega).expect("floored potential is positive"))
    }

    pub fn radius_lifted(&self) -> Result<&TensorGrid> {
        let r = self.radius_lifted.get_or_init(|| {
            radius_lifted_tensor(&self.oof, self.resolved.alpha, self.resolved.kappa_max).map_err(|e| error_tag(&e))
        });
        r.as_ref().map_err(|e| untag(e))
    }
}

// Cached errors are stored as text; only the degenerate-range case needs
// to round-trip its variant.
fn error_tag(e: &Error) -> String {
    match e {
        Error::DegenerateFeatureRange => "degenerate".into(),
        other => other.to_string(),
    }
}

fn untag(s: &str) -> Error {
    if s == "degenerate" {
        Error::DegenerateFeatureRange
    } else {
        Error::Tensor {
            node: 0,
            reason: s.to_string(),
        }
    }
}

/// Runs the filter and builds the planar metric for an image.
pub fn prepare(image: &ScalarField2D, config: &PipelineConfig) -> Result<Prepared> {
    config.validate()?;
    let oof = oof_multiscale(image, &config.oof)?;
    let feature = feature_map(&oof.vesselness, config.metric.feature_filter, config.metric.feature_size)?;
    let resolved = config.metric.resolve(&oof.vesselness, feature.theta_max)?;
    let omega = floor_potential(&potential(&oof.vesselness, resolved.alpha)?, resolved.omega_min());
    let m = spatial_tensor(&omega, &oof.q1, &oof.q2)?;
    let planar = TensorGrid::from_sym2(&m)?;
    Ok(Prepared {
        image: image.clone(),
        oof,
        feature,
        resolved,
        omega,
        m,
        planar,
        metric_hash: config.metric_hash(),
        lifted: OnceLock::new(),
        isotropic: OnceLock::new(),
        radius_lifted: OnceLock::new(),
    })
}

/// Result of one extraction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Extraction {
    pub metric: MetricKind,
    /// Final planar centreline from source to end.
    pub path: Polyline,
    /// Lifted curve before projection, for the lifted metrics.
    pub lifted: Option<LiftedPolyline>,
    /// `U(end)` of the solve that produced the path.
    pub action_value: f64,
    /// Energy of `path` under the planar tensor `M`.
    pub energy: f64,
    pub length: f64,
    pub steps: usize,
    pub refined: bool,
    /// Mean cost per pixel is close to background cost.
    pub high_energy: bool,
    pub warnings: Vec<String>,
}

/// Mean per-pixel cost above which a path is reported as mostly off-vessel.
pub const HIGH_ENERGY_PER_PIXEL: f64 = 0.5;

fn node_of(spec: crate::grid::GridSpec, p: Point2) -> Result<(usize, usize)> {
    spec.check_point(p)?;
    Ok(spec.nearest_node(p))
}

/// Extracts a minimal path between two pixels with the chosen metric.
pub fn extract(
    prep: &Prepared,
    config: &PipelineConfig,
    source: Point2,
    end: Point2,
    kind: MetricKind,
) -> Result<Extraction> {
    let spec = prep.spec();
    let (sx, sy) = node_of(spec, source)?;
    let (ex, ey) = node_of(spec, end)?;
    let mut warnings = Vec::new();

    if (sx, sy) == (ex, ey) {
        warnings.push("source and end coincide; returning a single-point path".to_string());
        return Ok(Extraction {
            metric: kind,
            path: Polyline::new(vec![source]),
            lifted: None,
            action_value: 0.0,
            energy: 0.0,
            length: 0.0,
            steps: 0,
            refined: false,
            high_energy: false,
            warnings,
        });
    }

    let solve_column = |field: &dyn TensorField, nb: Neighborhood, seed_z: usize| -> Result<eikonal::ActionMap> {
        let d = field.dims();
        let stop: Vec<usize> = (0..d.nz).map(|z| d.index(ex, ey, z)).collect();
        let mut opts = SolverOptions::new(nb).stop_at(stop);
        opts.max_nodes = config.solver.max_nodes;
        eikonal::solve(field, &[d.index(sx, sy, seed_z)], &opts)
    };

    let (mut path, lifted, action_value, steps) = match kind {
        MetricKind::Ir => {
            let field = prep.isotropic();
            let map = solve_column(field, Neighborhood::N8, 0)?;
            let tr = tracer::backtrack_planar(&map, field, source, end, &config.tracer)?;
            (tr.to_polyline(), None, map.value(GridDims::planar(spec.width(), spec.height()).index(ex, ey, 0)), tr.steps)
        }
        MetricKind::Arr => {
            let field = prep.radius_lifted()?;
            let k = prep.oof.scale_index(sx, sy);
            let map = solve_column(field, Neighborhood::N26, k)?;
            let reached = map.reached().expect("stop node accepted");
            let kz = field.dims().coords(reached).2 as f64;
            let tr = tracer::backtrack(&map, field, [source[0], source[1], k as f64], [end[0], end[1], kz], &config.tracer)?;
            (tr.to_polyline(), None, map.value(reached), tr.steps)
        }
        MetricKind::Proposed => {
            let field = prep.lifted()?;
            let grid = field.grid();
            let ks = grid.nearest_level(prep.feature.map.get(sx, sy));
            let map = solve_column(field, Neighborhood::N26, ks)?;
            let reached = map.reached().expect("stop node accepted");
            let kz = field.dims().coords(reached).2 as f64;
            let tr = tracer::backtrack(
                &map,
                field,
                [source[0], source[1], ks as f64],
                [end[0], end[1], kz],
                &config.tracer,
            )?;
            let gamma = tr.to_lifted(grid);
            (gamma.project(), Some(gamma), map.value(reached), tr.steps)
        }
    };

    let mut refined = false;
    if kind == MetricKind::Proposed && config.refinement.enabled {
        let radius = config
            .refinement
            .tube_radius
            .unwrap_or_else(|| tracer::default_tube_radius(&path, &prep.oof.scale_map));
        match tracer::refine_path(&path, &prep.planar, radius, &config.tracer) {
            Ok(r) => {
                refined = r.refined;
                if !r.refined {
                    warnings.push("refinement did not lower the energy; kept the unrefined path".into());
                }
                path = r.path;
            }
            Err(e @ Error::RefinementFailed(_)) => warnings.push(e.to_string()),
            Err(e) => return Err(e),
        }
    }

    let energy = metric::polyline_energy(&prep.planar, &path)?;
    let length = path.length();
    let high_energy = length > 0.0 && energy / length > HIGH_ENERGY_PER_PIXEL;
    if high_energy {
        warnings.push(format!(
            "mean cost {:.3} per pixel suggests the path leaves the vessels",
            energy / length
        ));
    }
    Ok(Extraction {
        metric: kind,
        path,
        lifted,
        action_value,
        energy,
        length,
        steps,
        refined,
        high_energy,
        warnings,
    })
}
