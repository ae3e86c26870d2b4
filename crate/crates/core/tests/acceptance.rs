//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.

mod common;

use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use vesselpath::eikonal::{self, BlockTensor, GridDims, Neighborhood, SolverOptions, TensorField, TensorGrid};
use vesselpath::evaluation::{digitize, phantom, run_benchmark, theta, CaseEntry, DigitalPath};
use vesselpath::grid::GridSpec;
use vesselpath::metric::{path_energy, MetricKind};
use vesselpath::oof::{oof_multiscale, OofParams};
use vesselpath::path::Polyline;
use vesselpath::pipeline::{prepare, PipelineConfig, Prepared};
use vesselpath::tracer::{backtrack, Trace, TracerOptions};

const SUITE_SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn constant_metric_exactness() -> Outcome {
    let n = 201;
    let d = GridDims::planar(n, n);
    let c = n / 2;
    let t0 = Instant::now();
    let g = TensorGrid::constant(d, BlockTensor::identity()).unwrap();
    let u = eikonal::solve(&g, &[d.index(c, c, 0)], &SolverOptions::new(Neighborhood::N8)).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for i in 0..d.len() {
        let (x, y, _) = d.coords(i);
        let r = (x as f64 - c as f64).hypot(y as f64 - c as f64);
        if r >= 10.0 {
            worst = worst.max((u.value(i) - r).abs() / r);
        }
    }

    let aniso = TensorGrid::constant(d, BlockTensor::new(4.0, 0.0, 1.0, 1.0)).unwrap();
    let ua = eikonal::solve(&aniso, &[d.index(c, c, 0)], &SolverOptions::new(Neighborhood::N8)).unwrap();
    let mut worst_axis: f64 = 0.0;
    for l in 1..=c {
        let along_x = ua.value(d.index(c + l, c, 0));
        let along_y = ua.value(d.index(c, c + l, 0));
        worst_axis = worst_axis
            .max((along_x - 2.0 * l as f64).abs() / (2.0 * l as f64))
            .max((along_y - l as f64).abs() / l as f64);
    }
    outcome(
        worst <= 0.02 && elapsed < 2.0 && worst_axis <= 0.02,
        format!(
            "identity max rel err {:.4} (<= 0.02), solve {elapsed:.3} s (< 2), diag(4,1) axis err {:.2e} (<= 0.02)",
            worst, worst_axis
        ),
    )
}

/// Field-level agreement `‖U − D‖₂ / ‖D‖₂` with the graph distances `D`, plus
/// the pointwise upper bound. The pointwise relative gap is reported too; it
/// is dominated by the graph's own metrication error.
fn oracle_equivalence() -> Outcome {
    let d = GridDims::new(32, 32, 16);
    let (mut diff2, mut norm2) = (0.0, 0.0);
    let mut worst_rel: f64 = 0.0;
    let mut worst_above = f64::NEG_INFINITY;
    for seed in 0..3u64 {
        let g = common::random_tensor_field(d, 4.0, 100 + seed);
        let s = d.index(16, 16, 8);
        let u = eikonal::solve(&g, &[s], &SolverOptions::new(Neighborhood::N26)).unwrap();
        let dj = common::dijkstra(&g, s, &common::box_offsets(d));
        for i in 0..d.len() {
            if i == s {
                continue;
            }
            diff2 += (u.value(i) - dj[i]).powi(2);
            norm2 += dj[i] * dj[i];
            worst_rel = worst_rel.max((u.value(i) - dj[i]).abs() / dj[i]);
            worst_above = worst_above.max(u.value(i) - dj[i]);
        }
    }
    let rel = (diff2 / norm2).sqrt();
    outcome(
        rel <= 0.05 && worst_above <= 1e-9,
        format!(
            "relative L2 gap {rel:.4} (<= 0.05), max excess over graph distance {worst_above:.2e} (<= 1e-9), pointwise max gap {worst_rel:.4}"
        ),
    )
}

/// Solves and backtracks one case with the given metric, returning the trace
/// together with its energy and `U(end)` under the solve metric.
fn traced(prep: &Prepared, source: [f64; 2], end: [f64; 2], kind: MetricKind) -> (Trace, f64, f64) {
    let spec = prep.spec();
    let (sx, sy) = spec.nearest_node(source);
    let (ex, ey) = spec.nearest_node(end);
    let run = |field: &dyn TensorField, nb: Neighborhood, seed_z: usize| {
        let d = field.dims();
        let stop: Vec<usize> = (0..d.nz).map(|z| d.index(ex, ey, z)).collect();
        let map = eikonal::solve(field, &[d.index(sx, sy, seed_z)], &SolverOptions::new(nb).stop_at(stop)).unwrap();
        let r = map.reached().unwrap();
        let kz = d.coords(r).2 as f64;
        let tr = backtrack(
            &map,
            field,
            [source[0], source[1], seed_z as f64],
            [end[0], end[1], kz],
            &TracerOptions::default(),
        )
        .unwrap();
        let e = path_energy(field, &tr.points).unwrap();
        (tr, e, map.value(r))
    };
    match kind {
        MetricKind::Ir => run(prep.isotropic(), Neighborhood::N8, 0),
        MetricKind::Arr => run(prep.radius_lifted().unwrap(), Neighborhood::N26, prep.oof.scale_index(sx, sy)),
        MetricKind::Proposed => {
            let field = prep.lifted().unwrap();
            let ks = field.grid().nearest_level(prep.feature.map.get(sx, sy));
            run(field, Neighborhood::N26, ks)
        }
    }
}

fn geodesic_certificate() -> Outcome {
    let config = PipelineConfig::default();
    let mut worst_ratio: f64 = 0.0;
    let mut non_monotone = 0;
    let mut traces = 0;
    for case in phantom::crossing_suite(10, SUITE_SEED).unwrap() {
        let prep = prepare(&case.image, &config).unwrap();
        for kind in MetricKind::all() {
            let (tr, e, u) = traced(&prep, case.source, case.end, kind);
            worst_ratio = worst_ratio.max(e / u);
            if tr.action_along.windows(2).any(|w| w[1] >= w[0]) {
                non_monotone += 1;
            }
            traces += 1;
        }
    }
    outcome(
        worst_ratio <= 1.05 && non_monotone == 0,
        format!("{traces} traces, max energy/U(end) {worst_ratio:.4} (<= 1.05), non-monotone traces {non_monotone}"),
    )
}

fn coherence_behaviour() -> Outcome {
    let cases: Vec<CaseEntry> = phantom::crossing_suite(10, SUITE_SEED)
        .unwrap()
        .into_iter()
        .map(CaseEntry::from)
        .collect();
    let report = run_benchmark("phantom", &cases, &MetricKind::all(), &PipelineConfig::default()).unwrap();
    let row = |m| report.table.row("phantom", m).unwrap().clone();
    let (ir, arr, prop) = (row(MetricKind::Ir), row(MetricKind::Arr), row(MetricKind::Proposed));
    outcome(
        prop.avg >= 0.95 && prop.min >= 0.85 && arr.avg <= 0.70,
        format!(
            "proposed avg {:.3} (>= 0.95) min {:.3} (>= 0.85); ArR avg {:.3} (<= 0.70); IR avg {:.3}",
            prop.avg, prop.min, arr.avg, ir.avg
        ),
    )
}

fn reduction() -> Outcome {
    let case = &phantom::crossing_suite(1, SUITE_SEED).unwrap()[0];
    let mut config = PipelineConfig::default();
    config.metric.lambda = Some(0.0);
    config.metric.beta = 0.0;
    config.metric.levels = 40;
    let prep = prepare(&case.image, &config).unwrap();
    let spec = prep.spec();
    let (sx, sy) = spec.nearest_node(case.source);
    let lifted = prep.lifted().unwrap();
    let ld = lifted.dims();
    let ks = lifted.grid().nearest_level(prep.feature.map.get(sx, sy));
    let u3 = eikonal::solve(lifted, &[ld.index(sx, sy, ks)], &SolverOptions::new(Neighborhood::N26)).unwrap();
    let pd = prep.planar.dims();
    let u2 = eikonal::solve(&prep.planar, &[pd.index(sx, sy, 0)], &SolverOptions::new(Neighborhood::N8)).unwrap();
    let mut worst: f64 = 0.0;
    for y in 0..spec.height() {
        for x in 0..spec.width() {
            if (x, y) == (sx, sy) {
                continue;
            }
            let slice_min = (0..ld.nz).map(|z| u3.value(ld.index(x, y, z))).fold(f64::INFINITY, f64::min);
            let planar = u2.value(pd.index(x, y, 0));
            worst = worst.max((slice_min - planar).abs() / planar);
        }
    }
    outcome(worst <= 0.01, format!("max rel diff of slice minima vs planar solve {worst:.4} (<= 0.01)"))
}

fn oof_scale_selection() -> Outcome {
    let spec = GridSpec::new(96, 96).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for &half_width in &[2.0, 3.0, 4.0] {
        for &angle in &[0.0, 0.5f64] {
            let img = common::dark_tube(spec, [48.0, 48.0], angle, half_width, 0.6);
            let res = oof_multiscale(&img, &OofParams::default()).unwrap();
            let axis = [angle.cos(), angle.sin()];
            let (mut n, mut scale_ok, mut worst_angle) = (0, 0, 0.0f64);
            for k in -30..=30 {
                let p = [48.0 + k as f64 * axis[0], 48.0 + k as f64 * axis[1]];
                let (x, y) = spec.nearest_node(p);
                let off = ((x as f64 - 48.0) * -axis[1] + (y as f64 - 48.0) * axis[0]).abs();
                if off > 0.5 {
                    continue;
                }
                n += 1;
                if (res.scale_map.get(x, y) - half_width).abs() <= 1.0 {
                    scale_ok += 1;
                }
                worst_angle = worst_angle.max(common::axis_angle_deg(res.q1.get(x, y), axis));
            }
            let frac = scale_ok as f64 / n as f64;
            pass &= frac >= 0.9 && worst_angle <= 5.0;
            details.push(format!("hw {half_width} tilt {angle}: {:.0}% scale, q1 {worst_angle:.2} deg", 100.0 * frac));
        }
    }
    outcome(pass, format!("{} (>= 90%, <= 5 deg)", details.join("; ")))
}

fn polyline_strategy() -> impl Strategy<Value = Polyline> {
    prop::collection::vec((-5.0f64..45.0, -5.0f64..45.0), 1..12)
        .prop_map(|pts| Polyline::new(pts.into_iter().map(|(x, y)| [x, y]).collect()))
}

fn digitization_properties() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 500,
        failure_persistence: None,
        ..Config::default()
    });
    let spec = GridSpec::new(40, 40).unwrap();
    let result = runner.run(
        &(polyline_strategy(), prop::collection::vec(any::<bool>(), spec.len())),
        |(path, mask)| {
            let d = digitize(&path);
            prop_assert!(!d.is_empty());
            prop_assert!(d.is_four_connected(), "not 4-connected: {:?}", d.pixels);
            let again = digitize(&Polyline::new(d.pixels.iter().map(|p| [p[0] as f64, p[1] as f64]).collect()));
            prop_assert_eq!(&again, &d);
            let t = theta(&d, &mask, spec).unwrap();
            prop_assert!((0.0..=1.0).contains(&t));
            Ok(())
        },
    );
    let empty_rejected = theta(&DigitalPath::default(), &vec![true; spec.len()], spec).is_err();
    match result {
        Ok(()) if empty_rejected => outcome(true, "500 random polylines: 4-connected, idempotent, theta in [0, 1]".into()),
        Ok(()) => outcome(false, "empty digital path was scored".into()),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn determinism() -> Outcome {
    let cases: Vec<CaseEntry> = phantom::crossing_suite(4, SUITE_SEED)
        .unwrap()
        .into_iter()
        .map(CaseEntry::from)
        .collect();
    let config = PipelineConfig::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_benchmark("phantom", &cases, &MetricKind::all(), &config))
            .unwrap()
            .table
            .to_csv()
            .unwrap()
    };
    let (a, b, c) = (run(1), run(4), run(4));
    outcome(
        a == b && b == c,
        format!("3 runs (1, 4, 4 threads), {} CSV bytes, identical: {}", a.len(), a == b && b == c),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("constant-metric exactness", constant_metric_exactness),
        ("oracle equivalence", oracle_equivalence),
        ("geodesic certificate", geodesic_certificate),
        ("coherence behaviour", coherence_behaviour),
        ("reduction", reduction),
        ("OOF scale selection", oof_scale_selection),
        ("digitization and theta", digitization_properties),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t0 = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.1} s]", o.detail, t0.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
