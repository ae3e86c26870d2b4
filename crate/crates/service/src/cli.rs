//! Command-line front end: `extract`, `benchmark`, `vesselness` and `serve`.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use vesselpath::evaluation::{self, phantom, CaseEntry};
use vesselpath::grid::Point2;
use vesselpath::io::{self, Gfld};
use vesselpath::metric::MetricKind;
use vesselpath::pipeline::{extract, prepare, PipelineConfig};
use vesselpath::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "vesselpath", version, about = "Minimal-path vessel centreline extraction")]
pub struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract one centreline between two points.
    Extract(ExtractArgs),
    /// Score every metric over a dataset or a phantom suite.
    Benchmark(BenchmarkArgs),
    /// Write the vesselness map of an image.
    Vesselness(VesselnessArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

/// Overrides applied on top of the defaults or `--config`.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// TOML or JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// OOF radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Gaussian scale of the filter.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Vessels are brighter than the background.
    #[arg(long)]
    pub bright_vessels: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Exponent of the coherence penalty.
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of feature levels.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    /// Smoothing size of the feature map.
    #[arg(long)]
    pub feature_size: Option<f64>,
    /// Backtracking step in grid units.
    #[arg(long)]
    pub step: Option<f64>,
    /// Node budget of the solver.
    #[arg(long)]
    pub max_nodes: Option<usize>,
    #[arg(long)]
    pub no_refine: bool,
    #[arg(long)]
    pub tube_radius: Option<f64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(r) = &self.radii {
            c.oof.radii = r.clone();
        }
        if let Some(v) = self.sigma {
            c.oof.sigma = v;
        }
        if self.bright_vessels {
            c.oof.dark_on_bright = false;
        }
        if self.alpha.is_some() {
            c.metric.alpha = self.alpha;
        }
        if let Some(v) = self.beta {
            c.metric.beta = v;
        }
        if self.lambda.is_some() {
            c.metric.lambda = self.lambda;
        }
        if let Some(v) = self.p {
            c.metric.p = v;
        }
        if let Some(v) = self.levels {
            c.metric.levels = v;
        }
        if let Some(v) = self.kappa_max {
            c.metric.kappa_max = v;
        }
        if let Some(v) = self.feature_size {
            c.metric.feature_size = v;
        }
        if let Some(v) = self.step {
            c.tracer.step = v;
        }
        if self.max_nodes.is_some() {
            c.solver.max_nodes = self.max_nodes;
        }
        if self.no_refine {
            c.refinement.enabled = false;
        }
        if self.tube_radius.is_some() {
            c.refinement.tube_radius = self.tube_radius;
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_point(s: &str) -> std::result::Result<Point2, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y but got {s:?}"));
    }
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([num(parts[0])?, num(parts[1])?])
}

fn parse_metric(s: &str) -> std::result::Result<MetricKind, String> {
    serde_json::from_value(json!(s.to_ascii_lowercase())).map_err(|_| format!("unknown metric {s:?} (ir, arr, proposed)"))
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Source pixel as x,y.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub source: Point2,
    /// End pixel as x,y.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub end: Point2,
    #[arg(long, value_parser = parse_metric, default_value = "proposed")]
    pub metric: MetricKind,
    /// Output directory; defaults to `io.output_dir` or `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Dataset directory with one subdirectory per case.
    #[arg(long, conflicts_with = "phantoms", required_unless_present = "phantoms")]
    pub cases: Option<PathBuf>,
    /// Generate this many crossing phantoms instead of reading a dataset.
    #[arg(long)]
    pub phantoms: Option<usize>,
    /// Base seed of the phantom suite.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Dataset label in the tables; defaults to the directory name.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long, value_parser = parse_metric, value_delimiter = ',', default_value = "ir,arr,proposed")]
    pub metrics: Vec<MetricKind>,
    #[arg(long, default_value = "benchmark")]
    pub out: PathBuf,
    /// Worker threads; all cores when unset.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct VesselnessArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Output PNG.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write vesselness, scale and feature maps as a float dump.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[command(flatten)]
    pub config: ConfigArgs,
}

fn to_json(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serialises")
}

fn run_extract(a: &ExtractArgs) -> Result<()> {
    let config = a.config.resolve()?;
    let image = io::load_image(&a.image)?;
    let spec = image.spec();
    spec.check_point(a.source)?;
    spec.check_point(a.end)?;
    let out = a
        .out
        .clone()
        .or_else(|| config.io.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out)?;

    let prep = prepare(&image, &config)?;
    let ex = extract(&prep, &config, a.source, a.end, a.metric)?;
    for w in &ex.warnings {
        eprintln!("warning: {w}");
    }

    let mut written = vec!["path.json", "path.geojson", "overlay.png", "summary.json"];
    io::write_path_json(&ex.path, &out.join("path.json"))?;
    io::write_geojson(&ex.path, &out.join("path.geojson"))?;
    io::overlay(&image, &[(&ex.path, [255, 40, 40])]).save(out.join("overlay.png"))?;
    if let Some(l) = &ex.lifted {
        io::write_lifted_json(l, &out.join("lifted.json"))?;
        written.push("lifted.json");
    }
    if config.io.dump_fields {
        Gfld::from_fields(&[&prep.oof.vesselness, &prep.oof.scale_map, &prep.feature.map])?
            .write(&out.join("fields.gfld"))?;
        written.push("fields.gfld");
    }
    let summary = json!({
        "metric": ex.metric,
        "source": a.source,
        "end": a.end,
        "action_value": ex.action_value,
        "energy": ex.energy,
        "length": ex.length,
        "steps": ex.steps,
        "points": ex.path.len(),
        "refined": ex.refined,
        "high_energy": ex.high_energy,
        "warnings": ex.warnings,
        "config_hash": config.hash(),
        "outputs": written,
    });
    fs::write(out.join("summary.json"), to_json(&summary))?;
    println!("{}", to_json(&summary));
    Ok(())
}

fn run_benchmark(a: &BenchmarkArgs) -> Result<()> {
    let config = a.config.resolve()?;
    let (dataset, cases): (String, Vec<CaseEntry>) = match (&a.cases, a.phantoms) {
        (Some(dir), _) => {
            let name = a.dataset.clone().unwrap_or_else(|| dir_name(dir));
            (name, evaluation::load_cases(dir)?)
        }
        (None, Some(n)) => {
            let cases = phantom::crossing_suite(n, a.seed)?;
            let name = a.dataset.clone().unwrap_or_else(|| "phantom".into());
            (name, cases.into_iter().map(CaseEntry::from).collect())
        }
        (None, None) => return Err(Error::Parameter("either --cases or --phantoms is required".into())),
    };
    for e in &cases {
        if let Err(reason) = &e.case {
            eprintln!("warning: case {} scores 0: {reason}", e.id);
        }
    }
    let work = || -> Result<()> {
        let report = evaluation::run_benchmark(&dataset, &cases, &a.metrics, &config)?;
        evaluation::write_report(&report, &cases, &a.out)?;
        print!("{}", report.table.to_markdown());
        Ok(())
    };
    match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn dir_name(dir: &Path) -> String {
    dir.canonicalize()
        .ok()
        .as_deref()
        .and_then(Path::file_name)
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn run_vesselness(a: &VesselnessArgs) -> Result<()> {
    let config = a.config.resolve()?;
    let image = io::load_image(&a.image)?;
    let prep = prepare(&image, &config)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    io::save_field_png(&prep.oof.vesselness, &a.out)?;
    if let Some(dump) = &a.dump {
        Gfld::from_fields(&[&prep.oof.vesselness, &prep.oof.scale_map, &prep.feature.map])?.write(dump)?;
    }
    println!(
        "{}",
        to_json(&json!({
            "width": image.spec().width(),
            "height": image.spec().height(),
            "max_vesselness": prep.oof.vesselness.max(),
            "theta_max": prep.feature.theta_max,
            "alpha": prep.resolved.alpha,
        }))
    );
    Ok(())
}

fn run_serve(a: &ServeArgs) -> Result<()> {
    let config = a.config.resolve()?;
    let addr = SocketAddr::new(a.host, a.port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(crate::api::serve(addr, config))?;
    Ok(())
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Extract(a) => run_extract(a),
        Command::Benchmark(a) => run_benchmark(a),
        Command::Vesselness(a) => run_vesselness(a),
        Command::Serve(a) => run_serve(a),
    }
}

/// JSON body printed to stderr when a command fails.
pub fn error_body(e: &Error) -> String {
    json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() }).to_string()
}
