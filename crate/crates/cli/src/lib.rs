//! `odflow` command line: render layouts to SVG or JSON, export 3D flow
//! curves, serve the HTTP API, time leader placement and write the demo
//! artifacts for a fixture directory.
//!
//! Exit codes: 0 success, 2 invalid input, 3 internal failure.

pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand};
use odflow::canonical::to_canonical_string;
use odflow::flow3d::{
    export_curves, to_obj, ExportOptions, Flow3dError, HeightEncoding, Representation,
};
use odflow::layouts::{
    highlight, layout, place_leaders, transform, Canvas, GridAssignment, Layout, LayoutError,
    LayoutKind, RelayoutRequest, Selection,
};
use odflow::oddata::{
    load_dataset, parse_regions, DataError, FlowDataset, LoadOptions, RegionGroup,
};
use odflow::rendersvg::{render, RenderOptions};
use serde_json::json;

use config::Config;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad input or flags: exit code 2.
    Validation { kind: String, message: String },
    /// Anything else: exit code 3.
    Internal { kind: String, message: String },
}

impl CliError {
    pub fn validation(kind: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn internal(kind: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Internal {
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &str {
        match self {
            CliError::Validation { kind, .. } | CliError::Internal { kind, .. } => kind,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation { message, .. } | CliError::Internal { message, .. } => message,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Internal { .. } => 3,
        }
    }

    /// One stderr line, JSON when `json` is set.
    pub fn report(&self, json: bool) -> String {
        if json {
            json!({"error": {"kind": self.kind(), "message": self.message(), "exitCode": self.exit_code()}}).to_string()
        } else {
            format!("error[{}]: {}", self.kind(), self.message())
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.report(false))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::validation(e.kind(), e.to_string())
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        CliError::validation(e.kind(), e.to_string())
    }
}

impl From<Flow3dError> for CliError {
    fn from(e: Flow3dError) -> Self {
        CliError::validation(e.kind(), e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "odflow",
    version,
    about = "Origin-destination flow layouts: MapTrix, OD Maps, flow maps and 3D flows"
)]
pub struct Cli {
    /// Defaults file; `./odflow.toml` is used when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print errors to stderr as JSON.
    #[arg(long, global = true)]
    pub json_errors: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lay out a dataset and write SVG (`.svg`) or layout JSON (`.json`).
    Render(RenderArgs),
    /// Export 3D flow curves as JSON (`.json`) or a tube mesh (`.obj`).
    Export3d(Export3dArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
    /// Time ordering, routing and QP refinement for n regions.
    BenchQp(BenchArgs),
    /// Write every artifact for each dataset in a fixture directory.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Flow table with `origin,dest,magnitude` columns.
    #[arg(long)]
    pub flows: PathBuf,
    /// GeoJSON FeatureCollection of region polygons.
    #[arg(long)]
    pub regions: PathBuf,
    #[arg(long)]
    pub allow_self_flows: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub kind: LayoutKind,
    #[command(flatten)]
    pub data: DataArgs,
    /// Grid assignment, needed for OD maps.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Keep flows with magnitude in `lo:hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub filter: Option<String>,
    /// Merge regions first: `Label=A,B;Other=C,D`.
    #[arg(long)]
    pub groups: Option<String>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    /// Highlight regions on a MapTrix (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub highlight_regions: Vec<String>,
    /// Highlight matrix cells `origin:dest` on a MapTrix (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub highlight_cells: Vec<String>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct Export3dArgs {
    #[arg(long)]
    pub repr: Representation,
    #[arg(long, default_value = "constant")]
    pub encoding: HeightEncoding,
    #[command(flatten)]
    pub data: DataArgs,
    /// Samples per curve.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "HOST")]
    pub host: Option<String>,
    #[arg(long, env = "PORT")]
    pub port: Option<u16>,
    /// Datasets preloaded under their directory names.
    #[arg(long, env = "FIXTURES_DIR")]
    pub fixtures_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub regions: PathBuf,
    /// Number of regions, taken in id order; all when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Print the result as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value = "fixtures")]
    pub fixtures_dir: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path)
        .map_err(|e| CliError::validation("InputError", format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::internal("IoError", format!("{}: {e}", path.display())))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase()
}

fn bad_arg(message: impl Into<String>) -> CliError {
    CliError::validation("InvalidArgument", message)
}

fn load(data: &DataArgs) -> Result<FlowDataset, CliError> {
    let opts = LoadOptions {
        allow_self_flows: data.allow_self_flows,
    };
    Ok(load_dataset(
        read(&data.flows)?.as_slice(),
        read(&data.regions)?.as_slice(),
        opts,
    )?)
}

/// Parses `lo:hi`.
pub fn parse_filter(s: &str) -> Result<[f64; 2], CliError> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| bad_arg(format!("filter {s:?} is not lo:hi")))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| bad_arg(format!("filter bound {t:?} is not a number")))
    };
    Ok([num(lo)?, num(hi)?])
}

/// Parses `Label=A,B;Other=C`.
pub fn parse_groups(s: &str) -> Result<Vec<RegionGroup>, CliError> {
    s.split(';')
        .filter(|g| !g.trim().is_empty())
        .map(|g| {
            let (label, members) = g
                .split_once('=')
                .ok_or_else(|| bad_arg(format!("group {g:?} is not Label=A,B")))?;
            let members: Vec<&str> = members
                .split(',')
                .map(str::trim)
                .filter(|m| !m.is_empty())
                .collect();
            if label.trim().is_empty() || members.is_empty() {
                return Err(bad_arg(format!("group {g:?} needs a label and members")));
            }
            Ok(RegionGroup::new(label.trim(), members))
        })
        .collect()
}

fn canvas(config: &Config, width: Option<f64>, height: Option<f64>) -> Result<Canvas, CliError> {
    let c = Canvas::new(
        width.unwrap_or(config.canvas.width),
        height.unwrap_or(config.canvas.height),
    );
    if !(c.width.is_finite() && c.height.is_finite() && c.width > 0.0 && c.height > 0.0) {
        return Err(bad_arg(format!(
            "canvas {}x{} must be positive",
            c.width, c.height
        )));
    }
    Ok(c)
}

fn layout_bytes(
    doc: &Layout,
    overlay: Option<&Selection>,
    path: &Path,
) -> Result<Vec<u8>, CliError> {
    match extension(path).as_str() {
        "svg" => {
            let overlay = overlay.map(|s| highlight(doc, s)).transpose()?;
            Ok(render(doc, overlay.as_ref(), &RenderOptions::default()).into_bytes())
        }
        "json" if overlay.is_none() => Ok(format!("{}\n", doc.to_canonical_json()).into_bytes()),
        "json" => Err(bad_arg("highlighting applies to SVG output only")),
        _ => Err(bad_arg(format!(
            "output {} must end in .svg or .json",
            path.display()
        ))),
    }
}

fn run_render(args: &RenderArgs, config: &Config) -> Result<(), CliError> {
    let canvas = canvas(config, args.width, args.height)?;
    let mut d = load(&args.data)?;
    let req = RelayoutRequest {
        filter: args.filter.as_deref().map(parse_filter).transpose()?,
        groups: args.groups.as_deref().map(parse_groups).transpose()?,
    };
    if req != RelayoutRequest::default() {
        d = transform(&d, &req)?;
    }
    let grid = match &args.grid {
        Some(p) => {
            let text = String::from_utf8(read(p)?)
                .map_err(|_| bad_arg(format!("{} is not UTF-8", p.display())))?;
            Some(GridAssignment::from_json(&text)?)
        }
        None => None,
    };
    let doc = layout(args.kind, &d, grid.as_ref(), canvas, &config.layout)?;
    let mut cells = Vec::new();
    for c in &args.highlight_cells {
        let (o, dst) = c
            .split_once(':')
            .ok_or_else(|| bad_arg(format!("cell {c:?} is not origin:dest")))?;
        cells.push([o.to_string(), dst.to_string()]);
    }
    let selection = Selection {
        regions: args.highlight_regions.clone(),
        cells,
    };
    let overlay = (selection != Selection::default()).then_some(&selection);
    write(&args.output, &layout_bytes(&doc, overlay, &args.output)?)
}

fn export_options(config: &Config, samples: Option<usize>) -> ExportOptions {
    let d = ExportOptions::default();
    ExportOptions {
        samples: samples.or(config.export3d.samples).unwrap_or(d.samples),
        height_range: config.export3d.height_range.unwrap_or(d.height_range),
        radius_range: config.export3d.radius_range.or(d.radius_range),
    }
}

fn export_bytes(
    d: &FlowDataset,
    repr: Representation,
    encoding: HeightEncoding,
    opts: &ExportOptions,
    path: &Path,
) -> Result<Vec<u8>, CliError> {
    let ext = extension(path);
    if ext != "json" && ext != "obj" {
        return Err(bad_arg(format!(
            "output {} must end in .json or .obj",
            path.display()
        )));
    }
    let batch = export_curves(d, repr, encoding, opts)?;
    Ok(if ext == "obj" {
        to_obj(&batch).into_bytes()
    } else {
        let text = to_canonical_string(&batch)
            .map_err(|e| CliError::internal("SerializeError", e.to_string()))?;
        format!("{text}\n").into_bytes()
    })
}

fn run_export3d(args: &Export3dArgs, config: &Config) -> Result<(), CliError> {
    let d = load(&args.data)?;
    let opts = export_options(config, args.samples);
    write(
        &args.output,
        &export_bytes(&d, args.repr, args.encoding, &opts, &args.output)?,
    )
}

fn run_serve(args: &ServeArgs, config: &Config) -> Result<(), CliError> {
    let defaults = odflow_service::ServiceConfig::default();
    let service = odflow_service::ServiceConfig {
        host: args
            .host
            .clone()
            .or(config.serve.host.clone())
            .unwrap_or(defaults.host),
        port: args.port.or(config.serve.port).unwrap_or(defaults.port),
        fixtures_dir: args
            .fixtures_dir
            .clone()
            .or(config.serve.fixtures_dir.clone()),
        params: config.layout.clone(),
    };
    let rt = tokio::runtime::Runtime::new()
        .map_err(|e| CliError::internal("RuntimeError", e.to_string()))?;
    rt.block_on(odflow_service::serve(service))
        .map_err(|e| CliError::internal("ServeError", e))
}

/// Timing summary of `bench-qp`, in milliseconds.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchResult {
    pub n: usize,
    pub trials: usize,
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

/// Times `place_leaders` on the first `n` regions in id order.
pub fn bench_qp(
    regions_geojson: &[u8],
    n: Option<usize>,
    trials: usize,
    config: &Config,
) -> Result<BenchResult, CliError> {
    let mut regions = parse_regions(regions_geojson)?;
    regions.sort_by(|a, b| a.id.cmp(&b.id));
    let n = n.unwrap_or(regions.len());
    if n < 2 || n > regions.len() {
        return Err(bad_arg(format!(
            "n = {n} must lie in 2..={}",
            regions.len()
        )));
    }
    if trials == 0 {
        return Err(bad_arg("trials must be positive"));
    }
    regions.truncate(n);
    let active: Vec<usize> = (0..n).collect();
    let canvas = canvas(config, None, None)?;
    place_leaders(&regions, &active, canvas, &config.layout)?;
    let mut ms: Vec<f64> = (0..trials)
        .map(|_| {
            let t = Instant::now();
            let placed = place_leaders(&regions, &active, canvas, &config.layout);
            let elapsed = t.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(placed).map(|_| elapsed)
        })
        .collect::<Result<_, _>>()?;
    ms.sort_by(f64::total_cmp);
    let mid = ms.len() / 2;
    let median_ms = if ms.len() % 2 == 1 {
        ms[mid]
    } else {
        (ms[mid - 1] + ms[mid]) / 2.0
    };
    Ok(BenchResult {
        n,
        trials,
        median_ms,
        min_ms: ms[0],
        max_ms: ms[ms.len() - 1],
    })
}

fn run_bench(args: &BenchArgs, config: &Config) -> Result<(), CliError> {
    let r = bench_qp(&read(&args.regions)?, args.n, args.trials, config)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string(&r)
                .map_err(|e| CliError::internal("SerializeError", e.to_string()))?
        );
    } else {
        println!(
            "n = {}, trials = {}: median {:.3} ms (min {:.3}, max {:.3})",
            r.n, r.trials, r.median_ms, r.min_ms, r.max_ms
        );
    }
    Ok(())
}

/// Artifacts written by `demo` for one dataset directory, in write order.
pub fn demo_artifacts(name: &str, has_grid: bool) -> Vec<String> {
    let mut out = Vec::new();
    for kind in LayoutKind::ALL {
        if kind != LayoutKind::Odmaps || has_grid {
            out.push(format!("{name}_{kind}.svg"));
            out.push(format!("{name}_{kind}.json"));
        }
    }
    for repr in [
        Representation::Map,
        Representation::Globe,
        Representation::MapsLink,
    ] {
        out.push(format!("{name}_flows3d_{repr}.json"));
        out.push(format!("{name}_flows3d_{repr}.obj"));
    }
    out
}

fn run_demo(args: &DemoArgs, config: &Config) -> Result<(), CliError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(&args.fixtures_dir)
        .map_err(|e| {
            CliError::validation(
                "InputError",
                format!("{}: {e}", args.fixtures_dir.display()),
            )
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("flows.csv").is_file() && p.join("regions.geojson").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::validation(
            "InputError",
            format!("no datasets in {}", args.fixtures_dir.display()),
        ));
    }
    fs::create_dir_all(&args.output)
        .map_err(|e| CliError::internal("IoError", format!("{}: {e}", args.output.display())))?;
    let canvas = canvas(config, None, None)?;
    let opts = export_options(config, None);
    for dir in dirs {
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        let data = DataArgs {
            flows: dir.join("flows.csv"),
            regions: dir.join("regions.geojson"),
            allow_self_flows: false,
        };
        let d = load(&data)?;
        let grid_path = dir.join("grid.json");
        let grid = if grid_path.is_file() {
            let text =
                String::from_utf8(read(&grid_path)?).map_err(|_| bad_arg("grid is not UTF-8"))?;
            Some(GridAssignment::from_json(&text)?)
        } else {
            None
        };
        for file in demo_artifacts(&name, grid.is_some()) {
            let path = args.output.join(&file);
            let stem = file.trim_start_matches(&format!("{name}_")).to_string();
            let bytes = match stem.split_once('.').map(|(s, _)| s).unwrap_or_default() {
                s if s.starts_with("flows3d_") => {
                    let repr: Representation = s["flows3d_".len()..].parse().map_err(bad_arg)?;
                    export_bytes(&d, repr, HeightEncoding::Quantity, &opts, &path)?
                }
                s => {
                    let kind: LayoutKind = s.parse().map_err(bad_arg)?;
                    layout_bytes(
                        &layout(kind, &d, grid.as_ref(), canvas, &config.layout)?,
                        None,
                        &path,
                    )?
                }
            };
            write(&path, &bytes)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = Config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Render(a) => run_render(a, &config),
        Command::Export3d(a) => run_export3d(a, &config),
        Command::Serve(a) => run_serve(a, &config),
        Command::BenchQp(a) => run_bench(a, &config),
        Command::Demo(a) => run_demo(a, &config),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json_errors = args.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) if json_errors => {
            let message = e.render().to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("{}", bad_arg(first).report(true));
            return 2;
        }
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.report(cli.json_errors));
            e.exit_code()
        }
    }
}

/// Clap's view of the command line, for help output checks.
pub fn command() -> clap::Command {
    Cli::command()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_parse_as_lo_colon_hi() {
        assert_eq!(parse_filter("10:5").unwrap(), [10.0, 5.0]);
        assert_eq!(parse_filter("-1:2.5").unwrap(), [-1.0, 2.5]);
        assert_eq!(parse_filter("10").unwrap_err().kind(), "InvalidArgument");
        assert_eq!(parse_filter("a:1").unwrap_err().kind(), "InvalidArgument");
    }

    #[test]
    fn groups_parse_labels_and_members() {
        let g = parse_groups("East=NSW, VIC;West=WA").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], RegionGroup::new("East", ["NSW", "VIC"]));
        assert_eq!(g[1], RegionGroup::new("West", ["WA"]));
        assert!(parse_groups("East").is_err());
        assert!(parse_groups("=A").is_err());
    }

    #[test]
    fn errors_report_kind_and_exit_code() {
        let e = CliError::validation("InvalidRange", "bad");
        assert_eq!(e.exit_code(), 2);
        assert_eq!(e.report(false), "error[InvalidRange]: bad");
        let v: serde_json::Value = serde_json::from_str(&e.report(true)).unwrap();
        assert_eq!(v["error"]["kind"], "InvalidRange");
        assert_eq!(CliError::internal("IoError", "x").exit_code(), 3);
    }

    #[test]
    fn demo_lists_odmaps_only_with_a_grid() {
        assert_eq!(demo_artifacts("au", true).len(), 12);
        assert!(!demo_artifacts("au", false)
            .iter()
            .any(|f| f.contains("odmaps")));
    }

    #[test]
    fn command_line_is_well_formed() {
        command().debug_assert();
    }
}
