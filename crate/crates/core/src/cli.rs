//! Command-line front end: argument parsing, configuration defaults, and
//! JSON/CSV output with a fixed float format so repeated runs are byte-identical.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::embedding::{check_embedding_with, double_factorial_radius, lambda_range_perturbed, sufficient_condition};
use crate::error::{Error, Result};
use crate::extremal::{axis_section_closed_form, candidate_direction, chamber_angle, scan_extremal};
use crate::radial::{RadialPolySum, StarBodySpec};
use crate::representation::{invert, InversionReport, LaplacianMethod};
use crate::sections::{
    mc_section_volume, section_volume, section_volume_equatorial, section_volume_linf, section_volume_lp,
    SectionReport,
};
use crate::specfun::shared_density;
use crate::spherical::{build_grid, SphericalGrid};

pub const SCHEMA: u32 = 1;
pub const CONFIG_ENV: &str = "BLEVY_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "blevy", version, about = "Generating densities, embeddings and central sections of star bodies")]
pub struct Cli {
    /// Worker threads; affects wall time only.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// JSON file with default values for seed, samples, resolution, format and tolerance.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Volume of the central section orthogonal to each direction.
    Section(SectionArgs),
    /// Generating density of ‖x‖^q.
    Invert(InvertArgs),
    /// Embeddability of the body's norm into L_q.
    Embed(EmbedArgs),
    /// Scan directions for the smallest and largest sections of an ℓp ball.
    Extremal(ExtremalArgs),
    /// Values of the stable-type density γp.
    Gamma(GammaArgs),
    /// Re-run the command recorded in a previous JSON output.
    Replay { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SectionMethodArg {
    /// Closed form for cubes, stable integral for ℓp, equatorial otherwise.
    Auto,
    Equatorial,
    Stable,
    Linf,
    MonteCarlo,
}

#[derive(Debug, Args)]
pub struct SectionArgs {
    /// Body: lp:<p>:<n>, linf:<n>, euclid:<n> or perturbed:<n>:<polynomial>.
    #[arg(long)]
    pub body: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Comma-separated direction; repeat for several.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub xi: Vec<String>,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: SectionMethodArg,
    /// Attach a Monte Carlo estimate to every analytic value.
    #[arg(long)]
    pub confirm_mc: bool,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long)]
    pub body: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long)]
    pub q: f64,
    /// Grid resolution for the sampled density.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Also write the density record to this file.
    #[arg(long)]
    pub density_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub body: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long)]
    pub q: f64,
    /// Compute the λ-interval of the perturbation instead of a single verdict.
    #[arg(long)]
    pub lambda_range: bool,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Relative tolerance on the density minimum.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExtremalArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the scanned (direction, volume) pairs as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    #[arg(long)]
    pub p: f64,
    /// Comma-separated arguments.
    #[arg(long, allow_hyphen_values = true)]
    pub t: String,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Defaults read from the configuration file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defaults {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub resolution: Option<usize>,
    pub format: Option<Format>,
    pub tolerance: Option<f64>,
    pub workers: Option<usize>,
}

/// Fully resolved parameters of one run; echoed in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Section {
        body: String,
        lambda: f64,
        xi: Vec<Vec<f64>>,
        method: SectionMethodArg,
        confirm_mc: bool,
        samples: usize,
        seed: u64,
        format: Format,
    },
    Invert {
        body: String,
        lambda: f64,
        q: f64,
        resolution: usize,
    },
    Embed {
        body: String,
        lambda: f64,
        q: f64,
        lambda_range: bool,
        resolution: usize,
        tolerance: f64,
    },
    Extremal {
        p: f64,
        n: usize,
        resolution: usize,
        seed: u64,
    },
    Gamma {
        p: f64,
        t: Vec<f64>,
        format: Format,
    },
}

const DEFAULT_SEED: u64 = 1;
const DEFAULT_SAMPLES: usize = 1_000_000;
const DEFAULT_SCAN: usize = 500;

/// Parses `lp:<p>:<n>`, `linf:<n>`, `euclid:<n>` and `perturbed:<n>:<polynomial>`.
pub fn parse_body(spec: &str, lambda: f64) -> Result<StarBodySpec> {
    let parts: Vec<&str> = spec.splitn(3, ':').collect();
    let dim = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad dimension '{s}' in body '{spec}'")))
    };
    match parts.as_slice() {
        ["lp", p, n] => {
            let p = match p.trim() {
                "inf" | "infinity" => f64::INFINITY,
                t => t
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad exponent '{t}' in body '{spec}'")))?,
            };
            StarBodySpec::lp_ball(p, dim(n)?)
        }
        ["linf", n] => StarBodySpec::cube(dim(n)?),
        ["euclid", n] => StarBodySpec::euclidean(dim(n)?),
        ["perturbed", n, poly] => StarBodySpec::perturbed_from_text(lambda, dim(n)?, poly),
        _ => Err(Error::Parse(format!(
            "unknown body '{spec}'; expected lp:<p>:<n>, linf:<n>, euclid:<n> or perturbed:<n>:<polynomial>"
        ))),
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{s}' in list '{text}'")))
        })
        .collect()
}

fn perturbation_of(spec: &str) -> Result<RadialPolySum> {
    match parse_body(spec, 0.0)? {
        StarBodySpec::PerturbedEuclidean { poly, .. } => Ok(poly),
        _ => Err(Error::Parse("a λ-range needs a body of the form perturbed:<n>:<polynomial>".into())),
    }
}

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }
}

/// JSON with every float in `{:.16e}` form and non-finite values as null.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn envelope(config: &RunConfig, result: Value) -> Result<Value> {
    let mut obj = serde_json::Map::new();
    obj.insert("schema".into(), json!(SCHEMA));
    obj.insert(
        "config".into(),
        serde_json::to_value(config).map_err(|e| Error::Io(e.to_string()))?,
    );
    obj.insert("result".into(), result);
    Ok(Value::Object(obj))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

fn section_one(body: &StarBodySpec, xi: &[f64], method: SectionMethodArg, samples: usize, seed: u64) -> Result<SectionReport> {
    match method {
        SectionMethodArg::Auto => section_volume(body, xi),
        SectionMethodArg::Equatorial => section_volume_equatorial(body, xi),
        SectionMethodArg::Stable => match body.lp_exponent() {
            Some(p) if p.is_finite() => section_volume_lp(p, body.dimension(), xi),
            _ => Err(Error::Domain("the stable integral applies to ℓp balls with finite p".into())),
        },
        SectionMethodArg::Linf => match body.lp_exponent() {
            Some(p) if p.is_infinite() => section_volume_linf(body.dimension(), xi),
            _ => Err(Error::Domain("the signed-sum formula applies to the cube only".into())),
        },
        SectionMethodArg::MonteCarlo => mc_section_volume(body, xi, samples, seed),
    }
}

fn run_section(config: &RunConfig) -> Result<String> {
    let RunConfig::Section {
        body,
        lambda,
        xi,
        method,
        confirm_mc,
        samples,
        seed,
        format,
    } = config
    else {
        unreachable!()
    };
    let spec = parse_body(body, *lambda)?;
    let mut rows = Vec::new();
    for x in xi {
        let analytic = section_one(&spec, x, *method, *samples, *seed)?;
        let mc = if *confirm_mc && analytic.method != crate::sections::SectionMethod::MonteCarlo {
            Some(mc_section_volume(&spec, x, *samples, *seed)?)
        } else {
            None
        };
        rows.push((analytic, mc));
    }
    match format {
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|(a, mc)| {
                    let mut v = to_value(a)?;
                    if let Some(m) = mc {
                        let sigma = (a.error_estimate.powi(2) + m.error_estimate.powi(2)).sqrt();
                        v["monte_carlo"] = to_value(m)?;
                        v["agrees_within_3_sigma"] = json!((a.volume - m.volume).abs() <= 3.0 * sigma);
                    }
                    Ok(v)
                })
                .collect::<Result<_>>()?;
            to_json_string(&envelope(config, Value::Array(items))?)
        }
        Format::Csv => {
            let header = ["body", "xi", "method", "volume", "error_estimate", "seed", "samples"]
                .map(String::from)
                .to_vec();
            let mut out = Vec::new();
            for (a, mc) in &rows {
                for r in std::iter::once(a).chain(mc.iter()) {
                    out.push(vec![
                        body.clone(),
                        r.xi.iter().map(|v| sci(*v)).collect::<Vec<_>>().join(";"),
                        to_value(&r.method)?.as_str().unwrap_or_default().to_string(),
                        sci(r.volume),
                        sci(r.error_estimate),
                        r.seed.map(|s| s.to_string()).unwrap_or_default(),
                        r.samples.map(|s| s.to_string()).unwrap_or_default(),
                    ]);
                }
            }
            csv_string(&header, &out)
        }
    }
}

fn laplacian_value(m: &LaplacianMethod) -> Result<Value> {
    to_value(m)
}

fn inversion_value(r: &InversionReport) -> Result<Value> {
    Ok(json!({
        "route": to_value(&r.source)?,
        "q": r.q,
        "n": r.n,
        "laplacians": r.k,
        "kernel_exponent": r.kernel_exponent,
        "stated_prefactor": r.stated_prefactor,
        "applied_prefactor": r.applied_prefactor,
        "prefactor_ratio": r.prefactor_ratio,
        "baseline_residual": r.baseline_residual,
        "baseline_stated_scalar": r.baseline_stated_scalar,
        "bound_l1": r.bound_l1,
        "bound_linf": r.bound_linf,
        "norm_l1": r.norm_l1,
        "norm_linf": r.norm_linf,
        "density_min": r.density.min().0,
        "laplacian_on_sphere": to_value(&r.laplacian)?,
        "laplacian_method": laplacian_value(&r.laplacian_method)?,
    }))
}

fn grid_for(n: usize, resolution: usize) -> Result<Arc<SphericalGrid>> {
    Ok(Arc::new(build_grid(n, resolution)?))
}

fn run_invert(config: &RunConfig, density_out: Option<&PathBuf>) -> Result<String> {
    let RunConfig::Invert {
        body,
        lambda,
        q,
        resolution,
    } = config
    else {
        unreachable!()
    };
    let spec = parse_body(body, *lambda)?;
    let report = invert(&spec, *q, grid_for(spec.dimension(), *resolution)?)?;
    let record = report.density.to_record();
    if let Some(path) = density_out {
        fs::write(path, to_json_string(&record)?)?;
    }
    let mut v = inversion_value(&report)?;
    v["density"] = to_value(&record)?;
    to_json_string(&envelope(config, v)?)
}

/// The λ-interval quoted for `r + λx₁²/r` in ℝ⁴ with q = 1.
fn quoted_interval(poly: &RadialPolySum, q: f64) -> Option<[f64; 2]> {
    let example = RadialPolySum::single(4, 1.0, vec![2, 0, 0, 0], -1.0);
    (q == 1.0 && *poly == example).then_some([-0.25, 0.5])
}

fn run_embed(config: &RunConfig) -> Result<String> {
    let RunConfig::Embed {
        body,
        lambda,
        q,
        lambda_range,
        resolution,
        tolerance,
    } = config
    else {
        unreachable!()
    };
    if *lambda_range {
        let poly = perturbation_of(body)?;
        let range = lambda_range_perturbed(&poly, *q, grid_for(poly.dimension(), *resolution)?)?;
        let radius = if *q == 1.0 && poly.dimension() % 2 == 0 {
            Some(double_factorial_radius(&poly)?)
        } else {
            None
        };
        let mut v = json!({
            "route": to_value(&range.route)?,
            "lambda_interval": {"lower": range.interval.lower, "upper": range.interval.upper},
            "lower_unbounded": range.interval.lower == f64::NEG_INFINITY,
            "upper_unbounded": range.interval.upper == f64::INFINITY,
            "empty": range.interval.is_empty(),
            "affinity_deviation": range.affinity_deviation,
            "forward_residual": range.forward_residual,
            "lower_witness": range.lower_witness,
            "upper_witness": range.upper_witness,
            "double_factorial_radius": radius,
        });
        if let Some(p) = quoted_interval(&poly, *q) {
            v["quoted_interval"] = json!({"lower": p[0], "upper": p[1], "note": "quoted for comparison; not asserted"});
        }
        return to_json_string(&envelope(config, v)?);
    }
    let spec = parse_body(body, *lambda)?;
    let verdict = check_embedding_with(&spec, *q, grid_for(spec.dimension(), *resolution)?, *tolerance)?;
    let sufficient = sufficient_condition(&spec, *q, spec.dimension()).ok();
    let v = json!({
        "embeds": verdict.embeds,
        "margin": verdict.margin,
        "margin_location": verdict.margin_location,
        "route": to_value(&verdict.route)?,
        "residual": verdict.residual,
        "tolerance": verdict.tolerance,
        "zero_density": verdict.zero_density,
        "singular": verdict.singular,
        "sufficient_condition": sufficient,
        "inversion": verdict.report.as_ref().map(inversion_value).transpose()?,
    });
    to_json_string(&envelope(config, v)?)
}

fn run_extremal(config: &RunConfig, csv_out: Option<&PathBuf>) -> Result<String> {
    let RunConfig::Extremal { p, n, resolution, seed } = config else {
        unreachable!()
    };
    let r = scan_extremal(*p, *n, *resolution, *seed)?;
    if let Some(path) = csv_out {
        let mut header: Vec<String> = (1..=*n).map(|i| format!("xi{i}")).collect();
        header.push("volume".into());
        let rows: Vec<Vec<String>> = r
            .samples
            .iter()
            .map(|(u, v)| u.iter().chain(std::iter::once(v)).map(|x| sci(*x)).collect())
            .collect();
        fs::write(path, csv_string(&header, &rows)?)?;
    }
    let axis_form = if *p < 2.0 {
        Some(axis_section_closed_form(*p, *n)?)
    } else {
        None
    };
    let v = json!({
        "p": r.p,
        "n": r.n,
        "min_direction": r.min_direction,
        "max_direction": r.max_direction,
        "min_volume": r.min_volume,
        "max_volume": r.max_volume,
        "candidate_values": r.candidate_values,
        "strictness_margin": r.strictness_margin,
        "isotropic": r.isotropic,
        "min_angle_to_diagonal": chamber_angle(&r.min_direction, &candidate_direction(*n, *n)),
        "max_angle_to_axis": chamber_angle(&r.max_direction, &candidate_direction(*n, 1)),
        "axis_closed_form": axis_form,
        "scanned": r.samples.len(),
    });
    to_json_string(&envelope(config, v)?)
}

fn run_gamma(config: &RunConfig) -> Result<String> {
    let RunConfig::Gamma { p, t, format } = config else {
        unreachable!()
    };
    let density = shared_density(*p)?;
    let values: Vec<f64> = t.iter().map(|x| density.eval(*x)).collect();
    match format {
        Format::Json => {
            let rows: Vec<Value> = t
                .iter()
                .zip(&values)
                .map(|(x, v)| json!({"t": x, "value": v}))
                .collect();
            to_json_string(&envelope(config, Value::Array(rows))?)
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = t.iter().zip(&values).map(|(x, v)| vec![sci(*x), sci(*v)]).collect();
            csv_string(&["t".into(), "gamma_p".into()], &rows)
        }
    }
}

fn load_defaults(path: Option<&PathBuf>) -> Result<Defaults> {
    match path {
        None => Ok(Defaults::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config {}: {e}", p.display())))
        }
    }
}

/// Resolves flags against configuration defaults.
pub fn resolve(command: &Command, defaults: &Defaults) -> Result<RunConfig> {
    let seed = |s: Option<u64>| s.or(defaults.seed).unwrap_or(DEFAULT_SEED);
    let format = |f: Option<Format>| f.or(defaults.format).unwrap_or(Format::Json);
    Ok(match command {
        Command::Section(a) => RunConfig::Section {
            body: a.body.clone(),
            lambda: a.lambda,
            xi: a.xi.iter().map(|s| parse_list(s)).collect::<Result<_>>()?,
            method: a.method,
            confirm_mc: a.confirm_mc,
            samples: a.samples.or(defaults.samples).unwrap_or(DEFAULT_SAMPLES),
            seed: seed(a.seed),
            format: format(a.format),
        },
        Command::Invert(a) => {
            let n = parse_body(&a.body, a.lambda)?.dimension();
            RunConfig::Invert {
                body: a.body.clone(),
                lambda: a.lambda,
                q: a.q,
                resolution: a.resolution.or(defaults.resolution).unwrap_or(default_cli_resolution(n)),
            }
        }
        Command::Embed(a) => {
            let n = parse_body(&a.body, a.lambda)?.dimension();
            RunConfig::Embed {
                body: a.body.clone(),
                lambda: a.lambda,
                q: a.q,
                lambda_range: a.lambda_range,
                resolution: a.resolution.or(defaults.resolution).unwrap_or(default_cli_resolution(n)),
                tolerance: a
                    .tolerance
                    .or(defaults.tolerance)
                    .unwrap_or(crate::embedding::DEFAULT_EMBED_TOLERANCE),
            }
        }
        Command::Extremal(a) => RunConfig::Extremal {
            p: a.p,
            n: a.n,
            resolution: a.resolution.or(defaults.resolution).unwrap_or(DEFAULT_SCAN),
            seed: seed(a.seed),
        },
        Command::Gamma(a) => RunConfig::Gamma {
            p: a.p,
            t: parse_list(&a.t)?,
            format: format(a.format),
        },
        Command::Replay { .. } => return Err(Error::Parse("replay has no configuration of its own".into())),
    })
}

fn default_cli_resolution(n: usize) -> usize {
    match n {
        2 => 32,
        3 => 12,
        4 => 8,
        _ => 6,
    }
}

/// Executes a resolved configuration and returns the text to emit.
pub fn execute(config: &RunConfig, density_out: Option<&PathBuf>, csv_out: Option<&PathBuf>) -> Result<String> {
    match config {
        RunConfig::Section { .. } => run_section(config),
        RunConfig::Invert { .. } => run_invert(config, density_out),
        RunConfig::Embed { .. } => run_embed(config),
        RunConfig::Extremal { .. } => run_extremal(config, csv_out),
        RunConfig::Gamma { .. } => run_gamma(config),
    }
}

fn replay_config(path: &PathBuf) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let config = v
        .get("config")
        .ok_or_else(|| Error::Parse(format!("{} has no config record", path.display())))?;
    serde_json::from_value(config.clone()).map_err(|e| Error::Parse(format!("config record: {e}")))
}

pub fn run(cli: Cli) -> Result<()> {
    let defaults = load_defaults(cli.config.as_ref())?;
    let (config, density_out, csv_out) = match &cli.command {
        Command::Replay { file } => (replay_config(file)?, None, None),
        Command::Invert(a) => (resolve(&cli.command, &defaults)?, a.density_out.clone(), None),
        Command::Extremal(a) => (resolve(&cli.command, &defaults)?, None, a.csv.clone()),
        other => (resolve(other, &defaults)?, None, None),
    };
    let workers = cli.workers.or(defaults.workers);
    let text = match workers {
        Some(w) => {
            if w == 0 {
                return Err(Error::Domain("worker count must be positive".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Io(e.to_string()))?;
            pool.install(|| execute(&config, density_out.as_ref(), csv_out.as_ref()))?
        }
        None => execute(&config, density_out.as_ref(), csv_out.as_ref())?,
    };
    match &cli.output {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Process exit code for an error: 2 for invalid input, 3 for numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        3
    }
}
