//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 contract violation (bad data or
//! an operation's precondition), 3 unreachable rate target.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    coverage_fraction, nn_stats, profile_similarity, voronoi_areas, ProfileComparison, DEFAULT_BINS,
    DEFAULT_RESOLUTION, MIN_PROBES,
};
use crate::bench::{bench, table_configs, BenchConfig};
use crate::error::{Error, Result};
use crate::formats::{
    read_points, sibling, write_json, write_points_csv, write_points_json, Sidecar, Timing,
};
use crate::geometry::Domain;
use crate::mask::{rasterize_mask, write_mask_indices_csv, write_mask_pbm, Calibration};
use crate::radius::{ConstantField, FieldSpec, ParametricField, RadiusField, DEFAULT_OFFSET};
use crate::rate::{default_gamma_bounds, rate_search, AccelerationSpec, SearchOptions, SeedPolicy, StopRule};
use crate::rng::RngState;
use crate::sampler::{generate, is_valid_pattern, Algorithm, ConflictRule, GenerateOptions, SamplePattern};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONTRACT: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pdisc", version, about = "Variable-density Poisson-disc sampling masks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one pattern and write it with a metadata sidecar.
    Generate(GenerateArgs),
    /// Search γ for a target acceleration rate.
    Rate(RateArgs),
    /// Validate and measure a written pattern.
    Analyze(AnalyzeArgs),
    /// Time the fast generator against the r_max list grid.
    Bench(BenchArgs),
    /// Compare Voronoi profiles of fast, tulleken and dart on one config.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Fast,
    Tulleken,
    Bridson,
    Dart,
    Brute,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Fast => Algorithm::Fast,
            Algo::Tulleken => Algorithm::Tulleken,
            Algo::Bridson => Algorithm::Bridson,
            Algo::Dart => Algorithm::Dart,
            Algo::Brute => Algorithm::FastBruteForce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Points as CSV.
    Csv,
    /// Mask as plain PBM (2D only).
    Pbm,
    /// Points as JSON.
    Json,
    /// Mask as a CSV of occupied index tuples (any dimension).
    MaskCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    Min,
    Candidate,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Density parameter of r(x) = (|x| + offset) / γ.
    #[arg(long, value_parser = positive, default_value_t = 150.0, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long, value_parser = positive, default_value_t = DEFAULT_OFFSET, allow_hyphen_values = true)]
    pub offset: f64,
    /// Constant threshold instead of the parametric field.
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=8))]
    pub dims: u64,
    /// Per-axis anisotropy, e.g. `3,1`.
    #[arg(long, value_delimiter = ',', value_parser = positive, allow_hyphen_values = true)]
    pub nu: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Rule::Min)]
    pub rule: Rule,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub gen: GenArgs,
    #[arg(long, value_enum, default_value_t = Algo::Fast)]
    pub algo: Algo,
    /// Mask matrix per axis, e.g. `256x256`. Defaults to 256 per axis (64 above 2D).
    #[arg(long, value_parser = parse_sizes)]
    pub matrix: Option<Sizes>,
    /// Output file; the sidecar goes next to it as `<stem>.meta.json`.
    #[arg(long, default_value = "pattern")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Fully sampled centered rectangle, e.g. `24x24` cells.
    #[arg(long, value_parser = parse_sizes)]
    pub calib: Option<Sizes>,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, value_parser = positive, default_value_t = 0.01, allow_hyphen_values = true)]
    pub tol: f64,
    #[arg(long, value_parser = parse_sizes, default_value = "256x256")]
    pub matrix: Sizes,
    #[arg(long, value_parser = positive, default_value_t = DEFAULT_OFFSET, allow_hyphen_values = true)]
    pub offset: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', value_parser = positive, allow_hyphen_values = true)]
    pub nu: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_max: Option<f64>,
    /// Use seed + t at step t instead of one frozen seed.
    #[arg(long)]
    pub fresh_seeds: bool,
    /// Stop on the rate error instead of the γ interval.
    #[arg(long)]
    pub stop_on_rate: bool,
    /// Return the closest pattern when the bracket does not straddle α.
    #[arg(long)]
    pub best_effort: bool,
    #[arg(long, value_parser = parse_sizes)]
    pub calib: Option<Sizes>,
    /// Mask output (PBM in 2D, index CSV otherwise); the trace goes to `<stem>.trace.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Points file written by `generate` (CSV or JSON).
    pub input: PathBuf,
    #[arg(long)]
    pub voronoi: bool,
    #[arg(long)]
    pub coverage: bool,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub res: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = MIN_PROBES)]
    pub probes: usize,
    #[arg(long, value_parser = parse_sizes)]
    pub matrix: Option<Sizes>,
    /// Directory for voronoi.csv and coverage.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 11)]
    pub reps: usize,
    #[arg(long, default_value_t = 3)]
    pub warmups: usize,
    /// Run the full 5 × 3 grid of γ and ν instead of one config.
    #[arg(long)]
    pub grid_of_configs: bool,
    #[arg(long, value_parser = positive, default_value_t = 150.0, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long, value_delimiter = ',', value_parser = positive, allow_hyphen_values = true)]
    pub nu: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub seed: u64,
    /// Write the report as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub gen: GenArgs,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub res: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Leave out the dart-throwing run, which is quadratic in the point count.
    #[arg(long)]
    pub no_dart: bool,
    /// Write the comparison as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive and finite, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Per-axis sizes written `AxB[xC...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sizes(pub Vec<usize>);

fn parse_sizes(s: &str) -> std::result::Result<Sizes, String> {
    let v = s
        .split(['x', 'X', ','])
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if v.is_empty() || v.contains(&0) {
        return Err(format!("sizes must be positive, got {s:?}"));
    }
    Ok(Sizes(v))
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Unbracketed { .. } => EXIT_UNREACHABLE,
        _ => EXIT_CONTRACT,
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Rate(a) => cmd_rate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn nu_or_ones(nu: &[f64], dims: usize) -> Result<Vec<f64>> {
    if nu.is_empty() {
        return Ok(vec![1.0; dims]);
    }
    if nu.len() != dims {
        return Err(Error::DimensionMismatch { expected: dims, got: nu.len() });
    }
    Ok(nu.to_vec())
}

fn options(gen: &GenArgs, algo: Algorithm) -> Result<GenerateOptions> {
    let mut o = GenerateOptions::new(algo).with_nu(nu_or_ones(&gen.nu, gen.dims as usize)?);
    if let Some(k) = gen.k {
        o = o.with_k(k as usize);
    }
    o.rule = match gen.rule {
        Rule::Min => ConflictRule::Min,
        Rule::Candidate => ConflictRule::CandidateOnly,
    };
    Ok(o)
}

fn run_field(field: &FieldArgs, domain: &Domain, opts: &GenerateOptions, seed: u64) -> Result<SamplePattern> {
    match field.radius {
        Some(r) => generate(&ConstantField::new(r)?, domain, opts, seed),
        None => generate(&ParametricField::with_offset(field.gamma, field.offset)?, domain, opts, seed),
    }
}

fn default_matrix(dims: usize) -> Vec<usize> {
    vec![if dims <= 2 { 256 } else { 64 }; dims]
}

fn check_matrix(matrix: &[usize], dims: usize) -> Result<()> {
    if matrix.len() != dims {
        return Err(Error::DimensionMismatch { expected: dims, got: matrix.len() });
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<i32> {
    let dims = a.gen.dims as usize;
    let matrix = a.matrix.clone().map_or_else(|| default_matrix(dims), |m| m.0);
    check_matrix(&matrix, dims)?;
    if a.format == Format::Pbm && dims != 2 {
        return Err(Error::Unsupported(format!("PBM needs a 2D mask, got {dims}D; use --format mask-csv")));
    }
    let calib = a.calib.clone().map(|w| Calibration::Rect { widths: w.0 });
    let opts = options(&a.gen, a.algo.into())?;
    let pattern = run_field(&a.field, &Domain::unit(dims), &opts, a.gen.seed)?;
    let mask = rasterize_mask(&pattern, &matrix, calib.as_ref())?;

    let ext = match a.format {
        Format::Csv => "csv",
        Format::Pbm => "pbm",
        Format::Json => "json",
        Format::MaskCsv => "csv",
    };
    let out = if a.out.extension().is_some() { a.out.clone() } else { a.out.with_extension(ext) };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    match a.format {
        Format::Csv => write_points_csv(&pattern, &out)?,
        Format::Json => write_points_json(&pattern, &out)?,
        Format::Pbm => write_mask_pbm(&mask, &out)?,
        Format::MaskCsv => write_mask_indices_csv(&mask, &out)?,
    }
    let sidecar = Sidecar::new(&pattern, &mask);
    write_json(&sidecar, &sibling(&out, "meta.json"))?;
    write_json(&Timing::of(pattern.meta()), &sibling(&out, "timing.json"))?;
    println!(
        "{} points, {} occupied cells, rate {:.4}, {:.1} ms -> {}",
        pattern.len(),
        mask.occupied(),
        sidecar.acceleration_rate,
        pattern.meta().wall_time.as_secs_f64() * 1e3,
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_rate(a: RateArgs) -> Result<i32> {
    let matrix = a.matrix.0.clone();
    let dims = matrix.len();
    let domain = Domain::unit(dims);
    let field = ParametricField::with_offset(1.0, a.offset)?;
    let (lo0, hi0) = default_gamma_bounds(&field, &domain, &matrix)?;
    let spec = AccelerationSpec::new(
        a.alpha,
        a.tol,
        a.gamma_min.unwrap_or(lo0),
        a.gamma_max.unwrap_or(hi0),
        matrix.clone(),
    )?;
    let gen = GenArgs { k: a.k, seed: a.seed, dims: dims as u64, nu: a.nu.clone(), rule: Rule::Min };
    let opts = SearchOptions {
        generator: options(&gen, Algorithm::Fast)?,
        seed: if a.fresh_seeds { SeedPolicy::Fresh(a.seed) } else { SeedPolicy::Frozen(a.seed) },
        stop: if a.stop_on_rate { StopRule::RateError } else { StopRule::GammaInterval },
        best_effort: a.best_effort,
        calibration: a.calib.clone().map(|w| Calibration::Rect { widths: w.0 }),
        ..SearchOptions::default()
    };
    let out = rate_search(&field, &domain, &spec, &opts)?;

    let mut trace = String::from("iteration,gamma_min,gamma_max,epsilon,gamma_mid,seed,rate,points,occupied\n");
    println!("iter  gamma_min   gamma_max   epsilon     gamma_mid   rate      points");
    for r in &out.iterations {
        println!(
            "{:>4}  {:<10.6}  {:<10.6}  {:<10.6}  {:<10.6}  {:<8.4}  {}",
            r.iteration, r.gamma_min, r.gamma_max, r.epsilon, r.gamma_mid, r.rate, r.points
        );
        trace.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.iteration, r.gamma_min, r.gamma_max, r.epsilon, r.gamma_mid, r.seed, r.rate, r.points, r.occupied
        ));
    }
    if let Some(d) = &out.unbracketed {
        eprintln!("warning: {d}; returning the closest pattern");
    }
    println!(
        "target {} reached {:.4} (relative error {:.2}%) at gamma {:.6}",
        out.alpha,
        out.rate,
        100.0 * out.relative_error(),
        out.gamma
    );
    if let Some(path) = &a.out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let mask = rasterize_mask(&out.pattern, &matrix, opts.calibration.as_ref())?;
        if dims == 2 {
            write_mask_pbm(&mask, path)?;
        } else {
            write_mask_indices_csv(&mask, path)?;
        }
        write_json(&Sidecar::new(&out.pattern, &mask), &sibling(path, "meta.json"))?;
        fs::write(sibling(path, "trace.csv"), trace)?;
    }
    Ok(if out.unbracketed.is_some() { EXIT_UNREACHABLE } else { EXIT_OK })
}

/// Rebuilds the field a pattern was generated with from its metadata.
pub fn field_of(pattern: &SamplePattern) -> Result<Box<dyn RadiusField>> {
    match pattern.meta().field {
        Some(FieldSpec::Parametric { gamma, offset }) => Ok(Box::new(ParametricField::with_offset(gamma, offset)?)),
        Some(FieldSpec::Constant { radius }) => Ok(Box::new(ConstantField::new(radius)?)),
        None => Err(Error::Unsupported("pattern metadata names no radius field".into())),
    }
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<i32> {
    let pattern = read_points(&a.input)?;
    let field = field_of(&pattern)?;
    let validity = is_valid_pattern(&pattern, field.as_ref());
    let matrix = a.matrix.clone().map_or_else(|| default_matrix(pattern.dim()), |m| m.0);
    check_matrix(&matrix, pattern.dim())?;
    println!("points: {}", pattern.len());
    match validity.violation {
        None => println!("valid: true"),
        Some(v) => println!(
            "valid: false (points {} and {} at distance {:e}, threshold {:e})",
            v.first, v.second, v.distance, v.threshold
        ),
    }
    if !pattern.is_empty() {
        let mask = rasterize_mask(&pattern, &matrix, None)?;
        println!(
            "acceleration rate: {} ({} of {} cells)",
            mask.total_cells() as f64 / mask.occupied() as f64,
            mask.occupied(),
            mask.total_cells()
        );
    }
    if pattern.len() >= 2 {
        let s = nn_stats(&pattern, field.as_ref())?;
        println!("nn ratio: min {:.6} mean {:.6} max {:.6}", s.min_ratio, s.mean_ratio, s.max_ratio);
    }
    if a.voronoi || a.coverage {
        fs::create_dir_all(&a.out)?;
    }
    if a.voronoi {
        let v = voronoi_areas(&pattern, a.res)?;
        let mut csv = String::from("point_index,distance,area\n");
        for r in &v.records {
            csv.push_str(&format!("{},{},{}\n", r.index, r.distance, r.area));
        }
        fs::write(a.out.join("voronoi.csv"), csv)?;
        println!("voronoi: {} cells, area conservation error {:.2e}", v.records.len(), v.conservation_error());
    }
    if a.coverage {
        let mut rng = RngState::new(pattern.meta().seed ^ 0x9e37_79b9_7f4a_7c15);
        let c = coverage_fraction(&pattern, field.as_ref(), a.probes, &mut rng)?;
        let mut csv = String::from("multiplier,fraction\n");
        for (m, f) in c.rows() {
            csv.push_str(&format!("{m},{f}\n"));
        }
        fs::write(a.out.join("coverage.csv"), csv)?;
        println!("coverage: {:.5} within r, {:.5} within 2r", c.within_r, c.within_2r);
    }
    Ok(if validity.valid { EXIT_OK } else { EXIT_CONTRACT })
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let configs = if a.grid_of_configs {
        table_configs()
    } else {
        let nu = if a.nu.is_empty() { vec![1.0, 1.0] } else { a.nu.clone() };
        vec![BenchConfig::new(a.gamma, nu)]
    };
    let report = bench(&configs, &[Algorithm::Fast, Algorithm::Tulleken], a.reps, a.warmups, a.seed)?;
    println!("gamma  nu     points   fast_ms    tulleken_ms  speedup");
    for s in report.speedups() {
        let points = report.record(Algorithm::Fast, s.gamma, &s.nu).map_or(0, |r| r.points);
        let nu: Vec<String> = s.nu.iter().map(|v| v.to_string()).collect();
        println!(
            "{:<6} {:<6} {:<8} {:<10.2} {:<12.2} {:.3}",
            s.gamma,
            nu.join(","),
            points,
            s.fast_ms,
            s.tulleken_ms,
            s.ratio
        );
    }
    if let Some(m) = report.mean_speedup() {
        println!("mean speedup {m:.3}");
    }
    if let Some(path) = &a.out {
        write_json(&report, path)?;
    }
    Ok(EXIT_OK)
}

fn print_comparison(name: &str, c: &ProfileComparison) {
    println!("{name}: max per-bin relative median difference {:.4}", c.max_relative_difference());
    if !c.empty_bins.is_empty() {
        println!("  skipped bins {:?}", c.empty_bins);
    }
}

fn cmd_compare(a: CompareArgs) -> Result<i32> {
    let dims = a.gen.dims as usize;
    let domain = Domain::unit(dims);
    let mut algos = vec![Algorithm::Fast, Algorithm::Tulleken];
    if !a.no_dart {
        algos.push(Algorithm::Dart);
    }
    let mut profiles = Vec::new();
    for &algo in &algos {
        let p = run_field(&a.field, &domain, &options(&a.gen, algo)?, a.gen.seed)?;
        println!("{algo}: {} points, {:.1} ms", p.len(), p.meta().wall_time.as_secs_f64() * 1e3);
        profiles.push(voronoi_areas(&p, a.res)?);
    }
    let mut report = Vec::new();
    for (i, algo) in algos.iter().enumerate().skip(1) {
        let c = profile_similarity(&profiles[0], &profiles[i], a.bins)?;
        print_comparison(&format!("fast vs {algo}"), &c);
        report.push((format!("fast_vs_{algo}"), c));
    }
    if let Some(path) = &a.out {
        write_json(&report, path)?;
    }
    Ok(EXIT_OK)
}

/// Convenience for tests: parse and run, returning the exit status.
pub fn dispatch_args(args: &[&str]) -> i32 {
    dispatch(std::iter::once("pdisc").chain(args.iter().copied()))
}

