mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{emit, Format, Output};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use tamlab::census::{run_census_with, CensusOptions, DEFAULT_TAM_CEILING};
use tamlab::density::{self, PTamRow, SeriesValue, Table};
use tamlab::heights::{self, find_points, is_convenient, HeightContext, HeightReport, Positivity};
use tamlab::tate::{classify, local_data, LocalReduction};
use tamlab::verify::{run_suite, Suite, VerifyOptions};
use tamlab::Curve;

/// Heights above this need `--long`.
const DESK_SCALE_X: u64 = 10_000_000;

#[derive(Parser)]
#[command(name = "tamlab", version, about = "Tamagawa products, local densities and heights of y² = x³ + a4·x + a6")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Local reduction data at the primes of bad reduction, or at one prime.
    Local(LocalArgs),
    /// Exact local densities, P_Tam(m) or L_Tam(s).
    Density(DensityArgs),
    /// Tables of P_Tam(m), or L_Tam(s) with its factors at 2 and 3.
    Series(SeriesArgs),
    /// Census of all curves of height at most X.
    Census(CensusArgs),
    /// Rational points and their heights.
    Heights(HeightsArgs),
    /// The convenience test for one curve.
    Convenient(ConvenientArgs),
    /// Run acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, allow_hyphen_values = true)]
    a4: String,
    #[arg(long, allow_hyphen_values = true)]
    a6: String,
}

impl CurveArgs {
    fn curve(&self) -> Result<Curve, CliError> {
        Curve::parse(&self.a4, &self.a6).map_err(|e| CliError::Input(format!("({}, {}): {e}", self.a4, self.a6)))
    }
}

#[derive(Args)]
struct LocalArgs {
    #[command(flatten)]
    curve: CurveArgs,
    #[arg(long)]
    p: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Published,
    Corrected,
}

impl From<TableArg> for Table {
    fn from(t: TableArg) -> Self {
        match t {
            TableArg::Published => Table::Published,
            TableArg::Corrected => Table::Corrected,
        }
    }
}

#[derive(Args)]
struct CutoffArgs {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    prime_cutoff: u64,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(4..))]
    c_cutoff: u64,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    c: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    /// Evaluate L_Tam(s); needs --s.
    #[arg(long)]
    series: bool,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    /// Largest n listed for the I_n and I_n* families.
    #[arg(long, default_value_t = 6)]
    n_max: u32,
    /// Table variant for p = 3.
    #[arg(long, value_enum, default_value_t = TableArg::Published)]
    table: TableArg,
    #[command(flatten)]
    cutoffs: CutoffArgs,
}

#[derive(Args)]
struct SeriesArgs {
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(1..))]
    m_max: u64,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    #[command(flatten)]
    cutoffs: CutoffArgs,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    x: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    shards: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TAM_CEILING, value_parser = clap::value_parser!(u64).range(1..))]
    tam_ceiling: u64,
    /// Fraction of curves re-classified with the generic algorithm.
    #[arg(long, default_value_t = 0.0)]
    sample_oracle_rate: f64,
    /// Allow X above 10^7.
    #[arg(long)]
    long: bool,
}

#[derive(Args)]
struct HeightsArgs {
    #[command(flatten)]
    curve: CurveArgs,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    bound: u64,
    /// Doublings for the oracle route, used when the local-sum hypotheses fail.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    doublings: u32,
}

#[derive(Args)]
struct ConvenientArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Also certify F_E > 0 on (-1, 1) for two-component curves.
    #[arg(long)]
    positivity: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    /// Include the X = 10^7 and 10^8 census rows.
    #[arg(long)]
    long: bool,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    prime_cutoff: u64,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Failed(String),
    Io(String),
}

impl From<density::DensityError> for CliError {
    fn from(e: density::DensityError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|threads| run(&cli, threads));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Sizes the global pool from `TAMLAB_THREADS`; returns the thread count if it was set.
fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(raw) = std::env::var("TAMLAB_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Input(format!("TAMLAB_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(Some(n))
}

fn run(cli: &Cli, threads: Option<usize>) -> Result<(), CliError> {
    let out = Output { format: cli.format, path: cli.out.clone() };
    match &cli.command {
        Command::Local(a) => cmd_local(&out, a),
        Command::Density(a) => cmd_density(&out, a),
        Command::Series(a) => cmd_series(&out, a),
        Command::Census(a) => cmd_census(&out, a, threads),
        Command::Heights(a) => cmd_heights(&out, a),
        Command::Convenient(a) => cmd_convenient(&out, a),
        Command::Verify(a) => cmd_verify(&out, a),
    }
}

#[derive(Serialize)]
struct LocalRow {
    p: u64,
    kodaira: String,
    cp: u64,
    minimal: bool,
    rescalings: u32,
    vmin: u32,
    tamagawa: u64,
}

#[derive(Serialize)]
struct LocalReport {
    a4: String,
    a6: String,
    discriminant: String,
    tamagawa: u64,
    local: Vec<LocalReduction>,
}

fn cmd_local(out: &Output, a: &LocalArgs) -> Result<(), CliError> {
    let curve = a.curve.curve()?;
    let local = match a.p {
        Some(p) if !tamlab::arith::is_prime(p) => return Err(CliError::Input(format!("{p} is not prime"))),
        Some(p) => vec![classify(&curve, p)],
        None => local_data(&curve),
    };
    let tamagawa = if a.p.is_some() { local.iter().map(|r| r.c_p).product() } else { tamlab::tamagawa_product(&curve) };
    let rows: Vec<LocalRow> = local
        .iter()
        .map(|r| LocalRow {
            p: r.p,
            kodaira: r.kodaira.code(),
            cp: r.c_p,
            minimal: r.short_minimal,
            rescalings: r.rescalings,
            vmin: r.min_disc_valuation,
            tamagawa,
        })
        .collect();
    let report = LocalReport {
        a4: curve.a4().to_string(),
        a6: curve.a6().to_string(),
        discriminant: curve.discriminant().to_string(),
        tamagawa,
        local,
    };
    emit(out, &report, &rows)
}

/// One exact density value.
#[derive(Serialize)]
struct DeltaValue {
    p: u64,
    c: u64,
    value: String,
    approx: f64,
}

/// One numeric series value with its certified error bound.
#[derive(Serialize)]
struct SeriesRow {
    quantity: String,
    value: String,
    error_bound: f64,
    prime_cutoff: u64,
    c_cutoff: u64,
}

impl SeriesRow {
    fn new(quantity: String, v: &SeriesValue) -> Self {
        SeriesRow {
            quantity,
            value: v.render(30),
            error_bound: v.error_f64(),
            prime_cutoff: v.prime_cutoff,
            c_cutoff: v.coefficient_cutoff,
        }
    }
}

fn cmd_density(out: &Output, a: &DensityArgs) -> Result<(), CliError> {
    let table = Table::from(a.table);
    if a.series {
        let s = a.s.ok_or_else(|| CliError::Input("--series needs --s".into()))?;
        let v = density::l_tam(s, a.cutoffs.prime_cutoff, a.cutoffs.c_cutoff)?;
        let row = SeriesRow::new(format!("L_Tam({s})"), &v);
        return emit(out, &row, &[&row]);
    }
    if let Some(m) = a.m {
        let v = density::p_tam_with(table, m, a.cutoffs.prime_cutoff)?;
        let row = SeriesRow::new(format!("P_Tam({m})"), &v);
        return emit(out, &row, &[&row]);
    }
    match (a.p, a.c) {
        (Some(p), Some(c)) => {
            let value = if p <= 3 && tamlab::arith::is_prime(p) && c > 0 {
                density::delta_from_tables(p, c, table)
            } else {
                density::delta(p, c)?
            };
            let row = DeltaValue { p, c, approx: value.to_f64(), value: value.to_string() };
            emit(out, &row, &[&row])
        }
        (Some(p), None) => {
            let rows = density::table_rows(p, a.n_max)?;
            emit(out, &rows, &rows)
        }
        _ => Err(CliError::Input("give --p (and optionally --c), --m, or --series --s".into())),
    }
}

fn cmd_series(out: &Output, a: &SeriesArgs) -> Result<(), CliError> {
    if let Some(s) = a.s {
        let mut rows = Vec::new();
        for p in [2, 3] {
            rows.push(SeriesRow::new(format!("local factor at {p}"), &density::l_tam_local(p, s, a.cutoffs.c_cutoff)?));
        }
        rows.push(SeriesRow::new(format!("L_Tam({s})"), &density::l_tam(s, a.cutoffs.prime_cutoff, a.cutoffs.c_cutoff)?));
        return emit(out, &rows, &rows);
    }
    let rows: Vec<PTamRow> = density::p_tam_table(a.m_max, a.cutoffs.prime_cutoff).iter().map(|(m, v)| PTamRow::from((*m, v))).collect();
    emit(out, &rows, &rows)
}

fn cmd_census(out: &Output, a: &CensusArgs, threads: Option<usize>) -> Result<(), CliError> {
    if a.x > DESK_SCALE_X && !a.long {
        return Err(CliError::Input(format!("X = {} is above 10^7; pass --long to run it", a.x)));
    }
    if !(0.0..=1.0).contains(&a.sample_oracle_rate) {
        return Err(CliError::Input("--sample-oracle-rate must lie in [0, 1]".into()));
    }
    let default = CensusOptions::default();
    let shards = a.shards.map(|s| s as usize).or(threads).unwrap_or(default.shards);
    let opts = CensusOptions { shards, tam_ceiling: a.tam_ceiling, oracle_rate: a.sample_oracle_rate };
    let result = run_census_with(a.x, &opts);
    emit(out, &result, &result.rows())?;
    let mismatches = &result.diagnostics.oracle_mismatches;
    if !mismatches.is_empty() {
        return Err(CliError::Failed(format!("{} sampled curves disagree with the generic algorithm", mismatches.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct HeightRow {
    #[serde(rename = "A")]
    a: String,
    #[serde(rename = "B")]
    b: String,
    #[serde(rename = "C")]
    c: String,
    naive_h: String,
    weil: f64,
    canonical: f64,
    f_e_value: Option<f64>,
    tail_bound: Option<f64>,
    inequality_holds: bool,
    method: String,
}

impl From<&HeightReport> for HeightRow {
    fn from(r: &HeightReport) -> Self {
        HeightRow {
            a: r.point.a.to_string(),
            b: r.point.b.to_string(),
            c: r.point.c.to_string(),
            naive_h: r.naive_h.to_string(),
            weil: r.weil,
            canonical: r.canonical,
            f_e_value: r.f_e_value,
            tail_bound: r.tail_bound,
            inequality_holds: r.inequality_holds,
            method: label(&r.method),
        }
    }
}

#[derive(Serialize)]
struct HeightsReport {
    a4: String,
    a6: String,
    /// Why the local-sum route was not used, if it was not.
    local_sum_unavailable: Option<String>,
    points: Vec<HeightReport>,
}

fn cmd_heights(out: &Output, a: &HeightsArgs) -> Result<(), CliError> {
    let curve = a.curve.curve()?;
    let points = find_points(&curve, a.bound);
    let ctx = HeightContext::new(&curve);
    let reports = points
        .iter()
        .map(|p| match &ctx {
            Ok(ctx) => ctx.canonical_height(p),
            Err(_) => heights::height_report_oracle(&curve, p, a.doublings),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let rows: Vec<HeightRow> = reports.iter().map(HeightRow::from).collect();
    let report = HeightsReport {
        a4: curve.a4().to_string(),
        a6: curve.a6().to_string(),
        local_sum_unavailable: ctx.err().map(|e| e.to_string()),
        points: reports,
    };
    emit(out, &report, &rows)
}

#[derive(Serialize)]
struct ConvenientReport {
    a4: String,
    a6: String,
    #[serde(flatten)]
    test: heights::ConvenientTest,
    positivity: Option<Positivity>,
}

#[derive(Serialize)]
struct ConvenientRow {
    a4: String,
    a6: String,
    case: String,
    component_count: u8,
    a4_nonpositive: bool,
    globally_minimal: bool,
    tamagawa_trivial: bool,
    shape_holds: bool,
    shape_boundary: bool,
    t_sign: i8,
    t_square: Option<String>,
    alpha_lo: String,
    alpha_hi: String,
    positivity: Option<String>,
}

fn cmd_convenient(out: &Output, a: &ConvenientArgs) -> Result<(), CliError> {
    let curve = a.curve.curve()?;
    let test = is_convenient(&curve);
    let positivity = if a.positivity && test.component_count == 2 && *curve.a4() <= 0 {
        Some(heights::check_fe_positivity(&curve).map_err(|e| CliError::Input(e.to_string()))?)
    } else {
        None
    };
    let row = ConvenientRow {
        a4: curve.a4().to_string(),
        a6: curve.a6().to_string(),
        case: label(&test.case),
        component_count: test.component_count,
        a4_nonpositive: test.a4_nonpositive,
        globally_minimal: test.globally_minimal,
        tamagawa_trivial: test.tamagawa_trivial,
        shape_holds: test.shape.holds,
        shape_boundary: test.shape.boundary,
        t_sign: test.t.sign,
        t_square: test.t.square.as_ref().map(|q| q.to_string()),
        alpha_lo: test.roots[0].lo.to_string(),
        alpha_hi: test.roots[0].hi.to_string(),
        positivity: positivity.as_ref().map(label),
    };
    let report = ConvenientReport { a4: row.a4.clone(), a6: row.a6.clone(), test, positivity };
    emit(out, &report, &[row])
}

/// The string form of a unit-variant enum, or the `status` tag of a tagged one.
fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(serde_json::Value::Object(m)) => m.get("status").and_then(|v| v.as_str()).unwrap_or_default().to_string(),
        _ => String::new(),
    }
}

#[derive(Serialize)]
struct CheckRow<'a> {
    criterion: u8,
    title: &'a str,
    check: &'a str,
    observed: &'a str,
    expected: &'a str,
    passed: bool,
}

fn cmd_verify(out: &Output, a: &VerifyArgs) -> Result<(), CliError> {
    let opts = VerifyOptions { prime_cutoff: a.prime_cutoff, long: a.long };
    let report = run_suite(a.suite, &opts);
    for c in &report.criteria {
        eprintln!("{c}");
    }
    let rows: Vec<CheckRow> = report
        .criteria
        .iter()
        .flat_map(|c| {
            c.checks.iter().map(move |k| CheckRow {
                criterion: c.id,
                title: c.title,
                check: &k.name,
                observed: &k.observed,
                expected: &k.expected,
                passed: k.passed,
            })
        })
        .collect();
    emit(out, &report, &rows)?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<String> = report.criteria.iter().filter(|c| !c.passed).map(|c| c.id.to_string()).collect();
        Err(CliError::Failed(format!("criteria {}", failed.join(", "))))
    }
}
