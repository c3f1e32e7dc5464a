//! `xci` command line. Exit codes: 0 evaluated, 1 suite failure, 2 input error,
//! 3 witness precondition failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use xci_core::ci::{self, Caps, DEFAULT_RECT_CAP, DEFAULT_SLAB_CAP};
use xci_core::generators::{self, gen_cross, gen_pareto_axes, gen_perturbed, gen_product_ci, GridSpec, Perturbation};
use xci_core::geometry::enumerate_slabs;
use xci_core::witness::{build_outer_witness_generic, build_witness, Method};
use xci_core::{parse_rat, BlockPartition, Error, FiniteDistribution, Notion, Rat, Region};

use crate::json::{self, CertificateJson, RegionJson, ReportJson, VerdictJson, WitnessJson};
use crate::report::{digest, RunReport, SuiteTallies, WitnessSummary};
use crate::suite::{run_cross_suite, run_eh_suite, CrossSuiteConfig, EhSuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUITE_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

pub const RECT_CAP_ENV: &str = "XCI_RECT_CAP";

#[derive(Debug)]
pub enum CliError {
    Input(String),
    /// Builder refusal, with an optional JSON body naming the failing check.
    Precondition(String, Option<String>),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Precondition(..) => EXIT_PRECONDITION,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "xci", version, about = "Exact conditional-independence checks on non-product supports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide the requested notions for a distribution file.
    Check(CheckArgs),
    /// Build and verify a product-supported witness.
    Witness(WitnessArgs),
    /// Write a generated distribution.
    Generate(GenerateArgs),
    /// Run a seeded proposition suite.
    Suite(SuiteArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Distribution JSON file.
    #[arg(short, long)]
    input: PathBuf,
    /// Block partition with 1-based indices, e.g. "A=1;B=;C=2".
    #[arg(long)]
    partition: Option<String>,
    #[arg(long, default_value = "1")]
    threshold: String,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    /// eh, cross or explicit:<path>.
    #[arg(long, default_value = "eh")]
    region: String,
    #[arg(long, default_value = "eh,inner,outer")]
    notions: String,
    #[arg(long)]
    slab_cap: Option<u128>,
    /// Brute-force rectangle cap; falls back to $XCI_RECT_CAP.
    #[arg(long)]
    rect_cap: Option<u128>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WitnessArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "prop1")]
    method: String,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Family {
    ProductCi,
    Perturbed,
    Cross,
    ParetoAxes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Pattern {
    Corners,
    Row,
}

/// Generator parameters; `--params` loads this from JSON and flags override it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GenerateParams {
    family: Option<Family>,
    seed: Option<u64>,
    /// Per-coordinate grid values, coordinates separated by ';'.
    grid: Option<String>,
    partition: Option<String>,
    region: Option<String>,
    threshold: Option<String>,
    arms: Option<String>,
    tail: Option<String>,
    arm_weight: Option<String>,
    input: Option<PathBuf>,
    epsilon: Option<String>,
    pattern: Option<Pattern>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid for product-ci / perturbed, e.g. "0,2,3;0,2,3".
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    partition: Option<String>,
    /// eh or cross (product-ci, perturbed).
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    /// Atoms per arm: "a,c" for d = 2 or "a,b,c" for d = 3.
    #[arg(long)]
    arms: Option<String>,
    /// Pareto tail grid, e.g. "2,4".
    #[arg(long)]
    tail: Option<String>,
    #[arg(long)]
    arm_weight: Option<String>,
    /// Base distribution for the perturbed family.
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long, value_enum)]
    pattern: Option<Pattern>,
    /// JSON file of generator parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Shape {
    Eh,
    Cross,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[arg(long, value_enum, default_value = "eh")]
    shape: Shape,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dimension of the EH shape (2 or 3).
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Values per coordinate on EH grids; defaults to 4 for d = 2 and 3 for d = 3.
    #[arg(long)]
    max_values: Option<usize>,
    #[arg(long, default_value_t = 5)]
    max_arm_atoms: usize,
    #[arg(long)]
    slab_cap: Option<u128>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Check(a) => cmd_check(&a),
        Command::Witness(a) => cmd_witness(&a),
        Command::Generate(a) => cmd_generate(a),
        Command::Suite(a) => cmd_suite(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            match &e {
                CliError::Input(msg) => eprintln!("xci: {msg}"),
                CliError::Precondition(msg, body) => {
                    eprintln!("xci: {msg}");
                    if let Some(body) = body {
                        println!("{body}");
                    }
                }
            }
            e.code()
        }
    }
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_distribution(path: &Path) -> CliResult<(FiniteDistribution, Vec<u8>)> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Input("input is not UTF-8".into()))?;
    let dist = json::parse_distribution(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((dist, bytes))
}

fn default_partition(dim: usize) -> CliResult<BlockPartition> {
    match dim {
        2 => Ok(BlockPartition::pair()),
        3 => Ok(BlockPartition::triple()),
        _ => Err(CliError::Input(format!("--partition is required for dimension {dim}"))),
    }
}

fn partition(spec: Option<&str>, dim: usize) -> CliResult<BlockPartition> {
    match spec {
        Some(s) => Ok(BlockPartition::parse(s, dim)?),
        None => default_partition(dim),
    }
}

fn rational(s: &str, what: &str) -> CliResult<Rat> {
    parse_rat(s).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn rational_list(s: &str, what: &str) -> CliResult<Vec<Rat>> {
    s.split(',').map(|x| rational(x.trim(), what)).collect()
}

fn region(spec: &str, partition: &BlockPartition, threshold: &Rat) -> CliResult<Region> {
    match spec {
        "eh" => Ok(Region::eh(threshold.clone())?),
        "cross" => Ok(Region::cross(partition.clone(), threshold.clone())?),
        other => match other.strip_prefix("explicit:") {
            Some(path) => {
                let bytes = read(Path::new(path))?;
                let raw: RegionJson = serde_json::from_slice(&bytes)
                    .map_err(|e| CliError::Input(format!("malformed region JSON in {path}: {e}")))?;
                Ok(raw.to_region(partition)?)
            }
            None => Err(CliError::Input(format!("unknown region {other:?}; expected eh, cross or explicit:<path>"))),
        },
    }
}

fn rect_cap(flag: Option<u128>) -> CliResult<u128> {
    if let Some(cap) = flag {
        return Ok(cap);
    }
    match std::env::var(RECT_CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Input(format!("{RECT_CAP_ENV} is not an integer: {v:?}"))),
        Err(_) => Ok(DEFAULT_RECT_CAP),
    }
}

fn notions(spec: &str) -> CliResult<Vec<Notion>> {
    let mut out = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let n = Notion::from_name(name).ok_or_else(|| CliError::Input(format!("unknown notion {name:?}")))?;
        if !out.contains(&n) {
            out.push(n);
        }
    }
    if out.is_empty() {
        return Err(CliError::Input("no notions requested".into()));
    }
    Ok(out)
}

fn cmd_check(a: &CheckArgs) -> CliResult<i32> {
    let start = Instant::now();
    let (dist, bytes) = load_distribution(&a.input.input)?;
    let partition = partition(a.input.partition.as_deref(), dist.dimension())?;
    let threshold = rational(&a.input.threshold, "--threshold")?;
    let region = region(&a.region, &partition, &threshold)?;
    let caps = Caps { slab: a.slab_cap.unwrap_or(DEFAULT_SLAB_CAP), rect: rect_cap(a.rect_cap)? };
    let mut report = RunReport {
        command: "check".into(),
        input_digest: Some(digest(&bytes)),
        partition: Some(partition.to_string()),
        region: Some(RegionJson::from_region(&region)),
        threshold: Some(threshold.to_string()),
        ..Default::default()
    };
    for notion in notions(&a.notions)? {
        let v = ci::check(notion, &dist, &partition, &region, &threshold, caps)?;
        report.verdicts.insert(notion.name().to_string(), v.holds);
        report.details.push(VerdictJson::from_verdict(&v));
        if notion == Notion::Outer && v.holds {
            report.witness =
                build_outer_witness_generic(&dist, &partition).ok().map(|w| WitnessSummary::from_witness(&w));
        }
    }
    report.timing_ms = start.elapsed().as_millis();
    emit(a.out.as_deref(), &report.to_json())?;
    Ok(EXIT_OK)
}

/// Body printed on stdout when a witness builder refuses its input.
#[derive(Debug, Serialize)]
struct Refusal {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<VerdictJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<ReportJson>,
}

fn precondition(e: Error) -> CliError {
    let mut body = Refusal { error: e.to_string(), verdict: None, certificate: None, report: None };
    match &e {
        Error::PreconditionEhFailed(v) => body.verdict = Some(VerdictJson::from_verdict(v)),
        Error::OuterCheckFailed(cert) => body.certificate = Some(CertificateJson::from_certificate(cert)),
        Error::VerificationFailed(r) => body.report = Some(ReportJson::from(r.as_ref())),
        _ => {}
    }
    CliError::Precondition(e.to_string(), Some(serde_json::to_string_pretty(&body).expect("serializable")))
}

fn cmd_witness(a: &WitnessArgs) -> CliResult<i32> {
    let (dist, _) = load_distribution(&a.input.input)?;
    let partition = partition(a.input.partition.as_deref(), dist.dimension())?;
    let threshold = rational(&a.input.threshold, "--threshold")?;
    let method = Method::from_name(&a.method)
        .ok_or_else(|| CliError::Input(format!("unknown method {:?}; expected prop1, prop2 or generic", a.method)))?;
    let witness = build_witness(method, &dist, &partition, &threshold).map_err(precondition)?;
    let mut text = serde_json::to_string_pretty(&WitnessJson::from_witness(&witness)).expect("serializable");
    text.push('\n');
    emit(a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn merge(args: GenerateArgs) -> CliResult<(GenerateParams, Option<PathBuf>)> {
    let mut p = match &args.params {
        Some(path) => serde_json::from_slice::<GenerateParams>(&read(path)?)
            .map_err(|e| CliError::Input(format!("malformed parameter JSON: {e}")))?,
        None => GenerateParams::default(),
    };
    macro_rules! over {
        ($($f:ident),*) => { $( if args.$f.is_some() { p.$f = args.$f; } )* };
    }
    over!(family, seed, grid, partition, region, threshold, arms, tail, arm_weight, input, epsilon, pattern);
    Ok((p, args.out))
}

fn parse_grid(spec: &str) -> CliResult<GridSpec> {
    let axes = spec.split(';').map(|axis| rational_list(axis, "--grid")).collect::<CliResult<Vec<_>>>()?;
    Ok(GridSpec::new(axes)?)
}

fn generate(p: &GenerateParams) -> CliResult<FiniteDistribution> {
    let family = p.family.ok_or_else(|| CliError::Input("--family is required".into()))?;
    let seed = p.seed.unwrap_or(0);
    let threshold = rational(p.threshold.as_deref().unwrap_or("1"), "--threshold")?;
    let grid = || parse_grid(p.grid.as_deref().unwrap_or("0,1/2,2,3;0,1/2,2,3"));
    match family {
        Family::ProductCi => {
            let grid = grid()?;
            let part = partition(p.partition.as_deref(), grid.dim())?;
            let reg = region(p.region.as_deref().unwrap_or("eh"), &part, &threshold)?;
            Ok(gen_product_ci(seed, &grid, &part, &reg)?)
        }
        Family::Perturbed => {
            let base = match &p.input {
                Some(path) => load_distribution(path)?.0,
                None => {
                    let grid = grid()?;
                    let part = partition(p.partition.as_deref(), grid.dim())?;
                    let reg = region(p.region.as_deref().unwrap_or("eh"), &part, &threshold)?;
                    gen_product_ci(seed, &grid, &part, &reg)?
                }
            };
            let part = partition(p.partition.as_deref(), base.dimension())?;
            let reg = region(p.region.as_deref().unwrap_or("eh"), &part, &threshold)?;
            let mut slabs = enumerate_slabs(base.support(), &part, &reg)?;
            slabs.retain(|s| s.corners(&part).iter().all(|q| base.contains(q)));
            let mut rng = generators::rng(seed.wrapping_add(1));
            let slab = slabs.choose(&mut rng).ok_or_else(|| CliError::Input("no in-region slab to perturb".into()))?;
            let [_, _, o1, o2] = slab.corners(&part);
            let epsilon = match &p.epsilon {
                Some(e) => rational(e, "--epsilon")?,
                None => base.mass(&o1).min(base.mass(&o2)) / Rat::from_integer(2.into()),
            };
            let pattern = match p.pattern.unwrap_or(Pattern::Corners) {
                Pattern::Corners => Perturbation::Corners,
                Pattern::Row => Perturbation::Row,
            };
            Ok(gen_perturbed(&base, &part, slab, &epsilon, pattern)?)
        }
        Family::Cross => {
            let counts: Vec<usize> = p
                .arms
                .as_deref()
                .unwrap_or("2,2")
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| CliError::Input(format!("--arms: bad count {s:?}"))))
                .collect::<CliResult<_>>()?;
            let (dim, arms) = match counts[..] {
                [a, c] => (2, [a, 0, c]),
                [a, b, c] => (3, [a, b, c]),
                _ => return Err(CliError::Input("--arms takes 2 or 3 counts".into())),
            };
            let part = partition(p.partition.as_deref(), dim)?;
            Ok(gen_cross(seed, &part, arms, &threshold)?)
        }
        Family::ParetoAxes => {
            let tail = rational_list(p.tail.as_deref().unwrap_or("2,4"), "--tail")?;
            let weight = rational(p.arm_weight.as_deref().unwrap_or("1/2"), "--arm-weight")?;
            Ok(gen_pareto_axes(&tail, &weight)?)
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> CliResult<i32> {
    let (params, out) = merge(a)?;
    let dist = generate(&params)?;
    emit(out.as_deref(), &json::distribution_to_string(&dist))?;
    Ok(EXIT_OK)
}

fn cmd_suite(a: &SuiteArgs) -> CliResult<i32> {
    if a.trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let start = Instant::now();
    let caps = Caps { slab: a.slab_cap.unwrap_or(DEFAULT_SLAB_CAP), rect: DEFAULT_RECT_CAP };
    let (shape, records) = match a.shape {
        Shape::Eh => {
            let mut cfg = EhSuiteConfig::new(a.dim);
            if let Some(m) = a.max_values {
                cfg.max_values = m;
            }
            cfg.caps = caps;
            ("eh", run_eh_suite(a.trials, a.seed, &cfg)?)
        }
        Shape::Cross => {
            let cfg = CrossSuiteConfig { max_arm_atoms: a.max_arm_atoms, caps };
            ("cross", run_cross_suite(a.trials, a.seed, &cfg)?)
        }
    };
    let tallies = SuiteTallies::from_records(shape, a.seed, a.trials, &records);
    let mut report = RunReport { command: "suite".into(), ..Default::default() };
    let passed = tallies.passed();
    if !passed {
        eprintln!("xci: {} of {} instances failed", tallies.failed_instances, tallies.instances);
    }
    report.suite = Some(tallies);
    report.timing_ms = start.elapsed().as_millis();
    emit(a.out.as_deref(), &report.to_json())?;
    Ok(if passed { EXIT_OK } else { EXIT_SUITE_FAILED })
}
