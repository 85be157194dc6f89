//! Pipeline orchestration: workload loading, the
//! identify-select-substitute-simulate-energy-advise chain across a cache
//! size sweep, and reproducible report emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{
    simulate_sweep, AccessStats, Associativity, CacheConfig, Replacement,
};
use crate::ci::{
    enumerate_candidates, greedy_select, reduction_stats, substitute, CiConstraints, CiSelection,
};
use crate::energy::{
    downsize_decision, parse_size, sweep_report, AmatConvention, EnergyParams, SizingReport,
    SizingVerdict,
};
use crate::program::{DynamicTrace, GeneratorSpec, StaticProgram};

pub const RUN_JSON_FORMAT_VERSION: u32 = 1;
pub const REDUCTION_CSV_SCHEMA: &str = "icx.reduction.v1";
pub const ENERGY_CSV_SCHEMA: &str = "icx.energy.v1";
pub const VERDICTS_CSV_SCHEMA: &str = "icx.verdicts.v1";
pub const FIXTURE_VERDICTS_CSV_SCHEMA: &str = "icx.fixture-verdicts.v1";

const BUNDLED_AMAT_FIXTURE: &str = include_str!("../fixtures/amat_fixture.txt");

/// The AMAT grid shipped in-repo for exercising the downsizing rule without
/// any simulation.
pub fn bundled_amat_fixture() -> &'static str {
    BUNDLED_AMAT_FIXTURE
}

/// Config problems exit 2, input-data problems exit 3, pipeline failures
/// exit 4.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {message}")]
    Data { stage: &'static str, message: String },
    #[error("{stage}: {message}")]
    Pipeline { stage: &'static str, message: String },
}

impl HarnessError {
    fn data(stage: &'static str, err: impl std::fmt::Display) -> Self {
        HarnessError::Data {
            stage,
            message: err.to_string(),
        }
    }

    fn pipeline(stage: &'static str, err: impl std::fmt::Display) -> Self {
        HarnessError::Pipeline {
            stage,
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Data { .. } => 3,
            HarnessError::Pipeline { .. } => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CiMode {
    Auto,
    File(PathBuf),
    None,
}

impl CiMode {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "auto" => Ok(CiMode::Auto),
            "none" => Ok(CiMode::None),
            _ => {
                if let Some(path) = s.strip_prefix("file=") {
                    Ok(CiMode::File(PathBuf::from(path)))
                } else {
                    Err(HarnessError::Config(format!(
                        "--ci must be auto, none, or file=<path>, got `{s}`"
                    )))
                }
            }
        }
    }

    fn label(&self) -> String {
        match self {
            CiMode::Auto => "auto".into(),
            CiMode::None => "none".into(),
            CiMode::File(path) => format!("file={}", path.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Workload {
    Files { program: PathBuf, trace: PathBuf },
    Synth(GeneratorSpec),
}

impl Workload {
    fn label(&self) -> String {
        match self {
            Workload::Files { program, trace } => {
                format!("program={} trace={}", program.display(), trace.display())
            }
            Workload::Synth(spec) => format!("synth={spec}"),
        }
    }
}

/// A fully resolved run: exactly one workload source, a nonempty size list
/// valid for the template, and one seed.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub workload: Workload,
    pub ci_mode: CiMode,
    pub max_len: Option<usize>,
    pub max_inputs: usize,
    pub max_outputs: usize,
    pub budget: Option<usize>,
    pub block: u64,
    pub ways: Associativity,
    pub replacement: Replacement,
    pub instruction_width: Option<u32>,
    pub sizes: Vec<u64>,
    pub energy_params_path: Option<PathBuf>,
    pub k_factor: Option<f64>,
    pub amat_convention: AmatConvention,
    pub out_dir: PathBuf,
    pub seed: u64,
}

pub fn default_sizes() -> Vec<u64> {
    vec![1 << 10, 2 << 10, 4 << 10, 8 << 10, 16 << 10, 32 << 10]
}

/// Raw option bag shared by the CLI flags and the TOML config file; flag
/// values win over file values, then defaults apply.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRunOptions {
    pub program: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub synth: Option<String>,
    pub ci: Option<String>,
    pub sizes: Option<String>,
    pub block: Option<u64>,
    pub ways: Option<String>,
    pub repl: Option<String>,
    pub width: Option<u32>,
    pub energy_params: Option<PathBuf>,
    pub k_factor: Option<f64>,
    pub amat_convention: Option<String>,
    pub max_len: Option<usize>,
    pub max_inputs: Option<usize>,
    pub max_outputs: Option<usize>,
    pub budget: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RawRunOptions {
    /// Overlays `self` (the flags) on `fallback` (the config file).
    pub fn overlay(self, fallback: RawRunOptions) -> RawRunOptions {
        RawRunOptions {
            program: self.program.or(fallback.program),
            trace: self.trace.or(fallback.trace),
            synth: self.synth.or(fallback.synth),
            ci: self.ci.or(fallback.ci),
            sizes: self.sizes.or(fallback.sizes),
            block: self.block.or(fallback.block),
            ways: self.ways.or(fallback.ways),
            repl: self.repl.or(fallback.repl),
            width: self.width.or(fallback.width),
            energy_params: self.energy_params.or(fallback.energy_params),
            k_factor: self.k_factor.or(fallback.k_factor),
            amat_convention: self.amat_convention.or(fallback.amat_convention),
            max_len: self.max_len.or(fallback.max_len),
            max_inputs: self.max_inputs.or(fallback.max_inputs),
            max_outputs: self.max_outputs.or(fallback.max_outputs),
            budget: self.budget.or(fallback.budget),
            out: self.out.or(fallback.out),
            seed: self.seed.or(fallback.seed),
        }
    }

    pub fn resolve(self) -> Result<RunConfig, HarnessError> {
        let workload = match (self.program, self.trace, self.synth) {
            (Some(program), Some(trace), None) => Workload::Files { program, trace },
            (None, None, Some(spec)) => Workload::Synth(
                spec.parse()
                    .map_err(|e| HarnessError::Config(format!("--synth: {e}")))?,
            ),
            (Some(_), None, None) | (None, Some(_), None) => {
                return Err(HarnessError::Config(
                    "--program and --trace must be given together".into(),
                ))
            }
            _ => {
                return Err(HarnessError::Config(
                    "exactly one workload source: --program with --trace, or --synth".into(),
                ))
            }
        };
        let ci_mode = match self.ci {
            Some(s) => CiMode::parse(&s)?,
            None => CiMode::Auto,
        };
        let sizes = match self.sizes {
            Some(list) => list
                .split(',')
                .map(|s| parse_size(s).map_err(HarnessError::Config))
                .collect::<Result<Vec<u64>, _>>()?,
            None => default_sizes(),
        };
        if sizes.is_empty() {
            return Err(HarnessError::Config("size list is empty".into()));
        }
        let ways = match self.ways {
            Some(s) => s.parse::<Associativity>().map_err(HarnessError::Config)?,
            None => Associativity::Ways(2),
        };
        let replacement = match self.repl {
            Some(s) => s.parse::<Replacement>().map_err(HarnessError::Config)?,
            None => Replacement::Lru,
        };
        let amat_convention = match self.amat_convention {
            Some(s) => s.parse::<AmatConvention>().map_err(HarnessError::Config)?,
            None => AmatConvention::Weighted,
        };
        if let Some(k) = self.k_factor {
            if !k.is_finite() || k <= 0.0 {
                return Err(HarnessError::Config(format!(
                    "k-factor {k} must be positive"
                )));
            }
        }
        let out_dir = self
            .out
            .ok_or_else(|| HarnessError::Config("--out <dir> is required".into()))?;
        Ok(RunConfig {
            workload,
            ci_mode,
            max_len: self.max_len,
            max_inputs: self.max_inputs.unwrap_or(2),
            max_outputs: self.max_outputs.unwrap_or(1),
            budget: self.budget,
            block: self.block.unwrap_or(32),
            ways,
            replacement,
            instruction_width: self.width,
            sizes,
            energy_params_path: self.energy_params,
            k_factor: self.k_factor,
            amat_convention,
            out_dir,
            seed: self.seed.unwrap_or(0),
        })
    }
}

pub fn load_options_file(path: &Path) -> Result<RawRunOptions, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("config file {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("config file {}: {e}", path.display())))
}

/// Everything a run produced, for callers that want more than the files.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub selection: CiSelection,
    pub code_size_before: usize,
    pub code_size_after: usize,
    pub baseline: BTreeMap<u64, AccessStats>,
    pub extended: BTreeMap<u64, AccessStats>,
    pub report: SizingReport,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct ConfigEcho {
    workload: String,
    ci_mode: String,
    max_len: Option<usize>,
    max_inputs: usize,
    max_outputs: usize,
    budget: Option<usize>,
    block: u64,
    ways: String,
    replacement: String,
    sizes: Vec<u64>,
    energy_params_path: Option<String>,
    k_factor: f64,
    amat_convention: String,
    out_dir: String,
    seed: u64,
}

#[derive(Serialize)]
struct WorkloadSummary {
    program_instructions: usize,
    trace_events: u64,
    instruction_width: u32,
    base_address: u64,
}

#[derive(Serialize)]
struct Provenance<'a> {
    format_version: u32,
    config: ConfigEcho,
    energy_params: &'a EnergyParams,
    selection: &'a CiSelection,
    code_size_before: usize,
    code_size_after: usize,
    workload: WorkloadSummary,
    baseline_stats: &'a BTreeMap<u64, AccessStats>,
    extended_stats: &'a BTreeMap<u64, AccessStats>,
}

/// Runs the whole pipeline and writes reduction.csv, energy.csv,
/// verdicts.csv and run.json into the output directory. Deterministic for a
/// given config and seed.
pub fn run(config: &RunConfig) -> Result<RunArtifacts, HarnessError> {
    let mut warnings = Vec::new();

    let (mut program, trace) = match &config.workload {
        Workload::Files { program, trace } => {
            let p =
                StaticProgram::load(program).map_err(|e| HarnessError::data("workload", e))?;
            let t = DynamicTrace::load(trace, &p).map_err(|e| HarnessError::data("workload", e))?;
            (p, t)
        }
        Workload::Synth(spec) => spec
            .synthesize(config.seed)
            .map_err(|e| HarnessError::data("workload", e))?,
    };
    if let Some(width) = config.instruction_width {
        program
            .set_instruction_width(width)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }

    let template = CacheConfig {
        capacity: config.sizes[0],
        block_size: config.block,
        associativity: config.ways,
        replacement: config.replacement,
        instruction_width: program.instruction_width(),
    };
    for &size in &config.sizes {
        template
            .with_capacity(size)
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }

    let mut params = match &config.energy_params_path {
        Some(path) => EnergyParams::load(path).map_err(|e| HarnessError::data("energy-params", e))?,
        None => EnergyParams::builtin_45nm(),
    };
    if let Some(k) = config.k_factor {
        params.k_factor = k;
    }
    params.amat_convention = config.amat_convention;
    params
        .validate()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    if let Some(warning) = params.k_factor_warning() {
        warnings.push(warning);
    }

    let baseline = simulate_sweep(&program, &trace, &config.sizes, &template)
        .map_err(|e| HarnessError::pipeline("simulate", e))?;

    let selection = match &config.ci_mode {
        CiMode::None => CiSelection::empty(),
        CiMode::Auto => {
            let mut constraints =
                CiConstraints::for_block_capacity(template.block_capacity() as usize);
            if let Some(max_len) = config.max_len {
                constraints.max_len = max_len;
            }
            constraints.max_inputs = config.max_inputs;
            constraints.max_outputs = config.max_outputs;
            let candidates = enumerate_candidates(&program, &trace, &constraints)
                .map_err(|e| HarnessError::pipeline("identify", e))?;
            greedy_select(&candidates, config.budget)
        }
        CiMode::File(path) => {
            CiSelection::load(path).map_err(|e| HarnessError::data("selection", e))?
        }
    };

    let rewrite = substitute(&program, &trace, &selection)
        .map_err(|e| HarnessError::pipeline("substitute", e))?;
    let extended = simulate_sweep(&rewrite.program, &rewrite.trace, &config.sizes, &template)
        .map_err(|e| HarnessError::pipeline("simulate", e))?;

    let report = sweep_report(&baseline, &extended, &params)
        .map_err(|e| HarnessError::pipeline("energy", e))?;

    fs::create_dir_all(&config.out_dir).map_err(|e| HarnessError::pipeline("report", e))?;
    let write = |name: &str, body: String| -> Result<(), HarnessError> {
        fs::write(config.out_dir.join(name), body)
            .map_err(|e| HarnessError::pipeline("report", e))
    };
    write(
        "reduction.csv",
        reduction_csv(&template, &baseline, &extended),
    )?;
    write("energy.csv", energy_csv(&template, &report, &params))?;
    write("verdicts.csv", verdicts_csv(&report))?;

    let provenance = Provenance {
        format_version: RUN_JSON_FORMAT_VERSION,
        config: ConfigEcho {
            workload: config.workload.label(),
            ci_mode: config.ci_mode.label(),
            max_len: config.max_len,
            max_inputs: config.max_inputs,
            max_outputs: config.max_outputs,
            budget: config.budget,
            block: config.block,
            ways: config.ways.to_string(),
            replacement: config.replacement.to_string(),
            sizes: config.sizes.clone(),
            energy_params_path: config
                .energy_params_path
                .as_ref()
                .map(|p| p.display().to_string()),
            k_factor: params.k_factor,
            amat_convention: params.amat_convention.to_string(),
            out_dir: config.out_dir.display().to_string(),
            seed: config.seed,
        },
        energy_params: &params,
        selection: &selection,
        code_size_before: rewrite.code_size_before,
        code_size_after: rewrite.code_size_after,
        workload: WorkloadSummary {
            program_instructions: program.len(),
            trace_events: trace.total_accesses(),
            instruction_width: program.instruction_width(),
            base_address: program.base_address(),
        },
        baseline_stats: &baseline,
        extended_stats: &extended,
    };
    let json = serde_json::to_string_pretty(&provenance)
        .map_err(|e| HarnessError::pipeline("report", e))?;
    write("run.json", json + "\n")?;

    Ok(RunArtifacts {
        selection,
        code_size_before: rewrite.code_size_before,
        code_size_after: rewrite.code_size_after,
        baseline,
        extended,
        report,
        warnings,
    })
}

/// Rounds to six significant digits for report cells; run.json keeps full
/// precision.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exponent = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(5 - exponent);
    ((x * factor).round() / factor).to_string()
}

fn geometry_prefix(template: &CacheConfig, size: u64) -> String {
    format!(
        "{},{},{},{}",
        size, template.associativity, template.block_size, template.replacement
    )
}

fn reduction_csv(
    template: &CacheConfig,
    baseline: &BTreeMap<u64, AccessStats>,
    extended: &BTreeMap<u64, AccessStats>,
) -> String {
    let mut out = format!("# {REDUCTION_CSV_SCHEMA}\n");
    out.push_str(
        "size,ways,block,replacement,accesses_before,accesses_after,access_red_pct,\
         hits_before,hits_after,hit_red_pct,misses_before,misses_after,miss_red_pct\n",
    );
    for (&size, before) in baseline {
        let after = &extended[&size];
        let red = reduction_stats(before, after);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            geometry_prefix(template, size),
            before.total(),
            after.total(),
            format_sig6(red.access_red_pct),
            before.hits,
            after.hits,
            format_sig6(red.hit_red_pct),
            before.misses,
            after.misses,
            format_sig6(red.miss_red_pct),
        );
    }
    out
}

fn energy_csv(template: &CacheConfig, report: &SizingReport, params: &EnergyParams) -> String {
    let mut out = format!("# {ENERGY_CSV_SCHEMA}\n");
    out.push_str(
        "size,ways,block,replacement,variant,hits,misses,total,hit_energy_nj,hit_delay_ns,\
         k_factor,total_energy_nj,amat_ns,energy_saving_pct\n",
    );
    for row in &report.rows {
        let point = params
            .per_size
            .get(&row.size)
            .expect("report rows come from the same table");
        for (variant, result, saving) in [
            ("baseline", &row.baseline, None),
            ("extended", &row.extended, Some(row.energy_saving_pct)),
        ] {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                geometry_prefix(template, row.size),
                variant,
                result.hits,
                result.misses,
                result.hits + result.misses,
                format_sig6(point.hit_energy_nj),
                format_sig6(point.hit_delay_ns),
                format_sig6(params.k_factor),
                format_sig6(result.total_energy_nj),
                format_sig6(result.amat_ns),
                saving.map(format_sig6).unwrap_or_default(),
            );
        }
    }
    out
}

fn verdicts_csv(report: &SizingReport) -> String {
    let mut out = format!("# {VERDICTS_CSV_SCHEMA}\n");
    out.push_str(
        "baseline_size,candidate_size,amat_no_ci_baseline,amat_with_ci_candidate,accepted,\
         dyn_energy_reduction_pct\n",
    );
    for v in &report.verdicts {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            v.baseline_size,
            v.candidate_size,
            format_sig6(v.amat_baseline_no_ci),
            format_sig6(v.amat_candidate_with_ci),
            v.accepted,
            v.dyn_energy_reduction_pct
                .map(format_sig6)
                .unwrap_or_default(),
        );
    }
    out
}

/// Per-benchmark AMAT grid: one `no-ci` and one `with-ci` row per benchmark
/// over a shared size list.
#[derive(Clone, Debug, PartialEq)]
pub struct AmatFixture {
    pub sizes: Vec<u64>,
    pub benchmarks: Vec<AmatFixtureRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmatFixtureRow {
    pub benchmark: String,
    pub no_ci: Vec<f64>,
    pub with_ci: Vec<f64>,
}

pub fn parse_amat_fixture(text: &str) -> Result<AmatFixture, HarnessError> {
    let fail = |message: String| HarnessError::Data {
        stage: "fixture",
        message,
    };
    let mut sizes: Vec<u64> = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<(String, bool), Vec<f64>> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() || content == "format v1" {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens[0] == "sizes" {
            sizes = tokens[1..]
                .iter()
                .map(|t| parse_size(t))
                .collect::<Result<_, _>>()
                .map_err(|e| fail(format!("line {line}: {e}")))?;
            continue;
        }
        if sizes.is_empty() {
            return Err(fail(format!("line {line}: `sizes` row must come first")));
        }
        if tokens.len() < 2 {
            return Err(fail(format!(
                "line {line}: expected `<benchmark> no-ci|with-ci <values..>`"
            )));
        }
        let benchmark = tokens[0].to_string();
        let with_ci = match tokens[1] {
            "no-ci" => false,
            "with-ci" => true,
            other => return Err(fail(format!("line {line}: unknown variant `{other}`"))),
        };
        let values: Vec<f64> = tokens[2..]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| fail(format!("line {line}: non-numeric value")))?;
        if values.len() != sizes.len() {
            let variant = if with_ci { "with-ci" } else { "no-ci" };
            let missing = sizes
                .get(values.len().min(sizes.len().saturating_sub(1)))
                .copied()
                .unwrap_or(0);
            return Err(fail(format!(
                "benchmark {benchmark} ({variant}): expected {} values, got {} \
                 (around size {missing})",
                sizes.len(),
                values.len()
            )));
        }
        if !order.contains(&benchmark) {
            order.push(benchmark.clone());
        }
        if rows.insert((benchmark.clone(), with_ci), values).is_some() {
            return Err(fail(format!("benchmark {benchmark}: duplicate row")));
        }
    }
    if sizes.is_empty() {
        return Err(fail("missing `sizes` row".into()));
    }
    let mut benchmarks = Vec::new();
    for name in order {
        let no_ci = rows
            .remove(&(name.clone(), false))
            .ok_or_else(|| fail(format!("benchmark {name}: missing no-ci row")))?;
        let with_ci = rows
            .remove(&(name.clone(), true))
            .ok_or_else(|| fail(format!("benchmark {name}: missing with-ci row")))?;
        benchmarks.push(AmatFixtureRow {
            benchmark: name,
            no_ci,
            with_ci,
        });
    }
    Ok(AmatFixture { sizes, benchmarks })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureVerdict {
    pub benchmark: String,
    pub verdict: SizingVerdict,
}

/// One verdict per (benchmark, baseline size, smaller candidate size) from
/// an AMAT grid alone; no counts, so no energy reduction column.
pub fn fixture_verdicts(fixture: &AmatFixture) -> Vec<FixtureVerdict> {
    let mut out = Vec::new();
    for row in &fixture.benchmarks {
        for (bi, &baseline_size) in fixture.sizes.iter().enumerate() {
            for (ci, &candidate_size) in fixture.sizes[..bi].iter().enumerate() {
                out.push(FixtureVerdict {
                    benchmark: row.benchmark.clone(),
                    verdict: downsize_decision(
                        row.no_ci[bi],
                        row.with_ci[ci],
                        (baseline_size, candidate_size),
                    ),
                });
            }
        }
    }
    out
}

/// Loads the fixture (bundled when no path is given), computes verdicts, and
/// writes verdicts.csv into the output directory.
pub fn run_fixture_verdicts(
    fixture_path: Option<&Path>,
    out_dir: &Path,
) -> Result<Vec<FixtureVerdict>, HarnessError> {
    let text = match fixture_path {
        Some(path) => fs::read_to_string(path).map_err(|e| HarnessError::Data {
            stage: "fixture",
            message: format!("{}: {e}", path.display()),
        })?,
        None => BUNDLED_AMAT_FIXTURE.to_string(),
    };
    let fixture = parse_amat_fixture(&text)?;
    let verdicts = fixture_verdicts(&fixture);
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::pipeline("report", e))?;
    let mut out = format!("# {FIXTURE_VERDICTS_CSV_SCHEMA}\n");
    out.push_str(
        "benchmark,baseline_size,candidate_size,amat_no_ci_baseline,amat_with_ci_candidate,\
         accepted\n",
    );
    for fv in &verdicts {
        let v = &fv.verdict;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fv.benchmark,
            v.baseline_size,
            v.candidate_size,
            format_sig6(v.amat_baseline_no_ci),
            format_sig6(v.amat_candidate_with_ci),
            v.accepted,
        );
    }
    fs::write(out_dir.join("verdicts.csv"), out)
        .map_err(|e| HarnessError::pipeline("report", e))?;
    Ok(verdicts)
}
