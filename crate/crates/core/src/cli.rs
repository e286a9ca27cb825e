//! Command-line pipeline.
//!
//! Exit codes: 0 on success, 1 when a numerical step fails or a check in the
//! output does not hold, 2 on configuration errors. Every run writes
//! `diagnostics.json` next to its artifacts.

use crate::bowen::{bowen_root, bowen_sweep, BowenError, BowenOptions, SweepSettings};
use crate::cache::{cache_dir, CacheError, PeriodicCache};
use crate::config::{parse_config, ConfigError, Format, RunConfig};
use crate::periodic::{FilterParams, PeriodicEnumerator, PeriodicError, SearchOptions};
use crate::pressure::{p_p_c_limit, separated_series, PressureError, PressureEstimate};
use crate::report::{self, ArtifactWriter, CompareRow, RunDiagnostics};
use crate::sampler::{inverse_iteration_sample, SampleError};
use crate::separated::{SeparatedError, SeparatedOptions, SeparatedSets};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use std::io;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "julia-pressure", version, about = "Periodic-point and separated-set pressure of rational maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `[output] directory`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub n_max: Option<usize>,
    #[arg(long, global = true, value_name = "A")]
    pub alpha: Option<f64>,
    /// Comma-separated, strictly descending values in (0, 1].
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    pub c_schedule: Option<Vec<f64>>,
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "T")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate fixed points of f^n for every n in the range.
    PeriodicPoints,
    /// Periodic-point pressure along the c schedule.
    PressurePp,
    /// Separated-set pressure for each epsilon in the schedule.
    PressureSep,
    /// Root of t -> P(-t log|f'|).
    Bowen(BowenArgs),
    /// Both pressure series, their difference and the inequality check.
    Compare,
}

#[derive(Debug, Args)]
pub struct BowenArgs {
    /// Real parameters c of z^2 + c to sweep; appends to bowen_sweep.csv.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
    pub sweep_c: Vec<f64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PeriodicPoints => "periodic-points",
            Command::PressurePp => "pressure-pp",
            Command::PressureSep => "pressure-sep",
            Command::Bowen(_) => "bowen",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("--config is required")]
    MissingConfig,
    #[error("writing artifacts: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Periodic(#[from] PeriodicError),
    #[error(transparent)]
    Pressure(#[from] PressureError),
    #[error(transparent)]
    Separated(#[from] SeparatedError),
    #[error(transparent)]
    Bowen(#[from] BowenError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::ReadConfig { .. } | RunError::MissingConfig => 2,
            _ => 1,
        }
    }
}

/// Reads the config file and applies command-line overrides.
pub fn load_config(common: &CommonArgs) -> Result<RunConfig, RunError> {
    let path = common.config.as_ref().ok_or(RunError::MissingConfig)?;
    let text = std::fs::read_to_string(path).map_err(|source| RunError::ReadConfig {
        path: path.clone(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = &common.out {
        cfg.output.directory = out.clone();
    }
    if let Some(n) = common.n_max {
        cfg.n_max = n;
    }
    if let Some(a) = common.alpha {
        cfg.alpha = a;
    }
    if let Some(cs) = &common.c_schedule {
        cfg.c_schedule = cs.clone();
    }
    if let Some(s) = common.seed {
        cfg.sample.seed = s;
    }
    if let Some(f) = &common.format {
        cfg.output.formats = f.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn main_from_env() -> i32 {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> i32 {
    let name = cli.command.name();
    let cfg = match load_config(&cli.common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Some(t) = cli.common.threads {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let writer = match ArtifactWriter::new(&cfg.output.directory, &cfg.output.formats) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", cfg.output.directory.display());
            return 1;
        }
    };
    let mut pipeline = Pipeline {
        cache: PeriodicCache::new(cache_dir(&cfg.output.directory.join("cache"))),
        cfg,
        writer,
        diagnostics: RunDiagnostics {
            command: name.to_string(),
            ..RunDiagnostics::default()
        },
    };
    let result = match &cli.command {
        Command::PeriodicPoints => pipeline.periodic_points(),
        Command::PressurePp => pipeline.pressure_pp(),
        Command::PressureSep => pipeline.pressure_sep(),
        Command::Bowen(args) => pipeline.bowen(&args.sweep_c),
        Command::Compare => pipeline.compare(),
    };
    let mut code = match result {
        Ok(()) => 0,
        Err(e) => {
            pipeline.diagnostics.failures.push(e.to_string());
            e.exit_code()
        }
    };
    if code == 0 && !pipeline.diagnostics.failures.is_empty() {
        code = 1;
    }
    pipeline.diagnostics.status = if code == 0 { "ok" } else { "failed" }.to_string();
    for w in &pipeline.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    for f in &pipeline.diagnostics.failures {
        eprintln!("error: {f}");
    }
    if let Err(e) = pipeline.writer.json_always("diagnostics.json", &pipeline.diagnostics) {
        eprintln!("error: writing diagnostics.json: {e}");
        code = code.max(1);
    }
    code
}

struct Pipeline {
    cfg: RunConfig,
    cache: PeriodicCache,
    writer: ArtifactWriter,
    diagnostics: RunDiagnostics,
}

#[derive(Serialize)]
struct MapSummary {
    numerator: Vec<[f64; 2]>,
    denominator: Vec<[f64; 2]>,
    potential: String,
}

#[derive(Serialize)]
struct StabilityCounts {
    n: usize,
    found: usize,
    expected: usize,
    complete: bool,
    repelling: usize,
    ambiguous: usize,
    non_repelling: usize,
}

#[derive(Serialize)]
struct PeriodicSummary {
    map: MapSummary,
    levels: Vec<StabilityCounts>,
}

#[derive(Serialize)]
struct PpSummary {
    map: MapSummary,
    estimate: PressureEstimate,
}

#[derive(Serialize)]
struct SepSummary {
    map: MapSummary,
    estimates: Vec<PressureEstimate>,
    /// Change of the estimate between consecutive epsilons of the schedule.
    successive_differences: Vec<f64>,
}

#[derive(Serialize)]
struct CompareSummary {
    map: MapSummary,
    periodic: PressureEstimate,
    separated: PressureEstimate,
    difference: f64,
    max_row_difference: f64,
    inequality_slack: f64,
    inequality_holds: bool,
    rows: Vec<CompareRow>,
}

impl Pipeline {
    fn map_summary(&self) -> MapSummary {
        let pairs = |v: &[Complex64]| v.iter().map(|c| [c.re, c.im]).collect();
        MapSummary {
            numerator: pairs(&self.cfg.numerator),
            denominator: pairs(&self.cfg.denominator),
            potential: self.cfg.potential().to_string(),
        }
    }

    /// Enumerator with every `n <= n_max` loaded from the cache or computed and stored.
    fn enumerator(&mut self) -> Result<PeriodicEnumerator, RunError> {
        let map = self.cfg.map();
        let s = &self.cfg.sample;
        let sample = inverse_iteration_sample(&map, s.count, s.depth, s.seed)?;
        let mut e = PeriodicEnumerator::new(map.clone(), sample, SearchOptions::default());
        for n in 1..=self.cfg.n_max {
            match self.cache.load(&map, n) {
                Ok(Some(rec)) if rec.skipped == 0 && rec.record.set.report.complete => {
                    e.insert(rec.record.set);
                    continue;
                }
                Ok(Some(rec)) => eprintln!(
                    "note: cached n = {n} is incomplete or damaged ({} lines skipped); recomputing",
                    rec.skipped
                ),
                Ok(None) => {}
                Err(err) => eprintln!("note: ignoring cache for n = {n}: {err}"),
            }
            let set = e.find(n)?.clone();
            if let Err(err) = self.cache.store(&map, &set) {
                eprintln!("note: could not write cache: {err}");
            }
        }
        Ok(e)
    }

    fn filter_warnings(&mut self, est: &PressureEstimate) {
        for w in &est.diagnostics.warnings {
            self.diagnostics.warnings.push(w.clone());
        }
    }

    fn periodic_points(&mut self) -> Result<(), RunError> {
        let e = self.enumerator()?;
        let sets: Vec<_> = self.cfg.n_range().filter_map(|n| e.cached(n)).collect();
        let mut levels = Vec::new();
        let mut warnings = Vec::new();
        for set in &sets {
            let r = set.report;
            if !r.complete {
                warnings.push(format!("enumeration incomplete at n = {}: found {} of {}", r.n, r.found, r.expected));
            }
            let (repelling, ambiguous, non_repelling) = set.count_by_stability();
            levels.push(StabilityCounts {
                n: r.n,
                found: r.found,
                expected: r.expected,
                complete: r.complete,
                repelling,
                ambiguous,
                non_repelling,
            });
        }
        self.writer.csv("periodic_points.csv", &report::points_csv(&sets))?;
        let summary = PeriodicSummary {
            map: self.map_summary(),
            levels,
        };
        self.writer.json("periodic_points.json", &summary)?;
        self.diagnostics.warnings.extend(warnings);
        Ok(())
    }

    fn pp_estimate(&mut self, e: &mut PeriodicEnumerator) -> Result<PressureEstimate, RunError> {
        let est = p_p_c_limit(
            e,
            &self.cfg.potential(),
            self.cfg.alpha,
            &self.cfg.c_schedule,
            self.cfg.n_range(),
            self.cfg.window,
            self.cfg.stabilization_tol,
        )?;
        self.filter_warnings(&est);
        Ok(est)
    }

    fn sep_estimate(&mut self, e: &PeriodicEnumerator, eps: f64) -> Result<PressureEstimate, RunError> {
        let mut opts = SeparatedOptions::new(eps).with_construction(self.cfg.construction);
        opts.metric = Some(e.map().default_metric());
        let sets = SeparatedSets::build(e.map(), &self.cfg.potential(), e.sample(), self.cfg.n_max, &opts)?;
        let mut est = separated_series(&sets, 1.0, self.cfg.window)?;
        // keep only the configured range
        est.series.retain(|r| r.n >= self.cfg.n_min);
        est.diagnostics.sample_size = e.sample().len();
        self.filter_warnings(&est);
        Ok(est)
    }

    fn smallest_epsilon(&self) -> f64 {
        self.cfg.epsilon_schedule.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn pressure_pp(&mut self) -> Result<(), RunError> {
        let mut e = self.enumerator()?;
        let est = self.pp_estimate(&mut e)?;
        self.writer.csv("pressure_pp.csv", &report::pp_csv(&est))?;
        self.writer.json(
            "pressure_pp.json",
            &PpSummary {
                map: self.map_summary(),
                estimate: est,
            },
        )?;
        Ok(())
    }

    fn pressure_sep(&mut self) -> Result<(), RunError> {
        let e = self.enumerator()?;
        let mut estimates = Vec::new();
        for eps in self.cfg.epsilon_schedule.clone() {
            estimates.push(self.sep_estimate(&e, eps)?);
        }
        let successive_differences = estimates.windows(2).map(|w| w[1].value - w[0].value).collect();
        self.writer.csv("pressure_sep.csv", &report::sep_csv(&estimates))?;
        self.writer.json(
            "pressure_sep.json",
            &SepSummary {
                map: self.map_summary(),
                estimates,
                successive_differences,
            },
        )?;
        Ok(())
    }

    fn bowen(&mut self, sweep_c: &[f64]) -> Result<(), RunError> {
        let mut e = self.enumerator()?;
        let c = *self.cfg.c_schedule.last().expect("validated schedule");
        let params = FilterParams::new(self.cfg.alpha, c)?;
        let mut opts = BowenOptions::new(self.cfg.bowen.bracket);
        opts.tol = self.cfg.bowen.tol;
        opts.window = self.cfg.window;
        opts.cross_check = Some(SeparatedOptions::new(self.smallest_epsilon()).with_construction(self.cfg.construction));
        let result = bowen_root(&mut e, &params, self.cfg.n_range(), &opts)?;
        self.diagnostics.warnings.extend(result.warnings.iter().cloned());
        self.writer.json("bowen.json", &result)?;

        if !sweep_c.is_empty() {
            let cs: Vec<Complex64> = sweep_c.iter().map(|&c| Complex64::new(c, 0.0)).collect();
            let settings = SweepSettings {
                sample_count: self.cfg.sample.count,
                sample_depth: self.cfg.sample.depth,
                seed: self.cfg.sample.seed,
                search: SearchOptions::default(),
            };
            let mut sweep_opts = opts;
            sweep_opts.cross_check = None;
            let sweep = bowen_sweep(&cs, &settings, &params, self.cfg.n_range(), &sweep_opts)?;
            self.writer
                .append_csv("bowen_sweep.csv", report::SWEEP_HEADER, &report::sweep_rows(&sweep.entries))?;
            self.writer.json("bowen_sweep.json", &sweep)?;
        }
        Ok(())
    }

    fn compare(&mut self) -> Result<(), RunError> {
        let mut e = self.enumerator()?;
        let pp = self.pp_estimate(&mut e)?;
        let sep = self.sep_estimate(&e, self.smallest_epsilon())?;
        let rows = report::compare_rows(&pp, &sep);
        let inequality_holds = rows.iter().all(|r| r.inequality_holds);
        if !inequality_holds {
            let bad: Vec<String> = rows.iter().filter(|r| !r.inequality_holds).map(|r| r.n.to_string()).collect();
            self.diagnostics.failures.push(format!(
                "periodic-point value exceeds the separated estimate by more than {} at n = {}",
                report::INEQUALITY_SLACK,
                bad.join(", ")
            ));
        }
        self.writer.csv("pressure_pp.csv", &report::pp_csv(&pp))?;
        self.writer.csv("pressure_sep.csv", &report::sep_csv(std::slice::from_ref(&sep)))?;
        self.writer.csv("compare.csv", &report::compare_csv(&rows))?;
        let summary = CompareSummary {
            map: self.map_summary(),
            difference: (pp.value - sep.value).abs(),
            max_row_difference: rows.iter().map(|r| r.difference).fold(0.0, f64::max),
            inequality_slack: report::INEQUALITY_SLACK,
            inequality_holds,
            rows,
            periodic: pp,
            separated: sep,
        };
        self.writer.json("compare.json", &summary)?;
        Ok(())
    }
}
