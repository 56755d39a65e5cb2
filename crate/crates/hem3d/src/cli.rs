//! The `hem3d` command line: generate, optimize, evaluate, select, plot.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hem3d_core::arch::{build_design, Design};
use hem3d_core::objectives::{EvalContext, Mode, ObjectiveVector};
use hem3d_core::optimizer::{amosa, moo_stage, Evaluated, IterationRecord, Observer, Problem, SearchOutcome};
use hem3d_core::routing::compute_routes;
use hem3d_core::selector::select_from_archive;
use hem3d_core::traffic::{synth_many_to_few, PowerProfile, TrafficProfile};

use crate::config::{OptimizerKind, Overrides, ProfileConfig, RunConfig};
use crate::formats::{
    design_from_json, design_to_json, profile_from_json, profile_to_json, read_bars_csv, runlog_from_jsonl,
    runlog_to_jsonl, to_json, write_metrics_csv, write_routes_csv, ArchiveDoc, DesignDoc, RunLogRecord,
};
use crate::plot::{bar_chart, xy_chart, Series};

/// Why a command failed; decides the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration (exit 1).
    Usage(anyhow::Error),
    /// Failure while running: I/O, malformed inputs, model errors (exit 2).
    Runtime(anyhow::Error),
    /// PT selection found no design under the threshold (exit 3).
    Infeasible,
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Infeasible => 3,
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

trait Classify<T> {
    fn usage(self) -> CmdResult<T>;
    fn runtime(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn runtime(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Po,
    Pt,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Po => Mode::Po,
            ModeArg::Pt => Mode::Pt,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hem3d", version, about = "Design-space exploration for heterogeneous 3D manycore chips")]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SharedArgs {
    /// Run configuration (JSON); flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for design generation, synthetic profiles and the search.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// `m3d`, `tsv`, or a technology JSON file.
    #[arg(long, global = true, value_name = "m3d|tsv|PATH")]
    pub tech: Option<String>,
    /// Objective set: performance only, or performance plus temperature.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Peak-temperature threshold (°C) for PT selection.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tth: Option<f64>,
    /// Search engine.
    #[arg(long, global = true, value_enum)]
    pub optimizer: Option<OptimizerKind>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the initial design.json and, for synthetic profiles, profile.json.
    Generate,
    /// Search the design space; writes pareto.json, runlog.jsonl and metrics.csv.
    Optimize(OptimizeArgs),
    /// Print the objective vector of one design.
    Evaluate(EvaluateArgs),
    /// Pick the final design from pareto.json; writes selected.json.
    Select(SelectArgs),
    /// Render SVG charts from run artifacts.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Initial design (default: generated from the configuration).
    #[arg(long, value_name = "PATH")]
    pub design: Option<PathBuf>,
    /// Traffic/power profile (default: from the configuration).
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
    /// Objective-evaluation budget for either optimizer.
    #[arg(long, value_name = "N")]
    pub budget: Option<usize>,
    /// Write wall_ms = 0 in the run log so repeated runs are byte-identical.
    #[arg(long)]
    pub no_wall_clock: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    pub design: PathBuf,
    /// Traffic/power profile (default: from the configuration).
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
    /// Also dump every route to this CSV file.
    #[arg(long, value_name = "PATH")]
    pub routes: Option<PathBuf>,
    /// Print a metrics CSV row instead of JSON.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Archive to select from (default: OUT/pareto.json).
    #[arg(long, value_name = "PATH")]
    pub pareto: Option<PathBuf>,
    /// External execution times, CSV `design_id,et_seconds[,temp_c]`.
    #[arg(long, value_name = "PATH")]
    pub et: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Archive for the front projections.
    #[arg(long, value_name = "PATH")]
    pub pareto: Option<PathBuf>,
    /// Run log for the convergence chart, optionally `LABEL=PATH`; repeatable.
    #[arg(long, value_name = "[LABEL=]PATH")]
    pub runlog: Vec<String>,
    /// Bar-chart table, CSV `benchmark,variant,temp_c,et_norm`.
    #[arg(long, value_name = "PATH")]
    pub bars: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Usage(e) => eprintln!("error: {e:#}"),
                Failure::Runtime(e) => eprintln!("error: {e:#}"),
                Failure::Infeasible => eprintln!("warning: no archived design is below the temperature threshold"),
            }
            f.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CmdResult {
    let mut cfg = match &cli.shared.config {
        Some(p) => RunConfig::load(p).usage()?,
        None => RunConfig::default(),
    };
    let s = &cli.shared;
    cfg.apply(&Overrides {
        seed: s.seed,
        out: s.out.clone(),
        tech: s.tech.clone(),
        mode: s.mode.map(Mode::from),
        t_th: s.tth,
        optimizer: s.optimizer,
    });
    if let Command::Optimize(a) = &cli.command {
        if let Some(b) = a.budget {
            cfg.stage.max_evaluations = Some(b);
            cfg.amosa.max_evaluations = b;
        }
    }
    cfg.validate().usage()?;
    cfg.technology().usage()?;
    match cli.command {
        Command::Generate => generate(&cfg),
        Command::Optimize(a) => optimize(&cfg, &a),
        Command::Evaluate(a) => evaluate(&cfg, &a),
        Command::Select(a) => select(&cfg, &a),
        Command::Plot(a) => plot(&cfg, &a),
    }
}

fn write(path: &Path, contents: &str) -> CmdResult {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).runtime()?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display())).runtime()
}

fn read(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).runtime()
}

fn initial_design(cfg: &RunConfig, path: Option<&Path>) -> CmdResult<Design> {
    let design = match path {
        Some(p) => design_from_json(&read(p)?).with_context(|| format!("in {}", p.display())).runtime()?,
        None => {
            let tech = cfg.technology().usage()?;
            build_design(&cfg.design_spec().usage()?, &tech, cfg.seed).runtime()?
        }
    };
    design.validate(cfg.max_degree).map_err(|v| anyhow!("initial design is invalid: {v}")).runtime()?;
    Ok(design)
}

fn load_profile(cfg: &RunConfig, design: &Design, path: Option<&Path>) -> CmdResult<(TrafficProfile, PowerProfile)> {
    let from_file = |p: &Path| -> CmdResult<_> {
        profile_from_json(&read(p)?).with_context(|| format!("in {}", p.display())).runtime()
    };
    let (t, p) = match (path, &cfg.profile) {
        (Some(p), _) => from_file(p)?,
        (None, ProfileConfig::File(p)) => from_file(p)?,
        (None, ProfileConfig::Synthetic(_)) => {
            synth_many_to_few(design, &cfg.synth_params().expect("synthetic profile")).runtime()?
        }
    };
    t.check_design(design).context("profile does not match the design").runtime()?;
    p.check_design(design).context("profile does not match the design").runtime()?;
    Ok((t, p))
}

fn context(cfg: &RunConfig, traffic: TrafficProfile, power: PowerProfile) -> CmdResult<EvalContext> {
    let mut ctx = EvalContext::new(cfg.technology().usage()?, traffic, power, cfg.mode);
    ctx.ambient = cfg.ambient_c;
    Ok(ctx)
}

pub fn generate(cfg: &RunConfig) -> CmdResult {
    let design = initial_design(cfg, None)?;
    let path = cfg.out.join("design.json");
    write(&path, &design_to_json(&design).runtime()?)?;
    println!("wrote {}", path.display());
    if let Some(params) = cfg.synth_params() {
        let (t, p) = synth_many_to_few(&design, &params).runtime()?;
        let path = cfg.out.join("profile.json");
        write(&path, &profile_to_json(&t, &p).runtime()?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Collects run-log records as the search reports iterations.
struct RunLogger {
    start: Instant,
    wall_clock: bool,
    records: Vec<RunLogRecord>,
}

impl Observer for RunLogger {
    fn evaluated(&mut self, _e: &Evaluated) {}

    fn iteration(&mut self, r: &IterationRecord) {
        let ms = if self.wall_clock { self.start.elapsed().as_millis() as u64 } else { 0 };
        self.records.push(RunLogRecord::new(r, ms));
    }
}

pub fn optimize(cfg: &RunConfig, args: &OptimizeArgs) -> CmdResult {
    let design = initial_design(cfg, args.design.as_deref())?;
    let (traffic, power) = load_profile(cfg, &design, args.profile.as_deref())?;
    let ctx = context(cfg, traffic, power)?;
    let problem =
        Problem::with_reference_samples(ctx, cfg.search_space(), design.clone(), cfg.seed, cfg.reference_samples)
            .runtime()?;
    let mut logger = RunLogger { start: Instant::now(), wall_clock: !args.no_wall_clock, records: Vec::new() };
    let outcome: SearchOutcome = match cfg.optimizer {
        OptimizerKind::Stage => moo_stage(&problem, &design, &cfg.stage_config(), &mut logger),
        OptimizerKind::Amosa => amosa(&problem, &design, &cfg.amosa_config(), &mut logger),
    }
    .runtime()?;

    let doc = ArchiveDoc::from_entries(outcome.archive.reference(), outcome.archive.entries());
    write(&cfg.out.join("pareto.json"), &to_json(&doc).runtime()?)?;
    write(&cfg.out.join("runlog.jsonl"), &runlog_to_jsonl(&logger.records).runtime()?)?;
    let rows: Vec<(usize, ObjectiveVector)> = doc
        .entries
        .iter()
        .map(|e| (e.design_id, ObjectiveVector::from_slice(&e.objectives).expect("3 or 4 objectives")))
        .collect();
    let mut csv = Vec::new();
    write_metrics_csv(&mut csv, &rows).runtime()?;
    write(&cfg.out.join("metrics.csv"), &String::from_utf8(csv).expect("CSV is UTF-8"))?;
    println!(
        "optimizer={} mode={} evaluations={} archive={} phv={}",
        match cfg.optimizer {
            OptimizerKind::Stage => "stage",
            OptimizerKind::Amosa => "amosa",
        },
        cfg.mode,
        outcome.evaluations,
        outcome.archive.len(),
        outcome.archive.normalized_hypervolume()
    );
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, args: &EvaluateArgs) -> CmdResult {
    let design = initial_design(cfg, Some(&args.design))?;
    let (traffic, power) = load_profile(cfg, &design, args.profile.as_deref())?;
    // a single evaluation always reports the temperature, whatever the mode
    let mut ctx = context(cfg, traffic, power)?;
    ctx.mode = Mode::Pt;
    let table = compute_routes(&design, &ctx.tech).runtime()?;
    let v = ctx.evaluate_with_routes(&design, &table).runtime()?;
    if let Some(path) = &args.routes {
        let mut buf = Vec::new();
        write_routes_csv(&mut buf, &table).runtime()?;
        write(path, &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    }
    if args.csv {
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[(0, v)]).runtime()?;
        print!("{}", String::from_utf8(buf).expect("CSV is UTF-8"));
    } else {
        let json = serde_json::json!({ "lat": v.lat, "u_mean": v.u_mean, "u_std": v.u_std, "temp": v.temp });
        println!("{json}");
    }
    Ok(())
}

pub fn select(cfg: &RunConfig, args: &SelectArgs) -> CmdResult {
    let path = args.pareto.clone().unwrap_or_else(|| cfg.out.join("pareto.json"));
    let doc = ArchiveDoc::parse(&read(&path)?).with_context(|| format!("in {}", path.display())).runtime()?;
    let entries = doc.core_entries().runtime()?;
    let source = match &args.et {
        Some(p) => {
            let mut c = cfg.clone();
            c.et = crate::config::EtConfig::External(p.clone());
            c.et_source().runtime()?
        }
        None => cfg.et_source().runtime()?,
    };
    let pick = select_from_archive(&entries, &doc.reference, cfg.mode, cfg.t_th, &source).runtime()?;
    let entry = entries.iter().find(|e| e.id == pick.id).expect("selected id is archived");
    let design = entry
        .item
        .as_ref()
        .ok_or_else(|| anyhow!("archive entry {} carries no design", entry.id))
        .runtime()?;
    let out = cfg.out.join("selected.json");
    write(&out, &to_json(&DesignDoc::from_design(design)).runtime()?)?;
    let objectives: Vec<String> = entry.objectives.iter().map(|x| x.to_string()).collect();
    println!("design_id={} feasible={} objectives=[{}]", pick.id, pick.feasible, objectives.join(","));
    if pick.feasible {
        Ok(())
    } else {
        Err(Failure::Infeasible)
    }
}

fn parse_runlog_arg(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let label = path
                .parent()
                .and_then(|p| p.file_name())
                .or_else(|| path.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (label, path)
        }
    }
}

pub fn plot(cfg: &RunConfig, args: &PlotArgs) -> CmdResult {
    let mut pareto = args.pareto.clone();
    let mut runlogs: Vec<String> = args.runlog.clone();
    if pareto.is_none() && runlogs.is_empty() && args.bars.is_none() {
        let (p, r) = (cfg.out.join("pareto.json"), cfg.out.join("runlog.jsonl"));
        if p.is_file() {
            pareto = Some(p);
        }
        if r.is_file() {
            runlogs.push(r.to_string_lossy().into_owned());
        }
        if pareto.is_none() && runlogs.is_empty() {
            return Err(Failure::Usage(anyhow!("nothing to plot: pass --pareto, --runlog or --bars")));
        }
    }
    let mut written = Vec::new();
    if let Some(path) = &pareto {
        let doc = ArchiveDoc::parse(&read(path)?).with_context(|| format!("in {}", path.display())).runtime()?;
        let pts = |k: usize| -> Vec<(f64, f64)> {
            doc.entries.iter().filter(|e| e.objectives.len() > k).map(|e| (e.objectives[0], e.objectives[k])).collect()
        };
        let a = xy_chart("Pareto front: latency vs link-load spread", "latency", "u_std", &[Series::new("front", pts(2))], false);
        let b = xy_chart("Pareto front: latency vs peak temperature", "latency", "temperature (°C)", &[Series::new("front", pts(3))], false);
        written.push(("front_lat_ustd.svg", a));
        written.push(("front_lat_temp.svg", b));
    }
    if !runlogs.is_empty() {
        let mut series = Vec::new();
        for arg in &runlogs {
            let (label, path) = parse_runlog_arg(arg);
            let records = runlog_from_jsonl(&read(&path)?).with_context(|| format!("in {}", path.display())).runtime()?;
            series.push(Series::new(label, records.iter().map(|r| (r.evals_so_far as f64, r.global_phv)).collect()));
        }
        written.push(("convergence.svg", xy_chart("PHV vs objective evaluations", "evaluations", "normalised PHV", &series, true)));
    }
    if let Some(path) = &args.bars {
        let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display())).runtime()?;
        let rows = read_bars_csv(file).with_context(|| format!("in {}", path.display())).runtime()?;
        let mut cats: Vec<String> = Vec::new();
        let mut vars: Vec<String> = Vec::new();
        for r in &rows {
            if !cats.contains(&r.benchmark) {
                cats.push(r.benchmark.clone());
            }
            if !vars.contains(&r.variant) {
                vars.push(r.variant.clone());
            }
        }
        let find = |c: usize, v: usize| rows.iter().find(|r| r.benchmark == cats[c] && r.variant == vars[v]);
        let temp = bar_chart("Peak temperature", "temperature (°C)", &cats, &vars, |c, v| find(c, v).map(|r| r.temp_c));
        let et = bar_chart("Normalised execution time", "ET (normalised)", &cats, &vars, |c, v| find(c, v).map(|r| r.et_norm));
        written.push(("bars_temp.svg", temp));
        written.push(("bars_et.svg", et));
    }
    if written.is_empty() {
        return Err(Failure::Usage(anyhow!("nothing to plot")));
    }
    for (name, svg) in written {
        let path = cfg.out.join(name);
        write(&path, &svg)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
