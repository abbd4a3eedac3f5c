use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use wealthca::analysis::{best_known_tps, brute_force_oracle, construct_optimal_odd, point_filled, structure_report};
use wealthca::ca::{run_ca_observed, CaConfig, CaStart, RunResult, Selection};
use wealthca::exec::with_jobs;
use wealthca::experiment::{run_experiment, ExperimentKind};
use wealthca::ga::{run_ga, GaConfig, GaOutcome};
use wealthca::payoff::{characteristic, expected_wealth_curve, payoff_map};
use wealthca::render::{render_ppm, RenderOptions};
use wealthca::templates::{builtin_set, extract_templates, RuleVariant, TemplateSet};
use wealthca::{Execution, Pattern, PayoffParams};

#[derive(Parser, Serialize)]
#[command(name = "wealthca", version, about = "Evolve wealth-optimal binary patterns on a torus")]
struct Cli {
    /// Seed for every random choice of this invocation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for `bench` and `oracle` (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Search for optimal patterns with the genetic algorithm.
    Ga(GaArgs),
    /// Run the template CA from a random or given start.
    Evolve(EvolveArgs),
    /// Extract the 3x3 templates of a pattern.
    Extract(ExtractArgs),
    /// Structure counts and characteristic of a pattern.
    Analyze(InputArgs),
    /// Build the optimal pattern for an odd side.
    Construct(ConstructArgs),
    /// Exhaustive optimum for sides 3, 4 and 5.
    Oracle(OracleArgs),
    /// Many seeded CA runs, summarized.
    Bench(BenchArgs),
    /// Expected wealth of a random field as a function of the cooperator share.
    ExpectedWealth(ExpectedWealthArgs),
    /// Write a pattern as a PPM image.
    Render(RenderArgs),
    /// Per-cell total payoffs as a CSV grid.
    PayoffMap(PayoffMapArgs),
    /// GA, extraction, CA and analysis chained on one size.
    Pipeline(PipelineArgs),
}

#[derive(Args, Serialize, Clone)]
struct GaArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 40)]
    pop: usize,
    #[arg(long, default_value_t = 0.2)]
    p1: f64,
    #[arg(long, default_value_t = 0.05)]
    p2: f64,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    /// Stop once the best TPS reaches this value.
    #[arg(long)]
    target: Option<f64>,
    /// Number of best patterns to write.
    #[arg(long, default_value_t = 1)]
    top: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SelectArg {
    Random,
    Sequential,
}

impl From<SelectArg> for Selection {
    fn from(s: SelectArg) -> Self {
        match s {
            SelectArg::Random => Selection::Random,
            SelectArg::Sequential => Selection::Sequential,
        }
    }
}

#[derive(Args, Serialize, Clone)]
struct CaArgs {
    /// Built-in rule: 8, 36 or 52.
    #[arg(long, default_value = "52", value_parser = parse_rule)]
    rule: RuleVariant,
    /// Template file to use instead of a built-in rule.
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    tlimit: usize,
    #[arg(long, default_value_t = 0.25)]
    init_density: f64,
    #[arg(long, value_enum, default_value_t = SelectArg::Random)]
    select: SelectArg,
    /// Probability that an unmatched 0-cell turns into 1.
    #[arg(long, default_value_t = 0.04)]
    pi01: f64,
    /// Probability that an unmatched 1-cell turns into 0.
    #[arg(long, default_value_t = 1.0)]
    pi10: f64,
    /// Keep running after the pattern becomes stable.
    #[arg(long)]
    no_stop: bool,
}

#[derive(Args, Serialize)]
struct EvolveArgs {
    /// Side of a random start. Ignored with `--init`.
    #[arg(long)]
    n: Option<usize>,
    /// Start pattern file.
    #[arg(long, conflicts_with = "n")]
    init: Option<PathBuf>,
    /// Write the pattern every k generations.
    #[arg(long)]
    dump_every: Option<usize>,
    #[command(flatten)]
    ca: CaArgs,
}

#[derive(Args, Serialize)]
struct ExtractArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file (default: templates.txt in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep only the windows that occur, without their symmetric images.
    #[arg(long)]
    no_complete: bool,
}

#[derive(Args, Serialize)]
struct InputArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args, Serialize)]
struct ConstructArgs {
    #[arg(long)]
    n: usize,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    #[arg(long)]
    n: usize,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Start every run from this pattern instead of a random field.
    #[arg(long, conflicts_with_all = ["n", "point_filled"])]
    init: Option<PathBuf>,
    /// Start every run from the point-filled field of side `--n`.
    #[arg(long)]
    point_filled: bool,
    /// TPS counted as optimal (default: best known for the side).
    #[arg(long)]
    optimum: Option<f64>,
    #[command(flatten)]
    ca: CaArgs,
}

#[derive(Args, Serialize)]
struct ExpectedWealthArgs {
    #[arg(long, default_value_t = 0.01)]
    step: f64,
}

#[derive(Args, Serialize)]
struct RenderArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file (default: pattern.ppm in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    scale: usize,
    /// Tile the pattern 2x2.
    #[arg(long)]
    quad: bool,
    #[arg(long)]
    mark_singularities: bool,
}

#[derive(Args, Serialize)]
struct PayoffMapArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file (default: payoff_map.csv in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RuleSource {
    /// The built-in rule given by `--rule`.
    Builtin,
    /// The templates extracted from the GA's best pattern.
    Extracted,
}

#[derive(Args, Serialize)]
struct PipelineArgs {
    #[arg(long)]
    n: usize,
    /// Use this master pattern instead of running the GA.
    #[arg(long)]
    master: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    pop: usize,
    #[arg(long, default_value_t = 0.2)]
    p1: f64,
    #[arg(long, default_value_t = 0.05)]
    p2: f64,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    #[arg(long)]
    target: Option<f64>,
    #[arg(long, value_enum, default_value_t = RuleSource::Extracted)]
    rule_from: RuleSource,
    #[arg(long)]
    no_complete: bool,
    #[command(flatten)]
    ca: CaArgs,
}

fn parse_rule(s: &str) -> Result<RuleVariant, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    params: &'a Command,
    seed: u64,
    jobs: Option<usize>,
    version: &'static str,
    timestamp: u64,
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Ga(_) => "ga",
        Command::Evolve(_) => "evolve",
        Command::Extract(_) => "extract",
        Command::Analyze(_) => "analyze",
        Command::Construct(_) => "construct",
        Command::Oracle(_) => "oracle",
        Command::Bench(_) => "bench",
        Command::ExpectedWealth(_) => "expected-wealth",
        Command::Render(_) => "render",
        Command::PayoffMap(_) => "payoff-map",
        Command::Pipeline(_) => "pipeline",
    }
}

struct Ctx<'a> {
    seed: u64,
    out_dir: &'a Path,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name);
        write_file(&path, bytes)?;
        Ok(path)
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        self.write(name, to_json(value)?)
    }
}

fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_pattern(path: &Path) -> Result<Pattern> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Pattern::parse(&text).with_context(|| format!("parsing pattern {}", path.display()))
}

fn load_templates(path: &Path) -> Result<TemplateSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    TemplateSet::parse(&text).with_context(|| format!("parsing templates {}", path.display()))
}

fn ga_config(pop: usize, p1: f64, p2: f64, iters: usize, target: Option<f64>, seed: u64) -> GaConfig {
    GaConfig {
        population_size: pop,
        p1,
        p2,
        max_iterations: iters,
        target_fitness: target,
        seed,
        params: PayoffParams::default(),
    }
}

fn ca_config(args: &CaArgs, templates: TemplateSet, seed: u64) -> CaConfig {
    CaConfig {
        pi_01: args.pi01,
        pi_10: args.pi10,
        selection: args.select.into(),
        init_density: args.init_density,
        t_limit: args.tlimit,
        seed,
        stop_when_stable: !args.no_stop,
        ..CaConfig::new(templates)
    }
}

fn rule_templates(args: &CaArgs) -> Result<TemplateSet> {
    match &args.templates {
        Some(path) => load_templates(path),
        None => Ok(builtin_set(args.rule)),
    }
}

fn ga_summary(out: &GaOutcome, n: usize) -> serde_json::Value {
    let best = out.best();
    json!({
        "n": n,
        "best_tps": best.fitness,
        "best_wealth": best.fitness / (9 * n * n) as f64,
        "iterations_used": out.iterations_used,
        "best_found_at": out.best_found_at,
        "seed": out.seed,
    })
}

fn cmd_ga(ctx: &Ctx, args: &GaArgs) -> Result<()> {
    let cfg = ga_config(args.pop, args.p1, args.p2, args.iters, args.target, ctx.seed);
    let out = run_ga(&cfg, args.n)?;
    for (k, sol) in out.population.iter().take(args.top.max(1)).enumerate() {
        ctx.write(&format!("ga_best_{}.txt", k + 1), sol.pattern.serialize())?;
    }
    let summary = ga_summary(&out, args.n);
    ctx.write_json("ga_summary.json", &summary)?;
    print!("{}", to_json(&summary)?);
    Ok(())
}

fn trace_csv(result: &RunResult) -> String {
    let mut csv = String::from("t,tps,wealth,stable\n");
    for g in &result.trace {
        csv.push_str(&format!("{},{},{:.6},{}\n", g.t, g.tps, g.wealth, g.stable as u8));
    }
    csv
}

fn evolve_summary(result: &RunResult, seed: u64) -> serde_json::Value {
    json!({
        "w_max": result.w_max,
        "tps_max": result.tps_max,
        "t_max": result.t_max,
        "stable": result.stable,
        "t_stable": result.t_stable,
        "tps_final": result.tps_final,
        "w_final": result.w_final,
        "generations": result.generations,
        "seed": seed,
    })
}

/// Runs the CA and writes its artifacts with file names starting `prefix`.
fn evolve(
    ctx: &Ctx,
    prefix: &str,
    cfg: &CaConfig,
    start: &CaStart,
    dump_every: Option<usize>,
) -> Result<(RunResult, serde_json::Value)> {
    let mut dumps = Vec::new();
    let result = run_ca_observed(cfg, start, |state, _| {
        if let Some(k) = dump_every.filter(|&k| k > 0) {
            if state.t % k == 0 {
                dumps.push((state.t, state.pattern.serialize()));
            }
        }
    })?;
    for (t, text) in dumps {
        ctx.write(&format!("{prefix}_gen_{t:06}.txt"), text)?;
    }
    ctx.write(&format!("{prefix}_final.txt"), result.final_pattern.serialize())?;
    ctx.write(&format!("{prefix}_best.txt"), result.best_pattern.serialize())?;
    ctx.write(&format!("{prefix}_trace.csv"), trace_csv(&result))?;
    let summary = evolve_summary(&result, cfg.seed);
    ctx.write_json(&format!("{prefix}_summary.json"), &summary)?;
    Ok((result, summary))
}

fn cmd_evolve(ctx: &Ctx, args: &EvolveArgs) -> Result<()> {
    let start = match (&args.init, args.n) {
        (Some(path), _) => CaStart::Pattern(load_pattern(path)?),
        (None, Some(n)) => CaStart::Random { n },
        (None, None) => bail!("evolve needs --n or --init"),
    };
    let cfg = ca_config(&args.ca, rule_templates(&args.ca)?, ctx.seed);
    let (_, summary) = evolve(ctx, "evolve", &cfg, &start, args.dump_every)?;
    print!("{}", to_json(&summary)?);
    Ok(())
}

fn cmd_extract(ctx: &Ctx, args: &ExtractArgs) -> Result<()> {
    let p = load_pattern(&args.input)?;
    let set = extract_templates(&p, !args.no_complete);
    let out = args.out.clone().unwrap_or_else(|| ctx.path("templates.txt"));
    write_file(&out, set.serialize())?;
    println!("{} templates -> {}", set.len(), out.display());
    Ok(())
}

fn analysis_json(p: &Pattern) -> serde_json::Value {
    json!({
        "structure": structure_report(p),
        "characteristic": characteristic(p, &PayoffParams::default()),
    })
}

fn cmd_analyze(ctx: &Ctx, args: &InputArgs) -> Result<()> {
    let report = analysis_json(&load_pattern(&args.input)?);
    ctx.write_json("analysis.json", &report)?;
    print!("{}", to_json(&report)?);
    Ok(())
}

fn cmd_construct(ctx: &Ctx, args: &ConstructArgs) -> Result<()> {
    let text = construct_optimal_odd(args.n)?.serialize();
    ctx.write(&format!("construct_{}.txt", args.n), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_oracle(ctx: &Ctx, args: &OracleArgs) -> Result<()> {
    let result = brute_force_oracle(args.n, &PayoffParams::default(), args.n == 5, Execution::Parallel)?;
    let reps: Vec<Vec<String>> = result
        .representatives
        .iter()
        .map(|p| p.serialize().lines().map(str::to_string).collect())
        .collect();
    let out = json!({
        "n": result.n,
        "max_tps": result.max_tps,
        "n_optima": result.n_optima,
        "representatives": reps,
    });
    ctx.write_json("oracle.json", &out)?;
    print!("{}", to_json(&out)?);
    Ok(())
}

fn cmd_bench(ctx: &Ctx, args: &BenchArgs) -> Result<()> {
    let start = match (&args.init, args.n) {
        (Some(path), _) => CaStart::Pattern(load_pattern(path)?),
        (None, Some(n)) if args.point_filled => CaStart::Pattern(point_filled(n)?),
        (None, Some(n)) => CaStart::Random { n },
        (None, None) => bail!("bench needs --n or --init"),
    };
    let n = match &start {
        CaStart::Random { n } => *n,
        CaStart::Pattern(p) => p.n(),
    };
    let optimum = args.optimum.or_else(|| best_known_tps(n).map(|t| t as f64));
    let kind = ExperimentKind::Ca {
        cfg: ca_config(&args.ca, rule_templates(&args.ca)?, ctx.seed),
        start,
    };
    let summary = run_experiment(&kind, args.runs, ctx.seed, optimum, Execution::Parallel)?;
    ctx.write_json("bench_summary.json", &summary)?;
    ctx.write("bench_histogram.csv", summary.histogram_csv())?;
    print!("{}", summary.histogram_csv());
    println!(
        "runs {} optimal {} stable {} W avrg {:.4} t avrg {:.1}",
        summary.n_runs,
        summary.n_opt_found.map_or("-".to_string(), |k| k.to_string()),
        summary.n_stable,
        summary.w_max_avrg,
        summary.t_avrg
    );
    Ok(())
}

fn cmd_expected_wealth(ctx: &Ctx, args: &ExpectedWealthArgs) -> Result<()> {
    let curve = expected_wealth_curve(args.step, &PayoffParams::default())?;
    let decimals = (0..=9)
        .find(|&d| {
            let scaled = args.step * 10f64.powi(d);
            (scaled - scaled.round()).abs() < 1e-9
        })
        .unwrap_or(9) as usize;
    let mut csv = String::from("pi_C,W\n");
    for (pi, w) in curve {
        csv.push_str(&format!("{pi:.decimals$},{w:.6}\n"));
    }
    ctx.write("expected_wealth.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_render(ctx: &Ctx, args: &RenderArgs) -> Result<()> {
    let p = load_pattern(&args.input)?;
    let opts = RenderOptions {
        scale: args.scale,
        quad: args.quad,
        mark_singularities: args.mark_singularities,
    };
    let out = args.out.clone().unwrap_or_else(|| ctx.path("pattern.ppm"));
    write_file(&out, render_ppm(&p, &opts))?;
    println!("{}", out.display());
    Ok(())
}

fn cmd_payoff_map(ctx: &Ctx, args: &PayoffMapArgs) -> Result<()> {
    let p = load_pattern(&args.input)?;
    let params = PayoffParams::default();
    let values = payoff_map(&p, &params);
    let mut csv = String::new();
    for row in values.chunks(p.n()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let out = args.out.clone().unwrap_or_else(|| ctx.path("payoff_map.csv"));
    write_file(&out, &csv)?;
    print!("{csv}");
    Ok(())
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.with_context(|| format!("pipeline stage {name}"))
}

fn cmd_pipeline(ctx: &Ctx, args: &PipelineArgs) -> Result<()> {
    let master = stage(
        "ga",
        match &args.master {
            Some(path) => load_pattern(path).map(|p| (p, None)),
            None => {
                let cfg = ga_config(args.pop, args.p1, args.p2, args.iters, args.target, ctx.seed);
                run_ga(&cfg, args.n)
                    .map(|out| (out.best().pattern.clone(), Some(ga_summary(&out, args.n))))
                    .map_err(Into::into)
            }
        },
    )?;
    let (master, ga) = master;
    stage("ga", ctx.write("pipeline_master.txt", master.serialize()))?;

    let extracted = extract_templates(&master, !args.no_complete);
    stage("extract", ctx.write("pipeline_templates.txt", extracted.serialize()))?;

    let templates = match args.rule_from {
        RuleSource::Extracted => extracted.clone(),
        RuleSource::Builtin => stage("evolve", rule_templates(&args.ca))?,
    };
    let cfg = ca_config(&args.ca, templates, ctx.seed);
    let (result, evolved) = stage(
        "evolve",
        evolve(ctx, "pipeline", &cfg, &CaStart::Random { n: master.n() }, None),
    )?;

    let analysis = analysis_json(&result.best_pattern);
    stage("analyze", ctx.write_json("pipeline_analysis.json", &analysis))?;

    let summary = json!({
        "ga": ga,
        "templates": extracted.len(),
        "evolve": evolved,
        "analysis": analysis,
    });
    ctx.write_json("pipeline_summary.json", &summary)?;
    print!("{}", to_json(&summary)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: &cli.out_dir,
    };
    match &cli.command {
        Command::Ga(a) => cmd_ga(&ctx, a),
        Command::Evolve(a) => cmd_evolve(&ctx, a),
        Command::Extract(a) => cmd_extract(&ctx, a),
        Command::Analyze(a) => cmd_analyze(&ctx, a),
        Command::Construct(a) => cmd_construct(&ctx, a),
        Command::Oracle(a) => cmd_oracle(&ctx, a),
        Command::Bench(a) => cmd_bench(&ctx, a),
        Command::ExpectedWealth(a) => cmd_expected_wealth(&ctx, a),
        Command::Render(a) => cmd_render(&ctx, a),
        Command::PayoffMap(a) => cmd_payoff_map(&ctx, a),
        Command::Pipeline(a) => cmd_pipeline(&ctx, a),
    }?;
    let name = subcommand_name(&cli.command);
    let manifest = RunManifest {
        subcommand: name,
        params: &cli.command,
        seed: cli.seed,
        jobs: cli.jobs,
        version: env!("CARGO_PKG_VERSION"),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    ctx.write_json(&format!("{name}.manifest.json"), &manifest)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_jobs(cli.jobs.unwrap_or(0), || run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("{}", json!({ "error": format!("{e:#}"), "causes": chain }));
            ExitCode::FAILURE
        }
    }
}
