//! Command implementations behind the `memroute` binary.
//!
//! Each command resolves its settings from an optional TOML file and then
//! applies command-line flags on top. Every command that writes files also
//! writes a `manifest.json` holding the resolved configuration and the
//! SHA-256 of every input and output.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use memroute::config::AppConfig;
use memroute::eval::{
    ablate, evaluate, sweep_lambda, write_report_csv, write_sweep_csv, AblationReport, Analytic, AnswererChoice,
    EvalOptions, EvalReport, SplitChoice, SweepRow,
};
use memroute::io::{read_dataset, read_json, write_dataset, write_json, LoadedDataset, Manifest, MANIFEST_FILE};
use memroute::policy::{AccuracyModel, BENCH_POLICIES};
use memroute::synthgen::{generate_dataset, Dataset, GeneratorConfig};
use memroute::tokenize::TokenizerRegistry;
use memroute::{Error, QueryType, Regime, Result};
use serde::Serialize;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const ABLATION_JSON: &str = "ablation.json";
pub const ABLATION_CSV: &str = "ablation.csv";

#[derive(Debug, Parser)]
#[command(name = "memroute", version, about = "Memory-store routing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: RunConfig,
}

/// One variant per command, holding its flags as given on the command line.
#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunConfig {
    /// Generate a synthetic query set and memory corpus.
    Generate(GenerateArgs),
    /// Evaluate routing policies on one or more datasets.
    Eval(EvalArgs),
    /// Evaluate the full twelve-policy bench.
    Bench(EvalArgs),
    /// Sweep the cost weight of the cost-sensitive policy.
    SweepLambda(SweepArgs),
    /// Coverage of the three router feature variants.
    Ablate(AblateArgs),
    /// Print a table from an eval output directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub regime: Option<Regime>,
    /// Type weights, e.g. `temporal=1` or `single_hop=2,multi_hop=1`.
    #[arg(long)]
    pub mix: Option<String>,
    /// Fraction of queries assigned to the train split.
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub distractor_rate: Option<f64>,
    #[arg(long)]
    pub paraphrase_rate: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswererArg {
    #[default]
    Oracle,
    Noisy,
    External,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Dataset directory; repeat to pool several.
    #[arg(long = "data", required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated policy names. Ignored by `bench`.
    #[arg(long, default_value = "oracle,uniform,hybrid,rules")]
    pub policies: String,
    #[arg(long, value_enum, default_value_t = AnswererArg::Oracle)]
    pub answerer: AnswererArg,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub answer_seed: u64,
    /// Policy the other rows are compared against.
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap_iterations: usize,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "test")]
    pub split: SplitChoice,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long = "data", required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated list, or `start:stop:step`.
    #[arg(long, default_value = "0:10:0.5")]
    pub lambdas: String,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value = "all")]
    pub split: SplitChoice,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AblateArgs {
    #[arg(long = "data", required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "all")]
    pub split: SplitChoice,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Output directory of an `eval` or `bench` run.
    pub dir: PathBuf,
}

pub fn run(cmd: &RunConfig) -> Result<String> {
    match cmd {
        RunConfig::Generate(a) => cmd_generate(a).map(|(_, s)| s),
        RunConfig::Eval(a) => cmd_eval(a, false).map(|r| render_report(&r)),
        RunConfig::Bench(a) => cmd_eval(a, true).map(|r| render_report(&r)),
        RunConfig::SweepLambda(a) => cmd_sweep_lambda(a).map(|rows| render_sweep(&rows)),
        RunConfig::Ablate(a) => cmd_ablate(a).map(|r| render_ablation(&r)),
        RunConfig::Report(a) => cmd_report(&a.dir),
    }
}

fn load_config(path: Option<&Path>) -> Result<AppConfig> {
    match path {
        Some(p) => AppConfig::load(p),
        None => Ok(AppConfig::default()),
    }
}

#[derive(Serialize)]
struct Resolved<'a, A: Serialize> {
    args: &'a A,
    config: &'a AppConfig,
}

/// Generator settings from the config file with flags applied.
pub fn resolve_generator(args: &GenerateArgs) -> Result<GeneratorConfig> {
    let mut g = load_config(args.config.as_deref())?.generator;
    if let Some(n) = args.n {
        g.n_queries = n;
    }
    if let Some(s) = args.seed {
        g.seed = s;
    }
    if let Some(r) = args.regime {
        g.regime = r;
    }
    if let Some(m) = &args.mix {
        g.type_mix = GeneratorConfig::parse_mix(m)?;
    }
    if let Some(s) = args.split {
        g.split_ratio = s;
    }
    if let Some(d) = args.distractor_rate {
        g.distractor_rate = d;
    }
    if let Some(p) = args.paraphrase_rate {
        g.paraphrase_rate = p;
    }
    g.validate()?;
    Ok(g)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(Dataset, String)> {
    let cfg = resolve_generator(args)?;
    let ds = generate_dataset(&cfg)?;
    write_dataset(&args.out, &ds, &cfg)?;
    let mut summary = format!(
        "wrote {} queries ({} train, {} test), {} memory items to {}\n",
        ds.queries.len(),
        ds.split.train.len(),
        ds.split.test.len(),
        ds.corpus.items.len(),
        args.out.display()
    );
    for t in QueryType::ALL {
        let n = ds.queries.iter().filter(|q| q.query_type == t).count();
        if n > 0 {
            summary.push_str(&format!("  {:<16} {n}\n", t.to_string()));
        }
    }
    Ok((ds, summary))
}

fn load_all(dirs: &[PathBuf], manifest: &mut Manifest) -> Result<Vec<LoadedDataset>> {
    let mut out = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let loaded = read_dataset(dir)?;
        manifest.add_input(&dir.join(MANIFEST_FILE))?;
        for name in loaded.manifest.outputs.keys() {
            manifest.add_input(&dir.join(name))?;
        }
        out.push(loaded);
    }
    Ok(out)
}

/// Mix-based expectation, available when every dataset records the same mix.
fn shared_mix_analytic(loaded: &[LoadedDataset], app: &AppConfig) -> Result<Option<Analytic>> {
    let mixes: Vec<_> = loaded.iter().map(|l| l.generator_config().map(|g| g.type_mix)).collect();
    let Some(Some(first)) = mixes.first() else {
        return Ok(None);
    };
    if mixes.iter().any(|m| m.as_ref() != Some(first)) {
        return Ok(None);
    }
    Ok(Analytic::from_mix(first, &app.cost.model()?))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_eval(args: &EvalArgs, bench: bool) -> Result<EvalReport> {
    let app = load_config(args.config.as_deref())?;
    let policies = if bench {
        app.policies(&BENCH_POLICIES.join(","))?
    } else {
        app.policies(&args.policies)?
    };
    let answerer = match args.answerer {
        AnswererArg::Oracle => AnswererChoice::Oracle,
        AnswererArg::Noisy => AnswererChoice::Noisy {
            noise: args.noise,
            seed: args.answer_seed,
        },
        AnswererArg::External => AnswererChoice::External(app.external.clone()),
    };
    let command = if bench { "bench" } else { "eval" };
    let mut manifest = Manifest::new(command, &Resolved { args, config: &app }, Some(args.seed))?;
    let loaded = load_all(&args.data, &mut manifest)?;
    let datasets: Vec<Dataset> = loaded.iter().map(|l| l.dataset.clone()).collect();
    let tokenizer = TokenizerRegistry::new().get(&app.cost.tokenizer)?;
    let opts = EvalOptions {
        policies,
        answerer,
        baseline: args.baseline.clone(),
        bootstrap_iterations: args.bootstrap_iterations,
        bootstrap_seed: args.seed,
        split: args.split,
    };
    let mut report = evaluate(&datasets, &app.router()?, tokenizer.as_ref(), &opts)?;
    report.analytic_mix = shared_mix_analytic(&loaded, &app)?;

    create_dir(&args.out)?;
    write_json(&args.out.join(REPORT_JSON), &report)?;
    write_report_csv(&args.out.join(REPORT_CSV), &report)?;
    manifest.add_output(&args.out, REPORT_JSON)?;
    manifest.add_output(&args.out, REPORT_CSV)?;
    manifest.write(&args.out)?;
    Ok(report)
}

/// Accepts `0,0.5,1` or an inclusive `start:stop:step` range.
pub fn parse_lambdas(s: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::Config(format!("invalid lambda list `{s}`: {what}"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad(x.trim()));
    let parts: Vec<&str> = s.split(':').collect();
    let out = match parts.as_slice() {
        [list] => list.split(',').filter(|x| !x.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?,
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(bad("range needs step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=count).map(|i| start + i as f64 * step).collect()
        }
        _ => return Err(bad("expected a list or start:stop:step")),
    };
    if out.is_empty() {
        return Err(bad("no values"));
    }
    Ok(out)
}

pub fn cmd_sweep_lambda(args: &SweepArgs) -> Result<Vec<SweepRow>> {
    let app = load_config(args.config.as_deref())?;
    let lambdas = parse_lambdas(&args.lambdas)?;
    let base = app.accuracy;
    let acc = AccuracyModel::new(
        args.alpha.unwrap_or(base.alpha),
        args.beta.unwrap_or(base.beta),
        args.gamma.unwrap_or(base.gamma),
    )?;
    let mut manifest = Manifest::new("sweep-lambda", &Resolved { args, config: &app }, None)?;
    let loaded = load_all(&args.data, &mut manifest)?;
    let datasets: Vec<Dataset> = loaded.into_iter().map(|l| l.dataset).collect();
    let tokenizer = TokenizerRegistry::new().get(&app.cost.tokenizer)?;
    let rows = sweep_lambda(&datasets, args.split, &lambdas, &acc, &app.cost.model()?, tokenizer.as_ref())?;
    create_dir(&args.out)?;
    write_sweep_csv(&args.out.join(SWEEP_CSV), &rows)?;
    manifest.add_output(&args.out, SWEEP_CSV)?;
    manifest.write(&args.out)?;
    Ok(rows)
}

fn write_ablation_csv(path: &Path, report: &AblationReport) -> Result<()> {
    let mut text = String::from("variant,coverage");
    for t in QueryType::ALL {
        text.push_str(&format!(",{t}"));
    }
    text.push('\n');
    for row in &report.rows {
        text.push_str(&format!("{},{}", row.variant, row.coverage));
        for t in QueryType::ALL {
            match row.per_type.get(&t) {
                Some(c) => text.push_str(&format!(",{c}")),
                None => text.push(','),
            }
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<AblationReport> {
    let app = load_config(args.config.as_deref())?;
    let mut manifest = Manifest::new("ablate", &Resolved { args, config: &app }, None)?;
    let loaded = load_all(&args.data, &mut manifest)?;
    let datasets: Vec<Dataset> = loaded.into_iter().map(|l| l.dataset).collect();
    let report = ablate(&datasets, args.split, &app.router()?)?;
    create_dir(&args.out)?;
    write_json(&args.out.join(ABLATION_JSON), &report)?;
    write_ablation_csv(&args.out.join(ABLATION_CSV), &report)?;
    manifest.add_output(&args.out, ABLATION_JSON)?;
    manifest.add_output(&args.out, ABLATION_CSV)?;
    manifest.write(&args.out)?;
    Ok(report)
}

const TABLE_HEADER: &str = "policy               coverage  exact  waste  tokens    cost   qa_acc";

fn table_line(policy: &str, m: &serde_json::Value) -> String {
    let f = |k: &str| m[k].as_f64().unwrap_or(f64::NAN);
    format!(
        "{policy:<20} {:>8.3} {:>6.3} {:>6.3} {:>7.1} {:>7.3} {:>8.3}",
        f("coverage"),
        f("exact_match"),
        f("waste"),
        f("mean_tokens"),
        f("mean_access_cost"),
        f("qa_accuracy")
    )
}

fn render_value(report: &serde_json::Value) -> String {
    let mut out = format!(
        "answerer: {}  split: {}  queries: {}\n{TABLE_HEADER}\n",
        report["answerer"].as_str().unwrap_or("?"),
        report["split"].as_str().unwrap_or("?"),
        report["n_queries"]
    );
    for row in report["rows"].as_array().into_iter().flatten() {
        out.push_str(&table_line(row["policy"].as_str().unwrap_or("?"), row));
        out.push('\n');
    }
    let comparisons = report["comparisons"].as_array().cloned().unwrap_or_default();
    if !comparisons.is_empty() {
        out.push_str("\npolicy               vs baseline         delta   ci_low  ci_high  sig\n");
        for c in comparisons {
            let f = |k: &str| c[k].as_f64().unwrap_or(f64::NAN);
            out.push_str(&format!(
                "{:<20} {:<18} {:>6.3} {:>8.3} {:>8.3}  {}\n",
                c["policy"].as_str().unwrap_or("?"),
                c["baseline"].as_str().unwrap_or("?"),
                f("delta"),
                f("ci_low"),
                f("ci_high"),
                if c["significant"].as_bool() == Some(true) { "*" } else { "" }
            ));
        }
    }
    out
}

pub fn render_report(report: &EvalReport) -> String {
    match serde_json::to_value(report) {
        Ok(v) => render_value(&v),
        Err(e) => format!("cannot render report: {e}\n"),
    }
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda   cost  stores  est_acc  objective  oracle_acc\n");
    for r in rows {
        out.push_str(&format!(
            "{:>6.3} {:>6.3} {:>7.3} {:>8.3} {:>10.3} {:>11.3}\n",
            r.lambda, r.mean_access_cost, r.mean_stores, r.mean_estimated_accuracy, r.mean_objective, r.oracle_accuracy
        ));
    }
    out
}

pub fn render_ablation(r: &AblationReport) -> String {
    let mut out = format!("queries: {}\n", r.n_queries);
    for row in &r.rows {
        out.push_str(&format!("{:<12} {:.3}\n", row.variant, row.coverage));
    }
    out.push_str(&format!(
        "semantic delta {:+.3}, similarity delta {:+.3}\n",
        r.semantic_delta, r.similarity_delta
    ));
    out
}

/// Re-renders the table stored by `eval` or `bench`, after checking hashes.
pub fn cmd_report(dir: &Path) -> Result<String> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
    manifest.verify_outputs(dir)?;
    let report: serde_json::Value = read_json(&dir.join(REPORT_JSON))?;
    Ok(render_value(&report))
}
