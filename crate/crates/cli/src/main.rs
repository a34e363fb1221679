use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cabs::diagnostics::{
    bound_report, correlation_experiment, gap_check, spearman, truncation_errors, BoundConfig, BoundReport, GapCheck,
    SamplingStrategy,
};
use cabs::io::{
    bench_run, k_for_rate, load_matrix, write_records, BenchRecord, DataKind, DataSource, DatasetSpec, Method,
    OutputFormat, Recipe, METHODS,
};
use cabs::matcore::relative_error;
use cabs::pipeline::{cabs_run, CabsConfig, FollowupVariant, RankSelection};
use cabs::rng;
use cabs::samplers::{uniform_indices, DEFAULT_KMEANS_ITERS};
use cabs::sketchers::{nystrom, pseudo_skeleton, stabilized_sketch, SampledTriple};
use cabs::{MatrixSource, RankSpec, WeightFn};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "cabs", version, about = "Bilateral sampling matrix sketches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one matrix and report its error.
    Sketch(SketchArgs),
    /// Every method at every sampling rate, repeated.
    Bench(BenchArgs),
    /// Error of every leading truncation of a sketch.
    Stability(StabilityArgs),
    /// Encoding errors against sketch error over random samplings.
    Correlate(CorrelateArgs),
    /// Error bounds of the pilot and follow-up rounds of one run.
    Bound(BoundArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Data {
    /// Matrix file (.mtx, .mm, .bin or .csv).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic recipe, e.g. `lowrank:m=2000,n=1500,r=50,noise=0.01,seed=0`.
    #[arg(long)]
    synthetic: Option<Recipe>,
}

impl Data {
    /// The dataset and, for files, the matrix already read to classify it.
    fn resolve(&self) -> Result<(DatasetSpec, Option<MatrixSource>)> {
        match (&self.input, &self.synthetic) {
            (Some(path), _) => {
                let loaded = load_matrix(path).with_context(|| format!("loading {}", path.display()))?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let spec = DatasetSpec {
                    name,
                    source: DataSource::File(path.clone()),
                    kind: if loaded.is_sparse() {
                        DataKind::Sparse
                    } else {
                        DataKind::Dense
                    },
                };
                Ok((spec, Some(loaded.into_source())))
            }
            (None, Some(recipe)) => Ok((DatasetSpec::synthetic(recipe.to_string(), recipe.clone()), None)),
            (None, None) => bail!("one of --input or --synthetic is required"),
        }
    }

    fn open(&self) -> Result<(DatasetSpec, MatrixSource)> {
        let (spec, source) = self.resolve()?;
        let source = match source {
            Some(s) => s,
            None => spec.load()?,
        };
        Ok((spec, source))
    }
}

#[derive(Args)]
struct Output {
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: OutputFormat,
}

impl Output {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn rows<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let mut out = self.writer()?;
        match self.format {
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(out);
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut out, rows)?;
                writeln!(out)?;
                out.flush()?;
            }
        }
        Ok(())
    }

    fn records(&self, records: &[BenchRecord]) -> Result<()> {
        write_records(records, self.format, self.writer()?)?;
        Ok(())
    }
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: cabs::Error| e.to_string())
}

#[derive(Args)]
struct Sampling {
    /// Sampling rate k/√(mn); ignored when --k1 is given.
    #[arg(long, default_value_t = 0.05)]
    rate: f64,
    /// Pilot sample size.
    #[arg(long)]
    k1: Option<usize>,
    /// Follow-up sample size (defaults to k1).
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Sampling {
    fn k1(&self, source: &MatrixSource) -> Result<usize> {
        if let Some(k) = self.k1 {
            return Ok(k);
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            bail!("--rate must be positive");
        }
        let (m, n) = source.shape();
        Ok(k_for_rate(self.rate, m, n))
    }
}

#[derive(Args)]
struct Followup {
    #[arg(long, default_value = "wkmeans")]
    variant: FollowupVariant,
    /// Importance weights: constant, power:<p>, sigmoid:<a>,<b> or step:<t>.
    /// Defaults to constant for dense and power:2 for sparse input.
    #[arg(long)]
    weight_fn: Option<WeightFn>,
    /// Lloyd iterations.
    #[arg(long, default_value_t = DEFAULT_KMEANS_ITERS)]
    iters: usize,
}

impl Followup {
    fn weight_fn(&self, kind: DataKind) -> WeightFn {
        self.weight_fn
            .unwrap_or_else(|| WeightFn::default_for(kind == DataKind::Sparse))
    }
}

#[derive(Args)]
struct SketchArgs {
    #[command(flatten)]
    data: Data,
    /// A registered method, or `cabs` to pick the follow-up with --variant.
    #[arg(long, default_value = "cabs")]
    method: String,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    followup: Followup,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: Data,
    /// Comma-separated methods; defaults to every method that applies.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Comma-separated sampling rates.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.01,0.02,0.03,0.04,0.05,0.06,0.07,0.08,0.09,0.1"
    )]
    rate: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    data: Data,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CorrelateArgs {
    #[command(flatten)]
    data: Data,
    #[command(flatten)]
    sampling: Sampling,
    /// Number of trials.
    #[arg(long, default_value_t = 200)]
    repeats: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    data: Data,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    followup: Followup,
    /// The data-dependent constant in the bounds.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c
            .downcast_ref::<io::Error>()
            .or_else(|| match c.downcast_ref::<cabs::Error>() {
                Some(cabs::Error::Io(io)) => Some(io),
                _ => None,
            });
        io.is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sketch(a) => sketch(a),
        Command::Bench(a) => bench(a),
        Command::Stability(a) => stability(a),
        Command::Correlate(a) => correlate(a),
        Command::Bound(a) => bound(a),
    }
}

fn cabs_config(source: &MatrixSource, s: &Sampling, f: &Followup, kind: DataKind) -> Result<CabsConfig> {
    let k1 = s.k1(source)?;
    Ok(CabsConfig {
        k1,
        k2: s.k2.unwrap_or(k1),
        variant: f.variant,
        weight_fn: f.weight_fn(kind),
        kmeans_iters: f.iters,
        rank: RankSelection::Auto,
        seed: s.seed,
    })
}

fn sketch(a: SketchArgs) -> Result<()> {
    let (spec, source) = a.data.open()?;
    let (m, n) = source.shape();
    let src = source.fresh();
    let start = Instant::now();
    let (name, k, sk) = if a.method == "cabs" {
        let cfg = cabs_config(&source, &a.sampling, &a.followup, spec.kind)?;
        let out = cabs_run(&src, &cfg)?;
        (format!("cabs-{}", cfg.variant.name()), cfg.k1, out.followup.sketch)
    } else {
        let method: Method = a.method.parse()?;
        let k = a.sampling.k1(&source)?;
        let weight_fn = a.followup.weight_fn(spec.kind);
        (
            method.name().to_string(),
            k,
            method.run(&src, k, a.sampling.seed, weight_fn, a.followup.iters)?,
        )
    };
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let log = src.access();
    let record = BenchRecord {
        method: name,
        sampling_rate: k as f64 / ((m as f64) * (n as f64)).sqrt(),
        k,
        seed: a.sampling.seed,
        rel_error: relative_error(&source, &sk)?,
        wall_time_ms,
        rows_touched: if log.all { m } else { log.rows_touched() },
        cols_touched: if log.all { n } else { log.cols_touched() },
        all_access: log.all,
    };
    a.output.records(&[record])
}

fn bench(a: BenchArgs) -> Result<()> {
    let (spec, source) = a.data.resolve()?;
    let methods: Vec<String> = if a.method.is_empty() {
        let source = match source {
            Some(s) => s,
            None => spec.load()?,
        };
        let square = source.rows() == source.cols();
        METHODS
            .iter()
            .filter(|(_, m)| *m != Method::Nystrom || (square && spec.kind == DataKind::Psd))
            .map(|(n, _)| n.to_string())
            .collect()
    } else {
        a.method
    };
    let records = bench_run(&spec, &methods, &a.rate, a.repeats, a.seed)?;
    a.output.records(&records)
}

#[derive(Serialize)]
struct StabilityRow {
    sketcher: &'static str,
    rank: usize,
    rel_error: f64,
}

fn stability(a: StabilityArgs) -> Result<()> {
    let (spec, source) = a.data.open()?;
    let (m, n) = source.shape();
    let k = a.sampling.k1(&source)?;
    let rows = uniform_indices(m, k, rng::derive(a.sampling.seed, 0))?;
    let cols = uniform_indices(n, k, rng::derive(a.sampling.seed, 1))?;
    let t = SampledTriple::sample(&source, &rows, &cols)?;
    let mut sweeps = vec![
        ("stabilized", stabilized_sketch(&t, m, n, RankSpec::Fixed(k))?),
        ("pseudo-skeleton", pseudo_skeleton(&t, RankSpec::Fixed(k))?),
    ];
    if spec.kind == DataKind::Psd && m == n {
        let tn = SampledTriple::sample(&source, &rows, &rows)?;
        sweeps.push(("nystrom", nystrom(&tn, RankSpec::Fixed(k))?));
    }
    let mut out = Vec::new();
    for (sketcher, sk) in sweeps {
        for (i, rel_error) in truncation_errors(&source, &sk)?.into_iter().enumerate() {
            out.push(StabilityRow {
                sketcher,
                rank: i + 1,
                rel_error,
            });
        }
    }
    a.output.rows(&out)
}

#[derive(Serialize)]
struct CorrelationRow {
    e_r: f64,
    e_c: f64,
    sketch_error: f64,
    row_strategy: String,
    col_strategy: String,
}

fn strategy_label(s: SamplingStrategy) -> String {
    match s {
        SamplingStrategy::Uniform => "uniform".into(),
        SamplingStrategy::Kmeans { iters } => format!("kmeans-{iters}"),
        SamplingStrategy::Local => "local".into(),
        SamplingStrategy::LowNorm => "low-norm".into(),
    }
}

fn correlate(a: CorrelateArgs) -> Result<()> {
    let (_, source) = a.data.open()?;
    let k = a.sampling.k1(&source)?;
    let trials = correlation_experiment(&source, k, a.repeats, a.sampling.seed)?;
    let x: Vec<f64> = trials.iter().map(|t| t.e_r + t.e_c).collect();
    let y: Vec<f64> = trials.iter().map(|t| t.sketch_error).collect();
    if trials.len() >= 2 {
        eprintln!("spearman {:.4} over {} trials", spearman(&x, &y), trials.len());
    }
    let rows: Vec<CorrelationRow> = trials
        .iter()
        .map(|t| CorrelationRow {
            e_r: t.e_r,
            e_c: t.e_c,
            sketch_error: t.sketch_error,
            row_strategy: strategy_label(t.row_strategy),
            col_strategy: strategy_label(t.col_strategy),
        })
        .collect();
    a.output.rows(&rows)
}

#[derive(Serialize)]
struct BoundRow {
    stage: &'static str,
    e_r: f64,
    e_c: f64,
    t_r: usize,
    t_c: usize,
    w_pinv_norm: f64,
    bound: f64,
    rel_error: f64,
}

#[derive(Serialize)]
struct BoundSummary {
    theta: f64,
    pilot: BoundReport,
    followup: BoundReport,
    pilot_error: f64,
    followup_error: f64,
    gap: Option<GapCheck>,
}

fn bound(a: BoundArgs) -> Result<()> {
    let (spec, source) = a.data.open()?;
    let cfg = cabs_config(&source, &a.sampling, &a.followup, spec.kind)?;
    let bcfg = BoundConfig::new(a.theta)?;
    let out = cabs_run(&source, &cfg)?;
    let (p, q) = (out.embedding.p.view(), out.embedding.q.view());
    let pilot = bound_report(p, q, &out.pilot.rows, &out.pilot.cols, &out.pilot.w, &bcfg)?;
    let followup = bound_report(p, q, &out.followup.rows, &out.followup.cols, &out.followup.w, &bcfg)?;
    let pilot_error = relative_error(&source, &out.pilot.sketch)?;
    let followup_error = relative_error(&source, &out.followup.sketch)?;
    let gap = match gap_check(&pilot, &followup, pilot.k, a.theta) {
        Ok(g) => Some(g),
        Err(e) => {
            eprintln!("no gap: {e}");
            None
        }
    };
    match a.output.format {
        OutputFormat::Json => {
            let summary = BoundSummary {
                theta: a.theta,
                pilot,
                followup,
                pilot_error,
                followup_error,
                gap,
            };
            let mut w = a.output.writer()?;
            serde_json::to_writer_pretty(&mut w, &summary)?;
            writeln!(w)?;
            w.flush()?;
            Ok(())
        }
        OutputFormat::Csv => {
            let row = |stage, r: &BoundReport, rel_error| BoundRow {
                stage,
                e_r: r.e_r,
                e_c: r.e_c,
                t_r: r.t_r,
                t_c: r.t_c,
                w_pinv_norm: r.w_pinv_norm,
                bound: r.bound_value,
                rel_error,
            };
            if let Some(g) = gap {
                eprintln!("bound drop {:.6e}, predicted gap {:.6e}", g.bound_drop(), g.gap);
            }
            a.output.rows(&[
                row("pilot", &pilot, pilot_error),
                row("followup", &followup, followup_error),
            ])
        }
    }
}
