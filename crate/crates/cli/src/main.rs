use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use openbox::analysis::{self, FeatureSource};
use openbox::dataio::{gen_syn, load_fmnist_pair, Dataset, Split};
use openbox::openbox::{openbox, InterpretationModel, OpenBoxOptions};
use openbox::trainer::{self, TrainConfig};
use openbox::Network;
use serde::Serialize;

mod manifest;

use manifest::{beside, RunManifest};

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "openbox",
    version,
    about = "Exact interpretation of piecewise-linear networks"
)]
struct Cli {
    /// Worker threads for enumeration and reports (0 = all cores).
    #[arg(long, global = true, env = "OPENBOX_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or convert datasets into OBX1 caches.
    #[command(subcommand)]
    Data(DataCommand),
    /// Train a ReLU network.
    Train(TrainArgs),
    /// Enumerate the local linear classifiers of a network over a dataset.
    Openbox(OpenboxArgs),
    /// Produce an analysis report.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Check the interpretation invariants on a network, model and dataset.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum DataCommand {
    /// Synthetic 2-D quadrangle task.
    Syn(SynArgs),
    /// Two-class subset of Fashion-MNIST IDX files.
    Fmnist(FmnistArgs),
}

#[derive(Args, Serialize)]
struct SynArgs {
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long, default_value_t = 5_000)]
    test_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct FmnistArgs {
    /// Directory holding the four IDX files.
    #[arg(long, default_value = "data/fmnist")]
    dir: PathBuf,
    /// Relabelled as 1.
    #[arg(long)]
    class_a: u8,
    /// Relabelled as 0.
    #[arg(long)]
    class_b: u8,
    #[arg(long, default_value_t = 4_000)]
    train_cap: usize,
    #[arg(long, default_value_t = 3_000)]
    test_cap: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Layer sizes, e.g. 784,8,2,2.
    #[arg(long, value_delimiter = ',', required = true)]
    arch: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Non-negative hidden weights (projected gradient).
    #[arg(long)]
    nonneg: bool,
    #[arg(long, default_value_t = 0.0)]
    l1: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct OpenboxArgs {
    /// Network JSON.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Interpretation model JSON to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    skip_redundancy: bool,
}

#[derive(Args, Serialize)]
struct Inputs {
    /// Network JSON.
    #[arg(long)]
    model: PathBuf,
    /// Interpretation model JSON.
    #[arg(long)]
    llcs: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args, Serialize)]
struct ReportBase {
    #[command(flatten)]
    #[serde(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum ReportCommand {
    Exactness(ReportBase),
    Consistency(SampledReport),
    Hack(HackArgs),
    Debug(DebugArgs),
    Pbf(PbfArgs),
}

#[derive(Args, Serialize)]
struct SampledReport {
    #[command(flatten)]
    #[serde(flatten)]
    base: ReportBase,
    /// Instances drawn from the dataset (all if larger than it).
    #[arg(long, default_value_t = 600)]
    sample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct HackArgs {
    #[command(flatten)]
    #[serde(flatten)]
    sampled: SampledReport,
    /// Feature counts to zero.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 40])]
    m: Vec<usize>,
}

#[derive(Args, Serialize)]
struct DebugArgs {
    #[command(flatten)]
    #[serde(flatten)]
    base: ReportBase,
    /// Overlay images written for the most confident mistakes.
    #[arg(long, default_value_t = 10)]
    images: usize,
}

#[derive(Args, Serialize)]
struct PbfArgs {
    #[command(flatten)]
    #[serde(flatten)]
    base: ReportBase,
    #[arg(long, default_value_t = 3)]
    top: usize,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    inputs: Inputs,
    /// Where to write verify.json and the manifest.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Uniform samples per polytope in the redundancy check.
    #[arg(long, default_value_t = 1_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

/// Runs a subcommand; `Ok(false)` means verification failed.
fn dispatch(command: Command) -> CliResult<bool> {
    match command {
        Command::Data(DataCommand::Syn(a)) => data_syn(&a).map(|_| true),
        Command::Data(DataCommand::Fmnist(a)) => data_fmnist(&a).map(|_| true),
        Command::Train(a) => train(&a).map(|_| true),
        Command::Openbox(a) => run_openbox(&a).map(|_| true),
        Command::Report(r) => report(r).map(|_| true),
        Command::Verify(a) => verify(&a),
    }
}

fn mkdir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()).into())
}

fn data_syn(a: &SynArgs) -> CliResult<()> {
    let mut m = RunManifest::start("data syn", a);
    m.seed("seed", a.seed);
    m.seed("test_seed", a.seed.wrapping_add(1));
    mkdir(&a.out_dir)?;
    let train = gen_syn(a.n, a.seed)?;
    let mut test = gen_syn(a.test_n, a.seed.wrapping_add(1))?;
    test.split = Split::Test;
    for (name, ds) in [("train.bin", &train), ("test.bin", &test)] {
        let p = a.out_dir.join(name);
        ds.save(&p)?;
        m.output(&p)?;
        let [neg, pos] = ds.class_counts();
        eprintln!(
            "{}: {} instances ({pos} positive, {neg} negative)",
            p.display(),
            ds.len()
        );
    }
    m.finish(a.out_dir.join("manifest.json"))?;
    Ok(())
}

fn data_fmnist(a: &FmnistArgs) -> CliResult<()> {
    let mut m = RunManifest::start("data fmnist", a);
    mkdir(&a.out_dir)?;
    for (prefix, cap, split, name) in [
        ("train", a.train_cap, Split::Train, "train.bin"),
        ("t10k", a.test_cap, Split::Test, "test.bin"),
    ] {
        let images = a.dir.join(format!("{prefix}-images-idx3-ubyte"));
        let labels = a.dir.join(format!("{prefix}-labels-idx1-ubyte"));
        let ds = load_fmnist_pair(&images, &labels, a.class_a, a.class_b, cap, split)?;
        m.input(&images)?;
        m.input(&labels)?;
        let p = a.out_dir.join(name);
        ds.save(&p)?;
        m.output(&p)?;
        eprintln!("{}: {} instances, d = {}", p.display(), ds.len(), ds.dim());
    }
    m.finish(a.out_dir.join("manifest.json"))?;
    Ok(())
}

fn train(a: &TrainArgs) -> CliResult<()> {
    let mut m = RunManifest::start("train", a);
    m.seed("seed", a.seed);
    let data = Dataset::load(&a.data)?;
    m.input(&a.data)?;
    let cfg = TrainConfig {
        architecture: a.arch.clone(),
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        l1_penalty: a.l1,
        nonneg: a.nonneg,
        seed: a.seed,
        init_scale: None,
    };
    let (net, history) = trainer::train_with_history(&data, &cfg)?;
    net.save(&a.out)?;
    m.output(&a.out)?;
    eprintln!(
        "loss {:.6} -> {:.6}, training accuracy {:.4}",
        history.losses[0],
        history.losses.last().unwrap(),
        trainer::accuracy(&net, &data)?
    );
    m.finish(beside(&a.out))?;
    Ok(())
}

fn run_openbox(a: &OpenboxArgs) -> CliResult<()> {
    let mut m = RunManifest::start("openbox", a);
    let net = Network::load(&a.model)?;
    let data = Dataset::load(&a.data)?;
    m.input(&a.model)?;
    m.input(&a.data)?;
    let opts = OpenBoxOptions {
        skip_redundancy: a.skip_redundancy,
        bbox: None,
    };
    let model = openbox(&net, &data, &opts)?;
    model.save(&a.out)?;
    m.output(&a.out)?;
    eprintln!(
        "{} configurations over {} instances ({} skipped)",
        model.len(),
        model.processed(),
        model.skipped().len()
    );
    m.finish(beside(&a.out))?;
    Ok(())
}

fn load_inputs(
    i: &Inputs,
    m: &mut RunManifest,
) -> CliResult<(Network, InterpretationModel, Dataset)> {
    let net = Network::load(&i.model)?;
    let model = InterpretationModel::load(&i.llcs)?;
    let data = Dataset::load(&i.data)?;
    for p in [&i.model, &i.llcs, &i.data] {
        m.input(p)?;
    }
    model.check_fresh(&net)?;
    Ok((net, model, data))
}

fn report(r: ReportCommand) -> CliResult<()> {
    match r {
        ReportCommand::Exactness(a) => {
            let mut m = RunManifest::start("report exactness", &a);
            let (net, model, data) = load_inputs(&a.inputs, &mut m)?;
            mkdir(&a.out_dir)?;
            let rep = analysis::exactness_report(&net, &model, &data)?;
            let csv = a.out_dir.join("exactness.csv");
            analysis::write_exactness_csv(&csv, &rep)?;
            let json = a.out_dir.join("exactness.json");
            analysis::write_json(
                &json,
                &serde_json::json!({"instances": rep.deltas.len(), "max_abs_delta": rep.max, "mean_abs_delta": rep.mean}),
            )?;
            eprintln!(
                "max |delta| = {:e} over {} instances",
                rep.max,
                rep.deltas.len()
            );
            finish(m, &a.out_dir, &[csv, json])
        }
        ReportCommand::Consistency(a) => {
            let mut m = RunManifest::start("report consistency", &a);
            m.seed("seed", a.seed);
            let (net, model, data) = load_inputs(&a.base.inputs, &mut m)?;
            mkdir(&a.base.out_dir)?;
            let sample = data.select(&data.sample_indices(a.sample, a.seed));
            let rep = analysis::consistency_report(&net, &model, &sample)?;
            let csv = a.base.out_dir.join("consistency.csv");
            analysis::write_consistency_csv(&csv, &rep)?;
            let json = a.base.out_dir.join("consistency.json");
            analysis::write_json(
                &json,
                &serde_json::json!({"instances": rep.records.len(), "quantiles": rep.quantiles, "fraction_exactly_one": rep.fraction_exactly_one}),
            )?;
            eprintln!(
                "cosine = 1 on {:.1}% of instances",
                100.0 * rep.fraction_exactly_one
            );
            finish(m, &a.base.out_dir, &[csv, json])
        }
        ReportCommand::Hack(a) => {
            let s = &a.sampled;
            let mut m = RunManifest::start("report hack", &a);
            m.seed("seed", s.seed);
            let (net, model, data) = load_inputs(&s.base.inputs, &mut m)?;
            mkdir(&s.base.out_dir)?;
            let sample = data.select(&data.sample_indices(s.sample, s.seed));
            let mut results = Vec::new();
            for &k in &a.m {
                for source in [FeatureSource::Openbox, FeatureSource::Random] {
                    results.push(analysis::hack(&net, &model, &sample, k, source, s.seed)?);
                }
            }
            let csv = s.base.out_dir.join("hack.csv");
            analysis::write_hack_csv(&csv, &results)?;
            let summary: Vec<_> = results
                .iter()
                .map(|h| serde_json::json!({"m": h.m, "source": h.source, "cpp": h.cpp, "nlci": h.nlci}))
                .collect();
            let json = s.base.out_dir.join("hack.json");
            analysis::write_json(
                &json,
                &serde_json::json!({"instances": sample.len(), "results": summary}),
            )?;
            for h in &results {
                eprintln!(
                    "m = {:>3} {:>7}: CPP {:.4}, NLCI {}",
                    h.m,
                    format!("{:?}", h.source).to_lowercase(),
                    h.cpp,
                    h.nlci
                );
            }
            finish(m, &s.base.out_dir, &[csv, json])
        }
        ReportCommand::Debug(a) => {
            let mut m = RunManifest::start("report debug", &a);
            let (net, model, data) = load_inputs(&a.base.inputs, &mut m)?;
            mkdir(&a.base.out_dir)?;
            let recs = analysis::debug_report(&net, &model, &data)?;
            let json = a.base.out_dir.join("debug.json");
            analysis::write_json(&json, &recs)?;
            let mut outputs = vec![json];
            if data.dim() == 28 * 28 {
                for r in recs.iter().take(a.images) {
                    for (class, overlay) in r.overlays.iter().enumerate() {
                        let stem = format!("debug_{:05}_class{class}", r.index);
                        analysis::write_pgm_pair(&a.base.out_dir, &stem, overlay, 28)?;
                        for suffix in ["pos", "neg"] {
                            outputs.push(a.base.out_dir.join(format!("{stem}_{suffix}.pgm")));
                        }
                    }
                }
            }
            eprintln!("{} misclassified instances", recs.len());
            finish(m, &a.base.out_dir, &outputs)
        }
        ReportCommand::Pbf(a) => {
            let mut m = RunManifest::start("report pbf", &a);
            let (net, model, data) = load_inputs(&a.base.inputs, &mut m)?;
            mkdir(&a.base.out_dir)?;
            let rows = analysis::pbf_table(&net, &model, &data, a.top)?;
            let json = a.base.out_dir.join("pbf.json");
            analysis::write_json(&json, &rows)?;
            for r in &rows {
                eprintln!(
                    "support {:>6}: {} boundaries, classes {:?}, accuracy {:.3}",
                    r.support,
                    r.boundaries.len(),
                    r.class_counts,
                    r.accuracy
                );
            }
            finish(m, &a.base.out_dir, &[json])
        }
    }
}

fn finish(mut m: RunManifest, dir: &Path, outputs: &[PathBuf]) -> CliResult<()> {
    for p in outputs {
        m.output(p)?;
    }
    let kind = m.subcommand.rsplit(' ').next().unwrap_or("run").to_string();
    m.finish(dir.join(format!("{kind}.manifest.json")))?;
    Ok(())
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn verify(a: &VerifyArgs) -> CliResult<bool> {
    let mut m = RunManifest::start("verify", a);
    m.seed("seed", a.seed);
    let (net, model, data) = load_inputs(&a.inputs, &mut m)?;
    let mut checks = Vec::new();

    let ex = analysis::exactness_report(&net, &model, &data)?;
    checks.push(Check {
        name: "exactness",
        passed: ex.max < 1e-9,
        detail: format!("max |delta| = {:e}", ex.max),
    });

    let bad = analysis::partition_violations(&net, &model, &data)?;
    checks.push(Check {
        name: "partition",
        passed: bad == 0,
        detail: format!("{bad} membership disagreements"),
    });

    let total: usize = model.entries().values().map(|e| e.support).sum();
    checks.push(Check {
        name: "support_total",
        passed: total == model.processed(),
        detail: format!("supports sum to {total}, processed {}", model.processed()),
    });

    if model.bbox().is_some() {
        let s = analysis::redundancy_sampling_check(&model, 100, a.samples, a.seed)?;
        checks.push(Check {
            name: "redundancy_sampling",
            passed: s.violations == 0,
            detail: format!(
                "{} polytopes, {} samples inside, {} violations",
                s.polytopes, s.inside, s.violations
            ),
        });
    }

    if data.len() >= 2 {
        let sample = data.select(&data.sample_indices(600, a.seed));
        let c = analysis::consistency_report(&net, &model, &sample)?;
        let broken = c
            .records
            .iter()
            .filter(|r| r.same_configuration && r.cosine != 1.0)
            .count();
        checks.push(Check {
            name: "consistency",
            passed: broken == 0,
            detail: format!("{broken} same-configuration pairs with cosine != 1"),
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if let Some(dir) = &a.out_dir {
        mkdir(dir)?;
        let json = dir.join("verify.json");
        analysis::write_json(
            &json,
            &serde_json::json!({"passed": passed, "checks": checks}),
        )?;
        finish(m, dir, &[json])?;
    }
    Ok(passed)
}
