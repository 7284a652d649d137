use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use boundwalk::models::{load_mnist_idx, load_model, make_blobs, save_model, train_mlp, TrainConfig};
use boundwalk::{Activation, Criterion, Dataset, Model};
use boundwalk_harness::plot::{write_svg, Series};
use boundwalk_harness::{
    attack_once, query_distortion_curve, read_csv, read_sidecar, run_experiment, run_verification, sensitivity_report,
    AttackKind, CurveMetric, DatasetSource, ExperimentSpec, RunRecord, TargetSpec, VerifyOptions,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

#[derive(Parser)]
#[command(name = "boundwalk", version, about = "Boundary-following minimal adversarial attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a small MLP, or write the fixed two-input linear model.
    Train(TrainArgs),
    /// Attack one input and print the result.
    Attack(AttackArgs),
    /// Run an experiment described by a spec file and/or flags.
    Sweep(SweepArgs),
    /// Query-distortion curves from result files.
    Curve(CurveArgs),
    /// Check the solver and attacks against the reference oracles.
    Verify(VerifyArgs),
    /// Effect of each hyperparameter value and of a single repetition.
    Sensitivity(SensitivityArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainData {
    Mnist,
    Blobs,
    /// w = (3, 4), offset -2 on two inputs; nothing is trained.
    LinearDemo,
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    Relu,
    Tanh,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum, default_value = "mnist")]
    data: TrainData,
    #[arg(long, required_if_eq("data", "mnist"))]
    images: Option<PathBuf>,
    #[arg(long, required_if_eq("data", "mnist"))]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    per_class: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 2)]
    dimension: usize,
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    hidden: Vec<usize>,
    #[arg(long, value_enum, default_value = "relu")]
    activation: ActivationArg,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    model: PathBuf,
    /// IDX images; the sample is picked with --index and the file doubles as
    /// the pool of starting points.
    #[arg(long, requires = "labels")]
    images: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Explicit input, comma separated, instead of a dataset sample.
    #[arg(long, value_delimiter = ',', conflicts_with = "images")]
    point: Option<Vec<f64>>,
    /// True label of --point; defaults to the model's prediction.
    #[arg(long)]
    label: Option<usize>,
    #[arg(long, default_value = "ours-l2")]
    attack: AttackKind,
    /// Trust radius, or PGD step size.
    #[arg(long, default_value_t = 0.01)]
    hyperparameter: f64,
    #[arg(long)]
    epsilon: Option<f64>,
    /// untargeted, next or fixed:<class>.
    #[arg(long, default_value = "untargeted")]
    criterion: TargetSpec,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    max_queries: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the full result, adversarial included, as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML spec; any flag below replaces the matching field.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, requires = "labels")]
    images: Option<PathBuf>,
    #[arg(long, requires = "images")]
    labels: Option<PathBuf>,
    #[arg(long)]
    attack: Option<AttackKind>,
    #[arg(long)]
    criterion: Option<TargetSpec>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    max_queries: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    /// results.json (with traces) files; one series per attack.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50,100,200,500,1000")]
    budgets: Vec<usize>,
    /// Plot accuracy under attack at this epsilon instead of the median distance.
    #[arg(long)]
    accuracy_at: Option<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 1e-2)]
    resolution: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SensitivityArgs {
    /// results.json or results.csv
    results: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Train(args) => train(args)?,
        Command::Attack(args) => attack(args)?,
        Command::Sweep(args) => sweep(args)?,
        Command::Curve(args) => curve(args)?,
        Command::Verify(args) => return verify(args),
        Command::Sensitivity(args) => sensitivity(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn mnist(images: &Path, labels: &Path) -> anyhow::Result<Dataset> {
    load_mnist_idx(images, labels).with_context(|| format!("reading {} and {}", images.display(), labels.display()))
}

fn train(args: TrainArgs) -> anyhow::Result<()> {
    let model = match args.data {
        TrainData::LinearDemo => Model::linear(2, 2, vec![0.0, 0.0, 3.0, 4.0], vec![0.0, -2.0])?,
        data => {
            let set = match data {
                TrainData::Mnist => mnist(args.images.as_deref().unwrap(), args.labels.as_deref().unwrap())?,
                _ => make_blobs(args.per_class, args.classes, args.dimension, args.spread, args.seed),
            };
            let cfg = TrainConfig {
                hidden: args.hidden,
                activation: match args.activation {
                    ActivationArg::Relu => Activation::Relu,
                    ActivationArg::Tanh => Activation::Tanh,
                },
                epochs: args.epochs,
                learning_rate: args.lr,
                batch_size: args.batch_size,
                seed: args.seed,
            };
            let report = train_mlp(&set, &cfg)?;
            println!("training accuracy {:.4} on {} samples", report.accuracy, set.len());
            report.model
        }
    };
    save_model(&model, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn criterion_for(target: TargetSpec, label: usize, classes: usize) -> anyhow::Result<Criterion> {
    Ok(match target {
        TargetSpec::Untargeted => Criterion::untargeted(label),
        TargetSpec::Next => Criterion::targeted(label, (label + 1) % classes)?,
        TargetSpec::Fixed(t) => Criterion::targeted(label, t)?,
    })
}

fn attack(args: AttackArgs) -> anyhow::Result<()> {
    let model = load_model(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let (pool, x, label) = match (&args.point, &args.images, &args.labels) {
        (Some(point), _, _) => {
            let label = match args.label {
                Some(l) => l,
                None => model.predict(point)?,
            };
            (Dataset::default(), point.clone(), label)
        }
        (None, Some(images), Some(labels)) => {
            let data = mnist(images, labels)?;
            let Some(x) = data.samples.get(args.index).cloned() else {
                bail!("index {} out of range for {} samples", args.index, data.len());
            };
            let label = data.labels[args.index];
            (data, x, label)
        }
        _ => bail!("give either --point or --images with --labels"),
    };
    let crit = criterion_for(args.criterion, label, model.num_classes())?;
    let spec = ExperimentSpec {
        model: args.model.clone(),
        dataset: DatasetSource::Uniform { count: 0, dimension: 0, seed: 0 },
        attack: args.attack,
        criterion: args.criterion,
        samples: 1,
        repetitions: 1,
        grid: vec![args.hyperparameter],
        epsilon: args.epsilon,
        seed: args.seed,
        max_steps: args.max_steps,
        max_queries: args.max_queries,
        output: None,
    };
    spec.validate()?;
    let res = attack_once(&spec, &model, &pool, &x, &crit, args.hyperparameter, args.seed)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&res)?);
        return Ok(());
    }
    println!("{} on label {label}: success {}", args.attack, res.success);
    if let Some(adv) = &res.adversarial {
        println!("{} distance {:.6}, predicted class {}", args.attack.norm(), res.distance, model.predict(adv)?);
    }
    println!("queries {} (+{} to find a start)", res.queries_used, res.start_queries);
    Ok(())
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let mut over = toml::Table::new();
    let path = |p: &Path| toml::Value::String(p.to_string_lossy().into_owned());
    if let Some(m) = &args.model {
        over.insert("model".into(), path(m));
    }
    if let (Some(images), Some(labels)) = (&args.images, &args.labels) {
        let mut ds = toml::Table::new();
        ds.insert("kind".into(), "mnist".into());
        ds.insert("images".into(), path(images));
        ds.insert("labels".into(), path(labels));
        over.insert("dataset".into(), ds.into());
    }
    if let Some(a) = args.attack {
        over.insert("attack".into(), a.to_string().into());
    }
    if let Some(c) = args.criterion {
        over.insert("criterion".into(), toml::Value::try_from(c)?);
    }
    let count = |v: usize| toml::Value::Integer(v as i64);
    for (key, value) in [
        ("samples", args.samples),
        ("repetitions", args.repetitions),
        ("max_steps", args.max_steps),
        ("max_queries", args.max_queries),
    ] {
        if let Some(v) = value {
            over.insert(key.into(), count(v));
        }
    }
    if let Some(g) = &args.grid {
        over.insert("grid".into(), toml::Value::try_from(g)?);
    }
    if let Some(e) = args.epsilon {
        over.insert("epsilon".into(), e.into());
    }
    if let Some(s) = args.seed {
        let s = i64::try_from(s).context("seed must fit in a signed 64-bit integer")?;
        over.insert("seed".into(), s.into());
    }
    if let Some(o) = &args.output {
        over.insert("output".into(), path(o));
    }
    let spec = ExperimentSpec::load_with_overrides(args.spec.as_deref(), over)?;
    info!("running {} with seed {}", spec.attack, spec.seed);
    let out = run_experiment(&spec)?;
    println!("{}", out.summary);
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn read_records(path: &Path) -> anyhow::Result<Vec<RunRecord>> {
    let recs = if path.extension().is_some_and(|e| e == "csv") { read_csv(path)? } else { read_sidecar(path)? };
    Ok(recs)
}

fn curve(args: CurveArgs) -> anyhow::Result<()> {
    let mut by_attack: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
    for p in &args.results {
        for r in read_records(p)? {
            by_attack.entry(r.attack.to_string()).or_default().push(r);
        }
    }
    let metric = match args.accuracy_at {
        Some(eps) => CurveMetric::AccuracyAt(eps),
        None => CurveMetric::Median,
    };
    let curves: Vec<(String, Vec<(usize, f64)>)> = by_attack
        .iter()
        .map(|(name, recs)| (name.clone(), query_distortion_curve(recs, &args.budgets, metric)))
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["attack", "queries", "value"])?;
    for (name, points) in &curves {
        for (q, v) in points {
            w.write_record([name.clone(), q.to_string(), v.to_string()])?;
        }
    }
    let text = String::from_utf8(w.into_inner()?)?;
    match &args.csv {
        Some(p) => std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None if args.svg.is_none() => print!("{text}"),
        None => {}
    }
    if let Some(p) = &args.svg {
        let series: Vec<Series<'_>> = curves.iter().map(|(l, pts)| Series { label: l, points: pts }).collect();
        let y = match metric {
            CurveMetric::Median => "median distance".to_string(),
            CurveMetric::AccuracyAt(eps) => format!("accuracy at eps {eps}"),
        };
        write_svg(p, &series, &y)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let opts = VerifyOptions { instances: args.instances, resolution: args.resolution, seed: args.seed };
    let checks = run_verification(&opts)?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        println!("{failed} of {} checks failed", checks.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn sensitivity(args: SensitivityArgs) -> anyhow::Result<()> {
    let recs = read_records(&args.results)?;
    let report = sensitivity_report(&recs)?;
    println!("best median {:.6}", report.best_median);
    println!("{:>14} {:>12} {:>12}", "hyperparameter", "median", "degradation");
    for row in &report.rows {
        println!("{:>14e} {:>12.6} {:>11.1}%", row.hyperparameter, row.median, 100.0 * row.degradation);
    }
    println!(
        "single repetition: median {:.6}, degradation {:.1}%",
        report.single_rep_median,
        100.0 * report.single_rep_degradation
    );
    if let Some(p) = &args.json {
        std::fs::write(p, serde_json::to_string_pretty(&report)?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}
