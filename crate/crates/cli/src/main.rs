use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use imbench::bench::{
    emit_report, load_config, mean_rank, parse_classifier_list, parse_sampler_list, read_f1_table,
    run_benchmark, synth_dataset, write_rank_table, DatasetSpec, ExperimentConfig, F1Table,
};

#[derive(Parser)]
#[command(name = "bench", version, about = "Oversampling benchmark for imbalanced binary data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dataset × sampler × classifier grid and write a report.
    Run(RunArgs),
    /// Write a two-Gaussian synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Compute mean F1 ranks from a table of F1 scores.
    Rank(RankArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key-value config file; the flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV; replaces any datasets from the config file.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    label_col: Option<String>,
    /// Name used in reports for --dataset (defaults to the file stem).
    #[arg(long, requires = "dataset")]
    name: Option<String>,
    /// Comma-separated: none, ros, smote, b-smote, adasyn, cgan, sdg-gan.
    #[arg(long)]
    samplers: Option<String>,
    /// Comma-separated: logreg, rf, gbt, mlp.
    #[arg(long)]
    classifiers: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    gan_epochs: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// csv or markdown.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    minority: usize,
    #[arg(long)]
    majority: usize,
    #[arg(long, default_value_t = 2)]
    features: usize,
    #[arg(long, default_value_t = 0.3)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    /// Either a metrics CSV or columns `dataset,classifier,sampler,f1`.
    #[arg(long)]
    f1_table: PathBuf,
    /// `.md` for markdown, anything else for CSV.
    #[arg(long)]
    out: PathBuf,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => load_config(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &args.dataset {
        let Some(label) = &args.label_col else {
            bail!("--dataset needs --label-col");
        };
        let name = args.name.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        });
        config.datasets = vec![DatasetSpec {
            name,
            path: path.clone(),
            label_column: label.clone(),
            majority_cap: None,
        }];
    }
    if let Some(s) = &args.samplers {
        config.samplers = parse_sampler_list(s)?;
    }
    if let Some(c) = &args.classifiers {
        config.classifiers = parse_classifier_list(c)?;
    }
    if let Some(r) = args.runs {
        config.runs = r;
    }
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(f) = args.test_fraction {
        config.pipeline.test_fraction = f;
    }
    if let Some(e) = args.gan_epochs {
        config.pipeline.gan.epochs = e;
    }
    if let Some(d) = &args.out_dir {
        config.out_dir = Some(d.clone());
    }
    if let Some(f) = &args.format {
        config.format = f.parse()?;
    }
    if config.datasets.is_empty() {
        bail!("no dataset given: pass --dataset/--label-col or a config with `dataset = ...`");
    }
    config.validate()?;
    Ok(config)
}

fn run(args: RunArgs) -> Result<bool> {
    let config = build_config(&args)?;
    let out_dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let outcome = run_benchmark(&config)?;
    for f in &outcome.failures {
        eprintln!(
            "failed: {}/{}/{} run {}: {}",
            f.dataset, f.sampler, f.classifier, f.run, f.message
        );
    }
    let rank = if config.samplers.len() >= 2 {
        mean_rank(&F1Table::from_report(&outcome.report)).ok()
    } else {
        None
    };
    let files = emit_report(&outcome.report, rank.as_ref(), config.format, &out_dir)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(!outcome.has_failures())
}

fn synth(args: SynthArgs) -> Result<()> {
    if args.minority == 0 || args.majority == 0 || args.features == 0 {
        bail!("--minority, --majority and --features must be positive");
    }
    let data = synth_dataset(args.minority, args.majority, args.features, args.separation, args.seed);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    data.write_csv(file, "label", None)?;
    Ok(())
}

fn rank(args: RankArgs) -> Result<()> {
    let file = fs::File::open(&args.f1_table)
        .with_context(|| format!("opening {}", args.f1_table.display()))?;
    let table = read_f1_table(file)?;
    let rank = mean_rank(&table)?;
    write_rank_table(&rank, &args.out)?;
    println!("best overall: {}", rank.best_overall());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a).map(|()| true),
        Command::Rank(a) => rank(a).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
