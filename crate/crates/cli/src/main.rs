use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use confcurate_core::analytics::{export_figure_series, Figure};
use confcurate_core::dataset::Dataset;
use confcurate_core::fixture::{FixtureCorpus, FIXTURE_BASE_URL};
use confcurate_core::llm::Mode;
use confcurate_core::pipeline::{
    export_dataset, kappa_from_review, parse_years, validate_dataset, ExportFormat, Outcome,
    Pipeline, PipelineConfig, PipelineError, RunOptions, Seeds, Stage, REVIEW_DIR,
};

const DEFAULT_CONFIG: &str = "confcurate.toml";
const ENDPOINT_ENV: &str = "CONFCURATE_ENDPOINT";

/// Curate a conference-program archive into an author-level dataset and
/// scientometric reports.
#[derive(Parser, Debug)]
#[command(name = "confcurate", version, about)]
struct Cli {
    /// Pipeline config file. Defaults to ./confcurate.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset directory, overriding the config.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// One seed for every review-sample draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rerun even when the stage is current or upstream outputs are stale.
    #[arg(long, global = true)]
    force: bool,
    /// Extraction and classification mode for both model-backed stages.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the archive snapshot into presentation records.
    Ingest(IngestArgs),
    /// Extract structured affiliations from author blocks.
    Extract,
    /// Normalize names, positions, institutions and countries.
    Normalize,
    /// Cluster author-name variants into identities.
    Resolve,
    /// Label each presentation's methodology.
    Classify,
    /// Compute summary tables and figure series.
    Analyze(AnalyzeArgs),
    /// Check referential integrity and module invariants of the dataset.
    Validate(ValidateArgs),
    /// Write the author-level dataset as one flat file.
    Export(ExportArgs),
    /// Run every stage in dependency order.
    RunAll,
    /// Score a completed methodology review sheet against the labels.
    Kappa(KappaArgs),
    /// Write the bundled synthetic archive and a config for trying the pipeline.
    Fixture(FixtureArgs),
    /// Print the effective configuration, after defaults and flags, as TOML.
    Config,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Archive snapshot directory.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Years to ingest, as `2005..2026` or `2008,2015`.
    #[arg(long)]
    years: Option<String>,
    /// Fetch missing pages before parsing.
    #[arg(long, conflicts_with = "offline")]
    fetch: bool,
    /// Archive root to fetch from.
    #[arg(long)]
    base_url: Option<String>,
    /// Delay between requests in milliseconds.
    #[arg(long)]
    delay_ms: Option<u64>,
    /// Parse the snapshot only, even if the config enables fetching.
    #[arg(long)]
    offline: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Reports directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Figures directory. Defaults to `figures` next to the reports directory
    /// when --out is given.
    #[arg(long)]
    figures: Option<PathBuf>,
    /// Export a single figure series without running the stage.
    #[arg(long)]
    figure: Option<Figure>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long, default_value = "csv")]
    format: ExportFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct KappaArgs {
    /// Completed copy of review/methodology_sample.csv.
    #[arg(long)]
    sheet: PathBuf,
    /// Where to write the report. Defaults to review/kappa_report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FixtureArgs {
    /// Directory to populate.
    dir: PathBuf,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None if Path::new(DEFAULT_CONFIG).exists() => {
            PipelineConfig::load(Path::new(DEFAULT_CONFIG))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(dir) = &cli.dataset {
        config.dataset_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.seeds = Seeds::all(seed);
    }
    if let Some(mode) = cli.mode {
        config.set_mode(mode);
    }
    match &cli.command {
        Command::Ingest(args) => {
            if let Some(dir) = &args.corpus {
                config.corpus_dir = dir.clone();
            }
            if let Some(spec) = &args.years {
                config.years = parse_years(spec)?;
            }
            if args.fetch {
                config.fetch.enabled = true;
            }
            if args.offline {
                config.fetch.enabled = false;
            }
            if let Some(url) = &args.base_url {
                config.fetch.base_url = Some(url.clone());
            }
            if let Some(ms) = args.delay_ms {
                config.fetch.delay_ms = ms;
            }
        }
        Command::Analyze(args) => {
            if let Some(out) = &args.out {
                config.reports_dir = out.clone();
                config.figures_dir = out.parent().unwrap_or(Path::new(".")).join("figures");
            }
            if let Some(dir) = &args.figures {
                config.figures_dir = dir.clone();
            }
        }
        _ => {}
    }
    Ok(config)
}

fn pipeline(cli: &Cli, config: PipelineConfig) -> Result<Pipeline> {
    let options = RunOptions {
        force: cli.force,
        endpoint_override: std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty()),
    };
    Ok(Pipeline::new(config, options)?)
}

fn report(stage: Stage, outcome: &Outcome) {
    let m = outcome.manifest();
    let state = match outcome {
        Outcome::Ran(_) => "done",
        Outcome::UpToDate(_) => "up to date",
    };
    eprintln!(
        "{:<9} {state:<10} {} in, {} out",
        stage.as_str(),
        m.records_in,
        m.records_out
    );
}

fn run_stage(cli: &Cli, stage: Stage) -> Result<()> {
    let p = pipeline(cli, load_config(cli)?)?;
    report(stage, &p.run(stage)?);
    Ok(())
}

fn analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<()> {
    let config = load_config(cli)?;
    let Some(figure) = args.figure else {
        return run_stage(cli, Stage::Analyze);
    };
    let dataset = Dataset::load(&config.dataset_dir)
        .with_context(|| format!("loading {}", config.dataset_dir.display()))?;
    let path = export_figure_series(&dataset, figure, &config.figures_dir, &config.analytics)
        .map_err(PipelineError::from)?;
    println!("{}", path.display());
    Ok(())
}

fn validate(cli: &Cli, args: &ValidateArgs) -> Result<()> {
    let config = load_config(cli)?;
    let report = validate_dataset(&config.dataset_dir)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for v in &report.violations {
            println!("{:?}\t{}\t{}", v.kind, v.key, v.message);
        }
        eprintln!(
            "{} presentations, {} author records, {} clusters, {} labels: {} violation(s)",
            report.presentations,
            report.author_records,
            report.clusters,
            report.methodology_records,
            report.violations.len()
        );
    }
    if report.is_clean() {
        Ok(())
    } else {
        Err(PipelineError::Violations(report.violations.len()).into())
    }
}

fn kappa(cli: &Cli, args: &KappaArgs) -> Result<()> {
    let config = load_config(cli)?;
    let report = kappa_from_review(&config.dataset_dir, &args.sheet)?;
    let out = args.out.clone().unwrap_or_else(|| {
        config
            .dataset_dir
            .join(REVIEW_DIR)
            .join("kappa_report.json")
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
    match report.kappa {
        Some(k) => println!(
            "n = {}, observed agreement {:.3}, kappa {k:.3}",
            report.n, report.observed_agreement
        ),
        None => println!(
            "n = {}, observed agreement {:.3}, kappa undefined",
            report.n, report.observed_agreement
        ),
    }
    eprintln!("report written to {}", out.display());
    Ok(())
}

fn fixture(args: &FixtureArgs) -> Result<()> {
    let fx = FixtureCorpus::standard();
    std::fs::create_dir_all(&args.dir)
        .with_context(|| format!("creating {}", args.dir.display()))?;
    fx.write(&args.dir.join("corpus"))
        .map_err(PipelineError::from)?;
    let years: Vec<String> = fx.years().iter().map(u16::to_string).collect();
    let config = format!(
        "corpus_dir = \"corpus\"\ndataset_dir = \"dataset\"\nreports_dir = \"reports\"\nfigures_dir = \"figures\"\nyears = [{}]\n\n[fetch]\nbase_url = \"{FIXTURE_BASE_URL}\"\n",
        years.join(", ")
    );
    let path = args.dir.join(DEFAULT_CONFIG);
    std::fs::write(&path, config).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(_) => run_stage(cli, Stage::Ingest),
        Command::Extract => run_stage(cli, Stage::Extract),
        Command::Normalize => run_stage(cli, Stage::Normalize),
        Command::Resolve => run_stage(cli, Stage::Resolve),
        Command::Classify => run_stage(cli, Stage::Classify),
        Command::Analyze(args) => analyze(cli, args),
        Command::Validate(args) => validate(cli, args),
        Command::Export(args) => {
            let config = load_config(cli)?;
            let n = export_dataset(&config.dataset_dir, args.format, &args.out)?;
            eprintln!("{n} author records written to {}", args.out.display());
            Ok(())
        }
        Command::RunAll => {
            let p = pipeline(cli, load_config(cli)?)?;
            for (stage, outcome) in p.run_all()? {
                report(stage, &outcome);
            }
            Ok(())
        }
        Command::Kappa(args) => kappa(cli, args),
        Command::Fixture(args) => fixture(args),
        Command::Config => {
            print!("{}", toml::to_string(&load_config(cli)?)?);
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<PipelineError>() {
        return e.exit_code() as u8;
    }
    if err.chain().any(|c| c.is::<std::io::Error>()) {
        3
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if !matches!(
                err.downcast_ref::<PipelineError>(),
                Some(PipelineError::Violations(_))
            ) {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
