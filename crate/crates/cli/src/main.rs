//! `kgverb`: runs the verbalization pipeline one stage at a time. Stages
//! talk only through files, so an external generator can sit between
//! `serialize` and `score`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use config::{parse_cutoff, Overrides, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "kgverb", version, about = "Knowledge-graph verbalization pipeline")]
struct Cli {
    /// JSON config file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads per stage. Never changes output.
    #[arg(long, global = true, env = "KGVERB_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Fail on the first malformed record instead of skipping it.
    #[arg(long, global = true)]
    strict: bool,
    /// Add a missing canonical name to an entity's aliases instead of
    /// rejecting the entity.
    #[arg(long, global = true)]
    repair: bool,
    #[arg(long, global = true)]
    entities: Option<PathBuf>,
    #[arg(long, global = true)]
    triples: Option<PathBuf>,
    #[arg(long, global = true)]
    pages: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and check entities, triples and pages; exit 1 on any bad record.
    Validate,
    /// Align triples to page sentences: aligned.jsonl and stats.json.
    Align {
        #[arg(short, long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Count relation co-occurrence over aligned sentences.
    Cooc {
        #[arg(long)]
        aligned: PathBuf,
        #[arg(short, long, default_value = "cooc.tsv")]
        out: PathBuf,
    },
    /// Chain each subject's triples into groups.
    Group {
        #[arg(long)]
        cooc: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        max_depth: Option<u64>,
        /// Minimum co-occurrence count, or `inf`.
        #[arg(long, value_parser = parse_cutoff)]
        cutoff: Option<u64>,
        #[arg(short, long, default_value = "groups.jsonl")]
        out: PathBuf,
    },
    /// Write generator inputs: train.tsv from aligned data, inputs.txt from groups.
    #[command(group(ArgGroup::new("source").required(true).multiple(true).args(["aligned", "groups"])))]
    Serialize {
        #[arg(long)]
        aligned: Option<PathBuf>,
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(short, long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Score generated sentences with the built-in coverage heuristic.
    Score {
        #[arg(long)]
        groups: PathBuf,
        /// `group_line<TAB>sentence` rows.
        #[arg(long)]
        generated: PathBuf,
        #[arg(short, long, default_value = "scores.tsv")]
        out: PathBuf,
    },
    /// Drop the lowest-scored fraction of generated sentences.
    Filter {
        #[arg(long)]
        groups: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(short, long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Correlate predicted scores with human ratings.
    EvalScorer {
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        human: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Merge kept sentences into one document per subject.
    Package {
        #[arg(long)]
        kept: PathBuf,
        #[arg(short, long, default_value = "documents.jsonl")]
        out: PathBuf,
    },
    /// Render corpus statistics.
    Report {
        #[command(subcommand)]
        kind: ReportKind,
    },
}

#[derive(Debug, Subcommand)]
enum ReportKind {
    /// The alignment table from stats.json.
    Alignment {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Chain-length histogram of groups.jsonl.
    Grouping {
        #[arg(long)]
        groups: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        max_depth: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (max_depth, cutoff, fraction) = match &cli.command {
        Command::Group { max_depth, cutoff, .. } => (*max_depth, *cutoff, None),
        Command::Filter { fraction, .. } => (None, None, *fraction),
        Command::Report {
            kind: ReportKind::Grouping { max_depth, .. },
        } => (*max_depth, None, None),
        _ => (None, None, None),
    };
    let overrides = Overrides {
        entities: cli.entities,
        triples: cli.triples,
        pages: cli.pages,
        max_depth: max_depth.map(|d| d as usize),
        cutoff,
        fraction,
        strict: cli.strict,
        repair: cli.repair,
        workers: cli.workers.map(|w| w as usize),
    };
    let cfg = PipelineConfig::resolve(cli.config.as_deref(), overrides)?;
    let command = cli.command;
    let workers = cfg.workers;
    let exec = move || -> Result<ExitCode> {
        match command {
            Command::Validate => return commands::validate(&cfg),
            Command::Align { out_dir } => commands::align(&cfg, &out_dir)?,
            Command::Cooc { aligned, out } => commands::cooc(&aligned, &out)?,
            Command::Group { cooc, out, .. } => commands::group(&cfg, &cooc, &out)?,
            Command::Serialize {
                aligned,
                groups,
                out_dir,
            } => commands::serialize(&cfg, aligned.as_deref(), groups.as_deref(), &out_dir)?,
            Command::Score { groups, generated, out } => commands::score(&cfg, &groups, &generated, &out)?,
            Command::Filter {
                groups,
                generated,
                scores,
                out_dir,
                ..
            } => commands::filter(&cfg, &groups, &generated, &scores, &out_dir)?,
            Command::EvalScorer {
                predicted,
                human,
                format,
            } => commands::eval(&predicted, &human, format)?,
            Command::Package { kept, out } => commands::package(&kept, &out)?,
            Command::Report { kind } => match kind {
                ReportKind::Alignment { stats, format } => commands::report_alignment_cmd(&stats, format)?,
                ReportKind::Grouping { groups, format, .. } => commands::report_grouping_cmd(&cfg, &groups, format)?,
            },
        }
        Ok(ExitCode::SUCCESS)
    };
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("starting worker pool")?
            .install(exec),
        None => exec(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
