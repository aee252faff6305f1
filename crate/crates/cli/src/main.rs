use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use eventshot_cli::config::{BaselineModeName, Config};
use eventshot_cli::error::{exit_code, EXIT_USAGE};
use eventshot_cli::pipeline::{self, BaselineOverrides, Ctx, EmbedKind, Providers};
use eventshot_core::baseline::ScoreWeights;
use eventshot_core::exec::Execution;
use eventshot_core::media::DEFAULT_FPS;
use eventshot_core::retrieval::SelectionMode;

#[derive(Parser)]
#[command(name = "eventshot", version, about = "Plan, select, and crop an event photo portfolio from video frames")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured work directory.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Runs every batch step on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a shot list for an event.
    Plan {
        #[arg(long)]
        event: String,
        /// List length; defaults to the configured portfolio size.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Register a frame directory or decode a video into frames.
    Ingest {
        #[arg(long)]
        source: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FPS)]
        fps: f64,
    },
    /// Detect faces in every ingested frame.
    Faces,
    /// Embed frames or shot-list ideas.
    Embed {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Store raw vectors without normalization or outlier suppression.
        #[arg(long)]
        no_hygiene: bool,
    },
    /// Pick one frame per idea and compute face crops.
    Select {
        #[arg(long, value_enum)]
        mode: Option<SelectArg>,
    },
    /// Run the unsupervised video summarization baseline.
    Baseline {
        #[arg(long, value_enum)]
        mode: Option<BaselineArg>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        block_size: Option<usize>,
        /// Uniqueness and diversity weights, e.g. `0.5,0.5`.
        #[arg(long, value_parser = parse_weights)]
        weights: Option<ScoreWeights>,
    },
    /// Render a portfolio or baseline selection as a grid image.
    Collage {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-dimension statistics and histograms of an embeddings file.
    Diagnose {
        #[arg(long, value_enum, default_value = "frames")]
        kind: KindArg,
        /// Embeddings file; defaults to the one in the work directory.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Preference-study and score-survey bookkeeping.
    Evaluate(EvaluateArgs),
    /// Write the synthetic test event.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = eventshot_core::fixture::FIXTURE_FRAMES)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(subcommand)]
    command: EvaluateCommand,
}

#[derive(Subcommand)]
enum EvaluateCommand {
    /// Build side-randomized comparison sheets and their key.
    MakeSheets {
        /// JSON list of `{event, collages: {method: path}}`.
        #[arg(long)]
        collages: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Count wins per method from a `rater_id,event,choice` CSV.
    Tally {
        #[arg(long)]
        votes: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        plot: bool,
    },
    /// Mean and sample deviation from a `rater_id,own_score,lm_score` CSV.
    Scores {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        plot: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Frames,
    Ideas,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectArg {
    Dup,
    Unique,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Budget,
    Topk,
}

fn parse_weights(s: &str) -> Result<ScoreWeights, String> {
    let (u, d) = s.split_once(',').ok_or("expected `uniqueness,diversity`")?;
    let u: f64 = u.trim().parse().map_err(|e| format!("{e}"))?;
    let d: f64 = d.trim().parse().map_err(|e| format!("{e}"))?;
    ScoreWeights::new(u, d).map_err(|e| e.to_string())
}

fn kind(k: KindArg) -> EmbedKind {
    match k {
        KindArg::Frames => EmbedKind::Frames,
        KindArg::Ideas => EmbedKind::Ideas,
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(w) = cli.workdir {
        cfg.workdir = w;
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let ctx = Ctx { cfg, exec };
    let providers = || Providers::from_config(&ctx.cfg).context("configuring providers");
    match cli.command {
        Command::Plan { event, n } => print_json(&pipeline::plan(&ctx, &providers()?, &event, n)?),
        Command::Ingest { source, fps } => {
            let m = pipeline::ingest(&ctx, &source, fps)?;
            println!("{} frames from {}", m.entries.len(), m.source);
            Ok(())
        }
        Command::Faces => {
            let f = pipeline::faces(&ctx, &providers()?)?;
            let with = f.frames.iter().filter(|x| !x.faces.is_empty()).count();
            println!("{with} of {} frames contain faces", f.frames.len());
            Ok(())
        }
        Command::Embed { kind: k, no_hygiene } => {
            let p = pipeline::embed(&ctx, &providers()?, kind(k), !no_hygiene)?;
            println!("{}", p.display());
            Ok(())
        }
        Command::Select { mode } => {
            let mode = mode.map(|m| match m {
                SelectArg::Dup => SelectionMode::AllowDuplicates,
                SelectArg::Unique => SelectionMode::UniqueGreedy,
            });
            print_json(&pipeline::select(&ctx, mode)?)
        }
        Command::Baseline {
            mode,
            k,
            block_size,
            weights,
        } => {
            let o = BaselineOverrides {
                mode: mode.map(|m| match m {
                    BaselineArg::Budget => BaselineModeName::Budget,
                    BaselineArg::Topk => BaselineModeName::Topk,
                }),
                k,
                block_size,
                weights,
            };
            print_json(&pipeline::baseline(&ctx, &o)?.frame_ids)
        }
        Command::Collage { input, output } => {
            let p = pipeline::collage(&ctx, &input, output.as_deref())?;
            println!("{}", p.display());
            Ok(())
        }
        Command::Diagnose { kind: k, input, bins } => print_json(&pipeline::diagnose(&ctx, kind(k), input.as_deref(), bins)?),
        Command::Evaluate(EvaluateArgs { command }) => match command {
            EvaluateCommand::MakeSheets { collages, seed } => {
                let (s, k) = pipeline::make_sheets(&ctx, &collages, seed)?;
                println!("{}\n{}", s.display(), k.display());
                Ok(())
            }
            EvaluateCommand::Tally { votes, key, plot } => {
                print!("{}", pipeline::tally(&ctx, &votes, &key, plot)?);
                Ok(())
            }
            EvaluateCommand::Scores { scores, plot } => {
                print!("{}", pipeline::scores(&ctx, &scores, plot)?);
                Ok(())
            }
        },
        Command::Fixture { out, frames, seed } => {
            let m = pipeline::make_fixture(&out, frames, seed)?;
            println!("{} frames in {}", m.entries.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
