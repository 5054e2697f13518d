use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use jova::commands;
use jova::config::RunConfig;
use jova::ingest::Format;
use jova::report::{recommendations_tsv, stats_table};
use jova_core::data::Split;
use jova_core::model::Mode;

#[derive(Parser)]
#[command(name = "jova", version, about = "Joint user/item VAE recommender")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override any config field, e.g. `--set train.max_epochs=50`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest, binarize, filter and split a raw rating file.
    Prepare {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<Format>,
    },
    /// Train a model on a prepared dataset.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score a trained model on the test (or validation) split.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_parser = parse_split)]
        split: Option<Split>,
        /// Comma-separated cutoffs.
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        /// Also write per_user.tsv.
        #[arg(long)]
        per_user: bool,
    },
    /// Print top-k unseen items for the given user ids.
    Recommend {
        /// Comma-separated original user ids.
        #[arg(long, value_delimiter = ',', required = true)]
        users: Vec<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Write the lists here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "tsv" => Ok(Format::Tsv),
        "movielens-dat" => Ok(Format::MovielensDat),
        _ => Err(format!("unknown format {s:?} (csv, tsv, movielens-dat)")),
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "jova" => Ok(Mode::Jova),
        "jova_hinge" => Ok(Mode::JovaHinge),
        "user_vae_only" => Ok(Mode::UserVaeOnly),
        _ => Err(format!("unknown mode {s:?} (jova, jova_hinge, user_vae_only)")),
    }
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s {
        "valid" => Ok(Split::Valid),
        "test" => Ok(Split::Test),
        _ => Err(format!("unknown split {s:?} (valid, test)")),
    }
}

fn resolve(global: &GlobalArgs, command: &Command) -> jova::Result<RunConfig> {
    let mut config = RunConfig::load(global.config.as_deref())?;
    for o in &global.overrides {
        config.apply_override(o)?;
    }
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(out) = &global.out {
        config.out = out.clone();
    }
    match command {
        Command::Prepare { input, format } => {
            if input.is_some() {
                config.data.input = input.clone();
            }
            if let Some(f) = format {
                config.data.format = *f;
            }
        }
        Command::Train { dataset, mode, epochs } => {
            if dataset.is_some() {
                config.data.dataset = dataset.clone();
            }
            if let Some(m) = mode {
                config.model.mode = *m;
            }
            if let Some(e) = epochs {
                config.train.max_epochs = *e;
            }
        }
        Command::Evaluate {
            dataset,
            model,
            split,
            ks,
            per_user,
        } => {
            if dataset.is_some() {
                config.data.dataset = dataset.clone();
            }
            if model.is_some() {
                config.model.path = model.clone();
            }
            if let Some(s) = split {
                config.eval.split = *s;
            }
            if let Some(ks) = ks {
                config.eval.ks = ks.clone();
            }
            config.eval.per_user |= per_user;
        }
        Command::Recommend { k, dataset, model, .. } => {
            if dataset.is_some() {
                config.data.dataset = dataset.clone();
            }
            if model.is_some() {
                config.model.path = model.clone();
            }
            if let Some(k) = k {
                config.eval.recommend_k = *k;
            }
        }
    }
    Ok(config)
}

fn run(cli: Cli) -> jova::Result<()> {
    let config = resolve(&cli.global, &cli.command)?;
    let started = Instant::now();
    match &cli.command {
        Command::Prepare { .. } => {
            let s = commands::prepare(&config)?;
            println!(
                "read {} lines ({} malformed), {} ratings, {} positives",
                s.lines,
                s.malformed_lines.len(),
                s.ratings,
                s.positives
            );
            print!("{}", stats_table(&s.stats));
            let [train, valid, test] = s.split_counts;
            println!("split train/valid/test: {train}/{valid}/{test}");
            println!("wrote {}", s.dataset.display());
        }
        Command::Train { .. } => {
            let s = commands::train(&config, |r| {
                let ndcg = r.valid_ndcg.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
                println!(
                    "epoch {:>4}  loss {:>14.4}  valid NDCG@{} {}{}",
                    r.epoch,
                    r.train_loss,
                    config.train.selection_k,
                    ndcg,
                    if r.improved { "  *" } else { "" }
                );
            })?;
            match s.best_valid_ndcg {
                Some(v) => println!(
                    "best validation NDCG@{} {v:.4} at epoch {} of {}",
                    config.train.selection_k, s.best_epoch, s.epochs
                ),
                None => println!("no validation users; kept epoch {}", s.best_epoch),
            }
            println!("wrote {} and {}", s.model.display(), s.log.display());
        }
        Command::Evaluate { .. } => {
            let s = commands::evaluate(&config)?;
            print!("{}", s.table);
            for f in &s.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Recommend { users, output, .. } => {
            let recs = commands::recommend(&config, users, config.eval.recommend_k, output.as_deref())?;
            match output {
                Some(p) => println!("wrote {}", p.display()),
                None => print!("{}", recommendations_tsv(&recs)),
            }
        }
    }
    if !matches!(cli.command, Command::Recommend { output: None, .. }) {
        println!("done in {:.1}s", started.elapsed().as_secs_f64());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
