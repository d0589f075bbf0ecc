//! Command-line entry points: answer, train, eval, and fixture store
//! management. Exit codes distinguish config errors (2), input parse
//! errors (3) and replay misses (4) from everything else (1).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::answer::AnswerFile;
use crate::classify::{load_model, save_model};
use crate::config::PipelineConfig;
use crate::eval::{evaluate_answers, format_table};
use crate::pipeline::{
    outcomes_to_answer_file, read_to_string, write_string, GoldStandard, Pipeline, PipelineError,
};
use crate::text::parse_questions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_REPLAY_MISS: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ws4a",
    about = "Biomedical question answering over recorded web services"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer a question file and write a BioASQ-style answer file.
    Answer {
        /// Question input file (JSON).
        #[arg(long)]
        questions: PathBuf,
        /// Pipeline config (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Gateway mode override: record, replay or passthrough.
        #[arg(long)]
        mode: Option<String>,
        /// Trained model file; without it the grade threshold decides.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output answer file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the relevance classifier from a gold file.
    Train {
        #[arg(long)]
        questions: PathBuf,
        /// Gold file in the answer-file schema.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        mode: Option<String>,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an answer file against a gold file.
    Eval {
        #[arg(long)]
        answers: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Second answer file for the two-variant comparison table.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        report_json: Option<PathBuf>,
    },
    /// Record or verify the fixture store for a question set.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixturesAction {
    /// Populate the store by running the pipeline against the network.
    Record {
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Replay the question set and report fixture misses.
    Verify {
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Pipeline(PipelineError),
    InputParse(String),
    Misses(usize),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Pipeline(e)
    }
}

fn exit_code(error: &CliError) -> i32 {
    match error {
        CliError::InputParse(_) => EXIT_PARSE,
        CliError::Misses(_) => EXIT_REPLAY_MISS,
        CliError::Pipeline(e) => {
            if e.is_replay_miss() {
                EXIT_REPLAY_MISS
            } else {
                match e {
                    PipelineError::Config(_) => EXIT_CONFIG,
                    PipelineError::Domain(_) | PipelineError::Eval(_) => EXIT_PARSE,
                    PipelineError::Classify(crate::classify::ClassifyError::Format(_)) => {
                        EXIT_PARSE
                    }
                    _ => EXIT_ERROR,
                }
            }
        }
    }
}

/// Parses real process arguments and runs; returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args())
}

/// Argument-injectable runner used by tests.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success exits
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Pipeline(inner) => eprintln!("error: {inner}"),
                CliError::InputParse(message) => eprintln!("error: {message}"),
                CliError::Misses(count) => eprintln!("error: {count} fixture misses"),
            }
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Answer {
            questions,
            config,
            mode,
            model,
            out,
        } => cmd_answer(&questions, config.as_deref(), mode.as_deref(), model.as_deref(), &out),
        Command::Train {
            questions,
            gold,
            config,
            mode,
            out,
        } => cmd_train(&questions, &gold, config.as_deref(), mode.as_deref(), &out),
        Command::Eval {
            answers,
            gold,
            compare,
            report_json,
        } => cmd_eval(&answers, &gold, compare.as_deref(), report_json.as_deref()),
        Command::Fixtures { action } => match action {
            FixturesAction::Record { questions, config } => {
                cmd_fixtures(&questions, config.as_deref(), true)
            }
            FixturesAction::Verify { questions, config } => {
                cmd_fixtures(&questions, config.as_deref(), false)
            }
        },
    }
}

fn load_questions(path: &Path) -> Result<Vec<crate::text::Question>, CliError> {
    let content = read_to_string(path)?;
    parse_questions(&content)
        .map_err(|e| CliError::InputParse(format!("{}: {e}", path.display())))
}

fn load_answer_file(path: &Path) -> Result<AnswerFile, CliError> {
    let content = read_to_string(path)?;
    AnswerFile::from_json(&content)
        .map_err(|e| CliError::InputParse(format!("{}: {e}", path.display())))
}

fn cmd_answer(
    questions_path: &Path,
    config_path: Option<&Path>,
    mode: Option<&str>,
    model_path: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let config = PipelineConfig::load(config_path, mode).map_err(PipelineError::Config)?;
    let questions = load_questions(questions_path)?;
    let model = match model_path {
        Some(p) => Some(load_model(p).map_err(PipelineError::Classify)?),
        None => None,
    };
    let pipeline = Pipeline::new(config)?;
    let outcomes = pipeline.answer_questions(&questions, model.as_ref())?;
    for outcome in &outcomes {
        println!(
            "{}: {:.3}s  docs={} snippets={} concepts={} triples={}{}",
            outcome.question.id,
            outcome.elapsed.as_secs_f64(),
            outcome.answer.documents.len(),
            outcome.answer.snippets.len(),
            outcome.answer.concepts.len(),
            outcome.answer.triples.len(),
            if outcome.degraded { "  (degraded)" } else { "" }
        );
    }
    let file = outcomes_to_answer_file(&outcomes);
    write_string(out, &file.to_json())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_train(
    questions_path: &Path,
    gold_path: &Path,
    config_path: Option<&Path>,
    mode: Option<&str>,
    out: &Path,
) -> Result<(), CliError> {
    let config = PipelineConfig::load(config_path, mode).map_err(PipelineError::Config)?;
    let questions = load_questions(questions_path)?;
    let gold = GoldStandard::from_file(load_answer_file(gold_path)?)
        .map_err(PipelineError::Eval)?;
    let pipeline = Pipeline::new(config)?;
    let outcome = pipeline.train(&questions, &gold)?;
    save_model(&outcome.model, out).map_err(PipelineError::Classify)?;
    println!(
        "trained on {} examples ({} relevant), vocabulary {}",
        outcome.example_count,
        outcome.positive_count,
        outcome.model.vocabulary.len()
    );
    match outcome.holdout_accuracy {
        Some(acc) => println!("holdout accuracy: {acc:.3}"),
        None => println!("holdout accuracy: n/a (no holdout examples)"),
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_eval(
    answers_path: &Path,
    gold_path: &Path,
    compare_path: Option<&Path>,
    report_json: Option<&Path>,
) -> Result<(), CliError> {
    let started = std::time::Instant::now();
    let answers = load_answer_file(answers_path)?;
    let gold = load_answer_file(gold_path)?;
    let report = evaluate_answers(&answers, &gold, started.elapsed().as_secs_f64())
        .map_err(PipelineError::Eval)?;

    let table = match compare_path {
        Some(path) => {
            let other = load_answer_file(path)?;
            let other_report = evaluate_answers(&other, &gold, started.elapsed().as_secs_f64())
                .map_err(PipelineError::Eval)?;
            format_table(&[("ML", &report), ("w/o ML", &other_report)])
        }
        None => format_table(&[("all", &report)]),
    };
    print!("{table}");
    for (id, q) in &report.per_question {
        println!(
            "{id}: docs P={:.3} R={:.3} F={:.3}  snippets P={:.3} R={:.3} F={:.3}",
            q.docs.precision,
            q.docs.recall,
            q.docs.f_measure,
            q.snippets.precision,
            q.snippets.recall,
            q.snippets.f_measure
        );
    }
    if let Some(path) = report_json {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::InputParse(e.to_string()))?;
        write_string(path, &format!("{json}\n"))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_fixtures(
    questions_path: &Path,
    config_path: Option<&Path>,
    record: bool,
) -> Result<(), CliError> {
    let mode = if record { "record" } else { "replay" };
    let config = PipelineConfig::load(config_path, Some(mode)).map_err(PipelineError::Config)?;
    let questions = load_questions(questions_path)?;
    let pipeline = Pipeline::new(config)?;
    if record {
        let outcomes = pipeline.answer_questions(&questions, None)?;
        println!("recorded fixtures for {} questions", outcomes.len());
        Ok(())
    } else {
        let mut failed = 0usize;
        for question in &questions {
            if let Err(e) = pipeline.answer_question(question, None) {
                if e.is_replay_miss() {
                    eprintln!("{}: {e}", question.id);
                    failed += 1;
                } else {
                    return Err(e.into());
                }
            }
        }
        let mut misses = pipeline.gateway.recorded_misses();
        misses.dedup();
        for (key, url) in &misses {
            println!("miss {key} {url}");
        }
        if misses.is_empty() && failed == 0 {
            println!("fixture store complete for {} questions", questions.len());
            Ok(())
        } else {
            Err(CliError::Misses(misses.len().max(failed)))
        }
    }
}
