//! `aiview` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use aiview_core::analytics::{analyze_study, synthetic::synthetic_csv, ReportFormat};
use aiview_core::llm::{DEFAULT_LLM_URL, DEFAULT_MODEL, ENV_LLM_MODEL, ENV_LLM_URL};
use aiview_core::storage::{export_answers_csv, ENV_DATA_DIR};
use aiview_core::{
    validate_config, ChatBackend, HttpBackend, Orchestrator, ScriptedBackend, StudyConfig, TranscriptStore,
    TurnResult,
};
use aiview_service::{AppState, DEFAULT_BIND, ENV_ADMIN_TOKEN, ENV_BIND};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

const DEFAULT_DATA_DIR: &str = "aiview-data";

#[derive(Debug, Parser)]
#[command(name = "aiview", version, about = "Adaptive LLM-driven research interviews")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an interview in the terminal, reading answers from stdin.
    Interview {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, env = ENV_DATA_DIR, default_value = DEFAULT_DATA_DIR)]
        data_dir: PathBuf,
    },
    /// Check a study configuration.
    ValidateConfig { path: PathBuf },
    /// Write one CSV row per surveyed session.
    Export {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = ENV_DATA_DIR, default_value = DEFAULT_DATA_DIR)]
        data_dir: PathBuf,
    },
    /// Descriptives and regression for an exported CSV.
    Analyze {
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        report_format: Format,
    },
    /// Generate a synthetic survey CSV.
    Synthesize {
        #[arg(long, default_value_t = 41)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the HTTP API.
    Serve {
        #[arg(long, env = ENV_BIND, default_value = DEFAULT_BIND)]
        bind: SocketAddr,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, env = ENV_DATA_DIR, default_value = DEFAULT_DATA_DIR)]
        data_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct BackendArgs {
    /// Base URL of an OpenAI-compatible server.
    #[arg(long, env = ENV_LLM_URL, default_value = DEFAULT_LLM_URL, conflicts_with = "fixture")]
    llm_url: String,
    #[arg(long, env = ENV_LLM_MODEL, default_value = DEFAULT_MODEL)]
    model: String,
    /// Replay canned stage replies instead of calling a model.
    #[arg(long)]
    fixture: Option<PathBuf>,
}

impl BackendArgs {
    fn build(&self) -> Result<Arc<dyn ChatBackend>> {
        Ok(match &self.fixture {
            Some(path) => Arc::new(ScriptedBackend::from_file(path).map_err(|e| anyhow!("{e}"))?),
            None => Arc::new(HttpBackend::new(&self.llm_url)),
        })
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn load_config(path: &Path) -> Result<StudyConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn interview(config: &Path, backend: &BackendArgs, data_dir: &Path) -> Result<()> {
    let config = load_config(config)?;
    let report = validate_config(&config);
    if !report.is_ok() {
        bail!("invalid config: {report}");
    }
    let store = TranscriptStore::new(data_dir);
    let orch = Orchestrator::new(backend.build()?, &backend.model).with_store(store.clone());
    let total = config.total_quota();

    let mut session = orch.start_session(config).map_err(|e| anyhow!("{e}"))?;
    let mut out = std::io::stdout().lock();
    let first = &session.exchanges[0].question;
    writeln!(out, "{}\n", session.config.study_title)?;
    writeln!(out, "Question 1 of {total}: {}", first.text)?;

    let mut lines = std::io::stdin().lock().lines();
    loop {
        write!(out, "> ")?;
        out.flush()?;
        let answer = match lines.next() {
            Some(line) => line?,
            None => bail!(
                "input ended before the interview finished; transcript saved at {}",
                store.path_for(&session.session_id).display()
            ),
        };
        if answer.trim().is_empty() {
            continue;
        }
        match orch.submit_answer(&mut session, &answer).map_err(|e| anyhow!("{e}"))? {
            TurnResult::NextTurn { exchange } => {
                writeln!(out, "\n{}", exchange.response_message)?;
                writeln!(out, "{}", exchange.transition_message)?;
                writeln!(out, "Question {} of {total}: {}", exchange.index + 1, exchange.question.text)?;
            }
            TurnResult::Finished { closing_message } => {
                writeln!(out, "\n{closing_message}")?;
                eprintln!(
                    "transcript saved at {}",
                    store.path_for(&session.session_id).display()
                );
                return Ok(());
            }
            TurnResult::Failed { error, .. } => bail!("{error}"),
        }
    }
}

fn export(out: &Path, data_dir: &Path) -> Result<()> {
    let docs = TranscriptStore::new(data_dir).list().map_err(|e| anyhow!("{e}"))?;
    let export = export_answers_csv(&docs);
    std::fs::write(out, &export.csv).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "exported {} sessions ({} without a survey skipped)",
        docs.len() - export.skipped,
        export.skipped
    );
    Ok(())
}

fn analyze(csv: &Path, format: Format) -> Result<()> {
    let text = std::fs::read_to_string(csv).with_context(|| format!("reading {}", csv.display()))?;
    let report = analyze_study(&text).map_err(|e| anyhow!("{e}"))?;
    let format = match format {
        Format::Text => ReportFormat::Text,
        Format::Json => ReportFormat::Json,
    };
    print!("{}", report.render(format));
    Ok(())
}

fn serve(bind: SocketAddr, backend: &BackendArgs, data_dir: &Path) -> Result<()> {
    let store = TranscriptStore::new(data_dir);
    let orch = Orchestrator::new(backend.build()?, &backend.model).with_store(store.clone());
    let token = std::env::var(ENV_ADMIN_TOKEN).ok();
    if token.as_deref().is_none_or(str::is_empty) {
        eprintln!("warning: {ENV_ADMIN_TOKEN} is not set; admin endpoints will refuse every request");
    }
    let state = Arc::new(AppState::new(orch, store).with_admin_token(token));
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(aiview_service::serve(bind, state, async {
        let _ = tokio::signal::ctrl_c().await;
    }))?;
    eprintln!("shut down");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Interview {
            config,
            backend,
            data_dir,
        } => interview(&config, &backend, &data_dir),
        Command::ValidateConfig { path } => {
            let report = validate_config(&load_config(&path)?);
            if report.is_ok() {
                println!("{report}");
                Ok(())
            } else {
                bail!("{report}")
            }
        }
        Command::Export { out, data_dir } => export(&out, &data_dir),
        Command::Analyze { csv, report_format } => analyze(&csv, report_format),
        Command::Synthesize { n, seed, out } => {
            let csv = synthetic_csv(n, seed);
            match out {
                Some(path) => std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display())),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::Serve {
            bind,
            backend,
            data_dir,
        } => serve(bind, &backend, &data_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve { .. }) {
        "info"
    } else {
        "warn"
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
