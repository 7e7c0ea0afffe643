//! `insight`: offline artifact producers (data, corpus, models) plus the
//! service and its clients (REPL, evaluation).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use insight_client::{ClientError, InsightClient};
use insight_core::api::ChatApiRequest;
use insight_core::dataplane::generate_store;
use insight_core::embedding::HashingEmbedder;
use insight_core::eval::{generate_corpus, read_annotations, read_items, run_benchmark, Corpus, CorpusCounts, LabeledQuestion};
use insight_core::manager::{DateRange, OodConfig, RouterConfig};
use insight_core::training::{errors_to_text, train_ood_on, train_router_on};
use insight_core::Error;
use insight_service::ServiceConfig;
use tokio::io::{AsyncBufReadExt, BufReader};

#[derive(Parser)]
#[command(name = "insight", version, about = "Analytics agent for seller questions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded seller store as facts and benchmark CSV files.
    GenData {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        products: usize,
        #[arg(long, default_value = "2023-01-01")]
        from: NaiveDate,
        #[arg(long, default_value = "2024-09-30")]
        to: NaiveDate,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Generate the labeled question corpus as JSON lines.
    GenCorpus {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "corpus.jsonl")]
        out: PathBuf,
        /// Write the gate view (stated in-domain count plus out-of-domain)
        /// instead of every generated question.
        #[arg(long)]
        gate_view: bool,
    },
    /// Train the out-of-domain autoencoder on the corpus's in-domain
    /// questions. Also writes the per-sample training errors next to the
    /// model.
    TrainOod {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        lambda: f64,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the model path with an `.errors.txt` extension.
        #[arg(long)]
        errors_out: Option<PathBuf>,
    },
    /// Train the presenter/insight router head.
    TrainRouter {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP chat service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Interactive chat; type `exit` to leave.
    Repl {
        #[arg(long, conflicts_with = "url")]
        config: Option<PathBuf>,
        /// Talk to a running service instead of starting one.
        #[arg(long)]
        url: Option<String>,
    },
    /// Run a benchmark file through the service and score it.
    Eval {
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "url")]
        config: Option<PathBuf>,
        #[arg(long)]
        url: Option<String>,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
    },
}

/// Exit 1 for problems the user can fix, 2 for everything else.
#[derive(Debug)]
enum Failure {
    User(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = format!("{} ({})", e, e.code().as_str());
        match e.root() {
            Error::EmptyQuery
            | Error::QueryTooLong { .. }
            | Error::InvalidInput(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Serialization(_)
            | Error::EmptyInput
            | Error::NoKeywords
            | Error::TooFewSamples { .. }
            | Error::SingleClassData
            | Error::InsufficientVariation { .. } => Failure::User(msg),
            _ => Failure::Internal(msg),
        }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Transport { .. } | ClientError::NotReady(_) => Failure::User(e.to_string()),
            ClientError::Api { status, .. } if (400..500).contains(&status) => Failure::User(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::User(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io(path, e))
}

fn read_corpus(path: &Path) -> Result<Vec<LabeledQuestion>, Failure> {
    if !path.exists() {
        return Err(Failure::User(format!("{}: no such file", path.display())));
    }
    Ok(Corpus::read_jsonl(path)?)
}

fn load_config(path: Option<&Path>) -> Result<ServiceConfig, Failure> {
    Ok(match path {
        Some(p) => ServiceConfig::from_file(p)?,
        None => ServiceConfig::fixture(),
    })
}

/// A client for `url`, or for a service started in-process from `config`.
async fn connect(config: Option<&Path>, url: Option<&str>) -> Result<InsightClient, Failure> {
    let client = match url {
        Some(u) => InsightClient::new(u),
        None => {
            let (addr, _, _) = insight_service::start(load_config(config)?, "127.0.0.1:0").await?;
            InsightClient::new(format!("http://{addr}"))
        }
    };
    client.wait_ready(Duration::from_secs(600)).await?;
    Ok(client)
}

fn gen_data(seed: u64, products: usize, from: NaiveDate, to: NaiveDate, out_dir: &Path) -> Result<(), Failure> {
    let range = DateRange::new(from, to).ok_or_else(|| Failure::User(format!("--from {from} is after --to {to}")))?;
    if products == 0 {
        return Err(Failure::User("--products must be positive".into()));
    }
    let store = generate_store(seed, products, range)?;
    std::fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let (facts, bench) = (out_dir.join("facts.csv"), out_dir.join("benchmarks.csv"));
    store.write_csv(&facts, &bench)?;
    println!("wrote {} fact rows to {} and {} benchmark rows to {}", store.facts().len(), facts.display(), store.benchmarks().len(), bench.display());
    Ok(())
}

fn gen_corpus(seed: u64, out: &Path, gate_view: bool) -> Result<(), Failure> {
    let corpus = generate_corpus(seed, CorpusCounts::default())?;
    let questions = if gate_view { corpus.gate_view() } else { corpus.questions.clone() };
    let mut text = String::new();
    for q in &questions {
        text.push_str(&serde_json::to_string(q).map_err(|e| Failure::Internal(e.to_string()))?);
        text.push('\n');
    }
    write(out, &text)?;
    let counts = corpus.class_counts();
    println!("wrote {} questions to {} (generated per class: {counts:?})", questions.len(), out.display());
    Ok(())
}

fn train_ood_cmd(corpus: &Path, lambda: f64, hidden: usize, epochs: usize, out: &Path, errors_out: Option<&Path>) -> Result<(), Failure> {
    let questions = read_corpus(corpus)?;
    let cfg = OodConfig {
        lambda,
        hidden_dim: hidden,
        epochs,
        ..OodConfig::default()
    };
    cfg.validate()?;
    let trained = train_ood_on(&HashingEmbedder::default(), &questions, &cfg)?;
    let errors_path = errors_out.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("errors.txt"));
    write(out, &trained.model.to_json()?)?;
    write(&errors_path, &errors_to_text(&trained.training_errors))?;
    let m = &trained.model;
    println!(
        "trained on {} in-domain questions: loss {:.6} -> {:.6}; mu {} sigma {} lambda {} threshold {}",
        trained.training_errors.len(),
        trained.initial_loss(),
        trained.final_loss(),
        m.mu,
        m.sigma,
        m.lambda,
        m.threshold
    );
    println!("wrote {} and {}", out.display(), errors_path.display());
    Ok(())
}

fn train_router_cmd(corpus: &Path, out: &Path) -> Result<(), Failure> {
    let questions = read_corpus(corpus)?;
    let trained = train_router_on(&HashingEmbedder::default(), &questions, &RouterConfig::default())?;
    write(out, &trained.model.to_json()?)?;
    let holdout = trained.holdout_accuracy.map(|a| format!("{a:.3}")).unwrap_or_else(|| "n/a".into());
    println!(
        "trained on {} questions: train accuracy {:.3}, holdout accuracy {holdout} on {}; wrote {}",
        trained.train_size,
        trained.train_accuracy,
        trained.holdout_size,
        out.display()
    );
    Ok(())
}

async fn serve(config: Option<&Path>, host: &str, port: u16) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let (addr, _, handle) = insight_service::start(cfg, &format!("{host}:{port}")).await?;
    println!("listening on http://{addr}");
    tokio::select! {
        r = handle => r.map_err(|e| Failure::Internal(e.to_string()))?,
        _ = tokio::signal::ctrl_c() => println!("shutting down"),
    }
    Ok(())
}

async fn repl(config: Option<&Path>, url: Option<&str>) -> Result<(), Failure> {
    let client = connect(config, url).await?;
    let session = format!("repl-{}", std::process::id());
    let mut lines = BufReader::new(tokio::io::stdin()).lines();
    loop {
        print!("> ");
        std::io::stdout().flush().ok();
        let Some(line) = lines.next_line().await.map_err(|e| Failure::Internal(e.to_string()))? else { break };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if matches!(line, "exit" | "quit") {
            break;
        }
        match client.chat_without_trace(&ChatApiRequest::new(line).with_session(&session)).await {
            Ok(r) => println!("{}\n[{} | {} ms]", r.answer, r.branch.as_str(), r.latency_ms),
            Err(ClientError::Api { body, .. }) => println!("error {}: {}", body.code, body.message),
            Err(e) => return Err(e.into()),
        }
    }
    println!("bye");
    Ok(())
}

async fn eval(benchmark: &Path, annotations: Option<&Path>, out: &Path, config: Option<&Path>, url: Option<&str>, concurrency: usize) -> Result<(), Failure> {
    if !benchmark.exists() {
        return Err(Failure::User(format!("{}: no such file", benchmark.display())));
    }
    let items = read_items(benchmark)?;
    let annotations = annotations.map(read_annotations).transpose()?;
    let client = connect(config, url).await?;
    let report = run_benchmark(Arc::new(client), &items, annotations.as_deref(), concurrency).await?;
    write(out, &report.to_json()?)?;
    print!("{}", report.render_table());
    println!("wrote {}", out.display());
    Ok(())
}

async fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenData { seed, products, from, to, out_dir } => gen_data(seed, products, from, to, &out_dir),
        Command::GenCorpus { seed, out, gate_view } => gen_corpus(seed, &out, gate_view),
        Command::TrainOod { corpus, lambda, hidden, epochs, out, errors_out } => train_ood_cmd(&corpus, lambda, hidden, epochs, &out, errors_out.as_deref()),
        Command::TrainRouter { corpus, out } => train_router_cmd(&corpus, &out),
        Command::Serve { config, port, host } => serve(config.as_deref(), &host, port).await,
        Command::Repl { config, url } => repl(config.as_deref(), url.as_deref()).await,
        Command::Eval { benchmark, annotations, out, config, url, concurrency } => {
            eval(&benchmark, annotations.as_deref(), &out, config.as_deref(), url.as_deref(), concurrency).await
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(2);
        }
    };
    match rt.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}
