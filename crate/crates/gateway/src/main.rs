//! The `parlor` command: serve the API, chat in a REPL, replay scripts,
//! validate flows, ingest corpora and summarize turn logs.

use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Parser, Subcommand};

use parlor_core::config::AppConfig;
use parlor_core::memory::LtmStore;
use parlor_core::metrics::{compute, parse_jsonl};
use parlor_core::packs::seed_ltm;
use parlor_core::replay::{parse_script, run_script, ServiceDriver};
use parlor_gateway::repl::{run_repl, ReplOptions};
use parlor_gateway::{api, build_service, validate_flows};

#[derive(Parser)]
#[command(name = "parlor", version, about = "Open-domain socialbot engine")]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the data directory.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Overrides the state directory.
    #[arg(long, global = true)]
    state_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chat on the console.
    Repl {
        /// Echo user lines and print no prompt.
        #[arg(long)]
        transcript: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Play a JSON replay script and print its transcript.
    Replay { script: PathBuf },
    /// Check flow files; prints one JSON diagnostic per line.
    ValidateFlows { path: PathBuf },
    /// Copy corpus packs (`<namespace>.json`) into long-term memory.
    IngestCorpus { packs: PathBuf },
    /// Engagement statistics from JSONL turn logs (a file or a directory).
    Metrics { logs: PathBuf },
}

fn load_config(cli: &Cli) -> anyhow::Result<AppConfig> {
    let mut cfg = AppConfig::load(cli.config.as_deref())?;
    if let Some(d) = &cli.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(d) = &cli.state_dir {
        cfg.state_dir = d.clone();
    }
    Ok(cfg)
}

fn read_logs(path: &PathBuf) -> anyhow::Result<String> {
    if !path.is_dir() {
        return std::fs::read_to_string(path).with_context(|| path.display().to_string());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut all = String::new();
    for f in files {
        all.push_str(&std::fs::read_to_string(&f).with_context(|| f.display().to_string())?);
    }
    Ok(all)
}

async fn serve(cfg: AppConfig, host: String, port: u16) -> anyhow::Result<()> {
    let svc = Arc::new(build_service(&cfg)?);
    let reaper = svc.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(30));
        loop {
            tick.tick().await;
            for id in reaper.expire_idle(Instant::now()) {
                log::info!("session {id} expired");
            }
        }
    });
    let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, api::router(svc))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::Repl { transcript } => {
            let svc = build_service(&load_config(&cli)?)?;
            let stdin = std::io::stdin();
            let mut out = std::io::stdout().lock();
            run_repl(&svc, BufReader::new(stdin.lock()), &mut out, ReplOptions { transcript: *transcript })?;
        }
        Command::Serve { host, port } => {
            let cfg = load_config(&cli)?;
            let host = host.clone().unwrap_or_else(|| cfg.host.clone());
            let port = port.unwrap_or(cfg.port);
            tokio::runtime::Runtime::new()?.block_on(serve(cfg, host, port))?;
        }
        Command::Replay { script } => {
            let src = std::fs::read_to_string(script).with_context(|| script.display().to_string())?;
            let script = parse_script(&src)?;
            let svc = build_service(&load_config(&cli)?)?;
            let report = run_script(&mut ServiceDriver { service: &svc }, &script)?;
            print!("{}", report.transcript_text());
            for (turn, msg) in &report.failures {
                eprintln!("turn {turn}: {msg}");
            }
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::ValidateFlows { path } => {
            let diags = validate_flows(path);
            let mut out = std::io::stdout().lock();
            for d in &diags {
                writeln!(out, "{}", serde_json::to_string(d)?)?;
            }
            if !diags.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::IngestCorpus { packs } => {
            let cfg = load_config(&cli)?;
            let store = LtmStore::open_default(cfg.ltm_dir())?;
            let n = seed_ltm(&store, packs)?;
            println!("{}", serde_json::json!({ "written": n, "ltm": store.root() }));
        }
        Command::Metrics { logs } => {
            let records = parse_jsonl(&read_logs(logs)?)?;
            println!("{}", serde_json::to_string_pretty(&compute(&records))?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
