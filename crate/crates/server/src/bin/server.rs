use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pvcscan_core::VulnDb;
use pvcscan_server::credentials::{add_client, load_credentials};
use pvcscan_server::{run_update, serve, Server, ServerConfig};

#[derive(Parser)]
#[command(name = "server", about = "Vulnerability scan server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scan server.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Ingest feeds from a directory into the database.
    Update {
        #[arg(long)]
        feeds: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Database file; overrides the config.
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Manage client credentials.
    Client {
        #[command(subcommand)]
        command: ClientCommand,
    },
}

#[derive(Subcommand)]
enum ClientCommand {
    /// Provision a client and print its secret and salt.
    Add {
        #[arg(long)]
        id: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Credentials file; overrides the config.
        #[arg(long)]
        credentials: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<ServerConfig> {
    match path {
        Some(p) => ServerConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ServerConfig::default()),
    }
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Serve { port, config } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(p) = port {
                cfg.port = p;
            }
            let creds = load_credentials(&cfg.credentials_file)?;
            if creds.is_empty() {
                tracing::warn!(file = %cfg.credentials_file.display(), "no client credentials loaded");
            }
            if cfg.firewall.is_empty() {
                tracing::warn!("firewall has no rules; every request will be rejected");
            }
            let db = Arc::new(VulnDb::open(&cfg.db_path)?);
            if !db.is_initialized() {
                tracing::warn!("database is empty; run `server update` first");
            }
            let addr = format!("{}:{}", cfg.bind, cfg.port);
            let server = Server::new(cfg, creds, db);
            server.start_workers();
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .with_context(|| format!("binding {addr}"))?;
                serve(server.clone(), listener, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await;
                anyhow::Ok(())
            })?;
            server.shutdown();
        }
        Command::Update { feeds, config, db } => {
            let cfg = load_config(config.as_ref())?;
            let path = db.unwrap_or(cfg.db_path);
            let db = VulnDb::open(&path)?;
            let summary = run_update(&db, &feeds)?;
            println!(
                "generation {}: {} CVEs ingested ({} skipped), {} dictionary entries, {} exploit links",
                summary.generation,
                summary.cves_upserted,
                summary.cves_skipped,
                summary.dictionary_entries,
                summary.exploit_links
            );
        }
        Command::Client {
            command: ClientCommand::Add { id, config, credentials },
        } => {
            let cfg = load_config(config.as_ref())?;
            let path = credentials.unwrap_or(cfg.credentials_file);
            let new = add_client(&path, &id)?;
            println!("client_id {id}");
            println!("secret {}", new.secret);
            println!("salt {}", new.salt_hex);
        }
    }
    Ok(())
}
