use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use pvcscan_client::{
    exceeds_threshold, render_report, Client, ClientConfig, ClientError, Format, TcpTransport, ThreadSleeper,
    EXIT_OK, EXIT_THRESHOLD, EXIT_USAGE,
};
use pvcscan_core::{load_inventory, ScanReport};

#[derive(Parser)]
#[command(name = "client", about = "Vulnerability scan client")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Server address, HOST:PORT.
    #[arg(long)]
    server: String,
    #[arg(long)]
    id: String,
    #[arg(long, env = "PVCSCAN_SECRET", hide_env_values = true)]
    secret: String,
    /// 16-byte salt as hex.
    #[arg(long)]
    salt: String,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Exit nonzero when any CVE scores at or above this CVSS.
    #[arg(long, value_name = "CVSS")]
    fail_on: Option<f64>,
    /// Seconds between result polls.
    #[arg(long, default_value_t = 5)]
    poll_interval: u64,
    /// Give up after waiting this many seconds.
    #[arg(long, default_value_t = 600)]
    max_wait: u64,
    /// Extra attempts after a connection failure.
    #[arg(long, default_value_t = 3)]
    retries: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Submit an inventory and wait for its report.
    Scan {
        #[arg(long)]
        inventory: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fetch the report for an earlier token.
    Result {
        #[arg(long)]
        token: String,
        #[command(flatten)]
        common: Common,
    },
}

fn client(c: &Common) -> Result<Client<TcpTransport, ThreadSleeper>, ClientError> {
    let mut cfg = ClientConfig::new(&c.server, &c.id, &c.secret, &c.salt);
    cfg.poll_interval = Duration::from_secs(c.poll_interval);
    cfg.max_wait = Duration::from_secs(c.max_wait);
    cfg.retries = c.retries;
    Client::new(cfg, TcpTransport::new(&c.server), ThreadSleeper)
}

fn finish(report: &ScanReport, c: &Common) -> i32 {
    let format = if c.json { Format::Json } else { Format::Text };
    print!("{}", render_report(report, format));
    match c.fail_on {
        Some(t) if exceeds_threshold(report, t) => {
            eprintln!("found a CVE with CVSS >= {t}");
            EXIT_THRESHOLD
        }
        _ => EXIT_OK,
    }
}

fn run(cli: Cli) -> Result<i32, ClientError> {
    match cli.command {
        Command::Scan { inventory, common } => {
            let inv = load_inventory(&inventory).map_err(|e| ClientError::Usage(e.to_string()))?;
            let mut client = client(&common)?;
            let token = client.submit(&inv)?;
            if common.json {
                eprintln!("token {token}");
            } else {
                println!("token {token}");
            }
            let report = client.poll_result(&token)?;
            Ok(finish(&report, &common))
        }
        Command::Result { token, common } => {
            let report = client(&common)?.poll_result(&token)?;
            Ok(finish(&report, &common))
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
