use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use cyclekit::cycle::Metric;
use cyclekit::figure::Figure;
use cyclekit::symkern::Probe;
use cyclekit_cli::run::{parse_assignments, read_figure, render_to_file};
use cyclekit_cli::{precision_bits, probe, CliError, Runner, PRECISION_ENV};
use cyclekit_service::{bind, router, router_for_origin, serve, Session};

#[derive(Parser)]
#[command(name = "cyclekit", version, about = "Construct figures of cycles, check relations and export SVG")]
struct Cli {
    /// Seed for randomized zero-test probing.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a figure script.
    Run { script: PathBuf },
    /// Render a saved figure to SVG.
    Svg {
        figure: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Parameter assignment name=value; repeatable.
        #[arg(short = 'p', long = "param", value_parser = parse_pair)]
        params: Vec<(String, String)>,
    },
    /// Serve a figure over HTTP.
    Serve {
        figure: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        bind: IpAddr,
        /// Only this origin may call the service from a browser.
        #[arg(long)]
        cors_origin: Option<String>,
        /// Default parameter assignment for renders; repeatable.
        #[arg(short = 'p', long = "param", value_parser = parse_pair)]
        params: Vec<(String, String)>,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    s.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())).ok_or_else(|| format!("expected name=value, got '{s}'"))
}

fn run_script(path: &Path, probe: Probe) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut runner = Runner::new(probe, base);
    let mut out = String::new();
    let result = runner.run(&text, &mut out);
    print!("{out}");
    Ok(result?.code())
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    let bits = precision_bits(std::env::var(PRECISION_ENV).ok().as_deref())?;
    let probe = probe(cli.seed, bits);
    match cli.command {
        Command::Run { script } => run_script(&script, probe),
        Command::Svg { figure, output, params } => {
            let f = read_figure(&figure, probe)?;
            render_to_file(&f, &output, &parse_assignments(&params)?)?;
            Ok(0)
        }
        Command::Serve { figure, port, bind: ip, cors_origin, params } => {
            let f = match figure {
                Some(path) => read_figure(&path, probe)?,
                None => Figure::with_probe(Metric::euclidean(), probe)?,
            };
            let session = Arc::new(Session::with_params(f, parse_assignments(&params)?));
            let app = match cors_origin {
                Some(origin) => router_for_origin(session, &origin)?,
                None => router(session),
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io { path: "tokio runtime".into(), source: e })?;
            rt.block_on(async {
                let addr = SocketAddr::new(ip, port);
                let listener = bind(addr).await?;
                eprintln!("serving on http://{}", listener.local_addr().map_err(cyclekit_service::ServeError::from)?);
                serve(listener, app).await
            })?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
