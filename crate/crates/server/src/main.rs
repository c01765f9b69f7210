use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use stager_core::registry::Registry;
use stager_server::{router, AppState};

#[derive(Parser)]
#[command(version, about = "Serve dialog sessions over HTTP/JSON")]
struct Args {
    /// Address to bind.
    #[arg(long, env = "STAGER_HOST", default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, env = "STAGER_PORT", default_value_t = 8080)]
    port: u16,
    /// Directory holding datasets/*.csv and specs/*.xml.
    #[arg(long, env = "STAGER_DATA", default_value = "data")]
    data: PathBuf,
    /// Largest number of phrase sequences listed in an exact grammar.
    #[arg(long, env = "STAGER_GRAMMAR_LIMIT", default_value_t = stager_core::grammar::DEFAULT_LIMIT)]
    grammar_limit: usize,
    /// Static UI bundle served at `/`.
    #[arg(long, env = "STAGER_STATIC_DIR")]
    static_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    let registry = Registry::load(&args.data)?;
    let app = Arc::new(AppState::new(registry, args.grammar_limit));
    let addr = SocketAddr::new(args.host, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(app, args.static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
