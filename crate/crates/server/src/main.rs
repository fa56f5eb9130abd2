use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tagpag_core::archive::{ReqwestTransport, WaybackClient};
use tagpag_core::config::{load_labels, load_tasks};
use tagpag_core::extraction::extract_html;
use tagpag_core::store::{export_dir, AnnotationStore, ExportScope};
use tagpag_server::{router, AppState};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "tagpag", version, about = "Web page annotation server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the annotation server.
    Serve {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        html_dir: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        annotations_dir: PathBuf,
        #[arg(long, env = "TAGPAG_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Give each annotator their own shuffled task order.
        #[arg(long)]
        randomize: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory holding the built UI bundle.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
    /// Write annotations as CSV.
    Export {
        #[arg(long)]
        annotations_dir: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// `all` or an annotator id.
        #[arg(long, default_value = "all")]
        scope: String,
        /// Output file, or `-` for stdout.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run content extraction on one HTML file.
    Extract {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, value_enum, default_value_t = View::Clean)]
        view: View,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum View {
    Clean,
    Raw,
    Blocks,
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Serve {
            tasks,
            html_dir,
            labels,
            annotations_dir,
            port,
            host,
            randomize,
            seed,
            ui_dir,
        } => {
            let corpus = Arc::new(
                load_tasks(&tasks).with_context(|| format!("loading {}", tasks.display()))?,
            );
            let labels = Arc::new(
                load_labels(&labels).with_context(|| format!("loading {}", labels.display()))?,
            );
            let store = AnnotationStore::open(&annotations_dir, corpus, labels)?;
            let wayback = WaybackClient::new(Arc::new(ReqwestTransport::new()));
            let state = AppState::new(Arc::new(store), Arc::new(wayback), html_dir)
                .with_ui_dir(ui_dir)
                .with_order(randomize, seed);
            let app = router(Arc::new(state));

            let addr = SocketAddr::new(host, port);
            let listener = tokio::net::TcpListener::bind(addr)
                .await
                .with_context(|| format!("binding {addr}"))?;
            tracing::info!("listening on http://{}", listener.local_addr()?);
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
        }
        Command::Export {
            annotations_dir,
            tasks,
            labels,
            scope,
            out,
        } => {
            let Some(scope) = ExportScope::parse(&scope) else {
                bail!("invalid scope {scope:?}: use `all` or an annotator id");
            };
            let corpus = Arc::new(load_tasks(&tasks)?);
            let labels = Arc::new(load_labels(&labels)?);
            let csv = export_dir(&annotations_dir, corpus, labels, &scope)?;
            write_out(&out, csv.as_bytes())?;
        }
        Command::Extract { file, format, view } => {
            let bytes =
                std::fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let result = extract_html(&bytes, None);
            let text = match (format, view) {
                (Format::Text, View::Clean) => result.clean_text,
                (Format::Text, View::Raw) => result.raw_text,
                (Format::Text, View::Blocks) => result
                    .blocks
                    .iter()
                    .map(|b| {
                        let mark = if b.kept { '+' } else { '-' };
                        format!(
                            "{mark} {:<4} {:?} {}",
                            b.tag,
                            b.reason,
                            b.text.replace('\n', " ")
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n"),
                (Format::Json, View::Clean) => serde_json::to_string_pretty(&result.clean_text)?,
                (Format::Json, View::Raw) => serde_json::to_string_pretty(&result.raw_text)?,
                (Format::Json, View::Blocks) => serde_json::to_string_pretty(&result.blocks)?,
            };
            write_out(Path::new("-"), format!("{text}\n").as_bytes())?;
        }
    }
    Ok(())
}

fn write_out(out: &Path, bytes: &[u8]) -> Result<()> {
    if out == Path::new("-") {
        use std::io::Write;
        match std::io::stdout().lock().write_all(bytes) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        }
    } else {
        std::fs::write(out, bytes).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}
