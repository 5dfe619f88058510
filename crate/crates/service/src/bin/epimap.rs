use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use epimap::cases::CaseVariable;
use epimap::corpus::{PipelineConfig, DEFAULT_KEYWORDS_PER_DOC, DEFAULT_QUERY_TERMS};
use epimap::correlation::{evaluate_area, parse_date_set, write_correlation_csv, Area, DocFilter};
use epimap::snapshot::{ingest, DEFAULT_ZMAX};
use epimap_service::{load_index, router, IndexSlot};

#[derive(Parser)]
#[command(name = "epimap", version, about = "Keyword and case-count map index: ingest, serve, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index snapshot from case CSVs, a document JSONL file and a gazetteer.
    Ingest {
        /// Wide case files; the variable is taken from the file name
        /// (confirmed / deaths / recovered).
        #[arg(long, num_args = 1.., required = true)]
        cases: Vec<PathBuf>,
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        gazetteer: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ZMAX)]
        zmax: u8,
        /// Worker threads for keyword extraction (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = DEFAULT_KEYWORDS_PER_DOC)]
        keywords: usize,
        /// Terms a tweet must contain to be kept.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_QUERY_TERMS.map(String::from))]
        query_terms: Vec<String>,
        /// Drop news articles whose keywords contain none of these terms.
        #[arg(long, value_delimiter = ',')]
        news_filter: Option<Vec<String>>,
    },
    /// Serve the HTTP API over a snapshot. SIGHUP reloads the file.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Print article/case correlations as CSV.
    Eval {
        #[arg(long, default_value = "index.json")]
        index: PathBuf,
        /// `World`, a gazetteer name or a numeric id; repeatable.
        #[arg(long, required = true)]
        area: Vec<String>,
        /// Count all articles instead of those matching the query terms.
        #[arg(long)]
        no_filter: bool,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_QUERY_TERMS.map(String::from))]
        terms: Vec<String>,
        /// Dates to drop, e.g. `2020-02-14..2020-02-16,2020-03-09`.
        #[arg(long, default_value = "")]
        exclude: String,
    },
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            cases,
            docs,
            gazetteer,
            out,
            zmax,
            workers,
            keywords,
            query_terms,
            news_filter,
        } => {
            let mut case_files: Vec<(CaseVariable, Box<dyn Read>)> = Vec::new();
            for path in &cases {
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                let Some(var) = CaseVariable::from_file_name(name) else {
                    bail!("{}: cannot tell confirmed/deaths/recovered from the file name", path.display());
                };
                case_files.push((var, Box::new(open(path)?)));
            }
            let config = PipelineConfig {
                keywords_per_doc: keywords,
                query_terms,
                news_filter,
                workers,
            };
            let snap = ingest(
                BufReader::new(open(&gazetteer)?),
                BufReader::new(open(&docs)?),
                case_files,
                &config,
                zmax,
            )?;
            // build once so a broken snapshot is never written
            let idx = snap.build()?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            snap.write(BufWriter::new(file))?;
            eprintln!(
                "wrote {}: {} locations, {} days, {} records, {} documents",
                out.display(),
                idx.location_count(),
                idx.days(),
                snap.records.len(),
                snap.documents.len()
            );
            Ok(())
        }
        Command::Serve { index, port, host } => serve(index, SocketAddr::new(host, port)),
        Command::Eval {
            index,
            area,
            no_filter,
            terms,
            exclude,
        } => {
            let idx = load_index(&index)?;
            let exclude = parse_date_set(&exclude)?;
            let filter = if no_filter { DocFilter::None } else { DocFilter::Terms(terms) };
            let mut rows = Vec::new();
            for name in &area {
                let a = Area::parse(name, &idx).with_context(|| format!("area {name:?}"))?;
                rows.push(evaluate_area(&idx, a, &filter, &exclude).with_context(|| format!("area {name:?}"))?);
            }
            write_correlation_csv(&rows, std::io::stdout().lock())?;
            Ok(())
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

#[tokio::main]
async fn serve(index: PathBuf, addr: SocketAddr) -> Result<()> {
    let slot = IndexSlot::new(load_index(&index)?);
    reload_on_hangup(slot.clone(), index);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(slot)).await?;
    Ok(())
}

#[cfg(unix)]
fn reload_on_hangup(slot: IndexSlot, path: PathBuf) {
    use tokio::signal::unix::{signal, SignalKind};
    tokio::spawn(async move {
        let Ok(mut hup) = signal(SignalKind::hangup()) else { return };
        while hup.recv().await.is_some() {
            let p = path.clone();
            match tokio::task::spawn_blocking(move || load_index(&p)).await {
                Ok(Ok(idx)) => {
                    slot.swap(idx);
                    eprintln!("reloaded {}", path.display());
                }
                Ok(Err(e)) => eprintln!("reload failed, keeping current index: {e}"),
                Err(e) => eprintln!("reload failed: {e}"),
            }
        }
    });
}

#[cfg(not(unix))]
fn reload_on_hangup(_slot: IndexSlot, _path: PathBuf) {}
