//! Command-line entry points. Exit codes are the success signal; stdout is
//! for people and stderr carries one diagnostic per line.

use std::ffi::OsString;
use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand, ValueEnum};

use crate::diffusion::{
    BarrierPolygon, DiffusionError, DiffusionParams, DEFAULT_ALPHA, DEFAULT_BANDWIDTH_M, DEFAULT_CELL_CAP,
    DEFAULT_CELL_M, DEFAULT_EPSILON,
};
use crate::export::{
    export_epub, export_html, export_print, resolve_embeds, ExportError, NarrativeDoc, ResolveOptions,
};
use crate::facet::FacetIndex;
use crate::ingest::{load_gazetteer, parse_dataset, reconcile_places, IngestOptions};
use crate::model::DatasetManifest;
use crate::server::{serve, AppState, Loader, ServiceSnapshot};
use crate::workspace::{Workspace, WorkspaceError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GRID_CAP: i32 = 3;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_BASE_URI: &str = "http://127.0.0.1:8080";

#[derive(Parser, Debug)]
#[command(name = "geopub", version, about = "Survey data publishing: ingest, zones, feeds and article exports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and reconcile a feature table into a workspace.
    Ingest {
        features: PathBuf,
        gazetteer: PathBuf,
        /// Workspace directory to write.
        #[arg(long)]
        out: PathBuf,
        /// Root of persistent record URIs.
        #[arg(long, default_value = DEFAULT_BASE_URI)]
        base_uri: String,
        #[arg(long, default_value = "survey")]
        dataset_id: String,
        #[arg(long, default_value = "Funerary survey features")]
        title: String,
        #[arg(long, default_value = "https://creativecommons.org/licenses/by/4.0/")]
        license_uri: String,
        /// Accept any URL-safe record id instead of the RC####-suffix form.
        #[arg(long)]
        relaxed_ids: bool,
    },
    /// Interpolate cultural zones inside a barrier polygon.
    Zones {
        workspace: PathBuf,
        barrier: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CELL_M)]
        cell_m: f64,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Fixed iteration count; ignored when --bandwidth-m is given.
        #[arg(long)]
        steps: Option<usize>,
        /// Kernel standard deviation in meters [default: 2000 unless --steps is given].
        #[arg(long)]
        bandwidth_m: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = DEFAULT_CELL_CAP)]
        cell_cap: usize,
    },
    /// Serve the workspace over HTTP until interrupted.
    Serve {
        workspace: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Public root used in feed self links [default: http://<bind>:<port>].
        #[arg(long)]
        public_url: Option<String>,
        /// Dataset build timestamp (RFC 3339) [default: now].
        #[arg(long)]
        build_time: Option<String>,
    },
    /// Export an article as web HTML, print HTML or epub.
    Export {
        workspace: PathBuf,
        article: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Output directory (file for epub) [default: <workspace>/exports/<article_id>/...].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root of the live feed service linked from map blocks.
        #[arg(long, default_value = DEFAULT_BASE_URI)]
        service_url: String,
        /// Timestamp stamped into epub packages (RFC 3339) [default: now].
        #[arg(long)]
        build_time: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportFormat {
    Html,
    Print,
    Epub,
}

fn diag(kind: &str, msg: impl std::fmt::Display) {
    eprintln!("geopub: {kind}: {msg}");
}

fn parse_time(s: Option<&str>) -> Result<DateTime<Utc>, String> {
    match s {
        None => Ok(Utc::now()),
        Some(s) => DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| format!("--build-time {s:?}: {e}")),
    }
}

/// Runs the CLI over `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Ingest { features, gazetteer, out, base_uri, dataset_id, title, license_uri, relaxed_ids } => {
            let manifest = DatasetManifest {
                dataset_id,
                title,
                license_uri,
                schema_version: crate::server::SCHEMA_VERSION.to_string(),
                record_count: 0,
                base_uri,
            };
            cmd_ingest(&features, &gazetteer, &out, manifest, IngestOptions { strict_ids: !relaxed_ids })
        }
        Command::Zones { workspace, barrier, cell_m, alpha, steps, bandwidth_m, epsilon, cell_cap } => {
            let bandwidth_m = match (steps, bandwidth_m) {
                (Some(_), Some(b)) => {
                    diag("warning", "--bandwidth-m overrides --steps");
                    Some(b)
                }
                (Some(_), None) => None,
                (None, b) => Some(b.unwrap_or(DEFAULT_BANDWIDTH_M)),
            };
            let params = DiffusionParams { alpha, steps: steps.unwrap_or(0), bandwidth_m, epsilon };
            cmd_zones(&workspace, &barrier, cell_m, &params, cell_cap)
        }
        Command::Serve { workspace, port, bind, public_url, build_time } => {
            let build_time = match parse_time(build_time.as_deref()) {
                Ok(t) => t,
                Err(e) => {
                    diag("error", e);
                    return EXIT_INPUT;
                }
            };
            let public_url = public_url.unwrap_or_else(|| format!("http://{bind}:{port}"));
            cmd_serve(&workspace, &bind, port, &public_url, build_time)
        }
        Command::Export { workspace, article, format, out, service_url, build_time } => {
            let build_time = match parse_time(build_time.as_deref()) {
                Ok(t) => t,
                Err(e) => {
                    diag("error", e);
                    return EXIT_INPUT;
                }
            };
            cmd_export(&workspace, &article, format, out.as_deref(), &service_url, build_time)
        }
    }
}

pub fn cmd_ingest(
    features: &Path,
    gazetteer: &Path,
    out: &Path,
    mut manifest: DatasetManifest,
    options: IngestOptions,
) -> i32 {
    if let Err(e) = manifest.record_uri("x") {
        diag("error", format!("--base-uri: {e}"));
        return EXIT_INPUT;
    }
    let open = |p: &Path| File::open(p).map_err(|e| diag("error", format!("{}: {e}", p.display())));
    let Ok(feature_file) = open(features) else { return EXIT_INPUT };
    let Ok(gazetteer_file) = open(gazetteer) else { return EXIT_INPUT };
    let entries = match load_gazetteer(gazetteer_file) {
        Ok(e) => e,
        Err(e) => {
            diag("error", format!("{}: {e}", gazetteer.display()));
            return EXIT_INPUT;
        }
    };
    let (parsed, mut report) = match parse_dataset(feature_file, &options) {
        Ok(v) => v,
        Err(e) => {
            diag("error", format!("{}: {e}", features.display()));
            return EXIT_INPUT;
        }
    };
    let (reconciled, delta) = reconcile_places(parsed, &entries);
    report.absorb(delta);
    manifest.record_count = reconciled.len();

    let ws = Workspace::new(out);
    if let Err(e) = ws.write_ingest(&reconciled, &manifest, &report) {
        diag("error", e);
        return EXIT_INPUT;
    }
    for r in &report.rejected {
        diag("reject", format!("{}:{}: {}", features.display(), r.line, r.reason));
    }
    for (name, uris) in &report.ambiguous {
        diag("ambiguous", format!("{name}: {}", uris.join(" ")));
    }
    println!(
        "ingested {} of {} rows into {}: {} reconciled, {} unmatched, {} ambiguous names",
        report.accepted,
        report.total_rows(),
        out.display(),
        report.reconciled,
        report.unmatched,
        report.ambiguous.len()
    );
    if report.rejected.is_empty() {
        EXIT_OK
    } else {
        EXIT_REJECTED
    }
}

pub fn cmd_zones(
    workspace: &Path,
    barrier: &Path,
    cell_size_m: f64,
    params: &DiffusionParams,
    cell_cap: usize,
) -> i32 {
    if let Err(e) = params.validate() {
        diag("error", e);
        return EXIT_INPUT;
    }
    if !(cell_size_m.is_finite() && cell_size_m > 0.0) {
        diag("error", format!("--cell-m {cell_size_m} must be positive"));
        return EXIT_INPUT;
    }
    let ws = Workspace::new(workspace);
    let features = match ws.load_dataset() {
        Ok((_, f)) => f,
        Err(e) => {
            diag("error", e);
            return EXIT_INPUT;
        }
    };
    let polygon = match std::fs::read_to_string(barrier) {
        Ok(text) => BarrierPolygon::from_geojson(&text),
        Err(e) => {
            diag("error", format!("{}: {e}", barrier.display()));
            return EXIT_INPUT;
        }
    };
    let polygon = match polygon {
        Ok(p) => p,
        Err(e) => {
            diag("error", format!("{}: {e}", barrier.display()));
            return EXIT_INPUT;
        }
    };
    match ws.compute_zones(&features, &polygon, cell_size_m, params, cell_cap) {
        Ok((zones, warnings)) => {
            for w in &warnings {
                diag("warning", format!("{}: {}", w.feature_id, w.reason));
            }
            let (counts, nodata) = zones.zone_counts();
            println!(
                "zones: {}x{} cells of {} m, {} steps; Polis {}, Mesogeia {}, Hinterland {}, NoData {}",
                zones.grid.n_cols,
                zones.grid.n_rows,
                cell_size_m,
                zones.steps,
                counts[0],
                counts[1],
                counts[2],
                nodata
            );
            EXIT_OK
        }
        Err(WorkspaceError::Diffusion(e @ DiffusionError::CellCapExceeded { .. })) => {
            diag("error", e);
            EXIT_GRID_CAP
        }
        Err(e) => {
            diag("error", e);
            EXIT_INPUT
        }
    }
}

pub fn cmd_serve(workspace: &Path, bind: &str, port: u16, public_url: &str, build_time: DateTime<Utc>) -> i32 {
    let ws = Workspace::new(workspace);
    let snapshot = match ServiceSnapshot::from_workspace(&ws, build_time) {
        Ok(s) => s,
        Err(e) => {
            diag("error", e);
            return EXIT_INPUT;
        }
    };
    let reload_ws = ws.clone();
    let loader: Loader =
        std::sync::Arc::new(move || ServiceSnapshot::from_workspace(&reload_ws, Utc::now()).map_err(|e| e.to_string()));
    let state = AppState::new(snapshot, public_url, Some(loader));

    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(r) => r,
        Err(e) => {
            diag("error", e);
            return EXIT_INPUT;
        }
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind((bind, port)).await {
            Ok(l) => l,
            Err(e) => {
                diag("error", format!("cannot listen on {bind}:{port}: {e}"));
                return EXIT_INPUT;
            }
        };
        println!("serving {} on {public_url}", ws.root().display());
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match serve(listener, state, shutdown).await {
            Ok(()) => EXIT_OK,
            Err(e) => {
                diag("error", e);
                EXIT_INPUT
            }
        }
    })
}

fn cmd_export(
    workspace: &Path,
    article: &Path,
    format: ExportFormat,
    out: Option<&Path>,
    service_url: &str,
    build_time: DateTime<Utc>,
) -> i32 {
    let text = match std::fs::read_to_string(article) {
        Ok(t) => t,
        Err(e) => {
            diag("error", format!("{}: {e}", article.display()));
            return EXIT_INPUT;
        }
    };
    let doc = match NarrativeDoc::parse(&text) {
        Ok(d) => d,
        Err(e) => {
            diag("error", format!("{}: {e}", article.display()));
            return EXIT_INPUT;
        }
    };
    let ws = Workspace::new(workspace);
    let loaded = ws.load_dataset().and_then(|(manifest, features)| {
        let zones = ws.load_zones(&features)?;
        Ok((manifest, FacetIndex::build(features)?, zones))
    });
    let (manifest, index, zones) = match loaded {
        Ok(v) => v,
        Err(e) => {
            diag("error", e);
            return EXIT_INPUT;
        }
    };
    let opts = ResolveOptions {
        service_url: service_url.to_string(),
        asset_dir: article.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let resolved = resolve_embeds(&doc, &index, &manifest, zones.as_ref(), &opts);

    let default_out = ws.path("exports").join(&doc.article_id);
    let written = match format {
        ExportFormat::Html | ExportFormat::Print => {
            let tree = match format {
                ExportFormat::Html => export_html(&resolved),
                _ => export_print(&resolved),
            };
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| {
                default_out.join(if matches!(format, ExportFormat::Html) { "html" } else { "print" })
            });
            tree.map(|t| (t.write_to(&dir), dir))
        }
        ExportFormat::Epub => {
            let path = out
                .map(Path::to_path_buf)
                .unwrap_or_else(|| default_out.join(format!("{}.epub", doc.article_id)));
            export_epub(&resolved, &build_time).map(|pkg| {
                let res = path
                    .parent()
                    .map_or(Ok(()), std::fs::create_dir_all)
                    .and_then(|_| std::fs::write(&path, &pkg.bytes));
                (res, path)
            })
        }
    };
    match written {
        Ok((Ok(()), path)) => {
            if let Err(e) = ws.add_article(&doc, &text) {
                diag("warning", e);
            }
            println!("exported {} to {}", doc.article_id, path.display());
            EXIT_OK
        }
        Ok((Err(e), path)) => {
            diag("error", format!("{}: {e}", path.display()));
            EXIT_INPUT
        }
        Err(ExportError::Blocks(errors)) => {
            for e in errors {
                diag("unresolved", e);
            }
            EXIT_REJECTED
        }
        Err(e @ ExportError::MissingCanonicalUrl) => {
            diag("error", e);
            EXIT_REJECTED
        }
    }
}
