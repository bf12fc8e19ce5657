use std::fs::File;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crsq_annotation::{http, AnnotationService, BatchInput, SentenceInput, ServiceConfig, Step, SystemClock};
use crsq_core::store::{QuestionIndex, SharedIndex};

use crate::commands::read_sentences;
use crate::config::Config;
use crate::{Classify, Failure};

fn load_index(path: &Path) -> anyhow::Result<QuestionIndex> {
    let f = File::open(path).with_context(|| path.display().to_string())?;
    QuestionIndex::read(BufReader::new(f)).with_context(|| path.display().to_string())
}

pub fn query(index: &Path, text: &str, category: Option<&str>, k: usize) -> Result<(), Failure> {
    let index = load_index(index).data()?;
    let result = index.query(text, category, k).usage()?;
    if let Some(n) = &result.notice {
        eprintln!("{n}");
    }
    println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Runtime::new().service()
}

async fn shutdown() {
    let _ = tokio::signal::ctrl_c().await;
    eprintln!("shutting down");
}

async fn serve(router: Router, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("cannot listen on {addr}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router).with_graceful_shutdown(shutdown()).await?;
    Ok(())
}

fn address(cfg: &Config, port: u16) -> Result<SocketAddr, Failure> {
    format!("{}:{port}", cfg.serve.host)
        .parse()
        .with_context(|| format!("bad serve host {:?}", cfg.serve.host))
        .usage()
}

#[derive(Clone)]
struct QuestionsState {
    index: SharedIndex,
    path: Arc<PathBuf>,
}

#[derive(Deserialize)]
struct QueryRequest {
    text: String,
    #[serde(default)]
    category: Option<String>,
    #[serde(default = "default_k")]
    k: usize,
}

fn default_k() -> usize {
    5
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

async fn query_handler(State(s): State<QuestionsState>, Json(req): Json<QueryRequest>) -> Response {
    match s.index.current().query(&req.text, req.category.as_deref(), req.k) {
        Ok(result) => Json(result).into_response(),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
    }
}

async fn reload_handler(State(s): State<QuestionsState>) -> Response {
    let path = Arc::clone(&s.path);
    match tokio::task::spawn_blocking(move || load_index(&path)).await {
        Ok(Ok(index)) => {
            let n = index.len();
            s.index.swap(index);
            Json(json!({ "entries": n })).into_response()
        }
        Ok(Err(e)) => error(StatusCode::UNPROCESSABLE_ENTITY, format!("{e:#}")),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

pub fn questions_router(index: QuestionIndex, path: PathBuf) -> Router {
    let state = QuestionsState {
        index: SharedIndex::new(index),
        path: Arc::new(path),
    };
    Router::new()
        .route("/query", post(query_handler))
        .route("/reload", post(reload_handler))
        .with_state(state)
}

pub fn serve_questions(cfg: &Config, index: &Path) -> Result<(), Failure> {
    let loaded = load_index(index).data()?;
    eprintln!("{} questions loaded", loaded.len());
    let addr = address(cfg, cfg.serve.questions_port)?;
    let router = questions_router(loaded, index.to_path_buf());
    runtime()?.block_on(serve(router, addr)).service()
}

fn initial_batch(path: &Path) -> Result<BatchInput, Failure> {
    let sentences = read_sentences(path)?
        .into_iter()
        .map(|s| SentenceInput {
            id: Some(s.id),
            category: s.category,
            sentence: s.text,
        })
        .collect();
    Ok(BatchInput::Sentences { sentences })
}

pub fn serve_annotation(cfg: &Config, log: &Path, sentences: Option<&Path>) -> Result<(), Failure> {
    let s = &cfg.serve;
    let service_cfg = ServiceConfig {
        lease: Duration::from_secs(s.lease_secs),
        auto_advance: s.auto_advance,
    };
    let fresh = !log.metadata().is_ok_and(|m| m.len() > 0);
    let service = AnnotationService::open(log, service_cfg, Arc::new(SystemClock)).service()?;
    if service.config().auto_advance != s.auto_advance {
        log::warn!("the event log fixes auto-advance to {}", service.config().auto_advance);
    }
    if let Some(p) = sentences {
        if service.progress().sentences == 0 {
            let ids = service.create_batch(Step::WriteQuestion, initial_batch(p)?).data()?;
            eprintln!("{} WRITE tasks created", ids.len());
        } else {
            eprintln!("log already holds sentences; {} not loaded again", p.display());
        }
    }
    if fresh {
        // the log itself is the output of this run
        let manifest = crate::manifest::manifest_path(log);
        let text = json!({
            "command": "serve-annotation",
            "log": log,
            "log_format": crsq_annotation::LOG_FORMAT,
            "log_version": crsq_annotation::LOG_VERSION,
            "config_sha256": crate::manifest::sha256_hex(cfg.canonical().as_bytes()),
            "seed": cfg.seed,
            "crsq": env!("CARGO_PKG_VERSION"),
        });
        std::fs::write(&manifest, format!("{text:#}\n")).data()?;
    }
    let p = service.progress();
    eprintln!(
        "{} sentences, {} records done ({} N/A)",
        p.sentences, p.records_completed, p.records_na
    );
    let static_dir = s.static_dir.clone();
    if let Some(d) = &static_dir {
        if !d.is_dir() {
            return Err(Failure::Usage(anyhow!("static dir {} does not exist", d.display())));
        }
    }
    let addr = address(cfg, s.annotation_port)?;
    let router = http::router(Arc::new(service), static_dir);
    runtime()?.block_on(serve(router, addr)).service()
}
