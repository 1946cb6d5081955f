//! Command-line front end. Exit codes: 0 success, 1 data error, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chronodiff::analytics::{categorize_terms, load_term_list, parse_term_list, top_deleted_terms, CategoryLists, TemporalRules, Weighting, DEFAULT_STOPWORDS};
use chronodiff::diff::{build_animation, AnimationTiming};
use chronodiff::index::ChangeIndex;
use chronodiff::ingest::{format_timestamp14, ResponseReader};
use chronodiff::memento::{pairing_report, parse_timemap, PageCaptures, PickRule};
use chronodiff::pipeline::{build_from_records, BuildOptions, Corpus};
use chronodiff::query::{execute_with, find_chain, ChangeQuery, ChangeType, ExecuteOptions, Mark};
use chronodiff::replay::closest_memento;

use crate::api::{router, ApiConfig, AppState, Snapshot};
use crate::params::{parse_time, parse_window};

#[derive(Debug, Parser)]
#[command(name = "chronodiff", version, about = "Search for text added to or removed from archived web pages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read WARC files into a corpus directory.
    Ingest {
        #[arg(required = true)]
        warcs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build and persist an index from a corpus directory.
    Index {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Index captures of every HTTP status, not just 200.
        #[arg(long)]
        all_statuses: bool,
    },
    /// Run a change query.
    Search(SearchArgs),
    /// Rank and categorize the most deleted terms.
    Analyze(AnalyzeArgs),
    /// Write the animation document for two datetimes of a page.
    Animate {
        index: PathBuf,
        #[arg(long)]
        url: String,
        #[arg(long)]
        t1: String,
        #[arg(long)]
        t2: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairing report over a directory of link-format TimeMaps.
    TimemapReport {
        /// Directory of `*.link` TimeMaps, with an optional `statuses.json`
        /// mapping URI-M to HTTP status.
        dir: PathBuf,
        #[arg(long = "window-a")]
        window_a: String,
        #[arg(long = "window-b")]
        window_b: String,
        #[arg(long, value_enum, default_value_t = Pick::Earliest)]
        pick: Pick,
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Pick {
    Earliest,
    Latest,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    pub index: PathBuf,
    #[arg(long = "type", value_parser = parse_change_type)]
    pub change_type: ChangeType,
    #[arg(long)]
    pub q: String,
    /// Only full removals or additions.
    #[arg(long)]
    pub no_partial: bool,
    #[arg(long)]
    pub from: Option<String>,
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub limit: usize,
    #[arg(long, default_value_t = 10)]
    pub context: usize,
    /// One JSON record per hit instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub index: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub top: usize,
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    #[arg(long)]
    pub seedlist: Option<PathBuf>,
    /// Rank by removed occurrences instead of transitions.
    #[arg(long)]
    pub occurrences: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    pub index: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, default_value_t = 10)]
    pub page_size: usize,
    #[arg(long, default_value_t = 10)]
    pub snippet_context: usize,
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    #[arg(long)]
    pub seedlist: Option<PathBuf>,
    #[arg(long)]
    pub letter_ms: Option<u32>,
    #[arg(long)]
    pub word_ms: Option<u32>,
    #[arg(long)]
    pub pause_ms: Option<u32>,
}

fn parse_change_type(s: &str) -> Result<ChangeType, String> {
    s.parse().map_err(|e: chronodiff::query::QueryError| e.to_string())
}

/// Parses arguments and runs a command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}");
            2
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// An argument that parsed but is unusable.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn time_arg(name: &str, v: &str) -> Result<chrono::DateTime<chrono::Utc>> {
    parse_time(v).ok_or_else(|| usage(format!("--{name} {v:?} is not a datetime")))
}

fn category_lists(stoplist: Option<&Path>, seedlist: Option<&Path>) -> Result<CategoryLists> {
    let stopwords = match stoplist {
        Some(p) => load_term_list(p).with_context(|| format!("reading {}", p.display()))?,
        None => parse_term_list(DEFAULT_STOPWORDS),
    };
    let seeds = match seedlist {
        Some(p) => load_term_list(p).with_context(|| format!("reading {}", p.display()))?,
        None => Default::default(),
    };
    Ok(CategoryLists { stopwords, seeds, temporal: TemporalRules::default() })
}

fn load_index(dir: &Path) -> Result<ChangeIndex> {
    ChangeIndex::load(dir).with_context(|| format!("loading index {}", dir.display()))
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Ingest { warcs, out: dir } => ingest(&warcs, &dir, out),
        Command::Index { corpus, out: dir, all_statuses } => index(&corpus, &dir, all_statuses, out),
        Command::Search(args) => search(args, out),
        Command::Analyze(args) => analyze(args, out),
        Command::Animate { index, url, t1, t2, out: file } => animate(&index, &url, &t1, &t2, &file, out),
        Command::TimemapReport { dir, window_a, window_b, pick, json } => timemap_report(&dir, &window_a, &window_b, pick, json, out),
        Command::Serve(args) => serve(args),
    }
}

fn ingest(warcs: &[PathBuf], dir: &Path, out: &mut dyn Write) -> Result<()> {
    let mut corpus = Corpus::default();
    for path in warcs {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut reader = ResponseReader::new(std::io::BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
        let mut html = 0;
        for rec in reader.by_ref() {
            let rec = rec.with_context(|| format!("reading {}", path.display()))?;
            html += usize::from(rec.meta.is_html());
            corpus.push(rec);
        }
        let s = reader.stats();
        writeln!(out, "{}: {} records, {} responses, {html} html", path.display(), s.records, s.responses)?;
    }
    corpus.write(dir).with_context(|| format!("writing {}", dir.display()))?;
    writeln!(out, "corpus {}: {} html captures, {} other resources", dir.display(), corpus.records.len(), corpus.resources.len())?;
    Ok(())
}

fn index(corpus_dir: &Path, dir: &Path, all_statuses: bool, out: &mut dyn Write) -> Result<()> {
    let t = Instant::now();
    let corpus = Corpus::read(corpus_dir).with_context(|| format!("reading corpus {}", corpus_dir.display()))?;
    let read = t.elapsed();
    let (index, report) = build_from_records(corpus.records, corpus.resources, BuildOptions { keep_all_statuses: all_statuses })?;
    let t = Instant::now();
    index.persist(dir).with_context(|| format!("writing index {}", dir.display()))?;
    let persist = t.elapsed();
    writeln!(out, "{:<10}{:>10.3}s", "read", read.as_secs_f64())?;
    for s in &report.timings {
        writeln!(out, "{:<10}{:>10.3}s", s.stage, s.elapsed.as_secs_f64())?;
    }
    writeln!(out, "{:<10}{:>10.3}s", "persist", persist.as_secs_f64())?;
    writeln!(
        out,
        "{} records: {} indexed, {} skipped by status, {} non-html, {} unreadable; {} pages, {} versions, {} transitions",
        report.records, report.indexed, report.skipped_status, report.skipped_non_html, report.extract_errors, report.chains, report.versions, report.transitions
    )?;
    Ok(())
}

fn search(args: SearchArgs, out: &mut dyn Write) -> Result<()> {
    let mut q = ChangeQuery::new(args.change_type, args.q).partial(!args.no_partial);
    q.from = args.from.as_deref().map(|v| time_arg("from", v)).transpose()?;
    q.to = args.to.as_deref().map(|v| time_arg("to", v)).transpose()?;
    q.domain = args.domain;
    q.tokens().map_err(|e| usage(e.to_string()))?;
    let index = load_index(&args.index)?;
    let hits = execute_with(&q, &index, ExecuteOptions { snippet_context: args.context })?;
    if args.json {
        for h in hits.iter().take(args.limit) {
            writeln!(out, "{}", serde_json::to_string(h)?)?;
        }
        return Ok(());
    }
    writeln!(out, "{} hits", hits.len())?;
    let sign = if matches!(q.change_type, ChangeType::AddedTerm | ChangeType::AddedPhrase) { "+" } else { "-" };
    for h in hits.iter().take(args.limit) {
        let snippet: Vec<String> = h
            .snippet
            .tokens
            .iter()
            .map(|t| match t.mark {
                Mark::Kept => t.text.clone(),
                Mark::Deleted => format!("[-{}-]", t.text),
                Mark::Added => format!("{{+{}+}}", t.text),
            })
            .collect();
        writeln!(
            out,
            "{:>3}  {}  {} .. {}  {}{}  {}{}{}",
            h.rank,
            h.canonical_url,
            format_timestamp14(&h.change_interval.after),
            format_timestamp14(&h.change_interval.until),
            if h.partial { "partial " } else { "" },
            format_args!("{sign}{}", h.delta),
            if h.snippet.leading_ellipsis { "... " } else { "" },
            snippet.join(" "),
            if h.snippet.trailing_ellipsis { " ..." } else { "" },
        )?;
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    if args.top == 0 {
        return Err(usage("--top must be at least 1"));
    }
    let lists = category_lists(args.stoplist.as_deref(), args.seedlist.as_deref())?;
    let index = load_index(&args.index)?;
    let weighting = if args.occurrences { Weighting::Occurrences } else { Weighting::Transitions };
    let cats = categorize_terms(&top_deleted_terms(&index, args.top, weighting), &lists);
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&cats)?)?;
        return Ok(());
    }
    for (i, t) in cats.terms.iter().enumerate() {
        writeln!(out, "{:>4}  {:<24}{:>6}  {}", i + 1, t.term, t.deletion_doc_frequency, t.category)?;
    }
    writeln!(out)?;
    write!(out, "{}", cats.to_table())?;
    Ok(())
}

fn animate(index_dir: &Path, url: &str, t1: &str, t2: &str, file: &Path, out: &mut dyn Write) -> Result<()> {
    let (t1, t2) = (time_arg("t1", t1)?, time_arg("t2", t2)?);
    let index = load_index(index_dir)?;
    let chain = find_chain(&index, url).ok_or_else(|| anyhow::anyhow!("UnknownUrl: no versions of {url}"))?;
    let mut bodies = Vec::new();
    for t in [t1, t2] {
        let (_, meta) = closest_memento(chain, t)?;
        let stored = index
            .replay()
            .exact(&chain.canonical_url, meta.capture_datetime)
            .ok_or_else(|| anyhow::anyhow!("no stored body at {}", meta.timestamp14()))?;
        bodies.push(stored.body.clone());
    }
    let doc = build_animation(&bodies[0], &bodies[1], AnimationTiming::default())?;
    fs::write(file, doc).with_context(|| format!("writing {}", file.display()))?;
    writeln!(out, "wrote {}", file.display())?;
    Ok(())
}

fn timemap_report(dir: &Path, a: &str, b: &str, pick: Pick, json: bool, out: &mut dyn Write) -> Result<()> {
    let wa = parse_window(a).ok_or_else(|| usage(format!("--window-a {a:?} is not START..END")))?;
    let wb = parse_window(b).ok_or_else(|| usage(format!("--window-b {b:?} is not START..END")))?;
    let statuses: BTreeMap<String, u16> = match fs::read(dir.join("statuses.json")) {
        Ok(bytes) => serde_json::from_slice(&bytes).context("parsing statuses.json")?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
        Err(e) => return Err(e).context("reading statuses.json"),
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "link"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .link TimeMaps in {}", dir.display());
    }
    let mut pages = Vec::new();
    for f in files {
        let body = fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?;
        let entries = parse_timemap(&body).with_context(|| format!("parsing {}", f.display()))?;
        let own = entries.iter().filter_map(|e| statuses.get(&e.uri_m).map(|s| (e.uri_m.clone(), *s))).collect();
        let uri_r = original_link(&body).unwrap_or_else(|| f.file_stem().unwrap_or_default().to_string_lossy().into_owned());
        pages.push(PageCaptures { uri_r, entries, statuses: own });
    }
    let rule = match pick {
        Pick::Earliest => PickRule::Earliest,
        Pick::Latest => PickRule::Latest,
    };
    let report = pairing_report(&pages, wa, wb, rule);
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        write!(out, "{}", report.to_table())?;
    }
    Ok(())
}

/// Target of the `rel="original"` link, if any.
fn original_link(body: &str) -> Option<String> {
    body.split('<').find_map(|link| {
        let (uri, params) = link.split_once('>')?;
        let rel = params.split(';').find_map(|p| p.trim().strip_prefix("rel="))?;
        rel.trim_matches(|c: char| c == '"' || c.is_whitespace() || c == ',')
            .split_whitespace()
            .any(|r| r == "original")
            .then(|| uri.trim().to_string())
    })
}

fn serve(args: ServeArgs) -> Result<()> {
    if args.page_size == 0 {
        return Err(usage("--page-size must be at least 1"));
    }
    if let Some(d) = &args.static_dir {
        if !d.is_dir() {
            return Err(usage(format!("--static-dir {} is not a directory", d.display())));
        }
    }
    let categories = category_lists(args.stoplist.as_deref(), args.seedlist.as_deref())?;
    let index = load_index(&args.index)?;
    let defaults = AnimationTiming::default();
    let config = ApiConfig {
        page_size: args.page_size,
        snippet_context: args.snippet_context,
        timing: AnimationTiming {
            letter_ms: args.letter_ms.unwrap_or(defaults.letter_ms),
            word_ms: args.word_ms.unwrap_or(defaults.word_ms),
            pause_ms: args.pause_ms.unwrap_or(defaults.pause_ms),
        },
        static_dir: args.static_dir.clone(),
    };
    let state = AppState::new(config, Some(Snapshot { index, categories: categories.clone() }));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.listen).await.with_context(|| format!("binding {}", args.listen))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        spawn_reload_on_hangup(state.clone(), args.index.clone(), categories);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

/// Reloads the index directory on SIGHUP, keeping the old snapshot if the
/// new one fails to load.
#[cfg(unix)]
fn spawn_reload_on_hangup(state: std::sync::Arc<AppState>, dir: PathBuf, categories: CategoryLists) {
    use tokio::signal::unix::{signal, SignalKind};
    tokio::spawn(async move {
        let Ok(mut hup) = signal(SignalKind::hangup()) else { return };
        while hup.recv().await.is_some() {
            let (state, dir, categories) = (state.clone(), dir.clone(), categories.clone());
            let result = tokio::task::spawn_blocking(move || state.reload(&dir, categories)).await;
            match result {
                Ok(Ok(())) => eprintln!("index reloaded"),
                Ok(Err(e)) => eprintln!("reload failed, keeping current index: {e}"),
                Err(e) => eprintln!("reload task failed: {e}"),
            }
        }
    });
}

#[cfg(not(unix))]
fn spawn_reload_on_hangup(_: std::sync::Arc<AppState>, _: PathBuf, _: CategoryLists) {}
