mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use litrec_client::Client;
use litrec_core::api::RecommendRequest;
use litrec_core::config::{EngineConfig, WeightSpec};
use litrec_core::corpus::{ArticleId, Corpus};
use litrec_core::embed::{EmbedCache, Embedder, EmbeddingProvider, OfflineProvider};
use litrec_core::eval::{CaseSelection, DEFAULT_KS};
use litrec_core::graph::{keyword_subgraph, write_histogram, CitationGraph};
use litrec_core::recommend::{ListSelection, RecommendParams, RecommendationResult, WeightConfig};
use litrec_core::{Engine, SearchHit, SearchMode};

/// Hybrid literature recommendation over a citation network.
#[derive(Debug, Parser)]
#[command(name = "litrec", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "LITREC_CONFIG")]
    config: Option<PathBuf>,
    /// Article records (JSON Lines); overrides the config.
    #[arg(long, global = true)]
    articles: Option<PathBuf>,
    /// Citation pairs (CSV citing_id,cited_id); overrides the config.
    #[arg(long, global = true)]
    edges: Option<PathBuf>,
    /// Embedding store; overrides the config.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Talk to a running service instead of loading data locally.
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    /// Write results here instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Log filter, e.g. `info` or `litrec_core=debug`.
    #[arg(long, global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and clean the corpus, then write it as normalized JSON Lines.
    Ingest,
    /// Check the corpus and report citation cycles.
    Validate,
    /// Graph statistics and corpus breakdowns.
    Stats(StatsArgs),
    /// Embed every abstract into an embedding store.
    Embed(EmbedArgs),
    /// Find articles by fuzzy title or key phrase.
    Search(SearchArgs),
    /// Recommend articles for a matched article.
    Recommend(RecommendArgs),
    /// Measure how well reference lists are reconstructed.
    Evaluate(EvaluateArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Articles per publication year.
    #[arg(long)]
    yearly: bool,
    /// Articles per journal.
    #[arg(long)]
    journals: bool,
    /// Histogram of shortest citation path lengths to this article.
    #[arg(long, value_name = "ID")]
    paths_to: Option<String>,
    /// Summarize the subgraph of articles matching this key phrase.
    #[arg(long, value_name = "PHRASE")]
    keyword: Option<String>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    /// Article records to embed; defaults to --articles.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory for the persistent embedding cache.
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Use the deterministic offline embedder instead of the remote provider.
    #[arg(long)]
    offline: bool,
}

#[derive(Debug, Args)]
struct SearchArgs {
    query: String,
    #[arg(long, default_value = "title")]
    mode: SearchMode,
    /// Number of matches to show.
    #[arg(short, long, default_value_t = 10)]
    m: usize,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["id", "title", "keyword"])))]
struct RecommendArgs {
    #[arg(long)]
    id: Option<String>,
    /// Best fuzzy title match.
    #[arg(long)]
    title: Option<String>,
    /// Key phrase; pick among matches with --select.
    #[arg(long)]
    keyword: Option<String>,
    /// 1-based position among keyword matches.
    #[arg(long, default_value_t = 1)]
    select: usize,
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    /// Preset name or ten comma-separated values w1..w10.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value_t = 5)]
    period_len: u32,
    #[arg(long, default_value = "both")]
    lists: ListSelection,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("selection").required(true).args(["cases", "sample"])))]
struct EvaluateArgs {
    /// One article id or exact title per line.
    #[arg(long, value_name = "FILE")]
    cases: Option<PathBuf>,
    /// Random sample size among articles with in-dataset references.
    #[arg(long, value_name = "N")]
    sample: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Preset name or ten comma-separated values w1..w10.
    #[arg(long)]
    weights: Option<String>,
    /// Cutoffs for hit@k.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
    ks: Vec<usize>,
    /// Also write the JSON summary here.
    #[arg(long, value_name = "FILE")]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Listen address, e.g. 127.0.0.1:8080.
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => EngineConfig::load(p)?,
        None => EngineConfig::default(),
    };
    if let Some(p) = &cli.articles {
        config.data.articles = Some(p.clone());
    }
    if let Some(p) = &cli.edges {
        config.data.edges = Some(p.clone());
    }
    if let Some(p) = &cli.embeddings {
        config.data.embeddings = Some(p.clone());
    }
    init_logging(cli.log_level.as_deref().unwrap_or(&config.log_level));

    match &cli.command {
        Command::Ingest => ingest(&cli, &config),
        Command::Validate => validate(&cli, &config),
        Command::Stats(a) => stats(&cli, &config, a),
        Command::Embed(a) => embed(&cli, &config, a),
        Command::Search(a) => search(&cli, &config, a),
        Command::Recommend(a) => recommend(&cli, &config, a),
        Command::Evaluate(a) => evaluate(&cli, &config, a),
        Command::Serve(a) => serve(config, a),
    }
}

fn init_logging(filter: &str) {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .or_else(|_| tracing_subscriber::EnvFilter::try_new(filter))
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(io::stderr)
        .try_init();
}

fn sink(cli: &Cli) -> Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: serde::Serialize>(cli: &Cli, value: &T) -> Result<()> {
    let mut w = sink(cli)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn emit_text(cli: &Cli, text: &str) -> Result<()> {
    let mut w = sink(cli)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn articles_path(config: &EngineConfig) -> Result<&Path> {
    config
        .data
        .articles
        .as_deref()
        .ok_or_else(|| anyhow!("no articles file; pass --articles or set [data] articles"))
}

fn load_corpus(config: &EngineConfig) -> Result<(Corpus, litrec_core::corpus::LoadReport)> {
    Ok(Corpus::load(articles_path(config)?, config.data.edges.as_deref())?)
}

fn load_engine(config: &EngineConfig) -> Result<Engine> {
    articles_path(config)?;
    Ok(Engine::load(&config.data)?)
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn weights(spec: Option<&str>, config: &EngineConfig) -> Result<WeightConfig> {
    Ok(match spec {
        Some(s) => s.parse()?,
        None => config.default_weights()?,
    })
}

fn ingest(cli: &Cli, config: &EngineConfig) -> Result<()> {
    let (corpus, report) = load_corpus(config)?;
    eprint!("{report}");
    let mut w = sink(cli)?;
    corpus.write_jsonl(&mut w)?;
    w.flush()?;
    Ok(())
}

fn validate(cli: &Cli, config: &EngineConfig) -> Result<()> {
    let (corpus, report) = load_corpus(config)?;
    let graph = CitationGraph::build(&corpus);
    let acyclicity = graph.validate_acyclicity();
    if cli.json {
        emit_json(
            cli,
            &serde_json::json!({ "load": report, "acyclicity": acyclicity }),
        )?;
    } else {
        let mut text = report.to_string();
        match &acyclicity.witness {
            None => text.push_str("acyclic: yes\n"),
            Some(cycle) => text.push_str(&format!("{}\n", output::cycle_line(cycle))),
        }
        emit_text(cli, &text)?;
    }
    match acyclicity.witness {
        None => Ok(()),
        Some(cycle) => bail!("{}", output::cycle_line(&cycle)),
    }
}

fn stats(cli: &Cli, config: &EngineConfig, args: &StatsArgs) -> Result<()> {
    if let Some(url) = &cli.server {
        if args.yearly || args.journals || args.paths_to.is_some() || args.keyword.is_some() {
            bail!("--yearly, --journals, --paths-to and --keyword need local data, not --server");
        }
        let s = runtime()?.block_on(Client::new(url)?.stats())?;
        return if cli.json {
            emit_json(cli, &s)
        } else {
            emit_text(cli, &format!("{}\n", s.graph))
        };
    }
    let (corpus, _) = load_corpus(config)?;
    let graph = CitationGraph::build(&corpus);
    let s = graph.stats();
    if cli.json {
        let mut v = serde_json::json!({ "graph": s, "year_range": corpus.year_range() });
        if args.yearly {
            v["yearly"] = serde_json::to_value(corpus.yearly_counts())?;
        }
        if args.journals {
            v["journals"] = serde_json::to_value(corpus.journal_counts())?;
        }
        if let Some(id) = &args.paths_to {
            v["paths_to"] = serde_json::to_value(graph.shortest_path_lengths_to(&ArticleId::new(id.as_str()).map_err(|e| anyhow!(e))?)?)?;
        }
        if let Some(phrase) = &args.keyword {
            v["keyword"] = serde_json::to_value(keyword_subgraph(&corpus, &graph, phrase))?;
        }
        return emit_json(cli, &v);
    }
    let mut text = format!("{s}\n");
    if args.yearly {
        text.push_str("\nyear,articles\n");
        for (y, n) in corpus.yearly_counts() {
            text.push_str(&format!("{y},{n}\n"));
        }
    }
    if args.journals {
        text.push_str("\njournal,articles\n");
        for (j, n) in corpus.journal_counts() {
            text.push_str(&format!("\"{}\",{n}\n", j.replace('"', "\"\"")));
        }
    }
    if let Some(id) = &args.paths_to {
        let hist = graph.shortest_path_lengths_to(&ArticleId::new(id.as_str()).map_err(|e| anyhow!(e))?)?;
        let mut buf = Vec::new();
        write_histogram(&hist, &mut buf)?;
        text.push('\n');
        text.push_str(&String::from_utf8(buf)?);
        let reached: usize = hist.values().sum();
        let within3: usize = hist.range(..=3).map(|(_, c)| c).sum();
        text.push_str(&format!(
            "no path: {}\nwithin 3 steps: {within3} of {reached} ({:.1}%)\n",
            graph.node_count() - 1 - reached,
            if reached == 0 { 0.0 } else { 100.0 * within3 as f64 / reached as f64 },
        ));
    }
    if let Some(phrase) = &args.keyword {
        let sub = keyword_subgraph(&corpus, &graph, phrase);
        text.push_str(&format!(
            "\nkeyword {phrase:?}: {} articles, {} edges, {} components, largest {}\n",
            sub.nodes.len(),
            sub.edges.len(),
            sub.components.len(),
            sub.largest_component()
        ));
    }
    emit_text(cli, &text)
}

fn embed(cli: &Cli, config: &EngineConfig, args: &EmbedArgs) -> Result<()> {
    let input = match &args.input {
        Some(p) => p.clone(),
        None => articles_path(config)?.to_owned(),
    };
    let (corpus, _) = Corpus::load(&input, None)?;
    let mut ecfg = config.embedding.clone();
    if let Some(dir) = args.cache.clone().or_else(|| config.data.cache_dir.clone()) {
        ecfg.cache_dir = Some(dir);
    }
    let provider: Arc<dyn EmbeddingProvider> = if args.offline {
        Arc::new(OfflineProvider::new(ecfg.dim))
    } else {
        Arc::new(ecfg.http_provider()?)
    };
    let cache = ecfg.cache_dir.as_deref().map(EmbedCache::open).transpose()?;
    let embedder = Embedder::new(provider, cache, ecfg)?;
    let store = embedder.embed_corpus(&corpus)?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.data.embeddings.clone())
        .unwrap_or_else(|| PathBuf::from("embeddings.bin"));
    store.save(&out)?;
    let st = embedder.stats();
    eprintln!(
        "embedded {} abstracts with {} into {} ({} provider calls, {} cache hits, {} retries)",
        store.len(),
        store.model_tag(),
        out.display(),
        st.provider_calls,
        st.cache_hits,
        st.retries
    );
    Ok(())
}

fn search(cli: &Cli, config: &EngineConfig, args: &SearchArgs) -> Result<()> {
    let hits = match &cli.server {
        Some(url) => {
            runtime()?
                .block_on(Client::new(url)?.search(&args.query, args.mode, args.m))?
                .hits
        }
        None => load_engine(config)?.search(&args.query, args.mode, args.m),
    };
    if cli.json {
        return emit_json(cli, &hits);
    }
    if hits.is_empty() {
        bail!("no article matched {:?}", args.query);
    }
    emit_text(cli, &output::search_table(&hits))
}

/// Where a recommendation starts: an id, or the chosen search hit.
fn pick_target(args: &RecommendArgs, find: impl Fn(&str, SearchMode, usize) -> Result<Vec<SearchHit>>) -> Result<ArticleId> {
    if let Some(id) = &args.id {
        return ArticleId::new(id.as_str()).map_err(|e| anyhow!(e));
    }
    if let Some(title) = &args.title {
        let hits = find(title, SearchMode::Title, 1)?;
        return hits
            .into_iter()
            .next()
            .map(|h| h.id)
            .ok_or_else(|| anyhow!("no article matched {title:?}"));
    }
    let phrase = args.keyword.as_deref().expect("clap requires a target");
    if args.select == 0 {
        bail!("--select is 1-based");
    }
    let hits = find(phrase, SearchMode::Keyword, args.select)?;
    if hits.is_empty() {
        bail!("no article matched {phrase:?}");
    }
    hits.into_iter()
        .nth(args.select - 1)
        .map(|h| h.id)
        .ok_or_else(|| anyhow!("only some articles matched {phrase:?}; --select {} is out of range", args.select))
}

fn recommend(cli: &Cli, config: &EngineConfig, args: &RecommendArgs) -> Result<()> {
    let w = weights(args.weights.as_deref(), config)?;
    let params = RecommendParams {
        k: args.k,
        period_len: args.period_len,
        lists: args.lists,
    };
    let result: RecommendationResult = match &cli.server {
        Some(url) => {
            let rt = runtime()?;
            let client = Client::new(url)?;
            let id = pick_target(args, |q, mode, m| {
                Ok(rt.block_on(client.search(q, mode, m))?.hits)
            })?;
            let req = RecommendRequest {
                id,
                weights: Some(WeightSpec::Values(w.values().to_vec())),
                k: Some(params.k),
                period_len: Some(params.period_len),
                lists: Some(params.lists),
            };
            rt.block_on(client.recommend(&req))?
        }
        None => {
            let engine = load_engine(config)?;
            let id = pick_target(args, |q, mode, m| Ok(engine.search(q, mode, m)))?;
            engine.recommend(&id, &w, &params)?
        }
    };
    if cli.json {
        emit_json(cli, &result)
    } else {
        emit_text(cli, &output::recommendation(&result))
    }
}

fn evaluate(cli: &Cli, config: &EngineConfig, args: &EvaluateArgs) -> Result<()> {
    if cli.server.is_some() {
        bail!("evaluate runs against local data; drop --server");
    }
    if args.ks.iter().any(|&k| k == 0) {
        bail!("--ks values must be positive");
    }
    let selection = match (&args.cases, args.sample) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            CaseSelection::List(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(str::to_owned)
                    .collect(),
            )
        }
        (None, Some(n)) => CaseSelection::Sample { n, seed: args.seed },
        (None, None) => unreachable!("clap requires a selection"),
    };
    let w = weights(args.weights.as_deref(), config)?;
    let engine = load_engine(config)?;
    let report = engine.evaluate(&selection, &w, &args.ks)?;
    if let Some(p) = &args.summary {
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &report)?;
    }
    if cli.json {
        return emit_json(cli, &report);
    }
    let mut w = sink(cli)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn serve(mut config: EngineConfig, args: &ServeArgs) -> Result<()> {
    if let Some(bind) = args.bind {
        config.service.bind = bind;
    }
    articles_path(&config)?;
    runtime()?.block_on(litrec_server::serve(config))?;
    Ok(())
}
