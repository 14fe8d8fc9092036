use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use clap::{Args, Subcommand};
use ideagraph::corpus::toy::{self, ToyCorpusSpec};
use ideagraph::corpus::{extract_keywords, parse_corpus, write_corpus, Keyword};
use ideagraph::critic::evaluate_idea;
use ideagraph::llm::{
    ChatProvider, Gateway, PromptLibrary, RemoteConfig, RemoteProvider, ScriptedProvider,
};
use ideagraph::network::{NetworkError, SciNetwork, DEFAULT_CAP_PAPERS};
use ideagraph::proposal::parse_proposal;
use ideagraph::workflow::{self, render_markdown, RunRecord, StopReason, WorkflowConfig};

use crate::error::CliError;
use crate::manifest::{sidecar, InputHash, Manifest};
use crate::ProviderArgs;

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(CliError::io(path))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(CliError::io(path))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(CliError::io(path))
}

fn load_snapshot(path: &Path) -> Result<(SciNetwork, Vec<u8>), CliError> {
    if !path.exists() {
        return Err(CliError::MissingSnapshot { path: path.into() });
    }
    let bytes = read(path)?;
    let net = SciNetwork::snapshot_load(&bytes).map_err(|source| CliError::Snapshot {
        path: path.into(),
        source,
    })?;
    Ok((net, bytes))
}

fn keyword(raw: &str) -> Result<Keyword, CliError> {
    Ok(Keyword::new(raw)?)
}

/// Gateways for the main model and the critic, plus what to record about them.
struct Providers {
    main: Gateway,
    critic: Gateway,
    inputs: Vec<InputHash>,
    identities: Vec<String>,
}

fn prompts(args: &ProviderArgs) -> Result<PromptLibrary, CliError> {
    Ok(match &args.prompts {
        Some(dir) => PromptLibrary::with_overrides(dir)?,
        None => PromptLibrary::builtin(),
    })
}

fn scripted(
    path: &Path,
    role: &'static str,
    inputs: &mut Vec<InputHash>,
) -> Result<Arc<dyn ChatProvider>, CliError> {
    let bytes = read(path)?;
    inputs.push(InputHash::of(role, path, &bytes));
    Ok(Arc::new(ScriptedProvider::from_path(path)?))
}

fn remote(prefix: &'static str) -> Result<Option<Arc<dyn ChatProvider>>, CliError> {
    match RemoteConfig::from_env(prefix) {
        Some(cfg) => Ok(Some(Arc::new(RemoteProvider::new(cfg)?))),
        None => Ok(None),
    }
}

fn providers(args: &ProviderArgs) -> Result<Providers, CliError> {
    let lib = prompts(args)?;
    let mut inputs = Vec::new();
    let main = match &args.mock_script {
        Some(p) => scripted(p, "mock_script", &mut inputs)?,
        None => remote("IDEATION")?.ok_or(CliError::NoProvider { prefix: "IDEATION" })?,
    };
    let critic = match &args.critic_script {
        Some(p) => Some(scripted(p, "critic_script", &mut inputs)?),
        None if args.mock_script.is_some() => None,
        None => remote("IDEATION_CRITIC")?,
    };
    let mut identities = vec![main.identity()];
    let main = Gateway::new(main).with_prompts(lib.clone());
    let critic = match critic {
        Some(c) => {
            identities.push(format!("critic: {}", c.identity()));
            Gateway::new(c).with_prompts(lib)
        }
        None => main.clone(),
    };
    Ok(Providers {
        main,
        critic,
        inputs,
        identities,
    })
}

/// Applies `f` to every item on up to `jobs` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { return };
                let r = f(item);
                slots.lock().expect("slot lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("slot lock")
        .into_iter()
        .map(|r| r.expect("every item was processed"))
        .collect()
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus file, one JSON paper record per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Snapshot to write.
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Add to an existing snapshot instead of starting empty.
    #[arg(long)]
    pub extend: bool,
    /// Fail on the first malformed corpus line instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Keyword extractions in flight at once.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

pub fn ingest(args: IngestArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut manifest = Manifest::new("ingest");
    let corpus_bytes = read(&args.corpus)?;
    manifest
        .inputs
        .push(InputHash::of("corpus", &args.corpus, &corpus_bytes));
    let text = String::from_utf8(corpus_bytes).map_err(|e| {
        CliError::Usage(format!(
            "{}: corpus is not UTF-8: {e}",
            args.corpus.display()
        ))
    })?;
    let parsed = parse_corpus(&text);
    for e in &parsed.errors {
        if args.strict {
            return Err(CliError::Usage(format!("{}: {e}", args.corpus.display())));
        }
        eprintln!("warning: {}: {e}; line skipped", args.corpus.display());
    }

    let mut net = if args.extend && args.snapshot.exists() {
        let (net, bytes) = load_snapshot(&args.snapshot)?;
        manifest
            .inputs
            .push(InputHash::of("base_snapshot", &args.snapshot, &bytes));
        net
    } else {
        SciNetwork::new()
    };

    let needs_model = parsed.records().any(|p| p.keywords.is_none());
    let gateway = if needs_model {
        let p = providers(&args.provider)?;
        manifest.inputs.extend(p.inputs);
        manifest.providers = p.identities;
        Some(p.main)
    } else {
        None
    };

    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let papers = parsed.into_records();
    let extracted = parallel_map(&papers, args.jobs, |p| {
        extract_keywords(p, gateway.as_ref())
    });
    let (mut added, mut skipped) = (0usize, 0usize);
    for (paper, keywords) in papers.into_iter().zip(extracted) {
        match net.add_paper(paper, &keywords?) {
            Ok(()) => added += 1,
            Err(NetworkError::DuplicatePaper(id)) => {
                eprintln!("warning: paper {id} is already in the snapshot; skipped");
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    write(&args.snapshot, net.snapshot_save())?;
    let stats = net.stats();
    println!(
        "ingested {added} papers ({skipped} skipped): {} keywords, {} edges, {} papers total",
        stats.nodes, stats.edges, stats.papers
    );
    manifest.outputs.push(args.snapshot.clone());
    manifest.elapsed_ms = start.elapsed().as_millis();
    manifest.write(&sidecar(&args.snapshot))
}

#[derive(Debug, Args)]
pub struct RelateArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Only edges touching these keywords (all edges when omitted).
    #[arg(long = "keyword")]
    pub keywords: Vec<String>,
    /// Stop after this many edges.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Edges summarized concurrently.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    /// Papers summarized per edge.
    #[arg(long, default_value_t = DEFAULT_CAP_PAPERS)]
    pub cap: usize,
    /// Write the updated snapshot here instead of in place.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

pub fn relate(args: RelateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let mut manifest = Manifest::new("relate");
    let (net, bytes) = load_snapshot(&args.snapshot)?;
    manifest
        .inputs
        .push(InputHash::of("snapshot", &args.snapshot, &bytes));
    let focus: Vec<Keyword> = args
        .keywords
        .iter()
        .map(|k| keyword(k))
        .collect::<Result<_, _>>()?;
    if let Some(k) = focus.iter().find(|k| !net.contains(k)) {
        return Err(NetworkError::UnknownKeyword(k.to_string()).into());
    }
    let mut pairs: Vec<(Keyword, Keyword)> = net
        .edges()
        .filter(|(a, b, _)| focus.is_empty() || focus.contains(a) || focus.contains(b))
        .map(|(a, b, _)| (a.clone(), b.clone()))
        .collect();
    if let Some(limit) = args.limit {
        pairs.truncate(limit);
    }
    let p = providers(&args.provider)?;
    manifest.inputs.extend(p.inputs);
    manifest.providers = p.identities;
    let llm = p.main;

    let next = AtomicUsize::new(0);
    let failure: Mutex<Option<CliError>> = Mutex::new(None);
    std::thread::scope(|s| {
        for _ in 0..args.jobs.min(pairs.len().max(1)) {
            s.spawn(|| loop {
                if failure.lock().expect("failure lock").is_some() {
                    return;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((a, b)) = pairs.get(i) else { return };
                if let Err(e) = net.summarize_relation(a, b, &llm, args.cap) {
                    failure
                        .lock()
                        .expect("failure lock")
                        .get_or_insert(e.into());
                    return;
                }
            });
        }
    });
    let out = args.out.clone().unwrap_or_else(|| args.snapshot.clone());
    // Summaries finished before a failure are kept.
    write(&out, net.snapshot_save())?;
    if let Some(e) = failure.into_inner().expect("failure lock") {
        return Err(e);
    }
    println!(
        "summarized {} edges; {} relation texts cached",
        pairs.len(),
        net.cached_relation_count()
    );
    manifest.outputs.push(out.clone());
    manifest.elapsed_ms = start.elapsed().as_millis();
    manifest.write(&sidecar(&out))
}

#[derive(Debug, Subcommand)]
pub enum GraphQuery {
    /// Ranked neighbors of a keyword.
    Neighbors {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        keyword: String,
        #[arg(long, default_value_t = 12)]
        m: usize,
    },
    /// Hop count between two keywords.
    Path {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Node, edge and paper counts.
    Stats {
        #[arg(long)]
        snapshot: PathBuf,
    },
}

pub fn graph(q: GraphQuery) -> Result<(), CliError> {
    match q {
        GraphQuery::Neighbors {
            snapshot,
            keyword: k,
            m,
        } => {
            let (net, _) = load_snapshot(&snapshot)?;
            let k = keyword(&k)?;
            if m == 0 {
                return Err(NetworkError::ZeroLimit.into());
            }
            for (n, count) in net.ranked_neighbors(&k)?.into_iter().take(m) {
                println!("{n}\t{count}");
            }
        }
        GraphQuery::Path { snapshot, a, b } => {
            let (net, _) = load_snapshot(&snapshot)?;
            match net.shortest_path_len(&keyword(&a)?, &keyword(&b)?)? {
                Some(n) => println!("{n}"),
                None => println!("not connected"),
            }
        }
        GraphQuery::Stats { snapshot } => {
            let (net, _) = load_snapshot(&snapshot)?;
            let s = net.stats();
            println!("keywords: {}", s.nodes);
            println!("edges: {}", s.edges);
            println!("papers: {}", s.papers);
            println!("cached relation texts: {}", s.cached_relations);
            println!("components: {}", net.component_count());
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct IdeateArgs {
    /// Seed keyword; repeat for several.
    #[arg(long = "seed", required = true)]
    pub seeds: Vec<String>,
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Output directory for run.jsonl, report.md and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with workflow settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub l_max: Option<usize>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub threshold: Option<u8>,
    /// Stop once the keyword set is full.
    #[arg(long)]
    pub no_evolve: bool,
    /// Skip reviews; evolve actions alternate.
    #[arg(long)]
    pub no_critic: bool,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

fn workflow_config(args: &IdeateArgs, manifest: &mut Manifest) -> Result<WorkflowConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let bytes = read(path)?;
            manifest.inputs.push(InputHash::of("config", path, &bytes));
            let text = String::from_utf8(bytes).map_err(|e| CliError::ConfigFile {
                path: path.clone(),
                message: e.to_string(),
            })?;
            toml::from_str(&text).map_err(|e| CliError::ConfigFile {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => WorkflowConfig::default(),
    };
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(l) = args.l_max {
        cfg.l_max = l;
    }
    if let Some(r) = args.max_rounds {
        cfg.max_evolve_rounds = r;
    }
    if let Some(t) = args.threshold {
        cfg.stop_threshold = t;
    }
    if args.no_evolve {
        cfg.evolve_enabled = false;
    }
    if args.no_critic {
        cfg.critic_enabled = false;
    }
    Ok(cfg)
}

pub fn ideate(args: IdeateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut manifest = Manifest::new("ideate");
    let cfg = workflow_config(&args, &mut manifest)?;
    let seeds: Vec<Keyword> = args
        .seeds
        .iter()
        .map(|s| keyword(s))
        .collect::<Result<_, _>>()?;
    cfg.validate_seeds(&seeds)?;
    let (net, bytes) = load_snapshot(&args.snapshot)?;
    manifest
        .inputs
        .push(InputHash::of("snapshot", &args.snapshot, &bytes));
    let p = providers(&args.provider)?;
    manifest.inputs.extend(p.inputs);
    manifest.providers = p.identities;
    manifest.config = Some(serde_json::to_value(&cfg).expect("config serializes"));

    let critic = cfg.critic_enabled.then_some(&p.critic);
    let outcome = workflow::run(&cfg, &seeds, &net, &p.main, critic)?;
    let record = RunRecord::from_outcome(&outcome);

    std::fs::create_dir_all(&args.out).map_err(CliError::io(&args.out))?;
    let run_path = args.out.join("run.jsonl");
    let report_path = args.out.join("report.md");
    write(&run_path, record.to_jsonl())?;
    write(&report_path, render_markdown(&record))?;
    manifest.outputs = vec![run_path.clone(), report_path.clone()];
    manifest.elapsed_ms = start.elapsed().as_millis();
    manifest.write(&args.out.join("manifest.json"))?;

    println!(
        "{} rounds, stopped: {:?}, best round: {}",
        outcome.stack.len(),
        outcome.stop,
        outcome
            .best_round
            .map_or("none".to_string(), |b| b.to_string())
    );
    println!("wrote {} and {}", run_path.display(), report_path.display());
    match (outcome.stop, outcome.error) {
        (StopReason::Aborted, Some(e)) => Err(CliError::RunAborted(e)),
        _ => Ok(()),
    }
}

#[derive(Debug, Args)]
pub struct ReviewArgs {
    /// Proposal text with Research Background / Research Idea /
    /// Implementation Approach sections.
    #[arg(long)]
    pub idea: PathBuf,
    /// Keywords the idea was built from; repeat for several.
    #[arg(long = "keyword", required = true)]
    pub keywords: Vec<String>,
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Print the review as JSON.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

pub fn review(args: ReviewArgs) -> Result<(), CliError> {
    let text = read_text(&args.idea)?;
    let idea = parse_proposal(&text).map_err(|source| CliError::Proposal {
        path: args.idea.clone(),
        source,
    })?;
    let keywords: Vec<Keyword> = args
        .keywords
        .iter()
        .map(|k| keyword(k))
        .collect::<Result<_, _>>()?;
    let (net, _) = load_snapshot(&args.snapshot)?;
    let features = net.graph_features(&keywords)?;
    let p = providers(&args.provider)?;
    let r = evaluate_idea(&idea, &keywords, &features, &p.critic)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&r).expect("review serializes")
        );
    } else {
        println!("Novelty: {}", r.novelty_line());
        println!("Feasibility: {}", r.feasibility_line());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Run record written by `ideate`.
    #[arg(long)]
    pub run: PathBuf,
    /// Markdown destination (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn export(args: ExportArgs) -> Result<(), CliError> {
    let text = read_text(&args.run)?;
    let record = RunRecord::parse(&text).map_err(|source| CliError::RunRecord {
        path: args.run.clone(),
        source,
    })?;
    let md = render_markdown(&record);
    match &args.out {
        Some(path) => {
            write(path, md)?;
            let mut m = Manifest::new("export");
            m.inputs
                .push(InputHash::of("run_record", &args.run, text.as_bytes()));
            m.outputs.push(path.clone());
            m.write(&sidecar(path))
        }
        None => {
            print!("{md}");
            Ok(())
        }
    }
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub papers: usize,
    #[arg(long, default_value_t = 48)]
    pub vocabulary: usize,
    #[arg(long, default_value_t = 3)]
    pub min_keywords: usize,
    #[arg(long, default_value_t = 4)]
    pub max_keywords: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Leave out keyword lists so ingestion has to extract them.
    #[arg(long)]
    pub omit_keywords: bool,
}

pub fn gen_toy_corpus(args: ToyArgs) -> Result<(), CliError> {
    let spec = ToyCorpusSpec {
        papers: args.papers,
        vocabulary: args.vocabulary,
        min_keywords: args.min_keywords,
        max_keywords: args.max_keywords,
        seed: args.seed,
        omit_keywords: args.omit_keywords,
    };
    let records = toy::generate(&spec)?;
    write(&args.out, write_corpus(&records))?;
    let mut m = Manifest::new("gen-toy-corpus");
    m.config = Some(serde_json::to_value(&spec).expect("spec serializes"));
    m.outputs.push(args.out.clone());
    m.write(&sidecar(&args.out))?;
    println!("wrote {} papers to {}", records.len(), args.out.display());
    Ok(())
}
