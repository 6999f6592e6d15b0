//! The `deduce` command line and HTTP service.

pub mod service;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use astar_deduce::datagen::{
    export_corpus, filter_corpus, gen_deeprd, write_instances, ExportFormat, GenConfig, ProblemInstance, Span,
};
use astar_deduce::document::{read_program_docs, ProgramDoc, TraceDoc};
use astar_deduce::heuristics::{check_admissibility, check_consistency, HeuristicKind};
use astar_deduce::rewards::RewardKind;
use astar_deduce::scoring::{to_body, Candidate, Corpus, ScoreRequest, Scorer, SCHEMA_VERSION};
use astar_deduce::trace::{pops_set, raw_score};
use astar_deduce::verify::AdjudicationMode;
use astar_deduce::{astar, build_heuristic, extract_shortest_proof, minimal_model, Atom, CostFunction, ProofStep, Verbalizer};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub const PORT_ENV: &str = "DEDUCE_PORT";
pub const CORPUS_ENV: &str = "DEDUCE_CORPUS_DIR";

#[derive(Debug, Parser)]
#[command(name = "deduce", version, about = "A* proof search, trace verification and process rewards")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run A* on a program and print the trace, its verbalization and metrics.
    Prove(ProveArgs),
    /// Parse and adjudicate a candidate proof.
    Verify(VerifyArgs),
    /// Verify a candidate and compute metrics and rewards.
    Score(ScoreArgs),
    /// Generate branching-chain instances as JSONL program documents.
    GenDeeprd(GenArgs),
    /// Keep instances by proof depth and provability.
    Filter(FilterArgs),
    /// Write SFT or ICL training records.
    Export(ExportArgs),
    /// Report consistency and admissibility of a heuristic table.
    CheckHeuristic(CheckArgs),
    /// Push and pop histograms per heuristic over a corpus.
    Stats(StatsArgs),
    /// Serve verification and scoring over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct ProgramArgs {
    /// Program document (JSON or JSONL).
    #[arg(long)]
    program: PathBuf,
    /// Document id when the file holds several.
    #[arg(long)]
    id: Option<String>,
    /// Goal atom overriding the document's, e.g. `ancestor(terah,jacob)`.
    #[arg(long, value_parser = parse_atom)]
    goal: Option<Atom>,
}

#[derive(Debug, Args)]
struct ProveArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long, default_value = "true", value_parser = parse_heuristic)]
    heuristic: HeuristicKind,
    #[arg(long, default_value = "depth", value_parser = parse_cost)]
    cost: CostFunction,
    /// Drain the agenda instead of stopping at the goal.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, value_enum, default_value_t = ProveFormat::Json)]
    format: ProveFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProveFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct CandidateArgs {
    /// Candidate proof: verbalized text, or a JSON trace with --structured.
    #[arg(long)]
    candidate: Option<PathBuf>,
    #[arg(long, requires = "candidate")]
    structured: bool,
    #[arg(long, default_value = "strict", value_parser = parse_mode)]
    mode: AdjudicationMode,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[command(flatten)]
    candidate: CandidateArgs,
    #[arg(long, default_value = "depth", value_parser = parse_cost)]
    cost: CostFunction,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// A complete JSON score request, `-` for stdin.
    #[arg(long, conflicts_with_all = ["program", "candidate", "reward", "h_cap"])]
    request: Option<PathBuf>,
    /// Directory of program documents for requests that reference an id.
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    #[arg(long, required_unless_present = "request")]
    program: Option<PathBuf>,
    #[arg(long)]
    id: Option<String>,
    #[arg(long, value_parser = parse_atom)]
    goal: Option<Atom>,
    #[arg(long)]
    candidate: Option<PathBuf>,
    #[arg(long, requires = "candidate")]
    structured: bool,
    #[arg(long, default_value = "strict", value_parser = parse_mode)]
    mode: AdjudicationMode,
    /// Reward kinds to compute; all when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_reward)]
    reward: Vec<RewardKind>,
    /// Finite stand-in for infinite heuristic values in reward computation.
    #[arg(long)]
    h_cap: Option<u64>,
    #[arg(long, default_value = "depth", value_parser = parse_cost)]
    cost: CostFunction,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Chain length, `N` or `MIN..MAX`.
    #[arg(long, default_value = "5..10", value_parser = parse_span)]
    lookahead: Span,
    /// Distractor chains from the axiom, `N` or `MIN..MAX`.
    #[arg(long, default_value = "4..8", value_parser = parse_span)]
    branching: Span,
    /// Length of each distractor chain; the lookahead when omitted.
    #[arg(long)]
    distractor_len: Option<u32>,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    min_depth: u64,
    #[arg(long)]
    provable_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportKind {
    Sft,
    Icl,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "true", value_parser = parse_heuristic)]
    heuristic: HeuristicKind,
    #[arg(long, value_enum, default_value_t = ExportKind::Sft)]
    format: ExportKind,
    /// Number of in-context exemplars.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value = "depth", value_parser = parse_cost)]
    cost: CostFunction,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long, default_value = "dependency", value_parser = parse_heuristic)]
    heuristic: HeuristicKind,
    #[arg(long, default_value = "depth", value_parser = parse_cost)]
    cost: CostFunction,
    /// Include the table over the Herbrand base.
    #[arg(long)]
    dump: bool,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "depth", value_parser = parse_cost)]
    cost: CostFunction,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    #[arg(long, default_value_t = service::DEFAULT_BODY_LIMIT)]
    body_limit: usize,
    #[arg(long, default_value_t = service::DEFAULT_TIMEOUT.as_secs())]
    timeout_secs: u64,
}

fn parse_atom(s: &str) -> Result<Atom, String> {
    Atom::parse(s).map_err(|e| e.to_string())
}

fn parse_heuristic(s: &str) -> Result<HeuristicKind, String> {
    s.parse()
}

fn parse_cost(s: &str) -> Result<CostFunction, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<AdjudicationMode, String> {
    s.parse()
}

fn parse_reward(s: &str) -> Result<RewardKind, String> {
    s.parse()
}

fn parse_span(s: &str) -> Result<Span, String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            Ok(Span { min: num(a)?, max: num(b)? })
        }
        None => Ok(Span::exactly(num(s)?)),
    }
}

/// Runs the CLI and returns the process exit status: 0 on success, 1 on a
/// usage error, 2 on a data error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", error_chain(&e));
            2
        }
    }
}

// Library errors often embed their source in the message already.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.ends_with(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Prove(a) => prove(a, stdout),
        Command::Verify(a) => verify(a, stdout),
        Command::Score(a) => score(a, stdout),
        Command::GenDeeprd(a) => gen(a, stdout),
        Command::Filter(a) => filter(a, stdout),
        Command::Export(a) => export(a, stdout),
        Command::CheckHeuristic(a) => check_heuristic(a, stdout),
        Command::Stats(a) => stats(a, stdout),
        Command::Serve(a) => serve(a, stderr),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => stdout.write_all(bytes).context("writing to stdout"),
    }
}

fn select_doc(path: &Path, id: Option<&str>) -> Result<ProgramDoc> {
    let docs = read_program_docs(path)?;
    match id {
        Some(id) => docs
            .into_iter()
            .find(|d| d.id == id)
            .ok_or_else(|| anyhow!("no program with id {id:?} in {}", path.display())),
        None => match docs.len() {
            1 => Ok(docs.into_iter().next().expect("one document")),
            0 => bail!("{} holds no program documents", path.display()),
            n => bail!("{} holds {n} programs; choose one with --id", path.display()),
        },
    }
}

fn read_instances(path: &Path) -> Result<Vec<ProblemInstance>> {
    read_program_docs(path)?
        .iter()
        .map(|d| ProblemInstance::from_doc(d).map_err(Into::into))
        .collect()
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_candidate(path: Option<&Path>, structured: bool) -> Result<Candidate> {
    let Some(path) = path else {
        return Ok(Candidate::default());
    };
    let text = read_input(path)?;
    if !structured {
        return Ok(Candidate {
            text: Some(text),
            steps: None,
        });
    }
    // a bare step list or a trace document
    let steps = match serde_json::from_str::<Vec<ProofStep>>(&text) {
        Ok(steps) => steps,
        Err(_) => {
            serde_json::from_str::<TraceDoc>(&text)
                .with_context(|| format!("parsing structured trace {}", path.display()))?
                .steps
        }
    };
    Ok(Candidate {
        text: None,
        steps: Some(steps),
    })
}

fn prove(a: ProveArgs, stdout: &mut dyn Write) -> Result<()> {
    let doc = select_doc(&a.program.program, a.program.id.as_deref())?;
    let program = doc.to_program()?;
    let goal = a
        .program
        .goal
        .or_else(|| program.goal().cloned())
        .ok_or_else(|| anyhow!("program {} has no goal; pass --goal", program.id))?;
    let table = build_heuristic(&program, &goal, a.heuristic, a.cost)?;
    let result = astar(&program, &goal, &table, a.cost, a.exhaustive)?;
    let program = program.with_goal(goal.clone())?;
    let verbalizer = Verbalizer::new(&program)?;
    let verbalization = verbalizer.verbalize_trace(&result.trace)?;
    if let ProveFormat::Text = a.format {
        return emit(None, format!("{verbalization}\n").as_bytes(), stdout);
    }
    let shortest = if result.is_provable() {
        extract_shortest_proof(&result)?
    } else {
        Vec::new()
    };
    let weights = minimal_model(&program, a.cost);
    let raw = raw_score(&result.trace, &weights, &table)?;
    let body = json!({
        "schema": SCHEMA_VERSION,
        "program_id": program.id,
        "goal": goal.to_string(),
        "heuristic": a.heuristic,
        "cost": a.cost,
        "provable": result.is_provable(),
        "weight": result.goal_weight,
        "trace": result.trace.steps,
        "shortest_proof": shortest,
        "verbalization": verbalization,
        "metrics": {
            "steps": result.trace.len(),
            "pops": pops_set(&result.trace).len(),
            "engine_pops": result.pop_count(),
            "agenda_pushes": result.agenda_pushes,
            "raw_score": raw,
        },
    });
    emit(None, to_body(&body).as_bytes(), stdout)
}

fn verify(a: VerifyArgs, stdout: &mut dyn Write) -> Result<()> {
    let doc = select_doc(&a.program.program, a.program.id.as_deref())?;
    let mut req = ScoreRequest::new(doc, read_candidate(a.candidate.candidate.as_deref(), a.candidate.structured)?);
    req.goal = a.program.goal;
    req.mode = a.candidate.mode;
    req.cost = a.cost;
    let body = to_body(&Scorer::default().verify(&req)?);
    emit(None, body.as_bytes(), stdout)
}

fn score(a: ScoreArgs, stdout: &mut dyn Write) -> Result<()> {
    let corpus_dir = std::env::var_os(CORPUS_ENV).map(PathBuf::from).or(a.corpus_dir);
    let corpus = match corpus_dir {
        Some(dir) => Corpus::load_dir(&dir)?,
        None => Corpus::new(),
    };
    let scorer = Scorer::new(corpus);
    let body = match &a.request {
        Some(path) => scorer.score_body(&read_input(path)?)?,
        None => {
            let path = a.program.as_deref().expect("clap requires --program without --request");
            let doc = select_doc(path, a.id.as_deref())?;
            let mut req = ScoreRequest::new(doc, read_candidate(a.candidate.as_deref(), a.structured)?);
            req.goal = a.goal;
            req.mode = a.mode;
            req.h_cap = a.h_cap;
            req.cost = a.cost;
            if !a.reward.is_empty() {
                req.rewards = a.reward;
            }
            to_body(&scorer.score(&req)?)
        }
    };
    emit(None, body.as_bytes(), stdout)
}

fn gen(a: GenArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = GenConfig {
        lookahead: a.lookahead,
        branching: a.branching,
        distractor_len: a.distractor_len,
        count: a.count,
        seed: a.seed,
        ..GenConfig::default()
    };
    let instances = gen_deeprd(&config)?;
    let mut buf = Vec::new();
    write_instances(&instances, &mut buf)?;
    emit(a.out.as_deref(), &buf, stdout)
}

fn filter(a: FilterArgs, stdout: &mut dyn Write) -> Result<()> {
    let kept = filter_corpus(read_instances(&a.input)?, a.min_depth, a.provable_only);
    let mut buf = Vec::new();
    write_instances(&kept, &mut buf)?;
    emit(a.out.as_deref(), &buf, stdout)
}

fn export(a: ExportArgs, stdout: &mut dyn Write) -> Result<()> {
    let instances = read_instances(&a.input)?;
    let format = match a.format {
        ExportKind::Sft => ExportFormat::Sft,
        ExportKind::Icl => ExportFormat::Icl { k: a.k },
    };
    let mut buf = Vec::new();
    export_corpus(&instances, a.heuristic, format, a.cost, &mut buf)?;
    emit(a.out.as_deref(), &buf, stdout)
}

fn check_heuristic(a: CheckArgs, stdout: &mut dyn Write) -> Result<()> {
    let doc = select_doc(&a.program.program, a.program.id.as_deref())?;
    let program = doc.to_program()?;
    let goal = a
        .program
        .goal
        .or_else(|| program.goal().cloned())
        .ok_or_else(|| anyhow!("program {} has no goal; pass --goal", program.id))?;
    let table = build_heuristic(&program, &goal, a.heuristic, a.cost)?;
    let consistency = check_consistency(&table, &program, a.cost);
    let admissibility = match check_admissibility(&table, &program, &goal, a.cost) {
        Ok(report) => json!({"passed": report.passed(), "checked": report.checked, "violations": report.violations}),
        Err(e) => json!({"error": e.to_string()}),
    };
    let mut body = json!({
        "schema": SCHEMA_VERSION,
        "program_id": program.id,
        "goal": goal.to_string(),
        "heuristic": a.heuristic,
        "cost": a.cost,
        "consistency": {
            "passed": consistency.passed(),
            "checked": consistency.checked,
            "violations": consistency.violations,
        },
        "admissibility": admissibility,
    });
    if a.dump {
        body["dump"] = serde_json::to_value(table.dump(&program))?;
    }
    emit(None, to_body(&body).as_bytes(), stdout)
}

fn summary(values: &mut [usize]) -> Value {
    values.sort_unstable();
    let n = values.len();
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in values.iter() {
        *histogram.entry(v).or_default() += 1;
    }
    let median = match n {
        0 => None,
        _ if n % 2 == 1 => Some(values[n / 2] as f64),
        _ => Some((values[n / 2 - 1] + values[n / 2]) as f64 / 2.0),
    };
    json!({
        "mean": (n > 0).then(|| values.iter().sum::<usize>() as f64 / n as f64),
        "median": median,
        "min": values.first(),
        "max": values.last(),
        "histogram": histogram,
    })
}

fn stats(a: StatsArgs, stdout: &mut dyn Write) -> Result<()> {
    let instances = read_instances(&a.input)?;
    let mut per = serde_json::Map::new();
    let mut skipped = 0;
    let kinds = [HeuristicKind::Zero, HeuristicKind::Dependency, HeuristicKind::TrueCostToGo];
    let mut pushes = vec![Vec::new(); kinds.len()];
    let mut pops = vec![Vec::new(); kinds.len()];
    for inst in &instances {
        let program = &inst.program;
        let Some(goal) = program.goal() else {
            skipped += 1;
            continue;
        };
        let mut runs = Vec::new();
        for kind in kinds {
            let table = build_heuristic(program, goal, kind, a.cost)?;
            runs.push(astar(program, goal, &table, a.cost, false)?);
        }
        if !runs[0].is_provable() {
            skipped += 1;
            continue;
        }
        for (i, r) in runs.iter().enumerate() {
            pushes[i].push(r.trace.len());
            pops[i].push(pops_set(&r.trace).len());
        }
    }
    for (i, kind) in kinds.iter().enumerate() {
        per.insert(
            kind.to_string(),
            json!({"pushes": summary(&mut pushes[i]), "pops": summary(&mut pops[i])}),
        );
    }
    let body = json!({
        "schema": SCHEMA_VERSION,
        "instances": instances.len() - skipped,
        "skipped": skipped,
        "cost": a.cost,
        "heuristics": per,
    });
    emit(None, to_body(&body).as_bytes(), stdout)
}

fn serve(a: ServeArgs, stderr: &mut dyn Write) -> Result<()> {
    let port = match std::env::var(PORT_ENV) {
        Ok(p) => p.parse().with_context(|| format!("{PORT_ENV}={p:?} is not a port"))?,
        Err(_) => a.port,
    };
    let corpus_dir = std::env::var_os(CORPUS_ENV).map(PathBuf::from).or(a.corpus_dir);
    let corpus = match &corpus_dir {
        Some(dir) => Corpus::load_dir(dir)?,
        None => Corpus::new(),
    };
    let scorer = Arc::new(Scorer::new(corpus));
    let config = service::ServiceConfig {
        body_limit: a.body_limit,
        timeout: Duration::from_secs(a.timeout_secs),
    };
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), port))
            .await
            .with_context(|| format!("binding {}:{port}", a.host))?;
        writeln!(
            stderr,
            "listening on {} with {} programs",
            listener.local_addr()?,
            scorer.corpus().len()
        )?;
        service::serve(listener, scorer, config).await.context("serving")
    })
}
