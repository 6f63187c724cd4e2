use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tmev_core::config::Config;
use tmev_core::par::Mode;
use tmev_core::pipeline;
use tmev_core::scan::{TscReport, Verdict};
use tmev_core::search::{catalog, parse_mempool, Template, TemplateId};
use tmev_core::sim::pool::INACTIVE_TICK;
use tmev_core::sim::{classify_pool, load_bundle, load_fixture, PoolId};

#[derive(Parser)]
#[command(name = "tmev", version, about = "Token supply-control scanner and token-driven MEV search")]
struct Cli {
    /// Run data-parallel stages on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan TokenLang files for supply-control paths.
    Scan(ScanArgs),
    /// Execute a bundle atomically against a fixture.
    Sim {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Classify a pool as price-sensitive or price-insensitive.
    Pitex {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        pool: String,
        /// Probe a concentrated pool by adding liquidity on its inactive tick.
        #[arg(long)]
        inactive_tick: bool,
    },
    /// Match a mempool against the watch list and emit winning plans.
    Search(SearchArgs),
    /// Re-execute recorded plans and compare their profit.
    Replay {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        plans: PathBuf,
    },
    /// Write seeded synthetic contracts for throughput runs.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Defaults to the configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct ScanArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    unroll: Option<usize>,
    /// Write the JSON report array here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Compare verdicts against a label table.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    fixture: PathBuf,
    /// Report array written by `tmev scan`.
    #[arg(long)]
    watch: PathBuf,
    #[arg(long)]
    mempool: PathBuf,
    #[arg(long)]
    budget: Option<u64>,
    /// Plans file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated template ids; all templates when absent.
    #[arg(long, value_delimiter = ',')]
    templates: Vec<String>,
}

/// Analysis completed but found errors; exits 1 rather than 2.
#[derive(Debug)]
struct Findings(String);

impl std::fmt::Display for Findings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Findings {}

fn findings(msg: String) -> anyhow::Error {
    Findings(msg).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mode = if cli.sequential { Mode::Sequential } else { Mode::default() };
    match run(cli.command, mode) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tmev: {e:#}");
            ExitCode::from(if e.is::<Findings>() { 1 } else { 2 })
        }
    }
}

fn run(command: Command, mode: Mode) -> anyhow::Result<()> {
    let mut cfg = Config::from_env().context("loading configuration")?;
    match command {
        Command::Scan(args) => {
            if let Some(d) = args.depth {
                cfg.depth = d;
            }
            if let Some(u) = args.unroll {
                cfg.unroll = u;
            }
            cfg.validate()?;
            cmd_scan(args, &cfg, mode)
        }
        Command::Sim { fixture, bundle } => cmd_sim(&fixture, &bundle),
        Command::Pitex { fixture, pool, inactive_tick } => cmd_pitex(&fixture, &pool, inactive_tick),
        Command::Search(args) => {
            if let Some(b) = args.budget {
                cfg.budget = b;
            }
            cmd_search(args, &cfg, mode)
        }
        Command::Replay { fixture, plans } => cmd_replay(&fixture, &plans),
        Command::GenCorpus { out, count, seed } => cmd_gen_corpus(&out, count, seed.unwrap_or(cfg.seed)),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => emit(text),
    }
}

/// Write to stdout; a reader that hung up early is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn cmd_scan(args: ScanArgs, cfg: &Config, mode: Mode) -> anyhow::Result<()> {
    for p in &args.paths {
        if !p.is_file() {
            bail!("no such file: {}", p.display());
        }
    }
    let labels = match &args.labels {
        Some(p) => Some(std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let outputs = pipeline::scan_files(&args.paths, cfg, mode);
    let mut reports: Vec<TscReport> = Vec::new();
    let mut errors = Vec::new();
    for o in outputs {
        match o.result {
            Ok(rs) => reports.extend(rs),
            Err(e) => errors.push(e),
        }
    }
    let json = serde_json::to_string_pretty(&reports)? + "\n";
    write_output(args.report.as_deref(), &json)?;
    for r in &reports {
        eprintln!("{:<24} {:<16} {}", r.contract, r.verdict.as_str(), r.source);
    }
    for e in &errors {
        eprintln!("error: {e}");
    }
    let mut problems = errors.len();
    if let Some(text) = labels {
        let s = pipeline::check_labels(&reports, &text);
        eprintln!(
            "labels: {} true positive, {} true negative, {} expected miss, FP {:?}, FN {:?}",
            s.true_pos, s.true_neg, s.expected_misses.len(), s.false_pos, s.false_neg
        );
        problems += s.false_pos.len() + s.false_neg.len();
    }
    let tsc = reports.iter().filter(|r| r.verdict == Verdict::TscToken).count();
    eprintln!("{} contracts, {tsc} tsc tokens, {} errors", reports.len(), errors.len());
    if problems > 0 {
        return Err(findings(format!("{problems} file error(s) or label mismatch(es)")));
    }
    Ok(())
}

fn cmd_sim(fixture: &Path, bundle: &Path) -> anyhow::Result<()> {
    let fx = load_fixture(fixture)?;
    let txs = load_bundle(bundle)?;
    let (post, receipts) = fx.state.exec_bundle(&txs).map_err(|e| findings(format!("bundle reverted: {e}")))?;
    let out: Vec<_> = receipts
        .iter()
        .map(|r| {
            let deltas: Vec<_> = r
                .balance_deltas
                .iter()
                .map(|((a, t), d)| json!({"account": a, "token": t, "delta": d.to_string()}))
                .collect();
            json!({"ok": r.ok, "outputs": r.outputs, "balance_deltas": deltas})
        })
        .collect();
    let doc = json!({"receipts": out, "block_number": post.block_number, "fingerprint": post.fingerprint()});
    emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
    Ok(())
}

fn cmd_pitex(fixture: &Path, pool: &str, inactive_tick: bool) -> anyhow::Result<()> {
    let fx = load_fixture(fixture)?;
    let tick = inactive_tick.then_some(INACTIVE_TICK);
    let o = classify_pool(&fx.state, &PoolId::new(pool), tick).map_err(|e| findings(e.to_string()))?;
    emit(&format!("{}\n", o.class.as_str()))?;
    eprintln!("{pool}: dx1={} dx2={}", o.dx1, o.dx2);
    Ok(())
}

fn templates(ids: &[String]) -> anyhow::Result<Vec<Template>> {
    if ids.is_empty() {
        return Ok(catalog());
    }
    ids.iter()
        .map(|s| TemplateId::parse(s).map(Template::new).with_context(|| format!("unknown template `{s}`")))
        .collect()
}

fn cmd_search(args: SearchArgs, cfg: &Config, mode: Mode) -> anyhow::Result<()> {
    let templates = templates(&args.templates)?;
    let fx = load_fixture(&args.fixture)?;
    let watch_text = std::fs::read_to_string(&args.watch).with_context(|| format!("reading {}", args.watch.display()))?;
    let reports: Vec<TscReport> = serde_json::from_str(&watch_text).with_context(|| format!("parsing {}", args.watch.display()))?;
    let mempool_text =
        std::fs::read_to_string(&args.mempool).with_context(|| format!("reading {}", args.mempool.display()))?;
    let mempool = parse_mempool(&mempool_text);
    let watch = pipeline::build_watchlist(&fx.state, &reports, &templates);
    eprintln!("watch list: {} keys, {} pending txs", watch.len(), mempool.len());
    let results = pipeline::search(&fx, &watch, &mempool, cfg, mode);
    let mut plans = Vec::new();
    for r in results {
        for s in &r.skipped {
            log::info!("{}: skipped {s}", r.victim_tx_id);
        }
        match r.winner {
            Some(p) => {
                eprintln!("{}: {} profit {} {}", r.victim_tx_id, p.template_id, p.profit, p.profit_token);
                plans.push(p);
            }
            None => eprintln!("{}: no profitable template", r.victim_tx_id),
        }
    }
    write_output(args.out.as_deref(), &pipeline::plans_to_jsonl(&plans))?;
    Ok(())
}

fn cmd_replay(fixture: &Path, plans: &Path) -> anyhow::Result<()> {
    let fx = load_fixture(fixture)?;
    let text = std::fs::read_to_string(plans).with_context(|| format!("reading {}", plans.display()))?;
    let plans = pipeline::plans_from_jsonl(&text).with_context(|| format!("parsing {}", plans.display()))?;
    let outcomes = pipeline::replay_all(&fx.state, &plans);
    let mut failed = 0;
    for o in &outcomes {
        let line = match &o.result {
            Ok(p) if o.verified() => json!({"victim_tx_id": o.victim_tx_id, "status": "verified", "profit": p.to_string()}),
            Ok(p) => json!({"victim_tx_id": o.victim_tx_id, "status": "mismatch", "recorded": o.recorded.to_string(), "replayed": p.to_string()}),
            Err(e) => json!({"victim_tx_id": o.victim_tx_id, "status": "error", "error": e.to_string()}),
        };
        if !o.verified() {
            failed += 1;
        }
        emit(&format!("{line}\n"))?;
    }
    eprintln!("{} plans, {} verified", outcomes.len(), outcomes.len() - failed);
    if failed > 0 {
        return Err(findings(format!("{failed} plan(s) failed replay")));
    }
    Ok(())
}

fn cmd_gen_corpus(out: &Path, count: usize, seed: u64) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for g in tmev_core::corpus_gen::generate(seed, count) {
        let p = out.join(format!("{}.tok", g.name.to_lowercase()));
        std::fs::write(&p, g.source).with_context(|| format!("writing {}", p.display()))?;
    }
    eprintln!("wrote {count} contracts to {}", out.display());
    Ok(())
}
