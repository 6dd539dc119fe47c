//! `bmi` command-line front end.
//!
//! Exit status: 0 on success, 1 for a domain error (bad fixture contents,
//! degenerate pair, exhausted geometry draws), 2 for usage and IO errors.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiment::{
    geometry_digest, replay_reference_trial, run_batch, statistics_json, write_records_jsonl,
    write_trials_csv, ExperimentConfig, VariantGrid,
};
use crate::fixture::{parse_json, write_json, Fixture};
use crate::interplay::run_interplay;
use crate::memory::{b_matrix, generate_memories_with, hebbian_weights, permute_memories};
use crate::policy::{Policies, RoundCounting};
use crate::recall::single_recall;
use crate::topology::{
    distance_matrix, generate_geometry_with, proximity_permutation, select_stimulus_pair,
    CoordRange,
};

pub const SEED_ENV: &str = "BMI_SEED";

macro_rules! say {
    ($buf:expr, $($arg:tt)*) => {{
        $buf.push_str(&format!($($arg)*));
        $buf.push('\n');
    }};
}

#[derive(Debug, Parser)]
#[command(
    name = "bmi",
    version,
    about = "Proximity-ordered B-matrix recall simulator"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a geometry and a memory set and write them as fixture files.
    Generate(GenerateArgs),
    /// Single-source recall from one start neuron.
    Recall(RecallArgs),
    /// Dual-source recall from a stimulus pair.
    Interplay(InterplayArgs),
    /// Check the built-in reference trial and rank policy variants.
    Replicate(ReplicateArgs),
    /// Monte Carlo batch from a JSON config.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Inclusive coordinate bounds, `lo:hi`.
    #[arg(long, default_value = "0:9")]
    pub range: CoordRange,
    #[arg(long, default_value_t = 3)]
    pub memories: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    /// Comma-separated `key=value` overrides, e.g. `sign=zero-to-negative`.
    #[arg(long, default_value = "")]
    pub policies: String,
}

impl PolicyArgs {
    fn resolve(&self) -> Result<Policies> {
        Policies::default()
            .with_overrides(&self.policies)
            .map_err(Error::Invalid)
    }
}

#[derive(Debug, Args)]
pub struct RecallArgs {
    /// Fixture directory, or `reference` for the built-in trial.
    #[arg(long, default_value = "reference")]
    pub fixture: PathBuf,
    /// 1-based start neuron.
    #[arg(long, conflicts_with = "lane")]
    pub start: Option<usize>,
    /// Start from the first (1) or second (2) neuron of the stimulus pair.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub lane: Option<u8>,
    /// Stimulus value, +1 or -1.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_sign)]
    pub init: i8,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// JSON-lines trace, one record per round.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InterplayArgs {
    #[arg(long, default_value = "reference")]
    pub fixture: PathBuf,
    /// 1-based start neurons `a,b`; defaults to the selected stimulus pair.
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<(usize, usize)>,
    /// Stimulus values for the two sources, e.g. `+1,-1`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_inits)]
    pub inits: (i8, i8),
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// JSON-lines trace, one record per counted round.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Print every round as an `r1Mems`/`r2Mems` pair of rows.
    #[arg(long)]
    pub render_rows: bool,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    /// Where to write the JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Variant grid as JSON; defaults to the built-in 48 combinations.
    #[arg(long)]
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for statistics.json, trials.csv and trials.jsonl.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_sign(s: &str) -> std::result::Result<i8, String> {
    match s.trim() {
        "1" | "+1" | "+" => Ok(1),
        "-1" | "-" => Ok(-1),
        other => Err(format!("expected +1 or -1, got {other:?}")),
    }
}

fn split2(s: &str) -> std::result::Result<(&str, &str), String> {
    s.split_once(',')
        .ok_or_else(|| format!("expected two comma-separated values, got {s:?}"))
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = split2(s)?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn parse_inits(s: &str) -> std::result::Result<(i8, i8), String> {
    let (a, b) = split2(s)?;
    Ok((parse_sign(a)?, parse_sign(b)?))
}

fn neuron_index(label: usize, n: usize) -> Result<usize> {
    if label == 0 || label > n {
        return Err(Error::Invalid(format!("neuron {label} outside 1..={n}")));
    }
    Ok(label - 1)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = create(path)?;
    for item in items {
        let line = serde_json::to_string(&item).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn fmt_row(v: &[i8]) -> String {
    v.iter()
        .map(|x| format!("{x:>2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_generate(buf: &mut String, seed: u64, args: &GenerateArgs) -> Result<()> {
    // same stream layout as a batch trial, so a trial seed regenerates it
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geometry = generate_geometry_with(&mut rng, args.n, args.range)?;
    let memories = generate_memories_with(&mut rng, args.memories, args.n)?;
    let fixture = Fixture::new(geometry, memories)?;
    fixture.save(&args.out)?;
    let pair = select_stimulus_pair(&fixture.geometry);
    say!(
        buf,
        "geometry digest {}",
        geometry_digest(&fixture.geometry)
    );
    say!(buf, "stimulus pair {},{}", pair.labels().0, pair.labels().1);
    say!(buf, "wrote {}", args.out.display());
    Ok(())
}

fn cmd_recall(buf: &mut String, seed: u64, args: &RecallArgs) -> Result<()> {
    let fx = Fixture::load(&args.fixture)?;
    let n = fx.geometry.n();
    let start = match (args.start, args.lane) {
        (Some(label), _) => neuron_index(label, n)?,
        (None, Some(lane)) => {
            let pair = select_stimulus_pair(&fx.geometry);
            if lane == 1 {
                pair.first
            } else {
                pair.second
            }
        }
        (None, None) => {
            return Err(Error::Invalid(
                "one of --start or --lane is required".into(),
            ))
        }
    };
    let policies = args.policy.resolve()?;
    let perm = proximity_permutation(&distance_matrix(&fx.geometry), start)?;
    let mems = permute_memories(&fx.memories, &perm)?;
    let b = b_matrix(&hebbian_weights(&mems))?;
    let res = single_recall(&b, &mems, args.init, &policies, seed)?;
    if let Some(path) = &args.trace {
        write_jsonl(path, &res.trace)?;
    }
    let order: Vec<String> = perm.labels().iter().map(usize::to_string).collect();
    say!(buf, "start neuron {}, init {:+}", start + 1, args.init);
    say!(buf, "order  {}", order.join(" "));
    say!(buf, "final  {}", fmt_row(&res.final_state));
    say!(buf, "rounds {}", res.trace.len());
    say!(buf, "{}", res.outcome);
    Ok(())
}

fn cmd_interplay(buf: &mut String, seed: u64, args: &InterplayArgs) -> Result<()> {
    let fx = Fixture::load(&args.fixture)?;
    let n = fx.geometry.n();
    let pair = match args.pair {
        Some((a, b)) => (neuron_index(a, n)?, neuron_index(b, n)?),
        None => {
            let p = select_stimulus_pair(&fx.geometry);
            (p.first, p.second)
        }
    };
    let policies = args.policy.resolve()?;
    let res = run_interplay(&fx.geometry, &fx.memories, pair, args.inits, policies, seed)?;
    let counted: Vec<_> = res
        .trace
        .iter()
        .filter(|r| policies.round_counting == RoundCounting::AllRounds || r.is_active())
        .collect();
    if let Some(path) = &args.trace {
        write_jsonl(path, &counted)?;
    }
    if args.render_rows {
        buf.push_str(&res.render_rows());
    }
    say!(
        buf,
        "pair {},{} inits {:+},{:+}",
        res.pair.0,
        res.pair.1,
        res.inits.0,
        res.inits.1
    );
    say!(
        buf,
        "rounds {}",
        res.reported_rounds(policies.round_counting)
    );
    say!(buf, "agreement {}", res.agreement);
    say!(buf, "conflicts {}", res.conflicts);
    for lane in 0..2 {
        say!(
            buf,
            "lane {} final {}",
            lane + 1,
            fmt_row(&res.network_finals[lane])
        );
        say!(buf, "lane {} {}", lane + 1, res.outcomes[lane]);
    }
    Ok(())
}

/// Returns whether the exact tier reproduced.
fn cmd_replicate(buf: &mut String, args: &ReplicateArgs) -> Result<bool> {
    let grid: VariantGrid = match &args.grid {
        Some(path) => parse_json(path)?,
        None => VariantGrid::default(),
    };
    let report = replay_reference_trial(&grid)?;
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    buf.push_str(&report.render_text());
    Ok(report.exact_tier_ok)
}

fn cmd_batch(buf: &mut String, args: &BatchArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let out = run_batch(&cfg, args.threads)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let stats_path = args.out.join("statistics.json");
    fs::write(&stats_path, statistics_json(&out.statistics))
        .map_err(|e| Error::io(&stats_path, e))?;
    let csv_path = args.out.join("trials.csv");
    write_trials_csv(create(&csv_path)?, &out.records)?;
    let jsonl_path = args.out.join("trials.jsonl");
    let mut w = create(&jsonl_path)?;
    write_records_jsonl(&mut w, &out.records)?;
    w.flush().map_err(|e| Error::io(&jsonl_path, e))?;
    let s = &out.statistics;
    say!(buf, "trials {} runs {}", s.trials, s.runs);
    say!(buf, "exact match rate {:.4}", s.exact_match_rate);
    say!(buf, "pseudo-memory rate {:.4}", s.pseudo_memory_rate);
    if let Some(h) = s.mean_pseudo_hamming {
        say!(buf, "mean pseudo-memory Hamming {h:.3}");
    }
    say!(buf, "wrote {}", args.out.display());
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> i32 {
    let mut buf = String::new();
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(&mut buf, cli.seed, a).map(|_| 0),
        Command::Recall(a) => cmd_recall(&mut buf, cli.seed, a).map(|_| 0),
        Command::Interplay(a) => cmd_interplay(&mut buf, cli.seed, a).map(|_| 0),
        Command::Replicate(a) => cmd_replicate(&mut buf, a).map(|ok| if ok { 0 } else { 1 }),
        Command::Batch(a) => cmd_batch(&mut buf, a).map(|_| 0),
    };
    // a closed reader (e.g. `| head`) is not an error
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout
        .write_all(buf.as_bytes())
        .and_then(|_| stdout.flush())
    {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: stdout: {e}");
            return 2;
        }
    }
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
    }
}
