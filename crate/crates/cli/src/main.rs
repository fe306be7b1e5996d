use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use defuse_core::agents::PolicySpec;
use defuse_core::harness::{
    generate_instance, replay_transcript, run_batch, tom_report, Overrides, RandomizationSpec,
    Transcript, TrialConfig,
};
use defuse_core::planner::{execute_plan, plan_mission, PlannerOptions, SortHeuristic};
use defuse_core::textio::canonical_phrase;
use defuse_core::world::{Action, AgentId, World, WorldConfig};

#[derive(Parser)]
#[command(name = "defuse", version, about = "Three-agent bomb-defusal simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of trials and print the summary table.
    Run {
        /// Trial config or bare world config (JSON). Defaults to a generated map.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed range `a..b` (end exclusive), `a..=b`, or a single seed.
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long)]
        belief: bool,
        /// Per-agent bindings, e.g. `alpha=greedy,bravo=random,charlie=external:tcp://127.0.0.1:7000`.
        #[arg(long)]
        policy: Option<String>,
        /// Directory for transcripts and `rows.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Plan the mission centrally and certify the plan on the engine.
    Plan {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Phases per subtask; omit to plan the whole mission at once.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = Heuristic::Nearest)]
        heuristic: Heuristic,
        /// Seed for generated maps.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Re-run a transcript from its recorded replies and compare byte for byte.
    Replay { transcript: PathBuf },
    /// Grade the ToM questions in one or more transcripts.
    TomScore {
        #[arg(required = true)]
        transcripts: Vec<PathBuf>,
        /// JSON object mapping question ids (or `trial_id/question_id`) to "yes", "no" or "ambiguous".
        #[arg(long)]
        overrides: Option<PathBuf>,
        /// Also print every graded row.
        #[arg(long)]
        rows: bool,
    },
    /// Generate a world config from a randomization spec.
    Gen {
        #[arg(long, conflicts_with = "standard")]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the fixed five-room map with the standard bomb set instead.
        #[arg(long)]
        standard: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Heuristic {
    Nearest,
    Id,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Accepts a trial config or a bare world config.
fn load_config(path: Option<&Path>) -> Result<TrialConfig> {
    let Some(path) = path else {
        return Ok(TrialConfig::default());
    };
    let text = read(path)?;
    match serde_json::from_str::<TrialConfig>(&text) {
        Ok(c) => Ok(c),
        Err(trial_err) => match serde_json::from_str::<WorldConfig>(&text) {
            Ok(world) => Ok(TrialConfig {
                world: Some(world),
                ..TrialConfig::default()
            }),
            Err(_) => bail!("{}: not a trial config: {trial_err}", path.display()),
        },
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..=") {
        let (a, b): (u64, u64) = (a.parse()?, b.parse()?);
        return Ok((a..=b).collect());
    }
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.parse()?, b.parse()?);
        return Ok((a..b).collect());
    }
    Ok(vec![s
        .parse()
        .with_context(|| format!("bad seed `{s}`"))?])
}

fn parse_bindings(s: &str) -> Result<BTreeMap<String, PolicySpec>> {
    let mut out = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (who, policy) = part
            .split_once('=')
            .with_context(|| format!("binding `{part}` is not name=policy"))?;
        let spec: PolicySpec = policy.parse().map_err(anyhow::Error::msg)?;
        out.insert(who.trim().to_lowercase(), spec);
    }
    Ok(out)
}

fn run(
    config: Option<PathBuf>,
    seeds: &str,
    belief: bool,
    policy: Option<String>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<()> {
    let mut trial = load_config(config.as_deref())?;
    trial.belief |= belief;
    if let Some(p) = policy {
        trial.policies.extend(parse_bindings(&p)?);
    }
    let seeds = parse_seeds(seeds)?;
    if seeds.is_empty() {
        bail!("empty seed range");
    }
    let batch = run_batch(&trial, &seeds, workers)?;
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        for t in &batch.trials {
            let path = dir.join(format!("{}.jsonl", t.transcript.header.trial_id));
            t.transcript
                .write_jsonl(io::BufWriter::new(fs::File::create(&path)?))
                .with_context(|| format!("writing {}", path.display()))?;
        }
        fs::write(dir.join("rows.jsonl"), batch.rows_jsonl())?;
    }
    print!("{}", batch.summary.table());
    Ok(())
}

fn action_cell(action: &Action, world: &World) -> String {
    match action {
        Action::Wait => "wait".to_string(),
        a => canonical_phrase(a, world.palette()).unwrap_or_else(|| format!("{a:?}")),
    }
}

fn plan(
    config: Option<PathBuf>,
    k: Option<usize>,
    heuristic: Heuristic,
    seed: Option<u64>,
    json: bool,
) -> Result<()> {
    let mut trial = load_config(config.as_deref())?;
    if let Some(s) = seed {
        trial.seed = s;
    }
    let world_config = trial.resolve_world()?;
    let options = PlannerOptions {
        subtask_size: k,
        heuristic: match heuristic {
            Heuristic::Nearest => SortHeuristic::NearestToStart,
            Heuristic::Id => SortHeuristic::ById,
        },
        ..trial.planner
    };
    let world = World::new(world_config.clone())?;
    let report = plan_mission(&world, &options)?;
    let execution = execute_plan(&world_config, &report.plan)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report.plan)?);
        return Ok(());
    }
    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "rounds {}  score {}/{}  subtasks {}  nodes {}  termination {:?}",
        report.plan.rounds,
        report.plan.score,
        world.max_score(),
        report.subtasks,
        report.nodes_generated,
        execution.termination
    )?;
    if !report.plan.skipped.is_empty() {
        let ids: Vec<String> = report.plan.skipped.iter().map(|b| b.to_string()).collect();
        writeln!(stdout, "skipped bombs: {}", ids.join(", "))?;
    }
    for r in 1..=report.plan.rounds {
        let cells: Vec<String> = world_config
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                format!(
                    "{}: {}",
                    a.call_sign,
                    action_cell(&report.plan.action(AgentId(i), r), &world)
                )
            })
            .collect();
        writeln!(stdout, "{r:>3}  {}", cells.join(" | "))?;
    }
    Ok(())
}

fn load_transcript(path: &Path) -> Result<Transcript> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Transcript::read_jsonl(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))
}

fn replay(path: &Path) -> Result<bool> {
    let original = read(path)?;
    let recorded =
        Transcript::from_jsonl(&original).with_context(|| format!("reading {}", path.display()))?;
    let rerun = replay_transcript(&recorded)?;
    let text = rerun.transcript.to_jsonl();
    let m = &rerun.metrics;
    println!(
        "score {}/{}  rounds {}  valid {:.1}%  termination {:?}",
        m.score,
        m.max_score,
        m.rounds,
        m.valid_action_pct(),
        m.termination
    );
    if text == original {
        println!("identical");
        return Ok(true);
    }
    let line = original
        .lines()
        .zip(text.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| original.lines().count().min(text.lines().count()));
    println!("diverges at line {}", line + 1);
    Ok(false)
}

fn tom_score(paths: &[PathBuf], overrides: Option<PathBuf>, rows: bool) -> Result<()> {
    let transcripts = paths
        .iter()
        .map(|p| load_transcript(p))
        .collect::<Result<Vec<_>>>()?;
    let overrides: Overrides = match overrides {
        Some(p) => {
            serde_json::from_str(&read(&p)?).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Overrides::new(),
    };
    let table = tom_report(&transcripts, &overrides);
    let mut out = io::stdout().lock();
    if rows {
        for r in &table.rows {
            writeln!(out, "{}", serde_json::to_string(r)?)?;
        }
    }
    write!(out, "{}", table.table())?;
    Ok(())
}

fn gen(spec: Option<PathBuf>, seed: u64, standard: bool) -> Result<()> {
    if standard {
        println!(
            "{}",
            serde_json::to_string_pretty(&WorldConfig::standard_map())?
        );
        return Ok(());
    }
    let spec: RandomizationSpec = match spec {
        Some(p) => {
            serde_json::from_str(&read(&p)?).with_context(|| format!("parsing {}", p.display()))?
        }
        None => RandomizationSpec::default(),
    };
    let world = generate_instance(&spec, seed)?;
    println!("{}", serde_json::to_string_pretty(&world)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seeds,
            belief,
            policy,
            out,
            workers,
        } => run(config, &seeds, belief, policy, out, workers),
        Command::Plan {
            config,
            k,
            heuristic,
            seed,
            json,
        } => plan(config, k, heuristic, seed, json),
        Command::Replay { transcript } => match replay(&transcript) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
        Command::TomScore {
            transcripts,
            overrides,
            rows,
        } => tom_score(&transcripts, overrides, rows),
        Command::Gen {
            spec,
            seed,
            standard,
        } => gen(spec, seed, standard),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
