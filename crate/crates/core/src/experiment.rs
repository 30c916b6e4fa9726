//! Experiment orchestration: configuration, multi-agent runs, ranking,
//! evaluation and result files.
//!
//! Files written to the output directory:
//!
//! | file | contents |
//! |------|----------|
//! | `resolved_config.json` | every effective setting |
//! | `agent_<i>_train.csv` | `episode,return,avg_return_W,loss,epsilon,phase` |
//! | `agent_<i>_alpha.csv` | `episode,placeholder,op_index,op_name,probability` |
//! | `arch_rank_<r>.json` | ranked architecture with angles and weights |
//! | `eval_<r>.csv` | `episode,return,noisy` |
//! | `summary.json` | per-agent solve points and evaluation means |
//!
//! Agents are numbered from 0 (agent `i` uses seed `seed + i`), ranks from 1.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::envs::{Env, EnvKind};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::supernet::{ArchitectureRecord, PoolName};
use crate::trainer::{self, AgentResult, EvalReport, RankedArchitecture, TrainConfig};

pub const TRAIN_CSV_HEADER: &str = "episode,return,avg_return_W,loss,epsilon,phase";
pub const ALPHA_CSV_HEADER: &str = "episode,placeholder,op_index,op_name,probability";
pub const EVAL_CSV_HEADER: &str = "episode,return,noisy";

/// Seed offset separating evaluation randomness from training randomness.
const EVAL_SEED_OFFSET: u64 = 0x5EED_0000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub agents: usize,
    pub top_k: usize,
    pub eval_episodes: usize,
    pub noise: Option<NoiseSpec>,
    pub output_dir: PathBuf,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            agents: 5,
            top_k: 3,
            eval_episodes: 100,
            noise: None,
            output_dir: PathBuf::from("runs/latest"),
            jobs: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.agents == 0 {
            return Err(Error::Config("agents must be >= 1".into()));
        }
        if self.top_k == 0 || self.top_k > self.agents {
            return Err(Error::Config(format!(
                "top_k = {} must lie in 1..={} (agents)",
                self.top_k, self.agents
            )));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be >= 1".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        if let Some(n) = &self.noise {
            n.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Same configuration with environment-dependent defaults filled in.
    pub fn resolved(&self) -> Self {
        Self {
            train: self.train.resolved(),
            ..self.clone()
        }
    }

    fn known_keys() -> BTreeSet<String> {
        match serde_json::to_value(Self::default().resolved()) {
            Ok(Value::Object(map)) => map.keys().cloned().collect(),
            _ => BTreeSet::new(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub env: Option<EnvKind>,
    pub pool: Option<PoolName>,
    pub agents: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    /// `(p1, p2)`; trajectories keep their configured or default value.
    pub noise: Option<(f64, f64)>,
    pub output_dir: Option<PathBuf>,
}

/// Parses a JSON config. Precedence: overrides, then file, then defaults.
pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<ExperimentConfig> {
    let value: Value = if text.trim().is_empty() {
        Value::Object(Default::default())
    } else {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?
    };
    let Value::Object(map) = &value else {
        return Err(Error::Config("config must be a JSON object".into()));
    };
    let known = ExperimentConfig::known_keys();
    if let Some(key) = map.keys().find(|k| !known.contains(*k)) {
        return Err(Error::Config(format!("unknown key `{key}`")));
    }
    let mut cfg: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| Error::Config(e.to_string()))?;
    apply_overrides(&mut cfg, overrides);
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file; `None` means defaults plus overrides.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) {
    if let Some(env) = o.env {
        cfg.train.env = env;
    }
    if let Some(pool) = o.pool {
        cfg.train.pool = pool;
    }
    if let Some(a) = o.agents {
        cfg.agents = a;
        cfg.top_k = cfg.top_k.min(a);
    }
    if let Some(s) = o.seed {
        cfg.train.seed = s;
    }
    if let Some(j) = o.jobs {
        cfg.jobs = j;
    }
    if let Some((p1, p2)) = o.noise {
        let base = cfg.noise.unwrap_or_default();
        cfg.noise = Some(NoiseSpec { p1, p2, ..base });
    }
    if let Some(d) = &o.output_dir {
        cfg.output_dir.clone_from(d);
    }
}

/// Which architecture each agent trains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Full architecture search on the configured pool.
    Search,
    /// The fixed ry / rz / cz baseline circuit.
    Baseline,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankEvaluation {
    pub rank: usize,
    pub agent: usize,
    pub noiseless: EvalReport,
    pub noisy: Option<EvalReport>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub results: Vec<AgentResult>,
    pub ranked: Vec<RankedArchitecture>,
    pub evaluations: Vec<RankEvaluation>,
}

fn train_one(cfg: &ExperimentConfig, mode: Mode, agent: usize) -> Result<AgentResult> {
    let seed = cfg.train.seed + agent as u64;
    let tc = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut res = match mode {
        Mode::Search => trainer::train_agent(&tc, &mut rng)?,
        Mode::Baseline => trainer::train_baseline(&tc, &mut rng)?,
    };
    res.seed = seed;
    Ok(res)
}

/// Trains every agent, at most `cfg.jobs` at a time; results keep agent order.
pub fn train_agents(cfg: &ExperimentConfig, mode: Mode) -> Result<Vec<AgentResult>> {
    let ids: Vec<usize> = (0..cfg.agents).collect();
    let mut results = Vec::with_capacity(cfg.agents);
    for chunk in ids.chunks(cfg.jobs.max(1)) {
        let out: Vec<Result<AgentResult>> = if chunk.len() == 1 {
            vec![train_one(cfg, mode, chunk[0])]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&i| s.spawn(move || train_one(cfg, mode, i)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("agent thread panicked"))
                    .collect()
            })
        };
        for r in out {
            results.push(r?);
        }
    }
    Ok(results)
}

/// Greedy evaluation of ranked architectures, noiseless and (if configured)
/// under depolarizing noise.
pub fn evaluate_ranked(
    cfg: &ExperimentConfig,
    ranked: &[RankedArchitecture],
) -> Result<Vec<RankEvaluation>> {
    let env = Env {
        kind: cfg.train.env,
        slippery: cfg.train.slippery,
    };
    ranked
        .iter()
        .enumerate()
        .map(|(r, ra)| {
            let seed = cfg.train.seed + EVAL_SEED_OFFSET + r as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noiseless = trainer::evaluate_record(&ra.record, env, cfg.eval_episodes, None, &mut rng)?;
            let noisy = match &cfg.noise {
                Some(spec) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    Some(trainer::evaluate_record(
                        &ra.record,
                        env,
                        cfg.eval_episodes,
                        Some(spec),
                        &mut rng,
                    )?)
                }
                None => None,
            };
            Ok(RankEvaluation {
                rank: r + 1,
                agent: ra.agent,
                noiseless,
                noisy,
            })
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Creates the output directory and records the effective configuration.
pub fn write_resolved_config(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let text = serde_json::to_string_pretty(&cfg.resolved())?;
    write_file(&cfg.output_dir.join("resolved_config.json"), &(text + "\n"))
}

/// Runs training, ranking and evaluation, then writes every artifact.
pub fn run_experiment(cfg: &ExperimentConfig, mode: Mode) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    write_resolved_config(cfg)?;
    let results = train_agents(cfg, mode)?;
    let ranked = trainer::rank_agents(&results, cfg.top_k)?;
    let evaluations = evaluate_ranked(cfg, &ranked)?;
    write_outputs(&results, &ranked, &evaluations, &cfg.output_dir)?;
    Ok(ExperimentOutcome {
        results,
        ranked,
        evaluations,
    })
}

fn csv_string<I>(header: &str, rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.split(','))?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

pub fn train_csv(result: &AgentResult) -> Result<String> {
    csv_string(
        TRAIN_CSV_HEADER,
        result.episodes.iter().map(|e| {
            vec![
                e.episode.to_string(),
                e.ret.to_string(),
                e.avg_return.to_string(),
                e.loss.map(|l| l.to_string()).unwrap_or_default(),
                e.epsilon.to_string(),
                e.phase.to_string(),
            ]
        }),
    )
}

/// Operation names contain commas and are therefore quoted.
pub fn alpha_csv(result: &AgentResult) -> Result<String> {
    let ops = result.supercircuit.pool().ops();
    let rows = result.alpha_trace.iter().flat_map(|snap| {
        snap.probs.iter().enumerate().flat_map(move |(i, row)| {
            row.iter().enumerate().map(move |(j, p)| {
                vec![
                    snap.episode.to_string(),
                    i.to_string(),
                    j.to_string(),
                    ops[j].to_string(),
                    p.to_string(),
                ]
            })
        })
    });
    csv_string(ALPHA_CSV_HEADER, rows)
}

pub fn eval_csv(ev: &RankEvaluation) -> Result<String> {
    let runs = std::iter::once((0, &ev.noiseless)).chain(ev.noisy.as_ref().map(|r| (1, r)));
    let rows = runs.flat_map(|(flag, report)| {
        report
            .returns
            .iter()
            .enumerate()
            .map(move |(k, r)| vec![(k + 1).to_string(), r.to_string(), flag.to_string()])
    });
    csv_string(EVAL_CSV_HEADER, rows)
}

#[derive(Serialize)]
struct AgentSummary {
    agent: usize,
    seed: u64,
    episodes_run: usize,
    episodes_to_solve: Option<usize>,
    final_avg_return: f64,
    architecture: Vec<String>,
}

#[derive(Serialize)]
struct RankSummary {
    rank: usize,
    agent: usize,
    eval_mean: f64,
    noisy_eval_mean: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    agents: Vec<AgentSummary>,
    ranking: Vec<RankSummary>,
}

/// Writes the per-agent, per-rank and summary files into `output_dir`.
pub fn write_outputs(
    results: &[AgentResult],
    ranked: &[RankedArchitecture],
    evaluations: &[RankEvaluation],
    output_dir: &Path,
) -> Result<()> {
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    for (i, r) in results.iter().enumerate() {
        write_file(&output_dir.join(format!("agent_{i}_train.csv")), &train_csv(r)?)?;
        write_file(&output_dir.join(format!("agent_{i}_alpha.csv")), &alpha_csv(r)?)?;
    }
    for (r, ra) in ranked.iter().enumerate() {
        let json = ra.record.to_json()? + "\n";
        write_file(&output_dir.join(format!("arch_rank_{}.json", r + 1)), &json)?;
    }
    for ev in evaluations {
        write_file(&output_dir.join(format!("eval_{}.csv", ev.rank)), &eval_csv(ev)?)?;
    }
    let summary = Summary {
        agents: results
            .iter()
            .enumerate()
            .map(|(i, r)| AgentSummary {
                agent: i,
                seed: r.seed,
                episodes_run: r.episodes.len(),
                episodes_to_solve: r.episodes_to_solve,
                final_avg_return: r.final_avg_return(),
                architecture: r
                    .architecture
                    .choices
                    .iter()
                    .map(|&c| r.supercircuit.pool().ops()[c].to_string())
                    .collect(),
            })
            .collect(),
        ranking: evaluations
            .iter()
            .map(|ev| RankSummary {
                rank: ev.rank,
                agent: ev.agent,
                eval_mean: ev.noiseless.mean_return,
                noisy_eval_mean: ev.noisy.as_ref().map(|r| r.mean_return),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    write_file(&output_dir.join("summary.json"), &text)
}

/// Loads a serialized architecture and evaluates it.
pub fn evaluate_arch_file(
    path: &Path,
    env: Env,
    episodes: usize,
    noise: Option<&NoiseSpec>,
    seed: u64,
) -> Result<EvalReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let record = ArchitectureRecord::from_json(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some(kind) = record.env {
        if kind != env.kind {
            return Err(Error::Config(format!(
                "{} was trained on {kind}, not {}",
                path.display(),
                env.kind
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    trainer::evaluate_record(&record, env, episodes, noise, &mut rng)
}
