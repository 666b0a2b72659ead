//! Mode dispatch and run artifacts.
//!
//! Every run writes into its output directory:
//!
//! * `manifest.txt`: mode, seeds, the resolved configuration and a
//!   `status` line (`running` until the run finishes, then `complete`, or
//!   `failed: <reason>`).
//! * `metrics.csv`: one row per episode, columns [`METRICS_HEADER`];
//!   `oracle-check` writes [`ORACLE_HEADER`] rows instead.
//! * `curves.csv` (training modes): one row per evaluation point and
//!   evaluator, columns [`CURVES_HEADER`].
//! * `checkpoints/step-N.ckpt` (training modes): N counts inserted tuples
//!   (closed loop) or epochs (open loop).
//! * `dataset.txt` (`train-open-ssl` without a given dataset).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use guidedplan_core::env::Environment;
use guidedplan_core::oracle::{exhaustive_despot_value, TigerEnv, TigerModel};
use guidedplan_core::scenarios::{derive_seed, unit_f64};
use guidedplan_core::{
    run_search_with_scenarios, sample_scenarios, Belief, DomainModel, FactoredValue, FixedProvider, HeuristicProvider,
    UniformProvider, ValuePrior,
};
use guidedplan_driving::{DrivingEnv, DrivingModel, LaneGraph};
use guidedplan_learn::{
    closed_loop, collect_dataset, evaluate_planner, evaluate_policy, load_dataset, open_ssl_pipeline, save_dataset,
    ActorMode, EpisodeMetrics, EvalSummary, Learner, RlLearner, SslLearner,
};
use guidedplan_nn::{network_provider, ApproximatorParams, Checkpoint};

use crate::config::{Domain, RunConfig};

pub const METRICS_HEADER: &str = "episode,evaluator,cumulative_reward,near_miss_rate,average_speed,length,collision,mean_tree_nodes,mean_tree_depth,mean_trials,partial";
pub const CURVES_HEADER: &str = "point,tuples,evaluator,episodes,reward_mean,reward_stderr,near_miss_rate,average_speed,collision_rate";
pub const ORACLE_HEADER: &str = "scenarios,depth,prior,seed,search_action,oracle_action,search_value,oracle_value,abs_error,agree";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Plan,
    TrainSsl,
    TrainRl,
    TrainOpenSsl,
    Eval,
    OracleCheck,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Plan => "plan",
            Mode::TrainSsl => "train-ssl",
            Mode::TrainRl => "train-rl",
            Mode::TrainOpenSsl => "train-open-ssl",
            Mode::Eval => "eval",
            Mode::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: Mode,
    pub config: RunConfig,
    pub out: PathBuf,
    pub single_thread: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    /// Final evaluations by evaluator name.
    pub summaries: Vec<(String, EvalSummary)>,
    /// Oracle agreement, for `oracle-check`.
    pub oracle_passed: Option<bool>,
    pub tuples: u64,
}

impl RunReport {
    pub fn summary(&self, evaluator: &str) -> Option<&EvalSummary> {
        self.summaries.iter().find(|(n, _)| n == evaluator).map(|(_, s)| s)
    }
}

pub fn metrics_row(evaluator: &str, m: &EpisodeMetrics) -> String {
    format!(
        "{},{},{:.6},{:.6},{:.6},{},{},{:.3},{:.3},{:.3},{}",
        m.episode,
        evaluator,
        m.cumulative_reward,
        m.near_miss_rate(),
        m.average_speed(),
        m.steps,
        u8::from(m.collision),
        m.mean_tree_nodes(),
        m.mean_tree_depth(),
        m.mean_trials(),
        u8::from(m.partial)
    )
}

fn curves_row(point: u64, tuples: u64, evaluator: &str, s: &EvalSummary) -> String {
    format!(
        "{point},{tuples},{evaluator},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
        s.episodes, s.reward.mean, s.reward.stderr, s.near_miss_rate.mean, s.average_speed.mean, s.collision_rate
    )
}

struct Artifacts {
    dir: PathBuf,
    manifest: String,
}

impl Artifacts {
    fn create(opts: &RunOptions) -> Result<Self> {
        fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
        let c = &opts.config;
        let mut manifest = String::new();
        writeln!(manifest, "mode = {}", opts.mode.name())?;
        writeln!(manifest, "single_thread = {}", opts.single_thread)?;
        writeln!(manifest, "version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(manifest, "seed.master = {}", c.seed)?;
        writeln!(manifest, "seed.eval_first = {}", c.eval_seed)?;
        for (k, v) in c.entries() {
            writeln!(manifest, "config.{k} = {v}")?;
        }
        let a = Self {
            dir: opts.out.clone(),
            manifest,
        };
        a.status("running")?;
        Ok(a)
    }

    fn status(&self, status: &str) -> Result<()> {
        let text = format!("{}status = {status}\n", self.manifest);
        fs::write(self.dir.join("manifest.txt"), text)?;
        Ok(())
    }

    fn write(&self, name: &str, header: &str, rows: &[String]) -> Result<()> {
        let mut text = String::with_capacity(rows.len() * 64);
        text.push_str(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    fn checkpoint(&self, step: u64, ck: &Checkpoint) -> Result<PathBuf> {
        let dir = self.dir.join("checkpoints");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("step-{step}.ckpt"));
        ck.save(&path)?;
        Ok(path)
    }
}

/// Validates, then runs the mode. Nothing is written if validation fails.
pub fn run(opts: &RunOptions) -> Result<RunReport> {
    opts.config.validate()?;
    if opts.mode == Mode::Eval && opts.config.checkpoint.is_none() {
        bail!("eval needs `checkpoint`");
    }
    let checkpoint = match &opts.config.checkpoint {
        Some(p) => Some(Checkpoint::load(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let dataset = match (&opts.config.dataset, opts.mode) {
        (Some(p), Mode::TrainOpenSsl) => Some(load_dataset(p).with_context(|| format!("loading {}", p.display()))?),
        _ => None,
    };
    let driving = match (opts.config.domain, opts.mode) {
        (_, Mode::OracleCheck) | (Domain::Tiger, _) => None,
        (Domain::Driving, _) => Some(driving_model(&opts.config)?),
    };
    let artifacts = Artifacts::create(opts)?;
    let ctx = Ctx {
        opts,
        artifacts: &artifacts,
        checkpoint,
        dataset,
    };
    let result = match (opts.mode, driving) {
        (Mode::OracleCheck, _) => oracle_check_mode(&ctx),
        (_, Some(model)) => {
            let (max_steps, particles) = (opts.config.max_steps, opts.config.particles);
            ctx.dispatch(move |_| DrivingEnv::new(model.clone(), max_steps, particles))
        }
        (_, None) => {
            let gamma = opts.config.search.discount.gamma;
            ctx.dispatch(move |_| TigerEnv::new(TigerModel { gamma, ..TigerModel::default() }))
        }
    };
    match &result {
        Ok(_) => artifacts.status("complete")?,
        Err(e) => artifacts.status(&format!("failed: {e:#}"))?,
    }
    result
}

fn driving_model(c: &RunConfig) -> Result<DrivingModel> {
    let map = match &c.map {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            LaneGraph::parse(&text).with_context(|| format!("map {}", p.display()))?
        }
        None => LaneGraph::default_intersection(),
    };
    Ok(DrivingModel::new(map, c.driving.clone()))
}

struct Ctx<'a> {
    opts: &'a RunOptions,
    artifacts: &'a Artifacts,
    checkpoint: Option<Checkpoint>,
    dataset: Option<Vec<guidedplan_learn::ExperienceTuple>>,
}

/// Evaluation episode seeds shared by every evaluator, so guided and
/// unguided planners face the same scenes.
pub fn eval_seeds(config: &RunConfig, episodes: usize) -> Vec<u64> {
    (0..episodes as u64).map(|i| config.eval_seed + i).collect()
}

impl Ctx<'_> {
    fn config(&self) -> &RunConfig {
        &self.opts.config
    }

    fn dispatch<E, F>(&self, make_env: F) -> Result<RunReport>
    where
        E: Environment,
        F: Fn(usize) -> E + Sync + Send,
    {
        let probe = make_env(0);
        let model = probe.model();
        let (input, actions) = (model.feature_len(), model.action_count());
        if let Some(ck) = &self.checkpoint {
            if ck.params.input_len() != input || ck.params.action_count() != actions {
                bail!(
                    "checkpoint expects {} features and {} actions, domain has {input} and {actions}",
                    ck.params.input_len(),
                    ck.params.action_count()
                );
            }
        }
        drop(probe);
        match self.opts.mode {
            Mode::Plan => self.plan(&make_env, actions),
            Mode::Eval => self.eval(&make_env),
            Mode::TrainSsl => {
                let c = self.config();
                let params = ApproximatorParams::new(input, actions, &c.net, c.seed);
                let mut learner = SslLearner::new(params, c.learner_config(c.budget * c.updates_per_tuple as u64));
                self.closed(&make_env, &mut learner, &[ActorMode::Exploit])
            }
            Mode::TrainRl => {
                let c = self.config();
                let mut learner = RlLearner::with_networks(
                    input,
                    actions,
                    &c.net,
                    c.learner_config(c.budget * c.updates_per_tuple as u64),
                );
                let modes = [ActorMode::Exploit, ActorMode::Explore { temperature: 1.0 }, ActorMode::OnPolicy];
                self.closed(&make_env, &mut learner, &modes)
            }
            Mode::TrainOpenSsl => self.open_ssl(&make_env, input, actions),
            Mode::OracleCheck => unreachable!("dispatched separately"),
        }
    }

    fn evaluate_both<E, F>(&self, make_env: &F, params: &ApproximatorParams, episodes: usize) -> [(String, Vec<EpisodeMetrics>); 2]
    where
        E: Environment,
        F: Fn(usize) -> E + Sync,
    {
        let provider = network_provider(params.clone());
        let seeds = eval_seeds(self.config(), episodes);
        let actor = self.config().actor();
        [
            ("guided".to_string(), evaluate_planner(make_env, &actor, &provider, &seeds)),
            ("policy".to_string(), evaluate_policy(make_env, &actor, &provider, &seeds)),
        ]
    }

    fn plan<E, F>(&self, make_env: &F, actions: usize) -> Result<RunReport>
    where
        E: Environment,
        F: Fn(usize) -> E + Sync,
    {
        let (name, provider): (&str, Arc<dyn HeuristicProvider>) = match &self.checkpoint {
            Some(ck) => ("guided", Arc::new(network_provider(ck.params.clone()))),
            None => ("unguided", Arc::new(UniformProvider::new(actions))),
        };
        let seeds = eval_seeds(self.config(), self.config().episodes);
        let eps = evaluate_planner(make_env, &self.config().actor(), &provider, &seeds);
        let rows: Vec<String> = eps.iter().map(|m| metrics_row(name, m)).collect();
        self.artifacts.write("metrics.csv", METRICS_HEADER, &rows)?;
        Ok(RunReport {
            summaries: vec![(name.to_string(), EvalSummary::from_episodes(&eps))],
            ..Default::default()
        })
    }

    fn eval<E, F>(&self, make_env: &F) -> Result<RunReport>
    where
        E: Environment,
        F: Fn(usize) -> E + Sync,
    {
        let ck = self.checkpoint.as_ref().expect("checked in run");
        let results = self.evaluate_both(make_env, &ck.params, self.config().episodes);
        let mut rows = Vec::new();
        let mut report = RunReport::default();
        for (name, eps) in &results {
            rows.extend(eps.iter().map(|m| metrics_row(name, m)));
            report.summaries.push((name.clone(), EvalSummary::from_episodes(eps)));
        }
        self.artifacts.write("metrics.csv", METRICS_HEADER, &rows)?;
        Ok(report)
    }

    fn closed<E, F, L>(&self, make_env: &F, learner: &mut L, default_modes: &[ActorMode]) -> Result<RunReport>
    where
        E: Environment,
        F: Fn(usize) -> E + Sync + Send,
        L: Learner,
    {
        let c = self.config();
        let loop_cfg = c.loop_config(c.modes_or(default_modes), self.opts.single_thread);
        let mut curves = Vec::new();
        let mut point = 0u64;
        let mut hook = |tuples: u64, params: &ApproximatorParams| -> guidedplan_learn::Result<()> {
            self.evaluation_point(make_env, point, tuples, params, &mut curves)
                .map_err(|e| guidedplan_learn::LearnError::InvalidConfig(format!("{e:#}")))?;
            point += 1;
            Ok(())
        };
        let out = closed_loop(make_env, &c.actor(), learner, &loop_cfg, &mut hook)?;
        self.artifacts.write("curves.csv", CURVES_HEADER, &curves)?;
        self.artifacts.checkpoint(out.inserted, &learner.checkpoint())?;
        let mut rows: Vec<String> = out.episodes.iter().map(|m| metrics_row("train", m)).collect();
        let mut report = RunReport {
            tuples: out.inserted,
            ..Default::default()
        };
        for (name, eps) in self.evaluate_both(make_env, &learner.snapshot(), c.eval_episodes) {
            rows.extend(eps.iter().map(|m| metrics_row(&name, m)));
            report.summaries.push((name, EvalSummary::from_episodes(&eps)));
        }
        self.artifacts.write("metrics.csv", METRICS_HEADER, &rows)?;
        Ok(report)
    }

    fn evaluation_point<E, F>(
        &self,
        make_env: &F,
        point: u64,
        tuples: u64,
        params: &ApproximatorParams,
        curves: &mut Vec<String>,
    ) -> Result<()>
    where
        E: Environment,
        F: Fn(usize) -> E + Sync,
    {
        let c = self.config();
        if c.eval_episodes > 0 {
            for (name, eps) in self.evaluate_both(make_env, params, c.eval_episodes) {
                curves.push(curves_row(point, tuples, &name, &EvalSummary::from_episodes(&eps)));
            }
        }
        let ck = Checkpoint {
            step: tuples,
            params: params.clone(),
            q: None,
            alpha: None,
        };
        self.artifacts.checkpoint(tuples, &ck)?;
        Ok(())
    }

    fn open_ssl<E, F>(&self, make_env: &F, input: usize, actions: usize) -> Result<RunReport>
    where
        E: Environment,
        F: Fn(usize) -> E + Sync,
    {
        let c = self.config();
        let (data, mut rows) = match &self.dataset {
            Some(d) => (d.clone(), Vec::new()),
            None => {
                let mut env = make_env(0);
                let (tuples, eps) = collect_dataset(&mut env, &c.actor(), &UniformProvider::new(actions), c.budget, c.seed);
                save_dataset(&self.artifacts.dir.join("dataset.txt"), &tuples)?;
                (tuples, eps.iter().map(|m| metrics_row("collect", m)).collect::<Vec<_>>())
            }
        };
        if let Some(t) = data.iter().find(|t| t.x.len() != input || t.planner_action >= actions) {
            bail!("dataset tuple (episode {}, step {}) does not match the domain", t.episode, t.step);
        }
        let updates = (data.len().div_ceil(c.learner.batch_size) * c.epochs) as u64;
        let mut learner = SslLearner::new(ApproximatorParams::new(input, actions, &c.net, c.seed), c.learner_config(updates));
        let mut curves = Vec::new();
        open_ssl_pipeline(&mut learner, &data, c.epochs, &mut |epoch, params| {
            self.evaluation_point(make_env, epoch as u64, data.len() as u64, params, &mut curves)
                .map_err(|e| guidedplan_learn::LearnError::InvalidConfig(format!("{e:#}")))
        })?;
        self.artifacts.write("curves.csv", CURVES_HEADER, &curves)?;
        self.artifacts.checkpoint(c.epochs as u64, &learner.checkpoint())?;
        let mut report = RunReport {
            tuples: data.len() as u64,
            ..Default::default()
        };
        for (name, eps) in self.evaluate_both(make_env, learner.params(), c.eval_episodes) {
            rows.extend(eps.iter().map(|m| metrics_row(&name, m)));
            report.summaries.push((name, EvalSummary::from_episodes(&eps)));
        }
        self.artifacts.write("metrics.csv", METRICS_HEADER, &rows)?;
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub scenarios: usize,
    pub depth: usize,
    pub weighted_prior: bool,
    pub seed: u64,
    pub search_action: usize,
    pub oracle_action: usize,
    pub search_value: f64,
    pub oracle_value: f64,
}

impl OracleRow {
    pub fn error(&self) -> f64 {
        (self.search_value - self.oracle_value).abs()
    }

    pub fn agrees(&self) -> bool {
        self.search_action == self.oracle_action && self.error() <= 1e-9
    }
}

/// Unbounded searches on Tiger against the exhaustive tree value, for
/// K in {5, 20} and D in {2, 3}, with a uniform and a random policy prior.
pub fn oracle_check(seeds: u64, master_seed: u64) -> Result<Vec<OracleRow>> {
    let model = TigerModel::default();
    let belief = Belief::uniform(vec![0u8, 1])?;
    let mut rows = Vec::new();
    for k in [5usize, 20] {
        for depth in [2usize, 3] {
            let mut cfg = RunConfig::default().search;
            cfg.scenario_count = k;
            cfg.discount.search_depth = depth;
            cfg.discount.max_horizon = depth + 4;
            cfg.max_trials = None;
            cfg.time_budget = None;
            for s in 0..seeds {
                let seed = derive_seed(master_seed, s);
                let scenarios = sample_scenarios(&belief, k, seed)?;
                let oracle = exhaustive_despot_value(&scenarios, &model, &cfg.discount)?;
                let raw: Vec<f64> = (0..3).map(|i| unit_f64(derive_seed(seed, 100 + i)) + 0.01).collect();
                let total: f64 = raw.iter().sum();
                let weighted = FixedProvider {
                    policy: raw.iter().map(|r| r / total).collect(),
                    value: ValuePrior::Value(FactoredValue::new(-3.0, -20.0)),
                };
                for weighted_prior in [false, true] {
                    let res = if weighted_prior {
                        run_search_with_scenarios(&scenarios, &[], &cfg, &weighted, &model)?
                    } else {
                        run_search_with_scenarios(&scenarios, &[], &cfg, &UniformProvider::new(3), &model)?
                    };
                    rows.push(OracleRow {
                        scenarios: k,
                        depth,
                        weighted_prior,
                        seed,
                        search_action: res.action,
                        oracle_action: oracle.action,
                        search_value: res.value.total,
                        oracle_value: oracle.value,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn oracle_check_mode(ctx: &Ctx<'_>) -> Result<RunReport> {
    let c = ctx.config();
    let rows = oracle_check(c.oracle_seeds, c.seed)?;
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{:?},{:?},{:e},{}",
                r.scenarios,
                r.depth,
                if r.weighted_prior { "random" } else { "uniform" },
                r.seed,
                r.search_action,
                r.oracle_action,
                r.search_value,
                r.oracle_value,
                r.error(),
                u8::from(r.agrees())
            )
        })
        .collect();
    ctx.artifacts.write("metrics.csv", ORACLE_HEADER, &lines)?;
    Ok(RunReport {
        oracle_passed: Some(rows.iter().all(OracleRow::agrees)),
        ..Default::default()
    })
}

/// Reads `--config` if given, then applies overrides, seed and nothing else.
pub fn load_config(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    if let Some(p) = path {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        c.apply_text(&text, &p.display().to_string())?;
    }
    c.apply_overrides(overrides)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    Ok(c)
}
