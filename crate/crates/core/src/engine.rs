//! Parameter-server training loop for ByzSGDm and ByzSGDnm.
//!
//! Each round every honest worker draws a minibatch at the broadcast model,
//! updates its local momentum (`u₀ = g₀`, `u_t = β u_{t-1} + (1-β) g_t`) and
//! submits it. Byzantine slots are overwritten by the attack, the server
//! aggregates and takes either a plain step (`w ← w - η·Agg`) or a normalized
//! one (`w ← w - η·Agg/‖Agg‖`).
//!
//! Random draws are keyed by `(seed, worker, round)`, so a run is a pure
//! function of its config.

use serde::{Deserialize, Serialize};

use crate::aggregators::{AggregationOutcome, AggregatorConfig, AggregatorKind};
use crate::attacks::{self, AttackKind, AttackSpec};
use crate::error::{Error, Result};
use crate::tasks::{Task, TaskSpec};
use crate::vecmath::{self, ParamVector, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Byzsgdm,
    Byzsgdnm,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Byzsgdm => "byzsgdm",
            Algorithm::Byzsgdnm => "byzsgdnm",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Schedule {
    Constant { lr: f64 },
    Cosine { lr0: f64 },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Cosine { lr0: 0.1 }
    }
}

impl Schedule {
    pub fn initial_lr(&self) -> f64 {
        match *self {
            Schedule::Constant { lr } => lr,
            Schedule::Cosine { lr0 } => lr0,
        }
    }

    pub fn with_initial_lr(self, lr: f64) -> Self {
        match self {
            Schedule::Constant { .. } => Schedule::Constant { lr },
            Schedule::Cosine { .. } => Schedule::Cosine { lr0: lr },
        }
    }

    /// Learning rate for epoch `p` of `total`.
    pub fn lr(&self, p: usize, total: usize) -> Result<f64> {
        match *self {
            Schedule::Constant { lr } => Ok(lr),
            Schedule::Cosine { lr0 } => cosine_lr(lr0, p, total),
        }
    }
}

/// `η_p = (η₀/2)(1 + cos(pπ/P))`.
pub fn cosine_lr(lr0: f64, p: usize, total: usize) -> Result<f64> {
    if p >= total {
        return Err(Error::invalid(format!("epoch {p} outside schedule of {total} epochs")));
    }
    Ok(0.5 * lr0 * (1.0 + (p as f64 * std::f64::consts::PI / total as f64).cos()))
}

fn default_aggregator() -> AggregatorConfig {
    AggregatorConfig::new(AggregatorKind::Cc)
}
fn default_beta() -> f64 {
    0.9
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskSpec,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default = "default_aggregator")]
    pub aggregator: AggregatorConfig,
    #[serde(default)]
    pub attack: AttackSpec,
    pub m: usize,
    #[serde(default)]
    pub delta: f64,
    #[serde(alias = "B")]
    pub batch_size: usize,
    /// Round budget `T`. Either this or `epochs` must be set.
    #[serde(default, alias = "T", skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Passes over the training set; dataset tasks only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be >= 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Config("delta must be >= 0".into()));
        }
        if self.delta >= 0.5 {
            return Err(Error::Config("delta must be < 0.5".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config("beta must be in [0, 1)".into()));
        }
        match (self.iterations, self.epochs) {
            (Some(_), Some(_)) => return Err(Error::Config("set only one of iterations and epochs".into())),
            (None, None) => return Err(Error::Config("one of iterations or epochs is required".into())),
            (Some(0), _) | (_, Some(0)) => return Err(Error::Config("iterations/epochs must be >= 1".into())),
            (None, Some(_)) if matches!(self.task, TaskSpec::Quadratic(_)) => {
                return Err(Error::Config("quadratic task needs iterations, not epochs".into()))
            }
            _ => {}
        }
        if !(self.schedule.initial_lr() >= 0.0) {
            return Err(Error::Config("schedule learning rate must be >= 0".into()));
        }
        self.aggregator.validate(self.m)?;
        let byz = self.byzantine_count()?;
        if self.aggregator.kind == AggregatorKind::Krum {
            let f = self.aggregator.krum_f_for(self.m, self.delta);
            if f + 3 > self.m {
                return Err(Error::Config(format!("krum needs m >= f + 3 (m = {}, f = {f})", self.m)));
            }
        }
        if byz >= self.m {
            return Err(Error::Config("no honest workers".into()));
        }
        Ok(())
    }

    /// Workers that actually misbehave: `⌊δm⌋`, or zero with no attack.
    pub fn byzantine_count(&self) -> Result<usize> {
        if self.attack.kind == AttackKind::None {
            return Ok(0);
        }
        attacks::byzantine_count(self.m, self.delta)
    }

    /// Rounds per epoch: `⌈n / (B m)⌉` for dataset tasks, 1 otherwise.
    pub fn rounds_per_epoch(&self, task: &Task) -> usize {
        match task.dataset_len() {
            Some(n) => n.div_ceil(self.batch_size * self.m).max(1),
            None => 1,
        }
    }

    pub fn total_rounds(&self, task: &Task) -> usize {
        match (self.iterations, self.epochs) {
            (Some(t), _) => t,
            (None, Some(e)) => e * self.rounds_per_epoch(task),
            (None, None) => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Honest,
    Byzantine,
}

#[derive(Debug, Clone)]
pub struct WorkerState {
    pub id: usize,
    pub role: Role,
    pub momentum: Option<ParamVector>,
    seed: u64,
}

impl WorkerState {
    pub fn new(id: usize, role: Role, seed: u64) -> Self {
        Self { id, role, momentum: None, seed }
    }

    /// The stream this worker uses in round `t`.
    pub fn stream(&self, t: usize) -> RngStream {
        RngStream::new(self.seed, self.id as u64, t as u64)
    }
}

/// Computes this worker's minibatch gradient at `w`, folds it into the local
/// momentum and returns the new momentum.
pub fn worker_round(state: &mut WorkerState, task: &Task, w: &ParamVector, batch: usize, beta: f64, t: usize) -> Result<ParamVector> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::invalid("beta must be in [0, 1)"));
    }
    let g = task.stochastic_gradient(w, batch, &mut state.stream(t))?;
    let u = momentum_update(state.momentum.as_ref(), &g, beta, t)?;
    state.momentum = Some(u.clone());
    Ok(u)
}

/// `u_t = g_t` at `t = 0` (or with no history), else `β u_{t-1} + (1-β) g_t`.
pub fn momentum_update(prev: Option<&ParamVector>, g: &ParamVector, beta: f64, t: usize) -> Result<ParamVector> {
    match prev {
        Some(u) if t > 0 => u.lerp_weights(beta, g, 1.0 - beta),
        _ => Ok(g.clone()),
    }
}

/// `w - η·u` for an already aggregated `u`.
pub fn server_step_byzsgdm(w: &ParamVector, aggregate: &ParamVector, lr: f64) -> Result<ParamVector> {
    w.axpy(-lr, aggregate)
}

/// Norm below which the normalized step is skipped.
pub const ZERO_NORM: f64 = 1e-12;

/// `w - η·u/‖u‖`; `None` when `‖u‖ ≤ 1e-12` and the round must be skipped.
pub fn server_step_byzsgdnm(w: &ParamVector, aggregate: &ParamVector, lr: f64) -> Result<Option<ParamVector>> {
    let n = vecmath::l2_norm(aggregate);
    if n <= ZERO_NORM {
        return Ok(None);
    }
    Ok(Some(w.axpy(-lr / n, aggregate)?))
}

/// Per-round metrics. `loss` and `grad_norm` are evaluated at the model the
/// round started from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub t: usize,
    pub lr: f64,
    pub loss: f64,
    pub grad_norm: f64,
    pub agg_error_sq: f64,
    /// Held-out accuracy of the model after this round, on epoch boundaries.
    pub accuracy: Option<f64>,
    pub skipped: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<MetricsRecord>,
    pub final_point: ParamVector,
    pub final_loss: f64,
    pub byzantine: usize,
    pub rounds: usize,
    pub rounds_per_epoch: usize,
    /// `C = T·B·m·(1-δ)`.
    pub budget: f64,
    /// Per-sample gradient evaluations by honest workers, counted.
    pub honest_sample_evaluations: u64,
    pub skipped_rounds: usize,
}

const ATTACK_LANE: u64 = 0xA77A;

/// Runs `config` to completion.
pub fn run_training(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let task = Task::build(&config.task)?;
    run_training_on(config, &task)
}

/// Like [`run_training`] but reuses an already built task.
pub fn run_training_on(config: &RunConfig, task: &Task) -> Result<RunOutput> {
    config.validate()?;
    let m = config.m;
    let byz = config.byzantine_count()?;
    let honest_n = m - byz;
    let rounds = config.total_rounds(task);
    let rpe = config.rounds_per_epoch(task);
    let epochs = rounds.div_ceil(rpe);
    let krum_f = config.aggregator.krum_f_for(m, config.delta);
    let own_needed = config.attack.needs_own_momentum();

    let mut workers: Vec<WorkerState> = (0..m)
        .map(|k| WorkerState::new(k, if k < honest_n { Role::Honest } else { Role::Byzantine }, config.seed))
        .collect();
    let mut w = task.initial_point();
    let mut prev_aggregate: Option<ParamVector> = None;
    let mut records = Vec::with_capacity(rounds);
    let mut evaluations = 0u64;
    let mut skipped_rounds = 0;

    for t in 0..rounds {
        let round = |e: Error| Error::Round { round: t, source: Box::new(e) };
        let lr = config.schedule.lr(t / rpe, epochs).map_err(round)?;
        let loss = task.loss(&w).map_err(round)?;
        let grad_norm = vecmath::l2_norm(&task.full_gradient(&w).map_err(round)?);

        let mut honest = Vec::with_capacity(honest_n);
        let mut own = Vec::with_capacity(byz);
        for state in workers.iter_mut() {
            match state.role {
                Role::Honest => {
                    honest.push(worker_round(state, task, &w, config.batch_size, config.beta, t).map_err(round)?);
                    evaluations += config.batch_size as u64;
                }
                Role::Byzantine if own_needed => {
                    own.push(worker_round(state, task, &w, config.batch_size, config.beta, t).map_err(round)?);
                }
                Role::Byzantine => {}
            }
        }
        let attack_stream = RngStream::with_tag(config.seed, m as u64, t as u64, ATTACK_LANE);
        let byz_vecs = attacks::apply_attack(&config.attack, &honest, &own, byz, &attack_stream).map_err(round)?;
        let mut submitted = honest.clone();
        submitted.extend(byz_vecs);

        let center = if config.aggregator.cc_warm_start { prev_aggregate.as_ref() } else { None };
        let aggregate = config.aggregator.aggregate(&submitted, krum_f, center).map_err(round)?;
        let outcome = AggregationOutcome::with_oracle(aggregate, &honest).map_err(round)?;
        let aggregate = outcome.aggregate;

        let mut skipped = false;
        w = match config.algorithm {
            Algorithm::Byzsgdm => server_step_byzsgdm(&w, &aggregate, lr).map_err(round)?,
            Algorithm::Byzsgdnm => match server_step_byzsgdnm(&w, &aggregate, lr).map_err(round)? {
                Some(next) => next,
                None => {
                    skipped = true;
                    skipped_rounds += 1;
                    w
                }
            },
        };
        prev_aggregate = Some(aggregate);

        let accuracy = if (t + 1) % rpe == 0 || t + 1 == rounds {
            task.evaluate(&w).map_err(round)?.accuracy
        } else {
            None
        };
        records.push(MetricsRecord {
            t,
            lr,
            loss,
            grad_norm,
            agg_error_sq: outcome.error_sq.unwrap_or(0.0),
            accuracy,
            skipped,
        });
    }

    let final_loss = task.loss(&w)?;
    Ok(RunOutput {
        records,
        final_point: w,
        final_loss,
        byzantine: byz,
        rounds,
        rounds_per_epoch: rpe,
        budget: rounds as f64 * config.batch_size as f64 * m as f64 * (1.0 - config.delta),
        honest_sample_evaluations: evaluations,
        skipped_rounds,
    })
}

impl RunOutput {
    /// `(1/T) Σ ‖∇F(w_t)‖` over all rounds.
    pub fn mean_grad_norm(&self) -> f64 {
        self.records.iter().map(|r| r.grad_norm).sum::<f64>() / self.records.len().max(1) as f64
    }

    pub fn best_accuracy(&self) -> Option<f64> {
        self.records.iter().filter_map(|r| r.accuracy).fold(None, |acc, a| Some(acc.map_or(a, |b: f64| b.max(a))))
    }

    pub fn final_accuracy(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.accuracy)
    }
}
