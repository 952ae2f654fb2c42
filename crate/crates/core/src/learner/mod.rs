//! From-scratch neural Q-learner: epsilon-greedy behavior over an MLP,
//! FIFO replay, a periodically synced target network, N-step targets
//! (N = 1 is plain one-step Q-learning) and deterministic single-threaded
//! training loops for the single- and multi-household settings.

mod io;
mod mlp;
mod replay;

pub use io::{load_model, save_model};
pub use mlp::{Adam, BatchItem, Gradients, Mlp, Workspace};
pub use replay::{ReplayBuffer, Transition};

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::{CommunityEnv, CommunityEpisode, CommunityError};
use crate::data::DailyEpisode;
use crate::env::{Action, Env, EnvConfig, EnvError};
use crate::oracle::Replay;
use crate::stats::BehaviorStats;
use crate::tariff::TariffSchedule;
use crate::battery::BatteryModel;

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("invalid learner config: {0}")]
    InvalidConfig(String),
    #[error("feature length mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("training diverged: non-finite loss at epoch {epoch}, gradient step {grad_step}")]
    NonFiniteLoss { epoch: usize, grad_step: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("model io error: {0}")]
    Io(String),
    #[error("not a valid model file: {0}")]
    BadModelFile(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Community(#[from] CommunityError),
}

/// Q-learning hyperparameters. The dissertation reports none, so these
/// are conservative DQN defaults, every one overridable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub gamma: f64,
    /// Lookahead horizon of the return target; 1 gives plain DQN.
    pub n_step: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Environment steps over which epsilon anneals linearly.
    pub epsilon_decay_steps: usize,
    /// Gradient steps between target-network refreshes.
    pub target_sync_every: usize,
    pub epochs: usize,
    pub seed: u64,
    pub buffer_capacity: usize,
    /// Environment steps per gradient step.
    pub update_every: usize,
    pub hidden_layers: Vec<usize>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            n_step: 4,
            learning_rate: 1e-3,
            batch_size: 64,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 20_000,
            target_sync_every: 500,
            epochs: 100,
            seed: 0,
            buffer_capacity: 50_000,
            update_every: 1,
            hidden_layers: vec![64, 64],
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let fail = |msg: String| Err(LearnerError::InvalidConfig(msg));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma must be in (0,1], got {}", self.gamma));
        }
        if self.n_step == 0 {
            return fail("n_step must be >= 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return fail(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        for (name, eps) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&eps) {
                return fail(format!("{name} must be in [0,1], got {eps}"));
            }
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return fail(format!(
                "need 0 < batch_size <= buffer_capacity, got {} / {}",
                self.batch_size, self.buffer_capacity
            ));
        }
        if self.update_every == 0 || self.target_sync_every == 0 {
            return fail("update_every and target_sync_every must be >= 1".into());
        }
        Ok(())
    }

    /// Linear epsilon schedule over environment steps.
    pub fn epsilon_at(&self, step: usize) -> f64 {
        if self.epsilon_decay_steps == 0 {
            return self.epsilon_end;
        }
        let frac = (step as f64 / self.epsilon_decay_steps as f64).min(1.0);
        self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
    }

    fn layer_sizes(&self, input_dim: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_layers.len() + 2);
        sizes.push(input_dim);
        sizes.extend_from_slice(&self.hidden_layers);
        sizes.push(2);
        sizes
    }
}

/// Greedy action with exact ties resolved to idling.
pub fn greedy_action(net: &Mlp, state: &[f64]) -> Result<Action, LearnerError> {
    let q = net.forward(state)?;
    Ok(if q[1] > q[0] { Action::Charge } else { Action::Idle })
}

/// Epsilon-greedy behavior policy. The exploration coin is drawn on every
/// call so the random stream advances identically whatever epsilon is.
pub fn select_action(
    net: &Mlp,
    state: &[f64],
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Action, LearnerError> {
    if rng.random::<f64>() < epsilon {
        Ok(Action::from_index(rng.random_range(0..2usize)).unwrap())
    } else {
        greedy_action(net, state)
    }
}

fn max_q(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One-step bootstrap target: `r + gamma * max(next_q)` unless terminal.
pub fn target_1step(reward: f64, next_q_target: &[f64], done: bool, gamma: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * max_q(next_q_target)
    }
}

/// Truncated N-step target: the discounted sum of up to `n` rewards plus
/// a single bootstrap at the horizon. `bootstrap_q` is `None` when the
/// window ran into the terminal state.
pub fn target_nstep(rewards: &[f64], bootstrap_q: Option<&[f64]>, gamma: f64, n: usize) -> f64 {
    debug_assert!(!rewards.is_empty() && rewards.len() <= n);
    debug_assert!(rewards.len() == n || bootstrap_q.is_none());
    let mut total = 0.0;
    let mut discount = 1.0;
    for &r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    if let Some(q) = bootstrap_q {
        total += discount * max_q(q);
    }
    total
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Undiscounted episode return averaged over the epoch's episodes.
    pub mean_return: f64,
    /// Epsilon at the end of the epoch.
    pub epsilon: f64,
    /// Mean minibatch loss over the epoch (0 before learning starts).
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub net: Mlp,
    pub log: Vec<EpochLog>,
}

/// Everything `train` needs besides hyperparameters.
pub struct TrainSetup<'a> {
    pub episodes: &'a [DailyEpisode],
    pub stats: &'a BehaviorStats,
    pub env_config: &'a EnvConfig,
    pub battery: &'a BatteryModel,
    pub tariff: &'a TariffSchedule,
}

/// Mutable training state of one agent; shared by the single- and
/// multi-agent loops so both follow the identical update path.
struct AgentRuntime {
    net: Mlp,
    target_net: Mlp,
    adam: Adam,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    pending: VecDeque<(Vec<f64>, Action, f64)>,
    workspace: Workspace,
    grads: Gradients,
    env_steps: usize,
    grad_steps: usize,
    discount_n: f64,
    epoch_return: f64,
    epoch_losses: f64,
    epoch_loss_count: usize,
    epoch_episodes: usize,
    log: Vec<EpochLog>,
}

impl AgentRuntime {
    fn new(input_dim: usize, config: &DqnConfig, seed: u64) -> Result<Self, LearnerError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::init(&config.layer_sizes(input_dim), &mut rng)?;
        let target_net = net.clone();
        let adam = Adam::new(&net, config.learning_rate);
        let workspace = net.workspace();
        let grads = Gradients::zeros_like(&net);
        let mut discount_n = 1.0;
        for _ in 0..config.n_step {
            discount_n *= config.gamma;
        }
        Ok(Self {
            buffer: ReplayBuffer::new(config.buffer_capacity),
            rng,
            pending: VecDeque::with_capacity(config.n_step + 1),
            workspace,
            grads,
            env_steps: 0,
            grad_steps: 0,
            discount_n,
            epoch_return: 0.0,
            epoch_losses: 0.0,
            epoch_loss_count: 0,
            epoch_episodes: 0,
            log: Vec::new(),
            net,
            target_net,
            adam,
        })
    }

    fn act(&mut self, features: &[f64], config: &DqnConfig) -> Result<Action, LearnerError> {
        let epsilon = config.epsilon_at(self.env_steps);
        select_action(&self.net, features, epsilon, &mut self.rng)
    }

    /// Sum of the pending window's rewards discounted from its front.
    fn pending_return(&self, gamma: f64) -> f64 {
        let mut total = 0.0;
        let mut discount = 1.0;
        for (_, _, r) in &self.pending {
            total += discount * r;
            discount *= gamma;
        }
        total
    }

    fn emit_front(&mut self, next_state: &[f64], done: bool, gamma: f64) {
        let reward = self.pending_return(gamma);
        let (state, action, _) = self.pending.pop_front().expect("emit on nonempty window");
        self.buffer.push(Transition {
            state,
            action,
            reward,
            next_state: next_state.to_vec(),
            done,
        });
    }

    /// Records one environment step: N-step window bookkeeping, replay
    /// insertion and (on schedule) one minibatch update.
    fn observe(
        &mut self,
        state: Vec<f64>,
        action: Action,
        reward: f64,
        next_state: &[f64],
        done: bool,
        config: &DqnConfig,
        epoch: usize,
    ) -> Result<(), LearnerError> {
        self.epoch_return += reward;
        self.pending.push_back((state, action, reward));
        if done {
            while !self.pending.is_empty() {
                self.emit_front(next_state, true, config.gamma);
            }
        } else if self.pending.len() == config.n_step {
            self.emit_front(next_state, false, config.gamma);
        }
        self.env_steps += 1;
        if self.env_steps % config.update_every == 0 && self.buffer.len() >= config.batch_size {
            self.learn(config, epoch)?;
        }
        Ok(())
    }

    fn learn(&mut self, config: &DqnConfig, epoch: usize) -> Result<(), LearnerError> {
        let indices = self.buffer.sample_indices(&mut self.rng, config.batch_size);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in &indices {
            let tr = self.buffer.get(i);
            let y = if tr.done {
                tr.reward
            } else {
                tr.reward + self.discount_n * max_q(&self.target_net.forward(&tr.next_state)?)
            };
            targets.push(y);
        }
        let batch: Vec<BatchItem> = indices
            .iter()
            .zip(&targets)
            .map(|(&i, &target)| {
                let tr = self.buffer.get(i);
                BatchItem {
                    state: &tr.state,
                    action: tr.action.index(),
                    target,
                }
            })
            .collect();
        let loss = self
            .net
            .loss_and_gradients(&batch, &mut self.grads, &mut self.workspace)?;
        if !loss.is_finite() {
            return Err(LearnerError::NonFiniteLoss {
                epoch,
                grad_step: self.grad_steps,
            });
        }
        self.adam.step(&mut self.net, &self.grads);
        self.grad_steps += 1;
        self.epoch_losses += loss;
        self.epoch_loss_count += 1;
        if self.grad_steps % config.target_sync_every == 0 {
            self.target_net = self.net.clone();
        }
        Ok(())
    }

    fn finish_episode(&mut self) {
        self.epoch_episodes += 1;
        debug_assert!(self.pending.is_empty(), "window must flush at episode end");
        self.pending.clear();
    }

    fn finish_epoch(&mut self, epoch: usize, config: &DqnConfig) {
        let mean_return = if self.epoch_episodes == 0 {
            0.0
        } else {
            self.epoch_return / self.epoch_episodes as f64
        };
        let loss = if self.epoch_loss_count == 0 {
            0.0
        } else {
            self.epoch_losses / self.epoch_loss_count as f64
        };
        self.log.push(EpochLog {
            epoch,
            mean_return,
            epsilon: config.epsilon_at(self.env_steps),
            loss,
        });
        self.epoch_return = 0.0;
        self.epoch_losses = 0.0;
        self.epoch_loss_count = 0;
        self.epoch_episodes = 0;
    }

    fn into_result(self) -> TrainResult {
        TrainResult {
            net: self.net,
            log: self.log,
        }
    }
}

/// Trains one agent over the episode set. Fully deterministic for a fixed
/// seed: one RNG stream drives initialization, exploration and sampling.
pub fn train(setup: &TrainSetup, config: &DqnConfig) -> Result<TrainResult, LearnerError> {
    config.validate()?;
    if setup.episodes.is_empty() {
        return Err(LearnerError::EmptyTrainingSet);
    }
    let probe = Env::new(
        &setup.episodes[0],
        setup.stats,
        setup.env_config,
        setup.battery,
        setup.tariff,
    )?;
    let input_dim = probe.feature_len();
    drop(probe);
    let mut agent = AgentRuntime::new(input_dim, config, config.seed)?;

    for epoch in 0..config.epochs {
        for episode in setup.episodes {
            let mut env = Env::new(episode, setup.stats, setup.env_config, setup.battery, setup.tariff)?;
            let initial = env.reset();
            let mut features = env.features(&initial);
            loop {
                let action = agent.act(&features, config)?;
                let out = env.step(action)?;
                let next_features = match &out.next_state {
                    Some(s) => env.features(s),
                    None => vec![0.0; input_dim],
                };
                agent.observe(
                    std::mem::take(&mut features),
                    action,
                    out.reward,
                    &next_features,
                    out.done,
                    config,
                    epoch,
                )?;
                if out.done {
                    break;
                }
                features = next_features;
            }
            agent.finish_episode();
        }
        agent.finish_epoch(epoch, config);
    }
    Ok(agent.into_result())
}

/// Everything `train_multi` needs besides hyperparameters.
pub struct CommunityTrainSetup<'a> {
    pub episodes: &'a [CommunityEpisode],
    /// One behavior-stats bundle per household, in member order.
    pub stats: &'a [BehaviorStats],
    pub env_config: &'a EnvConfig,
    pub battery: &'a BatteryModel,
    pub tariff: &'a TariffSchedule,
}

/// Trains N agents over lockstep community rollouts. Each agent owns its
/// network, buffer and RNG stream (seed + agent index); updates use only
/// the agent's own transitions.
pub fn train_multi(
    setup: &CommunityTrainSetup,
    config: &DqnConfig,
) -> Result<Vec<TrainResult>, LearnerError> {
    config.validate()?;
    let first = setup.episodes.first().ok_or(LearnerError::EmptyTrainingSet)?;
    let n = first.household_count();
    for ep in setup.episodes {
        if ep.household_count() != n {
            return Err(LearnerError::InvalidConfig(format!(
                "community episodes disagree on household count: {} vs {n}",
                ep.household_count()
            )));
        }
    }
    let probe = CommunityEnv::new(first, setup.stats, setup.env_config, setup.battery, setup.tariff)?;
    let input_dim = probe.agent(0).feature_len();
    drop(probe);

    let mut agents = (0..n)
        .map(|i| AgentRuntime::new(input_dim, config, config.seed + i as u64))
        .collect::<Result<Vec<_>, _>>()?;

    for epoch in 0..config.epochs {
        for episode in setup.episodes {
            let mut env = CommunityEnv::new(
                episode,
                setup.stats,
                setup.env_config,
                setup.battery,
                setup.tariff,
            )?;
            let states = env.reset();
            let mut features: Vec<Vec<f64>> = states
                .iter()
                .enumerate()
                .map(|(i, s)| env.agent(i).features(s))
                .collect();
            loop {
                let actions = agents
                    .iter_mut()
                    .zip(&features)
                    .map(|(agent, f)| agent.act(f, config))
                    .collect::<Result<Vec<_>, _>>()?;
                let outs = env.step_all(&actions)?;
                let done = outs[0].done;
                let next_features: Vec<Vec<f64>> = outs
                    .iter()
                    .enumerate()
                    .map(|(i, out)| match &out.next_state {
                        Some(s) => env.agent(i).features(s),
                        None => vec![0.0; input_dim],
                    })
                    .collect();
                for (i, agent) in agents.iter_mut().enumerate() {
                    agent.observe(
                        std::mem::take(&mut features[i]),
                        actions[i],
                        outs[i].reward,
                        &next_features[i],
                        outs[i].done,
                        config,
                        epoch,
                    )?;
                }
                if done {
                    break;
                }
                features = next_features;
            }
            for agent in &mut agents {
                agent.finish_episode();
            }
        }
        for agent in &mut agents {
            agent.finish_epoch(epoch, config);
        }
    }
    Ok(agents.into_iter().map(AgentRuntime::into_result).collect())
}

/// Deterministic epsilon-zero rollout of a policy through one episode.
pub fn greedy_rollout(net: &Mlp, env: &mut Env) -> Result<Replay, LearnerError> {
    let initial = env.reset();
    let mut features = env.features(&initial);
    let mut actions = Vec::with_capacity(env.horizon());
    let mut rewards = Vec::with_capacity(env.horizon());
    let mut breakdowns = Vec::with_capacity(env.horizon());
    let mut delivered = Vec::with_capacity(env.horizon());
    let mut cum = 0.0;
    loop {
        let action = greedy_action(net, &features)?;
        let out = env.step(action)?;
        actions.push(action);
        rewards.push(out.reward);
        breakdowns.push(out.breakdown);
        delivered.push(out.delivered_kw);
        cum += out.delivered_kw;
        match out.next_state {
            Some(s) => features = env.features(&s),
            None => break,
        }
    }
    Ok(Replay {
        actions,
        return_sum: rewards.iter().sum(),
        rewards,
        breakdowns,
        delivered_kw: delivered,
        final_cum: cum,
    })
}
