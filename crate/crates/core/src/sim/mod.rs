//! Seeded agent-based harness comparing ranking policies over time.
//!
//! Each tick: a fixed creator slate authors fresh items at their current
//! opinions, the allocation process predicts each item's reception under the
//! behavioral model (expected agree rates per group), the policy's value
//! model ranks a feed per agent, agents vote on their slots, and dynamics
//! move opinions toward agreed items and shift outgroup affect on
//! cross-group reactions.
//!
//! Randomness is split into per-slot streams keyed by (seed, role, index)
//! rather than by tick: the same creator authors slot j every tick and the
//! same uniform draws decide agent a's response to slot j. With dynamics
//! frozen (eta = gamma = 0) every tick therefore reproduces the same votes
//! on fresh item ids, and all relation metrics stay exactly constant,
//! which is the stationarity check for the update rules. With dynamics on, opinions move,
//! so item positions, predictions, feeds, and votes all evolve.
//!
//! Tick 0 is an elicitation round: feeds and votes happen, dynamics do not.
//! It seeds the vote matrix so the baseline report is well defined.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Backend};
use crate::ids::{GroupId, ItemId, PersonId};
use crate::metrics::{
    bridging_delta, ei_index, inputs_digest, modularity, random_walk_controversy, signal_prevalence,
    BridgingMetricReport, Motif, RelationMetricReport, RwcOptions,
};
use crate::ranking::{rank, RankedFeed, ValueModel};
use crate::relation::{vote_similarity_graph, Clustering};
use crate::seeds;
use crate::signals::SignalVector;
use crate::vote::{InteractionEvent, VoteMatrix, VoteValue};

/// Default probability of passing instead of engaging with a feed item.
pub const DEFAULT_PASS_RATE: f64 = 0.1;

/// Logit offset calibrated so an item at an agent's own position is agreed
/// with 90% of the time, conditional on not passing: `logistic(ln 9) = 0.9`.
pub fn agree_logit() -> f64 {
    9.0_f64.ln()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SybilConfig {
    /// Fraction of agents (spread across groups) that vote adversarially.
    pub fraction: f64,
    /// The within-tick item slot whose item the sybils force-approve.
    pub target_slot: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_agents: usize,
    #[serde(default = "defaults::n_groups")]
    pub n_groups: usize,
    #[serde(default = "defaults::opinion_dimension")]
    pub opinion_dimension: usize,
    /// Distance between adjacent group opinion means along the first axis.
    #[serde(default = "defaults::faction_separation")]
    pub faction_separation: f64,
    /// Within-group opinion spread (isotropic normal).
    #[serde(default = "defaults::noise_scale")]
    pub noise_scale: f64,
    /// Spread of item positions around their author's opinion.
    #[serde(default = "defaults::item_noise")]
    pub item_noise: f64,
    #[serde(default = "defaults::items_per_tick")]
    pub items_per_tick: usize,
    #[serde(default = "defaults::feed_size")]
    pub feed_size: usize,
    #[serde(default = "defaults::ticks")]
    pub ticks: u64,
    pub value_model: ValueModel,
    pub seed: u64,
    /// Opinion attraction step toward agreed items (eta).
    #[serde(default = "defaults::opinion_step")]
    pub opinion_step: f64,
    /// Outgroup-affect step per cross-group reaction (gamma), in units of
    /// the full 0-100 thermometer.
    #[serde(default = "defaults::affect_step")]
    pub affect_step: f64,
    #[serde(default = "defaults::pass_rate")]
    pub pass_rate: f64,
    /// Edge threshold for the similarity graph the metrics run on.
    #[serde(default = "defaults::similarity_tau")]
    pub similarity_tau: f64,
    /// GAC threshold for the prevalence metric.
    #[serde(default = "defaults::prevalence_threshold")]
    pub prevalence_threshold: f64,
    #[serde(default = "defaults::rwc_walks")]
    pub rwc_walks: u64,
    #[serde(default = "defaults::rwc_steps")]
    pub rwc_steps: u64,
    /// When set, disagreement with items beyond this distance pushes the
    /// opinion away instead of leaving it in place (backfire dynamics).
    #[serde(default)]
    pub repulsion_beyond: Option<f64>,
    #[serde(default)]
    pub sybil: Option<SybilConfig>,
}

mod defaults {
    pub fn n_groups() -> usize {
        2
    }
    pub fn opinion_dimension() -> usize {
        2
    }
    pub fn faction_separation() -> f64 {
        4.0
    }
    pub fn noise_scale() -> f64 {
        1.0
    }
    pub fn item_noise() -> f64 {
        0.5
    }
    pub fn items_per_tick() -> usize {
        10
    }
    pub fn feed_size() -> usize {
        4
    }
    pub fn ticks() -> u64 {
        20
    }
    pub fn opinion_step() -> f64 {
        0.1
    }
    pub fn affect_step() -> f64 {
        0.02
    }
    pub fn pass_rate() -> f64 {
        super::DEFAULT_PASS_RATE
    }
    pub fn similarity_tau() -> f64 {
        0.25
    }
    pub fn prevalence_threshold() -> f64 {
        0.3
    }
    pub fn rwc_walks() -> u64 {
        2_000
    }
    pub fn rwc_steps() -> u64 {
        10
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &str, message: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig {
                    message: format!("{name}: {message}"),
                })
            }
        };
        check(self.n_agents >= 1, "n_agents", "must be at least 1")?;
        check(self.n_groups >= 1, "n_groups", "must be at least 1")?;
        check(
            self.n_groups <= self.n_agents,
            "n_groups",
            "cannot exceed n_agents",
        )?;
        check(
            self.opinion_dimension >= 1,
            "opinion_dimension",
            "must be at least 1",
        )?;
        check(
            self.items_per_tick >= 1,
            "items_per_tick",
            "must be at least 1",
        )?;
        check(self.feed_size >= 1, "feed_size", "must be at least 1")?;
        check(
            (0.0..1.0).contains(&self.opinion_step),
            "opinion_step",
            "must be in [0, 1)",
        )?;
        check(
            (0.0..1.0).contains(&self.affect_step),
            "affect_step",
            "must be in [0, 1)",
        )?;
        check(
            (0.0..1.0).contains(&self.pass_rate),
            "pass_rate",
            "must be in [0, 1)",
        )?;
        check(
            (-1.0..=1.0).contains(&self.similarity_tau),
            "similarity_tau",
            "must be in [-1, 1]",
        )?;
        check(
            self.noise_scale >= 0.0 && self.item_noise >= 0.0,
            "noise",
            "scales must be non-negative",
        )?;
        if let Some(sybil) = &self.sybil {
            check(
                (0.0..=1.0).contains(&sybil.fraction),
                "sybil.fraction",
                "must be in [0, 1]",
            )?;
            check(
                sybil.target_slot < self.items_per_tick,
                "sybil.target_slot",
                "must be a valid item slot",
            )?;
        }
        self.value_model.validate().map_err(|e| Error::InvalidConfig {
            message: format!("value_model: {e}"),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AgentState {
    pub opinion: Vec<f64>,
    pub group: GroupId,
    /// Synthetic feeling-thermometer reading toward the outgroup, 0-100.
    pub affect_out: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ItemState {
    pub position: Vec<f64>,
    pub author: PersonId,
    pub born_tick: u64,
    pub slot: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimWorld {
    pub schema_version: u32,
    pub tick: u64,
    pub agents: BTreeMap<PersonId, AgentState>,
    pub items: BTreeMap<ItemId, ItemState>,
    pub history: Vec<InteractionEvent>,
    pub matrix: VoteMatrix,
}

impl SimWorld {
    pub fn agent_labels(&self) -> BTreeMap<PersonId, GroupId> {
        self.agents
            .iter()
            .map(|(id, agent)| (id.clone(), agent.group))
            .collect()
    }

    pub fn mean_affect_out(&self) -> f64 {
        let total: f64 = self.agents.values().map(|a| a.affect_out).sum();
        total / self.agents.len() as f64
    }
}

/// Draws agents per group from isotropic normals centered at group means
/// spread `faction_separation` apart along the first opinion axis. Everyone
/// starts at the neutral thermometer reading of 50.
pub fn generate_population(cfg: &SimConfig) -> Result<SimWorld> {
    cfg.validate()?;
    let width = (cfg.n_agents.max(2) - 1).to_string().len();
    let mut agents = BTreeMap::new();
    let mut matrix = VoteMatrix::new();
    for idx in 0..cfg.n_agents {
        let id = PersonId::new(format!("a{idx:0width$}"));
        let group = GroupId((idx % cfg.n_groups) as u32);
        let center = cfg.faction_separation
            * (group.index() as f64 - (cfg.n_groups as f64 - 1.0) / 2.0);
        let mut rng = seeds::rng(cfg.seed, "opinion", &[idx as u64]);
        let normal = Normal::new(0.0, cfg.noise_scale.max(f64::MIN_POSITIVE)).expect("valid sd");
        let mut opinion: Vec<f64> = (0..cfg.opinion_dimension)
            .map(|_| normal.sample(&mut rng))
            .collect();
        opinion[0] += center;
        matrix.register_person(id.clone());
        agents.insert(
            id,
            AgentState {
                opinion,
                group,
                affect_out: 50.0,
            },
        );
    }
    Ok(SimWorld {
        schema_version: 1,
        tick: 0,
        agents,
        items: BTreeMap::new(),
        history: Vec::new(),
        matrix,
    })
}

/// Unconditional vote probabilities (agree, pass, disagree) for an item at
/// the given opinion distance.
pub fn vote_probabilities(distance: f64, pass_rate: f64) -> (f64, f64, f64) {
    let agree_given_engaged = logistic(agree_logit() - distance);
    let agree = (1.0 - pass_rate) * agree_given_engaged;
    let disagree = (1.0 - pass_rate) * (1.0 - agree_given_engaged);
    (agree, pass_rate, disagree)
}

fn draw_vote(rng: &mut impl Rng, distance: f64, pass_rate: f64) -> VoteValue {
    if rng.random::<f64>() < pass_rate {
        return VoteValue::Pass;
    }
    if rng.random::<f64>() < logistic(agree_logit() - distance) {
        VoteValue::Agree
    } else {
        VoteValue::Disagree
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Samples one vote: pass with probability `pass_rate`, otherwise agree with
/// probability `logistic(ln 9 - distance)`.
pub fn agent_vote(
    opinion: &[f64],
    item_position: &[f64],
    pass_rate: f64,
    seed: u64,
) -> Result<VoteValue> {
    if opinion.len() != item_position.len() {
        return Err(Error::DimensionMismatch {
            expected: opinion.len(),
            actual: item_position.len(),
        });
    }
    let mut rng = seeds::rng(seed, "agent-vote", &[]);
    Ok(draw_vote(
        &mut rng,
        euclidean(opinion, item_position),
        pass_rate,
    ))
}

/// Feeds realized during one tick, in agent order.
pub struct TickOutcome {
    pub feeds: Vec<RankedFeed>,
}

struct AgentTick {
    feed: RankedFeed,
    votes: Vec<(ItemId, VoteValue)>,
}

/// Advances the world by one tick under the given policy.
pub fn step(
    world: &mut SimWorld,
    cfg: &SimConfig,
    policy: &ValueModel,
    backend: Backend,
) -> Result<TickOutcome> {
    let tick = world.tick + 1;
    let outcome = run_tick(world, cfg, policy, backend, tick, true)?;
    world.tick = tick;
    Ok(outcome)
}

fn run_tick(
    world: &mut SimWorld,
    cfg: &SimConfig,
    policy: &ValueModel,
    backend: Backend,
    tick: u64,
    apply_dynamics: bool,
) -> Result<TickOutcome> {
    let agent_ids: Vec<PersonId> = world.agents.keys().cloned().collect();
    let n = agent_ids.len();

    // Spawn this tick's items. Creator slate and position jitter come from
    // per-slot streams (see module docs).
    let mut candidates = Vec::with_capacity(cfg.items_per_tick);
    for slot in 0..cfg.items_per_tick {
        let author_idx = (seeds::derive(cfg.seed, "author", &[slot as u64]) % n as u64) as usize;
        let author = agent_ids[author_idx].clone();
        let author_state = &world.agents[&author];
        let mut rng = seeds::rng(cfg.seed, "item-pos", &[slot as u64]);
        let normal = Normal::new(0.0, cfg.item_noise.max(f64::MIN_POSITIVE)).expect("valid sd");
        let position: Vec<f64> = author_state
            .opinion
            .iter()
            .map(|&x| x + normal.sample(&mut rng))
            .collect();
        let id = ItemId::new(format!("t{tick:05}_i{slot:03}"));
        world.items.insert(
            id.clone(),
            ItemState {
                position,
                author,
                born_tick: tick,
                slot,
            },
        );
        world.matrix.register_item(id.clone());
        candidates.push(id);
    }

    // Impact prediction: expected reception per item under the behavioral
    // model, assuming full exposure.
    let mut group_sizes = vec![0usize; cfg.n_groups];
    for agent in world.agents.values() {
        group_sizes[agent.group.index()] += 1;
    }
    let mut item_signals: BTreeMap<ItemId, SignalVector> = BTreeMap::new();
    let mut group_engagement: BTreeMap<ItemId, Vec<f64>> = BTreeMap::new();
    for item_id in &candidates {
        let item = &world.items[item_id];
        let mut expected_agrees = vec![0.0f64; cfg.n_groups];
        let mut mixture = [0.0f64; 3]; // P(-1), P(0), P(+1) averaged over agents
        for agent in world.agents.values() {
            let d = euclidean(&agent.opinion, &item.position);
            let (agree, pass, disagree) = vote_probabilities(d, cfg.pass_rate);
            expected_agrees[agent.group.index()] += agree;
            mixture[0] += disagree;
            mixture[1] += pass;
            mixture[2] += agree;
        }
        for p in mixture.iter_mut() {
            *p /= n as f64;
        }

        let gac: f64 = (0..cfg.n_groups)
            .map(|g| (expected_agrees[g] + 1.0) / (group_sizes[g] as f64 + 2.0))
            .product();
        let diverse_approval = (0..cfg.n_groups)
            .map(|g| {
                if group_sizes[g] == 0 {
                    0.0
                } else {
                    expected_agrees[g] / group_sizes[g] as f64
                }
            })
            .fold(f64::INFINITY, f64::min);
        let total_agrees: f64 = expected_agrees.iter().sum();
        let engagement = (total_agrees + 1.0) / (n as f64 + 2.0);
        let bimodality = mixture_bimodality(&mixture);

        group_engagement.insert(
            item_id.clone(),
            (0..cfg.n_groups)
                .map(|g| (expected_agrees[g] + 1.0) / (group_sizes[g] as f64 + 2.0))
                .collect(),
        );
        item_signals.insert(
            item_id.clone(),
            SignalVector {
                item: item_id.clone(),
                engagement,
                diverse_approval,
                gac,
                // Fresh items have no rating history for a factorization
                // model, so the intercept signal is the neutral prior.
                mf_intercept: 0.0,
                bimodality,
                exposure_diversity: None,
            },
        );
    }

    let feed_model = ValueModel {
        weights: policy.weights.clone(),
        top_k: cfg.feed_size,
    };
    let sybil_count = cfg
        .sybil
        .as_ref()
        .map(|s| (s.fraction * n as f64).ceil() as usize)
        .unwrap_or(0);

    // Per-agent allocation and voting against the tick-start state.
    let agents_ref = &world.agents;
    let items_ref = &world.items;
    let candidates_ref = &candidates;
    let signals_ref = &item_signals;
    let group_engagement_ref = &group_engagement;
    let results: Vec<Result<AgentTick>> = map_indexed(backend, n, |agent_idx| {
        let agent_id = &agent_ids[agent_idx];
        let agent = &agents_ref[agent_id];
        let mut personalized = BTreeMap::new();
        for item_id in candidates_ref {
            let mut vector = signals_ref[item_id].clone();
            vector.engagement = group_engagement_ref[item_id][agent.group.index()];
            personalized.insert(item_id.clone(), vector);
        }
        let mut feed = rank(agent_id, candidates_ref, &personalized, &feed_model)?;

        let sybil_target = cfg
            .sybil
            .as_ref()
            .filter(|_| agent_idx < sybil_count)
            .map(|sybil| sybil.target_slot);
        let mut votes = Vec::with_capacity(feed.allocations.len() + 1);
        for allocation in &mut feed.allocations {
            let item = &items_ref[&allocation.object];
            let value = if sybil_target == Some(item.slot) {
                VoteValue::Agree
            } else {
                let mut rng =
                    seeds::rng(cfg.seed, "vote", &[agent_idx as u64, item.slot as u64]);
                draw_vote(
                    &mut rng,
                    euclidean(&agent.opinion, &item.position),
                    cfg.pass_rate,
                )
            };
            allocation.properties.realized = Some(value.as_i8());
            allocation
                .properties
                .context
                .insert("tick".into(), tick.to_string());
            allocation
                .properties
                .context
                .insert("author".into(), item.author.to_string());
            votes.push((allocation.object.clone(), value));
        }
        // Sybils seek the target item out even when it misses their feed.
        if let Some(target_slot) = sybil_target {
            if let Some(target) = candidates_ref.iter().find(|id| items_ref[*id].slot == target_slot)
            {
                if !votes.iter().any(|(item, _)| item == target) {
                    votes.push((target.clone(), VoteValue::Agree));
                }
            }
        }
        Ok(AgentTick { feed, votes })
    });

    // Apply results in agent order: record votes, then move state.
    let mut feeds = Vec::with_capacity(n);
    for (agent_idx, result) in results.into_iter().enumerate() {
        let AgentTick { feed, votes } = result?;
        let agent_id = agent_ids[agent_idx].clone();
        for (item_id, value) in &votes {
            world
                .matrix
                .add_vote(agent_id.clone(), item_id.clone(), *value)?;
            world.history.push(InteractionEvent {
                tick,
                person: agent_id.clone(),
                item: item_id.clone(),
                value: *value,
            });
        }
        if apply_dynamics {
            let updates: Vec<(VoteValue, Vec<f64>, GroupId)> = votes
                .iter()
                .map(|(item_id, value)| {
                    let item = &world.items[item_id];
                    (
                        *value,
                        item.position.clone(),
                        world.agents[&item.author].group,
                    )
                })
                .collect();
            let agent = world.agents.get_mut(&agent_id).expect("agent exists");
            for (value, position, author_group) in updates {
                let cross_group = author_group != agent.group;
                match value {
                    VoteValue::Agree => {
                        for (x, target) in agent.opinion.iter_mut().zip(&position) {
                            *x += cfg.opinion_step * (target - *x);
                        }
                        if cross_group {
                            agent.affect_out =
                                (agent.affect_out + 100.0 * cfg.affect_step).clamp(0.0, 100.0);
                        }
                    }
                    VoteValue::Disagree => {
                        if cross_group {
                            agent.affect_out =
                                (agent.affect_out - 100.0 * cfg.affect_step).clamp(0.0, 100.0);
                        }
                        if let Some(threshold) = cfg.repulsion_beyond {
                            let distance = euclidean(&agent.opinion, &position);
                            if distance > threshold {
                                for (x, target) in agent.opinion.iter_mut().zip(&position) {
                                    *x -= cfg.opinion_step * (target - *x);
                                }
                            }
                        }
                    }
                    VoteValue::Pass => {}
                }
            }
        }
        feeds.push(feed);
    }

    Ok(TickOutcome { feeds })
}

fn mixture_bimodality(mixture: &[f64; 3]) -> Option<f64> {
    let values = [-1.0, 0.0, 1.0];
    let mean: f64 = values.iter().zip(mixture).map(|(v, p)| v * p).sum();
    let moment = |k: i32| -> f64 {
        values
            .iter()
            .zip(mixture)
            .map(|(v, p)| (v - mean).powi(k) * p)
            .sum()
    };
    let m2 = moment(2);
    if m2 <= 1e-12 {
        return None;
    }
    let skewness = moment(3) / m2.powf(1.5);
    let kurtosis = moment(4) / (m2 * m2);
    Some((skewness * skewness + 1.0) / kurtosis)
}

/// The full output of a simulation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunResult {
    /// Baseline (tick 0, elicitation only) followed by one report per tick.
    pub reports: Vec<RelationMetricReport>,
    /// Final-vs-baseline deltas; empty when ticks = 0.
    pub delta: BridgingMetricReport,
    /// Mean outgroup thermometer per tick, baseline included.
    pub affect: Vec<(u64, f64)>,
    pub feeds: Vec<RankedFeed>,
    pub world: SimWorld,
}

/// Runs the configured number of ticks and measures every tick.
pub fn run(cfg: &SimConfig) -> Result<RunResult> {
    run_with(cfg, Backend::default())
}

pub fn run_with(cfg: &SimConfig, backend: Backend) -> Result<RunResult> {
    cfg.validate()?;
    let mut world = generate_population(cfg)?;
    let mut feeds = Vec::new();

    // Tick 0: elicitation only.
    let outcome = run_tick(&mut world, cfg, &cfg.value_model, backend, 0, false)?;
    feeds.extend(outcome.feeds);
    let mut reports = vec![tick_report(&world, cfg, 0)?];
    let mut affect = vec![(0, world.mean_affect_out())];

    for tick in 1..=cfg.ticks {
        let outcome = step(&mut world, cfg, &cfg.value_model, backend)?;
        feeds.extend(outcome.feeds);
        reports.push(tick_report(&world, cfg, tick)?);
        affect.push((tick, world.mean_affect_out()));
    }

    let delta = if cfg.ticks == 0 {
        BridgingMetricReport::empty((0, 0))
    } else {
        bridging_delta(&reports[0], &reports[reports.len() - 1])?
    };

    Ok(RunResult {
        reports,
        delta,
        affect,
        feeds,
        world,
    })
}

/// Measures the world after a tick: modularity, E-I, RWC (two-group runs),
/// GAC-motif prevalence over the tick window, and mean outgroup affect.
fn tick_report(world: &SimWorld, cfg: &SimConfig, tick: u64) -> Result<RelationMetricReport> {
    let graph = vote_similarity_graph(&world.matrix, cfg.similarity_tau)?;
    let labels = world.agent_labels();
    let clustering = Clustering::from_labels(labels.clone())?;

    let mut values = BTreeMap::new();
    values.insert("modularity".to_owned(), modularity(&graph, &labels)?);
    values.insert("ei_index".to_owned(), ei_index(&graph, &labels)?);
    if cfg.n_groups == 2 {
        let estimate = random_walk_controversy(
            &graph,
            &labels,
            &RwcOptions {
                walks: cfg.rwc_walks,
                steps: cfg.rwc_steps,
                seed: seeds::derive(cfg.seed, "rwc", &[tick]),
                backend: Backend::default(),
            },
        )?;
        values.insert("rwc".to_owned(), estimate.value);
        values.insert("rwc_se".to_owned(), estimate.std_error);
    }
    values.insert(
        "prevalence_gac".to_owned(),
        signal_prevalence(
            &world.history,
            &clustering,
            &Motif::GroupAwareConsensus {
                threshold: cfg.prevalence_threshold,
            },
            (tick, tick),
        )?,
    );
    values.insert("mean_affect_out".to_owned(), world.mean_affect_out());

    RelationMetricReport::new(tick, values, inputs_digest(&graph, &labels))
}
