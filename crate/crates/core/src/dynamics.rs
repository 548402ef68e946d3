//! Deffuant event loop with opinion-dependent mutation.
//!
//! One step is one event. Under [`Scheme::MutateOrInteract`] the RNG is drawn
//! in this order: node `A`, gate uniform, then either the new opinion of `A`
//! (gate below `P(o_A)`) or the neighbor `B`. Under
//! [`Scheme::MutateAndInteract`]: node `A`, neighbor `B`, node `C`, gate uniform,
//! and the new opinion of `C` when gated in.

use std::fmt;
use std::ops::Neg;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_traits::Num;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::measure::{Histogram, MeasureError};
use crate::network::Graph;
use crate::profile::MutationProfile;
use crate::scalar::Scalar;
use crate::SimRng;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("{field}: {msg}")]
    Param { field: &'static str, msg: String },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

fn param_err(field: &'static str, msg: impl Into<String>) -> DynamicsError {
    DynamicsError::Param {
        field,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Each event either mutates `A` (with probability `P(o_A)`) or lets `A`
    /// interact with a random neighbor.
    #[default]
    MutateOrInteract,
    /// Each event runs one interaction and then an independent mutation trial
    /// for a uniformly drawn node.
    MutateAndInteract,
}

impl Scheme {
    pub fn key(self) -> &'static str {
        match self {
            Scheme::MutateOrInteract => "or",
            Scheme::MutateAndInteract => "and",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "or" => Ok(Scheme::MutateOrInteract),
            "and" => Ok(Scheme::MutateAndInteract),
            other => Err(format!("unknown scheme `{other}` (expected or|and)")),
        }
    }
}

/// Initial opinion distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialDistribution<F> {
    UniformIid,
    Constant(F),
    /// Each agent independently takes one of the two values with probability 1/2.
    TwoDelta(F, F),
}

impl<F: Scalar> InitialDistribution<F> {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let in_unit = |v: F| v >= F::zero() && v <= F::one();
        match *self {
            InitialDistribution::UniformIid => Ok(()),
            InitialDistribution::Constant(c) if in_unit(c) => Ok(()),
            InitialDistribution::TwoDelta(a, b) if in_unit(a) && in_unit(b) => Ok(()),
            _ => Err(param_err("init", "initial opinions must lie in [0, 1]")),
        }
    }
}

impl<F: Scalar> fmt::Display for InitialDistribution<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDistribution::UniformIid => f.write_str("uniform"),
            InitialDistribution::Constant(c) => write!(f, "const:{c}"),
            InitialDistribution::TwoDelta(a, b) => write!(f, "twodelta:{a},{b}"),
        }
    }
}

impl<F: Scalar + FromStr> FromStr for InitialDistribution<F> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<F>()
                .map_err(|_| format!("bad number `{t}` in init spec `{s}`"))
        };
        let init = if s == "uniform" {
            InitialDistribution::UniformIid
        } else if let Some(c) = s.strip_prefix("const:") {
            InitialDistribution::Constant(num(c)?)
        } else if let Some(rest) = s.strip_prefix("twodelta:") {
            let (a, b) = rest
                .split_once(',')
                .ok_or_else(|| format!("twodelta needs two values, got `{s}`"))?;
            InitialDistribution::TwoDelta(num(a)?, num(b)?)
        } else {
            return Err(format!(
                "unknown init `{s}` (expected uniform|const:<c>|twodelta:<a>,<b>)"
            ));
        };
        init.validate().map_err(|e| e.to_string())?;
        Ok(init)
    }
}

/// Parameters of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<F> {
    /// Confidence bound `d`; pairs interact only when `|o_a - o_b| < d`.
    pub tolerance: F,
    /// Convergence parameter in `(0, 0.5]`.
    pub mu: F,
    pub total_steps: u64,
    /// Number of final steps whose opinion vectors enter the histogram.
    pub window: u64,
    pub scheme: Scheme,
    pub init: InitialDistribution<F>,
    pub seed: u64,
    pub bins: usize,
}

impl<F: Scalar> SimConfig<F> {
    /// `mu = 0.5`, `window = 1000`, 200 bins, uniform initial opinions.
    pub fn new(tolerance: F, total_steps: u64, seed: u64) -> Self {
        SimConfig {
            tolerance,
            mu: F::lit(0.5),
            total_steps,
            window: 1000.min(total_steps),
            scheme: Scheme::default(),
            init: InitialDistribution::UniformIid,
            seed,
            bins: 200,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.mu > F::zero() && self.mu <= F::lit(0.5)) {
            return Err(param_err("mu", "mu must be in (0, 0.5]"));
        }
        if !(self.tolerance > F::zero() && self.tolerance <= F::one()) {
            return Err(param_err("d", "d must be in (0, 1]"));
        }
        if self.window == 0 {
            return Err(param_err("window", "window must be at least 1"));
        }
        if self.window > self.total_steps {
            return Err(param_err("window", "window must not exceed steps"));
        }
        if self.bins == 0 {
            return Err(param_err("bins", "bins must be at least 1"));
        }
        self.init.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionState<F> {
    pub opinions: Vec<F>,
    pub step: u64,
}

/// Event counters for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub steps: u64,
    /// Events in which a pair `(A, B)` was formed.
    pub interactions: u64,
    /// Interactions that fell within tolerance and moved both opinions.
    pub consensus_events: u64,
    pub mutations: u64,
    /// Interaction attempts skipped because `A` had no neighbors.
    pub isolated_skips: u64,
}

impl RunStats {
    pub fn absorb(&mut self, other: &RunStats) {
        self.steps += other.steps;
        self.interactions += other.interactions;
        self.consensus_events += other.consensus_events;
        self.mutations += other.mutations;
        self.isolated_skips += other.isolated_skips;
    }
}

/// Bounded-confidence update for one pair.
///
/// Moves both opinions toward each other by `mu` times their gap when the gap
/// is strictly below `tolerance`; otherwise returns them unchanged. Generic
/// beyond floats so exact rationals can check conservation.
#[inline(always)]
pub fn pair_update<T>(a: T, b: T, tolerance: T, mu: T) -> (T, T)
where
    T: Num + Neg<Output = T> + PartialOrd + Copy,
{
    let gap = a - b;
    let distance = if gap < T::zero() { -gap } else { gap };
    if distance < tolerance {
        let shift = mu * gap;
        (a - shift, b + shift)
    } else {
        (a, b)
    }
}

pub fn init_opinions<F: Scalar, R: Rng + ?Sized>(
    n: usize,
    init: &InitialDistribution<F>,
    rng: &mut R,
) -> Result<OpinionState<F>, DynamicsError> {
    if n == 0 {
        return Err(param_err("n", "need at least one agent"));
    }
    init.validate()?;
    let opinions = match *init {
        InitialDistribution::UniformIid => (0..n).map(|_| F::sample_unit(rng)).collect(),
        InitialDistribution::Constant(c) => vec![c; n],
        InitialDistribution::TwoDelta(a, b) => (0..n)
            .map(|_| if rng.random::<bool>() { a } else { b })
            .collect(),
    };
    Ok(OpinionState { opinions, step: 0 })
}

/// Replaces the opinion of `node` with a fresh uniform draw on `[0, 1)`.
#[inline(always)]
pub fn mutate<F: Scalar, R: Rng + ?Sized>(state: &mut OpinionState<F>, node: usize, rng: &mut R) {
    state.opinions[node] = F::sample_unit(rng);
}

/// Advances `state` by one event and returns what happened.
///
/// Callers guarantee `state` was built for `g` and `cfg`/`profile` are valid.
#[inline]
pub fn step<F: Scalar, R: Rng + ?Sized>(
    state: &mut OpinionState<F>,
    g: &Graph,
    cfg: &SimConfig<F>,
    profile: &MutationProfile<F>,
    rng: &mut R,
    stats: &mut RunStats,
) {
    let n = state.opinions.len();
    let ops = &mut state.opinions;
    match cfg.scheme {
        Scheme::MutateOrInteract => {
            let a = rng.random_range(0..n);
            let gate = F::sample_unit(rng);
            if gate < profile.eval_unchecked(ops[a]) {
                ops[a] = F::sample_unit(rng);
                stats.mutations += 1;
            } else {
                interact(ops, g, a, cfg, rng, stats);
            }
        }
        Scheme::MutateAndInteract => {
            let a = rng.random_range(0..n);
            interact(ops, g, a, cfg, rng, stats);
            let c = rng.random_range(0..n);
            let gate = F::sample_unit(rng);
            if gate < profile.eval_unchecked(ops[c]) {
                ops[c] = F::sample_unit(rng);
                stats.mutations += 1;
            }
        }
    }
    state.step += 1;
    stats.steps += 1;
}

#[inline(always)]
fn interact<F: Scalar, R: Rng + ?Sized>(
    ops: &mut [F],
    g: &Graph,
    a: usize,
    cfg: &SimConfig<F>,
    rng: &mut R,
    stats: &mut RunStats,
) {
    let Some(b) = g.random_neighbor_unchecked(a, rng) else {
        stats.isolated_skips += 1;
        return;
    };
    stats.interactions += 1;
    let (oa, ob) = (ops[a], ops[b]);
    if (oa - ob).abs() < cfg.tolerance {
        let (na, nb) = pair_update(oa, ob, cfg.tolerance, cfg.mu);
        ops[a] = na;
        ops[b] = nb;
        stats.consensus_events += 1;
    }
}

/// A simulation in progress: graph, parameters, RNG and opinions.
pub struct Simulation<'g, F> {
    graph: &'g Graph,
    cfg: SimConfig<F>,
    profile: MutationProfile<F>,
    rng: SimRng,
    state: OpinionState<F>,
    stats: RunStats,
}

impl<'g, F: Scalar> Simulation<'g, F> {
    /// Seeds the RNG from `cfg.seed` and draws the initial opinions.
    pub fn new(
        graph: &'g Graph,
        cfg: SimConfig<F>,
        profile: MutationProfile<F>,
    ) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        let mut rng = SimRng::seed_from_u64(cfg.seed);
        let state = init_opinions(graph.node_count(), &cfg.init, &mut rng)?;
        Ok(Simulation {
            graph,
            cfg,
            profile,
            rng,
            state,
            stats: RunStats::default(),
        })
    }

    /// Starts from given opinions instead of drawing them.
    pub fn with_state(
        graph: &'g Graph,
        cfg: SimConfig<F>,
        profile: MutationProfile<F>,
        opinions: Vec<F>,
    ) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        if opinions.len() != graph.node_count() {
            return Err(param_err("opinions", "length differs from node count"));
        }
        if opinions.iter().any(|&o| !(o >= F::zero() && o <= F::one())) {
            return Err(param_err("opinions", "opinions must lie in [0, 1]"));
        }
        Ok(Simulation {
            graph,
            rng: SimRng::seed_from_u64(cfg.seed),
            cfg,
            profile,
            state: OpinionState { opinions, step: 0 },
            stats: RunStats::default(),
        })
    }

    pub fn step(&mut self) {
        step(
            &mut self.state,
            self.graph,
            &self.cfg,
            &self.profile,
            &mut self.rng,
            &mut self.stats,
        );
    }

    pub fn advance(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    pub fn state(&self) -> &OpinionState<F> {
        &self.state
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn into_state(self) -> OpinionState<F> {
        self.state
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput<F> {
    pub state: OpinionState<F>,
    /// Tallies of every opinion after each of the final `window` steps.
    pub histogram: Histogram,
    pub stats: RunStats,
    pub wall_time: Duration,
}

/// Runs `cfg.total_steps` events from freshly drawn opinions.
///
/// After each of the last `cfg.window` steps the whole opinion vector is added
/// to the histogram, which therefore holds `N * window` samples.
pub fn run<F: Scalar>(
    g: &Graph,
    cfg: &SimConfig<F>,
    profile: &MutationProfile<F>,
) -> Result<RunOutput<F>, DynamicsError> {
    let started = Instant::now();
    let mut sim = Simulation::new(g, cfg.clone(), *profile)?;
    let mut histogram = Histogram::new(cfg.bins)?;
    let burn_in = cfg.total_steps - cfg.window;
    sim.advance(burn_in);
    for _ in 0..cfg.window {
        sim.step();
        histogram.accumulate(&sim.state.opinions);
    }
    Ok(RunOutput {
        stats: sim.stats,
        state: sim.state,
        histogram,
        wall_time: started.elapsed(),
    })
}
