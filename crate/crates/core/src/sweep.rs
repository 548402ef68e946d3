//! Parameter sweeps over the confidence bound with replicate networks.
//!
//! Every replicate owns one network, reused for all tolerances. Each
//! `(replicate, tolerance)` task starts from fresh initial opinions with its own
//! derived seed, so results do not depend on which worker ran which task or in
//! what order.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use rand::SeedableRng;
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, RunStats, SimConfig};
use crate::measure::{Histogram, MeasureError};
use crate::network::{self, Graph, NetworkError};
use crate::profile::MutationProfile;
use crate::scalar::Scalar;
use crate::SimRng;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep plan: {0}")]
    Param(String),
    #[error("replicate {replicate}: network generation failed: {source}")]
    Network {
        replicate: usize,
        #[source]
        source: NetworkError,
    },
    #[error("task (replicate {replicate}, d = {d}): {source}")]
    Task {
        replicate: usize,
        d_index: usize,
        d: f64,
        #[source]
        source: DynamicsError,
    },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Separates the RNG streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Network = 1,
    Dynamics = 2,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Stafford variant 13).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one RNG stream of one task.
///
/// Absorbs the inputs one at a time into a SplitMix64 state: each word is
/// added after a golden-ratio increment and the state is re-mixed with
/// [`mix64`]. Each absorption step is a bijection of the running state, so
/// tuples that differ in one field always map to different seeds.
pub fn derive_seed(master: u64, replicate: u64, d_index: u64, tag: StreamTag) -> u64 {
    let mut state = mix64(master.wrapping_add(GOLDEN_GAMMA));
    for word in [tag as u64, replicate, d_index] {
        state = mix64(state.wrapping_add(GOLDEN_GAMMA) ^ word);
    }
    state
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan<F> {
    pub d_start: F,
    pub d_end: F,
    pub d_step: F,
    pub replicates: usize,
    /// Template for every task; `tolerance` and `seed` are overwritten.
    pub base_config: SimConfig<F>,
    pub nodes: usize,
    pub avg_degree: f64,
    pub profile: MutationProfile<F>,
    pub master_seed: u64,
}

/// One simulation of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task<F> {
    pub replicate: usize,
    pub d_index: usize,
    pub d: F,
    pub seed: u64,
}

impl<F: Scalar> SweepPlan<F> {
    pub fn validate(&self) -> Result<(), SweepError> {
        let finite = self.d_start.is_finite() && self.d_end.is_finite() && self.d_step.is_finite();
        if !finite || self.d_step <= F::zero() {
            return Err(SweepError::Param("d-step must be positive".into()));
        }
        if self.d_start > self.d_end {
            return Err(SweepError::Param("d-start must not exceed d-end".into()));
        }
        if self.replicates == 0 {
            return Err(SweepError::Param("replicates must be at least 1".into()));
        }
        network::edge_probability(self.nodes, self.avg_degree)
            .map_err(|e| SweepError::Param(e.to_string()))?;
        for d in self.d_values() {
            let mut cfg = self.base_config.clone();
            cfg.tolerance = d;
            cfg.validate()
                .map_err(|e| SweepError::Param(format!("d = {d}: {e}")))?;
        }
        Ok(())
    }

    /// `floor((d_end - d_start) / d_step) + 1` values, computed as
    /// `d_start + i * d_step`. The quotient gets a small relative slack so that
    /// grids like 0.1..0.75 step 0.005 include their end point.
    pub fn d_values(&self) -> Vec<F> {
        let span = ((self.d_end - self.d_start) / self.d_step).to_f64().unwrap_or(0.0);
        let count = (span * (1.0 + 1e-9) + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.d_start + F::from_usize(i).unwrap() * self.d_step)
            .collect()
    }

    pub fn network_seed(&self, replicate: usize) -> u64 {
        derive_seed(self.master_seed, replicate as u64, 0, StreamTag::Network)
    }

    /// All `R * M` tasks, replicate-major.
    pub fn tasks(&self) -> Result<Vec<Task<F>>, SweepError> {
        let ds = self.d_values();
        if ds.is_empty() || self.replicates == 0 {
            return Err(SweepError::Param("empty sweep grid".into()));
        }
        let mut tasks = Vec::with_capacity(ds.len() * self.replicates);
        for replicate in 0..self.replicates {
            for (d_index, &d) in ds.iter().enumerate() {
                tasks.push(Task {
                    replicate,
                    d_index,
                    d,
                    seed: derive_seed(
                        self.master_seed,
                        replicate as u64,
                        d_index as u64,
                        StreamTag::Dynamics,
                    ),
                });
            }
        }
        Ok(tasks)
    }

    pub fn task_config(&self, task: &Task<F>) -> SimConfig<F> {
        let mut cfg = self.base_config.clone();
        cfg.tolerance = task.d;
        cfg.seed = task.seed;
        cfg
    }

    pub fn build_networks(&self) -> Result<Vec<Graph>, SweepError> {
        (0..self.replicates)
            .map(|replicate| {
                let mut rng = SimRng::seed_from_u64(self.network_seed(replicate));
                network::generate_er(self.nodes, self.avg_degree, &mut rng)
                    .map_err(|source| SweepError::Network { replicate, source })
            })
            .collect()
    }
}

/// Replicate-averaged densities, one row per tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationMap<F> {
    pub d_values: Vec<F>,
    /// Merged counts per tolerance, summed over replicates.
    pub histograms: Vec<Histogram>,
    /// `densities[i]` is the normalized merged histogram for `d_values[i]`.
    pub densities: Vec<Vec<F>>,
}

impl<F: Scalar> BifurcationMap<F> {
    pub fn bins(&self) -> usize {
        self.histograms.first().map_or(0, Histogram::bins)
    }
}

#[derive(Debug, Clone)]
pub struct TaskResult<F> {
    pub task: Task<F>,
    pub histogram: Histogram,
    pub stats: RunStats,
}

#[derive(Debug, Clone)]
pub struct SweepOutput<F> {
    pub map: BifurcationMap<F>,
    /// Indexed `[d_index * replicates + replicate]`.
    pub results: Vec<TaskResult<F>>,
    pub networks: Vec<Graph>,
}

impl<F> SweepOutput<F> {
    pub fn total_stats(&self) -> RunStats {
        let mut total = RunStats::default();
        for r in &self.results {
            total.absorb(&r.stats);
        }
        total
    }
}

/// Runs one task against its replicate's network.
pub fn run_task<F: Scalar>(
    plan: &SweepPlan<F>,
    task: &Task<F>,
    graph: &Graph,
) -> Result<TaskResult<F>, SweepError> {
    let cfg = plan.task_config(task);
    let out = dynamics::run(graph, &cfg, &plan.profile).map_err(|source| SweepError::Task {
        replicate: task.replicate,
        d_index: task.d_index,
        d: task.d.to_f64().unwrap_or(f64::NAN),
        source,
    })?;
    Ok(TaskResult {
        task: *task,
        histogram: out.histogram,
        stats: out.stats,
    })
}

/// Executes the plan on `workers` threads.
///
/// Workers pull task indices from a shared counter and write each result into
/// its `(d_index, replicate)` slot, so the output is identical for any worker
/// count. The first failing task stops the remaining workers.
pub fn execute<F: Scalar>(plan: &SweepPlan<F>, workers: usize) -> Result<SweepOutput<F>, SweepError> {
    if workers == 0 {
        return Err(SweepError::Param("workers must be at least 1".into()));
    }
    plan.validate()?;
    let tasks = plan.tasks()?;
    let networks = plan.build_networks()?;
    let m = plan.d_values().len();
    let r = plan.replicates;

    let slots: Mutex<Vec<Option<TaskResult<F>>>> = Mutex::new(vec![None; tasks.len()]);
    let failure: Mutex<Option<SweepError>> = Mutex::new(None);
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);

    thread::scope(|scope| {
        for _ in 0..workers.min(tasks.len()) {
            scope.spawn(|| loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(i) else { break };
                match run_task(plan, task, &networks[task.replicate]) {
                    Ok(result) => {
                        let slot = task.d_index * r + task.replicate;
                        slots.lock().unwrap()[slot] = Some(result);
                    }
                    Err(e) => {
                        stop.store(true, Ordering::Relaxed);
                        let mut first = failure.lock().unwrap();
                        if first.is_none() {
                            *first = Some(e);
                        }
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let results: Vec<TaskResult<F>> = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every task completed"))
        .collect();

    let mut histograms = Vec::with_capacity(m);
    for row in results.chunks(r) {
        let mut merged = Histogram::new(plan.base_config.bins)?;
        for res in row {
            merged.merge_from(&res.histogram)?;
        }
        histograms.push(merged);
    }
    let densities = histograms.iter().map(Histogram::density).collect();
    Ok(SweepOutput {
        map: BifurcationMap {
            d_values: plan.d_values(),
            histograms,
            densities,
        },
        results,
        networks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small_plan(replicates: usize, d_start: f64, d_end: f64) -> SweepPlan<f64> {
        let mut base = SimConfig::new(0.1, 20_000, 0);
        base.window = 100;
        SweepPlan {
            d_start,
            d_end,
            d_step: 0.05,
            replicates,
            base_config: base,
            nodes: 150,
            avg_degree: 6.0,
            profile: MutationProfile::uniform(0.01).unwrap(),
            master_seed: 2024,
        }
    }

    #[test]
    fn default_grid_has_131_values() {
        let mut plan = small_plan(10, 0.1, 0.75);
        plan.d_step = 0.005;
        let ds = plan.d_values();
        assert_eq!(ds.len(), 131);
        assert!((ds[130] - 0.75).abs() < 1e-12);
        assert_eq!(plan.tasks().unwrap().len(), 1310);
    }

    #[test]
    fn degenerate_grids() {
        let plan = small_plan(1, 0.3, 0.3);
        assert_eq!(plan.d_values().len(), 1);
        assert_eq!(plan.tasks().unwrap().len(), 1);
        let mut bad = small_plan(1, 0.5, 0.3);
        assert!(bad.validate().is_err());
        bad = small_plan(0, 0.1, 0.3);
        assert!(bad.validate().is_err());
        assert!(bad.tasks().is_err());
    }

    #[test]
    fn tasks_share_network_seed_per_replicate() {
        let plan = small_plan(3, 0.1, 0.3);
        let tasks = plan.tasks().unwrap();
        assert_eq!(tasks.len(), 3 * 5);
        let seeds: HashSet<u64> = tasks.iter().map(|t| t.seed).collect();
        assert_eq!(seeds.len(), tasks.len());
        let nets: HashSet<u64> = (0..3).map(|r| plan.network_seed(r)).collect();
        assert_eq!(nets.len(), 3);
        assert!(nets.is_disjoint(&seeds));
    }

    #[test]
    fn derive_seed_basics() {
        let a = derive_seed(7, 1, 2, StreamTag::Dynamics);
        assert_eq!(a, derive_seed(7, 1, 2, StreamTag::Dynamics));
        assert_ne!(a, derive_seed(7, 1, 2, StreamTag::Network));
        assert_ne!(a, derive_seed(7, 2, 1, StreamTag::Dynamics));
        assert_ne!(a, derive_seed(8, 1, 2, StreamTag::Dynamics));
    }

    #[test]
    fn derive_seed_has_no_collisions_on_a_million_tuples() {
        let mut seen = HashSet::with_capacity(1 << 21);
        for master in [0u64, 1] {
            for rep in 0..10u64 {
                for d in 0..25_000u64 {
                    for tag in [StreamTag::Network, StreamTag::Dynamics] {
                        assert!(seen.insert(derive_seed(master, rep, d, tag)));
                    }
                }
            }
        }
        assert_eq!(seen.len(), 1_000_000);
    }

    #[test]
    fn single_task_map_is_that_histogram() {
        let plan = small_plan(1, 0.3, 0.3);
        let out = execute(&plan, 1).unwrap();
        let task = plan.tasks().unwrap()[0];
        let direct = run_task(&plan, &task, &out.networks[0]).unwrap();
        assert_eq!(out.map.histograms[0], direct.histogram);
        assert_eq!(out.map.densities[0], direct.histogram.density::<f64>());
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let plan = small_plan(2, 0.1, 0.3);
        let serial = execute(&plan, 1).unwrap();
        for workers in [2, 3, 8] {
            let parallel = execute(&plan, workers).unwrap();
            assert_eq!(parallel.map, serial.map);
        }
    }

    #[test]
    fn task_order_does_not_matter() {
        let plan = small_plan(2, 0.1, 0.2);
        let networks = plan.build_networks().unwrap();
        let tasks = plan.tasks().unwrap();
        let forward: Vec<_> = tasks
            .iter()
            .map(|t| run_task(&plan, t, &networks[t.replicate]).unwrap().histogram)
            .collect();
        let mut backward: Vec<_> = tasks
            .iter()
            .rev()
            .map(|t| run_task(&plan, t, &networks[t.replicate]).unwrap().histogram)
            .collect();
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn rows_are_merged_replicate_counts() {
        let plan = small_plan(3, 0.1, 0.2);
        let out = execute(&plan, 4).unwrap();
        for (d_index, row) in out.map.histograms.iter().enumerate() {
            let mut manual = Histogram::new(200).unwrap();
            for res in out.results.iter().filter(|r| r.task.d_index == d_index) {
                manual.merge_from(&res.histogram).unwrap();
            }
            assert_eq!(&manual, row);
            let mass: f64 = out.map.densities[d_index].iter().sum::<f64>() / 200.0;
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn task_failure_reports_coordinates() {
        let mut plan = small_plan(1, 0.1, 0.2);
        plan.base_config.mu = 0.9;
        assert!(matches!(execute(&plan, 2), Err(SweepError::Param(_))));
        assert!(matches!(execute(&small_plan(1, 0.1, 0.2), 0), Err(SweepError::Param(_))));
        // bypass plan validation to exercise the per-task error path
        let task = plan.tasks().unwrap()[1];
        let g = Graph::empty(150).unwrap();
        match run_task(&plan, &task, &g) {
            Err(SweepError::Task { replicate, d_index, .. }) => {
                assert_eq!((replicate, d_index), (0, 1));
            }
            other => panic!("{other:?}"),
        }
    }
}
