//! Deffuant bounded-confidence opinion dynamics with opinion-dependent random
//! opinion change ("mutation") on Erdős–Rényi networks.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`, which is what the command-line tool uses.
//!
//! ```
//! use deffuant::{dynamics, network, MutationProfile, SimConfig, SimRng};
//! use rand::SeedableRng;
//!
//! let graph = network::generate_er(500, 10.0, &mut SimRng::seed_from_u64(1)).unwrap();
//! let profile = MutationProfile::asymmetric(0.01, 0.02).unwrap();
//! let cfg = SimConfig::new(0.2, 100_000, 7);
//! let out = dynamics::run(&graph, &cfg, &profile).unwrap();
//! assert_eq!(out.histogram.samples(), 500 * 1000);
//! ```

pub mod cli_io;
pub mod dynamics;
pub mod measure;
pub mod network;
pub mod profile;
pub mod scalar;
pub mod sweep;

pub use dynamics::{RunStats, Scheme};
pub use measure::{Histogram, PeakParams};
pub use network::Graph;
pub use profile::ProfileKind;
pub use scalar::Scalar;

/// PRNG for every stream in the engine: xoshiro256++ (period 2^256 - 1),
/// seeded from a `u64` through SplitMix64.
pub type SimRng = rand_xoshiro::Xoshiro256PlusPlus;

pub type Opinion = f64;
pub type MutationProfile = profile::MutationProfile<f64>;
pub type SimConfig = dynamics::SimConfig<f64>;
pub type InitialDistribution = dynamics::InitialDistribution<f64>;
pub type OpinionState = dynamics::OpinionState<f64>;
pub type RunOutput = dynamics::RunOutput<f64>;
pub type PeakSet = measure::PeakSet<f64>;
pub type SweepPlan = sweep::SweepPlan<f64>;
pub type BifurcationMap = sweep::BifurcationMap<f64>;
