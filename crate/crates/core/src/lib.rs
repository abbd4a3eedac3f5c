//! Wealth-optimal binary patterns on a torus.
//!
//! Each cell plays a prisoner's dilemma against its Moore neighbors (and
//! itself); the pattern's wealth is the shared average payoff. The crate
//! covers the whole pipeline: a genetic algorithm for optimal master
//! patterns, 3x3 template extraction, a probabilistic asynchronous CA driven
//! by those templates, and analyzers and an exhaustive oracle to check the
//! results.
//!
//! Independent runs (experiment batches, oracle chunks) are spread over
//! rayon when the default `parallel` feature is on.

pub mod analysis;
pub mod ca;
pub mod exec;
pub mod experiment;
pub mod ga;
pub mod grid;
pub mod payoff;
pub mod render;
pub mod templates;

pub use analysis::{
    brute_force_oracle, construct_optimal_odd, structure_report, tps_formula_odd, wealth_formula_odd,
    OracleResult, StructureReport,
};
pub use ca::{run_ca, CaConfig, CaStart, CaState, RunResult, Selection};
pub use exec::{derive_seed, rng_from_seed, Execution, SimRng};
pub use experiment::{run_experiment, ExperimentKind, ExperimentSummary};
pub use ga::{run_ga, GaConfig, GaOutcome, Solution};
pub use grid::{Coord, Dihedral, NeighborhoodConfig, Pattern, PatternError, Transform};
pub use payoff::{characteristic, expected_wealth, tps, wealth, Characteristic, PayoffParams};
pub use templates::{builtin_set, extract_templates, RuleVariant, Template, TemplateSet};
