//! Simulator for iterative liquid deliberation.
//!
//! Agents hold indivisible voting-power units that lose a fixed fraction of
//! their value whenever their chain of custody changes. Each iteration
//! agents delegate, the most powerful agents form a committee, committee
//! members propose budgeted corrections to a shared proposal, and the rest
//! of society ratifies them by strict majority. Every decision lands in a
//! JSONL trace.
//!
//! ```
//! use liquid_deliberation::{engine, Scenario, ScenarioConfig};
//!
//! let scenario = Scenario::from_config(&ScenarioConfig::demo()).unwrap();
//! let outcome = engine::run(&scenario).unwrap();
//! println!("stopped at {} ({})", outcome.terminal_iteration, outcome.stop_reason);
//! ```

pub mod analysis;
pub mod election;
pub mod engine;
pub mod ledger;
pub mod preference;
pub mod proposal;
pub mod ratio;
pub mod scenario;
pub mod strategies;
pub mod trace;

pub use analysis::{batch, gini, summarize, BatchTable, RunSummary};
pub use election::{select_committee, Committee};
pub use engine::{check_stop, run, Engine, EngineError, RunOutcome};
pub use ledger::{AgentId, Dilution, Ledger, UnitId};
pub use preference::{ratify, vote, Distance, Opinion};
pub use proposal::{Correction, CorrectionId, CorrectionSet, Metric, Proposal};
pub use scenario::{load_config, ConfigError, Scenario, ScenarioConfig};
pub use strategies::{Strategy, StrategyKind, StrategySpec};
pub use trace::{StopReason, Trace, TraceEvent};
