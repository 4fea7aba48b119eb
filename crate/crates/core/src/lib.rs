//! Interval fault predictability for partially observable discrete event
//! systems.
//!
//! A model ([`DesModel`]) is a finite automaton with observable and
//! unobservable events and an absorbing set of faulty states. The crate
//! answers whether the system is `(i,j)`-predictable, computes the whole
//! predictability frontier, and runs an optimal online predictor over
//! observation streams.
//!
//! ```
//! use ijpred::{analyze, fixtures, ExtNat};
//!
//! let m = fixtures::fig1();
//! let (_, _, frontier) = analyze(&m);
//! assert!(frontier.is_ij_predictable(1, ExtNat::Fin(2)).unwrap().predictable);
//! assert!(!frontier.is_ij_predictable(2, ExtNat::Fin(2)).unwrap().predictable);
//! ```

pub mod belief;
pub mod cli;
pub mod distances;
pub mod dot;
pub mod fixtures;
pub mod format;
pub mod frontier;
pub mod interval;
pub mod model;
pub mod oracle;
pub mod par;
pub mod twin;

pub use belief::{compile_predictor, BeliefAutomaton, BeliefState, PredictError, PredictorSession};
pub use distances::{DistanceTable, DmaxMode};
pub use format::{load_model, parse_model, serialize_model, LoadOptions};
pub use frontier::{analyze, compute_frontier, PredictabilityFrontier, QueryVerdict};
pub use interval::{ExtNat, TimeInterval};
pub use model::{validate, DesModel, EventId, ModelBuilder, StateId};
pub use par::Exec;
pub use twin::{build_twin, build_twin_with, StatePair, TwinOptions, TwinReachability};
