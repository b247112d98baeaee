//! Routing toolkit for inspecting water distribution networks: technicians
//! visit demand nodes, and wells additionally require fetching a key from a
//! key center beforehand and returning it afterwards.
//!
//! * [`instance`], [`solution`], [`io`]: data model, cost, validation, files.
//! * [`generator`]: seeded instance generation and the benchmark grids.
//! * [`ils`]: the iterated local search solver.
//! * [`exact`]: exhaustive enumeration for tiny instances.
//! * [`milp`]: time-, flow- and node-based MILP formulations with LP/MPS
//!   output and assignment checking.

pub mod exact;
pub mod generator;
pub mod ils;
pub mod instance;
pub mod io;
pub mod milp;
pub mod rng;
pub mod solution;

pub use instance::{Instance, InstanceError, NodeKind, PhysicalNode, Site, TravelSource};
pub use solution::{canonical_hash, route_duration, solution_cost, validate, Route, Solution, Violation, Visit};
