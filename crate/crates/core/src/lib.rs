//! Design-space exploration core for heterogeneous CPU/GPU/LLC manycore
//! chips stacked on several tiers with a small-world network-on-chip.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO: the chip
//! model, traffic profiles, deterministic routing, the latency / link-load /
//! thermal objectives, Pareto archives with exact hypervolume, the
//! learning-guided local search (MOO-STAGE), the AMOSA baseline, and the
//! final design selector. File formats and the command line live in the
//! `hem3d` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arch;
pub mod objectives;
pub mod optimizer;
pub mod pareto;
pub mod routing;
pub mod selector;
pub mod traffic;

mod math;

pub use arch::{Design, GridSpec, Slot, TechKind, Technology, TileKind, TileMix, Violation};
pub use objectives::{EvalContext, Mode, ObjectiveVector};
pub use pareto::{dominates, hypervolume, Insertion, ParetoArchive};
pub use routing::{compute_routes, RoutingTable};
pub use traffic::{PowerProfile, TrafficProfile};
