//! Deterministic discrete-event simulation of a body area network.
//!
//! A run floods a route beacon out from the sink to build a collection
//! tree, then relays every handshake and data frame hop by hop along that
//! tree. Relays forward bytes untouched and never decrypt. Time is simulated
//! milliseconds; ties are broken by scheduling order, so a run is a pure
//! function of its [`Scenario`].

mod engine;
mod routing;
mod scenario;
mod topology;
mod trace;

pub use engine::{
    run, run_with, Attacker, HopAction, HopView, Injection, SimError, Tap, TapResponse,
};
pub use routing::{build_routes, Route, RouteError, RoutingTable};
pub use scenario::{ParamSpec, RetrySpec, Scenario, ScenarioError, Traffic, PRESETS};
pub use topology::{Link, NodeDesc, Topology, DEFAULT_DELAY_MS};
pub use trace::{DropReason, FrameId, Record, Role, SecretKind, TapAction, Trace, TraceSummary};
