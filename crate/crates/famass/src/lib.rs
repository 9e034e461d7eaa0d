//! Model compiler and deterministic simulation runtime for distributed
//! Advanced Planning and Scheduling (APS) systems.
//!
//! The crate takes a textual analysis model of a supply chain — its planning
//! cube of Supply Chain Blocks, the material and informational flows between
//! them, the social structures layered on top, and the abilities of the
//! individual entities — and derives executable multi-agent models from it in
//! three stages:
//!
//! 1. a **domain model** separating structural (material) from dynamic
//!    (informational) links,
//! 2. a **conceptual agent model** applying agentification directives
//!    (merge, split, mediator) to obtain agents grouped into packages,
//! 3. an **operational agent model** assigning agents to decision and
//!    execution societies, wiring responsibility links and interaction
//!    protocols, and synthesizing behavior state machines.
//!
//! The operational model is directly executable by the [`simrt`] engine, a
//! deterministic period-based discrete-event simulation with reproducible
//! pseudo-random demand, and by the [`exper`] module, which expands factorial
//! experiment designs into simulation plans and aggregates KPI statistics.
//! Diagram and report renderings of every stage live in [`emit`].

pub mod deploy;
pub mod emit;
pub mod exper;
pub mod fml;
pub mod metamodel;
pub mod report;
pub mod rng;
pub mod simrt;

/// Integer quantity of material (units of product). Inventories, shipments,
/// and demand are exact integers; only KPIs and costs are floating point.
pub type Qty = i64;

/// Simulation time in whole planning periods.
pub type Period = u64;
