//! Deterministic period-based simulation of an operational agent model.
//!
//! The runtime executes the agent society one period at a time: deliver the
//! messages due, activate every agent in ascending name order, audit the
//! material invariants, accumulate KPIs, advance the clock. All state is
//! integral; equal inputs produce byte-equal reports. The execution rules
//! are specified in `docs/simulation.md`.

mod demand;
mod engine;
mod overrides;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fml::model::{DemandSpec, FactorLevel, KpiMetric, StockKind};
use crate::metamodel::AgentName;
use crate::{Period, Qty};

pub use engine::{run, run_full};
pub use overrides::apply_overrides;

/// Per-unit, per-period cost rates feeding the `total_cost` metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub holding: f64,
    pub backorder: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            holding: 1.0,
            backorder: 5.0,
        }
    }
}

/// Everything a single simulation run needs besides the model itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimConfig {
    /// Number of periods to run; must be at least 1.
    pub horizon: Period,
    /// Run seed; every stochastic stream derives from it.
    pub seed: u64,
    /// Demand specs replacing the declared ones, by selling agent.
    pub demand: BTreeMap<AgentName, DemandSpec>,
    /// `path = level` assignments applied to the model before the run.
    pub overrides: BTreeMap<String, FactorLevel>,
    pub costs: CostParams,
    /// Record a [`TraceRow`] per event; off by default.
    pub collect_trace: bool,
}

/// Why a run could not start.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InitError {
    #[error("simulation horizon must be at least one period")]
    ZeroHorizon,
    #[error("override `{path}` cannot be applied: {reason}")]
    BadOverride { path: String, reason: String },
    #[error("agent `{agent}` has a procure ability without resolved reorder parameters")]
    ProcureUnresolved { agent: AgentName },
    #[error("agent `{agent}` holds no {kind} stock to replenish")]
    MissingInventory { agent: AgentName, kind: StockKind },
    #[error("agent `{agent}` has a procure ability but no needs channel to order over")]
    NoRoute { agent: AgentName },
    #[error("agent `{agent}` would receive orders but can neither ship nor relay them")]
    NoShipper { agent: AgentName },
    #[error("agent `{agent}` starts with negative {kind} stock")]
    NegativeInitialStock { agent: AgentName, kind: StockKind },
}

/// The five built-in metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiReport {
    pub metrics: BTreeMap<KpiMetric, f64>,
}

impl KpiReport {
    /// Every metric is always present.
    pub fn get(&self, metric: KpiMetric) -> f64 {
        self.metrics[&metric]
    }

    /// Renders the report as a two-column CSV, metrics in name order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kpi,value\n");
        for metric in KpiMetric::ALL {
            out.push_str(&format!("{},{}\n", metric, self.get(metric)));
        }
        out
    }
}

/// One logged simulation event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub period: Period,
    pub agent: String,
    pub action: String,
    pub detail: String,
}

/// Renders trace rows as CSV. Actions and details never contain commas.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("period,agent,action,detail\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.period, row.agent, row.action, row.detail
        ));
    }
    out
}

/// End-of-period state of the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodSnapshot {
    pub period: Period,
    /// Stock levels of every stock-holding agent.
    pub on_hand: BTreeMap<AgentName, BTreeMap<StockKind, Qty>>,
    /// Outstanding backorders of every selling agent.
    pub backorders: BTreeMap<AgentName, Qty>,
    /// Units shipped but not yet arrived.
    pub in_transit: Qty,
}

/// Full result of one run: the KPI report plus everything observed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub report: KpiReport,
    /// Event log; empty unless [`SimConfig::collect_trace`] is set.
    pub trace: Vec<TraceRow>,
    /// One snapshot per period, always collected.
    pub history: Vec<PeriodSnapshot>,
}
