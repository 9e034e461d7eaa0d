//! Experimental plans: full-factorial expansion of the analysis model's
//! factors, replication over derived seeds, nuisance-uncertainty sampling,
//! and KPI aggregation into a deterministic report.
//!
//! A plan is the executable form of the analysis model's experimental
//! aspects. Factors become scenario cells (the cartesian product of their
//! levels, last factor varying fastest); each cell runs `replications`
//! times, and the seed of replication `r` in cell `c` is derived
//! arithmetically from the base seed so results never depend on execution
//! order. Uncertainties are not factors: they are nuisance inputs sampled
//! once per run from the run's own seed and applied through the same
//! override paths factors use.

use std::collections::BTreeMap;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deploy::OperationalAgentModel;
use crate::fml::model::{
    Factor, FactorLevel, GpaSection, KpiDecl, KpiMetric, Uncertainty, UncertaintyDist,
};
use crate::rng;
use crate::simrt::{self, InitError, KpiReport, SimConfig};
use crate::Period;

/// An executable experiment: the factor grid, the nuisance inputs, the KPIs
/// to report, and the run parameters shared by every scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub factors: Vec<Factor>,
    pub uncertainties: Vec<Uncertainty>,
    pub kpis: Vec<KpiDecl>,
    pub replications: u64,
    pub base_seed: u64,
    pub horizon: Period,
}

impl ExperimentPlan {
    /// Builds a plan from the analysis model's experimental aspects. A model
    /// that declares no KPIs reports every metric under its canonical name.
    pub fn from_gpa(gpa: &GpaSection, horizon: Period, base_seed: u64, replications: u64) -> Self {
        let kpis = if gpa.kpis.is_empty() {
            KpiMetric::ALL
                .into_iter()
                .map(|metric| KpiDecl { name: metric.as_str().to_string(), metric })
                .collect()
        } else {
            gpa.kpis.clone()
        };
        ExperimentPlan {
            factors: gpa.factors.clone(),
            uncertainties: gpa.uncertainties.clone(),
            kpis,
            replications,
            base_seed,
            horizon,
        }
    }

    /// Number of scenario cells: the cartesian product of the factor levels.
    /// A plan without factors has exactly one (empty) cell.
    pub fn cell_count(&self) -> u64 {
        self.factors
            .iter()
            .map(|f| f.levels.len() as u64)
            .product()
    }

    /// The factor assignments of one cell, in declaration order. Cells are
    /// numbered row-major: the last factor varies fastest.
    pub fn assignments(&self, cell: u64) -> Vec<(String, FactorLevel)> {
        let mut idx = cell;
        let mut out: Vec<(String, FactorLevel)> = Vec::with_capacity(self.factors.len());
        for factor in self.factors.iter().rev() {
            let len = factor.levels.len() as u64;
            out.push((
                factor.name.clone(),
                factor.levels[(idx % len) as usize].clone(),
            ));
            idx /= len;
        }
        out.reverse();
        out
    }
}

/// One runnable scenario: its coordinates, the factor assignments behind
/// them, and the fully resolved simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cell: u64,
    pub replication: u64,
    pub assignments: Vec<(String, FactorLevel)>,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("an experiment needs at least one replication")]
    NoReplications,
    #[error("factor `{name}` has no levels")]
    EmptyFactor { name: String },
    #[error("factor `{path}` is declared more than once")]
    DuplicateFactor { path: String },
    #[error("`{path}` is both a factor and an uncertainty")]
    PathCollision { path: String },
    #[error("factor `{path}` level {level} does not resolve: {reason}")]
    BadLevel {
        path: String,
        level: String,
        reason: String,
    },
    #[error("cell {cell} replication {replication} failed: {source}")]
    RunFailed {
        cell: u64,
        replication: u64,
        #[source]
        source: InitError,
    },
}

/// One aggregated statistic: a KPI's spread across the replications of one
/// cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub cell: u64,
    pub assignments: Vec<(String, FactorLevel)>,
    pub kpi: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub sd: f64,
}

/// The experiment's result: one row per (cell, KPI), cells ascending,
/// KPIs in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Renders the report as CSV. The factor-assignments column joins
    /// `path=level` pairs with `;`, in factor declaration order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,factor_assignments,kpi,mean,min,max,sd\n");
        for row in &self.rows {
            let assigns = row
                .assignments
                .iter()
                .map(|(path, level)| format!("{path}={level}"))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.cell,
                csv_field(&assigns),
                csv_field(&row.kpi),
                row.mean,
                row.min,
                row.max,
                row.sd,
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Checks the plan's shape and resolves every factor level against the
/// model, so a bad level is reported before anything runs.
fn validate(model: &OperationalAgentModel, plan: &ExperimentPlan) -> Result<(), PlanError> {
    if plan.replications == 0 {
        return Err(PlanError::NoReplications);
    }
    for (i, factor) in plan.factors.iter().enumerate() {
        if factor.levels.is_empty() {
            return Err(PlanError::EmptyFactor { name: factor.name.clone() });
        }
        if plan.factors[..i].iter().any(|f| f.name == factor.name) {
            return Err(PlanError::DuplicateFactor { path: factor.name.clone() });
        }
        if plan.uncertainties.iter().any(|u| u.name == factor.name) {
            return Err(PlanError::PathCollision { path: factor.name.clone() });
        }
        for level in &factor.levels {
            let mut probe_model = model.clone();
            let mut probe_cfg = SimConfig {
                horizon: plan.horizon,
                ..SimConfig::default()
            };
            probe_cfg
                .overrides
                .insert(factor.name.clone(), level.clone());
            if let Err(err) = simrt::apply_overrides(&mut probe_model, &mut probe_cfg) {
                let reason = match err {
                    InitError::BadOverride { reason, .. } => reason,
                    other => other.to_string(),
                };
                return Err(PlanError::BadLevel {
                    path: factor.name.clone(),
                    level: level.to_string(),
                    reason,
                });
            }
        }
    }
    Ok(())
}

/// Samples one run's nuisance inputs from its own seed. Distribution-free
/// uncertainties are declarative only and sample nothing.
fn sample_uncertainties(plan: &ExperimentPlan, run_seed: u64) -> BTreeMap<String, FactorLevel> {
    let mut out = BTreeMap::new();
    for u in &plan.uncertainties {
        let stream = rng::stream_seed(run_seed, &format!("uncertainty.{}", u.name));
        let value = match u.distribution {
            UncertaintyDist::None => continue,
            UncertaintyDist::Uniform { lo, hi } => lo + rng::u01(rng::draw(stream, 0)) * (hi - lo),
            UncertaintyDist::Normal { mean, sd } => {
                let u1 = 1.0 - rng::u01(rng::draw(stream, 0));
                let u2 = rng::u01(rng::draw(stream, 1));
                mean + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            }
        };
        out.insert(u.name.clone(), FactorLevel::Number(value));
    }
    out
}

/// Expands a plan into its scenarios: cells ascending, replications within
/// each cell. Scenario `(c, r)` always gets the same seed and overrides, so
/// any run is individually reproducible from its coordinates.
pub fn expand(
    model: &OperationalAgentModel,
    plan: &ExperimentPlan,
) -> Result<Vec<Scenario>, PlanError> {
    validate(model, plan)?;
    let mut scenarios = Vec::with_capacity((plan.cell_count() * plan.replications) as usize);
    for cell in 0..plan.cell_count() {
        let assignments = plan.assignments(cell);
        for replication in 0..plan.replications {
            let seed = rng::scenario_seed(plan.base_seed, cell, replication);
            let mut overrides: BTreeMap<String, FactorLevel> = assignments
                .iter()
                .map(|(path, level)| (path.clone(), level.clone()))
                .collect();
            overrides.extend(sample_uncertainties(plan, seed));
            scenarios.push(Scenario {
                cell,
                replication,
                assignments: assignments.clone(),
                config: SimConfig {
                    horizon: plan.horizon,
                    seed,
                    overrides,
                    ..SimConfig::default()
                },
            });
        }
    }
    Ok(scenarios)
}

/// Runs every scenario on the calling thread and aggregates.
pub fn run_plan(
    model: &OperationalAgentModel,
    plan: &ExperimentPlan,
) -> Result<ExperimentReport, PlanError> {
    let scenarios = expand(model, plan)?;
    let mut reports = Vec::with_capacity(scenarios.len());
    for scenario in &scenarios {
        let report = simrt::run(model, &scenario.config).map_err(|source| {
            PlanError::RunFailed {
                cell: scenario.cell,
                replication: scenario.replication,
                source,
            }
        })?;
        reports.push(report);
    }
    Ok(aggregate(plan, &scenarios, &reports))
}

/// Runs the scenarios on up to `workers` threads. Results are aggregated in
/// cell-then-replication order whatever the completion order, so the report
/// is identical to [`run_plan`]'s.
pub fn run_plan_parallel(
    model: &OperationalAgentModel,
    plan: &ExperimentPlan,
    workers: usize,
) -> Result<ExperimentReport, PlanError> {
    let scenarios = expand(model, plan)?;
    if scenarios.is_empty() {
        return Ok(aggregate(plan, &scenarios, &[]));
    }
    let mut results: Vec<Option<Result<KpiReport, InitError>>> = vec![None; scenarios.len()];
    let workers = workers.max(1).min(scenarios.len());
    let chunk = scenarios.len().div_ceil(workers);
    thread::scope(|scope| {
        for (scenario_chunk, result_chunk) in
            scenarios.chunks(chunk).zip(results.chunks_mut(chunk))
        {
            scope.spawn(move || {
                for (scenario, slot) in scenario_chunk.iter().zip(result_chunk.iter_mut()) {
                    *slot = Some(simrt::run(model, &scenario.config));
                }
            });
        }
    });
    let mut reports = Vec::with_capacity(scenarios.len());
    for (scenario, slot) in scenarios.iter().zip(results) {
        match slot.expect("every scenario was run") {
            Ok(report) => reports.push(report),
            Err(source) => {
                return Err(PlanError::RunFailed {
                    cell: scenario.cell,
                    replication: scenario.replication,
                    source,
                })
            }
        }
    }
    Ok(aggregate(plan, &scenarios, &reports))
}

/// Folds per-run KPI reports into per-cell statistics: mean, min, max, and
/// sample standard deviation (zero for a single replication).
fn aggregate(
    plan: &ExperimentPlan,
    scenarios: &[Scenario],
    reports: &[KpiReport],
) -> ExperimentReport {
    let reps = plan.replications as usize;
    let mut rows = Vec::new();
    for (cell_idx, chunk) in reports.chunks(reps).enumerate() {
        let assignments = scenarios[cell_idx * reps].assignments.clone();
        for decl in &plan.kpis {
            let values: Vec<f64> = chunk.iter().map(|r| r.get(decl.metric)).collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sd = if values.len() > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                var.sqrt()
            } else {
                0.0
            };
            rows.push(ReportRow {
                cell: cell_idx as u64,
                assignments: assignments.clone(),
                kpi: decl.name.clone(),
                mean,
                min,
                max,
                sd,
            });
        }
    }
    ExperimentReport { rows }
}
