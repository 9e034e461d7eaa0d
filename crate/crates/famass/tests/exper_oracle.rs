//! Cross-checks experiment aggregation against an independent reference.
//!
//! The reference replays the three-echelon demo network's documented timing
//! rules with scalar state — the same recurrence the simulation oracle
//! pins — but draws demand from the per-replication stream and takes the
//! facility's order quantity as a parameter. Aggregated statistics from the
//! experiment harness must match the reference's, replication by
//! replication, for every cell of the plan.

use std::collections::VecDeque;

use famass::deploy::{build_cam, build_domain_model, build_oam, OperationalAgentModel};
use famass::exper::{run_plan, run_plan_parallel, ExperimentPlan};
use famass::fml::model::{Factor, FactorLevel, KpiDecl, KpiMetric};
use famass::fml::parse_fml;
use famass::rng;

const DEMO: &str = include_str!("fixtures/demo.fml");

// Network constants restated from `fixtures/demo.fml`, with the client's
// demand switched to uniform(2, 10).
const DEMAND_LO: i64 = 2;
const DEMAND_HI: i64 = 10;
const C1_RP: i64 = 8;
const C1_RQ: i64 = 24;
const F1_RP: i64 = 20;
const F1_LEAD: u64 = 1;
const V1_LEAD: u64 = 2;

fn uniform_demo() -> OperationalAgentModel {
    let text = DEMO.replace(
        "ability C1.exec sell demand constant 6",
        "ability C1.exec sell demand uniform 2 10",
    );
    let parsed = parse_fml(&text).expect("demo variant parses");
    let dm = build_domain_model(&parsed.model.dpa).expect("domain model");
    let cam = build_cam(&dm, &parsed.model.saoa).expect("conceptual model");
    build_oam(&cam, &parsed.model.saoa, &parsed.model.iaoa).expect("operational model")
}

/// The demand the client faces in one period of one run: a uniform draw
/// from the run's own stream, integerized exactly as documented.
fn demand_at(run_seed: u64, period: u64) -> i64 {
    let stream = rng::stream_seed(run_seed, "demand.C1.exec");
    let u = rng::u01(rng::draw(stream, period));
    let span = (DEMAND_HI - DEMAND_LO + 1) as f64;
    (DEMAND_LO + (u * span) as i64).min(DEMAND_HI)
}

/// Replays the demo's documented timing rules for one run and returns its
/// fill rate. See the simulation oracle for the constant-demand original;
/// this variant draws demand per period and parameterizes the facility's
/// reorder quantity, which the experiment plan varies as a factor.
fn reference_fill_rate(horizon: u64, run_seed: u64, f1_rq: i64) -> f64 {
    let (mut v1, mut f1, mut c1) = (940i64, 40i64, 30i64);
    let mut backorders = 0i64;
    let (mut c1_on_order, mut f1_on_order) = (0i64, 0i64);
    let (mut c1_open, mut f1_open) = (false, false);
    let mut en_route: VecDeque<(u64, i64)> = VecDeque::new();
    let mut f1_queue: VecDeque<i64> = VecDeque::new();
    let mut v1_ship: Vec<(u64, i64)> = Vec::new();
    let mut transit: Vec<(u64, i64, bool)> = Vec::new();
    let (mut on_time, mut demand_total) = (0i64, 0i64);

    for t in 0..horizon {
        for &(arrive, qty, to_client) in &transit {
            if arrive == t {
                if to_client {
                    c1 += qty;
                    c1_on_order -= qty;
                    c1_open = false;
                } else {
                    f1 += qty;
                    f1_on_order -= qty;
                    f1_open = false;
                }
            }
        }
        transit.retain(|&(arrive, ..)| arrive != t);
        while en_route.front().is_some_and(|&(seen, _)| seen == t) {
            let (_, qty) = en_route.pop_front().unwrap();
            f1_queue.push_back(qty);
        }

        let demand = demand_at(run_seed, t);
        let backlog_served = backorders.min(c1);
        c1 -= backlog_served;
        backorders -= backlog_served;
        let served_now = demand.min(c1);
        c1 -= served_now;
        on_time += served_now;
        backorders += demand - served_now;
        demand_total += demand;

        if !c1_open && c1 + c1_on_order <= C1_RP {
            c1_open = true;
            c1_on_order += C1_RQ;
            en_route.push_back((t + 1, C1_RQ));
        }

        while f1_queue.front().is_some_and(|&qty| qty <= f1) {
            let qty = f1_queue.pop_front().unwrap();
            f1 -= qty;
            transit.push((t + F1_LEAD.max(1), qty, true));
        }

        if !f1_open && f1 + f1_on_order <= F1_RP {
            f1_open = true;
            f1_on_order += f1_rq;
            v1_ship.push((t + 3, f1_rq));
        }

        for &(ship_at, qty) in &v1_ship {
            if ship_at == t {
                assert!(v1 >= qty, "vendor stock exhausted at period {t}");
                v1 -= qty;
                transit.push((t + V1_LEAD.max(1), qty, false));
            }
        }
        v1_ship.retain(|&(ship_at, _)| ship_at != t);
    }

    if demand_total == 0 {
        1.0
    } else {
        on_time as f64 / demand_total as f64
    }
}

fn stats(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, min, max, sd)
}

#[test]
fn aggregated_fill_rate_matches_the_reference_per_cell() {
    const HORIZON: u64 = 24;
    const BASE_SEED: u64 = 123;
    const REPLICATIONS: u64 = 10;
    let model = uniform_demo();
    let plan = ExperimentPlan {
        factors: vec![Factor {
            name: "ability.F1.tact.procure.reorder_qty".into(),
            levels: vec![FactorLevel::Number(40.0), FactorLevel::Number(60.0)],
        }],
        uncertainties: vec![],
        kpis: vec![KpiDecl { name: "service".into(), metric: KpiMetric::FillRate }],
        replications: REPLICATIONS,
        base_seed: BASE_SEED,
        horizon: HORIZON,
    };

    let report = run_plan(&model, &plan).expect("plan runs");
    assert_eq!(report.rows.len(), 2);
    for (cell, f1_rq) in [(0u64, 40i64), (1, 60)] {
        let fills: Vec<f64> = (0..REPLICATIONS)
            .map(|r| {
                let seed = rng::scenario_seed(BASE_SEED, cell, r);
                reference_fill_rate(HORIZON, seed, f1_rq)
            })
            .collect();
        let (mean, min, max, sd) = stats(&fills);
        let row = &report.rows[cell as usize];
        assert_eq!(row.cell, cell);
        assert_eq!(row.kpi, "service");
        assert!((row.mean - mean).abs() < 1e-9, "cell {cell}: {} vs {mean}", row.mean);
        assert!((row.min - min).abs() < 1e-9);
        assert!((row.max - max).abs() < 1e-9);
        assert!((row.sd - sd).abs() < 1e-9);
        // Ten stochastic replications should not all coincide.
        assert!(sd > 0.0, "degenerate spread in cell {cell}");
    }

    let parallel = run_plan_parallel(&model, &plan, 6).expect("plan runs");
    assert_eq!(report, parallel);
}
