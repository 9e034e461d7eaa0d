//! Cross-checks the simulation engine against an independent reference
//! implementation of the three-echelon demo network.
//!
//! The reference below re-derives the expected trajectory from the
//! documented timing rules using nothing but scalar state and explicit
//! event offsets — no message queue, no agent abstraction — so an engine
//! defect cannot hide in shared code. The first ten periods and the
//! horizon-24 KPIs are additionally pinned to hand-computed values.

use std::collections::VecDeque;

use famass::deploy::{build_cam, build_domain_model, build_oam, OperationalAgentModel};
use famass::fml::model::{KpiMetric, StockKind};
use famass::fml::parse_fml;
use famass::metamodel::AgentName;
use famass::simrt::{run, run_full, KpiReport, SimConfig};

const DEMO: &str = include_str!("fixtures/demo.fml");

// Network constants restated from `fixtures/demo.fml`.
const V1_START: i64 = 940;
const F1_START: i64 = 40;
const C1_START: i64 = 30;
const DEMAND: i64 = 6;
const C1_RP: i64 = 8;
const C1_RQ: i64 = 24;
const F1_RP: i64 = 20;
const F1_RQ: i64 = 40;
const F1_LEAD: u64 = 1;
const V1_LEAD: u64 = 2;

/// End-of-period state of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Row {
    v1: i64,
    f1: i64,
    c1: i64,
    backorders: i64,
    in_transit: i64,
}

struct Reference {
    rows: Vec<Row>,
    fill_rate: f64,
    avg_inventory: f64,
    backorder_count: f64,
    total_cost: f64,
    cycle_time: f64,
}

/// Replays the documented timing rules directly. Client orders reach the
/// facility one period after issue and ship FIFO all-or-nothing with one
/// period of transit. Facility orders are negotiated: need at issue+1,
/// offer back at issue+2, acceptance at the vendor at issue+3, shipped the
/// same period with two periods of transit, arriving at issue+5.
fn reference(horizon: u64) -> Reference {
    let (mut v1, mut f1, mut c1) = (V1_START, F1_START, C1_START);
    let mut backorders = 0i64;
    let (mut c1_on_order, mut f1_on_order) = (0i64, 0i64);
    let (mut c1_open, mut f1_open) = (false, false);
    // Client orders the facility has not yet seen: (visible_at, qty, issued).
    let mut en_route: VecDeque<(u64, i64, u64)> = VecDeque::new();
    // Orders waiting in the facility's ship queue: (qty, issued).
    let mut f1_queue: VecDeque<(i64, u64)> = VecDeque::new();
    // Accepted facility orders the vendor will ship: (ship_at, qty, issued).
    let mut v1_ship: Vec<(u64, i64, u64)> = Vec::new();
    // Material underway: (arrive_at, qty, issued, bound_for_client).
    let mut transit: Vec<(u64, i64, u64, bool)> = Vec::new();

    let mut rows = Vec::new();
    let (mut on_time, mut demand_total, mut served_total) = (0i64, 0i64, 0i64);
    let (mut on_hand_sum, mut backorder_sum) = (0i64, 0i64);
    let mut cycles: Vec<u64> = Vec::new();

    for t in 0..horizon {
        // Arrivals.
        for &(arrive, qty, issued, to_client) in &transit {
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
                cycles.push(t - issued);
            }
        }
        transit.retain(|&(arrive, ..)| arrive != t);
        while en_route.front().is_some_and(|&(seen, ..)| seen == t) {
            let (_, qty, issued) = en_route.pop_front().unwrap();
            f1_queue.push_back((qty, issued));
        }

        // The client sells: backorders first, then the day's demand.
        let backlog_served = backorders.min(c1);
        c1 -= backlog_served;
        backorders -= backlog_served;
        served_total += backlog_served;
        let served_now = DEMAND.min(c1);
        c1 -= served_now;
        on_time += served_now;
        served_total += served_now;
        backorders += DEMAND - served_now;
        demand_total += DEMAND;

        // The client's planner reorders at or below the reorder point.
        if !c1_open && c1 + c1_on_order <= C1_RP {
            c1_open = true;
            c1_on_order += C1_RQ;
            en_route.push_back((t + 1, C1_RQ, t));
        }

        // The facility ships FIFO, all or nothing.
        while f1_queue.front().is_some_and(|&(qty, _)| qty <= f1) {
            let (qty, issued) = f1_queue.pop_front().unwrap();
            f1 -= qty;
            transit.push((t + F1_LEAD.max(1), qty, issued, true));
        }

        // The facility's planner reorders through the negotiation protocol.
        if !f1_open && f1 + f1_on_order <= F1_RP {
            f1_open = true;
            f1_on_order += F1_RQ;
            v1_ship.push((t + 3, F1_RQ, t));
        }

        // The vendor ships accepted orders; its stock never runs out here.
        for &(ship_at, qty, _) in &v1_ship {
            if ship_at == t {
                assert!(v1 >= qty, "vendor stock exhausted at period {t}");
                v1 -= qty;
            }
        }
        for &(ship_at, qty, issued) in &v1_ship {
            if ship_at == t {
                transit.push((t + V1_LEAD.max(1), qty, issued, false));
            }
        }
        v1_ship.retain(|&(ship_at, ..)| ship_at != t);

        // End-of-period accounting and conservation.
        let in_transit: i64 = transit.iter().map(|&(_, qty, ..)| qty).sum();
        assert_eq!(
            v1 + f1 + c1 + in_transit + served_total,
            V1_START + F1_START + C1_START,
            "conservation broken at period {t}",
        );
        on_hand_sum += v1 + f1 + c1;
        backorder_sum += backorders;
        rows.push(Row { v1, f1, c1, backorders, in_transit });
    }

    Reference {
        rows,
        fill_rate: if demand_total == 0 {
            1.0
        } else {
            on_time as f64 / demand_total as f64
        },
        avg_inventory: on_hand_sum as f64 / horizon as f64,
        backorder_count: backorders as f64,
        total_cost: on_hand_sum as f64 + 5.0 * backorder_sum as f64,
        cycle_time: if cycles.is_empty() {
            0.0
        } else {
            cycles.iter().sum::<u64>() as f64 / cycles.len() as f64
        },
    }
}

#[test]
fn hand_computed_prefix_pins_the_reference() {
    let r = reference(24);
    let expect = [
        (940, 40, 24, 0, 0),
        (940, 40, 18, 0, 0),
        (940, 40, 12, 0, 0),
        (940, 40, 6, 0, 0),
        (940, 16, 0, 0, 24),
        (940, 16, 18, 0, 0),
        (940, 16, 12, 0, 0),
        (900, 16, 6, 0, 40),
        (900, 16, 0, 0, 40),
        (900, 32, 0, 6, 24),
    ];
    for (t, &(v1, f1, c1, backorders, in_transit)) in expect.iter().enumerate() {
        let want = Row { v1, f1, c1, backorders, in_transit };
        assert_eq!(r.rows[t], want, "period {t}");
    }
    assert_eq!(r.fill_rate, 132.0 / 144.0);
    assert_eq!(r.avg_inventory, 22132.0 / 24.0);
    assert_eq!(r.backorder_count, 0.0);
    assert_eq!(r.total_cost, 22192.0);
    assert_eq!(r.cycle_time, 22.0 / 7.0);
}

fn demo_oam() -> OperationalAgentModel {
    let parsed = parse_fml(DEMO).expect("demo fixture parses");
    let dm = build_domain_model(&parsed.model.dpa).expect("domain model");
    let cam = build_cam(&dm, &parsed.model.saoa).expect("conceptual model");
    build_oam(&cam, &parsed.model.saoa, &parsed.model.iaoa).expect("operational model")
}

fn engine_rows(horizon: u64, seed: u64) -> (Vec<Row>, KpiReport) {
    let oam = demo_oam();
    let cfg = SimConfig {
        horizon,
        seed,
        ..SimConfig::default()
    };
    let outcome = run_full(&oam, &cfg).expect("simulation runs");
    let stock = |snap: &famass::simrt::PeriodSnapshot, agent: &str| {
        snap.on_hand[&AgentName::from(agent)][&StockKind::FinalProduct]
    };
    let rows = outcome
        .history
        .iter()
        .map(|snap| Row {
            v1: stock(snap, "V1.exec"),
            f1: stock(snap, "F1.exec"),
            c1: stock(snap, "C1.exec"),
            backorders: snap.backorders[&AgentName::from("C1.exec")],
            in_transit: snap.in_transit,
        })
        .collect();
    (rows, outcome.report)
}

#[test]
fn engine_matches_reference_trajectory_and_kpis() {
    for horizon in [24, 120] {
        let r = reference(horizon);
        let (rows, report) = engine_rows(horizon, 7);
        assert_eq!(rows.len(), r.rows.len());
        for (t, (got, want)) in rows.iter().zip(&r.rows).enumerate() {
            assert_eq!(got, want, "horizon {horizon}, period {t}");
        }
        assert_eq!(report.get(KpiMetric::FillRate), r.fill_rate, "horizon {horizon}");
        assert_eq!(report.get(KpiMetric::AvgInventory), r.avg_inventory, "horizon {horizon}");
        assert_eq!(report.get(KpiMetric::BackorderCount), r.backorder_count, "horizon {horizon}");
        assert_eq!(report.get(KpiMetric::TotalCost), r.total_cost, "horizon {horizon}");
        assert_eq!(report.get(KpiMetric::CycleTime), r.cycle_time, "horizon {horizon}");
    }
}

#[test]
fn constant_demand_makes_the_run_seed_independent() {
    let (rows_a, report_a) = engine_rows(24, 1);
    let (rows_b, report_b) = engine_rows(24, 998_877);
    assert_eq!(rows_a, rows_b);
    assert_eq!(report_a, report_b);
}

#[test]
fn summary_run_agrees_with_the_full_outcome() {
    let oam = demo_oam();
    let cfg = SimConfig {
        horizon: 24,
        seed: 7,
        ..SimConfig::default()
    };
    let report = run(&oam, &cfg).expect("simulation runs");
    let outcome = run_full(&oam, &cfg).expect("simulation runs");
    assert_eq!(report, outcome.report);
}
