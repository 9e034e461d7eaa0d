//! The discrete-event engine: message queue, agent activation, ability
//! execution, protocol handling, invariant audit, and KPI accumulation.
//!
//! The execution contract lives in `docs/simulation.md`; the comments here
//! only note where the code realises one of its rules.

use std::collections::{BTreeMap, VecDeque};
use std::mem;

use crate::deploy::{AgentSpec, KnowledgeVar, OperationalAgentModel, Performative, ProtocolSpec};
use crate::fml::model::{
    Ability, AbilityKind, DemandSpec, InfoType, KpiMetric, MonitoredQuantity, ProtocolType,
    StockKind,
};
use crate::metamodel::AgentName;
use crate::rng;
use crate::{Period, Qty};

use super::demand::demand_for;
use super::{
    apply_overrides, CostParams, InitError, KpiReport, PeriodSnapshot, SimConfig, SimOutcome,
    TraceRow,
};

/// Ability execution order within one activation: knowledge first, demand
/// and production next, replenishment decisions after them, shipping last.
const ACTIVATION_ORDER: [AbilityKind; 6] = [
    AbilityKind::MonitorInventory,
    AbilityKind::Sell,
    AbilityKind::PlanProduction,
    AbilityKind::Dispatch,
    AbilityKind::Procure,
    AbilityKind::Ship,
];

/// Stock preference for shipping and selling: finished goods first.
const SHIP_PREFERENCE: [StockKind; 3] = [
    StockKind::FinalProduct,
    StockKind::RawMaterial,
    StockKind::Wip,
];

type OrderId = u64;

#[derive(Debug, Clone)]
struct Message {
    sent: Period,
    from: AgentName,
    to: AgentName,
    performative: Performative,
    order: OrderId,
    qty: Qty,
    kind: StockKind,
    /// Agent whose stock the ordered material replenishes.
    destination: AgentName,
    price: f64,
    protocol: Option<String>,
    /// Arbitration only: the responder an accept submitted to the mediator
    /// is aimed at. Cleared when the mediator forwards the accept.
    regarding: Option<AgentName>,
}

/// How a procuring agent's orders leave the agent.
#[derive(Debug, Clone)]
enum Route {
    Protocol(String),
    Direct(AgentName),
}

#[derive(Debug)]
struct OpenOrder {
    orderer: AgentName,
    destination: AgentName,
    kind: StockKind,
    qty: Qty,
    /// Period of the first issue; re-issues keep it, so cycle time always
    /// measures from the original decision.
    issued: Period,
    /// Period the orderer evaluates offers; `None` outside a decision
    /// window (direct routes never open one).
    decide_at: Option<Period>,
    offers: Vec<(f64, AgentName)>,
}

#[derive(Debug, Clone)]
struct ShipTask {
    order: OrderId,
    qty: Qty,
    kind: StockKind,
    destination: AgentName,
}

#[derive(Debug, Default)]
struct AgentState {
    stocks: BTreeMap<StockKind, Qty>,
    backorders: Qty,
    on_order: Qty,
    open_order: Option<OrderId>,
    ship_queue: VecDeque<ShipTask>,
    plan_queue: VecDeque<Qty>,
    /// Released lots keyed by the period they convert to finished goods.
    wip_done: BTreeMap<Period, Qty>,
    inbox: Vec<Message>,
}

/// Per-agent routing data resolved once at initialisation.
#[derive(Debug, Default)]
struct AgentInfo {
    route: Option<Route>,
    /// Demand spec and stream seed for selling agents.
    demand: Option<(DemandSpec, u64)>,
    /// Ship-capable execution agent in the same package, for agents that
    /// take orders without a ship ability of their own.
    relay: Option<AgentName>,
}

struct Sim<'m> {
    model: &'m OperationalAgentModel,
    costs: CostParams,
    collect_trace: bool,
    horizon: Period,
    clock: Period,
    seq: u64,
    queue: BTreeMap<(Period, u64), Message>,
    agents: BTreeMap<AgentName, AgentState>,
    info: BTreeMap<AgentName, AgentInfo>,
    orders: BTreeMap<OrderId, OpenOrder>,
    next_order: OrderId,
    initial_total: Qty,
    served_total: Qty,
    on_time: Qty,
    demand_total: Qty,
    on_hand_sum: Qty,
    backorder_sum: Qty,
    cycle_sum: u64,
    cycle_count: u64,
    trace: Vec<TraceRow>,
    history: Vec<PeriodSnapshot>,
}

/// Runs the model to completion and returns the KPI report.
pub fn run(model: &OperationalAgentModel, cfg: &SimConfig) -> Result<KpiReport, InitError> {
    run_full(model, cfg).map(|outcome| outcome.report)
}

/// Runs the model to completion and returns the report, the per-period
/// history, and (when enabled) the event trace.
pub fn run_full(model: &OperationalAgentModel, cfg: &SimConfig) -> Result<SimOutcome, InitError> {
    let mut model = model.clone();
    let mut cfg = cfg.clone();
    apply_overrides(&mut model, &mut cfg)?;
    let mut sim = Sim::init(&model, &cfg)?;
    for _ in 0..sim.horizon {
        sim.step();
    }
    Ok(sim.finish())
}

fn protocol_named<'a>(model: &'a OperationalAgentModel, name: &str) -> &'a ProtocolSpec {
    model
        .protocols
        .iter()
        .find(|p| p.name == name)
        .expect("routes and messages name existing protocols")
}

/// Protocol types that carry ordering semantics; the rest only relay
/// informs and cannot route procurement.
fn orders_over(ty: ProtocolType) -> bool {
    matches!(
        ty,
        ProtocolType::Coordination | ProtocolType::Negotiation | ProtocolType::Arbitration
    )
}

fn has_offer_step(p: &ProtocolSpec) -> bool {
    p.sequence
        .iter()
        .any(|step| step.performatives.contains(&Performative::Offer))
}

/// Resolves how a procuring agent's orders travel: the smallest-named
/// ordering protocol the agent initiates a bound needs channel in, else its
/// smallest unbound outgoing needs channel.
fn route_for(model: &OperationalAgentModel, spec: &AgentSpec) -> Option<Route> {
    let by_protocol = model
        .protocols
        .iter()
        .filter(|p| {
            orders_over(p.protocol_type)
                && p.initiators.contains(&spec.name)
                && p.bound
                    .iter()
                    .any(|ch| ch.from == spec.name && ch.info_type == InfoType::NeedsExpression)
        })
        .map(|p| p.name.clone())
        .min();
    if let Some(name) = by_protocol {
        return Some(Route::Protocol(name));
    }
    model
        .unbound_channels
        .iter()
        .filter(|ch| ch.from == spec.name && ch.info_type == InfoType::NeedsExpression)
        .map(|ch| ch.to.clone())
        .min()
        .map(Route::Direct)
}

impl<'m> Sim<'m> {
    fn init(model: &'m OperationalAgentModel, cfg: &SimConfig) -> Result<Self, InitError> {
        if cfg.horizon == 0 {
            return Err(InitError::ZeroHorizon);
        }

        let mut agents: BTreeMap<AgentName, AgentState> = BTreeMap::new();
        let mut info: BTreeMap<AgentName, AgentInfo> = BTreeMap::new();
        for spec in model.agents() {
            let mut state = AgentState::default();
            for var in &spec.knowledge {
                if let KnowledgeVar::Inventory { kind, initial, .. } = var {
                    if *initial < 0 {
                        return Err(InitError::NegativeInitialStock {
                            agent: spec.name.clone(),
                            kind: *kind,
                        });
                    }
                    *state.stocks.entry(*kind).or_insert(0) += *initial;
                }
            }
            agents.insert(spec.name.clone(), state);
            info.insert(spec.name.clone(), AgentInfo::default());
        }

        for agent in cfg.demand.keys() {
            let sells = model
                .agent(agent)
                .is_some_and(|a| a.has_ability(AbilityKind::Sell));
            if !sells {
                return Err(InitError::BadOverride {
                    path: format!("demand.{agent}"),
                    reason: "no selling agent by that name".into(),
                });
            }
        }
        for spec in model.agents() {
            if let Some(Ability::Sell { demand }) = spec.ability(AbilityKind::Sell) {
                let chosen = cfg.demand.get(&spec.name).unwrap_or(demand).clone();
                let stream = rng::stream_seed(cfg.seed, &format!("demand.{}", spec.name));
                info.get_mut(&spec.name).unwrap().demand = Some((chosen, stream));
            }
        }

        for spec in model.agents() {
            if spec.has_ability(AbilityKind::Ship) {
                continue;
            }
            let relay = model
                .execution_society
                .iter()
                .filter(|e| {
                    e.package.is_some()
                        && e.package == spec.package
                        && e.has_ability(AbilityKind::Ship)
                })
                .map(|e| e.name.clone())
                .min();
            info.get_mut(&spec.name).unwrap().relay = relay;
        }

        for spec in model.agents() {
            let Some(Ability::Procure { reorder_point, reorder_qty }) =
                spec.ability(AbilityKind::Procure)
            else {
                continue;
            };
            if reorder_point.is_none() || reorder_qty.is_none() {
                return Err(InitError::ProcureUnresolved { agent: spec.name.clone() });
            }
            let Some(target) = &spec.procure_target else {
                return Err(InitError::ProcureUnresolved { agent: spec.name.clone() });
            };
            let holds = agents
                .get(&target.agent)
                .is_some_and(|s| s.stocks.contains_key(&target.stock_kind));
            if !holds {
                return Err(InitError::MissingInventory {
                    agent: target.agent.clone(),
                    kind: target.stock_kind,
                });
            }
            let route = route_for(model, spec).ok_or(InitError::NoRoute {
                agent: spec.name.clone(),
            })?;
            // Everyone this route can book an order on must be able to ship
            // it or relay it to someone who can.
            let suppliers: Vec<AgentName> = match &route {
                Route::Protocol(name) => protocol_named(model, name).responders.clone(),
                Route::Direct(to) => vec![to.clone()],
            };
            for supplier in suppliers {
                let can_ship = model
                    .agent(&supplier)
                    .is_some_and(|s| s.has_ability(AbilityKind::Ship));
                let can_relay = info.get(&supplier).is_some_and(|i| i.relay.is_some());
                if !can_ship && !can_relay {
                    return Err(InitError::NoShipper { agent: supplier });
                }
            }
            info.get_mut(&spec.name).unwrap().route = Some(route);
        }

        let initial_total = agents.values().flat_map(|s| s.stocks.values()).sum();
        Ok(Sim {
            model,
            costs: cfg.costs,
            collect_trace: cfg.collect_trace,
            horizon: cfg.horizon,
            clock: 0,
            seq: 0,
            queue: BTreeMap::new(),
            agents,
            info,
            orders: BTreeMap::new(),
            next_order: 1,
            initial_total,
            served_total: 0,
            on_time: 0,
            demand_total: 0,
            on_hand_sum: 0,
            backorder_sum: 0,
            cycle_sum: 0,
            cycle_count: 0,
            trace: Vec::new(),
            history: Vec::new(),
        })
    }

    /// One period: arrivals, activation in name order, audit, KPI sample,
    /// clock advance.
    fn step(&mut self) {
        self.deliver_due();
        self.complete_wip();
        let names: Vec<AgentName> = self.agents.keys().cloned().collect();
        for name in &names {
            self.activate(name);
        }
        self.audit();
        self.sample();
        self.clock += 1;
    }

    // ---- arrivals ----------------------------------------------------

    fn deliver_due(&mut self) {
        while let Some(entry) = self.queue.first_entry() {
            if entry.key().0 > self.clock {
                break;
            }
            let msg = entry.remove();
            debug_assert!(msg.sent < self.clock, "messages take at least one period");
            if msg.performative == Performative::ShipNotice {
                self.receive_shipment(msg);
            } else {
                self.agents
                    .get_mut(&msg.to)
                    .expect("messages address agents on the roster")
                    .inbox
                    .push(msg);
            }
        }
    }

    /// Material arrival: credit the stock, close the order, sample the
    /// cycle time.
    fn receive_shipment(&mut self, msg: Message) {
        let state = self.agents.get_mut(&msg.to).expect("roster");
        *state.stocks.entry(msg.kind).or_insert(0) += msg.qty;
        let order = self
            .orders
            .remove(&msg.order)
            .expect("a ship notice closes exactly one open order");
        let orderer = self.agents.get_mut(&order.orderer).expect("roster");
        orderer.on_order -= order.qty;
        if orderer.open_order == Some(msg.order) {
            orderer.open_order = None;
        }
        self.cycle_sum += self.clock - order.issued;
        self.cycle_count += 1;
        self.log(&msg.to, "receive", || {
            format!("order {} {} x{} from {}", msg.order, msg.kind, msg.qty, msg.from)
        });
    }

    fn complete_wip(&mut self) {
        let t = self.clock;
        let mut completions: Vec<(AgentName, Qty)> = Vec::new();
        for (name, state) in &mut self.agents {
            if let Some(done) = state.wip_done.remove(&t) {
                *state.stocks.entry(StockKind::Wip).or_insert(0) -= done;
                *state.stocks.entry(StockKind::FinalProduct).or_insert(0) += done;
                completions.push((name.clone(), done));
            }
        }
        for (name, done) in completions {
            self.log(&name, "complete", || format!("wip x{done} finished"));
        }
    }

    // ---- activation ----------------------------------------------------

    fn activate(&mut self, name: &AgentName) {
        let spec: &'m AgentSpec = self
            .model
            .agent(name)
            .expect("activation follows the roster");
        let inbox = mem::take(&mut self.agents.get_mut(name).expect("roster").inbox);
        let mut mediated: Vec<Message> = Vec::new();
        for msg in inbox {
            if self.is_mediated_accept(&msg, name) {
                mediated.push(msg);
            } else {
                self.react(spec, msg);
            }
        }
        if !mediated.is_empty() {
            self.arbitrate(spec, mediated);
        }
        self.decide_offers(spec);

        // Rules are evaluated once, against post-inbox knowledge, before
        // any ability runs; default gates are checked as each ability's
        // turn comes so they see the effects of earlier abilities.
        let mut ruled: BTreeMap<AbilityKind, bool> = BTreeMap::new();
        for rule in &spec.rules {
            let fires = rule
                .comparator
                .holds(self.observed(spec, rule.quantity), rule.threshold);
            let slot = ruled.entry(rule.action).or_insert(false);
            *slot = *slot || fires;
        }
        for kind in ACTIVATION_ORDER {
            if !spec.has_ability(kind) {
                continue;
            }
            let fires = ruled
                .get(&kind)
                .copied()
                .unwrap_or_else(|| self.default_gate(spec, kind));
            if fires {
                self.perform(spec, kind);
            }
        }
    }

    /// An accept submitted to this agent in its role as a protocol
    /// mediator, as opposed to one addressed to a responder.
    fn is_mediated_accept(&self, msg: &Message, name: &AgentName) -> bool {
        msg.performative == Performative::Accept
            && msg.regarding.is_some()
            && msg.protocol.as_deref().is_some_and(|p| {
                protocol_named(self.model, p).mediator.as_ref() == Some(name)
            })
    }

    fn react(&mut self, spec: &'m AgentSpec, msg: Message) {
        match msg.performative {
            Performative::Need => self.receive_need(spec, msg),
            Performative::Offer => {
                let recorded = match self.orders.get_mut(&msg.order) {
                    Some(order) if order.orderer == spec.name && order.decide_at.is_some() => {
                        order.offers.push((msg.price, msg.from.clone()));
                        true
                    }
                    _ => false,
                };
                if recorded {
                    self.log(&spec.name, "collect", || {
                        format!("order {} offer {} from {}", msg.order, msg.price, msg.from)
                    });
                }
            }
            Performative::Accept => self.book_shipment(spec, &msg),
            Performative::Reject => {
                let is_orderer = self
                    .orders
                    .get(&msg.order)
                    .is_some_and(|o| o.orderer == spec.name);
                if is_orderer {
                    self.log(&spec.name, "rejected", || {
                        format!("order {} by {}", msg.order, msg.from)
                    });
                    self.issue_need(spec, msg.order);
                }
            }
            Performative::Inform => {
                // A relayed booking: an inform naming an open order books it
                // on the relay target. Other informs carry no state.
                if self.orders.contains_key(&msg.order) {
                    self.book_shipment(spec, &msg);
                }
            }
            Performative::ShipNotice => unreachable!("notices are consumed on arrival"),
        }
    }

    /// A need over a protocol with an offer round solicits an offer when the
    /// responder could ship the quantity; a need over a plain channel is
    /// itself the accepted order.
    fn receive_need(&mut self, spec: &'m AgentSpec, msg: Message) {
        let negotiated = msg
            .protocol
            .as_deref()
            .is_some_and(|p| has_offer_step(protocol_named(self.model, p)));
        if !negotiated {
            self.book_shipment(spec, &msg);
            return;
        }
        let available = self.offerable_stock(&spec.name);
        if available < msg.qty {
            self.log(&spec.name, "silent", || {
                format!("order {} wants x{} but {} on hand", msg.order, msg.qty, available)
            });
            return;
        }
        let price = spec.quote_price.unwrap_or(1.0);
        let offer = Message {
            sent: self.clock,
            from: spec.name.clone(),
            to: msg.from.clone(),
            performative: Performative::Offer,
            order: msg.order,
            qty: msg.qty,
            kind: msg.kind,
            destination: msg.destination.clone(),
            price,
            protocol: msg.protocol.clone(),
            regarding: None,
        };
        self.send(offer, self.clock + 1);
        self.log(&spec.name, "offer", || {
            format!("order {} x{} at {}", msg.order, msg.qty, price)
        });
    }

    /// Accepted order: queue the shipment, or relay the booking to the
    /// package's shipper when this agent cannot ship itself.
    fn book_shipment(&mut self, spec: &'m AgentSpec, msg: &Message) {
        if spec.has_ability(AbilityKind::Ship) {
            let state = self.agents.get_mut(&spec.name).expect("roster");
            state.ship_queue.push_back(ShipTask {
                order: msg.order,
                qty: msg.qty,
                kind: msg.kind,
                destination: msg.destination.clone(),
            });
            self.log(&spec.name, "book", || {
                format!("order {} x{} for {}", msg.order, msg.qty, msg.destination)
            });
            return;
        }
        let relay = self.info[&spec.name]
            .relay
            .clone()
            .expect("initialisation verified every supplier ships or relays");
        let inform = Message {
            sent: self.clock,
            from: spec.name.clone(),
            to: relay.clone(),
            performative: Performative::Inform,
            order: msg.order,
            qty: msg.qty,
            kind: msg.kind,
            destination: msg.destination.clone(),
            price: msg.price,
            protocol: msg.protocol.clone(),
            regarding: None,
        };
        self.send(inform, self.clock + 1);
        self.log(&spec.name, "relay", || {
            format!("order {} to {relay}", msg.order)
        });
    }

    /// Mediator activation: per responder, forward the best accept received
    /// this period and reject the rest.
    fn arbitrate(&mut self, spec: &'m AgentSpec, accepts: Vec<Message>) {
        let mut by_responder: BTreeMap<AgentName, Vec<Message>> = BTreeMap::new();
        for msg in accepts {
            let responder = msg
                .regarding
                .clone()
                .expect("mediated accepts name a responder");
            by_responder.entry(responder).or_default().push(msg);
        }
        for (responder, mut group) in by_responder {
            group.sort_by(|a, b| a.price.total_cmp(&b.price).then_with(|| a.from.cmp(&b.from)));
            let mut group = group.into_iter();
            let winner = group.next().expect("groups are non-empty");
            let order = winner.order;
            let forward = Message {
                sent: self.clock,
                to: responder.clone(),
                regarding: None,
                ..winner
            };
            self.send(forward, self.clock + 1);
            self.log(&spec.name, "forward", || {
                format!("order {order} to {responder}")
            });
            for loser in group {
                let to = loser.from.clone();
                let reject = Message {
                    sent: self.clock,
                    from: spec.name.clone(),
                    to,
                    performative: Performative::Reject,
                    regarding: None,
                    ..loser
                };
                self.log(&spec.name, "reject", || {
                    format!("order {} from {}", reject.order, reject.to)
                });
                self.send(reject, self.clock + 1);
            }
        }
    }

    /// Orders whose decision window closes this period pick the cheapest
    /// offer (ties to the smallest responder name) or re-issue the need.
    fn decide_offers(&mut self, spec: &'m AgentSpec) {
        let due: Vec<OrderId> = self
            .orders
            .iter()
            .filter(|(_, o)| o.orderer == spec.name && o.decide_at == Some(self.clock))
            .map(|(id, _)| *id)
            .collect();
        for id in due {
            let offers = {
                let order = self.orders.get_mut(&id).expect("just listed");
                mem::take(&mut order.offers)
            };
            if offers.is_empty() {
                self.log(&spec.name, "reissue", || format!("order {id} drew no offers"));
                self.issue_need(spec, id);
                continue;
            }
            let (qty, kind, destination) = {
                let order = self.orders.get_mut(&id).expect("just listed");
                order.decide_at = None;
                (order.qty, order.kind, order.destination.clone())
            };
            let mut ranked = offers;
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            let (best_price, winner) = ranked[0].clone();
            let (mediator, protocol) = match &self.info[&spec.name].route {
                Some(Route::Protocol(p)) => {
                    let proto = protocol_named(self.model, p);
                    let med = (proto.protocol_type == ProtocolType::Arbitration)
                        .then(|| proto.mediator.clone())
                        .flatten();
                    (med, Some(p.clone()))
                }
                _ => (None, None),
            };
            if let Some(mediator) = mediator {
                // Arbitration: the accept goes to the mediator, which picks
                // between competing initiators; losers never learn of each
                // other directly.
                let submit = Message {
                    sent: self.clock,
                    from: spec.name.clone(),
                    to: mediator,
                    performative: Performative::Accept,
                    order: id,
                    qty,
                    kind,
                    destination,
                    price: best_price,
                    protocol,
                    regarding: Some(winner.clone()),
                };
                self.send(submit, self.clock + 1);
                self.log(&spec.name, "accept", || {
                    format!("order {id} picks {winner} at {best_price} via mediator")
                });
                continue;
            }
            for (i, (price, responder)) in ranked.iter().enumerate() {
                let performative = if i == 0 {
                    Performative::Accept
                } else {
                    Performative::Reject
                };
                let reply = Message {
                    sent: self.clock,
                    from: spec.name.clone(),
                    to: responder.clone(),
                    performative,
                    order: id,
                    qty,
                    kind,
                    destination: destination.clone(),
                    price: *price,
                    protocol: protocol.clone(),
                    regarding: None,
                };
                self.send(reply, self.clock + 1);
            }
            self.log(&spec.name, "accept", || {
                format!("order {id} to {winner} at {best_price}")
            });
        }
    }

    /// Sends (or re-sends) the need for an open order over the orderer's
    /// route. Protocol routes open a decision window two periods out.
    fn issue_need(&mut self, spec: &'m AgentSpec, id: OrderId) {
        let model = self.model;
        let (qty, kind, destination) = {
            let order = &self.orders[&id];
            (order.qty, order.kind, order.destination.clone())
        };
        let route = self.info[&spec.name]
            .route
            .clone()
            .expect("only routed agents issue needs");
        let clock = self.clock;
        let from = spec.name.clone();
        let need = move |to: AgentName, protocol: Option<String>| Message {
            sent: clock,
            from: from.clone(),
            to,
            performative: Performative::Need,
            order: id,
            qty,
            kind,
            destination: destination.clone(),
            price: 0.0,
            protocol,
            regarding: None,
        };
        match route {
            Route::Protocol(name) => {
                for responder in &protocol_named(model, &name).responders {
                    let msg = need(responder.clone(), Some(name.clone()));
                    self.send(msg, self.clock + 1);
                }
                self.orders.get_mut(&id).expect("open").decide_at = Some(self.clock + 2);
                self.log(&spec.name, "need", || format!("order {id} x{qty} over {name}"));
            }
            Route::Direct(to) => {
                let msg = need(to.clone(), None);
                self.send(msg, self.clock + 1);
                self.log(&spec.name, "need", || format!("order {id} x{qty} to {to}"));
            }
        }
    }

    // ---- knowledge ------------------------------------------------------

    /// Preferred kind among the stocks the agent holds, regardless of the
    /// current level: finished goods ship even while they are out of stock
    /// and raw material waits.
    fn ship_kind(&self, name: &AgentName) -> Option<StockKind> {
        let stocks = &self.agents[name].stocks;
        SHIP_PREFERENCE.into_iter().find(|k| stocks.contains_key(k))
    }

    /// Which stock a shipment from this agent would draw on: its own, or
    /// its relay's when the agent holds none.
    fn stock_holder(&self, name: &AgentName) -> Option<(AgentName, StockKind)> {
        if let Some(kind) = self.ship_kind(name) {
            return Some((name.clone(), kind));
        }
        let relay = self.info[name].relay.as_ref()?;
        self.ship_kind(relay).map(|kind| (relay.clone(), kind))
    }

    /// Units the agent can credibly offer to ship.
    fn offerable_stock(&self, name: &AgentName) -> Qty {
        self.stock_holder(name)
            .map_or(0, |(holder, kind)| self.agents[&holder].stocks[&kind])
    }

    /// A stock level as the agent sees it: its own holding, or the
    /// procurement target's when the agent holds none of that kind.
    fn visible_stock(&self, spec: &AgentSpec, kind: StockKind) -> Qty {
        if let Some(qty) = self.agents[&spec.name].stocks.get(&kind) {
            return *qty;
        }
        spec.procure_target
            .as_ref()
            .filter(|t| t.stock_kind == kind)
            .and_then(|t| self.agents[&t.agent].stocks.get(&kind))
            .copied()
            .unwrap_or(0)
    }

    fn observed(&self, spec: &AgentSpec, quantity: MonitoredQuantity) -> Qty {
        let state = &self.agents[&spec.name];
        match quantity {
            MonitoredQuantity::OnHand(kind) => self.visible_stock(spec, kind),
            MonitoredQuantity::OnOrder => state.on_order,
            MonitoredQuantity::Backorders => state.backorders,
            MonitoredQuantity::InventoryPosition(kind) => {
                self.visible_stock(spec, kind) + state.on_order - state.backorders
            }
        }
    }

    fn net_requirement(&self, spec: &AgentSpec) -> Qty {
        let state = &self.agents[&spec.name];
        let committed: Qty = state.ship_queue.iter().map(|t| t.qty).sum();
        let planned: Qty = state.plan_queue.iter().sum();
        let finished = state.stocks.get(&StockKind::FinalProduct).copied().unwrap_or(0);
        let wip = state.stocks.get(&StockKind::Wip).copied().unwrap_or(0);
        committed + state.backorders - finished - wip - planned
    }

    // ---- abilities -------------------------------------------------------

    fn default_gate(&self, spec: &AgentSpec, kind: AbilityKind) -> bool {
        let state = &self.agents[&spec.name];
        match kind {
            AbilityKind::MonitorInventory | AbilityKind::Sell => true,
            AbilityKind::PlanProduction => self.net_requirement(spec) > 0,
            AbilityKind::Dispatch => !state.plan_queue.is_empty(),
            AbilityKind::Procure => {
                let Some(Ability::Procure { reorder_point, .. }) =
                    spec.ability(AbilityKind::Procure)
                else {
                    return false;
                };
                let rp = reorder_point.expect("initialisation resolved reorder parameters");
                let target = spec
                    .procure_target
                    .as_ref()
                    .expect("initialisation resolved the target");
                let position =
                    self.agents[&target.agent].stocks[&target.stock_kind] + state.on_order;
                position <= rp
            }
            AbilityKind::Ship => !state.ship_queue.is_empty(),
        }
    }

    fn perform(&mut self, spec: &'m AgentSpec, kind: AbilityKind) {
        match kind {
            AbilityKind::MonitorInventory => {} // knowledge is always current here
            AbilityKind::Sell => self.sell(spec),
            AbilityKind::PlanProduction => self.plan(spec),
            AbilityKind::Dispatch => self.dispatch(spec),
            AbilityKind::Procure => self.procure(spec),
            AbilityKind::Ship => self.ship(spec),
        }
    }

    /// Serve backorders first, then the period's demand; unserved demand
    /// backorders. Only units served in their demand period count on-time.
    fn sell(&mut self, spec: &'m AgentSpec) {
        let d = {
            let (demand, stream) = self.info[&spec.name]
                .demand
                .as_ref()
                .expect("selling agents have demand streams");
            demand_for(demand, *stream, self.clock)
        };
        self.demand_total += d;
        let kind = self.ship_kind(&spec.name);
        let state = self.agents.get_mut(&spec.name).expect("roster");
        let available = kind.map_or(0, |k| state.stocks[&k]);
        let backlog_served = state.backorders.min(available);
        let served_now = d.min(available - backlog_served);
        if let Some(k) = kind {
            *state.stocks.get_mut(&k).expect("present") -= backlog_served + served_now;
        }
        state.backorders -= backlog_served;
        state.backorders += d - served_now;
        self.served_total += backlog_served + served_now;
        self.on_time += served_now;
        self.log(&spec.name, "sell", || {
            format!("demand x{d} served x{} backlog x{backlog_served}", served_now)
        });
    }

    /// Lot-for-lot: plan exactly the positive net requirement.
    fn plan(&mut self, spec: &'m AgentSpec) {
        let net = self.net_requirement(spec);
        if net <= 0 {
            return; // a rule may force planning with nothing to plan
        }
        let state = self.agents.get_mut(&spec.name).expect("roster");
        state.plan_queue.push_back(net);
        self.log(&spec.name, "plan", || format!("lot x{net}"));
    }

    /// FIFO release up to `min(capacity, raw on hand)`; partial lots keep
    /// their place at the head. Released units finish next period.
    fn dispatch(&mut self, spec: &'m AgentSpec) {
        let capacity = match spec.ability(AbilityKind::Dispatch) {
            Some(Ability::Dispatch { capacity, .. }) => capacity.unwrap_or(Qty::MAX),
            _ => return,
        };
        let complete_at = self.clock + 1;
        let state = self.agents.get_mut(&spec.name).expect("roster");
        let raw = state
            .stocks
            .get(&StockKind::RawMaterial)
            .copied()
            .unwrap_or(0);
        let mut budget = capacity.min(raw);
        let mut released = 0;
        while budget > 0 {
            let Some(head) = state.plan_queue.front_mut() else { break };
            let take = (*head).min(budget);
            *head -= take;
            if *head == 0 {
                state.plan_queue.pop_front();
            }
            budget -= take;
            released += take;
        }
        if released > 0 {
            *state
                .stocks
                .get_mut(&StockKind::RawMaterial)
                .expect("raw stock present") -= released;
            *state.stocks.entry(StockKind::Wip).or_insert(0) += released;
            *state.wip_done.entry(complete_at).or_insert(0) += released;
            self.log(&spec.name, "dispatch", || format!("released x{released}"));
        }
    }

    /// Open one order for the reorder quantity and issue its need. At most
    /// one order is open per agent, however the ability was gated.
    fn procure(&mut self, spec: &'m AgentSpec) {
        if self.agents[&spec.name].open_order.is_some() {
            return;
        }
        let Some(Ability::Procure { reorder_qty, .. }) = spec.ability(AbilityKind::Procure)
        else {
            return;
        };
        let qty = reorder_qty.expect("initialisation resolved reorder parameters");
        let target = spec
            .procure_target
            .as_ref()
            .expect("initialisation resolved the target");
        let id = self.next_order;
        self.next_order += 1;
        self.orders.insert(
            id,
            OpenOrder {
                orderer: spec.name.clone(),
                destination: target.agent.clone(),
                kind: target.stock_kind,
                qty,
                issued: self.clock,
                decide_at: None,
                offers: Vec::new(),
            },
        );
        let state = self.agents.get_mut(&spec.name).expect("roster");
        state.open_order = Some(id);
        state.on_order += qty;
        self.log(&spec.name, "procure", || format!("order {id} x{qty} opened"));
        self.issue_need(spec, id);
    }

    /// Serve the ship queue strictly FIFO and all-or-nothing; the first
    /// order the stock cannot cover blocks the queue.
    fn ship(&mut self, spec: &'m AgentSpec) {
        let lead = match spec.ability(AbilityKind::Ship) {
            Some(Ability::Ship { lead_time }) => *lead_time,
            _ => return,
        };
        let deliver = self.clock + lead.max(1);
        while let Some(kind) = self.ship_kind(&spec.name) {
            let state = self.agents.get_mut(&spec.name).expect("roster");
            let Some(head) = state.ship_queue.front() else { break };
            if state.stocks[&kind] < head.qty {
                break;
            }
            let task = state.ship_queue.pop_front().expect("just checked");
            *state.stocks.get_mut(&kind).expect("present") -= task.qty;
            let notice = Message {
                sent: self.clock,
                from: spec.name.clone(),
                to: task.destination.clone(),
                performative: Performative::ShipNotice,
                order: task.order,
                qty: task.qty,
                kind: task.kind,
                destination: task.destination.clone(),
                price: 0.0,
                protocol: None,
                regarding: None,
            };
            self.send(notice, deliver);
            self.log(&spec.name, "ship", || {
                format!("order {} x{} to {}", task.order, task.qty, task.destination)
            });
        }
    }

    // ---- bookkeeping -----------------------------------------------------

    fn send(&mut self, msg: Message, deliver: Period) {
        assert!(deliver > self.clock, "messages take at least one period");
        self.seq += 1;
        self.queue.insert((deliver, self.seq), msg);
    }

    fn log(&mut self, agent: &AgentName, action: &str, detail: impl FnOnce() -> String) {
        if !self.collect_trace {
            return;
        }
        self.trace.push(TraceRow {
            period: self.clock,
            agent: agent.to_string(),
            action: action.to_string(),
            detail: detail(),
        });
    }

    fn in_transit(&self) -> Qty {
        self.queue
            .values()
            .filter(|m| m.performative == Performative::ShipNotice)
            .map(|m| m.qty)
            .sum()
    }

    /// Every period: no negative stock, and the network's material balances
    /// against the initial total. A failure is an engine defect.
    fn audit(&self) {
        let mut total: Qty = 0;
        for (name, state) in &self.agents {
            for (kind, qty) in &state.stocks {
                assert!(
                    *qty >= 0,
                    "negative {kind} stock at {name} in period {}",
                    self.clock
                );
                total += qty;
            }
        }
        assert_eq!(
            total + self.in_transit() + self.served_total,
            self.initial_total,
            "material conservation broken in period {}",
            self.clock
        );
    }

    fn sample(&mut self) {
        let mut on_hand = BTreeMap::new();
        let mut backorders = BTreeMap::new();
        let mut period_on_hand: Qty = 0;
        let mut period_backorders: Qty = 0;
        for (name, state) in &self.agents {
            if !state.stocks.is_empty() {
                period_on_hand += state.stocks.values().sum::<Qty>();
                on_hand.insert(name.clone(), state.stocks.clone());
            }
        }
        for spec in self.model.agents() {
            if spec.has_ability(AbilityKind::Sell) {
                let b = self.agents[&spec.name].backorders;
                period_backorders += b;
                backorders.insert(spec.name.clone(), b);
            }
        }
        self.on_hand_sum += period_on_hand;
        self.backorder_sum += period_backorders;
        self.history.push(PeriodSnapshot {
            period: self.clock,
            on_hand,
            backorders,
            in_transit: self.in_transit(),
        });
    }

    /// Derive all KPIs once, from integer accumulators.
    fn finish(self) -> SimOutcome {
        let fill_rate = if self.demand_total == 0 {
            1.0
        } else {
            self.on_time as f64 / self.demand_total as f64
        };
        let avg_inventory = self.on_hand_sum as f64 / self.horizon as f64;
        let backorder_count: Qty = self.agents.values().map(|s| s.backorders).sum();
        let total_cost = self.costs.holding * self.on_hand_sum as f64
            + self.costs.backorder * self.backorder_sum as f64;
        let cycle_time = if self.cycle_count == 0 {
            0.0
        } else {
            self.cycle_sum as f64 / self.cycle_count as f64
        };
        let mut metrics = BTreeMap::new();
        metrics.insert(KpiMetric::AvgInventory, avg_inventory);
        metrics.insert(KpiMetric::FillRate, fill_rate);
        metrics.insert(KpiMetric::BackorderCount, backorder_count as f64);
        metrics.insert(KpiMetric::TotalCost, total_cost);
        metrics.insert(KpiMetric::CycleTime, cycle_time);
        SimOutcome {
            report: KpiReport { metrics },
            trace: self.trace,
            history: self.history,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deploy::{build_cam, build_domain_model, build_oam};
    use crate::fml::parse_fml;

    fn oam_of(text: &str) -> OperationalAgentModel {
        let parsed = parse_fml(text).expect("fixture parses");
        let dm = build_domain_model(&parsed.model.dpa).expect("domain model");
        let cam = build_cam(&dm, &parsed.model.saoa).expect("conceptual model");
        build_oam(&cam, &parsed.model.saoa, &parsed.model.iaoa).expect("operational model")
    }

    fn cfg(horizon: Period) -> SimConfig {
        SimConfig {
            horizon,
            seed: 11,
            ..SimConfig::default()
        }
    }

    fn stock(outcome: &SimOutcome, t: usize, agent: &str, kind: StockKind) -> Qty {
        outcome.history[t].on_hand[&AgentName::from(agent)][&kind]
    }

    fn ruled_fixture(with_rule: bool) -> String {
        let rule = if with_rule {
            "  response W1.tact when on_hand final_product < 1000 do procure\n"
        } else {
            ""
        };
        format!(
            "\
dpa {{
  unit V1 {{ name \"Vendor\" role vendor }}
  unit W1 {{ name \"Warehouse\" role facility }}
  block V1.exec {{ unit V1 level execution functions distribution }}
  block W1.tact {{ unit W1 level tactical functions procurement }}
  block W1.exec {{ unit W1 level execution functions distribution }}
  relation physical V1.exec -> W1.exec product P1
  relation informational W1.tact -> V1.exec type needs_expression
  product P1
  inventory V1.exec {{ kind final_product initial 500 }}
  inventory W1.exec {{ kind final_product initial 100 }}
}}
saoa {{
  structure hierarchical
}}
iaoa {{
  ability V1.exec ship lead_time 1
  ability W1.tact procure reorder_point 0 reorder_qty 10
{rule}}}
"
        )
    }

    #[test]
    fn reactive_rule_replaces_the_reorder_gate() {
        // Reorder point 0 against 100 on hand: the default gate never
        // fires, so the network is static without the rule.
        let outcome = run_full(&oam_of(&ruled_fixture(false)), &cfg(10)).unwrap();
        for t in 0..10 {
            assert_eq!(stock(&outcome, t, "V1.exec", StockKind::FinalProduct), 500);
            assert_eq!(stock(&outcome, t, "W1.exec", StockKind::FinalProduct), 100);
        }

        // The rule watches the procurement target's stock and always holds,
        // so orders flow back to back: issue, arrive two periods later,
        // reorder the period after the arrival.
        let outcome = run_full(&oam_of(&ruled_fixture(true)), &cfg(10)).unwrap();
        assert_eq!(stock(&outcome, 1, "V1.exec", StockKind::FinalProduct), 490);
        assert_eq!(stock(&outcome, 1, "W1.exec", StockKind::FinalProduct), 100);
        assert_eq!(outcome.history[1].in_transit, 10);
        assert_eq!(stock(&outcome, 9, "V1.exec", StockKind::FinalProduct), 450);
        assert_eq!(stock(&outcome, 9, "W1.exec", StockKind::FinalProduct), 140);
        assert_eq!(outcome.history[9].in_transit, 10);
        assert_eq!(outcome.report.get(KpiMetric::CycleTime), 2.0);
    }

    const MAKER: &str = "\
dpa {
  unit M1 { name \"Maker\" role facility }
  block M1.exec { unit M1 level execution functions manufacturing }
  product P1
  inventory M1.exec { kind raw_material initial 50 }
  inventory M1.exec { kind final_product initial 0 }
}
saoa {
  structure hierarchical
}
iaoa {
  ability M1.exec sell demand constant 5
  ability M1.exec plan_production policy lot_for_lot
  ability M1.exec dispatch rule fifo capacity 3
}
";

    #[test]
    fn production_pipeline_converts_raw_to_final() {
        let outcome = run_full(&oam_of(MAKER), &cfg(3)).unwrap();
        let row = |t: usize| {
            (
                stock(&outcome, t, "M1.exec", StockKind::RawMaterial),
                stock(&outcome, t, "M1.exec", StockKind::Wip),
                stock(&outcome, t, "M1.exec", StockKind::FinalProduct),
                outcome.history[t].backorders[&AgentName::from("M1.exec")],
            )
        };
        // Demand 5 against capacity 3: the plan queue grows while finished
        // lots of 3 chase the backlog one period behind.
        assert_eq!(row(0), (47, 3, 0, 5));
        assert_eq!(row(1), (44, 3, 0, 7));
        assert_eq!(row(2), (41, 3, 0, 9));
        assert_eq!(outcome.report.get(KpiMetric::FillRate), 0.0);
        assert_eq!(outcome.report.get(KpiMetric::CycleTime), 0.0);
    }

    fn negotiated_fixture(price_a: f64, price_b: f64) -> String {
        format!(
            "\
dpa {{
  unit VA {{ name \"Vendor A\" role vendor }}
  unit VB {{ name \"Vendor B\" role vendor }}
  unit F1 {{ name \"Factory\" role facility }}
  block VA.exec {{ unit VA level execution functions distribution }}
  block VB.exec {{ unit VB level execution functions distribution }}
  block F1.tact {{ unit F1 level tactical functions procurement }}
  block F1.exec {{ unit F1 level execution functions sales }}
  relation physical VA.exec -> F1.exec product P1
  relation physical VB.exec -> F1.exec product P1
  relation informational F1.tact -> VA.exec type needs_expression
  relation informational F1.tact -> VB.exec type needs_expression
  product P1
  inventory VA.exec {{ kind final_product initial 100 }}
  inventory VB.exec {{ kind final_product initial 100 }}
  inventory F1.exec {{ kind final_product initial 10 }}
}}
saoa {{
  structure hierarchical
  protocol duo {{ type negotiation bind F1.tact -> VA.exec bind F1.tact -> VB.exec }}
}}
iaoa {{
  ability VA.exec ship lead_time 1
  ability VB.exec ship lead_time 1
  ability F1.tact procure reorder_point 10 reorder_qty 20
  ability F1.exec sell demand constant 0
  quote VA.exec price {price_a}
  quote VB.exec price {price_b}
}}
"
        )
    }

    #[test]
    fn negotiation_prefers_price_then_name() {
        // Need at t0, offers collected at t2, acceptance lands at t3, the
        // goods a period later.
        let outcome = run_full(&oam_of(&negotiated_fixture(5.0, 3.0)), &cfg(5)).unwrap();
        assert_eq!(stock(&outcome, 4, "VA.exec", StockKind::FinalProduct), 100);
        assert_eq!(stock(&outcome, 4, "VB.exec", StockKind::FinalProduct), 80);
        assert_eq!(stock(&outcome, 4, "F1.exec", StockKind::FinalProduct), 30);
        assert_eq!(outcome.report.get(KpiMetric::CycleTime), 4.0);

        // Equal prices break the tie on the responder name.
        let outcome = run_full(&oam_of(&negotiated_fixture(4.0, 4.0)), &cfg(5)).unwrap();
        assert_eq!(stock(&outcome, 4, "VA.exec", StockKind::FinalProduct), 80);
        assert_eq!(stock(&outcome, 4, "VB.exec", StockKind::FinalProduct), 100);
    }

    const ARBITRATED: &str = "\
dpa {
  unit V1 { name \"Vendor\" role vendor }
  unit A1 { name \"Alpha\" role client }
  unit B1 { name \"Beta\" role client }
  block V1.exec { unit V1 level execution functions distribution }
  block A1.tact { unit A1 level tactical functions procurement }
  block A1.exec { unit A1 level execution functions sales }
  block B1.tact { unit B1 level tactical functions procurement }
  block B1.exec { unit B1 level execution functions sales }
  relation physical V1.exec -> A1.exec product P1
  relation physical V1.exec -> B1.exec product P1
  relation informational A1.tact -> V1.exec type needs_expression
  relation informational B1.tact -> V1.exec type needs_expression
  product P1
  inventory V1.exec { kind final_product initial 100 }
  inventory A1.exec { kind final_product initial 0 }
  inventory B1.exec { kind final_product initial 0 }
}
saoa {
  structure hierarchical
  mediator M scope A1.tact B1.tact V1.exec
  protocol pool { type arbitration bind A1.tact -> V1.exec bind B1.tact -> V1.exec }
}
iaoa {
  ability V1.exec ship lead_time 1
  ability A1.tact procure reorder_point 0 reorder_qty 10
  ability B1.tact procure reorder_point 0 reorder_qty 10
  quote V1.exec price 5
}
";

    #[test]
    fn arbitration_breaks_ties_on_orderer_and_losers_reissue() {
        // Both clients bid for the same vendor at the same price. The
        // mediator lets the lexicographically smaller orderer through;
        // the loser re-issues and succeeds a full round later.
        let outcome = run_full(&oam_of(ARBITRATED), &cfg(10)).unwrap();
        assert_eq!(stock(&outcome, 5, "A1.exec", StockKind::FinalProduct), 10);
        assert_eq!(stock(&outcome, 5, "B1.exec", StockKind::FinalProduct), 0);
        assert_eq!(stock(&outcome, 9, "A1.exec", StockKind::FinalProduct), 10);
        assert_eq!(stock(&outcome, 9, "B1.exec", StockKind::FinalProduct), 10);
        assert_eq!(stock(&outcome, 9, "V1.exec", StockKind::FinalProduct), 80);
        // Cycle times measure from the original issue: 5 for the winner,
        // 9 for the initiator that lost the first round.
        assert_eq!(outcome.report.get(KpiMetric::CycleTime), 7.0);
    }

    const RELAYED: &str = "\
dpa {
  unit V1 { name \"Vendor\" role vendor }
  unit F1 { name \"Factory\" role facility }
  block V1.tact { unit V1 level tactical functions distribution }
  block V1.exec { unit V1 level execution functions distribution }
  block F1.tact { unit F1 level tactical functions procurement }
  block F1.exec { unit F1 level execution functions sales }
  relation physical V1.exec -> F1.exec product P1
  relation informational F1.tact -> V1.tact type needs_expression
  product P1
  inventory V1.exec { kind final_product initial 100 }
  inventory F1.exec { kind final_product initial 0 }
}
saoa {
  structure hierarchical
  protocol indirect { type negotiation bind F1.tact -> V1.tact }
}
iaoa {
  ability V1.exec ship lead_time 1
  ability F1.tact procure reorder_point 0 reorder_qty 10
}
";

    #[test]
    fn stockless_responder_relays_to_its_package_shipper() {
        // V1.tact offers on the strength of V1.exec's stock and, once
        // accepted, relays the booking; the relay costs one period, so the
        // goods land at t5 instead of t4.
        let outcome = run_full(&oam_of(RELAYED), &cfg(6)).unwrap();
        assert_eq!(stock(&outcome, 4, "F1.exec", StockKind::FinalProduct), 0);
        assert_eq!(stock(&outcome, 5, "F1.exec", StockKind::FinalProduct), 10);
        assert_eq!(stock(&outcome, 5, "V1.exec", StockKind::FinalProduct), 90);
        assert_eq!(outcome.report.get(KpiMetric::CycleTime), 5.0);
    }

    #[test]
    fn trace_records_the_relay_hop_only_when_asked() {
        let mut with_trace = cfg(6);
        with_trace.collect_trace = true;
        let outcome = run_full(&oam_of(RELAYED), &with_trace).unwrap();
        assert!(outcome.trace.iter().any(|row| row.action == "relay"));
        assert!(outcome.trace.iter().any(|row| row.action == "offer"));
        let quiet = run_full(&oam_of(RELAYED), &cfg(6)).unwrap();
        assert!(quiet.trace.is_empty());
        assert_eq!(quiet.report, outcome.report);
    }

    const SCARCE: &str = "\
dpa {
  unit V1 { name \"Vendor\" role vendor }
  unit F1 { name \"Factory\" role facility }
  block V1.exec { unit V1 level execution functions distribution }
  block F1.tact { unit F1 level tactical functions procurement }
  block F1.exec { unit F1 level execution functions sales }
  relation physical V1.exec -> F1.exec product P1
  relation informational F1.tact -> V1.exec type needs_expression
  product P1
  inventory V1.exec { kind final_product initial 5 }
  inventory F1.exec { kind final_product initial 0 }
}
saoa {
  structure hierarchical
  protocol starve { type negotiation bind F1.tact -> V1.exec }
}
iaoa {
  ability V1.exec ship lead_time 1
  ability F1.tact procure reorder_point 0 reorder_qty 10
}
";

    #[test]
    fn silent_responders_cause_reissue_without_losing_the_order() {
        // The vendor can never cover the quantity, so it stays silent and
        // the orderer re-issues every other period; nothing moves, nothing
        // is lost, and no cycle completes.
        let outcome = run_full(&oam_of(SCARCE), &cfg(8)).unwrap();
        for t in 0..8 {
            assert_eq!(stock(&outcome, t, "V1.exec", StockKind::FinalProduct), 5);
            assert_eq!(stock(&outcome, t, "F1.exec", StockKind::FinalProduct), 0);
            assert_eq!(outcome.history[t].in_transit, 0);
        }
        assert_eq!(outcome.report.get(KpiMetric::CycleTime), 0.0);
    }

    fn find_agent<'a>(
        model: &'a mut OperationalAgentModel,
        name: &str,
    ) -> &'a mut AgentSpec {
        model
            .decision_society
            .iter_mut()
            .chain(model.execution_society.iter_mut())
            .find(|a| a.name.as_str() == name)
            .expect("agent exists")
    }

    #[test]
    fn initialisation_rejects_unrunnable_models() {
        let base = negotiated_fixture(5.0, 3.0);

        let err = run(&oam_of(&base), &cfg(0)).unwrap_err();
        assert_eq!(err, InitError::ZeroHorizon);

        let mut no_route = oam_of(&base);
        no_route.protocols.clear();
        let err = run(&no_route, &cfg(5)).unwrap_err();
        assert_eq!(err, InitError::NoRoute { agent: AgentName::from("F1.tact") });

        let mut no_shipper = oam_of(&base);
        find_agent(&mut no_shipper, "VA.exec")
            .abilities
            .retain(|a| a.kind() != AbilityKind::Ship);
        let err = run(&no_shipper, &cfg(5)).unwrap_err();
        assert_eq!(err, InitError::NoShipper { agent: AgentName::from("VA.exec") });

        let mut wrong_kind = oam_of(&base);
        find_agent(&mut wrong_kind, "F1.tact")
            .procure_target
            .as_mut()
            .unwrap()
            .stock_kind = StockKind::Wip;
        let err = run(&wrong_kind, &cfg(5)).unwrap_err();
        assert_eq!(
            err,
            InitError::MissingInventory {
                agent: AgentName::from("F1.exec"),
                kind: StockKind::Wip,
            }
        );

        let mut unresolved = oam_of(&base);
        for ability in &mut find_agent(&mut unresolved, "F1.tact").abilities {
            if let Ability::Procure { reorder_point, .. } = ability {
                *reorder_point = None;
            }
        }
        let err = run(&unresolved, &cfg(5)).unwrap_err();
        assert_eq!(err, InitError::ProcureUnresolved { agent: AgentName::from("F1.tact") });

        let mut negative = oam_of(&base);
        for var in &mut find_agent(&mut negative, "VB.exec").knowledge {
            if let KnowledgeVar::Inventory { initial, .. } = var {
                *initial = -1;
            }
        }
        let err = run(&negative, &cfg(5)).unwrap_err();
        assert_eq!(
            err,
            InitError::NegativeInitialStock {
                agent: AgentName::from("VB.exec"),
                kind: StockKind::FinalProduct,
            }
        );

        let mut bad_demand = cfg(5);
        bad_demand
            .demand
            .insert(AgentName::from("F1.tact"), DemandSpec::Constant { rate: 1 });
        let err = run(&oam_of(&base), &bad_demand).unwrap_err();
        assert!(matches!(err, InitError::BadOverride { .. }));
    }
}
