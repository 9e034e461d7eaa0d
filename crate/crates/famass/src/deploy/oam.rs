//! Operational agent model: the executable refinement of the agent society.
//!
//! This stage equips every conceptual agent with the machinery the runtime
//! needs: a knowledge base, resolved abilities, reactive rules, a behaviour
//! state machine, and concrete interaction protocols. Agents are partitioned
//! into a decision society and an execution society, tied together by
//! responsibility links inside each spatial-unit package.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::deploy::cam::{
    ActivityAgent, AgentKind, ConceptualAgentModel, InfoInteraction, PhysicalInteraction,
};
use crate::deploy::DeployError;
use crate::fml::model::{
    Ability, AbilityKind, Comparator, Directive, IaoaSection, MonitoredQuantity, Product,
    ProtocolType, SaoaSection, StockKind,
};
use crate::metamodel::{AgentName, BlockId, DecisionLevel, UnitId};
use crate::Qty;

/// Which society an agent acts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Society {
    Decision,
    Execution,
}

impl Society {
    pub fn as_str(self) -> &'static str {
        match self {
            Society::Decision => "decision",
            Society::Execution => "execution",
        }
    }
}

impl std::fmt::Display for Society {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Message kinds exchanged by agents at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Performative {
    Need,
    Offer,
    Accept,
    Reject,
    Inform,
    ShipNotice,
}

impl Performative {
    pub fn as_str(self) -> &'static str {
        match self {
            Performative::Need => "need",
            Performative::Offer => "offer",
            Performative::Accept => "accept",
            Performative::Reject => "reject",
            Performative::Inform => "inform",
            Performative::ShipNotice => "ship_notice",
        }
    }
}

impl std::fmt::Display for Performative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Part an agent plays in a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Initiator,
    Responder,
    Mediator,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Initiator => "initiator",
            Role::Responder => "responder",
            Role::Mediator => "mediator",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One step of a protocol's canonical message sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolStep {
    pub step: u32,
    pub from_role: Role,
    pub to_role: Role,
    /// Alternatives allowed at this step (e.g. accept or reject).
    pub performatives: Vec<Performative>,
}

/// A fully resolved interaction protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub name: String,
    pub protocol_type: ProtocolType,
    /// Agents entitled to open the protocol, sorted. Exactly one except for
    /// arbitration, where several parties may submit to the same mediator.
    pub initiators: Vec<AgentName>,
    /// Agents that answer, sorted.
    pub responders: Vec<AgentName>,
    /// Broker for arbitration protocols.
    pub mediator: Option<AgentName>,
    /// Informational interactions this protocol governs.
    pub bound: Vec<InfoInteraction>,
    pub sequence: Vec<ProtocolStep>,
}

impl ProtocolSpec {
    pub fn role_of(&self, name: &AgentName) -> Option<Role> {
        if self.mediator.as_ref() == Some(name) {
            Some(Role::Mediator)
        } else if self.initiators.contains(name) {
            Some(Role::Initiator)
        } else if self.responders.contains(name) {
            Some(Role::Responder)
        } else {
            None
        }
    }
}

/// Membership of one agent in one protocol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoleBinding {
    pub protocol: String,
    pub role: Role,
}

/// Accountability of a decision agent for an execution agent in its package.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResponsibilityLink {
    pub decision: AgentName,
    pub execution: AgentName,
}

/// State variable in an agent's knowledge base.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "var")]
pub enum KnowledgeVar {
    /// A stock with its starting level and optional reorder policy.
    Inventory {
        kind: StockKind,
        initial: Qty,
        reorder_point: Option<Qty>,
        reorder_qty: Option<Qty>,
    },
    /// Open orders sent and received.
    OrderBook,
    /// Production plan data (net requirements, released lots).
    PlanData,
}

/// Reactive rule bound to one agent: when the condition holds at activation,
/// the named ability fires this period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRule {
    pub quantity: MonitoredQuantity,
    pub comparator: Comparator,
    pub threshold: Qty,
    pub action: AbilityKind,
}

/// Where an agent's replenishment orders are stocked on arrival.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcureTarget {
    /// Agent whose inventory is monitored and replenished (often the
    /// procuring agent itself, otherwise an execution agent in its package).
    pub agent: AgentName,
    pub stock_kind: StockKind,
}

/// Kind of a behaviour state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// Waiting; no activity runs.
    Passive,
    /// Runs a single indivisible activity.
    ActiveElementary,
    /// Runs a multi-phase activity with internal sequencing.
    ActiveComposite,
}

/// Event internal to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InternalEvent {
    /// The period clock advanced.
    Timer,
    /// A monitored quantity crossed its threshold.
    Threshold,
}

/// Event arriving from outside the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalEvent {
    /// A message with the given performative was received.
    Message(Performative),
}

/// What causes a behaviour transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Internal(InternalEvent),
    External(ExternalEvent),
}

/// One state of an agent's behaviour machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorState {
    pub name: String,
    pub kind: StateKind,
    /// Ability executed while in this state, if any.
    pub activity: Option<AbilityKind>,
}

/// One transition of an agent's behaviour machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub to: String,
    pub trigger: Trigger,
    /// Ability started by taking this transition, if any.
    pub action: Option<AbilityKind>,
}

/// Behaviour state machine: one passive rest state plus one active state per
/// ability, with triggered entry and timer-driven return.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Behavior {
    pub states: Vec<BehaviorState>,
    pub transitions: Vec<Transition>,
}

/// An operational agent, ready to be instantiated by the runtime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: AgentName,
    pub society: Society,
    pub kind: AgentKind,
    /// Spatial-unit package; `None` for mediators.
    pub package: Option<UnitId>,
    pub level: Option<DecisionLevel>,
    /// Blocks this agent descends from, sorted.
    pub origin: Vec<BlockId>,
    pub knowledge: Vec<KnowledgeVar>,
    /// Resolved abilities, at most one per kind, in kind order. Procure
    /// parameters are fully resolved here.
    pub abilities: Vec<Ability>,
    /// Reactive rules in declaration order.
    pub rules: Vec<AgentRule>,
    /// Unit price quoted when answering a call for needs.
    pub quote_price: Option<f64>,
    /// Stock replenished by this agent's procure ability.
    pub procure_target: Option<ProcureTarget>,
    pub behavior: Behavior,
    /// Protocol memberships, sorted by protocol name.
    pub roles: Vec<RoleBinding>,
}

impl AgentSpec {
    pub fn ability(&self, kind: AbilityKind) -> Option<&Ability> {
        self.abilities.iter().find(|a| a.kind() == kind)
    }

    pub fn has_ability(&self, kind: AbilityKind) -> bool {
        self.ability(kind).is_some()
    }
}

/// The executable agent model: two societies, their accountability links,
/// resolved protocols, and the channels and routes the runtime serves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationalAgentModel {
    /// Decision-society agents (mediators included), sorted by name.
    pub decision_society: Vec<AgentSpec>,
    /// Execution-society agents, sorted by name.
    pub execution_society: Vec<AgentSpec>,
    /// Package-internal accountability, sorted.
    pub responsibility_links: Vec<ResponsibilityLink>,
    /// Resolved protocols, sorted by name.
    pub protocols: Vec<ProtocolSpec>,
    /// Informational interactions not governed by any protocol; the runtime
    /// serves them as plain inform channels.
    pub unbound_channels: Vec<InfoInteraction>,
    /// Material routes between execution agents.
    pub physical_routes: Vec<PhysicalInteraction>,
    /// Products moving across the routes.
    pub products: Vec<Product>,
}

impl OperationalAgentModel {
    pub fn agents(&self) -> impl Iterator<Item = &AgentSpec> {
        self.decision_society.iter().chain(self.execution_society.iter())
    }

    pub fn agent(&self, name: &AgentName) -> Option<&AgentSpec> {
        self.agents().find(|a| &a.name == name)
    }
}

/// Selector precedence: an exact name outranks any prefix pattern, and a
/// longer prefix outranks a shorter one.
fn specificity(selector: &str) -> usize {
    match selector.strip_suffix('*') {
        Some(prefix) => prefix.len(),
        None => usize::MAX,
    }
}

/// Resolves the declared abilities into at most one ability per kind for the
/// given agent, most specific selector winning.
fn effective_abilities(
    name: &AgentName,
    iaoa: &IaoaSection,
) -> (Vec<Ability>, Vec<DeployError>) {
    let mut issues = Vec::new();
    let mut by_kind: BTreeMap<AbilityKind, (usize, &Ability)> = BTreeMap::new();
    for decl in &iaoa.abilities {
        if !decl.selector.matches(name.as_str()) {
            continue;
        }
        let rank = specificity(decl.selector.as_str());
        match by_kind.get(&decl.ability.kind()) {
            Some((best, winner)) if *best == rank => {
                if *winner != &decl.ability {
                    issues.push(DeployError::DuplicateAbility {
                        agent: name.clone(),
                        ability: decl.ability.kind().as_str().to_string(),
                    });
                }
            }
            Some((best, _)) if *best > rank => {}
            _ => {
                by_kind.insert(decl.ability.kind(), (rank, &decl.ability));
            }
        }
    }
    let abilities = by_kind.into_values().map(|(_, a)| a.clone()).collect();
    (abilities, issues)
}

/// Resolves the quoted unit price for the given agent, most specific selector
/// winning; among equally specific quotes the first declared wins.
fn effective_quote(name: &AgentName, iaoa: &IaoaSection) -> Option<f64> {
    let mut best: Option<(usize, f64)> = None;
    for decl in &iaoa.quotes {
        if !decl.selector.matches(name.as_str()) {
            continue;
        }
        let rank = specificity(decl.selector.as_str());
        if best.is_none_or(|(r, _)| rank > r) {
            best = Some((rank, decl.price));
        }
    }
    best.map(|(_, price)| price)
}

/// Preference order for picking which stock a procure ability replenishes.
const STOCK_PREFERENCE: [StockKind; 3] =
    [StockKind::RawMaterial, StockKind::FinalProduct, StockKind::Wip];

/// Resolves the stock a procure ability monitors and replenishes, and fills
/// in missing reorder parameters from that stock's declaration.
fn resolve_procure(
    agent: &ActivityAgent,
    cam: &ConceptualAgentModel,
    abilities: &mut [Ability],
) -> (Option<ProcureTarget>, Vec<DeployError>) {
    let Some(procure) = abilities
        .iter_mut()
        .find(|a| a.kind() == AbilityKind::Procure)
    else {
        return (None, Vec::new());
    };
    // The procuring agent watches its own stock when it has one; a decision
    // agent without stock watches the first stocked execution agent of its
    // package instead.
    let holder = if cam.inventories_of(&agent.name).next().is_some() {
        Some(agent.name.clone())
    } else {
        agent.unit.as_ref().and_then(|unit| {
            cam.activity_agents
                .iter()
                .filter(|a| {
                    a.kind == AgentKind::Execution
                        && a.unit.as_ref() == Some(unit)
                        && cam.inventories_of(&a.name).next().is_some()
                })
                .map(|a| a.name.clone())
                .next() // agents are sorted by name: first hit is smallest
        })
    };
    let Some(holder) = holder else {
        return (
            None,
            vec![DeployError::ProcureNoStock {
                agent: agent.name.clone(),
            }],
        );
    };
    let (stock_kind, stock_point, stock_qty) = {
        let stocks: Vec<_> = cam.inventories_of(&holder).collect();
        let stock = STOCK_PREFERENCE
            .iter()
            .find_map(|kind| stocks.iter().find(|inv| inv.stock_kind == *kind))
            .expect("holder was chosen for having stock");
        (stock.stock_kind, stock.reorder_point, stock.reorder_qty)
    };

    let Ability::Procure { reorder_point, reorder_qty } = procure else {
        unreachable!("found by kind");
    };
    *reorder_point = reorder_point.or(stock_point);
    *reorder_qty = reorder_qty.or(stock_qty);
    let mut issues = Vec::new();
    if reorder_point.is_none() || reorder_qty.is_none() {
        issues.push(DeployError::ProcureUnderspecified {
            agent: agent.name.clone(),
        });
    }
    (
        Some(ProcureTarget {
            agent: holder,
            stock_kind,
        }),
        issues,
    )
}

/// Canonical message sequence for each protocol type.
pub(crate) fn sequence_of(protocol_type: ProtocolType) -> Vec<ProtocolStep> {
    use Performative::*;
    use Role::*;
    let step = |step, from_role, to_role, performatives: &[Performative]| ProtocolStep {
        step,
        from_role,
        to_role,
        performatives: performatives.to_vec(),
    };
    match protocol_type {
        ProtocolType::Communication | ProtocolType::TaskSharing => {
            vec![step(1, Initiator, Responder, &[Inform])]
        }
        ProtocolType::Coordination | ProtocolType::Negotiation => vec![
            step(1, Initiator, Responder, &[Need]),
            step(2, Responder, Initiator, &[Offer]),
            step(3, Initiator, Responder, &[Accept, Reject]),
        ],
        ProtocolType::Arbitration => vec![
            step(1, Initiator, Responder, &[Need]),
            step(2, Responder, Initiator, &[Offer]),
            step(3, Initiator, Mediator, &[Accept, Reject]),
            step(4, Mediator, Responder, &[Accept, Reject]),
        ],
    }
}

/// Resolves protocol declarations against the agent interactions.
///
/// Total: returns every resolvable protocol plus every problem found.
pub(crate) fn plan_protocols(
    cam: &ConceptualAgentModel,
    saoa: &SaoaSection,
) -> (Vec<ProtocolSpec>, Vec<DeployError>) {
    let mut issues = Vec::new();
    let mut specs = Vec::new();
    for decl in &saoa.protocols {
        let selected: Vec<InfoInteraction> = cam
            .informational_interactions
            .iter()
            .filter(|interaction| {
                decl.bindings.iter().any(|selector| {
                    interaction
                        .origins
                        .contains(&(selector.from.clone(), selector.to.clone()))
                })
            })
            .cloned()
            .collect();
        if selected.is_empty() {
            let hits_physical = cam.physical_interactions.iter().any(|interaction| {
                decl.bindings.iter().any(|selector| {
                    interaction
                        .origins
                        .contains(&(selector.from.clone(), selector.to.clone()))
                })
            });
            issues.push(if hits_physical {
                DeployError::ProtocolBoundToPhysical {
                    protocol: decl.name.clone(),
                }
            } else {
                DeployError::ProtocolUnbound {
                    protocol: decl.name.clone(),
                }
            });
            continue;
        }
        let initiators: Vec<AgentName> = selected
            .iter()
            .map(|i| i.from.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let responders: Vec<AgentName> = selected
            .iter()
            .map(|i| i.to.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if decl.protocol_type != ProtocolType::Arbitration && initiators.len() > 1 {
            issues.push(DeployError::MixedInitiators {
                protocol: decl.name.clone(),
            });
        }
        let mediator = if decl.protocol_type == ProtocolType::Arbitration {
            let parties: BTreeSet<&AgentName> =
                initiators.iter().chain(responders.iter()).collect();
            let found = saoa
                .directives
                .iter()
                .filter_map(|directive| match directive {
                    Directive::Mediator { agent, scope } => {
                        let scoped: BTreeSet<AgentName> = scope
                            .iter()
                            .map(|s| AgentName::from(s.as_str()))
                            .collect();
                        parties.iter().all(|p| scoped.contains(p)).then(|| agent.clone())
                    }
                    _ => None,
                })
                .min();
            if found.is_none() {
                issues.push(DeployError::ArbitrationNeedsMediator {
                    protocol: decl.name.clone(),
                });
            }
            found
        } else {
            None
        };
        specs.push(ProtocolSpec {
            name: decl.name.clone(),
            protocol_type: decl.protocol_type,
            initiators,
            responders,
            mediator,
            bound: selected,
            sequence: sequence_of(decl.protocol_type),
        });
    }
    specs.sort_by(|a, b| a.name.cmp(&b.name));
    (specs, issues)
}

/// Default trigger routing an ability into the behaviour machine.
fn default_trigger(kind: AbilityKind) -> Trigger {
    match kind {
        // Periodic review and demand facing the market follow the clock.
        AbilityKind::MonitorInventory | AbilityKind::Sell => {
            Trigger::Internal(InternalEvent::Timer)
        }
        // Replenishment and planning react to stock crossing a threshold.
        AbilityKind::Procure | AbilityKind::PlanProduction => {
            Trigger::Internal(InternalEvent::Threshold)
        }
        // Moving material is driven by orders arriving from other agents.
        AbilityKind::Dispatch | AbilityKind::Ship => {
            Trigger::External(ExternalEvent::Message(Performative::Inform))
        }
    }
}

const IDLE: &str = "idle";

/// Builds the behaviour machine: a passive rest state, one active state per
/// ability, an entry transition per ability, and a timer-driven return.
fn synth_behavior(abilities: &[Ability], rules: &[AgentRule]) -> Behavior {
    let mut states = vec![BehaviorState {
        name: IDLE.to_string(),
        kind: StateKind::Passive,
        activity: None,
    }];
    let mut transitions = Vec::new();
    for ability in abilities {
        let kind = ability.kind();
        let state_kind = match kind {
            AbilityKind::PlanProduction | AbilityKind::Dispatch => StateKind::ActiveComposite,
            _ => StateKind::ActiveElementary,
        };
        states.push(BehaviorState {
            name: kind.as_str().to_string(),
            kind: state_kind,
            activity: Some(kind),
        });
        // A reactive rule overrides the default trigger: the ability then
        // fires when its monitored quantity crosses the rule threshold.
        let trigger = if rules.iter().any(|r| r.action == kind) {
            Trigger::Internal(InternalEvent::Threshold)
        } else {
            default_trigger(kind)
        };
        transitions.push(Transition {
            from: IDLE.to_string(),
            to: kind.as_str().to_string(),
            trigger,
            action: Some(kind),
        });
        transitions.push(Transition {
            from: kind.as_str().to_string(),
            to: IDLE.to_string(),
            trigger: Trigger::Internal(InternalEvent::Timer),
            action: None,
        });
    }
    Behavior { states, transitions }
}

const ORDER_HANDLING: [AbilityKind; 5] = [
    AbilityKind::Procure,
    AbilityKind::PlanProduction,
    AbilityKind::Dispatch,
    AbilityKind::Ship,
    AbilityKind::Sell,
];

/// Derives the operational agent model.
///
/// Total: always returns a best-effort model plus every problem found.
pub(crate) fn plan_oam(
    cam: &ConceptualAgentModel,
    saoa: &SaoaSection,
    iaoa: &IaoaSection,
) -> (OperationalAgentModel, Vec<DeployError>) {
    let mut issues = Vec::new();
    let (protocols, protocol_issues) = plan_protocols(cam, saoa);
    issues.extend(protocol_issues);

    // Every selector must address at least one agent, else the declaration
    // is dead weight and almost certainly a typo.
    let selectors = iaoa
        .abilities
        .iter()
        .map(|d| &d.selector)
        .chain(iaoa.quotes.iter().map(|d| &d.selector))
        .chain(iaoa.responses.iter().map(|d| &d.selector));
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for selector in selectors {
        if !seen.insert(selector.as_str()) {
            continue;
        }
        if !cam
            .activity_agents
            .iter()
            .any(|a| selector.matches(a.name.as_str()))
        {
            issues.push(DeployError::SelectorUnmatched {
                selector: selector.as_str().to_string(),
            });
        }
    }

    let mut decision_society = Vec::new();
    let mut execution_society = Vec::new();
    for agent in &cam.activity_agents {
        let (mut abilities, ability_issues) = effective_abilities(&agent.name, iaoa);
        issues.extend(ability_issues);
        let (procure_target, procure_issues) = resolve_procure(agent, cam, &mut abilities);
        issues.extend(procure_issues);

        let mut rules = Vec::new();
        for decl in &iaoa.responses {
            if !decl.selector.matches(agent.name.as_str()) {
                continue;
            }
            if !abilities.iter().any(|a| a.kind() == decl.action) {
                issues.push(DeployError::ActionUndeclared {
                    agent: agent.name.clone(),
                    action: decl.action.as_str().to_string(),
                });
                continue;
            }
            rules.push(AgentRule {
                quantity: decl.quantity,
                comparator: decl.comparator,
                threshold: decl.threshold,
                action: decl.action,
            });
        }

        let mut knowledge: Vec<KnowledgeVar> = cam
            .inventories_of(&agent.name)
            .map(|inv| KnowledgeVar::Inventory {
                kind: inv.stock_kind,
                initial: inv.initial_qty,
                reorder_point: inv.reorder_point,
                reorder_qty: inv.reorder_qty,
            })
            .collect();
        if abilities.iter().any(|a| ORDER_HANDLING.contains(&a.kind())) {
            knowledge.push(KnowledgeVar::OrderBook);
        }
        if abilities.iter().any(|a| a.kind() == AbilityKind::PlanProduction) {
            knowledge.push(KnowledgeVar::PlanData);
        }

        let roles: Vec<RoleBinding> = protocols
            .iter()
            .filter_map(|p| {
                p.role_of(&agent.name).map(|role| RoleBinding {
                    protocol: p.name.clone(),
                    role,
                })
            })
            .collect();

        let behavior = synth_behavior(&abilities, &rules);
        let spec = AgentSpec {
            name: agent.name.clone(),
            society: if agent.kind == AgentKind::Execution {
                Society::Execution
            } else {
                Society::Decision
            },
            kind: agent.kind,
            package: agent.unit.clone(),
            level: agent.level,
            origin: agent.origin.clone(),
            knowledge,
            abilities,
            rules,
            quote_price: effective_quote(&agent.name, iaoa),
            procure_target,
            behavior,
            roles,
        };
        match spec.society {
            Society::Decision => decision_society.push(spec),
            Society::Execution => execution_society.push(spec),
        }
    }

    let mut responsibility_links = Vec::new();
    for execution in &execution_society {
        for decision in &decision_society {
            if decision.package.is_some() && decision.package == execution.package {
                responsibility_links.push(ResponsibilityLink {
                    decision: decision.name.clone(),
                    execution: execution.name.clone(),
                });
            }
        }
    }
    responsibility_links.sort();

    let bound: BTreeSet<&InfoInteraction> =
        protocols.iter().flat_map(|p| p.bound.iter()).collect();
    let unbound_channels: Vec<InfoInteraction> = cam
        .informational_interactions
        .iter()
        .filter(|i| !bound.contains(i))
        .cloned()
        .collect();

    (
        OperationalAgentModel {
            decision_society,
            execution_society,
            responsibility_links,
            protocols,
            unbound_channels,
            physical_routes: cam.physical_interactions.clone(),
            products: cam.objects.clone(),
        },
        issues,
    )
}

/// Derives the operational agent model from the conceptual one.
///
/// Fails fast on the first problem; run the validator over the source model
/// to see all of them at once.
pub fn build_oam(
    cam: &ConceptualAgentModel,
    saoa: &SaoaSection,
    iaoa: &IaoaSection,
) -> Result<OperationalAgentModel, DeployError> {
    let (oam, issues) = plan_oam(cam, saoa, iaoa);
    match issues.into_iter().next() {
        Some(issue) => Err(issue),
        None => Ok(oam),
    }
}
