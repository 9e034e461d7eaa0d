//! Data model for the FAMASS Model Language (FML): the four analysis
//! products carried by one `.fml` document.
//!
//! The sections mirror the four analysis perspectives: general and
//! experimental aspects (`Gpa`), the planning cube with its material and
//! informational flows (`Dpa`), social structures and protocols (`Saoa`),
//! and per-agent abilities and reactive rules (`Iaoa`). All types are plain
//! values with deterministic ordering so models compare, hash, and serialize
//! stably.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metamodel::{AgentName, BlockId, ProductId, SpatialUnit, SupplyChainBlock};
use crate::{Period, Qty};

/// The whole ingested analysis model. A missing section in the source
/// document is an empty section here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisModel {
    pub gpa: GpaSection,
    pub dpa: DpaSection,
    pub saoa: SaoaSection,
    pub iaoa: IaoaSection,
}

// ---------------------------------------------------------------------------
// GPA — general and experimental aspects
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GpaSection {
    pub objective: Option<String>,
    pub questions: Vec<String>,
    pub hypotheses: Vec<String>,
    pub factors: Vec<Factor>,
    pub uncertainties: Vec<Uncertainty>,
    pub kpis: Vec<KpiDecl>,
}

/// An experimental factor: an override path (e.g.
/// `ability.F1.tact.procure.reorder_qty` or `protocol.replenish.type`)
/// together with the levels to run it at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<FactorLevel>,
}

/// One level of a factor: a number, a bare symbol (identifier), or quoted
/// free text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorLevel {
    Number(f64),
    Symbol(String),
    Text(String),
}

impl fmt::Display for FactorLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorLevel::Number(x) => write!(f, "{x}"),
            FactorLevel::Symbol(s) => f.write_str(s),
            FactorLevel::Text(s) => write!(f, "{s:?}"),
        }
    }
}

/// A nuisance input sampled once per replication and applied as an override
/// on the named path before the run starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub name: String,
    pub distribution: UncertaintyDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyDist {
    None,
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

/// A declared key performance indicator and the built-in metric backing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KpiDecl {
    pub name: String,
    pub metric: KpiMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KpiMetric {
    AvgInventory,
    FillRate,
    BackorderCount,
    TotalCost,
    CycleTime,
}

impl KpiMetric {
    pub const ALL: [KpiMetric; 5] = [
        KpiMetric::AvgInventory,
        KpiMetric::FillRate,
        KpiMetric::BackorderCount,
        KpiMetric::TotalCost,
        KpiMetric::CycleTime,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KpiMetric::AvgInventory => "avg_inventory",
            KpiMetric::FillRate => "fill_rate",
            KpiMetric::BackorderCount => "backorder_count",
            KpiMetric::TotalCost => "total_cost",
            KpiMetric::CycleTime => "cycle_time",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for KpiMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

// ---------------------------------------------------------------------------
// DPA — distributed planning analysis
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DpaSection {
    pub units: Vec<SpatialUnit>,
    pub products: Vec<Product>,
    pub blocks: Vec<SupplyChainBlock>,
    pub relations: Vec<Relation>,
    pub decoupling_point: Option<BlockId>,
    pub inventories: Vec<InventoryDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Product {
    pub id: ProductId,
    pub name: Option<String>,
}

/// A directed interaction between two blocks: material (physical) or
/// message-based (informational).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub from: BlockId,
    pub to: BlockId,
    /// Carried product — physical relations only.
    pub product: Option<ProductId>,
    /// Flow type — informational relations only.
    pub info_type: Option<InfoType>,
    /// Optional specialization key so split directives can decide which
    /// specialized agent inherits this relation.
    pub key: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Physical,
    Informational,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Physical => "physical",
            RelationKind::Informational => "informational",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "physical" => Some(RelationKind::Physical),
            "informational" => Some(RelationKind::Informational),
            _ => None,
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four informational flow types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoType {
    NeedsExpression,
    OffersExpression,
    Coordination,
    ModelExchange,
}

impl InfoType {
    pub const ALL: [InfoType; 4] = [
        InfoType::NeedsExpression,
        InfoType::OffersExpression,
        InfoType::Coordination,
        InfoType::ModelExchange,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InfoType::NeedsExpression => "needs_expression",
            InfoType::OffersExpression => "offers_expression",
            InfoType::Coordination => "coordination",
            InfoType::ModelExchange => "model_exchange",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for InfoType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stock position kept by an execution block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StockKind {
    RawMaterial,
    Wip,
    FinalProduct,
}

impl StockKind {
    pub const ALL: [StockKind; 3] = [StockKind::RawMaterial, StockKind::Wip, StockKind::FinalProduct];

    pub fn as_str(self) -> &'static str {
        match self {
            StockKind::RawMaterial => "raw_material",
            StockKind::Wip => "wip",
            StockKind::FinalProduct => "final_product",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for StockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An inventory position held by a block, one declaration per
/// (block, stock kind) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryDecl {
    pub block: BlockId,
    pub stock_kind: StockKind,
    pub initial_qty: Qty,
    pub reorder_point: Option<Qty>,
    pub reorder_qty: Option<Qty>,
}

// ---------------------------------------------------------------------------
// SAOA — social agent organization analysis
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaoaSection {
    pub social_structure: SocialStructure,
    pub directives: Vec<Directive>,
    pub protocols: Vec<ProtocolDecl>,
}

impl Default for SaoaSection {
    fn default() -> Self {
        SaoaSection {
            social_structure: SocialStructure::Hierarchical,
            directives: Vec::new(),
            protocols: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocialStructure {
    Hierarchical,
    Federated,
    Autonomous,
}

impl SocialStructure {
    pub fn as_str(self) -> &'static str {
        match self {
            SocialStructure::Hierarchical => "hierarchical",
            SocialStructure::Federated => "federated",
            SocialStructure::Autonomous => "autonomous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hierarchical" => Some(SocialStructure::Hierarchical),
            "federated" => Some(SocialStructure::Federated),
            "autonomous" => Some(SocialStructure::Autonomous),
            _ => None,
        }
    }
}

impl fmt::Display for SocialStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How blocks become agents, beyond the default one-block-one-agent rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directive {
    /// Fuse several blocks into a single agent.
    Merge { agent: AgentName, blocks: Vec<BlockId> },
    /// Replace one block with several specialized agents.
    Split { block: BlockId, parts: Vec<SplitPart> },
    /// Introduce a coordinating agent over the named agents.
    Mediator { agent: AgentName, scope: Vec<AgentName> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPart {
    pub agent: AgentName,
    pub specialization: Specialization,
    pub key: String,
}

/// Dimension along which a split specializes its parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Specialization {
    Product,
    Processor,
    Process,
    Project,
}

impl Specialization {
    pub const ALL: [Specialization; 4] = [
        Specialization::Product,
        Specialization::Processor,
        Specialization::Process,
        Specialization::Project,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Specialization::Product => "product",
            Specialization::Processor => "processor",
            Specialization::Process => "process",
            Specialization::Project => "project",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for Specialization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A declared social protocol and the informational relations it governs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolDecl {
    pub name: String,
    pub protocol_type: ProtocolType,
    pub bindings: Vec<RelationSelector>,
}

/// Selects every informational relation with the given endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSelector {
    pub from: BlockId,
    pub to: BlockId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolType {
    Communication,
    Coordination,
    TaskSharing,
    Negotiation,
    Arbitration,
}

impl ProtocolType {
    pub const ALL: [ProtocolType; 5] = [
        ProtocolType::Communication,
        ProtocolType::Coordination,
        ProtocolType::TaskSharing,
        ProtocolType::Negotiation,
        ProtocolType::Arbitration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolType::Communication => "communication",
            ProtocolType::Coordination => "coordination",
            ProtocolType::TaskSharing => "task_sharing",
            ProtocolType::Negotiation => "negotiation",
            ProtocolType::Arbitration => "arbitration",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for ProtocolType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

// ---------------------------------------------------------------------------
// IAOA — internal agent organization analysis
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IaoaSection {
    pub abilities: Vec<AbilityDecl>,
    pub quotes: Vec<QuoteDecl>,
    pub responses: Vec<ResponseRule>,
}

/// Grants one ability to every agent matched by the selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbilityDecl {
    pub selector: AgentSelector,
    pub ability: Ability,
}

/// Matches operational agents by exact name, or by prefix when the selector
/// ends in `*` (e.g. `F1.*`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentSelector(pub String);

impl AgentSelector {
    pub fn new(s: impl Into<String>) -> Self {
        AgentSelector(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn matches(&self, agent_name: &str) -> bool {
        match self.0.strip_suffix('*') {
            Some(prefix) => agent_name.starts_with(prefix),
            None => agent_name == self.0,
        }
    }
}

impl fmt::Display for AgentSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The response space: the general abilities an agent may hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ability {
    MonitorInventory,
    /// Reorder parameters may be omitted, in which case they fall back to
    /// the reorder data on the monitored inventory declaration.
    Procure { reorder_point: Option<Qty>, reorder_qty: Option<Qty> },
    PlanProduction { policy: PlanPolicy },
    Dispatch { rule: DispatchRule, capacity: Option<Qty> },
    Ship { lead_time: Period },
    Sell { demand: DemandSpec },
}

impl Ability {
    /// The keyword naming this ability kind, used by response-rule actions.
    pub fn kind(&self) -> AbilityKind {
        match self {
            Ability::MonitorInventory => AbilityKind::MonitorInventory,
            Ability::Procure { .. } => AbilityKind::Procure,
            Ability::PlanProduction { .. } => AbilityKind::PlanProduction,
            Ability::Dispatch { .. } => AbilityKind::Dispatch,
            Ability::Ship { .. } => AbilityKind::Ship,
            Ability::Sell { .. } => AbilityKind::Sell,
        }
    }
}

/// Ability names, without parameters — identifies which ability a response
/// rule triggers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbilityKind {
    MonitorInventory,
    Procure,
    PlanProduction,
    Dispatch,
    Ship,
    Sell,
}

impl AbilityKind {
    pub const ALL: [AbilityKind; 6] = [
        AbilityKind::MonitorInventory,
        AbilityKind::Procure,
        AbilityKind::PlanProduction,
        AbilityKind::Dispatch,
        AbilityKind::Ship,
        AbilityKind::Sell,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AbilityKind::MonitorInventory => "monitor_inventory",
            AbilityKind::Procure => "procure",
            AbilityKind::PlanProduction => "plan_production",
            AbilityKind::Dispatch => "dispatch",
            AbilityKind::Ship => "ship",
            AbilityKind::Sell => "sell",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for AbilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanPolicy {
    LotForLot,
}

impl PlanPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanPolicy::LotForLot => "lot_for_lot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        (s == "lot_for_lot").then_some(PlanPolicy::LotForLot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispatchRule {
    Fifo,
}

impl DispatchRule {
    pub fn as_str(self) -> &'static str {
        match self {
            DispatchRule::Fifo => "fifo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        (s == "fifo").then_some(DispatchRule::Fifo)
    }
}

/// Demand stream faced by a selling agent, one draw per period. Continuous
/// draws are truncated at zero and rounded half-up to whole units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandSpec {
    Constant { rate: Qty },
    Uniform { lo: Qty, hi: Qty },
    Normal { mean: f64, sd: f64 },
}

/// Standing unit price an agent quotes when making offers. Agents without a
/// quote offer at price 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteDecl {
    pub selector: AgentSelector,
    pub price: f64,
}

/// Reactive rule: when the condition over a monitored quantity holds at the
/// start of the agent's activation, the named ability is enabled this period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRule {
    pub selector: AgentSelector,
    pub quantity: MonitoredQuantity,
    pub comparator: Comparator,
    pub threshold: Qty,
    pub action: AbilityKind,
}

/// State variable a response rule may observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitoredQuantity {
    OnHand(StockKind),
    OnOrder,
    Backorders,
    /// on_hand(kind) + on_order − backorders
    InventoryPosition(StockKind),
}

impl fmt::Display for MonitoredQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonitoredQuantity::OnHand(k) => write!(f, "on_hand {k}"),
            MonitoredQuantity::OnOrder => f.write_str("on_order"),
            MonitoredQuantity::Backorders => f.write_str("backorders"),
            MonitoredQuantity::InventoryPosition(k) => write!(f, "inventory_position {k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Comparator {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "<" => Some(Comparator::Lt),
            "<=" => Some(Comparator::Le),
            ">" => Some(Comparator::Gt),
            ">=" => Some(Comparator::Ge),
            "==" => Some(Comparator::Eq),
            "!=" => Some(Comparator::Ne),
            _ => None,
        }
    }

    pub fn holds(self, lhs: Qty, rhs: Qty) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
