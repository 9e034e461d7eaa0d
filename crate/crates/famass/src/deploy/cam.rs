//! Conceptual agent model: maps the domain model onto a society of agents.
//!
//! Block-to-agent mapping is driven by the social design directives:
//!
//! * every block not named by a directive becomes one activity agent;
//! * `merge` folds several same-unit, same-society blocks into one agent;
//! * `split` replaces one block by specialised agents that partition its
//!   interactions by product, processor, process, or project key;
//! * `mediator` introduces a broker agent with coordination channels to
//!   every agent in its scope.
//!
//! The planning helpers in this module are total: they return every problem
//! they find alongside the best-effort plan, so the validator can surface
//! all of them at once. [`build_cam`] is the fail-fast wrapper used by the
//! deployment pipeline.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::deploy::dm::{DomainModel, InfoLink, PhysicalLink};
use crate::deploy::DeployError;
use crate::fml::model::{
    Directive, InfoType, InventoryDecl, Product, SaoaSection, Specialization, SplitPart, StockKind,
};
use crate::metamodel::{
    AgentName, BlockId, DecisionLevel, FunctionalArea, ProductId, SpatialUnit, SupplyChainBlock,
    UnitId,
};
use crate::Qty;

/// How an activity agent participates in the society.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Plans and coordinates: strategic, tactical, or operational origin.
    Decision,
    /// Transforms and moves material: execution origin.
    Execution,
    /// Introduced by a `mediator` directive; brokers between other agents.
    Mediator,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Decision => "decision",
            AgentKind::Execution => "execution",
            AgentKind::Mediator => "mediator",
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An agent responsible for a coherent slice of planning or execution work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityAgent {
    pub name: AgentName,
    pub kind: AgentKind,
    /// Decision level inherited from the origin blocks; `None` for mediators.
    pub level: Option<DecisionLevel>,
    /// Home unit; `None` for mediators, which sit outside every package.
    pub unit: Option<UnitId>,
    pub functions: BTreeSet<FunctionalArea>,
    /// Blocks this agent was derived from, sorted. Empty for mediators.
    pub origin: Vec<BlockId>,
}

/// Package grouping the activity agents hosted by one spatial unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorAgent {
    pub name: AgentName,
    pub unit: SpatialUnit,
    /// Member activity agents, sorted by name.
    pub members: Vec<AgentName>,
}

/// Material flow between two execution agents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhysicalInteraction {
    pub from: AgentName,
    pub to: AgentName,
    pub product: ProductId,
    /// Domain-model links this interaction realises, sorted.
    pub origins: Vec<(BlockId, BlockId)>,
}

/// Information exchange between two agents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InfoInteraction {
    pub from: AgentName,
    pub to: AgentName,
    pub info_type: InfoType,
    /// Domain-model links this interaction realises, sorted. Empty for
    /// channels introduced by a mediator directive.
    pub origins: Vec<(BlockId, BlockId)>,
}

/// A stock held by an agent after block-to-agent mapping.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentInventory {
    pub agent: AgentName,
    pub stock_kind: StockKind,
    pub initial_qty: Qty,
    pub reorder_point: Option<Qty>,
    pub reorder_qty: Option<Qty>,
}

/// The agent society derived from a domain model and its social design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptualAgentModel {
    /// One package per spatial unit, sorted by unit id.
    pub actor_agents: Vec<ActorAgent>,
    /// All activity agents, sorted by name.
    pub activity_agents: Vec<ActivityAgent>,
    /// Products that flow across physical interactions, sorted by id.
    pub objects: Vec<Product>,
    pub physical_interactions: Vec<PhysicalInteraction>,
    pub informational_interactions: Vec<InfoInteraction>,
    /// Stocks after mapping, sorted by (agent, kind).
    pub inventories: Vec<AgentInventory>,
}

impl ConceptualAgentModel {
    pub fn agent(&self, name: &AgentName) -> Option<&ActivityAgent> {
        self.activity_agents
            .binary_search_by(|a| a.name.cmp(name))
            .ok()
            .map(|i| &self.activity_agents[i])
    }

    pub fn inventories_of<'a>(
        &'a self,
        name: &'a AgentName,
    ) -> impl Iterator<Item = &'a AgentInventory> + 'a {
        self.inventories.iter().filter(move |inv| &inv.agent == name)
    }
}

/// Where a block's interactions land after directive application.
#[derive(Debug, Clone)]
pub(crate) enum Target {
    /// The block maps to one agent (identity or merge).
    One(AgentName),
    /// The block was split; interactions are routed by part key.
    Parts(Vec<SplitPart>),
}

/// Result of block-to-agent planning.
#[derive(Debug, Clone, Default)]
pub(crate) struct AgentPlan {
    /// Planned agents, sorted by name.
    pub agents: Vec<ActivityAgent>,
    /// Routing table from origin block to its agent(s).
    pub targets: BTreeMap<BlockId, Target>,
    pub issues: Vec<DeployError>,
}

impl AgentPlan {
    pub fn agent(&self, name: &AgentName) -> Option<&ActivityAgent> {
        self.agents
            .binary_search_by(|a| a.name.cmp(name))
            .ok()
            .map(|i| &self.agents[i])
    }
}

fn society_of(level: DecisionLevel) -> AgentKind {
    if level == DecisionLevel::Execution {
        AgentKind::Execution
    } else {
        AgentKind::Decision
    }
}

/// Applies the social design directives to the block network.
///
/// Total: always returns a usable plan plus every problem found. Blocks named
/// by a directive that cannot be applied keep their identity mapping so later
/// stages still have something coherent to work with.
pub(crate) fn plan_agents(blocks: &[SupplyChainBlock], saoa: &SaoaSection) -> AgentPlan {
    let mut issues = Vec::new();
    let by_id: BTreeMap<&BlockId, &SupplyChainBlock> =
        blocks.iter().map(|b| (&b.id, b)).collect();

    // First pass: which blocks are consumed by which directive. A block may
    // be source material for at most one merge or split.
    let mut consumed: BTreeSet<&BlockId> = BTreeSet::new();
    let mut applied: Vec<(usize, bool)> = Vec::new(); // (directive index, usable)
    for (index, directive) in saoa.directives.iter().enumerate() {
        let sources: Vec<&BlockId> = match directive {
            Directive::Merge { blocks, .. } => blocks.iter().collect(),
            Directive::Split { block, .. } => vec![block],
            Directive::Mediator { .. } => {
                applied.push((index, true));
                continue;
            }
        };
        let mut usable = true;
        for id in sources {
            if !by_id.contains_key(id) {
                issues.push(DeployError::DanglingBlock {
                    id: id.clone(),
                    context: directive_context(directive),
                });
                usable = false;
            } else if !consumed.insert(id) {
                issues.push(DeployError::DirectiveConflict { block: id.clone() });
                usable = false;
            }
        }
        applied.push((index, usable));
    }

    let mut agents: BTreeMap<AgentName, ActivityAgent> = BTreeMap::new();
    let mut targets: BTreeMap<BlockId, Target> = BTreeMap::new();
    let claim = |agent: ActivityAgent,
                     agents: &mut BTreeMap<AgentName, ActivityAgent>,
                     issues: &mut Vec<DeployError>| {
        if agents.contains_key(&agent.name) {
            issues.push(DeployError::DuplicateAgentName {
                name: agent.name.clone(),
            });
        } else {
            agents.insert(agent.name.clone(), agent);
        }
    };

    // Identity mapping for untouched blocks.
    for block in blocks {
        if consumed.contains(&block.id) {
            continue;
        }
        claim(
            ActivityAgent {
                name: AgentName::from(block.id.as_str()),
                kind: society_of(block.level),
                level: Some(block.level),
                unit: Some(block.unit.clone()),
                functions: block.functions.clone(),
                origin: vec![block.id.clone()],
            },
            &mut agents,
            &mut issues,
        );
        targets.insert(
            block.id.clone(),
            Target::One(AgentName::from(block.id.as_str())),
        );
    }

    // Apply merge and split directives that survived the first pass.
    for (index, usable) in &applied {
        if !usable {
            continue;
        }
        match &saoa.directives[*index] {
            Directive::Merge { agent, blocks: ids } => {
                let members: Vec<&SupplyChainBlock> =
                    ids.iter().map(|id| by_id[id]).collect();
                let units: BTreeSet<&UnitId> = members.iter().map(|b| &b.unit).collect();
                if units.len() > 1 {
                    issues.push(DeployError::MergeMixesUnits {
                        agent: agent.clone(),
                    });
                }
                let societies: BTreeSet<AgentKind> =
                    members.iter().map(|b| society_of(b.level)).collect();
                if societies.len() > 1 {
                    issues.push(DeployError::MergeMixesSocieties {
                        agent: agent.clone(),
                    });
                }
                // The merged agent plans at the highest level present so it
                // can stand in for every member it absorbed.
                let level = members.iter().map(|b| b.level).min().unwrap();
                let functions = members
                    .iter()
                    .flat_map(|b| b.functions.iter().copied())
                    .collect();
                let mut origin: Vec<BlockId> =
                    members.iter().map(|b| b.id.clone()).collect();
                origin.sort();
                origin.dedup();
                claim(
                    ActivityAgent {
                        name: agent.clone(),
                        kind: society_of(level),
                        level: Some(level),
                        unit: Some(members[0].unit.clone()),
                        functions,
                        origin,
                    },
                    &mut agents,
                    &mut issues,
                );
                for id in ids {
                    targets.insert(id.clone(), Target::One(agent.clone()));
                }
            }
            Directive::Split { block, parts } => {
                let source = by_id[block];
                for part in parts {
                    claim(
                        ActivityAgent {
                            name: part.agent.clone(),
                            kind: society_of(source.level),
                            level: Some(source.level),
                            unit: Some(source.unit.clone()),
                            functions: source.functions.clone(),
                            origin: vec![source.id.clone()],
                        },
                        &mut agents,
                        &mut issues,
                    );
                }
                targets.insert(block.clone(), Target::Parts(parts.clone()));
            }
            Directive::Mediator { .. } => {}
        }
    }

    // Mediators join last so their scopes can reference any planned agent.
    for directive in &saoa.directives {
        if let Directive::Mediator { agent, .. } = directive {
            claim(
                ActivityAgent {
                    name: agent.clone(),
                    kind: AgentKind::Mediator,
                    level: None,
                    unit: None,
                    functions: BTreeSet::new(),
                    origin: Vec::new(),
                },
                &mut agents,
                &mut issues,
            );
        }
    }
    for directive in &saoa.directives {
        if let Directive::Mediator { agent, scope } = directive {
            for name in scope {
                let target = AgentName::from(name.as_str());
                if target.as_str() == agent.as_str() || !agents.contains_key(&target) {
                    issues.push(DeployError::MediatorUnknownAgent {
                        mediator: agent.clone(),
                        name: target,
                    });
                }
            }
        }
    }

    AgentPlan {
        agents: agents.into_values().collect(),
        targets,
        issues,
    }
}

fn directive_context(directive: &Directive) -> String {
    match directive {
        Directive::Merge { agent, .. } => format!("merge {agent}"),
        Directive::Split { block, .. } => format!("split {block}"),
        Directive::Mediator { agent, .. } => format!("mediator {agent}"),
    }
}

/// What a link carries, for routing it through a split.
#[derive(Clone, Copy)]
enum Payload<'a> {
    Product(&'a ProductId, Option<&'a str>),
    Info(Option<&'a str>),
}

impl Payload<'_> {
    fn matches(self, part: &SplitPart) -> bool {
        let (product, key) = match self {
            Payload::Product(product, key) => (Some(product.as_str()), key),
            Payload::Info(key) => (None, key),
        };
        if part.specialization == Specialization::Product && product == Some(part.key.as_str()) {
            return true;
        }
        key == Some(part.key.as_str())
    }
}

/// Resolves one endpoint of a link to agent names, or reports why it cannot.
fn route_endpoint(
    block: &BlockId,
    payload: Payload<'_>,
    link: (&BlockId, &BlockId),
    plan: &AgentPlan,
    issues: &mut Vec<DeployError>,
) -> Vec<AgentName> {
    match plan.targets.get(block) {
        None => {
            issues.push(DeployError::DanglingBlock {
                id: block.clone(),
                context: format!("relation {} -> {}", link.0, link.1),
            });
            Vec::new()
        }
        Some(Target::One(name)) => vec![name.clone()],
        Some(Target::Parts(parts)) => {
            let hits: Vec<AgentName> = parts
                .iter()
                .filter(|part| payload.matches(part))
                .map(|part| part.agent.clone())
                .collect();
            match hits.len() {
                0 => {
                    issues.push(DeployError::SplitUncovered {
                        block: block.clone(),
                        from: link.0.clone(),
                        to: link.1.clone(),
                    });
                    Vec::new()
                }
                1 => hits,
                _ => {
                    issues.push(DeployError::SplitAmbiguous {
                        block: block.clone(),
                        from: link.0.clone(),
                        to: link.1.clone(),
                    });
                    Vec::new()
                }
            }
        }
    }
}

/// Maps domain-model links onto agent interactions.
///
/// Total: returns the interactions it could route plus every routing problem.
/// Self-interactions (both endpoints landing on the same agent, as happens
/// after a merge) are internalised and dropped. Distinct links that land on
/// the same endpoints and carry the same payload collapse into one
/// interaction that records all of its origins.
pub(crate) fn map_interactions(
    physical_links: &[PhysicalLink],
    info_links: &[InfoLink],
    plan: &AgentPlan,
) -> (Vec<PhysicalInteraction>, Vec<InfoInteraction>, Vec<DeployError>) {
    let mut issues = Vec::new();

    let mut physical: BTreeMap<(AgentName, AgentName, ProductId), BTreeSet<(BlockId, BlockId)>> =
        BTreeMap::new();
    for link in physical_links {
        let payload = Payload::Product(&link.product, link.key.as_deref());
        let ends = (&link.from, &link.to);
        let froms = route_endpoint(&link.from, payload, ends, plan, &mut issues);
        let tos = route_endpoint(&link.to, payload, ends, plan, &mut issues);
        for from in &froms {
            for to in &tos {
                if from == to {
                    continue;
                }
                physical
                    .entry((from.clone(), to.clone(), link.product.clone()))
                    .or_default()
                    .insert((link.from.clone(), link.to.clone()));
            }
        }
    }

    let mut informational: BTreeMap<(AgentName, AgentName, InfoType), BTreeSet<(BlockId, BlockId)>> =
        BTreeMap::new();
    for link in info_links {
        let payload = Payload::Info(link.key.as_deref());
        let ends = (&link.from, &link.to);
        let froms = route_endpoint(&link.from, payload, ends, plan, &mut issues);
        let tos = route_endpoint(&link.to, payload, ends, plan, &mut issues);
        for from in &froms {
            for to in &tos {
                if from == to {
                    continue;
                }
                informational
                    .entry((from.clone(), to.clone(), link.info_type))
                    .or_default()
                    .insert((link.from.clone(), link.to.clone()));
            }
        }
    }

    let physical = physical
        .into_iter()
        .map(|((from, to, product), origins)| PhysicalInteraction {
            from,
            to,
            product,
            origins: origins.into_iter().collect(),
        })
        .collect();
    let informational = informational
        .into_iter()
        .map(|((from, to, info_type), origins)| InfoInteraction {
            from,
            to,
            info_type,
            origins: origins.into_iter().collect(),
        })
        .collect();
    (physical, informational, issues)
}

/// Coordination channels owed to mediator directives: one channel each way
/// between the mediator and every agent in its scope.
fn mediator_channels(saoa: &SaoaSection, plan: &AgentPlan) -> Vec<InfoInteraction> {
    let mut channels = BTreeSet::new();
    for directive in &saoa.directives {
        if let Directive::Mediator { agent, scope } = directive {
            for name in scope {
                let peer = AgentName::from(name.as_str());
                if plan.agent(&peer).is_none() || peer == *agent {
                    continue; // already reported by plan_agents
                }
                channels.insert(InfoInteraction {
                    from: agent.clone(),
                    to: peer.clone(),
                    info_type: InfoType::Coordination,
                    origins: Vec::new(),
                });
                channels.insert(InfoInteraction {
                    from: peer,
                    to: agent.clone(),
                    info_type: InfoType::Coordination,
                    origins: Vec::new(),
                });
            }
        }
    }
    channels.into_iter().collect()
}

/// Maps block stocks onto agent stocks.
///
/// A split copies the stock to every part (each specialist keeps visibility
/// of the shared store); a merge folds same-kind stocks together by summing
/// the on-hand quantity and keeping the widest reorder parameters.
pub(crate) fn map_inventories(
    inventories: &[InventoryDecl],
    plan: &AgentPlan,
) -> (Vec<AgentInventory>, Vec<DeployError>) {
    let mut issues = Vec::new();
    let mut merged: BTreeMap<(AgentName, StockKind), AgentInventory> = BTreeMap::new();
    for decl in inventories {
        let owners: Vec<AgentName> = match plan.targets.get(&decl.block) {
            None => {
                issues.push(DeployError::DanglingBlock {
                    id: decl.block.clone(),
                    context: format!("inventory {}", decl.stock_kind),
                });
                continue;
            }
            Some(Target::One(name)) => vec![name.clone()],
            Some(Target::Parts(parts)) => parts.iter().map(|p| p.agent.clone()).collect(),
        };
        for owner in owners {
            merged
                .entry((owner.clone(), decl.stock_kind))
                .and_modify(|inv| {
                    inv.initial_qty += decl.initial_qty;
                    inv.reorder_point = inv.reorder_point.max(decl.reorder_point);
                    inv.reorder_qty = inv.reorder_qty.max(decl.reorder_qty);
                })
                .or_insert(AgentInventory {
                    agent: owner,
                    stock_kind: decl.stock_kind,
                    initial_qty: decl.initial_qty,
                    reorder_point: decl.reorder_point,
                    reorder_qty: decl.reorder_qty,
                });
        }
    }
    (merged.into_values().collect(), issues)
}

/// Derives the conceptual agent model from a domain model and social design.
///
/// Total: always returns a best-effort model plus every problem found.
pub(crate) fn plan_cam(
    dm: &DomainModel,
    saoa: &SaoaSection,
) -> (ConceptualAgentModel, Vec<DeployError>) {
    let AgentPlan {
        agents,
        targets,
        issues: mut all_issues,
    } = plan_agents(&dm.structural.blocks, saoa);
    let plan = AgentPlan {
        agents,
        targets,
        issues: Vec::new(),
    };
    let (physical, mut informational, issues) = map_interactions(
        &dm.structural.physical_links,
        &dm.dynamic.info_links,
        &plan,
    );
    all_issues.extend(issues);
    for channel in mediator_channels(saoa, &plan) {
        if !informational
            .iter()
            .any(|i| i.from == channel.from && i.to == channel.to && i.info_type == channel.info_type)
        {
            informational.push(channel);
        }
    }
    informational.sort();

    let (inventories, issues) = map_inventories(&dm.dynamic.inventories, &plan);
    all_issues.extend(issues);

    let catalogue: BTreeMap<&ProductId, &Product> =
        dm.structural.products.iter().map(|p| (&p.id, p)).collect();
    let objects: Vec<Product> = physical
        .iter()
        .map(|i| &i.product)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|id| {
            catalogue.get(id).copied().cloned().unwrap_or(Product {
                id: id.clone(),
                name: None,
            })
        })
        .collect();

    let actor_agents = dm
        .structural
        .units
        .iter()
        .map(|unit| ActorAgent {
            name: AgentName::from(unit.id.as_str()),
            unit: unit.clone(),
            members: plan
                .agents
                .iter()
                .filter(|a| a.unit.as_ref() == Some(&unit.id))
                .map(|a| a.name.clone())
                .collect(),
        })
        .collect();

    (
        ConceptualAgentModel {
            actor_agents,
            activity_agents: plan.agents,
            objects,
            physical_interactions: physical,
            informational_interactions: informational,
            inventories,
        },
        all_issues,
    )
}

/// Derives the conceptual agent model from a domain model and social design.
///
/// Fails fast on the first planning problem; run the validator over the
/// source model to see all of them at once.
pub fn build_cam(
    dm: &DomainModel,
    saoa: &SaoaSection,
) -> Result<ConceptualAgentModel, DeployError> {
    let (cam, issues) = plan_cam(dm, saoa);
    match issues.into_iter().next() {
        Some(issue) => Err(issue),
        None => Ok(cam),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deploy::dm::build_domain_model;
    use crate::fml::model::{DpaSection, Relation, RelationKind};

    fn block(id: &str, unit: &str, level: DecisionLevel) -> SupplyChainBlock {
        SupplyChainBlock {
            id: BlockId::from(id),
            unit: UnitId::from(unit),
            level,
            functions: [FunctionalArea::Distribution].into(),
            responsibilities: Vec::new(),
        }
    }

    fn unit(id: &str) -> SpatialUnit {
        SpatialUnit {
            id: UnitId::from(id),
            name: id.to_string(),
            role: crate::metamodel::SpatialRole::Facility,
        }
    }

    fn physical(from: &str, to: &str, product: &str) -> Relation {
        Relation {
            kind: RelationKind::Physical,
            from: BlockId::from(from),
            to: BlockId::from(to),
            product: Some(ProductId::from(product)),
            info_type: None,
            key: None,
        }
    }

    fn informational(from: &str, to: &str, info_type: InfoType) -> Relation {
        Relation {
            kind: RelationKind::Informational,
            from: BlockId::from(from),
            to: BlockId::from(to),
            product: None,
            info_type: Some(info_type),
            key: None,
        }
    }

    #[test]
    fn identity_mapping_preserves_blocks_and_links() {
        let dpa = DpaSection {
            units: vec![unit("U1"), unit("U2")],
            blocks: vec![
                block("a", "U1", DecisionLevel::Execution),
                block("b", "U2", DecisionLevel::Execution),
            ],
            relations: vec![physical("a", "b", "P1")],
            ..Default::default()
        };
        let dm = build_domain_model(&dpa).unwrap();
        let cam = build_cam(&dm, &SaoaSection::default()).unwrap();
        assert_eq!(cam.activity_agents.len(), 2);
        assert_eq!(cam.physical_interactions.len(), 1);
        assert_eq!(
            cam.physical_interactions[0].origins,
            vec![(BlockId::from("a"), BlockId::from("b"))]
        );
        assert_eq!(cam.actor_agents.len(), 2);
        assert_eq!(cam.actor_agents[0].members, vec![AgentName::from("a")]);
    }

    #[test]
    fn merge_internalises_links_between_members() {
        let dpa = DpaSection {
            units: vec![unit("U1")],
            blocks: vec![
                block("a", "U1", DecisionLevel::Tactical),
                block("b", "U1", DecisionLevel::Operational),
            ],
            relations: vec![informational("a", "b", InfoType::Coordination)],
            ..Default::default()
        };
        let dm = build_domain_model(&dpa).unwrap();
        let saoa = SaoaSection {
            directives: vec![Directive::Merge {
                agent: AgentName::from("ab"),
                blocks: vec![BlockId::from("a"), BlockId::from("b")],
            }],
            ..Default::default()
        };
        let cam = build_cam(&dm, &saoa).unwrap();
        assert_eq!(cam.activity_agents.len(), 1);
        let merged = &cam.activity_agents[0];
        assert_eq!(merged.name, AgentName::from("ab"));
        // The merged agent answers for the widest planning horizon present.
        assert_eq!(merged.level, Some(DecisionLevel::Tactical));
        assert_eq!(merged.origin, vec![BlockId::from("a"), BlockId::from("b")]);
        // The a -> b exchange became internal to the merged agent.
        assert!(cam.informational_interactions.is_empty());
    }

    #[test]
    fn merge_across_units_is_rejected() {
        let dpa = DpaSection {
            units: vec![unit("U1"), unit("U2")],
            blocks: vec![
                block("a", "U1", DecisionLevel::Tactical),
                block("b", "U2", DecisionLevel::Tactical),
            ],
            ..Default::default()
        };
        let dm = build_domain_model(&dpa).unwrap();
        let saoa = SaoaSection {
            directives: vec![Directive::Merge {
                agent: AgentName::from("ab"),
                blocks: vec![BlockId::from("a"), BlockId::from("b")],
            }],
            ..Default::default()
        };
        let err = build_cam(&dm, &saoa).unwrap_err();
        assert!(matches!(err, DeployError::MergeMixesUnits { .. }));
    }

    #[test]
    fn split_routes_links_by_product_key() {
        let dpa = DpaSection {
            units: vec![unit("U1"), unit("U2")],
            blocks: vec![
                block("src", "U1", DecisionLevel::Execution),
                block("dst", "U2", DecisionLevel::Execution),
            ],
            relations: vec![physical("src", "dst", "P1"), physical("src", "dst", "P2")],
            ..Default::default()
        };
        let dm = build_domain_model(&dpa).unwrap();
        let saoa = SaoaSection {
            directives: vec![Directive::Split {
                block: BlockId::from("src"),
                parts: vec![
                    SplitPart {
                        agent: AgentName::from("src_p1"),
                        specialization: Specialization::Product,
                        key: "P1".to_string(),
                    },
                    SplitPart {
                        agent: AgentName::from("src_p2"),
                        specialization: Specialization::Product,
                        key: "P2".to_string(),
                    },
                ],
            }],
            ..Default::default()
        };
        let cam = build_cam(&dm, &saoa).unwrap();
        assert_eq!(cam.activity_agents.len(), 3);
        assert_eq!(cam.physical_interactions.len(), 2);
        assert_eq!(cam.physical_interactions[0].from, AgentName::from("src_p1"));
        assert_eq!(cam.physical_interactions[0].product, ProductId::from("P1"));
        assert_eq!(cam.physical_interactions[1].from, AgentName::from("src_p2"));
        // Each specialist keeps a copy of the shared store.
        assert_eq!(cam.objects.len(), 2);
    }

    #[test]
    fn split_leaving_a_link_unrouted_is_rejected() {
        let dpa = DpaSection {
            units: vec![unit("U1"), unit("U2")],
            blocks: vec![
                block("src", "U1", DecisionLevel::Execution),
                block("dst", "U2", DecisionLevel::Execution),
            ],
            relations: vec![physical("src", "dst", "P9")],
            ..Default::default()
        };
        let dm = build_domain_model(&dpa).unwrap();
        let saoa = SaoaSection {
            directives: vec![Directive::Split {
                block: BlockId::from("src"),
                parts: vec![SplitPart {
                    agent: AgentName::from("src_p1"),
                    specialization: Specialization::Product,
                    key: "P1".to_string(),
                }],
            }],
            ..Default::default()
        };
        let err = build_cam(&dm, &saoa).unwrap_err();
        assert!(matches!(err, DeployError::SplitUncovered { .. }));
    }

    #[test]
    fn mediator_adds_agent_and_two_way_channels() {
        let dpa = DpaSection {
            units: vec![unit("U1"), unit("U2")],
            blocks: vec![
                block("a", "U1", DecisionLevel::Tactical),
                block("b", "U2", DecisionLevel::Tactical),
            ],
            ..Default::default()
        };
        let dm = build_domain_model(&dpa).unwrap();
        let saoa = SaoaSection {
            directives: vec![Directive::Mediator {
                agent: AgentName::from("hub"),
                scope: vec![AgentName::from("a"), AgentName::from("b")],
            }],
            ..Default::default()
        };
        let cam = build_cam(&dm, &saoa).unwrap();
        assert_eq!(cam.activity_agents.len(), 3);
        let hub = cam.agent(&AgentName::from("hub")).unwrap();
        assert_eq!(hub.kind, AgentKind::Mediator);
        assert_eq!(hub.unit, None);
        // One channel each way per scope member: 2 members -> 4 channels.
        assert_eq!(cam.informational_interactions.len(), 4);
        assert!(cam
            .informational_interactions
            .iter()
            .all(|i| i.info_type == InfoType::Coordination && i.origins.is_empty()));
        // Mediators live outside every unit package.
        assert!(cam.actor_agents.iter().all(|p| !p.members.contains(&hub.name)));
    }

    #[test]
    fn duplicate_directive_sources_conflict() {
        let blocks = vec![block("a", "U1", DecisionLevel::Tactical)];
        let saoa = SaoaSection {
            directives: vec![
                Directive::Merge {
                    agent: AgentName::from("m1"),
                    blocks: vec![BlockId::from("a")],
                },
                Directive::Split {
                    block: BlockId::from("a"),
                    parts: vec![SplitPart {
                        agent: AgentName::from("s1"),
                        specialization: Specialization::Product,
                        key: "P1".to_string(),
                    }],
                },
            ],
            ..Default::default()
        };
        let plan = plan_agents(&blocks, &saoa);
        assert!(plan
            .issues
            .iter()
            .any(|e| matches!(e, DeployError::DirectiveConflict { .. })));
    }
}
