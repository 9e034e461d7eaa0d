//! Three-stage deployment pipeline from an analysis model to an executable
//! agent model.
//!
//! Each stage is a pure function: [`build_domain_model`] separates material
//! structure from informational dynamics, [`build_cam`] applies the
//! agentification directives to produce a conceptual agent society, and
//! [`build_oam`] assigns agents to decision and execution societies, binds
//! protocols, and synthesizes per-agent behavior. Every collection in every
//! output is sorted, so equal inputs give structurally equal models.
//!
//! The builders assume a model that passed [`crate::fml::resolve`]; on rule
//! breaches they fail fast with a [`DeployError`] rather than guessing.
//! Internally each stage is built from total planning helpers that collect
//! every problem they see — `resolve` reuses those helpers to report all
//! violations at once, which keeps the two layers from drifting apart.

mod cam;
mod dm;
mod oam;

pub use cam::{
    build_cam, ActivityAgent, ActorAgent, AgentInventory, AgentKind, ConceptualAgentModel,
    InfoInteraction, PhysicalInteraction,
};
pub use dm::{build_domain_model, DomainModel, DynamicModel, InfoLink, PhysicalLink, StructuralModel};
pub use oam::{
    build_oam, AgentRule, AgentSpec, Behavior, BehaviorState, ExternalEvent, InternalEvent,
    KnowledgeVar, OperationalAgentModel, Performative, ProcureTarget, ProtocolSpec, ProtocolStep,
    ResponsibilityLink, Role, RoleBinding, Society, StateKind, Transition, Trigger,
};

pub(crate) use cam::plan_cam;
pub(crate) use oam::sequence_of;
pub(crate) use oam::plan_oam;

use thiserror::Error;

use crate::metamodel::{AgentName, BlockId};

/// Rule breach that makes a deployment stage impossible or ill-defined.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeployError {
    #[error("physical link {from} -> {to} carries no product")]
    MissingProduct { from: BlockId, to: BlockId },
    #[error("{context} references unknown block `{id}`")]
    DanglingBlock { id: BlockId, context: String },
    #[error("block `{block}` appears in more than one merge or split directive")]
    DirectiveConflict { block: BlockId },
    #[error("merge `{agent}` fuses blocks from different spatial units")]
    MergeMixesUnits { agent: AgentName },
    #[error("merge `{agent}` fuses execution blocks with decision blocks")]
    MergeMixesSocieties { agent: AgentName },
    #[error("agent name `{name}` is used more than once")]
    DuplicateAgentName { name: AgentName },
    #[error("split of `{block}` leaves interaction {from} -> {to} uncovered by every part")]
    SplitUncovered { block: BlockId, from: BlockId, to: BlockId },
    #[error("split of `{block}` routes interaction {from} -> {to} to more than one part")]
    SplitAmbiguous { block: BlockId, from: BlockId, to: BlockId },
    #[error("mediator `{mediator}` scopes unknown agent `{name}`")]
    MediatorUnknownAgent { mediator: AgentName, name: AgentName },
    #[error("protocol `{protocol}` binds no informational interaction")]
    ProtocolUnbound { protocol: String },
    #[error("protocol `{protocol}` binds a physical interaction")]
    ProtocolBoundToPhysical { protocol: String },
    #[error("protocol `{protocol}` has more than one initiating agent")]
    MixedInitiators { protocol: String },
    #[error("arbitration protocol `{protocol}` has no mediator covering all of its roles")]
    ArbitrationNeedsMediator { protocol: String },
    #[error("selector `{selector}` matches no agent")]
    SelectorUnmatched { selector: String },
    #[error("agent `{agent}` has no declared ability `{action}` to trigger")]
    ActionUndeclared { agent: AgentName, action: String },
    #[error("agent `{agent}` receives conflicting declarations of `{ability}`")]
    DuplicateAbility { agent: AgentName, ability: String },
    #[error("agent `{agent}` can procure but has neither reorder parameters nor an inventory declaring them")]
    ProcureUnderspecified { agent: AgentName },
    #[error("agent `{agent}` can procure but neither it nor its package holds any stock")]
    ProcureNoStock { agent: AgentName },
}
