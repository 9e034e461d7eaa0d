//! Renders deployment stages as diagram text and canonical dumps.
//!
//! Class and package diagrams use the Graphviz DOT language; behaviour state
//! machines and protocol sequences use Mermaid text. Both are plain-text
//! graph descriptions consumable by common renderers, and every body is
//! byte-deterministic for equal inputs: all collections arrive sorted from
//! the deployment stage, and rendering adds no iteration over unordered
//! containers.

pub mod dump;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::deploy::{
    AgentKind, ConceptualAgentModel, DomainModel, ExternalEvent, InternalEvent,
    OperationalAgentModel, ProtocolSpec, Trigger,
};
use crate::metamodel::{SpatialUnit, UnitId};

/// Pipeline stage an artifact belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Dm,
    Cam,
    Oam,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Dm, Stage::Cam, Stage::Oam];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Dm => "dm",
            Stage::Cam => "cam",
            Stage::Oam => "oam",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What an artifact's body contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    ClassDiagram,
    ClassTable,
    PackageDiagram,
    ActivityDiagram,
    ProtocolDiagram,
    StructuredDump,
}

impl ArtifactKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::ClassDiagram => "class_diagram",
            ArtifactKind::ClassTable => "class_table",
            ArtifactKind::PackageDiagram => "package_diagram",
            ArtifactKind::ActivityDiagram => "activity_diagram",
            ArtifactKind::ProtocolDiagram => "protocol_diagram",
            ArtifactKind::StructuredDump => "structured_dump",
        }
    }
}

impl std::fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One rendered output: a diagram, a table, or a structured dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: ArtifactKind,
    pub target: Stage,
    /// Distinguishes artifacts of the same kind on the same stage: the agent
    /// name for activity diagrams, the protocol name for protocol diagrams.
    pub qualifier: Option<String>,
    pub body: String,
}

impl Artifact {
    /// File name the artifact is written under: `<model>.<stage>.<kind>.txt`,
    /// with the qualifier inserted before the extension when present;
    /// structured dumps use `<model>.<stage>.dump`.
    pub fn file_name(&self, model: &str) -> String {
        match self.kind {
            ArtifactKind::StructuredDump => format!("{model}.{}.dump", self.target),
            kind => {
                let qualifier = self
                    .qualifier
                    .as_deref()
                    .map(|q| format!(".{q}"))
                    .unwrap_or_default();
                format!("{model}.{}.{kind}{qualifier}.txt", self.target)
            }
        }
    }
}

/// Escapes a string for use inside a double-quoted DOT value.
fn dot_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// Block display name with the decoupling-point marker in the class name.
fn class_name(dm: &DomainModel, id: &crate::metamodel::BlockId) -> String {
    if dm.dynamic.decoupling_point.as_ref() == Some(id) {
        format!("{id} <DP>")
    } else {
        id.to_string()
    }
}

fn unit_index(units: &[SpatialUnit]) -> BTreeMap<&UnitId, &SpatialUnit> {
    units.iter().map(|u| (&u.id, u)).collect()
}

/// Renders the domain model as a class diagram plus a companion class table.
///
/// Classes are the blocks: the stereotype carries the decision level, the
/// role line carries the spatial role of the hosting unit, and operations
/// are the block's declared responsibilities. Physical links are the solid
/// edges. The table lists each block's inventory positions; the decoupling
/// point is marked in the class name in both artifacts.
pub fn emit_class_artifacts(dm: &DomainModel) -> Vec<Artifact> {
    let units = unit_index(&dm.structural.units);

    let mut diagram = String::new();
    diagram.push_str("digraph class_diagram {\n");
    diagram.push_str("  rankdir=LR;\n");
    diagram.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
    for block in &dm.structural.blocks {
        let mut label = format!("\u{ab}{}\u{bb} {}", block.level, class_name(dm, &block.id));
        if let Some(unit) = units.get(&block.unit) {
            let _ = write!(label, "\nrole: {}", unit.role);
        }
        let functions: Vec<&str> = block.functions.iter().map(|f| f.as_str()).collect();
        let _ = write!(label, "\nfunctions: {}", functions.join(", "));
        for responsibility in &block.responsibilities {
            let _ = write!(label, "\n+ {responsibility}");
        }
        let _ = writeln!(
            diagram,
            "  \"{}\" [label=\"{}\"];",
            dot_escape(block.id.as_str()),
            dot_escape(&label)
        );
    }
    for link in &dm.structural.physical_links {
        let _ = writeln!(
            diagram,
            "  \"{}\" -> \"{}\" [style=solid, label=\"{}\"];",
            dot_escape(link.from.as_str()),
            dot_escape(link.to.as_str()),
            dot_escape(link.product.as_str())
        );
    }
    diagram.push_str("}\n");

    let mut rows: Vec<[String; 5]> = Vec::new();
    for block in &dm.structural.blocks {
        let role = units
            .get(&block.unit)
            .map(|u| u.role.as_str())
            .unwrap_or("-");
        let mut stocks = Vec::new();
        for inv in dm.dynamic.inventories.iter().filter(|i| i.block == block.id) {
            let mut cell = format!("{}={}", inv.stock_kind, inv.initial_qty);
            if let Some(rp) = inv.reorder_point {
                let _ = write!(cell, " rp={rp}");
            }
            if let Some(rq) = inv.reorder_qty {
                let _ = write!(cell, " rq={rq}");
            }
            stocks.push(cell);
        }
        rows.push([
            class_name(dm, &block.id),
            block.level.to_string(),
            block.unit.to_string(),
            role.to_string(),
            if stocks.is_empty() { "-".to_string() } else { stocks.join("; ") },
        ]);
    }
    let table = render_table(
        ["block", "level", "unit", "role", "inventories"],
        &rows,
    );

    vec![
        Artifact {
            kind: ArtifactKind::ClassDiagram,
            target: Stage::Dm,
            qualifier: None,
            body: diagram,
        },
        Artifact {
            kind: ArtifactKind::ClassTable,
            target: Stage::Dm,
            qualifier: None,
            body: table,
        },
    ]
}

/// Plain-text table with left-aligned columns and a dashed separator; rows
/// carry no trailing whitespace so output stays diff- and golden-friendly.
fn render_table<const N: usize>(header: [&str; N], rows: &[[String; N]]) -> String {
    let mut widths: [usize; N] = [0; N];
    for (i, h) in header.iter().enumerate() {
        widths[i] = h.len();
    }
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let push_row = |cells: &[&str; N], out: &mut String| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if i + 1 < N {
                for _ in cell.len()..widths[i] {
                    line.push(' ');
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    push_row(&header, &mut out);
    let dashes: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let dash_refs: [&str; N] = std::array::from_fn(|i| dashes[i].as_str());
    push_row(&dash_refs, &mut out);
    for row in rows {
        let cells: [&str; N] = std::array::from_fn(|i| row[i].as_str());
        push_row(&cells, &mut out);
    }
    out
}

fn agent_stereotype(level: Option<crate::metamodel::DecisionLevel>, kind: AgentKind) -> String {
    match level {
        Some(level) => format!("\u{ab}{level}\u{bb}"),
        None => format!("\u{ab}{kind}\u{bb}"),
    }
}

/// Renders the conceptual agent model as a package diagram: one package per
/// actor agent (spatial unit), member activity agents nested inside it,
/// mediators as top-level nodes outside every package. Products ride their
/// physical edges as `[id]` annotations; informational interactions are
/// dashed edges labeled with the flow type.
pub fn emit_package_diagram(cam: &ConceptualAgentModel) -> Artifact {
    let mut body = String::new();
    body.push_str("digraph package_diagram {\n");
    body.push_str("  rankdir=LR;\n");
    body.push_str("  compound=true;\n");
    body.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
    for actor in &cam.actor_agents {
        let _ = writeln!(body, "  subgraph \"cluster_{}\" {{", dot_escape(actor.unit.id.as_str()));
        let _ = writeln!(
            body,
            "    label=\"{} ({})\";",
            dot_escape(actor.name.as_str()),
            actor.unit.role
        );
        for member in &actor.members {
            let stereotype = cam
                .agent(member)
                .map(|a| agent_stereotype(a.level, a.kind))
                .unwrap_or_default();
            let _ = writeln!(
                body,
                "    \"{}\" [label=\"{}\"];",
                dot_escape(member.as_str()),
                dot_escape(&format!("{stereotype} {member}"))
            );
        }
        body.push_str("  }\n");
    }
    for agent in cam.activity_agents.iter().filter(|a| a.unit.is_none()) {
        let _ = writeln!(
            body,
            "  \"{}\" [label=\"{}\"];",
            dot_escape(agent.name.as_str()),
            dot_escape(&format!("{} {}", agent_stereotype(agent.level, agent.kind), agent.name))
        );
    }
    for link in &cam.physical_interactions {
        let _ = writeln!(
            body,
            "  \"{}\" -> \"{}\" [style=solid, label=\"[{}]\"];",
            dot_escape(link.from.as_str()),
            dot_escape(link.to.as_str()),
            dot_escape(link.product.as_str())
        );
    }
    for link in &cam.informational_interactions {
        let _ = writeln!(
            body,
            "  \"{}\" -> \"{}\" [style=dashed, label=\"{}\"];",
            dot_escape(link.from.as_str()),
            dot_escape(link.to.as_str()),
            link.info_type
        );
    }
    body.push_str("}\n");
    Artifact {
        kind: ArtifactKind::PackageDiagram,
        target: Stage::Cam,
        qualifier: None,
        body,
    }
}

fn trigger_label(trigger: Trigger) -> String {
    match trigger {
        Trigger::Internal(InternalEvent::Timer) => "timer".to_string(),
        Trigger::Internal(InternalEvent::Threshold) => "threshold".to_string(),
        Trigger::External(ExternalEvent::Message(p)) => format!("message {}", p.as_str()),
    }
}

/// Mermaid state identifiers: FML identifiers may contain `.`, which Mermaid
/// state names may not, so dots are flattened to underscores.
fn state_id(name: &str) -> String {
    name.replace('.', "_")
}

fn render_behavior(agent: &crate::deploy::AgentSpec) -> String {
    let mut body = String::new();
    let _ = writeln!(body, "%% behaviour of agent {}", agent.name);
    body.push_str("stateDiagram-v2\n");
    for state in &agent.behavior.states {
        let kind = match state.kind {
            crate::deploy::StateKind::Passive => "passive",
            crate::deploy::StateKind::ActiveElementary => "active_elementary",
            crate::deploy::StateKind::ActiveComposite => "active_composite",
        };
        let _ = writeln!(
            body,
            "    state \"{} ({kind})\" as {}",
            state.name,
            state_id(&state.name)
        );
    }
    body.push_str("    [*] --> idle\n");
    for transition in &agent.behavior.transitions {
        let _ = writeln!(
            body,
            "    {} --> {} : {}",
            state_id(&transition.from),
            state_id(&transition.to),
            trigger_label(transition.trigger)
        );
    }
    body
}

fn render_protocol(protocol: &ProtocolSpec) -> String {
    let mut body = String::new();
    let _ = writeln!(
        body,
        "%% {} protocol {}",
        protocol.protocol_type, protocol.name
    );
    body.push_str("sequenceDiagram\n");
    let initiators: Vec<&str> = protocol.initiators.iter().map(|a| a.as_str()).collect();
    let responders: Vec<&str> = protocol.responders.iter().map(|a| a.as_str()).collect();
    let _ = writeln!(
        body,
        "    participant initiator as initiator: {}",
        initiators.join(", ")
    );
    let _ = writeln!(
        body,
        "    participant responder as responder: {}",
        responders.join(", ")
    );
    if let Some(mediator) = &protocol.mediator {
        let _ = writeln!(body, "    participant mediator as mediator: {mediator}");
    }
    for step in &protocol.sequence {
        let performatives: Vec<&str> = step.performatives.iter().map(|p| p.as_str()).collect();
        let _ = writeln!(
            body,
            "    {}->>{}: {}",
            step.from_role.as_str(),
            step.to_role.as_str(),
            performatives.join(" | ")
        );
    }
    body
}

/// Renders one activity/state artifact per agent and one sequence artifact
/// per protocol; the artifact count is exactly `|agents| + |protocols|`.
pub fn emit_behavior_and_protocols(oam: &OperationalAgentModel) -> Vec<Artifact> {
    let mut artifacts = Vec::new();
    for agent in oam.agents() {
        artifacts.push(Artifact {
            kind: ArtifactKind::ActivityDiagram,
            target: Stage::Oam,
            qualifier: Some(agent.name.to_string()),
            body: render_behavior(agent),
        });
    }
    for protocol in &oam.protocols {
        artifacts.push(Artifact {
            kind: ArtifactKind::ProtocolDiagram,
            target: Stage::Oam,
            qualifier: Some(protocol.name.clone()),
            body: render_protocol(protocol),
        });
    }
    artifacts
}

/// Renders every artifact of every stage, structured dumps included, in a
/// fixed order: domain model (class diagram, class table, dump), conceptual
/// model (package diagram, dump), operational model (agent activity
/// diagrams, protocol diagrams, dump).
pub fn emit_all(
    dm: &DomainModel,
    cam: &ConceptualAgentModel,
    oam: &OperationalAgentModel,
) -> Vec<Artifact> {
    let mut artifacts = emit_class_artifacts(dm);
    artifacts.push(Artifact {
        kind: ArtifactKind::StructuredDump,
        target: Stage::Dm,
        qualifier: None,
        body: dump::dump(&dump::StageDump::Dm(dm.clone())),
    });
    artifacts.push(emit_package_diagram(cam));
    artifacts.push(Artifact {
        kind: ArtifactKind::StructuredDump,
        target: Stage::Cam,
        qualifier: None,
        body: dump::dump(&dump::StageDump::Cam(cam.clone())),
    });
    artifacts.extend(emit_behavior_and_protocols(oam));
    artifacts.push(Artifact {
        kind: ArtifactKind::StructuredDump,
        target: Stage::Oam,
        qualifier: None,
        body: dump::dump(&dump::StageDump::Oam(oam.clone())),
    });
    artifacts
}
