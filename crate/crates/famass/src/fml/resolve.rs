//! Whole-model validation.
//!
//! [`resolve`] checks an analysis model against every structural and semantic
//! rule at once and reports each problem as a violation — data, not an error.
//! An empty report guarantees that all three deployment stages succeed and
//! that the runtime can instantiate the result.
//!
//! The deployment-level rules are checked by running the same total planning
//! helpers the deployment stages use, so the validator and the pipeline can
//! never disagree.

use std::collections::BTreeSet;

use crate::deploy::{build_domain_model, plan_cam, plan_oam, DeployError};
use crate::metamodel::{validate_cube, BlockId, DecisionLevel, ProductId};
use crate::report::{ValidationReport, Violation, ViolationCode};

use super::model::*;
use super::parse::SourceMap;

/// Validates a model without source positions (e.g. one built in memory).
pub fn resolve(model: &AnalysisModel) -> ValidationReport {
    resolve_with_spans(model, &SourceMap::default())
}

/// Validates a model, attaching source positions where declarations have
/// them. Violations are sorted by position, code, and subject.
pub fn resolve_with_spans(model: &AnalysisModel, spans: &SourceMap) -> ValidationReport {
    let mut report = ValidationReport::new();

    let mut cube = validate_cube(&model.dpa.units, &model.dpa.blocks);
    for violation in &mut cube.violations {
        let key = match violation.code {
            ViolationCode::DuplicateUnitId => format!("unit:{}", violation.subject),
            _ => format!("block:{}", violation.subject),
        };
        violation.span = violation.span.or_else(|| spans.get(&key));
    }
    report.extend(cube);

    check_gpa(&model.gpa, spans, &mut report);
    check_relations(&model.dpa, spans, &mut report);
    check_dpa_references(&model.dpa, spans, &mut report);
    check_iaoa_values(&model.iaoa, spans, &mut report);

    // Deployment planning runs over a sanitised copy: declarations whose
    // problems were already reported above are dropped first, so every root
    // cause surfaces exactly once.
    let dpa = sanitized(&model.dpa);
    let dm = build_domain_model(&dpa).expect("sanitised sections always deploy");
    let (cam, issues) = plan_cam(&dm, &model.saoa);
    for issue in &issues {
        report.push(deploy_violation(issue, spans));
    }
    let (_, issues) = plan_oam(&cam, &model.saoa, &model.iaoa);
    for issue in &issues {
        report.push(deploy_violation(issue, spans));
    }

    report.sort();
    report
}

fn check_gpa(gpa: &GpaSection, spans: &SourceMap, report: &mut ValidationReport) {
    for factor in &gpa.factors {
        let key = format!("factor:{}", factor.name);
        if factor.levels.is_empty() {
            report.push(
                Violation::new(
                    ViolationCode::EmptyFactor,
                    &factor.name,
                    format!("factor `{}` declares no levels", factor.name),
                )
                .with_span_opt(spans.get(&key)),
            );
        }
        for level in &factor.levels {
            if let FactorLevel::Number(n) = level {
                if !n.is_finite() {
                    report.push(
                        Violation::new(
                            ViolationCode::InvalidQuantity,
                            &factor.name,
                            format!("factor `{}` has a non-finite level", factor.name),
                        )
                        .with_span_opt(spans.get(&key)),
                    );
                }
            }
        }
    }
    for uncertainty in &gpa.uncertainties {
        let key = format!("uncertainty:{}", uncertainty.name);
        let problem = match uncertainty.distribution {
            UncertaintyDist::None => None,
            UncertaintyDist::Uniform { lo, hi } => {
                (!(lo.is_finite() && hi.is_finite() && lo <= hi))
                    .then(|| format!("uniform bounds {lo}..{hi} are not ordered"))
            }
            UncertaintyDist::Normal { mean, sd } => {
                (!(mean.is_finite() && sd.is_finite() && sd >= 0.0))
                    .then(|| format!("normal parameters ({mean}, {sd}) are invalid"))
            }
        };
        if let Some(message) = problem {
            report.push(
                Violation::new(
                    ViolationCode::InvalidQuantity,
                    &uncertainty.name,
                    format!("uncertainty `{}`: {message}", uncertainty.name),
                )
                .with_span_opt(spans.get(&key)),
            );
        }
    }
}

/// Level-typing rules for relations: material links connect execution blocks
/// and carry a product and nothing else; informational links declare what
/// kind of information they carry.
fn check_relations(dpa: &DpaSection, spans: &SourceMap, report: &mut ValidationReport) {
    let level_of = |id: &BlockId| dpa.blocks.iter().find(|b| &b.id == id).map(|b| b.level);
    for (index, relation) in dpa.relations.iter().enumerate() {
        let span = spans.get(&format!("relation:{index}"));
        let subject = format!("{} -> {}", relation.from, relation.to);
        let mut push = |code: ViolationCode, message: String| {
            report.push(Violation::new(code, &subject, message).with_span_opt(span));
        };
        match relation.kind {
            RelationKind::Physical => {
                for id in [&relation.from, &relation.to] {
                    if let Some(level) = level_of(id) {
                        if level != DecisionLevel::Execution {
                            push(
                                ViolationCode::PhysicalRequiresExecution,
                                format!(
                                    "physical relation endpoint `{id}` is a {level} block; \
                                     material flows only between execution blocks"
                                ),
                            );
                        }
                    }
                }
                if relation.product.is_none() {
                    push(
                        ViolationCode::PhysicalRequiresProduct,
                        format!("physical relation {subject} carries no product"),
                    );
                }
                if let Some(info_type) = relation.info_type {
                    push(
                        ViolationCode::PhysicalForbidsInfoType,
                        format!("physical relation {subject} declares info type `{info_type}`"),
                    );
                }
            }
            RelationKind::Informational => {
                if relation.info_type.is_none() {
                    push(
                        ViolationCode::InformationalRequiresType,
                        format!("informational relation {subject} declares no info type"),
                    );
                }
            }
        }
    }
}

/// Cross-reference checks for models built in memory; documents that came
/// through the parser can no longer trip these.
fn check_dpa_references(dpa: &DpaSection, spans: &SourceMap, report: &mut ValidationReport) {
    let blocks: BTreeSet<&BlockId> = dpa.blocks.iter().map(|b| &b.id).collect();
    let products: BTreeSet<&ProductId> = dpa.products.iter().map(|p| &p.id).collect();
    for (index, relation) in dpa.relations.iter().enumerate() {
        let span = spans.get(&format!("relation:{index}"));
        let subject = format!("{} -> {}", relation.from, relation.to);
        for id in [&relation.from, &relation.to] {
            if !blocks.contains(id) {
                report.push(
                    Violation::new(
                        ViolationCode::DanglingRef,
                        &subject,
                        format!("relation references unknown block `{id}`"),
                    )
                    .with_span_opt(span),
                );
            }
        }
        if let Some(product) = &relation.product {
            if !products.contains(product) {
                report.push(
                    Violation::new(
                        ViolationCode::DanglingRef,
                        &subject,
                        format!("relation references unknown product `{product}`"),
                    )
                    .with_span_opt(span),
                );
            }
        }
    }
    for inventory in &dpa.inventories {
        let span = spans.get(&format!(
            "inventory:{}:{}",
            inventory.block, inventory.stock_kind
        ));
        if !blocks.contains(&inventory.block) {
            report.push(
                Violation::new(
                    ViolationCode::DanglingRef,
                    inventory.block.as_str(),
                    format!("inventory references unknown block `{}`", inventory.block),
                )
                .with_span_opt(span),
            );
        }
        let mut quantity = |name: &str, value: crate::Qty, min: crate::Qty| {
            if value < min {
                report.push(
                    Violation::new(
                        ViolationCode::InvalidQuantity,
                        inventory.block.as_str(),
                        format!(
                            "inventory {} {}: {name} {value} is below {min}",
                            inventory.block, inventory.stock_kind
                        ),
                    )
                    .with_span_opt(span),
                );
            }
        };
        quantity("initial quantity", inventory.initial_qty, 0);
        if let Some(point) = inventory.reorder_point {
            quantity("reorder point", point, 0);
        }
        if let Some(qty) = inventory.reorder_qty {
            quantity("reorder quantity", qty, 1);
        }
    }
    if let Some(point) = &dpa.decoupling_point {
        if !blocks.contains(point) {
            report.push(
                Violation::new(
                    ViolationCode::DanglingRef,
                    point.as_str(),
                    format!("decoupling point references unknown block `{point}`"),
                )
                .with_span_opt(spans.get("decoupling_point")),
            );
        }
    }
}

fn check_iaoa_values(iaoa: &IaoaSection, spans: &SourceMap, report: &mut ValidationReport) {
    for (index, decl) in iaoa.abilities.iter().enumerate() {
        let span = spans.get(&format!("ability:{index}"));
        let subject = decl.selector.as_str().to_string();
        let mut push = |message: String| {
            report.push(
                Violation::new(ViolationCode::InvalidQuantity, &subject, message)
                    .with_span_opt(span),
            );
        };
        match &decl.ability {
            Ability::Procure {
                reorder_point,
                reorder_qty,
            } => {
                if reorder_point.is_some_and(|p| p < 0) {
                    push("procure reorder point is negative".into());
                }
                if reorder_qty.is_some_and(|q| q < 1) {
                    push("procure reorder quantity is below 1".into());
                }
            }
            Ability::Dispatch { capacity, .. } => {
                if capacity.is_some_and(|c| c < 1) {
                    push("dispatch capacity is below 1".into());
                }
            }
            Ability::Sell { demand } => match *demand {
                DemandSpec::Constant { rate } => {
                    if rate < 0 {
                        push("constant demand rate is negative".into());
                    }
                }
                DemandSpec::Uniform { lo, hi } => {
                    if lo < 0 || lo > hi {
                        push(format!("uniform demand bounds {lo}..{hi} are invalid"));
                    }
                }
                DemandSpec::Normal { mean, sd } => {
                    if !(mean.is_finite() && sd.is_finite() && mean >= 0.0 && sd >= 0.0) {
                        push(format!("normal demand parameters ({mean}, {sd}) are invalid"));
                    }
                }
            },
            Ability::MonitorInventory | Ability::PlanProduction { .. } | Ability::Ship { .. } => {}
        }
    }
    for (index, decl) in iaoa.quotes.iter().enumerate() {
        if !(decl.price.is_finite() && decl.price >= 0.0) {
            report.push(
                Violation::new(
                    ViolationCode::InvalidQuantity,
                    decl.selector.as_str(),
                    format!("quoted price {} is invalid", decl.price),
                )
                .with_span_opt(spans.get(&format!("quote:{index}"))),
            );
        }
    }
}

/// Drops declarations whose problems are already reported, so that the
/// deployment planners run on well-formed input and never double-report.
fn sanitized(dpa: &DpaSection) -> DpaSection {
    let mut out = dpa.clone();
    let mut seen = BTreeSet::new();
    out.units.retain(|u| seen.insert(u.id.clone()));
    let mut seen = BTreeSet::new();
    out.blocks.retain(|b| seen.insert(b.id.clone()));
    let blocks: BTreeSet<&BlockId> = out.blocks.iter().map(|b| &b.id).collect();
    let products: BTreeSet<&ProductId> = dpa.products.iter().map(|p| &p.id).collect();
    out.relations.retain(|r| {
        blocks.contains(&r.from)
            && blocks.contains(&r.to)
            && match r.kind {
                RelationKind::Physical => {
                    r.product.as_ref().is_some_and(|p| products.contains(p))
                }
                RelationKind::Informational => true,
            }
    });
    out.inventories.retain(|inv| blocks.contains(&inv.block));
    if let Some(point) = &out.decoupling_point {
        if !blocks.contains(point) {
            out.decoupling_point = None;
        }
    }
    out
}

/// Renders a deployment planning problem as a violation, attaching the span
/// of the declaration that caused it where one can be identified.
fn deploy_violation(error: &DeployError, spans: &SourceMap) -> Violation {
    use DeployError as E;
    use ViolationCode as C;
    let (code, subject, key) = match error {
        E::MissingProduct { from, to } => {
            (C::PhysicalRequiresProduct, format!("{from} -> {to}"), None)
        }
        E::DanglingBlock { id, .. } => (C::DanglingRef, id.to_string(), None),
        E::DirectiveConflict { block } => (
            C::DirectiveConflict,
            block.to_string(),
            Some(format!("split:{block}")),
        ),
        E::MergeMixesUnits { agent } => (
            C::MergeMixesUnits,
            agent.to_string(),
            Some(format!("merge:{agent}")),
        ),
        E::MergeMixesSocieties { agent } => (
            C::MergeMixesSocieties,
            agent.to_string(),
            Some(format!("merge:{agent}")),
        ),
        E::DuplicateAgentName { name } => (C::DuplicateAgentName, name.to_string(), None),
        E::SplitUncovered { block, .. } => (
            C::SplitUncoveredInteraction,
            block.to_string(),
            Some(format!("split:{block}")),
        ),
        E::SplitAmbiguous { block, .. } => (
            C::SplitAmbiguousInteraction,
            block.to_string(),
            Some(format!("split:{block}")),
        ),
        E::MediatorUnknownAgent { mediator, name } => (
            C::MediatorUnknownAgent,
            name.to_string(),
            Some(format!("mediator:{mediator}")),
        ),
        E::ProtocolUnbound { protocol } => (
            C::ProtocolUnbound,
            protocol.clone(),
            Some(format!("protocol:{protocol}")),
        ),
        E::ProtocolBoundToPhysical { protocol } => (
            C::ProtocolBoundToPhysical,
            protocol.clone(),
            Some(format!("protocol:{protocol}")),
        ),
        E::MixedInitiators { protocol } => (
            C::ProtocolMixedInitiators,
            protocol.clone(),
            Some(format!("protocol:{protocol}")),
        ),
        E::ArbitrationNeedsMediator { protocol } => (
            C::ArbitrationNeedsMediator,
            protocol.clone(),
            Some(format!("protocol:{protocol}")),
        ),
        E::SelectorUnmatched { selector } => (C::SelectorUnmatched, selector.clone(), None),
        E::ActionUndeclared { agent, .. } => (C::ActionUndeclared, agent.to_string(), None),
        E::DuplicateAbility { agent, .. } => (C::DuplicateAbility, agent.to_string(), None),
        E::ProcureUnderspecified { agent } | E::ProcureNoStock { agent } => {
            (C::ProcureUnderspecified, agent.to_string(), None)
        }
    };
    let span = key.and_then(|k| spans.get(&k));
    Violation::new(code, subject, error.to_string()).with_span_opt(span)
}

#[cfg(test)]
mod tests {
    use super::super::parse_fml;
    use super::*;
    use crate::metamodel::{SupplyChainBlock, UnitId};

    fn resolve_text(text: &str) -> ValidationReport {
        let parsed = parse_fml(text).expect("fixture parses");
        resolve_with_spans(&parsed.model, &parsed.spans)
    }

    fn codes(report: &ValidationReport) -> Vec<ViolationCode> {
        report.violations.iter().map(|v| v.code).collect()
    }

    #[test]
    fn clean_two_tier_model_resolves_without_violations() {
        let report = resolve_text(
            r#"
dpa {
  unit V1 { role vendor }
  unit F1 { role facility }
  product P1
  block V1.exec { unit V1 level execution functions distribution }
  block F1.exec { unit F1 level execution functions distribution }
  block F1.tact { unit F1 level tactical functions procurement }
  relation physical V1.exec -> F1.exec product P1
  relation informational F1.tact -> F1.exec type coordination
  inventory F1.exec { kind final_product initial 40 reorder_point 15 reorder_qty 30 }
}
"#,
        );
        assert!(report.is_empty(), "{:?}", report.violations);
    }

    #[test]
    fn physical_relation_between_decision_blocks_is_flagged() {
        let report = resolve_text(
            r#"
dpa {
  unit V1 { role vendor }
  unit F1 { role facility }
  product P1
  block V1.tact { unit V1 level tactical functions sales }
  block F1.tact { unit F1 level tactical functions procurement }
  relation physical V1.tact -> F1.tact product P1
}
"#,
        );
        let codes = codes(&report);
        assert_eq!(
            codes,
            vec![
                ViolationCode::PhysicalRequiresExecution,
                ViolationCode::PhysicalRequiresExecution,
            ]
        );
        // The span points at the relation declaration.
        assert_eq!(report.violations[0].span.map(|s| s.line), Some(8));
    }

    #[test]
    fn missing_product_and_missing_info_type_are_flagged() {
        let report = resolve_text(
            r#"
dpa {
  unit V1 { role vendor }
  unit F1 { role facility }
  block V1.exec { unit V1 level execution functions distribution }
  block F1.exec { unit F1 level execution functions distribution }
  relation physical V1.exec -> F1.exec
  relation informational F1.exec -> V1.exec
}
"#,
        );
        assert_eq!(
            codes(&report),
            vec![
                ViolationCode::PhysicalRequiresProduct,
                ViolationCode::InformationalRequiresType,
            ]
        );
    }

    #[test]
    fn directive_problems_surface_as_violations() {
        let report = resolve_text(
            r#"
dpa {
  unit V1 { role vendor }
  unit F1 { role facility }
  block V1.tact { unit V1 level tactical functions sales }
  block F1.tact { unit F1 level tactical functions procurement }
}
saoa {
  structure hierarchical
  merge both blocks V1.tact F1.tact
}
"#,
        );
        assert_eq!(codes(&report), vec![ViolationCode::MergeMixesUnits]);
        assert_eq!(report.violations[0].span.map(|s| s.line), Some(10));
    }

    #[test]
    fn unbound_protocol_and_unmatched_selector_are_flagged() {
        let report = resolve_text(
            r#"
dpa {
  unit F1 { role facility }
  block F1.tact { unit F1 level tactical functions procurement }
  block F1.exec { unit F1 level execution functions distribution }
}
saoa {
  structure hierarchical
  protocol ghost { type negotiation bind F1.exec -> F1.tact }
}
iaoa {
  ability nowhere.* monitor_inventory
}
"#,
        );
        let codes = codes(&report);
        assert!(codes.contains(&ViolationCode::ProtocolUnbound));
        assert!(codes.contains(&ViolationCode::SelectorUnmatched));
    }

    #[test]
    fn hand_built_model_reports_dangling_references() {
        let mut model = AnalysisModel::default();
        model.dpa.units.push(crate::metamodel::SpatialUnit {
            id: UnitId::from("U1"),
            name: "u1".into(),
            role: crate::metamodel::SpatialRole::Facility,
        });
        model.dpa.blocks.push(SupplyChainBlock {
            id: BlockId::from("a"),
            unit: UnitId::from("U1"),
            level: DecisionLevel::Execution,
            functions: [crate::metamodel::FunctionalArea::Distribution].into(),
            responsibilities: Vec::new(),
        });
        model.dpa.relations.push(Relation {
            kind: RelationKind::Informational,
            from: BlockId::from("a"),
            to: BlockId::from("ghost"),
            product: None,
            info_type: Some(InfoType::Coordination),
            key: None,
        });
        model.dpa.inventories.push(InventoryDecl {
            block: BlockId::from("a"),
            stock_kind: StockKind::FinalProduct,
            initial_qty: -5,
            reorder_point: None,
            reorder_qty: None,
        });
        let report = resolve(&model);
        let codes = codes(&report);
        assert!(codes.contains(&ViolationCode::DanglingRef));
        assert!(codes.contains(&ViolationCode::InvalidQuantity));
        // The sanitised planners still ran and found nothing further.
        assert_eq!(codes.len(), 2);
    }

    #[test]
    fn clean_report_implies_every_stage_builds() {
        let text = r#"
dpa {
  unit V1 { role vendor }
  unit F1 { role facility }
  product P1
  block V1.tact { unit V1 level tactical functions sales }
  block V1.exec { unit V1 level execution functions distribution }
  block F1.tact { unit F1 level tactical functions procurement }
  block F1.exec { unit F1 level execution functions distribution }
  relation physical V1.exec -> F1.exec product P1
  relation informational F1.tact -> V1.tact type needs_expression
  inventory F1.exec { kind final_product initial 40 reorder_point 15 reorder_qty 30 }
  inventory V1.exec { kind final_product initial 1000 }
}
saoa {
  structure hierarchical
  protocol replen { type negotiation bind F1.tact -> V1.tact }
}
iaoa {
  ability F1.tact procure
  ability F1.exec ship lead_time 1
  quote V1.tact price 5
}
"#;
        let parsed = parse_fml(text).expect("parses");
        let report = resolve(&parsed.model);
        assert!(report.is_empty(), "{:?}", report.violations);
        let dm = build_domain_model(&parsed.model.dpa).unwrap();
        let cam = crate::deploy::build_cam(&dm, &parsed.model.saoa).unwrap();
        crate::deploy::build_oam(&cam, &parsed.model.saoa, &parsed.model.iaoa).unwrap();
    }
}
