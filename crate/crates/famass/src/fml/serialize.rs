//! Canonical text form of an [`AnalysisModel`].
//!
//! The output is valid FML: parsing it yields a structurally equal model.
//! Formatting is fixed — two-space indents, one statement per line, sections
//! in gpa/dpa/saoa/iaoa order, empty sections omitted — so equal models
//! serialize to byte-equal documents.

use std::fmt::Write as _;

use super::model::*;

/// Renders the model in canonical FML. The result always ends with a
/// newline unless the model is completely empty.
pub fn serialize_fml(model: &AnalysisModel) -> String {
    let mut out = String::new();
    let gpa = &model.gpa;
    if *gpa != GpaSection::default() {
        out.push_str("gpa {\n");
        if let Some(objective) = &gpa.objective {
            writeln!(out, "  objective {}", quoted(objective)).unwrap();
        }
        for q in &gpa.questions {
            writeln!(out, "  question {}", quoted(q)).unwrap();
        }
        for h in &gpa.hypotheses {
            writeln!(out, "  hypothesis {}", quoted(h)).unwrap();
        }
        for f in &gpa.factors {
            write!(out, "  factor {} levels", f.name).unwrap();
            for level in &f.levels {
                match level {
                    FactorLevel::Number(x) => write!(out, " {}", number(*x)).unwrap(),
                    FactorLevel::Symbol(s) => write!(out, " {s}").unwrap(),
                    FactorLevel::Text(s) => write!(out, " {}", quoted(s)).unwrap(),
                }
            }
            out.push('\n');
        }
        for u in &gpa.uncertainties {
            match &u.distribution {
                UncertaintyDist::None => writeln!(out, "  uncertainty {} none", u.name).unwrap(),
                UncertaintyDist::Uniform { lo, hi } => {
                    writeln!(out, "  uncertainty {} uniform {} {}", u.name, number(*lo), number(*hi)).unwrap()
                }
                UncertaintyDist::Normal { mean, sd } => {
                    writeln!(out, "  uncertainty {} normal {} {}", u.name, number(*mean), number(*sd)).unwrap()
                }
            }
        }
        for k in &gpa.kpis {
            writeln!(out, "  kpi {} metric {}", k.name, k.metric).unwrap();
        }
        out.push_str("}\n");
    }

    let dpa = &model.dpa;
    if *dpa != DpaSection::default() {
        out.push_str("dpa {\n");
        for unit in &dpa.units {
            writeln!(out, "  unit {} {{", unit.id).unwrap();
            if unit.name != unit.id.as_str() {
                writeln!(out, "    name {}", quoted(&unit.name)).unwrap();
            }
            writeln!(out, "    role {}", unit.role).unwrap();
            out.push_str("  }\n");
        }
        for product in &dpa.products {
            match &product.name {
                Some(name) => writeln!(out, "  product {} name {}", product.id, quoted(name)).unwrap(),
                None => writeln!(out, "  product {}", product.id).unwrap(),
            }
        }
        for block in &dpa.blocks {
            writeln!(out, "  block {} {{", block.id).unwrap();
            writeln!(out, "    unit {}", block.unit).unwrap();
            writeln!(out, "    level {}", block.level).unwrap();
            write!(out, "    functions").unwrap();
            for f in &block.functions {
                write!(out, " {f}").unwrap();
            }
            out.push('\n');
            for r in &block.responsibilities {
                writeln!(out, "    responsibility {}", quoted(r)).unwrap();
            }
            out.push_str("  }\n");
        }
        for relation in &dpa.relations {
            write!(out, "  relation {} {} -> {}", relation.kind, relation.from, relation.to).unwrap();
            if let Some(product) = &relation.product {
                write!(out, " product {product}").unwrap();
            }
            if let Some(info_type) = relation.info_type {
                write!(out, " type {info_type}").unwrap();
            }
            if let Some(key) = &relation.key {
                write!(out, " key {key}").unwrap();
            }
            out.push('\n');
        }
        if let Some(dp) = &dpa.decoupling_point {
            writeln!(out, "  decoupling_point {dp}").unwrap();
        }
        for inv in &dpa.inventories {
            writeln!(out, "  inventory {} {{", inv.block).unwrap();
            writeln!(out, "    kind {}", inv.stock_kind).unwrap();
            writeln!(out, "    initial {}", inv.initial_qty).unwrap();
            if let Some(rp) = inv.reorder_point {
                writeln!(out, "    reorder_point {rp}").unwrap();
            }
            if let Some(rq) = inv.reorder_qty {
                writeln!(out, "    reorder_qty {rq}").unwrap();
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
    }

    let saoa = &model.saoa;
    if *saoa != SaoaSection::default() {
        out.push_str("saoa {\n");
        writeln!(out, "  structure {}", saoa.social_structure).unwrap();
        for directive in &saoa.directives {
            match directive {
                Directive::Merge { agent, blocks } => {
                    write!(out, "  merge {agent} blocks").unwrap();
                    for b in blocks {
                        write!(out, " {b}").unwrap();
                    }
                    out.push('\n');
                }
                Directive::Split { block, parts } => {
                    writeln!(out, "  split {block} {{").unwrap();
                    for part in parts {
                        writeln!(out, "    part {} {} {}", part.agent, part.specialization, part.key).unwrap();
                    }
                    out.push_str("  }\n");
                }
                Directive::Mediator { agent, scope } => {
                    write!(out, "  mediator {agent} scope").unwrap();
                    for a in scope {
                        write!(out, " {a}").unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        for protocol in &saoa.protocols {
            writeln!(out, "  protocol {} {{", protocol.name).unwrap();
            writeln!(out, "    type {}", protocol.protocol_type).unwrap();
            for binding in &protocol.bindings {
                writeln!(out, "    bind {} -> {}", binding.from, binding.to).unwrap();
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
    }

    let iaoa = &model.iaoa;
    if *iaoa != IaoaSection::default() {
        out.push_str("iaoa {\n");
        for decl in &iaoa.abilities {
            write!(out, "  ability {} ", decl.selector).unwrap();
            match &decl.ability {
                Ability::MonitorInventory => out.push_str("monitor_inventory"),
                Ability::Procure { reorder_point, reorder_qty } => {
                    out.push_str("procure");
                    if let Some(rp) = reorder_point {
                        write!(out, " reorder_point {rp}").unwrap();
                    }
                    if let Some(rq) = reorder_qty {
                        write!(out, " reorder_qty {rq}").unwrap();
                    }
                }
                Ability::PlanProduction { policy } => {
                    write!(out, "plan_production policy {}", policy.as_str()).unwrap();
                }
                Ability::Dispatch { rule, capacity } => {
                    write!(out, "dispatch rule {}", rule.as_str()).unwrap();
                    if let Some(cap) = capacity {
                        write!(out, " capacity {cap}").unwrap();
                    }
                }
                Ability::Ship { lead_time } => {
                    write!(out, "ship lead_time {lead_time}").unwrap();
                }
                Ability::Sell { demand } => {
                    out.push_str("sell demand ");
                    match demand {
                        DemandSpec::Constant { rate } => write!(out, "constant {rate}").unwrap(),
                        DemandSpec::Uniform { lo, hi } => write!(out, "uniform {lo} {hi}").unwrap(),
                        DemandSpec::Normal { mean, sd } => {
                            write!(out, "normal {} {}", number(*mean), number(*sd)).unwrap()
                        }
                    }
                }
            }
            out.push('\n');
        }
        for quote in &iaoa.quotes {
            writeln!(out, "  quote {} price {}", quote.selector, number(quote.price)).unwrap();
        }
        for rule in &iaoa.responses {
            writeln!(
                out,
                "  response {} when {} {} {} do {}",
                rule.selector, rule.quantity, rule.comparator, rule.threshold, rule.action
            )
            .unwrap();
        }
        out.push_str("}\n");
    }

    out
}

fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

/// Decimal rendering without exponent notation; integral values print with
/// no fraction part, matching the number grammar.
fn number(x: f64) -> String {
    format!("{x}")
}
