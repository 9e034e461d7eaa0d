//! Configuration overrides: `path = level` assignments rewriting the model
//! and run configuration before a run starts.
//!
//! Paths address one tunable each: `demand.<agent>`,
//! `ability.<agent>.<ability>.<parameter>`, `protocol.<name>.type`, and
//! `cost.holding` / `cost.backorder`. A path that matches nothing in the
//! model is an error, not a silent no-op: experiment factors must provably
//! touch the model they vary.

use crate::deploy::{sequence_of, AgentSpec, OperationalAgentModel};
use crate::fml::model::{Ability, AbilityKind, DemandSpec, FactorLevel, ProtocolType};
use crate::metamodel::AgentName;
use crate::Qty;

use super::{InitError, SimConfig};

fn number(level: &FactorLevel) -> Option<f64> {
    match level {
        FactorLevel::Number(x) => Some(*x),
        FactorLevel::Symbol(_) | FactorLevel::Text(_) => None,
    }
}

/// Rounds a numeric level half-up to a whole quantity.
fn qty(level: &FactorLevel) -> Option<Qty> {
    number(level).map(|x| (x + 0.5).floor() as Qty)
}

fn symbol(level: &FactorLevel) -> Option<&str> {
    match level {
        FactorLevel::Symbol(s) | FactorLevel::Text(s) => Some(s),
        FactorLevel::Number(_) => None,
    }
}

fn agent_mut<'a>(
    model: &'a mut OperationalAgentModel,
    name: &str,
) -> Option<&'a mut AgentSpec> {
    model
        .decision_society
        .iter_mut()
        .chain(model.execution_society.iter_mut())
        .find(|a| a.name.as_str() == name)
}

/// Applies every override in `cfg` to the model and configuration, in path
/// order. The override map is consumed; demand overrides land in
/// [`SimConfig::demand`].
pub fn apply_overrides(
    model: &mut OperationalAgentModel,
    cfg: &mut SimConfig,
) -> Result<(), InitError> {
    let overrides = std::mem::take(&mut cfg.overrides);
    for (path, level) in &overrides {
        apply_one(model, cfg, path, level)?;
    }
    Ok(())
}

fn apply_one(
    model: &mut OperationalAgentModel,
    cfg: &mut SimConfig,
    path: &str,
    level: &FactorLevel,
) -> Result<(), InitError> {
    let fail = |reason: &str| InitError::BadOverride {
        path: path.to_string(),
        reason: reason.to_string(),
    };

    if let Some(agent) = path.strip_prefix("demand.") {
        let name = AgentName::from(agent);
        let sells = model
            .agent(&name)
            .is_some_and(|a| a.has_ability(AbilityKind::Sell));
        if !sells {
            return Err(fail("no selling agent by that name"));
        }
        let rate = qty(level).ok_or_else(|| fail("level must be a number"))?;
        if rate < 0 {
            return Err(fail("demand cannot be negative"));
        }
        cfg.demand.insert(name, DemandSpec::Constant { rate });
        return Ok(());
    }

    if let Some(rest) = path.strip_prefix("ability.") {
        let shape = "expected ability.<agent>.<ability>.<parameter>";
        let (head, param) = rest.rsplit_once('.').ok_or_else(|| fail(shape))?;
        let (agent, ability) = head.rsplit_once('.').ok_or_else(|| fail(shape))?;
        let value = qty(level).ok_or_else(|| fail("level must be a number"))?;
        let spec = agent_mut(model, agent).ok_or_else(|| fail("no agent by that name"))?;
        let kind = AbilityKind::parse(ability).ok_or_else(|| fail("unknown ability"))?;
        let slot = spec
            .abilities
            .iter_mut()
            .find(|a| a.kind() == kind)
            .ok_or_else(|| fail("agent does not have that ability"))?;
        match (slot, param) {
            (Ability::Procure { reorder_point, .. }, "reorder_point") => {
                *reorder_point = Some(value);
            }
            (Ability::Procure { reorder_qty, .. }, "reorder_qty") => {
                if value < 1 {
                    return Err(fail("reorder quantity must be at least 1"));
                }
                *reorder_qty = Some(value);
            }
            (Ability::Ship { lead_time }, "lead_time") => {
                if value < 0 {
                    return Err(fail("lead time cannot be negative"));
                }
                *lead_time = value as u64;
            }
            (Ability::Dispatch { capacity, .. }, "capacity") => {
                if value < 0 {
                    return Err(fail("capacity cannot be negative"));
                }
                *capacity = Some(value);
            }
            _ => return Err(fail("unknown ability parameter")),
        }
        return Ok(());
    }

    if let Some(rest) = path.strip_prefix("protocol.") {
        let (name, field) = rest
            .rsplit_once('.')
            .ok_or_else(|| fail("expected protocol.<name>.type"))?;
        if field != "type" {
            return Err(fail("unknown protocol field"));
        }
        let ty = symbol(level)
            .and_then(ProtocolType::parse)
            .ok_or_else(|| fail("level must name a protocol type"))?;
        let spec = model
            .protocols
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| fail("no protocol by that name"))?;
        if ty == ProtocolType::Arbitration && spec.mediator.is_none() {
            return Err(fail("arbitration requires a mediator"));
        }
        spec.protocol_type = ty;
        spec.sequence = sequence_of(ty);
        return Ok(());
    }

    if let Some(field) = path.strip_prefix("cost.") {
        let rate = number(level).ok_or_else(|| fail("level must be a number"))?;
        if !rate.is_finite() || rate < 0.0 {
            return Err(fail("cost rates must be finite and non-negative"));
        }
        match field {
            "holding" => cfg.costs.holding = rate,
            "backorder" => cfg.costs.backorder = rate,
            _ => return Err(fail("unknown cost rate")),
        }
        return Ok(());
    }

    Err(fail("unknown override path"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deploy::{build_cam, build_domain_model, build_oam, Performative};
    use crate::fml::parse_fml;

    const TEXT: &str = "\
dpa {
  unit V1 { name \"Vendor\" role vendor }
  unit F1 { name \"Factory\" role facility }
  block V1.exec { unit V1 level execution functions distribution }
  block F1.tact { unit F1 level tactical functions procurement }
  block F1.exec { unit F1 level execution functions distribution }
  relation physical V1.exec -> F1.exec product P1
  relation informational F1.tact -> V1.exec type needs_expression
  product P1
  inventory V1.exec { kind final_product initial 200 }
  inventory F1.exec { kind final_product initial 40 reorder_point 15 reorder_qty 30 }
}
saoa {
  structure hierarchical
  protocol replen { type negotiation bind F1.tact -> V1.exec }
}
iaoa {
  ability V1.exec ship lead_time 2
  ability F1.exec ship lead_time 1
  ability F1.tact procure
  ability F1.exec sell demand constant 4
  quote V1.exec price 5
}
";

    fn oam() -> OperationalAgentModel {
        let parsed = parse_fml(TEXT).expect("fixture parses");
        let dm = build_domain_model(&parsed.model.dpa).unwrap();
        let cam = build_cam(&dm, &parsed.model.saoa).unwrap();
        build_oam(&cam, &parsed.model.saoa, &parsed.model.iaoa).unwrap()
    }

    fn apply(path: &str, level: FactorLevel) -> Result<(OperationalAgentModel, SimConfig), InitError> {
        let mut model = oam();
        let mut cfg = SimConfig::default();
        cfg.overrides.insert(path.to_string(), level);
        apply_overrides(&mut model, &mut cfg).map(|()| (model, cfg))
    }

    #[test]
    fn demand_override_becomes_a_constant_spec() {
        let (_, cfg) = apply("demand.F1.exec", FactorLevel::Number(7.4)).unwrap();
        assert_eq!(
            cfg.demand[&AgentName::from("F1.exec")],
            DemandSpec::Constant { rate: 7 },
        );
        let err = apply("demand.F1.tact", FactorLevel::Number(7.0)).unwrap_err();
        assert!(matches!(err, InitError::BadOverride { .. }));
    }

    #[test]
    fn ability_parameters_are_rewritten_in_place() {
        let (model, _) = apply(
            "ability.F1.tact.procure.reorder_qty",
            FactorLevel::Number(60.0),
        )
        .unwrap();
        let agent = model.agent(&AgentName::from("F1.tact")).unwrap();
        assert_eq!(
            agent.ability(AbilityKind::Procure),
            Some(&Ability::Procure {
                reorder_point: Some(15),
                reorder_qty: Some(60),
            })
        );

        let (model, _) =
            apply("ability.V1.exec.ship.lead_time", FactorLevel::Number(4.0)).unwrap();
        let agent = model.agent(&AgentName::from("V1.exec")).unwrap();
        assert_eq!(agent.ability(AbilityKind::Ship), Some(&Ability::Ship { lead_time: 4 }));
    }

    #[test]
    fn protocol_type_override_resequences() {
        let (model, _) = apply(
            "protocol.replen.type",
            FactorLevel::Symbol("communication".into()),
        )
        .unwrap();
        let protocol = &model.protocols[0];
        assert_eq!(protocol.protocol_type, ProtocolType::Communication);
        assert_eq!(protocol.sequence.len(), 1);
        assert_eq!(protocol.sequence[0].performatives, vec![Performative::Inform]);
    }

    #[test]
    fn arbitration_without_mediator_is_rejected() {
        let err = apply(
            "protocol.replen.type",
            FactorLevel::Symbol("arbitration".into()),
        )
        .unwrap_err();
        assert!(matches!(err, InitError::BadOverride { .. }));
    }

    #[test]
    fn cost_rates_and_junk_paths() {
        let (_, cfg) = apply("cost.backorder", FactorLevel::Number(2.5)).unwrap();
        assert_eq!(cfg.costs.backorder, 2.5);
        assert_eq!(cfg.costs.holding, 1.0);

        for (path, level) in [
            ("cost.velocity", FactorLevel::Number(1.0)),
            ("ability.F1.tact.procure.color", FactorLevel::Number(1.0)),
            ("ability.F1.tact.procure.reorder_qty", FactorLevel::Number(0.0)),
            ("ability.nobody.ship.lead_time", FactorLevel::Number(1.0)),
            ("wormhole.F1", FactorLevel::Number(1.0)),
            ("protocol.replen.type", FactorLevel::Number(3.0)),
            ("demand.F1.exec", FactorLevel::Symbol("lots".into())),
        ] {
            let err = apply(path, level).unwrap_err();
            assert!(matches!(err, InitError::BadOverride { .. }), "{path}");
        }
    }

    #[test]
    fn applied_overrides_are_consumed() {
        let mut model = oam();
        let mut cfg = SimConfig::default();
        cfg.overrides
            .insert("cost.holding".into(), FactorLevel::Number(0.5));
        apply_overrides(&mut model, &mut cfg).unwrap();
        assert!(cfg.overrides.is_empty());
        assert_eq!(cfg.costs.holding, 0.5);
    }
}
