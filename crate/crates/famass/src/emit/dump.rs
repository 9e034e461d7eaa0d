//! Canonical structured dumps of pipeline stages.
//!
//! A dump is a pretty-printed JSON envelope with alphabetically ordered keys
//! (the serializer's map type is ordered), UTF-8, LF line endings, and a
//! single trailing newline — so equal models produce byte-equal dumps and a
//! dump survives a load/dump round trip byte-identically. The envelope names
//! the format and version so foreign files are rejected with a clear error
//! instead of a deserialization trace.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use super::Stage;
use crate::deploy::{ConceptualAgentModel, DomainModel, OperationalAgentModel};

/// Marker naming the dump file format.
pub const DUMP_FORMAT: &str = "famass-dump";
/// Format version written by this crate; loads reject any other.
pub const DUMP_VERSION: u64 = 1;

/// A deployment stage model ready for dumping or just loaded.
#[derive(Debug, Clone, PartialEq)]
pub enum StageDump {
    Dm(DomainModel),
    Cam(ConceptualAgentModel),
    Oam(OperationalAgentModel),
}

impl StageDump {
    pub fn stage(&self) -> Stage {
        match self {
            StageDump::Dm(_) => Stage::Dm,
            StageDump::Cam(_) => Stage::Cam,
            StageDump::Oam(_) => Stage::Oam,
        }
    }
}

/// Why a dump file could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DumpError {
    #[error("malformed dump: {0}")]
    Malformed(String),
    #[error("unsupported dump: {0}")]
    Unsupported(String),
}

/// Renders any serializable payload as a canonical dump under the given
/// stage tag. Stage models go through [`dump`]; reports use their own tags.
pub fn canonical(stage: &str, payload: &impl Serialize) -> String {
    let envelope = serde_json::json!({
        "format": DUMP_FORMAT,
        "version": DUMP_VERSION,
        "stage": stage,
        "model": serde_json::to_value(payload).expect("pipeline models serialize"),
    });
    let mut text = serde_json::to_string_pretty(&envelope).expect("json renders");
    text.push('\n');
    text
}

/// Renders a stage model as its canonical dump.
pub fn dump(stage: &StageDump) -> String {
    match stage {
        StageDump::Dm(m) => canonical(Stage::Dm.as_str(), m),
        StageDump::Cam(m) => canonical(Stage::Cam.as_str(), m),
        StageDump::Oam(m) => canonical(Stage::Oam.as_str(), m),
    }
}

/// Opens the envelope: verifies format and version, returns the stage tag
/// and the raw model value.
pub fn open_envelope(text: &str) -> Result<(String, serde_json::Value), DumpError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DumpError::Malformed(e.to_string()))?;
    let Some(object) = value.as_object() else {
        return Err(DumpError::Malformed("top level is not an object".into()));
    };
    match object.get("format").and_then(|v| v.as_str()) {
        Some(DUMP_FORMAT) => {}
        Some(other) => return Err(DumpError::Unsupported(format!("format `{other}`"))),
        None => return Err(DumpError::Malformed("missing `format` field".into())),
    }
    match object.get("version").and_then(|v| v.as_u64()) {
        Some(DUMP_VERSION) => {}
        Some(other) => return Err(DumpError::Unsupported(format!("version {other}"))),
        None => return Err(DumpError::Malformed("missing `version` field".into())),
    }
    let Some(stage) = object.get("stage").and_then(|v| v.as_str()) else {
        return Err(DumpError::Malformed("missing `stage` field".into()));
    };
    let Some(model) = object.get("model") else {
        return Err(DumpError::Malformed("missing `model` field".into()));
    };
    Ok((stage.to_string(), model.clone()))
}

/// Deserializes an envelope's model value into a concrete payload type.
pub fn payload<T: DeserializeOwned>(model: serde_json::Value) -> Result<T, DumpError> {
    serde_json::from_value(model).map_err(|e| DumpError::Malformed(e.to_string()))
}

/// Loads a stage dump produced by [`dump`].
pub fn load(text: &str) -> Result<StageDump, DumpError> {
    let (stage, model) = open_envelope(text)?;
    match Stage::parse(&stage) {
        Some(Stage::Dm) => Ok(StageDump::Dm(payload(model)?)),
        Some(Stage::Cam) => Ok(StageDump::Cam(payload(model)?)),
        Some(Stage::Oam) => Ok(StageDump::Oam(payload(model)?)),
        None => Err(DumpError::Unsupported(format!("stage `{stage}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deploy::{build_cam, build_domain_model, build_oam};
    use crate::fml::parse_fml;

    fn stages() -> (DomainModel, ConceptualAgentModel, OperationalAgentModel) {
        let text = r#"
dpa {
  unit V1 { role vendor }
  unit F1 { role facility }
  product P1
  block V1.exec { unit V1 level execution functions distribution }
  block F1.exec { unit F1 level execution functions distribution }
  block F1.tact { unit F1 level tactical functions procurement }
  relation physical V1.exec -> F1.exec product P1
  relation informational F1.tact -> V1.exec type needs_expression
  decoupling_point F1.exec
  inventory F1.exec { kind final_product initial 40 reorder_point 15 reorder_qty 30 }
}
saoa {
  structure hierarchical
  protocol replenish { type negotiation bind F1.tact -> V1.exec }
}
iaoa {
  ability F1.tact procure reorder_point 15 reorder_qty 30
  quote V1.exec price 5.5
}
"#;
        let parsed = parse_fml(text).expect("fixture parses");
        let dm = build_domain_model(&parsed.model.dpa).expect("dm builds");
        let cam = build_cam(&dm, &parsed.model.saoa).expect("cam builds");
        let oam = build_oam(&cam, &parsed.model.saoa, &parsed.model.iaoa).expect("oam builds");
        (dm, cam, oam)
    }

    #[test]
    fn stage_dumps_round_trip_byte_identically() {
        let (dm, cam, oam) = stages();
        for stage in [StageDump::Dm(dm), StageDump::Cam(cam), StageDump::Oam(oam)] {
            let first = dump(&stage);
            let loaded = load(&first).expect("dump loads");
            assert_eq!(loaded, stage);
            assert_eq!(dump(&loaded), first, "round trip must be byte-identical");
        }
    }

    #[test]
    fn dump_is_canonical_json_with_trailing_newline() {
        let (dm, _, _) = stages();
        let text = dump(&StageDump::Dm(dm));
        assert!(text.ends_with("}\n"));
        assert!(!text.contains('\r'));
        let format_pos = text.find("\"format\"").unwrap();
        let model_pos = text.find("\"model\"").unwrap();
        let stage_pos = text.find("\"stage\"").unwrap();
        let version_pos = text.find("\"version\"").unwrap();
        assert!(format_pos < model_pos && model_pos < stage_pos && stage_pos < version_pos);
    }

    #[test]
    fn foreign_and_damaged_inputs_are_rejected() {
        assert!(matches!(load("not json"), Err(DumpError::Malformed(_))));
        assert!(matches!(load("[1, 2]"), Err(DumpError::Malformed(_))));
        let wrong_format = r#"{"format":"other","version":1,"stage":"dm","model":{}}"#;
        assert!(matches!(load(wrong_format), Err(DumpError::Unsupported(_))));
        let wrong_version = r#"{"format":"famass-dump","version":2,"stage":"dm","model":{}}"#;
        assert!(matches!(load(wrong_version), Err(DumpError::Unsupported(_))));
        let wrong_stage = r#"{"format":"famass-dump","version":1,"stage":"kpi","model":{}}"#;
        assert!(matches!(load(wrong_stage), Err(DumpError::Unsupported(_))));
    }
}
