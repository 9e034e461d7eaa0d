//! The supply chain planning cube: decision levels, planning functions, and
//! spatial roles, plus the Supply Chain Blocks that occupy cube cells.
//!
//! The cube has three axes. The intertemporal axis holds the three planning
//! levels of the decision system plus an execution level for the operating
//! system; the functional axis holds the four planning functions; the spatial
//! axis holds the organizational units. A block claims one cell per function
//! it covers, all at its own unit and level, and a model is cube-consistent
//! when no cell is claimed twice.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::report::{ValidationReport, Violation, ViolationCode};

/// Planning or execution layer of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionLevel {
    Strategic,
    Tactical,
    Operational,
    Execution,
}

impl DecisionLevel {
    pub const ALL: [DecisionLevel; 4] = [
        DecisionLevel::Strategic,
        DecisionLevel::Tactical,
        DecisionLevel::Operational,
        DecisionLevel::Execution,
    ];

    /// The execution level belongs to the operating system; the other three
    /// levels form the decision system.
    pub fn is_execution(self) -> bool {
        matches!(self, DecisionLevel::Execution)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DecisionLevel::Strategic => "strategic",
            DecisionLevel::Tactical => "tactical",
            DecisionLevel::Operational => "operational",
            DecisionLevel::Execution => "execution",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for DecisionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Planning function covered by a block (the functional axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalArea {
    Procurement,
    Manufacturing,
    Distribution,
    Sales,
}

impl FunctionalArea {
    pub const ALL: [FunctionalArea; 4] = [
        FunctionalArea::Procurement,
        FunctionalArea::Manufacturing,
        FunctionalArea::Distribution,
        FunctionalArea::Sales,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FunctionalArea::Procurement => "procurement",
            FunctionalArea::Manufacturing => "manufacturing",
            FunctionalArea::Distribution => "distribution",
            FunctionalArea::Sales => "sales",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for FunctionalArea {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Role of a spatial unit along the chain (the spatial axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRole {
    Vendor,
    Facility,
    Client,
    Consumer,
}

impl SpatialRole {
    pub const ALL: [SpatialRole; 4] = [
        SpatialRole::Vendor,
        SpatialRole::Facility,
        SpatialRole::Client,
        SpatialRole::Consumer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SpatialRole::Vendor => "vendor",
            SpatialRole::Facility => "facility",
            SpatialRole::Client => "client",
            SpatialRole::Consumer => "consumer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for SpatialRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

macro_rules! id_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }
    };
}

id_newtype!(
    /// Identifier of a spatial unit.
    UnitId
);
id_newtype!(
    /// Identifier of a supply chain block.
    BlockId
);
id_newtype!(
    /// Identifier of a product.
    ProductId
);
id_newtype!(
    /// Name of an agent in the conceptual or operational model.
    AgentName
);

/// An organizational unit of analysis. Spatial here means organizational
/// position in the chain, not geography.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialUnit {
    pub id: UnitId,
    pub name: String,
    pub role: SpatialRole,
}

/// A semi-autonomous planning or execution entity occupying cube cells.
///
/// A block may cover several functions (physical-based agentification keeps
/// a whole physical entity together); cube-cell uniqueness is therefore
/// checked per cell, not per block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyChainBlock {
    pub id: BlockId,
    pub unit: UnitId,
    pub level: DecisionLevel,
    pub functions: BTreeSet<FunctionalArea>,
    pub responsibilities: Vec<String>,
}

impl SupplyChainBlock {
    /// Execution-level blocks belong to the operating system; all others to
    /// the decision system.
    pub fn is_operating_system(&self) -> bool {
        self.level.is_execution()
    }
}

/// One cell of the planning cube.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CubeCell {
    pub unit: UnitId,
    pub level: DecisionLevel,
    pub function: FunctionalArea,
}

impl fmt::Display for CubeCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.unit, self.level, self.function)
    }
}

/// Cells claimed by one block: one per covered function, all at the block's
/// unit and level.
pub fn cube_cells(block: &SupplyChainBlock) -> BTreeSet<CubeCell> {
    block
        .functions
        .iter()
        .map(|&function| CubeCell {
            unit: block.unit.clone(),
            level: block.level,
            function,
        })
        .collect()
}

/// Checks a block population against the cube: unique block ids, resolvable
/// unit references, and no cell claimed twice.
pub fn validate_cube(units: &[SpatialUnit], blocks: &[SupplyChainBlock]) -> ValidationReport {
    let mut report = ValidationReport::new();

    let mut unit_ids = BTreeSet::new();
    for unit in units {
        if !unit_ids.insert(unit.id.clone()) {
            report.push(Violation::new(
                ViolationCode::DuplicateUnitId,
                unit.id.as_str(),
                format!("unit id `{}` declared more than once", unit.id),
            ));
        }
    }

    let mut block_ids = BTreeSet::new();
    let mut claimed: BTreeMap<CubeCell, BlockId> = BTreeMap::new();
    for block in blocks {
        if !block_ids.insert(block.id.clone()) {
            report.push(Violation::new(
                ViolationCode::DuplicateBlockId,
                block.id.as_str(),
                format!("block id `{}` declared more than once", block.id),
            ));
        }
        if !unit_ids.contains(&block.unit) {
            report.push(Violation::new(
                ViolationCode::DanglingUnit,
                block.id.as_str(),
                format!("block `{}` references unknown unit `{}`", block.id, block.unit),
            ));
        }
        for cell in cube_cells(block) {
            if let Some(prev) = claimed.get(&cell) {
                report.push(Violation::new(
                    ViolationCode::DuplicateCell,
                    block.id.as_str(),
                    format!("cube cell {} claimed by both `{}` and `{}`", cell, prev, block.id),
                ));
            } else {
                claimed.insert(cell, block.id.clone());
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(id: &str, role: SpatialRole) -> SpatialUnit {
        SpatialUnit {
            id: UnitId::from(id),
            name: id.to_owned(),
            role,
        }
    }

    fn block(id: &str, unit: &str, level: DecisionLevel, functions: &[FunctionalArea]) -> SupplyChainBlock {
        SupplyChainBlock {
            id: BlockId::from(id),
            unit: UnitId::from(unit),
            level,
            functions: functions.iter().copied().collect(),
            responsibilities: Vec::new(),
        }
    }

    #[test]
    fn single_function_block_claims_one_cell() {
        let b = block("F1.tact", "F1", DecisionLevel::Tactical, &[FunctionalArea::Manufacturing]);
        let cells = cube_cells(&b);
        assert_eq!(cells.len(), 1);
        let cell = cells.iter().next().unwrap();
        assert_eq!(cell.unit, UnitId::from("F1"));
        assert_eq!(cell.level, DecisionLevel::Tactical);
        assert_eq!(cell.function, FunctionalArea::Manufacturing);
    }

    #[test]
    fn multi_function_block_claims_one_cell_per_function() {
        let b = block(
            "F1.tact",
            "F1",
            DecisionLevel::Tactical,
            &[FunctionalArea::Procurement, FunctionalArea::Sales],
        );
        assert_eq!(cube_cells(&b).len(), 2);
    }

    #[test]
    fn cell_count_equals_function_count() {
        for n in 1..=4 {
            let funcs: Vec<_> = FunctionalArea::ALL[..n].to_vec();
            let b = block("b", "u", DecisionLevel::Operational, &funcs);
            assert_eq!(cube_cells(&b).len(), n);
        }
    }

    #[test]
    fn empty_model_validates_clean() {
        assert!(validate_cube(&[], &[]).is_empty());
    }

    #[test]
    fn duplicate_cell_is_one_violation() {
        let units = vec![unit("F1", SpatialRole::Facility)];
        let blocks = vec![
            block("a", "F1", DecisionLevel::Tactical, &[FunctionalArea::Manufacturing]),
            block("b", "F1", DecisionLevel::Tactical, &[FunctionalArea::Manufacturing]),
        ];
        let report = validate_cube(&units, &blocks);
        assert_eq!(report.len(), 1);
        assert_eq!(report.violations[0].code, ViolationCode::DuplicateCell);
    }

    #[test]
    fn duplicate_block_id_and_dangling_unit_reported() {
        let units = vec![unit("F1", SpatialRole::Facility)];
        let blocks = vec![
            block("a", "F1", DecisionLevel::Tactical, &[FunctionalArea::Manufacturing]),
            block("a", "F2", DecisionLevel::Execution, &[FunctionalArea::Distribution]),
        ];
        let report = validate_cube(&units, &blocks);
        let codes: Vec<_> = report.violations.iter().map(|v| v.code).collect();
        assert!(codes.contains(&ViolationCode::DuplicateBlockId));
        assert!(codes.contains(&ViolationCode::DanglingUnit));
    }

    #[test]
    fn full_cube_population_is_consistent_with_64_cells() {
        // One unit per role, one block per (unit, level) covering all four
        // functions: 4 x 4 x 4 = 64 distinct cells.
        let units: Vec<_> = SpatialRole::ALL
            .iter()
            .enumerate()
            .map(|(i, &role)| unit(&format!("U{i}"), role))
            .collect();
        let mut blocks = Vec::new();
        for (i, _) in SpatialRole::ALL.iter().enumerate() {
            for level in DecisionLevel::ALL {
                blocks.push(block(
                    &format!("U{i}.{level}"),
                    &format!("U{i}"),
                    level,
                    &FunctionalArea::ALL,
                ));
            }
        }
        let report = validate_cube(&units, &blocks);
        assert!(report.is_empty(), "unexpected violations: {:?}", report.violations);
        let all_cells: BTreeSet<_> = blocks.iter().flat_map(cube_cells).collect();
        assert_eq!(all_cells.len(), 64);
    }

    #[test]
    fn level_partition_splits_operating_and_decision_systems() {
        let ops: Vec<_> = DecisionLevel::ALL.iter().filter(|l| l.is_execution()).collect();
        assert_eq!(ops, vec![&DecisionLevel::Execution]);
    }
}
