//! Stage one: the domain model.
//!
//! Partitions the analysis relations by kind — material flows into the
//! structural model, message flows into the dynamic model — and carries the
//! decoupling point and inventory positions along. Blocks are neither added
//! nor dropped; link multisets equal the analysis relation multisets.

use serde::{Deserialize, Serialize};

use crate::fml::model::{DpaSection, InfoType, InventoryDecl, Product, RelationKind};
use crate::metamodel::{BlockId, ProductId, SpatialUnit, SupplyChainBlock};

use super::DeployError;

/// Structural and dynamic views of the supply chain, prior to any
/// agentification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainModel {
    pub structural: StructuralModel,
    pub dynamic: DynamicModel,
}

/// The network of blocks and their material interactions, plus the product
/// catalog those interactions draw from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralModel {
    pub units: Vec<SpatialUnit>,
    pub blocks: Vec<SupplyChainBlock>,
    pub physical_links: Vec<PhysicalLink>,
    pub products: Vec<Product>,
}

/// Informational flows, the decoupling point, and inventory positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicModel {
    pub info_links: Vec<InfoLink>,
    pub decoupling_point: Option<BlockId>,
    pub inventories: Vec<InventoryDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhysicalLink {
    pub from: BlockId,
    pub to: BlockId,
    pub product: ProductId,
    /// Specialization key carried through for split directives.
    pub key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InfoLink {
    pub from: BlockId,
    pub to: BlockId,
    pub info_type: InfoType,
    pub key: Option<String>,
}

/// Builds the domain model by partitioning relations by kind. Fails only on
/// a physical relation without a product or an informational relation
/// without a flow type, both of which `resolve` reports beforehand.
pub fn build_domain_model(dpa: &DpaSection) -> Result<DomainModel, DeployError> {
    let mut physical_links = Vec::new();
    let mut info_links = Vec::new();
    for relation in &dpa.relations {
        match relation.kind {
            RelationKind::Physical => {
                let Some(product) = relation.product.clone() else {
                    return Err(DeployError::MissingProduct {
                        from: relation.from.clone(),
                        to: relation.to.clone(),
                    });
                };
                physical_links.push(PhysicalLink {
                    from: relation.from.clone(),
                    to: relation.to.clone(),
                    product,
                    key: relation.key.clone(),
                });
            }
            RelationKind::Informational => {
                // An untyped informational relation defaults to plain
                // information sharing; resolve flags it, but the pipeline
                // stays total on it.
                info_links.push(InfoLink {
                    from: relation.from.clone(),
                    to: relation.to.clone(),
                    info_type: relation.info_type.unwrap_or(InfoType::ModelExchange),
                    key: relation.key.clone(),
                });
            }
        }
    }
    let mut units = dpa.units.clone();
    units.sort_by(|a, b| a.id.cmp(&b.id));
    let mut blocks = dpa.blocks.clone();
    blocks.sort_by(|a, b| a.id.cmp(&b.id));
    let mut products = dpa.products.clone();
    products.sort_by(|a, b| a.id.cmp(&b.id));
    physical_links.sort();
    info_links.sort();
    let mut inventories = dpa.inventories.clone();
    inventories.sort_by(|a, b| (&a.block, a.stock_kind).cmp(&(&b.block, b.stock_kind)));
    Ok(DomainModel {
        structural: StructuralModel {
            units,
            blocks,
            physical_links,
            products,
        },
        dynamic: DynamicModel {
            info_links,
            decoupling_point: dpa.decoupling_point.clone(),
            inventories,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fml::model::Relation;
    use crate::metamodel::{DecisionLevel, FunctionalArea, UnitId};

    fn block(id: &str, level: DecisionLevel) -> SupplyChainBlock {
        SupplyChainBlock {
            id: BlockId::from(id),
            unit: UnitId::from("U"),
            level,
            functions: [FunctionalArea::Sales].into_iter().collect(),
            responsibilities: Vec::new(),
        }
    }

    fn physical(from: &str, to: &str, product: Option<&str>) -> Relation {
        Relation {
            kind: RelationKind::Physical,
            from: BlockId::from(from),
            to: BlockId::from(to),
            product: product.map(ProductId::from),
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
    fn no_relations_preserves_blocks_with_empty_links() {
        let dpa = DpaSection {
            blocks: vec![block("b", DecisionLevel::Execution)],
            ..DpaSection::default()
        };
        let dm = build_domain_model(&dpa).unwrap();
        assert_eq!(dm.structural.blocks.len(), 1);
        assert!(dm.structural.physical_links.is_empty());
        assert!(dm.dynamic.info_links.is_empty());
    }

    #[test]
    fn relations_partition_by_kind() {
        let dpa = DpaSection {
            blocks: vec![
                block("a", DecisionLevel::Execution),
                block("b", DecisionLevel::Execution),
                block("c", DecisionLevel::Tactical),
            ],
            relations: vec![
                physical("a", "b", Some("p")),
                physical("b", "a", Some("p")),
                informational("c", "a", InfoType::Coordination),
                informational("c", "b", InfoType::NeedsExpression),
                informational("b", "c", InfoType::OffersExpression),
                informational("c", "c", InfoType::ModelExchange),
            ],
            ..DpaSection::default()
        };
        let dm = build_domain_model(&dpa).unwrap();
        assert_eq!(dm.structural.physical_links.len(), 2);
        assert_eq!(dm.dynamic.info_links.len(), 4);
    }

    #[test]
    fn physical_without_product_is_a_deploy_error() {
        let dpa = DpaSection {
            blocks: vec![block("a", DecisionLevel::Execution), block("b", DecisionLevel::Execution)],
            relations: vec![physical("a", "b", None)],
            ..DpaSection::default()
        };
        assert_eq!(
            build_domain_model(&dpa).unwrap_err(),
            DeployError::MissingProduct {
                from: BlockId::from("a"),
                to: BlockId::from("b"),
            }
        );
    }

    #[test]
    fn output_collections_are_sorted() {
        let dpa = DpaSection {
            blocks: vec![block("z", DecisionLevel::Execution), block("a", DecisionLevel::Execution)],
            relations: vec![physical("z", "a", Some("p")), physical("a", "z", Some("p"))],
            ..DpaSection::default()
        };
        let dm = build_domain_model(&dpa).unwrap();
        assert_eq!(dm.structural.blocks[0].id, BlockId::from("a"));
        assert!(dm.structural.physical_links[0].from < dm.structural.physical_links[1].from);
    }
}
