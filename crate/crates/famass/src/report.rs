//! Validation reporting shared by the metamodel and model loaders.
//!
//! Violations are data, not failures: checks collect every problem they can
//! find and the caller decides what to do with the report.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A line/column position in a source document (1-based; 0 means unknown).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub const UNKNOWN: Span = Span { line: 0, col: 0 };

    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Stable machine-readable violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    DuplicateCell,
    DuplicateBlockId,
    DuplicateUnitId,
    DanglingUnit,
    PhysicalRequiresExecution,
    PhysicalRequiresProduct,
    PhysicalForbidsInfoType,
    InformationalRequiresType,
    ProtocolUnbound,
    ProtocolBoundToPhysical,
    ProtocolMixedInitiators,
    DirectiveConflict,
    MergeMixesSocieties,
    MergeMixesUnits,
    SplitUncoveredInteraction,
    SplitAmbiguousInteraction,
    MediatorUnknownAgent,
    ArbitrationNeedsMediator,
    DuplicateAgentName,
    SelectorUnmatched,
    ActionUndeclared,
    DuplicateAbility,
    ProcureUnderspecified,
    EmptyFactor,
    InvalidQuantity,
    DanglingRef,
    DeployFailure,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::DuplicateCell => "duplicate-cell",
            ViolationCode::DuplicateBlockId => "duplicate-block-id",
            ViolationCode::DuplicateUnitId => "duplicate-unit-id",
            ViolationCode::DanglingUnit => "dangling-unit",
            ViolationCode::PhysicalRequiresExecution => "physical-requires-execution",
            ViolationCode::PhysicalRequiresProduct => "physical-requires-product",
            ViolationCode::PhysicalForbidsInfoType => "physical-forbids-info-type",
            ViolationCode::InformationalRequiresType => "informational-requires-type",
            ViolationCode::ProtocolUnbound => "protocol-unbound",
            ViolationCode::ProtocolBoundToPhysical => "protocol-bound-to-physical",
            ViolationCode::ProtocolMixedInitiators => "protocol-mixed-initiators",
            ViolationCode::DirectiveConflict => "directive-conflict",
            ViolationCode::MergeMixesSocieties => "merge-mixes-societies",
            ViolationCode::MergeMixesUnits => "merge-mixes-units",
            ViolationCode::SplitUncoveredInteraction => "split-uncovered-interaction",
            ViolationCode::SplitAmbiguousInteraction => "split-ambiguous-interaction",
            ViolationCode::MediatorUnknownAgent => "mediator-unknown-agent",
            ViolationCode::ArbitrationNeedsMediator => "arbitration-needs-mediator",
            ViolationCode::DuplicateAgentName => "duplicate-agent-name",
            ViolationCode::SelectorUnmatched => "selector-unmatched",
            ViolationCode::ActionUndeclared => "action-undeclared",
            ViolationCode::DuplicateAbility => "duplicate-ability",
            ViolationCode::ProcureUnderspecified => "procure-underspecified",
            ViolationCode::EmptyFactor => "empty-factor",
            ViolationCode::InvalidQuantity => "invalid-quantity",
            ViolationCode::DanglingRef => "dangling-reference",
            ViolationCode::DeployFailure => "deploy-failure",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One rule violation found while checking a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Identifier of the offending element, when there is one.
    pub subject: String,
    pub message: String,
    /// Source position, when the violation maps back to a declaration.
    pub span: Option<Span>,
}

impl Violation {
    pub fn new(code: ViolationCode, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            code,
            subject: subject.into(),
            message: message.into(),
            span: None,
        }
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = Some(span);
        self
    }

    pub fn with_span_opt(mut self, span: Option<Span>) -> Self {
        self.span = span;
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let span = self.span.unwrap_or(Span::UNKNOWN);
        write!(f, "{}: {}: {}", span, self.code, self.message)
    }
}

/// Outcome of a validation pass. Empty means the model is consistent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn new() -> Self {
        ValidationReport::default()
    }

    pub fn push(&mut self, violation: Violation) {
        self.violations.push(violation);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    /// Orders violations by source position, then code, for stable output.
    pub fn sort(&mut self) {
        self.violations.sort_by(|a, b| {
            let ka = (a.span.unwrap_or(Span::UNKNOWN), a.code, a.subject.clone());
            let kb = (b.span.unwrap_or(Span::UNKNOWN), b.code, b.subject.clone());
            ka.cmp(&kb)
        });
    }
}
