//! Recursive-descent parser for `.fml` documents.
//!
//! Parsing collects every error it can find (statement-level recovery) and
//! succeeds only when the document is clean: well-formed syntax, unique ids,
//! and resolvable intra-document references. Semantic rules that go beyond
//! reference resolution (level typing, protocol binding arity, directive
//! conflicts) live in [`super::resolve`] and are reported as violations, not
//! parse errors.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::metamodel::{AgentName, BlockId, ProductId, SpatialRole, SupplyChainBlock, UnitId};
use crate::metamodel::{DecisionLevel, FunctionalArea, SpatialUnit};
use crate::report::Span;
use crate::Qty;

use super::model::*;
use super::token::{tokenize, ParseError, ParseErrorKind, Token, TokenKind};

/// Best-effort source positions of declarations, keyed by a stable string:
/// `unit:<id>`, `block:<id>`, `product:<id>`, `relation:<index>`,
/// `inventory:<block>:<kind>`, `decoupling_point`, `factor:<name>`,
/// `uncertainty:<name>`, `kpi:<name>`, `structure`, `merge:<agent>`,
/// `split:<block>`, `mediator:<agent>`, `protocol:<name>`,
/// `ability:<index>`, `quote:<index>`, `response:<index>`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMap {
    map: BTreeMap<String, Span>,
}

impl SourceMap {
    pub fn get(&self, key: &str) -> Option<Span> {
        self.map.get(key).copied()
    }

    fn set(&mut self, key: impl Into<String>, span: Span) {
        self.map.insert(key.into(), span);
    }
}

/// A successfully parsed document: the model plus where its declarations
/// came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedModel {
    pub model: AnalysisModel,
    pub spans: SourceMap,
}

/// Parses an `.fml` document. Returns the model only when the document has
/// no syntax errors, no duplicate ids, and no dangling intra-document
/// references; otherwise returns every error found, in document order.
pub fn parse_fml(text: &str) -> Result<ParsedModel, Vec<ParseError>> {
    let (tokens, mut errors) = tokenize(text);
    let mut parser = Parser::new(&tokens);
    parser.parse_document();
    errors.append(&mut parser.errors);
    if errors.is_empty() {
        // Reference checks on a structurally broken model would report
        // nonsense caused by the breakage itself, so they run only when the
        // document is otherwise clean.
        errors.extend(check_references(&parser.model, &parser.spans));
        errors.extend(check_agent_names(&parser.model, &parser.spans));
    }
    if errors.is_empty() {
        Ok(ParsedModel {
            model: parser.model,
            spans: parser.spans,
        })
    } else {
        errors.sort_by_key(|e| e.span);
        Err(errors)
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    errors: Vec<ParseError>,
    model: AnalysisModel,
    spans: SourceMap,
    seen_sections: BTreeSet<String>,
    seen_structure: bool,
}

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token]) -> Self {
        Parser {
            tokens,
            pos: 0,
            errors: Vec::new(),
            model: AnalysisModel::default(),
            spans: SourceMap::default(),
            seen_sections: BTreeSet::new(),
            seen_structure: false,
        }
    }

    // -- token plumbing ----------------------------------------------------

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> Span {
        self.peek()
            .map(|t| t.span)
            .or_else(|| self.tokens.last().map(|t| t.span))
            .unwrap_or(Span::UNKNOWN)
    }

    fn skip_eols(&mut self) {
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Eol)) {
            self.pos += 1;
        }
    }

    fn error(&mut self, kind: ParseErrorKind, span: Span, symbol: &str, message: impl Into<String>) {
        self.errors.push(ParseError::new(kind, span, symbol, message));
    }

    fn syntax(&mut self, span: Span, symbol: &str, message: impl Into<String>) {
        self.error(ParseErrorKind::SyntaxError, span, symbol, message);
    }

    /// Skips to the end of the current statement: the next end-of-line at
    /// brace depth zero. Braces opened by the statement are skipped whole;
    /// a closing brace belonging to the enclosing block is left in place.
    fn skip_statement(&mut self) {
        let mut depth = 0usize;
        while let Some(tok) = self.peek() {
            match tok.kind {
                TokenKind::LBrace => depth += 1,
                TokenKind::RBrace => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                }
                TokenKind::Eol if depth == 0 => {
                    self.pos += 1;
                    return;
                }
                _ => {}
            }
            self.pos += 1;
        }
    }

    /// Consumes the statement terminator: an end-of-line, or — without
    /// consuming — a `}` closing the enclosing block. Anything else is an
    /// error and the rest of the statement is skipped.
    fn end_of_stmt(&mut self) {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Eol) => {
                self.pos += 1;
            }
            Some(TokenKind::RBrace) | None => {}
            Some(other) => {
                let span = self.here();
                let desc = other.describe();
                self.syntax(span, "", format!("expected end of line, found {desc}"));
                self.skip_statement();
            }
        }
    }

    /// Consumes an optional end-of-line between clauses of a brace body.
    /// Unlike [`end_of_stmt`](Self::end_of_stmt) this never errors: clauses
    /// inside `{ ... }` may share a line, so whatever follows is simply the
    /// next clause (or the closing brace).
    fn end_of_clause(&mut self) {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Eol)) {
            self.pos += 1;
        }
    }

    /// True when the statement's argument list has ended.
    fn at_stmt_end(&self) -> bool {
        matches!(
            self.peek().map(|t| &t.kind),
            Some(TokenKind::Eol) | Some(TokenKind::RBrace) | None
        )
    }

    fn take_ident(&mut self, what: &str) -> Option<(String, Span)> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(s),
                span,
            }) => {
                let out = (s.clone(), *span);
                self.pos += 1;
                if out.0.contains('*') {
                    self.syntax(out.1, &out.0, format!("{what} may not contain `*`"));
                    self.skip_statement();
                    return None;
                }
                Some(out)
            }
            other => {
                let span = self.here();
                let found = other.map(|t| t.kind.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, "", format!("expected {what}, found {found}"));
                self.skip_statement();
                None
            }
        }
    }

    /// Like [`take_ident`](Self::take_ident), but permits a single trailing
    /// `*` so agent selectors can match by prefix (`F1.*`).
    fn take_selector(&mut self, what: &str) -> Option<(String, Span)> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(s),
                span,
            }) => {
                let out = (s.clone(), *span);
                self.pos += 1;
                let stars = out.0.matches('*').count();
                if stars > 1 || (stars == 1 && !out.0.ends_with('*')) {
                    self.syntax(
                        out.1,
                        &out.0,
                        format!("{what} may use `*` only once, at the end"),
                    );
                    self.skip_statement();
                    return None;
                }
                Some(out)
            }
            other => {
                let span = self.here();
                let found = other.map(|t| t.kind.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, "", format!("expected {what}, found {found}"));
                self.skip_statement();
                None
            }
        }
    }

    fn take_keyword(&mut self, keyword: &str) -> bool {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(s),
                ..
            }) if s == keyword => {
                self.pos += 1;
                true
            }
            other => {
                let span = self.here();
                let found = other.map(|t| t.kind.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, keyword, format!("expected `{keyword}`, found {found}"));
                self.skip_statement();
                false
            }
        }
    }

    fn take_f64(&mut self, what: &str) -> Option<(f64, Span)> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Number(v, _),
                span,
            }) => {
                let out = (*v, *span);
                self.pos += 1;
                Some(out)
            }
            other => {
                let span = self.here();
                let found = other.map(|t| t.kind.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, "", format!("expected {what}, found {found}"));
                self.skip_statement();
                None
            }
        }
    }

    fn take_qty(&mut self, what: &str) -> Option<(Qty, Span)> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Number(v, raw),
                span,
            }) => {
                let span = *span;
                if v.fract() == 0.0 && v.abs() <= i64::MAX as f64 {
                    let out = (*v as Qty, span);
                    self.pos += 1;
                    Some(out)
                } else {
                    let raw = raw.clone();
                    self.pos += 1;
                    self.syntax(span, &raw, format!("expected whole number for {what}, found `{raw}`"));
                    self.skip_statement();
                    None
                }
            }
            other => {
                let span = self.here();
                let found = other.map(|t| t.kind.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, "", format!("expected {what}, found {found}"));
                self.skip_statement();
                None
            }
        }
    }

    fn take_string(&mut self, what: &str) -> Option<(String, Span)> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Str(s),
                span,
            }) => {
                let out = (s.clone(), *span);
                self.pos += 1;
                Some(out)
            }
            other => {
                let span = self.here();
                let found = other.map(|t| t.kind.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, "", format!("expected {what} string, found {found}"));
                self.skip_statement();
                None
            }
        }
    }

    fn take_arrow(&mut self) -> bool {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Arrow) => {
                self.pos += 1;
                true
            }
            other => {
                let span = self.here();
                let found = other.map(|k| k.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, "->", format!("expected `->`, found {found}"));
                self.skip_statement();
                false
            }
        }
    }

    /// Consumes `{` and the line break after it; on failure skips the
    /// statement. The `{` must sit on the declaration's own line.
    fn open_body(&mut self, what: &str) -> bool {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::LBrace) => {
                self.pos += 1;
                // The body may start on the same line (single-line form) or
                // on the next; body loops skip blank lines themselves.
                if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Eol)) {
                    self.pos += 1;
                }
                true
            }
            other => {
                let span = self.here();
                let found = other.map(|k| k.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, "{", format!("expected `{{` after {what}, found {found}"));
                self.skip_statement();
                false
            }
        }
    }

    /// Word usable as a split key or relation key: identifier, number, or
    /// string, kept as text.
    fn take_key_word(&mut self, what: &str) -> Option<(String, Span)> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(s), span }) => {
                let out = (s.clone(), *span);
                self.pos += 1;
                Some(out)
            }
            Some(Token { kind: TokenKind::Number(_, raw), span }) => {
                let out = (raw.clone(), *span);
                self.pos += 1;
                Some(out)
            }
            Some(Token { kind: TokenKind::Str(s), span }) => {
                let out = (s.clone(), *span);
                self.pos += 1;
                Some(out)
            }
            other => {
                let span = self.here();
                let found = other.map(|t| t.kind.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, "", format!("expected {what}, found {found}"));
                self.skip_statement();
                None
            }
        }
    }

    // -- document structure ------------------------------------------------

    fn parse_document(&mut self) {
        loop {
            self.skip_eols();
            let Some(tok) = self.peek() else { return };
            match &tok.kind {
                TokenKind::Ident(kw) => {
                    let kw = kw.clone();
                    let span = tok.span;
                    self.pos += 1;
                    match kw.as_str() {
                        "gpa" | "dpa" | "saoa" | "iaoa" => {
                            if !self.seen_sections.insert(kw.clone()) {
                                self.syntax(span, &kw, format!("section `{kw}` declared twice"));
                            }
                            if self.open_body(&format!("`{kw}`")) {
                                self.parse_section_body(&kw);
                            }
                        }
                        other => {
                            self.error(
                                ParseErrorKind::UnknownKeyword,
                                span,
                                other,
                                format!("unknown top-level keyword `{other}`; expected gpa, dpa, saoa, or iaoa"),
                            );
                            self.skip_statement();
                        }
                    }
                }
                other => {
                    let span = tok.span;
                    let desc = other.describe();
                    self.pos += 1;
                    self.syntax(span, "", format!("expected a section keyword, found {desc}"));
                    self.skip_statement();
                }
            }
        }
    }

    fn parse_section_body(&mut self, section: &str) {
        loop {
            self.skip_eols();
            match self.peek() {
                None => {
                    let span = self.here();
                    self.syntax(span, "", format!("unexpected end of file inside `{section}`; missing `}}`"));
                    return;
                }
                Some(Token {
                    kind: TokenKind::RBrace,
                    ..
                }) => {
                    self.pos += 1;
                    self.end_of_stmt();
                    return;
                }
                Some(Token {
                    kind: TokenKind::Ident(kw),
                    span,
                }) => {
                    let kw = kw.clone();
                    let span = *span;
                    self.pos += 1;
                    match section {
                        "gpa" => self.parse_gpa_stmt(&kw, span),
                        "dpa" => self.parse_dpa_stmt(&kw, span),
                        "saoa" => self.parse_saoa_stmt(&kw, span),
                        "iaoa" => self.parse_iaoa_stmt(&kw, span),
                        _ => unreachable!("section keyword checked by caller"),
                    }
                }
                Some(tok) => {
                    let span = tok.span;
                    let desc = tok.kind.describe();
                    self.pos += 1;
                    self.syntax(span, "", format!("expected a `{section}` statement, found {desc}"));
                    self.skip_statement();
                }
            }
        }
    }

    // -- gpa ---------------------------------------------------------------

    fn parse_gpa_stmt(&mut self, kw: &str, span: Span) {
        match kw {
            "objective" => {
                let Some((text, _)) = self.take_string("objective") else { return };
                if self.model.gpa.objective.is_some() {
                    self.syntax(span, "objective", "objective declared twice");
                } else {
                    self.model.gpa.objective = Some(text);
                    self.spans.set("objective", span);
                }
                self.end_of_stmt();
            }
            "question" => {
                let Some((text, _)) = self.take_string("question") else { return };
                self.model.gpa.questions.push(text);
                self.end_of_stmt();
            }
            "hypothesis" => {
                let Some((text, _)) = self.take_string("hypothesis") else { return };
                self.model.gpa.hypotheses.push(text);
                self.end_of_stmt();
            }
            "factor" => {
                let Some((name, _)) = self.take_ident("factor name") else { return };
                if !self.take_keyword("levels") {
                    return;
                }
                let mut levels = Vec::new();
                while !self.at_stmt_end() {
                    match self.peek() {
                        Some(Token { kind: TokenKind::Number(v, _), .. }) => {
                            levels.push(FactorLevel::Number(*v));
                            self.pos += 1;
                        }
                        Some(Token { kind: TokenKind::Ident(s), .. }) => {
                            levels.push(FactorLevel::Symbol(s.clone()));
                            self.pos += 1;
                        }
                        Some(Token { kind: TokenKind::Str(s), .. }) => {
                            levels.push(FactorLevel::Text(s.clone()));
                            self.pos += 1;
                        }
                        Some(tok) => {
                            let tspan = tok.span;
                            let desc = tok.kind.describe();
                            self.syntax(tspan, "", format!("expected a factor level, found {desc}"));
                            self.skip_statement();
                            return;
                        }
                        None => break,
                    }
                }
                if self.model.gpa.factors.iter().any(|f| f.name == name) {
                    self.error(
                        ParseErrorKind::DuplicateId,
                        span,
                        &name,
                        format!("factor `{name}` declared more than once"),
                    );
                } else {
                    self.spans.set(format!("factor:{name}"), span);
                    self.model.gpa.factors.push(Factor { name, levels });
                }
                self.end_of_stmt();
            }
            "uncertainty" => {
                let Some((name, _)) = self.take_ident("uncertainty name") else { return };
                let Some((dist_kw, dspan)) = self.take_ident("distribution") else { return };
                let distribution = match dist_kw.as_str() {
                    "none" => UncertaintyDist::None,
                    "uniform" => {
                        let Some((lo, _)) = self.take_f64("lower bound") else { return };
                        let Some((hi, _)) = self.take_f64("upper bound") else { return };
                        UncertaintyDist::Uniform { lo, hi }
                    }
                    "normal" => {
                        let Some((mean, _)) = self.take_f64("mean") else { return };
                        let Some((sd, _)) = self.take_f64("standard deviation") else { return };
                        UncertaintyDist::Normal { mean, sd }
                    }
                    other => {
                        self.error(
                            ParseErrorKind::UnknownKeyword,
                            dspan,
                            other,
                            format!("unknown distribution `{other}`; expected none, uniform, or normal"),
                        );
                        self.skip_statement();
                        return;
                    }
                };
                if self.model.gpa.uncertainties.iter().any(|u| u.name == name) {
                    self.error(
                        ParseErrorKind::DuplicateId,
                        span,
                        &name,
                        format!("uncertainty `{name}` declared more than once"),
                    );
                } else {
                    self.spans.set(format!("uncertainty:{name}"), span);
                    self.model.gpa.uncertainties.push(Uncertainty { name, distribution });
                }
                self.end_of_stmt();
            }
            "kpi" => {
                let Some((name, _)) = self.take_ident("KPI name") else { return };
                if !self.take_keyword("metric") {
                    return;
                }
                let Some((metric_kw, mspan)) = self.take_ident("metric") else { return };
                let Some(metric) = KpiMetric::parse(&metric_kw) else {
                    self.error(
                        ParseErrorKind::UnknownKeyword,
                        mspan,
                        &metric_kw,
                        format!("unknown KPI metric `{metric_kw}`"),
                    );
                    self.skip_statement();
                    return;
                };
                if self.model.gpa.kpis.iter().any(|k| k.name == name) {
                    self.error(
                        ParseErrorKind::DuplicateId,
                        span,
                        &name,
                        format!("KPI `{name}` declared more than once"),
                    );
                } else {
                    self.spans.set(format!("kpi:{name}"), span);
                    self.model.gpa.kpis.push(KpiDecl { name, metric });
                }
                self.end_of_stmt();
            }
            other => {
                self.error(
                    ParseErrorKind::UnknownKeyword,
                    span,
                    other,
                    format!("unknown `gpa` keyword `{other}`"),
                );
                self.skip_statement();
            }
        }
    }

    // -- dpa ---------------------------------------------------------------

    fn parse_dpa_stmt(&mut self, kw: &str, span: Span) {
        match kw {
            "unit" => self.parse_unit(span),
            "product" => {
                let Some((id, _)) = self.take_ident("product id") else { return };
                let name = if !self.at_stmt_end() {
                    if !self.take_keyword("name") {
                        return;
                    }
                    match self.take_string("product name") {
                        Some((s, _)) => Some(s),
                        None => return,
                    }
                } else {
                    None
                };
                if self.model.dpa.products.iter().any(|p| p.id.as_str() == id) {
                    self.error(
                        ParseErrorKind::DuplicateId,
                        span,
                        &id,
                        format!("product `{id}` declared more than once"),
                    );
                } else {
                    self.spans.set(format!("product:{id}"), span);
                    self.model.dpa.products.push(Product {
                        id: ProductId::new(id),
                        name,
                    });
                }
                self.end_of_stmt();
            }
            "block" => self.parse_block(span),
            "relation" => self.parse_relation(span),
            "decoupling_point" => {
                let Some((id, _)) = self.take_ident("block id") else { return };
                if self.model.dpa.decoupling_point.is_some() {
                    self.syntax(span, "decoupling_point", "decoupling point declared twice");
                } else {
                    self.spans.set("decoupling_point", span);
                    self.model.dpa.decoupling_point = Some(BlockId::new(id));
                }
                self.end_of_stmt();
            }
            "inventory" => self.parse_inventory(span),
            other => {
                self.error(
                    ParseErrorKind::UnknownKeyword,
                    span,
                    other,
                    format!("unknown `dpa` keyword `{other}`"),
                );
                self.skip_statement();
            }
        }
    }

    fn parse_unit(&mut self, span: Span) {
        let Some((id, _)) = self.take_ident("unit id") else { return };
        if !self.open_body(&format!("`unit {id}`")) {
            return;
        }
        let mut name: Option<String> = None;
        let mut role: Option<SpatialRole> = None;
        loop {
            self.skip_eols();
            match self.peek() {
                None => {
                    let here = self.here();
                    self.syntax(here, "", format!("unexpected end of file inside `unit {id}`"));
                    return;
                }
                Some(Token { kind: TokenKind::RBrace, .. }) => {
                    self.pos += 1;
                    self.end_of_stmt();
                    break;
                }
                _ => {}
            }
            let Some((attr, aspan)) = self.take_ident("unit attribute") else { continue };
            match attr.as_str() {
                "name" => {
                    if let Some((s, _)) = self.take_string("unit name") {
                        name = Some(s);
                        self.end_of_clause();
                    }
                }
                "role" => {
                    let Some((role_kw, rspan)) = self.take_ident("role") else { continue };
                    match SpatialRole::parse(&role_kw) {
                        Some(r) => {
                            role = Some(r);
                            self.end_of_clause();
                        }
                        None => {
                            self.error(
                                ParseErrorKind::UnknownKeyword,
                                rspan,
                                &role_kw,
                                format!("unknown role `{role_kw}`; expected vendor, facility, client, or consumer"),
                            );
                            self.skip_statement();
                        }
                    }
                }
                other => {
                    self.error(
                        ParseErrorKind::UnknownKeyword,
                        aspan,
                        other,
                        format!("unknown `unit` attribute `{other}`"),
                    );
                    self.skip_statement();
                }
            }
        }
        let Some(role) = role else {
            self.syntax(span, &id, format!("unit `{id}` is missing `role`"));
            return;
        };
        if self.model.dpa.units.iter().any(|u| u.id.as_str() == id) {
            self.error(
                ParseErrorKind::DuplicateId,
                span,
                &id,
                format!("unit `{id}` declared more than once"),
            );
            return;
        }
        self.spans.set(format!("unit:{id}"), span);
        self.model.dpa.units.push(SpatialUnit {
            name: name.unwrap_or_else(|| id.clone()),
            id: UnitId::new(id),
            role,
        });
    }

    fn parse_block(&mut self, span: Span) {
        let Some((id, _)) = self.take_ident("block id") else { return };
        if !self.open_body(&format!("`block {id}`")) {
            return;
        }
        let mut unit: Option<UnitId> = None;
        let mut level: Option<DecisionLevel> = None;
        let mut functions: BTreeSet<FunctionalArea> = BTreeSet::new();
        let mut responsibilities: Vec<String> = Vec::new();
        loop {
            self.skip_eols();
            match self.peek() {
                None => {
                    let here = self.here();
                    self.syntax(here, "", format!("unexpected end of file inside `block {id}`"));
                    return;
                }
                Some(Token { kind: TokenKind::RBrace, .. }) => {
                    self.pos += 1;
                    self.end_of_stmt();
                    break;
                }
                _ => {}
            }
            let Some((attr, aspan)) = self.take_ident("block attribute") else { continue };
            match attr.as_str() {
                "unit" => {
                    if let Some((u, _)) = self.take_ident("unit id") {
                        unit = Some(UnitId::new(u));
                        self.end_of_clause();
                    }
                }
                "level" => {
                    let Some((level_kw, lspan)) = self.take_ident("level") else { continue };
                    match DecisionLevel::parse(&level_kw) {
                        Some(l) => {
                            level = Some(l);
                            self.end_of_clause();
                        }
                        None => {
                            self.error(
                                ParseErrorKind::UnknownKeyword,
                                lspan,
                                &level_kw,
                                format!("unknown level `{level_kw}`; expected strategic, tactical, operational, or execution"),
                            );
                            self.skip_statement();
                        }
                    }
                }
                "functions" => {
                    // The list ends at the first word that is not a
                    // functional area, so further clauses may follow on the
                    // same line.
                    let mut saw_any = false;
                    while let Some(Token { kind: TokenKind::Ident(s), .. }) = self.peek() {
                        let Some(f) = FunctionalArea::parse(s) else { break };
                        self.pos += 1;
                        functions.insert(f);
                        saw_any = true;
                    }
                    if saw_any {
                        self.end_of_clause();
                    } else if let Some(Token { kind: TokenKind::Ident(s), span: fspan }) =
                        self.peek()
                    {
                        let (s, fspan) = (s.clone(), *fspan);
                        self.error(
                            ParseErrorKind::UnknownKeyword,
                            fspan,
                            &s,
                            format!("unknown function `{s}`; expected procurement, manufacturing, distribution, or sales"),
                        );
                        self.skip_statement();
                    } else {
                        self.syntax(aspan, "functions", "`functions` needs at least one function");
                        self.end_of_clause();
                    }
                }
                "responsibility" => {
                    if let Some((s, _)) = self.take_string("responsibility") {
                        responsibilities.push(s);
                        self.end_of_clause();
                    }
                }
                other => {
                    self.error(
                        ParseErrorKind::UnknownKeyword,
                        aspan,
                        other,
                        format!("unknown `block` attribute `{other}`"),
                    );
                    self.skip_statement();
                }
            }
        }
        let (Some(unit), Some(level)) = (unit.clone(), level) else {
            let missing = if unit.is_none() { "unit" } else { "level" };
            self.syntax(span, &id, format!("block `{id}` is missing `{missing}`"));
            return;
        };
        if functions.is_empty() {
            self.syntax(span, &id, format!("block `{id}` is missing `functions`"));
            return;
        }
        if self.model.dpa.blocks.iter().any(|b| b.id.as_str() == id) {
            self.error(
                ParseErrorKind::DuplicateId,
                span,
                &id,
                format!("block `{id}` declared more than once"),
            );
            return;
        }
        self.spans.set(format!("block:{id}"), span);
        self.model.dpa.blocks.push(SupplyChainBlock {
            id: BlockId::new(id),
            unit,
            level,
            functions,
            responsibilities,
        });
    }

    fn parse_relation(&mut self, span: Span) {
        let Some((kind_kw, kspan)) = self.take_ident("relation kind") else { return };
        let Some(kind) = RelationKind::parse(&kind_kw) else {
            self.error(
                ParseErrorKind::UnknownKeyword,
                kspan,
                &kind_kw,
                format!("unknown relation kind `{kind_kw}`; expected physical or informational"),
            );
            self.skip_statement();
            return;
        };
        let Some((from, _)) = self.take_ident("source block id") else { return };
        if !self.take_arrow() {
            return;
        }
        let Some((to, _)) = self.take_ident("target block id") else { return };
        let mut product: Option<ProductId> = None;
        let mut info_type: Option<InfoType> = None;
        let mut key: Option<String> = None;
        while !self.at_stmt_end() {
            let Some((clause, cspan)) = self.take_ident("relation clause") else { return };
            match clause.as_str() {
                "product" => {
                    let Some((p, _)) = self.take_ident("product id") else { return };
                    product = Some(ProductId::new(p));
                }
                "type" => {
                    let Some((t_kw, tspan)) = self.take_ident("flow type") else { return };
                    match InfoType::parse(&t_kw) {
                        Some(t) => info_type = Some(t),
                        None => {
                            self.error(
                                ParseErrorKind::UnknownKeyword,
                                tspan,
                                &t_kw,
                                format!("unknown flow type `{t_kw}`; expected needs_expression, offers_expression, coordination, or model_exchange"),
                            );
                            self.skip_statement();
                            return;
                        }
                    }
                }
                "key" => {
                    let Some((k, _)) = self.take_key_word("key") else { return };
                    key = Some(k);
                }
                other => {
                    self.error(
                        ParseErrorKind::UnknownKeyword,
                        cspan,
                        other,
                        format!("unknown `relation` clause `{other}`; expected product, type, or key"),
                    );
                    self.skip_statement();
                    return;
                }
            }
        }
        self.spans
            .set(format!("relation:{}", self.model.dpa.relations.len()), span);
        self.model.dpa.relations.push(Relation {
            kind,
            from: BlockId::new(from),
            to: BlockId::new(to),
            product,
            info_type,
            key,
        });
        self.end_of_stmt();
    }

    fn parse_inventory(&mut self, span: Span) {
        let Some((block, _)) = self.take_ident("block id") else { return };
        if !self.open_body(&format!("`inventory {block}`")) {
            return;
        }
        let mut stock_kind: Option<StockKind> = None;
        let mut initial_qty: Option<Qty> = None;
        let mut reorder_point: Option<Qty> = None;
        let mut reorder_qty: Option<Qty> = None;
        loop {
            self.skip_eols();
            match self.peek() {
                None => {
                    let here = self.here();
                    self.syntax(here, "", format!("unexpected end of file inside `inventory {block}`"));
                    return;
                }
                Some(Token { kind: TokenKind::RBrace, .. }) => {
                    self.pos += 1;
                    self.end_of_stmt();
                    break;
                }
                _ => {}
            }
            let Some((attr, aspan)) = self.take_ident("inventory attribute") else { continue };
            match attr.as_str() {
                "kind" => {
                    let Some((k_kw, kspan)) = self.take_ident("stock kind") else { continue };
                    match StockKind::parse(&k_kw) {
                        Some(k) => {
                            stock_kind = Some(k);
                            self.end_of_clause();
                        }
                        None => {
                            self.error(
                                ParseErrorKind::UnknownKeyword,
                                kspan,
                                &k_kw,
                                format!("unknown stock kind `{k_kw}`; expected raw_material, wip, or final_product"),
                            );
                            self.skip_statement();
                        }
                    }
                }
                "initial" => {
                    if let Some((n, _)) = self.take_qty("initial quantity") {
                        initial_qty = Some(n);
                        self.end_of_clause();
                    }
                }
                "reorder_point" => {
                    if let Some((n, _)) = self.take_qty("reorder point") {
                        reorder_point = Some(n);
                        self.end_of_clause();
                    }
                }
                "reorder_qty" => {
                    if let Some((n, _)) = self.take_qty("reorder quantity") {
                        reorder_qty = Some(n);
                        self.end_of_clause();
                    }
                }
                other => {
                    self.error(
                        ParseErrorKind::UnknownKeyword,
                        aspan,
                        other,
                        format!("unknown `inventory` attribute `{other}`"),
                    );
                    self.skip_statement();
                }
            }
        }
        let Some(stock_kind) = stock_kind else {
            self.syntax(span, &block, format!("inventory for `{block}` is missing `kind`"));
            return;
        };
        let Some(initial_qty) = initial_qty else {
            self.syntax(span, &block, format!("inventory for `{block}` is missing `initial`"));
            return;
        };
        if self
            .model
            .dpa
            .inventories
            .iter()
            .any(|i| i.block.as_str() == block && i.stock_kind == stock_kind)
        {
            self.error(
                ParseErrorKind::DuplicateId,
                span,
                &block,
                format!("inventory for `{block}` kind {stock_kind} declared more than once"),
            );
            return;
        }
        self.spans
            .set(format!("inventory:{block}:{stock_kind}"), span);
        self.model.dpa.inventories.push(InventoryDecl {
            block: BlockId::new(block),
            stock_kind,
            initial_qty,
            reorder_point,
            reorder_qty,
        });
    }

    // -- saoa --------------------------------------------------------------

    fn parse_saoa_stmt(&mut self, kw: &str, span: Span) {
        match kw {
            "structure" => {
                let Some((s_kw, sspan)) = self.take_ident("social structure") else { return };
                let Some(structure) = SocialStructure::parse(&s_kw) else {
                    self.error(
                        ParseErrorKind::UnknownKeyword,
                        sspan,
                        &s_kw,
                        format!("unknown social structure `{s_kw}`; expected hierarchical, federated, or autonomous"),
                    );
                    self.skip_statement();
                    return;
                };
                if self.seen_structure {
                    self.syntax(span, "structure", "social structure declared twice");
                } else {
                    self.seen_structure = true;
                    self.spans.set("structure", span);
                    self.model.saoa.social_structure = structure;
                }
                self.end_of_stmt();
            }
            "merge" => {
                let Some((agent, _)) = self.take_ident("agent name") else { return };
                if !self.take_keyword("blocks") {
                    return;
                }
                let mut blocks = Vec::new();
                while !self.at_stmt_end() {
                    let Some((b, _)) = self.take_ident("block id") else { return };
                    blocks.push(BlockId::new(b));
                }
                if blocks.is_empty() {
                    self.syntax(span, &agent, format!("merge `{agent}` lists no blocks"));
                    return;
                }
                self.spans.set(format!("merge:{agent}"), span);
                self.model.saoa.directives.push(Directive::Merge {
                    agent: AgentName::new(agent),
                    blocks,
                });
                self.end_of_stmt();
            }
            "split" => self.parse_split(span),
            "mediator" => {
                let Some((agent, _)) = self.take_ident("agent name") else { return };
                if !self.take_keyword("scope") {
                    return;
                }
                let mut scope = Vec::new();
                while !self.at_stmt_end() {
                    let Some((a, _)) = self.take_ident("agent name") else { return };
                    scope.push(AgentName::new(a));
                }
                if scope.is_empty() {
                    self.syntax(span, &agent, format!("mediator `{agent}` has an empty scope"));
                    return;
                }
                self.spans.set(format!("mediator:{agent}"), span);
                self.model.saoa.directives.push(Directive::Mediator {
                    agent: AgentName::new(agent),
                    scope,
                });
                self.end_of_stmt();
            }
            "protocol" => self.parse_protocol(span),
            other => {
                self.error(
                    ParseErrorKind::UnknownKeyword,
                    span,
                    other,
                    format!("unknown `saoa` keyword `{other}`"),
                );
                self.skip_statement();
            }
        }
    }

    fn parse_split(&mut self, span: Span) {
        let Some((block, _)) = self.take_ident("block id") else { return };
        if !self.open_body(&format!("`split {block}`")) {
            return;
        }
        let mut parts = Vec::new();
        loop {
            self.skip_eols();
            match self.peek() {
                None => {
                    let here = self.here();
                    self.syntax(here, "", format!("unexpected end of file inside `split {block}`"));
                    return;
                }
                Some(Token { kind: TokenKind::RBrace, .. }) => {
                    self.pos += 1;
                    self.end_of_stmt();
                    break;
                }
                _ => {}
            }
            let Some((attr, aspan)) = self.take_ident("split entry") else { continue };
            if attr != "part" {
                self.error(
                    ParseErrorKind::UnknownKeyword,
                    aspan,
                    &attr,
                    format!("unknown `split` entry `{attr}`; expected part"),
                );
                self.skip_statement();
                continue;
            }
            let Some((agent, _)) = self.take_ident("part agent name") else { continue };
            let Some((spec_kw, sspan)) = self.take_ident("specialization") else { continue };
            let Some(specialization) = Specialization::parse(&spec_kw) else {
                self.error(
                    ParseErrorKind::UnknownKeyword,
                    sspan,
                    &spec_kw,
                    format!("unknown specialization `{spec_kw}`; expected product, processor, process, or project"),
                );
                self.skip_statement();
                continue;
            };
            let Some((key, kspan)) = self.take_key_word("specialization key") else { continue };
            if parts
                .iter()
                .any(|p: &SplitPart| p.specialization == specialization && p.key == key)
            {
                self.error(
                    ParseErrorKind::DuplicateId,
                    kspan,
                    &key,
                    format!("split `{block}` declares two parts for {specialization} `{key}`"),
                );
                self.skip_statement();
                continue;
            }
            parts.push(SplitPart {
                agent: AgentName::new(agent),
                specialization,
                key,
            });
            self.end_of_clause();
        }
        if parts.is_empty() {
            self.syntax(span, &block, format!("split `{block}` declares no parts"));
            return;
        }
        self.spans.set(format!("split:{block}"), span);
        self.model.saoa.directives.push(Directive::Split {
            block: BlockId::new(block),
            parts,
        });
    }

    fn parse_protocol(&mut self, span: Span) {
        let Some((name, _)) = self.take_ident("protocol name") else { return };
        if !self.open_body(&format!("`protocol {name}`")) {
            return;
        }
        let mut protocol_type: Option<ProtocolType> = None;
        let mut bindings = Vec::new();
        loop {
            self.skip_eols();
            match self.peek() {
                None => {
                    let here = self.here();
                    self.syntax(here, "", format!("unexpected end of file inside `protocol {name}`"));
                    return;
                }
                Some(Token { kind: TokenKind::RBrace, .. }) => {
                    self.pos += 1;
                    self.end_of_stmt();
                    break;
                }
                _ => {}
            }
            let Some((attr, aspan)) = self.take_ident("protocol attribute") else { continue };
            match attr.as_str() {
                "type" => {
                    let Some((t_kw, tspan)) = self.take_ident("protocol type") else { continue };
                    match ProtocolType::parse(&t_kw) {
                        Some(t) => {
                            protocol_type = Some(t);
                            self.end_of_clause();
                        }
                        None => {
                            self.error(
                                ParseErrorKind::UnknownKeyword,
                                tspan,
                                &t_kw,
                                format!("unknown protocol type `{t_kw}`; expected communication, coordination, task_sharing, negotiation, or arbitration"),
                            );
                            self.skip_statement();
                        }
                    }
                }
                "bind" => {
                    let Some((from, _)) = self.take_ident("source block id") else { continue };
                    if !self.take_arrow() {
                        continue;
                    }
                    let Some((to, _)) = self.take_ident("target block id") else { continue };
                    bindings.push(RelationSelector {
                        from: BlockId::new(from),
                        to: BlockId::new(to),
                    });
                    self.end_of_clause();
                }
                other => {
                    self.error(
                        ParseErrorKind::UnknownKeyword,
                        aspan,
                        other,
                        format!("unknown `protocol` attribute `{other}`; expected type or bind"),
                    );
                    self.skip_statement();
                }
            }
        }
        let Some(protocol_type) = protocol_type else {
            self.syntax(span, &name, format!("protocol `{name}` is missing `type`"));
            return;
        };
        if self.model.saoa.protocols.iter().any(|p| p.name == name) {
            self.error(
                ParseErrorKind::DuplicateId,
                span,
                &name,
                format!("protocol `{name}` declared more than once"),
            );
            return;
        }
        self.spans.set(format!("protocol:{name}"), span);
        self.model.saoa.protocols.push(ProtocolDecl {
            name,
            protocol_type,
            bindings,
        });
    }

    // -- iaoa --------------------------------------------------------------

    fn parse_iaoa_stmt(&mut self, kw: &str, span: Span) {
        match kw {
            "ability" => self.parse_ability(span),
            "quote" => {
                let Some((selector, _)) = self.take_selector("agent selector") else { return };
                if !self.take_keyword("price") {
                    return;
                }
                let Some((price, _)) = self.take_f64("price") else { return };
                self.spans
                    .set(format!("quote:{}", self.model.iaoa.quotes.len()), span);
                self.model.iaoa.quotes.push(QuoteDecl {
                    selector: AgentSelector::new(selector),
                    price,
                });
                self.end_of_stmt();
            }
            "response" => self.parse_response(span),
            other => {
                self.error(
                    ParseErrorKind::UnknownKeyword,
                    span,
                    other,
                    format!("unknown `iaoa` keyword `{other}`"),
                );
                self.skip_statement();
            }
        }
    }

    fn parse_ability(&mut self, span: Span) {
        let Some((selector, _)) = self.take_selector("agent selector") else { return };
        let Some((ability_kw, aspan)) = self.take_ident("ability") else { return };
        let ability = match ability_kw.as_str() {
            "monitor_inventory" => Ability::MonitorInventory,
            "procure" => {
                let mut reorder_point = None;
                let mut reorder_qty = None;
                while !self.at_stmt_end() {
                    let Some((clause, cspan)) = self.take_ident("procure parameter") else { return };
                    match clause.as_str() {
                        "reorder_point" => {
                            let Some((n, _)) = self.take_qty("reorder point") else { return };
                            reorder_point = Some(n);
                        }
                        "reorder_qty" => {
                            let Some((n, _)) = self.take_qty("reorder quantity") else { return };
                            reorder_qty = Some(n);
                        }
                        other => {
                            self.error(
                                ParseErrorKind::UnknownKeyword,
                                cspan,
                                other,
                                format!("unknown `procure` parameter `{other}`; expected reorder_point or reorder_qty"),
                            );
                            self.skip_statement();
                            return;
                        }
                    }
                }
                Ability::Procure { reorder_point, reorder_qty }
            }
            "plan_production" => {
                if !self.take_keyword("policy") {
                    return;
                }
                let Some((p_kw, pspan)) = self.take_ident("policy") else { return };
                let Some(policy) = PlanPolicy::parse(&p_kw) else {
                    self.error(
                        ParseErrorKind::UnknownKeyword,
                        pspan,
                        &p_kw,
                        format!("unknown planning policy `{p_kw}`; expected lot_for_lot"),
                    );
                    self.skip_statement();
                    return;
                };
                Ability::PlanProduction { policy }
            }
            "dispatch" => {
                if !self.take_keyword("rule") {
                    return;
                }
                let Some((r_kw, rspan)) = self.take_ident("dispatch rule") else { return };
                let Some(rule) = DispatchRule::parse(&r_kw) else {
                    self.error(
                        ParseErrorKind::UnknownKeyword,
                        rspan,
                        &r_kw,
                        format!("unknown dispatch rule `{r_kw}`; expected fifo"),
                    );
                    self.skip_statement();
                    return;
                };
                let capacity = if !self.at_stmt_end() {
                    if !self.take_keyword("capacity") {
                        return;
                    }
                    match self.take_qty("capacity") {
                        Some((n, _)) => Some(n),
                        None => return,
                    }
                } else {
                    None
                };
                Ability::Dispatch { rule, capacity }
            }
            "ship" => {
                if !self.take_keyword("lead_time") {
                    return;
                }
                let Some((n, nspan)) = self.take_qty("lead time") else { return };
                if n < 0 {
                    self.syntax(nspan, "", format!("lead time must be non-negative, got {n}"));
                    self.skip_statement();
                    return;
                }
                Ability::Ship { lead_time: n as u64 }
            }
            "sell" => {
                if !self.take_keyword("demand") {
                    return;
                }
                let Some((d_kw, dspan)) = self.take_ident("demand spec") else { return };
                let demand = match d_kw.as_str() {
                    "constant" => {
                        let Some((rate, _)) = self.take_qty("demand rate") else { return };
                        DemandSpec::Constant { rate }
                    }
                    "uniform" => {
                        let Some((lo, _)) = self.take_qty("lower bound") else { return };
                        let Some((hi, _)) = self.take_qty("upper bound") else { return };
                        DemandSpec::Uniform { lo, hi }
                    }
                    "normal" => {
                        let Some((mean, _)) = self.take_f64("mean") else { return };
                        let Some((sd, _)) = self.take_f64("standard deviation") else { return };
                        DemandSpec::Normal { mean, sd }
                    }
                    other => {
                        self.error(
                            ParseErrorKind::UnknownKeyword,
                            dspan,
                            other,
                            format!("unknown demand spec `{other}`; expected constant, uniform, or normal"),
                        );
                        self.skip_statement();
                        return;
                    }
                };
                Ability::Sell { demand }
            }
            other => {
                self.error(
                    ParseErrorKind::UnknownKeyword,
                    aspan,
                    other,
                    format!("unknown ability `{other}`"),
                );
                self.skip_statement();
                return;
            }
        };
        self.spans
            .set(format!("ability:{}", self.model.iaoa.abilities.len()), span);
        self.model.iaoa.abilities.push(AbilityDecl {
            selector: AgentSelector::new(selector),
            ability,
        });
        self.end_of_stmt();
    }

    fn parse_response(&mut self, span: Span) {
        let Some((selector, _)) = self.take_selector("agent selector") else { return };
        if !self.take_keyword("when") {
            return;
        }
        let Some((q_kw, qspan)) = self.take_ident("monitored quantity") else { return };
        let takes_kind = matches!(q_kw.as_str(), "on_hand" | "inventory_position");
        let kind = if takes_kind {
            match self.peek() {
                Some(Token { kind: TokenKind::Ident(s), span: kspan }) => {
                    let Some(k) = StockKind::parse(s) else {
                        let s = s.clone();
                        let kspan = *kspan;
                        self.error(
                            ParseErrorKind::UnknownKeyword,
                            kspan,
                            &s,
                            format!("unknown stock kind `{s}`; expected raw_material, wip, or final_product"),
                        );
                        self.skip_statement();
                        return;
                    };
                    self.pos += 1;
                    k
                }
                _ => StockKind::FinalProduct,
            }
        } else {
            StockKind::FinalProduct
        };
        let quantity = match q_kw.as_str() {
            "on_hand" => MonitoredQuantity::OnHand(kind),
            "inventory_position" => MonitoredQuantity::InventoryPosition(kind),
            "on_order" => MonitoredQuantity::OnOrder,
            "backorders" => MonitoredQuantity::Backorders,
            other => {
                self.error(
                    ParseErrorKind::UnknownKeyword,
                    qspan,
                    other,
                    format!("unknown monitored quantity `{other}`; expected on_hand, on_order, backorders, or inventory_position"),
                );
                self.skip_statement();
                return;
            }
        };
        let comparator = match self.peek() {
            Some(Token { kind: TokenKind::Op(op), .. }) => {
                let c = Comparator::parse(op).expect("tokenizer emits only comparison ops");
                self.pos += 1;
                c
            }
            other => {
                let span = self.here();
                let found = other.map(|t| t.kind.describe()).unwrap_or_else(|| "end of file".into());
                self.syntax(span, "", format!("expected a comparison operator, found {found}"));
                self.skip_statement();
                return;
            }
        };
        let Some((threshold, _)) = self.take_qty("threshold") else { return };
        if !self.take_keyword("do") {
            return;
        }
        let Some((action_kw, act_span)) = self.take_ident("action") else { return };
        let Some(action) = AbilityKind::parse(&action_kw) else {
            self.error(
                ParseErrorKind::UnknownKeyword,
                act_span,
                &action_kw,
                format!("unknown action `{action_kw}`; expected an ability name"),
            );
            self.skip_statement();
            return;
        };
        self.spans
            .set(format!("response:{}", self.model.iaoa.responses.len()), span);
        self.model.iaoa.responses.push(ResponseRule {
            selector: AgentSelector::new(selector),
            quantity,
            comparator,
            threshold,
            action,
        });
        self.end_of_stmt();
    }
}

// ---------------------------------------------------------------------------
// Post-parse reference checks
// ---------------------------------------------------------------------------

fn dangling(span: Option<Span>, symbol: &str, message: String) -> ParseError {
    ParseError::new(
        ParseErrorKind::DanglingReference,
        span.unwrap_or(Span::UNKNOWN),
        symbol,
        message,
    )
}

/// Every id referenced inside the document must be declared in it.
fn check_references(model: &AnalysisModel, spans: &SourceMap) -> Vec<ParseError> {
    let mut errors = Vec::new();
    let units: BTreeSet<&str> = model.dpa.units.iter().map(|u| u.id.as_str()).collect();
    let blocks: BTreeSet<&str> = model.dpa.blocks.iter().map(|b| b.id.as_str()).collect();
    let products: BTreeSet<&str> = model.dpa.products.iter().map(|p| p.id.as_str()).collect();

    for block in &model.dpa.blocks {
        if !units.contains(block.unit.as_str()) {
            errors.push(dangling(
                spans.get(&format!("block:{}", block.id)),
                block.unit.as_str(),
                format!("block `{}` references unknown unit `{}`", block.id, block.unit),
            ));
        }
    }
    for (idx, relation) in model.dpa.relations.iter().enumerate() {
        let span = spans.get(&format!("relation:{idx}"));
        for end in [&relation.from, &relation.to] {
            if !blocks.contains(end.as_str()) {
                errors.push(dangling(span, end.as_str(), format!("relation references unknown block `{end}`")));
            }
        }
        if let Some(product) = &relation.product {
            if !products.contains(product.as_str()) {
                errors.push(dangling(
                    span,
                    product.as_str(),
                    format!("relation references unknown product `{product}`"),
                ));
            }
        }
    }
    for inv in &model.dpa.inventories {
        if !blocks.contains(inv.block.as_str()) {
            errors.push(dangling(
                spans.get(&format!("inventory:{}:{}", inv.block, inv.stock_kind)),
                inv.block.as_str(),
                format!("inventory references unknown block `{}`", inv.block),
            ));
        }
    }
    if let Some(dp) = &model.dpa.decoupling_point {
        if !blocks.contains(dp.as_str()) {
            errors.push(dangling(
                spans.get("decoupling_point"),
                dp.as_str(),
                format!("decoupling point references unknown block `{dp}`"),
            ));
        }
    }
    for directive in &model.saoa.directives {
        match directive {
            Directive::Merge { agent, blocks: members } => {
                for b in members {
                    if !blocks.contains(b.as_str()) {
                        errors.push(dangling(
                            spans.get(&format!("merge:{agent}")),
                            b.as_str(),
                            format!("merge `{agent}` references unknown block `{b}`"),
                        ));
                    }
                }
            }
            Directive::Split { block, parts } => {
                let span = spans.get(&format!("split:{block}"));
                if !blocks.contains(block.as_str()) {
                    errors.push(dangling(
                        span,
                        block.as_str(),
                        format!("split references unknown block `{block}`"),
                    ));
                }
                for part in parts {
                    if part.specialization == Specialization::Product && !products.contains(part.key.as_str()) {
                        errors.push(dangling(
                            span,
                            part.key.as_str(),
                            format!("split part `{}` references unknown product `{}`", part.agent, part.key),
                        ));
                    }
                }
            }
            // Mediator scopes name agents, which exist only after
            // agentification; they are checked by resolve().
            Directive::Mediator { .. } => {}
        }
    }
    for protocol in &model.saoa.protocols {
        let span = spans.get(&format!("protocol:{}", protocol.name));
        for binding in &protocol.bindings {
            for end in [&binding.from, &binding.to] {
                if !blocks.contains(end.as_str()) {
                    errors.push(dangling(
                        span,
                        end.as_str(),
                        format!("protocol `{}` binds unknown block `{end}`", protocol.name),
                    ));
                }
            }
        }
    }
    errors
}

/// Agent names introduced by directives must not collide with each other or
/// with the ids of blocks that survive agentification unchanged.
fn check_agent_names(model: &AnalysisModel, spans: &SourceMap) -> Vec<ParseError> {
    let mut errors = Vec::new();
    let mut consumed: BTreeSet<&str> = BTreeSet::new();
    for directive in &model.saoa.directives {
        match directive {
            Directive::Merge { blocks, .. } => consumed.extend(blocks.iter().map(|b| b.as_str())),
            Directive::Split { block, .. } => {
                consumed.insert(block.as_str());
            }
            Directive::Mediator { .. } => {}
        }
    }
    let mut taken: BTreeSet<String> = model
        .dpa
        .blocks
        .iter()
        .map(|b| b.id.as_str())
        .filter(|id| !consumed.contains(id))
        .map(str::to_owned)
        .collect();
    let mut claim = |name: &str, span_key: String, errors: &mut Vec<ParseError>| {
        if !taken.insert(name.to_owned()) {
            errors.push(ParseError::new(
                ParseErrorKind::DuplicateId,
                spans.get(&span_key).unwrap_or(Span::UNKNOWN),
                name,
                format!("agent name `{name}` collides with an existing agent"),
            ));
        }
    };
    for directive in &model.saoa.directives {
        match directive {
            Directive::Merge { agent, .. } => {
                claim(agent.as_str(), format!("merge:{agent}"), &mut errors)
            }
            Directive::Split { block, parts } => {
                for part in parts {
                    claim(part.agent.as_str(), format!("split:{block}"), &mut errors);
                }
            }
            Directive::Mediator { agent, .. } => {
                claim(agent.as_str(), format!("mediator:{agent}"), &mut errors)
            }
        }
    }
    errors
}
