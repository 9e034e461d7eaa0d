//! Tokenizer for `.fml` documents and the parse-error type shared by the
//! whole front end.
//!
//! The language is line-oriented: a statement ends at the newline, `{`/`}`
//! nest declaration bodies, `#` starts a comment, and identifiers draw from
//! `[A-Za-z0-9_.]`. Because identifiers may start with a digit, a word is
//! first scanned as a maximal run of identifier characters and then
//! classified: it is a number only if it has the exact shape of an integer
//! or decimal literal.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::report::Span;

/// Error raised while reading an `.fml` document. Rendered as
/// `line:col: code: message`; the caller prepends the file name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
    /// The offending symbol, when there is one.
    pub symbol: String,
    pub message: String,
}

impl ParseError {
    pub fn new(
        kind: ParseErrorKind,
        span: Span,
        symbol: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        ParseError {
            kind,
            span,
            symbol: symbol.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.kind, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    SyntaxError,
    UnknownKeyword,
    DuplicateId,
    DanglingReference,
}

impl ParseErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorKind::SyntaxError => "syntax-error",
            ParseErrorKind::UnknownKeyword => "unknown-keyword",
            ParseErrorKind::DuplicateId => "duplicate-id",
            ParseErrorKind::DanglingReference => "dangling-reference",
        }
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Bare word from the identifier alphabet that is not a number literal.
    Ident(String),
    /// Integer or decimal literal, stored with its source text.
    Number(f64, String),
    /// Double-quoted string with `\"` and `\\` escapes resolved.
    Str(String),
    LBrace,
    RBrace,
    /// `->`
    Arrow,
    /// One of `<`, `<=`, `>`, `>=`, `==`, `!=`.
    Op(&'static str),
    /// End of line; one token per newline, consecutive blanks included.
    Eol,
}

impl TokenKind {
    /// Short description for diagnostics.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Number(_, raw) => format!("number `{raw}`"),
            TokenKind::Str(_) => "string".to_owned(),
            TokenKind::LBrace => "`{`".to_owned(),
            TokenKind::RBrace => "`}`".to_owned(),
            TokenKind::Arrow => "`->`".to_owned(),
            TokenKind::Op(op) => format!("`{op}`"),
            TokenKind::Eol => "end of line".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

fn is_word_char(c: char) -> bool {
    // `*` appears in agent selectors (`F1.*`); the parser rejects it in
    // positions that require a plain identifier.
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '*'
}

/// A word is a number literal when it looks exactly like `-?digits[.digits]`.
fn classify_word(word: &str) -> Option<f64> {
    let body = word.strip_prefix('-').unwrap_or(word);
    if body.is_empty() {
        return None;
    }
    let mut dots = 0usize;
    for c in body.chars() {
        match c {
            '0'..='9' => {}
            '.' => dots += 1,
            _ => return None,
        }
    }
    if dots > 1 || body.starts_with('.') || body.ends_with('.') {
        return None;
    }
    word.parse::<f64>().ok()
}

/// Splits a document into tokens. Always returns the tokens scanned so far;
/// malformed input adds errors and scanning continues at the next character.
pub fn tokenize(text: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! push {
        ($kind:expr, $span: expr) => {
            tokens.push(Token { kind: $kind, span: $span })
        };
    }

    while let Some(c) = chars.next() {
        let span = Span::new(line, col);
        col += 1;
        match c {
            '\n' => {
                push!(TokenKind::Eol, span);
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while let Some(&next) = chars.peek() {
                    if next == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '{' => push!(TokenKind::LBrace, span),
            '}' => push!(TokenKind::RBrace, span),
            '"' => {
                let mut value = String::new();
                // How the string ended: a closing quote, a bare newline, or
                // end of input. The latter two are errors but still yield a
                // token so parsing can continue.
                enum End {
                    Quote,
                    Newline,
                    Eof,
                }
                let mut end = End::Eof;
                while let Some(next) = chars.next() {
                    col += 1;
                    match next {
                        '"' => {
                            end = End::Quote;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some(esc @ ('"' | '\\')) => {
                                col += 1;
                                value.push(esc);
                            }
                            Some(other) => {
                                col += 1;
                                errors.push(ParseError::new(
                                    ParseErrorKind::SyntaxError,
                                    Span::new(line, col.saturating_sub(1)),
                                    format!("\\{other}"),
                                    format!("unknown escape `\\{other}` in string"),
                                ));
                                value.push(other);
                            }
                            None => break,
                        },
                        '\n' => {
                            end = End::Newline;
                            break;
                        }
                        other => value.push(other),
                    }
                }
                if !matches!(end, End::Quote) {
                    errors.push(ParseError::new(
                        ParseErrorKind::SyntaxError,
                        span,
                        "\"",
                        "unterminated string",
                    ));
                }
                push!(TokenKind::Str(value), span);
                if matches!(end, End::Newline) {
                    push!(TokenKind::Eol, Span::new(line, col));
                    line += 1;
                    col = 1;
                }
            }
            '-' => {
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    push!(TokenKind::Arrow, span);
                } else if chars.peek().is_some_and(|n| n.is_ascii_digit()) {
                    let mut word = String::from("-");
                    while let Some(&next) = chars.peek() {
                        if next.is_ascii_digit() || next == '.' {
                            word.push(next);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    match classify_word(&word) {
                        Some(value) => push!(TokenKind::Number(value, word), span),
                        None => errors.push(ParseError::new(
                            ParseErrorKind::SyntaxError,
                            span,
                            word.clone(),
                            format!("malformed number `{word}`"),
                        )),
                    }
                } else {
                    errors.push(ParseError::new(
                        ParseErrorKind::SyntaxError,
                        span,
                        "-",
                        "stray `-`; expected `->` or a negative number",
                    ));
                }
            }
            '<' | '>' | '=' | '!' => {
                let two = chars.peek() == Some(&'=');
                if two {
                    chars.next();
                    col += 1;
                }
                let op = match (c, two) {
                    ('<', false) => Some("<"),
                    ('<', true) => Some("<="),
                    ('>', false) => Some(">"),
                    ('>', true) => Some(">="),
                    ('=', true) => Some("=="),
                    ('!', true) => Some("!="),
                    _ => None,
                };
                match op {
                    Some(op) => push!(TokenKind::Op(op), span),
                    None => errors.push(ParseError::new(
                        ParseErrorKind::SyntaxError,
                        span,
                        c.to_string(),
                        format!("stray `{c}`; expected a comparison operator"),
                    )),
                }
            }
            c if is_word_char(c) => {
                let mut word = String::new();
                word.push(c);
                while let Some(&next) = chars.peek() {
                    if is_word_char(next) {
                        word.push(next);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                match classify_word(&word) {
                    Some(value) => push!(TokenKind::Number(value, word), span),
                    None => push!(TokenKind::Ident(word), span),
                }
            }
            other => errors.push(ParseError::new(
                ParseErrorKind::SyntaxError,
                span,
                other.to_string(),
                format!("unexpected character `{other}`"),
            )),
        }
    }
    // A final line without a trailing newline still ends a statement.
    if !matches!(tokens.last().map(|t| &t.kind), Some(TokenKind::Eol) | None) {
        push!(TokenKind::Eol, Span::new(line, col));
    }
    (tokens, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        let (tokens, errors) = tokenize(text);
        assert!(errors.is_empty(), "unexpected errors: {errors:?}");
        tokens.into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn words_classify_as_idents_or_numbers() {
        let toks = kinds("block F1.exec 42 1.5 3PL 1.5.2 -7");
        assert_eq!(
            toks,
            vec![
                TokenKind::Ident("block".into()),
                TokenKind::Ident("F1.exec".into()),
                TokenKind::Number(42.0, "42".into()),
                TokenKind::Number(1.5, "1.5".into()),
                TokenKind::Ident("3PL".into()),
                TokenKind::Ident("1.5.2".into()),
                TokenKind::Number(-7.0, "-7".into()),
                TokenKind::Eol,
            ]
        );
    }

    #[test]
    fn comments_arrows_braces_and_ops() {
        let toks = kinds("a -> b { } # trailing\nwhen x <= 10\n");
        assert_eq!(
            toks,
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Arrow,
                TokenKind::Ident("b".into()),
                TokenKind::LBrace,
                TokenKind::RBrace,
                TokenKind::Eol,
                TokenKind::Ident("when".into()),
                TokenKind::Ident("x".into()),
                TokenKind::Op("<="),
                TokenKind::Number(10.0, "10".into()),
                TokenKind::Eol,
            ]
        );
    }

    #[test]
    fn strings_support_escapes() {
        let toks = kinds(r#"name "a \"b\" \\ c""#);
        assert_eq!(
            toks,
            vec![
                TokenKind::Ident("name".into()),
                TokenKind::Str(r#"a "b" \ c"#.into()),
                TokenKind::Eol,
            ]
        );
    }

    #[test]
    fn crlf_is_accepted() {
        let toks = kinds("a\r\nb\r\n");
        assert_eq!(
            toks,
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Eol,
                TokenKind::Ident("b".into()),
                TokenKind::Eol,
            ]
        );
    }

    #[test]
    fn spans_are_one_based_line_col() {
        let (tokens, _) = tokenize("ab cd\n  ef");
        assert_eq!(tokens[0].span, Span::new(1, 1));
        assert_eq!(tokens[1].span, Span::new(1, 4));
        assert_eq!(tokens[3].span, Span::new(2, 3));
    }

    #[test]
    fn unterminated_string_is_reported() {
        let (_, errors) = tokenize("name \"oops\n");
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].kind, ParseErrorKind::SyntaxError);
        assert_eq!(errors[0].span, Span::new(1, 6));
    }

    #[test]
    fn stray_characters_are_reported_and_skipped() {
        let (tokens, errors) = tokenize("a ; b\n");
        assert_eq!(errors.len(), 1);
        assert_eq!(tokens.len(), 3); // a, b, eol
    }
}
