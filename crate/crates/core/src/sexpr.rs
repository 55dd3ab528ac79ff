//! SMT-LIB style s-expressions.
//!
//! The reader follows SMT-LIB 2.6 lexical conventions: `;` comments, decimal
//! numerals, `#x`/`#b` bitvector literals, double-quoted strings with `""`
//! as the quote escape, `:keyword` atoms and `|quoted symbols|`. Indexed
//! identifiers such as `(_ BitVec 8)` are plain lists at this level.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Num;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SExpr {
    Symbol(String),
    Numeral(BigUint),
    StringLit(String),
    BitVecLit { width: u32, value: BigUint },
    BoolLit(bool),
    Keyword(String),
    List(Vec<SExpr>),
}

/// A position in the source text. Lines and columns are 1-based, columns
/// count characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Position {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub start: Position,
    pub end: Position,
}

/// Source spans of an expression, mirroring its list structure.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpanTree {
    pub span: Span,
    pub children: Vec<SpanTree>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReadError {
    #[error("{0}: unbalanced parentheses")]
    UnbalancedParens(Position),
    #[error("{0}: bad token `{1}`")]
    BadToken(Position, String),
    #[error("{0}: unterminated string or quoted symbol")]
    UnterminatedString(Position),
}

impl ReadError {
    pub fn position(&self) -> Position {
        match self {
            ReadError::UnbalancedParens(p)
            | ReadError::BadToken(p, _)
            | ReadError::UnterminatedString(p) => *p,
        }
    }
}

impl SExpr {
    pub fn symbol(name: impl Into<String>) -> Self {
        SExpr::Symbol(name.into())
    }

    pub fn list(items: impl IntoIterator<Item = SExpr>) -> Self {
        SExpr::List(items.into_iter().collect())
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items) => Some(items),
            _ => None,
        }
    }

    /// The head symbol of a non-empty list whose first item is a symbol.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_symbol()
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Symbol(s) => {
                if is_simple_symbol(s) {
                    f.write_str(s)
                } else {
                    write!(f, "|{s}|")
                }
            }
            SExpr::Numeral(n) => write!(f, "{n}"),
            SExpr::StringLit(s) => {
                f.write_str("\"")?;
                f.write_str(&s.replace('"', "\"\""))?;
                f.write_str("\"")
            }
            SExpr::BitVecLit { width, value } => {
                if width % 4 == 0 {
                    write!(f, "#x{:0>w$}", value.to_str_radix(16), w = (*width / 4) as usize)
                } else {
                    write!(f, "#b{:0>w$}", value.to_str_radix(2), w = *width as usize)
                }
            }
            SExpr::BoolLit(b) => write!(f, "{b}"),
            SExpr::Keyword(k) => write!(f, ":{k}"),
            SExpr::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Canonical single-space rendering.
pub fn print_sexpr(expr: &SExpr) -> String {
    expr.to_string()
}

/// Reads every top-level expression in `text`.
pub fn read_sexprs(text: &str) -> Result<Vec<SExpr>, ReadError> {
    Ok(read_with_spans(text)?.into_iter().map(|(e, _)| e).collect())
}

/// Like [`read_sexprs`], also returning source spans for each expression.
pub fn read_with_spans(text: &str) -> Result<Vec<(SExpr, SpanTree)>, ReadError> {
    let mut lexer = Lexer::new(text);
    let mut out = Vec::new();
    // (open position, items, spans)
    let mut stack: Vec<(Position, Vec<SExpr>, Vec<SpanTree>)> = Vec::new();
    while let Some((start, tok)) = lexer.next_token()? {
        let end = lexer.pos();
        let done = match tok {
            Token::Open => {
                stack.push((start, Vec::new(), Vec::new()));
                None
            }
            Token::Close => {
                let (open, items, spans) =
                    stack.pop().ok_or(ReadError::UnbalancedParens(start))?;
                Some((
                    SExpr::List(items),
                    SpanTree { span: Span { start: open, end }, children: spans },
                ))
            }
            Token::Atom(atom) => Some((
                atom,
                SpanTree { span: Span { start, end }, children: Vec::new() },
            )),
        };
        if let Some((expr, span)) = done {
            match stack.last_mut() {
                Some((_, items, spans)) => {
                    items.push(expr);
                    spans.push(span);
                }
                None => out.push((expr, span)),
            }
        }
    }
    // point at the outermost paren that never closes
    if let Some((open, _, _)) = stack.first() {
        return Err(ReadError::UnbalancedParens(*open));
    }
    Ok(out)
}

enum Token {
    Open,
    Close,
    Atom(SExpr),
}

struct Lexer<'a> {
    text: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

fn is_symbol_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';' | '|'))
}

/// True when `s` reads back as the same bare symbol.
fn is_simple_symbol(s: &str) -> bool {
    let Some(first) = s.chars().next() else {
        return false;
    };
    !first.is_ascii_digit()
        && !matches!(first, ':' | '#' | '\'')
        && s != "true"
        && s != "false"
        && s.chars().all(|c| is_symbol_char(c) && c != '\\')
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { text, offset: 0, line: 1, column: 1 }
    }

    fn pos(&self) -> Position {
        Position { offset: self.offset, line: self.line, column: self.column }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.offset..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.offset;
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.bump();
        }
        &self.text[start..self.offset]
    }

    fn next_token(&mut self) -> Result<Option<(Position, Token)>, ReadError> {
        self.skip_trivia();
        let start = self.pos();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let tok = match c {
            '(' => {
                self.bump();
                Token::Open
            }
            ')' => {
                self.bump();
                Token::Close
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(ReadError::UnterminatedString(start)),
                        Some('"') => {
                            if self.peek() == Some('"') {
                                self.bump();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
                Token::Atom(SExpr::StringLit(s))
            }
            '|' => {
                self.bump();
                let body = self.take_while(|c| c != '|' && c != '\\');
                match self.bump() {
                    Some('|') => {}
                    Some(_) => return Err(ReadError::BadToken(start, format!("|{body}\\"))),
                    None => return Err(ReadError::UnterminatedString(start)),
                }
                if body.is_empty() {
                    return Err(ReadError::BadToken(start, "||".into()));
                }
                Token::Atom(SExpr::Symbol(body.to_string()))
            }
            _ => {
                let word = self.take_while(is_symbol_char);
                if word.is_empty() {
                    // a lone `|` is handled above; anything else is unreachable
                    let c = self.bump().unwrap_or_default();
                    return Err(ReadError::BadToken(start, c.to_string()));
                }
                Token::Atom(classify_atom(word).ok_or_else(|| {
                    ReadError::BadToken(start, word.to_string())
                })?)
            }
        };
        Ok(Some((start, tok)))
    }
}

fn classify_atom(word: &str) -> Option<SExpr> {
    let first = word.chars().next()?;
    if first.is_ascii_digit() {
        if word.len() > 1 && first == '0' {
            return None;
        }
        if !word.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        return BigUint::from_str_radix(word, 10).ok().map(SExpr::Numeral);
    }
    if let Some(rest) = word.strip_prefix(':') {
        if rest.is_empty() {
            return None;
        }
        return Some(SExpr::Keyword(rest.to_string()));
    }
    if let Some(rest) = word.strip_prefix("#x") {
        if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_hexdigit()) {
            return None;
        }
        let value = BigUint::from_str_radix(rest, 16).ok()?;
        return Some(SExpr::BitVecLit { width: 4 * rest.len() as u32, value });
    }
    if let Some(rest) = word.strip_prefix("#b") {
        if rest.is_empty() || !rest.chars().all(|c| c == '0' || c == '1') {
            return None;
        }
        let value = BigUint::from_str_radix(rest, 2).ok()?;
        return Some(SExpr::BitVecLit { width: rest.len() as u32, value });
    }
    if first == '#' || first == '\'' || word.contains('\\') {
        return None;
    }
    Some(match word {
        "true" => SExpr::BoolLit(true),
        "false" => SExpr::BoolLit(false),
        _ => SExpr::Symbol(word.to_string()),
    })
}

/// Builds a bitvector literal, checking that `value` fits in `width` bits.
pub fn bitvec_lit(width: u32, value: BigUint) -> Option<SExpr> {
    if width == 0 || value.bits() > u64::from(width) {
        return None;
    }
    Some(SExpr::BitVecLit { width, value })
}

impl SExpr {
    pub fn num(n: u64) -> Self {
        SExpr::Numeral(BigUint::from(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(s: &str) -> SExpr {
        SExpr::symbol(s)
    }

    #[test]
    fn reads_synth_fun() {
        let got = read_sexprs("(synth-fun mul () F)").unwrap();
        assert_eq!(
            got,
            vec![SExpr::list([sym("synth-fun"), sym("mul"), SExpr::List(vec![]), sym("F")])]
        );
    }

    #[test]
    fn reads_empty_list() {
        assert_eq!(read_sexprs("()").unwrap(), vec![SExpr::List(vec![])]);
        assert_eq!(print_sexpr(&SExpr::List(vec![])), "()");
    }

    #[test]
    fn reads_constraint_numerals() {
        let got = read_sexprs("(constraint (F.Sem mul 5 3 15))").unwrap();
        let inner = SExpr::list([sym("F.Sem"), sym("mul"), SExpr::num(5), SExpr::num(3), SExpr::num(15)]);
        assert_eq!(got, vec![SExpr::list([sym("constraint"), inner])]);
    }

    #[test]
    fn prints_dollar_symbols_bare() {
        assert_eq!(print_sexpr(&sym("$while")), "$while");
        assert_eq!(print_sexpr(&sym("$y<-")), "$y<-");
    }

    #[test]
    fn lexical_forms() {
        let got = read_sexprs(
            "; comment\n#xff #b101 \"a\"\"b\" :input |two words| true 0 ; trailing\n",
        )
        .unwrap();
        assert_eq!(
            got,
            vec![
                SExpr::BitVecLit { width: 8, value: BigUint::from(255u32) },
                SExpr::BitVecLit { width: 3, value: BigUint::from(5u32) },
                SExpr::StringLit("a\"b".into()),
                SExpr::Keyword("input".into()),
                sym("two words"),
                SExpr::BoolLit(true),
                SExpr::num(0),
            ]
        );
        assert_eq!(print_sexpr(&got[2]), "\"a\"\"b\"");
        assert_eq!(print_sexpr(&got[4]), "|two words|");
        assert_eq!(print_sexpr(&sym("true")), "|true|");
        assert_eq!(read_sexprs("|true|").unwrap(), vec![sym("true")]);
    }

    #[test]
    fn numerals_are_arbitrary_precision() {
        let big = "123456789012345678901234567890";
        assert_eq!(print_sexpr(&read_sexprs(big).unwrap()[0]), big);
    }

    #[test]
    fn error_positions() {
        assert_eq!(
            read_sexprs("(a\n b))").unwrap_err(),
            ReadError::UnbalancedParens(Position { offset: 6, line: 2, column: 4 })
        );
        let e = read_sexprs("(a (b c)").unwrap_err();
        assert_eq!(e, ReadError::UnbalancedParens(Position { offset: 0, line: 1, column: 1 }));
        let e = read_sexprs("(x \"abc").unwrap_err();
        assert_eq!(e, ReadError::UnterminatedString(Position { offset: 3, line: 1, column: 4 }));
        assert!(matches!(read_sexprs("(x #xZZ)"), Err(ReadError::BadToken(p, _)) if p.column == 4));
        assert!(matches!(read_sexprs("12abc"), Err(ReadError::BadToken(..))));
        assert!(matches!(read_sexprs("007"), Err(ReadError::BadToken(..))));
        assert!(matches!(read_sexprs("||"), Err(ReadError::BadToken(..))));
    }

    #[test]
    fn spans_track_nesting() {
        let got = read_with_spans("(a\n  (b c))").unwrap();
        let tree = &got[0].1;
        assert_eq!(tree.span.start.line, 1);
        assert_eq!(tree.children[1].span.start, Position { offset: 5, line: 2, column: 3 });
        assert_eq!(tree.children[1].children[1].span.start.column, 6);
    }

    fn arb_sexpr() -> impl Strategy<Value = SExpr> {
        let leaf = prop_oneof![
            "[a-zA-Z$_.<>=+*-][a-zA-Z0-9$_.<>=+*-]{0,6}".prop_map(SExpr::Symbol),
            "[a-z ()0-9]{1,5}".prop_map(SExpr::Symbol),
            any::<u64>().prop_map(SExpr::num),
            "[a-z\" ;()]{0,6}".prop_map(SExpr::StringLit),
            (1u32..70, any::<u64>()).prop_map(|(w, v)| {
                let v = if w >= 64 { v } else { v & ((1u64 << w) - 1) };
                SExpr::BitVecLit { width: w, value: BigUint::from(v) }
            }),
            any::<bool>().prop_map(SExpr::BoolLit),
            "[a-z][a-z-]{0,5}".prop_map(SExpr::Keyword),
        ];
        leaf.prop_recursive(4, 32, 5, |inner| {
            prop::collection::vec(inner, 0..5).prop_map(SExpr::List)
        })
    }

    proptest! {
        #[test]
        fn print_then_read_is_identity(e in arb_sexpr()) {
            let text = print_sexpr(&e);
            prop_assert_eq!(read_sexprs(&text).unwrap(), vec![e]);
        }

        #[test]
        fn reprinting_is_idempotent(e in arb_sexpr()) {
            let once = print_sexpr(&e);
            let twice = print_sexpr(&read_sexprs(&once).unwrap()[0]);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn error_position_within_input(s in "[()a-z #\"|;0-9]{0,20}") {
            if let Err(e) = read_sexprs(&s) {
                prop_assert!(e.position().offset <= s.len());
            }
        }
    }
}
