//! Lexer and expression grammar shared by formula text and scenario files.

use std::fmt;

use thiserror::Error;

use super::{Formula, FormulaError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError { span, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Prime,
    Dot,
    DotDot,
    Star,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Int(i) => return write!(f, "`{i}`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Arrow => "->",
            Tok::DArrow => "<->",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Prime => "'",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Star => "*",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Tokenizes one line. Columns are 1-based and count characters; a `#`
/// ends the line.
pub(crate) fn lex_line(text: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col: i + 1 };
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let peek = chars.get(i + 1).copied();
        let (tok, width) = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Ident(chars[start..j].iter().collect()), j - start)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let digits: String = chars[i..j].iter().collect();
            let n = digits
                .parse::<i64>()
                .map_err(|_| ParseError::new(span, format!("integer `{digits}` is too large")))?;
            (Tok::Int(n), j - i)
        } else {
            match (c, peek) {
                ('<', Some('-')) if chars.get(i + 2) == Some(&'>') => (Tok::DArrow, 3),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('!', Some('=')) => (Tok::Ne, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('.', Some('.')) => (Tok::DotDot, 2),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                (',', _) => (Tok::Comma, 1),
                (':', _) => (Tok::Colon, 1),
                ('!', _) => (Tok::Bang, 1),
                ('&', _) => (Tok::Amp, 1),
                ('|', _) => (Tok::Pipe, 1),
                ('=', _) => (Tok::Eq, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('\'', _) => (Tok::Prime, 1),
                ('.', _) => (Tok::Dot, 1),
                ('*', _) => (Tok::Star, 1),
                _ => return Err(ParseError::new(span, format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token { tok, span });
        i += width;
    }
    Ok(out)
}

pub(crate) const KEYWORDS: [&str; 9] = ["X", "P", "U", "S", "G", "F", "H", "true", "false"];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Token cursor over a single line.
pub(crate) struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    end: Span,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token], end: Span) -> Self {
        Cursor { toks, pos: 0, end }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek_at(&self, k: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    pub fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.end)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Some(t) => t.to_string(),
            None => "end of line".to_string(),
        };
        ParseError::new(self.span(), format!("expected {wanted}, found {found}"))
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    pub fn int(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat(&Tok::Minus);
        match self.peek() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(if neg { -n } else { *n })
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    pub fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of line"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    fn from_tok(t: &Tok) -> Option<CmpOp> {
        Some(match t {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return None,
        })
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Name(String),
    Int(i64),
}

/// A signed sum of names and integer literals.
#[derive(Clone, Debug)]
pub struct Term {
    pub parts: Vec<(bool, Operand)>,
    pub span: Span,
}

impl Term {
    /// The name when the term is a single unsigned name.
    pub fn as_name(&self) -> Option<&str> {
        match self.parts.as_slice() {
            [(true, Operand::Name(n))] => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (pos, op)) in self.parts.iter().enumerate() {
            match (i, pos) {
                (0, true) => {}
                (0, false) => f.write_str("-")?,
                (_, true) => f.write_str(" + ")?,
                (_, false) => f.write_str(" - ")?,
            }
            match op {
                Operand::Name(n) => f.write_str(n)?,
                Operand::Int(v) => write!(f, "{v}")?,
            }
        }
        Ok(())
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

/// Surface formula with source positions; equality ignores positions.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Bool(bool),
    Name(String),
    Cmp(CmpOp, Term, Term),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Iff(Box<Expr>, Box<Expr>),
    Next(Box<Expr>),
    Prev(Box<Expr>),
    Until(Box<Expr>, Box<Expr>),
    Since(Box<Expr>, Box<Expr>),
    Globally(Box<Expr>),
    Finally(Box<Expr>),
    Historically(Box<Expr>),
    GloballyWithin(u32, Box<Expr>),
    FinallyWithin(u32, Box<Expr>),
    Believes(Vec<String>, Box<Expr>),
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl Eq for Term {}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ExprKind as K;
        match &self.kind {
            K::Bool(b) => write!(f, "{b}"),
            K::Name(n) => f.write_str(n),
            K::Cmp(op, a, b) => write!(f, "{a} {op} {b}"),
            K::Not(a) => write!(f, "!{}", Atomic(a)),
            K::And(a, b) => write!(f, "({a} & {b})"),
            K::Or(a, b) => write!(f, "({a} | {b})"),
            K::Implies(a, b) => write!(f, "({a} -> {b})"),
            K::Iff(a, b) => write!(f, "({a} <-> {b})"),
            K::Until(a, b) => write!(f, "({a} U {b})"),
            K::Since(a, b) => write!(f, "({a} S {b})"),
            K::Next(a) => write!(f, "X {}", Atomic(a)),
            K::Prev(a) => write!(f, "P {}", Atomic(a)),
            K::Globally(a) => write!(f, "G {}", Atomic(a)),
            K::Finally(a) => write!(f, "F {}", Atomic(a)),
            K::Historically(a) => write!(f, "H {}", Atomic(a)),
            K::GloballyWithin(k, a) => write!(f, "G<={k} {}", Atomic(a)),
            K::FinallyWithin(k, a) => write!(f, "F<={k} {}", Atomic(a)),
            K::Believes(es, a) => {
                if es.len() == 1 {
                    write!(f, "{}:{}", es[0], Atomic(a))
                } else {
                    write!(f, "{{{}}}:{}", es.join(","), Atomic(a))
                }
            }
        }
    }
}

// Wraps comparisons in parentheses when they appear under a prefix operator.
struct Atomic<'a>(&'a Expr);

impl fmt::Display for Atomic<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.kind {
            ExprKind::Cmp(..) => write!(f, "({})", self.0),
            _ => write!(f, "{}", self.0),
        }
    }
}

// Precedence, loosest first: <->, -> (right), |, &, U/S (right), prefix.
pub(crate) fn expr(c: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = implication(c)?;
    while c.peek() == Some(&Tok::DArrow) {
        let span = c.span();
        c.bump();
        let rhs = implication(c)?;
        lhs = Expr { kind: ExprKind::Iff(Box::new(lhs), Box::new(rhs)), span };
    }
    Ok(lhs)
}

fn implication(c: &mut Cursor) -> Result<Expr, ParseError> {
    let lhs = disjunction(c)?;
    if c.peek() == Some(&Tok::Arrow) {
        let span = c.span();
        c.bump();
        let rhs = implication(c)?;
        return Ok(Expr { kind: ExprKind::Implies(Box::new(lhs), Box::new(rhs)), span });
    }
    Ok(lhs)
}

fn disjunction(c: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = conjunction(c)?;
    while c.peek() == Some(&Tok::Pipe) {
        let span = c.span();
        c.bump();
        let rhs = conjunction(c)?;
        lhs = Expr { kind: ExprKind::Or(Box::new(lhs), Box::new(rhs)), span };
    }
    Ok(lhs)
}

fn conjunction(c: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = temporal(c)?;
    while c.peek() == Some(&Tok::Amp) {
        let span = c.span();
        c.bump();
        let rhs = temporal(c)?;
        lhs = Expr { kind: ExprKind::And(Box::new(lhs), Box::new(rhs)), span };
    }
    Ok(lhs)
}

fn temporal(c: &mut Cursor) -> Result<Expr, ParseError> {
    let lhs = unary(c)?;
    let until = match c.peek() {
        Some(Tok::Ident(k)) if k == "U" => true,
        Some(Tok::Ident(k)) if k == "S" => false,
        _ => return Ok(lhs),
    };
    let span = c.span();
    c.bump();
    let rhs = temporal(c)?;
    let kind = if until {
        ExprKind::Until(Box::new(lhs), Box::new(rhs))
    } else {
        ExprKind::Since(Box::new(lhs), Box::new(rhs))
    };
    Ok(Expr { kind, span })
}

fn unary(c: &mut Cursor) -> Result<Expr, ParseError> {
    let span = c.span();
    let boxed = |c: &mut Cursor| unary(c).map(Box::new);
    let kind = match c.peek() {
        Some(Tok::Bang) => {
            c.bump();
            ExprKind::Not(boxed(c)?)
        }
        Some(Tok::LBrace) => {
            c.bump();
            let mut names = vec![c.ident()?];
            while c.eat(&Tok::Comma) {
                names.push(c.ident()?);
            }
            c.expect(&Tok::RBrace)?;
            c.expect(&Tok::Colon)?;
            ExprKind::Believes(names, boxed(c)?)
        }
        Some(Tok::Ident(k)) if !is_keyword(k) && c.peek_at(1) == Some(&Tok::Colon) => {
            c.bump();
            c.bump();
            ExprKind::Believes(vec![k.clone()], boxed(c)?)
        }
        Some(Tok::Ident(k)) if matches!(k.as_str(), "X" | "P" | "H") => {
            c.bump();
            let a = boxed(c)?;
            match k.as_str() {
                "X" => ExprKind::Next(a),
                "P" => ExprKind::Prev(a),
                _ => ExprKind::Historically(a),
            }
        }
        Some(Tok::Ident(k)) if matches!(k.as_str(), "G" | "F") => {
            c.bump();
            let bound = if c.eat(&Tok::Le) {
                let n = c.int()?;
                Some(u32::try_from(n).map_err(|_| {
                    ParseError::new(span, format!("bound {n} is not a natural number"))
                })?)
            } else {
                None
            };
            let a = boxed(c)?;
            match (k.as_str(), bound) {
                ("G", None) => ExprKind::Globally(a),
                ("G", Some(n)) => ExprKind::GloballyWithin(n, a),
                (_, None) => ExprKind::Finally(a),
                (_, Some(n)) => ExprKind::FinallyWithin(n, a),
            }
        }
        _ => return primary(c),
    };
    Ok(Expr { kind, span })
}

fn primary(c: &mut Cursor) -> Result<Expr, ParseError> {
    let span = c.span();
    match c.peek() {
        Some(Tok::LParen) => {
            c.bump();
            let e = expr(c)?;
            c.expect(&Tok::RParen)?;
            Ok(e)
        }
        Some(Tok::Ident(k)) if k == "true" || k == "false" => {
            c.bump();
            Ok(Expr { kind: ExprKind::Bool(k == "true"), span })
        }
        Some(Tok::Ident(k)) if is_keyword(k) => Err(c.unexpected("a formula")),
        Some(Tok::Ident(_)) | Some(Tok::Int(_)) | Some(Tok::Minus) => {
            let lhs = term(c)?;
            match c.peek().and_then(CmpOp::from_tok) {
                Some(op) => {
                    c.bump();
                    let rhs = term(c)?;
                    Ok(Expr { kind: ExprKind::Cmp(op, lhs, rhs), span })
                }
                None => match lhs.as_name() {
                    Some(n) => Ok(Expr { kind: ExprKind::Name(n.to_string()), span }),
                    None => Err(c.unexpected("a comparison operator")),
                },
            }
        }
        _ => Err(c.unexpected("a formula")),
    }
}

pub(crate) fn term(c: &mut Cursor) -> Result<Term, ParseError> {
    let span = c.span();
    let mut parts = Vec::new();
    let mut positive = !c.eat(&Tok::Minus);
    loop {
        let op = match c.peek() {
            Some(Tok::Ident(n)) if !is_keyword(n) || n == "true" || n == "false" => {
                Operand::Name(n.clone())
            }
            Some(Tok::Int(v)) => Operand::Int(*v),
            _ => return Err(c.unexpected("a name or integer")),
        };
        c.bump();
        parts.push((positive, op));
        positive = match c.peek() {
            Some(Tok::Plus) => true,
            Some(Tok::Minus) => false,
            _ => break,
        };
        c.bump();
    }
    Ok(Term { parts, span })
}

/// Parses a whole single-line formula.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex_line(text, 1)?;
    let mut c = Cursor::new(&toks, Span { line: 1, col: text.chars().count() + 1 });
    let e = expr(&mut c)?;
    c.finish()?;
    Ok(e)
}

/// Maps names and comparisons to formulas.
pub trait Vocabulary {
    fn name(&self, name: &str, span: Span) -> Result<Formula, ParseError>;
    fn compare(&self, op: CmpOp, lhs: &Term, rhs: &Term, span: Span)
        -> Result<Formula, ParseError>;
}

/// Every name is an atom; `x = v` is the atom `x=v` and `x != v` its negation.
pub struct FreeVocabulary;

impl Vocabulary for FreeVocabulary {
    fn name(&self, name: &str, _span: Span) -> Result<Formula, ParseError> {
        Ok(Formula::atom(name))
    }

    fn compare(
        &self,
        op: CmpOp,
        lhs: &Term,
        rhs: &Term,
        span: Span,
    ) -> Result<Formula, ParseError> {
        let value = match rhs.parts.as_slice() {
            [(true, Operand::Name(n))] => n.clone(),
            [(true, Operand::Int(v))] => v.to_string(),
            [(false, Operand::Int(v))] => (-v).to_string(),
            _ => return Err(ParseError::new(span, "only `name = value` comparisons are allowed here")),
        };
        let Some(var) = lhs.as_name() else {
            return Err(ParseError::new(span, "only `name = value` comparisons are allowed here"));
        };
        let atom = Formula::atom(format!("{var}={value}"));
        match op {
            CmpOp::Eq => Ok(atom),
            CmpOp::Ne => Ok(Formula::not(atom)),
            _ => Err(ParseError::new(span, format!("`{op}` needs declared variable domains"))),
        }
    }
}

impl Expr {
    pub fn lower(&self, vocab: &dyn Vocabulary) -> Result<Formula, ParseError> {
        use ExprKind as K;
        let l = |e: &Expr| e.lower(vocab);
        Ok(match &self.kind {
            K::Bool(true) => Formula::Top,
            K::Bool(false) => Formula::Bottom,
            K::Name(n) => vocab.name(n, self.span)?,
            K::Cmp(op, a, b) => vocab.compare(*op, a, b, self.span)?,
            K::Not(a) => Formula::not(l(a)?),
            K::And(a, b) => Formula::and(l(a)?, l(b)?),
            K::Or(a, b) => Formula::or(l(a)?, l(b)?),
            K::Implies(a, b) => Formula::implies(l(a)?, l(b)?),
            K::Iff(a, b) => Formula::iff(l(a)?, l(b)?),
            K::Until(a, b) => Formula::until(l(a)?, l(b)?),
            K::Since(a, b) => Formula::since(l(a)?, l(b)?),
            K::Next(a) => Formula::next(l(a)?),
            K::Prev(a) => Formula::prev(l(a)?),
            K::Globally(a) => Formula::globally(l(a)?),
            K::Finally(a) => Formula::finally(l(a)?),
            K::Historically(a) => Formula::historically(l(a)?),
            K::GloballyWithin(k, a) => Formula::globally_within(*k, l(a)?),
            K::FinallyWithin(k, a) => Formula::finally_within(*k, l(a)?),
            K::Believes(es, a) => Formula::believes(es.iter().cloned(), l(a)?)
                .map_err(|e| ParseError::new(self.span, e.to_string()))?,
        })
    }

    /// Every name mentioned anywhere in the expression, with its position.
    pub fn names(&self) -> Vec<(String, Span)> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut Vec<(String, Span)>) {
        use ExprKind as K;
        match &self.kind {
            K::Bool(_) => {}
            K::Name(n) => out.push((n.clone(), self.span)),
            K::Cmp(_, a, b) => {
                for t in [a, b] {
                    for (_, op) in &t.parts {
                        if let Operand::Name(n) = op {
                            out.push((n.clone(), t.span));
                        }
                    }
                }
            }
            K::Not(a)
            | K::Next(a)
            | K::Prev(a)
            | K::Globally(a)
            | K::Finally(a)
            | K::Historically(a)
            | K::GloballyWithin(_, a)
            | K::FinallyWithin(_, a)
            | K::Believes(_, a) => a.collect_names(out),
            K::And(a, b)
            | K::Or(a, b)
            | K::Implies(a, b)
            | K::Iff(a, b)
            | K::Until(a, b)
            | K::Since(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }
}

/// Parses formula text with [`FreeVocabulary`].
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    Ok(parse_expr(text)?.lower(&FreeVocabulary)?)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::formula::eval::gen;
    use Formula as F;

    #[test]
    fn precedence_and_associativity() {
        let f = parse_formula("a -> b -> c").unwrap();
        assert_eq!(f, F::implies(F::atom("a"), F::implies(F::atom("b"), F::atom("c"))));
        let f = parse_formula("a | b & c").unwrap();
        assert_eq!(f, F::or(F::atom("a"), F::and(F::atom("b"), F::atom("c"))));
        let f = parse_formula("a U b & F<=3 c").unwrap();
        assert_eq!(
            f,
            F::and(F::until(F::atom("a"), F::atom("b")), F::finally_within(3, F::atom("c")))
        );
    }

    #[test]
    fn comparisons_and_beliefs() {
        let f = parse_formula("radar: s_B = fast").unwrap();
        assert_eq!(f, F::believes(["radar"], F::atom("s_B=fast")).unwrap());
        let f = parse_formula("{a,b}: !x != 2").unwrap();
        assert_eq!(f, F::believes(["a", "b"], F::not(F::not(F::atom("x=2")))).unwrap());
    }

    #[test]
    fn errors_carry_columns() {
        let e = parse_expr("a & ").unwrap_err();
        assert_eq!(e.span, Span { line: 1, col: 5 });
        let e = parse_expr("a $ b").unwrap_err();
        assert_eq!(e.span.col, 3);
        assert!(parse_expr("G<=-1 a").is_err());
        assert!(parse_expr("(a").is_err());
        assert!(parse_expr("a b").is_err());
        assert!(parse_formula("x < 3").is_err());
    }

    #[test]
    fn expr_display_reparses() {
        let text = "!(G<=3 s_B = fast) -> (p_A >= p_B U change & F<=3 change)";
        let e = parse_expr(text).unwrap();
        assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
    }

    proptest! {
        #[test]
        fn formula_display_roundtrips(f in gen::formula(4)) {
            let text = f.to_string();
            prop_assert_eq!(parse_formula(&text).unwrap(), f, "{}", text);
        }
    }
}
