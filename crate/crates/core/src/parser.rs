//! Concrete syntax for the core language.
//!
//! ```text
//! program  := sc { ";" sc } [ ";" ]
//! sc       := IDENT { IDENT } "=" expr
//! expr     := "let" defns "in" expr | "letrec" defns "in" expr
//!           | "case" expr "of" alts | "if" expr "then" expr "else" expr | rel
//! rel      := add [ ("<" | "/=") add ]
//! add      := mul { ("+" | "-") mul }
//! mul      := neg { ("*" | "/") neg }
//! neg      := "negate" neg | app
//! app      := atom { atom }
//! atom     := IDENT | NUM | "Pack" "{" NUM "," NUM "}" | "(" expr ")" | "(" primop ")"
//! alt      := "<" NUM ">" { IDENT } "->" expr
//! ```
//!
//! `--` starts a comment that runs to the end of the line. A `-` written
//! directly before a digit is part of the literal only where an atom is
//! required, so `n-1` is a subtraction while `f (-1)` passes a negative
//! literal. Primitives can be named as values by parenthesising them:
//! `(+)`, `(/=)`, `(negate)`, `(if)`.

use std::fmt;

use thiserror::Error;

use crate::ast::{is_primitive, Alt, BinOp, CoreProgram, CoreSC, Defn, Expr, ExprKind, SourceSpan};

pub const KEYWORDS: [&str; 10] = ["let", "letrec", "in", "case", "of", "if", "then", "else", "negate", "Pack"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    /// Tokens that would have been accepted at this point.
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Num(s) => write!(f, "number `{s}`"),
            Tok::Kw(s) | Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

// Longest symbols first so that `->`, `/=` win over `-`, `/`.
const SYMBOLS: [&str; 15] = ["->", "/=", "=", ";", "(", ")", "{", "}", ",", "<", ">", "+", "-", "*", "/"];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self, ch: char) {
        self.pos += ch.len_utf8();
        if ch == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => self.bump(c),
                Some('-') if self.src[self.pos..].starts_with("--") => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump(c);
                    }
                }
                _ => return,
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let (start, line, col) = (self.pos, self.line, self.col);
            let span_to = |lx: &Lexer| SourceSpan::new(start, lx.pos, line, col);
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Eof, span: span_to(&self) });
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() {
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        self.bump(c);
                    } else {
                        break;
                    }
                }
                let word = &self.src[start..self.pos];
                match KEYWORDS.iter().find(|k| **k == word) {
                    Some(k) => Tok::Kw(k),
                    None => Tok::Ident(word.to_string()),
                }
            } else if c.is_ascii_digit() {
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        self.bump(c);
                    } else {
                        break;
                    }
                }
                Tok::Num(self.src[start..self.pos].to_string())
            } else if let Some(sym) = SYMBOLS.iter().find(|s| self.src[self.pos..].starts_with(**s)) {
                for ch in sym.chars() {
                    self.bump(ch);
                }
                Tok::Sym(sym)
            } else {
                self.bump(c);
                return Err(ParseError {
                    span: span_to(&self),
                    message: format!("unexpected character {c:?}"),
                    expected: Vec::new(),
                });
            };
            out.push(Token { tok, span: span_to(&self) });
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        Err(ParseError {
            span: self.span(),
            message: format!("expected {}, found {}", expected.join(" or "), self.peek()),
            expected,
        })
    }

    fn expect_sym(&mut self, s: &'static str) -> PResult<SourceSpan> {
        if self.is_sym(s) {
            Ok(self.advance().span)
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, s: &'static str) -> PResult<SourceSpan> {
        if self.is_kw(s) {
            Ok(self.advance().span)
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn ident(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(name) => Ok((name, self.advance().span)),
            _ => self.error(&["identifier"]),
        }
    }

    fn number<T: TryFrom<i128>>(&mut self, negative: bool) -> PResult<(T, SourceSpan)> {
        let Tok::Num(digits) = self.peek().clone() else {
            return self.error(&["number"]);
        };
        let span = self.span();
        let value = digits
            .parse::<i128>()
            .ok()
            .map(|v| if negative { -v } else { v })
            .and_then(|v| T::try_from(v).ok());
        match value {
            Some(v) => {
                self.advance();
                Ok((v, span))
            }
            None => Err(ParseError {
                span,
                message: format!("integer literal {}{digits} out of range", if negative { "-" } else { "" }),
                expected: Vec::new(),
            }),
        }
    }

    fn program(&mut self) -> PResult<CoreProgram> {
        let mut scs = vec![self.supercombinator()?];
        while self.is_sym(";") {
            self.advance();
            if *self.peek() == Tok::Eof {
                break;
            }
            scs.push(self.supercombinator()?);
        }
        if *self.peek() != Tok::Eof {
            return self.error(&["`;`", "end of input"]);
        }
        Ok(CoreProgram::new(scs))
    }

    fn supercombinator(&mut self) -> PResult<CoreSC> {
        let (name, start) = self.ident()?;
        let mut params = Vec::new();
        while let Tok::Ident(p) = self.peek().clone() {
            self.advance();
            params.push(p);
        }
        self.expect_sym("=")?;
        let body = self.expr()?;
        let span = start.join(body.span);
        Ok(CoreSC { name, params, body, span })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        if self.is_kw("let") || self.is_kw("letrec") {
            let recursive = self.is_kw("letrec");
            self.advance();
            let defns = self.defns()?;
            self.expect_kw("in")?;
            let body = self.expr()?;
            let span = start.join(body.span);
            let kind = if recursive {
                ExprKind::LetRec(defns, Box::new(body))
            } else {
                ExprKind::Let(defns, Box::new(body))
            };
            return Ok(Expr::with_span(kind, span));
        }
        if self.is_kw("case") {
            self.advance();
            let scrutinee = self.expr()?;
            self.expect_kw("of")?;
            let alts = self.alts()?;
            let span = start.join(alts.last().map_or(scrutinee.span, |a| a.span));
            return Ok(Expr::with_span(ExprKind::Case(Box::new(scrutinee), alts), span));
        }
        if self.is_kw("if") {
            self.advance();
            let c = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            self.expect_kw("else")?;
            let e = self.expr()?;
            let span = start.join(e.span);
            return Ok(Expr::with_span(ExprKind::If(Box::new(c), Box::new(t), Box::new(e)), span));
        }
        self.relational()
    }

    fn defns(&mut self) -> PResult<Vec<Defn>> {
        let mut out = Vec::new();
        loop {
            let (name, start) = self.ident()?;
            self.expect_sym("=")?;
            let expr = self.expr()?;
            let span = start.join(expr.span);
            out.push(Defn { name, expr, span });
            if self.is_sym(";") {
                self.advance();
            } else {
                return Ok(out);
            }
        }
    }

    fn alts(&mut self) -> PResult<Vec<Alt>> {
        let mut out = Vec::new();
        loop {
            let start = self.expect_sym("<")?;
            let (tag, _) = self.number::<u32>(false)?;
            self.expect_sym(">")?;
            let mut binders = Vec::new();
            while let Tok::Ident(b) = self.peek().clone() {
                self.advance();
                binders.push(b);
            }
            self.expect_sym("->")?;
            let body = self.expr()?;
            let span = start.join(body.span);
            out.push(Alt { tag, binders, body, span });
            // `;` followed by `<` continues this case; any other `;`
            // belongs to an enclosing construct.
            if self.is_sym(";") && matches!(self.peek_at(1), Tok::Sym("<")) {
                self.advance();
            } else {
                return Ok(out);
            }
        }
    }

    fn relational(&mut self) -> PResult<Expr> {
        let left = self.additive()?;
        let op = match self.peek() {
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("/=") => BinOp::Neq,
            _ => return Ok(left),
        };
        self.advance();
        let right = self.additive()?;
        if matches!(self.peek(), Tok::Sym("<") | Tok::Sym("/=")) {
            return Err(ParseError {
                span: self.span(),
                message: "comparison operators do not associate; add parentheses".to_string(),
                expected: Vec::new(),
            });
        }
        Ok(binop(op, left, right))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(left),
            };
            self.advance();
            let right = self.multiplicative()?;
            left = binop(op, left, right);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut left = self.negation()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                _ => return Ok(left),
            };
            self.advance();
            let right = self.negation()?;
            left = binop(op, left, right);
        }
    }

    fn negation(&mut self) -> PResult<Expr> {
        if self.is_kw("negate") {
            let start = self.advance().span;
            let inner = self.negation()?;
            let span = start.join(inner.span);
            return Ok(Expr::with_span(ExprKind::Neg(Box::new(inner)), span));
        }
        self.application()
    }

    fn application(&mut self) -> PResult<Expr> {
        let mut fun = self.atom(true)?;
        while self.starts_atom() {
            let arg = self.atom(false)?;
            let span = fun.span.join(arg.span);
            fun = Expr::with_span(ExprKind::App(Box::new(fun), Box::new(arg)), span);
        }
        Ok(fun)
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Num(_) | Tok::Kw("Pack") | Tok::Sym("("))
    }

    fn atom(&mut self, mandatory: bool) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(Expr::with_span(ExprKind::Var(name), start))
            }
            Tok::Num(_) => {
                let (n, span) = self.number::<i64>(false)?;
                Ok(Expr::with_span(ExprKind::Num(n), span))
            }
            Tok::Sym("-") if mandatory && self.negative_literal_follows() => {
                self.advance();
                let (n, span) = self.number::<i64>(true)?;
                Ok(Expr::with_span(ExprKind::Num(n), start.join(span)))
            }
            Tok::Kw("Pack") => {
                self.advance();
                self.expect_sym("{")?;
                let (tag, _) = self.number::<u32>(false)?;
                self.expect_sym(",")?;
                let (arity, _) = self.number::<u32>(false)?;
                let end = self.expect_sym("}")?;
                Ok(Expr::with_span(ExprKind::Constr { tag, arity }, start.join(end)))
            }
            Tok::Sym("(") => {
                self.advance();
                if let Some(name) = self.primitive_in_parens() {
                    self.advance();
                    let end = self.expect_sym(")")?;
                    return Ok(Expr::with_span(ExprKind::Var(name.to_string()), start.join(end)));
                }
                let mut inner = self.expr()?;
                let end = self.expect_sym(")")?;
                inner.span = start.join(end);
                Ok(inner)
            }
            _ => self.error(&["identifier", "number", "`Pack`", "`(`"]),
        }
    }

    fn negative_literal_follows(&self) -> bool {
        let minus = self.toks[self.pos].span;
        let next = &self.toks[(self.pos + 1).min(self.toks.len() - 1)];
        matches!(next.tok, Tok::Num(_)) && next.span.start == minus.end
    }

    /// Recognises `op )` right after an opening parenthesis.
    fn primitive_in_parens(&self) -> Option<&'static str> {
        if !matches!(self.peek_at(1), Tok::Sym(")")) {
            return None;
        }
        let name = match self.peek() {
            Tok::Sym(s) | Tok::Kw(s) => *s,
            _ => return None,
        };
        is_primitive(name).then_some(name)
    }
}

fn binop(op: BinOp, left: Expr, right: Expr) -> Expr {
    let span = left.span.join(right.span);
    Expr::with_span(ExprKind::BinOp(op, Box::new(left), Box::new(right)), span)
}

/// Parses a whole program.
pub fn parse_program(text: &str) -> Result<CoreProgram, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    p.program()
}

/// Parses raw bytes, rejecting input that is not UTF-8.
pub fn parse_program_bytes(bytes: &[u8]) -> Result<CoreProgram, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_program(text),
        Err(e) => Err(ParseError {
            span: SourceSpan::new(e.valid_up_to(), e.valid_up_to(), 0, 0),
            message: "input is not valid UTF-8".to_string(),
            expected: Vec::new(),
        }),
    }
}

/// Parses a single expression; handy in tests and tooling.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(&["end of input"]);
    }
    Ok(e)
}

// Pretty printing. Output always reparses to the same tree; block forms
// (let, case, if) are parenthesised unless they are a whole body.

const PREC_REL: u8 = 1;
const PREC_ADD: u8 = 2;
const PREC_MUL: u8 = 3;
const PREC_NEG: u8 = 4;
const PREC_APP: u8 = 5;
const PREC_ATOM: u8 = 6;

impl fmt::Display for CoreProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, sc) in self.supercombinators.iter().enumerate() {
            if i > 0 {
                f.write_str(";\n")?;
            }
            write!(f, "{sc}")?;
        }
        Ok(())
    }
}

impl fmt::Display for CoreSC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for p in &self.params {
            write!(f, " {p}")?;
        }
        f.write_str(" = ")?;
        write_expr(f, &self.body, 0)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, ctx: u8) -> fmt::Result {
    let (prec, body): (u8, Box<dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result + '_>) = match &e.kind {
        ExprKind::Var(name) if is_primitive(name) => (PREC_ATOM, Box::new(move |f| write!(f, "({name})"))),
        ExprKind::Var(name) => (PREC_ATOM, Box::new(move |f| f.write_str(name))),
        ExprKind::Num(n) if *n < 0 => (PREC_ATOM, Box::new(move |f| write!(f, "({n})"))),
        ExprKind::Num(n) => (PREC_ATOM, Box::new(move |f| write!(f, "{n}"))),
        ExprKind::Constr { tag, arity } => (PREC_ATOM, Box::new(move |f| write!(f, "Pack{{{tag},{arity}}}"))),
        ExprKind::App(fun, arg) => (
            PREC_APP,
            Box::new(move |f| {
                write_expr(f, fun, PREC_APP)?;
                f.write_str(" ")?;
                write_expr(f, arg, PREC_ATOM)
            }),
        ),
        ExprKind::BinOp(op, l, r) => {
            let (prec, lp, rp) = match op {
                BinOp::Lt | BinOp::Neq => (PREC_REL, PREC_ADD, PREC_ADD),
                BinOp::Add | BinOp::Sub => (PREC_ADD, PREC_ADD, PREC_MUL),
                BinOp::Mul | BinOp::Div => (PREC_MUL, PREC_MUL, PREC_NEG),
            };
            (
                prec,
                Box::new(move |f| {
                    write_expr(f, l, lp)?;
                    write!(f, " {} ", op.symbol())?;
                    write_expr(f, r, rp)
                }),
            )
        }
        ExprKind::Neg(x) => (
            PREC_NEG,
            Box::new(move |f| {
                f.write_str("negate ")?;
                write_expr(f, x, PREC_NEG)
            }),
        ),
        ExprKind::Let(defns, body) | ExprKind::LetRec(defns, body) => {
            let kw = if matches!(e.kind, ExprKind::LetRec(..)) { "letrec" } else { "let" };
            (
                0,
                Box::new(move |f| {
                    write!(f, "{kw} ")?;
                    for (i, d) in defns.iter().enumerate() {
                        if i > 0 {
                            f.write_str("; ")?;
                        }
                        write!(f, "{} = ", d.name)?;
                        write_expr(f, &d.expr, PREC_REL)?;
                    }
                    f.write_str(" in ")?;
                    write_expr(f, body, PREC_REL)
                }),
            )
        }
        ExprKind::Case(scrutinee, alts) => (
            0,
            Box::new(move |f| {
                f.write_str("case ")?;
                write_expr(f, scrutinee, PREC_REL)?;
                f.write_str(" of ")?;
                for (i, a) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "<{}>", a.tag)?;
                    for b in &a.binders {
                        write!(f, " {b}")?;
                    }
                    f.write_str(" -> ")?;
                    write_expr(f, &a.body, PREC_REL)?;
                }
                Ok(())
            }),
        ),
        ExprKind::If(c, t, e) => (
            0,
            Box::new(move |f| {
                f.write_str("if ")?;
                write_expr(f, c, PREC_REL)?;
                f.write_str(" then ")?;
                write_expr(f, t, PREC_REL)?;
                f.write_str(" else ")?;
                write_expr(f, e, PREC_REL)
            }),
        ),
    };
    if prec < ctx {
        f.write_str("(")?;
        body(f)?;
        f.write_str(")")
    } else {
        body(f)
    }
}
