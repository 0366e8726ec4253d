//! Abstract syntax of the core language and whole-program validity checks.

use std::collections::HashSet;
use std::fmt;

/// Names of the built-in primitives. They behave as globals but are not
/// user supercombinators.
pub const PRIMITIVE_NAMES: [&str; 8] = ["+", "-", "*", "/", "<", "/=", "negate", "if"];

pub fn is_primitive(name: &str) -> bool {
    PRIMITIVE_NAMES.contains(&name)
}

/// Location of a syntax node in its source text.
///
/// Nodes built by hand (tests, desugaring) carry the default span, which
/// points at offset 0 with line and column 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize, line: u32, column: u32) -> Self {
        debug_assert!(start <= end);
        SourceSpan { start, end, line, column }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn join(self, other: SourceSpan) -> SourceSpan {
        if other.start < self.start {
            SourceSpan { end: self.end.max(other.end), ..other }
        } else {
            SourceSpan { end: self.end.max(other.end), ..self }
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Neq,
}

impl BinOp {
    pub const ALL: [BinOp; 6] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Lt, BinOp::Neq];

    /// The surface symbol, which is also the name of the primitive global.
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Neq => "/=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.symbol() == s)
    }
}

/// An expression node together with its source location.
///
/// Equality is structural: spans are ignored, so a parsed tree compares
/// equal to the same tree built by hand.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    Num(i64),
    App(Box<Expr>, Box<Expr>),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Let(Vec<Defn>, Box<Expr>),
    LetRec(Vec<Defn>, Box<Expr>),
    Case(Box<Expr>, Vec<Alt>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Constr { tag: u32, arity: u32 },
}

#[derive(Debug, Clone)]
pub struct Defn {
    pub name: String,
    pub expr: Expr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub struct Alt {
    pub tag: u32,
    pub binders: Vec<String>,
    pub body: Expr,
    pub span: SourceSpan,
}

impl PartialEq for Alt {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag && self.binders == other.binders && self.body == other.body
    }
}

impl Eq for Alt {}

impl PartialEq for Defn {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.expr == other.expr
    }
}

impl Eq for Defn {}

#[derive(Debug, Clone)]
pub struct CoreSC {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
    pub span: SourceSpan,
}

impl PartialEq for CoreSC {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params && self.body == other.body
    }
}

impl Eq for CoreSC {}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoreProgram {
    pub supercombinators: Vec<CoreSC>,
}

// Hand-construction helpers. Everything gets the default span.

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        Expr { kind, span: SourceSpan::default() }
    }

    pub fn with_span(kind: ExprKind, span: SourceSpan) -> Expr {
        Expr { kind, span }
    }

    pub fn var(name: &str) -> Expr {
        Expr::new(ExprKind::Var(name.to_string()))
    }

    pub fn num(n: i64) -> Expr {
        Expr::new(ExprKind::Num(n))
    }

    pub fn app(fun: Expr, arg: Expr) -> Expr {
        Expr::new(ExprKind::App(Box::new(fun), Box::new(arg)))
    }

    /// Left-nested application of `fun` to each of `args` in turn.
    pub fn apply(fun: Expr, args: impl IntoIterator<Item = Expr>) -> Expr {
        args.into_iter().fold(fun, Expr::app)
    }

    pub fn binop(op: BinOp, left: Expr, right: Expr) -> Expr {
        Expr::new(ExprKind::BinOp(op, Box::new(left), Box::new(right)))
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::new(ExprKind::Neg(Box::new(e)))
    }

    pub fn let_(defns: Vec<(&str, Expr)>, body: Expr) -> Expr {
        Expr::new(ExprKind::Let(Defn::list(defns), Box::new(body)))
    }

    pub fn letrec(defns: Vec<(&str, Expr)>, body: Expr) -> Expr {
        Expr::new(ExprKind::LetRec(Defn::list(defns), Box::new(body)))
    }

    pub fn case(scrutinee: Expr, alts: Vec<Alt>) -> Expr {
        Expr::new(ExprKind::Case(Box::new(scrutinee), alts))
    }

    pub fn if_(cond: Expr, then: Expr, els: Expr) -> Expr {
        Expr::new(ExprKind::If(Box::new(cond), Box::new(then), Box::new(els)))
    }

    pub fn constr(tag: u32, arity: u32) -> Expr {
        Expr::new(ExprKind::Constr { tag, arity })
    }

    /// Splits an application spine into its head and arguments, first
    /// argument first.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut head = self;
        while let ExprKind::App(f, a) = &head.kind {
            args.push(a.as_ref());
            head = f;
        }
        args.reverse();
        (head, args)
    }
}

impl Defn {
    pub fn new(name: &str, expr: Expr) -> Defn {
        Defn { name: name.to_string(), expr, span: SourceSpan::default() }
    }

    fn list(defns: Vec<(&str, Expr)>) -> Vec<Defn> {
        defns.into_iter().map(|(n, e)| Defn::new(n, e)).collect()
    }
}

impl Alt {
    pub fn new(tag: u32, binders: &[&str], body: Expr) -> Alt {
        Alt {
            tag,
            binders: binders.iter().map(|b| b.to_string()).collect(),
            body,
            span: SourceSpan::default(),
        }
    }
}

impl CoreSC {
    pub fn new(name: &str, params: &[&str], body: Expr) -> CoreSC {
        CoreSC {
            name: name.to_string(),
            params: params.iter().map(|p| p.to_string()).collect(),
            body,
            span: SourceSpan::default(),
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

impl CoreProgram {
    pub fn new(supercombinators: Vec<CoreSC>) -> CoreProgram {
        CoreProgram { supercombinators }
    }

    pub fn get(&self, name: &str) -> Option<&CoreSC> {
        self.supercombinators.iter().find(|sc| sc.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticCode {
    EmptyProgram,
    DuplicateSc,
    ReservedName,
    DuplicateParam,
    DuplicateBinder,
    EmptyLet,
    EmptyCase,
    DuplicateAltTag,
    InvalidTag,
    UnboundVar,
    MissingMain,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::EmptyProgram => "EMPTY_PROGRAM",
            DiagnosticCode::DuplicateSc => "DUPLICATE_SC",
            DiagnosticCode::ReservedName => "RESERVED_NAME",
            DiagnosticCode::DuplicateParam => "DUPLICATE_PARAM",
            DiagnosticCode::DuplicateBinder => "DUPLICATE_BINDER",
            DiagnosticCode::EmptyLet => "EMPTY_LET",
            DiagnosticCode::EmptyCase => "EMPTY_CASE",
            DiagnosticCode::DuplicateAltTag => "DUPLICATE_ALT_TAG",
            DiagnosticCode::InvalidTag => "INVALID_TAG",
            DiagnosticCode::UnboundVar => "UNBOUND_VAR",
            DiagnosticCode::MissingMain => "MISSING_MAIN",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    /// The offending name, when there is one.
    pub subject: String,
    pub span: SourceSpan,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {:?}", self.span, self.code, self.subject)
    }
}

/// Checks every structural invariant of a program and that each variable
/// occurrence is bound. Returns an empty list for a valid program.
///
/// Whether `main` exists is checked separately by [`check_entry_point`],
/// since libraries of supercombinators are valid on their own.
pub fn validate_program(p: &CoreProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if p.supercombinators.is_empty() {
        out.push(Diagnostic {
            code: DiagnosticCode::EmptyProgram,
            subject: String::new(),
            span: SourceSpan::default(),
        });
        return out;
    }

    let mut seen = HashSet::new();
    for sc in &p.supercombinators {
        if is_primitive(&sc.name) {
            out.push(diag(DiagnosticCode::ReservedName, &sc.name, sc.span));
        } else if !seen.insert(sc.name.as_str()) {
            out.push(diag(DiagnosticCode::DuplicateSc, &sc.name, sc.span));
        }
    }

    let globals: HashSet<&str> = p.supercombinators.iter().map(|sc| sc.name.as_str()).collect();
    for sc in &p.supercombinators {
        check_distinct(sc.params.iter().map(String::as_str), DiagnosticCode::DuplicateParam, sc.span, &mut out);
        let mut scope: Vec<&str> = sc.params.iter().map(String::as_str).collect();
        let mut checker = ScopeChecker { globals: &globals, out: &mut out };
        checker.expr(&sc.body, &mut scope);
    }
    out
}

/// Reports a missing or ill-typed `main`: it must exist and take no
/// arguments for the program to be executed.
pub fn check_entry_point(p: &CoreProgram) -> Option<Diagnostic> {
    match p.get("main") {
        Some(sc) if sc.params.is_empty() => None,
        Some(sc) => Some(diag(DiagnosticCode::MissingMain, "main", sc.span)),
        None => Some(diag(DiagnosticCode::MissingMain, "main", SourceSpan::default())),
    }
}

fn diag(code: DiagnosticCode, subject: &str, span: SourceSpan) -> Diagnostic {
    Diagnostic { code, subject: subject.to_string(), span }
}

fn check_distinct<'a>(
    names: impl Iterator<Item = &'a str>,
    code: DiagnosticCode,
    span: SourceSpan,
    out: &mut Vec<Diagnostic>,
) {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            out.push(diag(code, n, span));
        }
    }
}

struct ScopeChecker<'a, 'b> {
    globals: &'a HashSet<&'a str>,
    out: &'b mut Vec<Diagnostic>,
}

impl<'a, 'b> ScopeChecker<'a, 'b> {
    fn expr<'e>(&mut self, e: &'e Expr, scope: &mut Vec<&'e str>) {
        match &e.kind {
            ExprKind::Var(name) => {
                let bound = scope.iter().any(|s| s == name)
                    || self.globals.contains(name.as_str())
                    || is_primitive(name);
                if !bound {
                    self.out.push(diag(DiagnosticCode::UnboundVar, name, e.span));
                }
            }
            ExprKind::Num(_) => {}
            ExprKind::Constr { tag, .. } => {
                if *tag == 0 {
                    self.out.push(diag(DiagnosticCode::InvalidTag, "Pack", e.span));
                }
            }
            ExprKind::App(f, a) => {
                self.expr(f, scope);
                self.expr(a, scope);
            }
            ExprKind::BinOp(_, l, r) => {
                self.expr(l, scope);
                self.expr(r, scope);
            }
            ExprKind::Neg(x) => self.expr(x, scope),
            ExprKind::If(c, t, f) => {
                self.expr(c, scope);
                self.expr(t, scope);
                self.expr(f, scope);
            }
            ExprKind::Let(defns, body) | ExprKind::LetRec(defns, body) => {
                let recursive = matches!(e.kind, ExprKind::LetRec(..));
                if defns.is_empty() {
                    self.out.push(diag(DiagnosticCode::EmptyLet, "", e.span));
                }
                check_distinct(
                    defns.iter().map(|d| d.name.as_str()),
                    DiagnosticCode::DuplicateBinder,
                    e.span,
                    self.out,
                );
                let mark = scope.len();
                if recursive {
                    scope.extend(defns.iter().map(|d| d.name.as_str()));
                }
                for d in defns {
                    self.expr(&d.expr, scope);
                }
                if !recursive {
                    scope.extend(defns.iter().map(|d| d.name.as_str()));
                }
                self.expr(body, scope);
                scope.truncate(mark);
            }
            ExprKind::Case(scrutinee, alts) => {
                self.expr(scrutinee, scope);
                if alts.is_empty() {
                    self.out.push(diag(DiagnosticCode::EmptyCase, "", e.span));
                }
                let mut tags = HashSet::new();
                for alt in alts {
                    if alt.tag == 0 {
                        self.out.push(diag(DiagnosticCode::InvalidTag, &alt.tag.to_string(), alt.span));
                    }
                    if !tags.insert(alt.tag) {
                        self.out.push(diag(DiagnosticCode::DuplicateAltTag, &alt.tag.to_string(), alt.span));
                    }
                    check_distinct(
                        alt.binders.iter().map(String::as_str),
                        DiagnosticCode::DuplicateBinder,
                        alt.span,
                        self.out,
                    );
                    let mark = scope.len();
                    scope.extend(alt.binders.iter().map(String::as_str));
                    self.expr(&alt.body, scope);
                    scope.truncate(mark);
                }
            }
        }
    }
}
