//! Compilation of core programs to G-machine code.
//!
//! The schemes follow the usual strict/lazy split:
//!
//! * `SC` compiles a supercombinator by running `R` over its body with the
//!   parameters at offsets `0..n`.
//! * `R` is `E` followed by the `[Update d, Pop d, Unwind]` epilogue.
//! * `E` compiles an expression whose value is certainly needed, inlining
//!   arithmetic, comparisons, `if` (as `Cond`) and `case` (as `Casejump`).
//! * `C` builds a graph for the expression without evaluating it. Operators
//!   in lazy position become applications of the primitive globals.
//! * `D` and `A` compile case alternatives.
//!
//! An `Env` maps each local name to its distance from the top of the stack.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::ast::{
    check_entry_point, validate_program, Alt, BinOp, CoreProgram, CoreSC, Defn, Diagnostic, Expr, ExprKind,
    SourceSpan, PRIMITIVE_NAMES,
};
use crate::instruction::{Code, Instruction};
use crate::machine::MachineState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("invalid program: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("unbound global {0:?}")]
    UnboundGlobal(String),
    #[error("{span}: constructor Pack{{{tag},{arity}}} applied to {supplied} argument(s)")]
    UnsaturatedConstructor { tag: u32, arity: u32, supplied: usize, span: SourceSpan },
}

/// Stack offsets of local variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Env(BTreeMap<String, usize>);

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    /// The environment of a supercombinator body: `x_i ↦ i`.
    pub fn from_params<S: AsRef<str>>(params: &[S]) -> Env {
        Env(params.iter().enumerate().map(|(i, p)| (p.as_ref().to_string(), i)).collect())
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn shift(&self, n: usize) -> Env {
        env_shift(self, n)
    }

    /// Binds (or rebinds, shadowing) `name` at `offset`.
    pub fn bind(mut self, name: &str, offset: usize) -> Env {
        self.0.insert(name.to_string(), offset);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<const N: usize> From<[(&str, usize); N]> for Env {
    fn from(pairs: [(&str, usize); N]) -> Env {
        Env(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

/// `ρ⁺ⁿ`: every offset increased by `n`.
pub fn env_shift(env: &Env, n: usize) -> Env {
    Env(env.0.iter().map(|(k, v)| (k.clone(), v + n)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledGlobal {
    pub name: String,
    pub arity: usize,
    pub code: Code,
}

impl fmt::Display for CompiledGlobal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {}", self.name, self.arity, self.code)
    }
}

/// Every global of a program, in heap order: user supercombinators in
/// source order, then supercombinators lifted out by the compiler, then
/// the primitives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledProgram {
    pub globals: Vec<CompiledGlobal>,
}

impl CompiledProgram {
    pub fn get(&self, name: &str) -> Option<&CompiledGlobal> {
        self.globals.iter().find(|g| g.name == name)
    }
}

impl fmt::Display for CompiledProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.globals {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

type CResult<T> = Result<T, CompileError>;

/// Compiler state: the set of known globals and any supercombinators
/// lifted out of lazy `case` expressions.
#[derive(Debug, Clone)]
pub struct Compiler {
    globals: HashSet<String>,
    lifted: Vec<CompiledGlobal>,
    next_lifted: usize,
}

impl Compiler {
    /// A compiler that knows the primitives and the given global names.
    pub fn with_globals<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Compiler {
        let mut globals: HashSet<String> = PRIMITIVE_NAMES.iter().map(|s| s.to_string()).collect();
        globals.extend(names.into_iter().map(|s| s.as_ref().to_string()));
        Compiler { globals, lifted: Vec::new(), next_lifted: 0 }
    }

    pub fn for_program(p: &CoreProgram) -> Compiler {
        Compiler::with_globals(p.supercombinators.iter().map(|sc| sc.name.as_str()))
    }

    /// Supercombinators created so far for `case` expressions that appeared
    /// in lazy position.
    pub fn take_lifted(&mut self) -> Vec<CompiledGlobal> {
        std::mem::take(&mut self.lifted)
    }

    pub fn compile_sc(&mut self, sc: &CoreSC) -> CResult<CompiledGlobal> {
        let env = Env::from_params(&sc.params);
        let code = self.compile_r(&sc.body, &env, sc.params.len())?;
        Ok(CompiledGlobal { name: sc.name.clone(), arity: sc.params.len(), code: code.into() })
    }

    pub fn compile_r(&mut self, e: &Expr, env: &Env, arity: usize) -> CResult<Vec<Instruction>> {
        let mut code = self.compile_e(e, env)?;
        code.extend([Instruction::Update(arity), Instruction::Pop(arity), Instruction::Unwind]);
        Ok(code)
    }

    /// Strict context.
    pub fn compile_e(&mut self, e: &Expr, env: &Env) -> CResult<Vec<Instruction>> {
        match &e.kind {
            ExprKind::Num(n) => Ok(vec![Instruction::PushInt(*n)]),
            ExprKind::Let(defns, body) => {
                let mut code = self.let_defns(defns, env)?;
                let inner = let_env(defns, env);
                code.extend(self.compile_e(body, &inner)?);
                code.push(Instruction::Slide(defns.len()));
                Ok(code)
            }
            ExprKind::LetRec(defns, body) => {
                let (mut code, inner) = self.letrec_defns(defns, env)?;
                code.extend(self.compile_e(body, &inner)?);
                code.push(Instruction::Slide(defns.len()));
                Ok(code)
            }
            ExprKind::BinOp(op, left, right) => {
                let mut code = self.compile_e(right, env)?;
                code.extend(self.compile_e(left, &env.shift(1))?);
                code.push(binop_instruction(*op));
                Ok(code)
            }
            ExprKind::Neg(inner) => {
                let mut code = self.compile_e(inner, env)?;
                code.push(Instruction::Neg);
                Ok(code)
            }
            ExprKind::Case(scrutinee, alts) => {
                let mut code = self.compile_e(scrutinee, env)?;
                code.push(Instruction::Casejump(self.compile_alts(alts, env)?));
                Ok(code)
            }
            ExprKind::If(cond, then, els) => {
                let mut code = self.compile_e(cond, env)?;
                let t = self.compile_e(then, env)?;
                let f = self.compile_e(els, env)?;
                code.push(Instruction::Cond(t.into(), f.into()));
                Ok(code)
            }
            _ => {
                if let Some(code) = self.saturated_constructor(e, env)? {
                    return Ok(code);
                }
                let mut code = self.compile_c(e, env)?;
                code.push(Instruction::Eval);
                Ok(code)
            }
        }
    }

    /// Lazy context.
    pub fn compile_c(&mut self, e: &Expr, env: &Env) -> CResult<Vec<Instruction>> {
        if let Some(code) = self.saturated_constructor(e, env)? {
            return Ok(code);
        }
        match &e.kind {
            ExprKind::Num(n) => Ok(vec![Instruction::PushInt(*n)]),
            ExprKind::Var(name) => match env.get(name) {
                Some(offset) => Ok(vec![Instruction::Push(offset)]),
                None if self.globals.contains(name) => Ok(vec![Instruction::push_global(name)]),
                None => Err(CompileError::UnboundGlobal(name.clone())),
            },
            ExprKind::App(fun, arg) => {
                let mut code = self.compile_c(arg, env)?;
                code.extend(self.compile_c(fun, &env.shift(1))?);
                code.push(Instruction::Mkap);
                Ok(code)
            }
            ExprKind::Let(defns, body) => {
                let mut code = self.let_defns(defns, env)?;
                code.extend(self.compile_c(body, &let_env(defns, env))?);
                code.push(Instruction::Slide(defns.len()));
                Ok(code)
            }
            ExprKind::LetRec(defns, body) => {
                let (mut code, inner) = self.letrec_defns(defns, env)?;
                code.extend(self.compile_c(body, &inner)?);
                code.push(Instruction::Slide(defns.len()));
                Ok(code)
            }
            ExprKind::BinOp(op, left, right) => {
                let app = Expr::apply(primitive(op.symbol(), e.span), [(**left).clone(), (**right).clone()]);
                self.compile_c(&app, env)
            }
            ExprKind::Neg(inner) => {
                let app = Expr::app(primitive("negate", e.span), (**inner).clone());
                self.compile_c(&app, env)
            }
            ExprKind::If(c, t, f) => {
                let app = Expr::apply(primitive("if", e.span), [(**c).clone(), (**t).clone(), (**f).clone()]);
                self.compile_c(&app, env)
            }
            ExprKind::Case(..) => {
                let app = self.lift_case(e, env)?;
                self.compile_c(&app, env)
            }
            ExprKind::Constr { .. } => unreachable!("constructors are handled by saturated_constructor"),
        }
    }

    pub fn compile_alts(&mut self, alts: &[Alt], env: &Env) -> CResult<Vec<(u32, Code)>> {
        alts.iter().map(|alt| self.compile_alt(alt, env)).collect()
    }

    pub fn compile_alt(&mut self, alt: &Alt, env: &Env) -> CResult<(u32, Code)> {
        let n = alt.binders.len();
        let inner = alt
            .binders
            .iter()
            .enumerate()
            .fold(env.shift(n), |acc, (i, b)| acc.bind(b, i));
        let mut code = vec![Instruction::Split(n)];
        code.extend(self.compile_e(&alt.body, &inner)?);
        code.push(Instruction::Slide(n));
        Ok((alt.tag, code.into()))
    }

    fn let_defns(&mut self, defns: &[Defn], env: &Env) -> CResult<Vec<Instruction>> {
        let mut code = Vec::new();
        for (i, d) in defns.iter().enumerate() {
            code.extend(self.compile_c(&d.expr, &env.shift(i))?);
        }
        Ok(code)
    }

    fn letrec_defns(&mut self, defns: &[Defn], env: &Env) -> CResult<(Vec<Instruction>, Env)> {
        let n = defns.len();
        let inner = let_env(defns, env);
        let mut code = vec![Instruction::Alloc(n)];
        for (i, d) in defns.iter().enumerate() {
            code.extend(self.compile_c(&d.expr, &inner)?);
            code.push(Instruction::Update(n - 1 - i));
        }
        Ok((code, inner))
    }

    /// Code for `Pack{t,a} e1 … ea` if `e` is a constructor application.
    /// A constructor applied to the wrong number of arguments is an error.
    fn saturated_constructor(&mut self, e: &Expr, env: &Env) -> CResult<Option<Vec<Instruction>>> {
        let (head, args) = e.spine();
        let ExprKind::Constr { tag, arity } = head.kind else {
            return Ok(None);
        };
        if args.len() != arity as usize {
            return Err(CompileError::UnsaturatedConstructor { tag, arity, supplied: args.len(), span: e.span });
        }
        let mut code = Vec::new();
        for (shift, arg) in args.iter().rev().enumerate() {
            code.extend(self.compile_c(arg, &env.shift(shift))?);
        }
        code.push(Instruction::Pack { tag, arity });
        Ok(Some(code))
    }

    /// Moves a `case` found in lazy position into a fresh supercombinator
    /// over its free locals, returning the application that replaces it.
    fn lift_case(&mut self, e: &Expr, env: &Env) -> CResult<Expr> {
        let mut free = BTreeSet::new();
        free_vars(e, &mut Vec::new(), &mut free);
        let params: Vec<&str> = free.iter().map(String::as_str).filter(|v| env.contains(v)).collect();
        self.next_lifted += 1;
        let name = format!("case${}", self.next_lifted);
        self.globals.insert(name.clone());
        let sc = CoreSC { name: name.clone(), params: params.iter().map(|p| p.to_string()).collect(), body: e.clone(), span: e.span };
        let compiled = self.compile_sc(&sc)?;
        self.lifted.push(compiled);
        Ok(Expr::apply(Expr::with_span(ExprKind::Var(name), e.span), params.iter().map(|p| Expr::var(p))))
    }
}

/// `ρ' = ρ⁺ⁿ[x1 ↦ n−1, …, xn ↦ 0]`.
fn let_env(defns: &[Defn], env: &Env) -> Env {
    let n = defns.len();
    defns
        .iter()
        .enumerate()
        .fold(env.shift(n), |acc, (i, d)| acc.bind(&d.name, n - 1 - i))
}

fn primitive(name: &str, span: SourceSpan) -> Expr {
    Expr::with_span(ExprKind::Var(name.to_string()), span)
}

fn binop_instruction(op: BinOp) -> Instruction {
    match op {
        BinOp::Add => Instruction::Add,
        BinOp::Sub => Instruction::Sub,
        BinOp::Mul => Instruction::Mul,
        BinOp::Div => Instruction::Div,
        BinOp::Lt => Instruction::Lt,
        BinOp::Neq => Instruction::Neq,
    }
}

fn free_vars<'e>(e: &'e Expr, bound: &mut Vec<&'e str>, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Var(v) => {
            if !bound.contains(&v.as_str()) {
                out.insert(v.clone());
            }
        }
        ExprKind::Num(_) | ExprKind::Constr { .. } => {}
        ExprKind::App(a, b) | ExprKind::BinOp(_, a, b) => {
            free_vars(a, bound, out);
            free_vars(b, bound, out);
        }
        ExprKind::Neg(a) => free_vars(a, bound, out),
        ExprKind::If(a, b, c) => {
            free_vars(a, bound, out);
            free_vars(b, bound, out);
            free_vars(c, bound, out);
        }
        ExprKind::Let(defns, body) | ExprKind::LetRec(defns, body) => {
            let mark = bound.len();
            let recursive = matches!(e.kind, ExprKind::LetRec(..));
            if recursive {
                bound.extend(defns.iter().map(|d| d.name.as_str()));
            }
            for d in defns {
                free_vars(&d.expr, bound, out);
            }
            bound.extend(defns.iter().map(|d| d.name.as_str()));
            free_vars(body, bound, out);
            bound.truncate(mark);
        }
        ExprKind::Case(scrutinee, alts) => {
            free_vars(scrutinee, bound, out);
            for alt in alts {
                let mark = bound.len();
                bound.extend(alt.binders.iter().map(String::as_str));
                free_vars(&alt.body, bound, out);
                bound.truncate(mark);
            }
        }
    }
}

/// Compiled bodies of the primitive globals.
pub fn primitive_globals() -> Vec<CompiledGlobal> {
    use Instruction::*;
    let mut out: Vec<CompiledGlobal> = BinOp::ALL
        .iter()
        .map(|op| CompiledGlobal {
            name: op.symbol().to_string(),
            arity: 2,
            code: vec![Push(1), Eval, Push(1), Eval, binop_instruction(*op), Update(2), Pop(2), Unwind].into(),
        })
        .collect();
    out.push(CompiledGlobal {
        name: "negate".to_string(),
        arity: 1,
        code: vec![Push(0), Eval, Neg, Update(1), Pop(1), Unwind].into(),
    });
    out.push(CompiledGlobal {
        name: "if".to_string(),
        arity: 3,
        code: vec![Push(0), Eval, Cond(vec![Push(1)].into(), vec![Push(2)].into()), Update(3), Pop(3), Unwind].into(),
    });
    out
}

/// Validates and compiles every global of a program.
pub fn compile_globals(p: &CoreProgram) -> Result<CompiledProgram, CompileError> {
    let diags = validate_program(p);
    if !diags.is_empty() {
        return Err(CompileError::Invalid(diags));
    }
    let mut compiler = Compiler::for_program(p);
    let mut globals = p.supercombinators.iter().map(|sc| compiler.compile_sc(sc)).collect::<CResult<Vec<_>>>()?;
    globals.extend(compiler.take_lifted());
    globals.extend(primitive_globals());
    Ok(CompiledProgram { globals })
}

/// Compiles a program into the initial machine state, ready to evaluate
/// `main`.
pub fn compile_program(p: &CoreProgram) -> Result<MachineState, CompileError> {
    if let Some(d) = check_entry_point(p) {
        let mut diags = validate_program(p);
        diags.push(d);
        return Err(CompileError::Invalid(diags));
    }
    Ok(MachineState::new(&compile_globals(p)?))
}
