//! A naive call-by-name evaluator used as a reference for the machine.
//!
//! Programs are evaluated by substitution on a private term type. Every
//! term handed to substitution is closed, so no renaming is needed. There
//! is no sharing: an argument used twice is evaluated twice.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use thiserror::Error;

use crate::ast::{validate_program, BinOp, CoreProgram, Expr, ExprKind};
use crate::value::DeepValue;

/// Nested strict evaluations allowed before giving up. Each level costs a
/// few native stack frames.
pub const DEFAULT_DEPTH_LIMIT: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("reduction budget exhausted")]
    FuelExhausted,
    #[error("division by zero")]
    DivisionByZero,
    #[error("no alternative for constructor tag {0}")]
    PatternMatchFailure(u32),
    #[error("arithmetic overflow")]
    ArithmeticOverflow,
    #[error("type error: {0}")]
    TypeError(String),
    #[error("evaluation nested deeper than {0}")]
    DepthExceeded(usize),
    #[error("invalid program: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Prim {
    Bin(BinOp),
    Negate,
    If,
}

#[derive(Debug)]
enum Term {
    Num(i64),
    Global(Rc<str>),
    Local(Rc<str>),
    Prim(Prim),
    Constr { tag: u32, arity: usize },
    App(Rc<Term>, Rc<Term>),
    Let(Vec<(Rc<str>, Rc<Term>)>, Rc<Term>),
    LetRec(Rc<[(Rc<str>, Rc<Term>)]>, Rc<Term>),
    Case(Rc<Term>, Vec<(u32, Vec<Rc<str>>, Rc<Term>)>),
}

/// An unevaluated closed term.
#[derive(Debug, Clone)]
pub struct Thunk(Rc<Term>);

/// A weak head normal form.
#[derive(Debug, Clone)]
pub enum Value {
    IntV(i64),
    ConstrV { tag: u32, fields: Vec<Thunk> },
    FunV { name: String, arity: usize, applied: usize },
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::IntV(n) => Some(*n),
            _ => None,
        }
    }
}

struct Sc {
    params: Vec<Rc<str>>,
    body: Rc<Term>,
}

/// Evaluator state for one program.
pub struct Oracle {
    scs: HashMap<Rc<str>, Sc>,
    fuel: u64,
    depth: usize,
    depth_limit: usize,
}

/// Evaluates `main` to weak head normal form within `fuel` reductions.
pub fn eval_cbn(p: &CoreProgram, fuel: u64) -> Result<Value, OracleError> {
    Oracle::new(p, fuel)?.eval_main()
}

/// Evaluates `main` and forces the result `depth` constructor levels deep.
pub fn eval_cbn_deep(p: &CoreProgram, fuel: u64, depth: usize) -> Result<DeepValue, OracleError> {
    let mut o = Oracle::new(p, fuel)?;
    let v = o.eval_main()?;
    o.force(v, depth)
}

impl Oracle {
    pub fn new(p: &CoreProgram, fuel: u64) -> Result<Oracle, OracleError> {
        if let Some(d) = validate_program(p).into_iter().next() {
            return Err(OracleError::Invalid(format!("{:?} {}", d.code, d.subject)));
        }
        let mut scs = HashMap::new();
        for sc in &p.supercombinators {
            let params: Vec<Rc<str>> = sc.params.iter().map(|s| Rc::from(s.as_str())).collect();
            let locals: HashSet<Rc<str>> = params.iter().cloned().collect();
            let body = convert(&sc.body, &locals);
            scs.insert(Rc::from(sc.name.as_str()), Sc { params, body });
        }
        if !scs.contains_key("main") {
            return Err(OracleError::Invalid("no main".to_string()));
        }
        Ok(Oracle { scs, fuel, depth: 0, depth_limit: DEFAULT_DEPTH_LIMIT })
    }

    pub fn with_depth_limit(mut self, limit: usize) -> Oracle {
        self.depth_limit = limit;
        self
    }

    /// Reductions left.
    pub fn fuel(&self) -> u64 {
        self.fuel
    }

    pub fn eval_main(&mut self) -> Result<Value, OracleError> {
        self.whnf(Rc::new(Term::Global("main".into())))
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        if self.fuel == 0 {
            return Err(OracleError::FuelExhausted);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn whnf(&mut self, t: Rc<Term>) -> Result<Value, OracleError> {
        if self.depth >= self.depth_limit {
            return Err(OracleError::DepthExceeded(self.depth_limit));
        }
        self.depth += 1;
        let r = self.whnf_inner(t);
        self.depth -= 1;
        r
    }

    fn int(&mut self, t: Rc<Term>) -> Result<i64, OracleError> {
        match self.whnf(t)? {
            Value::IntV(n) => Ok(n),
            other => Err(OracleError::TypeError(format!("expected a number, got {other:?}"))),
        }
    }

    fn whnf_inner(&mut self, mut t: Rc<Term>) -> Result<Value, OracleError> {
        // arguments of the spine, innermost (first) argument last
        let mut args: Vec<Rc<Term>> = Vec::new();
        loop {
            match &*t {
                Term::App(f, a) => {
                    args.push(a.clone());
                    t = f.clone();
                }
                Term::Num(n) => {
                    return if args.is_empty() {
                        Ok(Value::IntV(*n))
                    } else {
                        Err(OracleError::TypeError(format!("number {n} applied to arguments")))
                    };
                }
                Term::Local(x) => return Err(OracleError::TypeError(format!("free variable {x}"))),
                Term::Global(name) => {
                    let sc = self.scs.get(name).ok_or_else(|| OracleError::TypeError(format!("unknown global {name}")))?;
                    let n = sc.params.len();
                    if args.len() < n {
                        return Ok(Value::FunV { name: name.to_string(), arity: n, applied: args.len() });
                    }
                    let mut sub = HashMap::new();
                    for p in &sc.params {
                        sub.insert(p.clone(), args.pop().unwrap());
                    }
                    let body = subst(&sc.body, &sub);
                    self.tick()?;
                    t = body;
                }
                Term::Constr { tag, arity } => {
                    if args.len() != *arity {
                        return Err(OracleError::TypeError(format!(
                            "constructor Pack{{{tag},{arity}}} applied to {} argument(s)",
                            args.len()
                        )));
                    }
                    let fields = args.into_iter().rev().map(Thunk).collect();
                    return Ok(Value::ConstrV { tag: *tag, fields });
                }
                Term::Prim(p) => {
                    let arity = match p {
                        Prim::Bin(_) => 2,
                        Prim::Negate => 1,
                        Prim::If => 3,
                    };
                    if args.len() < arity {
                        let name = match p {
                            Prim::Bin(op) => op.symbol(),
                            Prim::Negate => "negate",
                            Prim::If => "if",
                        };
                        return Ok(Value::FunV { name: name.to_string(), arity, applied: args.len() });
                    }
                    self.tick()?;
                    let a1 = args.pop().unwrap();
                    match p {
                        Prim::Bin(op) => {
                            let a2 = args.pop().unwrap();
                            let (x, y) = (self.int(a1)?, self.int(a2)?);
                            t = Rc::new(Term::Num(arith(*op, x, y)?));
                        }
                        Prim::Negate => {
                            let x = self.int(a1)?;
                            t = Rc::new(Term::Num(x.checked_neg().ok_or(OracleError::ArithmeticOverflow)?));
                        }
                        Prim::If => {
                            let (then, els) = (args.pop().unwrap(), args.pop().unwrap());
                            t = match self.int(a1)? {
                                1 => then,
                                0 => els,
                                n => return Err(OracleError::TypeError(format!("condition evaluated to {n}"))),
                            };
                        }
                    }
                }
                Term::Let(defs, body) => {
                    let sub: HashMap<_, _> = defs.iter().cloned().collect();
                    self.tick()?;
                    t = subst(body, &sub);
                }
                Term::LetRec(defs, body) => {
                    let sub: HashMap<_, _> = defs
                        .iter()
                        .map(|(x, e)| (x.clone(), Rc::new(Term::LetRec(defs.clone(), e.clone()))))
                        .collect();
                    self.tick()?;
                    t = subst(body, &sub);
                }
                Term::Case(scrut, alts) => {
                    let (tag, fields) = match self.whnf(scrut.clone())? {
                        Value::ConstrV { tag, fields } => (tag, fields),
                        other => return Err(OracleError::TypeError(format!("case on non-constructor {other:?}"))),
                    };
                    let (_, binders, body) =
                        alts.iter().find(|(t, _, _)| *t == tag).ok_or(OracleError::PatternMatchFailure(tag))?;
                    if binders.len() != fields.len() {
                        return Err(OracleError::TypeError(format!("alternative <{tag}> binds {} fields", binders.len())));
                    }
                    let sub: HashMap<_, _> = binders.iter().cloned().zip(fields.into_iter().map(|f| f.0)).collect();
                    self.tick()?;
                    t = subst(body, &sub);
                }
            }
        }
    }

    /// Forces a value `depth` constructor levels deep, marking components
    /// below the limit as truncated.
    pub fn force(&mut self, v: Value, depth: usize) -> Result<DeepValue, OracleError> {
        match v {
            Value::IntV(n) => Ok(DeepValue::Num(n)),
            Value::FunV { name, arity, .. } => Ok(DeepValue::Function { name, arity }),
            Value::ConstrV { tag, fields } if fields.is_empty() => Ok(DeepValue::Constr { tag, fields: vec![] }),
            Value::ConstrV { .. } if depth == 0 => Ok(DeepValue::Truncated),
            Value::ConstrV { tag, fields } => {
                let mut out = Vec::with_capacity(fields.len());
                for f in fields {
                    let v = self.whnf(f.0)?;
                    out.push(self.force(v, depth - 1)?);
                }
                Ok(DeepValue::Constr { tag, fields: out })
            }
        }
    }
}

fn arith(op: BinOp, x: i64, y: i64) -> Result<i64, OracleError> {
    let r = match op {
        BinOp::Add => x.checked_add(y),
        BinOp::Sub => x.checked_sub(y),
        BinOp::Mul => x.checked_mul(y),
        BinOp::Div if y == 0 => return Err(OracleError::DivisionByZero),
        BinOp::Div => x.checked_div(y),
        BinOp::Lt => Some(i64::from(x < y)),
        BinOp::Neq => Some(i64::from(x != y)),
    };
    r.ok_or(OracleError::ArithmeticOverflow)
}

fn prim(name: &str) -> Option<Prim> {
    match name {
        "negate" => Some(Prim::Negate),
        "if" => Some(Prim::If),
        s => BinOp::from_symbol(s).map(Prim::Bin),
    }
}

fn app(f: Rc<Term>, args: impl IntoIterator<Item = Rc<Term>>) -> Rc<Term> {
    args.into_iter().fold(f, |f, a| Rc::new(Term::App(f, a)))
}

fn convert(e: &Expr, locals: &HashSet<Rc<str>>) -> Rc<Term> {
    let with = |names: &mut dyn Iterator<Item = &String>| {
        let mut l = locals.clone();
        l.extend(names.map(|n| Rc::from(n.as_str())));
        l
    };
    Rc::new(match &e.kind {
        ExprKind::Var(x) if locals.contains(x.as_str()) => Term::Local(x.as_str().into()),
        ExprKind::Var(x) => match prim(x) {
            Some(p) => Term::Prim(p),
            None => Term::Global(x.as_str().into()),
        },
        ExprKind::Num(n) => Term::Num(*n),
        ExprKind::App(f, a) => Term::App(convert(f, locals), convert(a, locals)),
        ExprKind::BinOp(op, a, b) => {
            return app(Rc::new(Term::Prim(Prim::Bin(*op))), [convert(a, locals), convert(b, locals)]);
        }
        ExprKind::Neg(a) => Term::App(Rc::new(Term::Prim(Prim::Negate)), convert(a, locals)),
        ExprKind::If(c, t, f) => {
            return app(Rc::new(Term::Prim(Prim::If)), [convert(c, locals), convert(t, locals), convert(f, locals)]);
        }
        ExprKind::Constr { tag, arity } => Term::Constr { tag: *tag, arity: *arity as usize },
        ExprKind::Let(defs, body) => {
            let inner = with(&mut defs.iter().map(|d| &d.name));
            let ds = defs.iter().map(|d| (Rc::from(d.name.as_str()), convert(&d.expr, locals))).collect();
            Term::Let(ds, convert(body, &inner))
        }
        ExprKind::LetRec(defs, body) => {
            let inner = with(&mut defs.iter().map(|d| &d.name));
            let ds: Vec<_> = defs.iter().map(|d| (Rc::from(d.name.as_str()), convert(&d.expr, &inner))).collect();
            Term::LetRec(ds.into(), convert(body, &inner))
        }
        ExprKind::Case(scrut, alts) => {
            let alts = alts
                .iter()
                .map(|a| {
                    let inner = with(&mut a.binders.iter());
                    (a.tag, a.binders.iter().map(|b| Rc::from(b.as_str())).collect(), convert(&a.body, &inner))
                })
                .collect();
            Term::Case(convert(scrut, locals), alts)
        }
    })
}

/// Replaces free locals by closed terms.
fn subst(t: &Rc<Term>, sub: &HashMap<Rc<str>, Rc<Term>>) -> Rc<Term> {
    if sub.is_empty() {
        return t.clone();
    }
    let without = |names: &mut dyn Iterator<Item = &Rc<str>>| {
        let mut s = sub.clone();
        for n in names {
            s.remove(n);
        }
        s
    };
    match &**t {
        Term::Local(x) => sub.get(x).cloned().unwrap_or_else(|| t.clone()),
        Term::Num(_) | Term::Global(_) | Term::Prim(_) | Term::Constr { .. } => t.clone(),
        Term::App(f, a) => Rc::new(Term::App(subst(f, sub), subst(a, sub))),
        Term::Let(defs, body) => {
            let inner = without(&mut defs.iter().map(|d| &d.0));
            let ds = defs.iter().map(|(x, e)| (x.clone(), subst(e, sub))).collect();
            Rc::new(Term::Let(ds, subst(body, &inner)))
        }
        Term::LetRec(defs, body) => {
            let inner = without(&mut defs.iter().map(|d| &d.0));
            let ds: Vec<_> = defs.iter().map(|(x, e)| (x.clone(), subst(e, &inner))).collect();
            Rc::new(Term::LetRec(ds.into(), subst(body, &inner)))
        }
        Term::Case(scrut, alts) => {
            let alts = alts
                .iter()
                .map(|(tag, bs, body)| (*tag, bs.clone(), subst(body, &without(&mut bs.iter()))))
                .collect();
            Rc::new(Term::Case(subst(scrut, sub), alts))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn eval(src: &str) -> Result<Value, OracleError> {
        eval_cbn(&parse_program(src).unwrap(), 1_000_000)
    }

    #[test]
    fn arithmetic() {
        assert_eq!(eval("main = 1 + 2").unwrap().as_int(), Some(3));
        assert_eq!(eval("main = 10 - 3 * 2").unwrap().as_int(), Some(4));
        assert_eq!(eval("main = negate 4 / 2").unwrap().as_int(), Some(-2));
    }

    #[test]
    fn factorial() {
        let v = eval("fac n = if n < 1 then 1 else n * fac (n-1); main = fac 5").unwrap();
        assert_eq!(v.as_int(), Some(120));
    }

    #[test]
    fn laziness() {
        assert_eq!(eval("k x y = x; main = k 2 (1/0)").unwrap().as_int(), Some(2));
        assert_eq!(eval("main = 1/0").unwrap_err(), OracleError::DivisionByZero);
    }

    #[test]
    fn locals_shadow_globals() {
        let v = eval("x = 100; f x = x + 1; main = let x = 5 in f x").unwrap();
        assert_eq!(v.as_int(), Some(6));
    }

    #[test]
    fn letrec_and_case() {
        let src = "main = letrec xs = Pack{2,2} 1 xs in case xs of <1> -> 0; <2> h t -> case t of <1> -> 0; <2> a b -> h + a";
        assert_eq!(eval(src).unwrap().as_int(), Some(2));
    }

    #[test]
    fn missing_alternative() {
        assert_eq!(eval("main = case Pack{3,0} of <1> -> 0").unwrap_err(), OracleError::PatternMatchFailure(3));
    }

    #[test]
    fn fuel_runs_out_on_divergence() {
        assert_eq!(eval("loop x = loop x; main = loop 0").unwrap_err(), OracleError::FuelExhausted);
    }

    #[test]
    fn deep_forcing_truncates() {
        let p = parse_program("from n = Pack{2,2} n (from (n+1)); main = from 1").unwrap();
        let v = eval_cbn_deep(&p, 100_000, 3).unwrap();
        assert_eq!(v.to_string(), "Pack{2,2}(1, Pack{2,2}(2, Pack{2,2}(3, ...)))");
    }

    #[test]
    fn partial_application_is_a_function() {
        assert!(matches!(eval("k x y = x; main = k 1").unwrap(), Value::FunV { arity: 2, applied: 1, .. }));
    }
}
