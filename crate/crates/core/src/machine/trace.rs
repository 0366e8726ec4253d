use std::fmt;

use serde::Serialize;

use crate::instruction::InstrKind;

/// The transition rule a step applied. Names follow the reference trace
/// listings, so a run can be compared line by line with them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    PushGlobal,
    PushInt,
    Push,
    Mkap,
    Slide,
    Update,
    Pop,
    Alloc,
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Neq,
    Neg,
    Cond,
    Eval,
    Pack,
    Casejump,
    Split,
    UnwindInt,
    UnwindConstr,
    UnwindApp,
    UnwindGlobalWithEmptyDump,
    UnwindGlobalWithNonEmptyDump,
    UnwindPartialApp,
    TerminateWithNum,
    TerminateWithConstr,
    TerminateWithFunction,
}

impl Rule {
    pub const ALL: [Rule; 29] = [
        Rule::PushGlobal,
        Rule::PushInt,
        Rule::Push,
        Rule::Mkap,
        Rule::Slide,
        Rule::Update,
        Rule::Pop,
        Rule::Alloc,
        Rule::Add,
        Rule::Sub,
        Rule::Mul,
        Rule::Div,
        Rule::Lt,
        Rule::Neq,
        Rule::Neg,
        Rule::Cond,
        Rule::Eval,
        Rule::Pack,
        Rule::Casejump,
        Rule::Split,
        Rule::UnwindInt,
        Rule::UnwindConstr,
        Rule::UnwindApp,
        Rule::UnwindGlobalWithEmptyDump,
        Rule::UnwindGlobalWithNonEmptyDump,
        Rule::UnwindPartialApp,
        Rule::TerminateWithNum,
        Rule::TerminateWithConstr,
        Rule::TerminateWithFunction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::PushGlobal => "pushGlobal",
            Rule::PushInt => "pushInt",
            Rule::Push => "push",
            Rule::Mkap => "mkap",
            Rule::Slide => "slide",
            Rule::Update => "update",
            // every Pop is logged as pop0 in the reference listings
            Rule::Pop => "pop0",
            Rule::Alloc => "alloc",
            Rule::Add => "add",
            Rule::Sub => "sub",
            Rule::Mul => "mul",
            Rule::Div => "div",
            Rule::Lt => "lt",
            Rule::Neq => "neq",
            Rule::Neg => "neg",
            Rule::Cond => "cond",
            Rule::Eval => "eval",
            Rule::Pack => "pack",
            Rule::Casejump => "casejump",
            Rule::Split => "split",
            Rule::UnwindInt => "unwindInt",
            Rule::UnwindConstr => "unwindConstr",
            Rule::UnwindApp => "unwindApp",
            Rule::UnwindGlobalWithEmptyDump => "unwindGlobalWithEmptyDump",
            Rule::UnwindGlobalWithNonEmptyDump => "unwindGlobalWithNonEmptyDump",
            Rule::UnwindPartialApp => "unwindPartialApp",
            Rule::TerminateWithNum => "terminateWithNum",
            Rule::TerminateWithConstr => "terminateWithConstr",
            Rule::TerminateWithFunction => "terminateWithFunction",
        }
    }

    /// The instruction whose execution this rule accounts for. Every
    /// unwinding and terminating rule is charged to `Unwind`.
    pub fn instruction(self) -> InstrKind {
        match self {
            Rule::PushGlobal => InstrKind::PushGlobal,
            Rule::PushInt => InstrKind::PushInt,
            Rule::Push => InstrKind::Push,
            Rule::Mkap => InstrKind::Mkap,
            Rule::Slide => InstrKind::Slide,
            Rule::Update => InstrKind::Update,
            Rule::Pop => InstrKind::Pop,
            Rule::Alloc => InstrKind::Alloc,
            Rule::Add => InstrKind::Add,
            Rule::Sub => InstrKind::Sub,
            Rule::Mul => InstrKind::Mul,
            Rule::Div => InstrKind::Div,
            Rule::Lt => InstrKind::Lt,
            Rule::Neq => InstrKind::Neq,
            Rule::Neg => InstrKind::Neg,
            Rule::Cond => InstrKind::Cond,
            Rule::Eval => InstrKind::Eval,
            Rule::Pack => InstrKind::Pack,
            Rule::Casejump => InstrKind::Casejump,
            Rule::Split => InstrKind::Split,
            Rule::UnwindInt
            | Rule::UnwindConstr
            | Rule::UnwindApp
            | Rule::UnwindGlobalWithEmptyDump
            | Rule::UnwindGlobalWithNonEmptyDump
            | Rule::UnwindPartialApp
            | Rule::TerminateWithNum
            | Rule::TerminateWithConstr
            | Rule::TerminateWithFunction => InstrKind::Unwind,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Rule::TerminateWithNum | Rule::TerminateWithConstr | Rule::TerminateWithFunction)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One executed transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    /// 1-based index of the step within the run.
    pub step: u64,
    pub rule: Rule,
    /// The instruction that was at the head of the code before the step.
    pub code_head: String,
    pub stack_depth: usize,
    pub dump_depth: usize,
}

impl TraceRecord {
    /// `---->rule`, the form used by the reference listings.
    pub fn line(&self) -> String {
        format!("---->{}", self.rule)
    }

    /// The rule line followed by a tab-separated summary of the state
    /// after the step.
    pub fn verbose_line(&self) -> String {
        format!(
            "---->{}\tstep={}\tinstr={}\tstack={}\tdump={}",
            self.rule, self.step, self.code_head, self.stack_depth, self.dump_depth
        )
    }
}
