//! A compiler from a small lazy functional language to G-machine code,
//! and the graph-reduction machine that runs it.
//!
//! ```
//! use gmachine::{compile_program, parse_program, FinalResult};
//!
//! let program = parse_program("double x = x + x; main = double (1+2)").unwrap();
//! let mut machine = compile_program(&program).unwrap();
//! assert_eq!(machine.run(10_000), Ok(FinalResult::Number(6)));
//! ```

pub mod ast;
pub mod compiler;
pub mod instruction;
pub mod machine;
pub mod oracle;
pub mod parser;
pub mod value;

pub use ast::{check_entry_point, validate_program, CoreProgram, CoreSC, Diagnostic, DiagnosticCode, Expr, ExprKind};
pub use compiler::{compile_globals, compile_program, CompileError, CompiledGlobal, CompiledProgram};
pub use instruction::{Code, InstrKind, Instruction};
pub use machine::{force_deep, FinalResult, MachineError, MachineState, Rule, Stats, TraceRecord};
pub use parser::{parse_program, ParseError};
pub use value::DeepValue;
