use std::fmt::Write;

use super::{MachineState, Node};

/// Graphviz rendering of the stack and every heap node reachable from the
/// stack or the dump. Globals are drawn as boxes labelled with their name.
pub fn heap_dot(state: &MachineState) -> String {
    let mut out = String::from("digraph heap {\n  rankdir=TB;\n  node [fontname=\"monospace\"];\n");
    let roots = state.stack.iter().chain(state.dump.iter().flat_map(|d| d.stack.iter())).copied();
    for addr in state.reachable(roots) {
        let Ok(node) = state.heap.get(addr) else { continue };
        let id = addr.0;
        let (label, shape) = match node {
            Node::Num(n) => (format!("{n}"), "ellipse"),
            Node::Global { name, arity, .. } => (format!("{name}/{arity}"), "box"),
            Node::App(..) => ("@".to_string(), "circle"),
            Node::Constr { tag, fields } => (format!("Pack{{{tag},{}}}", fields.len()), "box"),
            Node::Ind(_) => ("#".to_string(), "diamond"),
        };
        let _ = writeln!(out, "  n{id} [label=\"{label}\\n{addr}\", shape={shape}];");
        match node {
            Node::App(f, a) => {
                let _ = writeln!(out, "  n{id} -> n{} [label=\"fun\"];", f.0);
                let _ = writeln!(out, "  n{id} -> n{} [label=\"arg\"];", a.0);
            }
            Node::Constr { fields, .. } => {
                for (i, f) in fields.iter().enumerate() {
                    let _ = writeln!(out, "  n{id} -> n{} [label=\"{}\"];", f.0, i + 1);
                }
            }
            Node::Ind(t) if !t.is_null() => {
                let _ = writeln!(out, "  n{id} -> n{} [style=dashed];", t.0);
            }
            _ => {}
        }
    }
    for (i, a) in state.stack.iter().rev().enumerate() {
        let _ = writeln!(out, "  s{i} [label=\"stack {i}\", shape=plaintext];");
        let _ = writeln!(out, "  s{i} -> n{} [color=blue];", a.0);
    }
    out.push_str("}\n");
    out
}
