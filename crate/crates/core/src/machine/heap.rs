use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::MachineError;
use crate::instruction::Code;

/// Index of a heap cell. Address 0 is the null sentinel and never refers
/// to an allocated node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Addr(pub u32);

impl Addr {
    pub const NULL: Addr = Addr(0);

    pub fn is_null(self) -> bool {
        self == Addr::NULL
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_null() {
            f.write_str("hNull")
        } else {
            write!(f, "#{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Num(i64),
    Global { name: Arc<str>, arity: usize, code: Code },
    App(Addr, Addr),
    Constr { tag: u32, fields: Vec<Addr> },
    Ind(Addr),
}

impl Node {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Node::Num(_) => "NNum",
            Node::Global { .. } => "NGlobal",
            Node::App(..) => "NApp",
            Node::Constr { .. } => "NConstr",
            Node::Ind(_) => "NInd",
        }
    }

    /// Addresses this node points at.
    pub fn children(&self) -> Vec<Addr> {
        match self {
            Node::Num(_) | Node::Global { .. } => Vec::new(),
            Node::App(f, a) => vec![*f, *a],
            Node::Constr { fields, .. } => fields.clone(),
            Node::Ind(a) => vec![*a],
        }
    }

    /// The node in the same notation as a stuck-state dump, `addr` last.
    pub fn describe(&self, addr: Addr) -> String {
        match self {
            Node::Num(n) => format!("nNum({n},{addr})"),
            Node::Global { arity, code, .. } => format!("nGlobal({arity},{code},{addr})"),
            Node::App(f, a) => format!("nApp({f},{a},{addr})"),
            Node::Constr { tag, fields } => {
                let fs: Vec<String> = fields.iter().map(|a| a.to_string()).collect();
                format!("nConstr({tag},[{}],{addr})", fs.join(","))
            }
            Node::Ind(t) => format!("nInd({t},{addr})"),
        }
    }
}

/// Append-only node store. Nodes are never freed; `Update` overwrites a
/// cell in place with an indirection.
#[derive(Debug, Clone)]
pub struct Heap {
    // slot 0 is the null sentinel
    nodes: Vec<Node>,
}

impl Default for Heap {
    fn default() -> Self {
        Heap { nodes: vec![Node::Ind(Addr::NULL)] }
    }
}

impl Heap {
    pub fn new() -> Heap {
        Heap::default()
    }

    pub fn alloc(&mut self, node: Node) -> Addr {
        let addr = Addr(u32::try_from(self.nodes.len()).expect("heap address space exhausted"));
        self.nodes.push(node);
        addr
    }

    pub fn get(&self, addr: Addr) -> Result<&Node, MachineError> {
        if addr.is_null() {
            return Err(MachineError::NullDeref);
        }
        self.nodes.get(addr.index()).ok_or(MachineError::DanglingAddress(addr))
    }

    pub fn contains(&self, addr: Addr) -> bool {
        !addr.is_null() && addr.index() < self.nodes.len()
    }

    pub(crate) fn set(&mut self, addr: Addr, node: Node) -> Result<(), MachineError> {
        if addr.is_null() {
            return Err(MachineError::NullDeref);
        }
        let slot = self.nodes.get_mut(addr.index()).ok_or(MachineError::DanglingAddress(addr))?;
        *slot = node;
        Ok(())
    }

    /// Number of allocated cells, excluding the sentinel.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Allocated addresses with their nodes, in allocation order.
    pub fn iter(&self) -> impl Iterator<Item = (Addr, &Node)> {
        self.nodes.iter().enumerate().skip(1).map(|(i, n)| (Addr(i as u32), n))
    }

    /// Follows indirections from `addr` to the first non-indirection node.
    pub fn chase(&self, addr: Addr) -> Result<Addr, MachineError> {
        let mut cur = addr;
        // A chain longer than the heap must revisit a cell.
        for _ in 0..=self.nodes.len() {
            match self.get(cur)? {
                Node::Ind(next) => cur = *next,
                _ => return Ok(cur),
            }
        }
        Err(MachineError::CyclicIndirection(addr))
    }
}
