use std::fmt;

/// A result forced beyond weak head normal form, as far as a depth limit
/// allows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeepValue {
    Num(i64),
    Constr { tag: u32, fields: Vec<DeepValue> },
    Function { name: String, arity: usize },
    /// A component left unevaluated because the depth limit was reached.
    Truncated,
}

impl DeepValue {
    /// The numbers along a cons-list spine (`Pack{2,2} head tail`,
    /// terminated by any other value).
    pub fn list_heads(&self) -> Vec<&DeepValue> {
        let mut out = Vec::new();
        let mut cur = self;
        while let DeepValue::Constr { tag: 2, fields } = cur {
            if fields.len() != 2 {
                break;
            }
            out.push(&fields[0]);
            cur = &fields[1];
        }
        out
    }

    /// Equality up to truncation: a `Truncated` on either side matches
    /// anything.
    pub fn agrees_with(&self, other: &DeepValue) -> bool {
        match (self, other) {
            (DeepValue::Truncated, _) | (_, DeepValue::Truncated) => true,
            (DeepValue::Constr { tag: t1, fields: f1 }, DeepValue::Constr { tag: t2, fields: f2 }) => {
                t1 == t2 && f1.len() == f2.len() && f1.iter().zip(f2).all(|(a, b)| a.agrees_with(b))
            }
            (DeepValue::Function { arity: a, .. }, DeepValue::Function { arity: b, .. }) => a == b,
            _ => self == other,
        }
    }
}

impl fmt::Display for DeepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeepValue::Num(n) => write!(f, "{n}"),
            DeepValue::Constr { tag, fields } if fields.is_empty() => write!(f, "Pack{{{tag},0}}"),
            DeepValue::Constr { tag, fields } => {
                write!(f, "Pack{{{tag},{}}}(", fields.len())?;
                for (i, v) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            DeepValue::Function { name, arity } => write!(f, "<{name}>/{arity}"),
            DeepValue::Truncated => f.write_str("..."),
        }
    }
}
