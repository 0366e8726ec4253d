use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::trace::Rule;
use crate::instruction::InstrKind;

/// Counters collected while the machine runs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub steps: u64,
    counts: [u64; InstrKind::ALL.len()],
    pub max_stack_depth: usize,
    pub max_dump_depth: usize,
    /// Heap cells allocated by transitions (initial globals excluded).
    pub allocations: u64,
}

impl Stats {
    pub(crate) fn record(&mut self, rule: Rule, stack_depth: usize, dump_depth: usize, allocated: u64) {
        self.steps += 1;
        self.counts[rule.instruction().index()] += 1;
        self.max_stack_depth = self.max_stack_depth.max(stack_depth);
        self.max_dump_depth = self.max_dump_depth.max(dump_depth);
        self.allocations += allocated;
    }

    /// How many steps were charged to the given instruction.
    pub fn count(&self, kind: InstrKind) -> u64 {
        self.counts[kind.index()]
    }

    pub fn counts(&self) -> impl Iterator<Item = (InstrKind, u64)> + '_ {
        InstrKind::ALL.iter().map(move |k| (*k, self.counts[k.index()]))
    }

    /// The single-object machine-readable form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&StatsRecord::from(self)).expect("stats serialise")
    }
}

#[derive(Serialize)]
struct StatsRecord {
    steps: u64,
    instructions: BTreeMap<&'static str, u64>,
    max_stack_depth: usize,
    max_dump_depth: usize,
    allocations: u64,
}

impl From<&Stats> for StatsRecord {
    fn from(s: &Stats) -> Self {
        StatsRecord {
            steps: s.steps,
            instructions: s.counts().map(|(k, n)| (k.name(), n)).collect(),
            max_stack_depth: s.max_stack_depth,
            max_dump_depth: s.max_dump_depth,
            allocations: s.allocations,
        }
    }
}

/// Flat `key=value` lines.
impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "steps={}", self.steps)?;
        writeln!(f, "max_stack_depth={}", self.max_stack_depth)?;
        writeln!(f, "max_dump_depth={}", self.max_dump_depth)?;
        writeln!(f, "allocations={}", self.allocations)?;
        for (k, n) in self.counts() {
            writeln!(f, "count.{}={n}", k.name())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_sum_to_steps() {
        let mut s = Stats::default();
        s.record(Rule::PushInt, 1, 0, 1);
        s.record(Rule::UnwindApp, 2, 0, 0);
        s.record(Rule::TerminateWithNum, 2, 0, 0);
        assert_eq!(s.steps, 3);
        assert_eq!(s.counts().map(|c| c.1).sum::<u64>(), 3);
        assert_eq!(s.count(InstrKind::Unwind), 2);
        assert_eq!(s.allocations, 1);
        assert_eq!(s.max_stack_depth, 2);
    }

    #[test]
    fn json_record_is_one_object() {
        let mut s = Stats::default();
        s.record(Rule::Add, 1, 1, 1);
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["steps"], 1);
        assert_eq!(v["instructions"]["add"], 1);
        assert!(!s.to_json().contains('\n'));
    }
}
