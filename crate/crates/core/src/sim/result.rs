use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::cache::CacheEvent;

use super::op::Program;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InstrTiming {
    pub alloc: Option<u64>,
    pub issue: Option<u64>,
    pub complete: Option<u64>,
    pub retire: Option<u64>,
    pub squashed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResult {
    pub timings: Vec<InstrTiming>,
    /// Retirement cycle of the last retired instruction.
    pub total_cycles: u64,
    /// Cache events produced by this run, in order.
    pub cache_events: Vec<CacheEvent>,
    /// Misses at L1 and at the LLC.
    pub misses: [usize; 2],
    /// Latest completion among non-squashed instructions, per tag.
    pub path_completion: BTreeMap<String, u64>,
    pub squash_cycle: Option<u64>,
    pub flushes: usize,
}

impl SimResult {
    pub fn l1_misses(&self) -> usize {
        self.misses[0]
    }

    /// Instructions allocated and not yet retired or squashed at cycle `c`.
    pub fn rob_occupancy(&self, c: u64) -> usize {
        self.timings
            .iter()
            .filter(|t| {
                let Some(a) = t.alloc else { return false };
                let freed = match (t.retire, t.squashed) {
                    (Some(r), _) => Some(r),
                    (None, true) => Some(u64::MAX),
                    (None, false) => None,
                };
                a <= c && freed.is_none_or(|f| c < f)
            })
            .count()
    }

    pub fn instructions_csv(&self, p: &Program) -> String {
        let mut s = String::from("id,kind,tag,alloc,issue,complete,retire,squashed\n");
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (ins, t) in p.instructions.iter().zip(&self.timings) {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                ins.id,
                ins.kind,
                ins.tag.as_deref().unwrap_or(""),
                opt(t.alloc),
                opt(t.issue),
                opt(t.complete),
                opt(t.retire),
                t.squashed as u8
            );
        }
        s
    }
}
