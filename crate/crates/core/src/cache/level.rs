use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::plru::PlruTree;
use super::Line;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReplacementPolicy {
    TreePlru,
    TrueLru,
    Random { seed: u64 },
}

impl ReplacementPolicy {
    pub fn parse(s: &str, seed: u64) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plru" | "tree-plru" | "treeplru" => Some(Self::TreePlru),
            "lru" | "true-lru" | "truelru" => Some(Self::TrueLru),
            "random" => Some(Self::Random { seed }),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TreePlru => "plru",
            Self::TrueLru => "lru",
            Self::Random { .. } => "random",
        }
    }
}

impl fmt::Display for ReplacementPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetMeta {
    Plru(PlruTree),
    /// Way indices, least recently used first.
    Lru(Vec<usize>),
    None,
}

/// How a fill updates replacement state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillMode {
    #[default]
    Normal,
    /// Install without promoting the line, leaving it the next victim.
    Weak,
}

#[derive(Debug, Clone)]
pub struct CacheLevel {
    sets: usize,
    ways: usize,
    policy: ReplacementPolicy,
    lines: Vec<Option<Line>>,
    meta: Vec<SetMeta>,
    rng: ChaCha8Rng,
}

impl CacheLevel {
    pub fn new(sets: usize, ways: usize, policy: ReplacementPolicy) -> Self {
        assert!(sets >= 1 && ways >= 1);
        let meta = (0..sets)
            .map(|_| match policy {
                ReplacementPolicy::TreePlru => SetMeta::Plru(PlruTree::new(ways)),
                ReplacementPolicy::TrueLru => SetMeta::Lru((0..ways).collect()),
                ReplacementPolicy::Random { .. } => SetMeta::None,
            })
            .collect();
        let seed = match policy {
            ReplacementPolicy::Random { seed } => seed,
            _ => 0,
        };
        CacheLevel {
            sets,
            ways,
            policy,
            lines: vec![None; sets * ways],
            meta,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sets(&self) -> usize {
        self.sets
    }

    pub fn ways(&self) -> usize {
        self.ways
    }

    pub fn policy(&self) -> ReplacementPolicy {
        self.policy
    }

    pub fn set_of(&self, line: Line) -> usize {
        line.set_index(self.sets)
    }

    pub fn set_lines(&self, set: usize) -> &[Option<Line>] {
        &self.lines[set * self.ways..(set + 1) * self.ways]
    }

    pub fn meta(&self, set: usize) -> &SetMeta {
        &self.meta[set]
    }

    pub fn lookup(&self, line: Line) -> Option<usize> {
        let set = self.set_of(line);
        self.set_lines(set).iter().position(|&l| l == Some(line))
    }

    pub fn contains(&self, line: Line) -> bool {
        self.lookup(line).is_some()
    }

    pub fn touch(&mut self, set: usize, way: usize) {
        match &mut self.meta[set] {
            SetMeta::Plru(t) => t.update(way),
            SetMeta::Lru(order) => {
                order.retain(|&w| w != way);
                order.push(way);
            }
            SetMeta::None => {}
        }
    }

    /// Way the policy would replace next. Empty ways go first, lowest index
    /// first. Random draws only when the set is full.
    pub fn victim_way(&mut self, set: usize) -> usize {
        if let Some(w) = self.set_lines(set).iter().position(Option::is_none) {
            return w;
        }
        match &self.meta[set] {
            SetMeta::Plru(t) => t.evict_candidate(),
            SetMeta::Lru(order) => order[0],
            SetMeta::None => self.rng.gen_range(0..self.ways),
        }
    }

    /// Installs `line` (assumed absent). Returns the way and any evicted line.
    pub fn fill(&mut self, line: Line, mode: FillMode) -> (usize, Option<Line>) {
        let set = self.set_of(line);
        let way = self.victim_way(set);
        let slot = &mut self.lines[set * self.ways + way];
        let evicted = slot.replace(line);
        match mode {
            FillMode::Normal => self.touch(set, way),
            FillMode::Weak => {
                if let SetMeta::Lru(order) = &mut self.meta[set] {
                    order.retain(|&w| w != way);
                    order.insert(0, way);
                }
            }
        }
        (way, evicted)
    }

    pub fn invalidate(&mut self, line: Line) -> Option<usize> {
        let way = self.lookup(line)?;
        let set = self.set_of(line);
        self.lines[set * self.ways + way] = None;
        Some(way)
    }

    /// Overwrites one set's contents and metadata.
    pub fn install_set(&mut self, set: usize, contents: &[Option<Line>], meta: SetMeta) {
        assert_eq!(contents.len(), self.ways);
        for l in contents.iter().flatten() {
            assert_eq!(self.set_of(*l), set, "line {l} does not map to set {set}");
        }
        self.lines[set * self.ways..(set + 1) * self.ways].copy_from_slice(contents);
        self.meta[set] = meta;
    }
}
