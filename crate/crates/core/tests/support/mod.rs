//! Reference models shared by the oracle suite and the acceptance run.
#![allow(dead_code)]

use std::collections::HashSet;

use ilp_gadgets::cache::{CacheLevel, CacheState, CacheConfig, FillMode, Line, PlruTree, ReplacementPolicy, SetMeta};
use ilp_gadgets::sim::{simulate, MicroarchConfig, OpKind, Program, ProgramBuilder};

// ---- tree-PLRU ------------------------------------------------------------

/// 4-way tree-PLRU as three arrows, each pointing at the side to evict.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Automaton {
    root_right: bool,
    left_pair_right: bool,
    right_pair_right: bool,
    ways: [Option<u8>; 4],
}

impl Automaton {
    fn victim(&self) -> usize {
        if let Some(w) = self.ways.iter().position(Option::is_none) {
            return w;
        }
        if self.root_right {
            2 + self.right_pair_right as usize
        } else {
            self.left_pair_right as usize
        }
    }

    fn touch(&mut self, w: usize) {
        self.root_right = w < 2;
        match w {
            0 => self.left_pair_right = true,
            1 => self.left_pair_right = false,
            2 => self.right_pair_right = true,
            _ => self.right_pair_right = false,
        }
    }

    /// Returns (hit, evicted tag).
    fn access(&mut self, tag: u8) -> (bool, Option<u8>) {
        if let Some(w) = self.ways.iter().position(|&t| t == Some(tag)) {
            self.touch(w);
            return (true, None);
        }
        let w = self.victim();
        let old = self.ways[w].replace(tag);
        self.touch(w);
        (false, old)
    }

    fn bits(&self) -> u64 {
        self.root_right as u64 | (self.left_pair_right as u64) << 1 | (self.right_pair_right as u64) << 2
    }
}

fn level_from(a: &Automaton) -> CacheLevel {
    let mut l = CacheLevel::new(1, 4, ReplacementPolicy::TreePlru);
    let contents: Vec<_> = a.ways.iter().map(|t| t.map(|t| Line(t as u64))).collect();
    l.install_set(0, &contents, SetMeta::Plru(PlruTree::from_bits(4, a.bits())));
    l
}

fn level_access(l: &mut CacheLevel, tag: u8) -> (bool, Option<u8>) {
    let line = Line(tag as u64);
    if let Some(w) = l.lookup(line) {
        l.touch(0, w);
        return (true, None);
    }
    let (_, ev) = l.fill(line, FillMode::Normal);
    (false, ev.map(|e| e.0 as u8))
}

fn level_key(l: &CacheLevel) -> (Vec<Option<Line>>, u64) {
    let SetMeta::Plru(t) = l.meta(0) else { unreachable!() };
    (l.set_lines(0).to_vec(), t.bits())
}

/// Every starting point: all 8 tree states with an empty set, and with
/// the set full of tags 0..4 in every order.
fn initial_automata() -> Vec<Automaton> {
    let mut fills = vec![[None; 4]];
    for a in 0..5u8 {
        for b in 0..5u8 {
            for c in 0..5u8 {
                for d in 0..5u8 {
                    let t = [a, b, c, d];
                    if (0..4).all(|i| (i + 1..4).all(|j| t[i] != t[j])) {
                        fills.push(t.map(Some));
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for ways in fills {
        for bits in 0..8u64 {
            out.push(Automaton {
                root_right: bits & 1 == 1,
                left_pair_right: bits & 2 == 2,
                right_pair_right: bits & 4 == 4,
                ways,
            });
        }
    }
    out
}



/// All access sequences of length up to `max_len` over 5 tags, from every
/// start. Breadth-first over (oracle, cache) pairs: two prefixes that
/// leave both in the same state have identical futures, so visiting each
/// pair once per depth covers every sequence. Returns transitions checked.
pub fn check_plru_sequences(max_len: usize) -> usize {
    let mut frontier: Vec<(Automaton, CacheLevel)> = Vec::new();
    let mut seen = HashSet::new();
    for a in initial_automata() {
        let l = level_from(&a);
        if seen.insert((a, level_key(&l))) {
            frontier.push((a, l));
        }
    }
    let mut checked = 0usize;
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (a, l) in &frontier {
            for tag in 0..5u8 {
                let (mut a2, mut l2) = (*a, l.clone());
                let want = a2.access(tag);
                let got = level_access(&mut l2, tag);
                assert_eq!(got, want, "from {a:?} accessing {tag}");
                let key = level_key(&l2);
                let expect: Vec<_> = a2.ways.iter().map(|t| t.map(|t| Line(t as u64))).collect();
                assert_eq!((key.0.clone(), key.1), (expect, a2.bits()), "state after {tag} from {a:?}");
                checked += 1;
                if seen.insert((a2, key)) {
                    next.push((a2, l2));
                }
            }
        }
        frontier = next;
    }
    checked
}

/// One long pseudo-random walk over 7 tags through a full `CacheState`.
pub fn check_plru_walk(steps: usize) {
    let mut a = Automaton {
        root_right: false,
        left_pair_right: false,
        right_pair_right: false,
        ways: [None; 4],
    };
    let mut c = CacheState::new(CacheConfig::l1(&MicroarchConfig::default(), 1, 4, ReplacementPolicy::TreePlru)).unwrap();
    let mut x: u64 = 0x2545_f491_4f6c_dd1d;
    for _ in 0..steps {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        let tag = (x % 7) as u8;
        let (hit, ev) = a.access(tag);
        let r = c.access(Line(tag as u64));
        assert_eq!((r.hit, r.evicted.map(|l| l.0 as u8)), (hit, ev));
    }
}

// ---- scheduler ------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Times {
    issue: u64,
    complete: u64,
    retire: u64,
}

/// Cycle-by-cycle list scheduler: each cycle retires, allocates, then
/// issues the oldest ready instructions that find a free unit.
fn list_schedule(p: &Program, m: &MicroarchConfig) -> Vec<Times> {
    let n = p.len();
    let (mut alloc, mut issue, mut done, mut retire) = (vec![None; n], vec![None; n], vec![None; n], vec![None; n]);
    let mut free_at: Vec<Vec<u64>> = vec![
        vec![0; m.add.count],
        vec![0; m.mul.count],
        vec![0; m.div.count],
        vec![0; m.load_units],
    ];
    let class = |k: OpKind| match k {
        OpKind::Add | OpKind::Const | OpKind::Branch => (0, m.add),
        OpKind::Mul => (1, m.mul),
        OpKind::Div => (2, m.div),
        _ => unreachable!("arithmetic only"),
    };
    let (mut head, mut next) = (0usize, 0usize);
    let mut c = 0u64;
    while head < n {
        let mut k = 0;
        while k < m.issue_width && head < n && done[head].is_some_and(|d: u64| d <= c) {
            retire[head] = Some(c);
            head += 1;
            k += 1;
        }
        let mut k = 0;
        while k < m.issue_width && next < n && next - head < m.rob_size {
            alloc[next] = Some(c);
            next += 1;
            k += 1;
        }
        let mut issued = 0;
        for i in 0..n {
            if issued == m.issue_width {
                break;
            }
            if alloc[i].is_none() || issue[i].is_some() {
                continue;
            }
            let ins = &p.instructions[i];
            if !ins.deps.iter().all(|&d| done[d].is_some_and(|t| t <= c)) {
                continue;
            }
            let (u, spec) = class(ins.kind);
            if let Some(slot) = free_at[u].iter().position(|&f| f <= c) {
                free_at[u][slot] = c + spec.recip_throughput;
                issue[i] = Some(c);
                done[i] = Some(c + spec.latency);
                issued += 1;
            }
        }
        c += 1;
    }
    (0..n)
        .map(|i| Times {
            issue: issue[i].unwrap(),
            complete: done[i].unwrap(),
            retire: retire[i].unwrap(),
        })
        .collect()
}

/// Every program of `n` ops over {ADD, MUL} whose deps point backwards.
fn for_each_dag(n: usize, mut f: impl FnMut(Program)) {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    for kinds in 0..1u32 << n {
        for mask in 0..1u64 << edges.len() {
            let mut b = ProgramBuilder::new();
            for i in 0..n {
                let deps: Vec<_> = edges
                    .iter()
                    .enumerate()
                    .filter(|&(e, &(to, _))| to == i && mask >> e & 1 == 1)
                    .map(|(_, &(_, from))| from)
                    .collect();
                let kind = if kinds >> i & 1 == 1 { OpKind::Mul } else { OpKind::Add };
                b.op(kind, &deps);
            }
            f(b.build());
        }
    }
}

/// Checks every DAG of up to `max_n` ops; returns how many.
pub fn check_all_dags(max_n: usize, m: &MicroarchConfig) -> usize {
    let mut count = 0;
    let mut cache = CacheState::new(CacheConfig::l1(m, 1, 1, ReplacementPolicy::TrueLru)).unwrap();
    for n in 1..=max_n {
        for_each_dag(n, |p| {
            let want = list_schedule(&p, m);
            let sim = simulate(&p, m, &mut cache).unwrap();
            for (i, w) in want.iter().enumerate() {
                let t = sim.timings[i];
                let got = Times {
                    issue: t.issue.unwrap(),
                    complete: t.complete.unwrap(),
                    retire: t.retire.unwrap(),
                };
                assert_eq!(got, *w, "instruction {i} of {:?}", p.instructions);
            }
            assert_eq!(sim.total_cycles, want.iter().map(|t| t.retire).max().unwrap());
            count += 1;
        });
    }
    count
}


