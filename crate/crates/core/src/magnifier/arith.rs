//! Magnifier built from arithmetic only, racing two paths for the divider.
//!
//! Each round, path A runs a MUL chain as long as path B's DIV chain, then
//! fires parallel DIVs; both paths then run equal ADD buffers. In step, A's
//! parallel DIVs drain during the buffer. If B starts late, its DIVs meet
//! A's parallel DIVs at the non-pipelined divider, finish later still, and
//! carry the extra delay into the next round.

use crate::kv::{self, Applied, KvSection};
use crate::sim::{simulate, InstrId, MicroarchConfig, OpKind, Program, ProgramBuilder};

use super::{MagnifierError, MagnifierReading, MagnifierRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithLayout {
    /// Program order per round: A's stage, A's parallel DIVs, B's stage,
    /// then both buffers.
    Blocked,
    /// A's MULs and B's DIVs interleaved in the order they would issue.
    Interleaved,
}

impl ArithLayout {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "blocked" => Some(ArithLayout::Blocked),
            "interleaved" => Some(ArithLayout::Interleaved),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ArithLayout::Blocked => "blocked",
            ArithLayout::Interleaved => "interleaved",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArithMagnifierConfig {
    /// DIVs in B's racing stage.
    pub k_div: usize,
    /// Parallel DIVs path A fires after its MUL chain; `None` matches the
    /// DIV count of B's stage.
    pub par_divs: Option<usize>,
    /// `None`: equalize stage times from the latencies.
    pub mul_count: Option<usize>,
    /// `None`: long enough for A's parallel DIVs to drain.
    pub add_buffer_len: Option<usize>,
    pub rounds: usize,
    /// Grow the racing stage until its MULs overflow the ROB, so path A
    /// cannot run a whole stage ahead of path B.
    pub rob_guard: bool,
    pub misalign_delay: u64,
    pub layout: ArithLayout,
}

impl Default for ArithMagnifierConfig {
    fn default() -> Self {
        ArithMagnifierConfig {
            k_div: 3,
            par_divs: None,
            mul_count: None,
            add_buffer_len: None,
            rounds: 100,
            rob_guard: true,
            misalign_delay: 9,
            layout: ArithLayout::Interleaved,
        }
    }
}

/// Stage sizes after equalization and the ROB guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArithShape {
    pub k_div: usize,
    pub par_divs: usize,
    pub mul_count: usize,
    pub add_buffer_len: usize,
}

fn equal_muls(k: usize, m: &MicroarchConfig) -> usize {
    let target = k as u64 * m.div.latency;
    ((target + m.mul.latency / 2) / m.mul.latency) as usize
}

impl ArithMagnifierConfig {
    pub fn shape(&self, m: &MicroarchConfig) -> Result<ArithShape, MagnifierError> {
        let bad = |s: String| Err(MagnifierError::ConfigRejected(s));
        if self.k_div == 0 || self.par_divs == Some(0) {
            return bad("k_div and par_divs must be at least 1".into());
        }
        if m.div.count != 1 || m.div.recip_throughput <= 1 {
            return bad("needs exactly one divider with reciprocal throughput above 1".into());
        }
        let mut k = self.k_div;
        if self.rob_guard && self.mul_count.is_none() {
            while equal_muls(k, m) <= m.rob_size {
                k += 1;
            }
        }
        let muls = self.mul_count.unwrap_or_else(|| equal_muls(k, m));
        if self.rob_guard && muls <= m.rob_size {
            return bad(format!("rob_guard needs more than {} MULs per stage, got {muls}", m.rob_size));
        }
        let residual = (muls as u64 * m.mul.latency).abs_diff(k as u64 * m.div.latency);
        if residual > 1 {
            return bad(format!(
                "{muls} MULs and {k} DIVs differ by {residual} cycles; stage times must match within 1"
            ));
        }
        let par = self.par_divs.unwrap_or(k);
        let drain = (par as u64 - 1) * m.div.recip_throughput + m.div.latency + 1;
        let auto = drain.div_ceil(m.add.latency) as usize;
        Ok(ArithShape {
            k_div: k,
            par_divs: par,
            mul_count: muls,
            add_buffer_len: self.add_buffer_len.unwrap_or(auto),
        })
    }
}

impl KvSection for ArithMagnifierConfig {
    fn apply(&mut self, key: &str, v: &str) -> Result<Applied, String> {
        let auto = |v: &str| -> Result<Option<usize>, String> {
            if v == "auto" {
                Ok(None)
            } else {
                kv::value(key, v).map(Some)
            }
        };
        match key {
            "arith_k_div" => self.k_div = kv::value(key, v)?,
            "arith_par_divs" => self.par_divs = auto(v)?,
            "arith_mul_count" => self.mul_count = auto(v)?,
            "arith_add_buffer_len" => self.add_buffer_len = auto(v)?,
            "arith_rob_guard" => self.rob_guard = kv::boolean(key, v)?,
            "arith_misalign_delay" => self.misalign_delay = kv::value(key, v)?,
            "arith_layout" => self.layout = ArithLayout::parse(v).ok_or_else(|| format!("bad layout `{v}`"))?,
            _ => return Ok(Applied::NotMine),
        }
        Ok(Applied::Taken)
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let auto = |o: Option<usize>| o.map_or_else(|| "auto".to_owned(), |n| n.to_string());
        vec![
            ("arith_k_div", self.k_div.to_string()),
            ("arith_par_divs", auto(self.par_divs)),
            ("arith_mul_count", auto(self.mul_count)),
            ("arith_add_buffer_len", auto(self.add_buffer_len)),
            ("arith_rob_guard", self.rob_guard.to_string()),
            ("arith_misalign_delay", self.misalign_delay.to_string()),
            ("arith_layout", self.layout.name().to_owned()),
        ]
    }
}

/// Per-round instruction ids the measurements read.
#[derive(Debug, Clone, Default)]
pub struct ArithRound {
    pub a_stage: Vec<InstrId>,
    pub b_stage: Vec<InstrId>,
    pub a_par: Vec<InstrId>,
    pub b_buffer_tail: InstrId,
}

pub struct ArithProgram {
    pub program: Program,
    pub shape: ArithShape,
    pub rounds: Vec<ArithRound>,
}

pub fn build_arith_program(cfg: &ArithMagnifierConfig, m: &MicroarchConfig, delay: u64) -> Result<ArithProgram, MagnifierError> {
    let shape = cfg.shape(m)?;
    let mut b = ProgramBuilder::new();
    b.set_tag(Some("head"));
    let head = b.op(OpKind::Const, &[]);
    // B's delay chain is emitted just before B's first DIV so that it does
    // not hold up A's allocation
    let mut pending_delay = delay.div_ceil(m.add.latency) as usize;
    let mut b_tail = head;
    let mut a_tail = head;

    let mut rounds = Vec::with_capacity(cfg.rounds);
    for _ in 0..cfg.rounds {
        let mut r = ArithRound::default();
        let mul = |b: &mut ProgramBuilder, r: &mut ArithRound, a_tail: &mut InstrId| {
            b.set_tag(Some("path_a"));
            *a_tail = b.op(OpKind::Mul, &[*a_tail]);
            r.a_stage.push(*a_tail);
        };
        let mut div = |b: &mut ProgramBuilder, r: &mut ArithRound, b_tail: &mut InstrId| {
            if pending_delay > 0 {
                b.set_tag(Some("delay"));
                *b_tail = b.chain(OpKind::Add, std::mem::take(&mut pending_delay), Some(*b_tail)).expect("nonzero");
            }
            b.set_tag(Some("path_b"));
            *b_tail = b.op(OpKind::Div, &[*b_tail]);
            r.b_stage.push(*b_tail);
        };
        let par = |b: &mut ProgramBuilder, r: &mut ArithRound, a_tail: InstrId| {
            b.set_tag(Some("par"));
            for _ in 0..shape.par_divs {
                r.a_par.push(b.op(OpKind::Div, &[a_tail]));
            }
        };
        match cfg.layout {
            ArithLayout::Blocked => {
                for _ in 0..shape.mul_count {
                    mul(&mut b, &mut r, &mut a_tail);
                }
                par(&mut b, &mut r, a_tail);
                for _ in 0..shape.k_div {
                    div(&mut b, &mut r, &mut b_tail);
                }
            }
            ArithLayout::Interleaved => {
                // Ops go in roughly the order they issue, with A one DIV
                // ahead so its parallel DIVs are older than B's last DIV.
                let lead = m.div.latency;
                let (mut muls, mut divs) = (0, 0);
                while muls < shape.mul_count || divs < shape.k_div {
                    let a_time = muls as u64 * m.mul.latency;
                    let b_time = divs as u64 * m.div.latency + lead;
                    if divs >= shape.k_div || (muls < shape.mul_count && a_time < b_time) {
                        mul(&mut b, &mut r, &mut a_tail);
                        muls += 1;
                        if muls == shape.mul_count {
                            par(&mut b, &mut r, a_tail);
                        }
                    } else {
                        div(&mut b, &mut r, &mut b_tail);
                        divs += 1;
                    }
                }
            }
        }
        for _ in 0..shape.add_buffer_len {
            b.set_tag(Some("buffer_a"));
            a_tail = b.op(OpKind::Add, &[a_tail]);
            b.set_tag(Some("buffer_b"));
            b_tail = b.op(OpKind::Add, &[b_tail]);
        }
        r.b_buffer_tail = b_tail;
        rounds.push(r);
    }
    b.set_tag(None);
    Ok(ArithProgram {
        program: b.build(),
        shape,
        rounds,
    })
}

/// Timing of one run, kept for the stage-overlap checks.
#[derive(Debug, Clone)]
pub struct ArithTrace {
    pub run: MagnifierRun,
    /// First issue of A's racing stage, per round.
    pub a_stage_start: Vec<u64>,
    /// Completion of B's racing stage, per round.
    pub b_stage_end: Vec<u64>,
}

pub fn arith_run(cfg: &ArithMagnifierConfig, m: &MicroarchConfig, delay: u64) -> Result<ArithTrace, MagnifierError> {
    let ap = build_arith_program(cfg, m, delay)?;
    let sim = simulate(&ap.program, m, &mut super::no_cache())?;
    let t = |id: InstrId| sim.timings[id];
    let mut run = MagnifierRun::with_rounds(cfg.rounds);
    let (mut starts, mut ends) = (Vec::new(), Vec::new());
    for (i, r) in ap.rounds.iter().enumerate() {
        run.record(i, false, t(r.b_buffer_tail).complete.expect("completes"));
        starts.push(r.a_stage.iter().filter_map(|&id| t(id).issue).min().unwrap_or(0));
        ends.push(r.b_stage.iter().filter_map(|&id| t(id).complete).max().unwrap_or(0));
    }
    run.miss_trace.clear();
    run.cycles = sim.total_cycles;
    Ok(ArithTrace {
        run,
        a_stage_start: starts,
        b_stage_end: ends,
    })
}

/// State 0 starts both paths together; state 1 delays path B.
pub fn run_arith_magnifier(cfg: &ArithMagnifierConfig, m: &MicroarchConfig) -> Result<MagnifierReading, MagnifierError> {
    let s0 = arith_run(cfg, m, 0)?;
    let s1 = arith_run(cfg, m, cfg.misalign_delay)?;
    Ok(MagnifierReading::from_runs(&s0.run, &s1.run))
}
