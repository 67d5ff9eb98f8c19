use crate::cache::{CacheConfig, CacheState, Line, ReplacementPolicy};
use crate::sim::{simulate, InstrId, MicroarchConfig, OpKind, Program, ProgramBuilder};

use super::{GadgetError, FILLER_TAG, HEAD_TAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainOp {
    pub kind: OpKind,
    pub address: Option<Line>,
}

/// Fully serialized ops: each depends on its predecessor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSpec {
    pub ops: Vec<ChainOp>,
}

impl ChainSpec {
    pub fn uniform(kind: OpKind, n: usize) -> Self {
        assert!(!kind.is_memory(), "memory chains need addresses; use ChainSpec::loads");
        ChainSpec {
            ops: vec![ChainOp { kind, address: None }; n],
        }
    }

    /// A pointer chase over `lines`.
    pub fn loads(lines: &[Line]) -> Self {
        ChainSpec {
            ops: lines
                .iter()
                .map(|&l| ChainOp { kind: OpKind::Load, address: Some(l) })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSpec {
    pub chains: Vec<ChainSpec>,
    pub tag: String,
    /// Independent single-cycle ops emitted after each chain op. They hold
    /// reorder-buffer entries without touching the chain's timing, like
    /// the bookkeeping a JIT interleaves with user arithmetic.
    pub bookkeeping_per_op: usize,
}

impl PathSpec {
    pub fn new(tag: &str, chains: Vec<ChainSpec>) -> Self {
        PathSpec {
            chains,
            tag: tag.to_owned(),
            bookkeeping_per_op: 0,
        }
    }

    pub fn single(tag: &str, chain: ChainSpec) -> Self {
        Self::new(tag, vec![chain])
    }

    pub fn with_bookkeeping(mut self, per_op: usize) -> Self {
        self.bookkeeping_per_op = per_op;
        self
    }

    pub(crate) fn check(&self) -> Result<(), GadgetError> {
        if self.chains.is_empty() || self.chains.iter().any(ChainSpec::is_empty) {
            return Err(GadgetError::EmptyPath);
        }
        for (i, op) in self.chains.iter().flat_map(|c| &c.ops).enumerate() {
            if op.kind.is_memory() != op.address.is_some() {
                return Err(GadgetError::MissingAddress(i));
            }
        }
        Ok(())
    }

    /// Emits the chains, each rooted at `roots[i]` (or `roots[0]` when only
    /// one root is given). Returns the chain tails.
    pub(crate) fn emit(&self, b: &mut ProgramBuilder, roots: &[InstrId]) -> Vec<InstrId> {
        let mut tails = Vec::with_capacity(self.chains.len());
        for (ci, chain) in self.chains.iter().enumerate() {
            let mut prev = roots.get(ci).or(roots.first()).copied();
            for op in &chain.ops {
                b.set_tag(Some(&self.tag));
                let deps: Vec<_> = prev.into_iter().collect();
                prev = Some(b.push(op.kind, &deps, op.address));
                b.set_tag(Some(FILLER_TAG));
                for _ in 0..self.bookkeeping_per_op {
                    b.op(OpKind::Const, &[]);
                }
            }
            tails.push(prev.expect("nonempty chain"));
        }
        b.set_tag(None);
        tails
    }
}

/// A target expression wrapped for racing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedExpression {
    /// Cold line whose miss synchronizes every racer.
    pub head_miss_address: Line,
    pub target: PathSpec,
    pub terminator_kind: OpKind,
    pub terminator_address: Option<Line>,
}

impl EmbeddedExpression {
    pub fn new(head: Line, target: PathSpec) -> Self {
        EmbeddedExpression {
            head_miss_address: head,
            target,
            terminator_kind: OpKind::Add,
            terminator_address: None,
        }
    }

    pub(crate) fn check(&self) -> Result<(), GadgetError> {
        self.target.check()?;
        if self.terminator_kind.is_memory() != self.terminator_address.is_some() {
            return Err(GadgetError::MissingAddress(usize::MAX));
        }
        Ok(())
    }

    /// Emits pre-extension, chains and terminator after `head`. Returns the
    /// terminator id.
    pub(crate) fn emit_after(&self, b: &mut ProgramBuilder, head: InstrId) -> InstrId {
        b.set_tag(Some(&self.target.tag));
        let pre: Vec<_> = self
            .target
            .chains
            .iter()
            .map(|_| b.op(OpKind::Add, &[head]))
            .collect();
        let tails = self.target.emit(b, &pre);
        b.set_tag(Some(&self.target.tag));
        let term = b.push(self.terminator_kind, &tails, self.terminator_address);
        b.set_tag(None);
        term
    }
}

pub(crate) fn emit_head(b: &mut ProgramBuilder, line: Line) -> InstrId {
    b.set_tag(Some(HEAD_TAG));
    let h = b.load(line, &[]);
    b.set_tag(None);
    h
}

pub fn embed_expression(e: &EmbeddedExpression) -> Result<Program, GadgetError> {
    e.check()?;
    let mut b = ProgramBuilder::new();
    let head = emit_head(&mut b, e.head_miss_address);
    e.emit_after(&mut b, head);
    Ok(b.build())
}

/// Cycles the pre- and post-extension add to the target's critical path,
/// measured on an otherwise empty pipeline.
pub fn extension_cycles(e: &EmbeddedExpression, cfg: &MicroarchConfig) -> Result<u64, GadgetError> {
    e.check()?;
    let mut b = ProgramBuilder::new();
    let pre: Vec<_> = e.target.chains.iter().map(|_| b.op(OpKind::Add, &[])).collect();
    b.push(e.terminator_kind, &pre, e.terminator_address);
    let mut cache = CacheState::new(CacheConfig::l1(cfg, 64, 8, ReplacementPolicy::TrueLru))
        .expect("default cache config is valid");
    if let Some(l) = e.terminator_address {
        cache.access(l);
    }
    Ok(simulate(&b.build(), cfg, &mut cache)?.total_cycles)
}
