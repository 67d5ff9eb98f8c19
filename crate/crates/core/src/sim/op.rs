use std::fmt;

use thiserror::Error;

use crate::cache::Line;

pub type InstrId = usize;

/// Operation classes understood by the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Add,
    Mul,
    Div,
    Load,
    Prefetch,
    Branch,
    Const,
}

impl OpKind {
    pub const ALL: [OpKind; 7] = [
        OpKind::Add,
        OpKind::Mul,
        OpKind::Div,
        OpKind::Load,
        OpKind::Prefetch,
        OpKind::Branch,
        OpKind::Const,
    ];

    pub fn is_memory(self) -> bool {
        matches!(self, OpKind::Load | OpKind::Prefetch)
    }

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Mul => "mul",
            OpKind::Div => "div",
            OpKind::Load => "load",
            OpKind::Prefetch => "prefetch",
            OpKind::Branch => "branch",
            OpKind::Const => "const",
        }
    }

    pub fn parse(s: &str) -> Option<OpKind> {
        let s = s.trim().to_ascii_lowercase();
        OpKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Prediction attached to a branch.
///
/// `predicted_taken` means the front end steered into the transient region
/// that follows the branch. With `squash_on_resolve` the region is the wrong
/// path and gets rolled back once the condition is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchInfo {
    pub predicted_taken: bool,
    pub squash_on_resolve: bool,
}

impl Default for BranchInfo {
    fn default() -> Self {
        BranchInfo {
            predicted_taken: true,
            squash_on_resolve: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub id: InstrId,
    pub kind: OpKind,
    pub deps: Vec<InstrId>,
    pub address: Option<Line>,
    pub branch: Option<BranchInfo>,
    pub transient: bool,
    pub tag: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub instructions: Vec<Instruction>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn get(&self, id: InstrId) -> Option<&Instruction> {
        self.instructions.get(id)
    }

    pub fn ids_tagged<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = InstrId> + 'a {
        self.instructions
            .iter()
            .filter(move |i| i.tag.as_deref() == Some(tag))
            .map(|i| i.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("instruction {0} has a forward, self or out-of-range dependency or a non-dense id")]
    CyclicOrForwardDep(InstrId),
    #[error("instruction {0} is a memory op without an address")]
    MissingAddress(InstrId),
    #[error("instruction {0} carries an address but is not a memory op")]
    UnexpectedAddress(InstrId),
    #[error("instruction {0} has branch info but is not a branch, or is a branch without it")]
    BadBranchInfo(InstrId),
}

pub fn validate_program(p: &Program) -> Result<(), ProgramError> {
    for (pos, ins) in p.instructions.iter().enumerate() {
        if ins.id != pos || ins.deps.iter().any(|&d| d >= pos) {
            return Err(ProgramError::CyclicOrForwardDep(pos));
        }
        match (ins.kind.is_memory(), ins.address.is_some()) {
            (true, false) => return Err(ProgramError::MissingAddress(pos)),
            (false, true) => return Err(ProgramError::UnexpectedAddress(pos)),
            _ => {}
        }
        if (ins.kind == OpKind::Branch) != ins.branch.is_some() {
            return Err(ProgramError::BadBranchInfo(pos));
        }
    }
    Ok(())
}

/// Appends instructions with dense ids.
#[derive(Debug, Clone, Default)]
pub struct ProgramBuilder {
    program: Program,
    tag: Option<String>,
    transient: bool,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tag applied to subsequently pushed instructions.
    pub fn set_tag(&mut self, tag: Option<&str>) -> &mut Self {
        self.tag = tag.map(str::to_owned);
        self
    }

    pub fn set_transient(&mut self, transient: bool) -> &mut Self {
        self.transient = transient;
        self
    }

    pub fn next_id(&self) -> InstrId {
        self.program.instructions.len()
    }

    pub fn push(&mut self, kind: OpKind, deps: &[InstrId], address: Option<Line>) -> InstrId {
        let id = self.next_id();
        let branch = (kind == OpKind::Branch).then(BranchInfo::default);
        self.program.instructions.push(Instruction {
            id,
            kind,
            deps: deps.to_vec(),
            address,
            branch,
            transient: self.transient,
            tag: self.tag.clone(),
        });
        id
    }

    pub fn op(&mut self, kind: OpKind, deps: &[InstrId]) -> InstrId {
        self.push(kind, deps, None)
    }

    pub fn load(&mut self, line: Line, deps: &[InstrId]) -> InstrId {
        self.push(OpKind::Load, deps, Some(line))
    }

    pub fn prefetch(&mut self, line: Line, deps: &[InstrId]) -> InstrId {
        self.push(OpKind::Prefetch, deps, Some(line))
    }

    pub fn branch(&mut self, deps: &[InstrId], info: BranchInfo) -> InstrId {
        let id = self.op(OpKind::Branch, deps);
        self.program.instructions[id].branch = Some(info);
        id
    }

    /// `n` ops of `kind`, each depending on the previous; the first depends
    /// on `after`. Returns the tail, or `after` when `n == 0`.
    pub fn chain(&mut self, kind: OpKind, n: usize, after: Option<InstrId>) -> Option<InstrId> {
        let mut prev = after;
        for _ in 0..n {
            let deps: Vec<_> = prev.into_iter().collect();
            prev = Some(self.op(kind, &deps));
        }
        prev
    }

    pub fn instruction_mut(&mut self, id: InstrId) -> &mut Instruction {
        &mut self.program.instructions[id]
    }

    pub fn build(self) -> Program {
        self.program
    }
}
