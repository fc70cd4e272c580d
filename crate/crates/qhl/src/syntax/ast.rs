//! Abstract syntax for programs, deterministic assertions, real expressions
//! and probabilistic formulas.
//!
//! All nodes are immutable after construction and safe to share across
//! threads. Disjunction and implication are parser sugar and never appear as
//! nodes; see [`DetAssertion::or`] and [`DetAssertion::implies`].

use std::fmt;
use std::sync::Arc;

use crate::cqstate::linalg::CMatrix;

/// Binary arithmetic operator on integers (and, in real expressions, reals).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aop {
    Add,
    Sub,
    Mul,
}

impl fmt::Display for Aop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aop::Add => "+",
            Aop::Sub => "-",
            Aop::Mul => "*",
        })
    }
}

/// Relational operator comparing two integers or two reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rop {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rop {
    pub fn holds_int(self, a: i64, b: i64) -> bool {
        match self {
            Rop::Eq => a == b,
            Rop::Ne => a != b,
            Rop::Lt => a < b,
            Rop::Le => a <= b,
            Rop::Gt => a > b,
            Rop::Ge => a >= b,
        }
    }
}

impl fmt::Display for Rop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rop::Eq => "=",
            Rop::Ne => "!=",
            Rop::Lt => "<",
            Rop::Le => "<=",
            Rop::Gt => ">",
            Rop::Ge => ">=",
        })
    }
}

/// Arithmetic expression over program variables, logical variables and
/// integer constants. Program-level expressions (assignment right-hand
/// sides, guards) must not contain logical variables; the parser checks
/// this.
#[derive(Debug, Clone, PartialEq)]
pub enum ArithExpr {
    IntConst(i64),
    ProgVar(String),
    LogVar(String),
    BinOp(Aop, Box<ArithExpr>, Box<ArithExpr>),
}

impl ArithExpr {
    pub fn pvar(name: impl Into<String>) -> Self {
        ArithExpr::ProgVar(name.into())
    }

    pub fn lvar(name: impl Into<String>) -> Self {
        ArithExpr::LogVar(name.into())
    }

    pub fn binop(op: Aop, l: ArithExpr, r: ArithExpr) -> Self {
        ArithExpr::BinOp(op, Box::new(l), Box::new(r))
    }

    /// True when the expression contains no logical variables.
    pub fn is_program_level(&self) -> bool {
        match self {
            ArithExpr::IntConst(_) | ArithExpr::ProgVar(_) => true,
            ArithExpr::LogVar(_) => false,
            ArithExpr::BinOp(_, l, r) => l.is_program_level() && r.is_program_level(),
        }
    }

    /// True when the program variable `x` occurs in the expression.
    pub fn mentions(&self, x: &str) -> bool {
        match self {
            ArithExpr::IntConst(_) | ArithExpr::LogVar(_) => false,
            ArithExpr::ProgVar(v) => v == x,
            ArithExpr::BinOp(_, l, r) => l.mentions(x) || r.mentions(x),
        }
    }
}

/// Program-level Boolean expression (guards).
#[derive(Debug, Clone, PartialEq)]
pub enum BoolExpr {
    True,
    False,
    Rel(Rop, ArithExpr, ArithExpr),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn not(b: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(b))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    /// Embed a guard as a deterministic assertion. Guards are a syntactic
    /// subset of assertions, so this is lossless.
    pub fn to_assertion(&self) -> DetAssertion {
        match self {
            BoolExpr::True => DetAssertion::True,
            BoolExpr::False => DetAssertion::False,
            BoolExpr::Rel(op, l, r) => DetAssertion::Rel(*op, l.clone(), r.clone()),
            BoolExpr::Not(b) => DetAssertion::Not(Box::new(b.to_assertion())),
            BoolExpr::And(a, b) => {
                DetAssertion::And(Box::new(a.to_assertion()), Box::new(b.to_assertion()))
            }
        }
    }
}

/// Built-in gates, all self-adjoint or otherwise standard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinGate {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Cx,
    Cz,
    Ccx,
    Swap,
}

impl BuiltinGate {
    pub fn arity(self) -> usize {
        match self {
            BuiltinGate::H
            | BuiltinGate::X
            | BuiltinGate::Y
            | BuiltinGate::Z
            | BuiltinGate::S
            | BuiltinGate::T => 1,
            BuiltinGate::Cx | BuiltinGate::Cz | BuiltinGate::Swap => 2,
            BuiltinGate::Ccx => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinGate::H => "H",
            BuiltinGate::X => "X",
            BuiltinGate::Y => "Y",
            BuiltinGate::Z => "Z",
            BuiltinGate::S => "S",
            BuiltinGate::T => "T",
            BuiltinGate::Cx => "CX",
            BuiltinGate::Cz => "CZ",
            BuiltinGate::Ccx => "CCX",
            BuiltinGate::Swap => "SWAP",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "H" => BuiltinGate::H,
            "X" => BuiltinGate::X,
            "Y" => BuiltinGate::Y,
            "Z" => BuiltinGate::Z,
            "S" => BuiltinGate::S,
            "T" => BuiltinGate::T,
            "CX" => BuiltinGate::Cx,
            "CZ" => BuiltinGate::Cz,
            "CCX" => BuiltinGate::Ccx,
            "SWAP" => BuiltinGate::Swap,
            _ => return None,
        })
    }
}

/// Reference to a unitary: a built-in gate, a declared boolean-function
/// oracle, or a declared dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum GateRef {
    Builtin(BuiltinGate),
    Oracle(String),
    User(String),
}

impl GateRef {
    pub fn display_name(&self) -> &str {
        match self {
            GateRef::Builtin(b) => b.name(),
            GateRef::Oracle(n) | GateRef::User(n) => n,
        }
    }
}

/// A gate applied to a list of distinct qubits (1-based indices).
#[derive(Debug, Clone, PartialEq)]
pub struct GateApp {
    pub gate: GateRef,
    pub qubits: Vec<usize>,
}

/// Commands of the imperative quantum-classical language.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Skip,
    Assign(String, ArithExpr),
    /// Random assignment: each branch is a probability paired with an
    /// integer value. Probabilities lie strictly in (0,1) and sum to 1.
    RandAssign(String, Vec<(f64, i64)>),
    Seq(Box<Command>, Box<Command>),
    If(BoolExpr, Box<Command>, Box<Command>),
    While(BoolExpr, Box<Command>),
    Unitary(GateApp),
    /// Measure a single qubit in the computational basis, storing the
    /// outcome in the named program variable.
    Measure(String, usize),
}

impl Command {
    pub fn seq(a: Command, b: Command) -> Self {
        Command::Seq(Box::new(a), Box::new(b))
    }

    /// Right-associated sequencing of a non-empty list.
    pub fn seq_all(mut cmds: Vec<Command>) -> Command {
        let mut out = cmds.pop().expect("seq_all of empty list");
        while let Some(c) = cmds.pop() {
            out = Command::seq(c, out);
        }
        out
    }

    /// `c; c; ...; c` (`n` copies); `skip` when `n` is zero.
    pub fn power(&self, n: usize) -> Command {
        if n == 0 {
            return Command::Skip;
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = Command::seq(self.clone(), out);
        }
        out
    }

    pub fn is_loop_free(&self) -> bool {
        match self {
            Command::While(_, _) => false,
            Command::Seq(a, b) => a.is_loop_free() && b.is_loop_free(),
            Command::If(_, a, b) => a.is_loop_free() && b.is_loop_free(),
            _ => true,
        }
    }
}

/// One basis-mask pattern: a string over `{0,1,*}`, one character per qubit,
/// qubit 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskPattern(pub String);

impl MaskPattern {
    pub fn matches(&self, basis_index: usize, num_qubits: usize) -> bool {
        self.0.bytes().enumerate().all(|(pos, ch)| {
            let bit = (basis_index >> (num_qubits - 1 - pos)) & 1;
            match ch {
                b'0' => bit == 0,
                b'1' => bit == 1,
                _ => true,
            }
        })
    }
}

/// Projector occurring in a cq-conditional: a diagonal projector given by
/// basis masks, or a dense Hermitian operator (named when declared in the
/// spec file, anonymous when produced by conjugation inside the preterm
/// calculus).
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectorSpec {
    Mask(Vec<MaskPattern>),
    Dense {
        name: Option<String>,
        matrix: Arc<CMatrix>,
    },
}

impl ProjectorSpec {
    /// The single-bit mask projector `P_j^i` on `m` qubits.
    pub fn single_bit(qubit: usize, outcome: u8, num_qubits: usize) -> Self {
        let mut s = vec![b'*'; num_qubits];
        s[qubit - 1] = if outcome == 0 { b'0' } else { b'1' };
        ProjectorSpec::Mask(vec![MaskPattern(String::from_utf8(s).unwrap())])
    }

    /// The full-space (identity) mask projector on `m` qubits.
    pub fn full_space(num_qubits: usize) -> Self {
        ProjectorSpec::Mask(vec![MaskPattern("*".repeat(num_qubits))])
    }
}

/// Deterministic assertions over pure cq-states.
#[derive(Debug, Clone, PartialEq)]
pub enum DetAssertion {
    True,
    False,
    /// `P_j^i`: qubit `j` is exactly in basis state `|i>`.
    Proj {
        qubit: usize,
        outcome: u8,
    },
    Rel(Rop, ArithExpr, ArithExpr),
    Not(Box<DetAssertion>),
    And(Box<DetAssertion>, Box<DetAssertion>),
    /// Universal quantification of a logical variable; checked over the
    /// variable's declared finite range.
    Forall {
        var: String,
        body: Box<DetAssertion>,
    },
    /// `[U_q]phi`: the body holds after applying the unitary.
    BoxU(GateApp, Box<DetAssertion>),
    /// `[P_j^i]phi`: the body holds after projecting qubit `j` onto `|i>`
    /// (vacuously true when the projection probability is zero).
    BoxProj {
        qubit: usize,
        outcome: u8,
        body: Box<DetAssertion>,
    },
    /// Depth-bounded stand-in for the infinitary conjunction: the conjunction
    /// of the materialized family members (at least one).
    BigAnd(Vec<DetAssertion>),
}

impl DetAssertion {
    pub fn not(a: DetAssertion) -> Self {
        DetAssertion::Not(Box::new(a))
    }

    pub fn and(a: DetAssertion, b: DetAssertion) -> Self {
        DetAssertion::And(Box::new(a), Box::new(b))
    }

    /// `a \/ b`, desugared to `!(!a && !b)`.
    pub fn or(a: DetAssertion, b: DetAssertion) -> Self {
        DetAssertion::not(DetAssertion::and(
            DetAssertion::not(a),
            DetAssertion::not(b),
        ))
    }

    /// `a -> b`, desugared to `!(a && !b)`.
    pub fn implies(a: DetAssertion, b: DetAssertion) -> Self {
        DetAssertion::not(DetAssertion::and(a, DetAssertion::not(b)))
    }

    pub fn proj(qubit: usize, outcome: u8) -> Self {
        DetAssertion::Proj { qubit, outcome }
    }

    pub fn rel(op: Rop, l: ArithExpr, r: ArithExpr) -> Self {
        DetAssertion::Rel(op, l, r)
    }

    pub fn box_u(gate: GateApp, body: DetAssertion) -> Self {
        DetAssertion::BoxU(gate, Box::new(body))
    }

    pub fn box_proj(qubit: usize, outcome: u8, body: DetAssertion) -> Self {
        DetAssertion::BoxProj {
            qubit,
            outcome,
            body: Box::new(body),
        }
    }

    /// Left-nested conjunction of a non-empty list.
    pub fn and_all(items: Vec<DetAssertion>) -> DetAssertion {
        let mut it = items.into_iter();
        let first = it.next().expect("and_all of empty list");
        it.fold(first, DetAssertion::and)
    }
}

/// Real expressions evaluated against a mixed cq-state.
#[derive(Debug, Clone, PartialEq)]
pub enum RealExpr {
    Const(f64),
    /// A real-valued logical variable, written `$x`.
    Var(String),
    /// `P[phi]`: total mass of the supports satisfying `phi`.
    Prob(Box<DetAssertion>),
    BinOp(Aop, Box<RealExpr>, Box<RealExpr>),
    /// `(phi => Q)`: expected value of `Q` over the `phi`-satisfying part.
    CqCond(Box<DetAssertion>, ProjectorSpec),
    /// Depth-bounded stand-in for the infinite sum: the sum of the
    /// materialized family members (at least one).
    BoundedSum(Vec<RealExpr>),
}

impl RealExpr {
    pub fn prob(phi: DetAssertion) -> Self {
        RealExpr::Prob(Box::new(phi))
    }

    pub fn binop(op: Aop, l: RealExpr, r: RealExpr) -> Self {
        RealExpr::BinOp(op, Box::new(l), Box::new(r))
    }

    pub fn add(l: RealExpr, r: RealExpr) -> Self {
        RealExpr::binop(Aop::Add, l, r)
    }

    pub fn mul(l: RealExpr, r: RealExpr) -> Self {
        RealExpr::binop(Aop::Mul, l, r)
    }

    pub fn cq_cond(phi: DetAssertion, q: ProjectorSpec) -> Self {
        RealExpr::CqCond(Box::new(phi), q)
    }

    /// Left-nested sum of a non-empty list.
    pub fn sum_all(items: Vec<RealExpr>) -> RealExpr {
        let mut it = items.into_iter();
        let first = it.next().expect("sum_all of empty list");
        it.fold(first, RealExpr::add)
    }
}

/// Probabilistic formulas: comparisons of real expressions closed under
/// negation and conjunction.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbFormula {
    Rel(Rop, RealExpr, RealExpr),
    Not(Box<ProbFormula>),
    And(Box<ProbFormula>, Box<ProbFormula>),
}

impl ProbFormula {
    pub fn not(a: ProbFormula) -> Self {
        ProbFormula::Not(Box::new(a))
    }

    pub fn and(a: ProbFormula, b: ProbFormula) -> Self {
        ProbFormula::And(Box::new(a), Box::new(b))
    }
}

/// Pre/postcondition pair; both sides have the same sort.
#[derive(Debug, Clone, PartialEq)]
pub enum TripleBody {
    Det {
        pre: DetAssertion,
        post: DetAssertion,
    },
    Prob {
        pre: ProbFormula,
        post: ProbFormula,
    },
}

impl TripleBody {
    pub fn sort(&self) -> TripleSort {
        match self {
            TripleBody::Det { .. } => TripleSort::Deterministic,
            TripleBody::Prob { .. } => TripleSort::Probabilistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleSort {
    Deterministic,
    Probabilistic,
}

/// A Hoare triple `{pre} C {post}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub prog: Command,
    /// Set when the command came from a named `program` section.
    pub program_name: Option<String>,
    pub body: TripleBody,
}

/// Inference rules recognized by the proof checker. The same names serve the
/// deterministic and the probabilistic system; the triple sort of a step
/// selects which schema applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleName {
    Skip,
    As,
    Pas,
    Seq,
    If,
    While,
    Unitary,
    Measure,
    Cons,
}

impl RuleName {
    pub fn name(self) -> &'static str {
        match self {
            RuleName::Skip => "SKIP",
            RuleName::As => "AS",
            RuleName::Pas => "PAS",
            RuleName::Seq => "SEQ",
            RuleName::If => "IF",
            RuleName::While => "WHILE",
            RuleName::Unitary => "UNITARY",
            RuleName::Measure => "MEASURE",
            RuleName::Cons => "CONS",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "SKIP" => RuleName::Skip,
            "AS" => RuleName::As,
            "PAS" => RuleName::Pas,
            "SEQ" => RuleName::Seq,
            "IF" => RuleName::If,
            "WHILE" => RuleName::While,
            "UNITARY" => RuleName::Unitary,
            "MEASURE" => RuleName::Measure,
            "CONS" => RuleName::Cons,
            _ => return None,
        })
    }

    pub fn premise_count(self) -> usize {
        match self {
            RuleName::Seq | RuleName::If => 2,
            RuleName::While | RuleName::Cons => 1,
            _ => 0,
        }
    }
}

/// One step of a proof script: a rule instance with named premises and its
/// fully written-out conclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofStep {
    pub name: String,
    pub rule: RuleName,
    pub premises: Vec<String>,
    pub conclusion: Triple,
}

/// A proof script: an ordered list of steps; premise references must point
/// at earlier steps, so the reference graph is acyclic by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofScript {
    pub steps: Vec<ProofStep>,
}

impl ProofScript {
    /// The final step's conclusion, i.e. the triple the script claims.
    pub fn claims(&self) -> Option<&Triple> {
        self.steps.last().map(|s| &s.conclusion)
    }
}
