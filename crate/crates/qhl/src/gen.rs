//! Seeded random generators for programs, assertions and real expressions.
//!
//! These drive the oracle-style harnesses that compare the transformer
//! calculus against the interpreter on large random families. Everything is
//! deterministic given the caller's RNG.

use rand::Rng;

use crate::syntax::ast::{
    Aop, ArithExpr, BoolExpr, BuiltinGate, Command, DetAssertion, GateApp, GateRef, MaskPattern,
    ProbFormula, ProjectorSpec, RealExpr, Rop,
};
use crate::syntax::Declarations;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub num_qubits: usize,
    pub vars: Vec<String>,
    /// Upper bound on the number of simple commands in a generated program.
    pub max_commands: usize,
    pub int_range: (i64, i64),
    /// Allow `forall` atoms (requires a declared logical variable `n`).
    pub with_forall: bool,
}

impl GenConfig {
    pub fn small(num_qubits: usize) -> Self {
        GenConfig {
            num_qubits,
            vars: vec!["X".into(), "Y".into()],
            max_commands: 5,
            int_range: (-3, 3),
            with_forall: false,
        }
    }

    /// Declarations matching this generator configuration.
    pub fn decls(&self) -> Declarations {
        let mut d = Declarations {
            num_qubits: self.num_qubits,
            vars: self.vars.clone(),
            ..Declarations::default()
        };
        d.logvar_ranges.insert("n".into(), (-2, 2));
        d
    }
}

fn pick<'a, T>(rng: &mut impl Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

pub fn gen_aexpr(cfg: &GenConfig, depth: usize, rng: &mut impl Rng) -> ArithExpr {
    if depth == 0 || rng.random_bool(0.5) {
        if rng.random_bool(0.5) {
            ArithExpr::IntConst(rng.random_range(cfg.int_range.0..=cfg.int_range.1))
        } else {
            ArithExpr::pvar(pick(rng, &cfg.vars).clone())
        }
    } else {
        let op = *pick(rng, &[Aop::Add, Aop::Sub, Aop::Mul]);
        ArithExpr::binop(
            op,
            gen_aexpr(cfg, depth - 1, rng),
            gen_aexpr(cfg, depth - 1, rng),
        )
    }
}

pub fn gen_rop(rng: &mut impl Rng) -> Rop {
    *pick(rng, &[Rop::Eq, Rop::Ne, Rop::Lt, Rop::Le, Rop::Gt, Rop::Ge])
}

pub fn gen_guard(cfg: &GenConfig, depth: usize, rng: &mut impl Rng) -> BoolExpr {
    if depth == 0 || rng.random_bool(0.6) {
        match rng.random_range(0..6) {
            0 => BoolExpr::True,
            1 => BoolExpr::False,
            _ => BoolExpr::Rel(gen_rop(rng), gen_aexpr(cfg, 1, rng), gen_aexpr(cfg, 1, rng)),
        }
    } else if rng.random_bool(0.5) {
        BoolExpr::not(gen_guard(cfg, depth - 1, rng))
    } else {
        BoolExpr::and(
            gen_guard(cfg, depth - 1, rng),
            gen_guard(cfg, depth - 1, rng),
        )
    }
}

fn gen_gate_app(cfg: &GenConfig, rng: &mut impl Rng) -> GateApp {
    let m = cfg.num_qubits;
    let two_qubit = m >= 2 && rng.random_bool(0.3);
    if two_qubit {
        let gate = *pick(rng, &[BuiltinGate::Cx, BuiltinGate::Cz, BuiltinGate::Swap]);
        let a = rng.random_range(1..=m);
        let mut b = rng.random_range(1..=m);
        while b == a {
            b = rng.random_range(1..=m);
        }
        GateApp {
            gate: GateRef::Builtin(gate),
            qubits: vec![a, b],
        }
    } else {
        let gate = *pick(
            rng,
            &[
                BuiltinGate::H,
                BuiltinGate::X,
                BuiltinGate::Y,
                BuiltinGate::Z,
                BuiltinGate::S,
                BuiltinGate::T,
            ],
        );
        GateApp {
            gate: GateRef::Builtin(gate),
            qubits: vec![rng.random_range(1..=m)],
        }
    }
}

fn gen_rand_assign(cfg: &GenConfig, rng: &mut impl Rng) -> Command {
    let var = pick(rng, &cfg.vars).clone();
    let n = rng.random_range(2..=3);
    // probabilities from a fixed grid so they sum to exactly 1
    let branches: Vec<(f64, i64)> = match n {
        2 => {
            let p = *pick(rng, &[0.25, 0.5, 0.75]);
            vec![
                (p, rng.random_range(cfg.int_range.0..=cfg.int_range.1)),
                (1.0 - p, rng.random_range(cfg.int_range.0..=cfg.int_range.1)),
            ]
        }
        _ => vec![
            (0.25, rng.random_range(cfg.int_range.0..=cfg.int_range.1)),
            (0.25, rng.random_range(cfg.int_range.0..=cfg.int_range.1)),
            (0.5, rng.random_range(cfg.int_range.0..=cfg.int_range.1)),
        ],
    };
    Command::RandAssign(var, branches)
}

fn gen_simple_command(cfg: &GenConfig, budget: &mut usize, rng: &mut impl Rng) -> Command {
    let has_qubits = cfg.num_qubits > 0;
    loop {
        match rng.random_range(0..8) {
            0 => return Command::Skip,
            1 => {
                return Command::Assign(pick(rng, &cfg.vars).clone(), gen_aexpr(cfg, 2, rng));
            }
            2 => return gen_rand_assign(cfg, rng),
            3 if has_qubits => return Command::Unitary(gen_gate_app(cfg, rng)),
            4 if has_qubits => {
                return Command::Measure(
                    pick(rng, &cfg.vars).clone(),
                    rng.random_range(1..=cfg.num_qubits),
                );
            }
            5 if *budget >= 2 => {
                *budget -= 1;
                let t = gen_simple_command(cfg, budget, rng);
                let e = gen_simple_command(cfg, budget, rng);
                return Command::If(gen_guard(cfg, 1, rng), Box::new(t), Box::new(e));
            }
            _ => continue,
        }
    }
}

/// A loop-free program of at most `cfg.max_commands` simple commands.
pub fn gen_loop_free_command(cfg: &GenConfig, rng: &mut impl Rng) -> Command {
    let mut budget = rng.random_range(1..=cfg.max_commands);
    let mut cmds = Vec::new();
    while budget > 0 {
        budget -= 1;
        cmds.push(gen_simple_command(cfg, &mut budget, rng));
    }
    Command::seq_all(cmds)
}

/// A countdown loop `while V > 0 do (V <- V - 1; body)` that converges from
/// any state with `V` at most `cfg.int_range.1`.
pub fn gen_converging_while(cfg: &GenConfig, rng: &mut impl Rng) -> Command {
    let var = pick(rng, &cfg.vars).clone();
    let guard = BoolExpr::Rel(
        Rop::Gt,
        ArithExpr::pvar(var.clone()),
        ArithExpr::IntConst(0),
    );
    let decrement = Command::Assign(
        var.clone(),
        ArithExpr::binop(Aop::Sub, ArithExpr::pvar(var), ArithExpr::IntConst(1)),
    );
    let body = if cfg.num_qubits > 0 && rng.random_bool(0.5) {
        Command::seq(decrement, Command::Unitary(gen_gate_app(cfg, rng)))
    } else {
        decrement
    };
    Command::While(guard, Box::new(body))
}

pub fn gen_dassert(cfg: &GenConfig, depth: usize, rng: &mut impl Rng) -> DetAssertion {
    if depth == 0 || rng.random_bool(0.4) {
        return match rng.random_range(0..8) {
            0 => DetAssertion::True,
            1 => DetAssertion::False,
            2 | 3 if cfg.num_qubits > 0 => DetAssertion::proj(
                rng.random_range(1..=cfg.num_qubits),
                rng.random_range(0..=1) as u8,
            ),
            _ => DetAssertion::Rel(gen_rop(rng), gen_aexpr(cfg, 1, rng), gen_aexpr(cfg, 1, rng)),
        };
    }
    match rng.random_range(0..6) {
        0 => DetAssertion::not(gen_dassert(cfg, depth - 1, rng)),
        1 | 2 => DetAssertion::and(
            gen_dassert(cfg, depth - 1, rng),
            gen_dassert(cfg, depth - 1, rng),
        ),
        3 if cfg.num_qubits > 0 => {
            DetAssertion::box_u(gen_gate_app(cfg, rng), gen_dassert(cfg, depth - 1, rng))
        }
        4 if cfg.num_qubits > 0 => DetAssertion::box_proj(
            rng.random_range(1..=cfg.num_qubits),
            rng.random_range(0..=1) as u8,
            gen_dassert(cfg, depth - 1, rng),
        ),
        5 if cfg.with_forall => DetAssertion::Forall {
            var: "n".into(),
            body: Box::new(gen_dassert_with_logvar(cfg, depth - 1, rng)),
        },
        _ => gen_dassert(cfg, depth - 1, rng),
    }
}

fn gen_dassert_with_logvar(cfg: &GenConfig, depth: usize, rng: &mut impl Rng) -> DetAssertion {
    // a relation mentioning the quantified variable, conjoined with more
    let rel = DetAssertion::Rel(gen_rop(rng), ArithExpr::lvar("n"), gen_aexpr(cfg, 1, rng));
    if depth == 0 {
        rel
    } else {
        DetAssertion::and(rel, gen_dassert(cfg, depth - 1, rng))
    }
}

pub fn gen_mask(cfg: &GenConfig, rng: &mut impl Rng) -> ProjectorSpec {
    let n_patterns = rng.random_range(1..=2);
    let patterns = (0..n_patterns)
        .map(|_| {
            let s: String = (0..cfg.num_qubits)
                .map(|_| *pick(rng, &['0', '1', '*']))
                .collect();
            MaskPattern(s)
        })
        .collect();
    ProjectorSpec::Mask(patterns)
}

/// Real expressions built from constants and probability atoms combined
/// with arithmetic; `with_cq` adds cq-conditionals over random diagonal
/// projectors.
pub fn gen_rexpr(cfg: &GenConfig, depth: usize, with_cq: bool, rng: &mut impl Rng) -> RealExpr {
    if depth == 0 || rng.random_bool(0.4) {
        return match rng.random_range(0..4) {
            0 => RealExpr::Const((rng.random_range(0..=8) as f64) / 8.0),
            1 | 2 => RealExpr::prob(gen_dassert(cfg, 1, rng)),
            _ if with_cq && cfg.num_qubits > 0 => {
                RealExpr::cq_cond(gen_dassert(cfg, 1, rng), gen_mask(cfg, rng))
            }
            _ => RealExpr::prob(gen_dassert(cfg, 1, rng)),
        };
    }
    let op = *pick(rng, &[Aop::Add, Aop::Sub, Aop::Mul]);
    RealExpr::binop(
        op,
        gen_rexpr(cfg, depth - 1, with_cq, rng),
        gen_rexpr(cfg, depth - 1, with_cq, rng),
    )
}

pub fn gen_prob_formula(cfg: &GenConfig, depth: usize, rng: &mut impl Rng) -> ProbFormula {
    if depth == 0 || rng.random_bool(0.5) {
        return ProbFormula::Rel(
            gen_rop(rng),
            gen_rexpr(cfg, 1, false, rng),
            gen_rexpr(cfg, 1, false, rng),
        );
    }
    if rng.random_bool(0.5) {
        ProbFormula::not(gen_prob_formula(cfg, depth - 1, rng))
    } else {
        ProbFormula::and(
            gen_prob_formula(cfg, depth - 1, rng),
            gen_prob_formula(cfg, depth - 1, rng),
        )
    }
}
