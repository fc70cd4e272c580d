//! Satisfaction of deterministic assertions over pure and mixed cq-states,
//! and evaluation of real expressions and probabilistic formulas.
//!
//! A deterministic assertion holds on a mixed state iff it holds on every
//! support (possibility semantics); it holds vacuously on the empty
//! subdistribution. Two evaluation choices are numerically motivated and
//! surfaced as flags on the verdicts that rely on them:
//!
//! * `P_j^i` atoms compare the reduced probability against `1 - atol`
//!   instead of exact 1;
//! * `[Proj j,i] phi` is vacuously true when the projection probability is
//!   at most `atol` (the defining clause conditions on it being positive);
//! * `forall` is checked over the variable's declared finite range only
//!   (`range_bounded`), and the bounded conjunction / bounded sum nodes
//!   mark results as `depth_bounded`.

use crate::cqstate::{
    apply_gate, checked_aop, expect_projector, project_qubit, reduced_proj_prob, ClassicalStore,
    Interpretation, MixedCqState, PureCqState,
};
use crate::error::QhlError;
use crate::syntax::ast::{ArithExpr, DetAssertion, ProbFormula, RealExpr, Rop};
use crate::syntax::Declarations;

#[derive(Debug, Clone, Copy)]
pub struct SatConfig {
    /// Slack for `= 1` projector atoms and real-valued equality.
    pub atol: f64,
}

impl Default for SatConfig {
    fn default() -> Self {
        SatConfig { atol: 1e-9 }
    }
}

/// Caveats accumulated while evaluating: the verdict relied on a bounded
/// quantifier range, on a depth-truncated node, or on the vacuous-truth
/// reading of a zero-probability projection modality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalFlags {
    pub range_bounded: bool,
    pub depth_bounded: bool,
    pub vacuous_projection: bool,
}

impl EvalFlags {
    pub fn merge(&mut self, other: EvalFlags) {
        self.range_bounded |= other.range_bounded;
        self.depth_bounded |= other.depth_bounded;
        self.vacuous_projection |= other.vacuous_projection;
    }
}

/// Arithmetic over stores extended with an interpretation for logical
/// variables.
pub fn eval_aexpr_interp(
    e: &ArithExpr,
    store: &ClassicalStore,
    interp: &Interpretation,
) -> Result<i64, QhlError> {
    match e {
        ArithExpr::IntConst(n) => Ok(*n),
        ArithExpr::ProgVar(x) => store.get(x),
        ArithExpr::LogVar(x) => interp.int(x),
        ArithExpr::BinOp(op, l, r) => {
            let a = eval_aexpr_interp(l, store, interp)?;
            let b = eval_aexpr_interp(r, store, interp)?;
            checked_aop(*op, a, b)
        }
    }
}

/// Satisfaction of a deterministic assertion on a pure cq-state.
pub fn sat_pure(
    phi: &DetAssertion,
    theta: &PureCqState,
    interp: &Interpretation,
    decls: &Declarations,
    cfg: &SatConfig,
    flags: &mut EvalFlags,
) -> Result<bool, QhlError> {
    match phi {
        DetAssertion::True => Ok(true),
        DetAssertion::False => Ok(false),
        DetAssertion::Proj { qubit, outcome } => {
            Ok(reduced_proj_prob(&theta.quantum, *qubit, *outcome) >= 1.0 - cfg.atol)
        }
        DetAssertion::Rel(op, l, r) => {
            let a = eval_aexpr_interp(l, &theta.store, interp)?;
            let b = eval_aexpr_interp(r, &theta.store, interp)?;
            Ok(op.holds_int(a, b))
        }
        DetAssertion::Not(inner) => Ok(!sat_pure(inner, theta, interp, decls, cfg, flags)?),
        DetAssertion::And(l, r) => Ok(sat_pure(l, theta, interp, decls, cfg, flags)?
            && sat_pure(r, theta, interp, decls, cfg, flags)?),
        DetAssertion::Forall { var, body } => {
            flags.range_bounded = true;
            let (lo, hi) = interp.range(var)?;
            for n in lo..=hi {
                let extended = interp.with_int(var, n);
                if !sat_pure(body, theta, &extended, decls, cfg, flags)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        DetAssertion::BoxU(app, body) => {
            let q = apply_gate(&theta.quantum, app, decls)?;
            let next = PureCqState::new(theta.store.clone(), q);
            sat_pure(body, &next, interp, decls, cfg, flags)
        }
        DetAssertion::BoxProj {
            qubit,
            outcome,
            body,
        } => match project_qubit(theta, *qubit, *outcome, cfg.atol) {
            None => {
                flags.vacuous_projection = true;
                Ok(true)
            }
            Some(next) => sat_pure(body, &next, interp, decls, cfg, flags),
        },
        DetAssertion::BigAnd(items) => {
            flags.depth_bounded = true;
            for item in items {
                if !sat_pure(item, theta, interp, decls, cfg, flags)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Possibility semantics: the assertion holds on every support.
pub fn sat_mixed(
    phi: &DetAssertion,
    theta: &MixedCqState,
    interp: &Interpretation,
    decls: &Declarations,
    cfg: &SatConfig,
    flags: &mut EvalFlags,
) -> Result<bool, QhlError> {
    for (state, _) in theta.supports() {
        if !sat_pure(phi, state, interp, decls, cfg, flags)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn apply_aop_f64(op: crate::syntax::ast::Aop, a: f64, b: f64) -> f64 {
    use crate::syntax::ast::Aop;
    match op {
        Aop::Add => a + b,
        Aop::Sub => a - b,
        Aop::Mul => a * b,
    }
}

/// Value of a real expression on a mixed cq-state.
pub fn eval_real(
    r: &RealExpr,
    theta: &MixedCqState,
    interp: &Interpretation,
    decls: &Declarations,
    cfg: &SatConfig,
    flags: &mut EvalFlags,
) -> Result<f64, QhlError> {
    match r {
        RealExpr::Const(a) => Ok(*a),
        RealExpr::Var(x) => interp.real(x),
        RealExpr::Prob(phi) => {
            let mut total = 0.0;
            for (state, mass) in theta.supports() {
                if sat_pure(phi, state, interp, decls, cfg, flags)? {
                    total += mass;
                }
            }
            Ok(total)
        }
        RealExpr::BinOp(op, l, rr) => {
            let a = eval_real(l, theta, interp, decls, cfg, flags)?;
            let b = eval_real(rr, theta, interp, decls, cfg, flags)?;
            Ok(apply_aop_f64(*op, a, b))
        }
        RealExpr::CqCond(phi, q) => {
            let mut total = 0.0;
            for (state, mass) in theta.supports() {
                if sat_pure(phi, state, interp, decls, cfg, flags)? {
                    total += mass * expect_projector(&state.quantum, q, decls)?;
                }
            }
            Ok(total)
        }
        RealExpr::BoundedSum(items) => {
            flags.depth_bounded = true;
            let mut total = 0.0;
            for item in items {
                total += eval_real(item, theta, interp, decls, cfg, flags)?;
            }
            Ok(total)
        }
    }
}

/// Real-valued comparison: equalities take `atol` slack, the other
/// relations are exact.
pub fn rop_holds_real(op: Rop, a: f64, b: f64, atol: f64) -> bool {
    match op {
        Rop::Eq => (a - b).abs() <= atol,
        Rop::Ne => (a - b).abs() > atol,
        Rop::Lt => a < b,
        Rop::Le => a <= b,
        Rop::Gt => a > b,
        Rop::Ge => a >= b,
    }
}

/// Satisfaction of a probabilistic formula on a mixed cq-state.
pub fn sat_prob(
    formula: &ProbFormula,
    theta: &MixedCqState,
    interp: &Interpretation,
    decls: &Declarations,
    cfg: &SatConfig,
    flags: &mut EvalFlags,
) -> Result<bool, QhlError> {
    match formula {
        ProbFormula::Rel(op, l, r) => {
            let a = eval_real(l, theta, interp, decls, cfg, flags)?;
            let b = eval_real(r, theta, interp, decls, cfg, flags)?;
            Ok(rop_holds_real(*op, a, b, cfg.atol))
        }
        ProbFormula::Not(inner) => Ok(!sat_prob(inner, theta, interp, decls, cfg, flags)?),
        ProbFormula::And(l, r) => Ok(sat_prob(l, theta, interp, decls, cfg, flags)?
            && sat_prob(r, theta, interp, decls, cfg, flags)?),
    }
}
