//! Substitution of program variables. Program variables are never bound
//! (`forall` binds only logical variables), so substitution traverses
//! quantifiers and modalities transparently and capture cannot occur.

use super::ast::{ArithExpr, DetAssertion, RealExpr};

pub fn subst_aexpr(e: &ArithExpr, var: &str, replacement: &ArithExpr) -> ArithExpr {
    match e {
        ArithExpr::ProgVar(x) if x == var => replacement.clone(),
        ArithExpr::BinOp(op, l, r) => ArithExpr::binop(
            *op,
            subst_aexpr(l, var, replacement),
            subst_aexpr(r, var, replacement),
        ),
        other => other.clone(),
    }
}

/// `phi[X/E]`: every occurrence of the program variable `X` in arithmetic
/// leaves of `phi` replaced by `E`.
pub fn subst_prog_var(phi: &DetAssertion, var: &str, replacement: &ArithExpr) -> DetAssertion {
    match phi {
        DetAssertion::True | DetAssertion::False | DetAssertion::Proj { .. } => phi.clone(),
        DetAssertion::Rel(op, l, r) => DetAssertion::Rel(
            *op,
            subst_aexpr(l, var, replacement),
            subst_aexpr(r, var, replacement),
        ),
        DetAssertion::Not(inner) => DetAssertion::not(subst_prog_var(inner, var, replacement)),
        DetAssertion::And(l, r) => DetAssertion::and(
            subst_prog_var(l, var, replacement),
            subst_prog_var(r, var, replacement),
        ),
        DetAssertion::Forall { var: x, body } => DetAssertion::Forall {
            var: x.clone(),
            body: Box::new(subst_prog_var(body, var, replacement)),
        },
        DetAssertion::BoxU(app, body) => {
            DetAssertion::box_u(app.clone(), subst_prog_var(body, var, replacement))
        }
        DetAssertion::BoxProj {
            qubit,
            outcome,
            body,
        } => DetAssertion::box_proj(*qubit, *outcome, subst_prog_var(body, var, replacement)),
        DetAssertion::BigAnd(items) => DetAssertion::BigAnd(
            items
                .iter()
                .map(|a| subst_prog_var(a, var, replacement))
                .collect(),
        ),
    }
}

/// Substitution lifted over the assertions embedded in a real expression.
pub fn subst_rexpr_prog_var(r: &RealExpr, var: &str, replacement: &ArithExpr) -> RealExpr {
    match r {
        RealExpr::Const(_) | RealExpr::Var(_) => r.clone(),
        RealExpr::Prob(phi) => RealExpr::prob(subst_prog_var(phi, var, replacement)),
        RealExpr::BinOp(op, l, rr) => RealExpr::binop(
            *op,
            subst_rexpr_prog_var(l, var, replacement),
            subst_rexpr_prog_var(rr, var, replacement),
        ),
        RealExpr::CqCond(phi, q) => {
            RealExpr::cq_cond(subst_prog_var(phi, var, replacement), q.clone())
        }
        RealExpr::BoundedSum(items) => RealExpr::BoundedSum(
            items
                .iter()
                .map(|x| subst_rexpr_prog_var(x, var, replacement))
                .collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ast::{GateApp, GateRef, Rop};

    #[test]
    fn subst_in_relation() {
        // (X = 3)[X/3] = (3 = 3)
        let phi = DetAssertion::rel(Rop::Eq, ArithExpr::pvar("X"), ArithExpr::IntConst(3));
        let got = subst_prog_var(&phi, "X", &ArithExpr::IntConst(3));
        assert_eq!(
            got,
            DetAssertion::rel(Rop::Eq, ArithExpr::IntConst(3), ArithExpr::IntConst(3))
        );
    }

    #[test]
    fn subst_traverses_modalities() {
        use crate::syntax::ast::{Aop, BuiltinGate};
        // [H q1](X > y) [X / y+1] = [H q1](y+1 > y)
        let h1 = GateApp {
            gate: GateRef::Builtin(BuiltinGate::H),
            qubits: vec![1],
        };
        let phi = DetAssertion::box_u(
            h1.clone(),
            DetAssertion::rel(Rop::Gt, ArithExpr::pvar("X"), ArithExpr::lvar("y")),
        );
        let e = ArithExpr::binop(Aop::Add, ArithExpr::lvar("y"), ArithExpr::IntConst(1));
        let got = subst_prog_var(&phi, "X", &e);
        assert_eq!(
            got,
            DetAssertion::box_u(
                h1,
                DetAssertion::rel(Rop::Gt, e.clone(), ArithExpr::lvar("y"))
            )
        );
    }

    #[test]
    fn subst_leaves_projector_atoms_alone() {
        // (P0(1) && X = 0)[X/0] = P0(1) && 0 = 0
        let phi = DetAssertion::and(
            DetAssertion::proj(1, 0),
            DetAssertion::rel(Rop::Eq, ArithExpr::pvar("X"), ArithExpr::IntConst(0)),
        );
        let got = subst_prog_var(&phi, "X", &ArithExpr::IntConst(0));
        assert_eq!(
            got,
            DetAssertion::and(
                DetAssertion::proj(1, 0),
                DetAssertion::rel(Rop::Eq, ArithExpr::IntConst(0), ArithExpr::IntConst(0)),
            )
        );
    }
}
