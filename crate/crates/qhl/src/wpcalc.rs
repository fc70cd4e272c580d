//! Syntactic transformers: weakest preconditions for deterministic
//! assertions, conditional terms, weakest preterms for real expressions, and
//! weakest preconditions for probabilistic formulas.
//!
//! Loops force two approximations, both carried explicitly in the output
//! AST: the while clause of the deterministic calculus emits a bounded
//! conjunction over the first `K+1` approximants, and the while clauses of
//! the preterm calculus truncate their series at `N` terms. Verdicts that
//! rely on either node are labeled depth-bounded by the evaluators.
//!
//! The measurement clauses are uniform in the observable: for a branch
//! outcome `i`, the condition is transported to the post-measurement state
//! by the projection modality and the Born weight is carried by the
//! sandwiched operator,
//!
//! ```text
//! pt(X <<= qj, P[phi])     = sum_i (([Proj j,i] phi[X/i]) => P_j^i)
//! pt(X <<= qj, phi => Q)   = sum_i (([Proj j,i] phi[X/i]) => P_j^i Q P_j^i)
//! ```
//!
//! (the probability clause is the `Q = I` instance). Two other shapes are
//! sometimes written for these clauses and both are rejected here: a product
//! of a branch-weight expectation and a satisfaction mass is exact on point
//! distributions but decouples on mixtures (so it breaks on programs that
//! measure twice), and leaving the condition unwrapped judges it against the
//! pre-measurement state. A three-term variant built from an undefined
//! bracketed atomic-projector modality is likewise not produced.

use std::sync::Arc;

use crate::cqstate::linalg;
use crate::cqstate::projector_dense;
use crate::error::QhlError;
use crate::syntax::ast::{
    BoolExpr, Command, DetAssertion, MaskPattern, ProbFormula, ProjectorSpec, RealExpr,
};
use crate::syntax::subst::subst_prog_var;
use crate::syntax::Declarations;

#[derive(Debug, Clone, Copy)]
pub struct DepthConfig {
    /// Bound `K` for the while clause of the deterministic calculus: the
    /// emitted conjunction covers approximants `0..=K`.
    pub wp_while_depth: usize,
    /// Bound `N` for the preterm while clauses: series are truncated to `N`
    /// terms. Preterm output grows quickly in `N`; keep it small when a
    /// loop is involved.
    pub pt_while_terms: usize,
}

impl Default for DepthConfig {
    fn default() -> Self {
        DepthConfig {
            wp_while_depth: 64,
            pt_while_terms: 64,
        }
    }
}

const CONJ_TOL: f64 = 1e-9;

/// Weakest precondition of a deterministic assertion.
pub fn wp_det(cmd: &Command, phi: &DetAssertion, depth: &DepthConfig) -> DetAssertion {
    match cmd {
        Command::Skip => phi.clone(),
        Command::Assign(x, e) => subst_prog_var(phi, x, e),
        Command::RandAssign(x, branches) => DetAssertion::and_all(
            branches
                .iter()
                .map(|(_, k)| subst_prog_var(phi, x, &int(*k)))
                .collect(),
        ),
        Command::Seq(c1, c2) => wp_det(c1, &wp_det(c2, phi, depth), depth),
        Command::If(guard, c1, c2) => {
            let b = guard.to_assertion();
            DetAssertion::or(
                DetAssertion::and(b.clone(), wp_det(c1, phi, depth)),
                DetAssertion::and(DetAssertion::not(b), wp_det(c2, phi, depth)),
            )
        }
        Command::While(guard, body) => {
            let b = guard.to_assertion();
            let mut approximants = vec![DetAssertion::True];
            let mut prev = DetAssertion::True;
            for _ in 0..depth.wp_while_depth.max(1) {
                let next = DetAssertion::or(
                    DetAssertion::and(b.clone(), wp_det(body, &prev, depth)),
                    DetAssertion::and(DetAssertion::not(b.clone()), phi.clone()),
                );
                approximants.push(next.clone());
                prev = next;
            }
            DetAssertion::BigAnd(approximants)
        }
        Command::Unitary(app) => DetAssertion::box_u(app.clone(), phi.clone()),
        Command::Measure(x, qubit) => measure_wp(phi, x, *qubit),
    }
}

/// The MEASURE precondition shape:
/// `([Proj j,0] phi[X/0] \/ P1_j) /\ ([Proj j,1] phi[X/1] \/ P0_j)`.
fn measure_wp(phi: &DetAssertion, x: &str, qubit: usize) -> DetAssertion {
    let phi0 = subst_prog_var(phi, x, &int(0));
    let phi1 = subst_prog_var(phi, x, &int(1));
    DetAssertion::and(
        DetAssertion::or(
            DetAssertion::box_proj(qubit, 0, phi0),
            DetAssertion::proj(qubit, 1),
        ),
        DetAssertion::or(
            DetAssertion::box_proj(qubit, 1, phi1),
            DetAssertion::proj(qubit, 0),
        ),
    )
}

fn int(n: i64) -> crate::syntax::ast::ArithExpr {
    crate::syntax::ast::ArithExpr::IntConst(n)
}

/// Conditional term `r / phi`: constants and real variables unchanged,
/// probability and cq-conditional atoms conjoined with the condition,
/// arithmetic and bounded sums homomorphic.
pub fn cond_term_assert(r: &RealExpr, condition: &DetAssertion) -> RealExpr {
    match r {
        RealExpr::Const(_) | RealExpr::Var(_) => r.clone(),
        RealExpr::Prob(phi) => {
            RealExpr::prob(DetAssertion::and((**phi).clone(), condition.clone()))
        }
        RealExpr::BinOp(op, l, rr) => RealExpr::binop(
            *op,
            cond_term_assert(l, condition),
            cond_term_assert(rr, condition),
        ),
        RealExpr::CqCond(phi, q) => RealExpr::cq_cond(
            DetAssertion::and((**phi).clone(), condition.clone()),
            q.clone(),
        ),
        RealExpr::BoundedSum(items) => RealExpr::BoundedSum(
            items
                .iter()
                .map(|item| cond_term_assert(item, condition))
                .collect(),
        ),
    }
}

/// Conditional term `r / B` for a program-level guard.
pub fn cond_term(r: &RealExpr, guard: &BoolExpr) -> RealExpr {
    cond_term_assert(r, &guard.to_assertion())
}

/// Weakest preterm: the real expression whose value on the input state
/// equals `r`'s value on the output state of `cmd`.
pub fn preterm(
    cmd: &Command,
    r: &RealExpr,
    depth: &DepthConfig,
    decls: &Declarations,
) -> Result<RealExpr, QhlError> {
    match r {
        RealExpr::Const(_) | RealExpr::Var(_) => Ok(r.clone()),
        RealExpr::BinOp(op, l, rr) => Ok(RealExpr::binop(
            *op,
            preterm(cmd, l, depth, decls)?,
            preterm(cmd, rr, depth, decls)?,
        )),
        RealExpr::BoundedSum(items) => Ok(RealExpr::BoundedSum(
            items
                .iter()
                .map(|item| preterm(cmd, item, depth, decls))
                .collect::<Result<_, _>>()?,
        )),
        RealExpr::Prob(phi) => preterm_prob(cmd, phi, depth, decls),
        RealExpr::CqCond(phi, q) => preterm_cq(cmd, phi, q, depth, decls),
    }
}

fn preterm_prob(
    cmd: &Command,
    phi: &DetAssertion,
    depth: &DepthConfig,
    decls: &Declarations,
) -> Result<RealExpr, QhlError> {
    match cmd {
        Command::Skip => Ok(RealExpr::prob(phi.clone())),
        Command::Assign(x, e) => Ok(RealExpr::prob(subst_prog_var(phi, x, e))),
        Command::RandAssign(x, branches) => {
            // Inclusion-weighted sum over the nonempty subsets of branches:
            // the subset records which of phi[X/k_i] hold after assignment.
            let n = branches.len();
            let mut terms = Vec::new();
            let mut masks: Vec<usize> = (1..1usize << n).collect();
            masks.sort_by_key(|m| (m.count_ones(), *m));
            for mask in masks {
                let coeff: f64 = branches
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, (a, _))| a)
                    .sum();
                let lits: Vec<DetAssertion> = branches
                    .iter()
                    .enumerate()
                    .map(|(i, (_, k))| {
                        let sub = subst_prog_var(phi, x, &int(*k));
                        if mask & (1 << i) != 0 {
                            sub
                        } else {
                            DetAssertion::not(sub)
                        }
                    })
                    .collect();
                terms.push(RealExpr::mul(
                    RealExpr::Const(coeff),
                    RealExpr::prob(DetAssertion::and_all(lits)),
                ));
            }
            Ok(RealExpr::sum_all(terms))
        }
        Command::Unitary(app) => Ok(RealExpr::prob(DetAssertion::box_u(
            app.clone(),
            phi.clone(),
        ))),
        Command::Measure(x, qubit) => {
            // Each branch contributes its Born weight exactly when the
            // post-measurement state satisfies phi, which is the
            // cq-conditional `([Proj j,i] phi[X/i]) => P_j^i`. The weight
            // factor lives in the projector, so the zero-probability branch
            // contributes zero no matter how the vacuous modality is read,
            // and the term is linear in the state (a product of a separate
            // weight expectation and a satisfaction mass is exact only on
            // point distributions and decouples on mixtures).
            let m = decls.num_qubits;
            let term = |outcome: u8| {
                RealExpr::cq_cond(
                    DetAssertion::box_proj(
                        *qubit,
                        outcome,
                        subst_prog_var(phi, x, &int(outcome as i64)),
                    ),
                    ProjectorSpec::single_bit(*qubit, outcome, m),
                )
            };
            Ok(RealExpr::add(term(0), term(1)))
        }
        Command::Seq(c1, c2) => {
            let inner = preterm_prob(c2, phi, depth, decls)?;
            preterm(c1, &inner, depth, decls)
        }
        Command::If(guard, c1, c2) => {
            let t = preterm_prob(c1, phi, depth, decls)?;
            let e = preterm_prob(c2, phi, depth, decls)?;
            Ok(RealExpr::add(
                cond_term(&t, guard),
                cond_term(&e, &BoolExpr::not(guard.clone())),
            ))
        }
        Command::While(guard, body) => {
            preterm_while(guard, body, RealExpr::prob(phi.clone()), depth, decls)
        }
    }
}

fn preterm_cq(
    cmd: &Command,
    phi: &DetAssertion,
    q: &ProjectorSpec,
    depth: &DepthConfig,
    decls: &Declarations,
) -> Result<RealExpr, QhlError> {
    match cmd {
        Command::Skip => Ok(RealExpr::cq_cond(phi.clone(), q.clone())),
        Command::Assign(x, e) => Ok(RealExpr::cq_cond(subst_prog_var(phi, x, e), q.clone())),
        Command::RandAssign(x, branches) => {
            let terms: Vec<RealExpr> = branches
                .iter()
                .map(|(a, k)| {
                    RealExpr::mul(
                        RealExpr::Const(*a),
                        RealExpr::cq_cond(subst_prog_var(phi, x, &int(*k)), q.clone()),
                    )
                })
                .collect();
            Ok(RealExpr::sum_all(terms))
        }
        Command::Unitary(app) => {
            let conjugated = conjugate_by_gate(q, app, decls)?;
            Ok(RealExpr::cq_cond(
                DetAssertion::box_u(app.clone(), phi.clone()),
                conjugated,
            ))
        }
        Command::Measure(x, qubit) => {
            // The condition is wrapped in the projection modality so that it
            // is judged against the post-measurement state. Without the
            // wrapper the identity with execution only holds for conditions
            // that ignore the quantum part; with it the p_i weight is
            // carried by the sandwiched operator (whose expectation vanishes
            // exactly when the branch does).
            let term = |outcome: u8| -> Result<RealExpr, QhlError> {
                let sandwiched = sandwich_projector(q, *qubit, outcome, decls)?;
                Ok(RealExpr::cq_cond(
                    DetAssertion::box_proj(
                        *qubit,
                        outcome,
                        subst_prog_var(phi, x, &int(outcome as i64)),
                    ),
                    sandwiched,
                ))
            };
            Ok(RealExpr::add(term(0)?, term(1)?))
        }
        Command::Seq(c1, c2) => {
            let inner = preterm_cq(c2, phi, q, depth, decls)?;
            preterm(c1, &inner, depth, decls)
        }
        Command::If(guard, c1, c2) => {
            let t = preterm_cq(c1, phi, q, depth, decls)?;
            let e = preterm_cq(c2, phi, q, depth, decls)?;
            Ok(RealExpr::add(
                cond_term(&t, guard),
                cond_term(&e, &BoolExpr::not(guard.clone())),
            ))
        }
        Command::While(guard, body) => preterm_while(
            guard,
            body,
            RealExpr::cq_cond(phi.clone(), q.clone()),
            depth,
            decls,
        ),
    }
}

/// `U^dagger Q U` computed numerically on the full space, revalidated as a
/// projector (conjugating a projector by a unitary must give a projector, so
/// a tolerance breach signals an internal inconsistency).
fn conjugate_by_gate(
    q: &ProjectorSpec,
    app: &crate::syntax::ast::GateApp,
    decls: &Declarations,
) -> Result<ProjectorSpec, QhlError> {
    let m = decls.num_qubits;
    let q_dense = projector_dense(q, m);
    let u = linalg::embed_gate(&decls.gate_matrix(&app.gate)?, &app.qubits, m);
    let out = u.adjoint().mul_mat(&q_dense).mul_mat(&u);
    if !out.is_hermitian(CONJ_TOL) || !out.is_idempotent(CONJ_TOL) {
        return Err(QhlError::Numeric(
            "conjugated operator failed the projector check".into(),
        ));
    }
    Ok(ProjectorSpec::Dense {
        name: None,
        matrix: Arc::new(out),
    })
}

/// `P_j^i Q P_j^i`. For a basis-mask `Q` the sandwich is the exact mask
/// intersection and stays a projector. For dense `Q` the result is a
/// Hermitian operator but generally not idempotent (the projectors need not
/// commute), so only Hermiticity is enforced.
fn sandwich_projector(
    q: &ProjectorSpec,
    qubit: usize,
    outcome: u8,
    decls: &Declarations,
) -> Result<ProjectorSpec, QhlError> {
    match q {
        ProjectorSpec::Mask(patterns) => {
            let want = if outcome == 0 { b'0' } else { b'1' };
            let mut out = Vec::new();
            for p in patterns {
                let mut bytes = p.0.clone().into_bytes();
                let slot = &mut bytes[qubit - 1];
                if *slot == b'*' {
                    *slot = want;
                } else if *slot != want {
                    continue; // orthogonal to the sandwich, pattern drops
                }
                out.push(MaskPattern(String::from_utf8(bytes).unwrap()));
            }
            Ok(ProjectorSpec::Mask(out))
        }
        ProjectorSpec::Dense { matrix, .. } => {
            let out = linalg::sandwich_single_bit(matrix, qubit, outcome, decls.num_qubits);
            if !out.is_hermitian(CONJ_TOL) {
                return Err(QhlError::Numeric(
                    "sandwiched operator failed the Hermiticity check".into(),
                ));
            }
            Ok(ProjectorSpec::Dense {
                name: None,
                matrix: Arc::new(out),
            })
        }
    }
}

/// The while clause shared by the probability and cq-conditional cases; the
/// seed is `P[phi]` or `(phi => Q)` respectively.
///
/// With `wp(i)` the assertion "the loop exits after exactly `i` rounds" and
/// `wp(inf)` its never-exits counterpart (approximated by a bounded
/// conjunction of depth `K`), the output is the `N`-term truncation of
///
/// ```text
/// sum_i T_i,   T_0 = SUM,   T_i = f^i(SUM) * prod_{j<i} f^j(P[wp(inf)])
/// SUM  = sum_i P[wp(i)] * (pt(IF^i, seed) / wp(i))
/// f(r) = pt(C, r) / wp(inf),   IF = if B then C else skip
/// ```
fn preterm_while(
    guard: &BoolExpr,
    body: &Command,
    seed: RealExpr,
    depth: &DepthConfig,
    decls: &Declarations,
) -> Result<RealExpr, QhlError> {
    let n_terms = depth.pt_while_terms.max(1);
    let k_depth = depth.wp_while_depth;
    let not_guard = DetAssertion::not(guard.to_assertion());

    // wp_pow[i] = wp(C^i, !B), built incrementally.
    let mut wp_pow = vec![not_guard.clone()];
    for _ in 0..n_terms.max(k_depth) {
        let prev = wp_pow.last().unwrap();
        wp_pow.push(wp_det(body, prev, depth));
    }

    // wp(i): exits after exactly i rounds.
    let exits_at = |i: usize| -> DetAssertion {
        let mut lits: Vec<DetAssertion> = (0..i)
            .map(|j| DetAssertion::not(wp_pow[j].clone()))
            .collect();
        lits.push(wp_pow[i].clone());
        DetAssertion::and_all(lits)
    };

    // wp(inf): never exits, bounded at depth K.
    let wp_inf = DetAssertion::BigAnd(
        (0..=k_depth)
            .map(|i| DetAssertion::not(wp_pow[i].clone()))
            .collect(),
    );

    let if_cmd = Command::If(
        guard.clone(),
        Box::new(body.clone()),
        Box::new(Command::Skip),
    );

    // SUM, with pt(IF^i, seed) built by repeated application of pt(IF, .).
    let mut sum_terms = Vec::with_capacity(n_terms);
    let mut pt_if_pow = seed;
    for i in 0..n_terms {
        let cond = exits_at(i);
        sum_terms.push(RealExpr::mul(
            RealExpr::prob(cond.clone()),
            cond_term_assert(&pt_if_pow, &cond),
        ));
        if i + 1 < n_terms {
            pt_if_pow = preterm(&if_cmd, &pt_if_pow, depth, decls)?;
        }
    }
    let sum = RealExpr::BoundedSum(sum_terms);

    // T_i = f^i(SUM) * prod_{j<i} f^j(P[wp(inf)]), f(r) = pt(C, r)/wp(inf).
    let f = |r: &RealExpr| -> Result<RealExpr, QhlError> {
        Ok(cond_term_assert(&preterm(body, r, depth, decls)?, &wp_inf))
    };
    let mut tees = Vec::with_capacity(n_terms);
    let mut f_sum = sum;
    let mut f_mass = RealExpr::prob(wp_inf.clone());
    let mut mass_product: Option<RealExpr> = None;
    for i in 0..n_terms {
        let t_i = match &mass_product {
            None => f_sum.clone(),
            Some(prod) => RealExpr::mul(f_sum.clone(), prod.clone()),
        };
        tees.push(t_i);
        if i + 1 < n_terms {
            f_sum = f(&f_sum)?;
            mass_product = Some(match mass_product {
                None => f_mass.clone(),
                Some(prod) => RealExpr::mul(prod, f_mass.clone()),
            });
            f_mass = f(&f_mass)?;
        }
    }
    Ok(RealExpr::BoundedSum(tees))
}

/// Weakest precondition of a probabilistic formula: relational atoms map
/// both sides through the preterm transformer.
pub fn wp_prob(
    cmd: &Command,
    formula: &ProbFormula,
    depth: &DepthConfig,
    decls: &Declarations,
) -> Result<ProbFormula, QhlError> {
    match formula {
        ProbFormula::Rel(op, l, r) => Ok(ProbFormula::Rel(
            *op,
            preterm(cmd, l, depth, decls)?,
            preterm(cmd, r, depth, decls)?,
        )),
        ProbFormula::Not(inner) => Ok(ProbFormula::not(wp_prob(cmd, inner, depth, decls)?)),
        ProbFormula::And(l, r) => Ok(ProbFormula::and(
            wp_prob(cmd, l, depth, decls)?,
            wp_prob(cmd, r, depth, decls)?,
        )),
    }
}
