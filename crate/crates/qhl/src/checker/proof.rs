//! Structural checking of proof scripts.
//!
//! Axiom steps are checked by computing the rule schema's precondition from
//! the step's own conclusion (substitutions are computed, never guessed) and
//! comparing structurally. SEQ/IF/WHILE premises are matched structurally
//! against the named earlier steps. CONS entailment side conditions are
//! checked by evaluation over the suite and the verdict is labeled
//! `checked_on_suite`: a failure is a definitive counterexample, a pass is
//! evidence only.

use std::collections::BTreeMap;

use crate::assertions::{sat_prob, sat_pure, EvalFlags};
use crate::cqstate::Interpretation;
use crate::error::QhlError;
use crate::syntax::ast::{
    Command, DetAssertion, ProbFormula, ProofScript, ProofStep, RuleName, Triple, TripleBody,
};
use crate::syntax::pretty::{pretty_dassert, pretty_passert};
use crate::syntax::Declarations;
use crate::wpcalc::{wp_det, wp_prob};

use super::{CheckConfig, Counterexample, StateSuite, Verdict, VerdictStatus};

pub fn check_proof(
    script: &ProofScript,
    suite: &StateSuite,
    decls: &Declarations,
    interp: &Interpretation,
    cfg: &CheckConfig,
) -> Result<Verdict, QhlError> {
    let mut verdict = Verdict {
        status: VerdictStatus::ValidOnSuite,
        labels: super::Labels::default(),
        counterexample: None,
        states: Vec::new(),
    };
    let mut flags = EvalFlags::default();
    let mut by_name: BTreeMap<&str, &ProofStep> = BTreeMap::new();

    for step in &script.steps {
        let premises: Vec<&ProofStep> = step
            .premises
            .iter()
            .map(|p| {
                by_name.get(p.as_str()).copied().ok_or_else(|| {
                    QhlError::eval(format!("step {}: unknown premise {p}", step.name))
                })
            })
            .collect::<Result<_, _>>()?;
        check_premise_count(step, &premises)?;
        match check_step(step, &premises, suite, decls, interp, cfg, &mut flags)? {
            StepOutcome::Ok => {}
            StepOutcome::SuiteCounterexample(ce) => {
                verdict.counterexample = Some(ce);
                verdict.status = VerdictStatus::Invalid;
                verdict.labels.checked_on_suite = true;
                return Ok(verdict);
            }
        }
        by_name.insert(&step.name, step);
    }

    verdict.labels.range_bounded = flags.range_bounded;
    verdict.labels.depth_bounded = flags.depth_bounded;
    verdict.labels.checked_on_suite |= script.steps.iter().any(|s| s.rule == RuleName::Cons);
    Ok(verdict)
}

enum StepOutcome {
    Ok,
    SuiteCounterexample(Counterexample),
}

fn check_premise_count(step: &ProofStep, premises: &[&ProofStep]) -> Result<(), QhlError> {
    let det = step.conclusion.body.sort() == crate::syntax::ast::TripleSort::Deterministic;
    let expected = match (step.rule, det) {
        (RuleName::Seq, _) => 2,
        (RuleName::Cons, _) => 1,
        (RuleName::If, true) => 2,
        (RuleName::While, true) => 1,
        // in the probabilistic system IF and WHILE are wp-style axioms
        _ => 0,
    };
    if premises.len() != expected {
        return Err(mismatch(
            step,
            format!("rule takes {expected} premise(s), {} given", premises.len()),
        ));
    }
    Ok(())
}

fn mismatch(step: &ProofStep, detail: impl Into<String>) -> QhlError {
    QhlError::RuleMismatch {
        step: step.name.clone(),
        rule: step.rule.name().to_string(),
        detail: detail.into(),
    }
}

fn det_body(step: &ProofStep, t: &Triple) -> Result<(DetAssertion, DetAssertion), QhlError> {
    match &t.body {
        TripleBody::Det { pre, post } => Ok((pre.clone(), post.clone())),
        TripleBody::Prob { .. } => Err(mismatch(step, "expected a deterministic triple")),
    }
}

fn prob_body(step: &ProofStep, t: &Triple) -> Result<(ProbFormula, ProbFormula), QhlError> {
    match &t.body {
        TripleBody::Prob { pre, post } => Ok((pre.clone(), post.clone())),
        TripleBody::Det { .. } => Err(mismatch(step, "expected a probabilistic triple")),
    }
}

fn expect_det_pre(
    step: &ProofStep,
    given: &DetAssertion,
    expected: &DetAssertion,
) -> Result<(), QhlError> {
    if given != expected {
        return Err(mismatch(
            step,
            format!(
                "precondition does not match the rule schema\n  expected: {}\n  given:    {}",
                pretty_dassert(expected),
                pretty_dassert(given)
            ),
        ));
    }
    Ok(())
}

fn expect_prob_pre(
    step: &ProofStep,
    given: &ProbFormula,
    expected: &ProbFormula,
) -> Result<(), QhlError> {
    if given != expected {
        return Err(mismatch(
            step,
            format!(
                "precondition does not match the rule schema\n  expected: {}\n  given:    {}",
                pretty_passert(expected),
                pretty_passert(given)
            ),
        ));
    }
    Ok(())
}

fn check_step(
    step: &ProofStep,
    premises: &[&ProofStep],
    suite: &StateSuite,
    decls: &Declarations,
    interp: &Interpretation,
    cfg: &CheckConfig,
    flags: &mut EvalFlags,
) -> Result<StepOutcome, QhlError> {
    let t = &step.conclusion;
    let det = matches!(t.body, TripleBody::Det { .. });

    match step.rule {
        // Axioms: the stated precondition must equal the schema instance
        // computed from the command and the stated postcondition.
        RuleName::Skip | RuleName::As | RuleName::Pas | RuleName::Unitary | RuleName::Measure => {
            check_command_form(step, &t.prog)?;
            if det {
                let (pre, post) = det_body(step, t)?;
                let expected = wp_det(&t.prog, &post, &cfg.depth);
                expect_det_pre(step, &pre, &expected)?;
            } else {
                let (pre, post) = prob_body(step, t)?;
                let expected = wp_prob(&t.prog, &post, &cfg.depth, decls)?;
                expect_prob_pre(step, &pre, &expected)?;
            }
            Ok(StepOutcome::Ok)
        }
        RuleName::If | RuleName::While if !det => {
            check_command_form(step, &t.prog)?;
            let (pre, post) = prob_body(step, t)?;
            let expected = wp_prob(&t.prog, &post, &cfg.depth, decls)?;
            expect_prob_pre(step, &pre, &expected)?;
            Ok(StepOutcome::Ok)
        }
        RuleName::Seq => {
            let Command::Seq(c1, c2) = &t.prog else {
                return Err(mismatch(step, "conclusion command is not a sequence"));
            };
            let (p1, p2) = (premises[0], premises[1]);
            if p1.conclusion.prog != **c1 {
                return Err(mismatch(step, "first premise proves a different command"));
            }
            if p2.conclusion.prog != **c2 {
                return Err(mismatch(step, "second premise proves a different command"));
            }
            match (&t.body, &p1.conclusion.body, &p2.conclusion.body) {
                (
                    TripleBody::Det { pre, post },
                    TripleBody::Det {
                        pre: pre1,
                        post: mid1,
                    },
                    TripleBody::Det {
                        pre: mid2,
                        post: post2,
                    },
                ) => {
                    if pre1 != pre {
                        return Err(mismatch(step, "first premise precondition differs"));
                    }
                    if mid1 != mid2 {
                        return Err(mismatch(step, "premises do not share a midcondition"));
                    }
                    if post2 != post {
                        return Err(mismatch(step, "second premise postcondition differs"));
                    }
                }
                (
                    TripleBody::Prob { pre, post },
                    TripleBody::Prob {
                        pre: pre1,
                        post: mid1,
                    },
                    TripleBody::Prob {
                        pre: mid2,
                        post: post2,
                    },
                ) => {
                    if pre1 != pre {
                        return Err(mismatch(step, "first premise precondition differs"));
                    }
                    if mid1 != mid2 {
                        return Err(mismatch(step, "premises do not share a midcondition"));
                    }
                    if post2 != post {
                        return Err(mismatch(step, "second premise postcondition differs"));
                    }
                }
                _ => return Err(mismatch(step, "premise sorts do not match the conclusion")),
            }
            Ok(StepOutcome::Ok)
        }
        RuleName::If => {
            // deterministic IF rule
            let Command::If(guard, c1, c2) = &t.prog else {
                return Err(mismatch(step, "conclusion command is not a conditional"));
            };
            let (pre, post) = det_body(step, t)?;
            let b = guard.to_assertion();
            let want1 = Triple {
                prog: (**c1).clone(),
                program_name: None,
                body: TripleBody::Det {
                    pre: DetAssertion::and(pre.clone(), b.clone()),
                    post: post.clone(),
                },
            };
            let want2 = Triple {
                prog: (**c2).clone(),
                program_name: None,
                body: TripleBody::Det {
                    pre: DetAssertion::and(pre, DetAssertion::not(b)),
                    post,
                },
            };
            expect_triple(step, premises[0], &want1, "then-branch premise")?;
            expect_triple(step, premises[1], &want2, "else-branch premise")?;
            Ok(StepOutcome::Ok)
        }
        RuleName::While => {
            // deterministic WHILE rule
            let Command::While(guard, body) = &t.prog else {
                return Err(mismatch(step, "conclusion command is not a loop"));
            };
            let (pre, post) = det_body(step, t)?;
            let b = guard.to_assertion();
            let expected_post = DetAssertion::and(pre.clone(), DetAssertion::not(b.clone()));
            if post != expected_post {
                return Err(mismatch(
                    step,
                    format!(
                        "postcondition must be invariant && !guard\n  expected: {}\n  given:    {}",
                        pretty_dassert(&expected_post),
                        pretty_dassert(&post)
                    ),
                ));
            }
            let want = Triple {
                prog: (**body).clone(),
                program_name: None,
                body: TripleBody::Det {
                    pre: DetAssertion::and(pre.clone(), b),
                    post: pre,
                },
            };
            expect_triple(step, premises[0], &want, "loop-body premise")?;
            Ok(StepOutcome::Ok)
        }
        RuleName::Cons => {
            let premise = premises[0];
            if premise.conclusion.prog != t.prog {
                return Err(mismatch(step, "premise proves a different command"));
            }
            match (&t.body, &premise.conclusion.body) {
                (
                    TripleBody::Det {
                        pre: pre_new,
                        post: post_new,
                    },
                    TripleBody::Det {
                        pre: pre_old,
                        post: post_old,
                    },
                ) => {
                    // |= pre_new -> pre_old and |= post_old -> post_new,
                    // checked on the suite's pure states.
                    for (index, (label, theta)) in suite.pure_states.iter().enumerate() {
                        let lhs = sat_pure(pre_new, theta, interp, decls, &cfg.sat, flags)?;
                        if lhs && !sat_pure(pre_old, theta, interp, decls, &cfg.sat, flags)? {
                            return Ok(StepOutcome::SuiteCounterexample(Counterexample {
                                state_index: index,
                                state_label: label.clone(),
                                state: super::render_pure(theta),
                                observed: format!(
                                    "step {}: precondition entailment fails on this state",
                                    step.name
                                ),
                            }));
                        }
                        let lhs = sat_pure(post_old, theta, interp, decls, &cfg.sat, flags)?;
                        if lhs && !sat_pure(post_new, theta, interp, decls, &cfg.sat, flags)? {
                            return Ok(StepOutcome::SuiteCounterexample(Counterexample {
                                state_index: index,
                                state_label: label.clone(),
                                state: super::render_pure(theta),
                                observed: format!(
                                    "step {}: postcondition entailment fails on this state",
                                    step.name
                                ),
                            }));
                        }
                    }
                    Ok(StepOutcome::Ok)
                }
                (
                    TripleBody::Prob {
                        pre: pre_new,
                        post: post_new,
                    },
                    TripleBody::Prob {
                        pre: pre_old,
                        post: post_old,
                    },
                ) => {
                    for (index, (label, theta)) in suite.mixed_states.iter().enumerate() {
                        let lhs = sat_prob(pre_new, theta, interp, decls, &cfg.sat, flags)?;
                        if lhs && !sat_prob(pre_old, theta, interp, decls, &cfg.sat, flags)? {
                            return Ok(StepOutcome::SuiteCounterexample(Counterexample {
                                state_index: index,
                                state_label: label.clone(),
                                state: super::render_mixed(theta),
                                observed: format!(
                                    "step {}: precondition entailment fails on this state",
                                    step.name
                                ),
                            }));
                        }
                        let lhs = sat_prob(post_old, theta, interp, decls, &cfg.sat, flags)?;
                        if lhs && !sat_prob(post_new, theta, interp, decls, &cfg.sat, flags)? {
                            return Ok(StepOutcome::SuiteCounterexample(Counterexample {
                                state_index: index,
                                state_label: label.clone(),
                                state: super::render_mixed(theta),
                                observed: format!(
                                    "step {}: postcondition entailment fails on this state",
                                    step.name
                                ),
                            }));
                        }
                    }
                    Ok(StepOutcome::Ok)
                }
                _ => Err(mismatch(step, "premise sort does not match the conclusion")),
            }
        }
    }
}

fn check_command_form(step: &ProofStep, cmd: &Command) -> Result<(), QhlError> {
    let ok = match step.rule {
        RuleName::Skip => matches!(cmd, Command::Skip),
        RuleName::As => matches!(cmd, Command::Assign(_, _)),
        RuleName::Pas => matches!(cmd, Command::RandAssign(_, _)),
        RuleName::Unitary => matches!(cmd, Command::Unitary(_)),
        RuleName::Measure => matches!(cmd, Command::Measure(_, _)),
        RuleName::If => matches!(cmd, Command::If(_, _, _)),
        RuleName::While => matches!(cmd, Command::While(_, _)),
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(mismatch(
            step,
            "conclusion command does not have the rule's shape",
        ))
    }
}

fn expect_triple(
    step: &ProofStep,
    given: &ProofStep,
    want: &Triple,
    what: &str,
) -> Result<(), QhlError> {
    if given.conclusion.prog != want.prog || given.conclusion.body != want.body {
        return Err(mismatch(
            step,
            format!(
                "{what} does not match\n  expected: {}\n  given:    {}",
                crate::syntax::pretty::pretty_triple(want),
                crate::syntax::pretty::pretty_triple(&given.conclusion)
            ),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::sample::SuiteParams;
    use crate::syntax::parse_spec;

    fn check(src: &str, proof: &str) -> Result<Verdict, QhlError> {
        let f = parse_spec(src).unwrap();
        let suite = StateSuite::build(
            &f.decls,
            f.states.clone(),
            &SuiteParams {
                count: 10,
                ..SuiteParams::default()
            },
        )
        .unwrap();
        check_proof(
            &f.proofs[proof],
            &suite,
            &f.decls,
            &f.decls.interpretation(),
            &CheckConfig::default(),
        )
    }

    #[test]
    fn skip_axiom_is_accepted() {
        let v = check(
            "qubits 1\nvars X\nproof p { s1: SKIP {X = 0} skip {X = 0}; }",
            "p",
        )
        .unwrap();
        assert_eq!(v.status, VerdictStatus::ValidOnSuite);
    }

    #[test]
    fn skip_with_different_pre_post_is_rejected() {
        let err = check(
            "qubits 1\nvars X\nproof p { s1: SKIP {X = 0} skip {X = 1}; }",
            "p",
        )
        .unwrap_err();
        assert!(matches!(err, QhlError::RuleMismatch { .. }), "{err}");
    }

    #[test]
    fn unitary_axiom_checks_the_modality() {
        let v = check(
            "qubits 1\nvars X\nproof p { s1: UNITARY {[H[q1]] P0(1)} H[q1] {P0(1)}; }",
            "p",
        )
        .unwrap();
        assert_eq!(v.status, VerdictStatus::ValidOnSuite);

        let err = check(
            "qubits 1\nvars X\nproof p { s1: UNITARY {P0(1)} H[q1] {[H[q1]] P0(1)}; }",
            "p",
        )
        .unwrap_err();
        assert!(matches!(err, QhlError::RuleMismatch { .. }));
    }

    #[test]
    fn cons_side_conditions_are_suite_checked() {
        // X = 0 entails X >= 0: accepted (with the checked-on-suite label)
        let v = check(
            "qubits 1\nvars X\nproof p {\n s1: SKIP {X >= 0} skip {X >= 0};\n s2: CONS(s1) {X = 0} skip {X >= 0};\n}",
            "p",
        )
        .unwrap();
        assert_eq!(v.status, VerdictStatus::ValidOnSuite);
        assert!(v.labels.checked_on_suite);

        // X >= 0 does not entail X = 0: rejected with a counterexample
        let v = check(
            "qubits 1\nvars X\nproof p {\n s1: SKIP {X = 0} skip {X = 0};\n s2: CONS(s1) {X >= 0} skip {X = 0};\n}",
            "p",
        )
        .unwrap();
        assert_eq!(v.status, VerdictStatus::Invalid);
        assert!(v.counterexample.is_some());
    }

    #[test]
    fn while_rule_requires_an_invariant_shape() {
        let src = "qubits 1\nvars X\nproof p {\n            body: AS {X - 1 >= 0} X <- X - 1 {X >= 0};\n            inv: CONS(body) {X >= 0 && X > 0} X <- X - 1 {X >= 0};\n            loop: WHILE(inv) {X >= 0} while X > 0 do X <- X - 1 {X >= 0 && !(X > 0)};\n}";
        let v = check(src, "p").unwrap();
        assert_eq!(v.status, VerdictStatus::ValidOnSuite);

        // wrong conclusion postcondition: not invariant && !guard
        let bad = "qubits 1\nvars X\nproof p {\n            body: AS {X - 1 >= 0} X <- X - 1 {X >= 0};\n            inv: CONS(body) {X >= 0 && X > 0} X <- X - 1 {X >= 0};\n            loop: WHILE(inv) {X >= 0} while X > 0 do X <- X - 1 {X >= 0};\n}";
        let err = check(bad, "p").unwrap_err();
        assert!(matches!(err, QhlError::RuleMismatch { .. }));
    }

    #[test]
    fn if_rule_matches_branch_premises() {
        let src = "qubits 1\nvars X\nproof p {\n            t: AS {0 = 0} X <- 0 {X = 0};\n            ct: CONS(t) {true && X > 0} X <- 0 {X = 0};\n            e: AS {X = 0} X <- X {X = 0};\n            ce: CONS(e) {true && !(X > 0)} X <- X {X = 0};\n            br: IF(ct, ce) {true} if X > 0 then X <- 0 else X <- X {X = 0};\n}";
        let v = check(src, "p");
        // the else-branch consequence fails on states with X != 0
        assert!(matches!(
            v,
            Ok(Verdict {
                status: VerdictStatus::Invalid,
                ..
            })
        ));

        let good = "qubits 1\nvars X\nproof p {\n            t: AS {0 = 0} X <- 0 {X = 0};\n            ct: CONS(t) {true && X > 0} X <- 0 {X = 0};\n            e: AS {0 = 0} X <- 0 {X = 0};\n            ce: CONS(e) {true && !(X > 0)} X <- 0 {X = 0};\n            br: IF(ct, ce) {true} if X > 0 then X <- 0 else X <- 0 {X = 0};\n}";
        let v = check(good, "p").unwrap();
        assert_eq!(v.status, VerdictStatus::ValidOnSuite);
    }

    #[test]
    fn seq_premises_must_chain() {
        let src = "qubits 1\nvars X\nproof p {\n s1: AS {1 = 1} X <- 1 {X = 1};\n s2: SKIP {X = 1} skip {X = 1};\n s3: SEQ(s1, s2) {1 = 1} X <- 1; skip {X = 1};\n}";
        let v = check(src, "p").unwrap();
        assert_eq!(v.status, VerdictStatus::ValidOnSuite);
    }
}
