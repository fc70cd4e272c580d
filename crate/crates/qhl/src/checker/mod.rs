//! Hoare-triple verdicts over a test-state suite.
//!
//! Validity over all cq-states is undecidable, so every verdict here is
//! suite-relative: `VALID_ON_SUITE` means no suite state refuted the triple.
//! An `INVALID` verdict always carries a replayable counterexample (the
//! suite is deterministic under its seed and states are checked in index
//! order, so first-failure reporting is stable). A run that relied on a
//! truncated loop (leftover guard mass, bounded conjunction, bounded sum)
//! is downgraded to `DEPTH_BOUNDED` rather than reported valid.

pub mod proof;
pub mod sample;

use serde::Serialize;

use crate::assertions::{sat_mixed, sat_prob, sat_pure, EvalFlags, SatConfig};
use crate::cqstate::{point_dist, Interpretation, MixedCqState, PureCqState};
use crate::error::QhlError;
use crate::semantics::{exec, exec_pure, ExecConfig};
use crate::syntax::ast::{Triple, TripleBody};
use crate::syntax::pretty::format_complex;
use crate::syntax::Declarations;
use crate::wpcalc::{wp_det, wp_prob, DepthConfig};
pub use sample::{sample_states, SuiteParams};

pub use crate::syntax::ast::{ProofScript, ProofStep, RuleName, TripleSort};

/// Residual guard mass above this threshold downgrades a verdict.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct CheckConfig {
    pub exec: ExecConfig,
    pub sat: SatConfig,
    pub depth: DepthConfig,
}

/// Test states for a triple: labeled pure states (deterministic sort) and
/// labeled mixed states (probabilistic sort).
#[derive(Debug, Clone, Default)]
pub struct StateSuite {
    pub pure_states: Vec<(String, PureCqState)>,
    pub mixed_states: Vec<(String, MixedCqState)>,
}

impl StateSuite {
    /// Explicit spec-file states first, then `params.count` random pure and
    /// mixed states. Point distributions of the pure states are included in
    /// the mixed list.
    pub fn build(
        decls: &Declarations,
        explicit: impl IntoIterator<Item = (String, PureCqState)>,
        params: &SuiteParams,
    ) -> Result<StateSuite, QhlError> {
        let mut suite = StateSuite::default();
        for (name, state) in explicit {
            suite
                .mixed_states
                .push((format!("point:{name}"), point_dist(&state)?));
            suite.pure_states.push((name, state));
        }
        let (pure, mixed) = sample_states(decls, params)?;
        for (i, s) in pure.into_iter().enumerate() {
            suite
                .mixed_states
                .push((format!("point:random:{i}"), point_dist(&s)?));
            suite.pure_states.push((format!("random:{i}"), s));
        }
        for (i, s) in mixed.into_iter().enumerate() {
            suite.mixed_states.push((format!("mixed:{i}"), s));
        }
        Ok(suite)
    }

    pub fn from_pure(
        states: impl IntoIterator<Item = PureCqState>,
    ) -> Result<StateSuite, QhlError> {
        let mut suite = StateSuite::default();
        for (i, s) in states.into_iter().enumerate() {
            suite
                .mixed_states
                .push((format!("point:{i}"), point_dist(&s)?));
            suite.pure_states.push((format!("{i}"), s));
        }
        Ok(suite)
    }

    /// Like [`StateSuite::build`], but random states are drawn to satisfy
    /// the triple's precondition where possible (qubits pinned by projector
    /// conjuncts, otherwise rejection sampling), so the check is not
    /// vacuous on tight preconditions. Falls back to unconstrained samples
    /// when no satisfying state can be found.
    pub fn build_for_triple(
        decls: &Declarations,
        explicit: impl IntoIterator<Item = (String, PureCqState)>,
        params: &SuiteParams,
        triple: &Triple,
        interp: &Interpretation,
        sat: &SatConfig,
    ) -> Result<StateSuite, QhlError> {
        let mut suite = StateSuite::default();
        for (name, state) in explicit {
            suite
                .mixed_states
                .push((format!("point:{name}"), point_dist(&state)?));
            suite.pure_states.push((name, state));
        }
        let mut rng = sample::rng_for(params.seed);
        match &triple.body {
            TripleBody::Det { pre, .. } => {
                for i in 0..params.count {
                    let state =
                        sample::sample_pure_satisfying(pre, decls, interp, params, sat, &mut rng)
                            .unwrap_or_else(|_| sample::sample_pure(decls, params, &mut rng));
                    suite
                        .mixed_states
                        .push((format!("point:random:{i}"), point_dist(&state)?));
                    suite.pure_states.push((format!("random:{i}"), state));
                }
            }
            TripleBody::Prob { pre, .. } => {
                for i in 0..params.count {
                    let mut chosen = None;
                    for _ in 0..100 {
                        let cand = sample::sample_mixed(decls, params, &mut rng)?;
                        let mut flags = EvalFlags::default();
                        if sat_prob(pre, &cand, interp, decls, sat, &mut flags)? {
                            chosen = Some(cand);
                            break;
                        }
                    }
                    let state = match chosen {
                        Some(s) => s,
                        None => sample::sample_mixed(decls, params, &mut rng)?,
                    };
                    suite.mixed_states.push((format!("mixed:{i}"), state));
                }
            }
        }
        Ok(suite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictStatus {
    ValidOnSuite,
    Invalid,
    DepthBounded,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Labels {
    /// A quantifier was checked over a declared finite range only.
    pub range_bounded: bool,
    /// The verdict relied on a truncated loop or bounded node.
    pub depth_bounded: bool,
    /// An entailment side condition was checked by evaluation on the suite.
    pub checked_on_suite: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub state_index: usize,
    pub state_label: String,
    pub state: String,
    pub observed: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateLog {
    pub index: usize,
    pub label: String,
    pub precondition_holds: bool,
    /// `None` when the precondition did not hold (state skipped).
    pub passed: Option<bool>,
    pub residual_mass: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub labels: Labels,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub states: Vec<StateLog>,
}

impl Verdict {
    fn conclude(mut self, flags: EvalFlags, any_residual: bool) -> Verdict {
        self.labels.range_bounded |= flags.range_bounded;
        self.labels.depth_bounded |= flags.depth_bounded || any_residual;
        if self.counterexample.is_some() {
            self.status = VerdictStatus::Invalid;
        } else if self.labels.depth_bounded {
            self.status = VerdictStatus::DepthBounded;
        } else {
            self.status = VerdictStatus::ValidOnSuite;
        }
        self
    }

    fn empty() -> Verdict {
        Verdict {
            status: VerdictStatus::ValidOnSuite,
            labels: Labels::default(),
            counterexample: None,
            states: Vec::new(),
        }
    }
}

pub fn render_pure(theta: &PureCqState) -> String {
    let vars: Vec<String> = theta
        .store
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    let m = theta.quantum.num_qubits();
    let mut terms = Vec::new();
    for (idx, amp) in theta.quantum.amplitudes().iter().enumerate() {
        if amp.norm() > 1e-9 {
            terms.push(format!(
                "({})|{:0width$b}>",
                format_complex(*amp),
                idx,
                width = m
            ));
        }
    }
    if terms.is_empty() {
        terms.push("0".into());
    }
    format!("[{}] {}", vars.join(", "), terms.join(" + "))
}

pub fn render_mixed(theta: &MixedCqState) -> String {
    let mut lines = Vec::new();
    for (state, mass) in theta.supports() {
        lines.push(format!("  {mass:.6} @ {}", render_pure(state)));
    }
    if lines.is_empty() {
        lines.push("  (empty subdistribution)".into());
    }
    lines.join("\n")
}

/// Check a triple by executing the program on every suite state whose
/// precondition holds and evaluating the postcondition on the output.
pub fn check_semantic(
    t: &Triple,
    suite: &StateSuite,
    decls: &Declarations,
    interp: &Interpretation,
    cfg: &CheckConfig,
) -> Result<Verdict, QhlError> {
    let mut verdict = Verdict::empty();
    let mut flags = EvalFlags::default();
    let mut any_residual = false;

    match &t.body {
        TripleBody::Det { pre, post } => {
            for (index, (label, theta)) in suite.pure_states.iter().enumerate() {
                let mut state_flags = EvalFlags::default();
                let pre_ok = sat_pure(pre, theta, interp, decls, &cfg.sat, &mut state_flags)?;
                if !pre_ok {
                    flags.merge(state_flags);
                    verdict.states.push(skipped(index, label));
                    continue;
                }
                let r = exec_pure(&t.prog, theta, decls, &cfg.exec)?;
                let post_ok = sat_mixed(post, &r.out, interp, decls, &cfg.sat, &mut state_flags)?;
                let residual = r.residual_mass;
                any_residual |= residual > RESIDUAL_TOL;
                verdict.states.push(StateLog {
                    index,
                    label: label.clone(),
                    precondition_holds: true,
                    passed: Some(post_ok),
                    residual_mass: residual,
                    notes: state_notes(&state_flags),
                });
                flags.merge(state_flags);
                if !post_ok && verdict.counterexample.is_none() {
                    verdict.counterexample = Some(Counterexample {
                        state_index: index,
                        state_label: label.clone(),
                        state: render_pure(theta),
                        observed: format!(
                            "postcondition fails on output:\n{}",
                            render_mixed(&r.out)
                        ),
                    });
                    break;
                }
            }
        }
        TripleBody::Prob { pre, post } => {
            for (index, (label, theta)) in suite.mixed_states.iter().enumerate() {
                let mut state_flags = EvalFlags::default();
                let pre_ok = sat_prob(pre, theta, interp, decls, &cfg.sat, &mut state_flags)?;
                if !pre_ok {
                    flags.merge(state_flags);
                    verdict.states.push(skipped(index, label));
                    continue;
                }
                let r = exec(&t.prog, theta, decls, &cfg.exec)?;
                let post_ok = sat_prob(post, &r.out, interp, decls, &cfg.sat, &mut state_flags)?;
                any_residual |= r.residual_mass > RESIDUAL_TOL;
                verdict.states.push(StateLog {
                    index,
                    label: label.clone(),
                    precondition_holds: true,
                    passed: Some(post_ok),
                    residual_mass: r.residual_mass,
                    notes: state_notes(&state_flags),
                });
                flags.merge(state_flags);
                if !post_ok && verdict.counterexample.is_none() {
                    verdict.counterexample = Some(Counterexample {
                        state_index: index,
                        state_label: label.clone(),
                        state: render_mixed(theta),
                        observed: format!(
                            "postcondition fails on output:\n{}",
                            render_mixed(&r.out)
                        ),
                    });
                    break;
                }
            }
        }
    }
    Ok(verdict.conclude(flags, any_residual))
}

/// Check a triple through the transformer route: compute the weakest
/// precondition of the postcondition and require it on every suite state
/// satisfying the stated precondition. Each state is cross-checked against
/// the semantic route; disagreements are noted in the per-state log.
pub fn check_wp(
    t: &Triple,
    suite: &StateSuite,
    decls: &Declarations,
    interp: &Interpretation,
    cfg: &CheckConfig,
) -> Result<Verdict, QhlError> {
    let mut verdict = Verdict::empty();
    let mut flags = EvalFlags::default();
    let mut any_residual = false;

    match &t.body {
        TripleBody::Det { pre, post } => {
            let transformed = wp_det(&t.prog, post, &cfg.depth);
            for (index, (label, theta)) in suite.pure_states.iter().enumerate() {
                let mut state_flags = EvalFlags::default();
                let pre_ok = sat_pure(pre, theta, interp, decls, &cfg.sat, &mut state_flags)?;
                if !pre_ok {
                    flags.merge(state_flags);
                    verdict.states.push(skipped(index, label));
                    continue;
                }
                let wp_ok = sat_pure(
                    &transformed,
                    theta,
                    interp,
                    decls,
                    &cfg.sat,
                    &mut state_flags,
                )?;
                let r = exec_pure(&t.prog, theta, decls, &cfg.exec)?;
                let sem_ok = sat_mixed(post, &r.out, interp, decls, &cfg.sat, &mut state_flags)?;
                any_residual |= r.residual_mass > RESIDUAL_TOL;
                let mut notes = state_notes(&state_flags);
                if wp_ok != sem_ok && r.residual_mass <= RESIDUAL_TOL {
                    notes.push(format!(
                        "wp/semantic disagreement: wp={wp_ok}, semantic={sem_ok}"
                    ));
                }
                flags.merge(state_flags);
                verdict.states.push(StateLog {
                    index,
                    label: label.clone(),
                    precondition_holds: true,
                    passed: Some(wp_ok),
                    residual_mass: r.residual_mass,
                    notes,
                });
                if !wp_ok && verdict.counterexample.is_none() {
                    verdict.counterexample = Some(Counterexample {
                        state_index: index,
                        state_label: label.clone(),
                        state: render_pure(theta),
                        observed: "state satisfies the precondition but not wp(C, post)".into(),
                    });
                    break;
                }
            }
        }
        TripleBody::Prob { pre, post } => {
            let transformed = wp_prob(&t.prog, post, &cfg.depth, decls)?;
            for (index, (label, theta)) in suite.mixed_states.iter().enumerate() {
                let mut state_flags = EvalFlags::default();
                let pre_ok = sat_prob(pre, theta, interp, decls, &cfg.sat, &mut state_flags)?;
                if !pre_ok {
                    flags.merge(state_flags);
                    verdict.states.push(skipped(index, label));
                    continue;
                }
                let wp_ok = sat_prob(
                    &transformed,
                    theta,
                    interp,
                    decls,
                    &cfg.sat,
                    &mut state_flags,
                )?;
                let r = exec(&t.prog, theta, decls, &cfg.exec)?;
                let sem_ok = sat_prob(post, &r.out, interp, decls, &cfg.sat, &mut state_flags)?;
                any_residual |= r.residual_mass > RESIDUAL_TOL;
                let mut notes = state_notes(&state_flags);
                if wp_ok != sem_ok && r.residual_mass <= RESIDUAL_TOL {
                    notes.push(format!(
                        "wp/semantic disagreement: wp={wp_ok}, semantic={sem_ok}"
                    ));
                }
                flags.merge(state_flags);
                verdict.states.push(StateLog {
                    index,
                    label: label.clone(),
                    precondition_holds: true,
                    passed: Some(wp_ok),
                    residual_mass: r.residual_mass,
                    notes,
                });
                if !wp_ok && verdict.counterexample.is_none() {
                    verdict.counterexample = Some(Counterexample {
                        state_index: index,
                        state_label: label.clone(),
                        state: render_mixed(theta),
                        observed: "state satisfies the precondition but not WP(C, post)".into(),
                    });
                    break;
                }
            }
        }
    }
    Ok(verdict.conclude(flags, any_residual))
}

fn state_notes(flags: &EvalFlags) -> Vec<String> {
    let mut notes = Vec::new();
    if flags.vacuous_projection {
        notes.push("vacuous projection modality (zero-probability branch read as true)".into());
    }
    notes
}

fn skipped(index: usize, label: &str) -> StateLog {
    StateLog {
        index,
        label: label.to_string(),
        precondition_holds: false,
        passed: None,
        residual_mass: 0.0,
        notes: Vec::new(),
    }
}
