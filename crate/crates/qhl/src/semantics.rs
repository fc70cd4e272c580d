//! Denotational interpreter over subdistributions of cq-states.
//!
//! Loops are evaluated as the limit of their finite approximants: at each
//! round the mass that exits the guard is accumulated into the output and
//! the mass still inside the guard continues. Iteration stops when the live
//! mass drops below `mass_epsilon` or the round cap is reached; whatever is
//! left inside the guard is reported as `residual_mass`, so callers can tell
//! a converged run from a truncated one. Truncation under-approximates, which
//! is sound for subdistribution semantics.

use crate::cqstate::{
    apply_gate, eval_aexpr, measure_qubit, point_dist, restrict, MixedCqState, PureCqState,
    QuantumState,
};
use crate::error::QhlError;
use crate::syntax::ast::{BoolExpr, Command};
use crate::syntax::Declarations;

#[derive(Debug, Clone, Copy)]
pub struct ExecConfig {
    /// Hard cap on loop rounds.
    pub max_while_iters: usize,
    /// Stop iterating once the mass still satisfying the guard drops below
    /// this threshold.
    pub mass_epsilon: f64,
    /// Supports below this mass are dropped.
    pub prune_epsilon: f64,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            max_while_iters: 10_000,
            mass_epsilon: 1e-12,
            prune_epsilon: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecResult {
    pub out: MixedCqState,
    /// Mass still inside some loop guard when iteration was cut off; zero
    /// for loop-free programs.
    pub residual_mass: f64,
    /// Total loop rounds executed.
    pub iterations_used: usize,
}

impl ExecResult {
    fn pure_out(out: MixedCqState) -> Self {
        ExecResult {
            out,
            residual_mass: 0.0,
            iterations_used: 0,
        }
    }
}

/// The semantics of a command applied to a mixed cq-state.
pub fn exec(
    cmd: &Command,
    theta: &MixedCqState,
    decls: &Declarations,
    cfg: &ExecConfig,
) -> Result<ExecResult, QhlError> {
    let mut result = match cmd {
        Command::Skip => ExecResult::pure_out(theta.clone()),
        Command::Assign(x, e) => {
            let mut out = MixedCqState::empty();
            for (state, mass) in theta.supports() {
                let value = eval_aexpr(e, &state.store)?;
                let next = PureCqState::new(state.store.with(x, value), state.quantum.clone());
                out.add(&next, mass)?;
            }
            ExecResult::pure_out(out)
        }
        Command::RandAssign(x, branches) => {
            let mut out = MixedCqState::empty();
            for (state, mass) in theta.supports() {
                for (p, value) in branches {
                    let next = PureCqState::new(state.store.with(x, *value), state.quantum.clone());
                    out.add(&next, mass * p)?;
                }
            }
            ExecResult::pure_out(out)
        }
        Command::Seq(c1, c2) => {
            let r1 = exec(c1, theta, decls, cfg)?;
            let r2 = exec(c2, &r1.out, decls, cfg)?;
            ExecResult {
                out: r2.out,
                residual_mass: r1.residual_mass + r2.residual_mass,
                iterations_used: r1.iterations_used + r2.iterations_used,
            }
        }
        Command::If(guard, then_cmd, else_cmd) => {
            let rt = exec(then_cmd, &restrict(theta, guard)?, decls, cfg)?;
            let neg = BoolExpr::not(guard.clone());
            let re = exec(else_cmd, &restrict(theta, &neg)?, decls, cfg)?;
            ExecResult {
                out: rt.out.plus(&re.out),
                residual_mass: rt.residual_mass + re.residual_mass,
                iterations_used: rt.iterations_used + re.iterations_used,
            }
        }
        Command::While(guard, body) => exec_while(guard, body, theta, decls, cfg)?,
        Command::Unitary(app) => {
            let mut out = MixedCqState::empty();
            for (state, mass) in theta.supports() {
                let q = apply_gate(&state.quantum, app, decls)?;
                out.add(&PureCqState::new(state.store.clone(), q), mass)?;
            }
            ExecResult::pure_out(out)
        }
        Command::Measure(x, qubit) => {
            let mut out = MixedCqState::empty();
            for (state, mass) in theta.supports() {
                let ((p0, v0), (p1, v1)) = measure_qubit(&state.quantum, *qubit);
                add_branch(&mut out, state, x, 0, p0, v0, mass)?;
                add_branch(&mut out, state, x, 1, p1, v1, mass)?;
            }
            ExecResult::pure_out(out)
        }
    };
    result.out.prune(cfg.prune_epsilon);
    Ok(result)
}

fn add_branch(
    out: &mut MixedCqState,
    state: &PureCqState,
    var: &str,
    outcome: i64,
    p: f64,
    v: Option<QuantumState>,
    mass: f64,
) -> Result<(), QhlError> {
    if let Some(q) = v {
        let next = PureCqState::new(state.store.with(var, outcome), q);
        out.add(&next, mass * p)?;
    }
    Ok(())
}

fn exec_while(
    guard: &BoolExpr,
    body: &Command,
    theta: &MixedCqState,
    decls: &Declarations,
    cfg: &ExecConfig,
) -> Result<ExecResult, QhlError> {
    let neg = BoolExpr::not(guard.clone());
    let mut out = MixedCqState::empty();
    let mut residual = 0.0;
    let mut iterations = 0usize;
    let mut cur = theta.clone();
    loop {
        out = out.plus(&restrict(&cur, &neg)?);
        let live = restrict(&cur, guard)?;
        let live_mass = live.mass();
        if live_mass <= cfg.mass_epsilon || iterations >= cfg.max_while_iters {
            residual += live_mass;
            break;
        }
        let r = exec(body, &live, decls, cfg)?;
        residual += r.residual_mass;
        cur = r.out;
        iterations += 1 + r.iterations_used;
    }
    Ok(ExecResult {
        out,
        residual_mass: residual,
        iterations_used: iterations,
    })
}

/// The semantics of a command started from a single pure state.
pub fn exec_pure(
    cmd: &Command,
    theta: &PureCqState,
    decls: &Declarations,
    cfg: &ExecConfig,
) -> Result<ExecResult, QhlError> {
    exec(cmd, &point_dist(theta)?, decls, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cqstate::ClassicalStore;
    use crate::syntax::{parse_command_text, Declarations};

    fn decls() -> Declarations {
        Declarations::for_tests(1, &["X"])
    }

    fn initial(decls: &Declarations) -> PureCqState {
        decls.default_state()
    }

    fn run(src: &str, theta: &PureCqState, d: &Declarations) -> ExecResult {
        let cmd = parse_command_text(src, d).unwrap();
        exec_pure(&cmd, theta, d, &ExecConfig::default()).unwrap()
    }

    #[test]
    fn skip_is_identity() {
        let d = decls();
        let theta = initial(&d);
        let r = run("skip", &theta, &d);
        assert!(r.out.approx_eq(&point_dist(&theta).unwrap(), 1e-12));
        assert_eq!(r.residual_mass, 0.0);
    }

    #[test]
    fn random_assignment_weights() {
        let d = decls();
        let r = run("X <-$ {0.3: 1, 0.7: 2}", &initial(&d), &d);
        assert_eq!(r.out.support_len(), 2);
        let masses: Vec<(i64, f64)> = r
            .out
            .supports()
            .map(|(s, m)| (s.store.get("X").unwrap(), m))
            .collect();
        assert!(masses.contains(&(1, 0.3)));
        assert!(masses.contains(&(2, 0.7)));
    }

    #[test]
    fn measurement_of_plus_splits_evenly() {
        let d = decls();
        let r = run("H[q1]; X <<= q1", &initial(&d), &d);
        assert_eq!(r.out.support_len(), 2);
        for (s, m) in r.out.supports() {
            let x = s.store.get("X").unwrap();
            assert!((m - 0.5).abs() < 1e-9);
            // the quantum part collapsed to |x>
            let amp = s.quantum.amplitudes()[x as usize];
            assert!((amp.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn countdown_loop_converges() {
        let d = decls();
        let mut theta = initial(&d);
        theta.store.set("X", 3);
        let r = run("while X > 0 do X <- X - 1", &theta, &d);
        assert_eq!(r.iterations_used, 3);
        assert_eq!(r.residual_mass, 0.0);
        assert_eq!(r.out.support_len(), 1);
        let (s, m) = r.out.supports().next().unwrap();
        assert_eq!(s.store.get("X").unwrap(), 0);
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_loop_reports_residual() {
        let d = decls();
        let cmd = parse_command_text("while true do skip", &d).unwrap();
        let cfg = ExecConfig {
            max_while_iters: 50,
            ..ExecConfig::default()
        };
        let r = exec_pure(&cmd, &initial(&d), &d, &cfg).unwrap();
        assert!(r.out.is_empty());
        assert!((r.residual_mass - 1.0).abs() < 1e-12);
        assert_eq!(r.iterations_used, 50);
    }

    #[test]
    fn exec_pure_matches_point_dist() {
        let d = decls();
        let theta = initial(&d);
        let r = run("H[q1]", &theta, &d);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureCqState::new(
            ClassicalStore::zeroed(&["X".into()]),
            QuantumState::new(vec![
                num_complex::Complex64::new(s, 0.0),
                num_complex::Complex64::new(s, 0.0),
            ]),
        );
        assert!(r.out.approx_eq(&point_dist(&plus).unwrap(), 1e-12));
    }

    #[test]
    fn sequencing_updates_store() {
        let d = decls();
        let r = run("X <- 1; X <- X + 1", &initial(&d), &d);
        assert_eq!(r.out.support_len(), 1);
        let (s, _) = r.out.supports().next().unwrap();
        assert_eq!(s.store.get("X").unwrap(), 2);
    }

    #[test]
    fn overflow_is_a_hard_error() {
        let d = decls();
        let cmd = parse_command_text("X <- 9223372036854775807; X <- X + 1", &d).unwrap();
        let err = exec_pure(&cmd, &initial(&d), &d, &ExecConfig::default()).unwrap_err();
        assert!(matches!(err, QhlError::Overflow(_)));
    }

    #[test]
    fn loop_free_mass_is_conserved() {
        let d = Declarations::for_tests(2, &["X", "Y"]);
        let theta = d.default_state();
        let r = run(
            "H[q1]; X <<= q1; if X = 1 then Y <-$ {0.5: 0, 0.5: 3} else skip; CX[q1, q2]",
            &theta,
            &d,
        );
        assert!((r.out.mass() - 1.0).abs() < 1e-9);
        assert_eq!(r.residual_mass, 0.0);
    }
}
