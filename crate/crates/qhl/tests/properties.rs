//! Grammar round-trips and algebraic invariants of states and semantics.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use qhl::cqstate::{
    canonicalize, measure_qubit, point_dist, restrict, ClassicalStore, MixedCqState, PureCqState,
    QuantumState,
};
use qhl::gen::{self, GenConfig};
use qhl::semantics::{exec, ExecConfig};
use qhl::syntax::ast::{BoolExpr, Command, DetAssertion};
use qhl::syntax::pretty::{pretty_command, pretty_dassert, pretty_passert, pretty_rexpr};
use qhl::syntax::subst::subst_prog_var;
use qhl::syntax::{parse_command_text, parse_dassert_text, parse_passert_text, parse_rexpr_text};

fn rng_for(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand_chacha::rand_core::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

// ---- parse/pretty round trips over 1000 random ASTs each ----

#[test]
fn commands_round_trip_through_pretty() {
    let cfg = GenConfig::small(2);
    let decls = cfg.decls();
    let mut rng = rng_for(101);
    for i in 0..1000 {
        let c = gen::gen_loop_free_command(&cfg, &mut rng);
        let printed = pretty_command(&c);
        let reparsed = parse_command_text(&printed, &decls)
            .unwrap_or_else(|e| panic!("case {i}: `{printed}` failed to parse: {e}"));
        assert_eq!(c, reparsed, "case {i}: `{printed}`");
    }
}

#[test]
fn loops_round_trip_through_pretty() {
    let cfg = GenConfig::small(2);
    let decls = cfg.decls();
    let mut rng = rng_for(102);
    for _ in 0..200 {
        let c = gen::gen_converging_while(&cfg, &mut rng);
        let printed = pretty_command(&c);
        assert_eq!(c, parse_command_text(&printed, &decls).unwrap());
    }
}

#[test]
fn assertions_round_trip_through_pretty() {
    let mut cfg = GenConfig::small(2);
    cfg.with_forall = true;
    let decls = cfg.decls();
    let mut rng = rng_for(103);
    for i in 0..1000 {
        let a = gen::gen_dassert(&cfg, 3, &mut rng);
        let printed = pretty_dassert(&a);
        let reparsed = parse_dassert_text(&printed, &decls)
            .unwrap_or_else(|e| panic!("case {i}: `{printed}` failed to parse: {e}"));
        assert_eq!(a, reparsed, "case {i}: `{printed}`");
    }
}

#[test]
fn real_expressions_round_trip_through_pretty() {
    let cfg = GenConfig::small(2);
    let decls = cfg.decls();
    let mut rng = rng_for(104);
    for i in 0..1000 {
        let r = gen::gen_rexpr(&cfg, 3, true, &mut rng);
        let printed = pretty_rexpr(&r);
        let reparsed = parse_rexpr_text(&printed, &decls)
            .unwrap_or_else(|e| panic!("case {i}: `{printed}` failed to parse: {e}"));
        assert_eq!(r, reparsed, "case {i}: `{printed}`");
    }
}

#[test]
fn prob_formulas_round_trip_through_pretty() {
    let cfg = GenConfig::small(2);
    let decls = cfg.decls();
    let mut rng = rng_for(105);
    for i in 0..1000 {
        let f = gen::gen_prob_formula(&cfg, 2, &mut rng);
        let printed = pretty_passert(&f);
        let reparsed = parse_passert_text(&printed, &decls)
            .unwrap_or_else(|e| panic!("case {i}: `{printed}` failed to parse: {e}"));
        assert_eq!(f, reparsed, "case {i}: `{printed}`");
    }
}

// ---- substitution laws ----

#[test]
fn substitution_is_a_homomorphism_and_identity_when_absent() {
    let cfg = GenConfig::small(2);
    let mut rng = rng_for(106);
    for _ in 0..500 {
        let a = gen::gen_dassert(&cfg, 2, &mut rng);
        let b = gen::gen_dassert(&cfg, 2, &mut rng);
        let e = gen::gen_aexpr(&cfg, 2, &mut rng);
        let conj = DetAssertion::and(a.clone(), b.clone());
        assert_eq!(
            subst_prog_var(&conj, "X", &e),
            DetAssertion::and(subst_prog_var(&a, "X", &e), subst_prog_var(&b, "X", &e))
        );
        // identity on a variable that never occurs
        assert_eq!(subst_prog_var(&a, "Zunused", &e), a);
    }
}

// ---- state-space invariants (proptest) ----

fn arb_state(num_qubits: usize) -> impl Strategy<Value = QuantumState> {
    let dim = 1usize << num_qubits;
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("norm too small", |v| {
            v.iter().map(|(re, im)| re * re + im * im).sum::<f64>() > 1e-3
        })
        .prop_map(|v| {
            let amps: Vec<Complex64> = v
                .into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            QuantumState::new(amps.into_iter().map(|a| a / norm).collect())
        })
}

fn pure_of(q: QuantumState) -> PureCqState {
    PureCqState::new(ClassicalStore::zeroed(&["X".into()]), q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonicalize_is_idempotent(q in arb_state(2)) {
        let theta = pure_of(q);
        let once = canonicalize(&theta).unwrap();
        let twice = canonicalize(&once).unwrap();
        prop_assert_eq!(once.canonical_key().unwrap(), twice.canonical_key().unwrap());
        // and phase-insensitive on the way in
        prop_assert_eq!(
            theta.canonical_key().unwrap(),
            once.canonical_key().unwrap()
        );
    }

    #[test]
    fn measurement_probabilities_sum_to_one(q in arb_state(3), qubit in 1usize..=3) {
        let ((p0, _), (p1, _)) = measure_qubit(&q, qubit);
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-9);
        prop_assert!(p0 >= 0.0 && p1 >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mask_expectation_matches_dense_brute_force(
        q in arb_state(3),
        pattern in prop::collection::vec(prop::sample::select(vec!['0', '1', '*']), 3),
        extra in prop::collection::vec(prop::sample::select(vec!['0', '1', '*']), 3),
    ) {
        use qhl::cqstate::linalg::{mask_expectation, mask_to_dense};
        use qhl::syntax::ast::MaskPattern;
        let patterns = vec![
            MaskPattern(pattern.into_iter().collect()),
            MaskPattern(extra.into_iter().collect()),
        ];
        let fast = mask_expectation(q.amplitudes(), &patterns, 3);

        // brute force v^dag Q v with an explicit double loop
        let dense = mask_to_dense(&patterns, 3);
        let v = q.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..8 {
            for c in 0..8 {
                acc += v[r].conj() * dense[(r, c)] * v[c];
            }
        }
        prop_assert!((fast - acc.re).abs() < 1e-9);
        prop_assert!(acc.im.abs() < 1e-12);
    }
}

// ---- mixed-state algebra ----

#[test]
fn phase_shifted_supports_merge_under_addition() {
    let mut rng = rng_for(107);
    for _ in 0..300 {
        let cfg = GenConfig::small(2);
        let decls = cfg.decls();
        let theta = qhl::checker::sample::sample_pure(
            &decls,
            &qhl::checker::sample::SuiteParams::default(),
            &mut rng,
        );
        let alpha: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let phase = Complex64::new(alpha.cos(), alpha.sin());
        let shifted = PureCqState::new(
            theta.store.clone(),
            QuantumState::new(
                theta
                    .quantum
                    .amplitudes()
                    .iter()
                    .map(|a| a * phase)
                    .collect(),
            ),
        );
        let mut d = MixedCqState::empty();
        d.add(&theta, 0.3).unwrap();
        d.add(&shifted, 0.45).unwrap();
        assert_eq!(d.support_len(), 1, "alpha = {alpha}");
        assert!((d.mass() - 0.75).abs() < 1e-12);
    }
}

#[test]
fn restriction_partitions_mass() {
    let cfg = GenConfig::small(2);
    let decls = cfg.decls();
    let params = qhl::checker::sample::SuiteParams {
        count: 0,
        ..Default::default()
    };
    let mut rng = rng_for(108);
    for _ in 0..300 {
        let theta = qhl::checker::sample::sample_mixed(&decls, &params, &mut rng).unwrap();
        let guard = gen::gen_guard(&cfg, 2, &mut rng);
        let yes = restrict(&theta, &guard).unwrap();
        let no = restrict(&theta, &BoolExpr::not(guard)).unwrap();
        assert!((yes.mass() + no.mass() - theta.mass()).abs() < 1e-9);
    }
}

#[test]
fn execution_is_linear_in_the_input() {
    let cfg = GenConfig::small(2);
    let decls = cfg.decls();
    let exec_cfg = ExecConfig::default();
    let params = qhl::checker::sample::SuiteParams {
        count: 0,
        ..Default::default()
    };
    let mut rng = rng_for(109);
    for _ in 0..150 {
        let c = gen::gen_loop_free_command(&cfg, &mut rng);
        let t1 = point_dist(&qhl::checker::sample::sample_pure(
            &decls, &params, &mut rng,
        ))
        .unwrap();
        let t2 = point_dist(&qhl::checker::sample::sample_pure(
            &decls, &params, &mut rng,
        ))
        .unwrap();
        let a = 0.35;
        let b = 0.55;
        let combined = t1.scaled(a).plus(&t2.scaled(b));

        let lhs = exec(&c, &combined, &decls, &exec_cfg).unwrap().out;
        let rhs = exec(&c, &t1, &decls, &exec_cfg)
            .unwrap()
            .out
            .scaled(a)
            .plus(&exec(&c, &t2, &decls, &exec_cfg).unwrap().out.scaled(b));
        assert!(lhs.approx_eq(&rhs, 1e-9), "program: {}", pretty_command(&c));
    }
}

#[test]
fn while_approximants_are_monotone() {
    let cfg = GenConfig::small(1);
    let decls = cfg.decls();
    let mut rng = rng_for(110);
    for _ in 0..50 {
        let c = gen::gen_converging_while(&cfg, &mut rng);
        let Command::While(..) = &c else {
            unreachable!()
        };
        let mut theta = decls.default_state();
        theta.store.set("X", rng.random_range(0..=4));
        theta.store.set("Y", rng.random_range(0..=4));
        let point = point_dist(&theta).unwrap();

        let mut prev = MixedCqState::empty();
        for k in 0..6 {
            let cfg_k = ExecConfig {
                max_while_iters: k,
                mass_epsilon: 0.0,
                ..ExecConfig::default()
            };
            let out = exec(&c, &point, &decls, &cfg_k).unwrap().out;
            // every support of the previous partial sum persists with at
            // least its old mass
            for (s, m) in prev.supports() {
                let now = out.mass_of(s).unwrap();
                assert!(now >= m - 1e-12);
            }
            assert!(out.mass() >= prev.mass() - 1e-12);
            prev = out;
        }
    }
}

#[test]
fn parsed_random_assignments_have_unit_probability_sums() {
    let cfg = GenConfig::small(1);
    let decls = cfg.decls();
    let mut rng = rng_for(111);
    for _ in 0..300 {
        let c = gen::gen_loop_free_command(&cfg, &mut rng);
        let printed = pretty_command(&c);
        let parsed = parse_command_text(&printed, &decls).unwrap();
        check_rand_sums(&parsed);
    }
}

fn check_rand_sums(c: &Command) {
    match c {
        Command::RandAssign(_, branches) => {
            let total: f64 = branches.iter().map(|(p, _)| p).sum();
            assert!((total - 1.0).abs() <= 1e-9);
        }
        Command::Seq(a, b) => {
            check_rand_sums(a);
            check_rand_sums(b);
        }
        Command::If(_, a, b) => {
            check_rand_sums(a);
            check_rand_sums(b);
        }
        Command::While(_, a) => check_rand_sums(a),
        _ => {}
    }
}

// ---- assertion-level invariants ----

#[test]
fn possibility_semantics_is_monotone_under_support_restriction() {
    use qhl::assertions::{sat_mixed, EvalFlags, SatConfig};
    let cfg = GenConfig::small(2);
    let decls = cfg.decls();
    let interp = decls.interpretation();
    let sat_cfg = SatConfig::default();
    let params = qhl::checker::sample::SuiteParams {
        count: 0,
        ..Default::default()
    };
    let mut rng = rng_for(112);
    for _ in 0..300 {
        let theta = qhl::checker::sample::sample_mixed(&decls, &params, &mut rng).unwrap();
        let phi = gen::gen_dassert(&cfg, 3, &mut rng);
        let mut flags = EvalFlags::default();
        let holds = match sat_mixed(&phi, &theta, &interp, &decls, &sat_cfg, &mut flags) {
            Ok(b) => b,
            Err(_) => continue,
        };
        if !holds {
            continue;
        }
        // drop a random subset of supports; the assertion must still hold
        let mut sub = MixedCqState::empty();
        for (s, m) in theta.supports() {
            if rng.random_bool(0.5) {
                sub.add(s, m).unwrap();
            }
        }
        assert!(sat_mixed(&phi, &sub, &interp, &decls, &sat_cfg, &mut flags).unwrap());
    }
}

#[test]
fn probability_masses_partition() {
    use qhl::assertions::{eval_real, EvalFlags, SatConfig};
    use qhl::syntax::ast::RealExpr;
    let cfg = GenConfig::small(2);
    let decls = cfg.decls();
    let interp = decls.interpretation();
    let sat_cfg = SatConfig::default();
    let params = qhl::checker::sample::SuiteParams {
        count: 0,
        ..Default::default()
    };
    let mut rng = rng_for(113);
    for _ in 0..300 {
        let theta = qhl::checker::sample::sample_mixed(&decls, &params, &mut rng).unwrap();
        let phi = gen::gen_dassert(&cfg, 3, &mut rng);
        let mut flags = EvalFlags::default();
        let p_yes = eval_real(
            &RealExpr::prob(phi.clone()),
            &theta,
            &interp,
            &decls,
            &sat_cfg,
            &mut flags,
        );
        let p_yes = match p_yes {
            Ok(v) => v,
            Err(_) => continue,
        };
        let p_no = eval_real(
            &RealExpr::prob(DetAssertion::not(phi)),
            &theta,
            &interp,
            &decls,
            &sat_cfg,
            &mut flags,
        )
        .unwrap();
        assert!((p_yes + p_no - theta.mass()).abs() < 1e-9);
    }
}

#[test]
fn cq_conditionals_are_bounded_by_the_condition_mass() {
    use qhl::assertions::{eval_real, EvalFlags, SatConfig};
    use qhl::syntax::ast::RealExpr;
    let cfg = GenConfig::small(2);
    let decls = cfg.decls();
    let interp = decls.interpretation();
    let sat_cfg = SatConfig::default();
    let params = qhl::checker::sample::SuiteParams {
        count: 0,
        ..Default::default()
    };
    let mut rng = rng_for(114);
    for _ in 0..300 {
        let theta = qhl::checker::sample::sample_mixed(&decls, &params, &mut rng).unwrap();
        let phi = gen::gen_dassert(&cfg, 2, &mut rng);
        let mask = gen::gen_mask(&cfg, &mut rng);
        let mut flags = EvalFlags::default();
        let cq = eval_real(
            &RealExpr::cq_cond(phi.clone(), mask),
            &theta,
            &interp,
            &decls,
            &sat_cfg,
            &mut flags,
        );
        let cq = match cq {
            Ok(v) => v,
            Err(_) => continue,
        };
        let p_phi = eval_real(
            &RealExpr::prob(phi),
            &theta,
            &interp,
            &decls,
            &sat_cfg,
            &mut flags,
        )
        .unwrap();
        assert!(cq >= -1e-9);
        assert!(cq <= p_phi + 1e-9);
    }
}

#[test]
fn loop_mass_splits_into_output_and_residual() {
    let cfg = GenConfig::small(1);
    let decls = cfg.decls();
    let mut rng = rng_for(115);
    for trial in 0..200 {
        let c = gen::gen_converging_while(&cfg, &mut rng);
        let mut theta = decls.default_state();
        theta.store.set("X", rng.random_range(0..=6));
        theta.store.set("Y", rng.random_range(0..=6));
        let point = point_dist(&theta).unwrap();
        // sometimes cut the loop off early to exercise the truncated path
        let cap = if trial % 3 == 0 { 2 } else { 10_000 };
        let exec_cfg = ExecConfig {
            max_while_iters: cap,
            ..ExecConfig::default()
        };
        let r = exec(&c, &point, &decls, &exec_cfg).unwrap();
        assert!(
            (r.out.mass() + r.residual_mass - 1.0).abs() < 1e-9,
            "out {} + residual {}",
            r.out.mass(),
            r.residual_mass
        );
    }
}

#[test]
fn mask_expectation_matches_dense_brute_force_at_four_qubits() {
    use qhl::cqstate::linalg::{mask_expectation, mask_to_dense};
    use qhl::syntax::ast::MaskPattern;
    let mut rng = rng_for(116);
    for _ in 0..100 {
        let q = qhl::checker::sample::haar_state(4, &mut rng);
        let pattern: String = (0..4)
            .map(|_| ['0', '1', '*'][rng.random_range(0..3)])
            .collect();
        let patterns = vec![MaskPattern(pattern)];
        let fast = mask_expectation(q.amplitudes(), &patterns, 4);
        let dense = mask_to_dense(&patterns, 4);
        let v = q.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..16 {
            for c in 0..16 {
                acc += v[r].conj() * dense[(r, c)] * v[c];
            }
        }
        assert!((fast - acc.re).abs() < 1e-9);
    }
}

#[test]
fn parser_never_panics_on_garbage() {
    let mut rng = rng_for(117);
    let alphabet: Vec<char> = "abqPX01 \n(){}[]<>=!&|+-*/$@:;,.\"forall while if P0 P1 ket state"
        .chars()
        .collect();
    for _ in 0..500 {
        let len = rng.random_range(0..120);
        let soup: String = (0..len)
            .map(|_| alphabet[rng.random_range(0..alphabet.len())])
            .collect();
        // must return (Ok or Err), never panic
        let _ = qhl::syntax::parse_spec(&soup);
        let decls = GenConfig::small(2).decls();
        let _ = parse_command_text(&soup, &decls);
        let _ = parse_dassert_text(&soup, &decls);
        let _ = parse_rexpr_text(&soup, &decls);
    }
}
