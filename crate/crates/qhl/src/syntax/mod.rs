//! Concrete grammar, ASTs, parsing, substitution and pretty-printing.
//!
//! A spec file is a sequence of declarations (`qubits`, `vars`, `logvars`,
//! `gate`, `oracle`, `projector`, `bind`, `state`) followed by named
//! sections (`program`, `triple`, `proof`). See the README for the full
//! grammar. Names must be declared before they are referenced.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod subst;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::cqstate::linalg::{self, CMatrix};
use crate::cqstate::{ClassicalStore, Interpretation, PureCqState, QuantumState};
use crate::error::QhlError;
use ast::{Command, GateRef, ProjectorSpec, ProofScript, Triple};

pub use parser::{
    parse_command_text, parse_dassert_text, parse_passert_text, parse_rexpr_text, parse_spec,
};

/// Complete truth table of a boolean function over `input_bits` bits;
/// `outputs[x] = f(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleTable {
    pub input_bits: usize,
    pub outputs: Vec<u8>,
}

/// Everything a spec file declares ahead of its sections.
#[derive(Debug, Clone, Default)]
pub struct Declarations {
    pub num_qubits: usize,
    pub vars: Vec<String>,
    pub logvar_ranges: BTreeMap<String, (i64, i64)>,
    pub gates: BTreeMap<String, Arc<CMatrix>>,
    pub oracles: BTreeMap<String, OracleTable>,
    pub projectors: BTreeMap<String, ProjectorSpec>,
    pub int_binds: BTreeMap<String, i64>,
    pub real_binds: BTreeMap<String, f64>,
}

impl Declarations {
    /// Minimal declarations for unit tests: `m` qubits and the given
    /// program variables.
    pub fn for_tests(num_qubits: usize, vars: &[&str]) -> Self {
        Declarations {
            num_qubits,
            vars: vars.iter().map(|s| s.to_string()).collect(),
            ..Declarations::default()
        }
    }

    pub fn gate_arity(&self, gate: &GateRef) -> Result<usize, QhlError> {
        match gate {
            GateRef::Builtin(b) => Ok(b.arity()),
            GateRef::Oracle(name) => self
                .oracles
                .get(name)
                .map(|t| t.input_bits + 1)
                .ok_or_else(|| QhlError::eval(format!("unknown oracle {name}"))),
            GateRef::User(name) => self
                .gates
                .get(name)
                .map(|m| m.dim().trailing_zeros() as usize)
                .ok_or_else(|| QhlError::eval(format!("unknown gate {name}"))),
        }
    }

    pub fn gate_matrix(&self, gate: &GateRef) -> Result<CMatrix, QhlError> {
        match gate {
            GateRef::Builtin(b) => Ok(linalg::builtin_matrix(*b)),
            GateRef::Oracle(name) => {
                let t = self
                    .oracles
                    .get(name)
                    .ok_or_else(|| QhlError::eval(format!("unknown oracle {name}")))?;
                Ok(linalg::oracle_matrix(t.input_bits, &t.outputs))
            }
            GateRef::User(name) => self
                .gates
                .get(name)
                .map(|m| (**m).clone())
                .ok_or_else(|| QhlError::eval(format!("unknown gate {name}"))),
        }
    }

    /// The interpretation given by the file's `bind` declarations plus the
    /// declared quantifier ranges.
    pub fn interpretation(&self) -> Interpretation {
        let mut i = Interpretation::new();
        for (k, v) in &self.int_binds {
            i.bind_int(k, *v);
        }
        for (k, v) in &self.real_binds {
            i.bind_real(k, *v);
        }
        for (k, (lo, hi)) in &self.logvar_ranges {
            i.set_range(k, *lo, *hi);
        }
        i
    }

    /// All declared variables zero, all qubits `|0>`.
    pub fn default_state(&self) -> PureCqState {
        PureCqState::new(
            ClassicalStore::zeroed(&self.vars),
            QuantumState::basis(self.num_qubits, 0),
        )
    }
}

/// A parsed spec file: declarations plus named programs, triples, proof
/// scripts and explicit states.
#[derive(Debug, Clone)]
pub struct SpecFile {
    pub decls: Declarations,
    pub programs: BTreeMap<String, Command>,
    pub triples: BTreeMap<String, Triple>,
    pub proofs: BTreeMap<String, ProofScript>,
    pub states: BTreeMap<String, PureCqState>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<SpecFile, QhlError> {
        parse_spec(text)
    }

    pub fn program(&self, name: &str) -> Result<&Command, QhlError> {
        self.programs
            .get(name)
            .ok_or_else(|| QhlError::eval(format!("unknown program {name}")))
    }

    pub fn triple(&self, name: &str) -> Result<&Triple, QhlError> {
        self.triples
            .get(name)
            .ok_or_else(|| QhlError::eval(format!("unknown triple {name}")))
    }

    pub fn proof(&self, name: &str) -> Result<&ProofScript, QhlError> {
        self.proofs
            .get(name)
            .ok_or_else(|| QhlError::eval(format!("unknown proof {name}")))
    }

    pub fn state(&self, name: &str) -> Result<&PureCqState, QhlError> {
        self.states
            .get(name)
            .ok_or_else(|| QhlError::eval(format!("unknown state {name}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ast::*;

    #[test]
    fn parse_skip_program() {
        let f = parse_spec("qubits 1\nvars X\nprogram p { skip }").unwrap();
        assert_eq!(f.programs["p"], Command::Skip);
    }

    #[test]
    fn parse_random_assignment() {
        let f = parse_spec("vars X\nprogram p { X <-$ {0.3: 1, 0.7: 2} }").unwrap();
        match &f.programs["p"] {
            Command::RandAssign(x, branches) => {
                assert_eq!(x, "X");
                assert_eq!(branches.len(), 2);
                assert_eq!(branches[0], (0.3, 1));
                assert_eq!(branches[1], (0.7, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_probability_sum_is_reported() {
        let err = parse_spec("vars X\nprogram p { X <-$ {0.5: 1, 0.6: 2} }").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("probabilities sum to 1.1 != 1"), "{msg}");
    }

    #[test]
    fn parse_deutsch_like_program() {
        let src = r#"
            qubits 2
            vars X
            oracle f table "0" -> 0, "1" -> 0
            program deutsch { H[q1]; H[q2]; f[q1, q2]; H[q1]; X <<= q1 }
        "#;
        let f = parse_spec(src).unwrap();
        let c = &f.programs["deutsch"];
        // right-associated sequence, five commands
        let mut count = 1;
        let mut cur = c;
        while let Command::Seq(_, rest) = cur {
            count += 1;
            cur = rest;
        }
        assert_eq!(count, 5);
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let err = parse_spec("qubits 2\nvars X\nprogram p { CX[q1] }").unwrap_err();
        assert!(err.to_string().contains("expects 2 qubits"));
    }

    #[test]
    fn non_unitary_gate_is_rejected() {
        let err = parse_spec("qubits 1\ngate G dim 2 matrix [1, 0, 0, 2]").unwrap_err();
        assert!(err.to_string().contains("not unitary"));
    }

    #[test]
    fn triples_pick_their_sort() {
        let src = r#"
            qubits 1
            vars X
            program p { X <<= q1 }
            triple det { P0(1) } p { X = 0 }
            triple prob { P[true] = 1 } p { P[X = 0] >= 0 }
        "#;
        let f = parse_spec(src).unwrap();
        assert_eq!(f.triples["det"].body.sort(), TripleSort::Deterministic);
        assert_eq!(f.triples["prob"].body.sort(), TripleSort::Probabilistic);
    }

    #[test]
    fn pretty_round_trips_spec_examples() {
        let decls = Declarations::for_tests(1, &["X"]);
        for src in [
            "skip",
            "X <- X + 1",
            "X <-$ {0.5: 0, 0.5: 1}",
            "H[q1]; X <<= q1",
        ] {
            let c = parse_command_text(src, &decls).unwrap();
            let printed = pretty::pretty_command(&c);
            let again = parse_command_text(&printed, &decls).unwrap();
            assert_eq!(c, again, "command {src} -> {printed}");
        }
        let phi = parse_dassert_text("[H[q1]] (P0(1) && X = 0)", &decls).unwrap();
        let printed = pretty::pretty_dassert(&phi);
        assert_eq!(phi, parse_dassert_text(&printed, &decls).unwrap());

        let r = parse_rexpr_text("P[ P0(1) ] * (true => mask(\"0\")) + 0.25", &decls).unwrap();
        let printed = pretty::pretty_rexpr(&r);
        assert_eq!(r, parse_rexpr_text(&printed, &decls).unwrap());
    }

    #[test]
    fn pathological_nesting_is_a_parse_error_not_a_crash() {
        let decls = Declarations::for_tests(1, &["X"]);
        let deep = format!("{}X{}", "(".repeat(5000), ")".repeat(5000));
        let err = parse_command_text(&format!("X <- {deep}"), &decls).unwrap_err();
        assert!(err.to_string().contains("nesting too deep"));
    }

    #[test]
    fn prob_atom_prints_as_grammar_expects() {
        let r = RealExpr::prob(DetAssertion::proj(1, 0));
        assert_eq!(pretty::pretty_rexpr(&r), "P[P0(q1)]");
    }
}
