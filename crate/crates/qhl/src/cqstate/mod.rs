//! Pure and mixed classical-quantum states and their canonical forms.
//!
//! A pure cq-state pairs a total classical store with a unit amplitude
//! vector. A mixed cq-state is a finite-support subdistribution over
//! canonicalized pure states; missing mass models nontermination. Two unit
//! vectors differing only in a global phase represent the same state, so
//! canonicalization fixes the phase before states are used as keys.

pub mod linalg;

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::QhlError;
use crate::syntax::ast::{ArithExpr, BoolExpr, GateApp, ProjectorSpec};
use crate::syntax::Declarations;
use linalg::CMatrix;

/// Amplitudes are rounded to this many decimal digits to form support keys.
const KEY_DIGITS_SCALE: f64 = 1e12;
/// Support entries below this mass are pruned.
pub const MASS_PRUNE_EPS: f64 = 1e-12;
const PHASE_EPS: f64 = 1e-9;

/// Total map from declared program variables to integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalStore(BTreeMap<String, i64>);

impl ClassicalStore {
    /// All declared variables initialized to zero.
    pub fn zeroed(vars: &[String]) -> Self {
        ClassicalStore(vars.iter().map(|v| (v.clone(), 0)).collect())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, i64)>) -> Self {
        ClassicalStore(pairs.into_iter().collect())
    }

    pub fn get(&self, var: &str) -> Result<i64, QhlError> {
        self.0
            .get(var)
            .copied()
            .ok_or_else(|| QhlError::eval(format!("undeclared program variable {var}")))
    }

    pub fn set(&mut self, var: &str, value: i64) {
        self.0.insert(var.to_string(), value);
    }

    /// Functional update.
    pub fn with(&self, var: &str, value: i64) -> Self {
        let mut s = self.clone();
        s.set(var, value);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &i64)> {
        self.0.iter()
    }
}

/// Unit amplitude vector over `2^m` basis states; qubit 1 is the most
/// significant bit of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState(Vec<Complex64>);

impl QuantumState {
    pub fn new(amps: Vec<Complex64>) -> Self {
        assert!(amps.len().is_power_of_two(), "amplitude vector length");
        QuantumState(amps)
    }

    /// The basis state `|index>` on `m` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut v = vec![linalg::ZERO; 1 << num_qubits];
        v[index] = linalg::ONE;
        QuantumState(v)
    }

    pub fn num_qubits(&self) -> usize {
        self.0.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }
}

/// A pure cq-state: classical store plus quantum state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureCqState {
    pub store: ClassicalStore,
    pub quantum: QuantumState,
}

impl PureCqState {
    pub fn new(store: ClassicalStore, quantum: QuantumState) -> Self {
        PureCqState { store, quantum }
    }

    /// Key identifying the state up to global phase and 1e-12 amplitude
    /// rounding; used to merge supports of mixed states.
    pub fn canonical_key(&self) -> Result<StateKey, QhlError> {
        let canon = canonicalize(self)?;
        Ok(StateKey::of(&canon))
    }
}

/// Canonical support key: the classical store plus phase-fixed amplitudes
/// rounded to 12 decimal digits (stored as integer pairs for exact ordering
/// and hashing).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateKey {
    vars: Vec<(String, i64)>,
    amps: Vec<(i64, i64)>,
}

impl StateKey {
    fn of(canon: &PureCqState) -> Self {
        StateKey {
            vars: canon.store.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            amps: canon
                .quantum
                .amplitudes()
                .iter()
                .map(|a| {
                    (
                        (a.re * KEY_DIGITS_SCALE).round() as i64,
                        (a.im * KEY_DIGITS_SCALE).round() as i64,
                    )
                })
                .collect(),
        }
    }
}

/// Normalize and fix the global phase: the first amplitude with modulus
/// above 1e-9 is made real positive. Errors on the zero vector.
pub fn canonicalize(theta: &PureCqState) -> Result<PureCqState, QhlError> {
    let amps = theta.quantum.amplitudes();
    let n = linalg::norm(amps);
    if n < PHASE_EPS {
        return Err(QhlError::eval("cannot canonicalize a zero quantum state"));
    }
    let lead = amps
        .iter()
        .find(|a| a.norm() > PHASE_EPS)
        .expect("nonzero vector has a significant amplitude");
    let factor = (lead.conj() / lead.norm()) / n;
    if (factor - linalg::ONE).norm() < 1e-15 {
        return Ok(theta.clone());
    }
    let fixed: Vec<Complex64> = amps.iter().map(|a| a * factor).collect();
    Ok(PureCqState::new(
        theta.store.clone(),
        QuantumState::new(fixed),
    ))
}

#[derive(Debug, Clone)]
struct Weighted {
    state: PureCqState,
    mass: f64,
}

/// Finite-support subdistribution over canonicalized pure cq-states; the
/// total mass never exceeds 1 (up to tolerance).
#[derive(Debug, Clone, Default)]
pub struct MixedCqState {
    entries: BTreeMap<StateKey, Weighted>,
}

impl MixedCqState {
    pub fn empty() -> Self {
        MixedCqState::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn mass(&self) -> f64 {
        // + 0.0 normalizes the empty sum's -0.0
        self.entries.values().map(|w| w.mass).sum::<f64>() + 0.0
    }

    /// Supports in deterministic (key) order.
    pub fn supports(&self) -> impl Iterator<Item = (&PureCqState, f64)> {
        self.entries.values().map(|w| (&w.state, w.mass))
    }

    /// Mass assigned to the state (zero if it is not a support).
    pub fn mass_of(&self, theta: &PureCqState) -> Result<f64, QhlError> {
        Ok(self
            .entries
            .get(&theta.canonical_key()?)
            .map(|w| w.mass)
            .unwrap_or(0.0))
    }

    /// Add `mass` at `theta`, canonicalizing and merging by support key.
    pub fn add(&mut self, theta: &PureCqState, mass: f64) -> Result<(), QhlError> {
        if mass <= 0.0 {
            return Ok(());
        }
        let canon = canonicalize(theta)?;
        let key = StateKey::of(&canon);
        self.entries
            .entry(key)
            .and_modify(|w| w.mass += mass)
            .or_insert(Weighted { state: canon, mass });
        Ok(())
    }

    /// Drop supports with mass below `eps`.
    pub fn prune(&mut self, eps: f64) {
        self.entries.retain(|_, w| w.mass >= eps);
    }

    pub fn scaled(&self, factor: f64) -> MixedCqState {
        if factor == 0.0 {
            return MixedCqState::empty();
        }
        let mut out = self.clone();
        for w in out.entries.values_mut() {
            w.mass *= factor;
        }
        out
    }

    pub fn plus(&self, other: &MixedCqState) -> MixedCqState {
        let mut out = self.clone();
        for w in other.entries.values() {
            out.entries
                .entry(StateKey::of(&w.state))
                .and_modify(|e| e.mass += w.mass)
                .or_insert_with(|| w.clone());
        }
        out
    }

    /// Same supports with masses equal within `tol`.
    pub fn approx_eq(&self, other: &MixedCqState, tol: f64) -> bool {
        if self.entries.len() != other.entries.len() {
            return false;
        }
        self.entries.iter().all(|(k, w)| {
            other
                .entries
                .get(k)
                .is_some_and(|o| (o.mass - w.mass).abs() <= tol)
        })
    }
}

/// The point distribution at `theta`.
pub fn point_dist(theta: &PureCqState) -> Result<MixedCqState, QhlError> {
    let mut d = MixedCqState::empty();
    d.add(theta, 1.0)?;
    Ok(d)
}

/// The restriction operator: keep exactly the supports whose classical
/// store satisfies the guard.
pub fn restrict(theta: &MixedCqState, guard: &BoolExpr) -> Result<MixedCqState, QhlError> {
    let mut out = MixedCqState::empty();
    for (state, mass) in theta.supports() {
        if eval_bexpr(guard, &state.store)? {
            out.add(state, mass)?;
        }
    }
    Ok(out)
}

/// Integer semantics of program-level arithmetic expressions; logical
/// variables are rejected here (assertion evaluation resolves them against
/// an interpretation before reaching this point).
pub fn eval_aexpr(e: &ArithExpr, store: &ClassicalStore) -> Result<i64, QhlError> {
    match e {
        ArithExpr::IntConst(n) => Ok(*n),
        ArithExpr::ProgVar(x) => store.get(x),
        ArithExpr::LogVar(x) => Err(QhlError::eval(format!(
            "logical variable {x} in a program-level expression"
        ))),
        ArithExpr::BinOp(op, l, r) => {
            let a = eval_aexpr(l, store)?;
            let b = eval_aexpr(r, store)?;
            checked_aop(*op, a, b)
        }
    }
}

pub fn checked_aop(op: crate::syntax::ast::Aop, a: i64, b: i64) -> Result<i64, QhlError> {
    use crate::syntax::ast::Aop;
    let r = match op {
        Aop::Add => a.checked_add(b),
        Aop::Sub => a.checked_sub(b),
        Aop::Mul => a.checked_mul(b),
    };
    r.ok_or_else(|| QhlError::Overflow(format!("{a} {op} {b}")))
}

pub fn eval_bexpr(b: &BoolExpr, store: &ClassicalStore) -> Result<bool, QhlError> {
    match b {
        BoolExpr::True => Ok(true),
        BoolExpr::False => Ok(false),
        BoolExpr::Rel(op, l, r) => {
            let a = eval_aexpr(l, store)?;
            let b = eval_aexpr(r, store)?;
            Ok(op.holds_int(a, b))
        }
        BoolExpr::Not(inner) => Ok(!eval_bexpr(inner, store)?),
        BoolExpr::And(x, y) => Ok(eval_bexpr(x, store)? && eval_bexpr(y, store)?),
    }
}

/// Interpretation of logical and real variables, plus the declared finite
/// range of each logical variable (used to check `forall`).
#[derive(Debug, Clone, Default)]
pub struct Interpretation {
    ints: BTreeMap<String, i64>,
    reals: BTreeMap<String, f64>,
    ranges: BTreeMap<String, (i64, i64)>,
}

impl Interpretation {
    pub fn new() -> Self {
        Interpretation::default()
    }

    pub fn bind_int(&mut self, var: &str, value: i64) {
        self.ints.insert(var.to_string(), value);
    }

    pub fn bind_real(&mut self, var: &str, value: f64) {
        self.reals.insert(var.to_string(), value);
    }

    pub fn set_range(&mut self, var: &str, lo: i64, hi: i64) {
        self.ranges.insert(var.to_string(), (lo, hi));
    }

    pub fn with_int(&self, var: &str, value: i64) -> Self {
        let mut i = self.clone();
        i.bind_int(var, value);
        i
    }

    pub fn int(&self, var: &str) -> Result<i64, QhlError> {
        self.ints
            .get(var)
            .copied()
            .ok_or_else(|| QhlError::eval(format!("unbound logical variable {var}")))
    }

    pub fn real(&self, var: &str) -> Result<f64, QhlError> {
        self.reals
            .get(var)
            .copied()
            .ok_or_else(|| QhlError::eval(format!("unbound real variable ${var}")))
    }

    pub fn range(&self, var: &str) -> Result<(i64, i64), QhlError> {
        self.ranges.get(var).copied().ok_or_else(|| {
            QhlError::eval(format!("no declared range for quantified variable {var}"))
        })
    }
}

/// Apply a gate reference to a quantum state by index striding.
pub fn apply_gate(
    v: &QuantumState,
    app: &GateApp,
    decls: &Declarations,
) -> Result<QuantumState, QhlError> {
    let mat = decls.gate_matrix(&app.gate)?;
    Ok(QuantumState::new(linalg::apply_gate_matrix(
        v.amplitudes(),
        &mat,
        &app.qubits,
        v.num_qubits(),
    )))
}

/// Born probabilities and post-measurement states for measuring qubit `j`.
/// A branch with probability at most 1e-12 is reported absent.
pub fn measure_qubit(
    v: &QuantumState,
    qubit: usize,
) -> ((f64, Option<QuantumState>), (f64, Option<QuantumState>)) {
    let m = v.num_qubits();
    let (p0, proj0, p1, proj1) = linalg::born_split(v.amplitudes(), qubit, m);
    let renorm = |p: f64, proj: Vec<Complex64>| {
        if p > MASS_PRUNE_EPS {
            let s = 1.0 / p.sqrt();
            Some(QuantumState::new(proj.into_iter().map(|a| a * s).collect()))
        } else {
            None
        }
    };
    ((p0, renorm(p0, proj0)), (p1, renorm(p1, proj1)))
}

/// `<v|Q|v>`, clamped to `[0,1]`. Values outside `[-1e-9, 1+1e-9]` signal a
/// broken operator and error out.
pub fn expect_projector(
    v: &QuantumState,
    q: &ProjectorSpec,
    decls: &Declarations,
) -> Result<f64, QhlError> {
    let m = v.num_qubits();
    let raw = match q {
        ProjectorSpec::Mask(patterns) => {
            for p in patterns {
                if p.0.len() != m {
                    return Err(QhlError::eval(format!(
                        "mask pattern {:?} has {} positions, state has {} qubits",
                        p.0,
                        p.0.len(),
                        m
                    )));
                }
            }
            linalg::mask_expectation(v.amplitudes(), patterns, m)
        }
        ProjectorSpec::Dense { name, matrix } => {
            if matrix.dim() != v.amplitudes().len() {
                return Err(QhlError::eval(format!(
                    "projector {} has dimension {}, state has {}",
                    name.as_deref().unwrap_or("<anonymous>"),
                    matrix.dim(),
                    v.amplitudes().len()
                )));
            }
            linalg::dense_expectation(v.amplitudes(), matrix)
        }
    };
    let _ = decls;
    if !(-1e-9..=1.0 + 1e-9).contains(&raw) {
        return Err(QhlError::Numeric(format!(
            "projector expectation {raw} outside [0,1] tolerance band"
        )));
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// `Tr(P^i Tr_{-j}(rho))`: the probability that qubit `j` reads `i`.
pub fn reduced_proj_prob(v: &QuantumState, qubit: usize, outcome: u8) -> f64 {
    let m = v.num_qubits();
    v.amplitudes()
        .iter()
        .enumerate()
        .filter(|(idx, _)| linalg::bit_of(*idx, qubit, m) == outcome)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Project qubit `j` onto `|i>` and renormalize; `None` when the projection
/// probability is at most `eps`.
pub fn project_qubit(
    theta: &PureCqState,
    qubit: usize,
    outcome: u8,
    eps: f64,
) -> Option<PureCqState> {
    let m = theta.quantum.num_qubits();
    let (p0, proj0, p1, proj1) = linalg::born_split(theta.quantum.amplitudes(), qubit, m);
    let (p, proj) = if outcome == 0 {
        (p0, proj0)
    } else {
        (p1, proj1)
    };
    if p <= eps {
        return None;
    }
    let s = 1.0 / p.sqrt();
    Some(PureCqState::new(
        theta.store.clone(),
        QuantumState::new(proj.into_iter().map(|a| a * s).collect()),
    ))
}

/// Convenience equality atom used in tests: `qubit j of v reads i with
/// certainty (within atol)`.
pub fn proj_atom_holds(v: &QuantumState, qubit: usize, outcome: u8, atol: f64) -> bool {
    reduced_proj_prob(v, qubit, outcome) >= 1.0 - atol
}

/// Densified matrix of a projector spec (conjugation and test oracles).
pub fn projector_dense(q: &ProjectorSpec, num_qubits: usize) -> CMatrix {
    match q {
        ProjectorSpec::Mask(patterns) => linalg::mask_to_dense(patterns, num_qubits),
        ProjectorSpec::Dense { matrix, .. } => (**matrix).clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ast::{BuiltinGate, GateRef};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn decls1() -> Declarations {
        Declarations::for_tests(1, &["X"])
    }

    fn pure1(amps: Vec<Complex64>) -> PureCqState {
        PureCqState::new(
            ClassicalStore::zeroed(&["X".into()]),
            QuantumState::new(amps),
        )
    }

    #[test]
    fn canonicalize_removes_global_phase() {
        // i|0> -> |0>
        let theta = pure1(vec![c(0.0, 1.0), c(0.0, 0.0)]);
        let canon = canonicalize(&theta).unwrap();
        assert!((canon.quantum.amplitudes()[0] - linalg::ONE).norm() < 1e-12);

        // (-1/sqrt2)(|0> + |1>) -> (1/sqrt2)(|0> + |1>)
        let s = -std::f64::consts::FRAC_1_SQRT_2;
        let theta = pure1(vec![c(s, 0.0), c(s, 0.0)]);
        let canon = canonicalize(&theta).unwrap();
        assert!(canon.quantum.amplitudes()[0].re > 0.0);
        assert!((canon.quantum.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonicalize_rejects_zero_vector() {
        let theta = pure1(vec![c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(canonicalize(&theta).is_err());
    }

    #[test]
    fn point_dist_is_a_point() {
        let theta = pure1(vec![linalg::ONE, linalg::ZERO]);
        let d = point_dist(&theta).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-12);
        assert!((d.mass_of(&theta).unwrap() - 1.0).abs() < 1e-12);
        let other = pure1(vec![linalg::ZERO, linalg::ONE]);
        assert_eq!(d.mass_of(&other).unwrap(), 0.0);
    }

    #[test]
    fn restrict_filters_by_guard() {
        use crate::syntax::ast::{ArithExpr, BoolExpr, Rop};
        let mut theta = MixedCqState::empty();
        let s0 = pure1(vec![linalg::ONE, linalg::ZERO]);
        let mut s1 = s0.clone();
        s1.store.set("X", 1);
        theta.add(&s0, 0.4).unwrap();
        theta.add(&s1, 0.6).unwrap();

        let x_is_1 = BoolExpr::Rel(Rop::Eq, ArithExpr::pvar("X"), ArithExpr::IntConst(1));
        let r = restrict(&theta, &x_is_1).unwrap();
        assert_eq!(r.support_len(), 1);
        assert!((r.mass() - 0.6).abs() < 1e-12);

        assert!(restrict(&theta, &BoolExpr::False).unwrap().is_empty());
        assert!(restrict(&theta, &BoolExpr::True)
            .unwrap()
            .approx_eq(&theta, 1e-12));
    }

    #[test]
    fn phase_shifted_supports_merge() {
        let mut theta = MixedCqState::empty();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = pure1(vec![c(s, 0.0), c(s, 0.0)]);
        let b = pure1(vec![c(0.0, s), c(0.0, s)]); // e^{i pi/2} * a
        theta.add(&a, 0.25).unwrap();
        theta.add(&b, 0.5).unwrap();
        assert_eq!(theta.support_len(), 1);
        assert!((theta.mass() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn hadamard_on_zero_gives_plus() {
        let app = GateApp {
            gate: GateRef::Builtin(BuiltinGate::H),
            qubits: vec![1],
        };
        let v = QuantumState::basis(1, 0);
        let out = apply_gate(&v, &app, &decls1()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitudes()[0] - c(s, 0.0)).norm() < 1e-12);
        assert!((out.amplitudes()[1] - c(s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn x_on_second_qubit_permutes() {
        let decls = Declarations::for_tests(2, &["X"]);
        let app = GateApp {
            gate: GateRef::Builtin(BuiltinGate::X),
            qubits: vec![2],
        };
        let v = QuantumState::basis(2, 0b00);
        let out = apply_gate(&v, &app, &decls).unwrap();
        assert!((out.amplitudes()[0b01] - linalg::ONE).norm() < 1e-12);
    }

    #[test]
    fn cx_flips_target_when_control_set() {
        let decls = Declarations::for_tests(2, &["X"]);
        let app = GateApp {
            gate: GateRef::Builtin(BuiltinGate::Cx),
            qubits: vec![1, 2],
        };
        let v = QuantumState::basis(2, 0b10);
        let out = apply_gate(&v, &app, &decls).unwrap();
        assert!((out.amplitudes()[0b11] - linalg::ONE).norm() < 1e-12);
    }

    #[test]
    fn measure_plus_is_even_split() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = QuantumState::new(vec![c(s, 0.0), c(s, 0.0)]);
        let ((p0, v0), (p1, v1)) = measure_qubit(&v, 1);
        assert!((p0 - 0.5).abs() < 1e-12);
        assert!((p1 - 0.5).abs() < 1e-12);
        assert!((v0.unwrap().amplitudes()[0] - linalg::ONE).norm() < 1e-12);
        assert!((v1.unwrap().amplitudes()[1] - linalg::ONE).norm() < 1e-12);
    }

    #[test]
    fn measure_basis_state_has_one_branch() {
        let v = QuantumState::basis(1, 0);
        let ((p0, v0), (p1, v1)) = measure_qubit(&v, 1);
        assert!((p0 - 1.0).abs() < 1e-12);
        assert_eq!(p1, 0.0);
        assert!(v0.is_some());
        assert!(v1.is_none());
    }

    #[test]
    fn measure_entangled_pair() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![linalg::ZERO; 4];
        amps[0b00] = c(s, 0.0);
        amps[0b11] = c(s, 0.0);
        let v = QuantumState::new(amps);
        let ((p0, v0), (p1, v1)) = measure_qubit(&v, 1);
        assert!((p0 - 0.5).abs() < 1e-12);
        assert!((p1 - 0.5).abs() < 1e-12);
        assert!((v0.unwrap().amplitudes()[0b00] - linalg::ONE).norm() < 1e-12);
        assert!((v1.unwrap().amplitudes()[0b11] - linalg::ONE).norm() < 1e-12);
    }

    #[test]
    fn projector_expectations() {
        let decls = Declarations::for_tests(2, &["X"]);
        // |+> (x) |0>
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![linalg::ZERO; 4];
        amps[0b00] = c(s, 0.0);
        amps[0b10] = c(s, 0.0);
        let v = QuantumState::new(amps);

        let q = ProjectorSpec::Mask(vec![MaskPattern("0*".into())]);
        assert!((expect_projector(&v, &q, &decls).unwrap() - 0.5).abs() < 1e-12);

        let full = ProjectorSpec::full_space(2);
        assert!((expect_projector(&v, &full, &decls).unwrap() - 1.0).abs() < 1e-12);

        let empty = ProjectorSpec::Mask(vec![]);
        assert_eq!(expect_projector(&v, &empty, &decls).unwrap(), 0.0);
    }

    use crate::syntax::ast::MaskPattern;

    #[test]
    fn reduced_probabilities() {
        // |01>, qubit 2 reads 1
        let v = QuantumState::basis(2, 0b01);
        assert!((reduced_proj_prob(&v, 2, 1) - 1.0).abs() < 1e-12);

        // |+>, qubit 1 reads 0 with probability 1/2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QuantumState::new(vec![c(s, 0.0), c(s, 0.0)]);
        assert!((reduced_proj_prob(&plus, 1, 0) - 0.5).abs() < 1e-12);

        // Bell pair: marginal of qubit 1 is maximally mixed
        let mut amps = vec![linalg::ZERO; 4];
        amps[0b00] = c(s, 0.0);
        amps[0b11] = c(s, 0.0);
        let bell = QuantumState::new(amps);
        assert!((reduced_proj_prob(&bell, 1, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn store_arithmetic_overflows_are_errors() {
        use crate::syntax::ast::Aop;
        let store = ClassicalStore::from_pairs([("X".to_string(), i64::MAX)]);
        let e = ArithExpr::binop(Aop::Add, ArithExpr::pvar("X"), ArithExpr::IntConst(1));
        assert!(matches!(eval_aexpr(&e, &store), Err(QhlError::Overflow(_))));
    }
}
