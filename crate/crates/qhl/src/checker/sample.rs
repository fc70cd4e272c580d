//! Deterministic suite sampling: Haar-uniform quantum parts, uniform
//! classical values, and mixed states as random convex combinations.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assertions::{sat_pure, EvalFlags, SatConfig};
use crate::cqstate::{ClassicalStore, Interpretation, MixedCqState, PureCqState, QuantumState};
use crate::error::QhlError;
use crate::syntax::ast::DetAssertion;
use crate::syntax::Declarations;

#[derive(Debug, Clone, Copy)]
pub struct SuiteParams {
    pub count: usize,
    pub seed: u64,
    /// Classical variables are drawn uniformly from this inclusive range.
    pub int_range: (i64, i64),
    /// Mixed states combine at most this many pure states.
    pub max_mixed_supports: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            count: 50,
            seed: 0x5eed,
            int_range: (-4, 4),
            max_mixed_supports: 4,
        }
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn std_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A Haar-uniform unit vector on `2^m` dimensions.
pub fn haar_state(num_qubits: usize, rng: &mut impl Rng) -> QuantumState {
    let dim = 1usize << num_qubits;
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(std_normal(rng), std_normal(rng)))
        .collect();
    let norm = crate::cqstate::linalg::norm(&v);
    for a in &mut v {
        *a /= norm;
    }
    QuantumState::new(v)
}

pub fn random_store(decls: &Declarations, range: (i64, i64), rng: &mut impl Rng) -> ClassicalStore {
    ClassicalStore::from_pairs(
        decls
            .vars
            .iter()
            .map(|v| (v.clone(), rng.random_range(range.0..=range.1))),
    )
}

pub fn sample_pure(decls: &Declarations, params: &SuiteParams, rng: &mut impl Rng) -> PureCqState {
    PureCqState::new(
        random_store(decls, params.int_range, rng),
        haar_state(decls.num_qubits, rng),
    )
}

pub fn sample_mixed(
    decls: &Declarations,
    params: &SuiteParams,
    rng: &mut impl Rng,
) -> Result<MixedCqState, QhlError> {
    let k = rng.random_range(1..=params.max_mixed_supports.max(1));
    let weights: Vec<f64> = {
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>().max(1e-6)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    };
    let mut out = MixedCqState::empty();
    for w in weights {
        out.add(&sample_pure(decls, params, rng), w)?;
    }
    Ok(out)
}

/// Deterministic list of random pure and mixed states.
pub fn sample_states(
    decls: &Declarations,
    params: &SuiteParams,
) -> Result<(Vec<PureCqState>, Vec<MixedCqState>), QhlError> {
    let mut rng = rng_for(params.seed);
    let pure: Vec<PureCqState> = (0..params.count)
        .map(|_| sample_pure(decls, params, &mut rng))
        .collect();
    let mixed: Vec<MixedCqState> = (0..params.count)
        .map(|_| sample_mixed(decls, params, &mut rng))
        .collect::<Result<_, _>>()?;
    Ok((pure, mixed))
}

/// Qubits pinned by top-level `P_j^i` conjuncts of an assertion.
fn pinned_qubits(phi: &DetAssertion, out: &mut Vec<(usize, u8)>) {
    match phi {
        DetAssertion::Proj { qubit, outcome } => {
            if !out.iter().any(|(q, _)| q == qubit) {
                out.push((*qubit, *outcome));
            }
        }
        DetAssertion::And(l, r) => {
            pinned_qubits(l, out);
            pinned_qubits(r, out);
        }
        _ => {}
    }
}

/// Sample a pure state satisfying `pre`: qubits pinned by top-level
/// projector conjuncts are fixed to their basis states, the remaining
/// qubits get a joint Haar-uniform state, and classical stores are
/// rejection-sampled. Errors when no satisfying state is found.
pub fn sample_pure_satisfying(
    pre: &DetAssertion,
    decls: &Declarations,
    interp: &Interpretation,
    params: &SuiteParams,
    sat_cfg: &SatConfig,
    rng: &mut impl Rng,
) -> Result<PureCqState, QhlError> {
    let m = decls.num_qubits;
    let mut pins = Vec::new();
    pinned_qubits(pre, &mut pins);
    let free: Vec<usize> = (1..=m)
        .filter(|q| !pins.iter().any(|(p, _)| p == q))
        .collect();

    for _ in 0..1000 {
        let sub = haar_state(free.len(), rng);
        let mut amps = vec![crate::cqstate::linalg::ZERO; 1 << m];
        for (idx, amp) in amps.iter_mut().enumerate() {
            let pinned_ok = pins
                .iter()
                .all(|(q, i)| crate::cqstate::linalg::bit_of(idx, *q, m) == *i);
            if !pinned_ok {
                continue;
            }
            let mut sub_idx = 0usize;
            for q in &free {
                sub_idx = (sub_idx << 1) | crate::cqstate::linalg::bit_of(idx, *q, m) as usize;
            }
            *amp = sub.amplitudes()[sub_idx];
        }
        let theta = PureCqState::new(
            random_store(decls, params.int_range, rng),
            QuantumState::new(amps),
        );
        let mut flags = EvalFlags::default();
        if sat_pure(pre, &theta, interp, decls, sat_cfg, &mut flags)? {
            return Ok(theta);
        }
    }
    Err(QhlError::eval(
        "could not sample a precondition-satisfying state in 1000 attempts",
    ))
}
