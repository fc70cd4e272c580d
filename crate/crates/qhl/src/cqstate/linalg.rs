//! Dense complex linear algebra for the state semantics.
//!
//! Vectors are amplitude slices of length `2^m` with qubit 1 as the most
//! significant bit of the basis index. Gates are applied by index striding,
//! never by materializing the `2^m x 2^m` embedding.

use num_complex::Complex64;

use crate::error::QhlError;
use crate::syntax::ast::{BuiltinGate, MaskPattern};

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), dim * dim, "matrix data length mismatch");
        CMatrix { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul_mat(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![ZERO; self.dim];
        for i in 0..self.dim {
            let mut acc = ZERO;
            for j in 0..self.dim {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Largest entry of `self - rhs` in absolute value.
    pub fn max_abs_diff(&self, rhs: &CMatrix) -> f64 {
        assert_eq!(self.dim, rhs.dim);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint()
            .mul_mat(self)
            .max_abs_diff(&CMatrix::identity(self.dim))
            < tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) < tol
    }

    pub fn is_idempotent(&self, tol: f64) -> bool {
        self.mul_mat(self).max_abs_diff(self) < tol
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// The 2x2 / 4x4 / 8x8 matrix of a built-in gate. Two-qubit gates take the
/// first listed qubit as control (most significant bit of the gate index).
pub fn builtin_matrix(gate: BuiltinGate) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new;
    match gate {
        BuiltinGate::H => CMatrix::new(2, vec![c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
        BuiltinGate::X => CMatrix::new(2, vec![ZERO, ONE, ONE, ZERO]),
        BuiltinGate::Y => CMatrix::new(2, vec![ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]),
        BuiltinGate::Z => CMatrix::new(2, vec![ONE, ZERO, ZERO, c(-1.0, 0.0)]),
        BuiltinGate::S => CMatrix::new(2, vec![ONE, ZERO, ZERO, c(0.0, 1.0)]),
        BuiltinGate::T => CMatrix::new(2, vec![ONE, ZERO, ZERO, c(s, s)]),
        BuiltinGate::Cx => {
            let mut m = CMatrix::identity(4);
            m[(2, 2)] = ZERO;
            m[(3, 3)] = ZERO;
            m[(2, 3)] = ONE;
            m[(3, 2)] = ONE;
            m
        }
        BuiltinGate::Cz => {
            let mut m = CMatrix::identity(4);
            m[(3, 3)] = c(-1.0, 0.0);
            m
        }
        BuiltinGate::Swap => {
            let mut m = CMatrix::identity(4);
            m[(1, 1)] = ZERO;
            m[(2, 2)] = ZERO;
            m[(1, 2)] = ONE;
            m[(2, 1)] = ONE;
            m
        }
        BuiltinGate::Ccx => {
            let mut m = CMatrix::identity(8);
            m[(6, 6)] = ZERO;
            m[(7, 7)] = ZERO;
            m[(6, 7)] = ONE;
            m[(7, 6)] = ONE;
            m
        }
    }
}

/// Permutation matrix of the oracle `U_f |x,y> = |x, y ^ f(x)>` for a
/// complete truth table over `k` input bits (`outputs[x] = f(x)`). The
/// matrix acts on `k + 1` qubits; the output qubit is the last one.
pub fn oracle_matrix(k: usize, outputs: &[u8]) -> CMatrix {
    assert_eq!(outputs.len(), 1 << k);
    let dim = 1 << (k + 1);
    let mut m = CMatrix::zeros(dim);
    for col in 0..dim {
        let x = col >> 1;
        let y = col & 1;
        let row = (x << 1) | (y ^ outputs[x] as usize);
        m[(row, col)] = ONE;
    }
    m
}

/// Bit position (from the least significant bit) of 1-based qubit `j` in a
/// basis index over `m` qubits.
#[inline]
pub fn bit_pos(qubit: usize, num_qubits: usize) -> usize {
    num_qubits - qubit
}

#[inline]
pub fn bit_of(index: usize, qubit: usize, num_qubits: usize) -> u8 {
    ((index >> bit_pos(qubit, num_qubits)) & 1) as u8
}

/// Apply a `k`-qubit gate matrix to the listed qubits of an `m`-qubit
/// amplitude vector. The first listed qubit corresponds to the most
/// significant bit of the gate's own index.
pub fn apply_gate_matrix(
    v: &[Complex64],
    mat: &CMatrix,
    qubits: &[usize],
    num_qubits: usize,
) -> Vec<Complex64> {
    let k = qubits.len();
    assert_eq!(mat.dim(), 1 << k, "gate arity mismatch");
    assert_eq!(v.len(), 1 << num_qubits);

    let positions: Vec<usize> = qubits.iter().map(|&q| bit_pos(q, num_qubits)).collect();
    let target_mask: usize = positions.iter().map(|&p| 1 << p).sum();

    // index offset contributed by gate-local index g
    let spread = |g: usize| -> usize {
        positions
            .iter()
            .enumerate()
            .map(|(l, &p)| ((g >> (k - 1 - l)) & 1) << p)
            .sum()
    };
    let offsets: Vec<usize> = (0..1usize << k).map(spread).collect();

    let mut out = v.to_vec();
    let mut gathered = vec![ZERO; 1 << k];
    for base in 0..v.len() {
        if base & target_mask != 0 {
            continue;
        }
        for (g, &off) in offsets.iter().enumerate() {
            gathered[g] = v[base | off];
        }
        for (row, &off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (col, &amp) in gathered.iter().enumerate() {
                acc += mat[(row, col)] * amp;
            }
            out[base | off] = acc;
        }
    }
    out
}

/// Embed a gate into the full space by applying it to every basis vector.
/// Only used at desk scale (projector conjugation in the preterm calculus).
pub fn embed_gate(mat: &CMatrix, qubits: &[usize], num_qubits: usize) -> CMatrix {
    let dim = 1 << num_qubits;
    let mut full = CMatrix::zeros(dim);
    let mut basis = vec![ZERO; dim];
    for col in 0..dim {
        basis[col] = ONE;
        let image = apply_gate_matrix(&basis, mat, qubits, num_qubits);
        basis[col] = ZERO;
        for (row, amp) in image.into_iter().enumerate() {
            full[(row, col)] = amp;
        }
    }
    full
}

/// Born probabilities and the (unnormalized) projections of measuring qubit
/// `j` in the computational basis: `(p0, proj0, p1, proj1)`.
pub fn born_split(
    v: &[Complex64],
    qubit: usize,
    num_qubits: usize,
) -> (f64, Vec<Complex64>, f64, Vec<Complex64>) {
    let mut p = [0.0f64; 2];
    let mut proj = [vec![ZERO; v.len()], vec![ZERO; v.len()]];
    for (idx, amp) in v.iter().enumerate() {
        let b = bit_of(idx, qubit, num_qubits) as usize;
        p[b] += amp.norm_sqr();
        proj[b][idx] = *amp;
    }
    let [proj0, proj1] = proj;
    (p[0], proj0, p[1], proj1)
}

/// Does any of the patterns match the basis index?
pub fn mask_matches(patterns: &[MaskPattern], index: usize, num_qubits: usize) -> bool {
    patterns.iter().any(|p| p.matches(index, num_qubits))
}

/// `<v|Q|v>` for a diagonal basis-mask projector.
pub fn mask_expectation(v: &[Complex64], patterns: &[MaskPattern], num_qubits: usize) -> f64 {
    v.iter()
        .enumerate()
        .filter(|(idx, _)| mask_matches(patterns, *idx, num_qubits))
        .map(|(_, amp)| amp.norm_sqr())
        .sum()
}

/// `Re <v|M|v>` for a dense Hermitian operator.
pub fn dense_expectation(v: &[Complex64], mat: &CMatrix) -> f64 {
    let mv = mat.mul_vec(v);
    v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Densify a basis-mask projector (test oracles and conjugation only).
pub fn mask_to_dense(patterns: &[MaskPattern], num_qubits: usize) -> CMatrix {
    let dim = 1 << num_qubits;
    let mut m = CMatrix::zeros(dim);
    for i in 0..dim {
        if mask_matches(patterns, i, num_qubits) {
            m[(i, i)] = ONE;
        }
    }
    m
}

/// `P_j^i M P_j^i`: zero out every row and column whose qubit-`j` bit is not
/// `i`.
pub fn sandwich_single_bit(mat: &CMatrix, qubit: usize, outcome: u8, num_qubits: usize) -> CMatrix {
    let dim = mat.dim();
    let mut out = CMatrix::zeros(dim);
    for i in 0..dim {
        if bit_of(i, qubit, num_qubits) != outcome {
            continue;
        }
        for j in 0..dim {
            if bit_of(j, qubit, num_qubits) == outcome {
                out[(i, j)] = mat[(i, j)];
            }
        }
    }
    out
}

pub fn validate_unitary(name: &str, m: &CMatrix, tol: f64) -> Result<(), QhlError> {
    if !m.is_unitary(tol) {
        return Err(QhlError::validation(format!(
            "gate {name}: matrix is not unitary within {tol:e}"
        )));
    }
    Ok(())
}

pub fn validate_projector(name: &str, m: &CMatrix, tol: f64) -> Result<(), QhlError> {
    if !m.is_hermitian(tol) {
        return Err(QhlError::validation(format!(
            "projector {name}: matrix is not Hermitian within {tol:e}"
        )));
    }
    if !m.is_idempotent(tol) {
        return Err(QhlError::validation(format!(
            "projector {name}: matrix is not idempotent within {tol:e}"
        )));
    }
    Ok(())
}
