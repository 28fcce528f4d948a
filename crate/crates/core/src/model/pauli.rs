//! Sparse Pauli-string algebra.
//!
//! Operators are kept as canonical weighted sums of Pauli strings. A string
//! stores only its non-identity factors, so the identity is the term with an
//! empty factor map. Canonical form (sorted strings, like terms merged, zero
//! coefficients dropped) makes operator equality structural.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Coefficients with magnitude below this are treated as exact zeros during
/// canonicalization. Physical coefficients in this crate are O(0.1..10) eV,
/// so anything at 1e-14 is floating-point cancellation residue.
pub const COEFF_EPS: f64 = 1e-14;

/// A single-qubit Pauli factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliOp {
    X,
    Y,
    Z,
}

impl PauliOp {
    /// Product `self * other` on one qubit: returns (phase, result), where
    /// result `None` means the identity.
    fn mul(self, other: PauliOp) -> (Complex64, Option<PauliOp>) {
        use PauliOp::*;
        let i = Complex64::new(0.0, 1.0);
        match (self, other) {
            (X, X) | (Y, Y) | (Z, Z) => (Complex64::new(1.0, 0.0), None),
            (X, Y) => (i, Some(Z)),
            (Y, X) => (-i, Some(Z)),
            (Y, Z) => (i, Some(X)),
            (Z, Y) => (-i, Some(X)),
            (Z, X) => (i, Some(Y)),
            (X, Z) => (-i, Some(Y)),
        }
    }

    /// Action on a basis bit: `P|b> = phase |b'>`.
    fn apply_bit(self, bit: bool) -> (Complex64, bool) {
        match self {
            PauliOp::X => (Complex64::new(1.0, 0.0), !bit),
            PauliOp::Y => {
                // Y|0> = i|1>, Y|1> = -i|0>
                let phase = if bit {
                    Complex64::new(0.0, -1.0)
                } else {
                    Complex64::new(0.0, 1.0)
                };
                (phase, !bit)
            }
            PauliOp::Z => {
                let phase = if bit {
                    Complex64::new(-1.0, 0.0)
                } else {
                    Complex64::new(1.0, 0.0)
                };
                (phase, bit)
            }
        }
    }

    fn dense(self) -> DMatrix<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            PauliOp::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            PauliOp::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            PauliOp::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PauliOp::X => write!(f, "X"),
            PauliOp::Y => write!(f, "Y"),
            PauliOp::Z => write!(f, "Z"),
        }
    }
}

/// One weighted Pauli string. `factors` maps qubit index to its non-identity
/// factor; an empty map is the identity term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub factors: BTreeMap<usize, PauliOp>,
}

impl PauliTerm {
    pub fn identity(coeff: Complex64) -> Self {
        PauliTerm {
            coeff,
            factors: BTreeMap::new(),
        }
    }

    pub fn single(coeff: Complex64, qubit: usize, op: PauliOp) -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(qubit, op);
        PauliTerm { coeff, factors }
    }

    pub fn new(coeff: Complex64, factors: impl IntoIterator<Item = (usize, PauliOp)>) -> Self {
        PauliTerm {
            coeff,
            factors: factors.into_iter().collect(),
        }
    }

    /// Highest qubit index touched, if any.
    pub fn max_qubit(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }

    /// Operator product `self * other` (apply `other` first).
    pub fn mul(&self, other: &PauliTerm) -> PauliTerm {
        let mut coeff = self.coeff * other.coeff;
        let mut factors = self.factors.clone();
        for (&q, &op_r) in &other.factors {
            match factors.remove(&q) {
                None => {
                    factors.insert(q, op_r);
                }
                Some(op_l) => {
                    let (phase, res) = op_l.mul(op_r);
                    coeff *= phase;
                    if let Some(res) = res {
                        factors.insert(q, res);
                    }
                }
            }
        }
        PauliTerm { coeff, factors }
    }

    /// Action on a computational basis state: `P|index> = phase |new_index>`.
    pub fn apply_basis(&self, index: usize) -> (Complex64, usize) {
        let mut phase = self.coeff;
        let mut out = index;
        for (&q, &op) in &self.factors {
            let bit = (index >> q) & 1 == 1;
            let (p, new_bit) = op.apply_bit(bit);
            phase *= p;
            if new_bit != bit {
                out ^= 1 << q;
            }
        }
        (phase, out)
    }

    /// Hermitian conjugate (Pauli strings are self-adjoint, so only the
    /// coefficient conjugates).
    pub fn adjoint(&self) -> PauliTerm {
        PauliTerm {
            coeff: self.coeff.conj(),
            factors: self.factors.clone(),
        }
    }

    fn label(&self) -> String {
        if self.factors.is_empty() {
            return "I".to_string();
        }
        self.factors
            .iter()
            .map(|(q, op)| format!("{op}{q}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A canonical weighted sum of Pauli strings over a fixed qubit register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

#[derive(Debug, thiserror::Error)]
pub enum PauliError {
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("operator registers differ: {left} vs {right} qubits")]
    RegisterMismatch { left: usize, right: usize },
}

impl PauliSum {
    /// Build a canonical sum from raw terms. Terms touching qubits outside
    /// the register are rejected.
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self, PauliError> {
        for t in &terms {
            if let Some(q) = t.max_qubit() {
                if q >= n_qubits {
                    return Err(PauliError::QubitOutOfRange {
                        index: q,
                        n_qubits,
                    });
                }
            }
        }
        let mut sum = PauliSum { n_qubits, terms };
        sum.canonicalize();
        Ok(sum)
    }

    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: Complex64) -> Self {
        PauliSum {
            n_qubits,
            terms: vec![PauliTerm::identity(coeff)],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn term_labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label()).collect()
    }

    fn canonicalize(&mut self) {
        self.terms.sort_by(|a, b| a.factors.cmp(&b.factors));
        let mut merged: Vec<PauliTerm> = Vec::with_capacity(self.terms.len());
        for term in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.factors == term.factors => last.coeff += term.coeff,
                _ => merged.push(term),
            }
        }
        merged.retain(|t| t.coeff.norm() > COEFF_EPS);
        self.terms = merged;
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum, PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::RegisterMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        PauliSum::new(self.n_qubits, terms)
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliTerm {
                coeff: t.coeff * factor,
                factors: t.factors.clone(),
            })
            .collect();
        let mut sum = PauliSum {
            n_qubits: self.n_qubits,
            terms,
        };
        sum.canonicalize();
        sum
    }

    /// Operator product (apply `other` first).
    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum, PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::RegisterMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b));
            }
        }
        PauliSum::new(self.n_qubits, terms)
    }

    pub fn adjoint(&self) -> PauliSum {
        let mut sum = PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(PauliTerm::adjoint).collect(),
        };
        sum.canonicalize();
        sum
    }

    /// Shift by a multiple of the identity: `self + coeff * I`.
    pub fn add_identity(&self, coeff: Complex64) -> PauliSum {
        let mut terms = self.terms.clone();
        terms.push(PauliTerm::identity(coeff));
        let mut sum = PauliSum {
            n_qubits: self.n_qubits,
            terms,
        };
        sum.canonicalize();
        sum
    }

    /// True when the canonical form is self-adjoint to within `COEFF_EPS`.
    pub fn is_hermitian(&self) -> bool {
        let adj = self.adjoint();
        if adj.terms.len() != self.terms.len() {
            return false;
        }
        self.terms
            .iter()
            .zip(adj.terms.iter())
            .all(|(a, b)| a.factors == b.factors && (a.coeff - b.coeff).norm() <= COEFF_EPS)
    }

    /// Dense matrix realization, `2^n x 2^n`. Intended for oracles and small
    /// registers only.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for term in &self.terms {
            for col in 0..dim {
                let (phase, row) = term.apply_basis(col);
                m[(row, col)] += phase;
            }
        }
        m
    }
}

/// Dense matrix of one weighted Pauli string, built by Kronecker products
/// with qubit 0 as the least significant bit.
pub fn term_dense(term: &PauliTerm, n_qubits: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::identity(1, 1);
    for q in 0..n_qubits {
        let factor = match term.factors.get(&q) {
            Some(op) => op.dense(),
            None => DMatrix::identity(2, 2),
        };
        m = factor.kronecker(&m);
    }
    m * term.coeff
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_qubit_products() {
        // XY = iZ, ZX = iY, YZ = iX and anti-symmetric partners
        let (p, r) = PauliOp::X.mul(PauliOp::Y);
        assert_eq!(r, Some(PauliOp::Z));
        assert_eq!(p, c(0.0, 1.0));
        let (p, r) = PauliOp::Y.mul(PauliOp::X);
        assert_eq!(r, Some(PauliOp::Z));
        assert_eq!(p, c(0.0, -1.0));
        let (p, r) = PauliOp::Z.mul(PauliOp::Z);
        assert_eq!(r, None);
        assert_eq!(p, c(1.0, 0.0));
    }

    #[test]
    fn term_product_tracks_phase() {
        let x0 = PauliTerm::single(c(1.0, 0.0), 0, PauliOp::X);
        let y0 = PauliTerm::single(c(1.0, 0.0), 0, PauliOp::Y);
        let prod = x0.mul(&y0);
        assert!(prod.factors.get(&0) == Some(&PauliOp::Z));
        assert_eq!(prod.coeff, c(0.0, 1.0));
    }

    #[test]
    fn kron_matches_basis_action() {
        // Dense realization by Kronecker products must agree with the
        // basis-state action used everywhere else.
        let term = PauliTerm::new(c(0.5, -0.25), [(0, PauliOp::Y), (2, PauliOp::Z)]);
        let n = 3;
        let dense = term_dense(&term, n);
        for col in 0..(1 << n) {
            let (phase, row) = term.apply_basis(col);
            for r in 0..(1 << n) {
                let expect = if r == row { phase } else { c(0.0, 0.0) };
                assert!((dense[(r, col)] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn canonicalization_merges_and_drops() {
        let t1 = PauliTerm::single(c(1.0, 0.0), 1, PauliOp::Z);
        let t2 = PauliTerm::single(c(-1.0, 0.0), 1, PauliOp::Z);
        let t3 = PauliTerm::identity(c(2.0, 0.0));
        let sum = PauliSum::new(2, vec![t1, t2, t3]).unwrap();
        assert_eq!(sum.terms().len(), 1);
        assert!(sum.terms()[0].factors.is_empty());
    }

    #[test]
    fn out_of_range_rejected() {
        let t = PauliTerm::single(c(1.0, 0.0), 5, PauliOp::X);
        assert!(PauliSum::new(4, vec![t]).is_err());
    }

    #[test]
    fn hermiticity_detection() {
        let h = PauliSum::new(
            2,
            vec![
                PauliTerm::single(c(0.3, 0.0), 0, PauliOp::Z),
                PauliTerm::new(c(-1.2, 0.0), [(0, PauliOp::X), (1, PauliOp::X)]),
            ],
        )
        .unwrap();
        assert!(h.is_hermitian());
        let skew = PauliSum::new(2, vec![PauliTerm::single(c(0.0, 1.0), 0, PauliOp::X)]).unwrap();
        assert!(!skew.is_hermitian());
    }

    proptest! {
        // Canonicalization is idempotent and independent of term order.
        #[test]
        fn canonical_form_is_order_independent(perm_seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut terms = vec![
                PauliTerm::single(c(0.5, 0.0), 0, PauliOp::X),
                PauliTerm::new(c(0.25, 0.5), [(0, PauliOp::Z), (2, PauliOp::Z)]),
                PauliTerm::single(c(-0.5, 0.0), 0, PauliOp::X),
                PauliTerm::identity(c(1.0, 0.0)),
                PauliTerm::single(c(1.5, 0.0), 1, PauliOp::Y),
            ];
            let reference = PauliSum::new(3, terms.clone()).unwrap();
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(perm_seed);
            terms.shuffle(&mut rng);
            let shuffled = PauliSum::new(3, terms).unwrap();
            prop_assert_eq!(reference.clone(), shuffled);
            // idempotence: re-building from the canonical terms changes nothing
            let rebuilt = PauliSum::new(3, reference.terms().to_vec()).unwrap();
            prop_assert_eq!(reference, rebuilt);
        }
    }
}
