//! Dense complex-matrix algebra on the qubit ⊗ resonator Hilbert space.
//!
//! Basis convention: the qubit factor lists |e⟩ first, so `σ_z = diag(+1, −1)`
//! and `p_e = (⟨σ_z⟩ + 1) / 2`. Composite basis index is `q * (n_max + 1) + n`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance for commutator-based parity tests.
pub const PARITY_TOLERANCE: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_fn(rows.len(), cols, |r, c| C64::new(rows[r][c], 0.0))
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        Self::from_fn(rows, cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &self.matmul(other) + &other.matmul(self)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `⟨u|M|v⟩`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        self.apply(v)
            .iter()
            .zip(u)
            .map(|(mv, uu)| uu.conj() * mv)
            .sum()
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .map(|v| v.norm())
                    .sum()
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)])
    }

    /// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
    /// Columns of the returned matrix are the eigenvectors.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        assert!(self.is_square());
        let eig = nalgebra::SymmetricEigen::new(self.to_nalgebra());
        let mut order: Vec<usize> = (0..self.rows).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = Self::from_fn(self.rows, self.rows, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, s: f64) -> ComplexMatrix {
        self.scale(C64::new(s, 0.0))
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, s: C64) -> ComplexMatrix {
        self.scale(s)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

/// Ordered subsystem dimensions, always (qubit, resonator) when both are present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpace {
    factor_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() || factor_dims.contains(&0) {
            return Err(Error::invalid("factor_dims", "dimensions must be positive"));
        }
        Ok(Self { factor_dims })
    }

    pub fn qubit() -> Self {
        Self {
            factor_dims: vec![2],
        }
    }

    pub fn resonator(n_max: usize) -> Self {
        Self {
            factor_dims: vec![n_max + 1],
        }
    }

    pub fn qubit_resonator(n_max: usize) -> Self {
        Self {
            factor_dims: vec![2, n_max + 1],
        }
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    /// Fock dimension of the resonator factor, if present.
    pub fn fock_dim(&self) -> Option<usize> {
        match self.factor_dims.as_slice() {
            [2, n] => Some(*n),
            _ => None,
        }
    }

    /// Composite basis index of `|q, n⟩` with `q = 0` for |e⟩ and `q = 1` for |g⟩.
    pub fn index(&self, qubit: usize, photons: usize) -> usize {
        match self.fock_dim() {
            Some(nf) => qubit * nf + photons,
            None => qubit,
        }
    }
}

/// A square operator tied to the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    space: HilbertSpace,
    matrix: ComplexMatrix,
    name: String,
}

impl LabeledOperator {
    pub fn new(
        space: HilbertSpace,
        matrix: ComplexMatrix,
        name: impl Into<String>,
    ) -> Result<Self> {
        let dim = space.dim();
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        if matrix.rows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.rows(),
            });
        }
        Ok(Self {
            space,
            matrix,
            name: name.into(),
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PauliKind {
    X,
    Y,
    Z,
    Plus,
    Minus,
    Identity,
}

pub fn pauli(kind: PauliKind) -> LabeledOperator {
    let (m, name) = match kind {
        PauliKind::X => (
            ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO]),
            "sigma_x",
        ),
        PauliKind::Y => (
            ComplexMatrix::from_vec(2, 2, vec![ZERO, -I, I, ZERO]),
            "sigma_y",
        ),
        PauliKind::Z => (
            ComplexMatrix::from_vec(2, 2, vec![ONE, ZERO, ZERO, -ONE]),
            "sigma_z",
        ),
        PauliKind::Plus => (
            ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ZERO, ZERO]),
            "sigma_plus",
        ),
        PauliKind::Minus => (
            ComplexMatrix::from_vec(2, 2, vec![ZERO, ZERO, ONE, ZERO]),
            "sigma_minus",
        ),
        PauliKind::Identity => (Ok(ComplexMatrix::identity(2)), "identity_q"),
    };
    LabeledOperator {
        space: HilbertSpace::qubit(),
        matrix: m.expect("2x2 literal"),
        name: name.into(),
    }
}

/// Truncated resonator ladder operators on `|0⟩ … |n_max⟩`.
#[derive(Clone, Debug)]
pub struct BosonOps {
    pub annihilate: LabeledOperator,
    pub create: LabeledOperator,
    pub number: LabeledOperator,
}

pub fn boson_ops(n_max: usize) -> Result<BosonOps> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let space = HilbertSpace::resonator(n_max);
    let d = n_max + 1;
    let a = ComplexMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let n = ComplexMatrix::diagonal(&(0..d).map(|k| C64::new(k as f64, 0.0)).collect::<Vec<_>>());
    Ok(BosonOps {
        create: LabeledOperator::new(space.clone(), a.adjoint(), "a_dag")?,
        annihilate: LabeledOperator::new(space.clone(), a, "a")?,
        number: LabeledOperator::new(space, n, "n")?,
    })
}

pub fn resonator_identity(n_max: usize) -> LabeledOperator {
    LabeledOperator {
        space: HilbertSpace::resonator(n_max),
        matrix: ComplexMatrix::identity(n_max + 1),
        name: "identity_r".into(),
    }
}

/// `a ⊗ b` with `a` on the qubit factor and `b` on a single resonator factor.
pub fn tensor(a: &LabeledOperator, b: &LabeledOperator) -> Result<LabeledOperator> {
    if a.space != HilbertSpace::qubit() {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: a.space.dim(),
        });
    }
    if b.space.factor_dims().len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: b.space.factor_dims().len(),
        });
    }
    let n_max = b.space.dim() - 1;
    LabeledOperator::new(
        HilbertSpace::qubit_resonator(n_max),
        a.matrix.kron(&b.matrix),
        format!("{}(x){}", a.name, b.name),
    )
}

/// Qubit, resonator and composite parity operators.
#[derive(Clone, Debug)]
pub struct ParityOps {
    pub qubit: LabeledOperator,
    pub resonator: LabeledOperator,
    pub composite: LabeledOperator,
}

pub fn parity_ops(n_max: usize) -> Result<ParityOps> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let z = pauli(PauliKind::Z);
    let qubit = LabeledOperator::new(HilbertSpace::qubit(), -z.matrix(), "parity_q")?;
    let signs: Vec<C64> = (0..=n_max)
        .map(|n| if n % 2 == 0 { ONE } else { -ONE })
        .collect();
    let resonator = LabeledOperator::new(
        HilbertSpace::resonator(n_max),
        ComplexMatrix::diagonal(&signs),
        "parity_r",
    )?;
    let mut composite = tensor(&qubit, &resonator)?;
    composite.name = "parity_qr".into();
    Ok(ParityOps {
        qubit,
        resonator,
        composite,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityClass {
    Even,
    Odd,
    None,
}

impl ParityClass {
    /// Sign acquired under the parity transformation, if defined.
    pub fn sign(self) -> Option<i32> {
        match self {
            ParityClass::Even => Some(1),
            ParityClass::Odd => Some(-1),
            ParityClass::None => None,
        }
    }
}

pub fn parity_classify(op: &LabeledOperator, parity: &LabeledOperator) -> Result<ParityClass> {
    parity_classify_matrix(op.matrix(), parity.matrix())
}

pub fn parity_classify_matrix(op: &ComplexMatrix, parity: &ComplexMatrix) -> Result<ParityClass> {
    if op.rows() != parity.rows() || !op.is_square() || !parity.is_square() {
        return Err(Error::DimensionMismatch {
            expected: parity.rows(),
            found: op.rows(),
        });
    }
    if parity.commutator(op).max_abs() <= PARITY_TOLERANCE {
        Ok(ParityClass::Even)
    } else if parity.anticommutator(op).max_abs() <= PARITY_TOLERANCE {
        Ok(ParityClass::Odd)
    } else {
        Ok(ParityClass::None)
    }
}

/// Lifts a qubit operator to the composite space as `op ⊗ 1`.
pub fn on_qubit(op: &ComplexMatrix, n_max: usize) -> ComplexMatrix {
    op.kron(&ComplexMatrix::identity(n_max + 1))
}

/// Lifts a resonator operator to the composite space as `1 ⊗ op`.
pub fn on_resonator(op: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::identity(2).kron(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basis(dim: usize, k: usize) -> Vec<C64> {
        let mut v = vec![ZERO; dim];
        v[k] = ONE;
        v
    }

    #[test]
    fn sigma_z_puts_excited_first() {
        let z = pauli(PauliKind::Z);
        assert_eq!(z.matrix()[(0, 0)], ONE);
        assert_eq!(z.matrix()[(1, 1)], -ONE);
    }

    #[test]
    fn ladder_sum_is_sigma_x() {
        let sum = pauli(PauliKind::Plus).matrix() + pauli(PauliKind::Minus).matrix();
        assert_eq!(&sum, pauli(PauliKind::X).matrix());
    }

    #[test]
    fn pauli_product_table() {
        let s = [
            pauli(PauliKind::X).into_matrix(),
            pauli(PauliKind::Y).into_matrix(),
            pauli(PauliKind::Z).into_matrix(),
        ];
        let id = ComplexMatrix::identity(2);
        for i in 0..3 {
            for j in 0..3 {
                let mut expected = if i == j {
                    id.clone()
                } else {
                    ComplexMatrix::zeros(2, 2)
                };
                for (k, sk) in s.iter().enumerate() {
                    let eps = levi_civita(i, j, k);
                    if eps != 0.0 {
                        expected = &expected + &sk.scale(I * eps);
                    }
                }
                assert!(s[i].matmul(&s[j]).max_abs_diff(&expected) < 1e-15, "{i}{j}");
            }
        }
    }

    fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    }

    #[test]
    fn boson_ops_small_cases() {
        let ops = boson_ops(1).unwrap();
        assert_eq!(
            ops.annihilate.matrix(),
            &ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])
        );
        let ops = boson_ops(4).unwrap();
        let v = ops.number.matrix().apply(&basis(5, 2));
        assert_eq!(v, basis(5, 2).iter().map(|x| x * 2.0).collect::<Vec<_>>());
        assert!(boson_ops(0).is_err());
    }

    #[test]
    fn canonical_commutator_below_truncation() {
        for n_max in 1..8 {
            let ops = boson_ops(n_max).unwrap();
            let c = ops.annihilate.matrix().commutator(ops.create.matrix());
            for r in 0..n_max {
                for col in 0..n_max {
                    let want = if r == col { ONE } else { ZERO };
                    assert!((c[(r, col)] - want).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn tensor_examples() {
        let id = tensor(&pauli(PauliKind::Identity), &resonator_identity(2)).unwrap();
        assert_eq!(id.matrix(), &ComplexMatrix::identity(6));
        let ops = boson_ops(3).unwrap();
        let zn = tensor(&pauli(PauliKind::Z), &ops.number).unwrap();
        let space = zn.space().clone();
        let e2 = basis(8, space.index(0, 2));
        let out = zn.matrix().apply(&e2);
        assert_eq!(out, e2.iter().map(|x| x * 2.0).collect::<Vec<_>>());
        assert_eq!(zn.dim(), 2 * 4);
    }

    #[test]
    fn tensor_rejects_wrong_factor() {
        let ops = boson_ops(2).unwrap();
        assert!(tensor(&ops.number, &ops.number).is_err());
        let composite = tensor(&pauli(PauliKind::X), &ops.number).unwrap();
        assert!(tensor(&pauli(PauliKind::X), &composite).is_err());
    }

    #[test]
    fn parity_examples() {
        let p = parity_ops(3).unwrap();
        let r = p.resonator.matrix();
        assert_eq!(r[(0, 0)], ONE);
        assert_eq!(r[(1, 1)], -ONE);
        // |g⟩ is index 1 and even.
        assert_eq!(p.qubit.matrix()[(1, 1)], ONE);
        let sp = p.composite.space().clone();
        let val = |q, n| p.composite.matrix()[(sp.index(q, n), sp.index(q, n))].re;
        for n in 1..3 {
            assert_eq!(val(0, n + 1), val(0, n - 1));
            assert_eq!(val(0, n + 1), -val(0, n));
        }
        assert_eq!(
            p.composite.matrix(),
            tensor(&p.qubit, &p.resonator).unwrap().matrix()
        );
    }

    #[test]
    fn parity_operators_are_hermitian_involutions() {
        for n_max in 1..6 {
            let p = parity_ops(n_max).unwrap();
            for op in [&p.qubit, &p.resonator, &p.composite] {
                let m = op.matrix();
                assert!(m.is_hermitian(1e-12));
                let sq = m.matmul(m);
                assert!(sq.max_abs_diff(&ComplexMatrix::identity(m.rows())) < 1e-12);
            }
        }
    }

    #[test]
    fn classify_pauli_operators() {
        let pq = parity_ops(1).unwrap().qubit;
        let x = pauli(PauliKind::X);
        let z = pauli(PauliKind::Z);
        assert_eq!(parity_classify(&z, &pq).unwrap(), ParityClass::Even);
        assert_eq!(parity_classify(&x, &pq).unwrap(), ParityClass::Odd);
        let mixed =
            LabeledOperator::new(HilbertSpace::qubit(), x.matrix() + z.matrix(), "x+z").unwrap();
        assert_eq!(parity_classify(&mixed, &pq).unwrap(), ParityClass::None);
        let big = parity_ops(2).unwrap().composite;
        assert!(parity_classify(&x, &big).is_err());
    }

    #[test]
    fn odd_operators_have_no_diagonal_parity_elements() {
        let n_max = 3;
        let p = parity_ops(n_max).unwrap().composite;
        let ops = boson_ops(n_max).unwrap();
        let x = ops.annihilate.matrix() + ops.create.matrix();
        let candidates = [
            on_qubit(pauli(PauliKind::X).matrix(), n_max),
            on_resonator(&x),
            pauli(PauliKind::Z).matrix().kron(&x),
        ];
        let (vals, vecs) = p.matrix().hermitian_eigen();
        for op in &candidates {
            assert_eq!(
                parity_classify_matrix(op, p.matrix()).unwrap(),
                ParityClass::Odd
            );
            for (i, vi) in vals.iter().enumerate() {
                for (j, vj) in vals.iter().enumerate() {
                    if (vi - vj).abs() < 1e-9 {
                        let m = op.sandwich(&vecs.column(i), &vecs.column(j));
                        assert!(m.norm() < 1e-12);
                    }
                }
            }
        }
    }

    fn small_matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
            ComplexMatrix::from_vec(
                dim,
                dim,
                v.into_iter().map(|(re, im)| C64::new(re, im)).collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn kron_is_associative(a in small_matrix(2), b in small_matrix(2), c in small_matrix(3)) {
            let left = a.kron(&b).kron(&c);
            let right = a.kron(&b.kron(&c));
            prop_assert!(left.max_abs_diff(&right) < 1e-15);
        }

        #[test]
        fn kron_dimension_is_product(n in 1usize..6) {
            let op = tensor(&pauli(PauliKind::Y), &boson_ops(n).unwrap().number).unwrap();
            prop_assert_eq!(op.dim(), 2 * (n + 1));
        }

        #[test]
        fn adjoint_is_involutive(a in small_matrix(4)) {
            prop_assert_eq!(a.adjoint().adjoint(), a);
        }
    }
}
