//! Dense complex operators with a unit tag.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Physical unit carried by an [`Operator`].
///
/// Energies are stored as ordinary frequencies (E/h) in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    GHz,
    Dimensionless,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
    unit: Unit,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>, unit: Unit) -> Self {
        assert!(matrix.is_square(), "operator must be square");
        assert!(matrix.nrows() > 0, "operator must have positive dimension");
        Operator { matrix, unit }
    }

    pub fn zeros(dim: usize, unit: Unit) -> Self {
        Operator::new(DMatrix::zeros(dim, dim), unit)
    }

    pub fn identity(dim: usize) -> Self {
        Operator::new(DMatrix::identity(dim, dim), Unit::Dimensionless)
    }

    pub fn from_real_rows(rows: &[&[f64]], unit: Unit) -> Self {
        let n = rows.len();
        Operator::new(
            DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)),
            unit,
        )
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.matrix)
    }

    /// ‖H − H†‖_F / ‖H‖_F, or the absolute defect for the zero matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = frobenius(&(&self.matrix - self.matrix.adjoint()));
        let norm = self.frobenius_norm();
        if norm > 0.0 {
            diff / norm
        } else {
            diff
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        let unit = match (self.unit, other.unit) {
            (Unit::Dimensionless, Unit::Dimensionless) => Unit::Dimensionless,
            _ => Unit::GHz,
        };
        Operator::new(self.matrix.kronecker(&other.matrix), unit)
    }

    pub fn scale(&self, factor: f64) -> Operator {
        Operator::new(&self.matrix * C64::new(factor, 0.0), self.unit)
    }

    pub fn add(&self, other: &Operator) -> Operator {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Operator::new(&self.matrix + &other.matrix, self.unit)
    }

    pub fn mul(&self, other: &Operator) -> Operator {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Operator::new(&self.matrix * &other.matrix, self.unit)
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator::new(
            &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            self.unit,
        )
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// ⟨a|O|b⟩
    pub fn element(&self, a: &DVector<C64>, b: &DVector<C64>) -> C64 {
        a.dotc(&(&self.matrix * b))
    }
}

pub fn frobenius(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Trace distance ½‖A − B‖₁ between two Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = a - b;
    let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    0.5 * eig.eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermiticity_of_antihermitian_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, -ONE, ZERO]);
        let op = Operator::new(m, Unit::GHz);
        assert!((op.hermiticity_defect() - 2.0).abs() < 1e-12);
        assert!(!op.is_hermitian(1e-12));
    }

    #[test]
    fn kron_dimensions() {
        let a = Operator::identity(3);
        let b = Operator::identity(3);
        assert_eq!(a.kron(&b).dim(), 9);
    }

    #[test]
    fn trace_distance_of_orthogonal_projectors() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, ZERO]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![ZERO, ONE]));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
    }
}
