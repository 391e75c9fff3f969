//! Small dense complex linear algebra used throughout the crate.
//!
//! All matrices are `nalgebra::DMatrix<Complex64>`; dimensions are tiny
//! (qubits, qutrits, few-qubit registers), so clarity wins over blocking.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(d: usize) -> CMatrix {
    CMatrix::zeros(d, d)
}

/// Pauli matrix σ^k for k ∈ {0,1,2,3} (σ^0 = 𝟙).
pub fn pauli(k: usize) -> CMatrix {
    let m = match k {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => panic!("pauli index must be 0..=3"),
    };
    CMatrix::from_row_slice(2, 2, &m)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn trace(a: &CMatrix) -> C64 {
    a.trace()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Outer product |u⟩⟨v|.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Largest entrywise modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b))
}

/// max |A − A†| entrywise.
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// max |A + A†| entrywise.
pub fn antihermiticity_residual(a: &CMatrix) -> f64 {
    max_abs(&(a + a.adjoint()))
}

/// max |U U† − 𝟙| entrywise.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    max_abs(&(u * u.adjoint() - identity(u.nrows())))
}

/// Hermitian part ½(A + A†); used to scrub rounding asymmetry.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Returns `(values, vectors)` with eigenvectors as columns.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(a).symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigvalsh(a: &CMatrix) -> Vec<f64> {
    eigh(a).0
}

/// Propagator e^{−iHt} for Hermitian H via its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = eigh(h);
    let phases = CVector::from_iterator(vals.len(), vals.iter().map(|&e| C64::from_polar(1.0, -e * t)));
    let scaled = CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * phases[j]);
    scaled * vecs.adjoint()
}

/// Unitary conjugation U ρ U†.
pub fn conjugate(u: &CMatrix, rho: &CMatrix) -> CMatrix {
    u * rho * u.adjoint()
}

/// Trace distance ½‖A − B‖₁ for Hermitian A, B.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * eigvalsh(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

/// Frobenius norm.
pub fn fro_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real part of Tr[AB] without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut s = ZERO;
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// Diagonal matrix with real entries.
pub fn diag_real(entries: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0))))
}

/// Column vector from complex entries.
pub fn vector(entries: &[C64]) -> CVector {
    CVector::from_column_slice(entries)
}

/// Serialize a complex matrix as nested `[[[re, im], ...], ...]` rows.
pub mod serde_cmatrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    /// Accepts the row form or, for qubits, `{"pauli": [c0, c1, c2, c3]}`
    /// meaning Σ c_k σ^k.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Rows(Vec<Vec<[f64; 2]>>),
            Pauli { pauli: [f64; 4] },
        }
        match Repr::deserialize(d)? {
            Repr::Rows(rows) => from_rows(&rows).map_err(serde::de::Error::custom),
            Repr::Pauli { pauli: k } => Ok((0..4).fold(zeros(2), |acc, i| acc + super::pauli(i) * c(k[i], 0.0))),
        }
    }

    pub fn to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, String> {
        let n = rows.len();
        if n == 0 {
            return Err("empty matrix".into());
        }
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err("ragged matrix rows".into());
        }
        Ok(CMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
    }
}

/// Serialize a list of complex matrices.
pub mod serde_cmatrix_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<_> = v.iter().map(serde_cmatrix::to_rows).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let all: Vec<Vec<Vec<[f64; 2]>>> = Vec::deserialize(d)?;
        all.iter()
            .map(|r| serde_cmatrix::from_rows(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (pauli(1), pauli(2), pauli(3));
        assert!(max_abs_diff(&(&x * &y), &(&z * I)) < 1e-15);
        assert!(max_abs_diff(&(&x * &x), &identity(2)) < 1e-15);
    }

    #[test]
    fn expm_matches_closed_form_rotation() {
        let t = 0.37;
        let u = expm_hermitian(&pauli(3), t);
        let expected = identity(2) * c(t.cos(), 0.0) - pauli(3) * c(0.0, t.sin());
        assert!(max_abs_diff(&u, &expected) < 1e-14);
        assert!(unitarity_residual(&u) < 1e-14);
    }

    #[test]
    fn eigh_is_ascending_and_reconstructs() {
        let h = pauli(1) * c(0.3, 0.0) + pauli(2) * c(-1.2, 0.0) + pauli(3) * c(0.5, 0.0);
        let (vals, vecs) = eigh(&h);
        assert!(vals[0] <= vals[1]);
        let d = CMatrix::from_diagonal(&CVector::from_iterator(2, vals.iter().map(|&v| c(v, 0.0))));
        assert!(max_abs_diff(&(&vecs * d * vecs.adjoint()), &h) < 1e-13);
    }
}
