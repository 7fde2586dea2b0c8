//! Dense complex linear algebra helpers shared by the state, protocol and
//! simulator modules.
//!
//! Matrices are `nalgebra::DMatrix<Complex<f64>>`. The factorizations used
//! here (SVD, Hermitian eigendecomposition) come from nalgebra; this module
//! only adds the handful of quantum-information conveniences on top.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const SVD_EPS: f64 = 1e-15;
const MAX_ITER: usize = 10_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            c(values[i], 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖U†U − I‖_F`, or infinity for a non-square matrix.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    frobenius(&(u.adjoint() * u - identity(u.nrows())))
}

/// `‖Σ M†M − I‖_F` for a set of Kraus operators of a common dimension.
pub fn completeness_residual(ops: &[CMatrix], dim: usize) -> f64 {
    let mut acc = CMatrix::zeros(dim, dim);
    for m in ops {
        if m.nrows() != dim || m.ncols() != dim {
            return f64::INFINITY;
        }
        acc += m.adjoint() * m;
    }
    frobenius(&(acc - identity(dim)))
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(herm, SVD_EPS, MAX_ITER).ok_or_else(|| {
        Error::NumericalFailure("Hermitian eigendecomposition did not converge".into())
    })?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues that come out slightly negative are clamped to zero.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    let roots: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok(&vectors * real_diag(&roots) * vectors.adjoint())
}

/// Thin SVD `A = U Σ V†` with singular values in descending order.
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    /// Columns are the right singular vectors (this is `V`, not `V†`).
    pub v: CMatrix,
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    let dec = SVD::try_new(a.clone(), true, true, SVD_EPS, MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let u = dec
        .u
        .ok_or_else(|| Error::NumericalFailure("SVD returned no left vectors".into()))?;
    let v_t = dec
        .v_t
        .ok_or_else(|| Error::NumericalFailure("SVD returned no right vectors".into()))?;
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let singular_values = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u_cols: Vec<CVector> = order.iter().map(|&i| u.column(i).into_owned()).collect();
    let v_cols: Vec<CVector> = order
        .iter()
        .map(|&i| v_t.row(i).adjoint().into_owned())
        .collect();
    Ok(Svd {
        u: CMatrix::from_columns(&u_cols),
        singular_values,
        v: CMatrix::from_columns(&v_cols),
    })
}

/// Unitary factor of the polar decomposition `A = √(AA†)·U` of a square matrix.
///
/// For singular `A` the factor is not unique; the one returned is `W V†`
/// from the full SVD `A = W Σ V†`.
pub fn polar_unitary(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "polar decomposition of a non-square matrix".into(),
        ));
    }
    let dec = svd(a)?;
    Ok(&dec.u * dec.v.adjoint())
}

/// Extends a set of orthonormal columns to a full orthonormal basis of `C^dim`,
/// returned as the columns of a unitary matrix. The given vectors come first.
pub fn complete_basis(columns: &[CVector], dim: usize) -> CMatrix {
    let mut basis: Vec<CVector> = columns.to_vec();
    let mut candidate = 0;
    while basis.len() < dim && candidate < dim {
        let mut v = CVector::zeros(dim);
        v[candidate] = c(1.0, 0.0);
        candidate += 1;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v.unscale(norm));
        }
    }
    CMatrix::from_columns(&basis)
}

/// Embeds a 2×2 matrix on coordinates `(p, q)` of a `dim`-dimensional space,
/// with `fill` times the identity on all other coordinates.
pub fn embed_block(block: &CMatrix, dim: usize, p: usize, q: usize, fill: f64) -> CMatrix {
    debug_assert!(block.nrows() == 2 && block.ncols() == 2 && p != q);
    let mut out = identity(dim).scale(fill);
    let idx = [p, q];
    for (a, &ra) in idx.iter().enumerate() {
        for (b, &rb) in idx.iter().enumerate() {
            out[(ra, rb)] = block[(a, b)];
        }
    }
    out
}

/// Serde representation of complex matrices as nested `[re, im]` arrays,
/// row-major.
pub mod serde_matrix {
    use super::{c, CMatrix};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub type Rows = Vec<Vec<[f64; 2]>>;

    pub fn to_rows(m: &CMatrix) -> Rows {
        (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| [m[(i, j)].re, m[(i, j)].im])
                    .collect()
            })
            .collect()
    }

    pub fn from_rows(rows: &Rows) -> Result<CMatrix, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err("non-finite matrix entry".into());
        }
        Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
            c(rows[i][j][0], rows[i][j][1])
        }))
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Rows::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }

    pub mod list {
        use super::*;

        pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
            ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
            Vec::<Rows>::deserialize(d)?
                .iter()
                .map(|r| from_rows(r).map_err(D::Error::custom))
                .collect()
        }
    }

    pub mod table {
        use super::*;

        pub fn serialize<S: Serializer>(
            ms: &BTreeMap<usize, CMatrix>,
            s: S,
        ) -> Result<S::Ok, S::Error> {
            ms.iter()
                .map(|(k, m)| (*k, to_rows(m)))
                .collect::<BTreeMap<_, _>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<BTreeMap<usize, CMatrix>, D::Error> {
            // keys arrive as strings inside tagged enums
            BTreeMap::<String, Rows>::deserialize(d)?
                .into_iter()
                .map(|(k, r)| {
                    let key = k.parse::<usize>().map_err(|_| {
                        D::Error::custom(format!("outcome key '{k}' is not an index"))
                    })?;
                    from_rows(&r).map(|m| (key, m)).map_err(D::Error::custom)
                })
                .collect()
        }
    }
}
