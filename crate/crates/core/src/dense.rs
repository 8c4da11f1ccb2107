//! Small dense kernels for projected problems: symmetric and generalized
//! symmetric eigendecompositions, thin SVD and block orthonormalization.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Columns whose norm after projection drops below this fraction of the
/// norm before projection are treated as linearly dependent.
pub const DROP_TOLERANCE: f64 = 1e-10;

/// Eigenpairs of a symmetric matrix, values sorted descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Eigenpairs of a symmetric-definite pencil `(H, K)` with `Z^T K Z = I`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenDecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Thin SVD `R = U diag(sigma) V^T`, singular values descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub values: DVector<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_square(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if m.nrows() == m.ncols() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected: m.nrows(),
            found: m.ncols(),
        })
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Flips each column so that its largest-magnitude entry is positive.
fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let idx = col.iamax();
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    }
}

fn sorted_descending(values: &DVector<f64>, vectors: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| values[i]));
    let vecs = DMatrix::from_columns(&order.iter().map(|&i| vectors.column(i)).collect::<Vec<_>>());
    (vals, vecs)
}

/// Full eigendecomposition of a symmetric matrix (symmetrized first).
pub fn sym_eig(s: &DMatrix<f64>) -> Result<EigenDecomposition> {
    check_square(s, "sym_eig")?;
    check_finite(s, "sym_eig")?;
    if s.nrows() == 0 {
        return Ok(EigenDecomposition {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(symmetrize(s));
    let (values, mut vectors) = sorted_descending(&eig.eigenvalues, &eig.eigenvectors);
    fix_signs(&mut vectors);
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues(s: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_square(s, "sym_eigenvalues")?;
    check_finite(s, "sym_eigenvalues")?;
    let mut v: Vec<f64> = symmetrize(s).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(DVector::from_vec(v))
}

/// Lower Cholesky factor `L` with `K = L L^T`. Reports the first failing
/// pivot when `K` is not positive definite.
pub fn cholesky(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(k, "cholesky")?;
    check_finite(k, "cholesky")?;
    let n = k.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = k[(j, j)];
        for t in 0..j {
            d -= l[(j, t)] * l[(j, t)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotSpd { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = 0.5 * (k[(i, j)] + k[(j, i)]);
            for t in 0..j {
                s -= l[(i, t)] * l[(j, t)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Generalized eigenpairs of `(H, K)` with `K` SPD, by congruence with the
/// Cholesky factor of `K`.
pub fn gen_sym_eig(h: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<GeneralizedEigenDecomposition> {
    check_square(h, "gen_sym_eig")?;
    check_finite(h, "gen_sym_eig")?;
    if h.shape() != k.shape() {
        return Err(Error::DimensionMismatch {
            context: "gen_sym_eig",
            expected: h.nrows(),
            found: k.nrows(),
        });
    }
    let l = cholesky(k)?;
    // W = L^{-1} H L^{-T}
    let linv_h = l
        .solve_lower_triangular(&symmetrize(h))
        .ok_or(Error::NotSpd { index: 0, pivot: 0.0 })?;
    let w = l
        .solve_lower_triangular(&linv_h.transpose())
        .ok_or(Error::NotSpd { index: 0, pivot: 0.0 })?;
    let eig = sym_eig(&w)?;
    let z = l
        .transpose()
        .solve_upper_triangular(&eig.vectors)
        .ok_or(Error::NotSpd { index: 0, pivot: 0.0 })?;
    Ok(GeneralizedEigenDecomposition {
        values: eig.values,
        vectors: z,
    })
}

/// Thin SVD of a `p x k` matrix.
pub fn thin_svd(r: &DMatrix<f64>) -> Result<ThinSvd> {
    check_finite(r, "thin_svd")?;
    let (p, k) = r.shape();
    if k == 0 || p == 0 {
        return Ok(ThinSvd {
            values: DVector::zeros(0),
            u: DMatrix::zeros(p, 0),
            v: DMatrix::zeros(k, 0),
        });
    }
    let svd = SVD::new(r.clone(), true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v = svd.v_t.expect("right singular vectors requested").transpose();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| svd.singular_values[i]));
    let u = DMatrix::from_columns(&order.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    let v = DMatrix::from_columns(&order.iter().map(|&i| v.column(i)).collect::<Vec<_>>());
    Ok(ThinSvd { values, u, v })
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.ncols() > m.nrows() {
        return spectral_norm(&m.transpose());
    }
    m.singular_values().max()
}

/// `max |U^T U - I|` entrywise.
pub fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    if u.ncols() == 0 {
        return 0.0;
    }
    (u.transpose() * u - DMatrix::identity(u.ncols(), u.ncols())).amax()
}

/// Orthonormalizes the columns of `c` against the orthonormal basis `u`
/// and against each other, dropping dependent columns.
///
/// Returns [`Error::EmptyExpansion`] when every column is dropped and
/// [`Error::NotOrthonormal`] when `u` is not orthonormal to `1e-8`.
pub fn orthonormalize_against(c: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if u.ncols() > 0 && u.nrows() != c.nrows() {
        return Err(Error::DimensionMismatch {
            context: "orthonormalize_against",
            expected: u.nrows(),
            found: c.nrows(),
        });
    }
    check_finite(c, "orthonormalize_against")?;
    let err = orthonormality_error(u);
    if err > 1e-8 {
        return Err(Error::NotOrthonormal(format!("basis deviates by {err:e}")));
    }
    let out = project_and_normalize(c, u);
    if out.ncols() == 0 {
        Err(Error::EmptyExpansion)
    } else {
        Ok(out)
    }
}

/// Orthonormal basis for the column span of `c` (dependent columns dropped).
pub fn orthonormalize(c: &DMatrix<f64>) -> DMatrix<f64> {
    project_and_normalize(c, &DMatrix::zeros(c.nrows(), 0))
}

/// Classical Gram-Schmidt with re-orthogonalization, column by column.
/// `u` is assumed orthonormal; the result may have zero columns.
pub(crate) fn project_and_normalize(c: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    let p = c.nrows();
    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(c.ncols());
    let has_basis = u.ncols() > 0;
    for col in c.column_iter() {
        let original = col.norm();
        if original == 0.0 {
            continue;
        }
        let mut v: DVector<f64> = col.into_owned();
        let mut pass = 0;
        loop {
            let before = v.norm();
            if has_basis {
                let coeffs = u.tr_mul(&v);
                v.gemv(-1.0, u, &coeffs, 1.0);
            }
            for q in &accepted {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
            pass += 1;
            let after = v.norm();
            // twice is enough unless heavy cancellation happened again
            if pass >= 2 && (after > 0.5 * before || pass >= 4) {
                break;
            }
        }
        let nrm = v.norm();
        if nrm < DROP_TOLERANCE * original {
            continue;
        }
        v /= nrm;
        accepted.push(v);
    }
    if accepted.is_empty() {
        DMatrix::zeros(p, 0)
    } else {
        DMatrix::from_columns(&accepted)
    }
}
