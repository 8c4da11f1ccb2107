//! Subspace angles, spectral separation and residual-based angle bounds.

use log::warn;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::dense;
use crate::error::{Error, Result};

/// Largest Kronecker-form Sylvester system `sep` will build.
pub const SEP_MAX_SIZE: usize = 4096;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AngleReport {
    pub sin_theta: f64,
    pub p: usize,
    pub j: usize,
    pub k: usize,
}

fn check_orthonormal(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let err = dense::orthonormality_error(m);
    if err > 1e-8 {
        return Err(Error::NotOrthonormal(format!("{what} deviates by {err:e}")));
    }
    Ok(())
}

/// `||(I - U U^T) V*||`, the sine of the largest principal angle between
/// `range(V*)` and `range(U)`.
pub fn sin_angle(u: &DMatrix<f64>, v_star: &DMatrix<f64>) -> Result<f64> {
    if u.nrows() != v_star.nrows() {
        return Err(Error::DimensionMismatch {
            context: "sin_angle",
            expected: u.nrows(),
            found: v_star.nrows(),
        });
    }
    if u.ncols() < v_star.ncols() {
        return Err(Error::InvalidConfig(format!(
            "sin_angle needs dim U ({}) >= dim V* ({})",
            u.ncols(),
            v_star.ncols()
        )));
    }
    check_orthonormal(u, "U")?;
    check_orthonormal(v_star, "V*")?;
    let mut r = v_star.clone();
    let c = u.tr_mul(v_star);
    r.gemm(-1.0, u, &c, 1.0);
    Ok(dense::spectral_norm(&r).min(1.0))
}

pub fn angle_report(u: &DMatrix<f64>, v_star: &DMatrix<f64>) -> Result<AngleReport> {
    Ok(AngleReport {
        sin_theta: sin_angle(u, v_star)?,
        p: u.nrows(),
        j: u.ncols(),
        k: v_star.ncols(),
    })
}

/// `min ||P A1 - A2 P||` over unit Frobenius-norm `P` (`q x k`), computed as
/// the smallest singular value of the Kronecker form of the Sylvester map.
pub fn sep(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> Result<f64> {
    let (k, q) = (a1.nrows(), a2.nrows());
    if !a1.is_square() || !a2.is_square() {
        return Err(Error::InvalidConfig("sep needs square arguments".into()));
    }
    if k * q > SEP_MAX_SIZE {
        return Err(Error::TooLarge(format!("sep of {k}x{k} and {q}x{q} needs a {}-dimensional system", k * q)));
    }
    if k == 0 || q == 0 {
        return Ok(f64::INFINITY);
    }
    // vec(P A1) = (A1^T kron I_q) vec(P), vec(A2 P) = (I_k kron A2) vec(P)
    let n = k * q;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for a in 0..k {
        for b in 0..k {
            let coef = a1[(b, a)];
            if coef != 0.0 {
                for i in 0..q {
                    m[(a * q + i, b * q + i)] += coef;
                }
            }
        }
        for i in 0..q {
            for j in 0..q {
                m[(a * q + i, a * q + j)] -= a2[(i, j)];
            }
        }
    }
    Ok(m.singular_values().min())
}

/// `min |lambda_i(A1) - lambda_j(A2)|`, which equals `sep` for symmetric
/// arguments and costs only two eigenvalue decompositions.
pub fn sep_symmetric(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> Result<f64> {
    let l1 = dense::sym_eigenvalues(a1)?;
    let l2 = dense::sym_eigenvalues(a2)?;
    Ok(min_gap(l1.as_slice(), l2.as_slice()))
}

fn min_gap(l1: &[f64], l2: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for &x in l1 {
        for &y in l2 {
            best = best.min((x - y).abs());
        }
    }
    best
}

/// Both sides of `sin(V, V*) <= (||R|| + (rho* - rho) ||B||) / sep(Lambda, M*)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AngleBound {
    pub lhs: f64,
    /// Absent when `sep` vanishes.
    pub rhs: Option<f64>,
    pub sep: f64,
}

impl AngleBound {
    pub fn holds(&self, slack: f64) -> bool {
        self.rhs.is_none_or(|rhs| self.lhs <= rhs + slack)
    }
}

/// Reference data for repeated bound checks against one solution
/// `(V*, rho*)` of a dense pencil.
#[derive(Debug, Clone)]
pub struct AngleBoundContext {
    v_star: DMatrix<f64>,
    rho_star: f64,
    b_norm: f64,
    /// Eigenvalues of `M* = V*_perp^T (A - rho* B) V*_perp`.
    m_star_eigs: Vec<f64>,
}

impl AngleBoundContext {
    pub fn new(a: &DMatrix<f64>, b: &DMatrix<f64>, v_star: &DMatrix<f64>, rho_star: f64) -> Result<Self> {
        check_orthonormal(v_star, "V*")?;
        let m_star = m_star(a, b, v_star, rho_star)?;
        Ok(Self {
            v_star: v_star.clone(),
            rho_star,
            b_norm: dense::spectral_norm(b),
            m_star_eigs: dense::sym_eigenvalues(&m_star)?.iter().copied().collect(),
        })
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    pub fn rho_star(&self) -> f64 {
        self.rho_star
    }

    pub fn m_star_eigenvalues(&self) -> &[f64] {
        &self.m_star_eigs
    }

    pub fn check(&self, v: &DMatrix<f64>, rho: f64, residual_norm: f64, lambda: &DMatrix<f64>) -> Result<AngleBound> {
        let lhs = sin_angle(v, &self.v_star)?;
        let lam = dense::sym_eigenvalues(lambda)?;
        let sep = min_gap(lam.as_slice(), &self.m_star_eigs);
        let rhs = (sep > 0.0).then(|| (residual_norm + (self.rho_star - rho) * self.b_norm) / sep);
        Ok(AngleBound { lhs, rhs, sep })
    }
}

/// `V*_perp^T (A - rho* B) V*_perp` for an orthonormal complement of `V*`.
pub fn m_star(a: &DMatrix<f64>, b: &DMatrix<f64>, v_star: &DMatrix<f64>, rho_star: f64) -> Result<DMatrix<f64>> {
    let (p, k) = v_star.shape();
    // eigenvectors of V* V*^T with eigenvalue 0 span the complement
    let proj = v_star * v_star.transpose();
    let eig = dense::sym_eig(&proj)?;
    let perp = eig.vectors.columns(k, p - k).into_owned();
    let m = a - b * rho_star;
    Ok(dense::symmetrize(&(perp.transpose() * m * &perp)))
}

/// One-shot form of [`AngleBoundContext::check`] with `sep` taken from the
/// Kronecker form.
#[allow(clippy::too_many_arguments)]
pub fn angle_bound_check(
    v: &DMatrix<f64>,
    rho: f64,
    r: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    v_star: &DMatrix<f64>,
    rho_star: f64,
    b_norm: f64,
    m_star: &DMatrix<f64>,
) -> Result<AngleBound> {
    let lhs = sin_angle(v, v_star)?;
    let sep = sep(lambda, m_star)?;
    let rhs = (sep > 0.0).then(|| (dense::spectral_norm(r) + (rho_star - rho) * b_norm) / sep);
    Ok(AngleBound { lhs, rhs, sep })
}

/// `lambda_k - lambda_{k+1}` of the projected `H - rho K`; `None` when the
/// basis has only `k` columns. Gaps below `1e-8` are logged.
pub fn projected_eigengap(h: &DMatrix<f64>, kk: &DMatrix<f64>, rho: f64, k: usize) -> Result<Option<f64>> {
    if h.nrows() <= k {
        return Ok(None);
    }
    let values = dense::sym_eigenvalues(&(h - kk * rho))?;
    let gap = values[k - 1] - values[k];
    if gap <= 1e-8 {
        warn!("projected eigengap {gap:e} is tiny; the solution subspace is ill-determined");
    }
    Ok(Some(gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_orthonormal, random_spd, random_symmetric};
    use crate::tr_newton::{solve_dense_tr, NewtonOptions};
    use nalgebra::dmatrix;

    fn cosine_form(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
        let c = (u.transpose() * v).singular_values().min();
        (1.0 - c * c).max(0.0).sqrt()
    }

    #[test]
    fn contained_and_orthogonal_subspaces() {
        let id = DMatrix::<f64>::identity(6, 6);
        let u = id.columns(0, 3).into_owned();
        assert!(sin_angle(&u, &id.columns(1, 2).into_owned()).unwrap() <= 1e-15);
        assert!((sin_angle(&u, &id.columns(3, 2).into_owned()).unwrap() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn sine_formulas_agree() {
        for seed in 0..20 {
            let u = random_orthonormal(10, 5, seed);
            let v = random_orthonormal(10, 2, seed + 100);
            let s = sin_angle(&u, &v).unwrap();
            assert!((s - cosine_form(&u, &v)).abs() <= 1e-10);
            assert!((0.0..=1.0 + 1e-12).contains(&s));
        }
    }

    #[test]
    fn non_orthonormal_input_rejected() {
        let u = DMatrix::from_element(4, 2, 1.0);
        assert!(sin_angle(&u, &random_orthonormal(4, 1, 0)).is_err());
    }

    #[test]
    fn sep_examples() {
        let s = sep(&dmatrix![2.0], &dmatrix![-2.0, 0.0; 0.0, -2.0]).unwrap();
        assert!((s - 4.0).abs() <= 1e-12);
        let a = random_symmetric(3, 1);
        assert!(sep(&a, &a).unwrap() <= 1e-12);
    }

    #[test]
    fn sep_equals_eigenvalue_gap_for_symmetric_inputs() {
        for seed in 0..10 {
            let a1 = random_symmetric(3, seed);
            let a2 = random_symmetric(4, seed + 50);
            let kron = sep(&a1, &a2).unwrap();
            let gap = sep_symmetric(&a1, &a2).unwrap();
            assert!((kron - gap).abs() <= 1e-10, "{kron} vs {gap}");
            assert!((sep(&a2, &a1).unwrap() - kron).abs() <= 1e-10);
        }
    }

    #[test]
    fn sep_size_guard() {
        let a = DMatrix::identity(65, 65);
        assert!(matches!(sep(&a, &a), Err(Error::TooLarge(_))));
    }

    #[test]
    fn bound_is_zero_sided_at_the_solution() {
        let a = random_symmetric(12, 3);
        let b = random_spd(12, 4);
        let sol = solve_dense_tr(&a, &b, 2, None, &NewtonOptions::dense().with_tol(1e-12)).unwrap();
        let ctx = AngleBoundContext::new(&a, &b, &sol.v, sol.rho).unwrap();
        let lambda = sol.v.transpose() * (&a - &b * sol.rho) * &sol.v;
        let bound = ctx.check(&sol.v, sol.rho, 0.0, &lambda).unwrap();
        assert!(bound.lhs <= 1e-8);
        assert!(bound.holds(1e-10));

        let m = m_star(&a, &b, &sol.v, sol.rho).unwrap();
        let r = DMatrix::zeros(12, 2);
        let one_shot = angle_bound_check(&sol.v, sol.rho, &r, &lambda, &sol.v, sol.rho, ctx.b_norm(), &m).unwrap();
        assert!((one_shot.sep - bound.sep).abs() <= 1e-10);
    }

    #[test]
    fn clustered_spectrum_makes_the_bound_uninformative() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![3.0, 1.0 + 1e-13, 1.0, 0.0]);
        let b = DMatrix::identity(4, 4);
        let v_star = DMatrix::identity(4, 4).columns(0, 2).into_owned();
        let ctx = AngleBoundContext::new(&a, &b, &v_star, 2.0).unwrap();
        let lambda = v_star.transpose() * (&a - &b * 2.0) * &v_star;
        let bound = ctx.check(&v_star, 2.0, 1e-6, &lambda).unwrap();
        assert!(bound.sep < 1e-12);
        assert!(bound.rhs.is_none_or(|r| r > 1e5));
    }

    #[test]
    fn eigengap_of_the_example() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![3.0, 2.0, 1.0]);
        let b = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 4.0, 3.0]);
        assert!((projected_eigengap(&a, &b, 1.0, 1).unwrap().unwrap() - 4.0).abs() <= 1e-12);
        assert_eq!(projected_eigengap(&a, &b, 1.0, 3).unwrap(), None);
        let clustered = DMatrix::from_diagonal(&nalgebra::dvector![2.0, 1.0, 1.0 - 1e-10]);
        assert!(projected_eigengap(&clustered, &DMatrix::zeros(3, 3), 0.0, 2).unwrap().unwrap() <= 1e-8);
    }
}
