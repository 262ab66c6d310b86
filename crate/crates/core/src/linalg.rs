//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, Matrix2x4, Matrix4, Matrix4x2, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat4 = Matrix4<f64>;
pub type Mat2x4 = Matrix2x4<f64>;
pub type Mat4x2 = Matrix4x2<f64>;

pub fn to_dense<R: nalgebra::Dim, C: nalgebra::Dim, S>(m: &nalgebra::Matrix<f64, R, C, S>) -> DMatrix<f64>
where
    S: nalgebra::RawStorage<f64, R, C>,
{
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn mat4(m: &DMatrix<f64>) -> Mat4 {
    Mat4::from_fn(|i, j| m[(i, j)])
}

/// `(M + M^T) / 2`.
pub fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    a.clone().complex_eigenvalues().iter().copied().collect()
}

/// Largest real part over the spectrum of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    spectral_abscissa(a) < 0.0
}

/// Extreme eigenvalues of the symmetric part of `m`.
pub fn sym_eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let e = SymmetricEigen::new(sym(m)).eigenvalues;
    (e.min(), e.max())
}

/// Spectral norm.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    let g = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    SymmetricEigen::new(g).eigenvalues.max().max(0.0).sqrt()
}

/// `f(M)` for symmetric `M` via its eigendecomposition.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(sym(m));
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Solves `A^T X + X A + Q = 0` through the Kronecker form
/// `(I ⊗ A^T + A^T ⊗ I) vec(X) = -vec(Q)`.
///
/// Fails when two eigenvalues of `A` nearly cancel, which makes the
/// Kronecker operator singular.
pub fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Precondition("Lyapunov operands must be square and conformant".into()));
    }
    let eig = eigenvalues(a);
    let scale = eig.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    for (i, x) in eig.iter().enumerate() {
        for y in &eig[i..] {
            if (x + y).norm() <= 1e-12 * scale {
                return Err(Error::Conditioning(format!(
                    "eigenvalues {x} and {y} sum to nearly zero"
                )));
            }
        }
    }
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let x = k
        .full_piv_lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Conditioning("singular Kronecker system".into()))?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok(if is_symmetric(q) { sym(&x) } else { x })
}

fn is_symmetric(q: &DMatrix<f64>) -> bool {
    let tol = 1e-14 * q.amax().max(1e-300);
    (q - q.transpose()).amax() <= tol
}

/// Popov–Belevitch–Hautus test: every eigenvalue with `Re >= -tol` must keep
/// `[A - λI; C]` at full column rank.
pub fn detectable(a: &DMatrix<f64>, c: &DMatrix<f64>, tol: f64) -> bool {
    let n = a.nrows();
    let scale = a.amax().max(c.amax()).max(1e-300);
    eigenvalues(a).into_iter().filter(|z| z.re >= -tol).all(|lambda| {
        let mut m = DMatrix::<Complex<f64>>::zeros(n + c.nrows(), n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex::new(a[(i, j)], 0.0) - if i == j { lambda } else { Complex::new(0.0, 0.0) };
            }
        }
        for i in 0..c.nrows() {
            for j in 0..n {
                m[(n + i, j)] = Complex::new(c[(i, j)], 0.0);
            }
        }
        let sv = m.singular_values();
        sv.min() > 1e-10 * scale
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_scalar_and_diagonal() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, -0.5]);
        let w = lyapunov(&a, &DMatrix::identity(2, 2)).unwrap();
        assert!((w - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);

        let a = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -3.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let w = lyapunov(&a, &(c.transpose() * &c)).unwrap();
        assert!((w[(0, 0)] - 0.25).abs() < 1e-14);
        assert!(w[(1, 1)].abs() < 1e-14 && w[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn lyapunov_rejects_marginal_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(
            lyapunov(&a, &DMatrix::identity(2, 2)),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn pbh_detectability() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0]);
        // The stable mode may stay unobserved, the marginal one may not.
        assert!(detectable(&a, &DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), 1e-12));
        assert!(!detectable(&a, &DMatrix::from_row_slice(1, 2, &[0.0, 1.0]), 1e-12));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, -4.0, 0.0]);
        assert!((norm2(&m) - 4.0).abs() < 1e-12);
    }
}
