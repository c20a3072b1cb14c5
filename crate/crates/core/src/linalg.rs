//! Small dense linear-algebra helpers shared by the covariance engine and the
//! planners. Matrices here are tiny (state dimension 1..=4 in practice), so
//! everything is plain `DMatrix<f64>`.

use nalgebra::DMatrix;

pub type Mat = DMatrix<f64>;

/// Replace `m` by `(m + mᵀ) / 2` in place.
pub fn symmetrize(m: &mut Mat) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn symmetrized(mut m: Mat) -> Mat {
    symmetrize(&mut m);
    m
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn is_symmetric(m: &Mat, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.transpose()) <= tol * (1.0 + max_abs(m))
}

/// Symmetric positive definite test via Cholesky.
pub fn is_spd(m: &Mat) -> bool {
    is_symmetric(m, 1e-10) && m.clone().cholesky().is_some()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Mat) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    symmetrized(m.clone())
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &Mat) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    symmetrized(m.clone())
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Matrix exponential (scaling and squaring with Padé approximants up to
/// degree 13).
pub fn expm(m: &Mat) -> Mat {
    m.exp()
}

/// True when every eigenvalue of `a` has strictly negative real part.
pub fn is_hurwitz(a: &Mat) -> bool {
    if a.nrows() == 1 {
        return a[(0, 0)] < 0.0;
    }
    a.clone().complex_eigenvalues().iter().all(|z| z.re < 0.0)
}

/// Numerical rank from singular values, relative tolerance `rtol`.
pub fn rank(m: &Mat, rtol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rtol * smax).count()
}

/// Stack `[H; HA; ...; HA^{n-1}]`.
pub fn observability_matrix(a: &Mat, h: &Mat) -> Mat {
    let n = a.nrows();
    let m = h.nrows();
    let mut out = Mat::zeros(m * n, n);
    let mut block = h.clone();
    for k in 0..n {
        out.view_mut((k * m, 0), (m, n)).copy_from(&block);
        block = &block * a;
    }
    out
}

pub fn is_observable(a: &Mat, h: &Mat) -> bool {
    rank(&observability_matrix(a, h), 1e-10) == a.nrows()
}

/// Solve `M X + X Mᵀ + C = 0` by Kronecker vectorisation. Returns `None`
/// when the operator is singular (M has eigenvalue pairs summing to zero).
pub fn solve_lyapunov(m: &Mat, c: &Mat) -> Option<Mat> {
    let n = m.nrows();
    if n == 1 {
        let d = 2.0 * m[(0, 0)];
        if d == 0.0 {
            return None;
        }
        return Some(Mat::from_element(1, 1, -c[(0, 0)] / d));
    }
    let nn = n * n;
    let mut op = Mat::zeros(nn, nn);
    // column-major vec: vec(MX) = (I ⊗ M) vec X, vec(X Mᵀ) = (M ⊗ I) vec X
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for k in 0..n {
                op[(row, j * n + k)] += m[(i, k)];
                op[(row, k * n + i)] += m[(j, k)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_iterator(nn, c.iter().map(|v| -v));
    let sol = op.lu().solve(&rhs)?;
    Some(symmetrized(Mat::from_column_slice(n, n, sol.as_slice())))
}

/// Apply the linear-fractional map encoded by a `2n × 2n` transfer matrix:
/// `Ω ↦ (Ψ₂₁ + Ψ₂₂ Ω)(Ψ₁₁ + Ψ₁₂ Ω)⁻¹`.
pub fn linear_fractional(psi: &Mat, omega: &Mat) -> Option<Mat> {
    let n = omega.nrows();
    if n == 1 {
        let w = omega[(0, 0)];
        let x = psi[(0, 0)] + psi[(0, 1)] * w;
        let y = psi[(1, 0)] + psi[(1, 1)] * w;
        if x == 0.0 || !x.is_finite() || !y.is_finite() {
            return None;
        }
        return Some(Mat::from_element(1, 1, y / x));
    }
    let p11 = psi.view((0, 0), (n, n));
    let p12 = psi.view((0, n), (n, n));
    let p21 = psi.view((n, 0), (n, n));
    let p22 = psi.view((n, n), (n, n));
    let x: Mat = p11 + p12 * omega;
    let y: Mat = p21 + p22 * omega;
    // Ω' = Y X⁻¹  ⇔  Xᵀ Ω'ᵀ = Yᵀ
    let sol = x.transpose().lu().solve(&y.transpose())?;
    Some(symmetrized(sol.transpose()))
}

/// Scale a transfer matrix so its largest entry is one; the
/// linear-fractional map it encodes is unchanged.
pub fn normalize_transfer(psi: &mut Mat) {
    let s = max_abs(psi);
    if s > 0.0 && s.is_finite() {
        *psi /= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_scalar_and_matrix() {
        let m = Mat::from_element(1, 1, -0.5);
        let c = Mat::from_element(1, 1, 1.0);
        assert!((solve_lyapunov(&m, &c).unwrap()[(0, 0)] - 1.0).abs() < 1e-15);

        let m = Mat::from_row_slice(2, 2, &[-1.0, 0.3, -0.2, -2.0]);
        let c = Mat::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 2.0]);
        let x = solve_lyapunov(&m, &c).unwrap();
        let res = &m * &x + &x * m.transpose() + &c;
        assert!(max_abs(&res) < 1e-12);
    }

    #[test]
    fn observability_detects_rank_loss() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let h = Mat::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(!is_observable(&a, &h));
        let h = Mat::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!(is_observable(&a, &h));
    }

    #[test]
    fn hurwitz_check() {
        assert!(is_hurwitz(&Mat::from_element(1, 1, -0.1)));
        assert!(!is_hurwitz(&Mat::from_element(1, 1, 0.0)));
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -0.1]);
        assert!(is_hurwitz(&a));
    }

    #[test]
    fn linear_fractional_identity() {
        let psi = Mat::identity(4, 4);
        let w = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let out = linear_fractional(&psi, &w).unwrap();
        assert!(max_abs_diff(&out, &w) < 1e-15);
    }
}
