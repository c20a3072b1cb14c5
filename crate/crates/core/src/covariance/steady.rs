use super::transfer;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::TargetNetwork;

/// Residual above which an algebraic steady state is rejected.
pub const STEADY_TOLERANCE: f64 = 1e-8;

/// Algebraic fixed points of the covariance flow for one target.
#[derive(Clone, Debug)]
pub struct SteadyStates {
    /// Permanent observation: `AΩ + ΩAᵀ + Q − ΩGΩ = 0`, stabilising root.
    pub omega_ss: Mat,
    /// Never observed: `AΩ + ΩAᵀ + Q = 0`, present only for Hurwitz `A`.
    pub omega_inf: Option<Mat>,
    pub a_is_hurwitz: bool,
}

pub fn riccati_residual(a: &Mat, q: &Mat, g: &Mat, w: &Mat) -> f64 {
    let aw = a * w;
    linalg::max_abs(&(&aw + aw.transpose() + q - w * g * w))
}

pub fn lyapunov_residual(a: &Mat, q: &Mat, w: &Mat) -> f64 {
    let aw = a * w;
    linalg::max_abs(&(&aw + aw.transpose() + q))
}

pub fn solve_steady_states(a: &Mat, q: &Mat, g: &Mat) -> Result<SteadyStates> {
    let omega_ss = if a.nrows() == 1 {
        Mat::from_element(1, 1, scalar_riccati_root(a[(0, 0)], q[(0, 0)], g[(0, 0)]))
    } else {
        matrix_riccati_root(a, q, g)?
    };
    let scale = 1.0 + linalg::max_abs(q) + linalg::max_abs(&omega_ss) * linalg::max_abs(a);
    let residual = riccati_residual(a, q, g, &omega_ss);
    let closed_loop = a - &omega_ss * g;
    if !(residual <= STEADY_TOLERANCE * scale)
        || !linalg::is_hurwitz(&closed_loop)
        || linalg::min_eigenvalue(&omega_ss) <= 0.0
    {
        return Err(Error::NonStabilizing { residual });
    }

    let a_is_hurwitz = linalg::is_hurwitz(a);
    let omega_inf = if a_is_hurwitz {
        let w = linalg::solve_lyapunov(a, q).ok_or(Error::NonStabilizing {
            residual: f64::INFINITY,
        })?;
        let res = lyapunov_residual(a, q, &w);
        if !(res <= STEADY_TOLERANCE * (1.0 + linalg::max_abs(q))) {
            return Err(Error::NonStabilizing { residual: res });
        }
        Some(w)
    } else {
        None
    };
    Ok(SteadyStates {
        omega_ss,
        omega_inf,
        a_is_hurwitz,
    })
}

/// `(a + √(a² + qg)) / g`, rationalised for negative `a`.
fn scalar_riccati_root(a: f64, q: f64, g: f64) -> f64 {
    let lambda = (a * a + q * g).sqrt();
    if a >= 0.0 {
        (a + lambda) / g
    } else {
        q / (lambda - a)
    }
}

/// Doubling on the Hamiltonian transfer from `Ω = 0` gives a stabilising
/// starting point; Newton–Kleinman then polishes to machine precision.
fn matrix_riccati_root(a: &Mat, q: &Mat, g: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let h = transfer::hamiltonian(a, q, Some(g));
    let norm = h.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let mut psi = linalg::expm(&(h * (1.0 / norm.max(1e-12))));
    linalg::normalize_transfer(&mut psi);
    let zero = Mat::zeros(n, n);
    // Squaring too long lets the dominant growth modes swamp the rest and
    // the transfer loses rank, so keep the iterate with the best residual.
    let mut w = zero.clone();
    let mut best = riccati_residual(a, q, g, &w);
    let mut prev = zero.clone();
    for _ in 0..64 {
        let Some(next) = linalg::linear_fractional(&psi, &zero) else {
            break;
        };
        let res = riccati_residual(a, q, g, &next);
        if res.is_finite() && res < best {
            best = res;
            w = next.clone();
        }
        if linalg::max_abs_diff(&next, &prev) <= 1e-14 * (1.0 + linalg::max_abs(&next)) {
            break;
        }
        prev = next;
        psi = transfer::compose(&psi, &psi);
    }

    for _ in 0..50 {
        let ak = a - &w * g;
        let rhs = q + &w * g * &w;
        let Some(next) = linalg::solve_lyapunov(&ak, &rhs) else {
            break;
        };
        let res = riccati_residual(a, q, g, &next);
        if !(res < best) {
            break;
        }
        best = res;
        w = next;
    }
    Ok(w)
}

/// Steady states of every target in a network, computed once.
#[derive(Clone, Debug)]
pub struct SteadyTable {
    pub states: Vec<SteadyStates>,
}

impl SteadyTable {
    pub fn new(network: &TargetNetwork) -> Result<Self> {
        let states = network
            .targets
            .iter()
            .map(|t| {
                solve_steady_states(&t.a, &t.q, &t.g).map_err(|e| match e {
                    Error::NonStabilizing { residual } => Error::InvalidTarget {
                        id: t.id,
                        reason: format!("no stabilising steady state (residual {residual:e})"),
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SteadyTable { states })
    }

    pub fn get(&self, i: usize) -> &SteadyStates {
        &self.states[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    #[test]
    fn scalar_table_one_target() {
        let (a, q, g) = (0.3487, 1.1924, 0.43216);
        let ss = solve_steady_states(&s(a), &s(q), &s(g)).unwrap();
        let expect = (a + (a * a + q * g).sqrt()) / g;
        assert!((ss.omega_ss[(0, 0)] - expect).abs() < 1e-14);
        assert!((ss.omega_ss[(0, 0)] - 2.6535).abs() < 1e-3);
        assert!(ss.omega_inf.is_none());
        assert!(!ss.a_is_hurwitz);
    }

    #[test]
    fn scalar_stable_lyapunov_limit() {
        let ss = solve_steady_states(&s(-0.5), &s(1.0), &s(0.7)).unwrap();
        assert!((ss.omega_inf.unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
        let ss = solve_steady_states(&s(0.1), &s(1.0), &s(0.7)).unwrap();
        assert!(ss.omega_inf.is_none());
    }

    #[test]
    fn matrix_riccati_residual_small() {
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, -0.5, 0.3]);
        let q = Mat::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 0.8]);
        let g = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let ss = solve_steady_states(&a, &q, &g).unwrap();
        assert!(riccati_residual(&a, &q, &g, &ss.omega_ss) < 1e-12);
        assert!(linalg::is_hurwitz(&(&a - &ss.omega_ss * &g)));
    }

    #[test]
    fn decoupled_matrix_matches_scalar_roots() {
        let a = Mat::from_row_slice(2, 2, &[0.3, 0.0, 0.0, -0.4]);
        let q = Mat::from_row_slice(2, 2, &[1.2, 0.0, 0.0, 0.6]);
        let g = Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]);
        let ss = solve_steady_states(&a, &q, &g).unwrap();
        assert!((ss.omega_ss[(0, 0)] - scalar_riccati_root(0.3, 1.2, 0.5)).abs() < 1e-12);
        assert!((ss.omega_ss[(1, 1)] - scalar_riccati_root(-0.4, 0.6, 0.25)).abs() < 1e-12);
    }
}
