use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Tolerances for the adaptive observed-phase integrator.
#[derive(Clone, Copy, Debug)]
pub struct OdeTolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step relative to `max(1, t)`.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeTolerances {
    fn default() -> Self {
        OdeTolerances {
            rtol: 1e-11,
            atol: 1e-13,
            min_step: 1e-13,
            max_steps: 2_000_000,
        }
    }
}

/// Discrete one-step map of the unobserved flow: `Ω ↦ Φ Ω Φᵀ + W`.
#[derive(Clone, Debug)]
pub struct LyapunovStep {
    pub phi: Mat,
    pub w: Mat,
}

impl LyapunovStep {
    /// Van Loan: `exp([[A, Q], [0, −Aᵀ]] t) = [[Φ, X], [0, ·]]`, `W = X Φᵀ`.
    pub fn new(a: &Mat, q: &Mat, t: f64) -> Self {
        let n = a.nrows();
        if n == 1 {
            let (phi, w) = scalar_lyapunov_step(a[(0, 0)], q[(0, 0)], t);
            return LyapunovStep {
                phi: Mat::from_element(1, 1, phi),
                w: Mat::from_element(1, 1, w),
            };
        }
        let mut block = Mat::zeros(2 * n, 2 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&(a * t));
        block.view_mut((0, n), (n, n)).copy_from(&(q * t));
        block.view_mut((n, n), (n, n)).copy_from(&(-a.transpose() * t));
        let e = linalg::expm(&block);
        let phi: Mat = e.view((0, 0), (n, n)).into_owned();
        let x: Mat = e.view((0, n), (n, n)).into_owned();
        let w = linalg::symmetrized(x * phi.transpose());
        LyapunovStep { phi, w }
    }

    pub fn apply(&self, omega: &Mat) -> Mat {
        linalg::symmetrized(&self.phi * omega * self.phi.transpose() + &self.w)
    }

    /// `n` successive applications folded into one step.
    pub fn pow(&self, mut n: u64) -> Self {
        let dim = self.phi.nrows();
        let mut acc = LyapunovStep {
            phi: Mat::identity(dim, dim),
            w: Mat::zeros(dim, dim),
        };
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = base.then(&acc);
            }
            n >>= 1;
            if n > 0 {
                base = base.then(&base);
            }
        }
        acc
    }

    /// `self ∘ earlier`.
    fn then(&self, earlier: &LyapunovStep) -> LyapunovStep {
        LyapunovStep {
            phi: &self.phi * &earlier.phi,
            w: linalg::symmetrized(&self.phi * &earlier.w * self.phi.transpose() + &self.w),
        }
    }
}

/// `(e^{at}, q (e^{2at} − 1) / 2a)` with the `a → 0` limit handled.
fn scalar_lyapunov_step(a: f64, q: f64, t: f64) -> (f64, f64) {
    let x = 2.0 * a * t;
    let phi = (a * t).exp();
    let w = if x.abs() > 1e-12 {
        q * x.exp_m1() / (2.0 * a)
    } else {
        q * t * (1.0 + 0.5 * x)
    };
    (phi, w)
}

/// Unobserved covariance after time `t`:
/// `e^{At} Ω₀ e^{Aᵀt} + ∫₀ᵗ e^{A(t−τ)} Q e^{Aᵀ(t−τ)} dτ`.
pub fn propagate_unobserved(omega0: &Mat, a: &Mat, q: &Mat, t: f64) -> Mat {
    assert!(t >= 0.0, "propagation time must be non-negative");
    if t == 0.0 {
        return omega0.clone();
    }
    if a.nrows() == 1 {
        let (phi, w) = scalar_lyapunov_step(a[(0, 0)], q[(0, 0)], t);
        return Mat::from_element(1, 1, phi * phi * omega0[(0, 0)] + w);
    }
    // keep the Van Loan block small enough that e^{−Aᵀt} stays well scaled
    let norm = a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let chunks = (norm * t / 2.0).ceil().max(1.0);
    let step = LyapunovStep::new(a, q, t / chunks);
    step.pow(chunks as u64).apply(omega0)
}

fn riccati_rhs(a: &Mat, q: &Mat, g: &Mat, w: &Mat) -> Mat {
    let aw = a * w;
    &aw + aw.transpose() + q - w * g * w
}

/// Observed covariance after time `t` by adaptive Dormand–Prince 5(4)
/// integration of the Riccati equation, re-symmetrised after every step.
pub fn propagate_observed(omega0: &Mat, a: &Mat, q: &Mat, g: &Mat, t: f64) -> Result<Mat> {
    propagate_observed_with(omega0, a, q, g, t, &OdeTolerances::default())
}

pub fn propagate_observed_with(
    omega0: &Mat,
    a: &Mat,
    q: &Mat,
    g: &Mat,
    t: f64,
    tol: &OdeTolerances,
) -> Result<Mat> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "propagation time must be finite and non-negative, got {t}"
        )));
    }
    let mut w = omega0.clone();
    if t == 0.0 {
        return Ok(w);
    }

    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // fifth-order minus embedded fourth-order weights
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let f = |w: &Mat| riccati_rhs(a, q, g, w);
    let scale0 = 1.0 + linalg::max_abs(&w);
    let rate = linalg::max_abs(a) + linalg::max_abs(g) * scale0 + linalg::max_abs(q) / scale0;
    let mut h = (0.05 / rate.max(1e-12)).min(t);
    let h_min = tol.min_step * t.max(1.0);
    let mut time = 0.0;
    let mut k1 = f(&w);
    let mut steps = 0usize;

    while time < t {
        if steps >= tol.max_steps {
            return Err(Error::StepUnderflow { t: time, h });
        }
        steps += 1;
        let last = time + h >= t;
        if last {
            h = t - time;
        }
        let k2 = f(&(&w + &k1 * (h * A21)));
        let k3 = f(&(&w + &k1 * (h * A31) + &k2 * (h * A32)));
        let k4 = f(&(&w + &k1 * (h * A41) + &k2 * (h * A42) + &k3 * (h * A43)));
        let k5 = f(&(&w + &k1 * (h * A51) + &k2 * (h * A52) + &k3 * (h * A53) + &k4 * (h * A54)));
        let k6 = f(&(&w
            + &k1 * (h * A61)
            + &k2 * (h * A62)
            + &k3 * (h * A63)
            + &k4 * (h * A64)
            + &k5 * (h * A65)));
        let mut next = &w + &k1 * (h * B1) + &k3 * (h * B3) + &k4 * (h * B4) + &k5 * (h * B5)
            + &k6 * (h * B6);
        linalg::symmetrize(&mut next);
        let k7 = f(&next);
        let err = &k1 * (h * E1) + &k3 * (h * E3) + &k4 * (h * E4) + &k5 * (h * E5)
            + &k6 * (h * E6)
            + &k7 * (h * E7);

        let mut ratio = 0.0_f64;
        for ((e, y0), y1) in err.iter().zip(w.iter()).zip(next.iter()) {
            let sc = tol.atol + tol.rtol * y0.abs().max(y1.abs());
            ratio = ratio.max(e.abs() / sc);
        }
        if !ratio.is_finite() {
            ratio = 1e10;
        }
        if ratio <= 1.0 {
            time = if last { t } else { time + h };
            w = next;
            k1 = k7;
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if time < t && h < h_min {
            return Err(Error::StepUnderflow { t: time, h });
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    #[test]
    fn zero_drift_unobserved() {
        let out = propagate_unobserved(&s(2.0), &s(0.0), &s(1.0), 3.0);
        assert!((out[(0, 0)] - 5.0).abs() < 1e-15);
        let same = propagate_unobserved(&s(2.0), &s(0.3), &s(1.0), 0.0);
        assert_eq!(same[(0, 0)], 2.0);
    }

    #[test]
    fn scalar_unobserved_closed_form() {
        let (a, q) = (0.3487_f64, 1.1924_f64);
        let expect = (2.0 * a).exp() * (1.0 + q / (2.0 * a)) - q / (2.0 * a);
        let out = propagate_unobserved(&s(1.0), &s(a), &s(q), 1.0);
        assert!((out[(0, 0)] - expect).abs() < 1e-13 * expect);
    }

    #[test]
    fn matrix_van_loan_matches_scalar_decoupled() {
        let a = Mat::from_row_slice(2, 2, &[0.2, 0.0, 0.0, -0.7]);
        let q = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]);
        let w0 = Mat::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 0.3]);
        let out = propagate_unobserved(&w0, &a, &q, 4.0);
        let e0 = propagate_unobserved(&s(1.5), &s(0.2), &s(1.0), 4.0)[(0, 0)];
        let e1 = propagate_unobserved(&s(0.3), &s(-0.7), &s(0.5), 4.0)[(0, 0)];
        assert!((out[(0, 0)] - e0).abs() < 1e-11 * e0);
        assert!((out[(1, 1)] - e1).abs() < 1e-11);
        assert!(out[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn lyapunov_step_power_matches_direct() {
        let a = Mat::from_row_slice(2, 2, &[0.1, 0.4, -0.3, -0.2]);
        let q = Mat::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.7]);
        let w0 = Mat::identity(2, 2);
        let direct = LyapunovStep::new(&a, &q, 1.0).apply(&w0);
        let powered = LyapunovStep::new(&a, &q, 0.125).pow(8).apply(&w0);
        assert!(linalg::max_abs_diff(&direct, &powered) < 1e-12);
    }

    #[test]
    fn observed_scalar_closed_form() {
        let (a, q, g, w0, t) = (0.3487_f64, 1.1924, 0.43216, 5.0, 2.0_f64);
        let lambda = (a * a + q * g).sqrt();
        let (wp, wm) = ((a + lambda) / g, (a - lambda) / g);
        let r = (w0 - wp) / (w0 - wm) * (-2.0 * lambda * t).exp();
        let expect = (wp - r * wm) / (1.0 - r);
        let out = propagate_observed(&s(w0), &s(a), &s(q), &s(g), t).unwrap();
        assert!((out[(0, 0)] - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn rejects_negative_time() {
        let err = propagate_observed(&s(1.0), &s(0.1), &s(1.0), &s(1.0), -1.0);
        assert!(err.is_err());
    }
}
