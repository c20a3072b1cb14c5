//! Hamiltonian transfer matrices for the covariance Riccati flow.
//!
//! Writing `Ω = Y X⁻¹` linearises `Ω̇ = AΩ + ΩAᵀ + Q − ΩGΩ` into
//! `d/dt [X; Y] = [[−Aᵀ, G], [Q, A]] [X; Y]`. The exponential of that block
//! matrix over a phase is the phase's transfer `Ψ`, and the covariance map is
//! the linear-fractional `Ω ↦ (Ψ₂₁ + Ψ₂₂Ω)(Ψ₁₁ + Ψ₁₂Ω)⁻¹`. Composition of
//! phases is matrix multiplication, and any positive rescaling of `Ψ` leaves
//! the map unchanged, which is what keeps long products finite.

use crate::linalg::{self, Mat};

/// Largest `‖H‖₁ · h` handed to a single dense exponential.
const MAX_CHUNK_NORM: f64 = 4.0;

/// Transfer over duration `t` of the observed flow (`g = Some(G)`) or the
/// unobserved one (`g = None`). The result is normalised to unit max entry.
pub fn hamiltonian_transfer(a: &Mat, q: &Mat, g: Option<&Mat>, t: f64) -> Mat {
    debug_assert!(t >= 0.0);
    if a.nrows() == 1 {
        let gv = g.map_or(0.0, |g| g[(0, 0)]);
        let s = scalar_transfer(a[(0, 0)], q[(0, 0)], gv, t);
        return Mat::from_row_slice(2, 2, &s);
    }
    let h = hamiltonian(a, q, g);
    let norm = h.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let chunks = ((norm * t) / MAX_CHUNK_NORM).ceil().max(1.0);
    if chunks <= 1.0 {
        let mut psi = linalg::expm(&(h * t));
        linalg::normalize_transfer(&mut psi);
        return psi;
    }
    let mut step = linalg::expm(&(h * (t / chunks)));
    linalg::normalize_transfer(&mut step);
    transfer_power(&step, chunks as u64)
}

/// `[[−Aᵀ, G], [Q, A]]`, with `G = 0` for the unobserved flow.
pub fn hamiltonian(a: &Mat, q: &Mat, g: Option<&Mat>) -> Mat {
    let n = a.nrows();
    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&(-a.transpose()));
    if let Some(g) = g {
        h.view_mut((0, n), (n, n)).copy_from(g);
    }
    h.view_mut((n, 0), (n, n)).copy_from(q);
    h.view_mut((n, n), (n, n)).copy_from(a);
    h
}

/// `Ψᵏ` by binary powering with normalisation after every product.
pub fn transfer_power(psi: &Mat, mut k: u64) -> Mat {
    let mut result = Mat::identity(psi.nrows(), psi.ncols());
    let mut base = psi.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &base * &result;
            linalg::normalize_transfer(&mut result);
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
            linalg::normalize_transfer(&mut base);
        }
    }
    result
}

/// `later ∘ earlier`, normalised.
pub fn compose(later: &Mat, earlier: &Mat) -> Mat {
    let mut m = later * earlier;
    linalg::normalize_transfer(&mut m);
    m
}

/// Row-major `[ψ₁₁, ψ₁₂, ψ₂₁, ψ₂₂]` for a scalar target.
///
/// With `λ² = a² + qg` the Hamiltonian squares to `λ² I`, so
/// `exp(Ht) = cosh(λt) I + sinh(λt)/λ · H`. Scaling by `2e^{−λt}` gives
/// entries built from `1 ± e^{−2λt}` that neither overflow nor cancel.
pub fn scalar_transfer(a: f64, q: f64, g: f64, t: f64) -> [f64; 4] {
    let lambda = (a * a + q * g).sqrt();
    let x = lambda * t;
    let e = (-2.0 * x).exp();
    let c = 1.0 + e;
    // (1 − e^{−2x}) / λ, tending to 2t as λ → 0
    let s = if x > 1e-8 {
        -(-2.0 * x).exp_m1() / lambda
    } else {
        2.0 * t * (1.0 - x)
    };
    let mut psi = [c - a * s, g * s, q * s, c + a * s];
    let m = psi.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if m > 0.0 {
        psi.iter_mut().for_each(|v| *v /= m);
    }
    psi
}

/// Scalar linear-fractional map.
#[inline]
pub fn scalar_lft(psi: &[f64; 4], w: f64) -> f64 {
    (psi[2] + psi[3] * w) / (psi[0] + psi[1] * w)
}

/// Scalar transfer product `later · earlier`, normalised.
#[inline]
pub fn scalar_compose(later: &[f64; 4], earlier: &[f64; 4]) -> [f64; 4] {
    let mut m = [
        later[0] * earlier[0] + later[1] * earlier[2],
        later[0] * earlier[1] + later[1] * earlier[3],
        later[2] * earlier[0] + later[3] * earlier[2],
        later[2] * earlier[1] + later[3] * earlier[3],
    ];
    let s = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if s > 0.0 && s.is_finite() {
        m.iter_mut().for_each(|v| *v /= s);
    }
    m
}
