//! The unique periodic steady state of one target under a periodic
//! observe/ignore pattern.

use super::steady::SteadyStates;
use super::transfer::{self, scalar_compose, scalar_lft, scalar_transfer};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::TargetSpec;

/// A target's view of a schedule: visit `k` observes for `on[k]`, then the
/// target is left alone for `off[k]` until visit `k + 1` (cyclically).
#[derive(Clone, Debug, PartialEq)]
pub struct TargetTimeline {
    pub on: Vec<f64>,
    pub off: Vec<f64>,
}

impl TargetTimeline {
    pub fn new(on: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(on.len(), off.len(), "one off-interval per visit");
        TargetTimeline { on, off }
    }

    pub fn visits(&self) -> usize {
        self.on.len()
    }

    pub fn period(&self) -> f64 {
        self.on.iter().sum::<f64>() + self.off.iter().sum::<f64>()
    }

    pub fn total_on(&self) -> f64 {
        self.on.iter().sum()
    }

    /// Period-relative instant at which visit `k` starts observing.
    pub fn switch_on(&self, k: usize) -> f64 {
        (0..k).map(|p| self.on[p] + self.off[p]).sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PeriodicConfig {
    /// Max-abs change between successive period-start covariances, relative
    /// to `1 + ‖Ω‖_max`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        PeriodicConfig {
            tol: 1e-9,
            max_iters: 10_000,
        }
    }
}

/// Peaks of the periodic solution. `upper[k]` is the covariance when visit
/// `k` begins (local maximum), `lower[k]` when it ends (local minimum).
#[derive(Clone, Debug)]
pub struct PeakSet {
    pub upper: Vec<Mat>,
    pub lower: Vec<Mat>,
    pub switch_on: Vec<f64>,
    pub switch_off: Vec<f64>,
    /// Max-abs mismatch of one more application of the period map.
    pub residual: f64,
}

impl PeakSet {
    /// Covariance at period-relative time `t ∈ [0, T]`.
    pub fn covariance_at(&self, target: &TargetSpec, timeline: &TargetTimeline, t: f64) -> Mat {
        let n = timeline.visits();
        let mut k = n - 1;
        for p in 0..n {
            if t < self.switch_on[p] + timeline.on[p] + timeline.off[p] {
                k = p;
                break;
            }
        }
        let local = (t - self.switch_on[k]).max(0.0);
        if local <= timeline.on[k] {
            propagate_phase(target, &self.upper[k], true, local)
        } else {
            let dt = (local - timeline.on[k]).min(timeline.off[k]);
            propagate_phase(target, &self.lower[k], false, dt)
        }
    }
}

/// One phase of the periodic flow through the transfer route.
pub fn propagate_phase(target: &TargetSpec, omega: &Mat, observed: bool, t: f64) -> Mat {
    if t == 0.0 {
        return omega.clone();
    }
    let g = observed.then_some(&target.g);
    if target.dim() == 1 {
        let gv = g.map_or(0.0, |g| g[(0, 0)]);
        let psi = scalar_transfer(target.a[(0, 0)], target.q[(0, 0)], gv, t);
        return Mat::from_element(1, 1, scalar_lft(&psi, omega[(0, 0)]));
    }
    let psi = transfer::hamiltonian_transfer(&target.a, &target.q, g, t);
    linalg::linear_fractional(&psi, omega).expect("transfer of a PSD covariance is regular")
}

/// Fixed point of the one-period covariance map and the resulting peaks.
pub fn periodic_steady_state(
    target: &TargetSpec,
    steady: &SteadyStates,
    timeline: &TargetTimeline,
    cfg: &PeriodicConfig,
) -> Result<PeakSet> {
    let n = timeline.visits();
    if n == 0 {
        return Err(Error::InvalidArgument("timeline has no visits".into()));
    }
    if timeline
        .on
        .iter()
        .chain(&timeline.off)
        .any(|v| !(*v >= 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidArgument(
            "timeline intervals must be finite and non-negative".into(),
        ));
    }
    if !(timeline.period() > 0.0) {
        return Err(Error::InvalidArgument("timeline period must be positive".into()));
    }
    if !timeline.on.iter().any(|v| *v > 0.0) {
        return Err(Error::NoObservation);
    }
    if target.dim() == 1 {
        scalar_periodic(target, timeline, cfg)
    } else {
        matrix_periodic(target, steady, timeline, cfg)
    }
}

fn switch_times(timeline: &TargetTimeline) -> (Vec<f64>, Vec<f64>) {
    let mut on = Vec::with_capacity(timeline.visits());
    let mut off = Vec::with_capacity(timeline.visits());
    let mut t = 0.0;
    for k in 0..timeline.visits() {
        on.push(t);
        t += timeline.on[k];
        off.push(t);
        t += timeline.off[k];
    }
    (on, off)
}

/// Period-start value of every visit for a scalar target, with no matrix
/// allocation: `out[k]` is the covariance when visit `k` begins.
pub fn scalar_visit_peaks(
    a: f64,
    q: f64,
    g: f64,
    on: &[f64],
    off: &[f64],
    cfg: &PeriodicConfig,
    out: &mut Vec<f64>,
) -> Result<()> {
    let mut m = [1.0, 0.0, 0.0, 1.0];
    for k in 0..on.len() {
        m = scalar_compose(&scalar_transfer(a, q, g, on[k]), &m);
        m = scalar_compose(&scalar_transfer(a, q, 0.0, off[k]), &m);
    }
    let mut cur = scalar_fixed_point(&m, cfg)?;
    out.clear();
    for k in 0..on.len() {
        out.push(cur);
        cur = scalar_lft(&scalar_transfer(a, q, g, on[k]), cur);
        cur = scalar_lft(&scalar_transfer(a, q, 0.0, off[k]), cur);
    }
    Ok(())
}

/// Attracting fixed point of `ω ↦ (m₂₁ + m₂₂ω)/(m₁₁ + m₁₂ω)`: the positive
/// root of `m₁₂ω² + (m₁₁ − m₂₂)ω − m₂₁ = 0`, in whichever algebraic form
/// avoids cancellation, polished by plain iteration.
fn scalar_fixed_point(m: &[f64; 4], cfg: &PeriodicConfig) -> Result<f64> {
    let diff = m[0] - m[3];
    let disc = (diff * diff + 4.0 * m[1] * m[2]).sqrt();
    let mut w = if diff <= 0.0 {
        (disc - diff) / (2.0 * m[1])
    } else {
        2.0 * m[2] / (diff + disc)
    };
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::NoConvergence {
            what: "periodic steady state",
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    let mut residual = (scalar_lft(m, w) - w).abs();
    let mut iters = 0;
    while residual > cfg.tol * (1.0 + w) {
        if iters >= cfg.max_iters {
            return Err(Error::NoConvergence {
                what: "periodic steady state",
                iterations: iters,
                residual,
            });
        }
        let next = scalar_lft(m, w);
        residual = (next - w).abs();
        w = next;
        iters += 1;
    }
    Ok(w)
}

fn scalar_periodic(
    target: &TargetSpec,
    timeline: &TargetTimeline,
    cfg: &PeriodicConfig,
) -> Result<PeakSet> {
    let (a, q, g) = (target.a[(0, 0)], target.q[(0, 0)], target.g[(0, 0)]);
    let phases: Vec<([f64; 4], [f64; 4])> = (0..timeline.visits())
        .map(|k| {
            (
                scalar_transfer(a, q, g, timeline.on[k]),
                scalar_transfer(a, q, 0.0, timeline.off[k]),
            )
        })
        .collect();
    let mut m = [1.0, 0.0, 0.0, 1.0];
    for (on, off) in &phases {
        m = scalar_compose(on, &m);
        m = scalar_compose(off, &m);
    }
    let w = scalar_fixed_point(&m, cfg)?;

    let (switch_on, switch_off) = switch_times(timeline);
    let mut upper = Vec::with_capacity(phases.len());
    let mut lower = Vec::with_capacity(phases.len());
    let mut cur = w;
    for (on, off) in &phases {
        upper.push(Mat::from_element(1, 1, cur));
        cur = scalar_lft(on, cur);
        lower.push(Mat::from_element(1, 1, cur));
        cur = scalar_lft(off, cur);
    }
    Ok(PeakSet {
        upper,
        lower,
        switch_on,
        switch_off,
        residual: (cur - w).abs(),
    })
}

fn matrix_periodic(
    target: &TargetSpec,
    steady: &SteadyStates,
    timeline: &TargetTimeline,
    cfg: &PeriodicConfig,
) -> Result<PeakSet> {
    let dim = 2 * target.dim();
    let phases: Vec<(Mat, Mat)> = (0..timeline.visits())
        .map(|k| {
            (
                transfer::hamiltonian_transfer(&target.a, &target.q, Some(&target.g), timeline.on[k]),
                transfer::hamiltonian_transfer(&target.a, &target.q, None, timeline.off[k]),
            )
        })
        .collect();
    let mut m = Mat::identity(dim, dim);
    for (on, off) in &phases {
        m = transfer::compose(on, &m);
        m = transfer::compose(off, &m);
    }
    let lft = |psi: &Mat, w: &Mat| -> Result<Mat> {
        linalg::linear_fractional(psi, w).ok_or(Error::NoConvergence {
            what: "periodic steady state",
            iterations: 0,
            residual: f64::INFINITY,
        })
    };

    // Period doubling: after j squarings `mk` spans 2^j periods, so the
    // iterate contracts doubly exponentially toward the periodic solution.
    // Squaring too long lets the dominant modes swamp the rest and the
    // transfer loses rank, so keep the iterate with the best one-period
    // residual.
    let residual_of = |w: &Mat| {
        linalg::linear_fractional(&m, w).map_or(f64::INFINITY, |n| linalg::max_abs_diff(&n, w))
    };
    let mut w = steady.omega_ss.clone();
    let mut best = residual_of(&w);
    let mut mk = m.clone();
    let mut iterations = 0;
    while iterations < 64 && best > cfg.tol * (1.0 + linalg::max_abs(&w)) {
        iterations += 1;
        let Some(next) = linalg::linear_fractional(&mk, &steady.omega_ss) else {
            break;
        };
        let res = residual_of(&next);
        if !(res < best) {
            break;
        }
        best = res;
        w = next;
        mk = transfer::compose(&mk, &mk);
    }
    // plain single-period polish
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        let next = lft(&m, &w)?;
        residual = linalg::max_abs_diff(&next, &w);
        w = next;
        iterations += 1;
        if residual <= cfg.tol * (1.0 + linalg::max_abs(&w)) {
            break;
        }
    }
    if !(residual <= cfg.tol * (1.0 + linalg::max_abs(&w))) {
        return Err(Error::NoConvergence {
            what: "periodic steady state",
            iterations,
            residual,
        });
    }

    let (switch_on, switch_off) = switch_times(timeline);
    let mut upper = Vec::with_capacity(phases.len());
    let mut lower = Vec::with_capacity(phases.len());
    let mut cur = w.clone();
    for (on, off) in &phases {
        upper.push(cur.clone());
        cur = lft(on, &cur)?;
        lower.push(cur.clone());
        cur = lft(off, &cur)?;
    }
    Ok(PeakSet {
        upper,
        lower,
        switch_on,
        switch_off,
        residual: linalg::max_abs_diff(&cur, &w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::solve_steady_states;

    #[test]
    fn always_observed_gives_steady_state() {
        let t = TargetSpec::scalar(1, 0.3487, 1.1924, 2.3140, 1.0).unwrap();
        let ss = solve_steady_states(&t.a, &t.q, &t.g).unwrap();
        let tl = TargetTimeline::new(vec![2.0], vec![0.0]);
        let p = periodic_steady_state(&t, &ss, &tl, &PeriodicConfig::default()).unwrap();
        assert!((p.upper[0][(0, 0)] - ss.omega_ss[(0, 0)]).abs() < 1e-12);
        assert!((p.lower[0][(0, 0)] - ss.omega_ss[(0, 0)]).abs() < 1e-12);
    }

    #[test]
    fn never_observed_is_an_error() {
        let t = TargetSpec::scalar(1, 0.3, 1.0, 2.0, 1.0).unwrap();
        let ss = solve_steady_states(&t.a, &t.q, &t.g).unwrap();
        let tl = TargetTimeline::new(vec![0.0], vec![1.0]);
        let err = periodic_steady_state(&t, &ss, &tl, &PeriodicConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoObservation));
    }

    #[test]
    fn matrix_path_agrees_with_scalar_path() {
        let t = TargetSpec::scalar(1, 0.3487, 1.1924, 2.3140, 1.0).unwrap();
        let ss = solve_steady_states(&t.a, &t.q, &t.g).unwrap();
        let tl = TargetTimeline::new(vec![0.7, 0.2], vec![1.1, 2.5]);
        let cfg = PeriodicConfig::default();
        let scalar = periodic_steady_state(&t, &ss, &tl, &cfg).unwrap();
        let matrix = matrix_periodic(&t, &ss, &tl, &cfg).unwrap();
        for k in 0..2 {
            assert!((scalar.upper[k][(0, 0)] - matrix.upper[k][(0, 0)]).abs() < 1e-9);
            assert!((scalar.lower[k][(0, 0)] - matrix.lower[k][(0, 0)]).abs() < 1e-9);
        }
    }

    #[test]
    fn covariance_at_hits_peaks() {
        let t = TargetSpec::scalar(1, 0.2, 1.0, 3.0, 1.0).unwrap();
        let ss = solve_steady_states(&t.a, &t.q, &t.g).unwrap();
        let tl = TargetTimeline::new(vec![0.5, 0.3], vec![1.0, 0.6]);
        let p = periodic_steady_state(&t, &ss, &tl, &PeriodicConfig::default()).unwrap();
        let at = |x: f64| p.covariance_at(&t, &tl, x)[(0, 0)];
        assert!((at(0.0) - p.upper[0][(0, 0)]).abs() < 1e-12);
        assert!((at(0.5) - p.lower[0][(0, 0)]).abs() < 1e-12);
        assert!((at(1.5) - p.upper[1][(0, 0)]).abs() < 1e-12);
        assert!((at(tl.period()) - p.upper[0][(0, 0)]).abs() < 1e-10);
    }
}
