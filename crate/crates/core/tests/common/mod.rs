//! Independent reference computations for the integration tests: scalar
//! closed forms, fixed-step RK4, bisection and brute-force enumeration.
//! Nothing here calls into the engine's transfer or balancing code.

#![allow(dead_code)]

use nalgebra::DMatrix;

pub type Mat = DMatrix<f64>;

/// Positive root of `2aω + q − gω² = 0`.
pub fn scalar_root(a: f64, q: f64, g: f64) -> f64 {
    (a + (a * a + g * q).sqrt()) / g
}

/// `ω̇ = 2aω + q − gω²` from `w0` for time `t`, via the two-root
/// separation `(ω − r₁)/(ω − r₂) = K e^{−λt}`.
pub fn scalar_observed(a: f64, q: f64, g: f64, w0: f64, t: f64) -> f64 {
    let s = (a * a + g * q).sqrt();
    let r1 = (a + s) / g;
    let r2 = (a - s) / g;
    let k = (w0 - r1) / (w0 - r2);
    let e = k * (-2.0 * s * t).exp();
    (r1 - r2 * e) / (1.0 - e)
}

/// `ω̇ = 2aω + q` from `w0` for time `t`.
pub fn scalar_unobserved(a: f64, q: f64, w0: f64, t: f64) -> f64 {
    let x = 2.0 * a * t;
    let growth = if x.abs() < 1e-9 {
        q * t * (1.0 + 0.5 * x)
    } else {
        q * x.exp_m1() / (2.0 * a)
    };
    x.exp() * w0 + growth
}

fn riccati_rhs(a: &Mat, q: &Mat, g: Option<&Mat>, w: &Mat) -> Mat {
    let mut d = a * w + w * a.transpose() + q;
    if let Some(g) = g {
        d -= w * g * w;
    }
    d
}

/// Classical fixed-step RK4 for `Ω̇ = AΩ + ΩAᵀ + Q − ΩGΩ`.
pub fn rk4(a: &Mat, q: &Mat, g: Option<&Mat>, w0: &Mat, t: f64, h: f64) -> Mat {
    let steps = (t / h).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut w = w0.clone();
    for _ in 0..steps {
        let k1 = riccati_rhs(a, q, g, &w);
        let k2 = riccati_rhs(a, q, g, &(&w + &k1 * (0.5 * h)));
        let k3 = riccati_rhs(a, q, g, &(&w + &k2 * (0.5 * h)));
        let k4 = riccati_rhs(a, q, g, &(&w + &k3 * h));
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    w
}

/// Scalar target as plain numbers.
#[derive(Clone, Copy, Debug)]
pub struct Scalar {
    pub a: f64,
    pub q: f64,
    /// `H²/R`.
    pub g: f64,
    pub alpha: f64,
}

impl Scalar {
    pub fn from_spec(t: &persmon::model::TargetSpec) -> Self {
        Scalar {
            a: t.a[(0, 0)],
            q: t.q[(0, 0)],
            g: t.h[(0, 0)] * t.h[(0, 0)] / t.r[(0, 0)],
            alpha: t.weight_alpha,
        }
    }

    pub fn w_ss(&self) -> f64 {
        scalar_root(self.a, self.q, self.g)
    }

    /// `L(t̄)`: cost after leaving the steady observed state alone for `t̄`.
    pub fn lower_bound(&self, t_bar: f64) -> f64 {
        self.alpha * scalar_unobserved(self.a, self.q, self.w_ss(), t_bar)
    }

    pub fn never_observed(&self) -> f64 {
        if self.a < 0.0 {
            self.alpha * (-self.q / (2.0 * self.a))
        } else {
            f64::INFINITY
        }
    }

    /// One period of the pattern (observe for each `on`, then wait `off`),
    /// starting at the first switch-on, returning the value at every
    /// switch-on.
    fn sweep(&self, w: f64, on: &[f64], off: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(on.len() + 1);
        let mut w = w;
        for (t_on, t_off) in on.iter().zip(off) {
            out.push(w);
            w = scalar_observed(self.a, self.q, self.g, w, *t_on);
            w = scalar_unobserved(self.a, self.q, w, *t_off);
        }
        out.push(w);
        out
    }

    /// Periodic covariance at every switch-on, found by bisection on the
    /// one-period map `ω ↦ F(ω)` (increasing, with a single attracting
    /// fixed point above `ω_ss` when some `on` is positive).
    pub fn periodic_peaks(&self, on: &[f64], off: &[f64]) -> Vec<f64> {
        let f = |w: f64| *self.sweep(w, on, off).last().unwrap() - w;
        let mut lo = self.w_ss() * (1.0 - 1e-12);
        let mut hi = lo.max(1.0);
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = 0.5 * (lo + hi);
        let mut peaks = self.sweep(w, on, off);
        peaks.pop();
        peaks
    }

    /// Single-visit peak cost with dwell `on` in a period `period`.
    pub fn single_peak(&self, on: f64, period: f64) -> f64 {
        self.alpha * self.periodic_peaks(&[on], &[period - on])[0]
    }
}

fn bisect(mut lo: f64, mut hi: f64, iters: usize, mut above: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Balanced single-visit allocation for a period: the common peak level
/// `c` and the dwell of each target such that every peak equals `c` and the
/// dwells fill `period − travel`. Assumes every target ends up active.
pub fn gcon_oracle(targets: &[Scalar], travel: f64, period: f64) -> (f64, Vec<f64>) {
    let budget = period - travel;
    let dwell_at = |s: &Scalar, c: f64| -> f64 {
        // peak decreases in the dwell: find the dwell whose peak is c
        bisect(0.0, budget, 100, |on| on > 0.0 && s.single_peak(on, period) <= c)
    };
    let floor = targets
        .iter()
        .map(|s| s.alpha * s.w_ss())
        .fold(0.0_f64, f64::max);
    let mut hi = floor * 2.0 + 1.0;
    while targets.iter().map(|s| dwell_at(s, hi)).sum::<f64>() > budget {
        hi *= 2.0;
    }
    let c = bisect(floor, hi, 80, |c| {
        targets.iter().map(|s| dwell_at(s, c)).sum::<f64>() <= budget
    });
    let dwells = targets.iter().map(|s| dwell_at(s, c)).collect();
    (c, dwells)
}

/// `Ĵ` by walking the cycle: each visit's revisit time is the travel back
/// to the previous visit of the same target.
pub fn j_hat_oracle(targets: &[Scalar], dist: &[Vec<f64>], cycle: &[usize], required: &[usize]) -> f64 {
    let n = cycle.len();
    let leg = |p: usize| dist[cycle[p]][cycle[(p + 1) % n]];
    let mut worst = 0.0_f64;
    for c in 0..n {
        let mut w = 0.0;
        let mut p = c;
        loop {
            p = (p + n - 1) % n;
            w += leg(p);
            if cycle[p] == cycle[c] {
                break;
            }
        }
        worst = worst.max(targets[cycle[c]].lower_bound(w));
    }
    for &i in required {
        if !cycle.contains(&i) {
            worst = worst.max(targets[i].never_observed());
        }
    }
    worst
}

/// Best `Ĵ` over all cycles of length up to `max_len` that visit every
/// target, with no two cyclically consecutive visits to the same target.
pub fn brute_force_j_hat(targets: &[Scalar], dist: &[Vec<f64>], max_len: usize) -> (f64, Vec<usize>) {
    let m = targets.len();
    let required: Vec<usize> = (0..m).collect();
    let mut best = (f64::INFINITY, Vec::new());
    let mut seq = vec![0usize];
    fn rec(
        seq: &mut Vec<usize>,
        m: usize,
        max_len: usize,
        targets: &[Scalar],
        dist: &[Vec<f64>],
        required: &[usize],
        best: &mut (f64, Vec<usize>),
    ) {
        let len = seq.len();
        if len >= m && seq[len - 1] != seq[0] {
            let mut seen = vec![false; m];
            seq.iter().for_each(|&v| seen[v] = true);
            if seen.iter().all(|s| *s) {
                let v = j_hat_oracle(targets, dist, seq, required);
                if v < best.0 {
                    *best = (v, seq.clone());
                }
            }
        }
        if len == max_len {
            return;
        }
        for next in 0..m {
            if next != seq[len - 1] {
                seq.push(next);
                rec(seq, m, max_len, targets, dist, required, best);
                seq.pop();
            }
        }
    }
    // target 0 is visited in every covering cycle, so rotations starting
    // there cover every cycle
    rec(&mut seq, m, max_len, targets, dist, &required, &mut best);
    best
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eig(m: &Mat) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().max()
}

pub fn min_eig(m: &Mat) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().min()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
