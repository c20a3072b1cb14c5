use serde::Serialize;

use super::schedule::Schedule;
use crate::cycle::Cycle;
use crate::error::{Error, Result};

/// Tuning of the dwell balancing iterations.
#[derive(Clone, Copy, Debug)]
pub struct DwellConfig {
    /// Gain of the logarithmic update law.
    pub k_p: f64,
    /// Relative spread of peaks accepted as balanced.
    pub tol: f64,
    /// Cap on total-dwell updates.
    pub max_outer: usize,
    /// Cap on per-visit split updates inside one target.
    pub max_inner: usize,
}

impl Default for DwellConfig {
    fn default() -> Self {
        DwellConfig {
            k_p: 1e-2,
            tol: 1e-6,
            max_outer: 50_000,
            max_inner: 10_000,
        }
    }
}

/// Relative cost increase tolerated before a step counts as overshoot.
const GUARD: f64 = 1e-12;
/// Bound on `|log(g_i / g_avg)|`; keeps never-observed unstable targets
/// (infinite cost) to a finite step.
const LOG_CAP: f64 = 50.0;
/// The gain may shrink by this factor before the iteration gives up.
const MIN_GAIN_RATIO: f64 = 1e-12;

/// One accepted iteration of the total-dwell update.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub k_p: f64,
    pub max_peak: f64,
    pub g_avg: f64,
    /// Per-target peak, ordered like [`DwellState::targets`].
    pub peaks: Vec<f64>,
    /// Per-target total dwell, same order.
    pub totals: Vec<f64>,
}

/// A balanced (or partially balanced) dwell allocation on a fixed cycle
/// and period.
#[derive(Clone, Debug)]
pub struct DwellState {
    pub cycle: Cycle,
    /// One dwell per cycle position.
    pub dwells: Vec<f64>,
    pub period: f64,
    /// Distinct targets of the cycle, ascending.
    pub targets: Vec<usize>,
    /// Cost at the start of every visit, per target.
    pub visit_peaks: Vec<Vec<f64>>,
    /// `max_k g_i(‖P̄_i^k‖)` per target.
    pub peaks: Vec<f64>,
    /// Geometric mean of the active targets' peaks.
    pub g_avg: f64,
    /// Targets with positive total dwell.
    pub active_set: Vec<usize>,
    pub iterations: usize,
    /// Gain in use when the iteration stopped.
    pub k_p: f64,
    pub trace: Vec<TraceRow>,
}

impl DwellState {
    /// `max_{i,k} g_i(‖P̄_i^k‖)`.
    pub fn max_peak(&self) -> f64 {
        self.peaks.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    /// Total dwell per target, ordered like `targets`.
    pub fn totals(&self) -> Vec<f64> {
        self.targets
            .iter()
            .map(|&t| {
                self.cycle
                    .positions_of(t)
                    .iter()
                    .map(|&p| self.dwells[p])
                    .sum()
            })
            .collect()
    }

    /// Largest `|g_i − g_avg| / g_avg` over the active set.
    pub fn spread(&self) -> f64 {
        let totals = self.totals();
        peak_spread(&totals, &self.peaks, self.g_avg)
    }
}

/// Per-visit peaks of one target after splitting its total dwell.
#[derive(Clone, Debug)]
pub struct WithinTarget {
    pub peaks: Vec<f64>,
    pub iterations: usize,
}

fn geometric_mean(x: &[f64], g: &[f64]) -> f64 {
    let (sum, n) = x
        .iter()
        .zip(g)
        .filter(|(x, _)| **x > 0.0)
        .fold((0.0, 0usize), |(s, n), (_, g)| (s + g.ln(), n + 1));
    if n == 0 {
        f64::NAN
    } else {
        (sum / n as f64).exp()
    }
}

fn peak_spread(x: &[f64], g: &[f64], g_avg: f64) -> f64 {
    x.iter()
        .zip(g)
        .filter(|(x, _)| **x > 0.0)
        .fold(0.0_f64, |m, (_, g)| m.max((g - g_avg).abs() / g_avg))
}

/// Active entries agree within `tol` and no idle entry exceeds the mean.
fn is_balanced(x: &[f64], g: &[f64], tol: f64) -> bool {
    let g_avg = geometric_mean(x, g);
    if !g_avg.is_finite() {
        return false;
    }
    peak_spread(x, g, g_avg) <= tol
        && x
            .iter()
            .zip(g)
            .all(|(x, g)| *x > 0.0 || *g <= g_avg * (1.0 + tol))
}

/// `x_i ← x_i + k_p log(g_i / g_avg)`; idle entries only move when their
/// cost is above the mean. Negative results are clipped and the clipped
/// mass taken proportionally from the remaining entries, so the sum stays
/// at `budget`.
fn log_law_step(x: &[f64], g: &[f64], k_p: f64, budget: f64) -> Vec<f64> {
    let g_avg = geometric_mean(x, g);
    let mut next: Vec<f64> = x
        .iter()
        .zip(g)
        .map(|(&x, &g)| {
            let r = (g / g_avg).ln().clamp(-LOG_CAP, LOG_CAP);
            if x > 0.0 || r > 0.0 {
                (x + k_p * r).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = next.iter().sum();
    if total > 0.0 {
        let s = budget / total;
        next.iter_mut().for_each(|v| *v *= s);
    }
    next
}

/// Peak each visit's dwell acts on: the one at the start of the next visit
/// to the same target, which ends the gap that follows the visit.
fn controlled(g: &[f64]) -> Vec<f64> {
    let m = g.len();
    (0..m).map(|k| g[(k + 1) % m]).collect()
}

/// Spread of the log peaks of the active entries plus the excess of idle
/// entries above their mean: zero exactly when [`is_balanced`] holds at
/// zero tolerance.
fn log_dispersion(x: &[f64], g: &[f64]) -> f64 {
    let g_avg = geometric_mean(x, g);
    x.iter()
        .zip(g)
        .map(|(x, g)| {
            let r = (g / g_avg).ln();
            if *x > 0.0 {
                r * r
            } else {
                r.max(0.0).powi(2)
            }
        })
        .sum()
}

fn max_of(g: &[f64]) -> f64 {
    g.iter().fold(0.0_f64, |m, v| m.max(*v))
}

/// Split target `gi`'s total dwell among its visits so that every visit
/// starts from the same peak (process MV). Other targets' dwells, and so
/// this target's off-times, stay fixed. Updates `dwells` in place.
///
/// Each visit's dwell is driven by the peak that closes the gap after it;
/// driving it by the peak that opens the visit moves dwell away from the
/// gap that needs it. Steps are accepted while they shrink the dispersion
/// of the log peaks; the worst peak may rise on the way to the balanced
/// split, so it is not used as the guard here.
pub fn balance_within_target(
    schedule: &Schedule,
    gi: usize,
    dwells: &mut [f64],
    cfg: &DwellConfig,
) -> Result<WithinTarget> {
    let positions = schedule.groups()[gi].positions.clone();
    let off = schedule.off_times(gi, dwells);
    let mut on: Vec<f64> = positions.iter().map(|&p| dwells[p]).collect();
    let total: f64 = on.iter().sum();
    let mut g = schedule.visit_peaks(gi, &on, &off)?;
    if on.len() == 1 || total <= 0.0 {
        return Ok(WithinTarget {
            peaks: g,
            iterations: 0,
        });
    }
    let tol = 0.1 * cfg.tol;
    let mut k_p = cfg.k_p;
    let mut merit = log_dispersion(&on, &controlled(&g));
    for it in 0..cfg.max_inner {
        let gk = controlled(&g);
        if is_balanced(&on, &gk, tol) {
            for (k, &p) in positions.iter().enumerate() {
                dwells[p] = on[k];
            }
            return Ok(WithinTarget {
                peaks: g,
                iterations: it,
            });
        }
        let cand = log_law_step(&on, &gk, k_p, total);
        let gc = schedule.visit_peaks(gi, &cand, &off)?;
        let m = log_dispersion(&cand, &controlled(&gc));
        if !(m <= merit) {
            k_p *= 0.5;
            if k_p < cfg.k_p * MIN_GAIN_RATIO {
                return Err(Error::NoConvergence {
                    what: "within-target dwell split",
                    iterations: it,
                    residual: peak_spread(&on, &gk, geometric_mean(&on, &gk)),
                });
            }
            continue;
        }
        on = cand;
        g = gc;
        merit = m;
        k_p = (2.0 * k_p).min(cfg.k_p);
    }
    let gk = controlled(&g);
    Err(Error::NoConvergence {
        what: "within-target dwell split",
        iterations: cfg.max_inner,
        residual: peak_spread(&on, &gk, geometric_mean(&on, &gk)),
    })
}

/// Run process MV on every repeatedly visited target (in place, in target
/// order) and return the visit peaks of all targets afterwards.
fn split_and_evaluate(
    schedule: &Schedule,
    dwells: &mut [f64],
    cfg: &DwellConfig,
) -> Result<Vec<Vec<f64>>> {
    for gi in 0..schedule.groups().len() {
        if schedule.groups()[gi].positions.len() > 1 {
            balance_within_target(schedule, gi, dwells, cfg)?;
        }
    }
    schedule.evaluate(dwells)
}

fn group_totals(schedule: &Schedule, dwells: &[f64]) -> Vec<f64> {
    schedule
        .groups()
        .iter()
        .map(|g| g.positions.iter().map(|&p| dwells[p]).sum())
        .collect()
}

/// Equal share of the dwell budget per target, split equally over visits.
pub fn equal_shares(schedule: &Schedule, period: f64) -> Vec<f64> {
    let budget = period - schedule.travel_time();
    let share = budget / schedule.groups().len() as f64;
    let mut d = vec![0.0; schedule.cycle().len()];
    for g in schedule.groups() {
        for &p in &g.positions {
            d[p] = share / g.positions.len() as f64;
        }
    }
    d
}

/// Equalise peaks on a cycle where every target appears once.
pub fn balance_single_visit(schedule: &Schedule, period: f64, cfg: &DwellConfig) -> Result<DwellState> {
    if !schedule.is_single_visit() {
        return Err(Error::InvalidArgument(
            "single-visit balancing needs every target to appear once".into(),
        ));
    }
    balance_from(schedule, period, &equal_shares(schedule, period), cfg)
}

/// Two-level balancing: per-target totals by the logarithmic law, per-visit
/// splits by process MV.
pub fn balance_multi_visit(schedule: &Schedule, period: f64, cfg: &DwellConfig) -> Result<DwellState> {
    balance_from(schedule, period, &equal_shares(schedule, period), cfg)
}

/// Balance starting from the given dwells (rescaled to fill the period).
/// A step that raises the maximum peak is rejected and the gain halved.
pub fn balance_from(
    schedule: &Schedule,
    period: f64,
    initial: &[f64],
    cfg: &DwellConfig,
) -> Result<DwellState> {
    if !(cfg.k_p > 0.0 && cfg.tol > 0.0) {
        return Err(Error::InvalidArgument("k_p and tol must be positive".into()));
    }
    let travel = schedule.travel_time();
    if !(period.is_finite() && period > travel) {
        return Err(Error::InvalidArgument(format!(
            "period {period} must exceed the cycle travel time {travel}"
        )));
    }
    if initial.len() != schedule.cycle().len()
        || initial.iter().any(|v| !(v.is_finite() && *v >= 0.0))
    {
        return Err(Error::InvalidArgument(
            "initial dwells must be one non-negative value per visit".into(),
        ));
    }
    let budget = period - travel;
    let sum: f64 = initial.iter().sum();
    let mut dwells: Vec<f64> = if sum > 0.0 {
        initial.iter().map(|v| v * budget / sum).collect()
    } else {
        equal_shares(schedule, period)
    };

    let mut visit = split_and_evaluate(schedule, &mut dwells, cfg)?;
    let mut k_p = cfg.k_p;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut fresh = true;
    loop {
        let totals = group_totals(schedule, &dwells);
        let peaks: Vec<f64> = visit.iter().map(|v| max_of(v)).collect();
        let g_avg = geometric_mean(&totals, &peaks);
        let cost = max_of(&peaks);
        if fresh {
            fresh = false;
            trace.push(TraceRow {
                iteration: iterations,
                k_p,
                max_peak: cost,
                g_avg,
                peaks: peaks.clone(),
                totals: totals.clone(),
            });
        }
        let splits_ok = schedule.groups().iter().enumerate().all(|(gi, g)| {
            if g.positions.len() == 1 || totals[gi] <= 0.0 {
                return true;
            }
            let on: Vec<f64> = g.positions.iter().map(|&p| dwells[p]).collect();
            is_balanced(&on, &controlled(&visit[gi]), cfg.tol)
        });
        if is_balanced(&totals, &peaks, cfg.tol) && splits_ok {
            let targets: Vec<usize> = schedule.groups().iter().map(|g| g.target).collect();
            let active_set = targets
                .iter()
                .zip(&totals)
                .filter(|(_, x)| **x > 0.0)
                .map(|(t, _)| *t)
                .collect();
            return Ok(DwellState {
                cycle: schedule.cycle().clone(),
                dwells,
                period,
                targets,
                visit_peaks: visit,
                peaks,
                g_avg,
                active_set,
                iterations,
                k_p,
                trace,
            });
        }
        if iterations >= cfg.max_outer {
            return Err(Error::NoConvergence {
                what: "dwell balancing",
                iterations,
                residual: peak_spread(&totals, &peaks, g_avg),
            });
        }

        let next = log_law_step(&totals, &peaks, k_p, budget);
        let mut cand = dwells.clone();
        for (gi, g) in schedule.groups().iter().enumerate() {
            let m = g.positions.len() as f64;
            for &p in &g.positions {
                cand[p] = if totals[gi] > 0.0 {
                    dwells[p] * next[gi] / totals[gi]
                } else {
                    next[gi] / m
                };
            }
        }
        let cand_visit = split_and_evaluate(schedule, &mut cand, cfg)?;
        let c = cand_visit.iter().map(|v| max_of(v)).fold(0.0_f64, f64::max);
        if c > cost * (1.0 + GUARD) {
            k_p *= 0.5;
            if k_p < cfg.k_p * MIN_GAIN_RATIO {
                return Err(Error::NoConvergence {
                    what: "dwell balancing",
                    iterations,
                    residual: peak_spread(&totals, &peaks, g_avg),
                });
            }
            continue;
        }
        dwells = cand;
        visit = cand_visit;
        iterations += 1;
        fresh = true;
    }
}
