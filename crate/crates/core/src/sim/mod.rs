//! Forward simulation of every target's covariance under a plan, and the
//! checks that compare the simulation with the plan's prediction.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::covariance::transfer::{self, scalar_lft, scalar_transfer};
use crate::covariance::{
    periodic_steady_state, propagate_observed, propagate_unobserved, PeriodicConfig, SteadyTable,
};
use crate::cycle::{j_hat_with_legs, LowerBound};
use crate::dwell::{timeline_from_schedule, Plan};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{TargetNetwork, TargetSpec};

#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    pub periods: usize,
    /// Grid samples per period (`dt = T / steps_per_period`).
    pub steps_per_period: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            periods: 20,
            steps_per_period: 2000,
        }
    }
}

/// Covariances at `t = 0`.
#[derive(Clone, Debug)]
pub enum InitialState {
    /// The plan's own periodic solution.
    Planned,
    /// The planned state multiplied by a factor.
    Scaled(f64),
    /// One matrix per plan target, in [`Plan::scope`] order.
    Given(Vec<Mat>),
}

/// Sampled covariance history of the targets of one plan.
#[derive(Clone, Debug)]
pub struct SimTrace {
    pub period: f64,
    pub dt: f64,
    pub periods: usize,
    /// Simulated targets, in [`Plan::scope`] order.
    pub targets: Vec<usize>,
    pub times: Vec<f64>,
    /// `‖Ω_i(t)‖` per target and sample.
    pub norms: Vec<Vec<f64>>,
    /// `g_i(‖Ω_i(t)‖)` per target and sample.
    pub costs: Vec<Vec<f64>>,
    /// Whether the target is being observed at each sample.
    pub observed: Vec<Vec<bool>>,
    /// Covariance at each grid sample of the last period, per target.
    pub last_period: Vec<Vec<Mat>>,
    /// Index of the first sample of the last period.
    pub last_start: usize,
    /// Switch-on instants (absolute) in the last period and the exact cost
    /// there, per target.
    pub switch_on: Vec<Vec<(f64, f64)>>,
    /// Worst cost in each period (grid samples and exact switch instants),
    /// per period and target.
    pub period_max: Vec<Vec<f64>>,
    /// Worst cost over the last period across targets.
    pub realized_j: f64,
    /// The last two periods agree to a relative 1e-8.
    pub converged: bool,
    /// Start of the first period from which every period's worst cost stays
    /// within a relative 1e-6 of the last one.
    pub settle_time: Option<f64>,
}

impl SimTrace {
    /// Worst cost of target `k` (trace order) in the last period.
    pub fn last_peak(&self, k: usize) -> f64 {
        self.period_max.last().map_or(f64::NAN, |p| p[k])
    }
}

struct Segment {
    start: f64,
    len: f64,
    observed: Option<usize>,
}

fn segments(plan: &Plan) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut t = 0.0;
    for (p, &v) in plan.cycle.visits().iter().enumerate() {
        if plan.dwells[p] > 0.0 {
            out.push(Segment {
                start: t,
                len: plan.dwells[p],
                observed: Some(v),
            });
        }
        t += plan.dwells[p];
        if plan.legs[p] > 0.0 {
            out.push(Segment {
                start: t,
                len: plan.legs[p],
                observed: None,
            });
        }
        t += plan.legs[p];
    }
    out
}

/// Fixed-length step of one phase.
enum Stepper {
    Scalar([f64; 4]),
    Matrix(Mat),
}

impl Stepper {
    fn new(target: &TargetSpec, observed: bool, dt: f64) -> Self {
        if target.dim() == 1 {
            let g = if observed { target.g[(0, 0)] } else { 0.0 };
            Stepper::Scalar(scalar_transfer(target.a[(0, 0)], target.q[(0, 0)], g, dt))
        } else {
            let g = observed.then_some(&target.g);
            Stepper::Matrix(transfer::hamiltonian_transfer(&target.a, &target.q, g, dt))
        }
    }

    fn apply(&self, w: &Mat) -> Mat {
        match self {
            Stepper::Scalar(psi) => Mat::from_element(1, 1, scalar_lft(psi, w[(0, 0)])),
            Stepper::Matrix(psi) => {
                linalg::linear_fractional(psi, w).expect("one grid step of a PSD covariance")
            }
        }
    }
}

/// Covariance of each plan target at `t = 0` under the plan's periodic
/// solution; never-observed targets start at `Ω^∞` (or `Ω_ss` when the
/// drift is not Hurwitz and no bounded state exists).
pub fn planned_initial(plan: &Plan, network: &TargetNetwork, steady: &SteadyTable) -> Result<Vec<Mat>> {
    let tl = timeline_from_schedule(&plan.cycle, &plan.dwells, &plan.legs)?;
    let mut start = vec![0.0; plan.cycle.len()];
    for p in 1..plan.cycle.len() {
        start[p] = start[p - 1] + plan.dwells[p - 1] + plan.legs[p - 1];
    }
    plan.scope()
        .into_iter()
        .map(|i| {
            let st = steady.get(i);
            let fallback = || st.omega_inf.clone().unwrap_or_else(|| st.omega_ss.clone());
            let Some(tv) = tl.get(i) else {
                return Ok(fallback());
            };
            if tv.timeline.total_on() <= 0.0 {
                return Ok(fallback());
            }
            let peaks = periodic_steady_state(
                &network.targets[i],
                st,
                &tv.timeline,
                &PeriodicConfig {
                    tol: 1e-13,
                    max_iters: 100_000,
                },
            )?;
            let first = start[tv.positions[0]];
            let tau = if first > 0.0 { tl.period - first } else { 0.0 };
            Ok(peaks.covariance_at(&network.targets[i], &tv.timeline, tau))
        })
        .collect()
}

/// Simulate the plan's targets for `cfg.periods` periods. Segment endpoints
/// come from the engine propagators; grid samples inside a segment are
/// stepped with one-`dt` transfers from the segment start.
pub fn simulate(
    plan: &Plan,
    network: &TargetNetwork,
    steady: &SteadyTable,
    initial: &InitialState,
    cfg: &SimConfig,
) -> Result<SimTrace> {
    if cfg.periods < 2 || cfg.steps_per_period == 0 {
        return Err(Error::InvalidArgument(
            "simulation needs at least two periods and one step per period".into(),
        ));
    }
    let targets = plan.scope();
    let init: Vec<Mat> = match initial {
        InitialState::Planned => planned_initial(plan, network, steady)?,
        InitialState::Scaled(f) => planned_initial(plan, network, steady)?
            .into_iter()
            .map(|w| w * *f)
            .collect(),
        InitialState::Given(w) => w.clone(),
    };
    if init.len() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "{} initial covariances for {} targets",
            init.len(),
            targets.len()
        )));
    }
    let period = plan.period;
    let dt = period / cfg.steps_per_period as f64;
    let total = cfg.periods * cfg.steps_per_period;
    let times: Vec<f64> = (0..=total).map(|j| j as f64 * dt).collect();
    let segs = segments(plan);
    let last_start = (cfg.periods - 1) * cfg.steps_per_period;

    let mut norms = Vec::with_capacity(targets.len());
    let mut costs = Vec::with_capacity(targets.len());
    let mut observed = Vec::with_capacity(targets.len());
    let mut last_period = Vec::with_capacity(targets.len());
    let mut switch_on = Vec::with_capacity(targets.len());
    let mut period_max = vec![vec![0.0_f64; targets.len()]; cfg.periods];

    for (k, &i) in targets.iter().enumerate() {
        let target = &network.targets[i];
        let on_step = Stepper::new(target, true, dt);
        let off_step = Stepper::new(target, false, dt);
        let mut n_i = Vec::with_capacity(times.len());
        let mut c_i = Vec::with_capacity(times.len());
        let mut o_i = Vec::with_capacity(times.len());
        let mut last_i = Vec::with_capacity(cfg.steps_per_period + 1);
        let mut sw_i = Vec::new();
        let mut omega = init[k].clone();
        let mut j = 0;
        let mut record = |w: &Mat, j: usize, obs: bool, pm: &mut Vec<Vec<f64>>| {
            let nv = network.norm.apply(w);
            let cv = target.weight(nv);
            n_i.push(nv);
            c_i.push(cv);
            o_i.push(obs);
            if j >= last_start {
                last_i.push(w.clone());
            }
            let per = (j / cfg.steps_per_period).min(cfg.periods - 1);
            pm[per][k] = pm[per][k].max(cv);
            if j.is_multiple_of(cfg.steps_per_period) && per > 0 {
                pm[per - 1][k] = pm[per - 1][k].max(cv);
            }
        };
        for per in 0..cfg.periods {
            let offset = per as f64 * period;
            for s in &segs {
                let start = offset + s.start;
                let end = start + s.len;
                let obs = s.observed == Some(i);
                if obs {
                    let cv = network.cost(i, &omega);
                    period_max[per][k] = period_max[per][k].max(cv);
                    if per + 1 == cfg.periods {
                        sw_i.push((start, cv));
                    }
                }
                let step = if obs { &on_step } else { &off_step };
                let mut cur: Option<Mat> = None;
                while j < total && times[j] < end {
                    let w = match cur {
                        None => crate::covariance::propagate_phase(
                            target,
                            &omega,
                            obs,
                            (times[j] - start).max(0.0),
                        ),
                        Some(ref prev) => step.apply(prev),
                    };
                    record(&w, j, obs, &mut period_max);
                    cur = Some(w);
                    j += 1;
                }
                omega = if obs {
                    propagate_observed(&omega, &target.a, &target.q, &target.g, s.len)?
                } else {
                    propagate_unobserved(&omega, &target.a, &target.q, s.len)
                };
            }
        }
        // the closing sample belongs to the segment that opens the next period
        let opens_observed = segs.first().is_some_and(|s| s.observed == Some(i));
        while j <= total {
            record(&omega, j, opens_observed, &mut period_max);
            j += 1;
        }
        norms.push(n_i);
        costs.push(c_i);
        observed.push(o_i);
        last_period.push(last_i);
        switch_on.push(sw_i);
    }

    let last = &period_max[cfg.periods - 1];
    let realized_j = last.iter().fold(0.0_f64, |m, v| m.max(*v));
    let rel = |p: &Vec<f64>| {
        p.iter()
            .zip(last)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs() / b.abs().max(1e-300)))
    };
    let converged = rel(&period_max[cfg.periods - 2]) <= 1e-8;
    let mut settle = None;
    for per in (0..cfg.periods).rev() {
        if rel(&period_max[per]) <= 1e-6 {
            settle = Some(per as f64 * period);
        } else {
            break;
        }
    }
    Ok(SimTrace {
        period,
        dt,
        periods: cfg.periods,
        targets,
        times,
        norms,
        costs,
        observed,
        last_period,
        last_start,
        switch_on,
        period_max,
        realized_j,
        converged,
        settle_time: settle,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ValidationConfig {
    /// Accepted relative gap between realised and predicted cost.
    pub rel_tol: f64,
    /// Random directions for the steady-state sandwich check.
    pub directions: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            rel_tol: 1e-4,
            directions: 200,
            seed: 0,
        }
    }
}

/// Where a target's sampled maximum falls relative to its switch-on
/// instants.
#[derive(Clone, Debug, Serialize)]
pub struct PeakTiming {
    pub target: i64,
    pub peak_time: f64,
    pub nearest_switch: f64,
    pub distance: f64,
    pub within_dt: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Equalization {
    pub target: i64,
    pub realized_peak: f64,
    /// `(peak − g_con) / g_con`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichCheck {
    pub checked: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    #[serde(with = "crate::serde_inf")]
    pub j_pred: f64,
    #[serde(with = "crate::serde_inf")]
    pub realized_j: f64,
    #[serde(with = "crate::serde_inf")]
    pub abs_error: f64,
    #[serde(with = "crate::serde_inf")]
    pub rel_error: f64,
    pub rel_tol: f64,
    pub prediction_ok: bool,
    #[serde(with = "crate::serde_inf")]
    pub j_hat: f64,
    pub lower_bound_ok: bool,
    pub peak_timing: Vec<PeakTiming>,
    pub peak_timing_ok: bool,
    pub equalization: Vec<Equalization>,
    pub sandwich: SandwichCheck,
    pub converged: bool,
    pub settle_time: Option<f64>,
    pub passed: bool,
}

/// Lemma-style peak timing: for every target observed for a positive time
/// and left alone for a positive time, the sampled maximum over the last
/// period sits within one `dt` of a switch-on instant.
pub fn peak_timing(trace: &SimTrace, network: &TargetNetwork) -> Vec<PeakTiming> {
    let mut out = Vec::new();
    for (k, &i) in trace.targets.iter().enumerate() {
        let switches: Vec<f64> = trace.switch_on[k].iter().map(|s| s.0).collect();
        let off_any = trace.observed[k][trace.last_start..].iter().any(|o| !o);
        if switches.is_empty() || !off_any {
            continue;
        }
        let (mut best_j, mut best) = (trace.last_start, f64::NEG_INFINITY);
        for j in trace.last_start..trace.times.len() {
            if trace.costs[k][j] > best {
                best = trace.costs[k][j];
                best_j = j;
            }
        }
        let t = trace.times[best_j];
        let (nearest, distance) = switches
            .iter()
            .flat_map(|&s| [s, s + trace.period, s - trace.period])
            .map(|s| (s, (s - t).abs()))
            .fold((f64::NAN, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        out.push(PeakTiming {
            target: network.targets[i].id,
            peak_time: t,
            nearest_switch: nearest,
            distance,
            within_dt: distance <= trace.dt * (1.0 + 1e-9),
        });
    }
    out
}

/// Appendix-style bounds: after settling, every sampled covariance of a
/// target that is both observed and left alone lies strictly between
/// `Ω_ss` and `Ω^∞` (when finite) along random unit directions.
pub fn sandwich_check(
    trace: &SimTrace,
    network: &TargetNetwork,
    steady: &SteadyTable,
    directions: usize,
    seed: u64,
) -> SandwichCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut violations) = (0, 0);
    for (k, &i) in trace.targets.iter().enumerate() {
        let obs = &trace.observed[k][trace.last_start..];
        if !(obs.iter().any(|o| *o) && obs.iter().any(|o| !o)) {
            continue;
        }
        let n = network.targets[i].dim();
        let st = steady.get(i);
        for _ in 0..directions {
            let mut z = nalgebra::DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let norm = z.norm();
            if norm < 1e-12 {
                continue;
            }
            z /= norm;
            let proj = |m: &Mat| (z.transpose() * m * &z)[(0, 0)];
            let lo = proj(&st.omega_ss);
            let hi = st.omega_inf.as_ref().map(proj);
            for w in &trace.last_period[k] {
                let v = proj(w);
                checked += 1;
                if !(v > lo) || hi.is_some_and(|h| !(v < h)) {
                    violations += 1;
                }
            }
        }
    }
    SandwichCheck {
        checked,
        violations,
    }
}

/// Compare a simulation with the plan that produced it.
pub fn validate(
    plan: &Plan,
    trace: &SimTrace,
    network: &TargetNetwork,
    steady: &SteadyTable,
    cfg: &ValidationConfig,
) -> ValidationReport {
    let realized_j = trace.realized_j;
    let abs_error = (realized_j - plan.j_pred).abs();
    let rel_error = abs_error / plan.j_pred.abs().max(1e-300);
    let prediction_ok = rel_error <= cfg.rel_tol;

    let bound = LowerBound::new(network, steady);
    let j_hat = j_hat_with_legs(&bound, &plan.cycle, &plan.legs, &plan.scope()).j_hat;
    let lower_bound_ok = j_hat <= realized_j * (1.0 + 1e-6);

    let timing = peak_timing(trace, network);
    let peak_timing_ok = timing.iter().all(|t| t.within_dt);

    let equalization = trace
        .targets
        .iter()
        .enumerate()
        .filter(|(_, &i)| plan.peak_of(i).is_some_and(|p| p.active))
        .map(|(k, &i)| {
            let peak = trace.last_peak(k);
            Equalization {
                target: network.targets[i].id,
                realized_peak: peak,
                residual: (peak - plan.g_con) / plan.g_con,
            }
        })
        .collect();
    let sandwich = sandwich_check(trace, network, steady, cfg.directions, cfg.seed);
    let passed = prediction_ok && lower_bound_ok && peak_timing_ok && sandwich.violations == 0;
    ValidationReport {
        j_pred: plan.j_pred,
        realized_j,
        abs_error,
        rel_error,
        rel_tol: cfg.rel_tol,
        prediction_ok,
        j_hat,
        lower_bound_ok,
        peak_timing: timing,
        peak_timing_ok,
        equalization,
        sandwich,
        converged: trace.converged,
        settle_time: trace.settle_time,
        passed,
    }
}

/// Write the trace as CSV: `t`, then `norm_<id>`, `g_<id>`, `eta_<id>` for
/// every target.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, network: &TargetNetwork, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for &i in &trace.targets {
        let id = network.targets[i].id;
        header.extend([format!("norm_{id}"), format!("g_{id}"), format!("eta_{id}")]);
    }
    w.write_record(&header).map_err(csv_error)?;
    let mut row = Vec::with_capacity(header.len());
    for (j, t) in trace.times.iter().enumerate() {
        row.clear();
        row.push(t.to_string());
        for k in 0..trace.targets.len() {
            row.push(trace.norms[k][j].to_string());
            row.push(trace.costs[k][j].to_string());
            row.push(u8::from(trace.observed[k][j]).to_string());
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::Region;
    use crate::dwell::{plan_cycle, PlanConfig};
    use crate::cycle::Cycle;
    use crate::model::{Edge, MatrixNorm};

    fn setup() -> (TargetNetwork, SteadyTable) {
        let targets = vec![
            TargetSpec::scalar(1, 0.35, 1.19, 2.31, 1.0).unwrap(),
            TargetSpec::scalar(2, 0.19, 1.26, 7.15, 1.0).unwrap(),
            TargetSpec::scalar(3, -0.8, 0.3, 4.20, 1.0).unwrap(),
        ];
        let edges = vec![
            Edge { i: 0, j: 1, d: 0.3 },
            Edge { i: 1, j: 2, d: 0.2 },
            Edge { i: 0, j: 2, d: 0.4 },
        ];
        let net = TargetNetwork::new(targets, edges, MatrixNorm::Trace).unwrap();
        let st = SteadyTable::new(&net).unwrap();
        (net, st)
    }

    #[test]
    fn planned_start_is_a_fixed_point() {
        let (net, st) = setup();
        let region = Region::full(&net);
        let plan = plan_cycle(&net, &st, &region.sp, &Cycle::new(vec![0, 1]), &[0, 1, 2], &PlanConfig::default())
            .unwrap()
            .plan;
        let cfg = SimConfig {
            periods: 3,
            steps_per_period: 400,
        };
        let tr = simulate(&plan, &net, &st, &InitialState::Planned, &cfg).unwrap();
        for k in 0..2 {
            let want = plan.peak_of(tr.targets[k]).unwrap().peak;
            assert!((tr.period_max[0][k] - want).abs() < 1e-6 * want);
        }
        // never-visited Hurwitz target sits at its Lyapunov limit
        let inf = st.get(2).omega_inf.as_ref().unwrap()[(0, 0)];
        assert!((tr.norms[2].last().unwrap() - inf).abs() < 1e-12);
        assert_eq!(tr.times.len(), 3 * 400 + 1);
    }

    #[test]
    fn csv_has_one_header_and_row_per_sample() {
        let (net, st) = setup();
        let region = Region::full(&net);
        let plan = plan_cycle(&net, &st, &region.sp, &Cycle::new(vec![0, 1]), &[0, 1], &PlanConfig::default())
            .unwrap()
            .plan;
        let cfg = SimConfig {
            periods: 2,
            steps_per_period: 10,
        };
        let tr = simulate(&plan, &net, &st, &InitialState::Planned, &cfg).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&tr, &net, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,norm_1,g_1,eta_1,norm_2,g_2,eta_2");
        assert_eq!(lines.len(), 1 + 21);
    }
}
