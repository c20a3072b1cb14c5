use serde::Serialize;

use super::balance::{balance_from, equal_shares, DwellConfig, DwellState};
use super::schedule::Schedule;
use crate::error::{Error, Result};

/// Stopping rule of the period search.
#[derive(Clone, Copy, Debug)]
pub struct GoldenConfig {
    /// Stop once `|g_con(T₂) − g_con(T₁)|` is below this fraction of the
    /// smaller value...
    pub eps_rel: f64,
    /// ...and the bracket is narrower than this fraction of its upper end.
    pub width_rel: f64,
    pub max_iters: usize,
}

impl Default for GoldenConfig {
    fn default() -> Self {
        GoldenConfig {
            eps_rel: 1e-6,
            width_rel: 1e-4,
            max_iters: 200,
        }
    }
}

/// One evaluation of the balanced peak.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Probe {
    pub period: f64,
    pub g_con: f64,
    /// `[T_min, T_max]` when the probe was made.
    pub bracket: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct PeriodSearch {
    pub period: f64,
    pub state: DwellState,
    pub probes: Vec<Probe>,
    pub iterations: usize,
}

/// Balanced peak `g_con(T)` with warm starts: each probe begins from the
/// previous probe's dwells, rescaled to the new dwell budget.
pub struct GCon<'s, 'a> {
    schedule: &'s Schedule<'a>,
    cfg: DwellConfig,
    warm: Option<Vec<f64>>,
}

impl<'s, 'a> GCon<'s, 'a> {
    pub fn new(schedule: &'s Schedule<'a>, cfg: &DwellConfig) -> Self {
        GCon {
            schedule,
            cfg: *cfg,
            warm: None,
        }
    }

    pub fn eval(&mut self, period: f64) -> Result<DwellState> {
        let init = self
            .warm
            .clone()
            .unwrap_or_else(|| equal_shares(self.schedule, period));
        let state = balance_from(self.schedule, period, &init, &self.cfg)?;
        self.warm = Some(state.dwells.clone());
        Ok(state)
    }
}

/// Golden-section search for the period minimising the balanced peak on
/// `[t_min, t_max]`.
pub fn golden_period_search(
    schedule: &Schedule,
    t_min: f64,
    t_max: f64,
    dwell: &DwellConfig,
    cfg: &GoldenConfig,
) -> Result<PeriodSearch> {
    let travel = schedule.travel_time();
    if !(t_min > travel && t_max >= t_min && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "period bracket [{t_min}, {t_max}] must lie above the travel time {travel}"
        )));
    }
    let mut f = GCon::new(schedule, dwell);
    let mut probes = Vec::new();
    if t_max == t_min {
        let state = f.eval(t_min)?;
        probes.push(Probe {
            period: t_min,
            g_con: state.g_avg,
            bracket: [t_min, t_max],
        });
        return Ok(PeriodSearch {
            period: t_min,
            state,
            probes,
            iterations: 0,
        });
    }

    let r = (1.0 + 5f64.sqrt()) / 2.0;
    let (mut lo, mut hi) = (t_min, t_max);
    let mut t1 = hi - (hi - lo) / r;
    let mut t2 = lo + (hi - lo) / r;
    let probe = |f: &mut GCon, t: f64, lo: f64, hi: f64, probes: &mut Vec<Probe>| {
        f.eval(t).map(|s| {
            probes.push(Probe {
                period: t,
                g_con: s.g_avg,
                bracket: [lo, hi],
            });
            s.g_avg
        })
    };
    let mut g1 = probe(&mut f, t1, lo, hi, &mut probes)?;
    let mut g2 = probe(&mut f, t2, lo, hi, &mut probes)?;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let flat = (g2 - g1).abs() < cfg.eps_rel * g1.min(g2);
        if flat && hi - lo <= cfg.width_rel * hi {
            break;
        }
        iterations += 1;
        if g2 > g1 {
            hi = t2;
            t2 = t1;
            g2 = g1;
            t1 = hi - (hi - lo) / r;
            g1 = probe(&mut f, t1, lo, hi, &mut probes)?;
        } else {
            lo = t1;
            t1 = t2;
            g1 = g2;
            t2 = lo + (hi - lo) / r;
            g2 = probe(&mut f, t2, lo, hi, &mut probes)?;
        }
    }
    let period = 0.5 * (t1 + t2);
    let state = f.eval(period)?;
    probes.push(Probe {
        period,
        g_con: state.g_avg,
        bracket: [lo, hi],
    });
    Ok(PeriodSearch {
        period,
        state,
        probes,
        iterations,
    })
}
