//! Orbit closure detection, period estimation and Zoll-defect measurement.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::dynamics::{integrate, FlowSystem, MagneticSystem, TangentState, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::manifold::{ChartManifold, ChartPoint};
use crate::sampling::Halton;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOptions {
    pub integrator_tol: f64,
    /// Stopping tolerance on the period.
    pub refine_tol: f64,
    /// Coarse-scan resolution over the window.
    pub scan_points: usize,
    /// Minimum weighted distance above which an orbit counts as not closed.
    pub reject_threshold: f64,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        Self { integrator_tol: 1e-12, refine_tol: 1e-12, scan_points: 4000, reject_threshold: 0.1 }
    }
}

/// Outcome of [`detect_period`]. `closed == false` is the "no closure"
/// verdict: `period`/`defect` then describe the best candidate found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEstimate {
    pub period: f64,
    pub defect: f64,
    pub iterations: usize,
    pub closed: bool,
}

/// Default search window `(0.5, 1.5)·T_guess`.
pub fn default_window(t_guess: f64) -> (f64, f64) {
    (0.5 * t_guess, 1.5 * t_guess)
}

/// Weighted phase-space offset between an orbit and its initial state.
struct Closure<'a> {
    m: &'a ChartManifold,
    traj: &'a Trajectory,
    initial: &'a TangentState,
}

impl Closure<'_> {
    /// Whitened residual `(Lᵀ Δq, Lᵀ Δv / ε)` with `g₀ = L Lᵀ`, plus the
    /// whitened flow vector at the same time.
    fn residual(&self, t: f64) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let n = self.m.dim;
        let (chart, y) = self.traj.state_at(t)?;
        let Some(start) = self.initial.to_chart(self.m, chart)? else {
            return Ok(None);
        };
        let g0 = self.m.metric(&start.point());
        let l = g0.cholesky().ok_or(Error::NotPositiveDefinite)?.l();
        let q = DVector::from_row_slice(&y[..n]);
        let v = DVector::from_row_slice(&y[n..]);
        let dq = self.m.chart(chart)?.difference(&q, &start.q);
        let dv = v - &start.v;
        let eps = self.initial.energy;
        let mut f = vec![0.0; 2 * n];
        MagneticSystem::new(self.m).rhs(chart, &y, &mut f)?;
        let fq = DVector::from_row_slice(&f[..n]);
        let fv = DVector::from_row_slice(&f[n..]);
        let lt = l.transpose();
        let r: Vec<f64> = (&lt * dq).iter().chain((&lt * dv / eps).iter()).copied().collect();
        let w: Vec<f64> = (&lt * fq).iter().chain((&lt * fv / eps).iter()).copied().collect();
        Ok(Some((r, w)))
    }

    fn distance(&self, t: f64) -> Result<f64> {
        Ok(match self.residual(t)? {
            Some((r, _)) => r.iter().map(|x| x * x).sum::<f64>().sqrt(),
            None => f64::INFINITY,
        })
    }
}

/// Weighted closure distance `d(t)` between the orbit at time `t` and its
/// initial state: `d² = g₀(Δq,Δq) + g₀(Δv,Δv)/ε²`, periodic axes wrapped.
pub fn closure_distance(
    m: &ChartManifold,
    traj: &Trajectory,
    initial: &TangentState,
    t: f64,
) -> Result<f64> {
    Closure { m, traj, initial }.distance(t)
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn refine(c: &Closure<'_>, lo: f64, hi: f64, opts: &PeriodOptions) -> Result<(f64, f64, usize)> {
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = c.distance(x1)?;
    let mut f2 = c.distance(x2)?;
    let mut iterations = 0;
    while (b - a) > 1e-7 * hi.abs().max(1.0) && iterations < 200 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = c.distance(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = c.distance(x2)?;
        }
        iterations += 1;
    }
    let mut t = if f1 < f2 { x1 } else { x2 };
    // Gauss-Newton on |r(t)|²
    for _ in 0..20 {
        let Some((r, w)) = c.residual(t)? else { break };
        let ww: f64 = w.iter().map(|x| x * x).sum();
        if ww == 0.0 {
            break;
        }
        let rw: f64 = r.iter().zip(&w).map(|(a, b)| a * b).sum();
        let dt = -rw / ww;
        let next = (t + dt).clamp(lo.min(hi), lo.max(hi));
        iterations += 1;
        let step = (next - t).abs();
        t = next;
        if step < opts.refine_tol * t.abs().max(1.0) {
            break;
        }
    }
    Ok((t, c.distance(t)?, iterations))
}

/// Minimises the closure distance over `window` on an existing trajectory.
pub fn detect_period_on(
    m: &ChartManifold,
    traj: &Trajectory,
    initial: &TangentState,
    window: (f64, f64),
    opts: &PeriodOptions,
) -> Result<PeriodEstimate> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("invalid window ({lo}, {hi})")));
    }
    if traj.t_end() < hi {
        return Err(Error::ShortTrajectory { actual: traj.t_end(), required: hi });
    }
    let c = Closure { m, traj, initial };
    let n = opts.scan_points.max(16);
    let nodes: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let values = nodes.iter().map(|&t| c.distance(t)).collect::<Result<Vec<_>>>()?;
    let mut minima: Vec<usize> = (0..=n)
        .filter(|&i| {
            let left = i == 0 || values[i] <= values[i - 1];
            let right = i == n || values[i] <= values[i + 1];
            left && right && values[i].is_finite()
        })
        .collect();
    minima.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    minima.truncate(3);
    let mut best: Option<(f64, f64, usize)> = None;
    for i in minima {
        let a = nodes[i.saturating_sub(1)];
        let b = nodes[(i + 1).min(n)];
        let cand = refine(&c, a, b, opts)?;
        if best.is_none_or(|b| cand.1 < b.1) {
            best = Some(cand);
        }
    }
    let (period, defect, iterations) =
        best.ok_or_else(|| Error::Fit("closure distance undefined on the window".into()))?;
    Ok(PeriodEstimate { period, defect, iterations, closed: defect <= opts.reject_threshold })
}

/// Integrates `state` past the window and returns the best closure time.
pub fn detect_period(
    m: &ChartManifold,
    state: &TangentState,
    t_guess: f64,
    window: (f64, f64),
    opts: &PeriodOptions,
) -> Result<PeriodEstimate> {
    if !(t_guess > 0.0) {
        return Err(Error::InvalidArgument(format!("T_guess must be positive, got {t_guess}")));
    }
    let (lo, hi) = window;
    if lo < 0.5 * t_guess * (1.0 - 1e-12) || hi > 1.5 * t_guess * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "window ({lo}, {hi}) must lie within (0.5, 1.5)·T_guess = ({}, {})",
            0.5 * t_guess,
            1.5 * t_guess
        )));
    }
    let traj = integrate(m, state, hi, opts.integrator_tol)?;
    detect_period_on(m, &traj, state, window, opts)
}

/// Seeded low-discrepancy initial conditions on the energy-`ε` sphere bundle
/// over the manifold's sampling region.
pub fn sample_states(m: &ChartManifold, eps: f64, count: usize, seed: u64) -> Result<Vec<TangentState>> {
    let n = m.dim;
    let fibre = match n {
        2 => 1,
        4 => 3,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "sphere-bundle sampling is implemented for dim 2 and 4, not {n}"
            )))
        }
    };
    let halton = Halton::new(n + fibre, seed);
    let region = &m.sampling;
    (0..count)
        .map(|i| {
            let u = halton.point(i as u64);
            let q: Vec<f64> = (0..n)
                .map(|k| region.lower[k] + u[k] * (region.upper[k] - region.lower[k]))
                .collect();
            let p = ChartPoint::new(region.chart, q);
            let frame = m.unitary_frame(&p)?;
            // frame columns (e_1..e_m, Je_1..Je_m)
            let coeffs = if n == 2 {
                let a = TAU * u[2];
                vec![a.cos(), a.sin()]
            } else {
                let eta = u[n].sqrt().asin();
                let (x1, x2) = (TAU * u[n + 1], TAU * u[n + 2]);
                vec![eta.cos() * x1.cos(), eta.sin() * x2.cos(), eta.cos() * x1.sin(), eta.sin() * x2.sin()]
            };
            let dir = frame * DVector::from_vec(coeffs);
            TangentState::with_energy(m, p, &dir, eps)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRow {
    pub orbit: usize,
    pub initial: TangentState,
    pub period: f64,
    pub defect: f64,
    pub iterations: usize,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodReport {
    pub eps: f64,
    pub rows: Vec<PeriodRow>,
    pub t_min: f64,
    pub t_max: f64,
    /// `T_max − T_min`, or the window width if some orbit did not close.
    pub zoll_defect: f64,
    pub all_closed: bool,
    pub window: (f64, f64),
    pub max_closure_defect: f64,
}

/// Period estimate for one seeded orbit.
pub fn period_row(
    m: &ChartManifold,
    orbit: usize,
    initial: TangentState,
    t_guess: f64,
    opts: &PeriodOptions,
) -> Result<PeriodRow> {
    let est = detect_period(m, &initial, t_guess, default_window(t_guess), opts)?;
    Ok(PeriodRow {
        orbit,
        initial,
        period: est.period,
        defect: est.defect,
        iterations: est.iterations,
        closed: est.closed,
    })
}

impl PeriodReport {
    /// Aggregates per-orbit rows measured with the default window around
    /// `t_guess`.
    pub fn from_rows(eps: f64, rows: Vec<PeriodRow>, t_guess: f64) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidArgument("zoll_defect needs at least 2 orbits".into()));
        }
        let window = default_window(t_guess);
        let t_min = rows.iter().map(|r| r.period).fold(f64::INFINITY, f64::min);
        let t_max = rows.iter().map(|r| r.period).fold(f64::NEG_INFINITY, f64::max);
        let all_closed = rows.iter().all(|r| r.closed);
        let max_closure_defect = rows.iter().map(|r| r.defect).fold(0.0, f64::max);
        let zoll_defect = if all_closed { t_max - t_min } else { window.1 - window.0 };
        Ok(Self { eps, rows, t_min, t_max, zoll_defect, all_closed, window, max_closure_defect })
    }
}

/// Period statistics over `n_orbits` seeded orbits at energy `ε`.
pub fn zoll_defect(
    m: &ChartManifold,
    eps: f64,
    n_orbits: usize,
    seed: u64,
    t_guess: f64,
    opts: &PeriodOptions,
) -> Result<PeriodReport> {
    if n_orbits < 2 {
        return Err(Error::InvalidArgument("zoll_defect needs at least 2 orbits".into()));
    }
    let states = sample_states(m, eps, n_orbits, seed)?;
    let rows = states
        .into_par_iter()
        .enumerate()
        .map(|(orbit, initial)| period_row(m, orbit, initial, t_guess, opts))
        .collect::<Result<Vec<_>>>()?;
    PeriodReport::from_rows(eps, rows, t_guess)
}

/// `2π/√(1 + κε²)`.
pub fn space_form_period(kappa: f64, eps: f64) -> f64 {
    TAU / (1.0 + kappa * eps * eps).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodLawRow {
    pub eps: f64,
    pub measured: f64,
    pub predicted: f64,
    pub rel_err: f64,
    pub defect: f64,
}

/// Start of the period-law orbit at energy `ε`: the sampling centre, first
/// unitary frame direction.
pub fn period_law_initial(m: &ChartManifold, eps: f64) -> Result<TangentState> {
    let p = m.sample_center();
    let dir = m.unitary_frame(&p)?.column(0).into_owned();
    TangentState::with_energy(m, p, &dir, eps)
}

/// Measured versus predicted periods on a space form, one orbit per `ε`.
pub fn period_law_scan(
    m: &ChartManifold,
    kappa: f64,
    eps_list: &[f64],
    opts: &PeriodOptions,
) -> Result<Vec<PeriodLawRow>> {
    match m.space_form_curvature {
        Some(k) if (k - kappa).abs() < 1e-12 => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{} is not a space form of curvature {kappa}",
                m.name
            )))
        }
    }
    eps_list
        .par_iter()
        .map(|&eps| {
            if !(eps > 0.0) || (kappa < 0.0 && eps * eps * -kappa >= 1.0) {
                return Err(Error::InvalidArgument(format!("ε = {eps} out of range for κ = {kappa}")));
            }
            let predicted = space_form_period(kappa, eps);
            let state = period_law_initial(m, eps)?;
            let est = detect_period(m, &state, predicted, default_window(predicted), opts)?;
            if !est.closed {
                return Err(Error::Fit(format!("orbit at ε = {eps} did not close (defect {:e})", est.defect)));
            }
            Ok(PeriodLawRow {
                eps,
                measured: est.period,
                predicted,
                rel_err: (est.period - predicted).abs() / predicted,
                defect: est.defect,
            })
        })
        .collect()
}
