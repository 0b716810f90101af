//! Adaptive Dormand–Prince 8(5,3) integrator with 7th-order dense output and
//! chart switching between accepted steps.

use super::tableau::{A, B, D, E3, E5, INTERPOLATOR_POWER, N_STAGES, N_STAGES_EXTENDED};
use crate::error::{Error, Result};

/// Result of a chart check after an accepted step.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartCheck {
    Stay,
    Switch { chart: usize, y: Vec<f64> },
}

/// An autonomous first-order system on chart coordinates.
pub trait FlowSystem: Sync {
    /// Length of the state vector.
    fn dim(&self) -> usize;

    fn rhs(&self, chart: usize, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Conserved quantity monitored for drift.
    fn invariant(&self, chart: usize, y: &[f64]) -> f64;

    /// Called after every accepted step.
    fn check_chart(&self, _chart: usize, _y: &[f64]) -> Result<ChartCheck> {
        Ok(ChartCheck::Stay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub first_step: Option<f64>,
    pub max_steps: usize,
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, first_step: None, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub chart_switches: usize,
    /// `max |I(t) − I(0)| / |I(0)|` over accepted steps.
    pub max_invariant_drift: f64,
}

/// One accepted step with its interpolation polynomial.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t: f64,
    pub h: f64,
    pub chart: usize,
    y: Vec<f64>,
    coeffs: Vec<f64>,
}

impl DenseStep {
    /// Interpolated state at `t`, which must lie within the step.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.y.len();
        let x = (t - self.t) / self.h;
        let mut out = vec![0.0; n];
        for (i, row) in self.coeffs.chunks(n).rev().enumerate() {
            let w = if i % 2 == 0 { x } else { 1.0 - x };
            for (o, c) in out.iter_mut().zip(row) {
                *o = (*o + c) * w;
            }
        }
        for (o, y) in out.iter_mut().zip(&self.y) {
            *o += y;
        }
        out
    }

    pub fn start(&self) -> &[f64] {
        &self.y
    }
}

/// A sampled state.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub chart: usize,
    pub y: Vec<f64>,
}

/// Output of [`integrate_system`]: accepted-step samples plus dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub steps: Vec<DenseStep>,
    pub stats: IntegratorStats,
    pub invariant0: f64,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().expect("non-empty").t
    }

    pub fn initial(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("non-empty")
    }

    fn forward(&self) -> bool {
        self.t_end() >= self.t_start()
    }

    /// Dense-output state `(chart, y)` at time `t`.
    pub fn state_at(&self, t: f64) -> Result<(usize, Vec<f64>)> {
        let (lo, hi) = if self.forward() {
            (self.t_start(), self.t_end())
        } else {
            (self.t_end(), self.t_start())
        };
        if !(lo..=hi).contains(&t) {
            return Err(Error::OutOfRange { t, start: self.t_start(), end: self.t_end() });
        }
        if self.steps.is_empty() {
            let s = self.initial();
            return Ok((s.chart, s.y.clone()));
        }
        let sign = if self.forward() { 1.0 } else { -1.0 };
        // first step whose end lies at or beyond t
        let idx = self.steps.partition_point(|s| sign * (s.t + s.h) < sign * t);
        let step = &self.steps[idx.min(self.steps.len() - 1)];
        Ok((step.chart, step.eval(t)))
    }
}

fn norm_error(
    k: &[Vec<f64>],
    h: f64,
    y: &[f64],
    y_new: &[f64],
    rtol: f64,
    atol: f64,
) -> f64 {
    let n = y.len();
    let mut err5 = 0.0;
    let mut err3 = 0.0;
    for i in 0..n {
        let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for (s, ks) in k.iter().enumerate().take(N_STAGES + 1) {
            e5 += E5[s] * ks[i];
            e3 += E3[s] * ks[i];
        }
        err5 += (e5 / scale).powi(2);
        err3 += (e3 / scale).powi(2);
    }
    if err5 == 0.0 && err3 == 0.0 {
        return 0.0;
    }
    let denom = err5 + 0.01 * err3;
    h.abs() * err5 / (denom * n as f64).sqrt()
}

struct Workspace {
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    evaluations: usize,
}

impl Workspace {
    fn stage<S: FlowSystem>(
        &mut self,
        sys: &S,
        chart: usize,
        y: &[f64],
        h: f64,
        s: usize,
    ) -> Result<()> {
        let n = y.len();
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in self.k.iter().enumerate().take(s) {
                acc += A[s][j] * kj[i];
            }
            self.tmp[i] = y[i] + h * acc;
        }
        sys.rhs(chart, &self.tmp, &mut self.k[s])?;
        self.evaluations += 1;
        Ok(())
    }

    /// One DOP853 step from `y` (with `k[0] = f(y)` already set); leaves
    /// `y_new` and `k[N_STAGES] = f(y_new)` in place.
    fn step<S: FlowSystem>(&mut self, sys: &S, chart: usize, y: &[f64], h: f64) -> Result<()> {
        let n = y.len();
        for s in 1..N_STAGES {
            self.stage(sys, chart, y, h, s)?;
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (s, ks) in self.k.iter().enumerate().take(N_STAGES) {
                acc += B[s] * ks[i];
            }
            self.y_new[i] = y[i] + h * acc;
        }
        sys.rhs(chart, &self.y_new, &mut self.k[N_STAGES])?;
        self.evaluations += 1;
        Ok(())
    }

    fn dense<S: FlowSystem>(&mut self, sys: &S, chart: usize, y: &[f64], h: f64) -> Result<Vec<f64>> {
        let n = y.len();
        for s in (N_STAGES + 1)..N_STAGES_EXTENDED {
            self.stage(sys, chart, y, h, s)?;
        }
        let mut coeffs = vec![0.0; INTERPOLATOR_POWER * n];
        let f_old = &self.k[0];
        let f_new = &self.k[N_STAGES];
        for i in 0..n {
            let dy = self.y_new[i] - y[i];
            coeffs[i] = dy;
            coeffs[n + i] = h * f_old[i] - dy;
            coeffs[2 * n + i] = 2.0 * dy - h * (f_new[i] + f_old[i]);
            for (r, drow) in D.iter().enumerate() {
                let mut acc = 0.0;
                for (s, ks) in self.k.iter().enumerate() {
                    acc += drow[s] * ks[i];
                }
                coeffs[(3 + r) * n + i] = h * acc;
            }
        }
        Ok(coeffs)
    }
}

fn initial_step<S: FlowSystem>(
    sys: &S,
    chart: usize,
    y: &[f64],
    f: &[f64],
    direction: f64,
    opts: &IntegratorOptions,
) -> Result<f64> {
    let n = y.len();
    let scale: Vec<f64> = y.iter().map(|v| opts.atol + v.abs() * opts.rtol).collect();
    let rms = |v: &[f64]| {
        (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(f);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f).map(|(a, b)| a + h0 * direction * b).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(chart, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (1e-6_f64).max(h0 * 1e-3)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    Ok((100.0 * h0).min(h1))
}

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

/// Integrates `sys` from `(t0, y0)` in `chart` to `t_end` (which may lie
/// before `t0`).
pub fn integrate_system<S: FlowSystem>(
    sys: &S,
    chart: usize,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let n = sys.dim();
    assert_eq!(y0.len(), n, "state length mismatch");
    let direction = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut ws = Workspace {
        k: vec![vec![0.0; n]; N_STAGES_EXTENDED],
        tmp: vec![0.0; n],
        y_new: vec![0.0; n],
        evaluations: 0,
    };
    let mut chart = chart;
    let mut y = y0.to_vec();
    let mut t = t0;
    sys.rhs(chart, &y, &mut ws.k[0])?;
    ws.evaluations += 1;
    let invariant0 = sys.invariant(chart, &y);
    let mut traj = Trajectory {
        samples: vec![Sample { t, chart, y: y.clone() }],
        steps: Vec::new(),
        stats: IntegratorStats::default(),
        invariant0,
    };
    if t_end == t0 {
        return Ok(traj);
    }
    let mut h = match opts.first_step {
        Some(h) => h.abs(),
        None => initial_step(sys, chart, &y, &ws.k[0], direction, opts)?,
    };
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;
    loop {
        let remaining = (t_end - t) * direction;
        if remaining <= 0.0 {
            break;
        }
        let min_step = 10.0 * f64::EPSILON * t.abs().max(1.0);
        if h < min_step {
            return Err(Error::StepUnderflow { t, step: h });
        }
        if traj.stats.steps + traj.stats.rejected >= opts.max_steps {
            return Err(Error::StepUnderflow { t, step: h });
        }
        let last = h >= remaining;
        let h_try = if last { remaining } else { h };
        let hs = h_try * direction;
        ws.step(sys, chart, &y, hs)?;
        let err = norm_error(&ws.k, hs, &y, &ws.y_new, opts.rtol, opts.atol);
        let fac11 = err.powf(1.0 / 8.0 - 0.2 * BETA);
        if err <= 1.0 {
            let coeffs = ws.dense(sys, chart, &y, hs)?;
            traj.steps.push(DenseStep { t, h: hs, chart, y: y.clone(), coeffs });
            t = if last { t_end } else { t + hs };
            y.copy_from_slice(&ws.y_new);
            let f_new = ws.k[N_STAGES].clone();
            ws.k[0] = f_new;
            traj.stats.steps += 1;
            let drift = (sys.invariant(chart, &y) - invariant0).abs() / invariant0.abs().max(1e-300);
            traj.stats.max_invariant_drift = traj.stats.max_invariant_drift.max(drift);
            if let ChartCheck::Switch { chart: c, y: mapped } = sys.check_chart(chart, &y)? {
                chart = c;
                y = mapped;
                sys.rhs(chart, &y, &mut ws.k[0])?;
                ws.evaluations += 1;
                traj.stats.chart_switches += 1;
            }
            traj.samples.push(Sample { t, chart, y: y.clone() });
            let mut fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            if rejected_last {
                fac = fac.max(1.0);
            }
            fac_old = err.max(1e-4);
            h = h_try / fac;
            rejected_last = false;
        } else {
            h = h_try / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            traj.stats.rejected += 1;
            rejected_last = true;
        }
    }
    traj.stats.evaluations = ws.evaluations;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;

    impl FlowSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _: usize, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = -y[1];
            dy[1] = y[0];
            Ok(())
        }
        fn invariant(&self, _: usize, y: &[f64]) -> f64 {
            y[0].hypot(y[1])
        }
    }

    #[test]
    fn harmonic_oscillator_and_dense_output() {
        let opts = IntegratorOptions::with_tol(1e-12);
        let traj = integrate_system(&Oscillator, 0, &[1.0, 0.0], 0.0, 10.0, &opts).unwrap();
        let last = traj.last();
        assert!((last.y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((last.y[1] - 10f64.sin()).abs() < 1e-10);
        for &t in &[0.0, 0.123, 3.3, 7.77, 10.0] {
            let (_, y) = traj.state_at(t).unwrap();
            assert!((y[0] - t.cos()).abs() < 1e-10, "t={t}");
            assert!((y[1] - t.sin()).abs() < 1e-10);
        }
        assert!(traj.state_at(10.5).is_err());
    }

    #[test]
    fn convergence_order_is_high() {
        // global error should fall by far more than the tolerance ratio to the 1/8 power
        let err = |tol: f64| {
            let opts = IntegratorOptions::with_tol(tol);
            let traj = integrate_system(&Oscillator, 0, &[1.0, 0.0], 0.0, 20.0, &opts).unwrap();
            let y = &traj.last().y;
            let e = (y[0] - 20f64.cos()).hypot(y[1] - 20f64.sin());
            (e, traj.stats.steps)
        };
        let (e1, n1) = err(1e-7);
        let (e2, n2) = err(1e-11);
        assert!(e2 < e1);
        let order = (e1 / e2).ln() / (n2 as f64 / n1 as f64).ln();
        assert!(order > 6.0, "observed order {order}");
    }

    #[test]
    fn backward_integration() {
        let opts = IntegratorOptions::with_tol(1e-12);
        let traj = integrate_system(&Oscillator, 0, &[1.0, 0.0], 0.0, -4.0, &opts).unwrap();
        let y = &traj.last().y;
        assert!((y[0] - 4f64.cos()).abs() < 1e-10);
        assert!((y[1] + 4f64.sin()).abs() < 1e-10);
        let (_, mid) = traj.state_at(-2.5).unwrap();
        assert!((mid[1] + 2.5f64.sin()).abs() < 1e-10);
    }
}
