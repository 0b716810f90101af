//! Guiding-centre extraction and drift-law fits.
//!
//! Drift speeds are compared in the normalised parametrisation where one
//! quasi-period corresponds to time `2π`: a per-period displacement `D`
//! becomes the normalised speed `D / 2π`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::{integrate, integrate_model, ModelBundleSystem, TangentState, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::curvature::{khat_horizontal_differential, khat_vertical_differential};
use crate::geometry::manifold::{ChartManifold, ChartPoint};
use crate::periods::{detect_period_on, PeriodOptions};

/// Per-period displacements below this are treated as numerical noise
/// (ten times the closure tolerance used for Zoll examples).
pub const DEGENERATE_FLOOR: f64 = 1e-6;

/// Quadrature intervals per averaging window (Simpson, even).
const AVERAGE_INTERVALS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftKind {
    Conformal,
    Curvature,
    Vertical,
}

/// Least-squares fit of `ln D = p ln ε + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRow {
    pub eps: f64,
    /// Measured quasi-period.
    pub period: f64,
    /// Guiding-centre displacement per quasi-period (metric norm).
    pub displacement: f64,
    /// Unit drift direction (chart coordinates, or `R³` for the fibre probe).
    pub direction: Vec<f64>,
    /// Reference field the direction is compared with (`X_{−a}`, `X_{K̂/8}`
    /// or the fibre gradient).
    pub reference: Vec<f64>,
    /// Signed cosine between `direction` and `reference`.
    pub cosine: f64,
    /// Signed cosine against the convention-consistent prediction.
    pub audit_cosine: f64,
    /// Measured over predicted magnitude, when a magnitude prediction exists.
    pub ratio: Option<f64>,
    /// `|cos|` between the direction and `∇K̂` (curvature drift only).
    pub gradient_component: Option<f64>,
    /// Guiding-centre position at the middle of the fit window.
    pub centre: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub kind: DriftKind,
    pub rows: Vec<DriftRow>,
    /// `None` when the drift is degenerate or the ε range is too narrow.
    pub fit: Option<ExponentFit>,
    /// All displacements below [`DEGENERATE_FLOOR`].
    pub degenerate: bool,
    pub min_abs_cosine: f64,
    pub min_audit_cosine: f64,
    pub max_ratio_error: Option<f64>,
    pub max_gradient_component: Option<f64>,
}

impl DriftReport {
    /// Summarises rows measured at different `ε` (fit, extremes).
    pub fn from_rows(kind: DriftKind, rows: Vec<DriftRow>) -> Result<Self> {
        let degenerate = rows.iter().all(|r| r.displacement < DEGENERATE_FLOOR);
        let fit = if degenerate {
            None
        } else {
            let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
            let d: Vec<f64> = rows.iter().map(|r| r.displacement).collect();
            fit_exponent(&eps, &d).ok()
        };
        let finite = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NAN, |a: f64, b| a.max(b));
        let ratio_err = finite(&mut rows.iter().filter_map(|r| r.ratio.map(|x| (x - 1.0).abs())));
        let grad = finite(&mut rows.iter().filter_map(|r| r.gradient_component));
        Ok(Self {
            kind,
            min_abs_cosine: rows.iter().map(|r| r.cosine.abs()).fold(f64::INFINITY, f64::min),
            min_audit_cosine: rows.iter().map(|r| r.audit_cosine).fold(f64::INFINITY, f64::min),
            max_ratio_error: (!ratio_err.is_nan()).then_some(ratio_err),
            max_gradient_component: (!grad.is_nan()).then_some(grad),
            rows,
            fit,
            degenerate,
        })
    }
}

/// Fits `D ∝ ε^p` on a log-log scale. Needs at least four positive samples
/// spanning a factor of four in `ε`.
pub fn fit_exponent(eps: &[f64], d: &[f64]) -> Result<ExponentFit> {
    if eps.len() != d.len() || eps.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 samples, got {}", eps.len())));
    }
    let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 4.0 * (1.0 - 1e-12) {
        return Err(Error::Fit(format!("ε range [{lo}, {hi}] spans less than a factor 4")));
    }
    if d.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Fit("non-positive displacement".into()));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = d.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(ExponentFit { slope, intercept, stderr, r2 })
}

/// A window average of some function of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidingPoint {
    /// Window midpoint.
    pub t: f64,
    pub chart: usize,
    pub value: Vec<f64>,
}

/// Simpson averages of `f(chart, y, target)` over consecutive windows of
/// length `period`. `target` is `chart` when given, else the window's
/// starting chart.
fn window_averages<F>(traj: &Trajectory, period: f64, windows: usize, chart: Option<usize>, f: F) -> Result<Vec<GuidingPoint>>
where
    F: Fn(usize, &[f64], usize) -> Result<Vec<f64>> + Sync,
{
    let t0 = traj.t_start();
    let required = t0 + windows as f64 * period;
    if windows < 3 || traj.t_end() < required - 1e-12 * required.abs() {
        return Err(Error::ShortTrajectory {
            actual: traj.t_end() - t0,
            required: (windows.max(3) as f64) * period,
        });
    }
    (0..windows)
        .into_par_iter()
        .map(|k| {
            let a = t0 + k as f64 * period;
            let chart0 = match chart {
                Some(c) => c,
                None => traj.state_at(a)?.0,
            };
            let h = period / AVERAGE_INTERVALS as f64;
            let mut acc: Option<Vec<f64>> = None;
            for i in 0..=AVERAGE_INTERVALS {
                let t = (a + i as f64 * h).min(traj.t_end());
                let (chart, y) = traj.state_at(t)?;
                let value = f(chart, &y, chart0)?;
                let w = if i == 0 || i == AVERAGE_INTERVALS {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                match acc.as_mut() {
                    None => acc = Some(value.iter().map(|x| x * w).collect()),
                    Some(s) => s.iter_mut().zip(&value).for_each(|(s, x)| *s += w * x),
                }
            }
            let mut value = acc.expect("at least one node");
            let scale = h / 3.0 / period;
            value.iter_mut().for_each(|x| *x *= scale);
            Ok(GuidingPoint { t: a + 0.5 * period, chart: chart0, value })
        })
        .collect()
}

/// One-period sliding averages of the base point, sampled at period
/// midpoints. Needs at least three periods of trajectory. All windows are
/// averaged in the chart the orbit occupies at mid-trajectory, so the
/// points are comparable even when the orbit switched charts.
pub fn guiding_center(m: &ChartManifold, traj: &Trajectory, period: f64) -> Result<Vec<GuidingPoint>> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    let windows = ((traj.t_end() - traj.t_start()) / period + 1e-9).floor() as usize;
    let n = m.dim;
    let mid = traj.t_start() + 0.5 * windows as f64 * period;
    let target = traj.state_at(mid)?.0;
    window_averages(traj, period, windows, Some(target), |chart, y, target| {
        let s = TangentState::from_slice(chart, y, 1.0);
        let mapped = s
            .to_chart(m, target)?
            .ok_or_else(|| Error::ChartTransition { chart, q: y[..n].to_vec() })?;
        Ok(mapped.q.as_slice().to_vec())
    })
}

/// Least-squares slope (per window) and mean of a sequence of points.
fn linear_trend(points: &[GuidingPoint]) -> (Vec<f64>, Vec<f64>) {
    let n = points.len() as f64;
    let dim = points[0].value.len();
    let mk = (n - 1.0) / 2.0;
    let skk: f64 = (0..points.len()).map(|k| (k as f64 - mk).powi(2)).sum();
    let mut slope = vec![0.0; dim];
    let mut mean = vec![0.0; dim];
    for (k, p) in points.iter().enumerate() {
        for j in 0..dim {
            slope[j] += (k as f64 - mk) * p.value[j] / skk;
            mean[j] += p.value[j] / n;
        }
    }
    (slope, mean)
}

fn g_inner(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    DVector::from_row_slice(a).dot(&(g * DVector::from_row_slice(b)))
}

fn cosine(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let na = g_inner(g, a, a).sqrt();
    let nb = g_inner(g, b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    g_inner(g, a, b) / (na * nb)
}

fn unit(g: &DMatrix<f64>, a: &[f64]) -> Vec<f64> {
    let n = g_inner(g, a, a).sqrt();
    if n == 0.0 {
        return vec![0.0; a.len()];
    }
    a.iter().map(|x| x / n).collect()
}

/// Fast-rotation period of the model system: first time the fibre angle has
/// advanced by `2π`.
fn fibre_period(traj: &Trajectory) -> Result<f64> {
    let angle = |y: &[f64]| y[3].atan2(y[2]);
    let mut total = 0.0;
    let mut prev = angle(&traj.samples[0].y);
    for w in traj.samples.windows(2) {
        let a = angle(&w[1].y);
        let mut d = a - prev;
        if d > PI {
            d -= TAU;
        } else if d < -PI {
            d += TAU;
        }
        if total + d >= TAU {
            // bisection on the dense output inside this step
            let (mut lo, mut hi) = (w[0].t, w[1].t);
            let base = total;
            let start = prev;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let (_, y) = traj.state_at(mid)?;
                let mut dm = angle(&y) - start;
                if dm < -PI {
                    dm += TAU;
                } else if dm > PI {
                    dm -= TAU;
                }
                if base + dm >= TAU {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        total += d;
        prev = a;
    }
    Err(Error::ShortTrajectory { actual: traj.t_end() - traj.t_start(), required: f64::NAN })
}

/// Angle-averaged model field at `|v| = ε`: the first-order averaged system.
pub fn averaged_model_drift(s: &ModelBundleSystem, q: [f64; 2], eps: f64) -> [f64; 2] {
    let nodes = 64;
    let mut acc = [0.0; 2];
    for k in 0..nodes {
        let th = TAU * k as f64 / nodes as f64;
        let (qd, _) = crate::dynamics::model_bundle_vector_field(s, &q, &[eps * th.cos(), eps * th.sin()]);
        acc[0] += qd[0] / nodes as f64;
        acc[1] += qd[1] / nodes as f64;
    }
    acc
}

/// Settings shared by the drift experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftOptions {
    /// Number of quasi-periods averaged and fitted.
    pub periods: usize,
    pub tol: f64,
}

impl Default for DriftOptions {
    fn default() -> Self {
        Self { periods: 40, tol: 1e-12 }
    }
}

/// One `ε` of [`conformal_drift_experiment`].
pub fn conformal_drift_row(s: &ModelBundleSystem, q0: [f64; 2], eps: f64, opts: &DriftOptions) -> Result<DriftRow> {
    let a0 = s.factor(&q0).0;
    let horizon = (opts.periods as f64 + 1.0) * TAU / a0 * 1.2;
    let traj = integrate_model(s, q0, [eps, 0.0], horizon, opts.tol)?;
    let period = fibre_period(&traj)?;
    let centres = window_averages(&traj, period, opts.periods, None, |_, y, _| Ok(y[..2].to_vec()))?;
    let (d, centre) = linear_trend(&centres);
    let g = DMatrix::identity(2, 2);
    let q = [centre[0], centre[1]];
    let reference = s.x_minus_a(&q).to_vec();
    let avg = averaged_model_drift(s, q, eps);
    let predicted = [avg[0] * period, avg[1] * period];
    let displacement = g_inner(&g, &d, &d).sqrt();
    let predicted_norm = predicted[0].hypot(predicted[1]);
    Ok(DriftRow {
        eps,
        period,
        displacement,
        direction: unit(&g, &d),
        cosine: cosine(&g, &d, &reference),
        audit_cosine: cosine(&g, &d, &predicted),
        ratio: (predicted_norm > 0.0).then(|| displacement / predicted_norm),
        gradient_component: None,
        reference,
        centre,
    })
}

/// Model-bundle drift `q̇ ≈ ε²·(averaged field)` over an ε sweep.
pub fn conformal_drift_experiment(
    s: &ModelBundleSystem,
    eps_list: &[f64],
    q0: [f64; 2],
    opts: &DriftOptions,
) -> Result<DriftReport> {
    for &e in eps_list {
        if !(e > 0.0 && e <= 0.3) {
            return Err(Error::InvalidArgument(format!("conformal drift needs ε in (0, 0.3], got {e}")));
        }
    }
    let rows = eps_list
        .par_iter()
        .map(|&eps| conformal_drift_row(s, q0, eps, opts))
        .collect::<Result<Vec<_>>>()?;
    DriftReport::from_rows(DriftKind::Conformal, rows)
}

/// Quasi-period as the best closure time near `2π`; drifting orbits do not
/// close exactly, so the no-closure flag is ignored here.
fn quasi_period(m: &ChartManifold, traj: &Trajectory, state: &TangentState, tol: f64) -> Result<f64> {
    let opts = PeriodOptions { integrator_tol: tol, ..PeriodOptions::default() };
    Ok(detect_period_on(m, traj, state, (0.5 * TAU, 1.5 * TAU), &opts)?.period)
}

/// `X^β_f` for the covector `df`, with `ι_X β = −df`: `X = β⁻¹ df`.
pub fn hamiltonian_field(beta: &DMatrix<f64>, df: &DVector<f64>) -> Result<DVector<f64>> {
    beta.clone().lu().solve(df).ok_or(Error::SingularForm)
}

/// One `ε` of [`curvature_drift_experiment`].
pub fn curvature_drift_row(m: &ChartManifold, q0: &ChartPoint, eps: f64, opts: &DriftOptions) -> Result<DriftRow> {
    let dir = m.unitary_frame(q0)?.column(0).into_owned();
    let state = TangentState::with_energy(m, q0.clone(), &dir, eps)?;
    let horizon = (opts.periods as f64 + 1.5) * TAU;
    let traj = integrate(m, &state, horizon, opts.tol)?;
    let period = quasi_period(m, &traj, &state, opts.tol)?;
    let centres = guiding_center(m, &traj, period)?;
    let centres = &centres[..opts.periods.min(centres.len())];
    let (d, centre) = linear_trend(centres);
    let p = ChartPoint::new(centres[centres.len() / 2].chart, centre.clone());
    let g = m.metric(&p);
    let v = m.unitary_frame(&p)?.column(0).into_owned();
    let dk = khat_horizontal_differential(m, &p, &v)?;
    let y_field = hamiltonian_field(&m.magnetic(&p), &(&dk / 8.0))?;
    let reference = y_field.as_slice().to_vec();
    let grad = g.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.solve(&dk);
    let displacement = g_inner(&g, &d, &d).sqrt();
    let y_norm = g_inner(&g, &reference, &reference).sqrt();
    // prediction under ι_X(−β) = −dH: the negative of X^β
    let predicted: Vec<f64> = reference.iter().map(|x| -x).collect();
    Ok(DriftRow {
        eps,
        period,
        displacement,
        direction: unit(&g, &d),
        cosine: cosine(&g, &d, &reference),
        audit_cosine: cosine(&g, &d, &predicted),
        ratio: (y_norm > 0.0).then(|| displacement / (TAU * eps.powi(4) * y_norm)),
        gradient_component: Some(cosine(&g, &d, grad.as_slice()).abs()),
        reference,
        centre,
    })
}

/// ε⁴ guiding-centre drift of the magnetic flow on a Kähler surface.
pub fn curvature_drift_experiment(
    m: &ChartManifold,
    eps_list: &[f64],
    q0: &ChartPoint,
    opts: &DriftOptions,
) -> Result<DriftReport> {
    if m.dim != 2 {
        return Err(Error::InvalidArgument(format!("{} is not a surface", m.name)));
    }
    let rows = eps_list
        .par_iter()
        .map(|&eps| curvature_drift_row(m, q0, eps, opts))
        .collect::<Result<Vec<_>>>()?;
    DriftReport::from_rows(DriftKind::Curvature, rows)
}

/// Complex line of `v` as a point of `S²` (Hopf map of the unitary-frame
/// components).
pub fn complex_line(m: &ChartManifold, p: &ChartPoint, v: &DVector<f64>) -> Result<[f64; 3]> {
    if m.dim != 4 {
        return Err(Error::InvalidArgument("complex line tracking needs dimension 4".into()));
    }
    let frame = m.unitary_frame(p)?;
    let c = frame.lu().solve(v).ok_or(Error::SingularForm)?;
    // z1 = c0 + i c2, z2 = c1 + i c3
    let (a, b, x, y) = (c[0], c[2], c[1], c[3]);
    let n = a * a + b * b + x * x + y * y;
    let re = a * x + b * y;
    let im = b * x - a * y;
    Ok([2.0 * re / n, 2.0 * im / n, (a * a + b * b - x * x - y * y) / n])
}

/// One `ε` of [`vertical_drift_probe`].
pub fn vertical_drift_row(
    m: &ChartManifold,
    q0: &ChartPoint,
    frame_dir: &[f64; 4],
    eps: f64,
    opts: &DriftOptions,
) -> Result<DriftRow> {
    let frame = m.unitary_frame(q0)?;
    let dir = &frame * DVector::from_row_slice(frame_dir);
    let state = TangentState::with_energy(m, q0.clone(), &dir, eps)?;
    let horizon = (opts.periods as f64 + 1.5) * TAU;
    let traj = integrate(m, &state, horizon, opts.tol)?;
    let period = quasi_period(m, &traj, &state, opts.tol)?;
    let windows = (((traj.t_end() - traj.t_start()) / period) as usize).min(opts.periods);
    let n = m.dim;
    let lines = window_averages(&traj, period, windows, None, |chart, y, _| {
        let p = ChartPoint::new(chart, y[..n].to_vec());
        Ok(complex_line(m, &p, &DVector::from_row_slice(&y[n..]))?.to_vec())
    })?;
    let (d, centre) = linear_trend(&lines);
    let e3 = DMatrix::identity(3, 3);
    let v0 = &dir / m.norm(q0, &dir);
    let dv = khat_vertical_differential(m, q0, &v0)?;
    let reference = dv;
    let displacement = g_inner(&e3, &d, &d).sqrt();
    Ok(DriftRow {
        eps,
        period,
        displacement,
        direction: unit(&e3, &d),
        cosine: f64::NAN,
        audit_cosine: f64::NAN,
        ratio: None,
        gradient_component: None,
        reference,
        centre,
    })
}

/// Fibre drift of the complex line `μ(q, v)` on a 4-dimensional almost
/// Kähler manifold, started at frame direction `frame_dir`.
pub fn vertical_drift_probe(
    m: &ChartManifold,
    eps_list: &[f64],
    q0: &ChartPoint,
    frame_dir: [f64; 4],
    opts: &DriftOptions,
) -> Result<DriftReport> {
    let rows = eps_list
        .par_iter()
        .map(|&eps| vertical_drift_row(m, q0, &frame_dir, eps, opts))
        .collect::<Result<Vec<_>>>()?;
    DriftReport::from_rows(DriftKind::Vertical, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builtin;
    use std::collections::BTreeMap;

    #[test]
    fn exponent_fit_recovers_power_law() {
        let eps = [0.05, 0.1, 0.2, 0.4];
        let d: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e.powi(4)).collect();
        let fit = fit_exponent(&eps, &d).unwrap();
        assert!((fit.slope - 4.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.r2 > 1.0 - 1e-12 && fit.stderr < 1e-12);
    }

    #[test]
    fn exponent_fit_rejects_narrow_or_short_ranges() {
        assert!(fit_exponent(&[0.1, 0.12, 0.15, 0.2], &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(fit_exponent(&[0.1, 0.4, 0.8], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_exponent(&[0.1, 0.2, 0.3, 0.4], &[1.0, 0.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn guiding_center_needs_three_periods() {
        let m = builtin("round-sphere", &BTreeMap::new()).unwrap();
        let p = m.sample_center();
        let v = m.unitary_frame(&p).unwrap().column(0).into_owned();
        let s = TangentState::with_energy(&m, p, &v, 0.2).unwrap();
        let traj = integrate(&m, &s, 2.5 * TAU, 1e-10).unwrap();
        assert!(matches!(guiding_center(&m, &traj, TAU), Err(Error::ShortTrajectory { .. })));
        assert!(guiding_center(&m, &traj, 0.5 * TAU).is_ok());
    }

    #[test]
    fn model_drift_is_quadratic_and_matches_averaging() {
        let s = ModelBundleSystem::sinusoidal(0.3);
        let opts = DriftOptions { periods: 8, tol: 1e-11 };
        let r = conformal_drift_experiment(&s, &[0.05, 0.1, 0.2], [0.0, 0.0], &opts).unwrap();
        for row in &r.rows {
            assert!((row.ratio.unwrap() - 1.0).abs() < 1e-6, "{row:?}");
            assert!(row.cosine < -0.999 && row.audit_cosine > 0.999);
        }
        let d: Vec<f64> = r.rows.iter().map(|r| r.displacement).collect();
        assert!((d[1] / d[0] - 4.0).abs() < 1e-6 && (d[2] / d[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn constant_factor_is_degenerate() {
        let s = ModelBundleSystem::constant(1.0);
        let opts = DriftOptions { periods: 4, tol: 1e-11 };
        let r = conformal_drift_experiment(&s, &[0.05, 0.1, 0.2], [0.0, 0.0], &opts).unwrap();
        assert!(r.degenerate && r.fit.is_none());
    }

    #[test]
    fn complex_line_is_j_invariant() {
        let m = builtin("kodaira-thurston", &BTreeMap::new()).unwrap();
        let p = ChartPoint::new(0, vec![0.3, -0.2, 0.5, 0.1]);
        let v = DVector::from_row_slice(&[0.3, 1.0, -0.4, 0.2]);
        let j = m.acs(&p).unwrap();
        let a = complex_line(&m, &p, &v).unwrap();
        let rotated = &v * 0.7f64.cos() + &j * &v * 0.7f64.sin();
        let b = complex_line(&m, &p, &rotated).unwrap();
        assert!((a[0] * a[0] + a[1] * a[1] + a[2] * a[2] - 1.0).abs() < 1e-12);
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }
}
