//! Scenario execution, acceptance rules and file output.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ConfigError, ResolvedConfig};
use super::table::{join_floats, Cell, Column, ResultTable};
use super::{scenario_info, SCHEMA_VERSION};
use crate::drift::{
    conformal_drift_row, curvature_drift_row, vertical_drift_row, DriftKind, DriftOptions,
    DriftReport, DriftRow,
};
use crate::dynamics::{ModelBundleSystem, TangentState};
use crate::error::Error;
use crate::geometry::builtin::MANIFOLD_INFO;
use crate::geometry::curvature::{chern_audit, khat, khat_fiber_spread};
use crate::geometry::manifold::{ChartManifold, ChartPoint};
use crate::geometry::z0::verify_z0_identity;
use crate::periods::{
    detect_period, default_window, period_law_initial, period_row, sample_states,
    space_form_period, PeriodOptions, PeriodReport,
};
use crate::sampling::{rng, Halton};
use crate::spectral::{
    build_spectral, check_period_set, constructed_cases, parse_matrix_file, random_instance,
    sigma_min_dim, LinearFlowClass, SpectralData,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RULE_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Closure defect accepted for a periodic orbit.
const CLOSURE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(ConfigError),
    /// A numerical failure; `dump` holds the state needed for replay.
    Numerical { message: String, dump: Value },
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Numerical { .. } => EXIT_NUMERICAL,
            Self::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Numerical { message, .. } => write!(f, "numerical failure: {message}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

fn numerical(e: Error, dump: Value) -> RunError {
    RunError::Numerical { message: e.to_string(), dump }
}

fn state_dump(cfg: &ResolvedConfig, eps: f64, orbit: usize, s: &TangentState) -> Value {
    json!({
        "scenario": cfg.scenario,
        "manifold": cfg.manifold,
        "params": cfg.params,
        "eps": eps,
        "orbit": orbit,
        "chart": s.chart,
        "q": s.q.as_slice(),
        "v": s.v.as_slice(),
        "tol": cfg.tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleVerdict {
    pub id: String,
    pub description: String,
    pub value: Option<f64>,
    pub threshold: String,
    pub pass: bool,
}

fn rule(id: &str, description: &str, value: f64, threshold: &str, pass: bool) -> RuleVerdict {
    RuleVerdict {
        id: id.to_string(),
        description: description.to_string(),
        value: value.is_finite().then_some(value),
        threshold: threshold.to_string(),
        pass,
    }
}

fn below(id: &str, description: &str, value: f64, limit: f64) -> RuleVerdict {
    rule(id, description, value, &format!("< {limit:e}"), value < limit)
}

/// Verdicts and derived quantities of one execution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub rules: Vec<RuleVerdict>,
    pub fits: Value,
    pub notes: Vec<String>,
    pub verdict: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Evaluation {
    fn new(cfg: &ResolvedConfig) -> Self {
        let mut tolerances = BTreeMap::new();
        tolerances.insert("integrator_tol".into(), cfg.tol);
        Self { fits: json!({}), tolerances, ..Self::default() }
    }

    pub fn passed(&self) -> bool {
        self.rules.iter().all(|r| r.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: &'static str,
    pub crate_version: &'static str,
    pub scenario: String,
    pub verdict: String,
    pub passed: bool,
    pub rules: Vec<RuleVerdict>,
    pub fits: Value,
    pub notes: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub columns: &'static [Column],
    pub rows: usize,
    pub config: ResolvedConfig,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub dir: PathBuf,
    pub table: ResultTable,
    pub summary: Summary,
}

/// Runs the scenario on a pool of `cfg.workers` threads without touching
/// the filesystem (except reading `matrix_file`).
pub fn execute(cfg: &ResolvedConfig) -> Result<(ResultTable, Evaluation), RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Io(e.to_string()))?;
    pool.install(|| {
        let info = scenario_info(&cfg.scenario)?;
        let mut table = ResultTable::new(info.columns);
        let mut ev = Evaluation::new(cfg);
        let m = cfg.manifold()?;
        match cfg.scenario.as_str() {
            "period-law" => period_law(cfg, m.as_ref().expect("manifold"), &mut table, &mut ev)?,
            "zoll-defect" => zoll(cfg, m.as_ref().expect("manifold"), &mut table, &mut ev)?,
            "conformal-drift" => conformal(cfg, &mut table, &mut ev)?,
            "curvature-drift" => curvature(cfg, m.as_ref().expect("manifold"), &mut table, &mut ev)?,
            "vertical-drift" => vertical(cfg, m.as_ref().expect("manifold"), &mut table, &mut ev)?,
            "spectral-suite" => spectral(cfg, &mut table, &mut ev)?,
            "chern-audit" => chern(cfg, m.as_ref().expect("manifold"), &mut table, &mut ev)?,
            "z0-identity" => z0(cfg, m.as_ref().expect("manifold"), &mut table, &mut ev)?,
            other => unreachable!("registered scenario {other} has no runner"),
        }
        table.sort();
        Ok((table, ev))
    })
}

fn io(e: std::io::Error, path: &Path) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

/// Writes `failure.json` for a numerical failure.
pub fn write_failure(dir: &Path, err: &RunError) -> Result<PathBuf, RunError> {
    let RunError::Numerical { message, dump } = err else {
        return Err(RunError::Io("not a numerical failure".into()));
    };
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    let path = dir.join("failure.json");
    let body = json!({ "message": message, "state": dump });
    std::fs::write(&path, serde_json::to_string_pretty(&body).expect("json") + "\n").map_err(|e| io(e, &path))?;
    Ok(path)
}

/// Executes and writes `results.csv` and `summary.json` into `cfg.out`.
pub fn run_scenario(cfg: &ResolvedConfig) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let (table, ev) = match execute(cfg) {
        Ok(x) => x,
        Err(e @ RunError::Numerical { .. }) => {
            write_failure(&cfg.out, &e)?;
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    let passed = ev.passed();
    let verdict = ev.verdict.clone().unwrap_or_else(|| if passed { "pass" } else { "fail" }.to_string());
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION"),
        scenario: cfg.scenario.clone(),
        verdict,
        passed,
        rules: ev.rules,
        fits: ev.fits,
        notes: ev.notes,
        tolerances: ev.tolerances,
        columns: table.columns,
        rows: table.rows.len(),
        config: cfg.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let dir = cfg.out.clone();
    std::fs::create_dir_all(&dir).map_err(|e| io(e, &dir))?;
    let csv = dir.join("results.csv");
    std::fs::write(&csv, table.to_csv()).map_err(|e| io(e, &csv))?;
    let js = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| RunError::Io(e.to_string()))?;
    std::fs::write(&js, text + "\n").map_err(|e| io(e, &js))?;
    Ok(RunOutcome { exit_code: if passed { EXIT_OK } else { EXIT_RULE_FAILED }, dir, table, summary })
}

fn max(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn period_options(cfg: &ResolvedConfig) -> PeriodOptions {
    PeriodOptions { integrator_tol: cfg.tol, ..PeriodOptions::default() }
}

fn period_law(cfg: &ResolvedConfig, m: &ChartManifold, t: &mut ResultTable, ev: &mut Evaluation) -> Result<(), RunError> {
    let kappa = m.space_form_curvature.expect("validated space form");
    let opts = period_options(cfg);
    let rows = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let state = period_law_initial(m, eps).map_err(|e| numerical(e, json!({ "eps": eps })))?;
            let predicted = space_form_period(kappa, eps);
            let est = detect_period(m, &state, predicted, default_window(predicted), &opts)
                .map_err(|e| numerical(e, state_dump(cfg, eps, 0, &state)))?;
            Ok((eps, predicted, est))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    for (eps, predicted, est) in &rows {
        let rel = (est.period - predicted).abs() / predicted;
        t.push(*eps, 0, vec![
            Cell::Float(*eps),
            Cell::Int(0),
            Cell::Float(est.period),
            Cell::Float(*predicted),
            Cell::Float(rel),
            Cell::Float(est.defect),
        ]);
    }
    ev.tolerances.insert("closure_tol".into(), CLOSURE_TOL);
    ev.rules.push(below(
        "period-law.rel-err",
        "max relative error of measured against 2π/√(1+κε²)",
        max(t.floats("rel_err")),
        1e-6,
    ));
    ev.rules.push(below("period-law.closure", "max closure defect", max(t.floats("closure_defect")), CLOSURE_TOL));
    ev.fits = json!({ "kappa": kappa });
    Ok(())
}

fn zoll(cfg: &ResolvedConfig, m: &ChartManifold, t: &mut ResultTable, ev: &mut Evaluation) -> Result<(), RunError> {
    let opts = period_options(cfg);
    let kappa = m.space_form_curvature;
    let mut reports = Vec::new();
    for &eps in &cfg.eps {
        let t_guess = kappa.map_or(TAU, |k| space_form_period(k, eps));
        let states = sample_states(m, eps, cfg.orbits, cfg.seed).map_err(|e| numerical(e, json!({ "eps": eps })))?;
        let rows = states
            .into_par_iter()
            .enumerate()
            .map(|(orbit, s)| {
                let dump = state_dump(cfg, eps, orbit, &s);
                period_row(m, orbit, s, t_guess, &opts).map_err(|e| numerical(e, dump))
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        let report = PeriodReport::from_rows(eps, rows, t_guess).map_err(|e| numerical(e, json!({ "eps": eps })))?;
        for r in &report.rows {
            t.push(eps, r.orbit, vec![
                Cell::Float(eps),
                Cell::Int(r.orbit as i64),
                Cell::Float(r.period),
                Cell::Float(r.defect),
                Cell::Bool(r.closed),
                Cell::Int(r.iterations as i64),
                Cell::Int(r.initial.chart as i64),
                Cell::Text(join_floats(r.initial.q.as_slice())),
                Cell::Text(join_floats(r.initial.v.as_slice())),
            ]);
        }
        reports.push(report);
    }
    ev.tolerances.insert("closure_tol".into(), CLOSURE_TOL);
    ev.fits = json!({
        "per_eps": reports.iter().map(|r| json!({
            "eps": r.eps,
            "zoll_defect": r.zoll_defect,
            "t_min": r.t_min,
            "t_max": r.t_max,
            "all_closed": r.all_closed,
        })).collect::<Vec<_>>()
    });
    if kappa.is_some() {
        ev.rules.push(below(
            "zoll-defect.space-form",
            "max over ε of max − min period (space form ⇒ Zoll)",
            max(reports.iter().map(|r| r.zoll_defect)),
            1e-6,
        ));
    } else {
        let small: Vec<&PeriodReport> = reports.iter().filter(|r| r.eps <= 0.2 + 1e-12).collect();
        if !small.is_empty() {
            let dev = max(small.iter().flat_map(|r| r.rows.iter().map(|x| (x.period - TAU).abs())));
            ev.rules.push(below("zoll-defect.near-2pi", "max |T − 2π| for ε ≤ 0.2", dev, 0.1));
            let detected = small.iter().map(|r| r.zoll_defect).fold(f64::INFINITY, f64::min);
            ev.rules.push(rule(
                "zoll-defect.detected",
                "min over ε ≤ 0.2 of the Zoll defect exceeds 10× the closure tolerance",
                detected,
                &format!("> {:e}", 10.0 * CLOSURE_TOL),
                detected > 10.0 * CLOSURE_TOL,
            ));
        }
    }
    Ok(())
}

fn fit_json(r: &DriftReport) -> Value {
    json!({
        "degenerate": r.degenerate,
        "fit": r.fit.map(|f| json!({ "slope": f.slope, "intercept": f.intercept, "stderr": f.stderr, "r2": f.r2 })),
    })
}

fn drift_rules(prefix: &str, r: &DriftReport, target: f64, window: f64, ev: &mut Evaluation) {
    let slope = r.fit.map_or(f64::NAN, |f| f.slope);
    let r2 = r.fit.map_or(f64::NAN, |f| f.r2);
    ev.rules.push(rule(
        &format!("{prefix}.exponent"),
        "log-log slope of displacement against ε",
        slope,
        &format!("{target} ± {window}"),
        (slope - target).abs() <= window,
    ));
    ev.rules.push(rule(&format!("{prefix}.r2"), "coefficient of determination of the fit", r2, "≥ 0.99", r2 >= 0.99));
}

fn sign_note(ev: &mut Evaluation, what: &str, r: &DriftReport) {
    let mean: f64 = r.rows.iter().map(|x| x.cosine).sum::<f64>() / r.rows.len() as f64;
    if mean < 0.0 {
        ev.notes.push(format!(
            "measured drift is antiparallel to {what}; collinearity is the criterion and the convention audit fixes the sign"
        ));
    }
}

fn drift_table(t: &mut ResultTable, rows: &[DriftRow], cells: impl Fn(&DriftRow) -> Vec<Cell>) {
    for r in rows {
        let mut c = vec![Cell::Float(r.eps), Cell::Int(0)];
        c.extend(cells(r));
        t.push(r.eps, 0, c);
    }
}

fn opt(x: Option<f64>) -> Cell {
    x.map_or(Cell::Empty, Cell::Float)
}

fn conformal(cfg: &ResolvedConfig, t: &mut ResultTable, ev: &mut Evaluation) -> Result<(), RunError> {
    let s = ModelBundleSystem::sinusoidal(cfg.amplitude);
    let q0 = [cfg.q0[0], cfg.q0[1]];
    let opts = DriftOptions { periods: cfg.periods, tol: cfg.tol };
    let rows = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            conformal_drift_row(&s, q0, eps, &opts).map_err(|e| {
                numerical(e, json!({ "eps": eps, "q": q0, "v": [eps, 0.0], "amplitude": cfg.amplitude, "tol": cfg.tol }))
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let report = DriftReport::from_rows(DriftKind::Conformal, rows).map_err(|e| numerical(e, Value::Null))?;
    drift_table(t, &report.rows, |r| {
        vec![
            Cell::Float(r.period),
            Cell::Float(r.displacement),
            Cell::Float(r.cosine),
            Cell::Float(r.audit_cosine),
            opt(r.ratio),
            Cell::Text(join_floats(&r.centre)),
        ]
    });
    ev.fits = fit_json(&report);
    if report.degenerate {
        ev.verdict = Some("degenerate drift (Zoll)".into());
        ev.rules.push(rule(
            "conformal-drift.degenerate",
            "constant factor: no drift law is fitted",
            max(report.rows.iter().map(|r| r.displacement)),
            &format!("< {:e}", crate::drift::DEGENERATE_FLOOR),
            true,
        ));
        return Ok(());
    }
    drift_rules("conformal-drift", &report, 2.0, 0.2, ev);
    ev.rules.push(rule(
        "conformal-drift.direction",
        "min |cos| between drift and X_{-a}",
        report.min_abs_cosine,
        "> 0.98",
        report.min_abs_cosine > 0.98,
    ));
    ev.rules.push(convention(&report, "conformal-drift.convention", "drift against the averaged system (signed)"));
    let err = report.max_ratio_error.unwrap_or(f64::NAN);
    ev.rules.push(below("conformal-drift.magnitude", "max |ratio − 1| against the averaged system", err, 0.15));
    sign_note(ev, "X_{-a}", &report);
    Ok(())
}

fn convention(r: &DriftReport, id: &str, description: &str) -> RuleVerdict {
    rule(id, description, r.min_audit_cosine, "> 0.98", r.min_audit_cosine > 0.98)
}

fn curvature(cfg: &ResolvedConfig, m: &ChartManifold, t: &mut ResultTable, ev: &mut Evaluation) -> Result<(), RunError> {
    let q0 = ChartPoint::new(0, cfg.q0.clone());
    let opts = DriftOptions { periods: cfg.periods, tol: cfg.tol };
    let rows = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            curvature_drift_row(m, &q0, eps, &opts)
                .map_err(|e| numerical(e, json!({ "eps": eps, "chart": 0, "q": cfg.q0, "direction": "unitary frame e1", "tol": cfg.tol })))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let report = DriftReport::from_rows(DriftKind::Curvature, rows).map_err(|e| numerical(e, Value::Null))?;
    drift_table(t, &report.rows, |r| {
        vec![
            Cell::Float(r.period),
            Cell::Float(r.displacement),
            Cell::Float(r.cosine),
            Cell::Float(r.audit_cosine),
            opt(r.gradient_component),
            opt(r.ratio),
            Cell::Text(join_floats(&r.centre)),
        ]
    });
    ev.fits = fit_json(&report);
    if m.space_form_curvature.is_some() || report.degenerate {
        let pass = report.degenerate;
        if pass {
            ev.verdict = Some("degenerate drift (Zoll)".into());
        }
        ev.rules.push(rule(
            "curvature-drift.null",
            "constant K̂: displacement below the noise floor",
            max(report.rows.iter().map(|r| r.displacement)),
            &format!("< {:e}", crate::drift::DEGENERATE_FLOOR),
            pass,
        ));
        return Ok(());
    }
    drift_rules("curvature-drift", &report, 4.0, 0.3, ev);
    ev.rules.push(rule(
        "curvature-drift.direction",
        "min |cos| between drift and X_{K̂/8}",
        report.min_abs_cosine,
        "> 0.98",
        report.min_abs_cosine > 0.98,
    ));
    ev.rules.push(below(
        "curvature-drift.level-line",
        "max |cos| between drift and ∇K̂",
        report.max_gradient_component.unwrap_or(f64::NAN),
        0.1,
    ));
    ev.rules.push(below(
        "curvature-drift.magnitude",
        "max |D/(2πε⁴|Y|) − 1|",
        report.max_ratio_error.unwrap_or(f64::NAN),
        0.15,
    ));
    ev.rules.push(convention(&report, "curvature-drift.convention", "drift against the Hamiltonian field of H for ι_X(−β) = −dH (signed)"));
    sign_note(ev, "X_{K̂/8}", &report);
    Ok(())
}

fn vertical(cfg: &ResolvedConfig, m: &ChartManifold, t: &mut ResultTable, ev: &mut Evaluation) -> Result<(), RunError> {
    let q0 = ChartPoint::new(0, cfg.q0.clone());
    let dir = [cfg.direction[0], cfg.direction[1], cfg.direction[2], cfg.direction[3]];
    let opts = DriftOptions { periods: cfg.periods, tol: cfg.tol };
    let dump = |eps: f64| json!({ "eps": eps, "chart": 0, "q": cfg.q0, "frame_direction": dir, "tol": cfg.tol });
    let rows = cfg
        .eps
        .par_iter()
        .map(|&eps| vertical_drift_row(m, &q0, &dir, eps, &opts).map_err(|e| numerical(e, dump(eps))))
        .collect::<Result<Vec<_>, RunError>>()?;
    let report = DriftReport::from_rows(DriftKind::Vertical, rows).map_err(|e| numerical(e, Value::Null))?;
    let dv_norm = |r: &DriftRow| r.reference.iter().map(|x| x * x).sum::<f64>().sqrt();
    drift_table(t, &report.rows, |r| {
        vec![
            Cell::Float(r.period),
            Cell::Float(r.displacement),
            Cell::Text(join_floats(&r.direction)),
            Cell::Float(dv_norm(r)),
        ]
    });
    ev.fits = fit_json(&report);
    let fibre_constant = report.rows.first().is_some_and(|r| dv_norm(r) < 1e-8);
    if fibre_constant {
        if report.degenerate {
            ev.verdict = Some("no vertical drift (K̂ fibrewise constant)".into());
        }
        ev.rules.push(rule(
            "vertical-drift.null",
            "d^v K̂ = 0: displacement below the noise floor",
            max(report.rows.iter().map(|r| r.displacement)),
            &format!("< {:e}", crate::drift::DEGENERATE_FLOOR),
            report.degenerate,
        ));
        return Ok(());
    }
    drift_rules("vertical-drift", &report, 2.0, 0.3, ev);
    // consecutive exact doublings of ε
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for a in &report.rows {
        for b in &report.rows {
            if (b.eps / a.eps - 2.0).abs() < 1e-9 {
                pairs += 1;
                worst = worst.max((b.displacement / a.displacement / 4.0 - 1.0).abs());
            }
        }
    }
    if pairs > 0 {
        ev.rules.push(below("vertical-drift.doubling", "max |D(2ε)/(4 D(ε)) − 1|", worst, 0.2));
    }
    Ok(())
}

/// Brute-force checks of one spectral instance.
struct SpectralChecks {
    residual: f64,
    det_error: f64,
    symplectic: f64,
    mode_closure: f64,
    besse_closure: Option<f64>,
    membership: Option<bool>,
}

fn spectral_checks(s: &SpectralData, seed: u64, index: u64, bound: u64) -> Result<SpectralChecks, Error> {
    let n = s.dim;
    let mut r = rng(seed, 0x5245_5349, index);
    let scale = s.gamma.amax().max(1.0);
    let mut residual: f64 = 0.0;
    for _ in 0..100 {
        let w = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
        let v = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
        residual = residual.max(s.residual(&w, &v) / scale);
    }
    let det_error = (s.a_tilde.determinant() - 1.0).abs();
    let mut symplectic: f64 = 0.0;
    for f in [0.5, 1.0, 2.0, 5.0] {
        let phi = s.flow(f * s.t_min);
        symplectic = symplectic.max((phi.transpose() * &s.rho * &phi - &s.rho).amax());
    }
    let mut mode_closure: f64 = 0.0;
    for j in 0..s.k() {
        let v = s.mode_vector(j)?;
        mode_closure = mode_closure.max((s.flow(TAU / s.spectral[j]) * &v - &v).amax());
    }
    let (besse_closure, membership) = match s.class {
        LinearFlowClass::Zoll | LinearFlowClass::Besse { .. } => {
            let common = match s.class {
                LinearFlowClass::Besse { common_period } => common_period,
                _ => TAU,
            };
            // long common periods amplify rounding in e^{TÃ}
            let closure = (common <= 1e3 * s.t_min)
                .then(|| (s.flow(common) - DMatrix::identity(n, n)).amax());
            let mut ok = check_period_set(s, common, bound)?.accepted();
            for a in &s.spectral {
                ok &= check_period_set(s, TAU / a, bound)?.accepted();
            }
            (closure, Some(ok))
        }
        _ => (None, None),
    };
    Ok(SpectralChecks { residual, det_error, symplectic, mode_closure, besse_closure, membership })
}

fn spectral(cfg: &ResolvedConfig, t: &mut ResultTable, ev: &mut Evaluation) -> Result<(), RunError> {
    // (source, rho, gamma, expected σ_min dimension)
    type Instance = (String, DMatrix<f64>, DMatrix<f64>, Option<usize>);
    let mut instances: Vec<Instance> = Vec::new();
    if let Some(path) = &cfg.matrix_file {
        let text = std::fs::read_to_string(path).map_err(|e| io(e, path))?;
        for (rho, gamma) in parse_matrix_file(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))? {
            instances.push(("file".into(), rho, gamma, None));
        }
    } else {
        for c in constructed_cases(cfg.seed) {
            instances.push((format!("fixture:{}", c.label), c.rho, c.gamma, Some(c.expected_sigma_dim)));
        }
        for i in 0..cfg.instances {
            let dim = cfg.dims[i % cfg.dims.len()];
            let (rho, gamma) = random_instance(dim, cfg.seed, i as u64).map_err(|e| numerical(e, json!({ "instance": i })))?;
            instances.push(("random".into(), rho, gamma, None));
        }
    }
    let results = instances
        .par_iter()
        .enumerate()
        .map(|(i, (src, rho, gamma, expected))| {
            let dump = || json!({ "instance": i, "source": src, "rho": rho.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(), "gamma": gamma.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>() });
            let mut s = build_spectral(rho, gamma).map_err(|e| numerical(e, dump()))?;
            s.class = crate::spectral::classify_linear_flow(&s, cfg.denom_bound);
            let checks = spectral_checks(&s, cfg.seed, i as u64, cfg.denom_bound).map_err(|e| numerical(e, dump()))?;
            Ok((i, src.clone(), s, checks, *expected))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut sigma_ok = true;
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (i, src, s, c, expected) in &results {
        *counts.entry(s.class.label()).or_default() += 1;
        if let Some(e) = expected {
            sigma_ok &= sigma_min_dim(s) == *e;
        }
        let common = match s.class {
            LinearFlowClass::Besse { common_period } => Some(common_period),
            LinearFlowClass::Zoll => Some(TAU),
            _ => None,
        };
        t.push(0.0, *i, vec![
            Cell::Int(*i as i64),
            Cell::Text(src.clone()),
            Cell::Int(s.dim as i64),
            Cell::Text(join_floats(&s.spectral)),
            Cell::Text(s.class.label().into()),
            Cell::Float(s.t_min),
            opt(common),
            Cell::Float(c.residual),
            Cell::Float(c.det_error),
            Cell::Float(c.symplectic),
            Cell::Float(c.mode_closure),
            opt(c.besse_closure),
            c.membership.map_or(Cell::Empty, Cell::Bool),
            Cell::Int(sigma_min_dim(s) as i64),
        ]);
    }
    ev.tolerances.insert("rational_tol".into(), crate::spectral::RATIONAL_TOL);
    ev.tolerances.insert("cluster_tol".into(), crate::spectral::CLUSTER_TOL);
    ev.tolerances.insert("denom_bound".into(), cfg.denom_bound as f64);
    ev.fits = json!({ "classes": counts });
    ev.rules.push(below("spectral.residual", "max |ρ(w,Av) − γ(w,v)| (scaled)", max(t.floats("residual")), 1e-12));
    ev.rules.push(below("spectral.det", "max |∏ã − 1|", max(t.floats("det_error")), 1e-10));
    ev.rules.push(below("spectral.symplectic", "max |Φᵀ ρ Φ − ρ|", max(t.floats("symplectic_error")), 1e-9));
    ev.rules.push(below("spectral.mode-closure", "max |e^{(2π/ã_j)Ã} v_j − v_j|", max(t.floats("mode_closure")), 1e-8));
    let besse = t.floats("besse_closure");
    if !besse.is_empty() {
        ev.rules.push(below("spectral.besse-closure", "max |e^{TÃ} − I| at common periods", max(besse), 1e-8));
    }
    let memberships: Vec<bool> = results.iter().filter_map(|r| r.3.membership).collect();
    if !memberships.is_empty() {
        let ok = memberships.iter().all(|b| *b);
        ev.rules.push(rule(
            "spectral.membership",
            "every Besse period T has (T/2π)^k rational",
            memberships.iter().filter(|b| !**b).count() as f64,
            "0 failures",
            ok,
        ));
    }
    if results.iter().any(|r| r.4.is_some()) {
        ev.rules.push(rule("spectral.sigma-min", "σ_min fibre dimension 2k_{ã₁} − 1 on fixtures", 0.0, "exact", sigma_ok));
    }
    Ok(())
}

/// Seeded sample points and unit vectors over the sampling region.
fn sample_points(m: &ChartManifold, count: usize, seed: u64) -> Result<Vec<(ChartPoint, DVector<f64>)>, Error> {
    let n = m.dim;
    let halton = Halton::new(n, seed);
    let region = &m.sampling;
    (0..count)
        .map(|i| {
            let u = halton.point(i as u64);
            let q: Vec<f64> = (0..n).map(|k| region.lower[k] + u[k] * (region.upper[k] - region.lower[k])).collect();
            let p = ChartPoint::new(region.chart, q);
            let mut r = rng(seed, 0x5645_4354, i as u64);
            let c = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
            let v = m.unitary_frame(&p)? * c;
            let v = &v / m.norm(&p, &v);
            Ok((p, v))
        })
        .collect()
}

fn chern(cfg: &ResolvedConfig, m: &ChartManifold, t: &mut ResultTable, ev: &mut Evaluation) -> Result<(), RunError> {
    let pts = sample_points(m, cfg.points, cfg.seed).map_err(|e| numerical(e, Value::Null))?;
    let rows = pts
        .par_iter()
        .map(|(p, v)| {
            let dump = || json!({ "chart": p.chart, "q": p.q.as_slice(), "v": v.as_slice() });
            let audit = chern_audit(m, p).map_err(|e| numerical(e, dump()))?;
            let k = khat(m, p, v).map_err(|e| numerical(e, dump()))?;
            let spread = khat_fiber_spread(m, p, v, 32).map_err(|e| numerical(e, dump()))?;
            Ok((p.clone(), audit, k.khat, spread))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    for (i, (p, a, k, spread)) in rows.iter().enumerate() {
        t.push(0.0, i, vec![
            Cell::Int(i as i64),
            Cell::Text(join_floats(p.q.as_slice())),
            Cell::Float(a.metric),
            Cell::Float(a.acs),
            Cell::Float(a.torsion_type),
            Cell::Float(a.torsion_nijenhuis),
            Cell::Float(a.nijenhuis),
            Cell::Float(*k),
            Cell::Float(*spread),
        ]);
    }
    for (id, col, what) in [
        ("chern-audit.metric", "metric", "max |∇g|"),
        ("chern-audit.acs", "acs", "max |∇J|"),
        ("chern-audit.torsion-type", "torsion_type", "max (1,1)-torsion"),
        ("chern-audit.torsion-nijenhuis", "torsion_nijenhuis", "max |T + N/4|"),
        ("chern-audit.khat-fiber", "khat_fiber_spread", "K̂ spread over the fibre circle"),
    ] {
        ev.rules.push(below(id, what, max(t.floats(col)), 1e-8));
    }
    let kahler = MANIFOLD_INFO.iter().find(|i| i.name == m.name).is_some_and(|i| i.kahler);
    if kahler {
        ev.rules.push(below("chern-audit.integrable", "max |N| on a Kähler manifold", max(t.floats("nijenhuis")), 1e-9));
    }
    Ok(())
}

fn z0(cfg: &ResolvedConfig, m: &ChartManifold, t: &mut ResultTable, ev: &mut Evaluation) -> Result<(), RunError> {
    let pts = sample_points(m, cfg.points, cfg.seed).map_err(|e| numerical(e, Value::Null))?;
    let rows = pts
        .par_iter()
        .map(|(p, v)| {
            verify_z0_identity(m, p, v, 1e-3)
                .map(|c| (p.clone(), v.clone(), c))
                .map_err(|e| numerical(e, json!({ "chart": p.chart, "q": p.q.as_slice(), "v": v.as_slice() })))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    for (i, (p, v, c)) in rows.iter().enumerate() {
        t.push(0.0, i, vec![
            Cell::Int(i as i64),
            Cell::Text(join_floats(p.q.as_slice())),
            Cell::Text(join_floats(v.as_slice())),
            Cell::Float(c.lhs),
            Cell::Float(c.khat),
            Cell::Float(c.residual),
            Cell::Float(c.reversed),
            Cell::Float(c.reversed_residual),
        ]);
    }
    ev.tolerances.insert("difference_step".into(), 1e-3);
    ev.rules.push(below("z0.identity", "max |lhs − K̂|", max(t.floats("residual")), 1e-4));
    let reversed = max(t.floats("reversed_residual"));
    ev.notes.push(format!(
        "max |lhs − (−K − (2/3)|T*|²)| = {reversed:e}: the horizontal curvature block enters with the opposite sign"
    ));
    Ok(())
}
