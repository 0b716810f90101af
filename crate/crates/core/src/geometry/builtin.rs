//! Built-in manifolds, addressed by name plus a parameter map.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::chart::{Axis, Chart, CoordJacobian, CoordMap, Transition};
use super::manifold::{ChartManifold, LocalFields, Region, DEFAULT_FD_STEP};
use crate::error::{Error, Result};

use std::f64::consts::TAU;

/// Names accepted by [`builtin`].
pub const BUILTIN_MANIFOLDS: &[&str] = &[
    "flat-torus",
    "round-sphere",
    "hyperbolic-disk",
    "conformal-torus",
    "perturbed-sphere",
    "kodaira-thurston",
];

/// Registry entry: name, accepted parameters with defaults, one-line summary.
pub struct ManifoldInfo {
    pub name: &'static str,
    pub params: &'static [(&'static str, f64)],
    pub summary: &'static str,
    /// `J` integrable (Kähler).
    pub kahler: bool,
}

pub const MANIFOLD_INFO: &[ManifoldInfo] = &[
    ManifoldInfo {
        name: "flat-torus",
        params: &[("dim", 2.0)],
        summary: "flat torus of side 2π, J e_i = e_{i+m}, β = Σ dx_i∧dx_{i+m} (κ = 0)",
        kahler: true,
    },
    ManifoldInfo {
        name: "round-sphere",
        params: &[],
        summary: "unit round sphere, two stereographic charts, β = area form (κ = +1)",
        kahler: true,
    },
    ManifoldInfo {
        name: "hyperbolic-disk",
        params: &[],
        summary: "Poincaré disk of curvature −1, β = area form (κ = −1)",
        kahler: true,
    },
    ManifoldInfo {
        name: "conformal-torus",
        params: &[("c", 0.1)],
        summary: "torus with metric e^{2φ}δ, φ = c sin q1 sin q2, β = area form",
        kahler: true,
    },
    ManifoldInfo {
        name: "perturbed-sphere",
        params: &[("c", 0.1)],
        summary: "sphere with metric e^{2c x3} g_round, β = area form",
        kahler: true,
    },
    ManifoldInfo {
        name: "kodaira-thurston",
        params: &[],
        summary: "Kodaira–Thurston nilmanifold (universal cover), left-invariant almost Kähler",
        kahler: false,
    },
];

/// Builds a registered manifold. Unknown parameters are rejected.
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<ChartManifold> {
    let info = MANIFOLD_INFO.iter().find(|i| i.name == name).ok_or_else(|| {
        Error::InvalidArgument(format!("unknown manifold `{name}`"))
    })?;
    for key in params.keys() {
        if !info.params.iter().any(|(k, _)| k == key) {
            return Err(Error::InvalidArgument(format!(
                "manifold `{name}` has no parameter `{key}`"
            )));
        }
    }
    let mut resolved: BTreeMap<String, f64> =
        info.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    resolved.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
    let get = |k: &str| resolved[k];
    let mut m = match name {
        "flat-torus" => {
            let dim = get("dim");
            if dim < 2.0 || dim.fract() != 0.0 || !(dim as usize).is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!(
                    "flat-torus dim must be a positive even integer, got {dim}"
                )));
            }
            flat_torus(dim as usize)
        }
        "round-sphere" => round_sphere(),
        "hyperbolic-disk" => hyperbolic_disk(),
        "conformal-torus" => conformal_torus(get("c")),
        "perturbed-sphere" => perturbed_sphere(get("c")),
        "kodaira-thurston" => kodaira_thurston(),
        _ => unreachable!(),
    };
    m.params = resolved;
    Ok(m)
}

/// Standard complex structure `J e_i = e_{i+m}` on `R^{2m}`.
pub fn standard_acs(n: usize) -> DMatrix<f64> {
    let m = n / 2;
    let mut j = DMatrix::zeros(n, n);
    for i in 0..m {
        j[(i + m, i)] = 1.0;
        j[(i, i + m)] = -1.0;
    }
    j
}

fn manifold(
    name: &str,
    dim: usize,
    charts: Vec<Chart>,
    fields: Arc<dyn LocalFields>,
    space_form_curvature: Option<f64>,
    sampling: Region,
) -> ChartManifold {
    ChartManifold {
        name: name.to_string(),
        params: BTreeMap::new(),
        dim,
        charts,
        fields,
        compatible: true,
        space_form_curvature,
        sampling,
        fd_step: DEFAULT_FD_STEP,
    }
}

struct Flat {
    n: usize,
}

impl LocalFields for Flat {
    fn metric(&self, _: usize, _: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }
    fn metric_derivative(&self, _: usize, _: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.n, self.n); self.n])
    }
    fn magnetic(&self, _: usize, _: &DVector<f64>) -> DMatrix<f64> {
        standard_acs(self.n).transpose()
    }
    fn acs(&self, _: usize, _: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(standard_acs(self.n))
    }
    fn acs_derivative(&self, _: usize, _: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.n, self.n); self.n])
    }
    fn unitary_frame(&self, _: usize, _: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.n, self.n))
    }
}

pub fn flat_torus(n: usize) -> ChartManifold {
    let chart = Chart::new(0, vec![Axis::Periodic { period: TAU }; n]);
    manifold(
        "flat-torus",
        n,
        vec![chart],
        Arc::new(Flat { n }),
        Some(0.0),
        Region { chart: 0, lower: vec![0.0; n], upper: vec![TAU; n] },
    )
}

/// Log conformal factor `u` and its gradient, per chart.
type LogFactor = dyn Fn(usize, f64, f64) -> (f64, [f64; 2]) + Send + Sync;

/// Surface with metric `e^{2u} δ`, `β` the area form and `J` rotation by +90°.
struct ConformalSurface {
    u: Box<LogFactor>,
}

impl ConformalSurface {
    fn eval(&self, chart: usize, q: &DVector<f64>) -> (f64, [f64; 2]) {
        (self.u)(chart, q[0], q[1])
    }
}

impl LocalFields for ConformalSurface {
    fn metric(&self, chart: usize, q: &DVector<f64>) -> DMatrix<f64> {
        let (u, _) = self.eval(chart, q);
        DMatrix::identity(2, 2) * (2.0 * u).exp()
    }
    fn metric_derivative(&self, chart: usize, q: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        let (u, du) = self.eval(chart, q);
        let f = (2.0 * u).exp();
        Some(du.iter().map(|d| DMatrix::identity(2, 2) * (2.0 * d * f)).collect())
    }
    fn magnetic(&self, chart: usize, q: &DVector<f64>) -> DMatrix<f64> {
        let (u, _) = self.eval(chart, q);
        standard_acs(2).transpose() * (2.0 * u).exp()
    }
    fn acs(&self, _: usize, _: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(standard_acs(2))
    }
    fn acs_derivative(&self, _: usize, _: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(2, 2); 2])
    }
    fn unitary_frame(&self, chart: usize, q: &DVector<f64>) -> Option<DMatrix<f64>> {
        let (u, _) = self.eval(chart, q);
        Some(DMatrix::identity(2, 2) * (-u).exp())
    }
}

/// `z ↦ 1/z` in real coordinates; orientation preserving and self-inverse.
fn inversion() -> (CoordMap, CoordJacobian) {
    let map = Arc::new(|q: &DVector<f64>| {
        let r2 = q[0] * q[0] + q[1] * q[1];
        DVector::from_vec(vec![q[0] / r2, -q[1] / r2])
    });
    let jac = Arc::new(|q: &DVector<f64>| {
        let (x, y) = (q[0], q[1]);
        let r4 = (x * x + y * y).powi(2);
        let a = (y * y - x * x) / r4;
        let b = 2.0 * x * y / r4;
        DMatrix::from_row_slice(2, 2, &[a, -b, b, a])
    });
    (map, jac)
}

fn stereographic_charts() -> Vec<Chart> {
    let (map, jacobian) = inversion();
    let bx = vec![Axis::Bounded { lower: -2.0, upper: 2.0 }; 2];
    (0..2)
        .map(|id| {
            Chart::new(id, bx.clone()).with_transition(Transition {
                target: 1 - id,
                map: map.clone(),
                jacobian: jacobian.clone(),
            })
        })
        .collect()
}

fn sphere_log_factor(x: f64, y: f64) -> (f64, [f64; 2]) {
    let s = 1.0 + x * x + y * y;
    (2f64.ln() - s.ln(), [-2.0 * x / s, -2.0 * y / s])
}

pub fn round_sphere() -> ChartManifold {
    let fields = ConformalSurface { u: Box::new(|_, x, y| sphere_log_factor(x, y)) };
    manifold(
        "round-sphere",
        2,
        stereographic_charts(),
        Arc::new(fields),
        Some(1.0),
        Region { chart: 0, lower: vec![-1.0; 2], upper: vec![1.0; 2] },
    )
}

/// Sphere with metric `e^{2c x₃}` times the round one, `x₃` the height
/// function (chart 0 projects from the north pole).
pub fn perturbed_sphere(c: f64) -> ChartManifold {
    let fields = ConformalSurface {
        u: Box::new(move |chart, x, y| {
            let (u, du) = sphere_log_factor(x, y);
            let s = 1.0 + x * x + y * y;
            let sign = if chart == 0 { 1.0 } else { -1.0 };
            let x3 = sign * (s - 2.0) / s;
            let d = 4.0 * sign / (s * s);
            (u + c * x3, [du[0] + c * d * x, du[1] + c * d * y])
        }),
    };
    manifold(
        "perturbed-sphere",
        2,
        stereographic_charts(),
        Arc::new(fields),
        None,
        Region { chart: 0, lower: vec![-1.0; 2], upper: vec![1.0; 2] },
    )
}

pub fn hyperbolic_disk() -> ChartManifold {
    let fields = ConformalSurface {
        u: Box::new(|_, x, y| {
            let s = 1.0 - x * x - y * y;
            (2f64.ln() - s.ln(), [2.0 * x / s, 2.0 * y / s])
        }),
    };
    let chart = Chart::new(0, vec![Axis::Bounded { lower: -0.99, upper: 0.99 }; 2]);
    manifold(
        "hyperbolic-disk",
        2,
        vec![chart],
        Arc::new(fields),
        Some(-1.0),
        Region { chart: 0, lower: vec![-0.3; 2], upper: vec![0.3; 2] },
    )
}

pub fn conformal_torus(c: f64) -> ChartManifold {
    let fields = ConformalSurface {
        u: Box::new(move |_, x, y| {
            (c * x.sin() * y.sin(), [c * x.cos() * y.sin(), c * x.sin() * y.cos()])
        }),
    };
    let chart = Chart::new(0, vec![Axis::Periodic { period: TAU }; 2]);
    manifold(
        "conformal-torus",
        2,
        vec![chart],
        Arc::new(fields),
        None,
        Region { chart: 0, lower: vec![0.0; 2], upper: vec![TAU; 2] },
    )
}

/// Left-invariant frame `e1 = ∂x, e2 = ∂y + x∂z, e3 = ∂z, e4 = ∂w` with
/// `[e1, e2] = e3`, orthonormal metric, `ω = e¹∧e³ + e²∧e⁴`, `J e1 = e3`,
/// `J e2 = e4`.
struct KodairaThurston;

impl KodairaThurston {
    fn frame(q: &DVector<f64>) -> DMatrix<f64> {
        let mut e = DMatrix::identity(4, 4);
        e[(2, 1)] = q[0];
        e
    }

    fn coframe(q: &DVector<f64>) -> DMatrix<f64> {
        let mut t = DMatrix::identity(4, 4);
        t[(2, 1)] = -q[0];
        t
    }

    fn frame_dx() -> DMatrix<f64> {
        let mut d = DMatrix::zeros(4, 4);
        d[(2, 1)] = 1.0;
        d
    }

    fn coframe_dx(q: &DVector<f64>) -> DMatrix<f64> {
        let t = Self::coframe(q);
        -(&t * Self::frame_dx() * &t)
    }
}

impl LocalFields for KodairaThurston {
    fn metric(&self, _: usize, q: &DVector<f64>) -> DMatrix<f64> {
        let t = Self::coframe(q);
        t.transpose() * t
    }
    fn metric_derivative(&self, _: usize, q: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        let t = Self::coframe(q);
        let dt = Self::coframe_dx(q);
        let dg = dt.transpose() * &t + t.transpose() * dt;
        let zero = DMatrix::zeros(4, 4);
        Some(vec![dg, zero.clone(), zero.clone(), zero])
    }
    fn magnetic(&self, _: usize, q: &DVector<f64>) -> DMatrix<f64> {
        let t = Self::coframe(q);
        t.transpose() * standard_acs(4).transpose() * t
    }
    fn acs(&self, _: usize, q: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(Self::frame(q) * standard_acs(4) * Self::coframe(q))
    }
    fn acs_derivative(&self, _: usize, q: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        let jf = standard_acs(4);
        let dj = Self::frame_dx() * &jf * Self::coframe(q) + Self::frame(q) * &jf * Self::coframe_dx(q);
        let zero = DMatrix::zeros(4, 4);
        Some(vec![dj, zero.clone(), zero.clone(), zero])
    }
    fn unitary_frame(&self, _: usize, q: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(Self::frame(q))
    }
}

pub fn kodaira_thurston() -> ChartManifold {
    let chart = Chart::new(0, vec![Axis::Free; 4]);
    manifold(
        "kodaira-thurston",
        4,
        vec![chart],
        Arc::new(KodairaThurston),
        None,
        Region { chart: 0, lower: vec![-1.0; 4], upper: vec![1.0; 4] },
    )
}
