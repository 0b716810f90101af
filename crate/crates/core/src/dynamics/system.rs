//! The magnetic geodesic flow on a chart manifold and the trivial-bundle
//! model Hamiltonian system.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use super::dop853::{integrate_system, ChartCheck, FlowSystem, IntegratorOptions, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::connection::{christoffel, lorentz_endomorphism};
use crate::geometry::manifold::{ChartManifold, ChartPoint};

/// Relative margin below which a chart switch is attempted.
pub const SWITCH_MARGIN: f64 = 0.1;
/// Minimum relative margin the point must have in the new chart.
pub const ACCEPT_MARGIN: f64 = 0.2;

/// Accepted integrator tolerance range.
pub const TOL_RANGE: (f64, f64) = (1e-13, 1e-6);

/// A point of the tangent bundle with `|v|_g = ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentState {
    pub chart: usize,
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub energy: f64,
}

impl TangentState {
    /// Uses `|v|_g` as the energy.
    pub fn new(m: &ChartManifold, p: ChartPoint, v: DVector<f64>) -> Result<Self> {
        m.chart(p.chart)?;
        let energy = m.norm(&p, &v);
        if !(energy > 0.0) {
            return Err(Error::InvalidArgument("tangent vector must be non-zero".into()));
        }
        Ok(Self { chart: p.chart, q: p.q, v, energy })
    }

    /// Rescales `direction` to g-norm `energy`.
    pub fn with_energy(
        m: &ChartManifold,
        p: ChartPoint,
        direction: &DVector<f64>,
        energy: f64,
    ) -> Result<Self> {
        if !(energy > 0.0) {
            return Err(Error::InvalidArgument(format!("energy must be positive, got {energy}")));
        }
        let norm = m.norm(&p, direction);
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("direction must be non-zero".into()));
        }
        let v = direction * (energy / norm);
        m.chart(p.chart)?;
        Ok(Self { chart: p.chart, q: p.q, v, energy })
    }

    pub fn point(&self) -> ChartPoint {
        ChartPoint { chart: self.chart, q: self.q.clone() }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.q.iter().chain(self.v.iter()).copied().collect()
    }

    /// Rebuilds a state from a flat `(q, v)` vector, keeping `energy`.
    pub fn from_slice(chart: usize, y: &[f64], energy: f64) -> Self {
        let n = y.len() / 2;
        Self {
            chart,
            q: DVector::from_row_slice(&y[..n]),
            v: DVector::from_row_slice(&y[n..]),
            energy,
        }
    }

    /// Current g-norm of `v`.
    pub fn speed(&self, m: &ChartManifold) -> f64 {
        m.norm(&self.point(), &self.v)
    }

    /// The same state expressed in chart `target`, if it covers the point.
    pub fn to_chart(&self, m: &ChartManifold, target: usize) -> Result<Option<Self>> {
        if target == self.chart {
            return Ok(Some(self.clone()));
        }
        let chart = m.chart(self.chart)?;
        let Some(tr) = chart.transition_to(target) else {
            return Ok(None);
        };
        let q = (tr.map)(&self.q);
        if !m.chart(target)?.contains(&q) {
            return Ok(None);
        }
        let v = (tr.jacobian)(&self.q) * &self.v;
        Ok(Some(Self { chart: target, q, v, energy: self.energy }))
    }
}

/// `(q̇, v̇) = (v, −Γ(v,v) + Bv)`.
pub fn magnetic_vector_field(
    m: &ChartManifold,
    state: &TangentState,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let p = state.point();
    let gamma = christoffel(m, &p)?;
    let b = lorentz_endomorphism(m, &p)?;
    let vdot = &b * &state.v - gamma.apply(&state.v, &state.v);
    Ok((state.v.clone(), vdot))
}

/// The magnetic flow as a [`FlowSystem`] with automatic chart switching.
pub struct MagneticSystem<'a> {
    pub manifold: &'a ChartManifold,
}

impl<'a> MagneticSystem<'a> {
    pub fn new(manifold: &'a ChartManifold) -> Self {
        Self { manifold }
    }
}

impl FlowSystem for MagneticSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.manifold.dim
    }

    fn rhs(&self, chart: usize, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.manifold.dim;
        let p = ChartPoint { chart, q: DVector::from_row_slice(&y[..n]) };
        let v = DVector::from_row_slice(&y[n..]);
        let gamma = christoffel(self.manifold, &p)?;
        let b = lorentz_endomorphism(self.manifold, &p)?;
        let vdot = &b * &v - gamma.apply(&v, &v);
        dy[..n].copy_from_slice(&y[n..]);
        dy[n..].copy_from_slice(vdot.as_slice());
        Ok(())
    }

    fn invariant(&self, chart: usize, y: &[f64]) -> f64 {
        let n = self.manifold.dim;
        let p = ChartPoint { chart, q: DVector::from_row_slice(&y[..n]) };
        self.manifold.norm(&p, &DVector::from_row_slice(&y[n..]))
    }

    fn check_chart(&self, chart: usize, y: &[f64]) -> Result<ChartCheck> {
        let m = self.manifold;
        let n = m.dim;
        let current = m.chart(chart)?;
        let q = DVector::from_row_slice(&y[..n]);
        let margin = current.relative_margin(&q);
        if margin >= SWITCH_MARGIN {
            return Ok(ChartCheck::Stay);
        }
        let mut best: Option<(f64, usize, DVector<f64>)> = None;
        for tr in &current.transitions {
            let mapped = (tr.map)(&q);
            let target_margin = m.chart(tr.target)?.relative_margin(&mapped);
            if target_margin >= ACCEPT_MARGIN && best.as_ref().is_none_or(|b| target_margin > b.0) {
                best = Some((target_margin, tr.target, mapped));
            }
        }
        match best {
            Some((_, target, mapped)) => {
                let tr = current.transition_to(target).expect("transition exists");
                let v = (tr.jacobian)(&q) * DVector::from_row_slice(&y[n..]);
                let y: Vec<f64> = mapped.iter().chain(v.iter()).copied().collect();
                Ok(ChartCheck::Switch { chart: target, y })
            }
            None if margin < 0.0 => Err(Error::ChartTransition { chart, q: q.as_slice().to_vec() }),
            None => Ok(ChartCheck::Stay),
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
        return Err(Error::InvalidArgument(format!(
            "integrator tolerance {tol:e} outside [{:e}, {:e}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    Ok(())
}

/// Integrates the magnetic flow from `state` over `[0, t_end]` (`t_end` may
/// be negative).
pub fn integrate(
    m: &ChartManifold,
    state: &TangentState,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    check_tol(tol)?;
    let sys = MagneticSystem::new(m);
    integrate_system(&sys, state.chart, &state.to_vec(), 0.0, t_end, &IntegratorOptions::with_tol(tol))
}

/// Conformal factor `q ↦ (a(q), ∂₁a, ∂₂a)`.
pub type ConformalFactor = dyn Fn(&[f64]) -> (f64, [f64; 2]) + Send + Sync;

/// Flat 2-torus base with `σ = dq₁∧dq₂`, fibre `R²` with `ρ = dv₁∧dv₂`,
/// Hamiltonian `H = ½ a(q)|v|²`.
#[derive(Clone)]
pub struct ModelBundleSystem {
    pub label: String,
    a: Arc<ConformalFactor>,
    /// Set when `a` is known to be constant.
    pub constant: bool,
}

impl fmt::Debug for ModelBundleSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelBundleSystem").field("label", &self.label).finish()
    }
}

impl ModelBundleSystem {
    pub fn new(label: impl Into<String>, a: Arc<ConformalFactor>) -> Self {
        Self { label: label.into(), a, constant: false }
    }

    pub fn constant(a0: f64) -> Self {
        Self {
            label: format!("a = {a0}"),
            a: Arc::new(move |_| (a0, [0.0, 0.0])),
            constant: true,
        }
    }

    /// `a = 1 + amplitude·sin q₁`.
    pub fn sinusoidal(amplitude: f64) -> Self {
        if amplitude == 0.0 {
            return Self::constant(1.0);
        }
        Self::new(
            format!("a = 1 + {amplitude} sin q1"),
            Arc::new(move |q: &[f64]| (1.0 + amplitude * q[0].sin(), [amplitude * q[0].cos(), 0.0])),
        )
    }

    pub fn factor(&self, q: &[f64]) -> (f64, [f64; 2]) {
        (self.a)(q)
    }

    /// Minimum of `a` over an `n × n` grid of the torus.
    pub fn min_factor(&self, n: usize) -> f64 {
        let step = std::f64::consts::TAU / n as f64;
        (0..n * n)
            .map(|k| self.factor(&[(k / n) as f64 * step, (k % n) as f64 * step]).0)
            .fold(f64::INFINITY, f64::min)
    }

    /// `X_{−a}`, defined by `ι_X σ = −d(−a) = da`: `(∂₂a, −∂₁a)`.
    pub fn x_minus_a(&self, q: &[f64]) -> [f64; 2] {
        let (_, da) = self.factor(q);
        [da[1], -da[0]]
    }
}

/// Hamilton's equations for `H = ½ a|v|²` with `ι_X(σ ⊕ ρ) = −dH`:
/// `v̇ = a J v` and `q̇ = ½|v|² (−∂₂a, ∂₁a)`.
pub fn model_bundle_vector_field(s: &ModelBundleSystem, q: &[f64], v: &[f64]) -> ([f64; 2], [f64; 2]) {
    let (a, da) = s.factor(q);
    let half = 0.5 * (v[0] * v[0] + v[1] * v[1]);
    ([-half * da[1], half * da[0]], [-a * v[1], a * v[0]])
}

impl FlowSystem for ModelBundleSystem {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, _: usize, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (qd, vd) = model_bundle_vector_field(self, &y[..2], &y[2..]);
        dy[..2].copy_from_slice(&qd);
        dy[2..].copy_from_slice(&vd);
        Ok(())
    }

    fn invariant(&self, _: usize, y: &[f64]) -> f64 {
        0.5 * self.factor(&y[..2]).0 * (y[2] * y[2] + y[3] * y[3])
    }
}

/// Integrates the model system from `(q, v)` over `[0, t_end]`.
pub fn integrate_model(
    s: &ModelBundleSystem,
    q: [f64; 2],
    v: [f64; 2],
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    check_tol(tol)?;
    if s.min_factor(64) <= 0.0 {
        return Err(Error::InvalidArgument(format!("{}: conformal factor must be positive", s.label)));
    }
    let y = [q[0], q[1], v[0], v[1]];
    integrate_system(s, 0, &y, 0.0, t_end, &IntegratorOptions::with_tol(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::builtin::{flat_torus, round_sphere};

    #[test]
    fn flat_rotation_field() {
        let m = flat_torus(2);
        let s = TangentState::new(&m, ChartPoint::new(0, vec![0.0, 0.0]), DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let (qd, vd) = magnetic_vector_field(&m, &s).unwrap();
        assert_eq!(qd.as_slice(), &[1.0, 0.0]);
        assert!((vd - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn sphere_latitude_circle_acceleration() {
        // Chart 0 origin is the south pole; the orbit through q=(x0,0) with
        // v ∝ (0,1) is a latitude circle. Its coordinate acceleration: circle of
        // coordinate radius x0 centred at 0, speed s = |v|, so v̇ = −s²/x0 · ê_x.
        let m = round_sphere();
        let eps: f64 = 0.3;
        let r = eps.atan();
        let x0 = (r / 2.0).tan();
        let p = ChartPoint::new(0, vec![x0, 0.0]);
        let s = TangentState::with_energy(&m, p, &DVector::from_vec(vec![0.0, 1.0]), eps).unwrap();
        let (_, vd) = magnetic_vector_field(&m, &s).unwrap();
        let speed = s.v[1];
        assert!((vd[0] + speed * speed / x0).abs() < 1e-12, "{vd}");
        assert!(vd[1].abs() < 1e-14);
    }

    #[test]
    fn model_bundle_examples() {
        let s = ModelBundleSystem::constant(1.0);
        let (qd, vd) = model_bundle_vector_field(&s, &[0.3, 0.2], &[0.1, 0.0]);
        assert_eq!(qd, [0.0, 0.0]);
        assert_eq!(vd, [0.0, 0.1]);

        let s = ModelBundleSystem::sinusoidal(0.3);
        let (qd, vd) = model_bundle_vector_field(&s, &[0.7, 1.0], &[0.0, 0.0]);
        assert_eq!(qd, [0.0, 0.0]);
        assert_eq!(vd, [0.0, 0.0]);

        // base speed (ε²/2)|da|
        let eps = 0.2;
        let q = [0.7, 1.0];
        let (qd, _) = model_bundle_vector_field(&s, &q, &[eps * 0.6, eps * 0.8]);
        let (_, da) = s.factor(&q);
        let expected = 0.5 * eps * eps * da[0].hypot(da[1]);
        assert!((qd[0].hypot(qd[1]) - expected).abs() < 1e-15);
    }

    #[test]
    fn tolerance_range_enforced() {
        let m = flat_torus(2);
        let s = TangentState::new(&m, ChartPoint::new(0, vec![0.0, 0.0]), DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(integrate(&m, &s, 1.0, 1e-3).is_err());
        assert!(integrate(&m, &s, 1.0, 1e-15).is_err());
    }
}
