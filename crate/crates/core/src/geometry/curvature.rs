//! Nijenhuis tensor, Chern-connection audit and the corrected holomorphic
//! sectional curvature `K̂ = K − |N*_v v|²/24`.

use nalgebra::{DMatrix, DVector};

use super::connection::{chern_connection, covariant_acs_derivative, covariant_metric_derivative};
use super::connection::{curvature_tensor, Christoffel, ConnectionKind, CurvatureTensor};
use super::manifold::{ChartManifold, ChartPoint};
use crate::error::{Error, Result};

/// Unit-norm tolerance accepted by [`khat`].
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Nijenhuis tensor stored as `N^k_{ij}`, with
/// `N(X,Y) = [X,Y] + J[JX,Y] + J[X,JY] − [JX,JY]`.
#[derive(Debug, Clone)]
pub struct Nijenhuis(Christoffel);

impl Nijenhuis {
    /// `N(u, w)`.
    pub fn apply(&self, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        self.0.apply(u, w)
    }

    /// The endomorphism `N_v = N(v, ·)`.
    pub fn partial(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.0.dim();
        DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| self.0.get(k, i, j) * v[i]).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

/// Nijenhuis tensor from `J` and its coordinate derivatives (brackets of
/// coordinate fields vanish, so only derivatives of `J` contribute).
pub fn nijenhuis_tensor(m: &ChartManifold, p: &ChartPoint) -> Result<Nijenhuis> {
    let n = m.dim;
    let j = m.acs(p)?;
    let dj = m.acs_derivative(p)?;
    let mut out = Christoffel::zeros(n);
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += j[(k, l)] * (dj[a][(l, b)] - dj[b][(l, a)]);
                    s -= j[(l, a)] * dj[l][(k, b)] - j[(l, b)] * dj[l][(k, a)];
                }
                out.set(k, a, b, s);
            }
        }
    }
    Ok(Nijenhuis(out))
}

pub fn nijenhuis(
    m: &ChartManifold,
    p: &ChartPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(nijenhuis_tensor(m, p)?.apply(u, v))
}

/// g-adjoint of an endomorphism: `A* = g⁻¹ Aᵀ g`.
pub(crate) fn adjoint(g: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let chol = g.clone().cholesky().expect("metric checked positive definite");
    chol.solve(&(a.transpose() * g))
}

/// `T_v = T(v, ·)` as a matrix.
pub(crate) fn torsion_partial(t: &Christoffel, v: &DVector<f64>) -> DMatrix<f64> {
    let n = t.dim();
    DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| t.get(k, i, j) * v[i]).sum())
}

/// Residuals of the Chern connection's defining properties.
#[derive(Debug, Clone, PartialEq)]
pub struct ChernAudit {
    /// `max |∇g|`.
    pub metric: f64,
    /// `max |∇J|`.
    pub acs: f64,
    /// `max |T(J·,·) − T(·,J·)|` over coordinate vectors.
    pub torsion_type: f64,
    /// `max |T + N/4|`.
    pub torsion_nijenhuis: f64,
    /// `max |N|`, zero exactly when `J` is integrable.
    pub nijenhuis: f64,
}

impl ChernAudit {
    pub fn worst(&self) -> f64 {
        self.metric.max(self.acs).max(self.torsion_type).max(self.torsion_nijenhuis)
    }
}

/// Computes the Chern connection at `p` and measures how well it satisfies
/// `∇g = 0`, `∇J = 0`, `T(J·,·) = T(·,J·)` and `T = −N/4`.
pub fn chern_audit(m: &ChartManifold, p: &ChartPoint) -> Result<ChernAudit> {
    let report = m.check_structure(p)?;
    if let Some(c) = report.compatibility {
        if c > 1e-10 {
            return Err(Error::IncompatibleStructure(format!(
                "(g, J) compatibility residual {c:e} at {:?}",
                p.q.as_slice()
            )));
        }
    }
    let n = m.dim;
    let chern = chern_connection(m, p)?;
    let metric = covariant_metric_derivative(m, p, &chern)?
        .iter()
        .fold(0.0_f64, |w, d| w.max(d.amax()));
    let acs = covariant_acs_derivative(m, p, &chern)?
        .iter()
        .fold(0.0_f64, |w, d| w.max(d.amax()));
    let torsion = chern.torsion();
    let nij = nijenhuis_tensor(m, p)?;
    let j = m.acs(p)?;
    let mut torsion_type: f64 = 0.0;
    let mut torsion_nijenhuis: f64 = 0.0;
    for a in 0..n {
        let ea = DVector::from_fn(n, |i, _| if i == a { 1.0 } else { 0.0 });
        let jea = &j * &ea;
        for b in 0..n {
            let eb = DVector::from_fn(n, |i, _| if i == b { 1.0 } else { 0.0 });
            let jeb = &j * &eb;
            let lhs = torsion.apply(&jea, &eb);
            let rhs = torsion.apply(&ea, &jeb);
            torsion_type = torsion_type.max((lhs - rhs).amax());
            let t = torsion.apply(&ea, &eb);
            let nn = nij.apply(&ea, &eb);
            torsion_nijenhuis = torsion_nijenhuis.max((t + nn * 0.25).amax());
        }
    }
    Ok(ChernAudit { metric, acs, torsion_type, torsion_nijenhuis, nijenhuis: nij.max_abs() })
}

/// Pointwise curvature sample on the unit sphere bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSample {
    pub chart: usize,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    /// Holomorphic sectional curvature of the Chern connection.
    pub k: f64,
    /// `|N*_v v|²`.
    pub nstar2: f64,
    /// `K − nstar2 / 24`.
    pub khat: f64,
    /// `K − (2/3)|T*_v v|²`, the torsion form of the same quantity.
    pub khat_torsion: f64,
}

/// Precomputed pointwise data for repeated `K̂` evaluations at one point.
pub struct KhatContext {
    g: DMatrix<f64>,
    j: DMatrix<f64>,
    curvature: CurvatureTensor,
    torsion: Christoffel,
    nijenhuis: Nijenhuis,
}

impl KhatContext {
    pub fn new(m: &ChartManifold, p: &ChartPoint) -> Result<Self> {
        let curvature = curvature_tensor(m, p, ConnectionKind::Chern)?;
        let torsion = chern_connection(m, p)?.torsion();
        Ok(Self {
            g: m.metric(p),
            j: m.acs(p)?,
            curvature,
            torsion,
            nijenhuis: nijenhuis_tensor(m, p)?,
        })
    }

    fn norm2(&self, w: &DVector<f64>) -> f64 {
        w.dot(&(&self.g * w))
    }

    /// `(K, |N*_v v|², |T*_v v|²)` at a unit vector.
    pub fn parts(&self, v: &DVector<f64>) -> Result<(f64, f64, f64)> {
        let norm = self.norm2(v).sqrt();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Normalization { norm });
        }
        let jv = &self.j * v;
        let k = self.curvature.apply(v, &jv, &jv).dot(&(&self.g * v));
        let n_star = adjoint(&self.g, &self.nijenhuis.partial(v)) * v;
        let t_star = adjoint(&self.g, &torsion_partial(&self.torsion, v)) * v;
        Ok((k, self.norm2(&n_star), self.norm2(&t_star)))
    }

    pub fn khat(&self, v: &DVector<f64>) -> Result<f64> {
        let (k, n2, _) = self.parts(v)?;
        Ok(k - n2 / 24.0)
    }

    pub fn acs(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.g
    }
}

pub fn khat(m: &ChartManifold, p: &ChartPoint, v: &DVector<f64>) -> Result<CurvatureSample> {
    let norm = m.norm(p, v);
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Normalization { norm });
    }
    let ctx = KhatContext::new(m, p)?;
    let (k, nstar2, tstar2) = ctx.parts(v)?;
    Ok(CurvatureSample {
        chart: p.chart,
        q: p.q.as_slice().to_vec(),
        v: v.as_slice().to_vec(),
        k,
        nstar2,
        khat: k - nstar2 / 24.0,
        khat_torsion: k - 2.0 / 3.0 * tstar2,
    })
}

/// Max − min of `K̂(cos θ v + sin θ Jv)` over an equally spaced θ grid.
pub fn khat_fiber_spread(
    m: &ChartManifold,
    p: &ChartPoint,
    v: &DVector<f64>,
    angles: usize,
) -> Result<f64> {
    let ctx = KhatContext::new(m, p)?;
    let jv = ctx.acs() * v;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in 0..angles {
        let theta = std::f64::consts::TAU * s as f64 / angles as f64;
        let w = v * theta.cos() + &jv * theta.sin();
        let value = ctx.khat(&w)?;
        lo = lo.min(value);
        hi = hi.max(value);
    }
    Ok(hi - lo)
}

/// g-orthonormal basis of the complement of `span{v, Jv}`.
pub(crate) fn complex_complement(
    g: &DMatrix<f64>,
    j: &DMatrix<f64>,
    v: &DVector<f64>,
) -> Vec<DVector<f64>> {
    let n = v.len();
    let ip = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(g * b));
    let mut basis: Vec<DVector<f64>> = vec![v.clone(), j * v];
    let mut out = Vec::new();
    for axis in 0..n {
        if basis.len() == n {
            break;
        }
        let mut w = DVector::from_fn(n, |i, _| if i == axis { 1.0 } else { 0.0 });
        for b in &basis {
            let c = ip(&w, b) / ip(b, b);
            w -= b * c;
        }
        let len = ip(&w, &w).sqrt();
        if len > 1e-8 {
            w /= len;
            basis.push(w.clone());
            out.push(w);
        }
    }
    out
}

/// Vertical differential of `K̂` on the fibre of the complex projectivisation:
/// components of `d/ds K̂((v + s w)/|v + s w|)` over an orthonormal basis of
/// `{v, Jv}^⊥`. Empty on surfaces.
pub fn khat_vertical_differential(
    m: &ChartManifold,
    p: &ChartPoint,
    v: &DVector<f64>,
) -> Result<Vec<f64>> {
    let ctx = KhatContext::new(m, p)?;
    let h = 1e-4;
    let normalize = |w: DVector<f64>| {
        let len = w.dot(&(ctx.metric() * &w)).sqrt();
        w / len
    };
    complex_complement(ctx.metric(), ctx.acs(), v)
        .into_iter()
        .map(|w| {
            let plus = ctx.khat(&normalize(v + &w * h))?;
            let minus = ctx.khat(&normalize(v - &w * h))?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

/// Horizontal differential `d^h K̂` at `(q, v)`: coordinate components of the
/// derivative along Chern-horizontal lifts of the coordinate vectors.
pub fn khat_horizontal_differential(
    m: &ChartManifold,
    p: &ChartPoint,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = m.dim;
    let h = 10.0 * super::connection::curvature_step(m, p)?;
    m.require_stencil(p, 2.0 * h)?;
    let chern = chern_connection(m, p)?;
    let mut out = DVector::zeros(n);
    for axis in 0..n {
        let e = DVector::from_fn(n, |i, _| if i == axis { 1.0 } else { 0.0 });
        let transport = chern.apply(&e, v);
        let value = |sign: f64| -> Result<f64> {
            let pp = p.offset(axis, sign * h);
            let w = v - &transport * (sign * h);
            let w = &w / m.norm(&pp, &w);
            Ok(khat(m, &pp, &w)?.khat)
        };
        out[axis] = (value(1.0)? - value(-1.0)?) / (2.0 * h);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::geometry::builtin::{builtin, kodaira_thurston, BUILTIN_MANIFOLDS};

    // Brute-force values from symbolic Levi-Civita/Chern coefficients of the
    // left-invariant metric, evaluated at v = cos θ e1 + sin θ (cos φ e2 + sin φ e4).
    const KT_K_E1: f64 = 0.125;
    const KT_NSTAR2_E1: f64 = 1.0;
    const KT_KHAT_E1: f64 = 1.0 / 12.0;
    const KT_KHAT_05_0: f64 = 0.0641792627445;
    const KT_KHAT_05_1: f64 = -0.0611627286719;

    fn frame_vector(m: &ChartManifold, p: &ChartPoint, c: [f64; 4]) -> DVector<f64> {
        m.unitary_frame(p).unwrap() * DVector::from_row_slice(&c)
    }

    fn kt_direction(theta: f64, phi: f64) -> [f64; 4] {
        [theta.cos(), theta.sin() * phi.cos(), 0.0, theta.sin() * phi.sin()]
    }

    #[test]
    fn kodaira_thurston_fixture() {
        let m = kodaira_thurston();
        for q in [[0.0; 4], [0.7, -1.3, 2.0, 0.4]] {
            let p = ChartPoint::new(0, q.to_vec());
            let s = khat(&m, &p, &frame_vector(&m, &p, [1.0, 0.0, 0.0, 0.0])).unwrap();
            assert!((s.k - KT_K_E1).abs() < 1e-8);
            assert!((s.nstar2 - KT_NSTAR2_E1).abs() < 1e-12);
            assert!((s.khat - KT_KHAT_E1).abs() < 1e-8);
            assert!((s.khat - s.khat_torsion).abs() < 1e-10);
            for (theta, phi, expected) in [(0.5, 0.0, KT_KHAT_05_0), (0.5, 1.0, KT_KHAT_05_1)] {
                let v = frame_vector(&m, &p, kt_direction(theta, phi));
                let s = khat(&m, &p, &v).unwrap();
                assert!((s.khat - expected).abs() < 1e-8, "{} vs {expected}", s.khat);
            }
        }
    }

    #[test]
    fn kodaira_thurston_nijenhuis_and_torsion() {
        let m = kodaira_thurston();
        let p = ChartPoint::new(0, vec![0.4, 0.1, -0.3, 0.2]);
        let f = m.unitary_frame(&p).unwrap();
        let e: Vec<DVector<f64>> = (0..4).map(|i| f.column(i).into_owned()).collect();
        let n12 = nijenhuis(&m, &p, &e[0], &e[1]).unwrap();
        assert!((&n12 - &e[2]).amax() < 1e-12);
        let t = chern_connection(&m, &p).unwrap().torsion();
        assert!((t.apply(&e[0], &e[1]) + &e[2] * 0.25).amax() < 1e-12);
        let j = m.acs(&p).unwrap();
        let u = DVector::from_vec(vec![0.2, -0.5, 0.9, 1.1]);
        let w = DVector::from_vec(vec![-0.7, 0.3, 0.1, 0.6]);
        let lhs = nijenhuis(&m, &p, &(&j * &u), &w).unwrap();
        let rhs = -(&j * nijenhuis(&m, &p, &u, &w).unwrap());
        assert!((lhs - rhs).amax() < 1e-12);
        assert!(nijenhuis(&m, &p, &u, &u).unwrap().amax() < 1e-12);
        let audit = chern_audit(&m, &p).unwrap();
        assert!(audit.worst() < 1e-8, "{audit:?}");
        assert!((audit.nijenhuis - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrable_examples_and_space_forms() {
        for name in BUILTIN_MANIFOLDS.iter().filter(|n| **n != "kodaira-thurston") {
            let m = builtin(name, &BTreeMap::new()).unwrap();
            let p = ChartPoint::new(0, vec![0.45; m.dim]);
            let audit = chern_audit(&m, &p).unwrap();
            assert!(audit.nijenhuis < 1e-9, "{name}");
            assert!(audit.worst() < 1e-8, "{name}: {audit:?}");
            let mut v = DVector::zeros(m.dim);
            v[0] = 1.0;
            let v = &v / m.norm(&p, &v);
            let s = khat(&m, &p, &v).unwrap();
            if let Some(kappa) = m.space_form_curvature {
                assert!((s.khat - kappa).abs() < 1e-6, "{name}: {}", s.khat);
            }
            assert!(khat_fiber_spread(&m, &p, &v, 32).unwrap() < 1e-8, "{name}");
        }
    }

    #[test]
    fn kodaira_thurston_fiber_invariance_and_vertical_gradient() {
        let m = kodaira_thurston();
        let p = ChartPoint::new(0, vec![0.0; 4]);
        for (theta, phi) in [(0.0, 0.0), (0.5, 1.0), (1.2, -0.4)] {
            let v = frame_vector(&m, &p, kt_direction(theta, phi));
            assert!(khat_fiber_spread(&m, &p, &v, 32).unwrap() < 1e-8);
        }
        let v = frame_vector(&m, &p, kt_direction(0.5, 1.0));
        let dv = khat_vertical_differential(&m, &p, &v).unwrap();
        assert_eq!(dv.len(), 2);
        assert!(dv.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-2);
    }

    #[test]
    fn non_unit_vector_is_rejected() {
        let m = kodaira_thurston();
        let p = ChartPoint::new(0, vec![0.0; 4]);
        let v = DVector::from_vec(vec![1.1, 0.0, 0.0, 0.0]);
        assert!(matches!(khat(&m, &p, &v), Err(Error::Normalization { .. })));
    }
}
