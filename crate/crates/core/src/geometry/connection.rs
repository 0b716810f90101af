//! Lorentz endomorphism, Levi-Civita and Chern connections, torsion and
//! curvature in chart coordinates.
//!
//! Index convention for connection coefficients: `∇_{∂_i} ∂_j = Γ^k_{ij} ∂_k`,
//! so the first lower index is the differentiation direction. Curvature is
//! `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z`.

use nalgebra::{DMatrix, DVector};

use super::manifold::{ChartManifold, ChartPoint};
use crate::error::{Error, Result};

/// Relative step used when differentiating connection coefficients.
pub const CURVATURE_STEP_FACTOR: f64 = 10.0;

/// Connection coefficients `Γ^k_{ij}` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.data[(k * self.n + i) * self.n + j] = value;
    }

    /// `Γ(a, b)^k = Γ^k_{ij} a^i b^j`, i.e. the non-derivative part of `∇_a b`.
    pub fn apply(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                if a[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += self.get(k, i, j) * a[i] * b[j];
                }
            }
            s
        })
    }

    /// Connection matrix in direction `i`: `(Γ_i)^k_j = Γ^k_{ij}`.
    pub fn direction(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |k, j| self.get(k, i, j))
    }

    /// Torsion `T^k_{ij} = Γ^k_{ij} − Γ^k_{ji}`.
    pub fn torsion(&self) -> Christoffel {
        let n = self.n;
        let mut t = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    t.set(k, i, j, self.get(k, i, j) - self.get(k, j, i));
                }
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub(crate) fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn from_slice(n: usize, data: &[f64]) -> Self {
        Self { n, data: data.to_vec() }
    }
}

/// Which connection a curvature evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionKind {
    LeviCivita,
    Chern,
}

/// The endomorphism `B` with `g(Bu, w) = β(u, w)`; as matrices `B = −g⁻¹β`.
pub fn lorentz_endomorphism(m: &ChartManifold, p: &ChartPoint) -> Result<DMatrix<f64>> {
    let g = m.metric(p);
    let beta = m.magnetic(p);
    let chol = g.clone().cholesky().ok_or_else(|| Error::DegenerateMetric {
        chart: p.chart,
        min_eigenvalue: g.clone().symmetric_eigenvalues().min(),
    })?;
    Ok(-chol.solve(&beta))
}

fn metric_inverse(p: &ChartPoint, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone().cholesky().map(|c| c.inverse()).ok_or_else(|| Error::DegenerateMetric {
        chart: p.chart,
        min_eigenvalue: g.clone().symmetric_eigenvalues().min(),
    })
}

/// Levi-Civita coefficients
/// `Γ^k_{ij} = ½ g^{kl} (∂_i g_{lj} + ∂_j g_{li} − ∂_l g_{ij})`.
pub fn christoffel(m: &ChartManifold, p: &ChartPoint) -> Result<Christoffel> {
    let n = m.dim;
    let g = m.metric(p);
    let ginv = metric_inverse(p, &g)?;
    let dg = m.metric_derivative(p)?;
    let mut lowered = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                lowered[(l * n + i) * n + j] =
                    0.5 * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
            }
        }
    }
    let mut gamma = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|l| ginv[(k, l)] * lowered[(l * n + i) * n + j]).sum();
                gamma.set(k, i, j, s);
            }
        }
    }
    Ok(gamma)
}

/// `(∇_i J)` for every direction, with the given connection.
pub fn covariant_acs_derivative(
    m: &ChartManifold,
    p: &ChartPoint,
    gamma: &Christoffel,
) -> Result<Vec<DMatrix<f64>>> {
    let j = m.acs(p)?;
    let dj = m.acs_derivative(p)?;
    Ok((0..m.dim)
        .map(|i| {
            let gi = gamma.direction(i);
            &dj[i] + &gi * &j - &j * &gi
        })
        .collect())
}

/// `(∇_i g)_{jk} = ∂_i g_{jk} − Γ^m_{ij} g_{mk} − Γ^m_{ik} g_{jm}`.
pub fn covariant_metric_derivative(
    m: &ChartManifold,
    p: &ChartPoint,
    gamma: &Christoffel,
) -> Result<Vec<DMatrix<f64>>> {
    let g = m.metric(p);
    let dg = m.metric_derivative(p)?;
    Ok((0..m.dim)
        .map(|i| {
            let gi = gamma.direction(i);
            let lowered = gi.transpose() * &g;
            &dg[i] - &lowered - lowered.transpose()
        })
        .collect())
}

/// Chern connection of an almost Kähler structure, `∇^{LC} − ½ J (∇^{LC} J)`.
///
/// Callers that need the defining properties verified should use
/// [`chern_audit`](super::curvature::chern_audit).
pub fn chern_connection(m: &ChartManifold, p: &ChartPoint) -> Result<Christoffel> {
    if !m.has_acs() {
        return Err(m.missing("almost complex structure"));
    }
    if !m.compatible {
        return Err(Error::IncompatibleStructure(format!(
            "{} does not declare a compatible (g, J)",
            m.name
        )));
    }
    let n = m.dim;
    let lc = christoffel(m, p)?;
    let j = m.acs(p)?;
    let nabla_j = covariant_acs_derivative(m, p, &lc)?;
    let mut chern = lc.clone();
    for (i, nj) in nabla_j.iter().enumerate() {
        let correction = &j * nj * 0.5;
        for k in 0..n {
            for l in 0..n {
                chern.set(k, i, l, lc.get(k, i, l) - correction[(k, l)]);
            }
        }
    }
    Ok(chern)
}

pub fn connection(m: &ChartManifold, p: &ChartPoint, kind: ConnectionKind) -> Result<Christoffel> {
    match kind {
        ConnectionKind::LeviCivita => christoffel(m, p),
        ConnectionKind::Chern => chern_connection(m, p),
    }
}

/// Step used for differentiating connection coefficients at `p`.
pub fn curvature_step(m: &ChartManifold, p: &ChartPoint) -> Result<f64> {
    Ok(CURVATURE_STEP_FACTOR * m.step(p.chart)?)
}

/// Curvature tensor `R^l_{kij}` stored so that `R(∂_i,∂_j)∂_k = R^l_{kij} ∂_l`.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    n: usize,
    data: Vec<f64>,
}

impl CurvatureTensor {
    #[inline]
    fn idx(&self, l: usize, k: usize, i: usize, j: usize) -> usize {
        ((l * self.n + k) * self.n + i) * self.n + j
    }

    pub fn get(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        self.data[self.idx(l, k, i, j)]
    }

    /// `R(u, v) w`.
    pub fn apply(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |l, _| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let uv = u[i] * v[j];
                    if uv == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        s += self.get(l, k, i, j) * uv * w[k];
                    }
                }
            }
            s
        })
    }
}

/// Full curvature tensor of the chosen connection, differentiating the
/// coefficients by central differences.
pub fn curvature_tensor(
    m: &ChartManifold,
    p: &ChartPoint,
    kind: ConnectionKind,
) -> Result<CurvatureTensor> {
    let n = m.dim;
    let h = curvature_step(m, p)?;
    m.require_stencil(p, h)?;
    let gamma = connection(m, p, kind)?;
    let mut dgamma = Vec::with_capacity(n);
    for axis in 0..n {
        let plus = connection(m, &p.offset(axis, h), kind)?;
        let minus = connection(m, &p.offset(axis, -h), kind)?;
        let d: Vec<f64> = plus
            .as_slice()
            .iter()
            .zip(minus.as_slice())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        dgamma.push(Christoffel::from_slice(n, &d));
    }
    let mut r = CurvatureTensor { n, data: vec![0.0; n * n * n * n] };
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = dgamma[i].get(l, j, k) - dgamma[j].get(l, i, k);
                    for mm in 0..n {
                        s += gamma.get(l, i, mm) * gamma.get(mm, j, k)
                            - gamma.get(l, j, mm) * gamma.get(mm, i, k);
                    }
                    let idx = r.idx(l, k, i, j);
                    r.data[idx] = s;
                }
            }
        }
    }
    Ok(r)
}

/// `R(u, v) w` for the Levi-Civita or Chern connection.
pub fn riemann(
    m: &ChartManifold,
    p: &ChartPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    kind: ConnectionKind,
) -> Result<DVector<f64>> {
    Ok(curvature_tensor(m, p, kind)?.apply(u, v, w))
}

/// Sectional curvature of the plane spanned by `u, v` (Levi-Civita).
pub fn sectional_curvature(
    m: &ChartManifold,
    p: &ChartPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    let r = curvature_tensor(m, p, ConnectionKind::LeviCivita)?;
    let num = m.inner(p, &r.apply(u, v, v), u);
    let area = m.inner(p, u, u) * m.inner(p, v, v) - m.inner(p, u, v).powi(2);
    Ok(num / area)
}

/// Gaussian curvature of a surface.
pub fn gaussian_curvature(m: &ChartManifold, p: &ChartPoint) -> Result<f64> {
    if m.dim != 2 {
        return Err(Error::InvalidArgument(format!(
            "Gaussian curvature needs a surface, {} has dimension {}",
            m.name, m.dim
        )));
    }
    let e1 = DVector::from_vec(vec![1.0, 0.0]);
    let e2 = DVector::from_vec(vec![0.0, 1.0]);
    sectional_curvature(m, p, &e1, &e2)
}
