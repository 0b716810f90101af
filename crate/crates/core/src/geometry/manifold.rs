//! Chart-based manifold descriptions and pointwise evaluation of the metric,
//! magnetic form and almost complex structure.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::chart::Chart;
use crate::error::{Error, Result};

/// Default central-difference step before scaling by the chart extent.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Pointwise fields of a manifold, evaluated in a given chart.
///
/// Derivative callbacks return one matrix per coordinate direction
/// (`out[i] = ∂_i F`). When they return `None` the geometry falls back to
/// central differences.
pub trait LocalFields: Send + Sync {
    fn metric(&self, chart: usize, q: &DVector<f64>) -> DMatrix<f64>;

    fn metric_derivative(&self, _chart: usize, _q: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Magnetic 2-form as the antisymmetric matrix `β_ij = β(∂_i, ∂_j)`.
    fn magnetic(&self, chart: usize, q: &DVector<f64>) -> DMatrix<f64>;

    fn acs(&self, _chart: usize, _q: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    fn acs_derivative(&self, _chart: usize, _q: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Columns `(e_1, …, e_m, J e_1, …, J e_m)` of a g-orthonormal frame
    /// adapted to `J`, when the manifold has a global one.
    fn unitary_frame(&self, _chart: usize, _q: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

/// A point given by chart id and coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub chart: usize,
    pub q: DVector<f64>,
}

impl ChartPoint {
    pub fn new(chart: usize, q: impl Into<Vec<f64>>) -> Self {
        Self { chart, q: DVector::from_vec(q.into()) }
    }

    pub fn offset(&self, axis: usize, delta: f64) -> Self {
        let mut q = self.q.clone();
        q[axis] += delta;
        Self { chart: self.chart, q }
    }
}

/// Axis-aligned region of chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub chart: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone)]
pub struct ChartManifold {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub dim: usize,
    pub charts: Vec<Chart>,
    pub fields: Arc<dyn LocalFields>,
    /// `g(J·,J·) = g` and `β = g(J·,·)` are claimed; checked by
    /// [`ChartManifold::check_structure`].
    pub compatible: bool,
    /// Constant holomorphic sectional curvature when the manifold is a
    /// complex space form.
    pub space_form_curvature: Option<f64>,
    /// Region used for seeded sampling of initial conditions.
    pub sampling: Region,
    pub fd_step: f64,
}

impl fmt::Debug for ChartManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartManifold")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("dim", &self.dim)
            .field("charts", &self.charts.len())
            .finish()
    }
}

impl ChartManifold {
    pub fn chart(&self, id: usize) -> Result<&Chart> {
        self.charts.get(id).filter(|c| c.id == id).ok_or(Error::UnknownChart(id))
    }

    /// Finite-difference step for the given chart.
    pub fn step(&self, chart: usize) -> Result<f64> {
        Ok(self.fd_step * self.chart(chart)?.scale())
    }

    /// Fails unless `p` is at least `4 h` away from the chart boundary.
    pub fn require_stencil(&self, p: &ChartPoint, h: f64) -> Result<()> {
        let chart = self.chart(p.chart)?;
        let distance = chart.distance_to_boundary(&p.q);
        let required = 4.0 * h;
        if distance < required {
            return Err(Error::Stencil { chart: p.chart, distance, required });
        }
        Ok(())
    }

    pub fn metric(&self, p: &ChartPoint) -> DMatrix<f64> {
        self.fields.metric(p.chart, &p.q)
    }

    pub fn magnetic(&self, p: &ChartPoint) -> DMatrix<f64> {
        self.fields.magnetic(p.chart, &p.q)
    }

    pub fn acs(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        self.fields.acs(p.chart, &p.q).ok_or_else(|| self.missing("almost complex structure"))
    }

    pub fn has_acs(&self) -> bool {
        let p = self.sample_center();
        self.fields.acs(p.chart, &p.q).is_some()
    }

    pub fn unitary_frame(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        self.fields.unitary_frame(p.chart, &p.q).ok_or_else(|| self.missing("unitary frame"))
    }

    pub(crate) fn missing(&self, structure: &'static str) -> Error {
        Error::MissingStructure { manifold: self.name.clone(), structure }
    }

    /// `∂_i g` for every coordinate direction.
    pub fn metric_derivative(&self, p: &ChartPoint) -> Result<Vec<DMatrix<f64>>> {
        if let Some(d) = self.fields.metric_derivative(p.chart, &p.q) {
            return Ok(d);
        }
        let h = self.step(p.chart)?;
        self.require_stencil(p, h)?;
        partials(self.dim, h, |axis, delta| Ok(self.metric(&p.offset(axis, delta))))
    }

    /// `∂_i J` for every coordinate direction.
    pub fn acs_derivative(&self, p: &ChartPoint) -> Result<Vec<DMatrix<f64>>> {
        if let Some(d) = self.fields.acs_derivative(p.chart, &p.q) {
            return Ok(d);
        }
        let h = self.step(p.chart)?;
        self.require_stencil(p, h)?;
        partials(self.dim, h, |axis, delta| self.acs(&p.offset(axis, delta)))
    }

    /// g-norm of a tangent vector at `p`.
    pub fn norm(&self, p: &ChartPoint, v: &DVector<f64>) -> f64 {
        (v.dot(&(self.metric(p) * v))).sqrt()
    }

    pub fn inner(&self, p: &ChartPoint, u: &DVector<f64>, w: &DVector<f64>) -> f64 {
        u.dot(&(self.metric(p) * w))
    }

    /// Centre of the sampling region.
    pub fn sample_center(&self) -> ChartPoint {
        let q: Vec<f64> = self
            .sampling
            .lower
            .iter()
            .zip(&self.sampling.upper)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        ChartPoint::new(self.sampling.chart, q)
    }

    /// Maps `p` into `target`, if a transition exists and lands inside the box.
    pub fn to_chart(&self, p: &ChartPoint, target: usize) -> Result<Option<ChartPoint>> {
        if p.chart == target {
            return Ok(Some(p.clone()));
        }
        let chart = self.chart(p.chart)?;
        let Some(tr) = chart.transition_to(target) else {
            return Ok(None);
        };
        let q = (tr.map)(&p.q);
        Ok(self.chart(target)?.contains(&q).then_some(ChartPoint { chart: target, q }))
    }

    /// Validates the structural invariants at `p`: symmetric positive definite
    /// metric, antisymmetric closed magnetic form and, when present, `J² = −I`
    /// plus compatibility if claimed.
    pub fn check_structure(&self, p: &ChartPoint) -> Result<StructureReport> {
        let g = self.metric(p);
        let symmetry = (&g - g.transpose()).amax();
        let min_eigenvalue = g.clone().symmetric_eigenvalues().min();
        if min_eigenvalue <= 0.0 {
            return Err(Error::DegenerateMetric { chart: p.chart, min_eigenvalue });
        }
        let beta = self.magnetic(p);
        let antisymmetry = (&beta + beta.transpose()).amax();
        let closedness = self.magnetic_closedness(p)?;
        let (acs_square, compatibility) = match self.fields.acs(p.chart, &p.q) {
            Some(j) => {
                let n = self.dim;
                let square = (&j * &j + DMatrix::identity(n, n)).amax();
                let compat = if self.compatible {
                    let metric_part = (j.transpose() * &g * &j - &g).amax();
                    // β(u,w) = g(Ju,w)  ⇔  β = Jᵀ g
                    let form_part = (j.transpose() * &g - &beta).amax();
                    Some(metric_part.max(form_part))
                } else {
                    None
                };
                (Some(square), compat)
            }
            None => (None, None),
        };
        Ok(StructureReport {
            metric_symmetry: symmetry,
            min_metric_eigenvalue: min_eigenvalue,
            magnetic_antisymmetry: antisymmetry,
            magnetic_closedness: closedness,
            acs_square,
            compatibility,
        })
    }

    /// Largest component of the finite-difference exterior derivative `dβ`.
    pub fn magnetic_closedness(&self, p: &ChartPoint) -> Result<f64> {
        let n = self.dim;
        if n < 3 {
            return Ok(0.0);
        }
        let h = self.step(p.chart)?;
        self.require_stencil(p, h)?;
        let d = partials(n, h, |axis, delta| Ok(self.magnetic(&p.offset(axis, delta))))?;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let v = d[i][(j, k)] + d[j][(k, i)] + d[k][(i, j)];
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Residuals of the structural invariants at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub metric_symmetry: f64,
    pub min_metric_eigenvalue: f64,
    pub magnetic_antisymmetry: f64,
    pub magnetic_closedness: f64,
    pub acs_square: Option<f64>,
    pub compatibility: Option<f64>,
}

/// Central differences of a matrix-valued function along every axis.
pub(crate) fn partials<F>(n: usize, h: f64, mut f: F) -> Result<Vec<DMatrix<f64>>>
where
    F: FnMut(usize, f64) -> Result<DMatrix<f64>>,
{
    (0..n)
        .map(|axis| {
            let plus = f(axis, h)?;
            let minus = f(axis, -h)?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}
