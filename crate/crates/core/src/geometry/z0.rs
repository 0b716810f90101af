//! Pointwise check of `(d ι_{Z₀} dτ)(Z₀, (Jv)^v) = K̂(v)` on the tangent
//! bundle, using the Chern horizontal/vertical splitting.
//!
//! Coordinates on `TQ` are `x = (q, v)`. The angular form is
//! `τ(ξ) = β(v, ξ^∇)` with `ξ^∇ = δv + Γ(δq, v)`, and
//! `Z₀ = (−Jv)^h + (−⅓ J T*_v v)^v`, where `ζ^h = (ζ, −Γ(ζ, v))`.

use nalgebra::{DMatrix, DVector};

use super::connection::{chern_connection, Christoffel};
use super::curvature::{adjoint, khat, torsion_partial};
use super::manifold::{ChartManifold, ChartPoint};
use crate::error::Result;

/// Both sides of the identity at one point.
///
/// With `R(X,Y) = [∇_X, ∇_Y] − ∇_{[X,Y]}` the horizontal block of `dτ` is
/// `−β(R(·,·)v, v)`, so the left-hand side evaluates to `−K − ⅔|T*_v v|²`
/// rather than `K̂`. Both comparisons are reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Z0Check {
    pub lhs: f64,
    pub khat: f64,
    /// `|lhs − K̂|`.
    pub residual: f64,
    /// `−K − ⅔|T*_v v|²`.
    pub reversed: f64,
    /// `|lhs − reversed|`.
    pub reversed_residual: f64,
}

struct Bundle<'a> {
    m: &'a ChartManifold,
    chart: usize,
    n: usize,
    inner: f64,
}

impl Bundle<'_> {
    fn split(&self, x: &DVector<f64>) -> (ChartPoint, DVector<f64>) {
        let q = x.rows(0, self.n).into_owned();
        let v = x.rows(self.n, self.n).into_owned();
        (ChartPoint { chart: self.chart, q }, v)
    }

    fn chern(&self, p: &ChartPoint) -> Result<Christoffel> {
        chern_connection(self.m, p)
    }

    /// Coefficients of `τ` in the coordinate coframe `(dq, dv)`.
    fn tau(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        let (p, v) = self.split(x);
        let gamma = self.chern(&p)?;
        let beta = self.m.magnetic(&p);
        // covector β(v, ·)
        let bv = beta.transpose() * &v;
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                for j in 0..n {
                    s += bv[b] * gamma.get(b, i, j) * v[j];
                }
            }
            out[i] = s;
            out[n + i] = bv[i];
        }
        Ok(out)
    }

    fn z0(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        let (p, v) = self.split(x);
        let gamma = self.chern(&p)?;
        let g = self.m.metric(&p);
        let j = self.m.acs(&p)?;
        let zeta = -(&j * &v);
        let t_star = adjoint(&g, &torsion_partial(&gamma.torsion(), &v)) * &v;
        let vertical = -(&j * t_star) / 3.0;
        let horizontal_v = -gamma.apply(&zeta, &v);
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&zeta);
        out.rows_mut(n, n).copy_from(&(horizontal_v + vertical));
        Ok(out)
    }

    /// `(dω)_{AB} = ∂_A ω_B − ∂_B ω_A` by central differences.
    fn exterior<F>(&self, x: &DVector<f64>, h: f64, mut omega: F) -> Result<DMatrix<f64>>
    where
        F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    {
        let dim = 2 * self.n;
        let mut d = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            let mut xp = x.clone();
            xp[a] += h;
            let mut xm = x.clone();
            xm[a] -= h;
            let row = (omega(&xp)? - omega(&xm)?) / (2.0 * h);
            d.row_mut(a).copy_from(&row.transpose());
        }
        Ok(&d - d.transpose())
    }

    /// `α = ι_{Z₀} dτ`.
    fn alpha(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let dtau = self.exterior(x, self.inner, |y| self.tau(y))?;
        let z = self.z0(x)?;
        Ok(dtau.transpose() * z)
    }
}

/// Evaluates `(d ι_{Z₀} dτ)(Z₀, (Jv)^v)` with outer difference step `h`
/// (the inner derivative of `τ` uses `h/10`) and compares with `K̂(v)`.
pub fn verify_z0_identity(
    m: &ChartManifold,
    p: &ChartPoint,
    v: &DVector<f64>,
    h: f64,
) -> Result<Z0Check> {
    let sample = khat(m, p, v)?;
    let n = m.dim;
    let inner = h / 10.0;
    m.require_stencil(p, h + inner + 2.0 * m.step(p.chart)?)?;
    let bundle = Bundle { m, chart: p.chart, n, inner };
    let mut x = DVector::zeros(2 * n);
    x.rows_mut(0, n).copy_from(&p.q);
    x.rows_mut(n, n).copy_from(v);
    let dalpha = bundle.exterior(&x, h, |y| bundle.alpha(y))?;
    let z = bundle.z0(&x)?;
    let j = m.acs(p)?;
    let mut y = DVector::zeros(2 * n);
    y.rows_mut(n, n).copy_from(&(&j * v));
    let lhs = z.dot(&(&dalpha * &y));
    let reversed = sample.khat_torsion - 2.0 * sample.k;
    Ok(Z0Check {
        lhs,
        khat: sample.khat,
        residual: (lhs - sample.khat).abs(),
        reversed,
        reversed_residual: (lhs - reversed).abs(),
    })
}
