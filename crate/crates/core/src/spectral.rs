//! Linear symplectic analysis of normal data `(ρ, γ)`.
//!
//! Index convention, pinned here only: `ρ(w, v) = wᵀ ρ v` and
//! `γ(w, v) = wᵀ γ v`, so `ρ(w, Av) = γ(w, v)` for all `w, v` reads
//! `ρ A = γ`, i.e. `A = ρ⁻¹ γ`. With the standard `ρ = [[0, 1], [−1, 0]]`
//! and `γ = I` this gives the rotation `A = [[0, −1], [1, 0]]`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling::rng;

/// Zoll / multiplicity clustering tolerance (relative).
pub const CLUSTER_TOL: f64 = 1e-9;
/// Default denominator bound for rational reconstruction.
pub const DEFAULT_DENOM_BOUND: u64 = 1_000_000;
/// Tolerance of rational reconstruction.
pub const RATIONAL_TOL: f64 = 1e-9;

/// Isolation score `q²·err/tol` below which a convergent counts as exact.
const ISOLATED: f64 = 1e3;
/// Scores between [`ISOLATED`] and this are not decidable at the bound.
const AMBIGUOUS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rationality {
    Rational { p: u64, q: u64, err: f64 },
    NotRational,
    /// Neither verdict is safe at this denominator bound.
    Undecided,
}

/// Rational reconstruction of `x > 0` by continued-fraction convergents.
///
/// A convergent `p/q` with `q ≤ bound` is accepted when `|x − p/q| ≤ tol`
/// and it is isolated, `q²·|x − p/q| ≤ 10³·tol`; every irrational has
/// `|x − p/q| < 1/q²` convergents, so the error bound alone accepts
/// everything once `bound² > 1/tol`.
pub fn rational_approx(x: f64, bound: u64, tol: f64) -> Rationality {
    if !(x.is_finite() && x > 0.0) {
        return Rationality::NotRational;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let mut r = x;
    let mut best_score = f64::INFINITY;
    for _ in 0..64 {
        let a = r.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        let err = (x - p2 as f64 / q2 as f64).abs();
        let score = (q2 as f64).powi(2) * err / tol;
        if q2 > bound as u128 {
            // the next convergent would have qualified: bound too small
            if err <= tol && score <= ISOLATED {
                return Rationality::Undecided;
            }
            break;
        }
        if err <= tol {
            if score <= ISOLATED {
                return Rationality::Rational { p: p2 as u64, q: q2 as u64, err };
            }
            best_score = best_score.min(score);
        }
        let frac = r - a as f64;
        if frac < 1e-300 || err == 0.0 {
            break;
        }
        r = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    if best_score <= AMBIGUOUS {
        Rationality::Undecided
    } else {
        Rationality::NotRational
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearFlowClass {
    Zoll,
    /// Fully periodic; `common_period` is the least common period of `e^{tÃ}`.
    Besse { common_period: f64 },
    NotBesse,
    /// Some ratio is ambiguous at the denominator bound.
    Undecided,
}

impl LinearFlowClass {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Zoll => "zoll",
            Self::Besse { .. } => "besse",
            Self::NotBesse => "not-besse",
            Self::Undecided => "undecided-at-bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// `2k`.
    pub dim: usize,
    pub rho: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub a_tilde: DMatrix<f64>,
    pub det_a: f64,
    /// `ã₁ ≥ … ≥ ã_k > 0`, with `∏ ãᵢ = 1`.
    pub spectral: Vec<f64>,
    /// Distinct spectral numbers with their multiplicities, descending.
    pub multiplicities: Vec<(f64, usize)>,
    pub t_min: f64,
    /// Classification at [`DEFAULT_DENOM_BOUND`].
    pub class: LinearFlowClass,
}

fn scale(m: &DMatrix<f64>) -> f64 {
    m.amax().max(1e-300)
}

/// Builds `A`, `Ã` and the spectral numbers.
pub fn build_spectral(rho: &DMatrix<f64>, gamma: &DMatrix<f64>) -> Result<SpectralData> {
    let n = rho.nrows();
    if n == 0 || !n.is_multiple_of(2) || !rho.is_square() || gamma.shape() != (n, n) {
        return Err(Error::InvalidArgument(format!(
            "rho {:?} and gamma {:?} must be square of matching even dimension",
            rho.shape(),
            gamma.shape()
        )));
    }
    if (rho + rho.transpose()).amax() > 1e-12 * scale(rho) {
        return Err(Error::InvalidArgument("rho is not antisymmetric".into()));
    }
    if (gamma - gamma.transpose()).amax() > 1e-12 * scale(gamma) {
        return Err(Error::InvalidArgument("gamma is not symmetric".into()));
    }
    let chol = gamma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let lu = rho.clone().lu();
    // relative singularity test on the smallest singular value
    let sv = rho.singular_values();
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::SingularForm);
    }
    let a = lu.solve(gamma).ok_or(Error::SingularForm)?;
    // A is similar to the antisymmetric Lᵀ ρ⁻¹ L; its singular values are
    // the moduli |λ| of the eigenvalues ±i·a_j, each twice.
    let l = chol.l();
    let rho_inv_l = lu.solve(&l).ok_or(Error::SingularForm)?;
    let s = l.transpose() * rho_inv_l;
    let mut moduli: Vec<f64> = s.singular_values().iter().copied().collect();
    moduli.sort_by(|x, y| y.total_cmp(x));
    let raw: Vec<f64> = moduli.iter().step_by(2).copied().collect();
    let k = n / 2;
    let log_det: f64 = raw.iter().map(|x| 2.0 * x.ln()).sum();
    let det_a = log_det.exp();
    let norm = (log_det / (2.0 * k as f64)).exp();
    let spectral: Vec<f64> = raw.iter().map(|x| x / norm).collect();
    let a_tilde = &a / norm;
    let multiplicities = cluster(&spectral);
    let t_min = TAU / spectral[0];
    let mut data = SpectralData {
        dim: n,
        rho: rho.clone(),
        gamma: gamma.clone(),
        a,
        a_tilde,
        det_a,
        spectral,
        multiplicities,
        t_min,
        class: LinearFlowClass::Undecided,
    };
    data.class = classify_linear_flow(&data, DEFAULT_DENOM_BOUND);
    Ok(data)
}

fn cluster(values: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &x in values {
        match out.last_mut() {
            Some((rep, count)) if (*rep - x).abs() <= CLUSTER_TOL * rep.abs() => *count += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

impl SpectralData {
    pub fn k(&self) -> usize {
        self.dim / 2
    }

    /// `|ρ(w, Av) − γ(w, v)|`.
    pub fn residual(&self, w: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let lhs = w.dot(&(&self.rho * (&self.a * v)));
        let rhs = w.dot(&(&self.gamma * v));
        (lhs - rhs).abs()
    }

    /// `e^{tÃ}`.
    pub fn flow(&self, t: f64) -> DMatrix<f64> {
        (&self.a_tilde * t).exp()
    }

    /// Unit vector in the `e^{tÃ}`-invariant plane of spectral number `j`
    /// (0-based, descending order).
    pub fn mode_vector(&self, j: usize) -> Result<DVector<f64>> {
        if j >= self.k() {
            return Err(Error::InvalidArgument(format!("mode {j} out of range")));
        }
        let w = self.spectral[j];
        // kernel of Ã² + w²: real vectors rotating with frequency w
        let m = &self.a_tilde * &self.a_tilde + DMatrix::identity(self.dim, self.dim) * (w * w);
        let svd = m.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::SingularForm)?;
        let idx = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|x| x.0)
            .expect("nonempty");
        Ok(v_t.row(idx).transpose().normalize())
    }
}

/// Besse iff every `ãᵢ/ã₁` is rational with denominator `≤ denom_bound`;
/// Zoll iff additionally all spectral numbers coincide (hence equal 1).
pub fn classify_linear_flow(s: &SpectralData, denom_bound: u64) -> LinearFlowClass {
    if s.spectral.iter().all(|x| (x - 1.0).abs() <= CLUSTER_TOL) {
        return LinearFlowClass::Zoll;
    }
    let a1 = s.spectral[0];
    let mut lcm: u128 = 1;
    let mut undecided = false;
    for &x in &s.spectral[1..] {
        match rational_approx(x / a1, denom_bound, RATIONAL_TOL) {
            Rationality::Rational { q, .. } => {
                let q = q as u128;
                lcm = lcm / gcd(lcm, q) * q;
            }
            Rationality::NotRational => return LinearFlowClass::NotBesse,
            Rationality::Undecided => undecided = true,
        }
    }
    if undecided {
        return LinearFlowClass::Undecided;
    }
    LinearFlowClass::Besse { common_period: TAU * lcm as f64 / a1 }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodMembership {
    /// `(T/2π)^k`.
    pub value: f64,
    pub verdict: Rationality,
}

impl PeriodMembership {
    pub fn accepted(&self) -> bool {
        matches!(self.verdict, Rationality::Rational { .. })
    }
}

/// Checks `T ∈ 2π·(Q₊^k)^{1/k}`, i.e. `(T/2π)^k` rational.
pub fn check_period_set(s: &SpectralData, period: f64, denom_bound: u64) -> Result<PeriodMembership> {
    if !matches!(s.class, LinearFlowClass::Zoll | LinearFlowClass::Besse { .. }) {
        return Err(Error::InvalidArgument(format!(
            "period membership needs a Besse or Zoll flow, got {}",
            s.class.label()
        )));
    }
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    let value = (period / TAU).powi(s.k() as i32);
    let verdict = rational_approx(value, denom_bound, RATIONAL_TOL * value.max(1.0));
    Ok(PeriodMembership { value, verdict })
}

/// Dimension `2k_{ã₁} − 1` of the fibre sphere of the minimal-period set.
pub fn sigma_min_dim(s: &SpectralData) -> usize {
    2 * s.multiplicities[0].1 - 1
}

/// Block-standard `ρ`: `[[0, 1], [−1, 0]]` on each coordinate pair.
pub fn standard_rho(dim: usize) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(dim, dim);
    for b in 0..dim / 2 {
        r[(2 * b, 2 * b + 1)] = 1.0;
        r[(2 * b + 1, 2 * b)] = -1.0;
    }
    r
}

/// `γ` giving raw frequencies `a_j` against [`standard_rho`].
pub fn diagonal_gamma(freqs: &[f64]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(2 * freqs.len(), 2 * freqs.len());
    for (b, f) in freqs.iter().enumerate() {
        g[(2 * b, 2 * b)] = *f;
        g[(2 * b + 1, 2 * b + 1)] = *f;
    }
    g
}

/// Seeded random instance: `ρ = Pᵀ ρ₀ P` and `γ = MᵀM + I/2` with entries of
/// `P − I` and `M` uniform in `[−1/2, 1/2)` and `[−1, 1)`.
pub fn random_instance(dim: usize, seed: u64, index: u64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("dimension must be even, got {dim}")));
    }
    let mut r = rng(seed, 0x5350_4543, index);
    let p = DMatrix::from_fn(dim, dim, |i, j| {
        r.random_range(-0.5..0.5) + if i == j { 1.0 } else { 0.0 }
    });
    let m = DMatrix::from_fn(dim, dim, |_, _| r.random_range(-1.0..1.0));
    let rho = p.transpose() * standard_rho(dim) * &p;
    let rho = (&rho - rho.transpose()) * 0.5;
    let gamma = m.transpose() * &m + DMatrix::identity(dim, dim) * 0.5;
    let gamma = (&gamma + gamma.transpose()) * 0.5;
    Ok((rho, gamma))
}

/// A fixture with known raw frequencies, hidden behind a seeded change of
/// basis `(ρ, γ) = (Pᵀρ₀P, Pᵀγ₀P)`, which leaves `Ã` similar to the block
/// form.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructedCase {
    pub label: String,
    pub freqs: Vec<f64>,
    pub rho: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    /// `2·#{j : a_j = max a} − 1`.
    pub expected_sigma_dim: usize,
}

/// Ten rational and ten irrational frequency sets in dimensions 2, 4, 6.
pub fn constructed_cases(seed: u64) -> Vec<ConstructedCase> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let pi = std::f64::consts::PI;
    let sets: [(&str, Vec<f64>); 20] = [
        ("rotation", vec![1.0]),
        ("scaled-rotation", vec![3.0]),
        ("isotropic-4", vec![1.0, 1.0]),
        ("ratio-4", vec![4.0, 1.0]),
        ("ratio-2", vec![2.0, 1.0]),
        ("ratio-3/2", vec![3.0, 2.0]),
        ("double-top", vec![3.0, 3.0, 1.0]),
        ("ratio-5:3:1", vec![5.0, 3.0, 1.0]),
        ("ratio-6:4:3", vec![6.0, 4.0, 3.0]),
        ("isotropic-6", vec![2.0, 2.0, 2.0]),
        ("pi", vec![pi, 1.0]),
        ("golden-squared", vec![phi * phi, 1.0]),
        ("sqrt2", vec![2f64.sqrt(), 1.0]),
        ("sqrt3-pair", vec![3f64.sqrt(), 1.0, 1.0]),
        ("e", vec![std::f64::consts::E, 1.0]),
        ("pi-2-1", vec![pi, 2.0, 1.0]),
        ("sqrt5-sqrt2", vec![5f64.sqrt(), 2f64.sqrt(), 1.0]),
        ("golden", vec![phi, 1.0]),
        ("ln3", vec![3f64.ln(), 1.0]),
        ("rational-irrational", vec![2.0, 1.0, 2f64.sqrt()]),
    ];
    sets.into_iter()
        .enumerate()
        .map(|(i, (label, freqs))| {
            let n = 2 * freqs.len();
            let mut r = rng(seed, 0x4649_5854, i as u64);
            let p = DMatrix::from_fn(n, n, |a, b| r.random_range(-0.4..0.4) + if a == b { 1.0 } else { 0.0 });
            let rho = p.transpose() * standard_rho(n) * &p;
            let gamma = p.transpose() * diagonal_gamma(&freqs) * &p;
            let top = freqs.iter().copied().fold(f64::MIN, f64::max);
            let count = freqs.iter().filter(|f| **f == top).count();
            ConstructedCase {
                label: label.to_string(),
                rho: (&rho - rho.transpose()) * 0.5,
                gamma: (&gamma + gamma.transpose()) * 0.5,
                expected_sigma_dim: 2 * count - 1,
                freqs,
            }
        })
        .collect()
}

/// Parses the plain-text instance format:
///
/// ```text
/// # comment
/// rho
/// 0 1
/// -1 0
/// gamma
/// 1 0
/// 0 1
/// ---
/// ```
///
/// Instances are separated by `---`; each needs a `rho` and a `gamma` block
/// of whitespace-separated rows.
pub fn parse_matrix_file(text: &str) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
    #[derive(Default)]
    struct Pending {
        rho: Vec<Vec<f64>>,
        gamma: Vec<Vec<f64>>,
        section: Option<bool>,
        start: usize,
    }
    fn finish(p: Pending, out: &mut Vec<(DMatrix<f64>, DMatrix<f64>)>) -> Result<()> {
        if p.rho.is_empty() && p.gamma.is_empty() {
            return Ok(());
        }
        let to_matrix = |rows: &[Vec<f64>], name: &str| -> Result<DMatrix<f64>> {
            let n = rows.len();
            if n == 0 || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidArgument(format!(
                    "instance starting at line {}: {name} must be a non-empty square block",
                    p.start
                )));
            }
            Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        };
        out.push((to_matrix(&p.rho, "rho")?, to_matrix(&p.gamma, "gamma")?));
        Ok(())
    }
    let mut out = Vec::new();
    let mut cur = Pending { start: 1, ..Pending::default() };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "---" => {
                finish(std::mem::take(&mut cur), &mut out)?;
                cur.start = lineno + 2;
            }
            "rho" => cur.section = Some(true),
            "gamma" => cur.section = Some(false),
            _ => {
                let row = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
                match cur.section {
                    Some(true) => cur.rho.push(row),
                    Some(false) => cur.gamma.push(row),
                    None => {
                        return Err(Error::InvalidArgument(format!(
                            "line {}: matrix row before a `rho` or `gamma` header",
                            lineno + 1
                        )))
                    }
                }
            }
        }
    }
    finish(cur, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn data(freqs: &[f64]) -> SpectralData {
        let n = 2 * freqs.len();
        build_spectral(&standard_rho(n), &diagonal_gamma(freqs)).unwrap()
    }

    #[test]
    fn compatible_plane_is_a_rotation() {
        let s = data(&[1.0]);
        let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((&s.a - j).amax() < 1e-15);
        assert_eq!(s.class, LinearFlowClass::Zoll);
        assert!((s.t_min - TAU).abs() < 1e-14);
        assert_eq!(sigma_min_dim(&s), 1);
    }

    #[test]
    fn two_to_one_block_is_besse() {
        let s = data(&[4.0, 1.0]);
        assert!((s.spectral[0] - 2.0).abs() < 1e-14 && (s.spectral[1] - 0.5).abs() < 1e-14);
        assert!((s.t_min - PI).abs() < 1e-13);
        match s.class {
            LinearFlowClass::Besse { common_period } => assert!((common_period - 4.0 * PI).abs() < 1e-12),
            c => panic!("{c:?}"),
        }
        assert_eq!(sigma_min_dim(&s), 1);
        let m = check_period_set(&s, 4.0 * PI, DEFAULT_DENOM_BOUND).unwrap();
        assert!(m.accepted() && (m.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn irrational_ratio_is_not_besse() {
        assert_eq!(data(&[PI, 1.0]).class, LinearFlowClass::NotBesse);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let s = data(&[phi * phi, 1.0]);
        assert_eq!(classify_linear_flow(&s, DEFAULT_DENOM_BOUND), LinearFlowClass::NotBesse);
        assert!(check_period_set(&s, TAU, DEFAULT_DENOM_BOUND).is_err());
    }

    #[test]
    fn sqrt_two_pair() {
        // raw (2, 1) normalises to (√2, 1/√2)
        let s = data(&[2.0, 1.0]);
        assert!((s.spectral[0] - 2f64.sqrt()).abs() < 1e-14);
        let LinearFlowClass::Besse { common_period } = s.class else { panic!() };
        assert!((common_period - TAU * 2f64.sqrt()).abs() < 1e-12);
        assert!(check_period_set(&s, common_period, DEFAULT_DENOM_BOUND).unwrap().accepted());
    }

    #[test]
    fn multiplicities_and_sphere_dimension() {
        assert_eq!(sigma_min_dim(&data(&[1.0, 1.0])), 3);
        let s = data(&[3.0, 3.0, 1.0]);
        assert_eq!(s.multiplicities.len(), 2);
        assert_eq!(sigma_min_dim(&s), 3);
        assert!((s.spectral.iter().product::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rational_reconstruction() {
        assert!(matches!(rational_approx(0.25, 10, 1e-9), Rationality::Rational { p: 1, q: 4, .. }));
        assert!(matches!(rational_approx(355.0 / 113.0, 1000, 1e-9), Rationality::Rational { p: 355, q: 113, .. }));
        assert_eq!(rational_approx(PI, 1_000_000, 1e-9), Rationality::NotRational);
        assert_eq!(rational_approx(2f64.sqrt(), 1_000_000, 1e-9), Rationality::NotRational);
        // 1/7 needs q = 7
        assert_eq!(rational_approx(1.0 / 7.0, 5, 1e-9), Rationality::Undecided);
        assert_eq!(rational_approx(-1.0, 5, 1e-9), Rationality::NotRational);
    }

    #[test]
    fn rejects_bad_inputs() {
        let r = standard_rho(2);
        assert!(matches!(build_spectral(&r, &(-DMatrix::identity(2, 2))), Err(Error::NotPositiveDefinite)));
        assert!(matches!(build_spectral(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)), Err(Error::SingularForm)));
        assert!(build_spectral(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2)).is_err());
        assert!(build_spectral(&DMatrix::zeros(3, 3), &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn random_instances_satisfy_the_defining_identity() {
        for dim in [2, 4, 6] {
            for i in 0..5 {
                let (rho, gamma) = random_instance(dim, 11, i).unwrap();
                let s = build_spectral(&rho, &gamma).unwrap();
                let mut r = rng(3, dim as u64, i);
                for _ in 0..10 {
                    let w = DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0));
                    let v = DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0));
                    assert!(s.residual(&w, &v) < 1e-12 * (1.0 + gamma.amax()));
                }
                assert!((s.a_tilde.determinant() - 1.0).abs() < 1e-10);
                let phi = s.flow(0.7);
                assert!((phi.transpose() * &rho * &phi - &rho).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn mode_vector_closes_at_its_period() {
        let s = data(&[4.0, 1.0]);
        for j in 0..2 {
            let v = s.mode_vector(j).unwrap();
            let back = s.flow(TAU / s.spectral[j]) * &v;
            assert!((back - v).norm() < 1e-10);
        }
    }

    #[test]
    fn parses_matrix_files() {
        let text = "# two instances\nrho\n0 1\n-1 0\ngamma\n1 0\n0 1\n---\nrho\n0 1\n-1 0\ngamma # inline\n2 0\n0 2\n";
        let inst = parse_matrix_file(text).unwrap();
        assert_eq!(inst.len(), 2);
        assert_eq!(inst[1].1[(0, 0)], 2.0);
        assert!(parse_matrix_file("1 2\n").is_err());
        assert!(parse_matrix_file("rho\n0 1\ngamma\n1 0\n0 1\n").is_err());
        assert!(parse_matrix_file("rho\n0 x\n").is_err());
    }
}
