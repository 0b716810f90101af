//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Classical RK4 step of `x' = A x`.
pub fn rk4(a: &DMatrix<f64>, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = a * x;
    let k2 = a * (x + &k1 * (h / 2.0));
    let k3 = a * (x + &k2 * (h / 2.0));
    let k4 = a * (x + &k3 * h);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> f64 {
    golden_min(|x| -f(x), lo, hi, iters).0
}

/// First return of the orbit of `x0` under `x' = A x` within `horizon`,
/// found by stepping RK4 and refining local minima of `|x(t) − x0|`.
/// Returns `(t, relative distance)` of the best approach after `t_skip`.
pub fn first_return(a: &DMatrix<f64>, x0: &DVector<f64>, h: f64, t_skip: f64, horizon: f64, hit: f64) -> (f64, f64) {
    let scale = x0.norm();
    let dist = |x: &DVector<f64>| (x - x0).norm() / scale;
    let mut best = (f64::NAN, f64::INFINITY);
    let n = (horizon / h).ceil() as usize;
    let mut prev2 = x0.clone();
    let mut prev = rk4(a, x0, h);
    let (mut d2, mut d1) = (0.0, dist(&prev));
    for i in 2..=n {
        let x = rk4(a, &prev, h);
        let d0 = dist(&x);
        let t_mid = (i - 1) as f64 * h;
        if t_mid > t_skip && d1 <= d2 && d1 <= d0 && d1 < 0.2 {
            // minimum lies within one step of prev; re-step from prev2
            let base = prev2.clone();
            let (tau, dmin) = golden_min(|s| dist(&rk4(a, &base, s)), 0.0, 2.0 * h, 80);
            let t = (i - 2) as f64 * h + tau;
            if dmin < best.1 {
                best = (t, dmin);
            }
            if dmin < hit {
                return best;
            }
        }
        prev2 = prev;
        prev = x;
        d2 = d1;
        d1 = d0;
    }
    best
}

/// Angular frequencies present in `s(t) = wᵀ e^{tA} u`: FFT peak search on
/// a Blackman–Harris windowed record, then golden-section refinement of the windowed
/// DTFT magnitude.
pub fn fft_frequencies(a: &DMatrix<f64>, w: &DVector<f64>, u: &DVector<f64>, omega_max: f64, count: usize) -> Vec<f64> {
    let n = 1usize << 16;
    let dt = PI / (4.0 * omega_max);
    let step = (a * dt).exp();
    let mut x = u.clone();
    let mut signal = Vec::with_capacity(n);
    for i in 0..n {
        // 4-term Blackman–Harris
        let z = TAU * i as f64 / (n - 1) as f64;
        let win = 0.35875 - 0.48829 * z.cos() + 0.14128 * (2.0 * z).cos() - 0.01168 * (3.0 * z).cos();
        signal.push(w.dot(&x) * win);
        x = &step * x;
    }
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|v| Complex::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm()).collect();
    let mut peaks: Vec<usize> = (2..n / 2 - 2)
        .filter(|&i| mag[i] > mag[i - 1] && mag[i] >= mag[i + 1] && mag[i] > mag[i - 2] && mag[i] >= mag[i + 2])
        .collect();
    peaks.sort_by(|p, q| mag[*q].total_cmp(&mag[*p]));
    peaks.truncate(count);
    let bin = TAU / (n as f64 * dt);
    let dtft = |omega: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        let (c, s) = ((omega * dt).cos(), (omega * dt).sin());
        let (mut cr, mut ci) = (1.0, 0.0);
        for v in &signal {
            re += v * cr;
            im -= v * ci;
            let t = cr * c - ci * s;
            ci = cr * s + ci * c;
            cr = t;
        }
        re.hypot(im)
    };
    let mut out: Vec<f64> = peaks
        .iter()
        .map(|&p| {
            let centre = p as f64 * bin;
            golden_max(dtft, centre - 1.5 * bin, centre + 1.5 * bin, 60)
        })
        .collect();
    out.sort_by(|p, q| q.total_cmp(p));
    out
}

