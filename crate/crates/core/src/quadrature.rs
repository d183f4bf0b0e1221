//! Integrals, left Darboux sums and the two scalar propagators over the triangle
//! `Δ = {(t, s) : 0 < s <= t <= 1}`.
//!
//! For a potential `q` and `(t, s)` in `Δ`:
//!
//! * `U(t, s) = exp(-∫_s^t q)` is the exact propagator,
//! * `V_n(t, s) = exp(-S_n(t, s; q))` with the left sum
//!   `S_n(t, s; q) = ((t - s)/n) Σ_{k<n} q(s + k(t - s)/n)` is the product-formula
//!   propagator,
//! * `R_n(t, s; q) = |∫_s^t q - S_n(t, s; q)|` is the pointwise Riemann error.
//!
//! Sample points are always formed as `s + k * h` with `h = (t - s) / n`, and `q`
//! is evaluated through its everywhere-defined representative (piece value on
//! `[a, b)` for piecewise families).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialKind, Weierstrass};

/// Default lower cut-off for `s`; suprema over `Δ` are taken in the limit `s -> 0`.
pub const DEFAULT_S_MIN: f64 = 1e-9;

/// A point `(t, s)` of the triangle `0 < s <= t <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPair {
    t: f64,
    s: f64,
}

impl DeltaPair {
    pub fn new(t: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= t && t <= 1.0) {
            return Err(Error::invalid(format!(
                "(t, s) = ({t}, {s}) is not in 0 < s <= t <= 1"
            )));
        }
        Ok(Self { t, s })
    }

    /// The corner `(1, s_min)` standing in for the limit `(1, 0+)`.
    pub fn corner(s_min: f64) -> Self {
        Self::new(1.0, s_min).expect("s_min must lie in (0, 1]")
    }

    pub(crate) fn new_unchecked(t: f64, s: f64) -> Self {
        debug_assert!(s > 0.0 && s <= t && t <= 1.0, "({t}, {s})");
        Self { t, s }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn width(&self) -> f64 {
        self.t - self.s
    }
}

/// Exact and product-formula propagators at one point of `Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorGap {
    pub u: f64,
    pub v_n: f64,
    pub gap: f64,
}

/// `∫_s^t q(y) dy`.
pub fn integrate(q: &Potential, pt: DeltaPair) -> Result<f64> {
    if q.exact_integrable() {
        Ok(exact_integral(q, pt.t, pt.s))
    } else {
        q.numeric_integral(pt.s, pt.t).map(|v| v.max(0.0))
    }
}

#[inline]
pub(crate) fn exact_integral(q: &Potential, t: f64, s: f64) -> f64 {
    match q.kind() {
        PotentialKind::Constant { value } => value * (t - s),
        PotentialKind::Linear { intercept, slope } => {
            (t - s) * (intercept + 0.5 * slope * (t + s))
        }
        _ => (q.exact_antiderivative(t) - q.exact_antiderivative(s)).max(0.0),
    }
}

/// Left Darboux sum `S_n(t, s; q)` with `n` equal subintervals.
pub fn left_darboux_sum(q: &Potential, pt: DeltaPair, n: u64) -> f64 {
    assert!(n >= 1, "left_darboux_sum needs n >= 1");
    left_sum_raw(q, pt.t, pt.s, n)
}

pub(crate) fn left_sum_raw(q: &Potential, t: f64, s: f64, n: u64) -> f64 {
    let width = t - s;
    let h = width / n as f64;
    match q.kind() {
        PotentialKind::Constant { value } => value * width,
        PotentialKind::Linear { intercept, slope } => {
            let nf = n as f64;
            width * (intercept + slope * s) + slope * h * h * nf * (nf - 1.0) * 0.5
        }
        PotentialKind::HolderWeierstrass(w) => weierstrass_left_sum(w, s, h, n),
        PotentialKind::PiecewiseConstant(p) | PotentialKind::CantorIndicator { pieces: p, .. } => {
            // sample points increase with k, so walk the pieces once
            let breaks = p.breakpoints();
            let values = p.values();
            let last = values.len() - 1;
            let mut idx = p.piece_index(s);
            let mut acc = 0.0;
            for k in 0..n {
                let x = s + k as f64 * h;
                while idx < last && breaks[idx + 1] <= x {
                    idx += 1;
                }
                acc += values[idx];
            }
            acc * h
        }
        PotentialKind::TentTrain { .. } => {
            (0..n).map(|k| q.value(s + k as f64 * h)).sum::<f64>() * h
        }
    }
}

/// `Σ_{k<n} cos(θ + kφ) = D_n(φ/2) cos(θ + (n-1)φ/2)`, `D_n(x) = sin(nx)/sin(x)`.
fn cosine_progression(theta: f64, phi: f64, n: u64) -> f64 {
    let x = 0.5 * phi;
    let k = (x / PI).round();
    let r = x - k * PI;
    let nf = n as f64;
    let dirichlet = if r == 0.0 {
        nf
    } else {
        (nf * r).sin() / r.sin()
    };
    // (-1)^{k(n+1)}
    let odd = (k as i64).rem_euclid(2) == 1 && n % 2 == 0;
    let sign = if odd { -1.0 } else { 1.0 };
    sign * dirichlet * (theta + (nf - 1.0) * x).cos()
}

fn weierstrass_left_sum(w: &Weierstrass, s: f64, h: f64, n: u64) -> f64 {
    let m = w.total_weight();
    let osc: f64 = w
        .weights()
        .iter()
        .zip(w.frequencies())
        .map(|(wt, f)| wt * cosine_progression(f * s, f * h, n))
        .sum();
    h * (n as f64 * m + osc) / (2.0 * m)
}

/// Pointwise Riemann error `R_n(t, s; q)`.
pub fn riemann_error(q: &Potential, pt: DeltaPair, n: u64) -> Result<f64> {
    Ok((integrate(q, pt)? - left_darboux_sum(q, pt, n)).abs())
}

/// Riemann error for exactly integrable potentials, skipping validation.
#[inline]
pub(crate) fn riemann_error_raw(q: &Potential, t: f64, s: f64, n: u64) -> f64 {
    (exact_integral(q, t, s) - left_sum_raw(q, t, s, n)).abs()
}

/// `U(t, s)`, `V_n(t, s)` and their gap.
pub fn propagators(q: &Potential, pt: DeltaPair, n: u64) -> Result<PropagatorGap> {
    let u = (-integrate(q, pt)?).exp();
    let v_n = (-left_darboux_sum(q, pt, n)).exp();
    Ok(PropagatorGap {
        u,
        v_n,
        gap: (u - v_n).abs(),
    })
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SUBINTERVALS: usize = 20_000;

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod (7, 15) quadrature of `f` over `[a, b]` to an
/// absolute tolerance. Fails with the achieved error estimate if the
/// subdivision limit is reached first.
pub fn adaptive_integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, error) = gauss_kronrod(&f, a, b);
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });

    while total_err > tol {
        if heap.len() >= MAX_SUBINTERVALS {
            return Err(Error::ToleranceNotMet {
                achieved: total_err,
                tolerance: tol,
            });
        }
        let seg = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval cannot be split further in f64
            return Err(Error::ToleranceNotMet {
                achieved: total_err,
                tolerance: tol,
            });
        }
        let (v1, e1) = gauss_kronrod(&f, seg.a, mid);
        let (v2, e2) = gauss_kronrod(&f, mid, seg.b);
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
    Ok(heap.iter().map(|s| s.value).sum())
}

/// [`adaptive_integral`] on the pieces of `[a, b]` cut at `breaks`, with the
/// tolerance shared out by length. Cutting at known kinks or jumps keeps the
/// Gauss-Kronrod error estimate honest.
pub fn adaptive_integral_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&x| a < x && x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let width = b - a;
    cuts.windows(2)
        .map(|w| adaptive_integral(&f, w[0], w[1], tol * (w[1] - w[0]) / width))
        .sum()
}
