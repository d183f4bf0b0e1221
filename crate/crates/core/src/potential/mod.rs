//! Non-negative bounded potentials `q: [0, 1] -> [0, ∞)` and their antiderivatives.
//!
//! Every family carries a valid upper bound for `ess sup q` and, where one is
//! known, a Hölder certificate `|q(x) - q(y)| <= L |x - y|^beta`. All families
//! shipped here have closed-form antiderivatives; a potential can be switched to
//! adaptive quadrature with [`Potential::with_numeric_integration`].

mod cantor;
mod spec;

pub use cantor::{
    build_cantor, build_cantor_with_cap, CantorConstruction, CantorInterval, Dyadic, OpenInterval,
    DEFAULT_INTERVAL_CAP,
};
pub use spec::PotentialSpec;

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_integral_with_breaks;

/// Absolute tolerance used when a potential has no closed-form antiderivative.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;

/// Certificate `|q(x) - q(y)| <= lipschitz * |x - y|^exponent` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderCertificate {
    pub exponent: f64,
    pub constant: f64,
}

impl HolderCertificate {
    /// Upper bound on `sup_Δ R_n(t, s; q)` implied by the certificate, using `t - s <= 1`.
    pub fn riemann_bound(&self, n: u64) -> f64 {
        self.constant / (n as f64).powf(self.exponent)
    }
}

/// Piecewise-constant function on `[0, 1]` with value `values[i]` on
/// `[breaks[i], breaks[i + 1])`; the last piece also owns `t = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pieces {
    breaks: Vec<f64>,
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl Pieces {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || values.len() + 1 != breaks.len() {
            return Err(Error::invalid(
                "piecewise constant needs k + 1 breakpoints for k values",
            ));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::invalid("breakpoints must start at 0 and end at 1"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("piece values must be finite and non-negative"));
        }

        // coalesce neighbours with equal values
        let mut b = vec![breaks[0]];
        let mut v: Vec<f64> = Vec::with_capacity(values.len());
        for (i, &val) in values.iter().enumerate() {
            if v.last() == Some(&val) {
                *b.last_mut().unwrap() = breaks[i + 1];
            } else {
                v.push(val);
                b.push(breaks[i + 1]);
            }
        }

        let mut prefix = Vec::with_capacity(b.len());
        prefix.push(0.0);
        for (i, val) in v.iter().enumerate() {
            let last = prefix[i];
            prefix.push(last + val * (b[i + 1] - b[i]));
        }
        Ok(Self {
            breaks: b,
            values: v,
            prefix,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the piece owning `t` under the `[a, b)` convention.
    pub fn piece_index(&self, t: f64) -> usize {
        let idx = self.breaks.partition_point(|&b| b <= t);
        idx.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.values[self.piece_index(t)]
    }

    pub fn integral_to(&self, t: f64) -> f64 {
        let i = self.piece_index(t);
        self.prefix[i] + self.values[i] * (t - self.breaks[i])
    }

    /// Bounds on `q` over the closed interval `[a, b]`.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let lo_idx = self.piece_index(a);
        let hi_idx = self.piece_index(b);
        self.values[lo_idx..=hi_idx]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Lacunary cosine sum shifted and scaled into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weierstrass {
    pub beta: f64,
    pub levels: u32,
    weights: Vec<f64>,
    frequencies: Vec<f64>,
    total_weight: f64,
}

impl Weierstrass {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Angular frequencies `2^j π`, `j = 1..=levels`.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Normaliser `M = Σ 2^{-jβ}`.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    fn value(&self, t: f64) -> f64 {
        let osc: f64 = self
            .weights
            .iter()
            .zip(&self.frequencies)
            .map(|(w, f)| w * (f * t).cos())
            .sum();
        (self.total_weight + osc) / (2.0 * self.total_weight)
    }

    fn integral_to(&self, t: f64) -> f64 {
        let osc: f64 = self
            .weights
            .iter()
            .zip(&self.frequencies)
            .map(|(w, f)| w * (f * t).sin() / f)
            .sum();
        (self.total_weight * t + osc) / (2.0 * self.total_weight)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Constant { value: f64 },
    Linear { intercept: f64, slope: f64 },
    PiecewiseConstant(Pieces),
    HolderWeierstrass(Weierstrass),
    /// `q = Σ_m a_m g_m`, `g_m` the `2^{-m}`-periodic unit tent vanishing on `k / 2^m`.
    TentTrain { amplitudes: Vec<f64> },
    CantorIndicator { depth: u32, pieces: Pieces },
}

/// Short tag for a [`PotentialKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KindTag {
    Constant,
    Linear,
    PiecewiseConstant,
    HolderWeierstrass,
    TentTrain,
    CantorIndicator,
}

impl fmt::Display for KindTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KindTag::Constant => "constant",
            KindTag::Linear => "linear",
            KindTag::PiecewiseConstant => "piecewise_constant",
            KindTag::HolderWeierstrass => "holder_weierstrass",
            KindTag::TentTrain => "tent_train",
            KindTag::CantorIndicator => "cantor_indicator",
        };
        f.write_str(s)
    }
}

/// An immutable non-negative potential on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    sup_norm: f64,
    exact_integrable: bool,
    holder: Option<HolderCertificate>,
}

/// Unit tent of period 1: zero on the integers, one on the half-integers.
#[inline]
fn unit_tent(x: f64) -> f64 {
    let frac = x - x.floor();
    1.0 - (2.0 * frac - 1.0).abs()
}

/// `∫_0^x unit_tent`.
#[inline]
fn unit_tent_integral(x: f64) -> f64 {
    let whole = x.floor();
    let u = x - whole;
    let partial = if u <= 0.5 { u * u } else { 0.5 - (1.0 - u) * (1.0 - u) };
    0.5 * whole + partial
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: t,
            domain: "[0, 1]",
        })
    }
}

impl Potential {
    pub fn constant(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::invalid(format!(
                "constant potential must be finite and >= 0, got {value}"
            )));
        }
        Ok(Self {
            kind: PotentialKind::Constant { value },
            sup_norm: value,
            exact_integrable: true,
            holder: Some(HolderCertificate {
                exponent: 1.0,
                constant: 0.0,
            }),
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0).expect("zero is a valid constant")
    }

    /// `q(t) = intercept + slope * t`, non-negative on `[0, 1]`.
    pub fn linear(intercept: f64, slope: f64) -> Result<Self> {
        if !intercept.is_finite() || !slope.is_finite() {
            return Err(Error::invalid("linear coefficients must be finite"));
        }
        if intercept < 0.0 || intercept + slope < 0.0 {
            return Err(Error::invalid(format!(
                "linear potential {intercept} + {slope} t is negative on [0, 1]"
            )));
        }
        Ok(Self {
            kind: PotentialKind::Linear { intercept, slope },
            sup_norm: intercept.max(intercept + slope),
            exact_integrable: true,
            holder: Some(HolderCertificate {
                exponent: 1.0,
                constant: slope.abs(),
            }),
        })
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let pieces = Pieces::new(breakpoints, values)?;
        Ok(Self {
            sup_norm: pieces.max_value(),
            kind: PotentialKind::PiecewiseConstant(pieces),
            exact_integrable: true,
            holder: None,
        })
    }

    pub(crate) fn cantor_indicator(depth: u32, pieces: Pieces) -> Self {
        Self {
            sup_norm: pieces.max_value(),
            kind: PotentialKind::CantorIndicator { depth, pieces },
            exact_integrable: true,
            holder: None,
        }
    }

    /// Normalised lacunary cosine sum
    /// `q(t) = (M + Σ_{j=1}^{levels} 2^{-jβ} cos(2^j π t)) / (2M)`, `M = Σ 2^{-jβ}`.
    ///
    /// The Hölder constant is assembled termwise from
    /// `|cos(ax) - cos(ay)| <= min(2, a|x - y|) <= 2^{1-β} a^β |x - y|^β`,
    /// which gives `levels * 2^{1-β} π^β / (2M)`.
    pub fn weierstrass(beta: f64, levels: u32) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::invalid(format!("beta must lie in (0, 1), got {beta}")));
        }
        if levels == 0 {
            return Err(Error::invalid("weierstrass potential needs levels >= 1"));
        }
        let weights: Vec<f64> = (1..=levels)
            .map(|j| 2f64.powf(-(j as f64) * beta))
            .collect();
        let frequencies: Vec<f64> = (1..=levels).map(|j| 2f64.powi(j as i32) * PI).collect();
        let total_weight: f64 = weights.iter().sum();
        let constant =
            levels as f64 * 2f64.powf(1.0 - beta) * PI.powf(beta) / (2.0 * total_weight);
        Ok(Self {
            kind: PotentialKind::HolderWeierstrass(Weierstrass {
                beta,
                levels,
                weights,
                frequencies,
                total_weight,
            }),
            sup_norm: 1.0,
            exact_integrable: true,
            holder: Some(HolderCertificate {
                exponent: beta,
                constant,
            }),
        })
    }

    /// Sum of dyadic tents `Σ_m a_m g_m`. Level `m` has period `2^{-m}`, height `a_m`
    /// and vanishes on every `k / 2^m`.
    pub fn tent_train(amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::invalid("tent amplitudes must be finite and > 0"));
        }
        if amplitudes.len() > 52 {
            return Err(Error::invalid("tent trains deeper than 52 levels underflow f64"));
        }
        let sup_norm = amplitudes.iter().sum();
        let lipschitz = amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a * 2f64.powi(i as i32 + 2))
            .sum();
        Ok(Self {
            kind: PotentialKind::TentTrain { amplitudes },
            sup_norm,
            exact_integrable: true,
            holder: Some(HolderCertificate {
                exponent: 1.0,
                constant: lipschitz,
            }),
        })
    }

    /// Harmonic tent train `a_j = 1/j`, `j = 1..=levels`.
    pub fn harmonic_tent_train(levels: u32) -> Result<Self> {
        Self::tent_train((1..=levels).map(|j| 1.0 / j as f64).collect())
    }

    /// Forget the closed-form antiderivative and integrate adaptively instead.
    pub fn with_numeric_integration(mut self) -> Self {
        self.exact_integrable = false;
        self
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn tag(&self) -> KindTag {
        match self.kind {
            PotentialKind::Constant { .. } => KindTag::Constant,
            PotentialKind::Linear { .. } => KindTag::Linear,
            PotentialKind::PiecewiseConstant(_) => KindTag::PiecewiseConstant,
            PotentialKind::HolderWeierstrass(_) => KindTag::HolderWeierstrass,
            PotentialKind::TentTrain { .. } => KindTag::TentTrain,
            PotentialKind::CantorIndicator { .. } => KindTag::CantorIndicator,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn exact_integrable(&self) -> bool {
        self.exact_integrable
    }

    pub fn holder(&self) -> Option<HolderCertificate> {
        self.holder
    }

    /// Piecewise-constant representation, if the potential has one.
    pub fn pieces(&self) -> Option<&Pieces> {
        match &self.kind {
            PotentialKind::PiecewiseConstant(p) | PotentialKind::CantorIndicator { pieces: p, .. } => {
                Some(p)
            }
            _ => None,
        }
    }

    /// `q(t)` for `t` in `[0, 1]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        Ok(self.value(t))
    }

    /// Unchecked evaluation; callers guarantee `t` in `[0, 1]`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            PotentialKind::Constant { value } => *value,
            PotentialKind::Linear { intercept, slope } => intercept + slope * t,
            PotentialKind::PiecewiseConstant(p) | PotentialKind::CantorIndicator { pieces: p, .. } => {
                p.value(t)
            }
            PotentialKind::HolderWeierstrass(w) => w.value(t),
            PotentialKind::TentTrain { amplitudes } => {
                let mut scale = 1.0;
                let mut acc = 0.0;
                for a in amplitudes {
                    scale *= 2.0;
                    acc += a * unit_tent(scale * t);
                }
                acc
            }
        }
    }

    /// `∫_0^t q(y) dy`.
    pub fn antiderivative(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        if self.exact_integrable {
            Ok(self.exact_antiderivative(t))
        } else {
            self.numeric_integral(0.0, t)
        }
    }

    /// `∫_a^b q` by adaptive quadrature split at the kinks and jumps of `q`.
    pub fn numeric_integral(&self, a: f64, b: f64) -> Result<f64> {
        let breaks = self.singular_points(a, b);
        adaptive_integral_with_breaks(|y| self.value(y), a, b, &breaks, DEFAULT_QUADRATURE_TOL)
    }

    /// Points in `(a, b)` where `q` jumps or has a kink.
    fn singular_points(&self, a: f64, b: f64) -> Vec<f64> {
        match &self.kind {
            PotentialKind::PiecewiseConstant(p) | PotentialKind::CantorIndicator { pieces: p, .. } => {
                p.breakpoints().iter().copied().filter(|&x| a < x && x < b).collect()
            }
            PotentialKind::TentTrain { amplitudes } if !amplitudes.is_empty() => {
                // every level has its vertices on the grid 2^-(levels+1) Z
                let spacing = 0.5f64.powi(amplitudes.len() as i32 + 1);
                let first = (a / spacing).floor() as u64 + 1;
                let last = (b / spacing).ceil() as u64;
                if last.saturating_sub(first) > 1 << 16 {
                    return Vec::new();
                }
                (first..last).map(|k| k as f64 * spacing).filter(|&x| a < x && x < b).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Closed-form `∫_0^t q`; `t` assumed in `[0, 1]`.
    pub(crate) fn exact_antiderivative(&self, t: f64) -> f64 {
        match &self.kind {
            PotentialKind::Constant { value } => value * t,
            PotentialKind::Linear { intercept, slope } => intercept * t + 0.5 * slope * t * t,
            PotentialKind::PiecewiseConstant(p) | PotentialKind::CantorIndicator { pieces: p, .. } => {
                p.integral_to(t)
            }
            PotentialKind::HolderWeierstrass(w) => w.integral_to(t),
            PotentialKind::TentTrain { amplitudes } => {
                let mut scale = 1.0;
                let mut acc = 0.0;
                for a in amplitudes {
                    scale *= 2.0;
                    acc += a * unit_tent_integral(scale * t) / scale;
                }
                acc
            }
        }
    }

    /// Bounds on `q` over `[a, b]` (`0 <= a <= b <= 1`), valid for piecewise
    /// families. Returns `None` where no cheap enclosure is available.
    pub(crate) fn range_on(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        match &self.kind {
            PotentialKind::Constant { value } => Some((*value, *value)),
            PotentialKind::Linear { .. } => {
                let (x, y) = (self.value(a), self.value(b));
                Some((x.min(y), x.max(y)))
            }
            PotentialKind::PiecewiseConstant(p) | PotentialKind::CantorIndicator { pieces: p, .. } => {
                Some(p.range_on(a, b))
            }
            PotentialKind::TentTrain { amplitudes } => {
                let mut scale = 1.0;
                let (mut lo, mut hi) = (0.0, 0.0);
                for amp in amplitudes {
                    scale *= 2.0;
                    let (l, h) = tent_range(scale * a, scale * b);
                    lo += amp * l;
                    hi += amp * h;
                }
                Some((lo, hi))
            }
            PotentialKind::HolderWeierstrass(_) => None,
        }
    }

    /// Short human-readable label used in reports.
    pub fn label(&self) -> String {
        match &self.kind {
            PotentialKind::Constant { value } => format!("constant:{value}"),
            PotentialKind::Linear { intercept, slope } => {
                format!("linear:intercept={intercept},slope={slope}")
            }
            PotentialKind::PiecewiseConstant(p) => format!("piecewise:pieces={}", p.len()),
            PotentialKind::HolderWeierstrass(w) => {
                format!("weier:beta={},levels={}", w.beta, w.levels)
            }
            PotentialKind::TentTrain { amplitudes } => format!("tent:levels={}", amplitudes.len()),
            PotentialKind::CantorIndicator { depth, .. } => format!("cantor:depth={depth}"),
        }
    }
}

/// Range of the unit tent over `[x, y]` (in scaled coordinates).
fn tent_range(x: f64, y: f64) -> (f64, f64) {
    if y - x >= 1.0 {
        return (0.0, 1.0);
    }
    let (fx, fy) = (unit_tent(x), unit_tent(y));
    let mut lo = fx.min(fy);
    let mut hi = fx.max(fy);
    // a zero (integer) or a peak (half-integer) strictly inside
    if (x.floor() + 1.0) < y {
        lo = 0.0;
    }
    let peak = (x - 0.5).floor() + 1.5;
    if peak < y {
        hi = 1.0;
    }
    (lo, hi)
}
