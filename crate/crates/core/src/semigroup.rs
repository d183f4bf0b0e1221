//! The four evolution semigroups on a midpoint grid of `L^p([0, 1])`.
//!
//! * shift: `(e^{-τD0} f)(t) = χ(t - τ) f(t - τ)`,
//! * multiplication: `(e^{-τQ} f)(t) = e^{-τ q(t)} f(t)`,
//! * exact: `(e^{-τ(D0+Q)} f)(t) = e^{-∫_{t-τ}^t q} χ(t - τ) f(t - τ)`,
//! * product formula: `(e^{-τD0/n} e^{-τQ/n})^n`.
//!
//! Samples live on the nodes `t_i = (i + 1/2) / m`. Shifts are rounded to the
//! nearest whole number of nodes; choosing `τ = j/m` (and `τ m / n` integral for
//! the product formula) keeps them exact.
//!
//! The difference of the exact and product-formula operators is a multiplication
//! by `U(t, t-τ) - V_n(t, t-τ)` composed with an isometric shift, so its norm is
//! the supremum of that symbol for every `p`. [`per_tau_operator_norm`] computes
//! it from the symbol; [`operator_norm_oracle`] estimates it independently by
//! applying the discretised operators to test functions.

use log::warn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::{exact_integral, left_sum_raw};

/// Sampled element of `L^p([0, 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    samples: Vec<Complex64>,
    p: f64,
}

impl GridFunction {
    pub fn new(samples: Vec<Complex64>, p: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("grid function needs at least one sample"));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("p must lie in [1, ∞), got {p}")));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("grid function samples must be finite"));
        }
        Ok(Self { samples, p })
    }

    pub fn from_fn(m: usize, p: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new((0..m).map(|i| f(node(i, m))).collect(), p)
    }

    pub fn zeros(m: usize, p: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); m], p)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn resolution(&self) -> usize {
        self.samples.len()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn node(&self, i: usize) -> f64 {
        node(i, self.samples.len())
    }

    /// `((1/m) Σ |f_i|^p)^{1/p}`.
    pub fn norm_p(&self) -> f64 {
        let m = self.samples.len() as f64;
        let p = self.p;
        let sum: f64 = self.samples.iter().map(|z| z.norm().powf(p)).sum();
        (sum / m).powf(1.0 / p)
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn difference(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.resolution(), other.resolution(), "resolution mismatch");
        GridFunction {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
            p: self.p,
        }
    }

    fn with_samples(&self, samples: Vec<Complex64>) -> GridFunction {
        GridFunction { samples, p: self.p }
    }
}

#[inline]
fn node(i: usize, m: usize) -> f64 {
    (i as f64 + 0.5) / m as f64
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            value: tau,
            domain: "[0, ∞)",
        })
    }
}

/// Nearest whole number of nodes for a shift by `tau`.
fn shift_nodes(tau: f64, m: usize) -> usize {
    let exact = tau * m as f64;
    let j = exact.round();
    if (exact - j).abs() > 1e-9 * exact.max(1.0) {
        warn!("shift tau = {tau} is not a multiple of 1/{m}; rounding to {j} nodes");
    }
    j as usize
}

fn shifted(f: &GridFunction, j: usize) -> Vec<Complex64> {
    let m = f.resolution();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    if j < m {
        out[j..].copy_from_slice(&f.samples[..m - j]);
    }
    out
}

/// `e^{-τD0} f`: right shift with zero fill.
pub fn apply_shift(tau: f64, f: &GridFunction) -> Result<GridFunction> {
    check_tau(tau)?;
    Ok(f.with_samples(shifted(f, shift_nodes(tau, f.resolution()))))
}

/// `e^{-τQ} f`: pointwise multiplication by `e^{-τ q(t_i)}`.
pub fn apply_mult_semigroup(q: &Potential, tau: f64, f: &GridFunction) -> Result<GridFunction> {
    check_tau(tau)?;
    let m = f.resolution();
    Ok(f.with_samples(
        f.samples
            .iter()
            .enumerate()
            .map(|(i, z)| z * (-tau * q.value(node(i, m))).exp())
            .collect(),
    ))
}

/// `∫_0^{t_i} q` on every node.
fn node_antiderivatives(q: &Potential, m: usize) -> Result<Vec<f64>> {
    if q.exact_integrable() {
        return Ok((0..m).map(|i| q.exact_antiderivative(node(i, m))).collect());
    }
    let mut acc = q.numeric_integral(0.0, node(0, m))?;
    let mut out = Vec::with_capacity(m);
    out.push(acc);
    for i in 1..m {
        acc += q.numeric_integral(node(i - 1, m), node(i, m))?;
        out.push(acc);
    }
    Ok(out)
}

/// `e^{-τ(D0+Q)} f`, using the shift rounded to whole nodes.
pub fn apply_exact(q: &Potential, tau: f64, f: &GridFunction) -> Result<GridFunction> {
    check_tau(tau)?;
    let m = f.resolution();
    let j = shift_nodes(tau, m);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    if j < m {
        let anti = node_antiderivatives(q, m)?;
        for i in j..m {
            let weight = (-(anti[i] - anti[i - j]).max(0.0)).exp();
            out[i] = f.samples[i - j] * weight;
        }
    }
    Ok(f.with_samples(out))
}

/// `(e^{-τD0/n} e^{-τQ/n})^n f`. Sub-shifts are rounded cumulatively, so the
/// total shift always matches [`apply_exact`].
pub fn apply_trotter(q: &Potential, tau: f64, n: u64, f: &GridFunction) -> Result<GridFunction> {
    check_tau(tau)?;
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let m = f.resolution();
    let step_nodes = tau * m as f64 / n as f64;
    if tau > 0.0 && step_nodes < 1.0 {
        warn!("sub-step tau/n = {} is below the grid spacing 1/{m}", tau / n as f64);
    }
    if shift_nodes(tau, m) >= m {
        return Ok(f.with_samples(vec![Complex64::new(0.0, 0.0); m]));
    }
    let factors: Vec<f64> = (0..m)
        .map(|i| (-tau / n as f64 * q.value(node(i, m))).exp())
        .collect();
    let mut cur = f.samples.clone();
    let mut done = 0usize;
    for k in 1..=n {
        for (z, w) in cur.iter_mut().zip(&factors) {
            *z *= w;
        }
        let target = (k as f64 * step_nodes).round() as usize;
        let j = target - done;
        done = target;
        if j > 0 {
            cur.copy_within(0..m.saturating_sub(j), j.min(m));
            for z in cur.iter_mut().take(j.min(m)) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok(f.with_samples(cur))
}

/// Symbol of the error operator at a point: `|U(t, t-τ) - V_n(t, t-τ)|`.
pub fn symbol_gap(q: &Potential, t: f64, tau: f64, n: u64) -> f64 {
    let s = t - tau;
    let u = (-exact_integral(q, t, s)).exp();
    let v = (-left_sum_raw(q, t, s, n)).exp();
    (u - v).abs()
}

/// Norm of the error operator at one `τ`, with the maximising `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauNorm {
    pub tau: f64,
    pub value: f64,
    pub argmax_t: f64,
}

const TAU_GRID: usize = 4096;
const TAU_REFINE_LEVELS: usize = 3;
const TAU_REFINE_FACTOR: usize = 16;
const TAU_TOP: usize = 8;

/// `||e^{-τ(D0+Q)} - (e^{-τD0/n} e^{-τQ/n})^n||` in `B(L^p)` for any `p`,
/// computed as `sup_{t in [τ, 1]} |U(t, t-τ) - V_n(t, t-τ)|`.
pub fn per_tau_operator_norm(q: &Potential, tau: f64, n: u64) -> Result<TauNorm> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain {
            value: tau,
            domain: "[0, 1]",
        });
    }
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if !q.exact_integrable() {
        return Err(Error::invalid(
            "per_tau_operator_norm needs a closed-form antiderivative",
        ));
    }
    // both operators vanish identically once the shift leaves the interval
    if tau == 0.0 || tau >= 1.0 {
        return Ok(TauNorm {
            tau,
            value: 0.0,
            argmax_t: 1.0,
        });
    }
    let span = 1.0 - tau;
    let s_lo = span.min(1e-9);
    let probe = |s: f64| {
        let s = s.clamp(s_lo, span);
        let t = (tau + s).min(1.0);
        (symbol_gap(q, t, t - s, n), t)
    };
    let mut probes: Vec<(f64, f64, f64)> = (0..TAU_GRID)
        .into_par_iter()
        .map(|i| {
            let s = s_lo + (span - s_lo) * i as f64 / (TAU_GRID - 1) as f64;
            let (v, t) = probe(s);
            (v, t, s)
        })
        .collect();
    let mut spacing = span / (TAU_GRID - 1) as f64;
    let rank = |a: &(f64, f64, f64), b: &(f64, f64, f64)| {
        b.0.total_cmp(&a.0).then(a.2.total_cmp(&b.2))
    };
    for _ in 0..TAU_REFINE_LEVELS {
        probes.sort_by(rank);
        probes.truncate(TAU_TOP.max(1));
        spacing /= TAU_REFINE_FACTOR as f64;
        let f = TAU_REFINE_FACTOR as i64;
        let extra: Vec<(f64, f64, f64)> = probes
            .iter()
            .flat_map(|&(_, _, s0)| (-f..=f).map(move |i| s0 + i as f64 * spacing))
            .map(|s| {
                let s = s.clamp(s_lo, span);
                let (v, t) = probe(s);
                (v, t, s)
            })
            .collect();
        probes.extend(extra);
    }
    probes.sort_by(rank);
    let (value, argmax_t, _) = probes[0];
    Ok(TauNorm {
        tau,
        value,
        argmax_t,
    })
}

/// Maximum of [`per_tau_operator_norm`] over a set of `τ` values.
pub fn sup_operator_norm(q: &Potential, n: u64, taus: &[f64]) -> Result<TauNorm> {
    if taus.is_empty() {
        return Err(Error::invalid("tau grid is empty"));
    }
    let norms: Vec<TauNorm> = taus
        .par_iter()
        .map(|&tau| per_tau_operator_norm(q, tau, n))
        .collect::<Result<_>>()?;
    Ok(norms
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("non-empty"))
}

/// The grid `τ_j = j / points`, `j = 1..=points`.
pub fn uniform_tau_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|j| j as f64 / points as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub resolution: usize,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            resolution: 1 << 16,
            p: 2.0,
            trials: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// Largest observed `||(exact - trotter) f||_p / ||f||_p`.
    pub value: f64,
    /// The symbol norm used to centre the bump tests.
    pub symbol: TauNorm,
    pub tests: usize,
    /// Width in nodes of the winning bump, `None` if a random function won.
    pub best_bump_width: Option<usize>,
}

/// Lower estimate of the operator norm at `τ` from test functions: seeded random
/// functions plus indicator bumps of shrinking width that land on the symbol
/// maximiser after the shift.
pub fn operator_norm_oracle(
    q: &Potential,
    tau: f64,
    n: u64,
    cfg: &OracleConfig,
) -> Result<OracleReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("oracle needs trials >= 1"));
    }
    let m = cfg.resolution;
    let symbol = per_tau_operator_norm(q, tau, n)?;
    let zero = Complex64::new(0.0, 0.0);

    let mut tests: Vec<(Option<usize>, GridFunction)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.trials {
        let samples = (0..m)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        tests.push((None, GridFunction::new(samples, cfg.p)?));
    }

    let j = shift_nodes(tau, m);
    if j < m {
        // source node that lands on the maximiser
        let target = ((symbol.argmax_t * m as f64 - 0.5).round().max(0.0) as usize).min(m - 1);
        let center = target.saturating_sub(j);
        let last = m - j - 1;
        let mut width = 1usize;
        while width <= 64 && width <= m - j {
            for start in [
                center.saturating_sub(width - 1),
                center.saturating_sub(width / 2),
                center,
            ] {
                let start = start.min(last + 1 - width);
                let mut samples = vec![zero; m];
                for z in &mut samples[start..start + width] {
                    *z = Complex64::new(1.0, 0.0);
                }
                tests.push((Some(width), GridFunction::new(samples, cfg.p)?));
            }
            width *= 2;
        }
    }

    let ratios: Vec<Option<(f64, Option<usize>)>> = tests
        .par_iter()
        .map(|(w, f)| -> Result<Option<(f64, Option<usize>)>> {
            let norm = f.norm_p();
            if norm == 0.0 {
                return Ok(None);
            }
            let diff = apply_exact(q, tau, f)?.difference(&apply_trotter(q, tau, n, f)?);
            Ok(Some((diff.norm_p() / norm, *w)))
        })
        .collect::<Result<_>>()?;
    let count = ratios.iter().flatten().count();
    let (value, best_bump_width) = ratios
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .ok_or(Error::DegenerateInput)?;
    Ok(OracleReport {
        value,
        symbol,
        tests: count,
        best_bump_width,
    })
}

/// `||e^{-τ(D0+Q)} f - (e^{-τD0/n} e^{-τQ/n})^n f||_p` for each `n`.
pub fn strong_convergence_curve(
    q: &Potential,
    f: &GridFunction,
    tau: f64,
    ns: &[u64],
) -> Result<Vec<(u64, f64)>> {
    if ns.is_empty() {
        return Err(Error::invalid("n-list is empty"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n-list must be strictly increasing"));
    }
    let exact = apply_exact(q, tau, f)?;
    ns.par_iter()
        .map(|&n| {
            let approx = apply_trotter(q, tau, n, f)?;
            Ok((n, exact.difference(&approx).norm_p()))
        })
        .collect()
}
