//! Empirical convergence rates from `(n, value)` sweeps and threshold verdicts.

use std::fmt;


use crate::error::{Error, Result};
use crate::potential::{KindTag, Potential, PotentialKind};
use crate::quadrature::DeltaPair;
use crate::sup_search::{sup_riemann_error, RiemannReport, SearchConfig};

/// Values at or below this count as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// Sweeps whose infimum stays above this floor do not converge.
pub const NON_CONVERGENCE_FLOOR: f64 = 0.1;
/// RMS residual (natural log units) under which a power law fits well.
pub const FIT_RESIDUAL_CAP: f64 = 0.05;
/// Slopes above this are treated as flat.
pub const POLY_SLOPE_CUTOFF: f64 = -0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// Decay like `n^{-rate}`.
    PolyRate(f64),
    SlowerThanPoly,
    NonConvergent,
    ExactZero,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::PolyRate(r) => write!(f, "POLY_RATE({r:.4})"),
            Verdict::SlowerThanPoly => f.write_str("SLOWER_THAN_POLY"),
            Verdict::NonConvergent => f.write_str("NON_CONVERGENT"),
            Verdict::ExactZero => f.write_str("EXACT_ZERO"),
        }
    }
}

impl Verdict {
    pub fn same_class(&self, other: &Verdict) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub points: Vec<(u64, f64)>,
    /// Least-squares slope of `ln value` against `ln n`; `NaN` for exact zeros.
    pub slope: f64,
    pub intercept: f64,
    /// 95% half-width of the slope.
    pub slope_ci: f64,
    /// RMS residual of the fit in natural log units.
    pub residual: f64,
    pub verdict: Verdict,
    /// Smallest and largest `n` the verdict speaks for.
    pub n_range: (u64, u64),
    /// The `n` used for the non-convergence test.
    pub subsequence: Vec<u64>,
}

impl RateFit {
    pub fn fit_is_tight(&self) -> bool {
        self.residual <= FIT_RESIDUAL_CAP
    }
}

fn validate_points(points: &[(u64, f64)]) -> Result<()> {
    if points.iter().any(|&(n, v)| n == 0 || !v.is_finite() || v < 0.0) {
        return Err(Error::invalid("points need n >= 1 and finite values >= 0"));
    }
    if points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::invalid("n must be strictly increasing"));
    }
    Ok(())
}

/// Powers of two among the sampled `n`, or every `n` if there are none.
fn dyadic_subsequence(points: &[(u64, f64)]) -> Vec<u64> {
    let dyadic: Vec<u64> = points
        .iter()
        .map(|p| p.0)
        .filter(|n| n.is_power_of_two())
        .collect();
    if dyadic.is_empty() {
        points.iter().map(|p| p.0).collect()
    } else {
        dyadic
    }
}

/// `NonConvergent` when every value on the subsequence exceeds the floor.
pub fn floor_verdict(points: &[(u64, f64)], subsequence: &[u64]) -> Option<Verdict> {
    let values: Vec<f64> = points
        .iter()
        .filter(|p| subsequence.contains(&p.0))
        .map(|p| p.1)
        .collect();
    let inf = values.iter().copied().fold(f64::INFINITY, f64::min);
    (!values.is_empty() && inf > NON_CONVERGENCE_FLOOR).then_some(Verdict::NonConvergent)
}

/// Two-sided 97.5% Student t quantiles for 1..=30 degrees of freedom.
const T_975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];

fn t_quantile(df: usize) -> f64 {
    T_975.get(df.wrapping_sub(1)).copied().unwrap_or(1.96)
}

pub fn fit_loglog(points: &[(u64, f64)]) -> Result<RateFit> {
    fit_loglog_on(points, None)
}

/// [`fit_loglog`] with an explicit subsequence for the non-convergence test.
pub fn fit_loglog_on(points: &[(u64, f64)], subsequence: Option<&[u64]>) -> Result<RateFit> {
    validate_points(points)?;
    if points.len() < 4 {
        return Err(Error::InsufficientData {
            usable: points.len(),
            needed: 4,
        });
    }
    let subsequence = subsequence
        .map(<[u64]>::to_vec)
        .unwrap_or_else(|| dyadic_subsequence(points));
    let n_range = (points[0].0, points[points.len() - 1].0);

    if points.iter().all(|p| p.1 <= ZERO_THRESHOLD) {
        return Ok(RateFit {
            points: points.to_vec(),
            slope: f64::NAN,
            intercept: f64::NAN,
            slope_ci: f64::NAN,
            residual: 0.0,
            verdict: Verdict::ExactZero,
            n_range,
            subsequence,
        });
    }

    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > ZERO_THRESHOLD)
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientData {
            usable: usable.len(),
            needed: 4,
        });
    }
    let k = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / k;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = usable
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let residual = (sse / k).sqrt();
    let df = usable.len() - 2;
    let slope_ci = t_quantile(df) * (sse / df as f64 / sxx).sqrt();

    // a flat sweep below the floor shows no polynomial rate either
    let verdict = if let Some(v) = floor_verdict(points, &subsequence) {
        v
    } else if slope < POLY_SLOPE_CUTOFF {
        Verdict::PolyRate(-slope)
    } else {
        Verdict::SlowerThanPoly
    };

    Ok(RateFit {
        points: points.to_vec(),
        slope,
        intercept,
        slope_ci,
        residual,
        verdict,
        n_range,
        subsequence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderMargin {
    pub n: u64,
    pub r_n: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Checks `r_n <= L / n^β` for each report; fails on the first violation.
pub fn holder_bound_check(q: &Potential, reports: &[RiemannReport]) -> Result<Vec<HolderMargin>> {
    let cert = q
        .holder()
        .ok_or_else(|| Error::invalid(format!("{} carries no Hölder certificate", q.label())))?;
    reports
        .iter()
        .map(|r| {
            let bound = cert.riemann_bound(r.n);
            if r.r_n > bound {
                Err(Error::HolderViolation {
                    n: r.n,
                    r_n: r.r_n,
                    bound,
                })
            } else {
                Ok(HolderMargin {
                    n: r.n,
                    r_n: r.r_n,
                    bound,
                    margin: bound - r.r_n,
                })
            }
        })
        .collect()
}

/// Reference sequence `δ_n` compared against `R_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSeq {
    /// `δ_n = n^{-α}`.
    InversePower(f64),
    /// `δ_n = 1 / ln(n + 1)`.
    InverseLog,
}

impl DeltaSeq {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            DeltaSeq::InversePower(alpha) => (n as f64).powf(-alpha),
            DeltaSeq::InverseLog => 1.0 / ((n as f64) + 1.0).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowRow {
    pub m: u32,
    pub n: u64,
    pub r_n: f64,
    pub delta_n: f64,
    pub ratio: f64,
    /// `½ Σ_{j>=m} a_j - Σ_{j<m} 2^{j-m+1} a_j`.
    pub predicted_lower: f64,
    pub argmax: DeltaPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlowConvergenceTable {
    pub rows: Vec<SlowRow>,
    /// Whether `R_{2^m} / δ_{2^m}` is strictly increasing along the rows.
    pub ratio_increasing: bool,
    pub lower_bounds_hold: bool,
}

/// Predicted lower bound on `R_{2^m}` for a tent train (levels numbered from 1).
pub fn tent_lower_bound(amplitudes: &[f64], m: u32) -> f64 {
    let tail: f64 = amplitudes.iter().skip(m.saturating_sub(1) as usize).sum();
    let head: f64 = amplitudes
        .iter()
        .enumerate()
        .take(m.saturating_sub(1) as usize)
        .map(|(i, a)| 2f64.powi(i as i32 + 1 - m as i32 + 1) * a)
        .sum();
    0.5 * tail - head
}

/// `R_{2^m}` along `ms` for a tent train, compared with `δ_{2^m}`.
pub fn slow_convergence_check(
    q: &Potential,
    delta: DeltaSeq,
    ms: &[u32],
    cfg: &SearchConfig,
) -> Result<SlowConvergenceTable> {
    let amplitudes = match q.kind() {
        PotentialKind::TentTrain { amplitudes } => amplitudes,
        _ => {
            return Err(Error::invalid(format!(
                "slow convergence check needs a tent train, got {}",
                q.tag()
            )))
        }
    };
    debug_assert_eq!(q.tag(), KindTag::TentTrain);
    let levels = amplitudes.len() as u32;
    if ms.is_empty() {
        return Err(Error::invalid("m-list is empty"));
    }
    if let Some(&m) = ms.iter().find(|&&m| m == 0 || m > 62 || (levels > 0 && m > levels)) {
        return Err(Error::invalid(format!(
            "m = {m} lies outside the built levels 1..={levels}"
        )));
    }
    let cfg = cfg.clone().with_hints([DeltaPair::corner(cfg.s_min)]);
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        let n = 1u64 << m;
        let report = sup_riemann_error(q, n, &cfg)?;
        let delta_n = delta.at(n);
        rows.push(SlowRow {
            m,
            n,
            r_n: report.r_n,
            delta_n,
            ratio: report.r_n / delta_n,
            predicted_lower: tent_lower_bound(amplitudes, m),
            argmax: report.argmax,
        });
    }
    let ratio_increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    // the bound is a limit at s -> 0+; the search stops at s_min
    let lipschitz: f64 = amplitudes.iter().enumerate().map(|(i, a)| a * 2f64.powi(i as i32 + 2)).sum();
    let slack = cfg.s_min * (q.sup_norm() + lipschitz) + 1e-12;
    let lower_bounds_hold = rows.iter().all(|r| r.r_n >= r.predicted_lower - slack);
    Ok(SlowConvergenceTable {
        rows,
        ratio_increasing,
        lower_bounds_hold,
    })
}
