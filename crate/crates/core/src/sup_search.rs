//! Search for `R_n(q) = ess sup_Δ R_n(t, s; q)` and the resulting operator-norm
//! sandwich `e^{-||q||∞} R_n(q) <= sup_τ ||Trotter error(τ)|| <= R_n(q)`.
//!
//! The lower estimate comes from a multi-resolution grid over `Δ` (with
//! `s >= s_min`), local refinement around the best cells and a list of hint
//! points that must always be probed. Every reported value is an actual
//! evaluation, so it is a true lower bound of the supremum.
//!
//! The upper estimate is family specific: closed forms for constant and linear
//! potentials, the Hölder bound `L / n^β` where a certificate exists, and a
//! branch-and-bound over cells of the closed triangle with interval enclosures of
//! the integral and of every left sample for piecewise families.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialKind};
use crate::quadrature::{exact_integral, riemann_error, riemann_error_raw, DeltaPair, DEFAULT_S_MIN};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Grid points per axis on the coarse level.
    pub coarse_grid: usize,
    pub refine_levels: usize,
    pub refine_factor: usize,
    /// Number of best points refined on each level.
    pub top_cells: usize,
    pub s_min: f64,
    pub hint_points: Vec<DeltaPair>,
    /// Hard cap on pointwise error evaluations.
    pub max_evaluations: u64,
    /// Run the branch-and-bound certificate for piecewise families.
    pub certify: bool,
    /// Cell budget of the branch-and-bound certificate.
    pub certify_cells: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            coarse_grid: 256,
            refine_levels: 4,
            refine_factor: 8,
            top_cells: 16,
            s_min: DEFAULT_S_MIN,
            hint_points: Vec::new(),
            max_evaluations: 50_000_000,
            certify: true,
            certify_cells: 20_000,
        }
    }
}

impl SearchConfig {
    pub fn with_hints(mut self, hints: impl IntoIterator<Item = DeltaPair>) -> Self {
        self.hint_points.extend(hints);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.coarse_grid < 2 {
            return Err(Error::invalid("coarse_grid must be >= 2"));
        }
        if self.refine_factor < 2 {
            return Err(Error::invalid("refine_factor must be >= 2"));
        }
        if !(self.s_min > 0.0 && self.s_min < 1.0) {
            return Err(Error::invalid("s_min must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Where the upper bound of a report comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpperBound {
    /// Closed-form supremum (constant and linear potentials).
    ClosedForm(f64),
    /// `L_β / n^β` from a Hölder certificate.
    Holder(f64),
    /// Branch-and-bound over interval enclosures.
    Interval { bound: f64, cells: usize },
}

impl UpperBound {
    pub fn value(&self) -> f64 {
        match *self {
            UpperBound::ClosedForm(v) | UpperBound::Holder(v) => v,
            UpperBound::Interval { bound, .. } => bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace {
    pub level: usize,
    pub evaluations: u64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchTrace {
    pub hint_best: Option<f64>,
    pub levels: Vec<LevelTrace>,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannReport {
    pub n: u64,
    /// Best value found; a lower estimate of `R_n(q)`.
    pub r_n: f64,
    pub argmax: DeltaPair,
    /// `e^{-||q||∞} r_n`, a lower bound on the operator-norm Trotter error.
    pub lower_op_norm: f64,
    /// Certified upper bound on `R_n(q)`, and hence on the Trotter error.
    pub upper_op_norm: Option<f64>,
    pub upper_source: Option<UpperBound>,
    pub trace: SearchTrace,
}

/// Lower and upper bounds on `sup_τ ||e^{-τ(D0+Q)} - (e^{-τD0/n} e^{-τQ/n})^n||`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    /// `false` when `upper` is only the search value.
    pub certified: bool,
}

#[derive(Debug, Clone, Copy)]
struct Probe {
    value: f64,
    t: f64,
    s: f64,
}

impl Probe {
    /// Larger value first; ties prefer smaller `s`, then larger `t`.
    fn rank(&self, other: &Probe) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then(self.s.total_cmp(&other.s))
            .then(other.t.total_cmp(&self.t))
    }

    fn better_than(&self, other: &Probe) -> bool {
        self.rank(other) == Ordering::Less
    }
}

fn objective(q: &Potential, t: f64, s: f64, n: u64) -> Result<f64> {
    if q.exact_integrable() {
        Ok(riemann_error_raw(q, t, s, n))
    } else {
        riemann_error(q, DeltaPair::new_unchecked(t, s), n)
    }
}

fn evaluate(q: &Potential, points: &[(f64, f64)], n: u64) -> Result<Vec<Probe>> {
    points
        .par_iter()
        .map(|&(t, s)| objective(q, t, s, n).map(|value| Probe { value, t, s }))
        .collect()
}

fn best_of(probes: &[Probe]) -> Option<Probe> {
    probes
        .iter()
        .copied()
        .reduce(|a, b| if b.better_than(&a) { b } else { a })
}

struct SearchState {
    best: Option<Probe>,
    trace: SearchTrace,
    budget: u64,
}

impl SearchState {
    fn admit(&mut self, level_size: usize) -> bool {
        self.trace.evaluations + level_size as u64 <= self.budget
    }

    fn absorb(&mut self, probes: &[Probe]) {
        self.trace.evaluations += probes.len() as u64;
        if let Some(b) = best_of(probes) {
            if self.best.map_or(true, |cur| b.better_than(&cur)) {
                self.best = Some(b);
            }
        }
    }

    fn report(&self, q: &Potential, n: u64, s_min: f64) -> RiemannReport {
        let best = self.best.unwrap_or(Probe {
            value: 0.0,
            t: 1.0,
            s: s_min,
        });
        RiemannReport {
            n,
            r_n: best.value,
            argmax: DeltaPair::new_unchecked(best.t, best.s),
            lower_op_norm: (-q.sup_norm()).exp() * best.value,
            upper_op_norm: None,
            upper_source: None,
            trace: self.trace.clone(),
        }
    }
}

/// Estimate `R_n(q)` with its maximiser and, where possible, a certified upper bound.
pub fn sup_riemann_error(q: &Potential, n: u64, cfg: &SearchConfig) -> Result<RiemannReport> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    cfg.validate()?;
    let s_min = cfg.s_min;
    let mut state = SearchState {
        best: None,
        trace: SearchTrace::default(),
        budget: cfg.max_evaluations,
    };
    let exhausted = |state: &SearchState| Error::BudgetExceeded {
        budget: cfg.max_evaluations,
        partial: Box::new(state.report(q, n, s_min)),
    };

    // hints first: the analytically known maximisers must never be missed
    let mut hints: Vec<(f64, f64)> = cfg.hint_points.iter().map(|p| (p.t(), p.s())).collect();
    hints.push((1.0, s_min));
    if !state.admit(hints.len()) {
        return Err(exhausted(&state));
    }
    let probes = evaluate(q, &hints, n)?;
    state.trace.hint_best = best_of(&probes).map(|p| p.value);
    state.absorb(&probes);

    // coarse grid on [s_min, 1]^2 ∩ {s <= t}
    let g = cfg.coarse_grid;
    let axis: Vec<f64> = (0..g)
        .map(|i| if i + 1 == g { 1.0 } else { s_min + (1.0 - s_min) * i as f64 / (g - 1) as f64 })
        .collect();
    let coarse: Vec<(f64, f64)> = (0..g)
        .flat_map(|i| (0..=i).map(move |j| (i, j)))
        .map(|(i, j)| (axis[i], axis[j]))
        .collect();
    if !state.admit(coarse.len()) {
        return Err(exhausted(&state));
    }
    let mut level_probes = evaluate(q, &coarse, n)?;
    state.absorb(&level_probes);
    state.trace.levels.push(LevelTrace {
        level: 0,
        evaluations: level_probes.len() as u64,
        best: state.best.map_or(0.0, |b| b.value),
    });

    let mut spacing = (1.0 - s_min) / (g - 1) as f64;
    for level in 1..=cfg.refine_levels {
        level_probes.extend(probes.iter().copied());
        level_probes.sort_by(Probe::rank);
        level_probes.dedup_by(|a, b| a.t == b.t && a.s == b.s);
        let centers: Vec<Probe> = level_probes.iter().take(cfg.top_cells).copied().collect();

        spacing /= cfg.refine_factor as f64;
        let f = cfg.refine_factor as i64;
        let mut points = Vec::with_capacity(centers.len() * (2 * f as usize + 1).pow(2));
        for c in &centers {
            for i in -f..=f {
                for j in -f..=f {
                    let t = (c.t + i as f64 * spacing).min(1.0);
                    let s = (c.s + j as f64 * spacing).max(s_min);
                    if s <= t {
                        points.push((t, s));
                    }
                }
            }
        }
        if !state.admit(points.len()) {
            return Err(exhausted(&state));
        }
        level_probes = evaluate(q, &points, n)?;
        state.absorb(&level_probes);
        state.trace.levels.push(LevelTrace {
            level,
            evaluations: level_probes.len() as u64,
            best: state.best.map_or(0.0, |b| b.value),
        });
    }

    let mut report = state.report(q, n, s_min);
    let upper = certified_upper(q, n, cfg, &mut report)?;
    if let Some(u) = upper {
        report.upper_op_norm = Some(u.value().max(report.r_n));
        report.upper_source = Some(u);
    }
    Ok(report)
}

/// `[e^{-||q||∞} R̂_n, R̄_n]`; falls back to the search value (flagged) when no
/// certificate is available.
pub fn trotter_error_sandwich(q: &Potential, n: u64, cfg: &SearchConfig) -> Result<Sandwich> {
    let report = sup_riemann_error(q, n, cfg)?;
    Ok(report.sandwich())
}

impl RiemannReport {
    pub fn sandwich(&self) -> Sandwich {
        match self.upper_op_norm {
            Some(upper) => Sandwich {
                lower: self.lower_op_norm,
                upper,
                certified: true,
            },
            None => Sandwich {
                lower: self.lower_op_norm,
                upper: self.r_n,
                certified: false,
            },
        }
    }
}

fn certified_upper(
    q: &Potential,
    n: u64,
    cfg: &SearchConfig,
    report: &mut RiemannReport,
) -> Result<Option<UpperBound>> {
    let closed = match q.kind() {
        PotentialKind::Constant { .. } => Some(UpperBound::ClosedForm(0.0)),
        // R_n(t, s) = |slope| (t - s)^2 / (2n)
        PotentialKind::Linear { slope, .. } => {
            Some(UpperBound::ClosedForm(slope.abs() / (2.0 * n as f64)))
        }
        _ => None,
    };
    if closed.is_some() {
        return Ok(closed);
    }
    let holder = q.holder().map(|c| UpperBound::Holder(c.riemann_bound(n)));
    let interval = if cfg.certify && q.exact_integrable() && q.range_on(0.0, 1.0).is_some() {
        Some(interval_certificate(q, n, cfg, report)?)
    } else {
        None
    };
    Ok(match (holder, interval) {
        (Some(h), Some(i)) => Some(if i.value() < h.value() { i } else { h }),
        (h, i) => h.or(i),
    })
}

/// Axis-aligned cell `[t0, t1] x [s0, s1]` of the closed triangle.
#[derive(Debug, Clone, Copy)]
struct Cell {
    t0: f64,
    t1: f64,
    s0: f64,
    s1: f64,
}

#[derive(Debug, Clone, Copy)]
struct Scored {
    bound: f64,
    cell: Cell,
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scored {}
impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(other.cell.s0.total_cmp(&self.cell.s0))
            .then(self.cell.t0.total_cmp(&other.cell.t0))
    }
}

impl Cell {
    /// Vertices of the cell clipped to `s <= t`.
    fn vertices(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = [
            (self.t0, self.s0),
            (self.t0, self.s1),
            (self.t1, self.s0),
            (self.t1, self.s1),
        ]
        .into_iter()
        .filter(|(t, s)| s <= t)
        .collect();
        let lo = self.t0.max(self.s0);
        let hi = self.t1.min(self.s1);
        for x in [self.t0, self.t1, self.s0, self.s1] {
            if x >= lo && x <= hi {
                v.push((x, x));
            }
        }
        v
    }

    fn split(&self) -> [Cell; 4] {
        let tm = 0.5 * (self.t0 + self.t1);
        let sm = 0.5 * (self.s0 + self.s1);
        [
            Cell { t0: self.t0, t1: tm, s0: self.s0, s1: sm },
            Cell { t0: tm, t1: self.t1, s0: self.s0, s1: sm },
            Cell { t0: self.t0, t1: tm, s0: sm, s1: self.s1 },
            Cell { t0: tm, t1: self.t1, s0: sm, s1: self.s1 },
        ]
    }
}

/// Sound upper bound of `R_n(t, s)` over the cell, or `None` if the cell misses
/// the triangle.
fn cell_bound(q: &Potential, n: u64, cell: &Cell) -> Option<f64> {
    let verts = cell.vertices();
    if verts.is_empty() {
        return None;
    }
    let fold = |f: &dyn Fn(&(f64, f64)) -> f64| {
        verts
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let (d_lo, d_hi) = fold(&|&(t, s)| t - s);
    let d_lo = d_lo.max(0.0);
    let (t_lo, t_hi) = fold(&|&(t, _)| t);
    let (s_lo, s_hi) = fold(&|&(_, s)| s);

    // ∫_s^t q = F(t) - F(s) with F non-decreasing, and <= ||q|| (t - s)
    let i_hi = if t_hi >= s_lo {
        exact_integral(q, t_hi, s_lo).min(q.sup_norm() * d_hi)
    } else {
        0.0
    };
    let i_lo = if t_lo > s_hi { exact_integral(q, t_lo, s_hi) } else { 0.0 };

    let nf = n as f64;
    let (mut sum_lo, mut sum_hi) = (0.0, 0.0);
    for k in 0..n {
        let w = k as f64 / nf;
        let (x_lo, x_hi) = fold(&|&(t, s)| (1.0 - w) * s + w * t);
        let (lo, hi) = q.range_on(x_lo.clamp(0.0, 1.0), x_hi.clamp(0.0, 1.0))?;
        sum_lo += lo;
        sum_hi += hi;
    }
    let s_lo_bound = d_lo / nf * sum_lo;
    let s_hi_bound = d_hi / nf * sum_hi;
    Some((i_hi - s_lo_bound).max(s_hi_bound - i_lo).max(0.0))
}

const CERTIFY_BATCH: usize = 64;
const CERTIFY_INITIAL: usize = 16;

fn interval_certificate(
    q: &Potential,
    n: u64,
    cfg: &SearchConfig,
    report: &mut RiemannReport,
) -> Result<UpperBound> {
    let mut heap = BinaryHeap::new();
    let step = 1.0 / CERTIFY_INITIAL as f64;
    let initial: Vec<Cell> = (0..CERTIFY_INITIAL)
        .flat_map(|i| (0..CERTIFY_INITIAL).map(move |j| (i, j)))
        .filter(|&(i, j)| j <= i)
        .map(|(i, j)| Cell {
            t0: i as f64 * step,
            t1: (i + 1) as f64 * step,
            s0: j as f64 * step,
            s1: (j + 1) as f64 * step,
        })
        .collect();
    let scored: Vec<Option<Scored>> = initial
        .par_iter()
        .map(|c| cell_bound(q, n, c).map(|bound| Scored { bound, cell: *c }))
        .collect();
    heap.extend(scored.into_iter().flatten());

    let mut best = Probe {
        value: report.r_n,
        t: report.argmax.t(),
        s: report.argmax.s(),
    };
    let mut processed = 0usize;
    while processed < cfg.certify_cells {
        let top = match heap.peek() {
            Some(top) => top.bound,
            None => break,
        };
        if top <= best.value * (1.0 + 1e-9) + 1e-14 {
            break;
        }
        let mut batch = Vec::with_capacity(CERTIFY_BATCH);
        while batch.len() < CERTIFY_BATCH {
            match heap.pop() {
                Some(sc) if sc.bound > best.value => batch.push(sc.cell),
                Some(sc) => {
                    heap.push(sc);
                    break;
                }
                None => break,
            }
        }
        if batch.is_empty() {
            break;
        }
        processed += batch.len();
        let children: Vec<Cell> = batch.iter().flat_map(|c| c.split()).collect();
        let scored: Vec<(Option<Scored>, Option<Probe>)> = children
            .par_iter()
            .map(|c| {
                let bound = cell_bound(q, n, c).map(|bound| Scored { bound, cell: *c });
                // probe the cell centre (clipped into Δ) to tighten the lower side
                let t = 0.5 * (c.t0 + c.t1);
                let s = (0.5 * (c.s0 + c.s1)).max(cfg.s_min);
                let probe = (bound.is_some() && s <= t)
                    .then(|| Probe { value: riemann_error_raw(q, t, s, n), t, s });
                (bound, probe)
            })
            .collect();
        for (bound, probe) in scored {
            if let Some(b) = bound {
                heap.push(b);
            }
            if let Some(p) = probe {
                report.trace.evaluations += 1;
                if p.better_than(&best) {
                    best = p;
                }
            }
        }
    }
    if best.value > report.r_n {
        report.r_n = best.value;
        report.argmax = DeltaPair::new_unchecked(best.t, best.s);
        report.lower_op_norm = (-q.sup_norm()).exp() * best.value;
    }
    let bound = heap.peek().map_or(0.0, |s| s.bound).max(best.value);
    Ok(UpperBound::Interval {
        bound,
        cells: processed,
    })
}
