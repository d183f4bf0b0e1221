//! Fat Cantor-type set built from dyadic neighbourhoods, in exact rational arithmetic.
//!
//! Level `n >= 1` removes the open intervals of half-width `2^{-(2n+2)}` around
//! every `k / 2^n`, `k = 0..=2^n` (the two boundary intervals are one-sided).
//! The level removes total length `2^{-(n+1)}`, so the union over `n <= N` has
//! measure at most `1/2` and its complement `C_N` keeps measure at least `1/2`.

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use super::{Pieces, Potential};
use crate::error::{Error, Result};

pub type Dyadic = Ratio<i128>;

/// Upper limit on the number of raw intervals a construction may allocate.
pub const DEFAULT_INTERVAL_CAP: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenInterval {
    pub left: Dyadic,
    pub right: Dyadic,
}

impl OpenInterval {
    pub fn length(&self) -> Dyadic {
        self.right - self.left
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left.to_f64().unwrap() < x && x < self.right.to_f64().unwrap()
    }
}

/// One removed interval `Δ_{k,n}` around the dyadic centre `k / 2^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CantorInterval {
    pub level: u32,
    pub index: u64,
    pub center: Dyadic,
    pub interval: OpenInterval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CantorConstruction {
    pub depth: u32,
    /// `levels[n - 1]` holds the `2^n + 1` intervals of level `n`.
    pub levels: Vec<Vec<CantorInterval>>,
    /// Disjoint, sorted normal form of the union of all levels.
    pub merged_open_set: Vec<OpenInterval>,
    pub complement_measure: Dyadic,
}

fn pow2(e: u32) -> i128 {
    1i128 << e
}

impl CantorConstruction {
    /// Half-width `2^{-(2n+2)}` of the level-`n` intervals.
    pub fn half_width(level: u32) -> Dyadic {
        Dyadic::new(1, pow2(2 * level + 2))
    }

    /// `ε_n = 1 / (3 · 2^{2n+2})`: corner size for which every left sample of
    /// `S_{2^n}` lands in a removed interval.
    pub fn corner_epsilon(level: u32) -> Dyadic {
        Dyadic::new(1, 3 * pow2(2 * level + 2))
    }

    /// Measure of level `n` before merging with the other levels.
    pub fn level_measure(&self, level: u32) -> Dyadic {
        self.levels[(level - 1) as usize]
            .iter()
            .map(|c| c.interval.length())
            .fold(Dyadic::zero(), |a, b| a + b)
    }

    pub fn open_measure(&self) -> Dyadic {
        Dyadic::one() - self.complement_measure
    }

    pub fn complement_measure_f64(&self) -> f64 {
        self.complement_measure.to_f64().unwrap()
    }

    /// The merged open set as a JSON list of `["num/den", "num/den"]` pairs.
    pub fn to_json(&self) -> Value {
        let intervals: Vec<Value> = self
            .merged_open_set
            .iter()
            .map(|iv| json!([iv.left.to_string(), iv.right.to_string()]))
            .collect();
        json!({
            "depth": self.depth,
            "complement_measure": self.complement_measure.to_string(),
            "open_measure": self.open_measure().to_string(),
            "intervals": intervals,
        })
    }
}

pub fn build_cantor(depth: u32) -> Result<(Potential, CantorConstruction)> {
    build_cantor_with_cap(depth, DEFAULT_INTERVAL_CAP)
}

/// Build `q = χ_{C_N}` for `N = depth` together with the construction record.
pub fn build_cantor_with_cap(depth: u32, cap: u64) -> Result<(Potential, CantorConstruction)> {
    if depth == 0 {
        return Err(Error::invalid("cantor depth must be >= 1"));
    }
    // Σ_{n=1}^{N} (2^n + 1), saturating for absurd depths
    let needed = (1..=depth as u64)
        .map(|n| 1u64.checked_shl(n as u32).unwrap_or(u64::MAX).saturating_add(1))
        .fold(0u64, u64::saturating_add);
    if needed > cap || depth > 28 {
        return Err(Error::ResourceLimit { depth, needed, cap });
    }

    let levels: Vec<Vec<CantorInterval>> = (1..=depth).map(level_intervals).collect();

    let mut raw: Vec<OpenInterval> = levels
        .iter()
        .flatten()
        .map(|c| c.interval.clone())
        .collect();
    raw.sort_by(|a, b| a.left.cmp(&b.left).then(a.right.cmp(&b.right)));
    let mut merged: Vec<OpenInterval> = Vec::new();
    for iv in raw {
        match merged.last_mut() {
            // open intervals overlap only if the next one starts strictly inside
            Some(last) if iv.left < last.right => {
                if iv.right > last.right {
                    last.right = iv.right;
                }
            }
            _ => merged.push(iv),
        }
    }
    let open: Dyadic = merged
        .iter()
        .map(OpenInterval::length)
        .fold(Dyadic::zero(), |a, b| a + b);
    let complement_measure = Dyadic::one() - open;

    let pieces = indicator_pieces(&merged)?;
    let construction = CantorConstruction {
        depth,
        levels,
        merged_open_set: merged,
        complement_measure,
    };
    Ok((Potential::cantor_indicator(depth, pieces), construction))
}

fn level_intervals(level: u32) -> Vec<CantorInterval> {
    let count = 1u64 << level;
    let h = CantorConstruction::half_width(level);
    (0..=count)
        .map(|k| {
            let center = Dyadic::new(k as i128, pow2(level));
            let left = if k == 0 { Dyadic::zero() } else { center - h };
            let right = if k == count { Dyadic::one() } else { center + h };
            CantorInterval {
                level,
                index: k,
                center,
                interval: OpenInterval { left, right },
            }
        })
        .collect()
}

/// Piecewise-constant indicator of the complement of `open` (sorted, disjoint).
fn indicator_pieces(open: &[OpenInterval]) -> Result<Pieces> {
    let mut breaks = vec![0.0];
    let mut values = Vec::new();
    let mut cursor = Dyadic::zero();
    for iv in open {
        if iv.left > cursor {
            values.push(1.0);
            breaks.push(iv.left.to_f64().unwrap());
        }
        values.push(0.0);
        breaks.push(iv.right.to_f64().unwrap());
        cursor = iv.right;
    }
    if cursor < Dyadic::one() {
        values.push(1.0);
        breaks.push(1.0);
    }
    Pieces::new(breaks, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fraction of a fine midpoint grid falling in the complement.
    fn grid_measure(c: &CantorConstruction, cells: usize) -> f64 {
        let bounds: Vec<(f64, f64)> = c
            .merged_open_set
            .iter()
            .map(|iv| (iv.left.to_f64().unwrap(), iv.right.to_f64().unwrap()))
            .collect();
        let inside = (0..cells)
            .filter(|&i| {
                let x = (i as f64 + 0.5) / cells as f64;
                !bounds.iter().any(|&(l, r)| l < x && x < r)
            })
            .count();
        inside as f64 / cells as f64
    }

    #[test]
    fn depth_one_removes_a_quarter() {
        let (_, c) = build_cantor(1).unwrap();
        assert_eq!(c.level_measure(1), Dyadic::new(1, 4));
        assert_eq!(c.complement_measure, Dyadic::new(3, 4));
    }

    #[test]
    fn depth_three_complement_is_21_over_32() {
        let (q, c) = build_cantor(3).unwrap();
        assert_eq!(c.complement_measure, Dyadic::new(21, 32));
        assert!((grid_measure(&c, 1 << 20) - 21.0 / 32.0).abs() < 1e-4);
        assert!((q.antiderivative(1.0).unwrap() - 21.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn level_measures_and_disjointness() {
        let (_, c) = build_cantor(8).unwrap();
        for n in 1..=8 {
            assert_eq!(c.level_measure(n), Dyadic::new(1, pow2(n + 1)));
            let level = &c.levels[(n - 1) as usize];
            assert_eq!(level.len(), (1usize << n) + 1);
            for w in level.windows(2) {
                assert!(w[0].interval.right <= w[1].interval.left);
            }
        }
        for w in c.merged_open_set.windows(2) {
            assert!(w[0].right <= w[1].left);
        }
    }

    #[test]
    fn complement_stays_above_half() {
        for depth in 1..=14 {
            let (_, c) = build_cantor(depth).unwrap();
            assert!(c.complement_measure >= Dyadic::new(1, 2), "depth {depth}");
        }
    }

    #[test]
    fn indicator_vanishes_exactly_on_open_set() {
        let (q, c) = build_cantor(5).unwrap();
        for iv in &c.merged_open_set {
            let mid = ((iv.left + iv.right) / Dyadic::from_integer(2)).to_f64().unwrap();
            assert_eq!(q.value(mid), 0.0);
        }
        for w in c.merged_open_set.windows(2) {
            if w[0].right < w[1].left {
                let mid = ((w[0].right + w[1].left) / Dyadic::from_integer(2)).to_f64().unwrap();
                assert_eq!(q.value(mid), 1.0);
            }
        }
    }

    #[test]
    fn corner_samples_land_in_level_intervals() {
        let depth = 6;
        let (q, c) = build_cantor(depth).unwrap();
        for m in 1..=depth {
            let eps = CantorConstruction::corner_epsilon(m).to_f64().unwrap();
            let n = 1u64 << m;
            for (s_frac, t_frac) in [(0.01, 0.01), (0.5, 0.5), (0.99, 0.2), (0.3, 0.97)] {
                let s = eps * s_frac;
                let t = 1.0 - eps * t_frac;
                for k in 0..n {
                    let xi = s + k as f64 * (t - s) / n as f64;
                    assert!(c.levels[(m - 1) as usize][k as usize].interval.contains(xi));
                    assert_eq!(q.value(xi), 0.0);
                }
            }
        }
    }

    #[test]
    fn resource_cap_is_enforced() {
        assert!(matches!(
            build_cantor_with_cap(10, 100),
            Err(Error::ResourceLimit { .. })
        ));
        assert!(build_cantor(0).is_err());
    }

    #[test]
    fn json_dump_lists_rational_intervals() {
        let (_, c) = build_cantor(1).unwrap();
        let v = c.to_json();
        assert_eq!(v["complement_measure"], "3/4");
        assert_eq!(v["intervals"][0][1], "1/16");
        assert_eq!(v["intervals"].as_array().unwrap().len(), 3);
    }
}
