//! Lie product formula for bounded generators: complex square matrices, the
//! telescoping identity
//!
//! `Pⁿ - Gⁿ = Σ_{k<n} P^{n-1-k} (P - G) G^k`, `P = e^{-τA/n} e^{-τB/n}`, `G = e^{-τ(A+B)/n}`,
//!
//! and the `O(1/n)` error of `(e^{-τA/n} e^{-τB/n})ⁿ` against `e^{-τ(A+B)}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default cap on `‖M‖` accepted by [`expm`].
pub const DEFAULT_EXPM_CAP: f64 = 500.0;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    entries: DMatrix<Complex64>,
    op_norm_bound: f64,
}

impl SquareMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return Err(Error::invalid(format!(
                "expected a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        // Frobenius norm dominates the spectral norm
        let op_norm_bound = entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok(Self {
            entries,
            op_norm_bound,
        })
    }

    /// Real matrix from row-major entries.
    pub fn from_real(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::invalid(format!(
                "{} entries do not fill a {dim}x{dim} matrix",
                rows.len()
            )));
        }
        Self::new(DMatrix::from_row_iterator(
            dim,
            dim,
            rows.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = values.len();
        Self::new(DMatrix::from_fn(d, d, |i, j| {
            Complex64::new(if i == j { values[i] } else { 0.0 }, 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Cheap upper bound on the spectral norm.
    pub fn op_norm_bound(&self) -> f64 {
        self.op_norm_bound
    }

    /// Largest singular value by power iteration on `MᴴM`.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.entries)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::wrap(self.entries.scale(factor))
    }

    pub fn add(&self, other: &SquareMatrix) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::wrap(&self.entries + &other.entries))
    }

    pub fn sub(&self, other: &SquareMatrix) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::wrap(&self.entries - &other.entries))
    }

    pub fn mul(&self, other: &SquareMatrix) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::wrap(&self.entries * &other.entries))
    }

    /// `Mᵏ` by binary powering.
    pub fn pow(&self, k: u64) -> Self {
        Self::wrap(matrix_pow(&self.entries, k))
    }

    pub fn commutes_with(&self, other: &SquareMatrix, tol: f64) -> bool {
        self.dim() == other.dim()
            && spectral_norm(&(&self.entries * &other.entries - &other.entries * &self.entries))
                <= tol
    }

    fn check_dim(&self, other: &SquareMatrix) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )))
        }
    }

    fn wrap(entries: DMatrix<Complex64>) -> Self {
        let op_norm_bound = entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Self {
            entries,
            op_norm_bound,
        }
    }
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    let d = m.nrows();
    let gram = m.adjoint() * m;
    if gram.iter().all(|z| z.norm_sqr() == 0.0) {
        return 0.0;
    }
    // fixed pseudo-random start so that no eigenvector is missed by symmetry
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = nalgebra::DVector::from_fn(d, |_, _| {
        Complex64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5))
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = &gram * &v;
        let next = w.norm();
        if next == 0.0 {
            break;
        }
        v = w / Complex64::new(next, 0.0);
        if (next - lambda).abs() <= POWER_TOL * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

fn matrix_pow(m: &DMatrix<Complex64>, mut k: u64) -> DMatrix<Complex64> {
    let d = m.nrows();
    let mut result = DMatrix::<Complex64>::identity(d, d);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// `e^M` with the default norm cap.
pub fn expm(m: &SquareMatrix) -> Result<SquareMatrix> {
    expm_with_cap(m, DEFAULT_EXPM_CAP)
}

/// `e^M` via scaling and squaring; fails when `‖M‖` exceeds `cap`.
pub fn expm_with_cap(m: &SquareMatrix, cap: f64) -> Result<SquareMatrix> {
    let norm = m.op_norm_bound();
    if norm > cap {
        return Err(Error::Overflow { norm, cap });
    }
    let out = SquareMatrix::wrap(m.entries.exp());
    if out.entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow { norm, cap });
    }
    Ok(out)
}

fn product_factors(
    a: &SquareMatrix,
    b: &SquareMatrix,
    tau: f64,
    n: u64,
) -> Result<(SquareMatrix, SquareMatrix)> {
    let h = -tau / n as f64;
    let p = expm(&a.scaled(h))?.mul(&expm(&b.scaled(h))?)?;
    let g = expm(&a.add(b)?.scaled(h))?;
    Ok((p, g))
}

/// `‖(Pⁿ - e^{-τ(A+B)}) - Σ_{k<n} P^{n-1-k} (P - G) G^k‖₂`.
pub fn telescoping_residual(a: &SquareMatrix, b: &SquareMatrix, tau: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let (p, g) = product_factors(a, b, tau, n)?;
    let exact = expm(&a.add(b)?.scaled(-tau))?;
    let lhs = &p.pow(n).entries - &exact.entries;

    let d = a.dim();
    let diff = &p.entries - &g.entries;
    // Σ P^{n-1-k} D G^k accumulated as S_{k+1} = P S_k + D G^k
    let mut sum = DMatrix::<Complex64>::zeros(d, d);
    let mut g_pow = DMatrix::<Complex64>::identity(d, d);
    for _ in 0..n {
        sum = &p.entries * &sum + &diff * &g_pow;
        g_pow = &g_pow * &g.entries;
    }
    Ok(spectral_norm(&(lhs - sum)))
}

/// `(n, ‖(e^{-τA/n} e^{-τB/n})ⁿ - e^{-τ(A+B)}‖₂)` for each `n`.
pub fn lie_error(
    a: &SquareMatrix,
    b: &SquareMatrix,
    tau: f64,
    ns: &[u64],
) -> Result<Vec<(u64, f64)>> {
    if ns.is_empty() || ns[0] == 0 {
        return Err(Error::invalid("n-list must be non-empty with n >= 1"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n-list must be strictly increasing"));
    }
    let exact = expm(&a.add(b)?.scaled(-tau))?;
    ns.par_iter()
        .map(|&n| {
            let (p, _) = product_factors(a, b, tau, n)?;
            Ok((n, spectral_norm(&(&p.pow(n).entries - &exact.entries))))
        })
        .collect()
}

/// Seeded pair of complex `dim × dim` matrices with spectral norms drawn from
/// `[max_norm / 4, max_norm]`.
pub fn random_pair(dim: usize, max_norm: f64, rng: &mut impl Rng) -> Result<(SquareMatrix, SquareMatrix)> {
    let mut one = || -> Result<SquareMatrix> {
        let raw = SquareMatrix::new(DMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }))?;
        let target = rng.gen_range(0.25 * max_norm..=max_norm);
        let norm = raw.spectral_norm();
        Ok(if norm > 0.0 { raw.scaled(target / norm) } else { raw })
    };
    let a = one()?;
    let b = one()?;
    Ok((a, b))
}

/// The non-commuting nilpotent pair `[[0,1],[0,0]]`, `[[0,0],[1,0]]`.
pub fn nilpotent_pair() -> (SquareMatrix, SquareMatrix) {
    (
        SquareMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]).expect("2x2"),
        SquareMatrix::from_real(2, &[0.0, 0.0, 1.0, 0.0]).expect("2x2"),
    )
}
