//! Dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, Schur, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vector norm and the matrix norm it induces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Inf,
    One,
    Two,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::Inf, Norm::One, Norm::Two];

    pub fn vector(self, v: &DVector<f64>) -> f64 {
        match self {
            Norm::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Norm::One => v.iter().map(|x| x.abs()).sum(),
            Norm::Two => v.norm(),
        }
    }

    pub fn matrix(self, m: &DMatrix<f64>) -> f64 {
        if m.is_empty() {
            return 0.0;
        }
        match self {
            Norm::Inf => max_abs_row_sum(m),
            Norm::One => (0..m.ncols())
                .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Norm::Two => m.singular_values().max(),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" => Ok(Norm::Inf),
            "one" | "1" => Ok(Norm::One),
            "two" | "2" => Ok(Norm::Two),
            other => Err(Error::InvalidParameter(format!("unknown norm '{other}'"))),
        }
    }
}

pub fn max_abs_row_sum(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    Norm::Inf.vector(v)
}

/// Diagonal shifts, in units of `max |m_ij|`, tried when the QR iteration stalls.
const SCHUR_SHIFTS: [f64; 6] = [0.0, 0.37, -0.61, 1.13, -1.47, 2.29];

/// Spectral radius from the real Schur form. The QR iteration is capped
/// because it can cycle on exactly periodic blocks (permutation-like
/// supports); it is then rerun on `m + c I` and the shift taken back out.
pub fn dense_spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let n = m.nrows();
    let unit = m.amax().max(f64::MIN_POSITIVE);
    for c in SCHUR_SHIFTS.map(|c| c * unit) {
        let shifted = m + DMatrix::<f64>::identity(n, n) * c;
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, 1000 * n) {
            return schur.complex_eigenvalues().iter().map(|z| (z - c).norm()).fold(0.0, f64::max);
        }
    }
    panic!("real Schur iteration did not converge for any shift of a {n}x{n} matrix")
}

/// Outcome of [`perron_root`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerronEstimate {
    pub rho: f64,
    pub iterations: usize,
    pub dense_fallback: bool,
}

/// Spectral radius of a nonnegative matrix.
///
/// The radius is the largest radius over the strongly connected blocks of
/// the support. Small blocks go to the dense eigensolver. Larger ones run
/// power iteration on `B = A + I` from the all-ones vector, stopping once
/// the Collatz-Wielandt bracket `min (Bx)_i/x_i <= rho(B) <= max (Bx)_i/x_i`
/// is relatively tighter than `rel_tol`; the dense solver is the fallback.
pub fn perron_root(m: &DMatrix<f64>, rel_tol: f64, cap: usize, dense_below: usize) -> PerronEstimate {
    let n = m.nrows();
    let support: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| m[(i, j)] != 0.0).collect()).collect();
    let mut best = PerronEstimate { rho: 0.0, iterations: 0, dense_fallback: false };
    for block in crate::graph::strongly_connected_components(&support) {
        if block.len() == 1 && m[(block[0], block[0])] == 0.0 {
            continue;
        }
        let sub = m.select_rows(&block).select_columns(&block);
        let est = irreducible_perron_root(&sub, rel_tol, cap, dense_below);
        best.iterations += est.iterations;
        best.dense_fallback |= est.dense_fallback;
        best.rho = best.rho.max(est.rho);
    }
    best
}

fn irreducible_perron_root(m: &DMatrix<f64>, rel_tol: f64, cap: usize, dense_below: usize) -> PerronEstimate {
    let n = m.nrows();
    if n <= dense_below {
        return PerronEstimate { rho: dense_spectral_radius(m), iterations: 0, dense_fallback: true };
    }
    let mut x = DVector::from_element(n, 1.0);
    for it in 1..=cap {
        let y = m * &x + &x;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            if x[i] <= f64::MIN_POSITIVE {
                lo = 0.0;
                hi = f64::INFINITY;
                break;
            }
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if !hi.is_finite() {
            break;
        }
        let rho_hi = hi - 1.0;
        let rho_lo = lo - 1.0;
        if rho_hi - rho_lo <= rel_tol * rho_hi.abs().max(f64::MIN_POSITIVE) {
            return PerronEstimate { rho: 0.5 * (rho_hi + rho_lo), iterations: it, dense_fallback: false };
        }
        let scale = y.max();
        x = y / scale;
    }
    PerronEstimate { rho: dense_spectral_radius(m), iterations: cap, dense_fallback: true }
}

/// LU factorisation of a square matrix that is known to be nonsingular.
pub struct Factorization {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    dim: usize,
}

impl Factorization {
    pub fn new(m: DMatrix<f64>) -> Self {
        let dim = m.nrows();
        Factorization { lu: m.lu(), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: b.len() });
        }
        if self.dim == 0 {
            return Ok(DVector::zeros(0));
        }
        self.lu
            .solve(b)
            .ok_or(Error::NotWellPosed { rho: f64::NAN, witness: None })
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if self.dim == 0 {
            return Ok(DMatrix::zeros(0, b.ncols()));
        }
        self.lu
            .solve(b)
            .ok_or(Error::NotWellPosed { rho: f64::NAN, witness: None })
    }

    pub fn unit_column(&self, k: usize) -> Result<DVector<f64>> {
        let mut e = DVector::zeros(self.dim);
        e[k] = 1.0;
        self.solve(&e)
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        if self.dim == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        self.lu
            .try_inverse()
            .ok_or(Error::NotWellPosed { rho: f64::NAN, witness: None })
    }
}

/// `A^t` for a sequence of `t`, returned as `(log scale, A^t / scale)` pairs so
/// that high powers of contractive matrices stay representable.
pub fn scaled_powers(a: &DMatrix<f64>, t_max: usize) -> Vec<(f64, DMatrix<f64>)> {
    let n = a.nrows();
    let mut out = Vec::with_capacity(t_max + 1);
    let mut log_scale = 0.0;
    let mut p = DMatrix::<f64>::identity(n, n);
    out.push((0.0, p.clone()));
    for _ in 0..t_max {
        p = a * &p;
        let m = max_abs_row_sum(&p);
        if m > 0.0 && m.is_finite() {
            p /= m;
            log_scale += m.ln();
        }
        out.push((log_scale, p.clone()));
    }
    out
}

/// Higham's block-1 variant of Hager's estimator for `||A^-1||_1`.
///
/// Always a lower bound on the true value; typically exact or within a
/// small factor.
pub fn estimate_inverse_one_norm(
    solve: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    solve_transpose: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0;
    for _ in 0..5 {
        let y = solve(&x)?;
        let new_estimate = Norm::One.vector(&y);
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = solve_transpose(&xi)?;
        let (j, zmax) = z.iter().map(|v| v.abs()).enumerate().fold((0, 0.0), |acc, (i, v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
        if new_estimate <= estimate || zmax <= z.dot(&x) {
            estimate = estimate.max(new_estimate);
            break;
        }
        estimate = new_estimate;
        x = DVector::zeros(n);
        x[j] = 1.0;
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Unbounded QR iteration never converges on this matrix.
    #[test]
    fn radius_when_schur_stalls() {
        let mut m = DMatrix::zeros(6, 6);
        m[(1, 1)] = 1.0;
        m[(4, 3)] = 1.0;
        m[(2, 4)] = 0.5538146933034395;
        m[(5, 4)] = 1.0;
        assert!(Schur::try_new(m.clone(), f64::EPSILON, 6000).is_none());
        assert_relative_eq!(dense_spectral_radius(&m), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn norms_of_small_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 4.0]);
        assert_eq!(Norm::Inf.matrix(&m), 7.0);
        assert_eq!(Norm::One.matrix(&m), 6.0);
        let v = DVector::from_vec(vec![3.0, -4.0]);
        assert_eq!(Norm::Two.vector(&v), 5.0);
        assert_eq!(Norm::One.vector(&v), 7.0);
        assert_eq!(Norm::Inf.vector(&v), 4.0);
    }

    #[test]
    fn perron_root_power_and_dense_agree() {
        let n = 80;
        let m = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 13) % 11) as f64 / (11.0 * n as f64));
        let dense = dense_spectral_radius(&m);
        let power = perron_root(&m, 1e-12, 100_000, 0);
        assert!(!power.dense_fallback);
        assert_relative_eq!(dense, power.rho, max_relative = 1e-10);
    }

    #[test]
    fn perron_root_of_reducible_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let est = perron_root(&m, 1e-12, 1000, 0);
        assert!(!est.dense_fallback);
        assert_relative_eq!(est.rho, 0.5, epsilon = 1e-12);
        assert_eq!(perron_root(&DMatrix::zeros(4, 4), 1e-12, 10, 0).rho, 0.0);
    }

    #[test]
    fn perron_root_of_permutation_cycle() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let est = perron_root(&m, 1e-12, 1000, 0);
        assert_relative_eq!(est.rho, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hager_matches_exact_on_small_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, -1.0, 0.5, 0.2, 3.0, -1.0, 0.0, 1.0, 2.0]);
        let f = Factorization::new(a.clone());
        let ft = Factorization::new(a.transpose());
        let est = estimate_inverse_one_norm(|b| f.solve(b), |b| ft.solve(b), 3).unwrap();
        let exact = Norm::One.matrix(&f.inverse().unwrap());
        assert!(est <= exact * (1.0 + 1e-12));
        assert!(est >= exact / 3.0);
    }

    #[test]
    fn scaled_powers_reconstruct() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.25]);
        let p = scaled_powers(&a, 5);
        let direct = a.pow(5);
        let rebuilt = &p[5].1 * p[5].0.exp();
        assert_relative_eq!(direct, rebuilt, epsilon = 1e-15);
    }
}
