//! Undirected random-walk specialisation.
//!
//! For `W = D^-1 A` with symmetric 0/1 adjacency `A`, the interior block
//! `N_ii` is similar to the symmetric matrix `M = D^1/2 N_ii D^-1/2`, whose
//! entries are `A_ij / sqrt(d_i d_j)`. Its eigenpairs give a closed form for
//! the Green operator under homogeneous susceptibility.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::InfluenceSystem;
use crate::linalg;

/// Tolerance for the symmetry check `d_i W_ij = d_j W_ji`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DirichletSpectrum {
    interior: Vec<usize>,
    /// Degrees of the interior nodes in the full graph.
    degrees: DVector<f64>,
    /// Descending.
    eigenvalues: DVector<f64>,
    /// Orthonormal columns matching `eigenvalues`.
    eigenvectors: DMatrix<f64>,
    n_ii: DMatrix<f64>,
    symmetric: DMatrix<f64>,
}

/// Degrees `d_i` (support size of row `i`) after checking that `W` comes
/// from a symmetric 0/1 adjacency matrix.
pub fn random_walk_degrees(system: &InfluenceSystem) -> Result<Vec<f64>> {
    let n = system.n();
    let degrees: Vec<f64> = (0..n).map(|i| system.successors(i).len() as f64).collect();
    for i in 0..n {
        for &j in system.successors(i) {
            let a = degrees[i] * system.weight(i, j);
            if (a - 1.0).abs() > SYMMETRY_TOL {
                return Err(Error::NotRandomWalkSystem {
                    reason: format!("row {i} is not uniform over its support"),
                });
            }
        }
        for j in 0..n {
            let lhs = degrees[i] * system.weight(i, j);
            let rhs = degrees[j] * system.weight(j, i);
            if (lhs - rhs).abs() > SYMMETRY_TOL {
                return Err(Error::NotRandomWalkSystem {
                    reason: format!("D W is not symmetric at ({i}, {j})"),
                });
            }
        }
    }
    Ok(degrees)
}

pub fn dirichlet_spectrum(system: &InfluenceSystem, interior: &[usize]) -> Result<DirichletSpectrum> {
    for &i in interior {
        system.check_node(i)?;
    }
    let all_degrees = random_walk_degrees(system)?;
    let m = interior.len();
    let degrees = DVector::from_iterator(m, interior.iter().map(|&i| all_degrees[i]));
    let n_ii = system.weights().select_rows(interior).select_columns(interior);
    let mut symmetric = DMatrix::from_fn(m, m, |a, b| n_ii[(a, b)] * (degrees[a] / degrees[b]).sqrt());
    symmetric = (&symmetric + symmetric.transpose()) * 0.5;

    let eig = SymmetricEigen::new(symmetric.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = DVector::from_iterator(m, order.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);

    Ok(DirichletSpectrum { interior: interior.to_vec(), degrees, eigenvalues, eigenvectors, n_ii, symmetric })
}

impl DirichletSpectrum {
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `N_ii`, the interior block of the random-walk matrix.
    pub fn n_ii(&self) -> &DMatrix<f64> {
        &self.n_ii
    }

    /// `D^1/2 N_ii D^-1/2`.
    pub fn symmetrized(&self) -> &DMatrix<f64> {
        &self.symmetric
    }

    /// Dirichlet restriction of the symmetric normalised Laplacian, `I - M`.
    pub fn dirichlet_laplacian(&self) -> DMatrix<f64> {
        let m = self.interior.len();
        DMatrix::identity(m, m) - &self.symmetric
    }

    /// Largest eigenvalue; 0 for an empty interior. By Perron-Frobenius it
    /// also bounds every other eigenvalue in modulus.
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.iter().copied().next().unwrap_or(0.0)
    }

    /// `max |U^T U - I|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let m = self.interior.len();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(m, m)).amax()
    }

    /// `max |M - sum lambda_k u_k u_k^T|`.
    pub fn reconstruction_residual(&self) -> f64 {
        let rebuilt = &self.eigenvectors * DMatrix::from_diagonal(&self.eigenvalues) * self.eigenvectors.transpose();
        (rebuilt - &self.symmetric).amax()
    }

    /// `max |D^1/2 N_ii D^-1/2 - M|` before symmetrisation.
    pub fn similarity_residual(&self) -> f64 {
        let m = self.interior.len();
        let raw = DMatrix::from_fn(m, m, |a, b| self.n_ii[(a, b)] * (self.degrees[a] / self.degrees[b]).sqrt());
        (raw - &self.symmetric).amax()
    }

    /// `sqrt(d_max / d_min)` over the interior: the condition number of
    /// `D^1/2`, which converts weighted-norm bounds into 2-norm bounds.
    pub fn degree_condition(&self) -> f64 {
        if self.degrees.is_empty() {
            return 1.0;
        }
        (self.degrees.max() / self.degrees.min()).sqrt()
    }

    /// `||D^1/2 x||_2`, the norm in which `N_ii` is self-adjoint.
    pub fn weighted_norm(&self, x: &DVector<f64>) -> f64 {
        x.iter().zip(self.degrees.iter()).map(|(v, d)| v * v * d).sum::<f64>().sqrt()
    }

    fn check_gap(&self, s: f64) -> Result<()> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParameter(format!("susceptibility must lie in (0, 1], got {s}")));
        }
        let value = s * self.lambda_max();
        if value >= 1.0 {
            return Err(Error::SpectralGapViolation { value });
        }
        Ok(())
    }
}

/// `D^-1/2 (sum_k u_k u_k^T / (1 - s lambda_k)) D^1/2`, which equals
/// `(I - s N_ii)^-1`.
pub fn spectral_green(spectrum: &DirichletSpectrum, s: f64) -> Result<DMatrix<f64>> {
    spectrum.check_gap(s)?;
    let scale = spectrum.eigenvalues.map(|l| 1.0 / (1.0 - s * l));
    let core = &spectrum.eigenvectors * DMatrix::from_diagonal(&scale) * spectrum.eigenvectors.transpose();
    let d = &spectrum.degrees;
    let m = d.len();
    Ok(DMatrix::from_fn(m, m, |a, b| core[(a, b)] * (d[b] / d[a]).sqrt()))
}

/// `(s lambda_max)^t`.
pub fn sharpened_rate(spectrum: &DirichletSpectrum, s: f64, t: u32) -> Result<f64> {
    spectrum.check_gap(s)?;
    Ok((s * spectrum.lambda_max()).powi(t as i32))
}

/// `lambda_max` of the interior block by power iteration on the
/// symmetrised matrix, for graphs where the full eigendecomposition is
/// not needed.
pub fn lambda_max_power(system: &InfluenceSystem, interior: &[usize], tol: f64, cap: usize) -> Result<f64> {
    let degrees = random_walk_degrees(system)?;
    let m = interior.len();
    let sym = DMatrix::from_fn(m, m, |a, b| {
        let (i, j) = (interior[a], interior[b]);
        system.weight(i, j) * (degrees[i] / degrees[j]).sqrt()
    });
    let est = linalg::perron_root(&sym, tol, cap, 0);
    if est.dense_fallback && m > 0 {
        return Err(Error::PowerIterationDiverged { cap });
    }
    Ok(est.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{path_example, GreenMethod};
    use approx::assert_relative_eq;

    fn path() -> InfluenceSystem {
        InfluenceSystem::random_walk_from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn path_spectrum_by_hand() {
        let sp = dirichlet_spectrum(&path(), &[0, 1]).unwrap();
        let h = 0.5f64.sqrt();
        assert_relative_eq!(sp.symmetrized()[(0, 1)], h, epsilon = 1e-15);
        assert_relative_eq!(sp.eigenvalues()[0], h, epsilon = 1e-14);
        assert_relative_eq!(sp.eigenvalues()[1], -h, epsilon = 1e-14);
        assert!(sp.orthogonality_residual() < 1e-12);
        assert!(sp.reconstruction_residual() < 1e-12);
        assert!(sp.similarity_residual() < 1e-15);
    }

    #[test]
    fn isolated_interior_node_has_zero_spectrum() {
        let sp = dirichlet_spectrum(&path(), &[1]).unwrap();
        assert_eq!(sp.eigenvalues().as_slice(), &[0.0]);
        assert_eq!(spectral_green(&sp, 0.7).unwrap(), DMatrix::identity(1, 1));
    }

    #[test]
    fn green_matches_factorization_on_path() {
        let sp = dirichlet_spectrum(&path(), &[0, 1]).unwrap();
        let g = spectral_green(&sp, 0.5).unwrap();
        let reference = path_example().green_operator(GreenMethod::Factorization).unwrap();
        assert_relative_eq!(g, reference, epsilon = 1e-12);
    }

    #[test]
    fn green_tends_to_identity() {
        let sp = dirichlet_spectrum(&path(), &[0, 1]).unwrap();
        let g = spectral_green(&sp, 1e-12).unwrap();
        assert_relative_eq!(g, DMatrix::identity(2, 2), epsilon = 1e-11);
    }

    #[test]
    fn sharpened_rate_values() {
        let sp = dirichlet_spectrum(&path(), &[0, 1]).unwrap();
        assert_eq!(sharpened_rate(&sp, 0.5, 0).unwrap(), 1.0);
        let expected = (0.5 * 0.5f64.sqrt()).powi(10);
        assert_relative_eq!(sharpened_rate(&sp, 0.5, 10).unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 3.0517578125e-5, max_relative = 1e-12);
    }

    #[test]
    fn gap_violation_and_bad_s() {
        let full = InfluenceSystem::random_walk_from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let sp = dirichlet_spectrum(&full, &[0, 1, 2]).unwrap();
        assert_relative_eq!(sp.lambda_max(), 1.0, epsilon = 1e-12);
        assert!(matches!(spectral_green(&sp, 1.0), Err(Error::SpectralGapViolation { .. })));
        assert!(matches!(sharpened_rate(&sp, 0.0, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn directed_system_rejected() {
        let sys = InfluenceSystem::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(dirichlet_spectrum(&sys, &[0]), Err(Error::NotRandomWalkSystem { .. })));
        let weighted = InfluenceSystem::from_rows(&[vec![0.25, 0.75], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(dirichlet_spectrum(&weighted, &[0]), Err(Error::NotRandomWalkSystem { .. })));
    }

    #[test]
    fn karate_lambda_max_below_one() {
        let k = crate::datasets::karate();
        let interior: Vec<usize> = (1..34).collect();
        let sp = dirichlet_spectrum(&k, &interior).unwrap();
        let power = lambda_max_power(&k, &interior, 1e-13, 1_000_000).unwrap();
        assert!(sp.lambda_max() < 1.0);
        assert_relative_eq!(sp.lambda_max(), power, max_relative = 1e-9);
    }
}
