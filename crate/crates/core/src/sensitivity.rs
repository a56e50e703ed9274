//! Steady-state derivatives with respect to susceptibility and perturbation
//! bounds with respect to the interior and boundary blocks of `W`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{DirichletProblem, Resolvent};
use crate::error::{Error, Result};
use crate::linalg::{estimate_inverse_one_norm, Factorization, Norm};

/// Above this interior size the inverse norm is estimated rather than
/// computed from the materialised inverse.
pub const EXACT_INVERSE_LIMIT: usize = 500;

pub const FD_STEP: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct SensitivityReport {
    pub node: usize,
    /// `(W_ii v* + W_ib psi - phi)_k`.
    pub scalar_factor: f64,
    /// `dv*/ds_k`, indexed like the interior.
    pub gradient: DVector<f64>,
}

/// `W_ii v* + W_ib psi - phi`.
pub fn residual_drive(problem: &DirichletProblem, v_star: &DVector<f64>) -> DVector<f64> {
    problem.w_ii() * v_star + problem.w_ib() * problem.psi() - problem.phi()
}

pub fn steady_state_gradient(problem: &DirichletProblem, node: usize) -> Result<SensitivityReport> {
    let k = problem.interior_position(node)?;
    let resolvent = problem.resolvent()?;
    let v_star = resolvent.solve(&problem.source_term())?;
    let drive = residual_drive(problem, &v_star);
    gradient_with(&resolvent, node, k, drive[k])
}

/// Gradients for every interior node, sharing one factorisation.
pub fn all_gradients(problem: &DirichletProblem) -> Result<Vec<SensitivityReport>> {
    let resolvent = problem.resolvent()?;
    let v_star = resolvent.solve(&problem.source_term())?;
    let drive = residual_drive(problem, &v_star);
    problem
        .interior()
        .iter()
        .enumerate()
        .map(|(k, &node)| gradient_with(&resolvent, node, k, drive[k]))
        .collect()
}

fn gradient_with(resolvent: &Resolvent, node: usize, k: usize, scalar_factor: f64) -> Result<SensitivityReport> {
    let column = resolvent.column(k)?;
    Ok(SensitivityReport { node, scalar_factor, gradient: column * scalar_factor })
}

/// `G_S E_k r` with the full Green matrix and `E_k = e_k e_k^T`.
pub fn gradient_matrix_form(problem: &DirichletProblem, node: usize) -> Result<DVector<f64>> {
    let k = problem.interior_position(node)?;
    let resolvent = problem.resolvent()?;
    let g = resolvent.matrix()?;
    let v_star = resolvent.solve(&problem.source_term())?;
    let drive = residual_drive(problem, &v_star);
    let m = drive.len();
    let mut e_k = DMatrix::zeros(m, m);
    e_k[(k, k)] = 1.0;
    Ok(g * e_k * drive)
}

/// Finite-difference estimate of `dv*/ds_k` with step `h`. Central when
/// `s_k +- h` stays inside `(0, 1]`, second-order one-sided otherwise.
pub fn finite_difference_gradient(problem: &DirichletProblem, node: usize, h: f64) -> Result<DVector<f64>> {
    let k = problem.interior_position(node)?;
    let s = problem.s_interior()[k];
    let solve = |value: f64| -> Result<DVector<f64>> {
        Ok(problem.with_interior_susceptibility(node, value)?.steady_state()?.v_star)
    };
    if s + h <= 1.0 && s - h > 0.0 {
        Ok((solve(s + h)? - solve(s - h)?) / (2.0 * h))
    } else if s + h > 1.0 && s - 2.0 * h > 0.0 {
        Ok((solve(s)? * 3.0 - solve(s - h)? * 4.0 + solve(s - 2.0 * h)?) / (2.0 * h))
    } else {
        Ok((solve(s + h)? * 4.0 - solve(s)? * 3.0 - solve(s + 2.0 * h)?) / (2.0 * h))
    }
}

/// How `||A^-1||` entered a perturbation bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    Exact,
    /// Hager-Higham estimate; a lower bound on the true norm.
    Estimated,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationReport {
    pub norm: Norm,
    /// `||A^-1|| ||S|| ||dW_ii|| ||A~^-1|| ||b~|| + ||A~^-1|| ||S|| ||dW_ib|| ||psi||`.
    pub bound: f64,
    /// Variant with `||A^-1||` in the second term, which follows directly
    /// from `v* - v~* = A^-1 S dW_ii v~* + A^-1 S dW_ib psi`.
    pub first_order_bound: f64,
    pub actual: f64,
    pub method: NormMethod,
}

/// Compares two problems that differ only in their `W` blocks.
pub fn perturbation_bound(
    problem: &DirichletProblem,
    perturbed: &DirichletProblem,
    norm: Norm,
) -> Result<PerturbationReport> {
    let same = problem.interior() == perturbed.interior()
        && problem.boundary() == perturbed.boundary()
        && problem.s_interior() == perturbed.s_interior()
        && problem.psi() == perturbed.psi()
        && problem.phi() == perturbed.phi();
    if !same {
        return Err(Error::PartitionMismatch);
    }
    let v = problem.steady_state()?.v_star;
    let v_tilde = perturbed.steady_state()?.v_star;
    let actual = norm.vector(&(&v - &v_tilde));

    let m = problem.interior().len();
    let identity = DMatrix::<f64>::identity(m, m);
    let a = &identity - problem.iteration_matrix();
    let a_tilde = &identity - perturbed.iteration_matrix();
    let (a_inv, method) = inverse_norm(a, norm)?;
    let (a_tilde_inv, _) = inverse_norm(a_tilde, norm)?;

    let s_norm = problem.s_interior().amax();
    let d_ii = norm.matrix(&(problem.w_ii() - perturbed.w_ii()));
    let d_ib = norm.matrix(&(problem.w_ib() - perturbed.w_ib()));
    let b_tilde = norm.vector(&perturbed.source_term());
    let psi = norm.vector(problem.psi());

    let interior_term = a_inv * s_norm * d_ii * a_tilde_inv * b_tilde;
    let bound = interior_term + a_tilde_inv * s_norm * d_ib * psi;
    let first_order_bound = interior_term + a_inv * s_norm * d_ib * psi;
    Ok(PerturbationReport { norm, bound, first_order_bound, actual, method })
}

/// `||A^-1||` in the requested norm.
pub fn inverse_norm(a: DMatrix<f64>, norm: Norm) -> Result<(f64, NormMethod)> {
    let m = a.nrows();
    if m <= EXACT_INVERSE_LIMIT {
        let inv = Factorization::new(a).inverse()?;
        return Ok((norm.matrix(&inv), NormMethod::Exact));
    }
    let f = Factorization::new(a.clone());
    let ft = Factorization::new(a.transpose());
    let one = || estimate_inverse_one_norm(|b| f.solve(b), |b| ft.solve(b), m);
    let inf = || estimate_inverse_one_norm(|b| ft.solve(b), |b| f.solve(b), m);
    let value = match norm {
        Norm::One => one()?,
        Norm::Inf => inf()?,
        // ||X||_2 <= sqrt(||X||_1 ||X||_inf)
        Norm::Two => (one()? * inf()?).sqrt(),
    };
    Ok((value, NormMethod::Estimated))
}
