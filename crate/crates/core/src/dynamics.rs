//! Friedkin-Johnsen dynamics restricted to the susceptible interior.
//!
//! Nodes with `s_i = 0` form the boundary and keep their opinion `psi`
//! forever; every other node is interior and follows
//!
//! ```text
//! v_{t+1} = S W_ii v_t + S W_ib psi + (I - S) phi
//! ```
//!
//! The steady state is `(I - S W_ii)^-1 (S W_ib psi + (I - S) phi)` whenever
//! the spectral radius of `S W_ii` is below one.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{strongly_connected_components, InfluenceSystem};
use crate::linalg::{self, max_abs_row_sum, Factorization};

/// Spectral radii at or above `1 - RHO_MARGIN` are treated as not well posed.
pub const RHO_MARGIN: f64 = 1e-12;

/// Matrices up to this order get their spectral radius from the dense solver.
pub const DENSE_EIGEN_LIMIT: usize = 64;

pub const POWER_ITERATION_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SusceptibilityProfile {
    s: Vec<f64>,
}

impl SusceptibilityProfile {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        for (node, &value) in s.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::SusceptibilityOutOfRange { node, value });
            }
        }
        Ok(SusceptibilityProfile { s })
    }

    pub fn homogeneous(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn get(&self, node: usize) -> f64 {
        self.s[node]
    }

    /// Copy of the profile with `s[node]` replaced.
    pub fn with_value(&self, node: usize, value: f64) -> Result<Self> {
        if node >= self.n() {
            return Err(Error::NodeOutOfRange { node, n: self.n() });
        }
        let mut s = self.s.clone();
        s[node] = value;
        Self::new(s)
    }

    /// `s[i]`: the profile with node `i` made stubborn.
    pub fn source_indexed(&self, source: usize) -> Self {
        let mut s = self.s.clone();
        s[source] = 0.0;
        SusceptibilityProfile { s }
    }
}

/// Interior and boundary node lists, both ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

pub fn partition(profile: &SusceptibilityProfile) -> Result<Partition> {
    let (interior, boundary): (Vec<usize>, Vec<usize>) =
        (0..profile.n()).partition(|&i| profile.get(i) > 0.0);
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    Ok(Partition { interior, boundary })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Interior(usize),
    Boundary(usize),
}

/// Block form of one Friedkin-Johnsen boundary-value problem.
#[derive(Clone, Debug)]
pub struct DirichletProblem {
    profile: SusceptibilityProfile,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    slots: Vec<Slot>,
    s_interior: DVector<f64>,
    w_ii: DMatrix<f64>,
    w_ib: DMatrix<f64>,
    psi: DVector<f64>,
    phi: DVector<f64>,
}

impl DirichletProblem {
    /// `psi` is indexed like the boundary list, `phi` like the interior list.
    pub fn new(
        system: &InfluenceSystem,
        profile: SusceptibilityProfile,
        psi: DVector<f64>,
        phi: DVector<f64>,
    ) -> Result<Self> {
        if profile.n() != system.n() {
            return Err(Error::DimensionMismatch { expected: system.n(), actual: profile.n() });
        }
        let Partition { interior, boundary } = partition(&profile)?;
        if psi.len() != boundary.len() {
            return Err(Error::DimensionMismatch { expected: boundary.len(), actual: psi.len() });
        }
        if phi.len() != interior.len() {
            return Err(Error::DimensionMismatch { expected: interior.len(), actual: phi.len() });
        }
        let w = system.weights();
        let w_ii = w.select_rows(&interior).select_columns(&interior);
        let w_ib = w.select_rows(&interior).select_columns(&boundary);
        let s_interior = DVector::from_iterator(interior.len(), interior.iter().map(|&i| profile.get(i)));
        let mut slots = vec![Slot::Boundary(0); system.n()];
        for (k, &i) in interior.iter().enumerate() {
            slots[i] = Slot::Interior(k);
        }
        for (k, &i) in boundary.iter().enumerate() {
            slots[i] = Slot::Boundary(k);
        }
        Ok(DirichletProblem { profile, interior, boundary, slots, s_interior, w_ii, w_ib, psi, phi })
    }

    /// Builds the problem from sparse node maps; missing entries default to 0.
    pub fn from_node_values(
        system: &InfluenceSystem,
        profile: SusceptibilityProfile,
        psi: &BTreeMap<usize, f64>,
        phi: &BTreeMap<usize, f64>,
    ) -> Result<Self> {
        let Partition { interior, boundary } = partition(&profile)?;
        for &node in psi.keys().chain(phi.keys()) {
            system.check_node(node)?;
        }
        for &node in psi.keys() {
            if profile.get(node) > 0.0 {
                return Err(Error::NotBoundary { node });
            }
        }
        for &node in phi.keys() {
            if profile.get(node) == 0.0 {
                return Err(Error::NotInterior { node });
            }
        }
        let psi = DVector::from_iterator(boundary.len(), boundary.iter().map(|i| psi.get(i).copied().unwrap_or(0.0)));
        let phi = DVector::from_iterator(interior.len(), interior.iter().map(|i| phi.get(i).copied().unwrap_or(0.0)));
        Self::new(system, profile, psi, phi)
    }

    /// Same partition, susceptibilities and data with replaced `W` blocks.
    /// The blocks need not come from a row-stochastic matrix.
    pub fn with_blocks(&self, w_ii: DMatrix<f64>, w_ib: DMatrix<f64>) -> Result<Self> {
        let m = self.interior.len();
        if w_ii.shape() != (m, m) {
            return Err(Error::DimensionMismatch { expected: m, actual: w_ii.nrows() });
        }
        if w_ib.shape() != (m, self.boundary.len()) {
            return Err(Error::DimensionMismatch { expected: self.boundary.len(), actual: w_ib.ncols() });
        }
        Ok(DirichletProblem { w_ii, w_ib, ..self.clone() })
    }

    /// Same problem with the susceptibility of interior node `node` replaced by
    /// a value in `(0, 1]`, so the partition is unchanged.
    pub fn with_interior_susceptibility(&self, node: usize, value: f64) -> Result<Self> {
        let k = self.interior_position(node)?;
        if !(value > 0.0 && value <= 1.0) {
            return Err(Error::SusceptibilityOutOfRange { node, value });
        }
        let mut out = self.clone();
        out.s_interior[k] = value;
        out.profile = self.profile.with_value(node, value)?;
        Ok(out)
    }

    pub fn with_psi(&self, psi: DVector<f64>) -> Result<Self> {
        if psi.len() != self.boundary.len() {
            return Err(Error::DimensionMismatch { expected: self.boundary.len(), actual: psi.len() });
        }
        Ok(DirichletProblem { psi, ..self.clone() })
    }

    pub fn with_phi(&self, phi: DVector<f64>) -> Result<Self> {
        if phi.len() != self.interior.len() {
            return Err(Error::DimensionMismatch { expected: self.interior.len(), actual: phi.len() });
        }
        Ok(DirichletProblem { phi, ..self.clone() })
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn profile(&self) -> &SusceptibilityProfile {
        &self.profile
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn slot(&self, node: usize) -> Slot {
        self.slots[node]
    }

    pub fn interior_position(&self, node: usize) -> Result<usize> {
        match self.slots.get(node) {
            Some(Slot::Interior(k)) => Ok(*k),
            Some(Slot::Boundary(_)) => Err(Error::NotInterior { node }),
            None => Err(Error::NodeOutOfRange { node, n: self.n() }),
        }
    }

    pub fn s_interior(&self) -> &DVector<f64> {
        &self.s_interior
    }

    pub fn w_ii(&self) -> &DMatrix<f64> {
        &self.w_ii
    }

    pub fn w_ib(&self) -> &DMatrix<f64> {
        &self.w_ib
    }

    pub fn psi(&self) -> &DVector<f64> {
        &self.psi
    }

    pub fn phi(&self) -> &DVector<f64> {
        &self.phi
    }

    /// `A = S W_ii`.
    pub fn iteration_matrix(&self) -> DMatrix<f64> {
        let mut a = self.w_ii.clone();
        for (k, mut row) in a.row_iter_mut().enumerate() {
            row *= self.s_interior[k];
        }
        a
    }

    /// `S W_ib psi`.
    pub fn boundary_drive(&self) -> DVector<f64> {
        (&self.w_ib * &self.psi).component_mul(&self.s_interior)
    }

    /// `b = S W_ib psi + (I - S) phi`.
    pub fn source_term(&self) -> DVector<f64> {
        let stubborn = self.s_interior.map(|s| 1.0 - s).component_mul(&self.phi);
        self.boundary_drive() + stubborn
    }

    /// One interior update.
    pub fn step(&self, v_interior: &DVector<f64>) -> Result<DVector<f64>> {
        if v_interior.len() != self.interior.len() {
            return Err(Error::DimensionMismatch { expected: self.interior.len(), actual: v_interior.len() });
        }
        Ok(self.iteration_matrix() * v_interior + self.source_term())
    }

    /// Full-length state from an interior vector and the boundary data.
    pub fn assemble(&self, v_interior: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n(),
            self.slots.iter().map(|slot| match *slot {
                Slot::Interior(k) => v_interior[k],
                Slot::Boundary(k) => self.psi[k],
            }),
        )
    }

    /// Spectral radius of `S W_ii`; 0 for an empty interior.
    pub fn spectral_radius(&self) -> f64 {
        linalg::perron_root(&self.iteration_matrix(), 1e-12, POWER_ITERATION_CAP, DENSE_EIGEN_LIMIT).rho
    }

    fn interior_support(&self) -> Vec<Vec<usize>> {
        let m = self.interior.len();
        (0..m).map(|i| (0..m).filter(|&j| self.w_ii[(i, j)] > 0.0).collect()).collect()
    }

    /// True iff the interior support subgraph induced by the nodes with
    /// `s_i = 1` has no directed cycle (self-loops count as cycles).
    pub fn check_cycle_damping(&self) -> bool {
        self.undamped_cycle().is_none()
    }

    /// Nodes of a cycle made entirely of `s = 1` interior nodes, if any.
    pub fn undamped_cycle(&self) -> Option<Vec<usize>> {
        let support = self.interior_support();
        let undamped: Vec<bool> = self.s_interior.iter().map(|&s| s == 1.0).collect();
        let induced: Vec<Vec<usize>> = support
            .iter()
            .enumerate()
            .map(|(i, succ)| {
                if undamped[i] {
                    succ.iter().copied().filter(|&j| undamped[j]).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        strongly_connected_components(&induced)
            .into_iter()
            .find(|c| c.len() > 1 || induced[c[0]].contains(&c[0]))
            .map(|c| c.into_iter().map(|k| self.interior[k]).collect())
    }

    /// Interior nodes without a support path to the boundary.
    pub fn unreachable_from_boundary(&self) -> Vec<usize> {
        let exits: Vec<bool> = (0..self.interior.len())
            .map(|k| self.w_ib.row(k).iter().any(|&w| w > 0.0))
            .collect();
        let reach = self.reaches(&exits);
        (0..self.interior.len()).filter(|&k| !reach[k]).map(|k| self.interior[k]).collect()
    }

    /// A closed class of undamped interior nodes: no node in it reaches the
    /// boundary or a node with `s < 1`. Exists iff `rho(S W_ii) = 1`.
    pub fn closed_undamped_class(&self) -> Option<Vec<usize>> {
        let m = self.interior.len();
        let exits: Vec<bool> = (0..m)
            .map(|k| self.s_interior[k] < 1.0 || self.w_ib.row(k).iter().any(|&w| w > 0.0))
            .collect();
        let reach = self.reaches(&exits);
        if reach.iter().all(|&r| r) {
            return None;
        }
        let support = self.interior_support();
        let induced: Vec<Vec<usize>> = (0..m)
            .map(|i| if reach[i] { Vec::new() } else { support[i].iter().copied().filter(|&j| !reach[j]).collect() })
            .collect();
        // Tarjan emits sink components first.
        strongly_connected_components(&induced)
            .into_iter()
            .find(|c| !reach[c[0]])
            .map(|c| c.into_iter().map(|k| self.interior[k]).collect())
    }

    /// Interior nodes that reach any of the marked interior nodes.
    fn reaches(&self, marked: &[bool]) -> Vec<bool> {
        let m = self.interior.len();
        let mut preds = vec![Vec::new(); m];
        for i in 0..m {
            for j in 0..m {
                if self.w_ii[(i, j)] > 0.0 {
                    preds[j].push(i);
                }
            }
        }
        let mut seen = marked.to_vec();
        let mut stack: Vec<usize> = (0..m).filter(|&k| marked[k]).collect();
        while let Some(v) = stack.pop() {
            for &u in &preds[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    /// Combinatorial and spectral well-posedness diagnosis.
    pub fn well_posedness(&self) -> WellPosedness {
        let unreachable = self.unreachable_from_boundary();
        let undamped_cycle = self.undamped_cycle();
        let closed_undamped_class = self.closed_undamped_class();
        let rho = self.spectral_radius();
        WellPosedness {
            boundary_reachable: unreachable.is_empty(),
            unreachable,
            cycle_damped: undamped_cycle.is_none(),
            undamped_cycle,
            closed_undamped_class,
            rho,
        }
    }

    /// Gate used before every solve. The combinatorial class test is exact;
    /// the row-sum bound avoids an eigensolve in the common case.
    fn ensure_well_posed(&self) -> Result<()> {
        if let Some(class) = self.closed_undamped_class() {
            return Err(Error::NotWellPosed { rho: self.spectral_radius(), witness: Some(class) });
        }
        let a = self.iteration_matrix();
        if max_abs_row_sum(&a) < 1.0 - RHO_MARGIN {
            return Ok(());
        }
        let rho = self.spectral_radius();
        if rho >= 1.0 - RHO_MARGIN {
            return Err(Error::NotWellPosed { rho, witness: None });
        }
        Ok(())
    }

    /// Factorisation of `I - S W_ii` after the well-posedness gate.
    pub fn resolvent(&self) -> Result<Resolvent> {
        self.ensure_well_posed()?;
        let m = self.interior.len();
        let lhs = DMatrix::<f64>::identity(m, m) - self.iteration_matrix();
        Ok(Resolvent { factor: Factorization::new(lhs) })
    }

    pub fn steady_state(&self) -> Result<SteadyState> {
        let resolvent = self.resolvent()?;
        let b = self.source_term();
        let v_star = resolvent.solve(&b)?;
        let lhs = DMatrix::<f64>::identity(v_star.len(), v_star.len()) - self.iteration_matrix();
        let residual = linalg::inf_norm(&(lhs * &v_star - &b));
        let rho = self.spectral_radius();
        Ok(SteadyState { full: self.assemble(&v_star), v_star, rho, residual })
    }

    /// Closed-form transient `A^t phi + sum_{k<t} A^k b`.
    pub fn transient(&self, t: usize) -> DVector<f64> {
        let a = self.iteration_matrix();
        let b = self.source_term();
        let mut homogeneous = self.phi.clone();
        let mut forced = DVector::zeros(b.len());
        let mut term = b;
        for _ in 0..t {
            forced += &term;
            term = &a * term;
            homogeneous = &a * homogeneous;
        }
        homogeneous + forced
    }

    /// Iterates the full Friedkin-Johnsen update `horizon` times.
    pub fn trajectory(&self, horizon: usize) -> Trajectory {
        let a = self.iteration_matrix();
        let b = self.source_term();
        let mut v = self.phi.clone();
        let mut states = Vec::with_capacity(horizon + 1);
        states.push(self.assemble(&v));
        for _ in 0..horizon {
            v = &a * &v + &b;
            states.push(self.assemble(&v));
        }
        Trajectory { states }
    }

    /// Both sides of `v_t - v* = A^t (phi - v*)`; the right side uses an
    /// explicit matrix power.
    pub fn error_recursion_check(&self, t: usize) -> Result<(DVector<f64>, DVector<f64>)> {
        let v_star = self.steady_state()?.v_star;
        let lhs = self.transient(t) - &v_star;
        let power = self.iteration_matrix().pow(t as u32);
        let rhs = power * (&self.phi - &v_star);
        Ok((lhs, rhs))
    }

    /// `C_delta (rho + delta)^t ||phi - v*||_inf` for `t = 0..=t_max`.
    pub fn rate_bound(&self, delta: f64, t_max: usize) -> Result<RateBound> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let v_star = self.steady_state()?.v_star;
        let rho = self.spectral_radius();
        let a = self.iteration_matrix();
        let base = rho + delta;
        let log_base = base.ln();
        let powers = linalg::scaled_powers(&a, t_max);
        let mut c_delta = 1.0f64;
        let mut t0 = None;
        for (t, (log_scale, p)) in powers.iter().enumerate().skip(1) {
            let norm = max_abs_row_sum(p);
            let log_norm = if norm > 0.0 { log_scale + norm.ln() } else { f64::NEG_INFINITY };
            c_delta = c_delta.max((log_norm - t as f64 * log_base).exp());
            if log_norm <= t as f64 * log_base {
                t0 = Some(t);
                break;
            }
        }
        let t0 = t0.ok_or(Error::CapReached { cap: t_max })?;
        let initial_error = linalg::inf_norm(&(&self.phi - &v_star));
        let curve = (0..=t_max).map(|t| c_delta * base.powi(t as i32) * initial_error).collect();
        Ok(RateBound { c_delta, t0, rho, delta, curve })
    }

    /// Materialised `G_S = (I - S W_ii)^-1`.
    pub fn green_operator(&self, method: GreenMethod) -> Result<DMatrix<f64>> {
        match method {
            GreenMethod::Factorization => self.resolvent()?.matrix(),
            GreenMethod::Neumann { k_max, tol } => {
                self.ensure_well_posed()?;
                let a = self.iteration_matrix();
                let m = a.nrows();
                let mut sum = DMatrix::<f64>::identity(m, m);
                let mut term = DMatrix::<f64>::identity(m, m);
                let mut last = f64::INFINITY;
                for _ in 1..k_max {
                    term = &a * term;
                    sum += &term;
                    last = max_abs_row_sum(&term);
                    if last <= tol {
                        return Ok(sum);
                    }
                }
                Err(Error::NeumannNotConverged { k_max, last })
            }
        }
    }
}

/// How [`DirichletProblem::green_operator`] builds `G_S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GreenMethod {
    Factorization,
    Neumann { k_max: usize, tol: f64 },
}

/// Factorised `I - S W_ii`, reusable across right-hand sides.
pub struct Resolvent {
    factor: Factorization,
}

impl Resolvent {
    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.factor.solve(b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.factor.solve_matrix(b)
    }

    /// `G_S e_k`.
    pub fn column(&self, k: usize) -> Result<DVector<f64>> {
        self.factor.unit_column(k)
    }

    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        self.factor.inverse()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WellPosedness {
    pub boundary_reachable: bool,
    pub unreachable: Vec<usize>,
    pub cycle_damped: bool,
    pub undamped_cycle: Option<Vec<usize>>,
    pub closed_undamped_class: Option<Vec<usize>>,
    pub rho: f64,
}

impl WellPosedness {
    pub fn is_well_posed(&self) -> bool {
        self.closed_undamped_class.is_none() && self.rho < 1.0 - RHO_MARGIN
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SteadyState {
    pub v_star: DVector<f64>,
    /// Interior steady state merged with the boundary values.
    pub full: DVector<f64>,
    pub rho: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RateBound {
    pub c_delta: f64,
    pub t0: usize,
    pub rho: f64,
    pub delta: f64,
    pub curve: Vec<f64>,
}

/// Reference problem used across the docs and tests: path `0 - 1 - 2` with
/// random-walk weights, node 2 stubborn at opinion 1, `s = 0.5` elsewhere.
pub fn path_example() -> DirichletProblem {
    let system = InfluenceSystem::random_walk_from_edges(3, &[(0, 1), (1, 2)]).expect("path graph");
    let profile = SusceptibilityProfile::new(vec![0.5, 0.5, 0.0]).expect("profile");
    DirichletProblem::new(&system, profile, DVector::from_element(1, 1.0), DVector::zeros(2)).expect("problem")
}
