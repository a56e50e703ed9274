//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use fj_core::dynamics::{DirichletProblem, SusceptibilityProfile};
use fj_core::graph::{InfluenceSystem, StepMatrix, Steps};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random row-stochastic digraph: each arc present with probability `p`,
/// weights uniform in `[0.1, 1]`, rows without arcs get one random arc.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize, p: f64, self_loops: bool) -> InfluenceSystem {
    let mut raw = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if (i != j || self_loops) && rng.random_bool(p) {
                raw[(i, j)] = rng.random_range(0.1..=1.0);
            }
        }
        if raw.row(i).iter().all(|&w| w == 0.0) {
            let mut j = rng.random_range(0..n);
            if n > 1 && !self_loops {
                while j == i {
                    j = rng.random_range(0..n);
                }
            }
            raw[(i, j)] = rng.random_range(0.1..=1.0);
        }
    }
    InfluenceSystem::row_normalized(&raw).expect("valid digraph")
}

/// Random connected undirected graph: a random spanning tree plus extra
/// edges with probability `p`.
pub fn random_connected_edges(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        edges.push((parent, order[k]));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, p: f64) -> InfluenceSystem {
    let edges = random_connected_edges(rng, n, p);
    InfluenceSystem::random_walk_from_edges(n, &edges).expect("connected graph")
}

/// `s_i ~ U[0, 1]` with `zeros` distinct entries forced to 0.
pub fn random_profile(rng: &mut ChaCha8Rng, n: usize, zeros: usize) -> SusceptibilityProfile {
    let mut s: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    for &i in idx.iter().take(zeros.max(1)) {
        s[i] = 0.0;
    }
    SusceptibilityProfile::new(s).expect("profile in range")
}

/// Random problem with boundary opinions and initial opinions in `[lo, hi]`.
pub fn random_problem_on(
    rng: &mut ChaCha8Rng,
    system: &InfluenceSystem,
    profile: SusceptibilityProfile,
    lo: f64,
    hi: f64,
) -> DirichletProblem {
    let n_b = profile.values().iter().filter(|&&s| s == 0.0).count();
    let n_i = profile.n() - n_b;
    let psi = DVector::from_fn(n_b, |_, _| rng.random_range(lo..=hi));
    let phi = DVector::from_fn(n_i, |_, _| rng.random_range(lo..=hi));
    DirichletProblem::new(system, profile, psi, phi).expect("problem")
}

/// Random well-posed problem on a random digraph with `n` nodes.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> (InfluenceSystem, DirichletProblem) {
    loop {
        let p = rng.random_range(0.1..0.6);
        let system = random_digraph(rng, n, p, true);
        let zeros = rng.random_range(1..=(n / 3).max(1));
        let profile = random_profile(rng, n, zeros);
        let problem = random_problem_on(rng, &system, profile, -1.0, 1.0);
        if problem.well_posedness().is_well_posed() {
            return (system, problem);
        }
    }
}

/// Initial full opinion vector: `psi` on the boundary, `phi` inside.
pub fn initial_full(problem: &DirichletProblem) -> DVector<f64> {
    let mut v = DVector::zeros(problem.n());
    for (k, &i) in problem.boundary().iter().enumerate() {
        v[i] = problem.psi()[k];
    }
    for (k, &i) in problem.interior().iter().enumerate() {
        v[i] = problem.phi()[k];
    }
    v
}

/// One plain full-vector update `v <- S W v + (I - S) v0`.
pub fn step_full(system: &InfluenceSystem, problem: &DirichletProblem, v: &DVector<f64>) -> DVector<f64> {
    let s = DVector::from_row_slice(problem.profile().values());
    let anchor = initial_full(problem).component_mul(&s.map(|x| 1.0 - x));
    (system.weights() * v).component_mul(&s) + anchor
}

/// [`step_full`] iterated `steps` times from the initial opinions.
pub fn iterate_full(system: &InfluenceSystem, problem: &DirichletProblem, steps: usize) -> DVector<f64> {
    let mut v = initial_full(problem);
    for _ in 0..steps {
        v = step_full(system, problem, &v);
    }
    v
}

/// Interior entries of a full vector.
pub fn interior_part(problem: &DirichletProblem, full: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(problem.interior().len(), problem.interior().iter().map(|&i| full[i]))
}

/// Floyd-Warshall hop distances on the support, self-loops ignored.
pub fn floyd_warshall(system: &InfluenceSystem) -> StepMatrix {
    let n = system.n();
    let inf = u64::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if i != j && system.weight(i, j) > 0.0 {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    StepMatrix::from_rows(
        d.into_iter()
            .map(|row| row.into_iter().map(|x| if x >= inf { Steps::INF } else { Steps::finite(x as u32) }).collect())
            .collect(),
    )
}

/// Largest product of weights over simple paths `i -> j` (1 for `i == j`,
/// 0 when no path exists), by exhaustive search.
pub fn max_path_products(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let mut best = DMatrix::zeros(n, n);
    for src in 0..n {
        let mut visited = vec![false; n];
        visited[src] = true;
        explore(w, src, 1.0, &mut visited, &mut best, src);
    }
    best
}

fn explore(w: &DMatrix<f64>, at: usize, product: f64, visited: &mut [bool], best: &mut DMatrix<f64>, src: usize) {
    if product > best[(src, at)] {
        best[(src, at)] = product;
    }
    for next in 0..w.nrows() {
        if !visited[next] && w[(at, next)] > 0.0 {
            visited[next] = true;
            explore(w, next, product * w[(at, next)], visited, best, src);
            visited[next] = false;
        }
    }
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

/// Perturbs every support entry of both blocks by up to `scale`, keeping it nonnegative.
pub fn perturb(r: &mut ChaCha8Rng, p: &DirichletProblem, scale: f64) -> DirichletProblem {
    let jitter = |m: &DMatrix<f64>, r: &mut ChaCha8Rng| {
        m.map(|w| if w > 0.0 { (w + scale * r.random_range(-1.0..=1.0)).max(0.0) } else { w })
    };
    let w_ii = jitter(p.w_ii(), r);
    let w_ib = jitter(p.w_ib(), r);
    p.with_blocks(w_ii, w_ib).unwrap()
}
