mod common;

use common::{floyd_warshall, iterate_full, random_digraph, random_problem, rng, step_full};
use fj_core::dynamics::{DirichletProblem, SusceptibilityProfile};
use fj_core::graph::Steps;
use fj_core::influence::{
    influence_matrix_of, scan_all_vertices, scan_all_vertices_sequential, source_problem, volumes, ScanOptions,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

fn baseline(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> SusceptibilityProfile {
    SusceptibilityProfile::new((0..n).map(|_| r.random_range(0.05..0.95)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn influence_matrix_bounds(seed in any::<u64>(), n in 2usize..=30) {
        let (_, p) = random_problem(&mut rng(seed), n);
        let u = influence_matrix_of(&p).unwrap();
        prop_assert!(u.u.iter().all(|&x| (-1e-15..=1.0 + 1e-12).contains(&x)));
        let reachable = p.unreachable_from_boundary().is_empty();
        for (k, &row) in u.row_sums().iter().enumerate() {
            prop_assert!(row <= 1.0 + 1e-12);
            if reachable {
                prop_assert!(row > 0.0, "row {k}");
            }
        }
    }

    #[test]
    fn influence_columns_are_unit_responses(seed in any::<u64>(), n in 2usize..=20) {
        let (system, p) = random_problem(&mut rng(seed), n);
        let u = influence_matrix_of(&p).unwrap();
        for k in 0..p.boundary().len() {
            let mut e = DVector::zeros(p.boundary().len());
            e[k] = 1.0;
            let unit = DirichletProblem::new(&system, p.profile().clone(), e, DVector::zeros(p.interior().len())).unwrap();
            let v = unit.steady_state().unwrap().v_star;
            prop_assert!((u.u.column(k) - v).amax() <= 1e-12);
        }
    }

    #[test]
    fn influence_grows_with_susceptibility(seed in any::<u64>(), n in 2usize..=20) {
        let mut r = rng(seed);
        let (system, p) = random_problem(&mut r, n);
        let raised: Vec<f64> = p.profile().values().iter()
            .map(|&s| if s == 0.0 { 0.0 } else { s + (1.0 - s) * 0.99 * r.random_range(0.0..=1.0) })
            .collect();
        let q = DirichletProblem::new(&system, SusceptibilityProfile::new(raised).unwrap(), p.psi().clone(), p.phi().clone()).unwrap();
        prop_assume!(q.well_posedness().is_well_posed());
        let (u, v) = (influence_matrix_of(&p).unwrap().u, influence_matrix_of(&q).unwrap().u);
        prop_assert!(u.iter().zip(v.iter()).all(|(a, b)| *a <= b + 1e-12));
    }

    /// Kick-off times, germinated opinions and stabilization times against
    /// a plain simulation of the full update.
    #[test]
    fn scan_rows_match_simulation(seed in any::<u64>(), n in 2usize..=10, p in 0.1f64..0.6) {
        let mut r = rng(seed);
        let system = random_digraph(&mut r, n, p, true);
        let base = baseline(&mut r, n);
        let options = ScanOptions { epsilon: 1e-6, t_cap: 100_000 };
        let scan = scan_all_vertices(&system, &base, options).unwrap();
        let d = floyd_warshall(&system);
        for src in 0..n {
            let problem = source_problem(&system, &base, src).unwrap();
            let steady = problem.steady_state().unwrap().full;
            let mut first_nonzero = vec![Steps::INF; n];
            let mut germ = vec![0.0; n];
            let mut entered = vec![Steps::INF; n];
            let horizon = (0..n).filter_map(|i| scan.s_eps.get(src, i).get()).max().unwrap_or(0).max(n as u32) as usize;
            let mut v = iterate_full(&system, &problem, 0);
            for t in 0..=horizon {
                if t > 0 {
                    v = step_full(&system, &problem, &v);
                }
                for i in 0..n {
                    if first_nonzero[i] == Steps::INF && v[i] != 0.0 {
                        first_nonzero[i] = Steps::finite(t as u32);
                        germ[i] = v[i];
                    }
                    if entered[i] == Steps::INF && (v[i] - steady[i]).abs() < options.epsilon {
                        entered[i] = Steps::finite(t as u32);
                    }
                }
            }
            for i in 0..n {
                prop_assert_eq!(scan.t.get(src, i), first_nonzero[i], "T[{}][{}]", src, i);
                prop_assert_eq!(scan.t.get(src, i), d.get(i, src));
                prop_assert!((scan.e[(src, i)] - germ[i]).abs() <= 1e-12 * germ[i].abs().max(1e-300));
                prop_assert_eq!(scan.s_eps.get(src, i), entered[i], "S[{}][{}]", src, i);
                prop_assert!((scan.u_inf[(src, i)] - steady[i]).abs() <= 1e-12);
            }
        }
    }

    /// Nodes hear the source in order of their distance to it.
    #[test]
    fn kickoff_order_follows_distance(seed in any::<u64>(), n in 2usize..=15) {
        let mut r = rng(seed);
        let system = random_digraph(&mut r, n, 0.25, false);
        let scan = scan_all_vertices(&system, &baseline(&mut r, n), ScanOptions::default()).unwrap();
        let d = floyd_warshall(&system);
        for src in 0..n {
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(scan.t.get(src, i) <= scan.t.get(src, j), d.get(i, src) <= d.get(j, src));
                }
            }
        }
    }

    #[test]
    fn balance_identity(seed in any::<u64>(), n in 2usize..=25) {
        let mut r = rng(seed);
        let system = random_digraph(&mut r, n, 0.3, true);
        let scan = scan_all_vertices(&system, &baseline(&mut r, n), ScanOptions::default()).unwrap();
        let vol = volumes(&scan);
        let out: f64 = vol.out.iter().sum();
        let inward: f64 = vol.inward.iter().sum();
        prop_assert!((out - inward).abs() <= 1e-12);
        prop_assert!(vol.total >= 0.0 && vol.total <= (n * (n - 1)) as f64);
        for i in 0..n {
            prop_assert_eq!(scan.u_inf[(i, i)], 1.0);
        }
    }

    #[test]
    fn parallel_scan_is_deterministic(seed in any::<u64>(), n in 2usize..=25) {
        let mut r = rng(seed);
        let system = random_digraph(&mut r, n, 0.3, true);
        let base = baseline(&mut r, n);
        let a = scan_all_vertices(&system, &base, ScanOptions::default()).unwrap();
        let b = scan_all_vertices_sequential(&system, &base, ScanOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}
