//! Acceptance run: one PASS/FAIL line per criterion, with pinned tolerances.
//! Exits nonzero when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{
    interior_part, iterate_full, max_path_products, perturb, random_connected, random_digraph, random_problem, rng,
};
use fj_core::broadcasting::{BroadcastingGraph, ClosenessVariant, Measure};
use fj_core::datasets::karate;
use fj_core::dynamics::{DirichletProblem, GreenMethod, SusceptibilityProfile};
use fj_core::graph::directed_distances;
use fj_core::influence::{influence_matrix_of, scan_all_vertices, volumes, ScanMatrices, ScanOptions};
use fj_core::linalg::{dense_spectral_radius, Norm};
use fj_core::montecarlo::{run_campaign, CampaignConfig, CampaignResult};
use fj_core::report::{campaign_artifacts, HISTOGRAM_BINS};
use fj_core::sensitivity::{all_gradients, finite_difference_gradient, perturbation_bound, FD_STEP};
use fj_core::spectral::{dirichlet_spectrum, sharpened_rate, spectral_green};
use fj_core::stats::histogram;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const STEADY_TOL: f64 = 1e-9;
const STEADY_STEPS: usize = 10_000;
const STEADY_BUDGET: Duration = Duration::from_secs(30);
const RECURSION_TOL: f64 = 1e-12;
const RHO_THRESHOLD: f64 = 1.0 - 1e-9;
const FD_REL_TOL: f64 = 1e-5;
/// Relative errors are taken against `max(||g||_inf, FD_FLOOR)`.
const FD_FLOOR: f64 = 1e-3;
const CONSENSUS_TOL: f64 = 1e-12;
/// Slack on "actual <= bound" comparisons for rounding in both sides.
const BOUND_REL: f64 = 1e-10;
const BOUND_ABS: f64 = 1e-14;
const GREEN_TOL: f64 = 1e-8;
/// Rounding slack on both ends of `[0, 1]`; LU solves give entries like -4e-16.
const U_TOL: f64 = 1e-12;
const BALANCE_TOL: f64 = 1e-12;
const PRODUCT_REL_TOL: f64 = 1e-9;
const CAMPAIGN_BUDGET: Duration = Duration::from_secs(600);

struct Verdict {
    failed: Vec<usize>,
}

impl Verdict {
    fn record(&mut self, id: usize, name: &str, pass: bool, detail: String) {
        println!("criterion {id:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn info(text: String) {
    println!("   info: {text}");
}

/// Homogeneous problem with `k` random stubborn nodes at random opinions.
fn homogeneous_problem(r: &mut ChaCha8Rng, system: &fj_core::graph::InfluenceSystem, s: f64) -> DirichletProblem {
    let n = system.n();
    let k = r.random_range(1..n);
    let mut values = vec![s; n];
    for i in sample(r, n, k).into_iter() {
        values[i] = 0.0;
    }
    let psi = DVector::from_fn(k, |_, _| r.random_range(-1.0..=1.0));
    let phi = DVector::from_fn(n - k, |_, _| r.random_range(-1.0..=1.0));
    DirichletProblem::new(system, SusceptibilityProfile::new(values).unwrap(), psi, phi).unwrap()
}

fn steady_state_oracle(v: &mut Verdict) {
    let mut r = rng(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = r.random_range(2..=25);
        let (system, p) = random_problem(&mut r, n);
        let lu = p.steady_state().unwrap().v_star;
        let iterated = interior_part(&p, &iterate_full(&system, &p, STEADY_STEPS));
        worst = worst.max((lu - iterated).amax());
    }
    let elapsed = start.elapsed();
    v.record(
        1,
        "steady state vs iteration",
        worst <= STEADY_TOL && elapsed < STEADY_BUDGET,
        format!("max err {worst:.2e}, {:.2} s over 200 problems", elapsed.as_secs_f64()),
    );
}

fn error_recursion(v: &mut Verdict) {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(2..=25);
        let (_, p) = random_problem(&mut r, n);
        for t in 0..=50 {
            let (lhs, rhs) = p.error_recursion_check(t).unwrap();
            worst = worst.max((lhs - rhs).amax());
        }
    }
    v.record(2, "error recursion", worst <= RECURSION_TOL, format!("max dev {worst:.2e} over 50 instances, t <= 50"));
}

fn cycle_damping(v: &mut Verdict) {
    let mut r = rng(3);
    let levels = [0.0, 0.5, 1.0];
    let (mut cases, mut literal_bad, mut class_bad) = (0usize, 0usize, 0usize);
    let (mut reachable_cases, mut reachable_bad) = (0usize, 0usize);
    let mut example = None;
    while cases < 12_000 {
        let n = r.random_range(1..=7);
        let density = r.random_range(0.1..0.8);
        let system = random_digraph(&mut r, n, density, true);
        let s: Vec<f64> = (0..n).map(|_| levels[r.random_range(0..3)]).collect();
        let n_b = s.iter().filter(|&&x| x == 0.0).count();
        let Ok(p) =
            DirichletProblem::new(&system, SusceptibilityProfile::new(s.clone()).unwrap(), DVector::zeros(n_b), DVector::zeros(n - n_b))
        else {
            continue;
        };
        cases += 1;
        let contracting = dense_spectral_radius(&p.iteration_matrix()) < RHO_THRESHOLD;
        let reachable = p.unreachable_from_boundary().is_empty();
        let literal = p.check_cycle_damping() && reachable;
        if reachable {
            reachable_cases += 1;
            reachable_bad += usize::from(p.check_cycle_damping() != contracting);
        }
        if literal != contracting {
            literal_bad += 1;
            example.get_or_insert((s, literal, contracting));
        }
        if p.closed_undamped_class().is_none() != contracting {
            class_bad += 1;
        }
    }
    v.record(
        3,
        "cycle damping and reachability vs rho < 1",
        literal_bad == 0,
        format!("{literal_bad} disagreements in {cases} cases"),
    );
    if let Some((s, literal, contracting)) = example {
        info(format!("first disagreement: s = {s:?}, combinatorial {literal}, rho < 1 {contracting}"));
    }
    info(format!("cycle damping alone, boundary-reachable cases only: {reachable_bad} disagreements in {reachable_cases}"));
    info(format!("closed undamped class test vs rho < 1: {class_bad} disagreements in {cases} cases"));
}

fn sensitivity(v: &mut Verdict) {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(2..=12);
        let (_, p) = random_problem(&mut r, n);
        for report in all_gradients(&p).unwrap() {
            let fd = finite_difference_gradient(&p, report.node, FD_STEP).unwrap();
            let scale = report.gradient.amax().max(FD_FLOOR);
            worst = worst.max((fd - &report.gradient).amax() / scale);
        }
    }
    let mut consensus: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(2..=20);
        let (_, p) = random_problem(&mut r, n);
        let c = r.random_range(-1.0..=1.0);
        let p = p
            .with_psi(DVector::from_element(p.boundary().len(), c))
            .unwrap()
            .with_phi(DVector::from_element(p.interior().len(), c))
            .unwrap();
        for report in all_gradients(&p).unwrap() {
            consensus = consensus.max(report.gradient.amax());
        }
    }
    v.record(
        4,
        "sensitivity vs finite differences",
        worst <= FD_REL_TOL && consensus <= CONSENSUS_TOL,
        format!("max rel err {worst:.2e} at h = {FD_STEP:e}, consensus gradient max {consensus:.2e}"),
    );
}

fn perturbation(v: &mut Verdict) {
    let mut r = rng(5);
    let mut pairs = 0;
    let mut literal_bad = [0usize; 3];
    let mut derived_bad = 0usize;
    let mut worst_ratio: f64 = 0.0;
    while pairs < 1000 {
        let n = r.random_range(2..=15);
        let (_, p) = random_problem(&mut r, n);
        let scale = 10f64.powf(r.random_range(-4.0..-0.7));
        let q = perturb(&mut r, &p, scale);
        if !q.well_posedness().is_well_posed() {
            continue;
        }
        pairs += 1;
        for (k, norm) in Norm::ALL.into_iter().enumerate() {
            let rep = perturbation_bound(&p, &q, norm).unwrap();
            if rep.actual > rep.bound * (1.0 + BOUND_REL) + BOUND_ABS {
                literal_bad[k] += 1;
                worst_ratio = worst_ratio.max(rep.actual / rep.bound);
            }
            if rep.actual > rep.first_order_bound * (1.0 + BOUND_REL) + BOUND_ABS {
                derived_bad += 1;
            }
        }
    }
    let total: usize = literal_bad.iter().sum();
    v.record(
        5,
        "perturbation bound",
        total == 0,
        format!("violations inf/1/2 = {literal_bad:?} over {pairs} pairs"),
    );
    if total > 0 {
        info(format!("largest actual / bound among violations: {worst_ratio:.4}"));
    }
    info(format!("bound with ||A^-1|| in both terms: {derived_bad} violations"));
}

fn spectral(v: &mut Verdict) {
    let mut r = rng(6);
    let (mut green_worst, mut literal_bad, mut weighted_bad, mut conditioned_bad) = (0.0f64, 0usize, 0usize, 0usize);
    let mut instances_bad = 0usize;
    for k in 0..50 {
        let s = [0.3, 0.7, 0.95][k % 3];
        let n = r.random_range(3..=50);
        let density = r.random_range(0.0..0.3);
        let g = random_connected(&mut r, n, density);
        let p = homogeneous_problem(&mut r, &g, s);
        let spec = dirichlet_spectrum(&g, p.interior()).unwrap();
        let a = spectral_green(&spec, s).unwrap();
        let b = p.green_operator(GreenMethod::Factorization).unwrap();
        green_worst = green_worst.max((a - b).amax());

        let v_star = p.steady_state().unwrap().v_star;
        let e0 = p.phi() - &v_star;
        let mut x = p.phi().clone();
        let before = literal_bad;
        for t in 0..=100u32 {
            let rate = sharpened_rate(&spec, s, t).unwrap();
            let e = &x - &v_star;
            let slack = |b: f64| b * (1.0 + BOUND_REL) + BOUND_ABS;
            literal_bad += usize::from(e.norm() > slack(rate * e0.norm()));
            weighted_bad += usize::from(spec.weighted_norm(&e) > slack(rate * spec.weighted_norm(&e0)));
            conditioned_bad += usize::from(e.norm() > slack(spec.degree_condition() * rate * e0.norm()));
            x = p.step(&x).unwrap();
        }
        instances_bad += usize::from(literal_bad > before);
    }
    v.record(6, "spectral Green vs factorization", green_worst <= GREEN_TOL, format!("max diff {green_worst:.2e} on 50 graphs"));
    v.record(
        7,
        "sharpened 2-norm rate",
        literal_bad == 0,
        format!("{literal_bad} violating steps in {instances_bad} of 50 instances, t <= 100"),
    );
    info(format!("degree-weighted norm bound: {weighted_bad} violations"));
    info(format!("2-norm bound with factor sqrt(d_max / d_min): {conditioned_bad} violations"));
}

fn scanning_distances(v: &mut Verdict) -> Vec<ScanMatrices> {
    let mut r = rng(8);
    let mut all = Vec::with_capacity(100);
    let (mut literal_bad, mut transposed_bad) = (0usize, 0usize);
    for _ in 0..100 {
        let n = r.random_range(2..=30);
        let density = r.random_range(0.05..0.5);
        let system = random_digraph(&mut r, n, density, true);
        let base = SusceptibilityProfile::new((0..n).map(|_| r.random_range(0.05..0.95)).collect()).unwrap();
        let scan = scan_all_vertices(&system, &base, ScanOptions::default()).unwrap();
        let d = directed_distances(&system);
        literal_bad += usize::from(scan.t != d);
        transposed_bad += usize::from(scan.t != d.transpose());
        all.push(scan);
    }
    v.record(8, "kick-off times equal BFS distances", literal_bad == 0, format!("{literal_bad} of 100 digraphs differ"));
    info(format!("kick-off times vs transposed distances: {transposed_bad} of 100 differ"));
    all
}

fn influence_matrix(v: &mut Verdict) {
    let mut r = rng(9);
    let (mut pairs, mut range_bad, mut row_bad, mut order_bad) = (0usize, 0usize, 0usize, 0usize);
    let mut worst_out: f64 = 0.0;
    while pairs < 200 {
        let n = r.random_range(2..=25);
        let (system, p) = random_problem(&mut r, n);
        let raised: Vec<f64> = p
            .profile()
            .values()
            .iter()
            .map(|&s| if s == 0.0 { 0.0 } else { s + (1.0 - s) * r.random_range(0.0..=1.0) })
            .collect();
        let q = DirichletProblem::new(&system, SusceptibilityProfile::new(raised).unwrap(), p.psi().clone(), p.phi().clone())
            .unwrap();
        if !q.well_posedness().is_well_posed() {
            continue;
        }
        pairs += 1;
        for prob in [&p, &q] {
            let u = influence_matrix_of(prob).unwrap();
            for &x in u.u.iter().filter(|&&x| !(-U_TOL..=1.0 + U_TOL).contains(&x)) {
                range_bad += 1;
                worst_out = worst_out.max(if x < 0.0 { -x } else { x - 1.0 });
            }
            if prob.unreachable_from_boundary().is_empty() {
                row_bad += u.row_sums().iter().filter(|&&x| !(x > 0.0 && x <= 1.0 + U_TOL)).count();
            }
        }
        let (a, b) = (influence_matrix_of(&p).unwrap().u, influence_matrix_of(&q).unwrap().u);
        order_bad += a.iter().zip(b.iter()).filter(|(x, y)| **x > **y + U_TOL).count();
    }
    v.record(
        9,
        "influence matrix bounds and monotonicity",
        range_bad + row_bad + order_bad == 0,
        format!("range {range_bad}, row sums {row_bad}, monotonicity {order_bad} violations over {pairs} pairs"),
    );
    if range_bad > 0 {
        info(format!("largest distance outside [0, 1]: {worst_out:.2e}"));
    }
}

fn balance(v: &mut Verdict, all: &[ScanMatrices]) {
    let (mut worst, mut range_bad) = (0.0f64, 0usize);
    for scan in all {
        let vol = volumes(scan);
        let n = scan.n() as f64;
        worst = worst.max((vol.out.iter().sum::<f64>() - vol.inward.iter().sum::<f64>()).abs());
        range_bad += usize::from(!(vol.total >= 0.0 && vol.total <= n * (n - 1.0)));
    }
    v.record(
        10,
        "balance identity",
        worst <= BALANCE_TOL && range_bad == 0,
        format!("max imbalance {worst:.2e}, {range_bad} totals out of range, {} scans", all.len()),
    );
}

fn product_characterization(v: &mut Verdict) {
    let mut r = rng(12);
    let mut worst: f64 = 0.0;
    let graphs = 3000;
    for _ in 0..graphs {
        let n = r.random_range(1..=7);
        let density = r.random_range(0.1..0.9);
        let w = DMatrix::from_fn(n, n, |_, _| if r.random_bool(density) { r.random_range(0.001..=1.0) } else { 0.0 });
        let d = BroadcastingGraph::from_weights(w.clone()).unwrap().log_distances();
        let best = max_path_products(&w);
        for (x, y) in d.iter().zip(best.iter()) {
            let err = ((-x).exp() - y).abs();
            worst = worst.max(if *y > 0.0 { err / y } else { err });
        }
    }
    v.record(
        12,
        "log distances vs max path products",
        worst <= PRODUCT_REL_TOL,
        format!("max rel err {worst:.2e} over {graphs} graphs, n <= 7"),
    );
}

fn campaign_in_pool(config: &CampaignConfig, threads: usize) -> (CampaignResult, Duration) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let start = Instant::now();
    let result = pool.install(|| run_campaign(&karate(), config, false)).unwrap();
    (result, start.elapsed())
}

fn campaign_bytes(result: &CampaignResult) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> =
        campaign_artifacts(result).unwrap().into_iter().map(|a| (a.name, a.contents)).collect();
    out.push(("summary.json".into(), serde_json::to_string_pretty(result).unwrap()));
    out
}

fn campaign_bounds(v: &mut Verdict, config: &CampaignConfig) -> (CampaignResult, Duration) {
    let (result, elapsed) = campaign_in_pool(config, 8);

    v.record(
        11,
        "broadcasting bounds in every run",
        result.bound_violations.is_empty(),
        format!(
            "{} violations over {} runs ({} ill posed, {} capped)",
            result.bound_violations.len(),
            result.runs_ok,
            result.ill_posed_runs.len(),
            result.capped_runs.len()
        ),
    );
    for line in result.bound_violations.iter().take(3) {
        info(line.clone());
    }
    (result, elapsed)
}

fn campaign_statistics(v: &mut Verdict, config: &CampaignConfig, result: &CampaignResult, elapsed: Duration) {

    let pearson = |m: Measure| result.statistics[m.index()].pearson.unwrap_or(f64::NAN);
    let bins: Vec<usize> = Measure::ALL
        .iter()
        .map(|&m| histogram(&result.centralization_samples(m), HISTOGRAM_BINS).map_or(0, |h| h.occupied_bins()))
        .collect();
    let degree_ok = pearson(Measure::Degree) >= 0.9;
    let all_ok = Measure::ALL.iter().all(|&m| pearson(m) >= 0.6);
    let bins_ok = bins.iter().all(|&b| b >= 5);
    v.record(
        13,
        "karate campaign",
        degree_ok && all_ok && bins_ok && elapsed <= CAMPAIGN_BUDGET,
        format!("R = {}, {:.1} s", config.runs, elapsed.as_secs_f64()),
    );
    for s in &result.statistics {
        info(format!(
            "{:<7} pearson {:>7.4}  spearman {:>7.4}  top5 {:.2}  occupied bins {}",
            s.measure.broadcast_name(),
            s.pearson.unwrap_or(f64::NAN),
            s.spearman.unwrap_or(f64::NAN),
            s.top5.unwrap_or(f64::NAN),
            bins[s.measure.index()]
        ));
    }
    let log_config = CampaignConfig { closeness: ClosenessVariant::LogMetric, ..config.clone() };
    let (log, _) = campaign_in_pool(&log_config, 8);
    let stats = &log.statistics[Measure::Closeness.index()];
    let log_bins = histogram(&log.centralization_samples(Measure::Closeness), HISTOGRAM_BINS).map_or(0, |h| h.occupied_bins());
    info(format!(
        "log-metric closeness: pearson {:.4}, spearman {:.4}, occupied bins {log_bins}",
        stats.pearson.unwrap_or(f64::NAN),
        stats.spearman.unwrap_or(f64::NAN)
    ));

    let (single, _) = campaign_in_pool(config, 1);
    let (a, b) = (campaign_bytes(&single), campaign_bytes(result));
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    v.record(
        14,
        "determinism across thread counts",
        a.len() == b.len() && differing.is_empty(),
        format!("{} outputs compared between 1 and 8 threads, {} differ", a.len(), differing.len()),
    );
}

fn main() {
    let mut v = Verdict { failed: Vec::new() };
    steady_state_oracle(&mut v);
    error_recursion(&mut v);
    cycle_damping(&mut v);
    sensitivity(&mut v);
    perturbation(&mut v);
    spectral(&mut v);
    let all = scanning_distances(&mut v);
    influence_matrix(&mut v);
    balance(&mut v, &all);
    let config = CampaignConfig::default();
    let (result, elapsed) = campaign_bounds(&mut v, &config);
    product_characterization(&mut v);
    campaign_statistics(&mut v, &config, &result, elapsed);
    if v.failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", v.failed);
        std::process::exit(1);
    }
}
