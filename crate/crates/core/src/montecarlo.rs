//! Monte Carlo campaigns over random susceptibility profiles.
//!
//! Each run draws `s` from a zero-inflated Beta law, scans every vertex,
//! builds the broadcasting graph and records its five centralities. Runs
//! are independent: run `r`, node `i` always reads the same random words,
//! so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::broadcasting::{
    classical_centralities, BroadcastingGraph, CentralityParams, CentralitySet, ClosenessVariant, Measure,
};
use crate::dynamics::SusceptibilityProfile;
use crate::error::{Error, Result};
use crate::graph::{out_closeness, InfluenceSystem};
use crate::influence::{scan_all_vertices_sequential, ScanOptions};
use crate::stats::{pearson, spearman, top_k_overlap, KahanSum};

/// Runs evaluated together before their results are merged.
const CHUNK: usize = 64;

/// Slack allowed on the per-run centrality bounds.
pub const BOUND_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignConfig {
    pub runs: usize,
    pub p0: f64,
    pub mu: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub t_cap: u32,
    pub eta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub dataset: String,
    pub closeness: ClosenessVariant,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            runs: 2000,
            p0: 0.15,
            mu: 0.5,
            kappa: 4.0,
            epsilon: 1e-6,
            t_cap: 1_000_000,
            eta: 1e-8,
            alpha: 0.85,
            seed: 20240611,
            dataset: "karate".into(),
            closeness: ClosenessVariant::Definition,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return bad(format!("p0 must lie in [0, 1], got {}", self.p0));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return bad(format!("mu must lie in (0, 1), got {}", self.mu));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        self.scan_options().validate()?;
        self.centrality_params().validate()
    }

    pub fn beta_shape(&self) -> (f64, f64) {
        (self.mu * self.kappa, (1.0 - self.mu) * self.kappa)
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions { epsilon: self.epsilon, t_cap: self.t_cap }
    }

    pub fn centrality_params(&self) -> CentralityParams {
        CentralityParams { eta: self.eta, alpha: self.alpha, closeness: self.closeness, ..Default::default() }
    }
}

/// Zero-inflated Beta profile for run `run`.
pub fn sample_susceptibility(config: &CampaignConfig, n: usize, run: usize) -> Result<SusceptibilityProfile> {
    let (a, b) = config.beta_shape();
    let beta = Beta::new(a, b).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(run as u64);
    let s = (0..n)
        .map(|i| {
            rng.set_word_pos((i as u128) << 32);
            if rng.random::<f64>() < config.p0 {
                0.0
            } else {
                beta.sample(&mut rng)
            }
        })
        .collect();
    SusceptibilityProfile::new(s)
}

/// Result of one run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub run: usize,
    /// `None` when some source problem was ill posed.
    pub centralities: Option<CentralitySet>,
    pub capped: bool,
    pub bound_violations: Vec<String>,
}

/// Checks the normalisation bounds of one run's centralities.
/// The closeness bound only applies to [`ClosenessVariant::Definition`].
pub fn bound_violations(system: &InfluenceSystem, set: &CentralitySet, closeness: ClosenessVariant) -> Vec<String> {
    let n = system.n();
    let denom = (n.max(2) - 1) as f64;
    let mut out = Vec::new();
    for i in 0..n {
        let deg = system.out_degree(i) as f64 / denom;
        let c = set.get(Measure::Degree)[i];
        if c < -BOUND_TOL || c > deg + BOUND_TOL {
            out.push(format!("obdeg[{i}] = {c} outside [0, {deg}]"));
        }
        let close = out_closeness(system, i);
        let c = set.get(Measure::Closeness)[i];
        let cap = if closeness == ClosenessVariant::Definition { close } else { f64::INFINITY };
        if c < -BOUND_TOL || c > cap + BOUND_TOL {
            out.push(format!("obclose[{i}] = {c} outside [0, {close}]"));
        }
    }
    for m in [Measure::Eigenvector, Measure::PageRank] {
        let total: f64 = set.get(m).iter().sum();
        if (total - 1.0).abs() > BOUND_TOL {
            out.push(format!("{} sums to {total}", m.broadcast_name()));
        }
    }
    out
}

pub fn run_once(system: &InfluenceSystem, config: &CampaignConfig, run: usize) -> Result<RunOutcome> {
    let profile = sample_susceptibility(config, system.n(), run)?;
    let scan = scan_all_vertices_sequential(system, &profile, config.scan_options())?;
    let capped = scan.row_capped.iter().any(|&c| c);
    if !scan.all_rows_ok() {
        return Ok(RunOutcome { run, centralities: None, capped, bound_violations: Vec::new() });
    }
    let bg = BroadcastingGraph::new(system, &scan)?;
    let set = bg.centralities(&config.centrality_params())?;
    let bound_violations = bound_violations(system, &set, config.closeness);
    Ok(RunOutcome { run, centralities: Some(set), capped, bound_violations })
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureStats {
    pub measure: Measure,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub top5: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub n: usize,
    pub runs_ok: usize,
    pub ill_posed_runs: Vec<usize>,
    pub capped_runs: Vec<usize>,
    pub bound_violations: Vec<String>,
    /// Nodewise Monte Carlo means of the five broadcasting centralities.
    pub means: [Vec<f64>; 5],
    pub classical: CentralitySet,
    /// `(run, centralizations)` for every well-posed run, by run index.
    pub centralizations: Vec<(usize, [f64; 5])>,
    /// Per-run centralities, kept only on request.
    #[serde(skip)]
    pub per_run: Option<Vec<(usize, CentralitySet)>>,
    pub statistics: Vec<MeasureStats>,
}

impl CampaignResult {
    pub fn centralization_samples(&self, measure: Measure) -> Vec<f64> {
        self.centralizations.iter().map(|(_, c)| c[measure.index()]).collect()
    }
}

/// Runs the campaign. Runs execute in parallel when enabled and are merged
/// in run order, so the result is independent of the thread count.
pub fn run_campaign(system: &InfluenceSystem, config: &CampaignConfig, keep_runs: bool) -> Result<CampaignResult> {
    config.validate()?;
    let n = system.n();
    let classical = classical_centralities(system, &config.centrality_params())?;
    let mut sums: Vec<Vec<KahanSum>> = vec![vec![KahanSum::default(); n]; 5];
    let mut result = CampaignResult {
        config: config.clone(),
        n,
        runs_ok: 0,
        ill_posed_runs: Vec::new(),
        capped_runs: Vec::new(),
        bound_violations: Vec::new(),
        means: std::array::from_fn(|_| vec![0.0; n]),
        classical,
        centralizations: Vec::new(),
        per_run: keep_runs.then(Vec::new),
        statistics: Vec::new(),
    };

    for chunk_start in (0..config.runs).step_by(CHUNK) {
        let len = CHUNK.min(config.runs - chunk_start);
        let outcomes = crate::par::map_indexed(len, |k| run_once(system, config, chunk_start + k));
        for outcome in outcomes {
            let outcome = outcome?;
            if outcome.capped {
                result.capped_runs.push(outcome.run);
            }
            let Some(set) = outcome.centralities else {
                result.ill_posed_runs.push(outcome.run);
                continue;
            };
            result.runs_ok += 1;
            for v in outcome.bound_violations {
                result.bound_violations.push(format!("run {}: {v}", outcome.run));
            }
            for (m, values) in set.values.iter().enumerate() {
                for (acc, &x) in sums[m].iter_mut().zip(values) {
                    acc.add(x);
                }
            }
            result.centralizations.push((outcome.run, set.centralizations()));
            if let Some(per_run) = result.per_run.as_mut() {
                per_run.push((outcome.run, set));
            }
        }
    }
    if result.runs_ok == 0 {
        return Err(Error::AllRunsIllPosed);
    }
    let r = result.runs_ok as f64;
    for m in 0..5 {
        result.means[m] = sums[m].iter().map(|s| s.value() / r).collect();
    }
    result.statistics = Measure::ALL
        .iter()
        .map(|&m| {
            let x = &result.means[m.index()];
            let y = result.classical.get(m);
            MeasureStats {
                measure: m,
                pearson: pearson(x, y).ok(),
                spearman: spearman(x, y).ok(),
                top5: top_k_overlap(x, y, 5.min(n)).ok(),
            }
        })
        .collect();
    Ok(result)
}
