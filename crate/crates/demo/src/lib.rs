//! WebAssembly bindings for the karate-club demo page in `www/`.
//!
//! The page calls two operations: the steady state for a chosen set of
//! stubborn members, and the broadcasting centralities at a homogeneous
//! susceptibility. Both are plain Rust functions wrapped for JavaScript.

use std::collections::BTreeMap;

use fj_core::broadcasting::{classical_centralities, BroadcastingGraph, CentralityParams, ClosenessVariant};
use fj_core::datasets::{karate, KARATE_EDGES, KARATE_NODES};
use fj_core::influence::{scan_all_vertices, ScanOptions};
use fj_core::{DirichletProblem, SusceptibilityProfile};
use nalgebra::Vector2;
use wasm_bindgen::prelude::*;

/// Endpoints of every karate edge, flattened as `[a0, b0, a1, b1, ...]`.
pub fn edges() -> Vec<u32> {
    KARATE_EDGES.iter().flat_map(|&(a, b)| [a as u32, b as u32]).collect()
}

/// Deterministic force-directed layout in the unit square, flattened `[x0, y0, ...]`.
pub fn layout() -> Vec<f64> {
    let n = KARATE_NODES;
    let mut pos: Vec<Vector2<f64>> = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            Vector2::new(a.cos(), a.sin()) * 0.5
        })
        .collect();
    let k = (1.0 / n as f64).sqrt();
    let mut temperature = 0.1;
    for _ in 0..400 {
        let mut shift = vec![Vector2::zeros(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = pos[i] - pos[j];
                    let len = d.norm().max(1e-6);
                    shift[i] += d / len * (k * k / len);
                }
            }
        }
        for &(a, b) in KARATE_EDGES.iter() {
            let d = pos[a] - pos[b];
            let len = d.norm().max(1e-6);
            let pull = d / len * (len * len / k);
            shift[a] -= pull;
            shift[b] += pull;
        }
        for (p, s) in pos.iter_mut().zip(&shift) {
            let len = s.norm().max(1e-12);
            *p += s / len * len.min(temperature);
        }
        temperature *= 0.99;
    }
    let (mut lo, mut hi) = (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY));
    for p in &pos {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let span = (hi - lo).max().max(1e-12);
    pos.iter().flat_map(|p| {
        let q = (p - lo) / span;
        [q.x, q.y]
    })
    .collect()
}

/// Steady opinions of all members when `stubborn[k]` holds `opinions[k]`
/// forever and everyone else has susceptibility `s` and starts at 0.
pub fn steady_state(s: f64, stubborn: &[u32], opinions: &[f64]) -> Result<Vec<f64>, String> {
    if stubborn.len() != opinions.len() {
        return Err("one opinion per stubborn member is required".into());
    }
    let system = karate();
    let mut values = vec![s; KARATE_NODES];
    let mut psi = BTreeMap::new();
    for (&node, &opinion) in stubborn.iter().zip(opinions) {
        let node = node as usize;
        if node >= KARATE_NODES {
            return Err(format!("member {node} does not exist"));
        }
        values[node] = 0.0;
        psi.insert(node, opinion);
    }
    let profile = SusceptibilityProfile::new(values).map_err(|e| e.to_string())?;
    let problem = DirichletProblem::from_node_values(&system, profile, &psi, &BTreeMap::new())
        .map_err(|e| e.to_string())?;
    let steady = problem.steady_state().map_err(|e| e.to_string())?;
    Ok(steady.full.iter().copied().collect())
}

/// The five broadcasting centralities at homogeneous susceptibility `s`,
/// flattened measure by measure (degree, closeness, betweenness,
/// eigenvector, PageRank), 34 values each.
pub fn broadcast(s: f64, log_closeness: bool) -> Result<Vec<f64>, String> {
    let system = karate();
    let profile = SusceptibilityProfile::homogeneous(KARATE_NODES, s).map_err(|e| e.to_string())?;
    let scan = scan_all_vertices(&system, &profile, ScanOptions::default()).map_err(|e| e.to_string())?;
    let bg = BroadcastingGraph::new(&system, &scan).map_err(|e| e.to_string())?;
    let closeness = if log_closeness { ClosenessVariant::LogMetric } else { ClosenessVariant::Definition };
    let params = CentralityParams { closeness, ..Default::default() };
    let set = bg.centralities(&params).map_err(|e| e.to_string())?;
    Ok(set.values.concat())
}

/// Classical centralities of the karate graph, flattened like [`broadcast`].
pub fn classical() -> Vec<f64> {
    classical_centralities(&karate(), &CentralityParams::default()).expect("karate centralities").values.concat()
}

#[wasm_bindgen]
pub fn karate_edges() -> Vec<u32> {
    edges()
}

#[wasm_bindgen]
pub fn karate_layout() -> Vec<f64> {
    layout()
}

#[wasm_bindgen]
pub fn karate_steady_state(s: f64, stubborn: Vec<u32>, opinions: Vec<f64>) -> Result<Vec<f64>, JsError> {
    steady_state(s, &stubborn, &opinions).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn karate_broadcast(s: f64, log_closeness: bool) -> Result<Vec<f64>, JsError> {
    broadcast(s, log_closeness).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn karate_classical() -> Vec<f64> {
    classical()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_deterministic_and_normalised() {
        let a = layout();
        assert_eq!(a, layout());
        assert_eq!(a.len(), 2 * KARATE_NODES);
        assert!(a.iter().all(|&x| (0.0..=1.0).contains(&x)));
        // no two members on top of each other
        for i in 0..KARATE_NODES {
            for j in 0..i {
                let d = (a[2 * i] - a[2 * j]).hypot(a[2 * i + 1] - a[2 * j + 1]);
                assert!(d > 1e-3, "{i} {j}");
            }
        }
    }

    #[test]
    fn two_leaders() {
        let v = steady_state(0.8, &[0, 33], &[1.0, -1.0]).unwrap();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[33], -1.0);
        assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert!(v[1] > 0.0 && v[32] < 0.0);
    }

    #[test]
    fn steady_state_errors() {
        assert!(steady_state(0.5, &[], &[]).is_err());
        assert!(steady_state(0.5, &[40], &[1.0]).is_err());
        assert!(steady_state(0.5, &[1], &[]).is_err());
        assert!(steady_state(1.5, &[1], &[1.0]).is_err());
    }

    #[test]
    fn broadcast_shapes() {
        let b = broadcast(0.5, true).unwrap();
        assert_eq!(b.len(), 5 * KARATE_NODES);
        let pr_sum: f64 = b[4 * KARATE_NODES..].iter().sum();
        assert!((pr_sum - 1.0).abs() < 1e-12);
        assert_eq!(classical().len(), 5 * KARATE_NODES);
        assert_eq!(edges().len(), 156);
    }
}
