//! Built-in graphs.

use crate::error::Result;
use crate::graph::InfluenceSystem;

#[rustfmt::skip]
/// Zachary's karate club: 34 members, 78 friendships, 0-based ids.
pub const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11),
    (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13),
    (1, 17), (1, 19), (1, 21), (1, 30), (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27),
    (2, 28), (2, 32), (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16),
    (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33), (15, 32), (15, 33),
    (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33), (23, 25), (23, 27), (23, 29),
    (23, 32), (23, 33), (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33), (27, 33), (28, 31),
    (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32), (31, 33), (32, 33),
];

pub const KARATE_NODES: usize = 34;

/// Names accepted by [`builtin`].
pub const BUILTIN: &[(&str, &str)] = &[(
    "karate",
    "Zachary karate club, 34 nodes, 78 undirected edges, random-walk weights",
)];

pub fn karate() -> InfluenceSystem {
    InfluenceSystem::random_walk_from_edges(KARATE_NODES, &KARATE_EDGES)
        .expect("embedded karate graph is valid")
}

pub fn builtin(name: &str) -> Option<InfluenceSystem> {
    match name {
        "karate" => Some(karate()),
        _ => None,
    }
}

pub fn builtin_or_err(name: &str) -> Result<InfluenceSystem> {
    builtin(name).ok_or_else(|| crate::Error::InvalidParameter(format!("unknown dataset '{name}'")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::out_reachability;

    #[test]
    fn karate_shape() {
        let g = karate();
        assert_eq!(g.n(), 34);
        assert_eq!(g.edges().count(), 2 * 78);
        assert!(g.max_row_sum_deviation() <= 1e-12);
        let degrees: Vec<usize> = (0..34).map(|i| g.out_degree(i)).collect();
        assert_eq!(degrees.iter().max(), Some(&17));
        assert_eq!(degrees[33], 17);
        assert_eq!(degrees[0], 16);
        for i in 0..34 {
            assert_eq!(out_reachability(&g, i).len(), 33);
        }
    }
}
