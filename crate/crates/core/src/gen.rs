//! Synthetic graphs and features.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, consumed through the fixed conversions below so outputs
//! are reproducible:
//!
//! - uniform `f64` in `[0, 1)`: `(next_u64 >> 11) * 2^-53`
//! - uniform `f32` feature in `[-1, 1)`: `(next_u32 >> 8) * 2^-23 - 1`
//! - integer below `n`: Lemire's multiply-shift with rejection on `next_u64`

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::feature::FeatureMatrix;
use crate::graph::EdgeList;
use crate::{Error, Idx, Result};

/// Graph500 quadrant weights.
pub const RMAT_DEFAULT: [f64; 4] = [0.57, 0.19, 0.19, 0.05];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeCount {
    Exact(usize),
    Probability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    /// Directed graph without self-loops: either `G(n, p)` over all ordered
    /// pairs, or `G(n, m)` drawing `m` pairs with replacement.
    ErdosRenyi { edges: EdgeCount },
    /// Recursive-matrix generator with quadrant weights `[a, b, c, d]`.
    /// Self-loops and duplicate edges are kept.
    Rmat { num_edges: usize, abcd: [f64; 4] },
    /// Stochastic block model over `blocks` equal node blocks; each ordered
    /// pair of distinct nodes is an edge with probability `p_in` inside a
    /// block and `p_out` across blocks.
    Sbm { blocks: usize, p_in: f64, p_out: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub num_nodes: usize,
    pub seed: u64,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} = {p} is not a probability")))
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes;
        if n > Idx::MAX as usize {
            return Err(Error::InvalidSpec(format!("{n} nodes exceed the identifier width")));
        }
        match self.kind {
            GeneratorKind::ErdosRenyi { edges: EdgeCount::Probability(p) } => check_probability("p", p),
            GeneratorKind::ErdosRenyi { edges: EdgeCount::Exact(m) } => {
                if m > 0 && n < 2 {
                    return Err(Error::InvalidSpec("G(n, m) without self-loops needs two nodes".into()));
                }
                Ok(())
            }
            GeneratorKind::Rmat { num_edges, abcd } => {
                for (name, p) in ["a", "b", "c", "d"].iter().zip(abcd) {
                    check_probability(name, p)?;
                }
                let sum: f64 = abcd.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSpec(format!("RMAT weights sum to {sum}, expected 1")));
                }
                if num_edges > 0 && n == 0 {
                    return Err(Error::InvalidSpec("RMAT edges need at least one node".into()));
                }
                Ok(())
            }
            GeneratorKind::Sbm { blocks, p_in, p_out } => {
                check_probability("p_in", p_in)?;
                check_probability("p_out", p_out)?;
                if blocks == 0 || blocks > n.max(1) {
                    return Err(Error::InvalidSpec(format!("{blocks} blocks for {n} nodes")));
                }
                Ok(())
            }
        }
    }

    /// Expected number of generated edges.
    pub fn expected_edges(&self) -> f64 {
        let n = self.num_nodes as f64;
        match self.kind {
            GeneratorKind::ErdosRenyi { edges: EdgeCount::Probability(p) } => p * n * (n - 1.0).max(0.0),
            GeneratorKind::ErdosRenyi { edges: EdgeCount::Exact(m) } => m as f64,
            GeneratorKind::Rmat { num_edges, .. } => num_edges as f64,
            GeneratorKind::Sbm { blocks, p_in, p_out } => {
                let mut total = 0.0;
                for bi in 0..blocks {
                    for bj in 0..blocks {
                        let (a, b) = (block_range(self.num_nodes, blocks, bi), block_range(self.num_nodes, blocks, bj));
                        let (a, b) = ((a.end - a.start) as f64, (b.end - b.start) as f64);
                        total += if bi == bj { p_in * a * (a - 1.0) } else { p_out * a * b };
                    }
                }
                total
            }
        }
    }
}

fn block_range(n: usize, blocks: usize, b: usize) -> std::ops::Range<usize> {
    b * n / blocks..(b + 1) * n / blocks
}

fn uniform_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    debug_assert!(n > 0);
    let threshold = n.wrapping_neg() % n;
    loop {
        let m = rng.next_u64() as u128 * n as u128;
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// Calls `emit` with each index in `0..count` kept independently with
/// probability `p`, by sampling geometric gaps between kept indices.
fn bernoulli_indices(rng: &mut ChaCha8Rng, count: u64, p: f64, mut emit: impl FnMut(u64)) {
    if p <= 0.0 || count == 0 {
        return;
    }
    if p >= 1.0 {
        (0..count).for_each(emit);
        return;
    }
    let log_q = (-p).ln_1p();
    let mut i = 0u64;
    loop {
        let u = 1.0 - uniform_f64(rng);
        let gap = (u.ln() / log_q).floor();
        if gap >= (count - i) as f64 {
            return;
        }
        i += gap as u64;
        emit(i);
        i += 1;
        if i >= count {
            return;
        }
    }
}

/// Generates the edge list described by `spec`. Identical specs give
/// identical lists.
pub fn generate(spec: &GeneratorSpec) -> Result<EdgeList> {
    spec.validate()?;
    let n = spec.num_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges: Vec<(Idx, Idx)> = Vec::new();
    match spec.kind {
        GeneratorKind::ErdosRenyi { edges: EdgeCount::Probability(p) } => {
            if n >= 2 {
                let row = (n - 1) as u64;
                bernoulli_indices(&mut rng, n as u64 * row, p, |k| {
                    let s = k / row;
                    let j = k % row;
                    let d = if j >= s { j + 1 } else { j };
                    edges.push((s as Idx, d as Idx));
                });
            }
        }
        GeneratorKind::ErdosRenyi { edges: EdgeCount::Exact(m) } => {
            edges.reserve(m);
            for _ in 0..m {
                let s = below(&mut rng, n as u64);
                let j = below(&mut rng, n as u64 - 1);
                let d = if j >= s { j + 1 } else { j };
                edges.push((s as Idx, d as Idx));
            }
        }
        GeneratorKind::Rmat { num_edges, abcd: [a, b, c, _] } => {
            let levels = n.next_power_of_two().trailing_zeros();
            edges.reserve(num_edges);
            while edges.len() < num_edges {
                let (mut s, mut d) = (0usize, 0usize);
                for _ in 0..levels {
                    let r = uniform_f64(&mut rng);
                    let (sb, db) = if r < a {
                        (0, 0)
                    } else if r < a + b {
                        (0, 1)
                    } else if r < a + b + c {
                        (1, 0)
                    } else {
                        (1, 1)
                    };
                    s = 2 * s + sb;
                    d = 2 * d + db;
                }
                if s < n && d < n {
                    edges.push((s as Idx, d as Idx));
                }
            }
        }
        GeneratorKind::Sbm { blocks, p_in, p_out } => {
            for bi in 0..blocks {
                let rows = block_range(n, blocks, bi);
                for bj in 0..blocks {
                    let cols = block_range(n, blocks, bj);
                    let width = (cols.end - cols.start) as u64;
                    if bi == bj {
                        let row = width.saturating_sub(1);
                        if row == 0 {
                            continue;
                        }
                        bernoulli_indices(&mut rng, width * row, p_in, |k| {
                            let (s, j) = (k / row, k % row);
                            let d = if j >= s { j + 1 } else { j };
                            edges.push(((rows.start as u64 + s) as Idx, (cols.start as u64 + d) as Idx));
                        });
                    } else {
                        let count = (rows.end - rows.start) as u64 * width;
                        bernoulli_indices(&mut rng, count, p_out, |k| {
                            edges
                                .push(((rows.start as u64 + k / width) as Idx, (cols.start as u64 + k % width) as Idx));
                        });
                    }
                }
            }
        }
    }
    EdgeList::new(n, edges)
}

/// Features uniform in `[-1, 1)`, deterministic per seed.
pub fn random_features(rows: usize, dim: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * dim).map(|_| (rng.next_u32() >> 8) as f32 * (1.0 / (1u32 << 23) as f32) - 1.0).collect();
    FeatureMatrix::new(rows, dim, data).expect("dim must be at least 1")
}

/// Seed used by presets unless the caller overrides it.
pub const PRESET_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetPreset {
    pub name: &'static str,
    pub spec: GeneratorSpec,
    pub feature_dim: usize,
}

const fn rmat_preset(name: &'static str, num_nodes: usize, num_edges: usize, feature_dim: usize) -> DatasetPreset {
    DatasetPreset {
        name,
        spec: GeneratorSpec {
            kind: GeneratorKind::Rmat { num_edges, abcd: RMAT_DEFAULT },
            num_nodes,
            seed: PRESET_SEED,
        },
        feature_dim,
    }
}

/// Shapes of the benchmark datasets, reproduced with RMAT graphs.
pub const DATASET_PRESETS: [DatasetPreset; 4] = [
    rmat_preset("pubmed-like", 19_717, 44_338, 500),
    rmat_preset("reddit-like", 232_965, 11_606_919, 602),
    rmat_preset("ogbprod-like", 2_449_029, 123_718_280, 100),
    rmat_preset("bgs-like", 44_333, 227_916, 103),
];

/// Desk-scale and test presets.
pub const EXTRA_PRESETS: [DatasetPreset; 2] = [
    rmat_preset("reddit-like-small", 100_000, 5_000_000, 64),
    DatasetPreset {
        name: "smoke",
        spec: GeneratorSpec {
            kind: GeneratorKind::ErdosRenyi { edges: EdgeCount::Probability(0.05) },
            num_nodes: 200,
            seed: PRESET_SEED,
        },
        feature_dim: 16,
    },
];

pub fn dataset_preset(name: &str) -> Result<DatasetPreset> {
    DATASET_PRESETS.into_iter().find(|p| p.name == name).ok_or_else(|| Error::UnknownPreset(name.into()))
}

/// Any named preset, including the desk-scale ones.
pub fn preset(name: &str) -> Result<DatasetPreset> {
    DATASET_PRESETS
        .into_iter()
        .chain(EXTRA_PRESETS)
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownPreset(name.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: GeneratorKind, num_nodes: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec { kind, num_nodes, seed }
    }

    #[test]
    fn er_complete() {
        let el = generate(&spec(GeneratorKind::ErdosRenyi { edges: EdgeCount::Probability(1.0) }, 4, 1)).unwrap();
        assert_eq!(el.num_edges(), 12);
        assert!(el.edges.iter().all(|(s, d)| s != d));
        let mut sorted = el.edges.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 12);
    }

    #[test]
    fn sbm_disjoint_blocks() {
        let el = generate(&spec(GeneratorKind::Sbm { blocks: 2, p_in: 1.0, p_out: 0.0 }, 100, 3)).unwrap();
        assert_eq!(el.num_edges(), 2 * 50 * 49);
        assert!(el.edges.iter().all(|&(s, d)| (s < 50) == (d < 50) && s != d));
    }

    #[test]
    fn deterministic_per_seed() {
        let kinds = [
            GeneratorKind::ErdosRenyi { edges: EdgeCount::Probability(0.1) },
            GeneratorKind::ErdosRenyi { edges: EdgeCount::Exact(300) },
            GeneratorKind::Rmat { num_edges: 500, abcd: RMAT_DEFAULT },
            GeneratorKind::Sbm { blocks: 3, p_in: 0.2, p_out: 0.01 },
        ];
        for kind in kinds {
            let a = generate(&spec(kind, 60, 9)).unwrap();
            assert_eq!(a, generate(&spec(kind, 60, 9)).unwrap());
            assert_ne!(a, generate(&spec(kind, 60, 10)).unwrap(), "{kind:?}");
        }
    }

    #[test]
    fn edge_counts_near_expectation() {
        let sbm = spec(GeneratorKind::Sbm { blocks: 10, p_in: 0.015, p_out: 0.00055 }, 10_000, 5);
        let got = generate(&sbm).unwrap().num_edges() as f64;
        let want = sbm.expected_edges();
        assert!((got - want).abs() / want < 0.01, "{got} vs {want}");

        let rmat = spec(GeneratorKind::Rmat { num_edges: 20_000, abcd: RMAT_DEFAULT }, 1000, 5);
        assert_eq!(generate(&rmat).unwrap().num_edges(), 20_000);

        let er = spec(GeneratorKind::ErdosRenyi { edges: EdgeCount::Probability(0.05) }, 400, 5);
        let got = generate(&er).unwrap().num_edges() as f64;
        assert!((got - er.expected_edges()).abs() / er.expected_edges() < 0.05);
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            spec(GeneratorKind::Rmat { num_edges: 10, abcd: [0.5, 0.2, 0.2, 0.2] }, 16, 0),
            spec(GeneratorKind::Rmat { num_edges: 10, abcd: [1.2, -0.2, 0.0, 0.0] }, 16, 0),
            spec(GeneratorKind::Sbm { blocks: 0, p_in: 0.1, p_out: 0.1 }, 16, 0),
            spec(GeneratorKind::Sbm { blocks: 2, p_in: 1.5, p_out: 0.1 }, 16, 0),
            spec(GeneratorKind::ErdosRenyi { edges: EdgeCount::Probability(-0.1) }, 16, 0),
            spec(GeneratorKind::ErdosRenyi { edges: EdgeCount::Exact(3) }, 1, 0),
        ];
        for s in bad {
            assert!(matches!(generate(&s), Err(Error::InvalidSpec(_))), "{s:?}");
        }
    }

    #[test]
    fn features_in_range_and_deterministic() {
        let a = random_features(3, 2, 11);
        assert_eq!(a, random_features(3, 2, 11));
        assert_ne!(a, random_features(3, 2, 12));
        let big = random_features(1000, 7, 1);
        assert!(big.as_slice().iter().all(|&x| (-1.0..1.0).contains(&x)));
        assert_eq!(random_features(1, 1, 0).as_slice().len(), 1);
    }

    #[test]
    fn table_presets() {
        let shape = |name: &str| {
            let p = dataset_preset(name).unwrap();
            let GeneratorKind::Rmat { num_edges, .. } = p.spec.kind else { panic!() };
            (p.spec.num_nodes, num_edges, p.feature_dim)
        };
        assert_eq!(shape("pubmed-like"), (19_717, 44_338, 500));
        assert_eq!(shape("reddit-like"), (232_965, 11_606_919, 602));
        assert_eq!(shape("ogbprod-like"), (2_449_029, 123_718_280, 100));
        assert_eq!(shape("bgs-like"), (44_333, 227_916, 103));
        assert!(matches!(dataset_preset("cora-like"), Err(Error::UnknownPreset(_))));
        assert!(dataset_preset("smoke").is_err());
        assert_eq!(preset("smoke").unwrap().spec.num_nodes, 200);
    }
}
