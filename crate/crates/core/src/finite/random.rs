//! Randomized instances for the property suites: spaces, partitions,
//! subspaces, and probe functions.
//!
//! Spaces are small (a dozen atoms at most) so every check stays exact;
//! pmfs come from a flat Dirichlet-like draw clipped below to keep the
//! positivity invariant robust; partitions are sampled uniformly over set
//! partitions with a capped block count using Stirling-number weights.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg;

use super::{FiniteSpace, FunctionVec, HilbertSubspace, Partition};

/// The suite's reproducible generator. One instance seed, one stream.
pub type InstanceRng = ChaCha8Rng;

const PMF_FLOOR: f64 = 1e-3;
const MAX_ATOMS: usize = 16;

/// Stirling numbers of the second kind S(n, k) for n up to `MAX_ATOMS`.
fn stirling_table(n: usize) -> Vec<Vec<u128>> {
    let mut s = vec![vec![0u128; n + 1]; n + 1];
    s[0][0] = 1;
    for i in 1..=n {
        for k in 1..=i {
            s[i][k] = s[i - 1][k - 1] + (k as u128) * s[i - 1][k];
        }
    }
    s
}

/// A pmf on `m` atoms: exponential draws normalized, clipped below at 1e-3
/// and renormalized.
pub fn random_space(rng: &mut impl Rng, m_min: usize, m_max: usize) -> FiniteSpace {
    let m = rng.gen_range(m_min..=m_max.min(MAX_ATOMS));
    let mut pmf: Vec<f64> = (0..m)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let total: f64 = pmf.iter().sum();
    for p in pmf.iter_mut() {
        *p = (*p / total).max(PMF_FLOOR);
    }
    let total: f64 = pmf.iter().sum();
    for p in pmf.iter_mut() {
        *p /= total;
    }
    FiniteSpace::from_pmf(pmf).expect("generated pmf is valid")
}

/// Uniform sample over set partitions of `m` atoms with at most `max_blocks`
/// blocks, via the Stirling-number recursion.
pub fn random_partition(rng: &mut impl Rng, m: usize, max_blocks: usize) -> Partition {
    assert!(m >= 1 && m <= MAX_ATOMS);
    let table = stirling_table(m);
    let kmax = max_blocks.min(m).max(1);
    let total: u128 = (1..=kmax).map(|k| table[m][k]).sum();
    let mut draw = rng.gen_range(0..total);
    let mut k = kmax;
    for cand in 1..=kmax {
        if draw < table[m][cand] {
            k = cand;
            break;
        }
        draw -= table[m][cand];
    }
    // Build a uniform partition with exactly k blocks, adding atoms from the
    // last one downward: atom n is a new singleton block with probability
    // S(n-1, k-1) / S(n, k), otherwise it joins one of the k blocks of a
    // uniform (n-1, k) partition.
    let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(k);
    fn build(
        n: usize,
        k: usize,
        rng: &mut impl Rng,
        table: &[Vec<u128>],
        blocks: &mut Vec<Vec<usize>>,
    ) {
        if n == 0 {
            return;
        }
        if k == n {
            for i in 0..n {
                blocks.push(vec![i]);
            }
            return;
        }
        if k == 1 {
            blocks.push((0..n).collect());
            return;
        }
        let new_block = table[n - 1][k - 1];
        let total = table[n][k];
        if (rng.gen_range(0..total)) < new_block {
            build(n - 1, k - 1, rng, table, blocks);
            blocks.push(vec![n - 1]);
        } else {
            build(n - 1, k, rng, table, blocks);
            let b = rng.gen_range(0..blocks.len());
            blocks[b].push(n - 1);
        }
    }
    build(m, k, rng, &table, &mut blocks);
    Partition::new(blocks, m).expect("construction yields a partition")
}

pub fn random_function(rng: &mut impl Rng, m: usize) -> FunctionVec {
    DVector::from_fn(m, |_, _| standard_normal(rng))
}

/// A block-constant function: one independent value per block.
pub fn random_block_constant(rng: &mut impl Rng, g: &Partition) -> FunctionVec {
    let mut v = DVector::zeros(g.atom_count());
    for block in g.blocks() {
        let val = standard_normal(rng);
        for &i in block {
            v[i] = val;
        }
    }
    v
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    StandardNormal.sample(rng)
}

/// Random SPD metric `W W' + 0.5 I`, scaled to unit spectral-ish size.
fn random_metric(rng: &mut impl Rng, k: usize) -> DMatrix<f64> {
    let w = DMatrix::from_fn(k, k, |_, _| standard_normal(rng));
    let m = &w * w.transpose() / (k as f64) + DMatrix::identity(k, k) * 0.5;
    linalg::symmetrize(&m)
}

/// Subspace of the given dimension spanned by orthonormalized normal draws.
/// With `vary_metric` half the instances carry a random SPD inner product
/// instead of the restricted L2 one.
pub fn random_subspace(
    rng: &mut impl Rng,
    sp: &FiniteSpace,
    dim: usize,
    vary_metric: bool,
) -> HilbertSubspace {
    let m = sp.len();
    assert!(dim <= m);
    if dim == 0 {
        return HilbertSubspace::zero(m);
    }
    let basis = loop {
        let draw = DMatrix::from_fn(m, dim, |_, _| standard_normal(rng));
        let b = linalg::orth_basis(&draw, linalg::DEFAULT_RANK_TOL);
        if b.ncols() == dim {
            break b;
        }
    };
    let metric = if vary_metric && rng.gen_bool(0.5) {
        random_metric(rng, dim)
    } else {
        let mut weighted = basis.clone();
        for i in 0..m {
            let p = sp.pmf()[i];
            for j in 0..dim {
                weighted[(i, j)] *= p;
            }
        }
        linalg::symmetrize(&(basis.transpose() * weighted))
    };
    HilbertSubspace::new(basis, metric).expect("orthonormal basis with SPD metric")
}

/// A subspace dense in L2 modulo constants: either all of L2 or a random
/// hyperplane whose span together with the constants is everything.
pub fn random_dense_subspace(
    rng: &mut impl Rng,
    sp: &FiniteSpace,
    vary_metric: bool,
) -> HilbertSubspace {
    let m = sp.len();
    if m == 1 || rng.gen_bool(0.4) {
        return if vary_metric && rng.gen_bool(0.5) {
            HilbertSubspace::new(DMatrix::identity(m, m), random_metric(rng, m)).expect("valid")
        } else {
            HilbertSubspace::full_l2(sp)
        };
    }
    loop {
        let h = random_subspace(rng, sp, m - 1, vary_metric);
        let mut ext = DMatrix::zeros(m, m);
        for j in 0..m - 1 {
            ext.set_column(j, &h.basis().column(j));
        }
        ext.set_column(m - 1, &DVector::from_element(m, 1.0));
        if linalg::rank(&ext, linalg::DEFAULT_RANK_TOL) == m {
            return h;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn partition_sampler_is_valid_and_capped() {
        let mut rng = InstanceRng::seed_from_u64(11);
        for _ in 0..500 {
            let m = rng.gen_range(1..=12);
            let g = random_partition(&mut rng, m, 5);
            assert!(g.num_blocks() <= 5);
            assert_eq!(g.atom_count(), m);
        }
    }

    #[test]
    fn partition_sampler_close_to_uniform_small_case() {
        // Partitions of 3 atoms: 5 in total (Bell number), all with <= 3
        // blocks. Each should appear roughly 1/5 of the time.
        let mut rng = InstanceRng::seed_from_u64(12);
        let mut counts = std::collections::HashMap::new();
        let n = 10_000;
        for _ in 0..n {
            let g = random_partition(&mut rng, 3, 5);
            *counts.entry(format!("{:?}", g.blocks())).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 5);
        for (_, c) in counts {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.2).abs() < 0.03, "frequency {freq}");
        }
    }

    #[test]
    fn spaces_are_clipped_and_normalized() {
        let mut rng = InstanceRng::seed_from_u64(13);
        for _ in 0..200 {
            let sp = random_space(&mut rng, 2, 12);
            assert!(sp.pmf().iter().all(|&p| p >= PMF_FLOOR / 2.0));
            assert!((sp.pmf().sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_subspaces_are_dense() {
        let mut rng = InstanceRng::seed_from_u64(14);
        for _ in 0..100 {
            let sp = random_space(&mut rng, 2, 10);
            let h = random_dense_subspace(&mut rng, &sp, true);
            assert!(super::super::verify::is_dense_in_l2(&h, &sp));
        }
    }
}
