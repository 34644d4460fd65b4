//! Exact computation on finite probability spaces.
//!
//! Atoms are indexed `0..m`; a function of the underlying random element is
//! just its vector of values at the atoms, and a sub-σ-field is the partition
//! that generates it. With a strictly positive pmf this identification makes
//! every conditional object exact, so the measure-theoretic statements the
//! verifiers check reduce to finite linear algebra.

mod joint;
mod random;
mod subspace;
mod verify;

pub use joint::{
    central_partition, check_norm_domination, check_range_inclusion, is_complete,
    population_operators, population_regression_operator, JointModel, PopulationOperators,
};
pub use random::{
    random_block_constant, random_dense_subspace, random_function, random_partition,
    random_space, random_subspace, InstanceRng,
};
pub use subspace::{
    eps_sublevel_perp3, is_dense_mod_constants, measurable_l2, measurable_subspace,
    perp3_complement, HilbertSubspace,
};
pub use verify::{
    is_dense_in_l2, is_strongly_relatively_universal,
    search_strong_universality_counterexample, verify_constant_conditional_mean,
    verify_exhaustiveness, verify_fisher_consistency, verify_sublevel_intersection,
    verify_unbiasedness, verify_universality_from_denseness, ConstantMeanCheck, VerdictReport,
    Witness,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A function on a finite space: its value at each atom.
pub type FunctionVec = DVector<f64>;

/// A function counts as measurable with respect to a partition when its
/// expected conditional variance is at most `MEAS_TOL * max(var, 1)`.
pub const MEAS_TOL: f64 = 1e-12;

/// A finite probability space: labelled atoms with a strictly positive pmf.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    points: Vec<String>,
    pmf: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct FiniteSpaceJson {
    points: Vec<String>,
    pmf: Vec<f64>,
}

impl FiniteSpace {
    pub fn new(points: Vec<String>, pmf: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != pmf.len() {
            return Err(Error::InvalidInput(format!(
                "need matching nonempty points/pmf, got {} points and {} probabilities",
                points.len(),
                pmf.len()
            )));
        }
        if pmf.iter().any(|&p| !p.is_finite() || p <= 0.0) {
            return Err(Error::InvalidInput("pmf entries must be strictly positive".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("pmf sums to {total}, not 1")));
        }
        Ok(Self { points, pmf: DVector::from_vec(pmf) })
    }

    /// Space with auto-generated labels.
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        let points = (0..pmf.len()).map(|i| format!("x{i}")).collect();
        Self::new(points, pmf)
    }

    pub fn uniform(m: usize) -> Self {
        Self::from_pmf(vec![1.0 / m as f64; m]).expect("uniform pmf is valid")
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn pmf(&self) -> &DVector<f64> {
        &self.pmf
    }

    pub fn mean(&self, f: &FunctionVec) -> f64 {
        self.pmf.dot(f)
    }

    pub fn var(&self, f: &FunctionVec) -> f64 {
        let m = self.mean(f);
        f.iter()
            .zip(self.pmf.iter())
            .map(|(&v, &p)| p * (v - m) * (v - m))
            .sum()
    }

    pub fn cov(&self, f: &FunctionVec, g: &FunctionVec) -> f64 {
        let mf = self.mean(f);
        let mg = self.mean(g);
        f.iter()
            .zip(g.iter())
            .zip(self.pmf.iter())
            .map(|((&a, &b), &p)| p * (a - mf) * (b - mg))
            .sum()
    }

    /// Inner product of L2 over this space.
    pub fn l2_inner(&self, f: &FunctionVec, g: &FunctionVec) -> f64 {
        f.iter()
            .zip(g.iter())
            .zip(self.pmf.iter())
            .map(|((&a, &b), &p)| p * a * b)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&FiniteSpaceJson {
            points: self.points.clone(),
            pmf: self.pmf.iter().cloned().collect(),
        })
        .expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: FiniteSpaceJson = serde_json::from_str(s)?;
        Self::new(raw.points, raw.pmf)
    }
}

/// A sub-σ-field of a finite space, represented by the partition of atoms
/// that generates it. Blocks are kept sorted by smallest member, with sorted
/// interiors, so structurally equal partitions compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    atom_count: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, atom_count: usize) -> Result<Self> {
        let mut seen = vec![false; atom_count];
        let mut canon: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidInput("partition has an empty block".into()));
            }
            let mut b = block.clone();
            b.sort_unstable();
            for &i in &b {
                if i >= atom_count {
                    return Err(Error::InvalidInput(format!(
                        "atom index {i} out of range for {atom_count} atoms"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidInput(format!("atom {i} appears in two blocks")));
                }
                seen[i] = true;
            }
            canon.push(b);
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidInput("partition does not cover all atoms".into()));
        }
        canon.sort_by_key(|b| b[0]);
        Ok(Self { atom_count, blocks: canon })
    }

    /// The finest partition (full σ-field of the space).
    pub fn singletons(atom_count: usize) -> Self {
        Self::new((0..atom_count).map(|i| vec![i]).collect(), atom_count).expect("valid")
    }

    /// The trivial σ-field: one block.
    pub fn trivial(atom_count: usize) -> Self {
        Self::new(vec![(0..atom_count).collect()], atom_count).expect("valid")
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// 0/1 indicator of one block, as a function on the space.
    pub fn indicator(&self, block: usize) -> FunctionVec {
        let mut v = DVector::zeros(self.atom_count);
        for &i in &self.blocks[block] {
            v[i] = 1.0;
        }
        v
    }

    /// Basis of the measurable functions: one indicator per block.
    pub fn indicator_basis(&self) -> nalgebra::DMatrix<f64> {
        let mut b = nalgebra::DMatrix::zeros(self.atom_count, self.blocks.len());
        for j in 0..self.blocks.len() {
            b.set_column(j, &self.indicator(j));
        }
        b
    }

    /// True when every block of `self` is a union of blocks of `finer`.
    pub fn is_coarser_than(&self, finer: &Partition) -> bool {
        if self.atom_count != finer.atom_count {
            return false;
        }
        let mut block_of = vec![0usize; self.atom_count];
        for (bi, block) in self.blocks.iter().enumerate() {
            for &i in block {
                block_of[i] = bi;
            }
        }
        finer
            .blocks
            .iter()
            .all(|fb| fb.iter().all(|&i| block_of[i] == block_of[fb[0]]))
    }
}

fn check_same_len(f: &FunctionVec, g: &Partition, sp: &FiniteSpace) -> Result<()> {
    if f.len() != sp.len() || g.atom_count() != sp.len() {
        return Err(Error::DimensionMismatch(format!(
            "function has {} values, partition covers {} atoms, space has {}",
            f.len(),
            g.atom_count(),
            sp.len()
        )));
    }
    Ok(())
}

/// Conditional expectation of `f` given the σ-field generated by `g`:
/// constant on each block, equal to the pmf-weighted block average.
pub fn cond_expectation(f: &FunctionVec, g: &Partition, sp: &FiniteSpace) -> Result<FunctionVec> {
    check_same_len(f, g, sp)?;
    let mut out = DVector::zeros(sp.len());
    for block in g.blocks() {
        let mass: f64 = block.iter().map(|&i| sp.pmf()[i]).sum();
        let avg: f64 = block.iter().map(|&i| sp.pmf()[i] * f[i]).sum::<f64>() / mass;
        for &i in block {
            out[i] = avg;
        }
    }
    Ok(out)
}

/// `E(var[f | g])`, the expected conditional variance. Zero exactly when `f`
/// is measurable with respect to `g`.
pub fn expected_cond_variance(f: &FunctionVec, g: &Partition, sp: &FiniteSpace) -> Result<f64> {
    let ce = cond_expectation(f, g, sp)?;
    Ok(f.iter()
        .zip(ce.iter())
        .zip(sp.pmf().iter())
        .map(|((&v, &c), &p)| p * (v - c) * (v - c))
        .sum())
}

/// ε-measurability: `E(var[f | g]) < eps`, with the strict inequality.
pub fn is_eps_measurable(f: &FunctionVec, g: &Partition, sp: &FiniteSpace, eps: f64) -> Result<bool> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::InvalidInput("epsilon must be nonnegative".into()));
    }
    Ok(expected_cond_variance(f, g, sp)? < eps)
}

/// Scale-aware exact-measurability test used everywhere a rank decision about
/// measurable directions is needed.
pub fn is_measurable(f: &FunctionVec, g: &Partition, sp: &FiniteSpace) -> Result<bool> {
    let ev = expected_cond_variance(f, g, sp)?;
    Ok(ev <= MEAS_TOL * sp.var(f).max(1.0))
}
