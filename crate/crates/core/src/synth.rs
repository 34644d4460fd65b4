//! Reproducible generators of datasets and finite joint models whose central
//! σ-field is known by construction.
//!
//! All randomness flows through ChaCha8 seeded with the scenario seed; each
//! array gets its own stream (`set_stream`), so any implementation of the
//! same generator and stream layout reproduces the bytes exactly:
//! stream 0 draws the predictor matrix row-major, stream 1 the noise,
//! stream 2 block assignments, stream 3 conditional rows, stream 4 the
//! marginal.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::{central_partition, is_complete, JointModel, Partition};
use crate::gsir::Dataset;

/// Link functions with a known generating sufficient reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Exp,
    Sin,
    Quadratic,
    Twoindex,
}

impl Link {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "identity" => Ok(Link::Identity),
            "exp" => Ok(Link::Exp),
            "sin" => Ok(Link::Sin),
            "quadratic" => Ok(Link::Quadratic),
            "twoindex" => Ok(Link::Twoindex),
            other => Err(Error::InvalidInput(format!(
                "unknown link {other:?}; expected identity, exp, sin, quadratic, or twoindex"
            ))),
        }
    }

    /// Dimension of the generating reduction.
    pub fn reduction_dim(&self) -> usize {
        match self {
            Link::Twoindex => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub link: Link,
    pub noise_sd: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidInput("scenario needs n >= 10".into()));
        }
        let needed = self.link.reduction_dim();
        if self.p < needed {
            return Err(Error::InvalidInput(format!(
                "link needs at least {needed} predictors, got p = {}",
                self.p
            )));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::InvalidInput("noise_sd must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// A generated dataset together with the reduction that renders Y
/// conditionally independent of X.
#[derive(Debug, Clone)]
pub struct ContinuousData {
    pub data: Dataset,
    pub true_reduction: DMatrix<f64>,
    pub reduction_dim: usize,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard-normal predictors with `Y = link(reduction) + noise`.
pub fn gen_continuous(spec: &ScenarioSpec) -> Result<ContinuousData> {
    spec.validate()?;
    let n = spec.n;
    let p = spec.p;
    let mut x_rng = stream_rng(spec.seed, 0);
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = StandardNormal.sample(&mut x_rng);
        }
    }
    let r = spec.link.reduction_dim();
    let mut reduction = DMatrix::zeros(n, r);
    let mut signal = vec![0.0_f64; n];
    for i in 0..n {
        match spec.link {
            Link::Identity => {
                reduction[(i, 0)] = x[(i, 0)];
                signal[i] = x[(i, 0)];
            }
            Link::Exp => {
                reduction[(i, 0)] = x[(i, 0)].exp();
                signal[i] = reduction[(i, 0)];
            }
            Link::Sin => {
                reduction[(i, 0)] = (2.0 * x[(i, 0)]).sin();
                signal[i] = reduction[(i, 0)];
            }
            Link::Quadratic => {
                reduction[(i, 0)] = x[(i, 0)] * x[(i, 0)];
                signal[i] = reduction[(i, 0)];
            }
            Link::Twoindex => {
                reduction[(i, 0)] = x[(i, 0)];
                reduction[(i, 1)] = x[(i, 1)] * x[(i, 1)];
                signal[i] = reduction[(i, 0)] + reduction[(i, 1)];
            }
        }
    }
    let mut noise_rng = stream_rng(spec.seed, 1);
    let y = DMatrix::from_fn(n, 1, |i, _| {
        let e: f64 = StandardNormal.sample(&mut noise_rng);
        signal[i] + spec.noise_sd * e
    });
    Ok(ContinuousData {
        data: Dataset::new(x, y)?,
        true_reduction: reduction,
        reduction_dim: r,
    })
}

/// A generated joint model with its central partition and completeness flag.
#[derive(Debug, Clone)]
pub struct DiscreteInstance {
    pub joint: JointModel,
    pub partition: Partition,
    pub complete: bool,
}

/// Minimum total-variation separation between the conditional rows of
/// distinct blocks.
pub const ROW_SEPARATION: f64 = 0.05;

const ROW_FLOOR: f64 = 1e-3;
const MAX_REDRAWS: usize = 100;

fn random_simplex(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = v.iter().sum();
    for p in v.iter_mut() {
        *p = (*p / total).max(ROW_FLOOR);
    }
    let total: f64 = v.iter().sum();
    for p in v.iter_mut() {
        *p /= total;
    }
    v
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Atoms are assigned to blocks (every block nonempty), one conditional row
/// of `P(Y | block)` is drawn per block with pairwise separation at least
/// [`ROW_SEPARATION`] in total variation, and the X marginal is strictly
/// positive. The returned partition is exactly the central partition of the
/// joint.
pub fn gen_discrete_joint(
    m_x: usize,
    m_y: usize,
    blocks: usize,
    seed: u64,
) -> Result<DiscreteInstance> {
    if blocks < 1 || blocks > m_x {
        return Err(Error::InvalidInput(format!(
            "block count {blocks} must lie in 1..={m_x}"
        )));
    }
    if m_y < 2 {
        return Err(Error::InvalidInput("need at least 2 response atoms".into()));
    }
    let mut assign_rng = stream_rng(seed, 2);
    let mut assignment: Vec<usize> = (0..m_x)
        .map(|i| if i < blocks { i } else { assign_rng.gen_range(0..blocks) })
        .collect();
    // Shuffle so block membership is not positional.
    for i in (1..m_x).rev() {
        let j = assign_rng.gen_range(0..=i);
        assignment.swap(i, j);
    }

    let mut row_rng = stream_rng(seed, 3);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut tries = 0;
    while rows.len() < blocks {
        let candidate = random_simplex(&mut row_rng, m_y);
        let separated = rows.iter().all(|r| total_variation(r, &candidate) >= ROW_SEPARATION);
        if separated {
            rows.push(candidate);
        } else {
            tries += 1;
            if tries > MAX_REDRAWS {
                return Err(Error::GenerationFailure(format!(
                    "could not separate {blocks} conditional rows over {m_y} atoms after {MAX_REDRAWS} redraws"
                )));
            }
        }
    }

    let mut marg_rng = stream_rng(seed, 4);
    let px = random_simplex(&mut marg_rng, m_x);

    let mut joint = DMatrix::zeros(m_x, m_y);
    for i in 0..m_x {
        for j in 0..m_y {
            joint[(i, j)] = px[i] * rows[assignment[i]][j];
        }
    }
    let jm = JointModel::new(joint)?;

    let mut block_sets: Vec<Vec<usize>> = vec![Vec::new(); blocks];
    for (i, &b) in assignment.iter().enumerate() {
        block_sets[b].push(i);
    }
    let partition = Partition::new(block_sets, m_x)?;
    let recovered = central_partition(&jm);
    if recovered != partition {
        return Err(Error::GenerationFailure(
            "generated joint does not reproduce its own partition".into(),
        ));
    }
    let complete = is_complete(&jm, &partition);
    Ok(DiscreteInstance { joint: jm, partition, complete })
}
