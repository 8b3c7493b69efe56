//! Generation of weighted recursive trees (fixed out-degree one) and
//! weighted recursive graphs (independent random out-degree).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::weights::{BaseLaw, WeightLaw};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("vertex count must be at least 1")]
    ZeroVertices,
    #[error("operation requires {expected:?} mode, tree is {actual:?}")]
    WrongMode { expected: Mode, actual: Mode },
    #[error("cumulative index is empty")]
    EmptyIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Each arriving vertex attaches to exactly one earlier vertex.
    FixedOne,
    /// Each arriving vertex connects to every earlier vertex i independently
    /// with probability W_i / S_k.
    RandomOut,
}

/// Append-only cumulative weight index with a compensated running total.
///
/// Weights never change after insertion, so a static prefix array plus
/// binary search gives O(log n) categorical sampling.
#[derive(Debug, Clone, Default)]
pub struct CumIndex {
    cum: Vec<f64>,
    total: f64,
    compensation: f64,
}

impl CumIndex {
    pub fn with_capacity(n: usize) -> Self {
        CumIndex {
            cum: Vec::with_capacity(n),
            total: 0.0,
            compensation: 0.0,
        }
    }

    pub fn push(&mut self, w: f64) {
        // Kahan step keeps the relative error of the total near machine
        // epsilon even at 1e7 entries.
        let y = w - self.compensation;
        let t = self.total + y;
        self.compensation = (t - self.total) - y;
        self.total = t;
        self.cum.push(self.total);
    }

    pub fn len(&self) -> usize {
        self.cum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Draw index i with probability w_i / total.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, SimError> {
        if self.cum.is_empty() {
            return Err(SimError::EmptyIndex);
        }
        let target = rng.gen::<f64>() * self.total;
        Ok(self.cum.partition_point(|&c| c <= target).min(self.cum.len() - 1))
    }
}

/// A generated weighted recursive tree or graph. Vertices are 0-based;
/// vertex 0 is the root.
#[derive(Debug, Clone)]
pub struct Wrt {
    pub n: usize,
    pub mode: Mode,
    pub weights: Vec<f64>,
    /// FixedOne only: parent of each vertex; `u32::MAX` sentinel for the root.
    pub parents: Vec<u32>,
    /// RandomOut only: (child, parent) pairs with parent < child.
    pub edges: Vec<(u32, u32)>,
    pub in_degrees: Vec<u32>,
}

impl Wrt {
    pub fn max_in_degree(&self) -> u32 {
        self.in_degrees.iter().copied().max().unwrap_or(0)
    }

    /// Observed edge count for a random out-degree graph; its mean over
    /// replicates is n-1 since each arrival has expected out-degree one.
    pub fn edge_count(&self) -> Result<usize, SimError> {
        if self.mode != Mode::RandomOut {
            return Err(SimError::WrongMode {
                expected: Mode::RandomOut,
                actual: self.mode,
            });
        }
        Ok(self.edges.len())
    }
}

/// splitmix64 finalizer; replicate r uses seed XOR splitmix64(r) so a
/// parallel execution schedule cannot change results.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn replicate_seed(seed: u64, replicate: u64) -> u64 {
    seed ^ splitmix64(replicate)
}

/// Two-point support of a law, when it has one. Attachment sampling for
/// such laws runs in O(1) per step by sampling a weight class first and a
/// uniform member within the class second.
fn discrete_support(law: &WeightLaw) -> Option<Vec<f64>> {
    match law {
        WeightLaw::Constant { value } => Some(vec![*value]),
        WeightLaw::AtomMix { base: None, .. } => Some(vec![1.0]),
        WeightLaw::AtomMix {
            base: Some(BaseLaw::Constant { value }),
            ..
        } => Some(vec![1.0, *value]),
        _ => None,
    }
}

/// Generate a tree/graph. Deterministic given (law, n, mode, seed): the
/// i.i.d. weights are drawn first, then the attachment steps.
pub fn generate(law: &WeightLaw, n: usize, mode: Mode, seed: u64) -> Result<Wrt, SimError> {
    if n == 0 {
        return Err(SimError::ZeroVertices);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
    let mut in_degrees = vec![0u32; n];
    match mode {
        Mode::FixedOne => {
            let mut parents = vec![u32::MAX; n];
            if let Some(support) = discrete_support(law) {
                grouped_attach(&weights, &support, &mut parents, &mut in_degrees, &mut rng);
            } else {
                let mut index = CumIndex::with_capacity(n);
                index.push(weights[0]);
                for child in 1..n {
                    let parent = index.sample(&mut rng).expect("nonempty");
                    parents[child] = parent as u32;
                    in_degrees[parent] += 1;
                    index.push(weights[child]);
                }
            }
            Ok(Wrt {
                n,
                mode,
                weights,
                parents,
                edges: Vec::new(),
                in_degrees,
            })
        }
        Mode::RandomOut => {
            let mut edges = Vec::with_capacity(n.saturating_sub(1));
            let mut total = 0.0f64;
            let mut comp = 0.0f64;
            for child in 0..n {
                if child > 0 {
                    random_out_step(&weights, child, total, &mut edges, &mut in_degrees, &mut rng);
                }
                let y = weights[child] - comp;
                let t = total + y;
                comp = (t - total) - y;
                total = t;
            }
            Ok(Wrt {
                n,
                mode,
                weights,
                parents: Vec::new(),
                edges,
                in_degrees,
            })
        }
    }
}

/// O(1)-per-step attachment for laws with at most two distinct weight
/// values: pick a weight class proportional to (class size x value), then a
/// uniform member of the class.
fn grouped_attach<R: Rng + ?Sized>(
    weights: &[f64],
    support: &[f64],
    parents: &mut [u32],
    in_degrees: &mut [u32],
    rng: &mut R,
) {
    let n = weights.len();
    let mut groups: Vec<Vec<u32>> = vec![Vec::new(); support.len()];
    let group_of = |w: f64| support.iter().position(|&v| v == w).expect("support");
    groups[group_of(weights[0])].push(0);
    for child in 1..n {
        let mut u = rng.gen::<f64>();
        let total: f64 = groups
            .iter()
            .zip(support)
            .map(|(g, &v)| g.len() as f64 * v)
            .sum();
        u *= total;
        let last_nonempty = groups.iter().rposition(|g| !g.is_empty()).expect("root present");
        let mut parent = 0u32;
        for (gi, g) in groups.iter().enumerate() {
            if g.is_empty() {
                continue;
            }
            let mass = g.len() as f64 * support[gi];
            if u < mass || gi == last_nonempty {
                let frac = (u / mass).clamp(0.0, 1.0 - 1e-16);
                parent = g[(frac * g.len() as f64) as usize];
                break;
            }
            u -= mass;
        }
        parents[child] = parent;
        in_degrees[parent as usize] += 1;
        groups[group_of(weights[child])].push(child as u32);
    }
}

/// One arrival of the random out-degree model: geometric skip sampling under
/// the uniform bound 1/S_k (valid since weights are at most one), with
/// acceptance probability W_i.
fn random_out_step<R: Rng + ?Sized>(
    weights: &[f64],
    child: usize,
    total: f64,
    edges: &mut Vec<(u32, u32)>,
    in_degrees: &mut [u32],
    rng: &mut R,
) {
    let p_star = (1.0 / total).min(1.0);
    let mut pos: i64 = -1;
    loop {
        let skip = if p_star >= 1.0 {
            0
        } else {
            let u: f64 = rng.gen::<f64>();
            (u.ln() / (-p_star).ln_1p()) as i64
        };
        pos += 1 + skip;
        if pos >= child as i64 {
            break;
        }
        let i = pos as usize;
        // acceptance probability (W_i/S_k)/p* = W_i (when p* = 1/S_k)
        let accept = if p_star >= 1.0 {
            weights[i] / (total * p_star)
        } else {
            weights[i]
        };
        if rng.gen::<f64>() < accept {
            edges.push((child as u32, pos as u32));
            in_degrees[i] += 1;
        }
    }
}

/// Run `replicates` independent generations with per-replicate substreams and
/// reduce each tree through `f`, returning results in replicate-index order.
pub fn run_replicates<T, F>(
    law: &WeightLaw,
    n: usize,
    mode: Mode,
    seed: u64,
    replicates: usize,
    f: F,
) -> Result<Vec<T>, SimError>
where
    T: Send,
    F: Fn(usize, &Wrt) -> T + Sync,
{
    if n == 0 {
        return Err(SimError::ZeroVertices);
    }
    Ok((0..replicates)
        .into_par_iter()
        .map(|r| {
            let tree = generate(law, n, mode, replicate_seed(seed, r as u64))
                .expect("n validated above");
            f(r, &tree)
        })
        .collect())
}

/// As `run_replicates`, but over the replicate-index range [start, end):
/// the substream of index r depends only on (seed, r), so partial runs can
/// be resumed without replaying earlier replicates.
pub fn run_replicates_from<T, F>(
    law: &WeightLaw,
    n: usize,
    mode: Mode,
    seed: u64,
    start: u64,
    end: u64,
    f: F,
) -> Result<Vec<T>, SimError>
where
    T: Send,
    F: Fn(&Wrt) -> T + Sync,
{
    if n == 0 {
        return Err(SimError::ZeroVertices);
    }
    Ok((start..end)
        .into_par_iter()
        .map(|r| {
            let tree = generate(law, n, mode, replicate_seed(seed, r)).expect("n validated above");
            f(&tree)
        })
        .collect())
}
