//! Exact small-n ground truth: exhaustive enumeration over attachment
//! sequences and a Poisson-binomial dynamic program for conditional degree
//! laws. Vertices are 0-indexed with the root at 0, matching the simulator.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::simulate::replicate_seed;
use crate::weights::WeightLaw;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration supports n <= 8, got {0}")]
    TooLarge(usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    BadVertex { vertex: usize, n: usize },
    #[error("need at least {needed} weight replicates, got {got}")]
    TooFewReplicates { needed: usize, got: usize },
}

/// Exact joint pmf of the in-degrees of `targets` under the conditional law
/// given fixed weights.
#[derive(Debug, Clone)]
pub struct JointDegreePmf {
    pub targets: Vec<usize>,
    pub table: HashMap<Vec<u32>, f64>,
}

impl JointDegreePmf {
    pub fn total_mass(&self) -> f64 {
        self.table.values().sum()
    }

    /// Marginal pmf of one target, indexed by degree.
    pub fn marginal(&self, target: usize) -> Option<Vec<f64>> {
        let slot = self.targets.iter().position(|&t| t == target)?;
        let max_deg = self.table.keys().map(|d| d[slot]).max()? as usize;
        let mut pmf = vec![0.0; max_deg + 1];
        for (degs, p) in &self.table {
            pmf[degs[slot] as usize] += p;
        }
        Some(pmf)
    }
}

/// Enumerates all prod_{i=1}^{n-1} i parent sequences via a mixed-radix
/// counter (radix i at position i); each sequence has probability
/// prod_i W_{p_i}/S_i, accumulated in log space.
pub fn enumerate_exact(weights: &[f64], targets: &[usize]) -> Result<JointDegreePmf, OracleError> {
    let n = weights.len();
    if n > 8 {
        return Err(OracleError::TooLarge(n));
    }
    for &t in targets {
        if t >= n {
            return Err(OracleError::BadVertex { vertex: t, n });
        }
    }
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let log_s: Vec<f64> = {
        let mut prefix = 0.0;
        weights
            .iter()
            .map(|w| {
                prefix += w;
                prefix.ln()
            })
            .collect()
    };
    let mut table: HashMap<Vec<u32>, f64> = HashMap::new();
    if n <= 1 {
        table.insert(vec![0; targets.len()], 1.0);
        return Ok(JointDegreePmf { targets: targets.to_vec(), table });
    }
    let mut parents = vec![0usize; n]; // parents[i] < i for i >= 1
    loop {
        let mut log_p = 0.0;
        let mut degs = vec![0u32; n];
        for i in 1..n {
            log_p += log_w[parents[i]] - log_s[i - 1];
            degs[parents[i]] += 1;
        }
        let key: Vec<u32> = targets.iter().map(|&t| degs[t]).collect();
        *table.entry(key).or_insert(0.0) += log_p.exp();

        // mixed-radix increment
        let mut pos = 1;
        loop {
            if pos == n {
                return Ok(JointDegreePmf { targets: targets.to_vec(), table });
            }
            parents[pos] += 1;
            if parents[pos] < pos.max(1) {
                break;
            }
            parents[pos] = 0;
            pos += 1;
        }
    }
}

// degrees beyond this are dropped; their mass is far below any tolerance used
const PMF_CAP: usize = 128;

/// Pmf of a sum of independent Bernoulli(p_i) by the standard convolution DP.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![1.0f64];
    for &p in probs {
        let len = (pmf.len() + 1).min(PMF_CAP);
        let mut next = vec![0.0; len];
        for (k, &v) in pmf.iter().enumerate() {
            next[k] += v * (1.0 - p);
            if k + 1 < len {
                next[k + 1] += v * p;
            }
        }
        pmf = next;
    }
    pmf
}

/// Exact marginal law of vertex j's in-degree given fixed weights: increments
/// are independent Bernoulli(W_j/S_{i-1}) over arrivals i > j.
pub fn poisson_binomial_marginal(weights: &[f64], j: usize) -> Result<Vec<f64>, OracleError> {
    let n = weights.len();
    if j >= n {
        return Err(OracleError::BadVertex { vertex: j, n });
    }
    let mut prefix = vec![0.0; n];
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        prefix[i] = acc;
    }
    let probs: Vec<f64> = (j + 1..n)
        .map(|i| weights[j] / prefix[i - 1])
        .collect();
    Ok(poisson_binomial_pmf(&probs))
}

#[derive(Debug, Clone)]
pub struct UnconditionalPmf {
    pub pmf: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicates: usize,
}

/// Average of the conditional marginal over sampled weight vectors; the
/// attachment layer is integrated exactly, so only weight noise remains.
pub fn unconditional_degree_law(
    law: &WeightLaw,
    n: usize,
    j: usize,
    replicates: usize,
    seed: u64,
) -> Result<UnconditionalPmf, OracleError> {
    if replicates < 2 {
        return Err(OracleError::TooFewReplicates { needed: 2, got: replicates });
    }
    if j >= n {
        return Err(OracleError::BadVertex { vertex: j, n });
    }
    let per_rep: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(replicate_seed(seed, r as u64));
            let weights: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            poisson_binomial_marginal(&weights, j).expect("j < n checked")
        })
        .collect();
    let width = per_rep.iter().map(Vec::len).max().expect("replicates >= 2");
    let r = replicates as f64;
    let mut sum = vec![0.0; width];
    for rep in &per_rep {
        for k in 0..width {
            sum[k] += rep.get(k).copied().unwrap_or(0.0);
        }
    }
    let pmf: Vec<f64> = sum.iter().map(|s| s / r).collect();
    // Two-pass variance: exact zero when every replicate agrees, no
    // catastrophic cancellation for nearly deterministic cells.
    let mut ss = vec![0.0; width];
    for rep in &per_rep {
        for k in 0..width {
            let d = rep.get(k).copied().unwrap_or(0.0) - pmf[k];
            ss[k] += d * d;
        }
    }
    let stderr: Vec<f64> = ss.iter().map(|&s| (s / (r - 1.0) / r).sqrt()).collect();
    Ok(UnconditionalPmf { pmf, stderr, replicates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::simulate::{self, Mode};

    #[test]
    fn three_vertices_equal_weights() {
        let pmf = enumerate_exact(&[1.0, 1.0, 1.0], &[0]).unwrap();
        assert!((pmf.table[&vec![1]] - 0.5).abs() < 1e-14);
        assert!((pmf.table[&vec![2]] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn three_vertices_skewed_weights() {
        let pmf = enumerate_exact(&[1.0, 0.5, 0.5], &[0]).unwrap();
        assert!((pmf.table[&vec![2]] - 2.0 / 3.0).abs() < 1e-14);
        assert!((pmf.table[&vec![1]] - 1.0 / 3.0).abs() < 1e-14);
        let marg = poisson_binomial_marginal(&[1.0, 0.5, 0.5], 0).unwrap();
        assert!((marg[1] - 1.0 / 3.0).abs() < 1e-14);
        assert!((marg[2] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn two_vertices_deterministic() {
        let pmf = enumerate_exact(&[0.3, 0.9], &[0]).unwrap();
        assert!((pmf.table[&vec![1]] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn last_vertex_gets_nothing() {
        let marg = poisson_binomial_marginal(&[1.0, 0.5, 0.5], 2).unwrap();
        assert!((marg[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cross_oracle_agreement() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for trial in 0..20 {
            let n = 3 + trial % 5; // n in 3..=7
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..=1.0)).collect();
            let targets: Vec<usize> = (0..n).collect();
            let joint = enumerate_exact(&weights, &targets).unwrap();
            assert!((joint.total_mass() - 1.0).abs() < 1e-12);
            for j in 0..n {
                let from_joint = joint.marginal(j).unwrap();
                let from_dp = poisson_binomial_marginal(&weights, j).unwrap();
                for k in 0..from_joint.len().max(from_dp.len()) {
                    let a = from_joint.get(k).copied().unwrap_or(0.0);
                    let b = from_dp.get(k).copied().unwrap_or(0.0);
                    assert!((a - b).abs() < 1e-12, "n={n} j={j} k={k}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn rejects_large_n() {
        assert!(matches!(
            enumerate_exact(&[1.0; 9], &[0]),
            Err(OracleError::TooLarge(9))
        ));
    }

    #[test]
    fn unconditional_constant_weights_no_noise() {
        let law = WeightLaw::constant(1.0).unwrap();
        let out = unconditional_degree_law(&law, 50, 3, 10, 1).unwrap();
        assert!(out.stderr.iter().all(|&s| s < 1e-14));
        assert!((out.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rrt_uniform_vertex_degree_law() {
        // uniform-over-j average of the marginal vs the limit 2^{-(k+1)},
        // built incrementally: vertex j's pmf is vertex (j+1)'s pmf
        // convolved with one extra Bernoulli(1/(j+1))
        let n = 10_000usize;
        let cap = 40;
        let mut pmf = vec![0.0; cap];
        pmf[0] = 1.0; // vertex n-1
        let mut avg = pmf.clone();
        for j in (0..n - 1).rev() {
            // arrival i = j+1 attaches to j with probability 1/S_j = 1/(j+1)
            let prob = 1.0 / (j + 1) as f64;
            let mut next = vec![0.0; cap];
            for k in 0..cap {
                next[k] += pmf[k] * (1.0 - prob);
                if k + 1 < cap {
                    next[k + 1] += pmf[k] * prob;
                }
            }
            pmf = next;
            for k in 0..cap {
                avg[k] += pmf[k];
            }
        }
        for v in avg.iter_mut() {
            *v /= n as f64;
        }
        // sanity: matches the direct DP for one j
        let direct = poisson_binomial_marginal(&vec![1.0; 20], 7).unwrap();
        let probs: Vec<f64> = (8..20).map(|i| 1.0 / i as f64).collect();
        let rebuilt = poisson_binomial_pmf(&probs);
        for k in 0..direct.len() {
            assert!((direct[k] - rebuilt[k]).abs() < 1e-14);
        }
        for k in 0..=8usize {
            let limit = 0.5f64.powi(k as i32 + 1);
            assert!(
                (avg[k] - limit).abs() <= 0.003,
                "k={k}: {} vs {limit}",
                avg[k]
            );
        }
    }

    #[test]
    fn simulation_matches_oracle_beta() {
        // MC tree frequencies vs the Rao-Blackwellized oracle at n = 10^3
        let law = WeightLaw::beta(2.0, 3.0).unwrap();
        let n = 1000;
        let reps = 4000usize;
        for j in [0usize, n / 2, n - 1] {
            let oracle = unconditional_degree_law(&law, n, j, 20_000, 99).unwrap();
            let counts = simulate::run_replicates(&law, n, Mode::FixedOne, 7, reps, |_, tree| {
                tree.in_degrees[j].min(30) as usize
            })
            .unwrap();
            let mut hist = vec![0u64; 32];
            for c in counts {
                hist[c] += 1;
            }
            for k in 0..10usize {
                let p = oracle.pmf.get(k).copied().unwrap_or(0.0);
                let emp = hist[k] as f64 / reps as f64;
                let se = (p * (1.0 - p) / reps as f64).sqrt() + oracle.stderr.get(k).copied().unwrap_or(0.0);
                assert!(
                    (emp - p).abs() <= 3.0 * se + 1e-3,
                    "j={j} k={k}: emp {emp} vs oracle {p} (se {se})"
                );
            }
        }
    }
}
