//! Census extraction from simulated trees and goodness-of-fit machinery
//! against the Poisson-limit predictions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotics::Centering;
use crate::simulate::Wrt;
use crate::specfun;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("window [{0}, {1}] is empty")]
    EmptyWindow(i64, i64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("bucket {0} outside the census window")]
    OutsideWindow(i64),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}

/// Per-tree bucket counts X_i and X_{>=i} relative to the floored centering,
/// plus the maximum in-degree and the number of vertices attaining it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeCensus {
    pub floor_center: i64,
    pub i_lo: i64,
    pub i_hi: i64,
    pub xi: Vec<u64>,
    pub x_geq: Vec<u64>,
    pub max_degree: u32,
    pub num_maximizers: u64,
}

impl DegreeCensus {
    pub fn xi(&self, i: i64) -> Result<u64, StatsError> {
        self.slot(i).map(|s| self.xi[s])
    }

    pub fn x_geq(&self, i: i64) -> Result<u64, StatsError> {
        self.slot(i).map(|s| self.x_geq[s])
    }

    fn slot(&self, i: i64) -> Result<usize, StatsError> {
        if i < self.i_lo || i > self.i_hi {
            return Err(StatsError::OutsideWindow(i));
        }
        Ok((i - self.i_lo) as usize)
    }
}

/// Single pass over the in-degrees; buckets are inDegree - floor(c(n)).
/// X_{>=i} counts every vertex at or above bucket i, including those above
/// the window's upper edge.
pub fn census(tree: &Wrt, centering: &Centering, window: (i64, i64)) -> Result<DegreeCensus, StatsError> {
    let (i_lo, i_hi) = window;
    if i_lo > i_hi {
        return Err(StatsError::EmptyWindow(i_lo, i_hi));
    }
    let floor_center = centering.c_of_n(tree.n as u64).floor() as i64;
    let width = (i_hi - i_lo + 1) as usize;
    let mut xi = vec![0u64; width];
    let mut above = 0u64; // strictly above i_hi
    let mut max_degree = 0u32;
    let mut num_maximizers = 0u64;
    for &d in &tree.in_degrees {
        if d > max_degree {
            max_degree = d;
            num_maximizers = 1;
        } else if d == max_degree {
            num_maximizers += 1;
        }
        let bucket = d as i64 - floor_center;
        if bucket > i_hi {
            above += 1;
        } else if bucket >= i_lo {
            xi[(bucket - i_lo) as usize] += 1;
        }
    }
    let mut x_geq = vec![0u64; width];
    let mut acc = above;
    for s in (0..width).rev() {
        acc += xi[s];
        x_geq[s] = acc;
    }
    Ok(DegreeCensus {
        floor_center,
        i_lo,
        i_hi,
        xi,
        x_geq,
        max_degree,
        num_maximizers,
    })
}

/// (x)_a = x(x-1)...(x-a+1), with (x)_0 = 1 and zero when a > x.
pub fn falling_factorial(x: u64, a: u64) -> f64 {
    if a > x {
        return 0.0;
    }
    (0..a).map(|m| (x - m) as f64).product()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Orders of a joint factorial moment: a_i per exact bucket, and optionally
/// an order on a tail count X_{>=i'}.
#[derive(Debug, Clone, Default)]
pub struct MomentOrders {
    pub exact: Vec<(i64, u64)>,
    pub tail: Option<(i64, u64)>,
}

/// Sample mean and stderr of prod_i (X_i)_{a_i} * (X_{>=i'})_{a_{i'}} across
/// replicate censuses.
pub fn factorial_moment_estimate(
    censuses: &[DegreeCensus],
    orders: &MomentOrders,
) -> Result<MomentEstimate, StatsError> {
    if censuses.len() < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: censuses.len() });
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for c in censuses {
        let mut prod = 1.0;
        for &(i, a) in &orders.exact {
            prod *= falling_factorial(c.xi(i)?, a);
        }
        if let Some((i, a)) = orders.tail {
            prod *= falling_factorial(c.x_geq(i)?, a);
        }
        sum += prod;
        sumsq += prod * prod;
    }
    let r = censuses.len() as f64;
    let mean = sum / r;
    let var = (sumsq / r - mean * mean).max(0.0) * r / (r - 1.0);
    Ok(MomentEstimate {
        value: mean,
        stderr: (var / r).sqrt(),
        count: censuses.len(),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitReport {
    pub tv_distance: f64,
    pub chi_sq_p_value: f64,
}

fn poisson_pmf(mean: f64, k_max: u64) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(k_max as usize + 1);
    let mut log_p = -mean;
    for k in 0..=k_max {
        pmf.push(log_p.exp());
        log_p += mean.ln() - ((k + 1) as f64).ln();
    }
    pmf
}

/// Empirical-vs-Poisson(mean) total-variation distance and a chi-square
/// p-value with cells pooled to expected count >= 5.
pub fn poisson_fit(samples: &[u64], mean: f64) -> Result<FitReport, StatsError> {
    if samples.len() < 500 {
        return Err(StatsError::TooFewSamples { needed: 500, got: samples.len() });
    }
    if !(mean > 0.0) {
        return Err(StatsError::Degenerate("nonpositive mean"));
    }
    let r = samples.len() as f64;
    let k_max = *samples.iter().max().expect("nonempty");
    let mut counts = vec![0u64; k_max as usize + 1];
    for &s in samples {
        counts[s as usize] += 1;
    }
    let pmf = poisson_pmf(mean, k_max);
    let pmf_tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);

    let mut tv = pmf_tail; // empirical mass beyond k_max is zero
    for k in 0..=k_max as usize {
        tv += (counts[k] as f64 / r - pmf[k]).abs();
    }
    tv *= 0.5;

    // chi-square over cells 0..=k_max plus the upper tail, pooled from the
    // right so every cell has expected count >= 5
    let mut observed: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    observed.push(0.0);
    let mut expected: Vec<f64> = pmf.iter().map(|&p| p * r).collect();
    expected.push(pmf_tail * r);
    let mut pooled_obs = Vec::new();
    let mut pooled_exp = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for (o, e) in observed.into_iter().zip(expected) {
        acc_o += o;
        acc_e += e;
        if acc_e >= 5.0 {
            pooled_obs.push(acc_o);
            pooled_exp.push(acc_e);
            (acc_o, acc_e) = (0.0, 0.0);
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        match (pooled_obs.last_mut(), pooled_exp.last_mut()) {
            (Some(o), Some(e)) => {
                *o += acc_o;
                *e += acc_e;
            }
            _ => return Err(StatsError::Degenerate("all cells below pooling threshold")),
        }
    }
    if pooled_obs.len() < 2 {
        return Err(StatsError::Degenerate("fewer than two pooled cells"));
    }
    let stat: f64 = pooled_obs
        .iter()
        .zip(&pooled_exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = (pooled_obs.len() - 1) as f64;
    let p_value = specfun::gamma_q(dof / 2.0, stat / 2.0).map_err(|_| StatsError::Degenerate("chi-square tail"))?;
    Ok(FitReport { tv_distance: tv, chi_sq_p_value: p_value })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalReport {
    pub ks_stat: f64,
    pub standardized_skew: f64,
}

/// One-sample KS of the standardized samples against N(0,1), plus the sample
/// skewness of the standardized values.
pub fn normality_check(samples: &[f64], predicted_mean: f64, predicted_sd: f64) -> Result<NormalReport, StatsError> {
    if !(predicted_sd > 0.0) {
        return Err(StatsError::Degenerate("nonpositive predicted sd"));
    }
    if samples.len() < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: samples.len() });
    }
    let mut z: Vec<f64> = samples.iter().map(|&x| (x - predicted_mean) / predicted_sd).collect();
    z.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let r = z.len() as f64;
    let mut ks: f64 = 0.0;
    for (idx, &v) in z.iter().enumerate() {
        let cdf = specfun::std_normal_cdf(v);
        let hi = (idx + 1) as f64 / r - cdf;
        let lo = cdf - idx as f64 / r;
        ks = ks.max(hi).max(lo);
    }
    let mean = z.iter().sum::<f64>() / r;
    let m2 = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r;
    let m3 = z.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / r;
    let skew = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    Ok(NormalReport { ks_stat: ks, standardized_skew: skew })
}
