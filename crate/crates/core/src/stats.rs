//! Statistics of a CP surrogate.
//!
//! With an orthonormal basis, the mean is the `(0,…,0)` coefficient and the
//! second moment is `⟨X, X⟩`, so both reduce to products of the first factor
//! rows and of the per-mode Gram matrices `G^(k) = U^(k)ᵀ U^(k)`. Sobol
//! indices follow the same pattern with mode `j` singled out.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cpmodel::CpModel;
use crate::error::{Error, Result};
use crate::paramspace::mc_uniform_from;
use crate::rng::{stream_rng, Stream};

/// Main and total Sobol indices with the moments they were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolReport {
    pub main: Vec<f64>,
    pub total: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl SobolReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// `index,S,T` rows; `index` counts variables from 1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "S", "T"])?;
        for (j, (s, t)) in self.main.iter().zip(&self.total).enumerate() {
            w.write_record([(j + 1).to_string(), s.to_string(), t.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `E[ŷ] = Σ_r ∏_k u_r^(k)(0)`.
pub fn mean(model: &CpModel) -> f64 {
    (0..model.rank())
        .map(|r| model.factors().iter().map(|u| u[(0, r)]).product::<f64>())
        .sum()
}

fn grams(model: &CpModel) -> Vec<DMatrix<f64>> {
    model.factors().iter().map(|u| u.transpose() * u).collect()
}

fn hadamard_all(mats: &[DMatrix<f64>], rank: usize) -> DMatrix<f64> {
    mats.iter()
        .fold(DMatrix::from_element(rank, rank, 1.0), |acc, g| acc.component_mul(g))
}

/// `Var[ŷ] = Σ_{r1,r2} ∏_k G^(k)_{r1 r2} − E[ŷ]²`.
pub fn variance(model: &CpModel) -> f64 {
    let mu = mean(model);
    hadamard_all(&grams(model), model.rank()).sum() - mu * mu
}

/// Main and total Sobol indices.
///
/// Products over `k ≠ j` use prefix and suffix products, so the cost is
/// `O(d R² (p+1))` and zero factor entries need no special casing.
pub fn sobol(model: &CpModel) -> Result<SobolReport> {
    let (d, rank, w) = (model.dim(), model.rank(), model.width());
    let mu = mean(model);
    let g = grams(model);
    let var = hadamard_all(&g, rank).sum() - mu * mu;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance(var));
    }

    let first: Vec<Vec<f64>> = model
        .factors()
        .iter()
        .map(|u| (0..rank).map(|r| u[(0, r)]).collect())
        .collect();
    let mut first_prefix = vec![vec![1.0; rank]; d + 1];
    let mut gram_prefix = vec![DMatrix::from_element(rank, rank, 1.0); d + 1];
    for k in 0..d {
        first_prefix[k + 1] = (0..rank).map(|r| first_prefix[k][r] * first[k][r]).collect();
        gram_prefix[k + 1] = gram_prefix[k].component_mul(&g[k]);
    }
    let mut first_suffix = vec![1.0; rank];
    let mut gram_suffix = DMatrix::from_element(rank, rank, 1.0);
    let mut main = vec![0.0; d];
    let mut total = vec![0.0; d];
    for j in (0..d).rev() {
        let u = model.factor(j);
        let others: Vec<f64> = (0..rank).map(|r| first_prefix[j][r] * first_suffix[r]).collect();
        let mut s = 0.0;
        for i in 1..w {
            let c: f64 = (0..rank).map(|r| u[(i, r)] * others[r]).sum();
            s += c * c;
        }
        main[j] = s / var;

        let gram_others = gram_prefix[j].component_mul(&gram_suffix);
        let mut cond = 0.0;
        for r1 in 0..rank {
            for r2 in 0..rank {
                cond += first[j][r1] * first[j][r2] * gram_others[(r1, r2)];
            }
        }
        total[j] = 1.0 - (cond - mu * mu) / var;

        for r in 0..rank {
            first_suffix[r] *= first[j][r];
        }
        gram_suffix.component_mul_assign(&g[j]);
    }
    Ok(SobolReport {
        main,
        total,
        mean: mu,
        variance: var,
    })
}

const MC_CHUNK: usize = 8192;

/// Sample mean and unbiased sample variance of the surrogate over `n` draws
/// from its parameter space.
pub fn mc_moments(model: &CpModel, n: usize, seed: u64) -> Result<(f64, f64)> {
    let values = mc_values(model, n, seed)?;
    Ok(sample_moments(&values))
}

/// Surrogate values at `n` seeded draws from its parameter space.
pub fn mc_values(model: &CpModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 draws, got {n}")));
    }
    let d = model.dim();
    let mut rng = stream_rng(seed, Stream::Moments, 0);
    let mut values = Vec::with_capacity(n);
    while values.len() < n {
        let rows = MC_CHUNK.min(n - values.len());
        let unit = mc_uniform_from(&mut rng, rows, d);
        let phys = model.space().to_physical(&unit)?;
        let chunk: Vec<f64> = (0..rows)
            .into_par_iter()
            .map(|i| {
                let x: Vec<f64> = phys.row(i).iter().copied().collect();
                model.evaluate(&x)
            })
            .collect();
        values.extend(chunk);
    }
    Ok(values)
}

/// Mean and unbiased variance.
pub fn sample_moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Silverman's rule `1.06 σ̂ n^{−1/5}`.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let (_, var) = sample_moments(values);
    1.06 * var.sqrt() * (values.len() as f64).powf(-0.2)
}

/// Gaussian kernel density estimate of `values` at every grid point.
pub fn kde(values: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "density estimate needs at least 2 values, got {}",
            values.len()
        )));
    }
    let h = silverman_bandwidth(values);
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("values have no spread".into()));
    }
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .par_iter()
        .map(|&x| {
            values
                .iter()
                .map(|v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect())
}

/// `n` evenly spaced points covering `mean ± 5σ̂` and the data range
/// widened by three bandwidths.
pub fn kde_grid(values: &[f64], n: usize) -> Vec<f64> {
    let (mean, var) = sample_moments(values);
    let (sd, h) = (var.sqrt(), silverman_bandwidth(values));
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = (mean - 5.0 * sd).min(min - 3.0 * h);
    let hi = (mean + 5.0 * sd).max(max + 3.0 * h);
    if n < 2 {
        return vec![0.5 * (lo + hi); n];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
