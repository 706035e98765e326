//! Block coordinate descent for group-sparse CP regression.
//!
//! The fitted objective is
//!
//! ```text
//! f̂(U, η) = ½ Σ_n (y_n − ŷ(ξ_n))² + λ ĝ(U, η)
//! ĝ(U, η) = ½ Σ_r v_r² / η_r + ½ ‖η‖_β,        β = q / (2 − q)
//! ```
//!
//! with `v_r` the group norm of rank-one component `r`. Minimizing `ĝ` over
//! `η` gives back `‖v‖_q`, so the smooth surrogate drives whole rank-one
//! components to zero. Each factor block is an exact ridge solve, `η` has a
//! closed-form minimizer, and `λ = λ0 · max η` is refreshed once per sweep.
//!
//! [`SolverMode::FixedRankRidge`] replaces `ĝ` by `½ Σ_k ‖U^(k)‖_F²` at a fixed
//! `λ = λ0` and keeps every component.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::{debug, warn};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::BasisBundle;
use crate::cpmodel::{self, CpModel, FitMeta};
use crate::error::{Error, Result};
use crate::paramspace::{ParameterSpace, SampleSet};
use crate::rng::{stream_rng, Stream};

/// Candidate `λ0` values for cross-validation: 7 points log-spaced over
/// `[1e-4, 1e1]`.
pub fn lambda0_grid() -> [f64; 7] {
    std::array::from_fn(|i| 10f64.powf(-4.0 + 5.0 * i as f64 / 6.0))
}

const CV_FOLDS: usize = 5;

/// Spread of the random perturbation applied to the initial factors.
/// Scaled by `1/sqrt(d(p+1))` so the row products stay within a few
/// percent of one regardless of dimension.
const INIT_SPREAD: f64 = 1.0;

const TRACE_TAIL: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    #[default]
    GroupSparse,
    #[serde(alias = "fixed-rank")]
    FixedRankRidge,
}

impl SolverMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverMode::GroupSparse => "group-sparse",
            SolverMode::FixedRankRidge => "fixed-rank-ridge",
        }
    }
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "group-sparse" => Ok(SolverMode::GroupSparse),
            "fixed-rank" | "fixed-rank-ridge" => Ok(SolverMode::FixedRankRidge),
            other => Err(Error::InvalidParameter(format!(
                "unknown solver mode {other:?} (expected group-sparse or fixed-rank)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Sparsity exponent in `(0, 1]`.
    pub q: f64,
    pub lambda0: f64,
    /// Initial CP rank.
    pub rank: usize,
    /// Relative floor of the `η` update: `ε = epsilon · (1 + max_r v_r)`.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once `max_k ‖ΔU^(k)‖_F / (1 + ‖U^(k)‖_F)` drops below this.
    pub tol: f64,
    pub prune_tau: f64,
    pub mode: SolverMode,
    /// When set, a group-sparse fit is followed by a warm-started refit at
    /// this smaller `λ0`. The first stage settles the rank, the second
    /// removes most of the shrinkage bias.
    pub polish_lambda0: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            q: 0.5,
            lambda0: 1e-3,
            rank: 5,
            epsilon: 1e-12,
            max_iters: 100,
            tol: 1e-4,
            prune_tau: cpmodel::DEFAULT_PRUNE_TAU,
            mode: SolverMode::GroupSparse,
            polish_lambda0: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.q > 0.0 && self.q <= 1.0) {
            return bad(format!("q must lie in (0, 1], got {}", self.q));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return bad(format!("lambda0 must be positive, got {}", self.lambda0));
        }
        if self.rank == 0 {
            return bad("initial rank must be at least 1".into());
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if let Some(l) = self.polish_lambda0 {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("polish_lambda0 must be positive, got {l}"));
            }
        }
        if !(0.0..1.0).contains(&self.prune_tau) {
            return bad(format!("prune_tau must lie in [0, 1), got {}", self.prune_tau));
        }
        Ok(())
    }
}

/// Which block a trace entry follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Block {
    Factor(usize),
    Eta,
}

/// Objective value after one block update. Entries sharing `lambda` belong
/// to one descent segment. `slack` is `λεR` on `η` updates: the allowance for
/// the `η` floor, which bounds its cost for `q = 1`. For `q < 1` the floor
/// can cost more once a column has died.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub block: Block,
    pub objective: f64,
    pub lambda: f64,
    pub slack: f64,
}

/// One fit-log row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterLog {
    pub iter: usize,
    pub objective: f64,
    pub rank: usize,
    pub lambda: f64,
    pub max_eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub eta: Vec<f64>,
    pub lambda: f64,
    /// Objective at the end of every sweep.
    pub objective_trace: Vec<f64>,
    pub iter: usize,
    pub converged: bool,
    /// Objective after every block update.
    pub blocks: Vec<TraceEntry>,
    pub log: Vec<IterLog>,
}

impl SolverState {
    pub fn write_fit_log<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.log {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `‖η‖_β = (Σ η_r^β)^{1/β}`; a quasi-norm for `β < 1`.
pub fn beta_norm(eta: &[f64], beta: f64) -> f64 {
    eta.iter().map(|e| e.powf(beta)).sum::<f64>().powf(1.0 / beta)
}

/// `‖v‖_q`.
pub fn lq_norm(v: &[f64], q: f64) -> f64 {
    beta_norm(v, q)
}

/// `ĝ = ½ Σ v_r²/η_r + ½ ‖η‖_{q/(2−q)}`.
pub fn regularizer(v: &[f64], eta: &[f64], q: f64) -> f64 {
    let beta = q / (2.0 - q);
    let quad: f64 = v.iter().zip(eta).map(|(v, e)| v * v / e).sum();
    0.5 * quad + 0.5 * beta_norm(eta, beta)
}

/// Minimizer of `ĝ` over `η`, shifted by `eps`:
/// `η_r = v_r^{2−q} ‖v‖_q^{q−1} + ε`.
pub fn update_eta(v: &[f64], q: f64, eps: f64) -> Vec<f64> {
    let norm = lq_norm(v, q);
    if norm == 0.0 {
        return vec![eps; v.len()];
    }
    let scale = norm.powf(q - 1.0);
    v.iter().map(|x| x.powf(2.0 - q) * scale + eps).collect()
}

/// `λ = λ0 · max η`.
pub fn update_lambda(lambda0: f64, eta: &[f64]) -> f64 {
    lambda0 * eta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// The floor `ε = rel · (1 + max v)`.
pub fn eta_floor(v: &[f64], rel: f64) -> f64 {
    rel * (1.0 + v.iter().copied().fold(0.0, f64::max))
}

/// `½ Σ (y_n − ŷ_n)² + λ ĝ(U, η)`.
pub fn objective(model: &CpModel, data: &SampleSet, eta: &[f64], lambda: f64, q: f64) -> Result<f64> {
    let h = half_sse(model, data)?;
    Ok(h + lambda * regularizer(&model.group_norms(), eta, q))
}

/// `½ Σ (y_n − ŷ_n)² + (λ/2) Σ_k ‖U^(k)‖_F²`.
pub fn ridge_objective(model: &CpModel, data: &SampleSet, lambda: f64) -> Result<f64> {
    let h = half_sse(model, data)?;
    let reg: f64 = model.factors().iter().map(|u| u.norm_squared()).sum();
    Ok(h + 0.5 * lambda * reg)
}

fn half_sse(model: &CpModel, data: &SampleSet) -> Result<f64> {
    let y = data.labeled_outputs()?;
    let mut h = 0.0;
    for (n, yn) in y.iter().enumerate() {
        let r = yn - model.evaluate(&data.phys_row(n));
        h += r * r;
    }
    Ok(0.5 * h)
}

/// Mode-`k` regression matrix: row `n` is `vec(B̃_(k)(ξ_n))ᵀ`, entry
/// `(i, r)` of the block at column `r(p+1) + i`.
pub fn design_matrix(model: &CpModel, data: &SampleSet, k: usize) -> DMatrix<f64> {
    let (w, rank) = (model.width(), model.rank());
    let mut phi = DMatrix::zeros(data.len(), w * rank);
    for n in 0..data.len() {
        let b = model.khatri_rao_row(k, &data.phys_row(n));
        for r in 0..rank {
            for i in 0..w {
                phi[(n, r * w + i)] = b[(i, r)];
            }
        }
    }
    phi
}

/// Regression matrix of the very first cold-start update: every other
/// factor contributes an all-ones row product, so row `n` is `R` stacked
/// copies of `φ^(k)(ξ_k^n)`.
pub fn init_first_fit(data: &SampleSet, bases: &BasisBundle, k: usize, rank: usize) -> DMatrix<f64> {
    let w = bases.width();
    let mut phi = DMatrix::zeros(data.len(), w * rank);
    let mut buf = vec![0.0; w];
    for n in 0..data.len() {
        bases.get(k).eval_into(data.phys_points()[(n, k)], &mut buf);
        for r in 0..rank {
            for i in 0..w {
                phi[(n, r * w + i)] = buf[i];
            }
        }
    }
    phi
}

/// Exact group-sparse update of `U^(k)` with the other factors held fixed.
pub fn update_factor(
    model: &mut CpModel,
    data: &SampleSet,
    k: usize,
    eta: &[f64],
    lambda: f64,
) -> Result<()> {
    let design = Design::new(model.bases(), data)?;
    let rank = model.rank();
    let rows = design.row_products(model.factors());
    let mut others = vec![1.0; design.n * rank];
    for n in 0..design.n {
        for j in (0..design.d).filter(|&j| j != k) {
            let row = design.rows_at(&rows, rank, n, j);
            for r in 0..rank {
                others[n * rank + r] *= row[r];
            }
        }
    }
    let weights: Vec<f64> = eta.iter().map(|e| lambda / e).collect();
    let u = design.solve_mode(k, rank, &others, &weights)?;
    model.factors_mut()[k] = u;
    Ok(())
}

/// Fits a CP surrogate to the labeled rows of `data`.
///
/// A cold start (no `warm_start`) begins with every other factor's row
/// product equal to one for the first mode, plus a small seeded perturbation
/// of the remaining factors so the rank-one components can separate. A warm
/// start reuses the given factors, sets `η` from their group norms and keeps
/// their rank.
pub fn fit(
    data: &SampleSet,
    space: &ParameterSpace,
    degree: usize,
    config: &SolverConfig,
    warm_start: Option<&CpModel>,
    seed: u64,
) -> Result<(CpModel, SolverState)> {
    config.validate()?;
    let (model, state) = fit_stage(data, space, degree, config, warm_start, seed)?;
    let polish = match config.polish_lambda0 {
        Some(l) if config.mode == SolverMode::GroupSparse => l,
        _ => return Ok((model, state)),
    };
    let stage = SolverConfig {
        lambda0: polish,
        polish_lambda0: None,
        ..config.clone()
    };
    let (mut model, second) = fit_stage(data, space, degree, &stage, Some(&model), seed)?;
    let offset = state.iter;
    let mut merged = state;
    merged.blocks.extend(second.blocks.into_iter().map(|mut b| {
        b.iter += offset;
        b
    }));
    merged.log.extend(second.log.into_iter().map(|mut l| {
        l.iter += offset;
        l
    }));
    merged.objective_trace.extend(second.objective_trace);
    merged.iter += second.iter;
    merged.converged = second.converged;
    merged.eta = second.eta;
    merged.lambda = second.lambda;
    let tail_start = merged.objective_trace.len().saturating_sub(TRACE_TAIL);
    model.set_meta(Some(FitMeta {
        seed,
        q: config.q,
        lambda0: config.lambda0,
        mode: config.mode.as_str().to_string(),
        objective_trace_tail: merged.objective_trace[tail_start..].to_vec(),
    }));
    Ok((model, merged))
}

fn fit_stage(
    data: &SampleSet,
    space: &ParameterSpace,
    degree: usize,
    config: &SolverConfig,
    warm_start: Option<&CpModel>,
    seed: u64,
) -> Result<(CpModel, SolverState)> {
    if data.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: data.dim(),
        });
    }
    let bases = BasisBundle::new(space, degree);
    let design = Design::new(&bases, data)?;
    let (d, w) = (space.dim(), degree + 1);
    let sparse = config.mode == SolverMode::GroupSparse;

    let (mut factors, mut eta) = match warm_start {
        Some(m) => {
            if m.dim() != d || m.degree() != degree {
                return Err(Error::InvalidParameter(format!(
                    "warm start has d={}, p={}; expected d={d}, p={degree}",
                    m.dim(),
                    m.degree()
                )));
            }
            let v = m.group_norms();
            let eta = if sparse {
                update_eta(&v, config.q, eta_floor(&v, config.epsilon))
            } else {
                vec![1.0; m.rank()]
            };
            (m.factors().to_vec(), eta)
        }
        None => (
            initial_factors(d, w, config.rank, seed),
            vec![1.0; config.rank],
        ),
    };
    let cold = warm_start.is_none();
    let rank = factors[0].ncols();
    let mut lambda = if sparse {
        update_lambda(config.lambda0, &eta)
    } else {
        config.lambda0
    };

    let mut state = SolverState {
        eta: Vec::new(),
        lambda,
        objective_trace: Vec::new(),
        iter: 0,
        converged: false,
        blocks: Vec::new(),
        log: Vec::new(),
    };
    let mut rows = design.row_products(&factors);
    for it in 0..config.max_iters {
        let old = factors.clone();
        let weights: Vec<f64> = if sparse {
            eta.iter().map(|e| lambda / e).collect()
        } else {
            vec![lambda; rank]
        };
        let reg_value = |f: &[DMatrix<f64>], eta: &[f64], lambda: f64| {
            if sparse {
                lambda * regularizer(&cpmodel::group_norms(f), eta, config.q)
            } else {
                0.5 * lambda * f.iter().map(|u| u.norm_squared()).sum::<f64>()
            }
        };
        let mut h = 0.0;
        design.sweep(&mut factors, &mut rows, &weights, cold && it == 0, |k, f, hk| {
            h = hk;
            state.blocks.push(TraceEntry {
                iter: it,
                block: Block::Factor(k),
                objective: hk + reg_value(f, &eta, lambda),
                lambda,
                slack: 0.0,
            });
        })?;

        let v = cpmodel::group_norms(&factors);
        if sparse {
            let eps = eta_floor(&v, config.epsilon);
            eta = update_eta(&v, config.q, eps);
            state.blocks.push(TraceEntry {
                iter: it,
                block: Block::Eta,
                objective: h + reg_value(&factors, &eta, lambda),
                lambda,
                slack: lambda * eps * rank as f64,
            });
            lambda = update_lambda(config.lambda0, &eta);
        }
        let objective = h + reg_value(&factors, &eta, lambda);
        let vmax = v.iter().copied().fold(0.0, f64::max);
        let live = v.iter().filter(|&&x| !(x < config.prune_tau * vmax)).count();
        state.objective_trace.push(objective);
        state.log.push(IterLog {
            iter: it + 1,
            objective,
            rank: live,
            lambda,
            max_eta: eta.iter().copied().fold(0.0, f64::max),
        });
        state.iter = it + 1;

        let change = factors
            .iter()
            .zip(&old)
            .map(|(new, old)| (new - old).norm() / (1.0 + old.norm()))
            .fold(0.0, f64::max);
        debug!("iter {}: objective {objective:.6e}, change {change:.3e}, rank {live}", it + 1);
        if change < config.tol {
            state.converged = true;
            break;
        }
    }
    if !state.converged {
        warn!(
            "block coordinate descent stopped at max_iters={} before reaching tol={}",
            config.max_iters, config.tol
        );
    }

    let mut model = CpModel::new(space.clone(), degree, factors)?;
    if sparse {
        let keep = model.kept_columns(config.prune_tau);
        if keep.len() < model.rank() {
            debug!("pruned rank {} -> {}", model.rank(), keep.len());
            model = model.prune_rank(config.prune_tau);
            eta = keep.iter().map(|&r| eta[r]).collect();
        }
    }
    state.eta = eta;
    state.lambda = lambda;
    let tail_start = state.objective_trace.len().saturating_sub(TRACE_TAIL);
    model.set_meta(Some(FitMeta {
        seed,
        q: config.q,
        lambda0: config.lambda0,
        mode: config.mode.as_str().to_string(),
        objective_trace_tail: state.objective_trace[tail_start..].to_vec(),
    }));
    Ok((model, state))
}

/// `e_1 1ᵀ` for every mode, plus a seeded perturbation on modes `2..d`.
fn initial_factors(d: usize, w: usize, rank: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = stream_rng(seed, Stream::FitInit, 0);
    let spread = INIT_SPREAD / ((d * w) as f64).sqrt();
    (0..d)
        .map(|k| {
            DMatrix::from_fn(w, rank, |i, _| {
                let base = if i == 0 { 1.0 } else { 0.0 };
                if k == 0 {
                    base
                } else {
                    base + spread * rng.sample::<f64, _>(StandardNormal)
                }
            })
        })
        .collect()
}

/// Outcome of [`cross_validate_lambda0`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub best: f64,
    /// `(λ0, validation RMSE)` for every grid point.
    pub scores: Vec<(f64, f64)>,
}

/// `n` points log-spaced from `10^lo` to `10^hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..n)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Picks `λ0` from `grid` (usually [`lambda0_grid`]) by 5-fold
/// cross-validation on RMSE. Ties go to the smaller value.
pub fn cross_validate_lambda0(
    data: &SampleSet,
    space: &ParameterSpace,
    degree: usize,
    config: &SolverConfig,
    grid: &[f64],
    seed: u64,
) -> Result<CvReport> {
    if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter("lambda0 grid must hold positive values".into()));
    }
    let y = data.labeled_outputs()?;
    let n = y.len();
    if n < CV_FOLDS {
        return Err(Error::InvalidParameter(format!(
            "cross-validation needs at least {CV_FOLDS} samples, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, Stream::CrossValidation, 0));
    let folds: Vec<Vec<usize>> = (0..CV_FOLDS)
        .map(|f| order.iter().skip(f).step_by(CV_FOLDS).copied().collect())
        .collect();

    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut scores = Vec::with_capacity(sorted.len());
    for lambda0 in sorted {
        let cfg = SolverConfig {
            lambda0,
            ..config.clone()
        };
        let mut sse = 0.0;
        for (f, held) in folds.iter().enumerate() {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let (model, _) = fit(&data.subset(&train), space, degree, &cfg, None, seed)?;
            for &i in held {
                let r = y[i] - model.evaluate(&data.phys_row(i));
                sse += r * r;
            }
        }
        let rmse = (sse / n as f64).sqrt();
        debug!("lambda0 {lambda0:e}: validation rmse {rmse:.6e}");
        scores.push((lambda0, rmse));
    }
    let best = scores
        .iter()
        .fold(None::<(f64, f64)>, |acc, &s| match acc {
            Some(a) if a.1 <= s.1 => Some(a),
            _ => Some(s),
        })
        .map(|s| s.0)
        .unwrap_or(config.lambda0);
    Ok(CvReport { best, scores })
}

/// Basis values and outputs of the training set, computed once per fit.
struct Design {
    n: usize,
    d: usize,
    w: usize,
    /// `phi[(n*d + k)*w + i] = φ_i^(k)(ξ_k^n)`.
    phi: Vec<f64>,
    y: Vec<f64>,
}

impl Design {
    fn new(bases: &BasisBundle, data: &SampleSet) -> Result<Self> {
        let y = data.labeled_outputs()?;
        if y.is_empty() {
            return Err(Error::InvalidParameter("no training samples".into()));
        }
        if data.dim() != bases.dim() {
            return Err(Error::DimensionMismatch {
                expected: bases.dim(),
                got: data.dim(),
            });
        }
        let (n, d, w) = (y.len(), bases.dim(), bases.width());
        let mut phi = vec![0.0; n * d * w];
        let x = data.phys_points();
        for s in 0..n {
            for k in 0..d {
                let off = (s * d + k) * w;
                bases.get(k).eval_into(x[(s, k)], &mut phi[off..off + w]);
            }
        }
        Ok(Self { n, d, w, phi, y })
    }

    fn phi_at(&self, n: usize, k: usize) -> &[f64] {
        let off = (n * self.d + k) * self.w;
        &self.phi[off..off + self.w]
    }

    fn rows_at<'a>(&self, rows: &'a [f64], rank: usize, n: usize, k: usize) -> &'a [f64] {
        let off = (n * self.d + k) * rank;
        &rows[off..off + rank]
    }

    /// `rows[(n*d + k)*R + r] = φ^(k)(ξ_k^n)ᵀ u_r^(k)`.
    fn row_products(&self, factors: &[DMatrix<f64>]) -> Vec<f64> {
        let rank = factors[0].ncols();
        let mut rows = vec![0.0; self.n * self.d * rank];
        for k in 0..self.d {
            self.refresh_mode(&factors[k], k, &mut rows);
        }
        rows
    }

    fn refresh_mode(&self, u: &DMatrix<f64>, k: usize, rows: &mut [f64]) {
        let rank = u.ncols();
        for n in 0..self.n {
            let phi = self.phi_at(n, k);
            let off = (n * self.d + k) * rank;
            for r in 0..rank {
                rows[off + r] = cpmodel::dot_column(phi, u, r);
            }
        }
    }

    /// Solves `(ΦᵀΦ + diag(weights) ⊗ I) vec(U) = Φᵀy` where row `n` of `Φ`
    /// is `φ^(k)(ξ_k^n) ⊗ others[n]`.
    fn solve_mode(&self, k: usize, rank: usize, others: &[f64], weights: &[f64]) -> Result<DMatrix<f64>> {
        let w = self.w;
        let m = rank * w;
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut b = DVector::<f64>::zeros(m);
        let mut feat = vec![0.0; m];
        for n in 0..self.n {
            let phi = self.phi_at(n, k);
            let o = &others[n * rank..(n + 1) * rank];
            for r in 0..rank {
                for i in 0..w {
                    feat[r * w + i] = phi[i] * o[r];
                }
            }
            let yn = self.y[n];
            for c in 0..m {
                let fc = feat[c];
                if fc == 0.0 {
                    continue;
                }
                b[c] += fc * yn;
                let mut col = a.column_mut(c);
                for rr in 0..=c {
                    col[rr] += feat[rr] * fc;
                }
            }
        }
        for c in 0..m {
            for rr in 0..c {
                a[(c, rr)] = a[(rr, c)];
            }
            a[(c, c)] += weights[c / w];
        }
        let x = match Cholesky::new(a.clone()) {
            Some(ch) => ch.solve(&b),
            None => {
                let jitter = 1e-10 * a.trace() / m as f64;
                warn!("normal equations of mode {} not positive definite; adding jitter {jitter:e}", k + 1);
                for c in 0..m {
                    a[(c, c)] += jitter;
                }
                Cholesky::new(a)
                    .ok_or_else(|| {
                        Error::Solver(format!(
                            "normal equations of mode {} are singular after jitter",
                            k + 1
                        ))
                    })?
                    .solve(&b)
            }
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("non-finite solution for mode {}", k + 1)));
        }
        Ok(DMatrix::from_fn(w, rank, |i, r| x[r * w + i]))
    }

    /// One pass over all modes. After mode `k` is updated, `on_block` gets
    /// the mode, the current factors and `½ Σ (y − ŷ)²`.
    fn sweep(
        &self,
        factors: &mut [DMatrix<f64>],
        rows: &mut [f64],
        weights: &[f64],
        cold_first: bool,
        mut on_block: impl FnMut(usize, &[DMatrix<f64>], f64),
    ) -> Result<()> {
        let (n, d) = (self.n, self.d);
        let rank = factors[0].ncols();
        // suffix[(s*(d+1) + k)*R + r] = Π_{j ≥ k} rows[s][j][r]
        let mut suffix = vec![1.0; n * (d + 1) * rank];
        for s in 0..n {
            for k in (0..d).rev() {
                for r in 0..rank {
                    suffix[(s * (d + 1) + k) * rank + r] = suffix[(s * (d + 1) + k + 1) * rank + r]
                        * rows[(s * d + k) * rank + r];
                }
            }
        }
        let mut left = vec![1.0; n * rank];
        let mut others = vec![0.0; n * rank];
        for k in 0..d {
            if cold_first && k == 0 {
                others.fill(1.0);
            } else {
                for s in 0..n {
                    for r in 0..rank {
                        others[s * rank + r] =
                            left[s * rank + r] * suffix[(s * (d + 1) + k + 1) * rank + r];
                    }
                }
            }
            factors[k] = self.solve_mode(k, rank, &others, weights)?;
            self.refresh_mode(&factors[k], k, rows);
            let mut h = 0.0;
            for s in 0..n {
                let mut pred = 0.0;
                for r in 0..rank {
                    let l = &mut left[s * rank + r];
                    *l *= rows[(s * d + k) * rank + r];
                    pred += *l * suffix[(s * (d + 1) + k + 1) * rank + r];
                }
                let res = self.y[s] - pred;
                h += res * res;
            }
            on_block(k, factors, 0.5 * h);
        }
        Ok(())
    }
}
