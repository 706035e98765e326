//! Benchmark functions, reference oracles and the adaptive experiment loop.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use log::info;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cpmodel::CpModel;
use crate::error::{Error, Result};
use crate::paramspace::{latin_hypercube, mc_uniform_from, Marginal, ParameterSpace, SampleSet};
use crate::rng::{stream_rng, Stream};
use crate::sampler;
use crate::solver::{self, SolverConfig};
use crate::stats;

/// Dimension of [`synthetic_100`].
pub const SYNTHETIC_DIM: usize = 100;

/// Monte Carlo reference moments of [`synthetic_100`].
pub const SYNTHETIC_MEAN: f64 = -162.95;
pub const SYNTHETIC_STD: f64 = 4.80;

/// `ξ_20 ~ U[1, 3]`, every other `ξ_k ~ U[1, 2]`.
pub fn synthetic_100_space() -> ParameterSpace {
    let marginals = (1..=SYNTHETIC_DIM)
        .map(|k| {
            let hi = if k == 20 { 3.0 } else { 2.0 };
            Marginal::uniform(1.0, hi).expect("valid bounds")
        })
        .collect();
    ParameterSpace::new(marginals).expect("non-empty")
}

/// The 100-dimensional analytical test function
///
/// ```text
/// y = 3 − (5/d) Σ k ξ_k + (1/d) Σ k ξ_k³ + ξ1 ξ2² + ξ2 ξ4 − ξ3 ξ5 + ξ51
///       + ξ50 ξ54² + ln((1/3d) Σ k (ξ_k² + ξ_k⁴))
/// ```
///
/// with 1-based indices. Points outside the support hypercube are rejected.
pub fn synthetic_100(xi: &[f64]) -> Result<f64> {
    if xi.len() != SYNTHETIC_DIM {
        return Err(Error::DimensionMismatch {
            expected: SYNTHETIC_DIM,
            got: xi.len(),
        });
    }
    for (i, &x) in xi.iter().enumerate() {
        let hi = if i == 19 { 3.0 } else { 2.0 };
        if !(1.0..=hi).contains(&x) {
            return Err(Error::Domain(format!(
                "xi_{} = {x} outside [1, {hi}]",
                i + 1
            )));
        }
    }
    let d = SYNTHETIC_DIM as f64;
    let x = |k: usize| xi[k - 1];
    let (mut lin, mut cubic, mut inner) = (0.0, 0.0, 0.0);
    for (i, &v) in xi.iter().enumerate() {
        let k = (i + 1) as f64;
        lin += k * v;
        cubic += k * v.powi(3);
        inner += k * (v * v + v.powi(4));
    }
    Ok(3.0 - 5.0 / d * lin + cubic / d + x(1) * x(2).powi(2) + x(2) * x(4) - x(3) * x(5)
        + x(51)
        + x(50) * x(54).powi(2)
        + (inner / (3.0 * d)).ln())
}

/// `‖y − ŷ‖₂ / ‖y‖₂`.
pub fn relative_l2(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            got: predictions.len(),
        });
    }
    let den: f64 = truths.iter().map(|y| y * y).sum();
    if den == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let num: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    Ok((num / den).sqrt())
}

/// Random CP model with a dominant constant term in every factor.
///
/// Entry `(0, r)` of each factor is `1 + 0.1 z` and the higher-degree entries
/// are `σ z` with `σ = sqrt(0.9 / d)`, `z` standard normal. The scaling keeps
/// the non-constant part of each rank-one component comparable across `d`.
pub fn planted_model(space: &ParameterSpace, degree: usize, rank: usize, seed: u64) -> Result<CpModel> {
    if rank == 0 {
        return Err(Error::InvalidParameter("planted rank must be at least 1".into()));
    }
    let d = space.dim();
    let sigma = (0.9 / d as f64).sqrt();
    let mut rng = stream_rng(seed, Stream::Planted, 0);
    let factors = (0..d)
        .map(|_| {
            DMatrix::from_fn(degree + 1, rank, |i, _| {
                let z: f64 = rng.sample(StandardNormal);
                if i == 0 { 1.0 + 0.1 * z } else { sigma * z }
            })
        })
        .collect();
    CpModel::new(space.clone(), degree, factors)
}

/// Reference moments of a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub mean: f64,
    pub std: f64,
}

type Evaluator = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// A deterministic black-box function on a parameter space.
#[derive(Clone)]
pub struct Benchmark {
    pub name: String,
    pub space: ParameterSpace,
    pub truth: Option<ReferenceStats>,
    /// Size of the held-out Monte Carlo test set.
    pub test_size: usize,
    f: Evaluator,
}

impl fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("dim", &self.space.dim())
            .field("truth", &self.truth)
            .field("test_size", &self.test_size)
            .finish()
    }
}

impl Benchmark {
    pub fn new(
        name: impl Into<String>,
        space: ParameterSpace,
        f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            space,
            truth: None,
            test_size: 10_000,
            f: Arc::new(f),
        }
    }

    pub fn synthetic_100() -> Self {
        let mut b = Self::new("synthetic_100", synthetic_100_space(), synthetic_100);
        b.truth = Some(ReferenceStats {
            mean: SYNTHETIC_MEAN,
            std: SYNTHETIC_STD,
        });
        b.test_size = 100_000;
        b
    }

    /// A known CP model used as the black box.
    pub fn planted(model: CpModel) -> Self {
        let name = format!("planted_d{}_r{}", model.dim(), model.rank());
        let space = model.space().clone();
        Self::new(name, space, move |x| Ok(model.evaluate(x)))
    }

    pub fn with_test_size(mut self, n: usize) -> Self {
        self.test_size = n;
        self
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn evaluate(&self, xi: &[f64]) -> Result<f64> {
        (self.f)(xi)
    }

    /// Evaluates every row of a physical-space matrix, in parallel.
    pub fn evaluate_rows(&self, phys: &DMatrix<f64>) -> Result<Vec<f64>> {
        (0..phys.nrows())
            .into_par_iter()
            .map(|i| {
                let x: Vec<f64> = phys.row(i).iter().copied().collect();
                self.evaluate(&x)
            })
            .collect()
    }
}

const SOBOL_CHUNK: usize = 1000;

/// Pick-freeze Monte Carlo estimates of the main and total Sobol indices.
///
/// Two independent `n×d` designs `A` and `B` are drawn; `A_B^j` is `A` with
/// column `j` taken from `B`. Outputs are centered by their overall mean,
/// then `S_j = mean(f_B (f_{A_B^j} − f_A)) / V` and
/// `T_j = mean((f_A − f_{A_B^j})²) / (2V)` with `V` the variance of the
/// `2n` values of `f_A` and `f_B`. The designs are generated in chunks, so
/// memory stays bounded for large `n`.
pub fn mc_sobol_oracle(bench: &Benchmark, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1000 {
        return Err(Error::InvalidParameter(format!(
            "pick-freeze estimate needs n >= 1000, got {n}"
        )));
    }
    let d = bench.dim();
    // Sums of fA, fB, fA², fB², and per-j fB·Δ_j, Δ_j, Δ_j², where Δ_j = f_{A_B^j} − f_A.
    let (mut sa, mut sb, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0);
    let mut s_bd = vec![0.0; d];
    let mut s_d = vec![0.0; d];
    let mut s_dd = vec![0.0; d];
    let mut shift = None;
    let chunks = n.div_ceil(SOBOL_CHUNK);
    for c in 0..chunks {
        let rows = SOBOL_CHUNK.min(n - c * SOBOL_CHUNK);
        let mut rng = stream_rng(seed, Stream::SobolOracle, c as u32);
        let a = bench.space.to_physical(&mc_uniform_from(&mut rng, rows, d))?;
        let b = bench.space.to_physical(&mc_uniform_from(&mut rng, rows, d))?;
        let per_row: Vec<(f64, f64, Vec<f64>)> = (0..rows)
            .into_par_iter()
            .map(|i| {
                let xa: Vec<f64> = a.row(i).iter().copied().collect();
                let xb: Vec<f64> = b.row(i).iter().copied().collect();
                let fa = bench.evaluate(&xa)?;
                let fb = bench.evaluate(&xb)?;
                let mut mixed = xa.clone();
                let fab = (0..d)
                    .map(|j| {
                        mixed[j] = xb[j];
                        let v = bench.evaluate(&mixed);
                        mixed[j] = xa[j];
                        v
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok((fa, fb, fab))
            })
            .collect::<Result<_>>()?;
        let shift = *shift.get_or_insert(per_row[0].0);
        for (fa, fb, fab) in per_row {
            let (fa0, fb0) = (fa - shift, fb - shift);
            sa += fa0;
            sb += fb0;
            saa += fa0 * fa0;
            sbb += fb0 * fb0;
            for j in 0..d {
                let delta = fab[j] - fa;
                s_bd[j] += fb0 * delta;
                s_d[j] += delta;
                s_dd[j] += delta * delta;
            }
        }
    }
    let nf = n as f64;
    let mean0 = (sa + sb) / (2.0 * nf);
    let var = (saa + sbb) / (2.0 * nf) - mean0 * mean0;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance(var));
    }
    let main = (0..d)
        .map(|j| (s_bd[j] - mean0 * s_d[j]) / nf / var)
        .collect();
    let total = (0..d).map(|j| s_dd[j] / (2.0 * nf) / var).collect();
    Ok((main, total))
}

/// Initial design size and adaptive batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_init: usize,
    pub batches: usize,
    pub batch_size: usize,
}

impl Schedule {
    pub fn budget(&self) -> usize {
        self.n_init + self.batches * self.batch_size
    }
}

/// Model and sampler settings of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub degree: usize,
    pub solver: SolverConfig,
    /// Monte Carlo samples per design point for the Voronoi estimate.
    pub m_factor: usize,
    /// When set, `solver.lambda0` is replaced by the cross-validated choice
    /// from this grid on the initial design.
    pub cv_grid: Option<Vec<f64>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            solver: SolverConfig::default(),
            m_factor: sampler::DEFAULT_M_FACTOR,
            cv_grid: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub n_train: usize,
    pub test_error: f64,
    pub rank: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalStats {
    pub mean: f64,
    pub std: f64,
    /// Where the Sobol indices of the final model were written, if anywhere.
    pub sobol_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rounds: Vec<RoundReport>,
    #[serde(rename = "final")]
    pub final_stats: FinalStats,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// `n_train,test_error,rank,objective`, one row per round.
    pub fn write_curves_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rounds {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub model: CpModel,
    pub data: SampleSet,
}

fn row_bits(m: &DMatrix<f64>, i: usize) -> Vec<u64> {
    m.row(i).iter().map(|v| v.to_bits()).collect()
}

/// Labels rows `start..` of `data`.
fn label(bench: &Benchmark, data: &mut SampleSet, start: usize) -> Result<()> {
    let rows = start..data.len();
    let phys = data.phys_points().rows(rows.start, rows.len()).into_owned();
    let ys = bench.evaluate_rows(&phys)?;
    for (i, y) in rows.zip(ys) {
        data.set_output(i, y);
    }
    Ok(())
}

/// Latin Hypercube start, then `batches` rounds of adaptive selection and
/// warm-started refits.
///
/// Every round is scored on a held-out Monte Carlo test set that shares no
/// point with the training data.
pub fn run_adaptive_experiment(
    bench: &Benchmark,
    config: &ExperimentConfig,
    schedule: &Schedule,
    seed: u64,
) -> Result<Experiment> {
    if schedule.n_init == 0 {
        return Err(Error::InvalidParameter("n_init must be at least 1".into()));
    }
    if schedule.batches > 0 && schedule.batch_size == 0 {
        return Err(Error::InvalidParameter("batch_size must be at least 1".into()));
    }
    let (space, d) = (&bench.space, bench.dim());
    let mut data = SampleSet::from_unit(space, latin_hypercube(schedule.n_init, d, seed)?)?;
    label(bench, &mut data, 0)?;

    let test_unit = mc_uniform_from(&mut stream_rng(seed, Stream::TestSet, 0), bench.test_size, d);
    let test_phys = space.to_physical(&test_unit)?;
    let test_y = bench.evaluate_rows(&test_phys)?;
    let test_keys: HashSet<Vec<u64>> = (0..test_unit.nrows()).map(|i| row_bits(&test_unit, i)).collect();

    let score = |model: &CpModel, data: &SampleSet| -> Result<f64> {
        let train = data.unit_points();
        assert!(
            (0..train.nrows()).all(|i| !test_keys.contains(&row_bits(train, i))),
            "test set overlaps the training data"
        );
        let pred: Vec<f64> = (0..test_phys.nrows())
            .into_par_iter()
            .map(|i| {
                let x: Vec<f64> = test_phys.row(i).iter().copied().collect();
                model.evaluate(&x)
            })
            .collect();
        relative_l2(&pred, &test_y)
    };
    let round_report = |model: &CpModel, state: &solver::SolverState, data: &SampleSet| -> Result<RoundReport> {
        Ok(RoundReport {
            n_train: data.len(),
            test_error: score(model, data)?,
            rank: model.rank(),
            objective: state.objective_trace.last().copied().unwrap_or(f64::NAN),
        })
    };

    let mut solver_config = config.solver.clone();
    if let Some(grid) = &config.cv_grid {
        let cv = solver::cross_validate_lambda0(&data, space, config.degree, &solver_config, grid, seed)?;
        info!("{}: cross-validated lambda0 = {:e}", bench.name, cv.best);
        solver_config.lambda0 = cv.best;
    }
    let (mut model, state) = solver::fit(&data, space, config.degree, &solver_config, None, seed)?;
    let mut rounds = vec![round_report(&model, &state, &data)?];
    info!(
        "{}: n={} rank={} test error {:.3e}",
        bench.name, rounds[0].n_train, rounds[0].rank, rounds[0].test_error
    );
    for round in 1..=schedule.batches {
        let m = sampler::mc_sample_count(data.len(), config.m_factor);
        // The Voronoi stream is keyed by the design size, so a resumed run
        // draws the same samples as an uninterrupted one.
        let picks = sampler::select_next(&data, &model, schedule.batch_size, m, seed, data.len() as u32)?;
        let start = data.len();
        for p in &picks {
            data.push(&p.candidate.point_unit, &p.candidate.point_phys, None)?;
        }
        label(bench, &mut data, start)?;
        let (next, state) = solver::fit(&data, space, config.degree, &solver_config, Some(&model), seed)?;
        model = next;
        let r = round_report(&model, &state, &data)?;
        info!(
            "{}: round {round} n={} rank={} test error {:.3e}",
            bench.name, r.n_train, r.rank, r.test_error
        );
        rounds.push(r);
    }
    let final_stats = FinalStats {
        mean: stats::mean(&model),
        std: stats::variance(&model).max(0.0).sqrt(),
        sobol_path: None,
    };
    Ok(Experiment {
        report: ExperimentReport { rounds, final_stats },
        model,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn synthetic_at_lower_corner() {
        // ξ = 1: Σk = 5050, so y = 3 − 5·50.5 + 50.5 + 1 + 1 − 1 + 1 + 1 + ln(2·50.5/3).
        let y = synthetic_100(&[1.0; 100]).unwrap();
        let expected = 3.0 - 252.5 + 50.5 + 1.0 + 1.0 - 1.0 + 1.0 + 1.0 + (101.0f64 / 3.0).ln();
        assert_relative_eq!(y, expected, max_relative = 1e-14);
    }

    #[test]
    fn synthetic_term_by_term() {
        let xi: Vec<f64> = (0..100).map(|i| 1.0 + ((i * 37) % 100) as f64 / 100.0).collect();
        let x = |k: usize| xi[k - 1];
        let mut expected = 3.0 + x(1) * x(2) * x(2) + x(2) * x(4) - x(3) * x(5) + x(51) + x(50) * x(54) * x(54);
        let mut inner = 0.0;
        for k in 1..=100 {
            let v = x(k);
            expected += -5.0 / 100.0 * k as f64 * v + k as f64 * v * v * v / 100.0;
            inner += k as f64 * (v * v + v * v * v * v);
        }
        expected += (inner / 300.0).ln();
        assert_relative_eq!(synthetic_100(&xi).unwrap(), expected, max_relative = 1e-13);
    }

    #[test]
    fn synthetic_rejects_points_outside_support() {
        let mut xi = vec![1.5; 100];
        xi[19] = 2.5;
        assert!(synthetic_100(&xi).is_ok());
        xi[0] = 2.5;
        assert!(matches!(synthetic_100(&xi), Err(Error::Domain(_))));
        xi[0] = 1.5;
        xi[19] = 3.5;
        assert!(matches!(synthetic_100(&xi), Err(Error::Domain(_))));
        assert!(matches!(synthetic_100(&[1.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn relative_l2_examples() {
        let y = [1.0, -2.0, 2.0];
        assert_eq!(relative_l2(&y, &y).unwrap(), 0.0);
        assert_eq!(relative_l2(&[0.0; 3], &y).unwrap(), 1.0);
        // ‖(0.5, 0, −1)‖ / ‖(1, −2, 2)‖ = √1.25 / 3
        assert_relative_eq!(
            relative_l2(&[0.5, -2.0, 3.0], &y).unwrap(),
            1.25f64.sqrt() / 3.0,
            max_relative = 1e-15
        );
        assert!(matches!(relative_l2(&[1.0], &[0.0]), Err(Error::ZeroNorm)));
        assert!(relative_l2(&[1.0], &y).is_err());
    }

    fn uniform_space(d: usize) -> ParameterSpace {
        ParameterSpace::iid(Marginal::uniform(-1.0, 1.0).unwrap(), d).unwrap()
    }

    #[test]
    fn oracle_on_additive_pair() {
        let b = Benchmark::new("sum", uniform_space(2), |x| Ok(x[0] + x[1]));
        let (s, t) = mc_sobol_oracle(&b, 100_000, 1).unwrap();
        for j in 0..2 {
            assert!((s[j] - 0.5).abs() < 0.02, "S = {s:?}");
            assert!((t[j] - 0.5).abs() < 0.02, "T = {t:?}");
        }
    }

    #[test]
    fn oracle_on_single_variable() {
        let b = Benchmark::new("x1", uniform_space(3), |x| Ok(100.0 + x[0]));
        let (s, t) = mc_sobol_oracle(&b, 20_000, 2).unwrap();
        assert!((s[0] - 1.0).abs() < 0.02);
        assert!((t[0] - 1.0).abs() < 0.02);
        for j in 1..3 {
            assert!(s[j].abs() < 1e-12 && t[j].abs() < 1e-12);
        }
        assert!(mc_sobol_oracle(&b, 999, 2).is_err());
    }

    #[test]
    fn oracle_sees_interactions() {
        // y = x1 x2 on U(-1,1)²: no main effects, all variance is interaction.
        let b = Benchmark::new("prod", uniform_space(2), |x| Ok(x[0] * x[1]));
        let (s, t) = mc_sobol_oracle(&b, 50_000, 3).unwrap();
        for j in 0..2 {
            assert!(s[j].abs() < 0.03, "S = {s:?}");
            assert!((t[j] - 1.0).abs() < 0.03, "T = {t:?}");
        }
    }

    #[test]
    fn planted_generator_shape() {
        let m = planted_model(&uniform_space(10), 2, 2, 4).unwrap();
        assert_eq!((m.dim(), m.degree(), m.rank()), (10, 2, 2));
        assert_eq!(planted_model(&uniform_space(10), 2, 2, 4).unwrap().factors(), m.factors());
        assert!(planted_model(&uniform_space(3), 2, 0, 4).is_err());
    }

    fn planted_config() -> ExperimentConfig {
        ExperimentConfig {
            solver: SolverConfig {
                rank: 3,
                lambda0: 0.1,
                polish_lambda0: Some(1e-6),
                max_iters: 2000,
                tol: 1e-10,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn one_shot_experiment_matches_plain_fit() {
        let space = uniform_space(3);
        let truth = planted_model(&space, 2, 1, 5).unwrap();
        let bench = Benchmark::planted(truth.clone()).with_test_size(2000);
        let config = planted_config();
        let schedule = Schedule {
            n_init: 4 * truth.unknowns(),
            batches: 0,
            batch_size: 5,
        };
        let exp = run_adaptive_experiment(&bench, &config, &schedule, 5).unwrap();
        assert_eq!(exp.report.rounds.len(), 1);

        let mut data = SampleSet::from_unit(&space, latin_hypercube(schedule.n_init, 3, 5).unwrap()).unwrap();
        for i in 0..data.len() {
            let y = truth.evaluate(&data.phys_row(i));
            data.set_output(i, y);
        }
        let (model, _) = solver::fit(&data, &space, 2, &config.solver, None, 5).unwrap();
        assert_eq!(model.to_json().unwrap(), exp.model.to_json().unwrap());
        assert_eq!(exp.report.rounds[0].rank, 1);
        assert!(exp.report.rounds[0].test_error <= 1e-4);
    }

    #[test]
    fn adaptive_rounds_grow_the_design() {
        let space = uniform_space(2);
        let bench = Benchmark::new("smooth", space, |x| Ok((0.5 * x[0]).exp() * (1.0 + 0.3 * x[1] * x[1])))
            .with_test_size(1000);
        let schedule = Schedule {
            n_init: 20,
            batches: 3,
            batch_size: 4,
        };
        let config = ExperimentConfig {
            solver: SolverConfig {
                rank: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let exp = run_adaptive_experiment(&bench, &config, &schedule, 9).unwrap();
        let n: Vec<usize> = exp.report.rounds.iter().map(|r| r.n_train).collect();
        assert_eq!(n, vec![20, 24, 28, 32]);
        assert_eq!(exp.data.len(), schedule.budget());
        assert!(exp.data.is_labeled());
        let again = run_adaptive_experiment(&bench, &config, &schedule, 9).unwrap();
        assert_eq!(exp.report, again.report);
        assert_eq!(exp.model.to_json().unwrap(), again.model.to_json().unwrap());

        let mut csv = Vec::new();
        exp.report.write_curves_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("n_train,test_error,rank,objective\n"));
        assert_eq!(csv.lines().count(), 5);
        let json: serde_json::Value = serde_json::from_str(&exp.report.to_json().unwrap()).unwrap();
        assert!(json["final"]["mean"].is_number());
        assert!(json["final"]["sobol_path"].is_null());
        assert_eq!(json["rounds"].as_array().unwrap().len(), 4);
    }
}
