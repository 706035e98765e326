//! Two-stage adaptive sample selection.
//!
//! Exploration estimates the Voronoi-cell volume of every design point by
//! assigning uniform Monte Carlo samples of the unit cube to their nearest
//! design point. Exploitation then picks, inside each of the `K` largest
//! cells, the Monte Carlo sample where the surrogate departs most from its
//! first-order Taylor expansion about the cell center.

use std::io::Write;

use log::{debug, warn};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use serde::Serialize;

use crate::cpmodel::CpModel;
use crate::error::{Error, Result};
use crate::paramspace::SampleSet;
use crate::rng::{stream_rng, Stream};

/// Monte Carlo samples per design point.
pub const DEFAULT_M_FACTOR: usize = 100;

/// Upper bound on the Monte Carlo sample count.
pub const MAX_MC_SAMPLES: usize = 1_000_000;

const CHUNK_ROWS: usize = 4096;

/// Monte Carlo Voronoi-volume estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiEstimate {
    /// Hits per cell.
    pub counts: Vec<usize>,
    /// Cell of every Monte Carlo sample, in generation order.
    pub assignments: Vec<usize>,
    /// Total Monte Carlo sample count.
    pub m: usize,
    d: usize,
    seed: u64,
    round: u32,
}

impl VoronoiEstimate {
    pub fn n_cells(&self) -> usize {
        self.counts.len()
    }

    /// Estimated volume fraction of `cell`.
    pub fn volume(&self, cell: usize) -> f64 {
        self.counts[cell] as f64 / self.m as f64
    }

    /// Cells by decreasing count; equal counts keep the lower index first.
    pub fn ranked_cells(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_cells()).collect();
        order.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        order
    }

    /// Regenerates the `M×d` Monte Carlo samples in generation order.
    pub fn points(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m, self.d);
        let mut start = 0;
        for_each_chunk(self.seed, self.round, self.m, self.d, |chunk| {
            let rows = chunk.len() / self.d;
            for i in 0..rows {
                for j in 0..self.d {
                    out[(start + i, j)] = chunk[i * self.d + j];
                }
            }
            start += rows;
        });
        out
    }
}

/// Nonlinearity score of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScore {
    pub point_unit: Vec<f64>,
    pub point_phys: Vec<f64>,
    pub gamma: f64,
}

/// One selected point with the cell it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    /// Position of the cell in the volume ranking, starting at 1.
    pub cell_rank: usize,
    pub cell_center_index: usize,
    pub est_volume: f64,
    pub candidate: CandidateScore,
}

/// `m_factor · n`, capped at [`MAX_MC_SAMPLES`].
pub fn mc_sample_count(n: usize, m_factor: usize) -> usize {
    let m = n.saturating_mul(m_factor);
    if m > MAX_MC_SAMPLES {
        warn!("Monte Carlo sample count {m} capped at {MAX_MC_SAMPLES}");
        MAX_MC_SAMPLES
    } else {
        m
    }
}

fn mc_rng(seed: u64, round: u32) -> ChaCha8Rng {
    stream_rng(seed, Stream::Voronoi, round)
}

/// Streams the Monte Carlo samples as row-major chunks. The concatenated
/// draws equal `mc_uniform_from` on the same generator.
fn for_each_chunk(seed: u64, round: u32, m: usize, d: usize, mut f: impl FnMut(&[f64])) {
    let mut rng = mc_rng(seed, round);
    let mut buf = Vec::with_capacity(CHUNK_ROWS * d);
    let mut done = 0;
    while done < m {
        let rows = CHUNK_ROWS.min(m - done);
        buf.clear();
        buf.extend((0..rows * d).map(|_| rng.sample::<f64, _>(Open01)));
        f(&buf);
        done += rows;
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Index of the center closest to `x` in Euclidean distance; ties go to the
/// lowest index. `centers` is row-major with rows of length `x.len()`.
fn nearest(centers: &[f64], x: &[f64]) -> usize {
    let d = x.len();
    let mut best = (0, f64::INFINITY);
    for (c, row) in centers.chunks_exact(d).enumerate() {
        let dist: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best.0
}

/// Assigns `m` uniform samples of the unit cube to their nearest center.
///
/// `round` selects an independent Monte Carlo stream for each adaptive round.
pub fn estimate_voronoi(
    centers_unit: &DMatrix<f64>,
    m: usize,
    seed: u64,
    round: u32,
) -> Result<VoronoiEstimate> {
    let (n, d) = centers_unit.shape();
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("Voronoi estimate needs at least one center".into()));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("Monte Carlo sample count must be positive".into()));
    }
    let centers = row_major(centers_unit);
    let mut assignments = Vec::with_capacity(m);
    for_each_chunk(seed, round, m, d, |chunk| {
        let cells: Vec<usize> = chunk.par_chunks_exact(d).map(|x| nearest(&centers, x)).collect();
        assignments.extend(cells);
    });
    let mut counts = vec![0; n];
    for &c in &assignments {
        counts[c] += 1;
    }
    Ok(VoronoiEstimate {
        counts,
        assignments,
        m,
        d,
        seed,
        round,
    })
}

/// First-order Taylor remainder `|ŷ(ξ) − ŷ(a) − ∇ŷ(a)ᵀ(ξ − a)|`.
pub fn nonlinearity(model: &CpModel, xi: &[f64], a: &[f64]) -> f64 {
    let (ya, grad) = model.evaluate_with_gradient(a);
    taylor_remainder(model, xi, a, ya, &grad)
}

fn taylor_remainder(model: &CpModel, xi: &[f64], a: &[f64], ya: f64, grad: &[f64]) -> f64 {
    let lin: f64 = grad.iter().zip(xi.iter().zip(a)).map(|(g, (x, a))| g * (x - a)).sum();
    (model.evaluate(xi) - ya - lin).abs()
}

/// Picks up to `k` new points, one from each of the `k` largest non-empty
/// Voronoi cells of the design in `data`.
///
/// Inside a cell, every Monte Carlo sample assigned to it is a candidate and
/// the one with the largest nonlinearity score about the cell center wins;
/// equal scores keep the earliest sample. Candidates that coincide with an
/// existing design point are skipped, and a cell without usable candidates
/// passes its slot to the next-ranked cell.
pub fn select_next(
    data: &SampleSet,
    model: &CpModel,
    k: usize,
    m: usize,
    seed: u64,
    round: u32,
) -> Result<Vec<Selection>> {
    if k == 0 {
        return Err(Error::InvalidParameter("batch size must be at least 1".into()));
    }
    if data.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.dim(),
        });
    }
    let d = data.dim();
    let estimate = estimate_voronoi(data.unit_points(), m, seed, round)?;
    let design = row_major(data.unit_points());
    let is_design_point =
        |x: &[f64]| design.chunks_exact(d).any(|row| row.iter().zip(x).all(|(a, b)| a == b));

    let mut queue = estimate.ranked_cells().into_iter().enumerate().filter(|&(rank, cell)| {
        if estimate.counts[cell] == 0 {
            debug!("cell {cell} (rank {}) has no Monte Carlo hits; skipped", rank + 1);
            false
        } else {
            true
        }
    });
    let mut picks = Vec::with_capacity(k);
    while picks.len() < k {
        let batch: Vec<(usize, usize)> = queue.by_ref().take(k - picks.len()).collect();
        if batch.is_empty() {
            warn!("only {} of {k} requested points could be selected", picks.len());
            break;
        }
        struct Cell {
            rank: usize,
            index: usize,
            center: Vec<f64>,
            value: f64,
            grad: Vec<f64>,
            best: Option<CandidateScore>,
        }
        let mut cells: Vec<Cell> = batch
            .iter()
            .map(|&(rank, index)| {
                let center = data.phys_row(index);
                let (value, grad) = model.evaluate_with_gradient(&center);
                Cell {
                    rank,
                    index,
                    center,
                    value,
                    grad,
                    best: None,
                }
            })
            .collect();
        let slot_of = |cell: usize| cells.iter().position(|c| c.index == cell);
        let slots: Vec<Option<usize>> = (0..estimate.n_cells()).map(slot_of).collect();

        let mut sample = 0;
        let mut failure = None;
        for_each_chunk(seed, round, m, d, |chunk| {
            for x in chunk.chunks_exact(d) {
                let cell = estimate.assignments[sample];
                sample += 1;
                let Some(slot) = slots[cell] else { continue };
                if failure.is_some() || is_design_point(x) {
                    continue;
                }
                let phys = match model.space().inverse_transform(x) {
                    Ok(p) => p,
                    Err(e) => {
                        failure = Some(e);
                        continue;
                    }
                };
                let c = &mut cells[slot];
                let gamma = taylor_remainder(model, &phys, &c.center, c.value, &c.grad);
                if c.best.as_ref().is_none_or(|b| gamma > b.gamma) {
                    c.best = Some(CandidateScore {
                        point_unit: x.to_vec(),
                        point_phys: phys,
                        gamma,
                    });
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        for c in cells {
            match c.best {
                Some(candidate) => picks.push(Selection {
                    cell_rank: c.rank + 1,
                    cell_center_index: c.index,
                    est_volume: estimate.volume(c.index),
                    candidate,
                }),
                None => debug!("cell {} has no usable candidates; skipped", c.index),
            }
        }
    }
    Ok(picks)
}

#[derive(Serialize)]
struct LogRow {
    round: usize,
    cell_rank: usize,
    cell_center_index: usize,
    est_volume: f64,
    chosen_gamma: f64,
}

/// Sampling-log CSV rows for one round, with an optional header line.
pub fn write_sampling_log<W: Write>(
    writer: W,
    round: usize,
    selections: &[Selection],
    header: bool,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(writer);
    for s in selections {
        w.serialize(LogRow {
            round,
            cell_rank: s.cell_rank,
            cell_center_index: s.cell_center_index,
            est_volume: s.est_volume,
            chosen_gamma: s.candidate.gamma,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paramspace::{latin_hypercube, mc_uniform_from, Marginal, ParameterSpace};
    use approx::assert_relative_eq;

    fn unit_space(d: usize) -> ParameterSpace {
        ParameterSpace::iid(Marginal::uniform(0.0, 1.0).unwrap(), d).unwrap()
    }

    fn sym_space(d: usize) -> ParameterSpace {
        ParameterSpace::iid(Marginal::uniform(-1.0, 1.0).unwrap(), d).unwrap()
    }

    /// `c0 + Σ c_j ξ_j` on uniform(-1, 1) inputs, where `φ_1(x) = √3 x`.
    fn affine(space: &ParameterSpace, c0: f64, c: &[f64]) -> CpModel {
        let d = space.dim();
        let s3 = 3f64.sqrt();
        let mut factors = Vec::new();
        for k in 0..d {
            let mut u = DMatrix::zeros(2, d + 1);
            u[(0, 0)] = if k == 0 { c0 } else { 1.0 };
            for r in 1..=d {
                if r == k + 1 {
                    u[(1, r)] = c[k] / s3;
                } else {
                    u[(0, r)] = 1.0;
                }
            }
            factors.push(u);
        }
        CpModel::new(space.clone(), 1, factors).unwrap()
    }

    /// `ξ_1²` on a single uniform(-1, 1) input: `x² = 1/3 + (2/(3√5)) φ_2`.
    fn square(space: &ParameterSpace) -> CpModel {
        let u = DMatrix::from_column_slice(3, 1, &[1.0 / 3.0, 0.0, 2.0 / (3.0 * 5f64.sqrt())]);
        CpModel::new(space.clone(), 2, vec![u]).unwrap()
    }

    fn centers(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let est = estimate_voronoi(&centers(&[&[0.25], &[0.75]]), 20_000, 1, 0).unwrap();
        for c in est.counts {
            assert!((c as f64 - 10_000.0).abs() <= 300.0, "count {c}");
        }
    }

    #[test]
    fn single_center_takes_everything() {
        let est = estimate_voronoi(&centers(&[&[0.3, 0.6]]), 500, 2, 0).unwrap();
        assert_eq!(est.counts, vec![500]);
        assert!(est.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn counts_sum_and_assignment_is_nearest() {
        let c = latin_hypercube(12, 3, 4).unwrap();
        let est = estimate_voronoi(&c, 3000, 5, 2).unwrap();
        assert_eq!(est.counts.iter().sum::<usize>(), 3000);
        let pts = est.points();
        for s in 0..est.m {
            let dist = |j: usize| (0..3).map(|k| (pts[(s, k)] - c[(j, k)]).powi(2)).sum::<f64>();
            let best = (0..12).map(dist).fold(f64::INFINITY, f64::min);
            let a = est.assignments[s];
            assert_eq!(dist(a), best);
            assert!((0..a).all(|j| dist(j) > best));
        }
    }

    #[test]
    fn points_follow_the_plain_generator() {
        let est = estimate_voronoi(&centers(&[&[0.5, 0.5]]), 5000, 9, 3).unwrap();
        let expected = mc_uniform_from(&mut mc_rng(9, 3), 5000, 2);
        assert_eq!(est.points(), expected);
    }

    #[test]
    fn equidistant_samples_go_to_the_lower_index() {
        let c = DMatrix::from_row_slice(2, 1, &[0.5, 0.5]);
        let est = estimate_voronoi(&c, 100, 1, 0).unwrap();
        assert_eq!(est.counts, vec![100, 0]);
    }

    /// Exact cell areas of a 2-d design from a 1000×1000 midpoint grid.
    fn grid_areas(c: &DMatrix<f64>) -> Vec<f64> {
        let centers = row_major(c);
        let g = 1000;
        let mut areas = vec![0.0; c.nrows()];
        for i in 0..g {
            for j in 0..g {
                let x = [(i as f64 + 0.5) / g as f64, (j as f64 + 0.5) / g as f64];
                areas[nearest(&centers, &x)] += 1.0 / (g * g) as f64;
            }
        }
        areas
    }

    #[test]
    fn largest_cell_matches_grid_oracle() {
        let c = latin_hypercube(10, 2, 7).unwrap();
        let areas = grid_areas(&c);
        let est = estimate_voronoi(&c, 100 * 10 * 100, 8, 0).unwrap();
        let exact_max = (0..10).max_by(|&a, &b| areas[a].total_cmp(&areas[b])).unwrap();
        assert_eq!(est.ranked_cells()[0], exact_max);
        for j in 0..10 {
            assert!((est.volume(j) - areas[j]).abs() < 0.01);
        }
    }

    #[test]
    fn affine_model_has_no_nonlinearity() {
        let space = sym_space(3);
        let model = affine(&space, 0.7, &[1.5, -2.0, 0.25]);
        let a = [0.1, -0.4, 0.8];
        for xi in [[0.9, 0.9, -0.9], [-1.0, 0.0, 0.5], [0.1, -0.4, 0.8]] {
            assert!(nonlinearity(&model, &xi, &a) <= 1e-10);
        }
    }

    #[test]
    fn square_remainder() {
        let model = square(&sym_space(1));
        assert_relative_eq!(nonlinearity(&model, &[0.5], &[0.0]), 0.25, max_relative = 1e-12);
        assert_relative_eq!(nonlinearity(&model, &[-0.3], &[0.4]), 0.49, max_relative = 1e-12);
    }

    #[test]
    fn nonlinearity_matches_recomputation() {
        let space = sym_space(4);
        let mut rng = stream_rng(3, Stream::Planted, 0);
        let factors = (0..4)
            .map(|_| DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let model = CpModel::new(space, 2, factors).unwrap();
        let a = [0.2, -0.1, 0.5, 0.0];
        let xi = [-0.6, 0.3, 0.9, -0.2];
        let g = model.gradient(&a);
        let lin: f64 = (0..4).map(|j| g[j] * (xi[j] - a[j])).sum();
        let direct = (model.evaluate(&xi) - model.evaluate(&a) - lin).abs();
        assert_relative_eq!(nonlinearity(&model, &xi, &a), direct, max_relative = 1e-12);
    }

    fn design(space: &ParameterSpace, unit: DMatrix<f64>) -> SampleSet {
        let mut s = SampleSet::from_unit(space, unit).unwrap();
        for i in 0..s.len() {
            s.set_output(i, 0.0);
        }
        s
    }

    #[test]
    fn affine_selection_takes_first_candidate_of_largest_cell() {
        let space = sym_space(2);
        let data = design(&space, latin_hypercube(6, 2, 1).unwrap());
        let model = affine(&space, 1.0, &[0.5, -0.5]);
        let m = 600;
        let picks = select_next(&data, &model, 1, m, 4, 0).unwrap();
        assert_eq!(picks.len(), 1);
        let est = estimate_voronoi(data.unit_points(), m, 4, 0).unwrap();
        let top = est.ranked_cells()[0];
        let first = est.assignments.iter().position(|&c| c == top).unwrap();
        let pts = est.points();
        let expected: Vec<f64> = pts.row(first).iter().copied().collect();
        assert_eq!(picks[0].cell_center_index, top);
        assert_eq!(picks[0].cell_rank, 1);
        assert!(picks[0].candidate.gamma <= 1e-10);
        assert_eq!(picks[0].candidate.point_unit, expected);
    }

    #[test]
    fn quadratic_selection_maximizes_remainder_in_largest_gap() {
        let space = sym_space(1);
        let data = design(&space, DMatrix::from_row_slice(2, 1, &[0.1, 0.9]));
        let model = square(&space);
        let m = 200;
        let picks = select_next(&data, &model, 1, m, 6, 0).unwrap();
        let est = estimate_voronoi(data.unit_points(), m, 6, 0).unwrap();
        let top = est.ranked_cells()[0];
        let pts = est.points();
        let a = data.phys_row(top);
        let mut best = (f64::NEG_INFINITY, 0.0);
        for s in 0..m {
            if est.assignments[s] == top {
                let x = space.inverse_transform(&[pts[(s, 0)]]).unwrap();
                let g = nonlinearity(&model, &x, &a);
                if g > best.0 {
                    best = (g, pts[(s, 0)]);
                }
            }
        }
        let pick = &picks[0];
        assert_eq!(pick.cell_center_index, top);
        assert_eq!(pick.candidate.point_unit[0], best.1);
        assert_relative_eq!(pick.candidate.gamma, best.0, max_relative = 1e-12);
        // Both cells are half the interval; the winner is the farthest
        // candidate from its center.
        let u = pick.candidate.point_unit[0];
        assert!(if top == 0 { u < 0.5 } else { u >= 0.5 });
    }

    #[test]
    fn batch_uses_distinct_cells_and_new_points() {
        let space = unit_space(3);
        let data = design(&space, latin_hypercube(60, 3, 2).unwrap());
        let model = CpModel::new(
            space.clone(),
            2,
            (0..3).map(|_| DMatrix::from_column_slice(3, 1, &[1.0, 0.3, 0.2])).collect(),
        )
        .unwrap();
        let picks = select_next(&data, &model, 3, 6000, 5, 1).unwrap();
        assert_eq!(picks.len(), 3);
        let mut cells: Vec<usize> = picks.iter().map(|p| p.cell_center_index).collect();
        cells.dedup();
        assert_eq!(cells.len(), 3);
        for p in &picks {
            for i in 0..data.len() {
                assert_ne!(data.unit_row(i), p.candidate.point_unit);
            }
            assert!(p.candidate.gamma >= 0.0);
        }
        let again = select_next(&data, &model, 3, 6000, 5, 1).unwrap();
        assert_eq!(picks, again);
    }

    #[test]
    fn empty_cells_are_skipped() {
        // The duplicate center never wins a sample.
        let space = unit_space(1);
        let data = design(&space, DMatrix::from_row_slice(3, 1, &[0.2, 0.2, 0.8]));
        let model = CpModel::constant(space, 1, 1.0).unwrap();
        let picks = select_next(&data, &model, 3, 300, 1, 0).unwrap();
        assert_eq!(picks.len(), 2);
        assert!(picks.iter().all(|p| p.cell_center_index != 1));
    }

    #[test]
    fn mc_count_is_capped() {
        assert_eq!(mc_sample_count(380, DEFAULT_M_FACTOR), 38_000);
        assert_eq!(mc_sample_count(20_000, DEFAULT_M_FACTOR), MAX_MC_SAMPLES);
    }

    #[test]
    fn sampling_log_layout() {
        let sel = Selection {
            cell_rank: 1,
            cell_center_index: 4,
            est_volume: 0.25,
            candidate: CandidateScore {
                point_unit: vec![0.5],
                point_phys: vec![0.0],
                gamma: 0.125,
            },
        };
        let mut out = Vec::new();
        write_sampling_log(&mut out, 2, &[sel.clone()], true).unwrap();
        write_sampling_log(&mut out, 3, &[sel], false).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "round,cell_rank,cell_center_index,est_volume,chosen_gamma\n2,1,4,0.25,0.125\n3,1,4,0.25,0.125\n"
        );
    }
}
