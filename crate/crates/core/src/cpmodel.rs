//! CP-format coefficient tensor and the surrogate built on it.
//!
//! The gPC coefficient tensor `X ∈ R^{(p+1)×…×(p+1)}` is never formed. It is
//! held as `d` factor matrices `U^(k) ∈ R^{(p+1)×R}`, and the surrogate is
//!
//! ```text
//! ŷ(ξ) = ⟨X, B(ξ)⟩ = Σ_r Π_k φ^(k)(ξ_k)ᵀ u_r^(k)
//! ```
//!
//! which costs `O(dR(p+1))` per point.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::BasisBundle;
use crate::error::{Error, Result};
use crate::paramspace::{Marginal, ParameterSpace};

pub use dense::DenseTensor;

/// Default relative threshold for [`CpModel::prune_rank`].
pub const DEFAULT_PRUNE_TAU: f64 = 1e-4;

/// Largest tensor [`CpModel::densify`] will build.
pub const DENSE_CAP: u128 = 10_000_000;

pub const MODEL_FILE_VERSION: u32 = 1;

/// Provenance of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub seed: u64,
    pub q: f64,
    pub lambda0: f64,
    pub mode: String,
    pub objective_trace_tail: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    factors: Vec<DMatrix<f64>>,
    space: ParameterSpace,
    bases: BasisBundle,
    meta: Option<FitMeta>,
}

impl CpModel {
    pub fn new(space: ParameterSpace, degree: usize, factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: factors.len(),
            });
        }
        let rank = factors[0].ncols();
        if rank == 0 {
            return Err(Error::InvalidParameter("CP rank must be at least 1".into()));
        }
        for (k, u) in factors.iter().enumerate() {
            if u.nrows() != degree + 1 || u.ncols() != rank {
                return Err(Error::InvalidParameter(format!(
                    "factor {} has shape {:?}, expected ({}, {rank})",
                    k + 1,
                    u.shape(),
                    degree + 1
                )));
            }
        }
        let bases = BasisBundle::new(&space, degree);
        Ok(Self {
            factors,
            space,
            bases,
            meta: None,
        })
    }

    pub fn zeros(space: ParameterSpace, degree: usize, rank: usize) -> Result<Self> {
        let factors = vec![DMatrix::zeros(degree + 1, rank); space.dim()];
        Self::new(space, degree, factors)
    }

    /// Rank-one model of the constant `value`.
    pub fn constant(space: ParameterSpace, degree: usize, value: f64) -> Result<Self> {
        let mut factors = vec![DMatrix::zeros(degree + 1, 1); space.dim()];
        for u in factors.iter_mut() {
            u[(0, 0)] = 1.0;
        }
        factors[0][(0, 0)] = value;
        Self::new(space, degree, factors)
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn degree(&self) -> usize {
        self.bases.degree()
    }

    /// `p + 1`.
    pub fn width(&self) -> usize {
        self.degree() + 1
    }

    pub fn rank(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn factor(&self, k: usize) -> &DMatrix<f64> {
        &self.factors[k]
    }

    pub(crate) fn factors_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.factors
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn bases(&self) -> &BasisBundle {
        &self.bases
    }

    pub fn meta(&self) -> Option<&FitMeta> {
        self.meta.as_ref()
    }

    pub fn set_meta(&mut self, meta: Option<FitMeta>) {
        self.meta = meta;
    }

    /// Number of free parameters, `(p+1)·d·R`.
    pub fn unknowns(&self) -> usize {
        self.width() * self.dim() * self.rank()
    }

    fn check_point(&self, xi: &[f64]) {
        assert_eq!(
            xi.len(),
            self.dim(),
            "point has {} coordinates, model expects {}",
            xi.len(),
            self.dim()
        );
    }

    /// `φ^(k)(ξ_k)ᵀ U^(k)` for every mode, as `d` rows of length `R`.
    pub fn row_products(&self, xi: &[f64]) -> Vec<Vec<f64>> {
        self.check_point(xi);
        let mut phi = vec![0.0; self.width()];
        (0..self.dim())
            .map(|k| {
                self.bases.get(k).eval_into(xi[k], &mut phi);
                project(&phi, &self.factors[k])
            })
            .collect()
    }

    /// Surrogate value `ŷ(ξ)`.
    pub fn evaluate(&self, xi: &[f64]) -> f64 {
        self.check_point(xi);
        let rank = self.rank();
        let mut phi = vec![0.0; self.width()];
        let mut prod = vec![1.0; rank];
        for (k, u) in self.factors.iter().enumerate() {
            self.bases.get(k).eval_into(xi[k], &mut phi);
            for (r, pr) in prod.iter_mut().enumerate() {
                *pr *= dot_column(&phi, u, r);
            }
        }
        prod.iter().sum()
    }

    /// Evaluates every row of an `N×d` matrix.
    pub fn evaluate_rows(&self, points: &DMatrix<f64>) -> Vec<f64> {
        let mut row = vec![0.0; self.dim()];
        (0..points.nrows())
            .map(|i| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = points[(i, j)];
                }
                self.evaluate(&row)
            })
            .collect()
    }

    /// `(ŷ(ξ), ∇ŷ(ξ))`.
    pub fn evaluate_with_gradient(&self, xi: &[f64]) -> (f64, Vec<f64>) {
        self.check_point(xi);
        let (d, rank, w) = (self.dim(), self.rank(), self.width());
        let mut vals = vec![0.0; w];
        let mut ders = vec![0.0; w];
        // rows[k][r] = φᵀu_r, drows[k][r] = φ'ᵀu_r
        let mut rows = vec![0.0; d * rank];
        let mut drows = vec![0.0; d * rank];
        for k in 0..d {
            self.bases
                .get(k)
                .eval_with_deriv_into(xi[k], &mut vals, &mut ders);
            for r in 0..rank {
                rows[k * rank + r] = dot_column(&vals, &self.factors[k], r);
                drows[k * rank + r] = dot_column(&ders, &self.factors[k], r);
            }
        }
        // Leave-one-out products via suffix products and a running prefix,
        // so zero row products need no special care.
        let mut suffix = vec![1.0; (d + 1) * rank];
        for k in (0..d).rev() {
            for r in 0..rank {
                suffix[k * rank + r] = suffix[(k + 1) * rank + r] * rows[k * rank + r];
            }
        }
        let mut prefix = vec![1.0; rank];
        let mut grad = vec![0.0; d];
        for k in 0..d {
            let mut g = 0.0;
            for r in 0..rank {
                g += drows[k * rank + r] * prefix[r] * suffix[(k + 1) * rank + r];
                prefix[r] *= rows[k * rank + r];
            }
            grad[k] = g;
        }
        (suffix[..rank].iter().sum(), grad)
    }

    /// `∇ŷ(ξ)` with respect to the physical coordinates.
    pub fn gradient(&self, xi: &[f64]) -> Vec<f64> {
        self.evaluate_with_gradient(xi).1
    }

    /// The mode-`k` design block `B_(k)(ξ) U^(∖k)`: the outer product of
    /// `φ^(k)(ξ_k)` with the Hadamard product over `j ≠ k` of the row vectors
    /// `φ^(j)(ξ_j)ᵀ U^(j)`. `k` is zero-based.
    pub fn khatri_rao_row(&self, k: usize, xi: &[f64]) -> DMatrix<f64> {
        assert!(k < self.dim(), "mode {k} out of range");
        let rows = self.row_products(xi);
        let mut others = vec![1.0; self.rank()];
        for (j, row) in rows.iter().enumerate() {
            if j != k {
                for (o, v) in others.iter_mut().zip(row) {
                    *o *= v;
                }
            }
        }
        let phi = self.bases.get(k).eval(xi[k]);
        DMatrix::from_fn(self.width(), self.rank(), |i, r| phi[i] * others[r])
    }

    /// Group norms `v_r = (Σ_k ‖u_r^(k)‖²)^{1/2}` of the rank-one components.
    pub fn group_norms(&self) -> Vec<f64> {
        group_norms(&self.factors)
    }

    /// Indices of the components [`prune_rank`](Self::prune_rank) keeps.
    pub fn kept_columns(&self, tau: f64) -> Vec<usize> {
        let v = self.group_norms();
        let vmax = v.iter().copied().fold(0.0, f64::max);
        let mut keep: Vec<usize> = (0..v.len()).filter(|&r| !(v[r] < tau * vmax)).collect();
        if keep.is_empty() {
            let best = (0..v.len())
                .max_by(|&a, &b| v[a].total_cmp(&v[b]))
                .unwrap_or(0);
            keep.push(best);
        }
        keep
    }

    /// Drops every rank-one component whose group norm is below
    /// `tau · max_s v_s`. At least the largest component always survives.
    pub fn prune_rank(&self, tau: f64) -> CpModel {
        let keep = self.kept_columns(tau);
        let mut out = self.clone();
        if keep.len() < self.rank() {
            for u in out.factors.iter_mut() {
                *u = u.select_columns(&keep);
            }
        }
        out
    }

    /// Materializes the full coefficient tensor. Only for small `d`.
    pub fn densify(&self) -> Result<DenseTensor> {
        let entries = (self.width() as u128).saturating_pow(self.dim() as u32);
        if entries > DENSE_CAP {
            return Err(Error::Size {
                entries,
                cap: DENSE_CAP,
            });
        }
        let dims = vec![self.width(); self.dim()];
        let mut out = DenseTensor::zeros(dims);
        for r in 0..self.rank() {
            let cols: Vec<Vec<f64>> = self
                .factors
                .iter()
                .map(|u| u.column(r).iter().copied().collect())
                .collect();
            out.add_rank_one(&cols);
        }
        Ok(out)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            version: MODEL_FILE_VERSION,
            degree: self.degree(),
            rank: self.rank(),
            marginals: self.space.marginals().to_vec(),
            factors: self
                .factors
                .iter()
                .map(|u| {
                    (0..u.nrows())
                        .map(|i| u.row(i).iter().copied().collect())
                        .collect()
                })
                .collect(),
            fit_meta: self.meta.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::Format(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        let space = ParameterSpace::new(file.marginals)?;
        let width = file.degree + 1;
        let mut factors = Vec::with_capacity(file.factors.len());
        for (k, rows) in file.factors.iter().enumerate() {
            if rows.len() != width || rows.iter().any(|r| r.len() != file.rank) {
                return Err(Error::Format(format!(
                    "factor {} is not {width} x {}",
                    k + 1,
                    file.rank
                )));
            }
            factors.push(DMatrix::from_fn(width, file.rank, |i, r| rows[i][r]));
        }
        let mut model = Self::new(space, file.degree, factors)?;
        model.meta = file.fit_meta;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_file())?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk model layout: `factors[k][i][r]` is row `i` (basis degree),
/// column `r` (rank component) of `U^(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub degree: usize,
    pub rank: usize,
    pub marginals: Vec<Marginal>,
    pub factors: Vec<Vec<Vec<f64>>>,
    pub fit_meta: Option<FitMeta>,
}

pub(crate) fn group_norms(factors: &[DMatrix<f64>]) -> Vec<f64> {
    let rank = factors[0].ncols();
    (0..rank)
        .map(|r| {
            factors
                .iter()
                .map(|u| u.column(r).norm_squared())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

#[inline]
pub(crate) fn dot_column(phi: &[f64], u: &DMatrix<f64>, r: usize) -> f64 {
    let col = u.column(r);
    phi.iter().zip(col.iter()).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn project(phi: &[f64], u: &DMatrix<f64>) -> Vec<f64> {
    (0..u.ncols()).map(|r| dot_column(phi, u, r)).collect()
}

/// Dense tensors for cross-checking the CP code paths at small `d`.
pub mod dense {
    use nalgebra::DMatrix;

    /// Dense tensor with the first index varying fastest.
    #[derive(Debug, Clone, PartialEq)]
    pub struct DenseTensor {
        dims: Vec<usize>,
        values: Vec<f64>,
    }

    impl DenseTensor {
        pub fn zeros(dims: Vec<usize>) -> Self {
            let n = dims.iter().product();
            Self {
                dims,
                values: vec![0.0; n],
            }
        }

        pub fn from_values(dims: Vec<usize>, values: Vec<f64>) -> Self {
            assert_eq!(dims.iter().product::<usize>(), values.len());
            Self { dims, values }
        }

        /// Outer product `a_1 ∘ a_2 ∘ … ∘ a_d`.
        pub fn rank_one(vectors: &[Vec<f64>]) -> Self {
            let mut t = Self::zeros(vectors.iter().map(Vec::len).collect());
            t.add_rank_one(vectors);
            t
        }

        pub fn add_rank_one(&mut self, vectors: &[Vec<f64>]) {
            assert_eq!(vectors.len(), self.dims.len());
            let mut idx = vec![0usize; self.dims.len()];
            for v in self.values.iter_mut() {
                *v += idx
                    .iter()
                    .zip(vectors)
                    .map(|(&i, a)| a[i])
                    .product::<f64>();
                increment(&mut idx, &self.dims);
            }
        }

        pub fn dims(&self) -> &[usize] {
            &self.dims
        }

        pub fn values(&self) -> &[f64] {
            &self.values
        }

        fn offset(&self, idx: &[usize]) -> usize {
            let mut stride = 1;
            let mut off = 0;
            for (i, n) in idx.iter().zip(&self.dims) {
                off += i * stride;
                stride *= n;
            }
            off
        }

        pub fn get(&self, idx: &[usize]) -> f64 {
            self.values[self.offset(idx)]
        }

        /// `⟨X, Y⟩ = Σ x_{i…} y_{i…}`.
        pub fn inner(&self, other: &DenseTensor) -> f64 {
            assert_eq!(self.dims, other.dims);
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum()
        }

        /// Visits every multi-index with its value.
        pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
            let mut idx = vec![0usize; self.dims.len()];
            for &v in &self.values {
                f(&idx, v);
                increment(&mut idx, &self.dims);
            }
        }

        /// Mode-`k` unfolding `X_(k)`; columns enumerate the remaining
        /// indices with the lowest mode fastest.
        pub fn unfold(&self, k: usize) -> DMatrix<f64> {
            let rows = self.dims[k];
            let cols = self.values.len() / rows;
            let mut out = DMatrix::zeros(rows, cols);
            self.for_each(|idx, v| {
                let mut col = 0;
                let mut stride = 1;
                for (m, (&i, &n)) in idx.iter().zip(&self.dims).enumerate() {
                    if m != k {
                        col += i * stride;
                        stride *= n;
                    }
                }
                out[(idx[k], col)] = v;
            });
            out
        }
    }

    fn increment(idx: &mut [usize], dims: &[usize]) {
        for (i, n) in idx.iter_mut().zip(dims) {
            *i += 1;
            if *i < *n {
                return;
            }
            *i = 0;
        }
    }

    /// Column-wise Kronecker product `A ⊙ B`; row `j·I_B + i` of column `r`
    /// holds `A[j,r]·B[i,r]`.
    pub fn khatri_rao(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(a.ncols(), b.ncols());
        DMatrix::from_fn(a.nrows() * b.nrows(), a.ncols(), |row, r| {
            a[(row / b.nrows(), r)] * b[(row % b.nrows(), r)]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::dense::khatri_rao;
    use super::*;
    use crate::paramspace::Marginal;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gauss_space(d: usize) -> ParameterSpace {
        ParameterSpace::iid(Marginal::gaussian(0.0, 1.0).unwrap(), d).unwrap()
    }

    fn mixed_space(d: usize) -> ParameterSpace {
        ParameterSpace::new(
            (0..d)
                .map(|k| {
                    if k % 2 == 0 {
                        Marginal::uniform(-1.0 + k as f64, 1.0 + 2.0 * k as f64).unwrap()
                    } else {
                        Marginal::gaussian(0.5, 1.5).unwrap()
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    pub(crate) fn random_model(d: usize, p: usize, rank: usize, seed: u64) -> CpModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let factors = (0..d)
            .map(|_| DMatrix::from_fn(p + 1, rank, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        CpModel::new(mixed_space(d), p, factors).unwrap()
    }

    fn random_point(model: &CpModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let u: Vec<f64> = (0..model.dim()).map(|_| rng.random_range(0.02..0.98)).collect();
        model.space().inverse_transform(&u).unwrap()
    }

    /// Dense basis tensor `B(ξ)`.
    fn basis_tensor(model: &CpModel, xi: &[f64]) -> DenseTensor {
        let vecs: Vec<Vec<f64>> = (0..model.dim())
            .map(|k| model.bases().get(k).eval(xi[k]))
            .collect();
        DenseTensor::rank_one(&vecs)
    }

    #[test]
    fn evaluate_small_example() {
        let u1 = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let u2 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let model = CpModel::new(gauss_space(2), 1, vec![u1, u2]).unwrap();
        for other in [-3.0, 0.0, 11.0] {
            assert_abs_diff_eq!(model.evaluate(&[0.7, other]), 2.4, epsilon = 1e-14);
            let dense = model.densify().unwrap();
            assert_abs_diff_eq!(
                dense.inner(&basis_tensor(&model, &[0.7, other])),
                2.4,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn zero_and_unit_models() {
        let zero = CpModel::zeros(mixed_space(3), 2, 2).unwrap();
        assert_eq!(zero.evaluate(&[0.1, 0.2, 1.1]), 0.0);
        let one = CpModel::constant(mixed_space(3), 2, 1.0).unwrap();
        assert_eq!(one.evaluate(&[0.1, -4.0, 1.1]), 1.0);
        assert_eq!(one.gradient(&[0.1, -4.0, 1.1]), vec![0.0; 3]);
    }

    #[test]
    fn gradient_of_linear_model() {
        // ŷ = ξ_1 with gaussian bases: U^(1) = [0, 1]ᵀ, others e_1.
        let mut factors = vec![DMatrix::from_column_slice(2, 1, &[1.0, 0.0]); 4];
        factors[0] = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let model = CpModel::new(gauss_space(4), 1, factors).unwrap();
        let (y, g) = model.evaluate_with_gradient(&[0.3, 1.0, -2.0, 5.0]);
        assert_abs_diff_eq!(y, 0.3, epsilon = 1e-15);
        assert_eq!(g, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let model = random_model(3, 2, 2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = random_point(&model, &mut rng);
            let g = model.gradient(&x);
            for j in 0..3 {
                let h = 1e-5 * (1.0 + x[j].abs());
                let mut up = x.clone();
                let mut dn = x.clone();
                up[j] += h;
                dn[j] -= h;
                let fd = (model.evaluate(&up) - model.evaluate(&dn)) / (2.0 * h);
                let scale = g[j].abs().max(1e-3 * model.evaluate(&x).abs()).max(1e-8);
                assert!((g[j] - fd).abs() <= 1e-5 * scale.max(1.0), "{} vs {fd}", g[j]);
            }
        }
    }

    #[test]
    fn khatri_rao_row_two_modes() {
        let model = random_model(2, 2, 3, 1);
        let x = [0.4, 0.9];
        for k in 0..2 {
            let other = 1 - k;
            let phi_k = model.bases().get(k).eval(x[k]);
            let phi_o = model.bases().get(other).eval(x[other]);
            let row = project(&phi_o, model.factor(other));
            let kr = model.khatri_rao_row(k, &x);
            for i in 0..3 {
                for r in 0..3 {
                    assert_abs_diff_eq!(kr[(i, r)], phi_k[i] * row[r], epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn khatri_rao_row_matches_dense_unfolding() {
        // B_(k) U^(∖k) with U^(∖k) = U^(d) ⊙ … ⊙ U^(k+1) ⊙ U^(k-1) ⊙ … ⊙ U^(1).
        for (d, p, rank) in [(3, 1, 2), (4, 2, 3)] {
            let model = random_model(d, p, rank, 77 + d as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let x = random_point(&model, &mut rng);
            let b = basis_tensor(&model, &x);
            for k in 0..d {
                let mut kr: Option<DMatrix<f64>> = None;
                for j in (0..d).rev().filter(|&j| j != k) {
                    kr = Some(match kr {
                        None => model.factor(j).clone(),
                        Some(acc) => khatri_rao(&acc, model.factor(j)),
                    });
                }
                let expected = b.unfold(k) * kr.unwrap();
                let got = model.khatri_rao_row(k, &x);
                assert!((expected - got).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn khatri_rao_row_with_unit_factors() {
        let mut model = random_model(3, 2, 2, 4);
        for k in [0, 2] {
            model.factors_mut()[k] = DMatrix::from_fn(3, 2, |i, _| if i == 0 { 1.0 } else { 0.0 });
        }
        let x = [0.2, 0.7, 3.0];
        let kr = model.khatri_rao_row(1, &x);
        let phi = model.bases().get(1).eval(0.7);
        for r in 0..2 {
            for i in 0..3 {
                assert_abs_diff_eq!(kr[(i, r)], phi[i], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn densify_examples() {
        let u1 = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let u2 = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let t = CpModel::new(gauss_space(2), 1, vec![u1, u2]).unwrap().densify().unwrap();
        assert_eq!(t.get(&[0, 0]), 3.0);
        assert_eq!(t.get(&[0, 1]), 4.0);
        assert_eq!(t.get(&[1, 0]), 6.0);
        assert_eq!(t.get(&[1, 1]), 8.0);
        let z = CpModel::zeros(gauss_space(3), 2, 2).unwrap().densify().unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn densify_agrees_with_evaluate() {
        let model = random_model(3, 2, 3, 12);
        let dense = model.densify().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..25 {
            let x = random_point(&model, &mut rng);
            let y = model.evaluate(&x);
            assert!((dense.inner(&basis_tensor(&model, &x)) - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn densify_refuses_huge_tensors() {
        let model = CpModel::zeros(gauss_space(20), 2, 1).unwrap();
        assert!(matches!(model.densify(), Err(Error::Size { .. })));
    }

    #[test]
    fn prune_examples() {
        let mut model = random_model(3, 2, 2, 2);
        for u in model.factors_mut() {
            u.column_mut(1).scale_mut(1e-12);
        }
        let pruned = model.prune_rank(1e-4);
        assert_eq!(pruned.rank(), 1);
        assert_eq!(pruned.factor(0).column(0), model.factor(0).column(0));

        let mut equal = random_model(2, 1, 3, 3);
        for u in equal.factors_mut() {
            for r in 0..3 {
                let n = u.column(r).norm();
                u.column_mut(r).scale_mut(1.0 / n);
            }
        }
        assert_eq!(equal.prune_rank(1e-4).rank(), 3);
        assert_eq!(equal.prune_rank(0.0), equal);
    }

    #[test]
    fn prune_keeps_evaluation_when_dropping_tiny_components() {
        let mut model = random_model(4, 2, 3, 21);
        for u in model.factors_mut() {
            u.column_mut(2).scale_mut(1e-9);
        }
        let pruned = model.prune_rank(DEFAULT_PRUNE_TAU);
        assert_eq!(pruned.rank(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = random_point(&model, &mut rng);
            let (a, b) = (model.evaluate(&x), pruned.evaluate(&x));
            assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn model_file_round_trip() {
        let mut model = random_model(3, 2, 2, 6);
        model.set_meta(Some(FitMeta {
            seed: 42,
            q: 0.5,
            lambda0: 1e-3,
            mode: "group-sparse".into(),
            objective_trace_tail: vec![1.5, 1.25],
        }));
        let text = model.to_json().unwrap();
        let back = CpModel::from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json().unwrap(), text);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["factors"].as_array().unwrap().len(), 3);
        assert_eq!(v["factors"][0].as_array().unwrap().len(), 3);
        assert_eq!(v["factors"][0][0].as_array().unwrap().len(), 2);
    }

    #[test]
    fn model_file_rejects_ragged_factors() {
        let mut file = random_model(2, 1, 2, 6).to_file();
        file.factors[1][0].pop();
        assert!(CpModel::from_file(file).is_err());
    }
}
