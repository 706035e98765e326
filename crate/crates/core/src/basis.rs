//! Orthonormal univariate polynomial bases.
//!
//! Each basis is stored as the three-term recurrence of the orthonormal
//! family in a standardized variable `t`, plus the affine map
//! `x = center + scale·t` to the physical variable:
//!
//! ```text
//! t·ψ_j(t) = b_{j+1} ψ_{j+1}(t) + a_j ψ_j(t) + b_j ψ_{j-1}(t),  ψ_{-1} = 0, ψ_0 = 1
//! ```
//!
//! Uniform marginals use normalized Legendre polynomials, gaussian marginals
//! normalized probabilists' Hermite polynomials.

use crate::paramspace::{Marginal, ParameterSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Legendre,
    Hermite,
}

impl Family {
    pub fn of(marginal: &Marginal) -> Self {
        match marginal {
            Marginal::Uniform { .. } => Family::Legendre,
            Marginal::Gaussian { .. } => Family::Hermite,
        }
    }

    /// Diagonal recurrence coefficient `a_j`. Both measures are symmetric.
    pub fn alpha(self, _j: usize) -> f64 {
        0.0
    }

    /// Off-diagonal recurrence coefficient `b_j` (`b_0 = 0`).
    pub fn beta(self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        let jf = j as f64;
        match self {
            Family::Legendre => jf / (4.0 * jf * jf - 1.0).sqrt(),
            Family::Hermite => jf.sqrt(),
        }
    }
}

/// Orthonormal family `φ_0, …, φ_p` for one marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateBasis {
    degree: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    center: f64,
    scale: f64,
    marginal: Marginal,
}

impl UnivariateBasis {
    pub fn new(marginal: Marginal, degree: usize) -> Self {
        let family = Family::of(&marginal);
        let (center, scale) = marginal.standardization();
        Self {
            degree,
            a: (0..=degree).map(|j| family.alpha(j)).collect(),
            b: (0..=degree).map(|j| family.beta(j)).collect(),
            center,
            scale,
            marginal,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    pub fn recurrence(&self) -> (&[f64], &[f64]) {
        (&self.a, &self.b)
    }

    #[inline]
    fn standardize(&self, x: f64) -> f64 {
        (x - self.center) / self.scale
    }

    /// Writes `φ_0(x), …, φ_p(x)` into `out` (length `p+1`).
    #[inline]
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let t = self.standardize(x);
        out[0] = 1.0;
        if self.degree == 0 {
            return;
        }
        out[1] = (t - self.a[0]) / self.b[1];
        for j in 1..self.degree {
            out[j + 1] = ((t - self.a[j]) * out[j] - self.b[j] * out[j - 1]) / self.b[j + 1];
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// Values and first derivatives with respect to the physical variable.
    pub fn eval_with_deriv_into(&self, x: f64, vals: &mut [f64], ders: &mut [f64]) {
        self.eval_into(x, vals);
        let t = self.standardize(x);
        ders[0] = 0.0;
        if self.degree == 0 {
            return;
        }
        // Differentiated recurrence in t, then chain rule dt/dx = 1/scale.
        ders[1] = 1.0 / self.b[1];
        for j in 1..self.degree {
            ders[j + 1] =
                ((t - self.a[j]) * ders[j] + vals[j] - self.b[j] * ders[j - 1]) / self.b[j + 1];
        }
        for d in ders.iter_mut() {
            *d /= self.scale;
        }
    }

    pub fn eval_deriv(&self, x: f64) -> Vec<f64> {
        let mut vals = vec![0.0; self.len()];
        let mut ders = vec![0.0; self.len()];
        self.eval_with_deriv_into(x, &mut vals, &mut ders);
        ders
    }
}

/// Builds the orthonormal family of degree `p` for `marginal`.
pub fn build_basis(marginal: Marginal, p: usize) -> UnivariateBasis {
    UnivariateBasis::new(marginal, p)
}

/// One univariate basis per input dimension, all of the same degree.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisBundle {
    bases: Vec<UnivariateBasis>,
}

impl BasisBundle {
    pub fn new(space: &ParameterSpace, degree: usize) -> Self {
        Self {
            bases: space
                .marginals()
                .iter()
                .map(|m| UnivariateBasis::new(*m, degree))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    pub fn degree(&self) -> usize {
        self.bases[0].degree()
    }

    /// `p + 1`.
    pub fn width(&self) -> usize {
        self.degree() + 1
    }

    pub fn get(&self, k: usize) -> &UnivariateBasis {
        &self.bases[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &UnivariateBasis> {
        self.bases.iter()
    }

    /// Basis values for every coordinate of `x`, laid out as `d` consecutive
    /// blocks of `p + 1`.
    pub fn eval_point_into(&self, x: &[f64], out: &mut [f64]) {
        let w = self.width();
        for (k, basis) in self.bases.iter().enumerate() {
            basis.eval_into(x[k], &mut out[k * w..(k + 1) * w]);
        }
    }
}

/// Gauss quadrature rules for the marginal measures.
pub mod quadrature {
    use nalgebra::{DMatrix, SymmetricEigen};

    use super::Family;
    use crate::paramspace::Marginal;

    /// `n`-point Gauss rule for the probability measure of `marginal`, with
    /// nodes in the physical variable and weights summing to one.
    ///
    /// Built by Golub–Welsch from the Jacobi matrix of the family.
    pub fn gauss_rule(marginal: &Marginal, n: usize) -> (Vec<f64>, Vec<f64>) {
        let family = Family::of(marginal);
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            jacobi[(j, j)] = family.alpha(j);
            if j + 1 < n {
                let b = family.beta(j + 1);
                jacobi[(j, j + 1)] = b;
                jacobi[(j + 1, j)] = b;
            }
        }
        let eig = SymmetricEigen::new(jacobi);
        let (center, scale) = marginal.standardization();
        let mut rule: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (center + scale * eig.eigenvalues[i], v0 * v0)
            })
            .collect();
        rule.sort_by(|a, b| a.0.total_cmp(&b.0));
        rule.into_iter().unzip()
    }
}
