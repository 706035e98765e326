//! Fixtures and design checks shared by the benchmarks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tenreg::paramspace::latin_hypercube;
use tenreg::{CpModel, Marginal, ParameterSpace, SampleSet};

/// `d` inputs uniform on `[-1, 1]`.
pub fn cube(d: usize) -> ParameterSpace {
    ParameterSpace::iid(Marginal::uniform(-1.0, 1.0).expect("valid bounds"), d).expect("d > 0")
}

/// A seeded model whose constant rows dominate, so products stay of order one
/// in any dimension.
pub fn random_model(space: &ParameterSpace, degree: usize, rank: usize, seed: u64) -> CpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = 1.0 / (space.dim() as f64).sqrt();
    let factors = (0..space.dim())
        .map(|_| {
            DMatrix::from_fn(degree + 1, rank, |i, _| {
                let u: f64 = rng.random_range(-1.0..1.0);
                if i == 0 {
                    1.0 + 0.1 * u
                } else {
                    spread * u
                }
            })
        })
        .collect();
    CpModel::new(space.clone(), degree, factors).expect("consistent shapes")
}

/// A Latin Hypercube design of `n` points labeled by `f`.
pub fn labeled_design(space: &ParameterSpace, n: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> SampleSet {
    let unit = latin_hypercube(n, space.dim(), seed).expect("n, d > 0");
    let mut data = SampleSet::from_unit(space, unit).expect("unit points map into the space");
    for i in 0..n {
        let y = f(&data.phys_row(i));
        data.set_output(i, y);
    }
    data
}

/// Columns of `unit` (an `n × d` design in `[0, 1]^d`) whose points do not
/// fall one per stratum `[i/n, (i+1)/n)`.
pub fn unstratified_columns(unit: &DMatrix<f64>) -> Vec<usize> {
    let n = unit.nrows();
    (0..unit.ncols())
        .filter(|&k| {
            let mut seen = vec![false; n];
            for i in 0..n {
                let bin = ((unit[(i, k)] * n as f64).floor() as usize).min(n - 1);
                if std::mem::replace(&mut seen[bin], true) {
                    return true;
                }
            }
            false
        })
        .collect()
}
