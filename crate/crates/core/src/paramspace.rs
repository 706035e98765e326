//! Random-parameter spaces, seeded designs and sample sets.
//!
//! Every design is generated in the unit cube `[0,1]^d` and mapped to the
//! physical space `Ω` through the per-component quantile functions of the
//! marginals.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Marginal distribution of one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawMarginal")]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, stddev: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawMarginal {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, stddev: f64 },
}

impl TryFrom<RawMarginal> for Marginal {
    type Error = Error;

    fn try_from(raw: RawMarginal) -> Result<Self> {
        match raw {
            RawMarginal::Uniform { lo, hi } => Marginal::uniform(lo, hi),
            RawMarginal::Gaussian { mean, stddev } => Marginal::gaussian(mean, stddev),
        }
    }
}

impl Marginal {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "uniform marginal needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Marginal::Uniform { lo, hi })
    }

    pub fn gaussian(mean: f64, stddev: f64) -> Result<Self> {
        if !(mean.is_finite() && stddev.is_finite() && stddev > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian marginal needs finite mean and stddev > 0, got ({mean}, {stddev})"
            )));
        }
        Ok(Marginal::Gaussian { mean, stddev })
    }

    /// Quantile function. `u` must lie in `[0,1]`; the endpoints are only
    /// valid for bounded marginals.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("probability {u} outside [0,1]")));
        }
        match *self {
            Marginal::Uniform { lo, hi } => Ok(lo + u * (hi - lo)),
            Marginal::Gaussian { mean, stddev } => {
                if u == 0.0 || u == 1.0 {
                    return Err(Error::Domain(format!(
                        "gaussian quantile at u = {u} is infinite"
                    )));
                }
                Ok(mean + stddev * normal_quantile(u))
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::Gaussian { mean, stddev } => normal_cdf((x - mean) / stddev),
        }
    }

    /// Affine map `x = center + scale·t` onto the standard variable of the
    /// polynomial family (`[-1,1]` for uniform, `N(0,1)` for gaussian).
    pub fn standardization(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lo, hi } => (0.5 * (lo + hi), 0.5 * (hi - lo)),
            Marginal::Gaussian { mean, stddev } => (mean, stddev),
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF for `p ∈ (0,1)`.
///
/// Acklam's rational approximation (relative error about 1.15e-9) followed by
/// one Halley step against the complementary error function, which brings the
/// absolute error near machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement.
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Ordered list of independent marginals defining `ξ ∈ Ω ⊂ R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterSpace {
    marginals: Vec<Marginal>,
}

impl ParameterSpace {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidParameter(
                "parameter space needs at least one marginal".into(),
            ));
        }
        Ok(Self { marginals })
    }

    /// `d` copies of the same marginal.
    pub fn iid(marginal: Marginal, d: usize) -> Result<Self> {
        Self::new(vec![marginal; d])
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// Unit cube to physical space.
    pub fn inverse_transform(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u.len())?;
        self.marginals
            .iter()
            .zip(u)
            .map(|(m, &uk)| m.quantile(uk))
            .collect()
    }

    /// Physical space to unit cube.
    pub fn cdf(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok(self.marginals.iter().zip(x).map(|(m, &xk)| m.cdf(xk)).collect())
    }

    /// Row-wise [`inverse_transform`](Self::inverse_transform) of an `N×d` matrix.
    pub fn to_physical(&self, unit: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_len(unit.ncols())?;
        let mut phys = DMatrix::zeros(unit.nrows(), unit.ncols());
        for (k, m) in self.marginals.iter().enumerate() {
            for i in 0..unit.nrows() {
                phys[(i, k)] = m.quantile(unit[(i, k)])?;
            }
        }
        Ok(phys)
    }
}

fn check_design_size(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "design needs n >= 1 and d >= 1, got n = {n}, d = {d}"
        )));
    }
    Ok(())
}

/// Jittered Latin Hypercube design in `(0,1)^d`.
///
/// Column `j` holds one point in each of the strata `[i/n, (i+1)/n)`, placed
/// at a uniform random offset inside the stratum.
pub fn latin_hypercube(n: usize, d: usize, seed: u64) -> Result<DMatrix<f64>> {
    check_design_size(n, d)?;
    let mut rng = stream_rng(seed, Stream::LatinHypercube, 0);
    let mut out = DMatrix::zeros(n, d);
    let mut strata: Vec<usize> = (0..n).collect();
    let nf = n as f64;
    for j in 0..d {
        strata.shuffle(&mut rng);
        for (i, &s) in strata.iter().enumerate() {
            let offset: f64 = rng.sample(Open01);
            let mut u = (s as f64 + offset) / nf;
            // Keep floor(n·u) == s despite rounding at the stratum edges.
            while (u * nf).floor() as usize > s {
                u = u.next_down();
            }
            while ((u * nf).floor() as usize) < s || u <= 0.0 {
                u = u.next_up();
            }
            out[(i, j)] = u;
        }
    }
    Ok(out)
}

/// `m` i.i.d. uniform points in `(0,1)^d`, drawn from `rng`.
pub fn mc_uniform_from<R: Rng>(rng: &mut R, m: usize, d: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, d);
    for i in 0..m {
        for j in 0..d {
            out[(i, j)] = rng.sample(Open01);
        }
    }
    out
}

/// `m` i.i.d. uniform points in `(0,1)^d`.
pub fn mc_uniform(m: usize, d: usize, seed: u64) -> Result<DMatrix<f64>> {
    check_design_size(m, d)?;
    Ok(mc_uniform_from(
        &mut stream_rng(seed, Stream::MonteCarlo, 0),
        m,
        d,
    ))
}

/// Design points in unit and physical coordinates with optional outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    unit: DMatrix<f64>,
    phys: DMatrix<f64>,
    outputs: Vec<Option<f64>>,
}

impl SampleSet {
    /// Unlabeled sample set from unit-cube points.
    pub fn from_unit(space: &ParameterSpace, unit: DMatrix<f64>) -> Result<Self> {
        let phys = space.to_physical(&unit)?;
        let n = unit.nrows();
        Ok(Self {
            unit,
            phys,
            outputs: vec![None; n],
        })
    }

    pub fn from_parts(
        unit: DMatrix<f64>,
        phys: DMatrix<f64>,
        outputs: Vec<Option<f64>>,
    ) -> Result<Self> {
        if unit.shape() != phys.shape() {
            return Err(Error::Format(format!(
                "unit points {:?} and physical points {:?} differ in shape",
                unit.shape(),
                phys.shape()
            )));
        }
        if outputs.len() != unit.nrows() {
            return Err(Error::DimensionMismatch {
                expected: unit.nrows(),
                got: outputs.len(),
            });
        }
        Ok(Self {
            unit,
            phys,
            outputs,
        })
    }

    pub fn empty(d: usize) -> Self {
        Self {
            unit: DMatrix::zeros(0, d),
            phys: DMatrix::zeros(0, d),
            outputs: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.unit.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.unit.ncols()
    }

    pub fn unit_points(&self) -> &DMatrix<f64> {
        &self.unit
    }

    pub fn phys_points(&self) -> &DMatrix<f64> {
        &self.phys
    }

    pub fn outputs(&self) -> &[Option<f64>] {
        &self.outputs
    }

    pub fn unit_row(&self, i: usize) -> Vec<f64> {
        self.unit.row(i).iter().copied().collect()
    }

    pub fn phys_row(&self, i: usize) -> Vec<f64> {
        self.phys.row(i).iter().copied().collect()
    }

    /// Row indices whose output is absent.
    pub fn missing_rows(&self) -> Vec<usize> {
        self.outputs
            .iter()
            .enumerate()
            .filter_map(|(i, y)| y.is_none().then_some(i))
            .collect()
    }

    pub fn is_labeled(&self) -> bool {
        self.outputs.iter().all(Option::is_some)
    }

    /// All outputs, or [`Error::MissingLabels`] naming the unlabeled rows
    /// (1-based, as they appear in the CSV body).
    pub fn labeled_outputs(&self) -> Result<Vec<f64>> {
        let missing = self.missing_rows();
        if !missing.is_empty() {
            return Err(Error::MissingLabels(
                missing.into_iter().map(|i| i + 1).collect(),
            ));
        }
        Ok(self.outputs.iter().map(|y| y.unwrap()).collect())
    }

    pub fn set_output(&mut self, i: usize, y: f64) {
        self.outputs[i] = Some(y);
    }

    /// Appends one row.
    pub fn push(&mut self, unit: &[f64], phys: &[f64], y: Option<f64>) -> Result<()> {
        let d = self.dim();
        if unit.len() != d || phys.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: unit.len().max(phys.len()),
            });
        }
        let n = self.len();
        let grow = |m: &DMatrix<f64>, row: &[f64]| {
            let mut g = m.clone().insert_row(n, 0.0);
            for (j, &v) in row.iter().enumerate() {
                g[(n, j)] = v;
            }
            g
        };
        self.unit = grow(&self.unit, unit);
        self.phys = grow(&self.phys, phys);
        self.outputs.push(y);
        Ok(())
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            unit: self.unit.select_rows(indices),
            phys: self.phys.select_rows(indices),
            outputs: indices.iter().map(|&i| self.outputs[i]).collect(),
        }
    }

    /// Writes the `u_1,…,u_d,x_1,…,x_d,y` CSV layout. Values use Rust's
    /// shortest round-trip formatting so a read-back is bit exact.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let d = self.dim();
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=d)
            .map(|k| format!("u_{k}"))
            .chain((1..=d).map(|k| format!("x_{k}")))
            .chain(std::iter::once("y".to_string()))
            .collect();
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(2 * d + 1);
        for i in 0..self.len() {
            record.clear();
            record.extend(self.unit.row(i).iter().map(|v| v.to_string()));
            record.extend(self.phys.row(i).iter().map(|v| v.to_string()));
            record.push(self.outputs[i].map(|y| y.to_string()).unwrap_or_default());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`write_csv`](Self::write_csv). When a
    /// space is given, the dimension and the unit/physical consistency are
    /// checked.
    pub fn read_csv<R: Read>(reader: R, space: Option<&ParameterSpace>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers()?.clone();
        let cols = header.len();
        if cols < 3 || cols % 2 == 0 {
            return Err(Error::Format(format!(
                "sample CSV needs 2d+1 columns, found {cols}"
            )));
        }
        let d = (cols - 1) / 2;
        for (j, name) in header.iter().enumerate() {
            let expected = if j < d {
                format!("u_{}", j + 1)
            } else if j < 2 * d {
                format!("x_{}", j - d + 1)
            } else {
                "y".to_string()
            };
            if name.trim() != expected {
                return Err(Error::Format(format!(
                    "column {} is named {name:?}, expected {expected:?}",
                    j + 1
                )));
            }
        }
        if let Some(space) = space {
            if space.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    got: d,
                });
            }
        }

        let mut unit = Vec::new();
        let mut phys = Vec::new();
        let mut outputs = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |j: usize| -> Result<f64> {
                rec[j].trim().parse::<f64>().map_err(|e| {
                    Error::Format(format!("row {}, column {}: {e}", row + 1, j + 1))
                })
            };
            for j in 0..d {
                unit.push(field(j)?);
            }
            for j in d..2 * d {
                phys.push(field(j)?);
            }
            outputs.push(if rec[2 * d].trim().is_empty() {
                None
            } else {
                Some(field(2 * d)?)
            });
        }
        let n = outputs.len();
        let unit = DMatrix::from_row_slice(n, d, &unit);
        let phys = DMatrix::from_row_slice(n, d, &phys);
        if let Some(space) = space {
            for i in 0..n {
                for (k, m) in space.marginals().iter().enumerate() {
                    let expect = m.quantile(unit[(i, k)])?;
                    let got = phys[(i, k)];
                    if (expect - got).abs() > 1e-12 * (1.0 + expect.abs()) {
                        return Err(Error::Format(format!(
                            "row {}, x_{}: {got} is not the transform of u_{} = {}",
                            i + 1,
                            k + 1,
                            k + 1,
                            unit[(i, k)]
                        )));
                    }
                }
            }
        }
        Self::from_parts(unit, phys, outputs)
    }

    pub fn read_csv_path(path: &Path, space: Option<&ParameterSpace>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, space)
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn strata_are_permutations(x: &DMatrix<f64>) -> bool {
        let n = x.nrows();
        (0..x.ncols()).all(|j| {
            let mut seen = vec![0usize; n];
            for i in 0..n {
                let s = (x[(i, j)] * n as f64).floor() as usize;
                if s >= n {
                    return false;
                }
                seen[s] += 1;
            }
            seen.iter().all(|&c| c == 1)
        })
    }

    #[test]
    fn lh_four_points_one_per_quarter() {
        let x = latin_hypercube(4, 1, 123).unwrap();
        let mut bins: Vec<usize> = x.iter().map(|v| (v * 4.0).floor() as usize).collect();
        bins.sort_unstable();
        assert_eq!(bins, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lh_single_row() {
        let x = latin_hypercube(1, 3, 9).unwrap();
        assert_eq!(x.shape(), (1, 3));
        assert!(x.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn lh_200_by_100_histogram_is_all_ones() {
        let x = latin_hypercube(200, 100, 7).unwrap();
        assert!(strata_are_permutations(&x));
    }

    #[test]
    fn lh_rejects_empty_design() {
        assert!(latin_hypercube(0, 2, 1).is_err());
        assert!(latin_hypercube(3, 0, 1).is_err());
    }

    #[test]
    fn lh_is_bit_reproducible() {
        assert_eq!(latin_hypercube(17, 5, 3).unwrap(), latin_hypercube(17, 5, 3).unwrap());
        assert_ne!(latin_hypercube(17, 5, 3).unwrap(), latin_hypercube(17, 5, 4).unwrap());
    }

    #[test]
    fn inverse_transform_examples() {
        let space = ParameterSpace::new(vec![
            Marginal::uniform(1.0, 2.0).unwrap(),
            Marginal::gaussian(0.0, 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(space.inverse_transform(&[0.5, 0.5]).unwrap(), vec![1.5, 0.0]);
        let z = space.inverse_transform(&[0.5, 0.975]).unwrap()[1];
        // High-precision value of Φ⁻¹(0.975).
        assert_abs_diff_eq!(z, 1.959_963_984_540_054, epsilon = 1e-9);
    }

    #[test]
    fn gaussian_endpoints_are_domain_errors() {
        let g = Marginal::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(g.quantile(0.0), Err(Error::Domain(_))));
        assert!(matches!(g.quantile(1.0), Err(Error::Domain(_))));
        let u = Marginal::uniform(-1.0, 3.0).unwrap();
        assert_eq!(u.quantile(0.0).unwrap(), -1.0);
        assert_eq!(u.quantile(1.0).unwrap(), 3.0);
    }

    #[test]
    fn normal_quantile_matches_reference_values() {
        // Reference quantiles computed with mpmath at 30 digits.
        let cases = [
            (1e-10, -6.361_340_902_404_056),
            (1e-4, -3.719_016_485_455_680_6),
            (0.02425, -1.972_961_051_311_884_9),
            (0.3, -0.524_400_512_708_040_8),
            (0.841_344_746_068_542_9, 1.0),
            (0.999, 3.090_232_306_167_813_5),
        ];
        for (p, z) in cases {
            assert_abs_diff_eq!(normal_quantile(p), z, epsilon = 1e-9);
        }
    }

    #[test]
    fn invalid_marginals_are_rejected() {
        assert!(Marginal::uniform(2.0, 2.0).is_err());
        assert!(Marginal::uniform(f64::NAN, 2.0).is_err());
        assert!(Marginal::gaussian(0.0, 0.0).is_err());
        assert!(serde_json::from_str::<Marginal>(r#"{"kind":"uniform","lo":3,"hi":1}"#).is_err());
        let ok: Marginal = serde_json::from_str(r#"{"kind":"gaussian","mean":1,"stddev":2}"#).unwrap();
        assert_eq!(ok, Marginal::Gaussian { mean: 1.0, stddev: 2.0 });
    }

    #[test]
    fn mc_uniform_examples() {
        assert_eq!(mc_uniform(3, 2, 11).unwrap(), mc_uniform(3, 2, 11).unwrap());
        let one = mc_uniform(1, 1, 5).unwrap();
        assert!((0.0..1.0).contains(&one[(0, 0)]));
        let big = mc_uniform(20_000, 2, 5).unwrap();
        for j in 0..2 {
            let mean = big.column(j).mean();
            assert!((mean - 0.5).abs() < 0.01, "column {j} mean {mean}");
        }
    }

    #[test]
    fn csv_round_trip_and_missing_labels() {
        let space = ParameterSpace::new(vec![
            Marginal::uniform(1.0, 2.0).unwrap(),
            Marginal::gaussian(0.0, 3.0).unwrap(),
        ])
        .unwrap();
        let mut set = SampleSet::from_unit(&space, latin_hypercube(5, 2, 1).unwrap()).unwrap();
        set.set_output(0, 1.25);
        set.set_output(3, -0.1);
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("u_1,u_2,x_1,x_2,y\n"));
        let back = SampleSet::read_csv(&buf[..], Some(&space)).unwrap();
        assert_eq!(back, set);
        match back.labeled_outputs() {
            Err(Error::MissingLabels(rows)) => assert_eq!(rows, vec![2, 3, 5]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_inconsistent_physical_column() {
        let text = "u_1,x_1,y\n0.5,1.7,\n";
        let space = ParameterSpace::iid(Marginal::uniform(1.0, 2.0).unwrap(), 1).unwrap();
        assert!(SampleSet::read_csv(text.as_bytes(), Some(&space)).is_err());
        assert!(SampleSet::read_csv(text.as_bytes(), None).is_ok());
    }

    proptest! {
        #[test]
        fn uniform_round_trip(lo in -10.0f64..10.0, width in 0.1f64..5.0, u in 0.0f64..=1.0) {
            let m = Marginal::uniform(lo, lo + width).unwrap();
            prop_assert!((m.cdf(m.quantile(u).unwrap()) - u).abs() <= 1e-12);
        }

        #[test]
        fn quantile_is_monotone(a in 1e-6f64..0.999_999, b in 1e-6f64..0.999_999) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let g = Marginal::gaussian(0.3, 2.0).unwrap();
            prop_assert!(g.quantile(lo).unwrap() <= g.quantile(hi).unwrap());
        }

        #[test]
        fn lh_stratified_for_any_seed(n in 1usize..60, d in 1usize..6, seed in any::<u64>()) {
            prop_assert!(strata_are_permutations(&latin_hypercube(n, d, seed).unwrap()));
        }
    }
}
