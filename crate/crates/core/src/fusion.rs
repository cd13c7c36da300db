//! Combining per-modality coefficient matrices into one affinity-ready matrix.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionMethod {
    /// Weighted sum of raw coefficients (independent per-modality fits).
    Sum,
    /// Entrywise product of median-binarized coefficients (joint fit).
    Product,
}

impl std::str::FromStr for FusionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(FusionMethod::Sum),
            "product" => Ok(FusionMethod::Product),
            other => Err(Error::invalid(
                "fusion",
                format!("expected `sum` or `product`, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FusionMethod::Sum => "sum",
            FusionMethod::Product => "product",
        })
    }
}

/// Which entries the binarization median is taken over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MedianDomain {
    /// Every entry including the diagonal.
    All,
    /// The `n(n-1)` off-diagonal entries, zeros included.
    #[default]
    OffDiagonal,
    /// Off-diagonal entries that are nonzero.
    Nonzero,
}

impl std::str::FromStr for MedianDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(MedianDomain::All),
            "offdiag" => Ok(MedianDomain::OffDiagonal),
            "nonzero" => Ok(MedianDomain::Nonzero),
            other => Err(Error::invalid(
                "median_domain",
                format!("expected all|offdiag|nonzero, got `{other}`"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusedCoefficients {
    pub total: Matrix,
    pub method: FusionMethod,
    pub sources: usize,
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len().is_multiple_of(2) {
        0.5 * (values[mid - 1] + values[mid])
    } else {
        values[mid]
    }
}

/// Default relative tolerance below which a coefficient counts as zero.
///
/// An augmented-Lagrangian solve with a growing penalty leaves a haze of tiny
/// coefficients (typically 1e-6..1e-5 of the peak) wherever exact
/// feasibility needs them; counted as support, they push the median into the
/// noise floor.
pub const DEFAULT_ZERO_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinarizeConfig {
    pub domain: MedianDomain,
    /// Entries with `|w| <= zero_tol * max|w|` are treated as exact zeros.
    pub zero_tol: f64,
}

impl Default for BinarizeConfig {
    fn default() -> Self {
        BinarizeConfig {
            domain: MedianDomain::OffDiagonal,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

/// `1` where `|w| > median(|off-diagonal w|)`, else `0`; the diagonal stays `0`.
pub fn binarize_by_median(w: &Matrix) -> Result<Matrix> {
    binarize(w, &BinarizeConfig::default())
}

pub fn binarize(w: &Matrix, cfg: &BinarizeConfig) -> Result<Matrix> {
    if !w.is_square() {
        return Err(Error::shape(
            "binarize_by_median",
            "square",
            format!("{}x{}", w.rows(), w.cols()),
        ));
    }
    if !(cfg.zero_tol >= 0.0 && cfg.zero_tol < 1.0) {
        return Err(Error::invalid(
            "zero_tol",
            format!("must lie in [0, 1), got {}", cfg.zero_tol),
        ));
    }
    let n = w.rows();
    let floor = cfg.zero_tol * w.max_abs();
    let magnitude = |i: usize, j: usize| {
        let a = w[(i, j)].abs();
        if a <= floor {
            0.0
        } else {
            a
        }
    };
    let magnitudes = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter_map(|(i, j)| {
        let a = magnitude(i, j);
        match cfg.domain {
            MedianDomain::All => Some(a),
            MedianDomain::OffDiagonal => (i != j).then_some(a),
            MedianDomain::Nonzero => (i != j && a > 0.0).then_some(a),
        }
    });
    let threshold = median(magnitudes.collect()).max(floor);
    let mut out = w.map(move |v| if v.abs() > threshold { 1.0 } else { 0.0 });
    out.set_diagonal(0.0);
    Ok(out)
}

fn check_inputs(ws: &[Matrix]) -> Result<usize> {
    if ws.len() < 2 {
        return Err(Error::invalid(
            "matrices",
            format!("fusion needs at least 2 inputs, got {}", ws.len()),
        ));
    }
    let n = ws[0].rows();
    for (t, w) in ws.iter().enumerate() {
        if w.shape() != (n, n) {
            return Err(Error::shape(
                "fusion input",
                format!("{n}x{n}"),
                format!("input {t} is {}x{}", w.rows(), w.cols()),
            ));
        }
    }
    Ok(n)
}

/// Entrywise product of binary matrices (support intersection), zero diagonal.
pub fn fuse_product(ws: &[Matrix]) -> Result<FusedCoefficients> {
    check_inputs(ws)?;
    for (t, w) in ws.iter().enumerate() {
        if let Some(v) = w.as_slice().iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid(
                "matrices",
                format!("input {t} is not binary (found {v}); binarize first"),
            ));
        }
    }
    let mut total = ws[0].clone();
    for w in &ws[1..] {
        total = total.hadamard(w)?;
    }
    total.set_diagonal(0.0);
    Ok(FusedCoefficients {
        total,
        method: FusionMethod::Product,
        sources: ws.len(),
    })
}

/// `Σ_t weight(t) W(t)`; weights default to one.
pub fn fuse_sum(ws: &[Matrix], weights: Option<&[f64]>) -> Result<FusedCoefficients> {
    let n = check_inputs(ws)?;
    let ones = vec![1.0; ws.len()];
    let weights = weights.unwrap_or(&ones);
    if weights.len() != ws.len() {
        return Err(Error::shape("fusion weights", ws.len(), weights.len()));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("weights", "weights must be finite"));
    }
    let mut total = Matrix::zeros(n, n);
    for (w, &s) in ws.iter().zip(weights) {
        total.axpy(s, w);
    }
    total.set_diagonal(0.0);
    Ok(FusedCoefficients {
        total,
        method: FusionMethod::Sum,
        sources: ws.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn median_rule() {
        let w = m(&[vec![0.0, 1.0], vec![3.0, 0.0]]);
        assert_eq!(binarize_by_median(&w).unwrap(), m(&[vec![0.0, 0.0], vec![1.0, 0.0]]));
        let flat = m(&[vec![0.0, 2.0], vec![-2.0, 0.0]]);
        assert_eq!(binarize_by_median(&flat).unwrap().max_abs(), 0.0);
        assert!(binarize_by_median(&Matrix::zeros(2, 3)).is_err());
    }

    fn cfg(domain: MedianDomain) -> BinarizeConfig {
        BinarizeConfig {
            domain,
            ..Default::default()
        }
    }

    #[test]
    fn zero_tolerance_suppresses_haze() {
        let mut w = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                w[(i, j)] = 1e-7 * (1 + 4 * i + j) as f64;
            }
        }
        w[(0, 1)] = 1.0;
        w[(2, 3)] = 0.5;
        let b = binarize_by_median(&w).unwrap();
        assert_eq!(b.as_slice().iter().sum::<f64>(), 2.0);
        let strict = binarize(
            &w,
            &BinarizeConfig {
                zero_tol: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(strict.as_slice().iter().sum::<f64>(), 6.0);
        assert!(binarize(
            &w,
            &BinarizeConfig {
                zero_tol: 1.0,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn median_domains() {
        let w = m(&[vec![9.0, 0.0, 1.0], vec![0.0, 9.0, 2.0], vec![3.0, 0.0, 9.0]]);
        // off-diagonal magnitudes {0,1,0,2,3,0}: median 0.5
        let off = binarize(&w, &cfg(MedianDomain::OffDiagonal)).unwrap();
        assert_eq!(off.as_slice().iter().sum::<f64>(), 3.0);
        // nonzero off-diagonal {1,2,3}: median 2
        let nz = binarize(&w, &cfg(MedianDomain::Nonzero)).unwrap();
        assert_eq!(nz, m(&[vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]));
        // all entries {0,0,0,1,2,3,9,9,9}: median 2, and the diagonal is cleared
        let all = binarize(&w, &cfg(MedianDomain::All)).unwrap();
        assert_eq!(all.as_slice().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn product_examples() {
        let a = m(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        let b = m(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let f = fuse_product(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(f.total, Matrix::zeros(2, 2));
        assert_eq!(f.method, FusionMethod::Product);
        assert_eq!(
            fuse_product(&[a.clone(), b.clone()]).unwrap(),
            fuse_product(&[b, a.clone()]).unwrap()
        );
        let mut a0 = a.clone();
        a0.set_diagonal(0.0);
        assert_eq!(fuse_product(&[a0.clone(), a0.clone()]).unwrap().total, a0);
        assert!(fuse_product(std::slice::from_ref(&a)).is_err());
        assert!(fuse_product(&[a.clone(), a.scale(0.5)]).is_err());
    }

    #[test]
    fn sum_examples() {
        let a = m(&[vec![0.0, 0.5], vec![-1.0, 0.0]]);
        let b = m(&[vec![0.0, 2.0], vec![3.0, 0.0]]);
        assert_eq!(fuse_sum(&[a.clone(), a.clone()], None).unwrap().total, a.scale(2.0));
        assert_eq!(fuse_sum(&[a.clone(), b.clone()], Some(&[1.0, 0.0])).unwrap().total, a);
        assert!(fuse_sum(&[a.clone(), b], Some(&[1.0])).is_err());
        assert_eq!("product".parse::<FusionMethod>().unwrap(), FusionMethod::Product);
        assert!("avg".parse::<FusionMethod>().is_err());
    }
}
