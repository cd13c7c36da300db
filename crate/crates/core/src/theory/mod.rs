//! Executable form of the exact-recovery guarantee for the noiseless group
//! program: principal angles between planted subspaces, inradius bounds for
//! the per-point polytopes, the sufficient condition
//! `max_t cos²θ(t) < min_j r²(P_{-j})`, and a checker for the detection
//! property itself.

mod angles;
mod inradius;

pub use angles::{min_subspace_angle, principal_cosine, AngleReport, ModalityAngle};
pub use inradius::{inradius_bounds, inradius_bounds_with, InradiusBounds, PolytopeSpec, DEFAULT_STARTS};

use crate::error::{Error, Result};
use crate::linalg::{column_space, Matrix, MatrixStack, ModalityStack};
use crate::par;
use crate::seed;
use crate::synth::UoSGroundTruth;

/// Default evaluation budget per polytope.
pub const DEFAULT_BUDGET: usize = 20_000;

#[derive(Clone, Debug)]
pub struct TheoremReport {
    pub angles: AngleReport,
    pub max_cos_sq: f64,
    /// Certified lower bound on `min_j r²(P_{-j})`.
    pub min_inradius_sq_lower: f64,
    /// Best known upper bound on `min_j r²(P_{-j})`.
    pub min_inradius_sq_upper: f64,
    /// Column achieving the smallest lower bound.
    pub weakest_point: usize,
    pub per_point: Vec<InradiusBounds>,
    /// `max_cos_sq < min_inradius_sq_lower`.
    pub condition_holds: bool,
    /// `min_inradius_sq_lower - max_cos_sq`.
    pub margin: f64,
}

/// Check the sufficient recovery condition on clean data.
///
/// `bases[i][t]` spans planted subspace `i` in modality `t`; `labels` index
/// into `bases`. The verdict compares the exact angle term against the
/// certified lower bound of the inradius term, so `condition_holds = true`
/// is never an artifact of an optimistic estimate.
pub fn evaluate_condition(
    data: &ModalityStack,
    labels: &[usize],
    bases: &[Vec<Matrix>],
    budget: usize,
    seed: u64,
) -> Result<TheoremReport> {
    if labels.len() != data.n() {
        return Err(Error::shape("labels", data.n(), labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= bases.len()) {
        return Err(Error::invalid("labels", format!("label {bad} has no basis")));
    }
    let angles = min_subspace_angle(bases)?;
    let max_cos_sq = angles.max_cos_sq();
    let data = data.normalize_columns();
    let per_point = par::map_range(data.n(), |j| {
        let spec = PolytopeSpec::from_data(&data, labels, j)?;
        inradius_bounds(&spec, budget, seed::indexed(seed, j as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let (weakest_point, weakest) = per_point
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.lower.total_cmp(&b.1.lower))
        .expect("at least two points");
    let min_lower = weakest.lower.powi(2);
    let min_upper = per_point.iter().map(|b| b.upper).fold(f64::INFINITY, f64::min).powi(2);
    Ok(TheoremReport {
        angles,
        max_cos_sq,
        min_inradius_sq_lower: min_lower,
        min_inradius_sq_upper: min_upper,
        weakest_point,
        per_point,
        condition_holds: max_cos_sq < min_lower,
        margin: min_lower - max_cos_sq,
    })
}

/// [`evaluate_condition`] on a generated dataset, which must be uncorrupted.
pub fn evaluate_theorem(gt: &UoSGroundTruth, budget: usize, seed: u64) -> Result<TheoremReport> {
    let corrupted = gt.corrupted_entries();
    if corrupted > 0 || gt.spec.corruption_fraction > 0.0 {
        return Err(Error::CorruptedData { corrupted });
    }
    evaluate_condition(&gt.clean, &gt.labels, &gt.bases, budget, seed)
}

/// Per-cluster column-space bases estimated from labeled clean data.
pub fn estimate_bases(data: &ModalityStack, labels: &[usize], rel_tol: f64) -> Result<Vec<Vec<Matrix>>> {
    if labels.len() != data.n() {
        return Err(Error::shape("labels", data.n(), labels.len()));
    }
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    (0..k)
        .map(|c| {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            if members.is_empty() {
                return Err(Error::EmptyCluster { cluster: c });
            }
            data.iter()
                .map(|x| column_space(&x.select_columns(&members)?, rel_tol))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionReport {
    pub holds: bool,
    /// Largest `|w_kj(t)|` with `labels[k] != labels[j]`.
    pub worst_violation: f64,
    /// `(t, k, j)` of the worst cross entry, if any cross entry is nonzero.
    pub location: Option<(usize, usize, usize)>,
    pub max_abs: f64,
}

/// Whether every coefficient linking different clusters is negligible:
/// `|w_kj(t)| <= tol_rel * max |w|` whenever `labels[k] != labels[j]`.
pub fn check_detection_property(omega: &MatrixStack, labels: &[usize], tol_rel: f64) -> Result<DetectionReport> {
    let n = omega.n();
    if labels.len() != n {
        return Err(Error::shape("labels", n, labels.len()));
    }
    if omega.iter().any(|w| !w.is_square()) {
        return Err(Error::shape("coefficients", "square layers", "rectangular layer"));
    }
    let max_abs = omega.iter().map(Matrix::max_abs).fold(0.0, f64::max);
    let mut worst = 0.0;
    let mut location = None;
    for (t, w) in omega.iter().enumerate() {
        for k in 0..n {
            for j in 0..n {
                if labels[k] != labels[j] && w[(k, j)].abs() > worst {
                    worst = w[(k, j)].abs();
                    location = Some((t, k, j));
                }
            }
        }
    }
    Ok(DetectionReport {
        holds: worst <= tol_rel * max_abs,
        worst_violation: worst,
        location,
        max_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_uos, UoSSpec};

    #[test]
    fn detection_examples() {
        let labels = [0, 0, 1, 1];
        let mut w = Matrix::zeros(4, 4);
        w[(0, 1)] = 1.0;
        w[(1, 0)] = 0.7;
        w[(2, 3)] = -0.3;
        let stack = MatrixStack::new(vec![w.clone()]).unwrap();
        let r = check_detection_property(&stack, &labels, 1e-5).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_violation, 0.0);
        assert_eq!(r.location, None);

        w[(0, 2)] = 0.5;
        let stack = MatrixStack::new(vec![w]).unwrap();
        let r = check_detection_property(&stack, &labels, 1e-5).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst_violation, 0.5);
        assert_eq!(r.location, Some((0, 0, 2)));
        assert!(check_detection_property(&stack, &labels[..3], 1e-5).is_err());
    }

    #[test]
    fn orthogonal_subspaces_satisfy_condition() {
        // two coordinate planes of R^4, points spread on each circle
        let mut cols = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2 {
            for i in 0..8 {
                let a = i as f64 * std::f64::consts::PI / 8.0 + 0.1;
                let mut x = vec![0.0; 4];
                x[2 * c] = a.cos();
                x[2 * c + 1] = a.sin();
                cols.push(x);
                labels.push(c);
            }
        }
        let data = MatrixStack::new(vec![Matrix::from_columns(&cols).unwrap()]).unwrap();
        let bases = estimate_bases(&data, &labels, 1e-10).unwrap();
        let r = evaluate_condition(&data, &labels, &bases, 2_000, 1).unwrap();
        assert!(r.max_cos_sq < 1e-20);
        assert!(r.condition_holds, "{r:?}");
        assert!(r.min_inradius_sq_lower <= r.min_inradius_sq_upper);
    }

    #[test]
    fn nearly_identical_subspaces_fail() {
        let spec = UoSSpec::uniform(vec![5], 2, 2, 8);
        let gt = generate_uos(&spec).unwrap();
        let mut bases = gt.bases.clone();
        bases[1][0] = bases[0][0]
            .add(&Matrix::from_fn(5, 2, |i, j| if i == j { 1e-3 } else { 0.0 }).unwrap())
            .unwrap();
        let r = evaluate_condition(&gt.clean, &gt.labels, &bases, 500, 1).unwrap();
        assert!(r.max_cos_sq > 0.99);
        assert!(!r.condition_holds);
    }

    #[test]
    fn corrupted_truth_is_rejected() {
        let spec = UoSSpec {
            corruption_fraction: 0.1,
            corruption_amplitude: 0.3,
            ..UoSSpec::uniform(vec![6], 2, 2, 6)
        };
        let gt = generate_uos(&spec).unwrap();
        assert!(matches!(
            evaluate_theorem(&gt, 100, 0),
            Err(Error::CorruptedData { .. })
        ));
    }
}
