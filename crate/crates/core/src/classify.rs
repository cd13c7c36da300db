//! Nearest-subspace classification of held-out points.
//!
//! Each cluster gets an orthonormal principal basis per modality, fitted on
//! the training points assigned to it. A new point goes to the cluster whose
//! bases capture the most of its energy, summed over modalities.

use crate::error::{Error, Result};
use crate::linalg::{pca_basis, Matrix, ModalityStack};
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    /// `bases[c][t]`: `m_t × d` orthonormal basis of cluster `c` in modality `t`.
    pub bases: Vec<Vec<Matrix>>,
    /// Requested per-modality dimension before clipping.
    pub requested_dims: Vec<usize>,
    /// `(cluster, modality, used_dim)` wherever the requested dimension had to
    /// be reduced to `cluster size - 1` or the ambient dimension.
    pub clipped: Vec<(usize, usize, usize)>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.bases.len()
    }

    pub fn modalities(&self) -> usize {
        self.bases.first().map_or(0, Vec::len)
    }
}

/// Fit per-cluster principal bases from labeled training data.
///
/// `dims[t]` is the retained dimension in modality `t`.
pub fn build_cluster_model(train: &ModalityStack, labels: &[usize], k: usize, dims: &[usize]) -> Result<ClusterModel> {
    if labels.len() != train.n() {
        return Err(Error::shape("training labels", train.n(), labels.len()));
    }
    if dims.len() != train.len() {
        return Err(Error::shape("per-modality dims", train.len(), dims.len()));
    }
    if dims.contains(&0) {
        return Err(Error::invalid("dims", "per-cluster dimension must be positive"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(
            "labels",
            format!("label {bad} out of range for k = {k}"),
        ));
    }
    let mut bases = Vec::with_capacity(k);
    let mut clipped = Vec::new();
    for c in 0..k {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            return Err(Error::EmptyCluster { cluster: c });
        }
        let mut per_t = Vec::with_capacity(train.len());
        for (t, x) in train.iter().enumerate() {
            let used = dims[t].min(members.len().saturating_sub(1).max(1)).min(x.rows());
            if used < dims[t] {
                clipped.push((c, t, used));
            }
            let sub = x.select_columns(&members)?;
            per_t.push(pca_basis(&sub, used)?);
        }
        bases.push(per_t);
    }
    for &(c, t, used) in &clipped {
        log::warn!(
            "cluster {c} modality {t}: basis dimension clipped from {} to {used}",
            dims[t]
        );
    }
    Ok(ClusterModel {
        bases,
        requested_dims: dims.to_vec(),
        clipped,
    })
}

/// `Σ_t ‖B_{c,t}ᵀ x(t)‖²` for every cluster `c`.
pub fn projection_scores(model: &ClusterModel, point: &[Vec<f64>]) -> Result<Vec<f64>> {
    if point.len() != model.modalities() {
        return Err(Error::shape("point modalities", model.modalities(), point.len()));
    }
    model
        .bases
        .iter()
        .map(|per_t| {
            per_t.iter().zip(point).try_fold(0.0, |acc, (b, x)| {
                if x.len() != b.rows() {
                    return Err(Error::shape("point length", b.rows(), x.len()));
                }
                let energy: f64 = (0..b.cols())
                    .map(|j| (0..b.rows()).map(|i| b[(i, j)] * x[i]).sum::<f64>().powi(2))
                    .sum();
                Ok(acc + energy)
            })
        })
        .collect()
}

/// Highest-scoring cluster for one point and the full score vector; ties go
/// to the lowest id.
pub fn classify_point(model: &ClusterModel, point: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let scores = projection_scores(model, point)?;
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = c;
        }
    }
    Ok((best, scores))
}

/// Classify every column of `test`.
pub fn classify_batch(model: &ClusterModel, test: &ModalityStack) -> Result<Vec<usize>> {
    if test.len() != model.modalities() {
        return Err(Error::shape("test modalities", model.modalities(), test.len()));
    }
    par::map_range(test.n(), |j| {
        let point: Vec<Vec<f64>> = test.iter().map(|x| x.column(j)).collect();
        classify_point(model, &point).map(|(c, _)| c)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::MatrixStack;

    fn axes_data() -> (ModalityStack, Vec<usize>) {
        // cluster 0 on the x-axis, cluster 1 on the y-axis of R^3
        let cols = vec![
            vec![1.0, 0.0, 0.0],
            vec![-2.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 3.0, 0.0],
            vec![0.0, -1.0, 0.0],
        ];
        (
            MatrixStack::new(vec![Matrix::from_columns(&cols).unwrap()]).unwrap(),
            vec![0, 0, 0, 1, 1, 1],
        )
    }

    #[test]
    fn recovers_axes() {
        let (x, labels) = axes_data();
        let model = build_cluster_model(&x, &labels, 2, &[1]).unwrap();
        assert!(model.clipped.is_empty());
        assert!((model.bases[0][0][(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert_eq!(classify_point(&model, &[vec![0.9, 0.1, 0.5]]).unwrap().0, 0);
        let (c, scores) = classify_point(&model, &[vec![0.1, -0.9, 0.5]]).unwrap();
        assert_eq!(c, 1);
        assert!((scores[0] - 0.01).abs() < 1e-12 && (scores[1] - 0.81).abs() < 1e-12);
        // equidistant: lowest id wins
        assert_eq!(classify_point(&model, &[vec![1.0, 1.0, 0.0]]).unwrap().0, 0);
        assert_eq!(classify_batch(&model, &x).unwrap(), labels);
    }

    #[test]
    fn clipping_and_errors() {
        let (x, labels) = axes_data();
        let model = build_cluster_model(&x, &labels, 2, &[5]).unwrap();
        assert_eq!(model.clipped, vec![(0, 0, 2), (1, 0, 2)]);
        assert!(build_cluster_model(&x, &labels, 3, &[1]).is_err());
        assert!(build_cluster_model(&x, &labels[..3], 2, &[1]).is_err());
        assert!(build_cluster_model(&x, &labels, 2, &[1, 1]).is_err());
        assert!(classify_point(&model, &[vec![1.0, 0.0]]).is_err());
    }
}
