use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, spectral_norm, Matrix};

/// Cosine of the smallest principal angle between the spans of two orthonormal bases.
pub fn principal_cosine(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows() != b.rows() {
        return Err(Error::shape("principal_cosine", a.rows(), b.rows()));
    }
    Ok(spectral_norm(&a.t_matmul(b)?).clamp(0.0, 1.0))
}

/// Smallest angle between two subspaces of one modality.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalityAngle {
    /// Radians, in `[0, π/2]`.
    pub theta: f64,
    pub cos_sq: f64,
    /// Subspace ids achieving the minimum.
    pub pair: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AngleReport {
    pub modalities: Vec<ModalityAngle>,
}

impl AngleReport {
    pub fn max_cos_sq(&self) -> f64 {
        self.modalities.iter().fold(0.0, |m, a| m.max(a.cos_sq))
    }
}

/// Smallest pairwise principal angle per modality.
///
/// `bases[i][t]` spans subspace `i` in modality `t`. Bases need not be
/// orthonormal but must have full column rank.
pub fn min_subspace_angle(bases: &[Vec<Matrix>]) -> Result<AngleReport> {
    if bases.len() < 2 {
        return Err(Error::invalid(
            "bases",
            format!("need at least 2 subspaces, got {}", bases.len()),
        ));
    }
    let layers = bases[0].len();
    if layers == 0 || bases.iter().any(|b| b.len() != layers) {
        return Err(Error::invalid("bases", "every subspace needs one basis per modality"));
    }
    let ortho: Vec<Vec<Matrix>> = bases
        .iter()
        .enumerate()
        .map(|(i, per_t)| {
            per_t
                .iter()
                .map(|b| {
                    orthonormalize(b).map_err(|e| match e {
                        Error::RankDeficient { min_eig, .. } => Error::RankDeficient { index: i, min_eig },
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut modalities = Vec::with_capacity(layers);
    for t in 0..layers {
        let mut best = ModalityAngle {
            theta: FRAC_PI_2,
            cos_sq: 0.0,
            pair: (0, 1),
        };
        let mut best_cos = -1.0;
        for i in 0..ortho.len() {
            for j in (i + 1)..ortho.len() {
                let c = principal_cosine(&ortho[i][t], &ortho[j][t])?;
                if c > best_cos {
                    best_cos = c;
                    best = ModalityAngle {
                        theta: c.acos(),
                        cos_sq: c * c,
                        pair: (i, j),
                    };
                }
            }
        }
        modalities.push(best);
    }
    Ok(AngleReport { modalities })
}
