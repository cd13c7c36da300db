//! Multimodal union-of-subspaces data with planted labels and sparse corruption.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, Matrix, MatrixStack, ModalityStack};
use crate::seed::{self, StageRng};
use crate::theory::principal_cosine;

/// Redraw cap for the minimum-angle constraint.
pub const MAX_ANGLE_REDRAWS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct UoSSpec {
    /// Ambient dimension `m(t)` per modality.
    pub ambient_dims: Vec<usize>,
    /// `subspace_dims[i][t]`: intrinsic dimension of subspace `i` in modality `t`.
    pub subspace_dims: Vec<Vec<usize>>,
    /// Points per subspace (cluster sizes).
    pub points_per_cluster: Vec<usize>,
    /// Bernoulli rate of corrupted entries.
    pub corruption_fraction: f64,
    /// Magnitude of every corrupted entry (sign is random).
    pub corruption_amplitude: f64,
    /// Smallest admissible principal angle between planted subspaces, radians.
    pub min_angle: Option<f64>,
    pub seed: u64,
}

impl UoSSpec {
    /// Equal-sized clusters with one intrinsic dimension for every subspace and modality.
    pub fn uniform(ambient_dims: Vec<usize>, clusters: usize, dim: usize, points: usize) -> Self {
        let t = ambient_dims.len();
        UoSSpec {
            ambient_dims,
            subspace_dims: vec![vec![dim; t]; clusters],
            points_per_cluster: vec![points; clusters],
            corruption_fraction: 0.0,
            corruption_amplitude: 0.0,
            min_angle: None,
            seed: 0,
        }
    }

    pub fn modalities(&self) -> usize {
        self.ambient_dims.len()
    }

    pub fn clusters(&self) -> usize {
        self.points_per_cluster.len()
    }

    pub fn n(&self) -> usize {
        self.points_per_cluster.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.modalities();
        if t == 0 {
            return Err(Error::invalid("ambient_dims", "need at least one modality"));
        }
        if self.clusters() == 0 || self.subspace_dims.len() != self.clusters() {
            return Err(Error::invalid(
                "subspace_dims",
                format!(
                    "need one entry per cluster ({}), got {}",
                    self.clusters(),
                    self.subspace_dims.len()
                ),
            ));
        }
        for (i, dims) in self.subspace_dims.iter().enumerate() {
            if dims.len() != t {
                return Err(Error::invalid(
                    "subspace_dims",
                    format!("cluster {i} lists {} modalities, expected {t}", dims.len()),
                ));
            }
            for (tt, (&d, &m)) in dims.iter().zip(&self.ambient_dims).enumerate() {
                if d == 0 || d >= m {
                    return Err(Error::invalid(
                        "subspace_dims",
                        format!("cluster {i}, modality {tt}: need 1 <= d < m = {m}, got {d}"),
                    ));
                }
            }
        }
        if self.points_per_cluster.contains(&0) {
            return Err(Error::invalid(
                "points_per_cluster",
                "every cluster needs at least one point",
            ));
        }
        if !(0.0..=1.0).contains(&self.corruption_fraction) {
            return Err(Error::invalid(
                "corruption_fraction",
                format!("must lie in [0, 1], got {}", self.corruption_fraction),
            ));
        }
        if !(self.corruption_amplitude >= 0.0 && self.corruption_amplitude.is_finite()) {
            return Err(Error::invalid("corruption_amplitude", "must be finite and nonnegative"));
        }
        if let Some(theta) = self.min_angle {
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
                return Err(Error::invalid(
                    "min_angle",
                    format!("must lie in [0, pi/2], got {theta}"),
                ));
            }
        }
        Ok(())
    }
}

/// Boolean matrix marking corrupted entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.cols + j] = v;
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Coordinates of set entries in row-major order.
    pub fn coordinates(&self) -> Vec<(usize, usize)> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(p, _)| (p / self.cols, p % self.cols))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct UoSGroundTruth {
    pub spec: UoSSpec,
    pub labels: Vec<usize>,
    /// `bases[i][t]`: orthonormal basis of subspace `i` in modality `t`.
    pub bases: Vec<Vec<Matrix>>,
    pub corruption_mask: Vec<Mask>,
    pub corruption: ModalityStack,
    pub clean: ModalityStack,
    pub observed: ModalityStack,
}

impl UoSGroundTruth {
    pub fn corrupted_entries(&self) -> usize {
        self.corruption_mask.iter().map(Mask::count).sum()
    }
}

fn gaussian_matrix(rng: &mut StageRng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::new(rows, cols, data).expect("gaussian samples are finite")
}

fn draw_bases(rng: &mut StageRng, spec: &UoSSpec, t: usize) -> Result<Vec<Matrix>> {
    let m = spec.ambient_dims[t];
    let min_cos = spec.min_angle.map(f64::cos);
    for _ in 0..MAX_ANGLE_REDRAWS {
        let bases: Vec<Matrix> = spec
            .subspace_dims
            .iter()
            .map(|dims| orthonormalize(&gaussian_matrix(rng, m, dims[t])))
            .collect::<Result<_>>()?;
        let Some(limit) = min_cos else {
            return Ok(bases);
        };
        let mut ok = true;
        'pairs: for i in 0..bases.len() {
            for j in (i + 1)..bases.len() {
                if principal_cosine(&bases[i], &bases[j])? > limit {
                    ok = false;
                    break 'pairs;
                }
            }
        }
        if ok {
            return Ok(bases);
        }
    }
    Err(Error::AngleInfeasible {
        theta_min_deg: spec.min_angle.unwrap_or(0.0).to_degrees(),
        attempts: MAX_ANGLE_REDRAWS,
    })
}

/// Draw a dataset from `spec`.
///
/// Points are basis times standard normal coefficients, scaled to unit
/// length, then corrupted by `±a` on a Bernoulli(`φ`) mask. Labels are sorted
/// by cluster and shared by every modality. Identical specs give bitwise
/// identical output.
pub fn generate_uos(spec: &UoSSpec) -> Result<UoSGroundTruth> {
    spec.validate()?;
    let mut rng = seed::rng(seed::subseed(spec.seed, "synth"));
    let labels: Vec<usize> = spec
        .points_per_cluster
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| std::iter::repeat_n(i, p))
        .collect();
    let n = labels.len();

    let per_t: Vec<Vec<Matrix>> = (0..spec.modalities())
        .map(|t| draw_bases(&mut rng, spec, t))
        .collect::<Result<_>>()?;

    let mut clean = Vec::new();
    let mut corruption = Vec::new();
    let mut masks = Vec::new();
    for (t, bases) in per_t.iter().enumerate() {
        let m = spec.ambient_dims[t];
        let mut columns = Vec::with_capacity(n);
        for &label in &labels {
            let basis = &bases[label];
            let d = basis.cols();
            loop {
                let coef: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let x: Vec<f64> = (0..m).map(|r| (0..d).map(|c| basis[(r, c)] * coef[c]).sum()).collect();
                let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if len > 1e-12 {
                    columns.push(x.into_iter().map(|v| v / len).collect::<Vec<f64>>());
                    break;
                }
            }
        }
        clean.push(Matrix::from_columns(&columns)?);

        let mut mask = Mask::new(m, n);
        let mut noise = Matrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                if rng.random_bool(spec.corruption_fraction) {
                    mask.set(i, j, true);
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    noise[(i, j)] = sign * spec.corruption_amplitude;
                }
            }
        }
        masks.push(mask);
        corruption.push(noise);
    }

    let observed: Vec<Matrix> = clean
        .iter()
        .zip(&corruption)
        .map(|(c, e)| c.add(e))
        .collect::<Result<_>>()?;
    // stored as the realized difference so that observed - clean == corruption exactly
    let corruption: Vec<Matrix> = observed
        .iter()
        .zip(&clean)
        .map(|(o, c)| o.sub(c))
        .collect::<Result<_>>()?;

    let clusters = spec.clusters();
    let bases = (0..clusters)
        .map(|i| per_t.iter().map(|b| b[i].clone()).collect())
        .collect();

    Ok(UoSGroundTruth {
        spec: spec.clone(),
        labels,
        bases,
        corruption_mask: masks,
        corruption: MatrixStack::new(corruption)?,
        clean: MatrixStack::new(clean)?,
        observed: MatrixStack::new(observed)?,
    })
}

/// One side of a train/test split.
#[derive(Clone, Debug)]
pub struct Subset {
    /// Column indices into the full dataset, ascending.
    pub indices: Vec<usize>,
    pub labels: Vec<usize>,
    pub observed: ModalityStack,
    pub clean: ModalityStack,
}

fn subset(gt: &UoSGroundTruth, mut indices: Vec<usize>) -> Result<Subset> {
    indices.sort_unstable();
    Ok(Subset {
        labels: indices.iter().map(|&i| gt.labels[i]).collect(),
        observed: gt.observed.select_columns(&indices)?,
        clean: gt.clean.select_columns(&indices)?,
        indices,
    })
}

/// Stratified split with exactly `train_per_cluster` training points per cluster.
pub fn split_train_test(gt: &UoSGroundTruth, train_per_cluster: usize, seed: u64) -> Result<(Subset, Subset)> {
    let (train, test) = stratified_indices(&gt.labels, train_per_cluster, seed)?;
    Ok((subset(gt, train)?, subset(gt, test)?))
}

/// Stratified index split over arbitrary labels.
pub fn stratified_indices(labels: &[usize], train_per_cluster: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    let mut rng = seed::rng(seed::subseed(seed, "split"));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut members) in groups.into_iter().enumerate() {
        if train_per_cluster >= members.len() {
            return Err(Error::invalid(
                "train_per_cluster",
                format!(
                    "cluster {c} has {} points; need more than {train_per_cluster}",
                    members.len()
                ),
            ));
        }
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[train_per_cluster..]);
        members.truncate(train_per_cluster);
        train.extend(members);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> UoSSpec {
        UoSSpec {
            corruption_fraction: 0.05,
            corruption_amplitude: 0.5,
            seed: 11,
            ..UoSSpec::uniform(vec![12, 8], 3, 2, 10)
        }
    }

    #[test]
    fn single_clean_subspace_is_exact() {
        let gt = generate_uos(&UoSSpec::uniform(vec![6], 1, 2, 25)).unwrap();
        let b = &gt.bases[0][0];
        let proj = b.matmul(&b.t_matmul(&gt.observed[0]).unwrap()).unwrap();
        let resid = gt.observed[0].sub(&proj).unwrap();
        for j in 0..25 {
            assert!(resid.column(j).iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-10);
        }
    }

    #[test]
    fn structure_and_determinism() {
        let a = generate_uos(&spec()).unwrap();
        let b = generate_uos(&spec()).unwrap();
        assert_eq!(a.observed, b.observed);
        assert_eq!(a.corruption_mask, b.corruption_mask);
        assert_eq!(a.labels.len(), 30);
        for t in 0..2 {
            let diff = a.observed[t].sub(&a.clean[t]).unwrap();
            assert_eq!(diff, a.corruption[t]);
            for (i, j) in (0..diff.rows()).flat_map(|i| (0..30).map(move |j| (i, j))) {
                assert_eq!(a.corruption[t][(i, j)] != 0.0, a.corruption_mask[t].get(i, j));
            }
            for norm in a.clean[t].column_norms() {
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_angle_enforced_or_reported() {
        let ok = UoSSpec {
            min_angle: Some(45f64.to_radians()),
            ..UoSSpec::uniform(vec![30], 4, 3, 5)
        };
        let gt = generate_uos(&ok).unwrap();
        let report = crate::theory::min_subspace_angle(&gt.bases).unwrap();
        assert!(report.modalities[0].theta >= 45f64.to_radians() - 1e-12);

        let impossible = UoSSpec {
            min_angle: Some(80f64.to_radians()),
            ..UoSSpec::uniform(vec![3], 3, 2, 5)
        };
        assert!(matches!(generate_uos(&impossible), Err(Error::AngleInfeasible { .. })));
    }

    #[test]
    fn validation() {
        assert!(generate_uos(&UoSSpec::uniform(vec![3], 2, 3, 5)).is_err());
        assert!(generate_uos(&UoSSpec {
            corruption_fraction: 1.5,
            ..spec()
        })
        .is_err());
    }

    #[test]
    fn split_properties() {
        let gt = generate_uos(&spec()).unwrap();
        let (train, test) = split_train_test(&gt, 9, 3).unwrap();
        assert_eq!(test.indices.len(), 3);
        for c in 0..3 {
            assert_eq!(train.labels.iter().filter(|&&l| l == c).count(), 9);
            assert_eq!(test.labels.iter().filter(|&&l| l == c).count(), 1);
        }
        assert!(train.indices.iter().all(|i| !test.indices.contains(i)));
        assert!(split_train_test(&gt, 10, 3).is_err());
    }
}
