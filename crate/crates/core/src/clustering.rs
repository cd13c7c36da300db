//! Spectral clustering of a coefficient matrix.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{top_eigenpairs, Matrix};
use crate::par;
use crate::seed;

/// How coefficients become a symmetric affinity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AffinityKind {
    /// `|W| + |W|ᵀ`.
    #[default]
    Magnitude,
    /// `W + Wᵀ`; rejected downstream if any entry is negative.
    Raw,
}

/// Which operator the spectral embedding is taken from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LaplacianKind {
    /// Leading eigenvectors of `D^{-1/2} S D^{-1/2}` (equivalently the
    /// trailing ones of the normalized Laplacian).
    #[default]
    Normalized,
    /// Trailing eigenvectors of `D - S`.
    Unnormalized,
}

impl std::str::FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(LaplacianKind::Normalized),
            "unnormalized" => Ok(LaplacianKind::Unnormalized),
            other => Err(Error::invalid(
                "laplacian",
                format!("expected normalized|unnormalized, got `{other}`"),
            )),
        }
    }
}

impl std::str::FromStr for AffinityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnitude" => Ok(AffinityKind::Magnitude),
            "raw" => Ok(AffinityKind::Raw),
            other => Err(Error::invalid(
                "affinity",
                format!("expected magnitude|raw, got `{other}`"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 20,
            max_iters: 300,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralConfig {
    pub affinity: AffinityKind,
    pub laplacian: LaplacianKind,
    /// Scale embedding rows to unit length before k-means.
    pub normalize_rows: bool,
    pub kmeans: KMeansConfig,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            affinity: AffinityKind::Magnitude,
            laplacian: LaplacianKind::Normalized,
            normalize_rows: true,
            kmeans: KMeansConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// `k × dim`, one centroid per row.
    pub centroids: Matrix,
    pub wcss: f64,
    /// WCSS after each Lloyd step of the winning restart (nonincreasing).
    pub history: Vec<f64>,
    pub best_restart: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    /// `n × k` spectral embedding (rows normalized if requested).
    pub embedding: Matrix,
    /// Leading eigenvalues of the embedding operator, largest first.
    pub eigenvalues: Vec<f64>,
    /// Separation between the k-th and (k+1)-th eigenvalue; 0 when `k == n`.
    pub eigengap: f64,
    pub wcss: f64,
}

/// Symmetric nonnegative affinity from a coefficient matrix.
pub fn affinity(w: &Matrix, kind: AffinityKind) -> Result<Matrix> {
    if !w.is_square() {
        return Err(Error::shape("affinity", "square", format!("{}x{}", w.rows(), w.cols())));
    }
    let n = w.rows();
    Ok(Matrix::from_raw(
        n,
        n,
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| match kind {
                AffinityKind::Magnitude => w[(i, j)].abs() + w[(j, i)].abs(),
                AffinityKind::Raw => w[(i, j)] + w[(j, i)],
            })
            .collect(),
    ))
}

fn check_affinity(s: &Matrix) -> Result<()> {
    if !s.is_square() {
        return Err(Error::shape("affinity", "square", format!("{}x{}", s.rows(), s.cols())));
    }
    if let Some(pos) = s.as_slice().iter().position(|&v| v < 0.0) {
        let n = s.cols();
        return Err(Error::invalid(
            "affinity",
            format!(
                "entry ({}, {}) is negative; use the magnitude affinity",
                pos / n,
                pos % n
            ),
        ));
    }
    Ok(())
}

/// `D^{-1/2} S D^{-1/2}`; rows and columns of isolated vertices are zero.
pub fn normalized_similarity(s: &Matrix) -> Result<Matrix> {
    check_affinity(s)?;
    let n = s.rows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = s.row(i).iter().sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut out = Matrix::from_raw(n, n, vec![0.0; n * n]);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = inv_sqrt[i] * s[(i, j)] * inv_sqrt[j];
        }
    }
    Ok(out)
}

/// Unnormalized Laplacian `D - S`.
pub fn laplacian(s: &Matrix) -> Result<Matrix> {
    check_affinity(s)?;
    let mut l = s.scale(-1.0);
    for i in 0..s.rows() {
        l[(i, i)] += s.row(i).iter().sum::<f64>();
    }
    Ok(l)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid, lowest index on ties.
fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Greedy k-means++: each new center is the best (by resulting potential) of
/// `2 + ln k` candidates drawn proportionally to squared distance.
fn seed_centroids(points: &Matrix, k: usize, rng: &mut seed::StageRng) -> Matrix {
    let (n, dim) = points.shape();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = Matrix::zeros(k, dim);
    let first = rng.random_range(0..n);
    centroids.as_mut_slice()[..dim].copy_from_slice(points.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();

    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let candidate = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut pick = n - 1;
                for (i, &d) in closest.iter().enumerate() {
                    if target < d {
                        pick = i;
                        break;
                    }
                    target -= d;
                }
                pick
            } else {
                rng.random_range(0..n)
            };
            let updated: Vec<f64> = (0..n)
                .map(|i| closest[i].min(sq_dist(points.row(i), points.row(candidate))))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, candidate, updated));
            }
        }
        let (_, pick, updated) = best.expect("at least one trial");
        centroids.as_mut_slice()[c * dim..(c + 1) * dim].copy_from_slice(points.row(pick));
        closest = updated;
    }
    centroids
}

fn lloyd(points: &Matrix, mut centroids: Matrix, max_iters: usize) -> (Vec<usize>, Matrix, Vec<f64>) {
    let (n, dim) = points.shape();
    let k = centroids.rows();
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for i in 0..n {
            let (c, d) = nearest(points.row(i), &centroids);
            dists[i] = d;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        // an emptied cluster takes over the point farthest from its centroid
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
                if let Some(far) = far {
                    counts[labels[far]] -= 1;
                    labels[far] = c;
                    counts[c] = 1;
                    dists[far] = 0.0;
                    changed = true;
                }
            }
        }
        let mut sums = Matrix::zeros(k, dim);
        for (i, &l) in labels.iter().enumerate().take(n) {
            let row = &mut sums.as_mut_slice()[l * dim..(l + 1) * dim];
            row.iter_mut().zip(points.row(i)).for_each(|(s, p)| *s += p);
        }
        for (c, &count) in counts.iter().enumerate().take(k) {
            if count > 0 {
                let inv = 1.0 / count as f64;
                sums.as_mut_slice()[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .for_each(|s| *s *= inv);
            } else {
                sums.as_mut_slice()[c * dim..(c + 1) * dim].copy_from_slice(centroids.row(c));
            }
        }
        centroids = sums;
        history.push(wcss(points, &labels, &centroids));
        if !changed {
            break;
        }
    }
    (labels, centroids, history)
}

fn wcss(points: &Matrix, labels: &[usize], centroids: &Matrix) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(points.row(i), centroids.row(c)))
        .sum()
}

/// k-means on the rows of `points`, keeping the restart with the lowest WCSS
/// (earliest restart on ties). Restarts run in parallel but are seeded
/// independently, so the result does not depend on scheduling.
pub fn kmeans(points: &Matrix, k: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("need 1 <= k <= {n} points, got {k}")));
    }
    if cfg.restarts == 0 {
        return Err(Error::invalid("restarts", "must be positive"));
    }
    if !points.is_finite() {
        return Err(Error::invalid("points", "k-means input must be finite"));
    }
    let runs = par::map_range(cfg.restarts, |r| {
        let mut rng = seed::rng(seed::indexed(cfg.seed, r as u64));
        let init = seed_centroids(points, k, &mut rng);
        lloyd(points, init, cfg.max_iters)
    });
    let (best_restart, (labels, centroids, history)) = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| {
            let wa = *a.1 .2.last().unwrap_or(&f64::INFINITY);
            let wb = *b.1 .2.last().unwrap_or(&f64::INFINITY);
            wa.total_cmp(&wb).then(a.0.cmp(&b.0))
        })
        .expect("restarts > 0");
    Ok(KMeansResult {
        wcss: wcss(points, &labels, &centroids),
        labels,
        centroids,
        history,
        best_restart,
    })
}

/// Embed via the chosen operator and split into `k` groups.
pub fn spectral_cluster(w: &Matrix, k: usize, cfg: &SpectralConfig) -> Result<ClusterAssignment> {
    let n = w.rows();
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("need 1 <= k <= {n}, got {k}")));
    }
    let s = affinity(w, cfg.affinity)?;
    let wanted = (k + 1).min(n);
    let (pairs, eigenvalues) = match cfg.laplacian {
        LaplacianKind::Normalized => {
            let pairs = top_eigenpairs(&normalized_similarity(&s)?, wanted)?;
            let values = pairs.values.clone();
            (pairs, values)
        }
        LaplacianKind::Unnormalized => {
            // flip the spectrum so the smallest Laplacian eigenvalues lead
            let l = laplacian(&s)?;
            let shift = 2.0 * (0..n).map(|i| l[(i, i)]).fold(0.0, f64::max) + 1.0;
            let mut flipped = l.scale(-1.0);
            for i in 0..n {
                flipped[(i, i)] += shift;
            }
            let pairs = top_eigenpairs(&flipped, wanted)?;
            let values = pairs.values.iter().map(|v| shift - v).collect();
            (pairs, values)
        }
    };
    let eigengap = if wanted > k {
        (eigenvalues[k - 1] - eigenvalues[k]).abs()
    } else {
        0.0
    };
    let mut embedding = Matrix::from_fn(n, k, |i, j| pairs.vectors[(i, j)])?;
    if cfg.normalize_rows {
        par::for_each_row(embedding.as_mut_slice(), k, |_, row| {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        });
    }
    let km = kmeans(&embedding, k, &cfg.kmeans)?;
    if eigengap < 1e-8 && wanted > k {
        log::warn!("spectral embedding eigengap {eigengap:.3e} is tiny; clusters may be ambiguous");
    }
    Ok(ClusterAssignment {
        labels: km.labels,
        k,
        embedding,
        eigenvalues: eigenvalues[..k].to_vec(),
        eigengap,
        wcss: km.wcss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_diag(sizes: &[usize]) -> Matrix {
        let n: usize = sizes.iter().sum();
        let mut block = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            block.extend(std::iter::repeat_n(b, s));
        }
        Matrix::from_fn(n, n, |i, j| if i != j && block[i] == block[j] { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn affinity_examples() {
        let w = Matrix::from_rows(&[vec![0.0, -2.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            affinity(&w, AffinityKind::Magnitude).unwrap(),
            Matrix::from_rows(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap()
        );
        let raw = affinity(&w, AffinityKind::Raw).unwrap();
        assert_eq!(raw[(0, 1)], -1.0);
        assert!(normalized_similarity(&raw).is_err());
    }

    #[test]
    fn normalized_similarity_of_path() {
        let s = Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let m = normalized_similarity(&s).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((m[(0, 1)] - h).abs() < 1e-15 && (m[(1, 2)] - h).abs() < 1e-15);
        let isolated = Matrix::zeros(2, 2);
        assert_eq!(normalized_similarity(&isolated).unwrap(), isolated);
    }

    #[test]
    fn recovers_blocks() {
        let w = block_diag(&[4, 3, 5]);
        for lap in [LaplacianKind::Normalized, LaplacianKind::Unnormalized] {
            let cfg = SpectralConfig {
                laplacian: lap,
                ..Default::default()
            };
            let r = spectral_cluster(&w, 3, &cfg).unwrap();
            for i in 0..12 {
                for j in 0..12 {
                    let same = (i < 4) == (j < 4) && (i < 7) == (j < 7);
                    assert_eq!(r.labels[i] == r.labels[j], same, "{lap:?} {:?}", r.labels);
                }
            }
            assert!(r.eigengap > 0.1, "{lap:?} gap {}", r.eigengap);
        }
    }

    #[test]
    fn kmeans_simple_and_deterministic() {
        let pts = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![5.0, 5.0],
            vec![5.1, 5.0],
            vec![0.0, 0.1],
        ])
        .unwrap();
        let cfg = KMeansConfig {
            seed: 3,
            ..Default::default()
        };
        let a = kmeans(&pts, 2, &cfg).unwrap();
        assert_eq!(a, kmeans(&pts, 2, &cfg).unwrap());
        assert_eq!(a.labels[0], a.labels[1]);
        assert_eq!(a.labels[0], a.labels[4]);
        assert_ne!(a.labels[0], a.labels[2]);
        assert!(a.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(kmeans(&pts, 6, &cfg).is_err());
        assert!(kmeans(&pts, 0, &cfg).is_err());
    }

    #[test]
    fn kmeans_k_equals_n_and_duplicates() {
        let pts = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let r = kmeans(&pts, 3, &KMeansConfig::default()).unwrap();
        let mut sorted = r.labels.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
        assert_eq!(r.wcss, 0.0);
    }
}
