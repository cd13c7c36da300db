use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rogsure::clustering::{
    affinity, kmeans, normalized_similarity, spectral_cluster, AffinityKind, KMeansConfig, SpectralConfig,
};
use rogsure::fusion::{binarize_by_median, fuse_product};
use rogsure::linalg::{eigenvalues, Matrix};
use rogsure::metrics::clustering_accuracy;
use rogsure::solver::{fit_rogsure, SolverConfig};
use rogsure::synth::{generate_uos, UoSSpec};

fn wcss(points: &Matrix, labels: &[usize], k: usize) -> f64 {
    let dims = points.cols();
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..points.rows()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let centroid: Vec<f64> = (0..dims)
            .map(|d| members.iter().map(|&i| points[(i, d)]).sum::<f64>() / members.len() as f64)
            .collect();
        total += members
            .iter()
            .map(|&i| (0..dims).map(|d| (points[(i, d)] - centroid[d]).powi(2)).sum::<f64>())
            .sum::<f64>();
    }
    total
}

#[test]
fn kmeans_matches_exhaustive_partition_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..10 {
        let points = Matrix::from_fn(8, 2, |_, _| rng.random_range(-3.0..3.0)).unwrap();
        let best = (0u32..1 << 8)
            .map(|bits| (0..8).map(|i| ((bits >> i) & 1) as usize).collect::<Vec<_>>())
            .filter(|labels| labels.contains(&0) && labels.contains(&1))
            .map(|labels| wcss(&points, &labels, 2))
            .fold(f64::INFINITY, f64::min);
        let got = kmeans(
            &points,
            2,
            &KMeansConfig {
                seed: trial,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(
            (got.wcss - best).abs() <= 1e-9 * best.max(1.0),
            "trial {trial}: {} vs {best}",
            got.wcss
        );
        assert!((wcss(&points, &got.labels, 2) - got.wcss).abs() <= 1e-9 * best.max(1.0));
    }
}

#[test]
fn kmeans_with_one_point_per_cluster() {
    let points = Matrix::from_rows(&[vec![0.0, 1.0], vec![5.0, 2.0], vec![-3.0, 4.0]]).unwrap();
    let got = kmeans(&points, 3, &KMeansConfig::default()).unwrap();
    assert_eq!(got.wcss, 0.0);
    let mut sorted = got.labels.clone();
    sorted.sort();
    assert_eq!(sorted, vec![0, 1, 2]);
}

#[test]
fn spectral_clustering_is_permutation_equivariant() {
    let n = 10;
    let block = |i: usize| usize::from(i >= 4);
    let w = Matrix::from_fn(n, n, |i, j| if i != j && block(i) == block(j) { 1.0 } else { 0.0 }).unwrap();
    let perm = [7, 2, 9, 0, 4, 1, 8, 3, 6, 5];
    let wp = Matrix::from_fn(n, n, |i, j| w[(perm[i], perm[j])]).unwrap();
    let cfg = SpectralConfig::default();
    let labels = spectral_cluster(&w, 2, &cfg).unwrap().labels;
    let permuted = spectral_cluster(&wp, 2, &cfg).unwrap().labels;
    let truth: Vec<usize> = (0..n).map(block).collect();
    assert_eq!(clustering_accuracy(&labels, &truth).unwrap().accuracy, 1.0);
    let unpermuted: Vec<usize> = (0..n)
        .map(|i| permuted[perm.iter().position(|&p| p == i).unwrap()])
        .collect();
    assert_eq!(clustering_accuracy(&unpermuted, &truth).unwrap().accuracy, 1.0);
}

#[test]
fn planted_subspaces_are_recovered_from_fused_coefficients() {
    let spec = UoSSpec {
        min_angle: Some(45f64.to_radians()),
        seed: 4,
        ..UoSSpec::uniform(vec![20, 15], 3, 2, 20)
    };
    let gt = generate_uos(&spec).unwrap();
    let fit = fit_rogsure(&gt.observed, &SolverConfig::default()).unwrap();
    let bins: Vec<Matrix> = fit.w.iter().map(|w| binarize_by_median(w).unwrap()).collect();
    let fused = fuse_product(&bins).unwrap();
    let labels = spectral_cluster(&fused.total, 3, &SpectralConfig::default())
        .unwrap()
        .labels;
    let acc = clustering_accuracy(&labels, &gt.labels).unwrap().accuracy;
    assert!(acc >= 0.95, "accuracy {acc}");
}

fn square(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| Matrix::new(n, n, v).unwrap())
}

proptest! {
    #[test]
    fn affinity_is_exactly_symmetric(w in square(7)) {
        for kind in [AffinityKind::Magnitude, AffinityKind::Raw] {
            let a = affinity(&w, kind).unwrap();
            for i in 0..7 {
                for j in 0..7 {
                    prop_assert_eq!(a[(i, j)].to_bits(), a[(j, i)].to_bits());
                }
            }
        }
    }

    #[test]
    fn normalized_similarity_spectrum_in_unit_interval(w in square(6)) {
        let a = affinity(&w, AffinityKind::Magnitude).unwrap();
        let g = normalized_similarity(&a).unwrap();
        for ev in eigenvalues(&g).unwrap() {
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&ev), "eigenvalue {}", ev);
        }
    }
}
