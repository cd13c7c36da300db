use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rogsure::classify::{build_cluster_model, classify_batch, classify_point, projection_scores, ClusterModel};
use rogsure::linalg::{Matrix, MatrixStack};
use rogsure::synth::{generate_uos, split_train_test, UoSSpec};

fn projector(b: &Matrix) -> Matrix {
    b.matmul_t(b).unwrap()
}

fn operator_norm_diff(a: &Matrix, b: &Matrix) -> f64 {
    rogsure::linalg::spectral_norm(&a.sub(b).unwrap())
}

fn oracle_labels(model: &ClusterModel, test: &MatrixStack) -> Vec<usize> {
    let projectors: Vec<Vec<Matrix>> = model.bases.iter().map(|c| c.iter().map(projector).collect()).collect();
    (0..test.n())
        .map(|j| {
            let scores: Vec<f64> = projectors
                .iter()
                .map(|per_t| {
                    per_t
                        .iter()
                        .zip(test.iter())
                        .map(|(p, x)| {
                            let col = x.column(j);
                            (0..p.rows())
                                .map(|i| (0..p.cols()).map(|k| p[(i, k)] * col[k]).sum::<f64>().powi(2))
                                .sum::<f64>()
                        })
                        .sum()
                })
                .collect();
            (0..scores.len())
                .max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)))
                .unwrap()
        })
        .collect()
}

#[test]
fn planted_projectors_are_recovered() {
    let gt = generate_uos(&UoSSpec {
        seed: 12,
        ..UoSSpec::uniform(vec![12, 10], 3, 2, 25)
    })
    .unwrap();
    let model = build_cluster_model(&gt.clean, &gt.labels, 3, &[2, 2]).unwrap();
    for c in 0..3 {
        for t in 0..2 {
            let err = operator_norm_diff(&projector(&model.bases[c][t]), &projector(&gt.bases[c][t]));
            assert!(err <= 0.05, "cluster {c} modality {t}: {err}");
        }
    }
}

#[test]
fn holdout_predictions_match_projector_oracle() {
    let spec = UoSSpec {
        corruption_fraction: 0.05,
        corruption_amplitude: 0.5,
        seed: 13,
        ..UoSSpec::uniform(vec![15, 12], 3, 2, 30)
    };
    let gt = generate_uos(&spec).unwrap();
    let (train, test) = split_train_test(&gt, 20, 1).unwrap();
    let model = build_cluster_model(&train.observed, &train.labels, 3, &[2, 2]).unwrap();
    let got = classify_batch(&model, &test.observed).unwrap();
    assert_eq!(got, oracle_labels(&model, &test.observed));
}

#[test]
fn scores_are_invariant_to_a_common_rotation() {
    let gt = generate_uos(&UoSSpec {
        seed: 14,
        ..UoSSpec::uniform(vec![6], 2, 2, 12)
    })
    .unwrap();
    let model = build_cluster_model(&gt.clean, &gt.labels, 2, &[2]).unwrap();

    // random orthogonal matrix from Gram-Schmidt
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let q =
        rogsure::linalg::orthonormalize(&Matrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0)).unwrap()).unwrap();
    let rotated = ClusterModel {
        bases: model
            .bases
            .iter()
            .map(|c| c.iter().map(|b| q.matmul(b).unwrap()).collect())
            .collect(),
        ..model.clone()
    };
    for j in 0..gt.clean.n() {
        let x = gt.observed[0].column(j);
        let qx = q
            .matmul(&Matrix::from_columns(std::slice::from_ref(&x)).unwrap())
            .unwrap()
            .column(0);
        let a = projection_scores(&model, &[x]).unwrap();
        let b = projection_scores(&rotated, &[qx]).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}

#[test]
fn point_in_a_basis_scores_its_full_energy() {
    let gt = generate_uos(&UoSSpec {
        seed: 16,
        ..UoSSpec::uniform(vec![8, 7], 3, 2, 10)
    })
    .unwrap();
    let model = build_cluster_model(&gt.clean, &gt.labels, 3, &[2, 2]).unwrap();
    let point: Vec<Vec<f64>> = (0..2)
        .map(|t| {
            let b = &model.bases[2][t];
            (0..b.rows()).map(|i| 0.6 * b[(i, 0)] - 1.1 * b[(i, 1)]).collect()
        })
        .collect();
    let energy: f64 = point.iter().flatten().map(|v| v * v).sum();
    let (label, scores) = classify_point(&model, &point).unwrap();
    assert_eq!(label, 2);
    assert!((scores[2] - energy).abs() < 1e-10);
    assert!(scores.iter().all(|&s| s >= 0.0 && s <= energy + 1e-10));
}
