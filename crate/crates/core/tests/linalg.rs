use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rogsure::linalg::{
    eigenvalues, group_norm, group_shrink, pca_basis, shrink, spectral_norm, top_eigenpairs, Matrix, MatrixStack,
};

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = random_matrix(rng, n, n);
    Matrix::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)]).unwrap()
}

fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Full spectrum by power iteration on a shifted matrix with Hotelling deflation.
fn deflation_spectrum(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let shift = (0..n)
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut a = Matrix::from_fn(n, n, |i, j| m[(i, j)] + if i == j { shift } else { 0.0 }).unwrap();
    let mut out = Vec::new();
    for k in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i * 7 + k * 3) as f64 * 0.1).collect();
        for _ in 0..20_000 {
            let w = mat_vec(&a, &v);
            let nw = norm(&w);
            if nw == 0.0 {
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / nw).collect();
            let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if delta < 1e-15 {
                break;
            }
        }
        // Rayleigh quotient
        let av = mat_vec(&a, &v);
        let lambda: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
        out.push(lambda - shift);
        a = Matrix::from_fn(n, n, |i, j| a[(i, j)] - lambda * v[i] * v[j]).unwrap();
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

#[test]
fn eigenpairs_match_deflation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..5 {
        let m = random_symmetric(&mut rng, 6);
        let pairs = top_eigenpairs(&m, 6).unwrap();
        let oracle = deflation_spectrum(&m);
        for (got, want) in pairs.values.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-8, "{:?} vs {oracle:?}", pairs.values);
        }
        for i in 0..6 {
            let v = pairs.vector(i);
            let mv = mat_vec(&m, &v);
            let resid: f64 = mv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - pairs.values[i] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(resid < 1e-8, "residual {resid}");
        }
    }
}

#[test]
fn spectral_norm_is_root_of_gram_top_eigenvalue() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let m = random_matrix(&mut rng, 4, 7);
        let top = top_eigenpairs(&m.gram(), 1).unwrap().values[0];
        assert!((spectral_norm(&m) - top.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn pca_reconstruction_error_is_discarded_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_matrix(&mut rng, 5, 20);
    let b = pca_basis(&x, 3).unwrap();
    assert_eq!(b.shape(), (5, 3));

    // centered covariance scatter, as the basis is fitted on centered data
    let mean: Vec<f64> = (0..5).map(|i| x.row(i).iter().sum::<f64>() / 20.0).collect();
    let xc = Matrix::from_fn(5, 20, |i, j| x[(i, j)] - mean[i]).unwrap();
    let spectrum = eigenvalues(&xc.outer_gram()).unwrap();
    let discarded: f64 = {
        let mut s = spectrum.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        s[3..].iter().sum()
    };
    let proj = b.matmul(&b.t_matmul(&xc).unwrap()).unwrap();
    let err = xc.sub(&proj).unwrap().frobenius_norm().powi(2);
    assert!((err - discarded).abs() < 1e-8, "{err} vs {discarded}");
}

#[test]
fn pca_recovers_a_line() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = Matrix::from_columns(&[vec![1.0, 1.0], vec![-2.0, -2.0], vec![0.5, 0.5], vec![3.0, 3.0]]).unwrap();
    let b = pca_basis(&x, 1).unwrap();
    assert!((b[(0, 0)].abs() - s).abs() < 1e-10 && (b[(1, 0)].abs() - s).abs() < 1e-10);
    assert_eq!(b[(0, 0)].signum(), b[(1, 0)].signum());
}

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..24)
}

proptest! {
    #[test]
    fn shrink_is_odd_and_nonexpansive(a in entries(), b in entries(), tau in 0.0..5.0f64) {
        let n = a.len().min(b.len());
        let ma = Matrix::new(1, n, a[..n].to_vec()).unwrap();
        let mb = Matrix::new(1, n, b[..n].to_vec()).unwrap();
        let sa = shrink(&ma, tau).unwrap();
        let sneg = shrink(&ma.scale(-1.0), tau).unwrap();
        let sb = shrink(&mb, tau).unwrap();
        for j in 0..n {
            prop_assert_eq!(sneg[(0, j)], -sa[(0, j)]);
            prop_assert!((sa[(0, j)] - sb[(0, j)]).abs() <= (ma[(0, j)] - mb[(0, j)]).abs() + 1e-12);
            prop_assert!(sa[(0, j)].abs() <= ma[(0, j)].abs());
        }
    }

    #[test]
    fn group_shrink_scales_each_group_uniformly(
        layers in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 9), 1..4),
        beta in 0.0..4.0f64,
    ) {
        let stack = MatrixStack::new(layers.iter().map(|v| Matrix::new(3, 3, v.clone()).unwrap()).collect()).unwrap();
        let out = group_shrink(&stack, beta).unwrap();
        for idx in 0..9 {
            let (i, j) = (idx / 3, idx % 3);
            let g: f64 = stack.iter().map(|m| m[(i, j)].powi(2)).sum::<f64>().sqrt();
            let factor = if g > beta { 1.0 - beta / g } else { 0.0 };
            for t in 0..stack.len() {
                prop_assert!((out[t][(i, j)] - factor * stack[t][(i, j)]).abs() <= 1e-12);
            }
        }
        prop_assert!(group_norm(&out) <= group_norm(&stack) + 1e-9);
    }

    #[test]
    fn single_layer_group_shrink_is_shrink(v in prop::collection::vec(-5.0..5.0f64, 4), beta in 0.0..3.0f64) {
        let m = Matrix::new(2, 2, v).unwrap();
        let g = group_shrink(&MatrixStack::new(vec![m.clone()]).unwrap(), beta).unwrap();
        let s = shrink(&m, beta).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((g[0][(i, j)] - s[(i, j)]).abs() <= 1e-12);
            }
        }
    }
}
