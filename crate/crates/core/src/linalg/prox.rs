//! Proximal operators of the entrywise l1 norm and the cross-layer group norm.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, MatrixStack};
use crate::par;

/// Scalar soft threshold `sign(b) * max(|b| - tau, 0)`.
#[inline]
pub fn soft_threshold(b: f64, tau: f64) -> f64 {
    if b > tau {
        b - tau
    } else if b < -tau {
        b + tau
    } else {
        0.0
    }
}

fn check_threshold(name: &'static str, tau: f64) -> Result<()> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::invalid(
            name,
            format!("threshold must be finite and nonnegative, got {tau}"),
        ));
    }
    Ok(())
}

/// Entrywise soft thresholding, the prox of `tau * ||.||_1`.
pub fn shrink(b: &Matrix, tau: f64) -> Result<Matrix> {
    check_threshold("tau", tau)?;
    Ok(b.map(move |v| soft_threshold(v, tau)))
}

/// Block soft thresholding across layers, the prox of `beta * sum_ij ||A_ij(.)||_2`.
///
/// For each position the vector of values over all layers is shrunk toward
/// zero by `beta` in Euclidean length; positions whose length does not exceed
/// `beta` (including all-zero positions) become zero in every layer. With a
/// single layer this is exactly [`shrink`].
pub fn group_shrink(a: &MatrixStack, beta: f64) -> Result<MatrixStack> {
    check_threshold("beta", beta)?;
    let shape = a[0].shape();
    if let Some((t, bad)) = a.iter().enumerate().find(|(_, l)| l.shape() != shape) {
        return Err(Error::shape(
            "group_shrink",
            format!("{}x{}", shape.0, shape.1),
            format!("layer {t} is {}x{}", bad.rows(), bad.cols()),
        ));
    }
    if a.len() == 1 {
        return MatrixStack::new(vec![shrink(&a[0], beta)?]);
    }

    let layers = a.layers();
    let (rows, cols) = shape;
    let depth = layers.len();
    // Interleaved scratch: for entry e, values of all layers at [e*depth..(e+1)*depth].
    let mut packed = vec![0.0; rows * cols * depth];
    par::for_each_row(&mut packed, depth, |e, group| {
        let mut sq = 0.0;
        for (slot, layer) in group.iter_mut().zip(layers) {
            let v = layer.as_slice()[e];
            *slot = v;
            sq += v * v;
        }
        let g = sq.sqrt();
        if g > beta {
            let s = (g - beta) / g;
            group.iter_mut().for_each(|v| *v *= s);
        } else {
            group.iter_mut().for_each(|v| *v = 0.0);
        }
    });
    let out = (0..depth)
        .map(|t| Matrix::from_raw(rows, cols, packed.iter().skip(t).step_by(depth).copied().collect()))
        .collect();
    MatrixStack::new(out)
}

/// Group norm `sum_ij sqrt(sum_t W_ij(t)^2)`; equals `||W||_1` exactly for one layer.
pub fn group_norm(stack: &MatrixStack) -> f64 {
    if stack.len() == 1 {
        return stack[0].l1_norm();
    }
    let len = stack[0].as_slice().len();
    (0..len)
        .map(|e| stack.iter().map(|l| l.as_slice()[e].powi(2)).sum::<f64>().sqrt())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(v: f64) -> Matrix {
        Matrix::new(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn shrink_examples() {
        assert!((shrink(&scalar(0.5), 0.2).unwrap()[(0, 0)] - 0.3).abs() < 1e-15);
        assert_eq!(shrink(&scalar(-0.1), 0.2).unwrap()[(0, 0)], 0.0);
        let b = Matrix::from_rows(&[vec![1.5, -2.0], vec![0.0, 3.25]]).unwrap();
        assert_eq!(shrink(&b, 0.0).unwrap(), b);
        assert!(shrink(&b, -1e-9).is_err());
        assert!(shrink(&b, f64::NAN).is_err());
    }

    #[test]
    fn group_shrink_examples() {
        let a = MatrixStack::new(vec![scalar(3.0), scalar(4.0)]).unwrap();
        let z = group_shrink(&a, 1.0).unwrap();
        assert!((z[0][(0, 0)] - 2.4).abs() < 1e-14);
        assert!((z[1][(0, 0)] - 3.2).abs() < 1e-14);

        let a = MatrixStack::new(vec![scalar(0.3), scalar(0.4)]).unwrap();
        let z = group_shrink(&a, 1.0).unwrap();
        assert_eq!((z[0][(0, 0)], z[1][(0, 0)]), (0.0, 0.0));

        let a = MatrixStack::new(vec![scalar(0.5)]).unwrap();
        assert!((group_shrink(&a, 0.2).unwrap()[0][(0, 0)] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn group_shrink_zero_group_and_shape_errors() {
        let a = MatrixStack::new(vec![Matrix::zeros(2, 2), Matrix::zeros(2, 2)]).unwrap();
        let z = group_shrink(&a, 0.0).unwrap();
        assert!(z.iter().all(|l| l.max_abs() == 0.0));
        let bad = MatrixStack::new(vec![Matrix::zeros(2, 2), Matrix::zeros(3, 2)]).unwrap();
        assert!(group_shrink(&bad, 0.1).is_err());
    }

    #[test]
    fn group_norm_examples() {
        let a = MatrixStack::new(vec![scalar(3.0), scalar(4.0)]).unwrap();
        assert_eq!(group_norm(&a), 5.0);
        let b = Matrix::from_rows(&[vec![0.0, -1.5], vec![2.0, 0.0]]).unwrap();
        assert_eq!(group_norm(&MatrixStack::new(vec![b]).unwrap()), 3.5);
    }

    proptest! {
        #[test]
        fn shrink_is_odd_and_lipschitz(a in -10.0f64..10.0, b in -10.0f64..10.0, tau in 0.0f64..5.0) {
            prop_assert_eq!(soft_threshold(-a, tau), -soft_threshold(a, tau));
            prop_assert!((soft_threshold(a, tau) - soft_threshold(b, tau)).abs() <= (a - b).abs() + 1e-15);
        }

        #[test]
        fn single_layer_group_shrink_is_shrink(vals in proptest::collection::vec(-5.0f64..5.0, 6), beta in 0.0f64..3.0) {
            let m = Matrix::new(2, 3, vals).unwrap();
            let g = group_shrink(&MatrixStack::new(vec![m.clone()]).unwrap(), beta).unwrap();
            prop_assert_eq!(&g[0], &shrink(&m, beta).unwrap());
        }
    }
}
