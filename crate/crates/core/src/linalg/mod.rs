//! Dense matrix primitives: storage, products, proximal operators and
//! symmetric eigen decompositions.

mod eigen;
mod matrix;
mod prox;

pub use eigen::{
    column_space, eigenvalues, orthonormalize, pca_basis, spectral_norm, top_eigenpairs, EigenPairs, Pca, SYMMETRY_TOL,
};
pub use matrix::{Matrix, MatrixStack, ModalityStack};
pub use prox::{group_norm, group_shrink, shrink, soft_threshold};
