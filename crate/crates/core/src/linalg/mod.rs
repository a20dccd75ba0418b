//! Dense matrix primitives and symmetric eigensolvers.

mod cholesky;
mod eigen;
mod matrix;

pub use cholesky::{backward_solve_t, cholesky, forward_solve, spd_solve};
pub use eigen::{default_ridge, fix_signs, gen_sym_eig_topk, sym_eig, sym_eig_topk, EigPairs};
pub use matrix::{
    add_row_vector, center_columns, column_means, dot, norm, orthonormalize_columns,
    subtract_row_vector, Matrix,
};

use crate::scalar::Scalar;

/// `||U2 - U1 (U1^t U2)||_F` for orthonormal column blocks; an upper bound
/// on the sine of the largest principal angle between the two subspaces.
pub fn subspace_distance<T: Scalar>(u1: &Matrix<T>, u2: &Matrix<T>) -> T {
    let proj = u1.matmul(&u1.t_matmul(u2).expect("same ambient dimension")).expect("dims");
    u2.sub(&proj).expect("dims").frobenius_norm()
}
