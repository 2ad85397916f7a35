#pragma once

#include "gppca/types.hpp"

#include <Eigen/Cholesky>

namespace gppca {

/// Cholesky with adaptive jitter: starts at 1e-10 * trace/n and doubles at
/// most 10 times; throws NumericError if the matrix still fails to factor.
/// The jitter actually applied is written to *jitter_used when non-null.
Eigen::LLT<Matrix> llt_jittered(const Matrix& A, double* jitter_used = nullptr);

/// LDLT counterpart for symmetric positive semidefinite systems.
Eigen::LDLT<Matrix> ldlt_jittered(const Matrix& A, double* jitter_used = nullptr);

double log_det(const Eigen::LLT<Matrix>& llt);

/// Flips each column so its largest-magnitude entry is positive (first such
/// entry on ties). Fixes the sign ambiguity of eigenvector bases.
void sign_normalize_columns(Matrix& A);

/// Orthonormal basis of the column space (thin Householder QR).
Matrix orthonormalize(const Matrix& A);

/// max-abs entry of A^T A - I.
double orthonormality_defect(const Matrix& A);

/// Columns d..n-1 of a full QR of H: orthonormal basis of the complement of
/// col(H). Used by residual-space computations.
Matrix orthonormal_complement(const Matrix& H);

}  // namespace gppca
