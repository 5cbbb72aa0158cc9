#pragma once

#include <utility>

#include "fggan/tensor.hpp"

namespace fggan {

// Mean vector and covariance matrix of a sample, as used by the Frechet
// distance. sigma uses the unbiased n-1 divisor.
struct GaussianStats {
  Tensor mu;     // [d]
  Tensor sigma;  // [d x d], symmetric
};

struct EigDecomposition {
  Tensor values;   // [d], ascending
  Tensor vectors;  // [d x d], column i pairs with values[i]
};

// Standard row-major matrix product a[m x k] * b[k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
// a[m x k] * b[n x k]^T without materialising the transpose.
Tensor matmul_transb(const Tensor& a, const Tensor& b);
// a[k x m]^T * b[k x n].
Tensor matmul_transa(const Tensor& a, const Tensor& b);

// Max-subtracted softmax of a rank-1 tensor.
Tensor softmax(const Tensor& logits);
// Row-wise softmax of a rank-2 tensor.
Tensor softmax_rows(const Tensor& logits);

// v / ||v||. Throws ValueError if ||v|| <= 1e-12.
Tensor l2_normalize(const Tensor& v);
// Row-wise normalisation; same degeneracy rule per row.
Tensor l2_normalize_rows(const Tensor& m);

// Pairwise dot products of already unit-normalised rows: out[i][j] = A_i . B_j.
Tensor cosine_sim_matrix(const Tensor& a, const Tensor& b);

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Input must be
// symmetric within 1e-9 (max |S_ij - S_ji|).
EigDecomposition sym_eig(const Tensor& s);

// Symmetric PSD square root via eigendecomposition. Eigenvalues in
// (-1e-6, 0) are clamped to zero; below that the matrix is rejected.
Tensor sqrtm_psd(const Tensor& s);

// Column means and unbiased covariance of x[n x d]; n must be >= 2.
GaussianStats fit_gaussian(const Tensor& x);

double dot(const Tensor& a, const Tensor& b);
double trace(const Tensor& m);
Tensor transpose(const Tensor& m);
Tensor identity(std::size_t d);

}  // namespace fggan
