#pragma once

#include <vector>

#include "scpt/tensor.hpp"

namespace scpt {

// Rank-S factors of an N x D matrix: M ~= U_s * diag(sigma) * V_s^T with
// orthonormal columns in U_s (N x S) and V_s (D x S), sigma descending.
// Sign convention: the largest-magnitude entry of each V_s column is
// positive. When the whole matrix is numerically zero (sigma_1 < 1e-12)
// the factors fall back to zero sigma and canonical basis columns.
struct SubspaceFactors {
  Tensor u;               // N x S
  std::vector<double> sigma;  // length S, descending, >= 0
  Tensor v;               // D x S

  int rank() const { return static_cast<int>(sigma.size()); }
  Tensor reconstruct() const;  // U * diag(sigma) * V^T
};

// Best rank-S approximation via one-sided Jacobi. 1 <= S <= min(N, D).
SubspaceFactors truncated_svd(const Tensor& m, int s);

// All min(N, D) singular values, descending (no truncation).
std::vector<double> singular_values(const Tensor& m);

// cls (1 x D) projected onto the subspace: returns cls * V_s (1 x S).
Tensor emotion_project(const Tensor& cls_feature, const SubspaceFactors& f);

}  // namespace scpt
