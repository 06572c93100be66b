#pragma once

#include "scpt/model.hpp"
#include "scpt/svd.hpp"

namespace scpt {

// Decoupled shared-specific adapter. Per layer the correction of the
// token matrix X splits into a low-rank shared branch X A B^T and a
// two-layer MLP specific branch; both are zero at initialization (B = 0,
// MLP second layer = 0).

// Gamma_shared = X * A * B^T.
VarId dssa_shared_correction(ModelBinding& mb, int layer, VarId x);

// Gamma_specific = relu(X W1 + b1) W2 + b2, rowwise.
VarId dssa_specific_correction(ModelBinding& mb, int layer, VarId x);

// Plain-value versions for direct use outside a graph.
Tensor shared_correction(const Tensor& x, const Tensor& a, const Tensor& b);
Tensor specific_correction(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                           const Tensor& b2);

}  // namespace scpt
