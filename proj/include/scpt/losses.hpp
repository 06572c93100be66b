#pragma once

#include <vector>

#include "scpt/graph.hpp"
#include "scpt/tensor.hpp"

namespace scpt {

struct LossWeights {
  double lambda1 = 0.1;  // specific-branch L1
  double lambda2 = 0.1;  // shared/specific orthogonality
  double lambda3 = 0.6;  // subject supervision

  void validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0))
      throw Error("loss weights must be finite and >= 0");
  }
};

// "sum" reproduces the literal per-layer penalties; "mean" divides the L1
// term by N*D and the orthogonality term by N^2 so the lambdas stay
// scale-robust across model sizes.
enum class LossNorm { kMean, kSum };
LossNorm parse_loss_norm(const std::string& s);

struct LossReport {
  double task = 0.0;
  double specific = 0.0;
  double orth = 0.0;
  double sub = 0.0;
  double total = 0.0;
  std::vector<double> specific_per_layer;
  std::vector<double> orth_per_layer;
};

// --- plain-value operations ---

// -log softmax(logits)[label], numerically stable.
double task_loss(const Tensor& logits, int label);

// (1/L) sum_l ||corr_l||_1; mean mode divides each layer by its numel.
double specific_sparsity_loss(const std::vector<Tensor>& corrections, LossNorm norm);
double specific_sparsity_loss(const std::vector<Tensor>& corrections, LossNorm norm,
                              std::vector<double>* per_layer);

// (1/L) sum_l ||shared_l specific_l^T||_F^2; mean mode divides by N^2.
double orthogonality_loss(const std::vector<Tensor>& shared, const std::vector<Tensor>& specific,
                          LossNorm norm);
double orthogonality_loss(const std::vector<Tensor>& shared, const std::vector<Tensor>& specific,
                          LossNorm norm, std::vector<double>* per_layer);

// cross-entropy of the linear subject head on the specific class feature
double subject_loss(const Tensor& specific_cls, const Tensor& head_w, const Tensor& head_b, int y_sub);

// weighted sum per the four-term objective; asserts non-negativity and
// finiteness of the components.
LossReport total_loss(double task, double specific, double orth, double sub, const LossWeights& w);

// --- graph builders (same math on tape variables) ---

VarId graph_specific_sparsity(Graph& g, const std::vector<VarId>& corrections, LossNorm norm);
VarId graph_orthogonality(Graph& g, const std::vector<VarId>& shared, const std::vector<VarId>& specific,
                          LossNorm norm);

}  // namespace scpt
