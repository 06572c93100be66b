#include "scpt/losses.hpp"

#include <cmath>

namespace scpt {

LossNorm parse_loss_norm(const std::string& s) {
  if (s == "mean") return LossNorm::kMean;
  if (s == "sum") return LossNorm::kSum;
  throw ConfigError("loss normalization must be 'mean' or 'sum', got '" + s + "'");
}

double task_loss(const Tensor& logits, int label) {
  if (logits.rank() != 2 || logits.rows() != 1) throw ShapeMismatch("task_loss: logits must be 1xK");
  if (!logits.all_finite()) throw NonFinite("task_loss: non-finite logits");
  const int k = logits.cols();
  if (label < 0 || label >= k)
    throw InvalidLabel("task_loss: label " + std::to_string(label) + " outside [0, " + std::to_string(k) + ")");
  double mx = logits.data[0];
  for (int j = 1; j < k; ++j) mx = std::max(mx, logits.data[static_cast<size_t>(j)]);
  double lse = 0.0;
  for (int j = 0; j < k; ++j) lse += std::exp(logits.data[static_cast<size_t>(j)] - mx);
  return mx + std::log(lse) - logits.data[static_cast<size_t>(label)];
}

double specific_sparsity_loss(const std::vector<Tensor>& corrections, LossNorm norm,
                              std::vector<double>* per_layer) {
  if (corrections.empty()) throw Error("specific_sparsity_loss: empty layer list");
  double total = 0.0;
  if (per_layer) per_layer->clear();
  for (const Tensor& c : corrections) {
    double s = 0.0;
    for (double v : c.data) s += std::fabs(v);
    if (norm == LossNorm::kMean) s /= static_cast<double>(c.numel());
    if (per_layer) per_layer->push_back(s);
    total += s;
  }
  return total / static_cast<double>(corrections.size());
}

double specific_sparsity_loss(const std::vector<Tensor>& corrections, LossNorm norm) {
  return specific_sparsity_loss(corrections, norm, nullptr);
}

double orthogonality_loss(const std::vector<Tensor>& shared, const std::vector<Tensor>& specific,
                          LossNorm norm, std::vector<double>* per_layer) {
  if (shared.empty() || shared.size() != specific.size())
    throw ShapeMismatch("orthogonality_loss: layer lists must match");
  double total = 0.0;
  if (per_layer) per_layer->clear();
  for (size_t l = 0; l < shared.size(); ++l) {
    const Tensor& a = shared[l];
    const Tensor& b = specific[l];
    require_same_shape(a, b, "orthogonality_loss");
    const int n = a.rows(), d = a.cols();
    double frob = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double dot = 0.0;
        for (int k = 0; k < d; ++k) dot += a.at(i, k) * b.at(j, k);
        frob += dot * dot;
      }
    if (norm == LossNorm::kMean) frob /= static_cast<double>(n) * static_cast<double>(n);
    if (per_layer) per_layer->push_back(frob);
    total += frob;
  }
  return total / static_cast<double>(shared.size());
}

double orthogonality_loss(const std::vector<Tensor>& shared, const std::vector<Tensor>& specific,
                          LossNorm norm) {
  return orthogonality_loss(shared, specific, norm, nullptr);
}

double subject_loss(const Tensor& specific_cls, const Tensor& head_w, const Tensor& head_b, int y_sub) {
  if (specific_cls.rank() != 2 || specific_cls.rows() != 1 || specific_cls.cols() != head_w.rows())
    throw ShapeMismatch("subject_loss: feature/head mismatch");
  const int k = head_w.cols();
  if (y_sub < 0 || y_sub >= k)
    throw InvalidLabel("subject_loss: subject " + std::to_string(y_sub) + " outside [0, " +
                       std::to_string(k) + ")");
  Tensor logits({1, k});
  for (int j = 0; j < k; ++j) {
    double acc = head_b.at(0, j);
    for (int i = 0; i < head_w.rows(); ++i) acc += specific_cls.at(0, i) * head_w.at(i, j);
    logits.at(0, j) = acc;
  }
  return task_loss(logits, y_sub);
}

LossReport total_loss(double task, double specific, double orth, double sub, const LossWeights& w) {
  w.validate();
  const double parts[4] = {task, specific, orth, sub};
  for (double p : parts) {
    if (!std::isfinite(p)) throw NonFiniteLoss("total_loss: non-finite component");
    if (p < -1e-12) throw NonFiniteLoss("total_loss: negative component");
  }
  LossReport r;
  r.task = task;
  r.specific = specific;
  r.orth = orth;
  r.sub = sub;
  r.total = task + w.lambda1 * specific + w.lambda2 * orth + w.lambda3 * sub;
  return r;
}

VarId graph_specific_sparsity(Graph& g, const std::vector<VarId>& corrections, LossNorm norm) {
  if (corrections.empty()) throw Error("graph_specific_sparsity: empty layer list");
  VarId acc = -1;
  for (VarId c : corrections) {
    VarId term = g.sum_abs(c);
    if (norm == LossNorm::kMean) term = g.scale(term, 1.0 / static_cast<double>(g.val(c).numel()));
    acc = (acc < 0) ? term : g.add(acc, term);
  }
  return g.scale(acc, 1.0 / static_cast<double>(corrections.size()));
}

VarId graph_orthogonality(Graph& g, const std::vector<VarId>& shared, const std::vector<VarId>& specific,
                          LossNorm norm) {
  if (shared.empty() || shared.size() != specific.size())
    throw ShapeMismatch("graph_orthogonality: layer lists must match");
  VarId acc = -1;
  for (size_t l = 0; l < shared.size(); ++l) {
    VarId prod = g.matmul(shared[l], g.transpose(specific[l]));
    VarId term = g.sum_sq(prod);
    if (norm == LossNorm::kMean) {
      const int n = g.val(shared[l]).rows();
      term = g.scale(term, 1.0 / (static_cast<double>(n) * static_cast<double>(n)));
    }
    acc = (acc < 0) ? term : g.add(acc, term);
  }
  return g.scale(acc, 1.0 / static_cast<double>(shared.size()));
}

}  // namespace scpt
