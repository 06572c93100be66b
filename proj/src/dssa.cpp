#include "scpt/dssa.hpp"

namespace scpt {

VarId dssa_shared_correction(ModelBinding& mb, int layer, VarId x) {
  Graph& g = mb.graph();
  const std::string base = "train.dssa.l" + std::to_string(layer) + ".";
  return g.matmul(g.matmul(x, mb(base + "a")), g.transpose(mb(base + "b")));
}

VarId dssa_specific_correction(ModelBinding& mb, int layer, VarId x) {
  Graph& g = mb.graph();
  const std::string base = "train.dssa.l" + std::to_string(layer) + ".";
  VarId h = g.relu(g.add_rowvec(g.matmul(x, mb(base + "mlp.w1")), mb(base + "mlp.b1")));
  return g.add_rowvec(g.matmul(h, mb(base + "mlp.w2")), mb(base + "mlp.b2"));
}

Tensor shared_correction(const Tensor& x, const Tensor& a, const Tensor& b) {
  if (x.rank() != 2 || a.rank() != 2 || b.rank() != 2 || x.cols() != a.rows() || a.cols() != b.cols() ||
      b.rows() != x.cols())
    throw ShapeMismatch("shared_correction: X " + x.shape_str() + ", A " + a.shape_str() + ", B " +
                        b.shape_str());
  const int n = x.rows(), d = x.cols(), r = a.cols();
  Tensor xa({n, r});
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) {
      const double xv = x.at(i, k);
      if (xv == 0.0) continue;
      for (int j = 0; j < r; ++j) xa.at(i, j) += xv * a.at(k, j);
    }
  Tensor out({n, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < r; ++k) acc += xa.at(i, k) * b.at(j, k);
      out.at(i, j) = acc;
    }
  return out;
}

Tensor specific_correction(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                           const Tensor& b2) {
  if (x.rank() != 2 || x.cols() != w1.rows() || w1.cols() != w2.rows() || w2.cols() != x.cols() ||
      b1.cols() != w1.cols() || b2.cols() != w2.cols())
    throw ShapeMismatch("specific_correction: bad shapes");
  const int n = x.rows(), d = x.cols(), h = w1.cols();
  Tensor out({n, d});
  std::vector<double> hid(static_cast<size_t>(h));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < h; ++j) {
      double acc = b1.at(0, j);
      for (int k = 0; k < d; ++k) acc += x.at(i, k) * w1.at(k, j);
      hid[static_cast<size_t>(j)] = acc > 0.0 ? acc : 0.0;
    }
    for (int j = 0; j < d; ++j) {
      double acc = b2.at(0, j);
      for (int k = 0; k < h; ++k) acc += hid[static_cast<size_t>(k)] * w2.at(k, j);
      out.at(i, j) = acc;
    }
  }
  return out;
}

}  // namespace scpt
