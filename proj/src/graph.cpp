#include "scpt/graph.hpp"

#include <cmath>

namespace scpt {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void matmul_values(const Tensor& a, const Tensor& b, Tensor& out) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    double* orow = &out.data[static_cast<size_t>(i) * n];
    const double* arow = &a.data[static_cast<size_t>(i) * k];
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = &b.data[static_cast<size_t>(p) * n];
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a^T * b, where a is (m x k), b is (m x n), out is (k x n)
void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    const double* arow = &a.data[static_cast<size_t>(i) * k];
    const double* brow = &b.data[static_cast<size_t>(i) * n];
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* orow = &out.data[static_cast<size_t>(p) * n];
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a * b^T, where a is (m x k), b is (n x k), out is (m x n)
void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const int m = a.rows(), k = a.cols(), n = b.rows();
  for (int i = 0; i < m; ++i) {
    const double* arow = &a.data[static_cast<size_t>(i) * k];
    double* orow = &out.data[static_cast<size_t>(i) * n];
    for (int j = 0; j < n; ++j) {
      const double* brow = &b.data[static_cast<size_t>(j) * k];
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] += acc;
    }
  }
}

}  // namespace

Tensor& Graph::grad_of(VarId id) {
  Node& nd = node(id);
  if (!nd.grad_live) {
    nd.grad = Tensor(nd.val.shape);
    nd.grad_live = true;
  }
  return nd.grad;
}

VarId Graph::push(Tensor val, bool needs_grad, std::function<void(Graph&, Node&)> back) {
  Node nd;
  nd.val = std::move(val);
  nd.needs_grad = needs_grad;
  nd.back = std::move(back);
  nodes_.push_back(std::move(nd));
  return static_cast<VarId>(nodes_.size() - 1);
}

VarId Graph::constant(Tensor v) { return push(std::move(v), false, nullptr); }

VarId Graph::param(const Tensor& v, Tensor* grad_sink) {
  VarId id = push(v, true, nullptr);
  node(id).sink = grad_sink;
  return id;
}

VarId Graph::add(VarId a, VarId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] += bv.data[i];
  bool ng = wants(a) || wants(b);
  return push(std::move(out), ng, [a, b](Graph& g, Node& nd) {
    if (g.wants(a)) {
      Tensor& da = g.grad_of(a);
      for (int64_t i = 0; i < nd.grad.numel(); ++i) da.data[i] += nd.grad.data[i];
    }
    if (g.wants(b)) {
      Tensor& db = g.grad_of(b);
      for (int64_t i = 0; i < nd.grad.numel(); ++i) db.data[i] += nd.grad.data[i];
    }
  });
}

VarId Graph::sub(VarId a, VarId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] -= bv.data[i];
  bool ng = wants(a) || wants(b);
  return push(std::move(out), ng, [a, b](Graph& g, Node& nd) {
    if (g.wants(a)) {
      Tensor& da = g.grad_of(a);
      for (int64_t i = 0; i < nd.grad.numel(); ++i) da.data[i] += nd.grad.data[i];
    }
    if (g.wants(b)) {
      Tensor& db = g.grad_of(b);
      for (int64_t i = 0; i < nd.grad.numel(); ++i) db.data[i] -= nd.grad.data[i];
    }
  });
}

VarId Graph::mul(VarId a, VarId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] *= bv.data[i];
  bool ng = wants(a) || wants(b);
  return push(std::move(out), ng, [a, b](Graph& g, Node& nd) {
    const Tensor& av2 = g.val(a);
    const Tensor& bv2 = g.val(b);
    if (g.wants(a)) {
      Tensor& da = g.grad_of(a);
      for (int64_t i = 0; i < nd.grad.numel(); ++i) da.data[i] += nd.grad.data[i] * bv2.data[i];
    }
    if (g.wants(b)) {
      Tensor& db = g.grad_of(b);
      for (int64_t i = 0; i < nd.grad.numel(); ++i) db.data[i] += nd.grad.data[i] * av2.data[i];
    }
  });
}

VarId Graph::scale(VarId a, double k) {
  Tensor out = val(a);
  for (double& v : out.data) v *= k;
  return push(std::move(out), wants(a), [a, k](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    Tensor& da = g.grad_of(a);
    for (int64_t i = 0; i < nd.grad.numel(); ++i) da.data[i] += k * nd.grad.data[i];
  });
}

VarId Graph::matmul(VarId a, VarId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
    throw ShapeMismatch("matmul: " + av.shape_str() + " * " + bv.shape_str());
  Tensor out({av.rows(), bv.cols()});
  matmul_values(av, bv, out);
  bool ng = wants(a) || wants(b);
  return push(std::move(out), ng, [a, b](Graph& g, Node& nd) {
    const Tensor& av2 = g.val(a);
    const Tensor& bv2 = g.val(b);
    if (g.wants(a)) matmul_nt_acc(nd.grad, bv2, g.grad_of(a));  // dA += G B^T
    if (g.wants(b)) matmul_tn_acc(av2, nd.grad, g.grad_of(b));  // dB += A^T G
  });
}

VarId Graph::transpose(VarId a) {
  const Tensor& av = val(a);
  if (av.rank() != 2) throw ShapeMismatch("transpose: need 2-D tensor");
  Tensor out({av.cols(), av.rows()});
  for (int i = 0; i < av.rows(); ++i)
    for (int j = 0; j < av.cols(); ++j) out.at(j, i) = av.at(i, j);
  return push(std::move(out), wants(a), [a](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    Tensor& da = g.grad_of(a);
    for (int i = 0; i < nd.grad.rows(); ++i)
      for (int j = 0; j < nd.grad.cols(); ++j) da.at(j, i) += nd.grad.at(i, j);
  });
}

VarId Graph::add_rowvec(VarId m, VarId r) {
  const Tensor& mv = val(m);
  const Tensor& rv = val(r);
  if (mv.rank() != 2 || rv.rank() != 2 || rv.rows() != 1 || rv.cols() != mv.cols())
    throw ShapeMismatch("add_rowvec: " + mv.shape_str() + " + " + rv.shape_str());
  Tensor out = mv;
  for (int i = 0; i < mv.rows(); ++i)
    for (int j = 0; j < mv.cols(); ++j) out.at(i, j) += rv.at(0, j);
  bool ng = wants(m) || wants(r);
  return push(std::move(out), ng, [m, r](Graph& g, Node& nd) {
    if (g.wants(m)) {
      Tensor& dm = g.grad_of(m);
      for (int64_t i = 0; i < nd.grad.numel(); ++i) dm.data[i] += nd.grad.data[i];
    }
    if (g.wants(r)) {
      Tensor& dr = g.grad_of(r);
      for (int i = 0; i < nd.grad.rows(); ++i)
        for (int j = 0; j < nd.grad.cols(); ++j) dr.at(0, j) += nd.grad.at(i, j);
    }
  });
}

VarId Graph::relu(VarId a) {
  Tensor out = val(a);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), wants(a), [a](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    const Tensor& av = g.val(a);
    Tensor& da = g.grad_of(a);
    for (int64_t i = 0; i < nd.grad.numel(); ++i)
      if (av.data[i] > 0.0) da.data[i] += nd.grad.data[i];
  });
}

VarId Graph::gelu(VarId a) {
  Tensor out = val(a);
  for (double& v : out.data) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  return push(std::move(out), wants(a), [a](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    const Tensor& av = g.val(a);
    Tensor& da = g.grad_of(a);
    for (int64_t i = 0; i < nd.grad.numel(); ++i) {
      const double x = av.data[i];
      const double d = 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
                       x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      da.data[i] += d * nd.grad.data[i];
    }
  });
}

VarId Graph::softmax_rows(VarId a) {
  const Tensor& av = val(a);
  if (av.rank() != 2) throw ShapeMismatch("softmax_rows: need 2-D tensor");
  Tensor out = av;
  for (int i = 0; i < av.rows(); ++i) {
    double mx = out.at(i, 0);
    for (int j = 1; j < av.cols(); ++j) mx = std::max(mx, out.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < av.cols(); ++j) {
      double e = std::exp(out.at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < av.cols(); ++j) out.at(i, j) /= sum;
  }
  return push(std::move(out), wants(a), [a](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    Tensor& da = g.grad_of(a);
    const Tensor& y = nd.val;
    for (int i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < y.cols(); ++j) dot += nd.grad.at(i, j) * y.at(i, j);
      for (int j = 0; j < y.cols(); ++j)
        da.at(i, j) += y.at(i, j) * (nd.grad.at(i, j) - dot);
    }
  });
}

VarId Graph::layernorm_rows(VarId x, VarId gain, VarId bias, double eps) {
  const Tensor& xv = val(x);
  const Tensor& gv = val(gain);
  const Tensor& bv = val(bias);
  if (xv.rank() != 2 || gv.cols() != xv.cols() || bv.cols() != xv.cols())
    throw ShapeMismatch("layernorm_rows: bad shapes");
  const int n = xv.rows(), d = xv.cols();
  Tensor out({n, d});
  for (int i = 0; i < n; ++i) {
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xv.at(i, j);
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      double c = xv.at(i, j) - mean;
      var += c * c;
    }
    var /= d;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < d; ++j)
      out.at(i, j) = (xv.at(i, j) - mean) * inv * gv.at(0, j) + bv.at(0, j);
  }
  bool ng = wants(x) || wants(gain) || wants(bias);
  return push(std::move(out), ng, [x, gain, bias, eps](Graph& g, Node& nd) {
    const Tensor& xv2 = g.val(x);
    const Tensor& gv2 = g.val(gain);
    const int n = xv2.rows(), d = xv2.cols();
    for (int i = 0; i < n; ++i) {
      double mean = 0.0;
      for (int j = 0; j < d; ++j) mean += xv2.at(i, j);
      mean /= d;
      double var = 0.0;
      for (int j = 0; j < d; ++j) {
        double c = xv2.at(i, j) - mean;
        var += c * c;
      }
      var /= d;
      const double inv = 1.0 / std::sqrt(var + eps);
      // xhat and the two row reductions the input gradient needs
      double mean_dxh = 0.0, mean_dxh_xh = 0.0;
      for (int j = 0; j < d; ++j) {
        const double xh = (xv2.at(i, j) - mean) * inv;
        const double dxh = nd.grad.at(i, j) * gv2.at(0, j);
        mean_dxh += dxh;
        mean_dxh_xh += dxh * xh;
      }
      mean_dxh /= d;
      mean_dxh_xh /= d;
      if (g.wants(x)) {
        Tensor& dx = g.grad_of(x);
        for (int j = 0; j < d; ++j) {
          const double xh = (xv2.at(i, j) - mean) * inv;
          const double dxh = nd.grad.at(i, j) * gv2.at(0, j);
          dx.at(i, j) += inv * (dxh - mean_dxh - xh * mean_dxh_xh);
        }
      }
      if (g.wants(gain)) {
        Tensor& dg = g.grad_of(gain);
        for (int j = 0; j < d; ++j) {
          const double xh = (xv2.at(i, j) - mean) * inv;
          dg.at(0, j) += nd.grad.at(i, j) * xh;
        }
      }
      if (g.wants(bias)) {
        Tensor& db = g.grad_of(bias);
        for (int j = 0; j < d; ++j) db.at(0, j) += nd.grad.at(i, j);
      }
    }
  });
}

VarId Graph::slice_rows(VarId a, int r0, int r1) {
  const Tensor& av = val(a);
  if (av.rank() != 2 || r0 < 0 || r1 > av.rows() || r0 >= r1)
    throw ShapeMismatch("slice_rows: bad range");
  const int d = av.cols();
  Tensor out({r1 - r0, d});
  std::copy(av.data.begin() + static_cast<size_t>(r0) * d,
            av.data.begin() + static_cast<size_t>(r1) * d, out.data.begin());
  return push(std::move(out), wants(a), [a, r0](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    Tensor& da = g.grad_of(a);
    const int d = nd.grad.cols();
    for (int i = 0; i < nd.grad.rows(); ++i)
      for (int j = 0; j < d; ++j) da.at(r0 + i, j) += nd.grad.at(i, j);
  });
}

VarId Graph::slice_cols(VarId a, int c0, int c1) {
  const Tensor& av = val(a);
  if (av.rank() != 2 || c0 < 0 || c1 > av.cols() || c0 >= c1)
    throw ShapeMismatch("slice_cols: bad range");
  Tensor out({av.rows(), c1 - c0});
  for (int i = 0; i < av.rows(); ++i)
    for (int j = c0; j < c1; ++j) out.at(i, j - c0) = av.at(i, j);
  return push(std::move(out), wants(a), [a, c0](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    Tensor& da = g.grad_of(a);
    for (int i = 0; i < nd.grad.rows(); ++i)
      for (int j = 0; j < nd.grad.cols(); ++j) da.at(i, c0 + j) += nd.grad.at(i, j);
  });
}

VarId Graph::concat_rows(VarId a, VarId b) {
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.cols())
    throw ShapeMismatch("concat_rows: " + av.shape_str() + " | " + bv.shape_str());
  Tensor out({av.rows() + bv.rows(), av.cols()});
  std::copy(av.data.begin(), av.data.end(), out.data.begin());
  std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.numel());
  bool ng = wants(a) || wants(b);
  const int ra = av.rows();
  return push(std::move(out), ng, [a, b, ra](Graph& g, Node& nd) {
    const int d = nd.grad.cols();
    if (g.wants(a)) {
      Tensor& da = g.grad_of(a);
      for (int i = 0; i < ra; ++i)
        for (int j = 0; j < d; ++j) da.at(i, j) += nd.grad.at(i, j);
    }
    if (g.wants(b)) {
      Tensor& db = g.grad_of(b);
      for (int i = ra; i < nd.grad.rows(); ++i)
        for (int j = 0; j < d; ++j) db.at(i - ra, j) += nd.grad.at(i, j);
    }
  });
}

VarId Graph::concat_cols(const std::vector<VarId>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: empty");
  int rows = val(parts[0]).rows();
  int total = 0;
  bool ng = false;
  for (VarId p : parts) {
    const Tensor& pv = val(p);
    if (pv.rank() != 2 || pv.rows() != rows) throw ShapeMismatch("concat_cols: row mismatch");
    total += pv.cols();
    ng = ng || wants(p);
  }
  Tensor out({rows, total});
  int off = 0;
  for (VarId p : parts) {
    const Tensor& pv = val(p);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < pv.cols(); ++j) out.at(i, off + j) = pv.at(i, j);
    off += pv.cols();
  }
  std::vector<VarId> ps = parts;
  return push(std::move(out), ng, [ps](Graph& g, Node& nd) {
    int off = 0;
    for (VarId p : ps) {
      const int c = g.val(p).cols();
      if (g.wants(p)) {
        Tensor& dp = g.grad_of(p);
        for (int i = 0; i < nd.grad.rows(); ++i)
          for (int j = 0; j < c; ++j) dp.at(i, j) += nd.grad.at(i, off + j);
      }
      off += c;
    }
  });
}

VarId Graph::reshape(VarId a, std::vector<int> shape) {
  const Tensor& av = val(a);
  if (Tensor::numel_of(shape) != av.numel()) throw ShapeMismatch("reshape: numel mismatch");
  Tensor out(std::move(shape), av.data);
  return push(std::move(out), wants(a), [a](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    Tensor& da = g.grad_of(a);
    for (int64_t i = 0; i < nd.grad.numel(); ++i) da.data[i] += nd.grad.data[i];
  });
}

VarId Graph::conv2d(VarId x, VarId w, VarId b, int stride, int pad) {
  const Tensor& xv = val(x);
  const Tensor& wv = val(w);
  const Tensor& bv = val(b);
  if (xv.rank() != 3 || wv.rank() != 4) throw ShapeMismatch("conv2d: x must be CxHxW, w CoxCixKhxKw");
  const int ci = xv.shape[0], h = xv.shape[1], iw = xv.shape[2];
  const int co = wv.shape[0], kh = wv.shape[2], kw = wv.shape[3];
  if (wv.shape[1] != ci) throw ShapeMismatch("conv2d: channel mismatch");
  if (bv.numel() != co) throw ShapeMismatch("conv2d: bias size mismatch");
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (iw + 2 * pad - kw) / stride + 1;
  if (oh < 1 || ow < 1) throw ShapeMismatch("conv2d: output would be empty");

  Tensor out({co, oh, ow});
  for (int oc = 0; oc < co; ++oc) {
    const double bias = bv.data[static_cast<size_t>(oc)];
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) out.at3(oc, oy, ox) = bias;
    for (int ic = 0; ic < ci; ++ic)
      for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx) {
          const double wgt = wv.data[((static_cast<size_t>(oc) * ci + ic) * kh + ky) * kw + kx];
          if (wgt == 0.0) continue;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= iw) continue;
              out.at3(oc, oy, ox) += wgt * xv.at3(ic, iy, ix);
            }
          }
        }
  }
  bool ng = wants(x) || wants(w) || wants(b);
  return push(std::move(out), ng, [x, w, b, stride, pad](Graph& g, Node& nd) {
    const Tensor& xv2 = g.val(x);
    const Tensor& wv2 = g.val(w);
    const int ci = xv2.shape[0], h = xv2.shape[1], iw = xv2.shape[2];
    const int co = wv2.shape[0], kh = wv2.shape[2], kw = wv2.shape[3];
    const int oh = nd.grad.shape[1], ow = nd.grad.shape[2];
    if (g.wants(b)) {
      Tensor& db = g.grad_of(b);
      for (int oc = 0; oc < co; ++oc) {
        double acc = 0.0;
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) acc += nd.grad.at3(oc, oy, ox);
        db.data[static_cast<size_t>(oc)] += acc;
      }
    }
    const bool want_x = g.wants(x);
    const bool want_w = g.wants(w);
    if (!want_x && !want_w) return;
    Tensor* dx = want_x ? &g.grad_of(x) : nullptr;
    Tensor* dw = want_w ? &g.grad_of(w) : nullptr;
    for (int oc = 0; oc < co; ++oc)
      for (int ic = 0; ic < ci; ++ic)
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx) {
            const size_t widx = ((static_cast<size_t>(oc) * ci + ic) * kh + ky) * kw + kx;
            const double wgt = wv2.data[widx];
            double wacc = 0.0;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= iw) continue;
                const double go = nd.grad.at3(oc, oy, ox);
                wacc += go * xv2.at3(ic, iy, ix);
                if (want_x) dx->at3(ic, iy, ix) += go * wgt;
              }
            }
            if (want_w) dw->data[widx] += wacc;
          }
  });
}

VarId Graph::instance_norm2d(VarId x, VarId gain, VarId bias, double eps) {
  const Tensor& xv = val(x);
  const Tensor& gv = val(gain);
  const Tensor& bv = val(bias);
  if (xv.rank() != 3) throw ShapeMismatch("instance_norm2d: x must be CxHxW");
  const int c = xv.shape[0], h = xv.shape[1], w = xv.shape[2];
  if (gv.numel() != c || bv.numel() != c) throw ShapeMismatch("instance_norm2d: gain/bias size");
  const int hw = h * w;
  Tensor out(xv.shape);
  for (int ch = 0; ch < c; ++ch) {
    const double* xp = &xv.data[static_cast<size_t>(ch) * hw];
    double* op = &out.data[static_cast<size_t>(ch) * hw];
    double mean = 0.0;
    for (int i = 0; i < hw; ++i) mean += xp[i];
    mean /= hw;
    double var = 0.0;
    for (int i = 0; i < hw; ++i) {
      double d = xp[i] - mean;
      var += d * d;
    }
    var /= hw;
    const double inv = 1.0 / std::sqrt(var + eps);
    const double gn = gv.data[static_cast<size_t>(ch)], bs = bv.data[static_cast<size_t>(ch)];
    for (int i = 0; i < hw; ++i) op[i] = (xp[i] - mean) * inv * gn + bs;
  }
  bool ng = wants(x) || wants(gain) || wants(bias);
  return push(std::move(out), ng, [x, gain, bias, eps](Graph& g, Node& nd) {
    const Tensor& xv2 = g.val(x);
    const Tensor& gv2 = g.val(gain);
    const int c = xv2.shape[0], hw = xv2.shape[1] * xv2.shape[2];
    for (int ch = 0; ch < c; ++ch) {
      const double* xp = &xv2.data[static_cast<size_t>(ch) * hw];
      const double* gp = &nd.grad.data[static_cast<size_t>(ch) * hw];
      double mean = 0.0;
      for (int i = 0; i < hw; ++i) mean += xp[i];
      mean /= hw;
      double var = 0.0;
      for (int i = 0; i < hw; ++i) {
        double d = xp[i] - mean;
        var += d * d;
      }
      var /= hw;
      const double inv = 1.0 / std::sqrt(var + eps);
      const double gn = gv2.data[static_cast<size_t>(ch)];
      double mean_dxh = 0.0, mean_dxh_xh = 0.0;
      for (int i = 0; i < hw; ++i) {
        const double xh = (xp[i] - mean) * inv;
        const double dxh = gp[i] * gn;
        mean_dxh += dxh;
        mean_dxh_xh += dxh * xh;
      }
      mean_dxh /= hw;
      mean_dxh_xh /= hw;
      if (g.wants(x)) {
        double* dxp = &g.grad_of(x).data[static_cast<size_t>(ch) * hw];
        for (int i = 0; i < hw; ++i) {
          const double xh = (xp[i] - mean) * inv;
          const double dxh = gp[i] * gn;
          dxp[i] += inv * (dxh - mean_dxh - xh * mean_dxh_xh);
        }
      }
      if (g.wants(gain)) {
        double acc = 0.0;
        for (int i = 0; i < hw; ++i) acc += gp[i] * (xp[i] - mean) * inv;
        g.grad_of(gain).data[static_cast<size_t>(ch)] += acc;
      }
      if (g.wants(bias)) {
        double acc = 0.0;
        for (int i = 0; i < hw; ++i) acc += gp[i];
        g.grad_of(bias).data[static_cast<size_t>(ch)] += acc;
      }
    }
  });
}

VarId Graph::sum_abs(VarId a) {
  const Tensor& av = val(a);
  double s = 0.0;
  for (double v : av.data) s += std::fabs(v);
  return push(Tensor::scalar(s), wants(a), [a](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    const double go = nd.grad.data[0];
    const Tensor& av2 = g.val(a);
    Tensor& da = g.grad_of(a);
    for (int64_t i = 0; i < av2.numel(); ++i) {
      const double v = av2.data[i];
      if (v > 0.0)
        da.data[i] += go;
      else if (v < 0.0)
        da.data[i] -= go;
    }
  });
}

VarId Graph::sum_sq(VarId a) {
  const Tensor& av = val(a);
  double s = 0.0;
  for (double v : av.data) s += v * v;
  return push(Tensor::scalar(s), wants(a), [a](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    const double go = nd.grad.data[0];
    const Tensor& av2 = g.val(a);
    Tensor& da = g.grad_of(a);
    for (int64_t i = 0; i < av2.numel(); ++i) da.data[i] += 2.0 * av2.data[i] * go;
  });
}

VarId Graph::mean_all(VarId a) {
  const Tensor& av = val(a);
  double s = 0.0;
  for (double v : av.data) s += v;
  const double inv = 1.0 / static_cast<double>(av.numel());
  return push(Tensor::scalar(s * inv), wants(a), [a, inv](Graph& g, Node& nd) {
    if (!g.wants(a)) return;
    const double go = nd.grad.data[0] * inv;
    Tensor& da = g.grad_of(a);
    for (int64_t i = 0; i < da.numel(); ++i) da.data[i] += go;
  });
}

VarId Graph::cross_entropy_logits(VarId logits, int label) {
  const Tensor& lv = val(logits);
  if (lv.rank() != 2 || lv.rows() != 1) throw ShapeMismatch("cross_entropy_logits: logits must be 1xK");
  const int k = lv.cols();
  if (label < 0 || label >= k) throw InvalidLabel("label " + std::to_string(label) + " outside [0, " +
                                                  std::to_string(k) + ")");
  if (!lv.all_finite()) throw NonFinite("cross_entropy_logits: non-finite logits");
  double mx = lv.data[0];
  for (int j = 1; j < k; ++j) mx = std::max(mx, lv.data[static_cast<size_t>(j)]);
  double lse = 0.0;
  for (int j = 0; j < k; ++j) lse += std::exp(lv.data[static_cast<size_t>(j)] - mx);
  lse = mx + std::log(lse);
  const double loss = lse - lv.data[static_cast<size_t>(label)];
  return push(Tensor::scalar(loss), wants(logits), [logits, label, lse](Graph& g, Node& nd) {
    if (!g.wants(logits)) return;
    const double go = nd.grad.data[0];
    const Tensor& lv2 = g.val(logits);
    Tensor& dl = g.grad_of(logits);
    for (int j = 0; j < lv2.cols(); ++j) {
      double p = std::exp(lv2.data[static_cast<size_t>(j)] - lse);
      dl.data[static_cast<size_t>(j)] += go * (p - (j == label ? 1.0 : 0.0));
    }
  });
}

void Graph::backward(VarId loss, double seed) {
  Node& ln = node(loss);
  if (ln.val.numel() != 1) throw ShapeMismatch("backward: loss must be a scalar");
  grad_of(loss).data[0] = seed;
  for (VarId id = loss; id >= 0; --id) {
    Node& nd = node(id);
    if (!nd.needs_grad || !nd.grad_live) continue;
    if (nd.back) nd.back(*this, nd);
    if (nd.sink) {
      require_same_shape(*nd.sink, nd.grad, "gradient sink");
      for (int64_t i = 0; i < nd.grad.numel(); ++i) nd.sink->data[i] += nd.grad.data[i];
    }
  }
}

}  // namespace scpt
