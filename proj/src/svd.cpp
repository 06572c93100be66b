#include "scpt/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scpt {

namespace {

constexpr double kZeroTol = 1e-12;

// One-sided Jacobi on a tall matrix A (m x n, m >= n): rotates column
// pairs until mutually orthogonal, accumulating the rotations into V
// (n x n). On return A = U' with U'^T U' diagonal; column norms are the
// singular values.
void jacobi_orthogonalize(Tensor& a, Tensor& v) {
  const int m = a.rows(), n = a.cols();
  v = Tensor({n, n});
  for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

  const double tol = 1e-15;
  for (int sweep = 0; sweep < 64; ++sweep) {
    bool rotated = false;
    for (int i = 0; i < n - 1; ++i)
      for (int j = i + 1; j < n; ++j) {
        double p = 0.0, qi = 0.0, qj = 0.0;
        for (int r = 0; r < m; ++r) {
          const double ai = a.at(r, i), aj = a.at(r, j);
          p += ai * aj;
          qi += ai * ai;
          qj += aj * aj;
        }
        if (std::fabs(p) <= tol * std::sqrt(qi * qj) || p == 0.0) continue;
        rotated = true;
        const double beta = (qj - qi) / (2.0 * p);
        const double t = (beta >= 0.0 ? 1.0 : -1.0) / (std::fabs(beta) + std::sqrt(1.0 + beta * beta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int r = 0; r < m; ++r) {
          const double ai = a.at(r, i), aj = a.at(r, j);
          a.at(r, i) = c * ai - s * aj;
          a.at(r, j) = s * ai + c * aj;
        }
        for (int r = 0; r < n; ++r) {
          const double vi = v.at(r, i), vj = v.at(r, j);
          v.at(r, i) = c * vi - s * vj;
          v.at(r, j) = s * vi + c * vj;
        }
      }
    if (!rotated) break;
  }
}

// Full thin SVD, sigma descending. u: m x k, v: n x k, k = min(m, n).
void thin_svd(const Tensor& m_in, Tensor& u, std::vector<double>& sigma, Tensor& v) {
  const int m = m_in.rows(), n = m_in.cols();
  const int k = std::min(m, n);

  // orthogonalize the tall orientation, transpose back if needed
  Tensor work;
  bool transposed = false;
  if (m >= n) {
    work = m_in;
  } else {
    transposed = true;
    work = Tensor({n, m});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) work.at(j, i) = m_in.at(i, j);
  }
  const int tm = work.rows(), tn = work.cols();  // tn == k

  Tensor rot;  // tn x tn
  jacobi_orthogonalize(work, rot);

  // column norms and order
  std::vector<double> norms(static_cast<size_t>(tn), 0.0);
  for (int j = 0; j < tn; ++j) {
    double acc = 0.0;
    for (int r = 0; r < tm; ++r) acc += work.at(r, j) * work.at(r, j);
    norms[static_cast<size_t>(j)] = std::sqrt(acc);
  }
  std::vector<int> order(static_cast<size_t>(tn));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return norms[static_cast<size_t>(a)] > norms[static_cast<size_t>(b)]; });

  // tall factor Q (tm x k, normalized cols) and square factor R (tn x k)
  Tensor q({tm, k}), r({tn, k});
  sigma.assign(static_cast<size_t>(k), 0.0);
  for (int jj = 0; jj < k; ++jj) {
    const int src = order[static_cast<size_t>(jj)];
    const double nm = norms[static_cast<size_t>(src)];
    sigma[static_cast<size_t>(jj)] = nm;
    if (nm > kZeroTol) {
      for (int rr = 0; rr < tm; ++rr) q.at(rr, jj) = work.at(rr, src) / nm;
    }
    for (int rr = 0; rr < tn; ++rr) r.at(rr, jj) = rot.at(rr, src);
  }

  if (!transposed) {
    u = std::move(q);  // m x k
    v = std::move(r);  // n x k
  } else {
    // m_in^T = Q sigma R^T  =>  m_in = R sigma Q^T
    u = std::move(r);  // m x k
    v = std::move(q);  // n x k
  }
}

// Replace columns [from, s) with vectors orthonormal to columns [0, from).
// Gram-Schmidt over canonical candidates keeps the result deterministic.
void complete_orthonormal(Tensor& mat, int from, int s) {
  const int n = mat.rows();
  int col = from;
  for (int cand = 0; cand < n && col < s; ++cand) {
    std::vector<double> vec(static_cast<size_t>(n), 0.0);
    vec[static_cast<size_t>(cand)] = 1.0;
    for (int j = 0; j < col; ++j) {
      double dot = 0.0;
      for (int r = 0; r < n; ++r) dot += vec[static_cast<size_t>(r)] * mat.at(r, j);
      for (int r = 0; r < n; ++r) vec[static_cast<size_t>(r)] -= dot * mat.at(r, j);
    }
    double nm = 0.0;
    for (double x : vec) nm += x * x;
    nm = std::sqrt(nm);
    if (nm < 1e-8) continue;  // candidate already spanned
    for (int r = 0; r < n; ++r) mat.at(r, col) = vec[static_cast<size_t>(r)] / nm;
    ++col;
  }
}

}  // namespace

Tensor SubspaceFactors::reconstruct() const {
  const int n = u.rows(), d = v.rows(), s = rank();
  Tensor out({n, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < s; ++k) acc += u.at(i, k) * sigma[static_cast<size_t>(k)] * v.at(j, k);
      out.at(i, j) = acc;
    }
  return out;
}

SubspaceFactors truncated_svd(const Tensor& m, int s) {
  if (m.rank() != 2) throw ShapeMismatch("truncated_svd: need a 2-D matrix");
  const int n = m.rows(), d = m.cols();
  const int k = std::min(n, d);
  if (s < 1 || s > k)
    throw RankOutOfRange("truncated_svd: S=" + std::to_string(s) + " outside [1, " + std::to_string(k) + "]");
  if (!m.all_finite()) throw NonFiniteInput("truncated_svd: non-finite input");

  SubspaceFactors f;
  f.u = Tensor({n, s});
  f.v = Tensor({d, s});
  f.sigma.assign(static_cast<size_t>(s), 0.0);

  Tensor fu, fv;
  std::vector<double> sig;
  thin_svd(m, fu, sig, fv);

  if (sig.empty() || sig[0] < kZeroTol) {
    // degenerate: zero sigma with canonical basis columns e_1..e_S
    for (int j = 0; j < s; ++j) {
      f.u.at(j, j) = 1.0;
      f.v.at(j, j) = 1.0;
    }
    return f;
  }

  int numeric_rank = 0;
  for (int j = 0; j < s; ++j) {
    f.sigma[static_cast<size_t>(j)] = (sig[static_cast<size_t>(j)] >= kZeroTol) ? sig[static_cast<size_t>(j)] : 0.0;
    if (f.sigma[static_cast<size_t>(j)] > 0.0) numeric_rank = j + 1;
  }
  for (int j = 0; j < numeric_rank; ++j) {
    for (int r = 0; r < n; ++r) f.u.at(r, j) = fu.at(r, j);
    for (int r = 0; r < d; ++r) f.v.at(r, j) = fv.at(r, j);
  }
  // orthonormal filler for directions past the numeric rank
  if (numeric_rank < s) {
    complete_orthonormal(f.u, numeric_rank, s);
    complete_orthonormal(f.v, numeric_rank, s);
  }

  // sign convention on V columns (U flipped to keep the product fixed)
  for (int j = 0; j < s; ++j) {
    int arg = 0;
    double best = std::fabs(f.v.at(0, j));
    for (int r = 1; r < d; ++r) {
      const double a = std::fabs(f.v.at(r, j));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (f.v.at(arg, j) < 0.0) {
      for (int r = 0; r < d; ++r) f.v.at(r, j) = -f.v.at(r, j);
      for (int r = 0; r < n; ++r) f.u.at(r, j) = -f.u.at(r, j);
    }
  }
  return f;
}

std::vector<double> singular_values(const Tensor& m) {
  Tensor fu, fv;
  std::vector<double> sig;
  thin_svd(m, fu, sig, fv);
  return sig;
}

Tensor emotion_project(const Tensor& cls_feature, const SubspaceFactors& f) {
  if (cls_feature.rank() != 2 || cls_feature.rows() != 1 || cls_feature.cols() != f.v.rows())
    throw ShapeMismatch("emotion_project: feature " + cls_feature.shape_str() + " vs V " + f.v.shape_str());
  const int d = f.v.rows(), s = f.rank();
  Tensor out({1, s});
  for (int j = 0; j < s; ++j) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += cls_feature.at(0, i) * f.v.at(i, j);
    out.at(0, j) = acc;
  }
  return out;
}

}  // namespace scpt
