#include "scpt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "scpt/svd.hpp"

namespace scpt {

PointBiserial point_biserial(const std::vector<int>& labels, const std::vector<double>& scores) {
  const size_t n = labels.size();
  if (n != scores.size() || n < 3) throw DegenerateInput("point_biserial: need matched lengths >= 3");
  size_t n1 = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw InvalidLabel("point_biserial: labels must be 0/1");
    n1 += static_cast<size_t>(l);
  }
  if (n1 == 0 || n1 == n) throw DegenerateInput("point_biserial: both classes must be present");

  double mean_s = 0.0, mean_l = static_cast<double>(n1) / static_cast<double>(n);
  for (double v : scores) mean_s += v;
  mean_s /= static_cast<double>(n);
  double cov = 0.0, var_s = 0.0, var_l = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double ds = scores[i] - mean_s;
    const double dl = static_cast<double>(labels[i]) - mean_l;
    cov += ds * dl;
    var_s += ds * ds;
    var_l += dl * dl;
  }
  if (var_s <= 0.0) throw DegenerateInput("point_biserial: scores have zero variance");

  PointBiserial out;
  out.r = cov / std::sqrt(var_s * var_l);
  out.r = std::clamp(out.r, -1.0, 1.0);
  const int df = static_cast<int>(n) - 2;
  const double r2 = out.r * out.r;
  if (r2 >= 1.0) {
    out.p = 1e-300;  // perfectly separated scores: p underflows
  } else {
    const double t = out.r * std::sqrt(static_cast<double>(df) / (1.0 - r2));
    out.p = student_t_two_sided_p(t, df);
  }
  return out;
}

std::vector<double> cumulative_explained_variance(const std::vector<double>& sigma) {
  if (sigma.empty()) throw AllZero("cumulative_explained_variance: empty");
  double total = 0.0;
  for (size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] < 0.0 || (i > 0 && sigma[i] > sigma[i - 1] + 1e-12))
      throw Error("cumulative_explained_variance: input must be descending and non-negative");
    total += sigma[i] * sigma[i];
  }
  if (total <= 0.0) throw AllZero("cumulative_explained_variance: all singular values are zero");
  std::vector<double> cev(sigma.size());
  double run = 0.0;
  for (size_t i = 0; i < sigma.size(); ++i) {
    run += sigma[i] * sigma[i];
    cev[i] = run / total;
  }
  cev.back() = 1.0;
  return cev;
}

namespace {

// continued fraction for the incomplete beta (Numerical-Recipes style
// modified Lentz iteration)
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta_reg(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete_beta_reg: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int df) {
  if (df < 1) throw Error("student_t_two_sided_p: df must be >= 1");
  const double x = static_cast<double>(df) / (static_cast<double>(df) + t * t);
  double p = incomplete_beta_reg(0.5 * df, 0.5, x);
  p = std::clamp(p, 1e-300, 1.0);
  return p;
}

DirectionReport rank_directions(const Tensor& features, const std::vector<int>& labels, int s) {
  if (features.rank() != 2 || static_cast<size_t>(features.rows()) != labels.size())
    throw ShapeMismatch("rank_directions: features rows must match labels");
  const int n = features.rows(), d = features.cols();
  int n1 = 0;
  for (int l : labels) n1 += l;
  if (n1 < 3 || n - n1 < 3) throw DegenerateInput("rank_directions: need >= 3 samples per class");
  const int k = std::min(n, d);
  if (s < 0 || s > k) throw RankOutOfRange("rank_directions: S outside [0, min(n, D)]");

  SubspaceFactors fac = truncated_svd(features, k);

  DirectionReport rep;
  rep.directions.resize(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) {
    DirectionEntry& e = rep.directions[static_cast<size_t>(j)];
    e.direction = j;
    e.sigma = fac.sigma[static_cast<size_t>(j)];
    e.top_s = j < s;
    std::vector<double> scores(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int c = 0; c < d; ++c) acc += features.at(i, c) * fac.v.at(c, j);
      scores[static_cast<size_t>(i)] = acc;
    }
    double lo = scores[0], hi = scores[0];
    for (double v : scores) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo < 1e-300) {
      e.r = 0.0;
      e.abs_r = 0.0;
      e.p = 1.0;
    } else {
      PointBiserial pb = point_biserial(labels, scores);
      e.r = pb.r;
      e.abs_r = std::fabs(pb.r);
      e.p = pb.p;
    }
  }

  std::vector<int> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return rep.directions[static_cast<size_t>(a)].abs_r > rep.directions[static_cast<size_t>(b)].abs_r;
  });
  for (int pos = 0; pos < k; ++pos)
    rep.directions[static_cast<size_t>(order[static_cast<size_t>(pos)])].rank = pos;

  rep.cev = cumulative_explained_variance(fac.sigma);
  return rep;
}

void write_direction_report_csv(const DirectionReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "direction,sigma,r_pb,abs_r_pb,p_value,rank,top_s\n";
  out.precision(10);
  for (const DirectionEntry& e : r.directions)
    out << e.direction << "," << e.sigma << "," << e.r << "," << e.abs_r << "," << e.p << ","
        << e.rank << "," << (e.top_s ? 1 : 0) << "\n";
}

void write_cev_csv(const DirectionReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "k,sigma,cev\n";
  out.precision(10);
  for (size_t i = 0; i < r.cev.size(); ++i)
    out << (i + 1) << "," << r.directions[i].sigma << "," << r.cev[i] << "\n";
}

void write_gnuplot_dat(const DirectionReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  {
    std::ofstream out(fs::path(dir) / "relevance.dat");
    out << "# rank abs_r_pb p_value top_s\n";
    std::vector<const DirectionEntry*> by_rank(r.directions.size());
    for (const DirectionEntry& e : r.directions) by_rank[static_cast<size_t>(e.rank)] = &e;
    for (size_t i = 0; i < by_rank.size(); ++i)
      out << i << " " << by_rank[i]->abs_r << " " << by_rank[i]->p << " "
          << (by_rank[i]->top_s ? 1 : 0) << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "cev.dat");
    out << "# k cev\n";
    for (size_t i = 0; i < r.cev.size(); ++i) out << (i + 1) << " " << r.cev[i] << "\n";
  }
}

}  // namespace scpt
