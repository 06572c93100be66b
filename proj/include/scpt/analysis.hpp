#pragma once

#include <string>
#include <vector>

#include "scpt/tensor.hpp"

namespace scpt {

// Point-biserial correlation between a binary label vector and real
// scores (Pearson on 0/1 coding) plus the two-sided t-test p-value with
// n-2 degrees of freedom.
struct PointBiserial {
  double r = 0.0;
  double p = 1.0;
};
PointBiserial point_biserial(const std::vector<int>& labels, const std::vector<double>& scores);

// CEV_k = (sum_{i<=k} sigma_i^2) / (sum_i sigma_i^2); input descending,
// not all zero.
std::vector<double> cumulative_explained_variance(const std::vector<double>& sigma);

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
double incomplete_beta_reg(double a, double b, double x);
// Two-sided tail probability of Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, int df);

struct DirectionEntry {
  int direction = 0;   // position in the singular-value ordering
  double sigma = 0.0;
  double r = 0.0;      // signed point-biserial
  double abs_r = 0.0;
  double p = 1.0;
  int rank = 0;        // position in the |r| ordering (0 = most relevant)
  bool top_s = false;  // direction < S, i.e. inside the retained subspace
};

struct DirectionReport {
  std::vector<DirectionEntry> directions;  // in singular-value order
  std::vector<double> cev;
};

// Pooled-SVD diagnostics: SVD of the per-sample feature matrix (n x D),
// per-direction projection scores correlated against the labels, ranked
// by |r|, with the top-S (by singular value) subspace flagged.
DirectionReport rank_directions(const Tensor& features, const std::vector<int>& labels, int s);

void write_direction_report_csv(const DirectionReport& r, const std::string& path);
void write_cev_csv(const DirectionReport& r, const std::string& path);
// space-separated dumps for gnuplot
void write_gnuplot_dat(const DirectionReport& r, const std::string& dir);

}  // namespace scpt
