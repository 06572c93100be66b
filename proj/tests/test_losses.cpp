#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scpt/forward.hpp"
#include "scpt/gradcheck.hpp"
#include "scpt/losses.hpp"

using namespace scpt;

namespace {

Tensor mat(std::vector<int> shape, std::vector<double> vals) {
  return Tensor(std::move(shape), std::move(vals));
}

Tensor random_mat(int r, int c, Rng& rng, double scale = 1.0) {
  Tensor t({r, c});
  for (double& v : t.data) v = rng.normal() * scale;
  return t;
}

}  // namespace

TEST_CASE("task loss closed forms") {
  CHECK(task_loss(mat({1, 2}, {0.0, 0.0}), 0) == doctest::Approx(std::log(2.0)));
  CHECK(task_loss(mat({1, 2}, {1e3, -1e3}), 0) == doctest::Approx(0.0));
  CHECK(task_loss(mat({1, 5}, {0.3, 0.3, 0.3, 0.3, 0.3}), 4) == doctest::Approx(std::log(5.0)));
  CHECK_THROWS_AS(task_loss(mat({1, 2}, {0.0, 0.0}), 2), InvalidLabel);
  CHECK_THROWS_AS(task_loss(mat({1, 2}, {std::nan(""), 0.0}), 0), NonFinite);
}

TEST_CASE("specific sparsity loss hand cases") {
  const Tensor layer = mat({2, 2}, {1.0, -2.0, 0.0, 3.0});
  CHECK(specific_sparsity_loss({layer}, LossNorm::kSum) == doctest::Approx(6.0));
  CHECK(specific_sparsity_loss({layer}, LossNorm::kMean) == doctest::Approx(1.5));

  // two layers with entrywise sums 4 and 8 average to 6
  const Tensor l1 = mat({2, 2}, {1.0, 1.0, 1.0, 1.0});
  const Tensor l2 = mat({2, 2}, {2.0, 2.0, 2.0, 2.0});
  CHECK(specific_sparsity_loss({l1, l2}, LossNorm::kSum) == doctest::Approx(6.0));

  const Tensor zero({4, 4});
  CHECK(specific_sparsity_loss({zero, zero}, LossNorm::kSum) == 0.0);
}

TEST_CASE("orthogonality loss hand cases") {
  Tensor eye({2, 2});
  eye.at(0, 0) = 1.0;
  eye.at(1, 1) = 1.0;
  const Tensor spec = mat({2, 2}, {0.0, 1.0, 0.0, 0.0});
  // I * spec^T = [[0,0],[1,0]] with squared Frobenius norm 1
  CHECK(orthogonality_loss({eye}, {spec}, LossNorm::kSum) == doctest::Approx(1.0));
  CHECK(orthogonality_loss({eye}, {spec}, LossNorm::kMean) == doctest::Approx(0.25));

  const Tensor zero({2, 2});
  CHECK(orthogonality_loss({eye}, {zero}, LossNorm::kSum) == 0.0);

  // shared rows orthogonal to every specific row
  const Tensor sh = mat({2, 4}, {1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0});
  const Tensor sp = mat({2, 4}, {0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0});
  CHECK(orthogonality_loss({sh}, {sp}, LossNorm::kSum) == 0.0);
}

TEST_CASE("orthogonality loss vanishes exactly when rows are orthogonal") {
  // both directions of the iff: nonzero overlap forces a positive loss
  Rng rng(3);
  Tensor sh = random_mat(3, 5, rng);
  Tensor sp = random_mat(3, 5, rng);
  double overlap = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 5; ++k) dot += sh.at(i, k) * sp.at(j, k);
      overlap += dot * dot;
    }
  const double loss = orthogonality_loss({sh}, {sp}, LossNorm::kSum);
  CHECK(loss == doctest::Approx(overlap).epsilon(1e-12));
  CHECK((loss == 0.0) == (overlap == 0.0));
}

TEST_CASE("subject loss hand cases") {
  Tensor w({2, 2});  // identity head
  w.at(0, 0) = 1.0;
  w.at(1, 1) = 1.0;
  Tensor b({1, 2});
  CHECK(subject_loss(mat({1, 2}, {0.0, 0.0}), w, b, 0) == doctest::Approx(std::log(2.0)));
  CHECK(subject_loss(mat({1, 2}, {50.0, -50.0}), w, b, 0) == doctest::Approx(0.0).epsilon(1e-12));

  // hand-set 2-way head on a unit feature
  Tensor hw = mat({2, 2}, {0.3, -0.2, 0.5, 0.4});
  Tensor hb = mat({1, 2}, {0.1, -0.1});
  const double z0 = 1.0 * 0.3 + 0.0 * 0.5 + 0.1;
  const double z1 = 1.0 * (-0.2) + 0.0 * 0.4 - 0.1;
  const double expect = std::log(std::exp(z0) + std::exp(z1)) - z1;
  CHECK(subject_loss(mat({1, 2}, {1.0, 0.0}), hw, hb, 1) == doctest::Approx(expect));
  CHECK_THROWS_AS(subject_loss(mat({1, 2}, {1.0, 0.0}), hw, hb, 2), InvalidLabel);
}

TEST_CASE("total loss weighting and report invariant") {
  LossWeights w;
  w.lambda1 = 0.1;
  w.lambda2 = 0.1;
  w.lambda3 = 0.6;
  LossReport r = total_loss(1.0, 2.0, 3.0, 4.0, w);
  CHECK(r.total == doctest::Approx(3.9));  // 1 + 0.2 + 0.3 + 2.4
  CHECK(std::fabs(r.total - (r.task + w.lambda1 * r.specific + w.lambda2 * r.orth +
                             w.lambda3 * r.sub)) < 1e-9);

  LossWeights zero;
  zero.lambda1 = zero.lambda2 = zero.lambda3 = 0.0;
  CHECK(total_loss(0.7, 9.0, 9.0, 9.0, zero).total == doctest::Approx(0.7));

  CHECK_THROWS_AS(total_loss(-0.5, 0.0, 0.0, 0.0, w), NonFiniteLoss);
  CHECK_THROWS_AS(total_loss(std::nan(""), 0.0, 0.0, 0.0, w), NonFiniteLoss);
}

TEST_CASE("all components stay non-negative under random fuzzing") {
  Rng rng(17);
  for (int rep = 0; rep < 2000; ++rep) {
    const int n = 1 + static_cast<int>(rng.uniform_int(4));
    const int d = 1 + static_cast<int>(rng.uniform_int(6));
    Tensor logits = random_mat(1, 2 + static_cast<int>(rng.uniform_int(4)), rng, 10.0);
    const int label = static_cast<int>(rng.uniform_int(logits.cols()));
    CHECK(task_loss(logits, label) >= 0.0);

    std::vector<Tensor> sh, sp;
    for (int l = 0; l < 2; ++l) {
      sh.push_back(random_mat(n, d, rng, 3.0));
      sp.push_back(random_mat(n, d, rng, 3.0));
    }
    const LossNorm norm = (rep % 2) ? LossNorm::kMean : LossNorm::kSum;
    CHECK(specific_sparsity_loss(sp, norm) >= 0.0);
    CHECK(orthogonality_loss(sh, sp, norm) >= 0.0);
  }
}

TEST_CASE("penalties scale monotonically: L1 by k, orthogonality by k^2") {
  Rng rng(23);
  std::vector<Tensor> sh = {random_mat(3, 6, rng)};
  std::vector<Tensor> sp = {random_mat(3, 6, rng)};
  const double base_l1 = specific_sparsity_loss(sp, LossNorm::kMean);
  const double base_orth = orthogonality_loss(sh, sp, LossNorm::kMean);
  const double k = 2.0;  // power of two keeps the scaling exact
  std::vector<Tensor> scaled = sp;
  for (double& v : scaled[0].data) v *= k;
  CHECK(specific_sparsity_loss(scaled, LossNorm::kMean) == k * base_l1);
  CHECK(orthogonality_loss(sh, scaled, LossNorm::kMean) == doctest::Approx(k * k * base_orth).epsilon(1e-12));
}

TEST_CASE("graph loss builders match the plain implementations") {
  Rng rng(29);
  std::vector<Tensor> sh, sp;
  for (int l = 0; l < 3; ++l) {
    sh.push_back(random_mat(4, 8, rng));
    sp.push_back(random_mat(4, 8, rng));
  }
  for (LossNorm norm : {LossNorm::kMean, LossNorm::kSum}) {
    Graph g;
    std::vector<VarId> shv, spv;
    for (int l = 0; l < 3; ++l) {
      shv.push_back(g.constant(sh[static_cast<size_t>(l)]));
      spv.push_back(g.constant(sp[static_cast<size_t>(l)]));
    }
    CHECK(g.val(graph_specific_sparsity(g, spv, norm)).data[0] ==
          doctest::Approx(specific_sparsity_loss(sp, norm)).epsilon(1e-12));
    CHECK(g.val(graph_orthogonality(g, shv, spv, norm)).data[0] ==
          doctest::Approx(orthogonality_loss(sh, sp, norm)).epsilon(1e-12));
  }
}

TEST_CASE("full-model loss report satisfies the total invariant") {
  ModelState m = ModelState::init(tiny_model_config(), 31, 3);
  m.randomize_all(32);
  Rng rng(33);
  Tensor frames({2, 3, 32, 32});
  for (double& v : frames.data) v = rng.uniform();
  Tensor tfr({32, 32});
  for (double& v : tfr.data) v = rng.uniform();

  Graph g;
  ModelBinding mb(g, m);
  ForwardOptions opt;
  ForwardResult fwd = scpt_forward(mb, frames, tfr, opt);
  LossWeights w;
  LossVars lv = build_loss(mb, fwd, 0, 2, w, LossNorm::kMean);
  LossReport rep = read_loss_report(g, lv, fwd, w, LossNorm::kMean);
  CHECK(rep.task >= 0.0);
  CHECK(rep.specific >= 0.0);
  CHECK(rep.orth >= 0.0);
  CHECK(rep.sub >= 0.0);
  CHECK(std::fabs(rep.total - (rep.task + w.lambda1 * rep.specific + w.lambda2 * rep.orth +
                               w.lambda3 * rep.sub)) < 1e-9);
  CHECK(g.val(lv.total).data[0] == doctest::Approx(rep.total).epsilon(1e-12));
  // per-layer breakdowns cover every layer
  CHECK(rep.specific_per_layer.size() == 2);
  CHECK(rep.orth_per_layer.size() == 2);
}

TEST_CASE("tiny-model gradient check passes at 1e-4") {
  GradCheckResult res = run_gradcheck(2718);
  CHECK(res.pass);
  CHECK(res.max_rel_err < 1e-4);
}
