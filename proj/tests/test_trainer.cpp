#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scpt/gradcheck.hpp"
#include "scpt/trainer.hpp"

using namespace scpt;

namespace {

// small synthetic training world shared by the trainer tests
struct World {
  std::vector<ClipData> clips;
  LOSOPlan plan;

  explicit World(int subjects = 3, int trials = 2, double confound = 0.0, uint64_t seed = 7) {
    SynthSpec spec;
    spec.num_subjects = subjects;
    spec.trials_per_subject = trials;
    spec.confound_strength = confound;
    spec.seed = seed;
    std::vector<Sample> segs;
    for (const Sample& t : synth_dataset(spec))
      for (Sample& c : segment_trial(t, 5.0)) segs.push_back(std::move(c));
    clips = preprocess_clips(segs, tiny_model_config(), TfrSettings());
    plan = build_loso_clipdata(clips, seed);
  }
};

TrainSettings quick_settings(int epochs, int batch = 8) {
  TrainSettings ts;
  ts.lr = 1e-3;
  ts.weight_decay = 0.01;
  ts.epochs = epochs;
  ts.batch_size = batch;
  ts.seed = 3;
  ts.target_arousal = true;
  return ts;
}

}  // namespace

TEST_CASE("binary metrics closed forms") {
  Metrics perfect = binary_metrics({0, 1, 1, 0}, {0, 1, 1, 0});
  CHECK(perfect.acc == 1.0);
  CHECK(perfect.f1 == 1.0);

  // all-negative predictions against {0,1,1,1}: acc 0.25, F1 defined as 0
  Metrics allneg = binary_metrics({0, 0, 0, 0}, {0, 1, 1, 1});
  CHECK(allneg.acc == doctest::Approx(0.25));
  CHECK(allneg.f1 == 0.0);

  // mixed case with hand-computed precision/recall
  Metrics m = binary_metrics({1, 1, 0, 1, 0}, {1, 0, 0, 1, 1});
  // tp=2 fp=1 fn=1: precision 2/3, recall 2/3, F1 2/3
  CHECK(m.acc == doctest::Approx(0.6));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(binary_metrics({}, {}), EmptyEvalSet);
}

TEST_CASE("per-subject summary aggregates mean and sample std") {
  std::vector<int> preds = {1, 1, 0, 0, 1, 0};
  std::vector<int> labels = {1, 1, 1, 0, 0, 0};
  std::vector<int> subjects = {0, 0, 0, 1, 1, 1};
  EvalSummary s = summarize_per_subject(preds, labels, subjects);
  REQUIRE(s.per_subject.size() == 2);
  const double a0 = s.per_subject[0].second.acc;  // subject 0: 2/3
  const double a1 = s.per_subject[1].second.acc;  // subject 1: 2/3... recompute
  CHECK(s.acc_mean == doctest::Approx(0.5 * (a0 + a1)));
  const double mean = s.acc_mean;
  const double expect_std =
      std::sqrt(((a0 - mean) * (a0 - mean) + (a1 - mean) * (a1 - mean)) / 1.0);
  CHECK(s.acc_std == doctest::Approx(expect_std));
}

TEST_CASE("cosine schedule anneals from the base rate toward zero") {
  CHECK(cosine_lr(1.0, 0, 10) == doctest::Approx(1.0));
  CHECK(cosine_lr(1.0, 5, 10) == doctest::Approx(0.5));
  CHECK(cosine_lr(1.0, 9, 10) < 0.05);
  for (int e = 1; e < 10; ++e) CHECK(cosine_lr(1.0, e, 10) < cosine_lr(1.0, e - 1, 10));
}

TEST_CASE("zero epochs returns the freshly initialized model") {
  World w;
  FoldOutcome out = train_fold(w.clips, w.plan.folds[0], 0, tiny_model_config(), quick_settings(0));
  ModelState fresh = ModelState::init(tiny_model_config(), 3, out.model.num_subjects);
  for (size_t i = 0; i < fresh.params.size(); ++i)
    CHECK(out.model.params.entries()[i].value.data == fresh.params.entries()[i].value.data);
}

TEST_CASE("freeze contract: frozen tensors bitwise fixed, trainable ones move") {
  World w;
  ModelConfig cfg = tiny_model_config();
  TrainSettings ts = quick_settings(2, 4);
  ModelState fresh = ModelState::init(cfg, ts.seed + 1, 2);  // fold 1 seeds with seed+fold
  FoldOutcome out = train_fold(w.clips, w.plan.folds[1], 1, cfg, ts);

  int trainable_checked = 0;
  for (size_t i = 0; i < fresh.params.size(); ++i) {
    const auto& before = fresh.params.entries()[i];
    const auto& after = out.model.params.entries()[i];
    REQUIRE(before.name == after.name);
    if (before.frozen) {
      CHECK(before.value.data == after.value.data);
    } else {
      bool moved = before.value.data != after.value.data;
      CHECK(moved);
      trainable_checked += moved ? 1 : 0;
    }
  }
  CHECK(trainable_checked > 20);
}

TEST_CASE("training is deterministic for a fixed seed") {
  World w;
  TrainSettings ts = quick_settings(2, 4);
  FoldOutcome a = train_fold(w.clips, w.plan.folds[0], 0, tiny_model_config(), ts);
  FoldOutcome b = train_fold(w.clips, w.plan.folds[0], 0, tiny_model_config(), ts);
  for (size_t i = 0; i < a.model.params.size(); ++i)
    CHECK(a.model.params.entries()[i].value.data == b.model.params.entries()[i].value.data);
  REQUIRE(a.log.size() == b.log.size());
  for (size_t e = 0; e < a.log.size(); ++e) {
    CHECK(a.log[e].total == b.log[e].total);
    CHECK(a.log[e].val_acc == b.log[e].val_acc);
  }
  CHECK(a.test_invariant.acc_mean == b.test_invariant.acc_mean);
}

TEST_CASE("adamw decoupled decay shrinks a zero-gradient weight") {
  ModelState m = ModelState::init(tiny_model_config(), 5, 2);
  const Tensor before = m.params.entry("train.face_embed.w").value;
  AdamW opt(m, 0.5);
  m.zero_grads();
  opt.step(0.1);
  const Tensor& after = m.params.entry("train.face_embed.w").value;
  for (int64_t i = 0; i < before.numel(); ++i)
    CHECK(after.data[i] == doctest::Approx(before.data[i] * (1.0 - 0.05)).epsilon(1e-12));
  // frozen weights never move
  CHECK(m.params.entry("frozen.x_class").value.data ==
        ModelState::init(tiny_model_config(), 5, 2).params.entry("frozen.x_class").value.data);
}

TEST_CASE("training loss decreases on clean synthetic data (smoke run)") {
  // confound-free data, one fold, short run: the epoch-mean total loss
  // after five epochs must sit clearly below the starting loss
  World w(3, 3, 0.0, 11);
  TrainSettings ts = quick_settings(5, 8);
  FoldOutcome out = train_fold(w.clips, w.plan.folds[0], 0, tiny_model_config(), ts);
  REQUIRE(out.log.size() == 5);
  CHECK(out.log.back().total < out.log.front().total);
  // drop should be decisive, not noise (observed ~0.69 -> ~0.45)
  CHECK(out.log.back().total < out.log.front().total * 0.9);
}

TEST_CASE("evaluate catches empty index lists") {
  World w;
  ModelState m = ModelState::init(tiny_model_config(), 1, 2);
  CHECK_THROWS_AS(evaluate(m, w.clips, {}, false, true), EmptyEvalSet);
}

TEST_CASE("run_jobs executes every job and propagates failures") {
  std::vector<int> done(16, 0);
  std::vector<std::function<void()>> jobs;
  for (int i = 0; i < 16; ++i) jobs.push_back([&done, i]() { done[static_cast<size_t>(i)] = 1; });
  run_jobs(std::move(jobs), 4);
  for (int d : done) CHECK(d == 1);

  std::vector<std::function<void()>> failing;
  failing.push_back([]() { throw Error("boom"); });
  CHECK_THROWS_AS(run_jobs(std::move(failing), 2), Error);
}
