#include "scpt/loso.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace scpt {

namespace {

struct ClipRef {
  int subject, trial, index;
};

LOSOPlan build_plan(const std::vector<ClipRef>& clips, uint64_t seed) {
  std::set<int> subject_set;
  for (const ClipRef& c : clips) subject_set.insert(c.subject);
  if (subject_set.size() < 3)
    throw TooFewSubjects("build_loso: need at least 3 subjects, got " +
                         std::to_string(subject_set.size()));

  LOSOPlan plan;
  plan.seed = seed;
  for (int test_subject : subject_set) {
    LOSOFold fold;
    fold.test_subject = test_subject;

    // group the remaining clips by (subject, trial)
    std::map<std::pair<int, int>, std::vector<int>> trials;
    for (const ClipRef& c : clips) {
      if (c.subject == test_subject)
        fold.test_ids.push_back(c.index);
      else
        trials[{c.subject, c.trial}].push_back(c.index);
    }

    std::vector<std::vector<int>> trial_groups;
    trial_groups.reserve(trials.size());
    for (auto& [key, ids] : trials) trial_groups.push_back(std::move(ids));

    Rng rng(mix_seed(seed, 0x105c0u, static_cast<uint64_t>(test_subject)));
    for (size_t i = trial_groups.size(); i > 1; --i)
      std::swap(trial_groups[i - 1], trial_groups[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)))]);

    // pick the validation prefix whose clip count is closest to 20%
    int64_t total = 0;
    for (const auto& g : trial_groups) total += static_cast<int64_t>(g.size());
    const double target = 0.2 * static_cast<double>(total);
    int64_t running = 0;
    size_t best_k = 0;
    double best_err = std::fabs(target);
    for (size_t k = 1; k <= trial_groups.size(); ++k) {
      running += static_cast<int64_t>(trial_groups[k - 1].size());
      const double err = std::fabs(static_cast<double>(running) - target);
      if (err < best_err) {
        best_err = err;
        best_k = k;
      }
    }
    for (size_t k = 0; k < trial_groups.size(); ++k) {
      auto& dst = (k < best_k) ? fold.val_ids : fold.train_ids;
      dst.insert(dst.end(), trial_groups[k].begin(), trial_groups[k].end());
    }
    std::sort(fold.train_ids.begin(), fold.train_ids.end());
    std::sort(fold.val_ids.begin(), fold.val_ids.end());
    std::sort(fold.test_ids.begin(), fold.test_ids.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace

LOSOPlan build_loso(const std::vector<Sample>& clips, uint64_t seed) {
  std::vector<ClipRef> refs;
  refs.reserve(clips.size());
  for (size_t i = 0; i < clips.size(); ++i)
    refs.push_back({clips[i].subject_id, clips[i].trial_id, static_cast<int>(i)});
  return build_plan(refs, seed);
}

LOSOPlan build_loso_clipdata(const std::vector<ClipData>& clips, uint64_t seed) {
  std::vector<ClipRef> refs;
  refs.reserve(clips.size());
  for (size_t i = 0; i < clips.size(); ++i)
    refs.push_back({clips[i].subject_id, clips[i].trial_id, static_cast<int>(i)});
  return build_plan(refs, seed);
}

}  // namespace scpt
