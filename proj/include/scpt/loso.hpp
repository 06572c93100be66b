#pragma once

#include <vector>

#include "scpt/dataset.hpp"

namespace scpt {

// Indices reference the clip vector handed to build_loso.
struct LOSOFold {
  int test_subject = -1;
  std::vector<int> train_ids;
  std::vector<int> val_ids;
  std::vector<int> test_ids;
};

struct LOSOPlan {
  std::vector<LOSOFold> folds;  // one per subject, sorted by subject id
  uint64_t seed = 0;
};

// Each subject becomes the test fold exactly once; the remaining clips
// split 80/20 into train/validation at trial granularity (all clips of a
// trial land on the same side) so near-duplicate clips never straddle the
// split. The validation trial prefix is chosen to land the clip ratio as
// close to 80/20 as trial granularity allows.
LOSOPlan build_loso(const std::vector<Sample>& clips, uint64_t seed);
LOSOPlan build_loso_clipdata(const std::vector<ClipData>& clips, uint64_t seed);

}  // namespace scpt
